//! Batch runner: one JSON experiment in, CSV and JSON reports out.
//!
//! Exit status is 0 when the command's contract holds, 3 when a verify,
//! certify, reconstruct or witness contract is violated, and 2 for any
//! configuration or validation error. Outputs depend only on the config, so a
//! rerun with any thread count reproduces every file byte for byte.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lie_radon::certify::{
    canonical_torus_family, injectivity_certificate, kernel_witness, reconstruct_by_cosets, reconstruct_torus,
};
use lie_radon::geodesics::{random_geodesics, ClosedGeodesic};
use lie_radon::group::GroupDescriptor;
use lie_radon::irreps::dual_enumerate;
use lie_radon::radon::{
    conv_radon_defect, radon, radon_field, radon_geodesic, rep_integral, symmetry_defect, RadonSampleSet,
};
use lie_radon::spectral::{blocks_to_entries, format_float, max_entry, mollifier, SpectralFunction};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub use config::{Command, ExperimentConfig};
use config::{DEFAULT_COSETS, DEFAULT_GEODESICS};

/// Output directory when neither `--out` nor `outputs.dir` is given.
pub const DEFAULT_OUT_DIR: &str = "lie-radon-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] lie_radon::Error),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_INVALID
    }
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: Command,
    /// The command's contract held.
    pub passed: bool,
    /// One line for the terminal.
    pub headline: String,
    pub summary: Map<String, Value>,
    /// Written files, relative to the output directory, in write order.
    pub files: Vec<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_CONTRACT
        }
    }
}

/// Runs `config` on a pool of `threads` workers (rayon's default when `None`).
pub fn execute(config: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<Report, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(config, out_dir))
}

/// Runs `config` on the current rayon pool.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Report, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.into(), source })?;
    let mut out = Outputs { dir: out_dir.to_path_buf(), files: Vec::new() };
    let (passed, headline, mut summary) = match config.command {
        Command::Forward => forward(config, &mut out)?,
        Command::Reconstruct => reconstruct(config, &mut out)?,
        Command::Verify => verify(config, &mut out)?,
        Command::Certify => certify(config, &mut out)?,
        Command::Witness => witness(config, &mut out)?,
    };
    summary.insert("command".into(), json!(format!("{:?}", config.command).to_lowercase()));
    summary.insert("group".into(), json!(config.group));
    summary.insert("band".into(), json!(config.band));
    summary.insert("tolerance".into(), json!(config.tolerances.defect));
    summary.insert("passed".into(), json!(passed));
    let files_so_far = out.files.clone();
    summary.insert("files".into(), json!(files_so_far));
    out.write("summary.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;
    Ok(Report { command: config.command, passed, headline, summary, files: out.files })
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let io = |source| CliError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_core<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> lie_radon::Result<()>,
    {
        let mut inner = None;
        self.write(name, |w| {
            body(w).map_err(|e| {
                let msg = e.to_string();
                inner = Some(e);
                std::io::Error::other(msg)
            })
        })
        .map_err(|e| inner.map(CliError::Core).unwrap_or(e))
    }

    fn function(&mut self, stem: &str, f: &SpectralFunction) -> Result<(), CliError> {
        self.write_core(&format!("{stem}.csv"), |w| f.write_csv(w))?;
        self.write(&format!("{stem}.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &f.to_json()).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }
}

type Outcome = (bool, String, Map<String, Value>);

fn build_function(config: &ExperimentConfig) -> Result<SpectralFunction, CliError> {
    let spec = config
        .function
        .as_ref()
        .ok_or_else(|| CliError::Validation("field `function`: missing".into()))?;
    if let Some(blocks) = &spec.coefficients {
        let entries = blocks_to_entries(blocks.clone())?;
        return Ok(SpectralFunction::from_coefficients(&config.group, config.band, entries)?);
    }
    if spec.witness.is_some() {
        return named_witness(&config.group);
    }
    let seed = spec.random.map(|r| r.seed).unwrap_or(0);
    Ok(SpectralFunction::random(&config.group, config.band, &mut ChaCha8Rng::seed_from_u64(seed))?)
}

fn named_witness(g: &GroupDescriptor) -> Result<SpectralFunction, CliError> {
    kernel_witness(g)?.ok_or_else(|| {
        let reason = if g.rank() >= 2 {
            format!("rank {} ≥ 2, so the transform is injective and no kernel exists", g.rank())
        } else {
            "no explicit kernel function is known for this group".to_string()
        };
        CliError::Validation(format!("no kernel witness on {g}: {reason}"))
    })
}

fn family_or_default(config: &ExperimentConfig) -> Result<Vec<ClosedGeodesic>, CliError> {
    match config.geodesic_family()? {
        Some(f) => Ok(f),
        None => Ok(random_geodesics(&config.group, DEFAULT_GEODESICS, config.aux_seed())?),
    }
}

fn forward(config: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    let f = build_function(config)?;
    let samples = RadonSampleSet::sample(&f, family_or_default(config)?)?;
    out.function("function", &f)?;
    out.write_core("radon.csv", |w| samples.write_csv(w))?;
    let mut s = Map::new();
    s.insert("geodesics".into(), json!(samples.len()));
    s.insert("max_abs_radon".into(), json!(samples.max_abs()));
    let headline = format!("forward: {} geodesics, max |Rf| {:.3e}", samples.len(), samples.max_abs());
    Ok((true, headline, s))
}

fn reconstruct(config: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    let g = &config.group;
    if g.rank() < 2 {
        return Err(CliError::Validation(format!(
            "reconstruct slices along a maximal torus and needs rank ≥ 2, {g} has rank {}",
            g.rank()
        )));
    }
    let f = build_function(config)?;
    let mut s = Map::new();
    let residual = match g {
        GroupDescriptor::Torus { n } => {
            let family = match config.geodesic_family()? {
                Some(family) => family,
                None => canonical_torus_family(*n, config.band)?,
            };
            let samples = RadonSampleSet::sample(&f, family)?;
            let rec = reconstruct_torus(&samples, config.band)?;
            out.write_core("radon.csv", |w| samples.write_csv(w))?;
            out.function("reconstruction", &rec)?;
            s.insert("geodesics".into(), json!(samples.len()));
            rec.max_coefficient_diff(&f)
        }
        _ => {
            let spec = config.cosets.unwrap_or(config::CosetSpec { count: DEFAULT_COSETS, seed: config.aux_seed() });
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let reps: Vec<_> = (0..spec.count).map(|_| g.sample_haar(&mut rng)).collect();
            let oracle = |c: &ClosedGeodesic| radon_geodesic(&f, c).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let rec = reconstruct_by_cosets(g, oracle, config.band, &reps)?;
            let exact: Vec<Complex64> = reps.iter().map(|x| f.evaluate(x)).collect();
            let values = rec.values();
            out.write("reconstruction.csv", |w| {
                writeln!(w, "coset,re,im,exact_re,exact_im,error")?;
                for (i, (v, e)) in values.iter().zip(&exact).enumerate() {
                    writeln!(
                        w,
                        "{i},{},{},{},{},{}",
                        format_float(v.re),
                        format_float(v.im),
                        format_float(e.re),
                        format_float(e.im),
                        format_float((v - e).norm())
                    )?;
                }
                Ok(())
            })?;
            s.insert("cosets".into(), json!(reps.len()));
            values.iter().zip(&exact).map(|(v, e)| (v - e).norm()).fold(0.0, nan_max)
        }
    };
    let passed = residual <= config.tolerances.defect;
    s.insert("residual".into(), json!(residual));
    let headline = format!(
        "reconstruct: residual {residual:.3e} (tolerance {:.1e}) {}",
        config.tolerances.defect,
        verdict_word(passed)
    );
    Ok((passed, headline, s))
}

/// `max` that lets a NaN through, so a broken value fails every comparison.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn verdict_word(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Check names in the order they appear in `verify.csv`.
pub const VERIFY_CHECKS: [&str; 7] = [
    "projector",
    "reversal",
    "spectral-pointwise",
    "orientation",
    "winding",
    "left-covariance",
    "symmetry",
];

fn verify(config: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    use rayon::prelude::*;

    let f = build_function(config)?;
    let g = &config.group;
    let family = family_or_default(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.aux_seed());
    let partner = SpectralFunction::random(g, f.band(), &mut rng)?;
    let shifts: Vec<_> = family.iter().map(|_| g.sample_haar(&mut rng)).collect();
    let irreps = dual_enumerate(g, f.band());
    let eta = mollifier(g, f.band())?;

    let rows = family
        .par_iter()
        .zip(&shifts)
        .map(|(c, a)| -> Result<Vec<f64>, CliError> {
            let (x, h) = (&c.base, &c.hom);
            let mut projector: f64 = 0.0;
            let mut reversal: f64 = 0.0;
            for rho in &irreps {
                let j = rep_integral(rho, h)?;
                projector = projector.max(j.projector_defect());
                reversal = reversal.max(max_entry(&(&j.matrix - &rep_integral(rho, &h.reverse())?.matrix)));
            }
            let value = radon(&f, x, h)?;
            let field = radon_field(&f, h)?;
            Ok(vec![
                projector,
                reversal,
                (field.evaluate(x) - value).norm(),
                (radon(&f, x, &h.reverse())? - value).norm(),
                (radon(&f, x, &h.scaled(2))? - value).norm(),
                (radon(&f.left_translate(a)?, x, h)? - radon(&f, &(a * x), h)?).norm(),
                symmetry_defect(&f, &partner, h)?,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let conv: Vec<f64> = family
        .par_iter()
        .map(|c| conv_radon_defect(&eta, &f, &c.hom, &c.base))
        .collect::<lie_radon::Result<_>>()?;

    let mut worst = Map::new();
    for (k, name) in VERIFY_CHECKS.iter().enumerate() {
        worst.insert((*name).into(), json!(rows.iter().map(|r| r[k]).fold(0.0, nan_max)));
    }
    worst.insert("conv-radon".into(), json!(conv.iter().copied().fold(0.0, nan_max)));
    out.write("verify.csv", |w| {
        writeln!(w, "check,geodesic,defect")?;
        for (k, name) in VERIFY_CHECKS.iter().enumerate() {
            for (i, r) in rows.iter().enumerate() {
                writeln!(w, "{name},{i},{}", format_float(r[k]))?;
            }
        }
        for (i, d) in conv.iter().enumerate() {
            writeln!(w, "conv-radon,{i},{}", format_float(*d))?;
        }
        Ok(())
    })?;
    let max_defect = worst.values().filter_map(Value::as_f64).fold(0.0, nan_max);
    let all: Vec<f64> = rows.iter().flatten().chain(&conv).copied().collect();
    let passed = all.iter().all(|d| *d <= config.tolerances.defect);
    let mut s = Map::new();
    s.insert("geodesics".into(), json!(family.len()));
    s.insert("max_defect".into(), json!(max_defect));
    s.insert("max_defect_by_check".into(), Value::Object(worst));
    let headline = format!(
        "verify: {} geodesics, max defect {max_defect:.3e} (tolerance {:.1e}) {}",
        family.len(),
        config.tolerances.defect,
        verdict_word(passed)
    );
    Ok((passed, headline, s))
}

fn certify(config: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    let family = family_or_default(config)?;
    let report = injectivity_certificate(&config.group, config.band, &family)?;
    out.write_core("certificate.csv", |w| report.write_csv(w))?;
    out.write("certificate.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;
    let passed = !report.is_ambiguous();
    let verdict = serde_json::to_value(report.verdict).expect("verdict serializes");
    let mut s = Map::new();
    s.insert("verdict".into(), verdict.clone());
    s.insert("kernel_dimension".into(), json!(report.kernel_dimension));
    s.insert("min_sigma".into(), json!(report.min_sigma()));
    s.insert("ambiguous".into(), json!(report.is_ambiguous()));
    s.insert("geodesics".into(), json!(report.family_size));
    let headline = format!(
        "certify: {} at band {}, kernel dimension {}, min sigma {:.3e}{}",
        verdict.as_str().unwrap_or_default(),
        config.band,
        report.kernel_dimension,
        report.min_sigma(),
        if passed { "" } else { " (ambiguous singular values)" }
    );
    Ok((passed, headline, s))
}

fn witness(config: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, CliError> {
    let w = named_witness(&config.group)?;
    let samples = RadonSampleSet::sample(&w, family_or_default(config)?)?;
    out.function("witness", &w)?;
    out.write_core("radon.csv", |wr| samples.write_csv(wr))?;
    let max = samples.max_abs();
    let passed = max <= config.tolerances.defect;
    let mut s = Map::new();
    s.insert("geodesics".into(), json!(samples.len()));
    s.insert("l2_norm".into(), json!(w.l2_norm()));
    s.insert("max_abs_radon".into(), json!(max));
    s.insert("witness_band".into(), json!(w.band()));
    let headline = format!(
        "witness: ‖f‖ {:.3}, max |Rf| {max:.3e} over {} geodesics {}",
        w.l2_norm(),
        samples.len(),
        verdict_word(passed)
    );
    Ok((passed, headline, s))
}


#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}
