//! Executable evidence for injectivity and non-injectivity.
//!
//! * [`reconstruct_torus`] inverts the transform on a torus from samples on a
//!   full base grid for enough winding directions.
//! * [`reconstruct_by_cosets`] reduces a group of rank at least two to its
//!   maximal torus: every coset `gH` is a flat totally geodesic torus, so the
//!   torus inversion recovers `f` on it.
//! * [`kernel_witness`] returns an explicit nonzero function with vanishing
//!   transform on the circle and on SU(2).
//! * [`injectivity_certificate`] measures, irrep by irrep, the smallest
//!   singular value of the stacked projectors `J_ρ(γᵢ)`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, Quaternion};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesics::{kernel_geodesic, line_integral, line_quadrature, ClosedGeodesic, FactorHom, OneParamHom};
use crate::group::{covering_project, Band, GroupDescriptor, GroupPoint};
use crate::irreps::{dual_enumerate, Irrep};
use crate::radon::{radon, rep_integral, RadonSampleSet};
use crate::spectral::{format_float, SpectralFunction};

type Block = DMatrix<Complex64>;

/// Singular values above this are nonzero.
pub const SIGMA_NONZERO: f64 = 1e-6;
/// Singular values below this are zero.
pub const SIGMA_ZERO: f64 = 1e-12;
/// Success threshold for [`rep_int_search`].
pub const SEARCH_SIGMA: f64 = 1e-8;

fn torus_rank(g: &GroupDescriptor) -> Result<usize> {
    match g {
        GroupDescriptor::Torus { n } => Ok(*n),
        _ => Err(Error::UnsupportedGroup {
            group: g.to_string(),
            reason: "torus reconstruction needs a torus".into(),
        }),
    }
}

/// Grid index of an angle on the `side`-point uniform circle grid.
fn grid_index(angle: f64, side: usize) -> Option<usize> {
    let scaled = angle.rem_euclid(TAU) / TAU * side as f64;
    let idx = scaled.round();
    ((scaled - idx).abs() < 1e-9).then_some((idx as usize) % side)
}

/// Recovers every coefficient of band `≤ band` from Radon samples on a torus.
///
/// For each winding `k` whose base points cover the full `(2B+1)ⁿ` grid the
/// field `Rf(·, γ_k)` is analyzed exactly; its `m` coefficient equals `F̂(m)`
/// whenever `m·k = 0`.
pub fn reconstruct_torus(samples: &RadonSampleSet, band: Band) -> Result<SpectralFunction> {
    let g = &samples.group;
    let n = torus_rank(g)?;
    if samples.values.len() != samples.geodesics.len() {
        return Err(Error::InvalidArgument("sample count does not match geodesics".into()));
    }
    let side = 2 * band.floor() as usize + 1;
    let cells = side.pow(n as u32);

    // winding → grid cell → value, windings kept in first-seen order
    let mut order: Vec<Vec<i64>> = Vec::new();
    let mut grids: HashMap<Vec<i64>, HashMap<usize, Complex64>> = HashMap::new();
    for (c, v) in samples.geodesics.iter().zip(&samples.values) {
        let (OneParamHom::Torus { k }, GroupPoint::Torus(a)) = (&c.hom, &c.base) else {
            return Err(Error::DescriptorMismatch {
                expected: g.to_string(),
                found: c.group().to_string(),
            });
        };
        let Some(cell) = a
            .iter()
            .try_fold(0usize, |acc, x| grid_index(*x, side).map(|i| acc * side + i))
        else {
            continue;
        };
        let entry = grids.entry(k.clone()).or_insert_with(|| {
            order.push(k.clone());
            HashMap::new()
        });
        entry.insert(cell, *v);
    }
    let complete: Vec<(&Vec<i64>, Vec<Complex64>)> = order
        .iter()
        .filter_map(|k| {
            let grid = &grids[k];
            (grid.len() == cells).then(|| (k, (0..cells).map(|i| grid[&i]).collect()))
        })
        .collect();

    let irreps = dual_enumerate(g, band);
    let entries = irreps
        .par_iter()
        .map(|rho| {
            let Irrep::Character { m } = rho else { unreachable!("torus duals are characters") };
            let (_, values) = complete
                .iter()
                .find(|(k, _)| k.iter().zip(m).map(|(a, b)| a * b).sum::<i64>() == 0)
                .ok_or_else(|| Error::MissingDirection { m: m.clone() })?;
            let mut acc = Complex64::new(0.0, 0.0);
            for (cell, v) in values.iter().enumerate() {
                let mut rest = cell;
                let mut phase = 0.0;
                for mi in m.iter().rev() {
                    phase += *mi as f64 * TAU * (rest % side) as f64 / side as f64;
                    rest /= side;
                }
                acc += v * Complex64::from_polar(1.0, -phase);
            }
            Ok((rho.clone(), Block::from_element(1, 1, acc / cells as f64)))
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralFunction::from_coefficients(g, band, entries)
}

/// Kernel directions of every character of band `≤ band`, deduplicated in
/// enumeration order.
pub fn canonical_torus_directions(n: usize, band: Band) -> Result<Vec<Vec<i64>>> {
    let g = GroupDescriptor::torus(n);
    let mut out: Vec<Vec<i64>> = Vec::new();
    for rho in dual_enumerate(&g, band) {
        match kernel_geodesic(&g, &rho)? {
            Some(OneParamHom::Torus { k }) => {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            _ => {
                let Irrep::Character { m } = rho else { unreachable!() };
                return Err(Error::MissingDirection { m });
            }
        }
    }
    Ok(out)
}

/// The `(2B+1)ⁿ` base grid.
pub fn torus_grid(n: usize, band: Band) -> Vec<Vec<f64>> {
    let side = 2 * band.floor() as usize + 1;
    (0..side.pow(n as u32))
        .map(|mut cell| {
            let mut a = vec![0.0; n];
            for x in a.iter_mut().rev() {
                *x = TAU * (cell % side) as f64 / side as f64;
                cell /= side;
            }
            a
        })
        .collect()
}

/// Every canonical direction through every grid point.
pub fn canonical_torus_family(n: usize, band: Band) -> Result<Vec<ClosedGeodesic>> {
    let grid = torus_grid(n, band);
    let mut out = Vec::new();
    for k in canonical_torus_directions(n, band)? {
        let hom = OneParamHom::torus(k)?;
        for a in &grid {
            out.push(ClosedGeodesic::new(GroupPoint::torus(a.clone()), hom.clone())?);
        }
    }
    Ok(out)
}

/// Maximal torus `H` of a torus or a product of tori, SU(2) and SO(3).
#[derive(Clone, Debug)]
pub struct MaximalTorus {
    group: GroupDescriptor,
    factors: Vec<GroupDescriptor>,
}

impl MaximalTorus {
    pub fn new(g: &GroupDescriptor) -> Result<Self> {
        g.validate()?;
        let factors = match g {
            GroupDescriptor::Product { factors } => factors.clone(),
            GroupDescriptor::Torus { .. } => vec![g.clone()],
            _ => Vec::new(),
        };
        if factors.iter().any(|f| matches!(f, GroupDescriptor::Product { .. })) {
            return Err(Error::UnsupportedGroup {
                group: g.to_string(),
                reason: "nested products are not supported".into(),
            });
        }
        let t = MaximalTorus {
            group: g.clone(),
            factors,
        };
        if g.rank() < 2 || t.factors.is_empty() {
            return Err(Error::UnsupportedGroup {
                group: g.to_string(),
                reason: format!(
                    "rank {} < 2: the maximal torus is a circle, on which the transform only sees the mean",
                    g.rank()
                ),
            });
        }
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.group.rank()
    }

    /// Band of `h ↦ f(g·h)` on `H` for `f` of band `band`.
    pub fn torus_band(&self, band: Band) -> Band {
        let top = self
            .factors
            .iter()
            .map(|f| match f {
                GroupDescriptor::Su2 => band.twice(),
                _ => band.floor(),
            })
            .max()
            .unwrap_or(0);
        Band::new(top)
    }

    /// `φ(θ)`: torus coordinates to a point of `G`.
    pub fn embed(&self, angles: &[f64]) -> GroupPoint {
        let mut rest = angles;
        let mut parts = Vec::new();
        for f in &self.factors {
            match f {
                GroupDescriptor::Torus { n } => {
                    parts.push(GroupPoint::torus(rest[..*n].to_vec()));
                    rest = &rest[*n..];
                }
                GroupDescriptor::Su2 => {
                    let t = rest[0];
                    parts.push(GroupPoint::su2(Quaternion::new(t.cos(), t.sin(), 0.0, 0.0)));
                    rest = &rest[1..];
                }
                GroupDescriptor::So3 => {
                    let t = rest[0] / 2.0;
                    parts.push(GroupPoint::so3(Quaternion::new(t.cos(), t.sin(), 0.0, 0.0)));
                    rest = &rest[1..];
                }
                GroupDescriptor::Product { .. } => unreachable!("rejected in new"),
            }
        }
        match &self.group {
            GroupDescriptor::Product { .. } => GroupPoint::Product(parts),
            _ => parts.remove(0),
        }
    }

    /// The homomorphism `t ↦ φ(2πkt)`.
    pub fn embed_hom(&self, k: &[i64]) -> Result<OneParamHom> {
        let mut rest = k;
        let mut homs = Vec::new();
        for f in &self.factors {
            let width = match f {
                GroupDescriptor::Torus { n } => *n,
                _ => 1,
            };
            let (part, tail) = rest.split_at(width);
            rest = tail;
            homs.push(if part.iter().all(|x| *x == 0) {
                FactorHom::Constant(f.clone())
            } else {
                FactorHom::Moving(match f {
                    GroupDescriptor::Torus { .. } => OneParamHom::torus(part.to_vec())?,
                    GroupDescriptor::Su2 => OneParamHom::su2([1.0, 0.0, 0.0], part[0])?,
                    _ => OneParamHom::so3([1.0, 0.0, 0.0], part[0])?,
                })
            });
        }
        match &self.group {
            GroupDescriptor::Product { .. } => OneParamHom::product(homs),
            _ => match homs.remove(0) {
                FactorHom::Moving(h) => Ok(h),
                FactorHom::Constant(_) => Err(Error::InvalidHom("zero winding".into())),
            },
        }
    }
}

/// `f` recovered on the cosets `gH` of a maximal torus.
#[derive(Clone, Debug)]
pub struct CosetReconstruction {
    pub torus: MaximalTorus,
    pub representatives: Vec<GroupPoint>,
    /// `h ↦ f(g·h)` on `H`, one per representative.
    pub coset_functions: Vec<SpectralFunction>,
}

impl CosetReconstruction {
    /// `f(g)` for every representative `g`.
    pub fn values(&self) -> Vec<Complex64> {
        let origin = vec![0.0; self.torus.rank()];
        let e = GroupPoint::torus(origin);
        self.coset_functions.iter().map(|f| f.evaluate(&e)).collect()
    }

    /// `f(g·φ(θ))` on coset `i`.
    pub fn value_at(&self, i: usize, angles: &[f64]) -> Complex64 {
        self.coset_functions[i].evaluate(&GroupPoint::torus(angles.to_vec()))
    }
}

/// Reconstructs `f` on every coset `gH` using only `oracle` values on
/// geodesics lying inside those cosets.
pub fn reconstruct_by_cosets<F>(
    g: &GroupDescriptor,
    oracle: F,
    band: Band,
    representatives: &[GroupPoint],
) -> Result<CosetReconstruction>
where
    F: Fn(&ClosedGeodesic) -> Complex64 + Sync,
{
    let torus = MaximalTorus::new(g)?;
    for r in representatives {
        g.ensure_contains(r)?;
    }
    let n = torus.rank();
    let tband = torus.torus_band(band);
    let family = canonical_torus_family(n, tband)?;
    let lifted: Vec<(GroupPoint, OneParamHom)> = family
        .iter()
        .map(|c| {
            let (GroupPoint::Torus(a), OneParamHom::Torus { k }) = (&c.base, &c.hom) else {
                unreachable!("torus family")
            };
            Ok((torus.embed(a), torus.embed_hom(k)?))
        })
        .collect::<Result<_>>()?;
    let coset_functions = representatives
        .par_iter()
        .map(|rep| {
            let values = lifted
                .iter()
                .map(|(base, hom)| {
                    let geo = ClosedGeodesic {
                        base: rep * base,
                        hom: hom.clone(),
                    };
                    oracle(&geo)
                })
                .collect();
            let samples = RadonSampleSet {
                group: GroupDescriptor::torus(n),
                band: tband,
                geodesics: family.clone(),
                values,
                line_nodes: Vec::new(),
            };
            reconstruct_torus(&samples, tband)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CosetReconstruction {
        torus,
        representatives: representatives.to_vec(),
        coset_functions,
    })
}

/// A nonzero function whose transform vanishes on every closed geodesic, on
/// the groups where one exists: `sin θ` on the circle and `Re q` on SU(2).
pub fn kernel_witness(g: &GroupDescriptor) -> Result<Option<SpectralFunction>> {
    g.validate()?;
    let i = Complex64::new(0.0, 1.0);
    Ok(match g {
        GroupDescriptor::Torus { n: 1 } => Some(SpectralFunction::from_coefficients(
            g,
            Band::new(1),
            [
                (Irrep::character(vec![1]), Block::from_element(1, 1, -i * 0.5)),
                (Irrep::character(vec![-1]), Block::from_element(1, 1, i * 0.5)),
            ],
        )?),
        GroupDescriptor::Su2 => Some(SpectralFunction::from_coefficients(
            g,
            Band::from_twice(1),
            [(Irrep::spin(1), Block::identity(2, 2) * Complex64::new(0.25, 0.0))],
        )?),
        GroupDescriptor::Product { factors } if factors.len() == 1 => {
            match kernel_witness(&factors[0])? {
                Some(w) => {
                    let entries = w
                        .coefficients()
                        .map(|(r, b)| (Irrep::product(vec![r.clone()]), b.clone()))
                        .collect::<Vec<_>>();
                    Some(SpectralFunction::from_coefficients(g, w.band(), entries)?)
                }
                None => None,
            }
        }
        _ => None,
    })
}

/// Outcome for one irrep block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IrrepCertificate {
    pub irrep: Irrep,
    pub dim: usize,
    pub sigma_min: f64,
    /// Singular values of the stacked block below [`SIGMA_NONZERO`].
    pub nullity: usize,
    /// Some singular value lies between [`SIGMA_ZERO`] and [`SIGMA_NONZERO`].
    pub ambiguous: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InjectiveAtBand,
    KernelFound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub group: GroupDescriptor,
    pub band: Band,
    pub family: String,
    pub family_size: usize,
    pub records: Vec<IrrepCertificate>,
    pub kernel_dimension: usize,
    pub verdict: Verdict,
}

impl CertificateReport {
    pub fn record(&self, rho: &Irrep) -> Option<&IrrepCertificate> {
        self.records.iter().find(|r| &r.irrep == rho)
    }

    pub fn is_ambiguous(&self) -> bool {
        self.records.iter().any(|r| r.ambiguous)
    }

    pub fn min_sigma(&self) -> f64 {
        self.records.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min)
    }

    /// Writes `irrep, dim, sigma_min, nullity` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["irrep", "dim", "sigma_min", "nullity"])?;
        for r in &self.records {
            w.write_record([
                r.irrep.id(),
                r.dim.to_string(),
                format_float(r.sigma_min),
                r.nullity.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn stacked(rho: &Irrep, homs: &[OneParamHom]) -> Result<Block> {
    let d = rho.dim();
    let mut out = Block::zeros(d * homs.len(), d);
    for (i, h) in homs.iter().enumerate() {
        out.view_mut((i * d, 0), (d, d)).copy_from(&rep_integral(rho, h)?.matrix);
    }
    Ok(out)
}

/// Per-irrep smallest singular values of `F ↦ (J_ρ(γᵢ) F)ᵢ` for the given
/// family. Base points do not affect the blocks.
pub fn injectivity_certificate(
    g: &GroupDescriptor,
    band: Band,
    family: &[ClosedGeodesic],
) -> Result<CertificateReport> {
    g.validate()?;
    if family.is_empty() {
        return Err(Error::InvalidArgument("certificate family is empty".into()));
    }
    for c in family {
        g.ensure_same(&c.group())?;
    }
    let homs: Vec<OneParamHom> = family.iter().map(|c| c.hom.clone()).collect();
    let records = dual_enumerate(g, band)
        .par_iter()
        .map(|rho| {
            let sv = stacked(rho, &homs)?.singular_values();
            let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(IrrepCertificate {
                irrep: rho.clone(),
                dim: rho.dim(),
                sigma_min,
                nullity: sv.iter().filter(|s| **s <= SIGMA_NONZERO).count(),
                ambiguous: sv.iter().any(|s| *s >= SIGMA_ZERO && *s <= SIGMA_NONZERO),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kernel_dimension = records.iter().map(|r| r.dim * r.nullity).sum();
    let verdict = if records.iter().all(|r| r.sigma_min > SIGMA_NONZERO) {
        Verdict::InjectiveAtBand
    } else {
        Verdict::KernelFound
    };
    Ok(CertificateReport {
        group: g.clone(),
        band,
        family: describe_family(family),
        family_size: family.len(),
        records,
        kernel_dimension,
        verdict,
    })
}

fn describe_family(family: &[ClosedGeodesic]) -> String {
    let mut distinct: Vec<String> = family
        .iter()
        .map(|c| serde_json::to_string(&c.hom).expect("homs serialize"))
        .collect();
    distinct.sort();
    distinct.dedup();
    format!("{} geodesics, {} distinct homomorphisms", family.len(), distinct.len())
}

#[derive(Clone, Debug, PartialEq)]
pub enum RepIntSearch {
    /// `Σ aᵢ Jᵢ` has smallest singular value `sigma_min`.
    Found { weights: Vec<Complex64>, sigma_min: f64, trial: usize },
    Failure { best_sigma: f64, trials: usize },
}

/// Looks for weights making `Σ aᵢ J_ρ(γᵢ)` invertible: unit weights first,
/// then `trials` seeded complex Gaussian draws.
pub fn rep_int_search(rho: &Irrep, family: &[OneParamHom], trials: usize, seed: u64) -> Result<RepIntSearch> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("search family is empty".into()));
    }
    let js = family
        .iter()
        .map(|h| Ok(rep_integral(rho, h)?.matrix))
        .collect::<Result<Vec<_>>>()?;
    let d = rho.dim();
    let sigma = |a: &[Complex64]| {
        let sum = js
            .iter()
            .zip(a)
            .fold(Block::zeros(d, d), |acc, (j, w)| acc + j * *w);
        sum.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for trial in 0..=trials {
        let weights: Vec<Complex64> = if trial == 0 {
            vec![Complex64::new(1.0, 0.0); js.len()]
        } else {
            (0..js.len())
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect()
        };
        let s = sigma(&weights);
        if s > SEARCH_SIGMA {
            return Ok(RepIntSearch::Found {
                weights,
                sigma_min: s,
                trial,
            });
        }
        best = best.max(s);
    }
    Ok(RepIntSearch::Failure {
        best_sigma: best,
        trials,
    })
}

/// The image of an SU(2) homomorphism in SO(3): same axis, doubled winding.
///
/// One SU(2) loop `cos(2πwt) + u sin(2πwt)` rotates by `4πwt`, which is the
/// SO(3) loop of winding `2w`.
pub fn project_hom(h: &OneParamHom) -> Result<OneParamHom> {
    match h {
        OneParamHom::Su2 { axis, w } => OneParamHom::so3(*axis, 2 * w),
        _ => Err(Error::InvalidHom(format!("{} is not an SU2 homomorphism", h.group()))),
    }
}

/// `|R_{SU2}(f∘π)(x, γ) − R_{SO3} f(π(x), π∘γ)|`, each side by its own line
/// quadrature.
pub fn quotient_consistency(f: &SpectralFunction, x: &GroupPoint, h: &OneParamHom) -> Result<f64> {
    if f.group() != &GroupDescriptor::So3 {
        return Err(Error::DescriptorMismatch {
            expected: GroupDescriptor::So3.to_string(),
            found: f.group().to_string(),
        });
    }
    GroupDescriptor::Su2.ensure_contains(x)?;
    let projected = project_hom(h)?;
    let pi = |y: &GroupPoint| covering_project(y.quaternion().expect("SU2 point"));
    let n = line_quadrature(h, Band::new(f.band().floor()));
    let lhs = line_integral(|y| f.evaluate(&pi(y)), x, h, n);
    let rhs = radon(f, &pi(x), &projected)?;
    Ok((lhs - rhs).norm())
}

/// Certificates keyed by irrep for lookups.
pub fn records_by_irrep(report: &CertificateReport) -> BTreeMap<Irrep, &IrrepCertificate> {
    report.records.iter().map(|r| (r.irrep.clone(), r)).collect()
}
