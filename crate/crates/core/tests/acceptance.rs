//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run a subset with `cargo test -p lie-radon --test acceptance -- 3 8`.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lie_radon::certify::{
    canonical_torus_family, injectivity_certificate, kernel_witness, quotient_consistency, reconstruct_by_cosets,
    reconstruct_torus, rep_int_search, RepIntSearch, Verdict, SIGMA_NONZERO, SIGMA_ZERO,
};
use lie_radon::geodesics::{random_geodesics, OneParamHom};
use lie_radon::group::{haar_quadrature, Band, GroupDescriptor, GroupPoint};
use lie_radon::irreps::{dual_enumerate, Irrep};
use lie_radon::radon::{
    conv_radon_defect, radon, radon_distribution, radon_field, radon_geodesic, rep_integral, symmetry_defect,
    RadonSampleSet,
};
use lie_radon::spectral::{convolve, mollifier, pairing, DiracCombination, SpectralFunction};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn su2_t1() -> GroupDescriptor {
    GroupDescriptor::product(vec![GroupDescriptor::Su2, GroupDescriptor::torus(1)])
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn seeded_geodesic(g: &GroupDescriptor, rng: &mut ChaCha8Rng) -> lie_radon::geodesics::ClosedGeodesic {
    random_geodesics(g, 1, rng.random()).unwrap().remove(0)
}

fn symmetry() -> Outcome {
    let cases = [
        (GroupDescriptor::torus(2), Band::new(3)),
        (GroupDescriptor::Su2, Band::new(2)),
        (GroupDescriptor::So3, Band::new(2)),
        (su2_t1(), Band::new(2)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (g, band) in &cases {
        for _ in 0..50 {
            let f = SpectralFunction::random(g, *band, &mut rng).unwrap();
            let h = SpectralFunction::random(g, *band, &mut rng).unwrap();
            let geo = seeded_geodesic(g, &mut rng);
            worst = worst.max(symmetry_defect(&f, &h, &geo.hom).unwrap());
            count += 1;
        }
    }
    outcome(worst < 1e-10, format!("max defect {worst:.2e} over {count} triples"))
}

fn projectors() -> Outcome {
    let groups = [
        GroupDescriptor::torus(1),
        GroupDescriptor::torus(2),
        GroupDescriptor::Su2,
        GroupDescriptor::So3,
        su2_t1(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut sq, mut herm, mut rev) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = &groups[rng.random_range(0..groups.len())];
        let irreps = dual_enumerate(g, Band::new(2));
        let rho = &irreps[rng.random_range(0..irreps.len())];
        let geo = seeded_geodesic(g, &mut rng);
        let j = rep_integral(rho, &geo.hom).unwrap().matrix;
        let jr = rep_integral(rho, &geo.hom.reverse()).unwrap().matrix;
        sq = sq.max(max_entry(&(&j * &j - &j)));
        herm = herm.max(max_entry(&(&j - j.adjoint())));
        rev = rev.max(max_entry(&(&j - &jr)));
    }
    let mut rank_ok = true;
    for geo in random_geodesics(&GroupDescriptor::Su2, 20, 203).unwrap() {
        for j2 in 0..=8u32 {
            let sv = rep_integral(&Irrep::spin(j2), &geo.hom).unwrap().matrix.singular_values();
            let ambiguous = sv.iter().any(|s| *s >= SIGMA_ZERO && *s <= SIGMA_NONZERO);
            let rank = sv.iter().filter(|s| **s > SIGMA_NONZERO).count();
            rank_ok &= !ambiguous && rank == usize::from(j2 % 2 == 0);
        }
    }
    let pass = sq < 1e-10 && herm < 1e-10 && rev < 1e-10 && rank_ok;
    outcome(
        pass,
        format!("‖J²−J‖ {sq:.2e}, ‖J−J†‖ {herm:.2e}, ‖J(γ)−J(γ⁻¹)‖ {rev:.2e}, SU2 rank law {rank_ok}"),
    )
}

fn torus_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let band = Band::new(3);
    let mut worst: f64 = 0.0;
    for n in [2, 3] {
        let g = GroupDescriptor::torus(n);
        let f = SpectralFunction::random(&g, band, &mut rng).unwrap();
        let samples = RadonSampleSet::sample(&f, canonical_torus_family(n, band).unwrap()).unwrap();
        let back = reconstruct_torus(&samples, band).unwrap();
        let err = back.add(&f.scale(Complex64::new(-1.0, 0.0))).unwrap().l2_norm() / f.l2_norm();
        worst = worst.max(err);
    }
    outcome(worst < 1e-8, format!("max relative coefficient error {worst:.2e}"))
}

fn witnesses() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (g, seed) in [(GroupDescriptor::torus(1), 401), (GroupDescriptor::Su2, 402)] {
        let w = kernel_witness(&g).unwrap().expect("witness exists");
        let max = random_geodesics(&g, 100, seed)
            .unwrap()
            .iter()
            .map(|geo| radon_geodesic(&w, geo).unwrap().norm())
            .fold(0.0, f64::max);
        let norm = w.l2_norm();
        pass &= max < 1e-10 && norm >= 0.5;
        parts.push(format!("{g}: max |Rf| {max:.2e}, ‖f‖ {norm}"));
    }
    outcome(pass, parts.join("; "))
}

fn su2_kernel() -> Outcome {
    let g = GroupDescriptor::Su2;
    let family = random_geodesics(&g, 40, 501).unwrap();
    let report = injectivity_certificate(&g, Band::from_twice(3), &family).unwrap();
    let even_min = report
        .records
        .iter()
        .filter(|r| matches!(r.irrep, Irrep::Spin { j2 } if j2 % 2 == 0))
        .map(|r| r.sigma_min)
        .fold(f64::INFINITY, f64::min);
    let odd_max = report
        .records
        .iter()
        .filter(|r| matches!(r.irrep, Irrep::Spin { j2 } if j2 % 2 == 1))
        .map(|r| r.sigma_min)
        .fold(0.0, f64::max);
    let pass = report.kernel_dimension == 20 && even_min > SIGMA_NONZERO && !report.is_ambiguous();
    outcome(
        pass,
        format!(
            "kernel dimension {}, even σ_min {even_min:.3e}, odd σ_min ≤ {odd_max:.1e}",
            report.kernel_dimension
        ),
    )
}

fn so3_certificate() -> Outcome {
    let g = GroupDescriptor::So3;
    let family = random_geodesics(&g, 12, 601).unwrap();
    let report = injectivity_certificate(&g, Band::new(3), &family).unwrap();
    let homs: Vec<OneParamHom> = family.iter().map(|c| c.hom.clone()).collect();
    let mut unit = true;
    for j in 1..=3u32 {
        unit &= matches!(
            rep_int_search(&Irrep::spin(2 * j), &homs, 0, 602).unwrap(),
            RepIntSearch::Found { trial: 0, .. }
        );
    }
    let min = report.min_sigma();
    let pass = report.verdict == Verdict::InjectiveAtBand && min > SIGMA_NONZERO && unit;
    outcome(pass, format!("verdict {:?}, min σ_min {min:.3e}, unit weights succeed {unit}", report.verdict))
}

fn quotient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let f = SpectralFunction::random(&GroupDescriptor::So3, Band::new(2), &mut rng).unwrap();
        let geo = seeded_geodesic(&GroupDescriptor::Su2, &mut rng);
        worst = worst.max(quotient_consistency(&f, &geo.base, &geo.hom).unwrap());
    }
    outcome(worst < 1e-10, format!("max defect {worst:.2e} over 20 pairs"))
}

fn spectral_forward() -> Outcome {
    let groups = [
        GroupDescriptor::torus(1),
        GroupDescriptor::torus(2),
        GroupDescriptor::Su2,
        GroupDescriptor::So3,
        su2_t1(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let mut worst: f64 = 0.0;
    let mut points = 0usize;
    for g in &groups {
        for twice in 1..=4 {
            let band = Band::from_twice(twice);
            let f = SpectralFunction::random(g, band, &mut rng).unwrap();
            let quad = haar_quadrature(g, band).unwrap();
            let geo = seeded_geodesic(g, &mut rng);
            let field = radon_field(&f, &geo.hom).unwrap();
            for x in quad.nodes() {
                let d = (field.evaluate(x) - radon(&f, x, &geo.hom).unwrap()).norm();
                worst = worst.max(d);
                points += 1;
            }
        }
    }
    outcome(worst < 1e-9, format!("sup difference {worst:.2e} over {points} Haar nodes"))
}

fn convolution() -> Outcome {
    let groups = [GroupDescriptor::torus(2), GroupDescriptor::Su2, GroupDescriptor::So3, su2_t1()];
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let g = &groups[i % groups.len()];
        let band = Band::new(1 + (i % 2) as u32);
        let eta = SpectralFunction::random(g, band, &mut rng).unwrap();
        let f = SpectralFunction::random(g, Band::new(1), &mut rng).unwrap();
        let geo = seeded_geodesic(g, &mut rng);
        let x = g.sample_haar(&mut rng);
        worst = worst.max(conv_radon_defect(&eta, &f, &geo.hom, &x).unwrap());
    }
    let mut repro: f64 = 0.0;
    for g in &groups {
        for band in [Band::new(1), Band::new(2)] {
            let f = SpectralFunction::random(g, band, &mut rng).unwrap();
            let eta = mollifier(g, band).unwrap();
            repro = repro.max((pairing(&eta, &f).unwrap() - f.evaluate(&g.identity())).norm());
            repro = repro.max(convolve(&eta, &f).unwrap().max_coefficient_diff(&f));
        }
    }
    outcome(
        worst < 1e-9 && repro < 1e-10,
        format!("max conv-radon defect {worst:.2e} over 30 cases, mollifier reproduction error {repro:.2e}"),
    )
}

fn cosets() -> Outcome {
    let g = su2_t1();
    let band = Band::new(1);
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let f = SpectralFunction::random(&g, band, &mut rng).unwrap();
    let reps: Vec<GroupPoint> = (0..8).map(|_| g.sample_haar(&mut rng)).collect();
    let rec = reconstruct_by_cosets(&g, |geo| radon_geodesic(&f, geo).unwrap(), band, &reps).unwrap();
    let mut worst: f64 = 0.0;
    for (i, rep) in reps.iter().enumerate() {
        worst = worst.max((rec.values()[i] - f.evaluate(rep)).norm());
        let angles = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
        let direct = f.evaluate(&(rep * &rec.torus.embed(&angles)));
        worst = worst.max((rec.value_at(i, &angles) - direct).norm());
    }
    outcome(worst < 1e-6, format!("pointwise error {worst:.2e} on 8 cosets"))
}

/// `Rg(x₀, γ⁻¹)` from an independent offset-midpoint rule with more nodes.
fn direct_reverse_radon(g: &SpectralFunction, x0: &GroupPoint, h: &OneParamHom) -> Complex64 {
    let back = h.reverse();
    let n = 97;
    (0..n)
        .map(|i| g.evaluate(&(x0 * &back.point((i as f64 + 0.5) / n as f64))))
        .sum::<Complex64>()
        / n as f64
}

fn distributions() -> Outcome {
    let groups = [
        GroupDescriptor::torus(2),
        GroupDescriptor::Su2,
        GroupDescriptor::So3,
        su2_t1(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1101);
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let g = &groups[i % groups.len()];
        let test = SpectralFunction::random(g, Band::new(1), &mut rng).unwrap();
        let geo = seeded_geodesic(g, &mut rng);
        let x0 = g.sample_haar(&mut rng);
        let x1 = g.sample_haar(&mut rng);
        let (w0, w1) = (Complex64::new(0.7, -0.2), Complex64::new(-1.1, 0.4));
        let d = DiracCombination::new(g)
            .unwrap()
            .with_atom(x0.clone(), w0)
            .unwrap()
            .with_atom(x1.clone(), w1)
            .unwrap();
        let value = radon_distribution(&d, &geo.hom, &test).unwrap();
        let oracle = w0 * direct_reverse_radon(&test, &x0, &geo.hom) + w1 * direct_reverse_radon(&test, &x1, &geo.hom);
        worst = worst.max((value - oracle).norm());
    }
    outcome(worst < 1e-10, format!("max deviation {worst:.2e} over 30 cases"))
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "symmetry", symmetry, Some(Duration::from_secs(60))),
        (2, "projectors", projectors, None),
        (3, "torus round-trip", torus_round_trip, Some(Duration::from_secs(60))),
        (4, "circle and SU2 witnesses", witnesses, None),
        (5, "SU2 kernel characterization", su2_kernel, None),
        (6, "SO3 certificate", so3_certificate, None),
        (7, "quotient consistency", quotient, None),
        (8, "spectral-forward equivalence", spectral_forward, None),
        (9, "convolution identities", convolution, None),
        (10, "coset-slicing reconstruction", cosets, Some(Duration::from_secs(300))),
        (11, "distributional pairing", distributions, None),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, run, limit) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let mut result = run();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                result.pass = false;
                result.detail.push_str(&format!("; exceeded {} s", limit.as_secs()));
            }
        }
        if !result.pass {
            failures += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {} ({:.2} s)",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
