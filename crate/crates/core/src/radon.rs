//! The Radon transform over closed geodesics.
//!
//! For a geodesic `t ↦ x·γ(t)` the transform is the average
//! `Rf(x, γ) = ∫₀¹ f(x·γ(t)) dt`. In the analysis convention the map
//! `f ↦ Rf(·, γ)` is block diagonal: every coefficient block is multiplied on
//! the left by the representation integral `J_ρ(γ) = ∫₀¹ ρ(γ(t)) dt`, an
//! orthogonal projector onto the vectors fixed by the circle `γ`.

use std::io::Write;

use nalgebra::{DMatrix, Quaternion, UnitQuaternion, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesics::{line_integral, line_quadrature, ClosedGeodesic, FactorHom, OneParamHom};
use crate::group::{haar_quadrature, Band, GroupDescriptor, GroupPoint};
use crate::irreps::{rep_matrix_unchecked, wigner_d, Irrep};
use crate::spectral::{convolve, format_float, max_entry, pairing, DiracCombination, SpectralFunction};

type Block = DMatrix<Complex64>;

/// `J = ∫₀¹ ρ(γ(t)) dt` for one irrep and one homomorphism.
#[derive(Clone, Debug, PartialEq)]
pub struct RepIntegral {
    pub irrep: Irrep,
    pub hom: OneParamHom,
    pub matrix: Block,
}

impl RepIntegral {
    /// Number of singular values above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .filter(|s| **s > tol)
            .count()
    }

    /// `max(‖J² − J‖∞, ‖J − J†‖∞)`.
    pub fn projector_defect(&self) -> f64 {
        let j = &self.matrix;
        max_entry(&(j * j - j)).max(max_entry(&(j - j.adjoint())))
    }
}

fn hom_fits(rho: &Irrep, h: &OneParamHom) -> Result<()> {
    rho.ensure_belongs(&h.group())
}

/// Unitary `q` with `q·i·q⁻¹ = u`, as a quaternion.
fn frame_to_axis(axis: &[f64; 3]) -> Quaternion<f64> {
    let u = Vector3::from(*axis);
    match UnitQuaternion::rotation_between(&Vector3::x(), &u) {
        Some(r) => r.into_inner(),
        None => Quaternion::new(0.0, 0.0, 1.0, 0.0),
    }
}

/// Change of basis `P` and integer frequencies `ν` with
/// `ρ(γ(t)) = P · diag(e^{2πiνt}) · P†`.
fn diagonal_frame(rho: &Irrep, h: &OneParamHom) -> (Block, Vec<i64>) {
    match (rho, h) {
        (Irrep::Character { m }, OneParamHom::Torus { k }) => (
            Block::identity(1, 1),
            vec![m.iter().zip(k).map(|(a, b)| a * b).sum()],
        ),
        (Irrep::Spin { j2 }, OneParamHom::Su2 { axis, w } | OneParamHom::So3 { axis, w }) => {
            let p = wigner_d(*j2, &frame_to_axis(axis));
            let halve = matches!(h, OneParamHom::So3 { .. });
            let nu = (0..=*j2)
                .map(|a| {
                    let m2 = i64::from(*j2) - 2 * i64::from(a);
                    if halve {
                        m2 / 2 * w
                    } else {
                        m2 * w
                    }
                })
                .collect();
            (p, nu)
        }
        (Irrep::Product { factors }, OneParamHom::Product(homs)) => factors
            .iter()
            .zip(homs)
            .map(|(r, fh)| match fh {
                FactorHom::Constant(_) => (Block::identity(r.dim(), r.dim()), vec![0; r.dim()]),
                FactorHom::Moving(h) => diagonal_frame(r, h),
            })
            .reduce(|(pa, na), (pb, nb)| {
                let nu = na
                    .iter()
                    .flat_map(|a| nb.iter().map(move |b| a + b))
                    .collect();
                (pa.kronecker(&pb), nu)
            })
            .expect("nonempty product"),
        _ => unreachable!("irrep checked against the homomorphism"),
    }
}

/// `J_ρ(γ)` from the diagonalized form `P · diag(δ_{ν,0}) · P†`.
pub fn rep_integral(rho: &Irrep, h: &OneParamHom) -> Result<RepIntegral> {
    hom_fits(rho, h)?;
    let (p, nu) = diagonal_frame(rho, h);
    let mask = Block::from_diagonal(&nalgebra::DVector::from_iterator(
        nu.len(),
        nu.iter()
            .map(|v| Complex64::new(if *v == 0 { 1.0 } else { 0.0 }, 0.0)),
    ));
    Ok(RepIntegral {
        irrep: rho.clone(),
        hom: h.clone(),
        matrix: &p * mask * p.adjoint(),
    })
}

/// `J_ρ(γ)` by uniform quadrature along the circle, exact at band `ρ`.
pub fn rep_integral_quadrature(rho: &Irrep, h: &OneParamHom) -> Result<RepIntegral> {
    hom_fits(rho, h)?;
    let n = line_quadrature(h, rho.band());
    let d = rho.dim();
    let mut acc = Block::zeros(d, d);
    for i in 0..n {
        acc += rep_matrix_unchecked(rho, &h.point(i as f64 / n as f64));
    }
    Ok(RepIntegral {
        irrep: rho.clone(),
        hom: h.clone(),
        matrix: acc / Complex64::new(n as f64, 0.0),
    })
}

/// `Rf(x, γ) = ∫₀¹ f(x·γ(t)) dt`, exact for band-limited `f`.
pub fn radon(f: &SpectralFunction, x: &GroupPoint, h: &OneParamHom) -> Result<Complex64> {
    f.group().ensure_contains(x)?;
    f.group().ensure_same(&h.group())?;
    let n = line_quadrature(h, f.band());
    Ok(line_integral(|y| f.evaluate(y), x, h, n))
}

/// `Rf` on one closed geodesic.
pub fn radon_geodesic(f: &SpectralFunction, c: &ClosedGeodesic) -> Result<Complex64> {
    radon(f, &c.base, &c.hom)
}

/// The function `x ↦ Rf(x, γ)`, with coefficients `J_ρ(γ)·F̂(ρ)`.
pub fn radon_field(f: &SpectralFunction, h: &OneParamHom) -> Result<SpectralFunction> {
    f.group().ensure_same(&h.group())?;
    let entries = f
        .coefficients()
        .map(|(rho, a)| Ok((rho.clone(), rep_integral(rho, h)?.matrix * a)))
        .collect::<Result<Vec<_>>>()?;
    SpectralFunction::from_coefficients(f.group(), f.band(), entries)
}

/// `∫ Rf(x, γ) g(x) dx` with `Rf` evaluated pointwise.
fn radon_pairing(f: &SpectralFunction, g: &SpectralFunction, h: &OneParamHom) -> Result<Complex64> {
    f.group().ensure_same(g.group())?;
    f.group().ensure_same(&h.group())?;
    let quad = haar_quadrature(f.group(), f.band().max(g.band()))?;
    let n = line_quadrature(h, f.band());
    Ok(quad.integrate(|x| line_integral(|y| f.evaluate(y), x, h, n) * g.evaluate(x)))
}

/// `|⟨Rf(·,γ), g⟩ − ⟨f, Rg(·,γ)⟩|` in the unconjugated pairing.
pub fn symmetry_defect(f: &SpectralFunction, g: &SpectralFunction, h: &OneParamHom) -> Result<f64> {
    let lhs = radon_pairing(f, g, h)?;
    let rhs = radon_pairing(g, f, h)?;
    Ok((lhs - rhs).norm())
}

/// `⟨Rd(·,γ), g⟩ := ⟨d, Rg(·,γ⁻¹)⟩`.
pub fn radon_distribution(d: &DiracCombination, h: &OneParamHom, g: &SpectralFunction) -> Result<Complex64> {
    d.group().ensure_same(g.group())?;
    let back = h.reverse();
    let mut total = Complex64::new(0.0, 0.0);
    for (x, w) in d.atoms() {
        total += w * radon(g, x, &back)?;
    }
    if let Some(density) = d.density() {
        total += radon_pairing(g, density, &back)?;
    }
    Ok(total)
}

/// `|(η ∗ Rf(·,γ))(x) − R(η ∗ f)(x, γ)|`, the left side by quadrature.
pub fn conv_radon_defect(
    eta: &SpectralFunction,
    f: &SpectralFunction,
    h: &OneParamHom,
    x: &GroupPoint,
) -> Result<f64> {
    eta.group().ensure_same(f.group())?;
    eta.group().ensure_contains(x)?;
    let quad = haar_quadrature(f.group(), eta.band().max(f.band()))?;
    let n = line_quadrature(h, f.band());
    let lhs = quad.integrate(|y| eta.evaluate(y) * line_integral(|z| f.evaluate(z), &(y * x), h, n));
    let rhs = radon(&convolve(eta, f)?, x, h)?;
    Ok((lhs - rhs).norm())
}

/// `⟨Rf(·,γ), g⟩` in the unconjugated pairing, through the spectral field.
pub fn radon_pair(f: &SpectralFunction, g: &SpectralFunction, h: &OneParamHom) -> Result<Complex64> {
    pairing(&radon_field(f, h)?, g)
}

/// Radon values of one function on a list of geodesics.
#[derive(Clone, Debug, PartialEq)]
pub struct RadonSampleSet {
    pub group: GroupDescriptor,
    pub band: Band,
    pub geodesics: Vec<ClosedGeodesic>,
    pub values: Vec<Complex64>,
    /// Line-quadrature size used for each geodesic.
    pub line_nodes: Vec<usize>,
}

impl RadonSampleSet {
    /// Evaluates `Rf` on every geodesic; values are indexed by position.
    pub fn sample(f: &SpectralFunction, geodesics: Vec<ClosedGeodesic>) -> Result<Self> {
        for c in &geodesics {
            f.group().ensure_same(&c.group())?;
        }
        let values = geodesics
            .par_iter()
            .map(|c| radon_geodesic(f, c))
            .collect::<Result<Vec<_>>>()?;
        let line_nodes = geodesics
            .iter()
            .map(|c| line_quadrature(&c.hom, f.band()))
            .collect();
        Ok(RadonSampleSet {
            group: f.group().clone(),
            band: f.band(),
            geodesics,
            values,
            line_nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Writes `geodesic, base, hom, re, im` rows; base and hom are JSON.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        if self.geodesics.len() != self.values.len() {
            return Err(Error::InvalidArgument("sample count does not match geodesics".into()));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["geodesic", "base", "hom", "re", "im"])?;
        for (i, (c, v)) in self.geodesics.iter().zip(&self.values).enumerate() {
            w.write_record([
                i.to_string(),
                serde_json::to_string(&c.base)?,
                serde_json::to_string(&c.hom)?,
                format_float(v.re),
                format_float(v.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
