//! Fourier analysis on compact groups at a fixed band limit.
//!
//! A [`SpectralFunction`] stores one `dim ρ × dim ρ` coefficient block per
//! irrep in the *analysis* convention
//!
//! ```text
//! Â(ρ) = ∫ f(x) ρ(x)† dx,        f(x) = Σ_ρ dim ρ · tr(ρ(x) Â(ρ)).
//! ```
//!
//! With this convention [`plancherel_pair`] is the conjugated `L²` inner
//! product. The unconjugated transform `∫ f(x) ρ(x) dx` together with the
//! unconjugated pairing `⟨f, g⟩ = ∫ f g dx` is available as
//! [`bilinear_fourier`] and [`pairing`]; the Radon identities are stated in
//! that form. The two transforms are related by
//! `bilinear_fourier(f, ρ) = analyze(conj f)(ρ)†`.
//!
//! Distributions are modelled by [`DiracCombination`]: finitely many weighted
//! point masses plus an optional band-limited density.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{haar_quadrature, Band, GroupDescriptor, GroupPoint, HaarQuadrature};
use crate::irreps::{dual_enumerate, rep_matrices, Irrep, SpinFrame};

const CHUNK: usize = 64;

type Block = DMatrix<Complex64>;

/// Largest entry modulus.
pub fn max_entry(m: &Block) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Σ_x w(x) f(x) ρ(x)` (or `ρ(x)†` when `adjoint`) for every irrep.
///
/// Chunks are reduced in node order, so the result is independent of the
/// thread count.
fn quadrature_blocks<F>(quad: &HaarQuadrature, irreps: &[Irrep], f: F, adjoint: bool) -> Vec<Block>
where
    F: Fn(&GroupPoint) -> Complex64 + Sync,
{
    let zeros = || -> Vec<Block> { irreps.iter().map(|r| Block::zeros(r.dim(), r.dim())).collect() };
    let partials: Vec<Vec<Block>> = quad
        .nodes()
        .par_chunks(CHUNK)
        .zip(quad.weights().par_chunks(CHUNK))
        .map(|(nodes, weights)| {
            let mut acc = zeros();
            for (x, w) in nodes.iter().zip(weights) {
                let value = f(x) * *w;
                if value == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (slot, m) in acc.iter_mut().zip(rep_matrices(irreps, x)) {
                    if adjoint {
                        *slot += m.adjoint() * value;
                    } else {
                        *slot += m * value;
                    }
                }
            }
            acc
        })
        .collect();
    partials.into_iter().fold(zeros(), |mut total, part| {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
        total
    })
}

/// A band-limited function stored by its analysis coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFunction {
    group: GroupDescriptor,
    band: Band,
    coeffs: BTreeMap<Irrep, Block>,
    layout: Option<ProductLayout>,
}

/// Distinct factor irreps of a product function, and for every coefficient
/// block the position of each of its factors in those lists.
#[derive(Clone, Debug, PartialEq)]
struct ProductLayout {
    factors: Vec<Vec<Irrep>>,
    index: Vec<Vec<usize>>,
}

impl ProductLayout {
    fn new<'a>(g: &GroupDescriptor, irreps: impl Iterator<Item = &'a Irrep> + Clone) -> Option<Self> {
        let GroupDescriptor::Product { factors: groups } = g else {
            return None;
        };
        let factors: Vec<Vec<Irrep>> = (0..groups.len())
            .map(|i| {
                let mut distinct: Vec<Irrep> = irreps
                    .clone()
                    .filter_map(|r| match r {
                        Irrep::Product { factors } => factors.get(i).cloned(),
                        _ => None,
                    })
                    .collect();
                distinct.sort();
                distinct.dedup();
                distinct
            })
            .collect();
        let index = irreps
            .map(|r| {
                let Irrep::Product { factors: parts } = r else {
                    unreachable!("product groups carry product irreps")
                };
                parts
                    .iter()
                    .zip(&factors)
                    .map(|(p, list)| list.binary_search(p).expect("factor listed"))
                    .collect()
            })
            .collect();
        Some(ProductLayout { factors, index })
    }
}

impl SpectralFunction {
    /// The zero function; every irrep of band `≤ band` gets a zero block.
    pub fn zeros(g: &GroupDescriptor, band: Band) -> Result<Self> {
        g.validate()?;
        let coeffs: BTreeMap<Irrep, Block> = dual_enumerate(g, band)
            .into_iter()
            .map(|r| {
                let d = r.dim();
                (r, Block::zeros(d, d))
            })
            .collect();
        Ok(SpectralFunction {
            layout: ProductLayout::new(g, coeffs.keys()),
            group: g.clone(),
            band,
            coeffs,
        })
    }

    pub fn constant(g: &GroupDescriptor, c: Complex64) -> Result<Self> {
        let mut f = SpectralFunction::zeros(g, Band::ZERO)?;
        f.coeffs.insert(Irrep::trivial(g), Block::from_element(1, 1, c));
        Ok(f)
    }

    /// Builds a function from explicit blocks; unspecified blocks are zero.
    pub fn from_coefficients<I>(g: &GroupDescriptor, band: Band, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Irrep, Block)>,
    {
        let mut f = SpectralFunction::zeros(g, band)?;
        for (rho, block) in entries {
            f.set_coefficient(rho, block)?;
        }
        Ok(f)
    }

    pub fn set_coefficient(&mut self, rho: Irrep, block: Block) -> Result<()> {
        rho.ensure_belongs(&self.group)?;
        if rho.band() > self.band {
            return Err(Error::InvalidBand(format!(
                "irrep {rho} exceeds band {}",
                self.band
            )));
        }
        let d = rho.dim();
        if block.nrows() != d || block.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "block for {rho} must be {d}×{d}, got {}×{}",
                block.nrows(),
                block.ncols()
            )));
        }
        self.coeffs.insert(rho, block);
        Ok(())
    }

    /// Random coefficients with unit `L²` norm.
    pub fn random<R: Rng + ?Sized>(g: &GroupDescriptor, band: Band, rng: &mut R) -> Result<Self> {
        let mut f = SpectralFunction::zeros(g, band)?;
        for block in f.coeffs.values_mut() {
            for z in block.iter_mut() {
                *z = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
            }
        }
        let norm = f.l2_norm();
        Ok(f.scale(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn coefficient(&self, rho: &Irrep) -> Option<&Block> {
        self.coeffs.get(rho)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&Irrep, &Block)> {
        self.coeffs.iter()
    }

    pub fn irreps(&self) -> Vec<Irrep> {
        self.coeffs.keys().cloned().collect()
    }

    /// `f(x) = Σ dim ρ · tr(ρ(x) Â(ρ))`.
    pub fn evaluate(&self, x: &GroupPoint) -> Complex64 {
        match x {
            GroupPoint::Torus(angles) => return self.evaluate_torus(angles),
            GroupPoint::Product(points) => return self.evaluate_product(points),
            _ => {}
        }
        let (GroupPoint::Su2(q) | GroupPoint::So3(q)) = x else {
            unreachable!("torus and product points handled above")
        };
        let frame = SpinFrame::new(q, self.band.twice());
        self.coeffs
            .iter()
            .map(|(rho, a)| {
                let Irrep::Spin { j2 } = rho else {
                    unreachable!("spin groups carry spin irreps")
                };
                let n = a.nrows();
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    for c in 0..n {
                        let entry = a[(c, r)];
                        if entry != Complex64::new(0.0, 0.0) {
                            acc += frame.entry(*j2, r, c) * entry;
                        }
                    }
                }
                acc * n as f64
            })
            .sum()
    }

    /// Characters are products of per-coordinate powers `e^{i m θ}`.
    fn evaluate_torus(&self, angles: &[f64]) -> Complex64 {
        let top = self.band.floor() as i64;
        let powers: Vec<Vec<Complex64>> = angles
            .iter()
            .map(|a| (-top..=top).map(|m| Complex64::from_polar(1.0, m as f64 * a)).collect())
            .collect();
        self.coeffs
            .iter()
            .map(|(rho, a)| {
                let Irrep::Character { m } = rho else {
                    unreachable!("torus functions carry characters")
                };
                m.iter()
                    .zip(&powers)
                    .fold(a[(0, 0)], |acc, (m, p)| acc * p[(m + top) as usize])
            })
            .sum()
    }

    /// `tr((M₁ ⊗ ⋯ ⊗ M_k) A)` from shared factor matrices, without forming
    /// the Kronecker product.
    fn evaluate_product(&self, points: &[GroupPoint]) -> Complex64 {
        let layout = self.layout.as_ref().expect("product functions carry a layout");
        let factor_mats: Vec<Vec<Block>> = layout
            .factors
            .iter()
            .zip(points)
            .map(|(list, p)| rep_matrices(list, p))
            .collect();
        let mut cur: Vec<Complex64> = Vec::new();
        let mut next: Vec<Complex64> = Vec::new();
        let mut total = Complex64::new(0.0, 0.0);
        for (a, index) in self.coeffs.values().zip(&layout.index) {
            // Contract the last factor repeatedly: with `A` of size `(R·m)²`,
            // `B[jr, ir] = Σ M[ik, jk] A[jr·m + jk, ir·m + ik]`. Storage is
            // column-major.
            cur.clear();
            cur.extend_from_slice(a.as_slice());
            let mut size = a.nrows();
            for (i, mats) in index.iter().zip(&factor_mats).rev() {
                let m = &mats[*i];
                let md = m.nrows();
                let rest = size / md;
                next.clear();
                next.resize(rest * rest, Complex64::new(0.0, 0.0));
                for ir in 0..rest {
                    for ik in 0..md {
                        let col = &cur[(ir * md + ik) * size..(ir * md + ik + 1) * size];
                        for jk in 0..md {
                            let w = m[(ik, jk)];
                            for jr in 0..rest {
                                next[ir * rest + jr] += w * col[jr * md + jk];
                            }
                        }
                    }
                }
                std::mem::swap(&mut cur, &mut next);
                size = rest;
            }
            total += cur[0] * a.nrows() as f64;
        }
        total
    }

    /// Values at many points, in order.
    pub fn evaluate_many(&self, points: &[GroupPoint]) -> Vec<Complex64> {
        points.par_iter().map(|x| self.evaluate(x)).collect()
    }

    /// `∫ f dx`.
    pub fn mean(&self) -> Complex64 {
        self.coeffs
            .get(&Irrep::trivial(&self.group))
            .map_or(Complex64::new(0.0, 0.0), |b| b[(0, 0)])
    }

    /// `‖f‖_{L²}` from the coefficients.
    pub fn l2_norm(&self) -> f64 {
        plancherel_pair(self, self).re.max(0.0).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for b in out.coeffs.values_mut() {
            *b *= c;
        }
        out
    }

    /// Sum of two functions on the same group; the band is the larger one.
    pub fn add(&self, other: &SpectralFunction) -> Result<Self> {
        self.group.ensure_same(&other.group)?;
        let mut out = self.with_band(self.band.max(other.band))?;
        for (rho, b) in &other.coeffs {
            *out.coeffs.get_mut(rho).expect("band covers both") += b;
        }
        Ok(out)
    }

    /// Same function represented at another band. Shrinking drops blocks.
    pub fn with_band(&self, band: Band) -> Result<Self> {
        let mut out = SpectralFunction::zeros(&self.group, band)?;
        for (rho, b) in &self.coeffs {
            if let Some(slot) = out.coeffs.get_mut(rho) {
                *slot = b.clone();
            }
        }
        Ok(out)
    }

    /// `x ↦ f(x·h)`.
    pub fn right_translate(&self, h: &GroupPoint) -> Result<Self> {
        self.group.ensure_contains(h)?;
        let irreps = self.irreps();
        let mats = rep_matrices(&irreps, h);
        let mut out = self.clone();
        for (m, b) in mats.iter().zip(out.coeffs.values_mut()) {
            *b = m * &*b;
        }
        Ok(out)
    }

    /// `x ↦ f(h·x)`.
    pub fn left_translate(&self, h: &GroupPoint) -> Result<Self> {
        self.group.ensure_contains(h)?;
        let irreps = self.irreps();
        let mats = rep_matrices(&irreps, h);
        let mut out = self.clone();
        for (m, b) in mats.iter().zip(out.coeffs.values_mut()) {
            *b = &*b * m;
        }
        Ok(out)
    }

    /// Largest entrywise coefficient difference (missing blocks count as zero).
    pub fn max_coefficient_diff(&self, other: &SpectralFunction) -> f64 {
        let mut worst: f64 = 0.0;
        for (rho, a) in &self.coeffs {
            let d = match other.coeffs.get(rho) {
                Some(b) => (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max),
                None => a.iter().map(|z| z.norm()).fold(0.0, f64::max),
            };
            worst = worst.max(d);
        }
        for (rho, b) in &other.coeffs {
            if !self.coeffs.contains_key(rho) {
                worst = worst.max(b.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Reinterprets a function on SO(3) as the function `f∘π` on SU(2).
    pub fn lift_to_su2(&self) -> Result<Self> {
        if self.group != GroupDescriptor::So3 {
            return Err(Error::DescriptorMismatch {
                expected: GroupDescriptor::So3.to_string(),
                found: self.group.to_string(),
            });
        }
        let mut out = SpectralFunction::zeros(&GroupDescriptor::Su2, Band::new(self.band.floor()))?;
        for (rho, b) in &self.coeffs {
            out.coeffs.insert(rho.clone(), b.clone());
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let coefficients: Vec<CoefficientBlock> = self
            .coeffs
            .iter()
            .map(|(rho, b)| CoefficientBlock {
                irrep: rho.clone(),
                rows: b.nrows(),
                cols: b.ncols(),
                re: (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| b[(i, j)].re).collect()).collect(),
                im: (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| b[(i, j)].im).collect()).collect(),
            })
            .collect();
        serde_json::json!({
            "group": self.group,
            "band": self.band,
            "coefficients": coefficients,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let group: GroupDescriptor = serde_json::from_value(value["group"].clone())?;
        let band: Band = serde_json::from_value(value["band"].clone())?;
        let blocks: Vec<CoefficientBlock> = serde_json::from_value(value["coefficients"].clone())?;
        SpectralFunction::from_coefficients(&group, band, blocks_to_entries(blocks)?)
    }

    /// Writes `irrep-id, i, j, re, im` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["irrep", "i", "j", "re", "im"])?;
        for (rho, b) in &self.coeffs {
            let id = rho.id();
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    w.write_record([
                        id.clone(),
                        i.to_string(),
                        j.to_string(),
                        format_float(b[(i, j)].re),
                        format_float(b[(i, j)].im),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One coefficient block in the JSON exchange format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientBlock {
    pub irrep: Irrep,
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Converts exchange-format blocks into matrices, checking their shapes.
pub fn blocks_to_entries(blocks: Vec<CoefficientBlock>) -> Result<Vec<(Irrep, Block)>> {
    blocks
        .into_iter()
        .map(|b| {
            let shape_ok = b.re.len() == b.rows
                && b.im.len() == b.rows
                && b.re.iter().chain(&b.im).all(|row| row.len() == b.cols);
            if !shape_ok {
                return Err(Error::InvalidArgument(format!(
                    "block for {} does not match its declared {}×{} shape",
                    b.irrep, b.rows, b.cols
                )));
            }
            let m = Block::from_fn(b.rows, b.cols, |i, j| Complex64::new(b.re[i][j], b.im[i][j]));
            Ok((b.irrep, m))
        })
        .collect()
}

/// Analysis coefficients of `f` at band `band`, exact when `f` is band-limited
/// to `band`.
pub fn analyze<F>(g: &GroupDescriptor, band: Band, f: F) -> Result<SpectralFunction>
where
    F: Fn(&GroupPoint) -> Complex64 + Sync,
{
    let quad = haar_quadrature(g, band)?;
    Ok(analyze_with(&quad, f))
}

/// Analysis with a prebuilt quadrature.
pub fn analyze_with<F>(quad: &HaarQuadrature, f: F) -> SpectralFunction
where
    F: Fn(&GroupPoint) -> Complex64 + Sync,
{
    let irreps = dual_enumerate(quad.group(), quad.band());
    let blocks = quadrature_blocks(quad, &irreps, f, true);
    let coeffs: BTreeMap<Irrep, Block> = irreps.into_iter().zip(blocks).collect();
    SpectralFunction {
        layout: ProductLayout::new(quad.group(), coeffs.keys()),
        group: quad.group().clone(),
        band: quad.band(),
        coeffs,
    }
}

/// `∫ f(x) ρ(x) dx` for every irrep of band `≤ band`.
pub fn bilinear_table(f: &SpectralFunction, band: Band) -> Result<BTreeMap<Irrep, Block>> {
    let quad = haar_quadrature(&f.group, band.max(f.band))?;
    let irreps = dual_enumerate(&f.group, band);
    let blocks = quadrature_blocks(&quad, &irreps, |x| f.evaluate(x), false);
    Ok(irreps.into_iter().zip(blocks).collect())
}

/// The unconjugated transform `∫ f(x) ρ(x) dx`.
pub fn bilinear_fourier(f: &SpectralFunction, rho: &Irrep) -> Result<Block> {
    rho.ensure_belongs(&f.group)?;
    let quad = haar_quadrature(&f.group, rho.band().max(f.band))?;
    let blocks = quadrature_blocks(&quad, std::slice::from_ref(rho), |x| f.evaluate(x), false);
    Ok(blocks.into_iter().next().expect("one block"))
}

/// `Σ_ρ dim ρ · tr(F̂(ρ) Ĝ(ρ)†) = ∫ f·conj(g) dx`.
pub fn plancherel_pair(f: &SpectralFunction, g: &SpectralFunction) -> Complex64 {
    f.coeffs
        .iter()
        .filter_map(|(rho, a)| g.coeffs.get(rho).map(|b| (rho, a, b)))
        .map(|(rho, a, b)| {
            let s: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
            s * rho.dim() as f64
        })
        .sum()
}

/// The unconjugated pairing `⟨f, g⟩ = ∫ f g dx`, by quadrature.
pub fn pairing(f: &SpectralFunction, g: &SpectralFunction) -> Result<Complex64> {
    f.group.ensure_same(&g.group)?;
    let quad = haar_quadrature(&f.group, f.band.max(g.band))?;
    Ok(quad.integrate(|x| f.evaluate(x) * g.evaluate(x)))
}

/// `(f ∗ g)(x) = ∫ f(y) g(yx) dy`; the result has band `min(band f, band g)`.
///
/// Spectrally `(f ∗ g)^(σ) = Ĝ(σ) · ∫ f σ dy`.
pub fn convolve(f: &SpectralFunction, g: &SpectralFunction) -> Result<SpectralFunction> {
    f.group.ensure_same(&g.group)?;
    let band = f.band.min(g.band);
    let ft = bilinear_table(f, band)?;
    let mut out = SpectralFunction::zeros(&f.group, band)?;
    for (rho, slot) in out.coeffs.iter_mut() {
        *slot = &g.coeffs[rho] * &ft[rho];
    }
    Ok(out)
}

/// Sharp spectral mollifier: `⟨η_k, f⟩ = f(e)` for every `f` of band `≤ k`.
///
/// `η_k(x) = Σ_{band ρ ≤ k} dim ρ · conj(tr ρ(x))`, which has the identity
/// block on every irrep.
pub fn mollifier(g: &GroupDescriptor, k: Band) -> Result<SpectralFunction> {
    let mut out = SpectralFunction::zeros(g, k)?;
    for (rho, slot) in out.coeffs.iter_mut() {
        *slot = Block::identity(rho.dim(), rho.dim());
    }
    Ok(out)
}

/// A finite combination of point masses plus an optional band-limited density.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracCombination {
    group: GroupDescriptor,
    atoms: Vec<(GroupPoint, Complex64)>,
    density: Option<SpectralFunction>,
}

impl DiracCombination {
    pub fn new(g: &GroupDescriptor) -> Result<Self> {
        g.validate()?;
        Ok(DiracCombination {
            group: g.clone(),
            atoms: Vec::new(),
            density: None,
        })
    }

    /// `δ_x`.
    pub fn delta(x: &GroupPoint) -> Self {
        DiracCombination {
            group: x.descriptor(),
            atoms: vec![(x.clone(), Complex64::new(1.0, 0.0))],
            density: None,
        }
    }

    pub fn with_atom(mut self, x: GroupPoint, weight: Complex64) -> Result<Self> {
        self.group.ensure_contains(&x)?;
        self.atoms.push((x, weight));
        Ok(self)
    }

    pub fn with_density(mut self, density: SpectralFunction) -> Result<Self> {
        self.group.ensure_same(density.group())?;
        self.density = Some(density);
        Ok(self)
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn atoms(&self) -> &[(GroupPoint, Complex64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&SpectralFunction> {
        self.density.as_ref()
    }

    /// `⟨d, g⟩ = Σ wₐ g(xₐ) + ∫ density · g`.
    pub fn pair(&self, g: &SpectralFunction) -> Result<Complex64> {
        self.group.ensure_same(g.group())?;
        let atoms: Complex64 = self.atoms.iter().map(|(x, w)| w * g.evaluate(x)).sum();
        let density = match &self.density {
            Some(d) => pairing(d, g)?,
            None => Complex64::new(0.0, 0.0),
        };
        Ok(atoms + density)
    }

    /// `Σ wₐ ρ(xₐ) + ∫ density · ρ`.
    pub fn bilinear_fourier(&self, rho: &Irrep) -> Result<Block> {
        rho.ensure_belongs(&self.group)?;
        let d = rho.dim();
        let mut out = Block::zeros(d, d);
        for (x, w) in &self.atoms {
            out += rep_matrices(std::slice::from_ref(rho), x).remove(0) * *w;
        }
        if let Some(density) = &self.density {
            out += bilinear_fourier(density, rho)?;
        }
        Ok(out)
    }
}

/// The weak convolution `η ∗ d`, defined by `⟨η ∗ d, g⟩ = ⟨d, η ∗ g⟩`.
///
/// For `d = δ_{x₀}` this is `x ↦ η(x·x₀⁻¹)`. It agrees with [`convolve`] on
/// densities only when `η(y⁻¹) = η(y)`, which holds for [`mollifier`].
pub fn convolve_weak(eta: &SpectralFunction, d: &DiracCombination) -> Result<SpectralFunction> {
    eta.group.ensure_same(&d.group)?;
    let irreps = eta.irreps();
    let mut out = SpectralFunction::zeros(&eta.group, eta.band)?;
    for (x, w) in &d.atoms {
        let mats = rep_matrices(&irreps, x);
        for ((rho, slot), m) in out.coeffs.iter_mut().zip(mats) {
            *slot += m.adjoint() * &eta.coeffs[rho] * *w;
        }
    }
    if let Some(density) = &d.density {
        for (rho, slot) in out.coeffs.iter_mut() {
            if let Some(a) = density.coeffs.get(rho) {
                *slot += a * &eta.coeffs[rho];
            }
        }
    }
    Ok(out)
}
