//! Closed geodesics as translates of circle homomorphisms.
//!
//! With a bi-invariant metric every closed geodesic is `t ↦ x·γ(t)` for a
//! base point `x` and a nontrivial homomorphism `γ: R/Z → G`. Time is
//! normalized so that every geodesic has period one; minimal periods are not
//! enforced.

use std::f64::consts::{PI, TAU};

use nalgebra::{Quaternion, Vector3};
use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{Band, GroupDescriptor, GroupPoint};
use crate::irreps::Irrep;

/// A nontrivial homomorphism from the circle `R/Z` into a supported group.
#[derive(Clone, Debug, PartialEq)]
pub enum OneParamHom {
    /// `t ↦ 2π k t`.
    Torus { k: Vec<i64> },
    /// `t ↦ cos(2πwt) + u sin(2πwt)` for a unit pure quaternion `u`.
    Su2 { axis: [f64; 3], w: i64 },
    /// Rotation by `2πwt` about `axis`.
    So3 { axis: [f64; 3], w: i64 },
    Product(Vec<FactorHom>),
}

/// One factor of a product homomorphism.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorHom {
    /// The factor stays at the identity.
    Constant(GroupDescriptor),
    Moving(OneParamHom),
}

impl FactorHom {
    fn group(&self) -> GroupDescriptor {
        match self {
            FactorHom::Constant(g) => g.clone(),
            FactorHom::Moving(h) => h.group(),
        }
    }
}

fn unit_axis(axis: [f64; 3]) -> Result<[f64; 3]> {
    let v = Vector3::from(axis);
    let n = v.norm();
    if !n.is_finite() || n < 1e-12 {
        return Err(Error::InvalidHom(format!("axis {axis:?} has no direction")));
    }
    Ok((v / n).into())
}

impl OneParamHom {
    pub fn torus(k: Vec<i64>) -> Result<Self> {
        if k.is_empty() || k.iter().all(|x| *x == 0) {
            return Err(Error::InvalidHom(format!("winding {k:?} is trivial")));
        }
        Ok(OneParamHom::Torus { k })
    }

    pub fn su2(axis: [f64; 3], w: i64) -> Result<Self> {
        if w == 0 {
            return Err(Error::InvalidHom("winding 0 is trivial".into()));
        }
        Ok(OneParamHom::Su2 {
            axis: unit_axis(axis)?,
            w,
        })
    }

    pub fn so3(axis: [f64; 3], w: i64) -> Result<Self> {
        if w == 0 {
            return Err(Error::InvalidHom("winding 0 is trivial".into()));
        }
        Ok(OneParamHom::So3 {
            axis: unit_axis(axis)?,
            w,
        })
    }

    pub fn product(factors: Vec<FactorHom>) -> Result<Self> {
        if !factors.iter().any(|f| matches!(f, FactorHom::Moving(_))) {
            return Err(Error::InvalidHom(
                "product homomorphism with every factor constant".into(),
            ));
        }
        Ok(OneParamHom::Product(factors))
    }

    /// A fixed homomorphism of `g`: first coordinate direction on tori, the
    /// diagonal circle (axis `i`) with winding one on SU(2)/SO(3), and the
    /// first factor on products.
    pub fn canonical(g: &GroupDescriptor) -> Self {
        match g {
            GroupDescriptor::Torus { n } => {
                let mut k = vec![0; *n];
                k[0] = 1;
                OneParamHom::Torus { k }
            }
            GroupDescriptor::Su2 => OneParamHom::Su2 {
                axis: [1.0, 0.0, 0.0],
                w: 1,
            },
            GroupDescriptor::So3 => OneParamHom::So3 {
                axis: [1.0, 0.0, 0.0],
                w: 1,
            },
            GroupDescriptor::Product { factors } => OneParamHom::Product(
                factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        if i == 0 {
                            FactorHom::Moving(OneParamHom::canonical(f))
                        } else {
                            FactorHom::Constant(f.clone())
                        }
                    })
                    .collect(),
            ),
        }
    }

    pub fn group(&self) -> GroupDescriptor {
        match self {
            OneParamHom::Torus { k } => GroupDescriptor::torus(k.len()),
            OneParamHom::Su2 { .. } => GroupDescriptor::Su2,
            OneParamHom::So3 { .. } => GroupDescriptor::So3,
            OneParamHom::Product(f) => {
                GroupDescriptor::product(f.iter().map(FactorHom::group).collect())
            }
        }
    }

    /// `γ(t)`, with `t` taken modulo one.
    pub fn point(&self, t: f64) -> GroupPoint {
        let t = t.rem_euclid(1.0);
        match self {
            OneParamHom::Torus { k } => {
                GroupPoint::torus(k.iter().map(|k| TAU * *k as f64 * t).collect())
            }
            OneParamHom::Su2 { axis, w } => GroupPoint::su2(axis_quaternion(axis, TAU * *w as f64 * t)),
            OneParamHom::So3 { axis, w } => GroupPoint::so3(axis_quaternion(axis, PI * *w as f64 * t)),
            OneParamHom::Product(factors) => GroupPoint::Product(
                factors
                    .iter()
                    .map(|f| match f {
                        FactorHom::Constant(g) => g.identity(),
                        FactorHom::Moving(h) => h.point(t),
                    })
                    .collect(),
            ),
        }
    }

    /// The reversed homomorphism `t ↦ γ(t)⁻¹`.
    pub fn reverse(&self) -> Self {
        match self {
            OneParamHom::Torus { k } => OneParamHom::Torus {
                k: k.iter().map(|x| -x).collect(),
            },
            OneParamHom::Su2 { axis, w } => OneParamHom::Su2 { axis: *axis, w: -w },
            OneParamHom::So3 { axis, w } => OneParamHom::So3 { axis: *axis, w: -w },
            OneParamHom::Product(f) => OneParamHom::Product(
                f.iter()
                    .map(|f| match f {
                        FactorHom::Constant(g) => FactorHom::Constant(g.clone()),
                        FactorHom::Moving(h) => FactorHom::Moving(h.reverse()),
                    })
                    .collect(),
            ),
        }
    }

    /// Same image traversed `c` times.
    pub fn scaled(&self, c: i64) -> Self {
        match self {
            OneParamHom::Torus { k } => OneParamHom::Torus {
                k: k.iter().map(|x| c * x).collect(),
            },
            OneParamHom::Su2 { axis, w } => OneParamHom::Su2 { axis: *axis, w: c * w },
            OneParamHom::So3 { axis, w } => OneParamHom::So3 { axis: *axis, w: c * w },
            OneParamHom::Product(f) => OneParamHom::Product(
                f.iter()
                    .map(|f| match f {
                        FactorHom::Constant(g) => FactorHom::Constant(g.clone()),
                        FactorHom::Moving(h) => FactorHom::Moving(h.scaled(c)),
                    })
                    .collect(),
            ),
        }
    }

    /// Upper bound on the frequencies of `t ↦ f(xγ(t))` for band-limited `f`.
    pub fn max_frequency(&self, band: Band) -> u64 {
        match self {
            OneParamHom::Torus { k } => {
                u64::from(band.floor()) * k.iter().map(|x| x.unsigned_abs()).sum::<u64>()
            }
            OneParamHom::Su2 { w, .. } => u64::from(band.twice()) * w.unsigned_abs(),
            OneParamHom::So3 { w, .. } => 2 * u64::from(band.floor()) * w.unsigned_abs(),
            OneParamHom::Product(f) => f
                .iter()
                .map(|f| match f {
                    FactorHom::Constant(_) => 0,
                    FactorHom::Moving(h) => h.max_frequency(band),
                })
                .sum(),
        }
    }

    pub(crate) fn to_wire(&self) -> HomWire {
        match self {
            OneParamHom::Torus { k } => HomWire::Winding { k: k.clone() },
            OneParamHom::Su2 { axis, w } | OneParamHom::So3 { axis, w } => {
                HomWire::Axis { axis: *axis, w: *w }
            }
            OneParamHom::Product(f) => HomWire::Factors {
                factors: f
                    .iter()
                    .map(|f| match f {
                        FactorHom::Constant(_) => None,
                        FactorHom::Moving(h) => Some(h.to_wire()),
                    })
                    .collect(),
            },
        }
    }

    pub(crate) fn from_wire(wire: HomWire, g: &GroupDescriptor) -> Result<Self> {
        match (wire, g) {
            (HomWire::Winding { k }, GroupDescriptor::Torus { n }) if k.len() == *n => {
                OneParamHom::torus(k)
            }
            (HomWire::Axis { axis, w }, GroupDescriptor::Su2) => OneParamHom::su2(axis, w),
            (HomWire::Axis { axis, w }, GroupDescriptor::So3) => OneParamHom::so3(axis, w),
            (HomWire::Factors { factors }, GroupDescriptor::Product { factors: groups })
                if factors.len() == groups.len() =>
            {
                let resolved = factors
                    .into_iter()
                    .zip(groups)
                    .map(|(f, g)| match f {
                        None => Ok(FactorHom::Constant(g.clone())),
                        Some(w) => OneParamHom::from_wire(w, g).map(FactorHom::Moving),
                    })
                    .collect::<Result<Vec<_>>>()?;
                OneParamHom::product(resolved)
            }
            (wire, g) => Err(Error::InvalidHom(format!(
                "{} does not describe a homomorphism into {g}",
                serde_json::to_string(&wire).unwrap_or_default()
            ))),
        }
    }

    /// Parses `{"k":[..]}`, `{"axis":[x,y,z],"w":n}` or `{"factors":[.., null]}`
    /// against the target group.
    pub fn from_json(value: &serde_json::Value, g: &GroupDescriptor) -> Result<Self> {
        let wire: HomWire = serde_json::from_value(value.clone())?;
        OneParamHom::from_wire(wire, g)
    }
}

impl Serialize for OneParamHom {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_wire().serialize(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum HomWire {
    Winding { k: Vec<i64> },
    Axis { axis: [f64; 3], w: i64 },
    Factors { factors: Vec<Option<HomWire>> },
}

/// `cos θ + u sin θ`.
fn axis_quaternion(axis: &[f64; 3], theta: f64) -> Quaternion<f64> {
    let (s, c) = theta.sin_cos();
    Quaternion::new(c, s * axis[0], s * axis[1], s * axis[2])
}

/// A closed geodesic `t ↦ base·hom(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedGeodesic {
    pub base: GroupPoint,
    pub hom: OneParamHom,
}

#[derive(Serialize, Deserialize)]
struct GeodesicWire {
    #[serde(flatten)]
    hom: HomWire,
    base: GroupPoint,
}

impl Serialize for ClosedGeodesic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GeodesicWire {
            hom: self.hom.to_wire(),
            base: self.base.clone(),
        }
        .serialize(s)
    }
}

impl ClosedGeodesic {
    pub fn new(base: GroupPoint, hom: OneParamHom) -> Result<Self> {
        hom.group().ensure_contains(&base)?;
        Ok(ClosedGeodesic { base, hom })
    }

    /// The geodesic through the identity.
    pub fn through_identity(hom: OneParamHom) -> Self {
        ClosedGeodesic {
            base: hom.group().identity(),
            hom,
        }
    }

    pub fn group(&self) -> GroupDescriptor {
        self.hom.group()
    }

    pub fn reverse(&self) -> Self {
        ClosedGeodesic {
            base: self.base.clone(),
            hom: self.hom.reverse(),
        }
    }

    pub fn from_json(value: &serde_json::Value, g: &GroupDescriptor) -> Result<Self> {
        let wire: GeodesicWire = serde_json::from_value(value.clone())?;
        let hom = OneParamHom::from_wire(wire.hom, g)?;
        ClosedGeodesic::new(wire.base, hom)
    }
}

/// `x·γ(t mod 1)`.
pub fn geodesic_point(c: &ClosedGeodesic, t: f64) -> GroupPoint {
    &c.base * &c.hom.point(t)
}

/// Number of uniform nodes on `[0, 1)` that integrate `t ↦ f(xγ(t))` exactly
/// for every `f` of band at most `band`.
pub fn line_quadrature(h: &OneParamHom, band: Band) -> usize {
    2 * h.max_frequency(band) as usize + 1
}

/// `(1/N) Σ f(x·γ(i/N))`.
pub fn line_integral<F>(f: F, base: &GroupPoint, h: &OneParamHom, nodes: usize) -> Complex64
where
    F: Fn(&GroupPoint) -> Complex64,
{
    let n = nodes.max(1);
    let sum: Complex64 = (0..n)
        .map(|i| f(&(base * &h.point(i as f64 / n as f64))))
        .sum();
    sum / n as f64
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn is_primitive(k: &[i64]) -> bool {
    k.iter().fold(0, |g, x| gcd(g, x.unsigned_abs())) == 1
}

/// Lexicographically smallest primitive `k ⊥ m` with entries bounded by
/// `max|mᵢ|` and first nonzero entry positive.
fn torus_kernel_direction(m: &[i64]) -> Option<Vec<i64>> {
    let n = m.len();
    if m.iter().all(|x| *x == 0) {
        let mut k = vec![0; n];
        k[0] = 1;
        return Some(k);
    }
    if n < 2 {
        return None;
    }
    let bound = m.iter().map(|x| x.abs()).max().unwrap_or(0);
    let side = (2 * bound + 1) as usize;
    let total = side.checked_pow(n as u32)?;
    (0..total)
        .map(|mut idx| {
            let mut k = vec![0i64; n];
            for x in k.iter_mut().rev() {
                *x = (idx % side) as i64 - bound;
                idx /= side;
            }
            k
        })
        .find(|k| {
            k.iter().find(|x| **x != 0).is_some_and(|x| *x > 0)
                && is_primitive(k)
                && k.iter().zip(m).map(|(a, b)| a * b).sum::<i64>() == 0
        })
}

/// A homomorphism on which `ρ` is identically the identity matrix, when one
/// exists among the supported kinds.
pub fn kernel_geodesic(g: &GroupDescriptor, rho: &Irrep) -> Result<Option<OneParamHom>> {
    g.validate()?;
    rho.ensure_belongs(g)?;
    if rho.is_trivial() {
        return Ok(Some(OneParamHom::canonical(g)));
    }
    Ok(match (g, rho) {
        (GroupDescriptor::Torus { .. }, Irrep::Character { m }) => {
            torus_kernel_direction(m).map(|k| OneParamHom::Torus { k })
        }
        // Spin representations of SU(2) and SO(3) have finite kernels.
        (GroupDescriptor::Su2 | GroupDescriptor::So3, _) => None,
        (GroupDescriptor::Product { factors: groups }, Irrep::Product { factors: reps }) => {
            product_kernel_hom(groups, reps)
        }
        _ => unreachable!("irrep membership checked above"),
    })
}

fn product_kernel_hom(groups: &[GroupDescriptor], reps: &[Irrep]) -> Option<OneParamHom> {
    // Treat all torus factors as one joint torus.
    let mut joint = Vec::new();
    for (g, r) in groups.iter().zip(reps) {
        if let (GroupDescriptor::Torus { .. }, Irrep::Character { m }) = (g, r) {
            joint.extend_from_slice(m);
        }
    }
    if !joint.is_empty() {
        if let Some(k) = torus_kernel_direction(&joint) {
            let mut offset = 0;
            let factors = groups
                .iter()
                .map(|g| match g {
                    GroupDescriptor::Torus { n } => {
                        let part = k[offset..offset + n].to_vec();
                        offset += n;
                        if part.iter().all(|x| *x == 0) {
                            FactorHom::Constant(g.clone())
                        } else {
                            FactorHom::Moving(OneParamHom::Torus { k: part })
                        }
                    }
                    _ => FactorHom::Constant(g.clone()),
                })
                .collect();
            return Some(OneParamHom::Product(factors));
        }
    }
    let (idx, _) = groups
        .iter()
        .zip(reps)
        .enumerate()
        .find(|(_, (g, r))| !matches!(g, GroupDescriptor::Torus { .. }) && r.is_trivial())?;
    Some(OneParamHom::Product(
        groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                if i == idx {
                    FactorHom::Moving(OneParamHom::canonical(g))
                } else {
                    FactorHom::Constant(g.clone())
                }
            })
            .collect(),
    ))
}

fn random_hom<R: Rng + ?Sized>(g: &GroupDescriptor, rng: &mut R) -> OneParamHom {
    const WINDINGS: [i64; 4] = [-2, -1, 1, 2];
    match g {
        GroupDescriptor::Torus { n } => {
            let pool = winding_pool(*n);
            OneParamHom::Torus {
                k: pool.choose(rng).expect("nonempty pool").clone(),
            }
        }
        GroupDescriptor::Su2 | GroupDescriptor::So3 => {
            let axis = random_axis(rng);
            let w = *WINDINGS.choose(rng).expect("nonempty");
            if matches!(g, GroupDescriptor::Su2) {
                OneParamHom::Su2 { axis, w }
            } else {
                OneParamHom::So3 { axis, w }
            }
        }
        GroupDescriptor::Product { factors } => {
            let mut moving: Vec<bool> = factors.iter().map(|_| rng.random_bool(0.5)).collect();
            if !moving.iter().any(|m| *m) {
                let pick = rng.random_range(0..factors.len());
                moving[pick] = true;
            }
            OneParamHom::Product(
                factors
                    .iter()
                    .zip(moving)
                    .map(|(f, m)| {
                        if m {
                            FactorHom::Moving(random_hom(f, rng))
                        } else {
                            FactorHom::Constant(f.clone())
                        }
                    })
                    .collect(),
            )
        }
    }
}

/// Primitive winding vectors with entries in `[-2, 2]`.
fn winding_pool(n: usize) -> Vec<Vec<i64>> {
    let total = 5usize.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut k = vec![0i64; n];
            for x in k.iter_mut().rev() {
                *x = (idx % 5) as i64 - 2;
                idx /= 5;
            }
            k
        })
        .filter(|k| is_primitive(k))
        .collect()
}

fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        let n: f64 = v.norm();
        if n > 1e-6 {
            return (v / n).into();
        }
    }
}

/// `count` closed geodesics with Haar-distributed base points, deterministic
/// in `seed`.
pub fn random_geodesics(g: &GroupDescriptor, count: usize, seed: u64) -> Result<Vec<ClosedGeodesic>> {
    g.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("geodesic count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let hom = random_hom(g, &mut rng);
            let base = g.sample_haar(&mut rng);
            ClosedGeodesic { base, hom }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::multiply;
    use crate::irreps::{rep_matrix, dual_enumerate};
    use crate::spectral::SpectralFunction;

    fn groups() -> Vec<GroupDescriptor> {
        vec![
            GroupDescriptor::torus(1),
            GroupDescriptor::torus(3),
            GroupDescriptor::Su2,
            GroupDescriptor::So3,
            GroupDescriptor::product(vec![GroupDescriptor::Su2, GroupDescriptor::torus(1)]),
        ]
    }

    #[test]
    fn geodesic_point_examples() {
        let c = ClosedGeodesic::new(
            GroupPoint::torus(vec![0.0, 0.0]),
            OneParamHom::torus(vec![1, 2]).unwrap(),
        )
        .unwrap();
        assert!(geodesic_point(&c, 0.5).approx_eq(&GroupPoint::torus(vec![PI, 0.0]), 1e-12));

        let c = ClosedGeodesic::through_identity(OneParamHom::su2([1.0, 0.0, 0.0], 1).unwrap());
        let p = geodesic_point(&c, 0.5);
        assert!(p.approx_eq(&GroupPoint::Su2(-Quaternion::identity()), 1e-12));

        for (i, c) in random_geodesics(&GroupDescriptor::So3, 5, 3).unwrap().iter().enumerate() {
            assert!(geodesic_point(c, 0.0).approx_eq(&c.base, 1e-12), "{i}");
        }
    }

    #[test]
    fn homomorphism_and_period_laws() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for g in groups() {
            for c in random_geodesics(&g, 10, 5).unwrap() {
                let h = &c.hom;
                assert!(h.point(0.0).approx_eq(&g.identity(), 1e-12));
                assert!(h.point(1.0).approx_eq(&g.identity(), 1e-12));
                for _ in 0..5 {
                    let s: f64 = rng.random();
                    let t: f64 = rng.random();
                    let lhs = h.point(s + t);
                    let rhs = multiply(&h.point(s), &h.point(t)).unwrap();
                    assert!(lhs.approx_eq(&rhs, 1e-12), "{g}");
                }
            }
        }
    }

    #[test]
    fn reverse_examples() {
        let h = OneParamHom::torus(vec![1, -2]).unwrap();
        assert_eq!(h.reverse(), OneParamHom::torus(vec![-1, 2]).unwrap());
        let h = OneParamHom::su2([0.0, 1.0, 0.0], 3).unwrap();
        assert_eq!(h.reverse(), OneParamHom::su2([0.0, 1.0, 0.0], -3).unwrap());
        for g in groups() {
            for c in random_geodesics(&g, 4, 8).unwrap() {
                assert_eq!(c.hom.reverse().reverse(), c.hom);
            }
        }
    }

    #[test]
    fn reverse_is_pointwise_inverse_at_the_rep_level() {
        for g in groups() {
            let irreps = dual_enumerate(&g, Band::new(1));
            for c in random_geodesics(&g, 4, 9).unwrap() {
                for t in [0.1, 0.37, 0.8] {
                    for r in &irreps {
                        let a = rep_matrix(r, &c.hom.reverse().point(t)).unwrap();
                        let b = rep_matrix(r, &c.hom.point(t)).unwrap();
                        let prod = a * b;
                        let n = prod.nrows();
                        let err = crate::spectral::max_entry(&(prod - nalgebra::DMatrix::identity(n, n)));
                        assert!(err < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_homs_are_rejected() {
        assert!(OneParamHom::torus(vec![0, 0]).is_err());
        assert!(OneParamHom::su2([1.0, 0.0, 0.0], 0).is_err());
        assert!(OneParamHom::so3([0.0, 0.0, 0.0], 1).is_err());
        assert!(OneParamHom::product(vec![FactorHom::Constant(GroupDescriptor::Su2)]).is_err());
        assert!(random_geodesics(&GroupDescriptor::Su2, 0, 1).is_err());
    }

    #[test]
    fn line_quadrature_sizes() {
        let h = OneParamHom::torus(vec![1, 0]).unwrap();
        assert!(line_quadrature(&h, Band::new(2)) >= 5);
        let h = OneParamHom::su2([1.0, 0.0, 0.0], 1).unwrap();
        assert!(line_quadrature(&h, Band::new(1)) >= 5);
        let one = |_: &GroupPoint| Complex64::new(2.5, 0.0);
        let x = GroupDescriptor::Su2.identity();
        assert_eq!(line_integral(one, &x, &h, 1), Complex64::new(2.5, 0.0));
    }

    #[test]
    fn line_quadrature_is_exact_on_band_limited_functions() {
        use rand::Rng;
        for g in groups() {
            let band = Band::new(2);
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            let f = SpectralFunction::random(&g, band, &mut rng).unwrap();
            for c in random_geodesics(&g, 5, 17).unwrap() {
                let n = line_quadrature(&c.hom, band);
                let exact = line_integral(|x| f.evaluate(x), &c.base, &c.hom, n);
                let fine = line_integral(|x| f.evaluate(x), &c.base, &c.hom, 4 * n + rng.random_range(1..7));
                assert!((exact - fine).norm() < 1e-10, "{g}");
            }
        }
    }

    #[test]
    fn winding_multiples_and_orientation_give_equal_integrals() {
        let band = Band::new(2);
        for g in groups() {
            let mut rng = ChaCha8Rng::seed_from_u64(41);
            let f = SpectralFunction::random(&g, band, &mut rng).unwrap();
            for c in random_geodesics(&g, 5, 19).unwrap() {
                let base = line_integral(|x| f.evaluate(x), &c.base, &c.hom, line_quadrature(&c.hom, band));
                for h in [c.hom.scaled(2), c.hom.scaled(3), c.hom.reverse()] {
                    let v = line_integral(|x| f.evaluate(x), &c.base, &h, line_quadrature(&h, band));
                    assert!((v - base).norm() < 1e-10, "{g}");
                }
            }
        }
    }

    #[test]
    fn subgroup_homs_are_product_homs() {
        // A circle inside the torus factor of SU2×Torus(2) is a valid product hom.
        let g = GroupDescriptor::product(vec![GroupDescriptor::Su2, GroupDescriptor::torus(2)]);
        let h = OneParamHom::product(vec![
            FactorHom::Constant(GroupDescriptor::Su2),
            FactorHom::Moving(OneParamHom::torus(vec![1, 1]).unwrap()),
        ])
        .unwrap();
        assert_eq!(h.group(), g);
        let p = h.point(0.25);
        let GroupPoint::Product(parts) = &p else { panic!() };
        assert!(parts[0].approx_eq(&GroupDescriptor::Su2.identity(), 0.0));
        assert!(parts[1].approx_eq(&GroupPoint::torus(vec![PI / 2.0, PI / 2.0]), 1e-12));
    }

    #[test]
    fn kernel_geodesic_examples() {
        let t2 = GroupDescriptor::torus(2);
        let h = kernel_geodesic(&t2, &Irrep::character(vec![2, 3])).unwrap().unwrap();
        assert_eq!(h, OneParamHom::torus(vec![3, -2]).unwrap());
        let rho = Irrep::character(vec![2, 3]);
        for i in 0..7 {
            let v = rep_matrix(&rho, &h.point(i as f64 / 7.0)).unwrap();
            assert!((v[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert_eq!(
            kernel_geodesic(&GroupDescriptor::torus(1), &Irrep::character(vec![1])).unwrap(),
            None
        );
        assert_eq!(kernel_geodesic(&GroupDescriptor::Su2, &Irrep::spin(1)).unwrap(), None);
        assert_eq!(kernel_geodesic(&GroupDescriptor::So3, &Irrep::spin(2)).unwrap(), None);
        assert!(kernel_geodesic(&GroupDescriptor::So3, &Irrep::spin(1)).is_err());
        let t3 = GroupDescriptor::torus(3);
        assert_eq!(
            kernel_geodesic(&t3, &Irrep::character(vec![1, 1, 1])).unwrap().unwrap(),
            OneParamHom::torus(vec![0, 1, -1]).unwrap()
        );
    }

    #[test]
    fn kernel_geodesics_fix_every_irrep_they_are_found_for() {
        for g in [
            GroupDescriptor::torus(2),
            GroupDescriptor::torus(3),
            GroupDescriptor::product(vec![GroupDescriptor::Su2, GroupDescriptor::torus(1)]),
            GroupDescriptor::product(vec![GroupDescriptor::torus(1), GroupDescriptor::torus(1)]),
        ] {
            for rho in dual_enumerate(&g, Band::new(2)) {
                let Some(h) = kernel_geodesic(&g, &rho).unwrap() else { continue };
                for i in 0..9 {
                    let m = rep_matrix(&rho, &h.point(i as f64 / 9.0)).unwrap();
                    let n = m.nrows();
                    assert!(crate::spectral::max_entry(&(m - nalgebra::DMatrix::identity(n, n))) < 1e-12);
                }
            }
        }
        // T1×T1 behaves like T2: every character has a kernel circle.
        let g = GroupDescriptor::product(vec![GroupDescriptor::torus(1), GroupDescriptor::torus(1)]);
        for rho in dual_enumerate(&g, Band::new(2)) {
            assert!(kernel_geodesic(&g, &rho).unwrap().is_some());
        }
    }

    #[test]
    fn random_families_are_deterministic() {
        for g in groups() {
            assert_eq!(
                random_geodesics(&g, 6, 77).unwrap(),
                random_geodesics(&g, 6, 77).unwrap()
            );
        }
        for c in random_geodesics(&GroupDescriptor::So3, 5, 1).unwrap() {
            let OneParamHom::So3 { axis, .. } = c.hom else { panic!() };
            let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn geodesic_json() {
        let g = GroupDescriptor::product(vec![GroupDescriptor::torus(1), GroupDescriptor::Su2]);
        let c = ClosedGeodesic::new(
            g.identity(),
            OneParamHom::product(vec![
                FactorHom::Moving(OneParamHom::torus(vec![1]).unwrap()),
                FactorHom::Constant(GroupDescriptor::Su2),
            ])
            .unwrap(),
        )
        .unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["factors"], serde_json::json!([{"k": [1]}, null]));
        assert_eq!(ClosedGeodesic::from_json(&v, &g).unwrap(), c);
        let so3 = serde_json::json!({"axis": [0.0, 0.0, 2.0], "w": 1});
        let h = OneParamHom::from_json(&so3, &GroupDescriptor::So3).unwrap();
        assert_eq!(h, OneParamHom::so3([0.0, 0.0, 1.0], 1).unwrap());
        assert!(OneParamHom::from_json(&so3, &GroupDescriptor::torus(1)).is_err());
    }
}
