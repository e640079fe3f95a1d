//! Supported compact groups: tori, SU(2), SO(3) and finite products.
//!
//! Points of SU(2) are unit quaternions `w + xi + yj + zk`. SO(3) reuses the
//! same storage modulo sign: the stored representative always has its first
//! nonzero component (in `w, x, y, z` order) positive. Torus points are angle
//! vectors reduced to `[0, 2π)`, so the torus group law is exact addition.
//!
//! [`haar_quadrature`] builds a positive, normalized quadrature rule that is
//! exact for every product of two matrix coefficients of band at most `B`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute tolerance used for unit-scale comparisons unless a caller overrides it.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest quadrature that [`haar_quadrature`] will build.
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

/// Components below this magnitude count as zero when fixing the SO(3) sign.
const SIGN_ZERO: f64 = 1e-14;

/// A band limit. Stored as twice its value so that SU(2) half-integer bands
/// are exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Band(u32);

impl Band {
    pub const ZERO: Band = Band(0);

    /// Integer band `b`.
    pub const fn new(b: u32) -> Band {
        Band(2 * b)
    }

    /// Band `twice / 2`.
    pub const fn from_twice(twice: u32) -> Band {
        Band(twice)
    }

    pub fn from_f64(b: f64) -> Result<Band> {
        let twice = 2.0 * b;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidBand(format!(
                "{b} is not a non-negative multiple of 1/2"
            )));
        }
        Ok(Band(twice.round() as u32))
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    /// Largest integer band not exceeding `self`.
    pub const fn floor(self) -> u32 {
        self.0 / 2
    }

    pub const fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for Band {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_integer() {
            s.serialize_u32(self.floor())
        } else {
            s.serialize_f64(self.value())
        }
    }
}

impl<'de> Deserialize<'de> for Band {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let b = f64::deserialize(d)?;
        Band::from_f64(b).map_err(serde::de::Error::custom)
    }
}

/// One of the supported compact connected groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupDescriptor {
    Torus { n: usize },
    Su2,
    So3,
    Product { factors: Vec<GroupDescriptor> },
}

impl GroupDescriptor {
    pub fn torus(n: usize) -> Self {
        GroupDescriptor::Torus { n }
    }

    pub fn product(factors: Vec<GroupDescriptor>) -> Self {
        GroupDescriptor::Product { factors }
    }

    /// Rejects the trivial group and empty products.
    pub fn validate(&self) -> Result<()> {
        match self {
            GroupDescriptor::Torus { n: 0 } => Err(Error::InvalidDescriptor(
                "Torus(0) is the trivial group".into(),
            )),
            GroupDescriptor::Product { factors } if factors.is_empty() => Err(
                Error::InvalidDescriptor("product with no factors is the trivial group".into()),
            ),
            GroupDescriptor::Product { factors } => factors.iter().try_for_each(|f| f.validate()),
            _ => Ok(()),
        }
    }

    /// Manifold dimension.
    pub fn dim(&self) -> usize {
        match self {
            GroupDescriptor::Torus { n } => *n,
            GroupDescriptor::Su2 | GroupDescriptor::So3 => 3,
            GroupDescriptor::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
        }
    }

    /// Dimension of a maximal torus.
    pub fn rank(&self) -> usize {
        match self {
            GroupDescriptor::Torus { n } => *n,
            GroupDescriptor::Su2 | GroupDescriptor::So3 => 1,
            GroupDescriptor::Product { factors } => factors.iter().map(|f| f.rank()).sum(),
        }
    }

    pub fn identity(&self) -> GroupPoint {
        match self {
            GroupDescriptor::Torus { n } => GroupPoint::Torus(vec![0.0; *n]),
            GroupDescriptor::Su2 => GroupPoint::Su2(Quaternion::identity()),
            GroupDescriptor::So3 => GroupPoint::So3(Quaternion::identity()),
            GroupDescriptor::Product { factors } => {
                GroupPoint::Product(factors.iter().map(|f| f.identity()).collect())
            }
        }
    }

    /// Draws a Haar-distributed point.
    pub fn sample_haar<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupPoint {
        match self {
            GroupDescriptor::Torus { n } => {
                let angle = Uniform::new(0.0, TAU).expect("valid range");
                GroupPoint::torus((0..*n).map(|_| angle.sample(rng)).collect())
            }
            GroupDescriptor::Su2 => GroupPoint::su2(random_unit_quaternion(rng)),
            GroupDescriptor::So3 => GroupPoint::so3(random_unit_quaternion(rng)),
            GroupDescriptor::Product { factors } => {
                GroupPoint::Product(factors.iter().map(|f| f.sample_haar(rng)).collect())
            }
        }
    }

    pub(crate) fn ensure_contains(&self, x: &GroupPoint) -> Result<()> {
        if x.belongs_to(self) {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch {
                expected: self.to_string(),
                found: x.descriptor().to_string(),
            })
        }
    }

    pub(crate) fn ensure_same(&self, other: &GroupDescriptor) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            })
        }
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupDescriptor::Torus { n } => write!(f, "Torus({n})"),
            GroupDescriptor::Su2 => f.write_str("SU2"),
            GroupDescriptor::So3 => f.write_str("SO3"),
            GroupDescriptor::Product { factors } => {
                for (i, factor) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str("×")?;
                    }
                    write!(f, "{factor}")?;
                }
                Ok(())
            }
        }
    }
}

fn random_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion<f64> {
    loop {
        let c: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let q = Quaternion::new(c[0], c[1], c[2], c[3]);
        if q.norm() > 1e-6 {
            return q.normalize();
        }
    }
}

/// An element of a supported group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PointWire", from = "PointWire")]
pub enum GroupPoint {
    Torus(Vec<f64>),
    Su2(Quaternion<f64>),
    So3(Quaternion<f64>),
    Product(Vec<GroupPoint>),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PointWire {
    Torus(Vec<f64>),
    Su2([f64; 4]),
    So3([f64; 4]),
    Product(Vec<GroupPoint>),
}

impl From<GroupPoint> for PointWire {
    fn from(p: GroupPoint) -> Self {
        match p {
            GroupPoint::Torus(a) => PointWire::Torus(a),
            GroupPoint::Su2(q) => PointWire::Su2([q.w, q.i, q.j, q.k]),
            GroupPoint::So3(q) => PointWire::So3([q.w, q.i, q.j, q.k]),
            GroupPoint::Product(f) => PointWire::Product(f),
        }
    }
}

impl From<PointWire> for GroupPoint {
    fn from(w: PointWire) -> Self {
        match w {
            PointWire::Torus(a) => GroupPoint::torus(a),
            PointWire::Su2(c) => GroupPoint::su2(Quaternion::new(c[0], c[1], c[2], c[3])),
            PointWire::So3(c) => GroupPoint::so3(Quaternion::new(c[0], c[1], c[2], c[3])),
            PointWire::Product(f) => GroupPoint::Product(f),
        }
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Flips the sign of `q` so that its first nonzero component is positive.
pub fn canonical_sign(q: Quaternion<f64>) -> Quaternion<f64> {
    for c in [q.w, q.i, q.j, q.k] {
        if c.abs() > SIGN_ZERO {
            return if c < 0.0 { -q } else { q };
        }
    }
    q
}

/// The rotation matrix of the unit quaternion `q`.
pub fn rotation_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    UnitQuaternion::from_quaternion(*q).to_rotation_matrix().into_inner()
}

impl GroupPoint {
    pub fn torus(angles: Vec<f64>) -> Self {
        GroupPoint::Torus(angles.into_iter().map(reduce_angle).collect())
    }

    pub fn su2(q: Quaternion<f64>) -> Self {
        GroupPoint::Su2(q.normalize())
    }

    pub fn so3(q: Quaternion<f64>) -> Self {
        GroupPoint::So3(canonical_sign(q.normalize()))
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        match self {
            GroupPoint::Torus(a) => GroupDescriptor::Torus { n: a.len() },
            GroupPoint::Su2(_) => GroupDescriptor::Su2,
            GroupPoint::So3(_) => GroupDescriptor::So3,
            GroupPoint::Product(f) => GroupDescriptor::Product {
                factors: f.iter().map(|p| p.descriptor()).collect(),
            },
        }
    }

    pub fn belongs_to(&self, g: &GroupDescriptor) -> bool {
        match (self, g) {
            (GroupPoint::Torus(a), GroupDescriptor::Torus { n }) => a.len() == *n,
            (GroupPoint::Su2(_), GroupDescriptor::Su2) => true,
            (GroupPoint::So3(_), GroupDescriptor::So3) => true,
            (GroupPoint::Product(p), GroupDescriptor::Product { factors }) => {
                p.len() == factors.len() && p.iter().zip(factors).all(|(x, f)| x.belongs_to(f))
            }
            _ => false,
        }
    }

    fn same_kind(&self, other: &GroupPoint) -> bool {
        match (self, other) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) => a.len() == b.len(),
            (GroupPoint::Su2(_), GroupPoint::Su2(_)) | (GroupPoint::So3(_), GroupPoint::So3(_)) => {
                true
            }
            (GroupPoint::Product(a), GroupPoint::Product(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_kind(y))
            }
            _ => false,
        }
    }

    /// The quaternion payload of an SU(2) or SO(3) point.
    pub fn quaternion(&self) -> Option<&Quaternion<f64>> {
        match self {
            GroupPoint::Su2(q) | GroupPoint::So3(q) => Some(q),
            _ => None,
        }
    }

    pub fn inverse(&self) -> GroupPoint {
        match self {
            GroupPoint::Torus(a) => GroupPoint::torus(a.iter().map(|x| -x).collect()),
            GroupPoint::Su2(q) => GroupPoint::Su2(q.conjugate()),
            GroupPoint::So3(q) => GroupPoint::so3(q.conjugate()),
            GroupPoint::Product(f) => GroupPoint::Product(f.iter().map(|p| p.inverse()).collect()),
        }
    }

    /// Distance-like discrepancy used for approximate equality: angles are
    /// compared on the circle, SO(3) points up to sign.
    pub fn discrepancy(&self, other: &GroupPoint) -> f64 {
        match (self, other) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) if a.len() == b.len() => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = reduce_angle(x - y);
                    d.min(TAU - d)
                })
                .fold(0.0, f64::max),
            (GroupPoint::Su2(p), GroupPoint::Su2(q)) => (p - q).norm(),
            (GroupPoint::So3(p), GroupPoint::So3(q)) => (p - q).norm().min((p + q).norm()),
            (GroupPoint::Product(a), GroupPoint::Product(b)) if a.len() == b.len() => a
                .iter()
                .zip(b)
                .map(|(x, y)| x.discrepancy(y))
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }

    pub fn approx_eq(&self, other: &GroupPoint, tol: f64) -> bool {
        self.discrepancy(other) <= tol
    }
}

/// Group product. Panics when the operands belong to different groups; use
/// [`multiply`] for the checked form.
impl Mul for &GroupPoint {
    type Output = GroupPoint;

    fn mul(self, rhs: &GroupPoint) -> GroupPoint {
        match (self, rhs) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) => {
                assert_eq!(a.len(), b.len(), "torus dimension mismatch");
                GroupPoint::torus(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupPoint::Su2(p), GroupPoint::Su2(q)) => GroupPoint::su2(p * q),
            (GroupPoint::So3(p), GroupPoint::So3(q)) => GroupPoint::so3(p * q),
            (GroupPoint::Product(a), GroupPoint::Product(b)) => {
                assert_eq!(a.len(), b.len(), "product arity mismatch");
                GroupPoint::Product(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (a, b) => panic!(
                "cannot multiply points of {} and {}",
                a.descriptor(),
                b.descriptor()
            ),
        }
    }
}

/// Checked group product.
pub fn multiply(a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
    if !a.same_kind(b) {
        return Err(Error::DescriptorMismatch {
            expected: a.descriptor().to_string(),
            found: b.descriptor().to_string(),
        });
    }
    Ok(a * b)
}

/// The two-to-one covering map SU(2) → SO(3).
pub fn covering_project(q: &Quaternion<f64>) -> GroupPoint {
    GroupPoint::so3(*q)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            deriv = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
    }
    (nodes, weights)
}

/// A positive quadrature rule for the normalized Haar measure.
#[derive(Clone, Debug)]
pub struct HaarQuadrature {
    group: GroupDescriptor,
    band: Band,
    nodes: Vec<GroupPoint>,
    weights: Vec<f64>,
}

impl HaarQuadrature {
    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn nodes(&self) -> &[GroupPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ f dx`. Node values are computed in parallel and summed in node
    /// order, so the result does not depend on scheduling.
    pub fn integrate<F>(&self, f: F) -> Complex64
    where
        F: Fn(&GroupPoint) -> Complex64 + Sync,
    {
        let values: Vec<Complex64> = self.nodes.par_iter().map(&f).collect();
        self.weights.iter().zip(&values).map(|(w, v)| v * *w).sum()
    }

    /// Weighted sum of precomputed node values.
    pub fn sum_values(&self, values: &[Complex64]) -> Complex64 {
        assert_eq!(values.len(), self.nodes.len());
        self.weights.iter().zip(values).map(|(w, v)| v * *w).sum()
    }
}

fn node_count(g: &GroupDescriptor, band: Band) -> usize {
    match g {
        GroupDescriptor::Torus { n } => {
            let per_axis = 2 * band.floor() as usize + 1;
            per_axis.saturating_pow(*n as u32)
        }
        GroupDescriptor::Su2 => {
            let grid = 2 * band.twice() as usize + 2;
            grid * grid * (band.twice() as usize + 2)
        }
        GroupDescriptor::So3 => node_count(&GroupDescriptor::Su2, Band::new(band.floor())),
        GroupDescriptor::Product { factors } => factors
            .iter()
            .map(|f| node_count(f, band))
            .fold(1usize, |a, b| a.saturating_mul(b)),
    }
}

/// Haar quadrature exact for products of matrix coefficients of band `≤ band`.
pub fn haar_quadrature(g: &GroupDescriptor, band: Band) -> Result<HaarQuadrature> {
    haar_quadrature_with_budget(g, band, DEFAULT_NODE_BUDGET)
}

pub fn haar_quadrature_with_budget(
    g: &GroupDescriptor,
    band: Band,
    budget: usize,
) -> Result<HaarQuadrature> {
    g.validate()?;
    let needed = node_count(g, band);
    if needed > budget {
        return Err(Error::Resource { needed, budget });
    }
    let (nodes, weights) = build_rule(g, band);
    Ok(HaarQuadrature {
        group: g.clone(),
        band,
        nodes,
        weights,
    })
}

fn build_rule(g: &GroupDescriptor, band: Band) -> (Vec<GroupPoint>, Vec<f64>) {
    match g {
        GroupDescriptor::Torus { n } => {
            let per_axis = 2 * band.floor() as usize + 1;
            let total = per_axis.pow(*n as u32);
            let step = TAU / per_axis as f64;
            let nodes = (0..total)
                .map(|mut idx| {
                    let mut angles = vec![0.0; *n];
                    for a in angles.iter_mut().rev() {
                        *a = (idx % per_axis) as f64 * step;
                        idx /= per_axis;
                    }
                    GroupPoint::Torus(angles)
                })
                .collect();
            (nodes, vec![1.0 / total as f64; total])
        }
        GroupDescriptor::Su2 => {
            let (quats, weights) = euler_rule(band);
            (quats.into_iter().map(GroupPoint::Su2).collect(), weights)
        }
        GroupDescriptor::So3 => {
            let (quats, weights) = euler_rule(Band::new(band.floor()));
            (quats.into_iter().map(GroupPoint::so3).collect(), weights)
        }
        GroupDescriptor::Product { factors } => {
            let mut nodes = vec![Vec::new()];
            let mut weights = vec![1.0];
            for factor in factors {
                let (fn_, fw) = build_rule(factor, band);
                let mut next_nodes = Vec::with_capacity(nodes.len() * fn_.len());
                let mut next_weights = Vec::with_capacity(nodes.len() * fn_.len());
                for (prefix, w) in nodes.iter().zip(&weights) {
                    for (p, v) in fn_.iter().zip(&fw) {
                        let mut tuple: Vec<GroupPoint> = prefix.clone();
                        tuple.push(p.clone());
                        next_nodes.push(tuple);
                        next_weights.push(w * v);
                    }
                }
                nodes = next_nodes;
                weights = next_weights;
            }
            (nodes.into_iter().map(GroupPoint::Product).collect(), weights)
        }
    }
}

/// Euler-angle product rule on SU(2): `q = e^{iα/2} e^{jβ/2} e^{iγ/2}` with
/// uniform α, γ on `[0, 4π)` and Gauss–Legendre in `cos β`.
fn euler_rule(band: Band) -> (Vec<Quaternion<f64>>, Vec<f64>) {
    let grid = 2 * band.twice() as usize + 2;
    let (xs, ws) = gauss_legendre(band.twice() as usize + 2);
    let step = 2.0 * TAU / grid as f64;
    let total_weight = 2.0 * (grid * grid) as f64;
    let mut nodes = Vec::with_capacity(grid * grid * xs.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for a in 0..grid {
        let alpha = a as f64 * step;
        for (x, w) in xs.iter().zip(&ws) {
            let beta = x.clamp(-1.0, 1.0).acos();
            for c in 0..grid {
                let gamma = c as f64 * step;
                nodes.push(euler_quaternion(alpha, beta, gamma));
                weights.push(w / total_weight);
            }
        }
    }
    (nodes, weights)
}

/// `e^{iα/2} e^{jβ/2} e^{iγ/2}`.
pub fn euler_quaternion(alpha: f64, beta: f64, gamma: f64) -> Quaternion<f64> {
    let qa = Quaternion::new((alpha / 2.0).cos(), (alpha / 2.0).sin(), 0.0, 0.0);
    let qb = Quaternion::new((beta / 2.0).cos(), 0.0, (beta / 2.0).sin(), 0.0);
    let qc = Quaternion::new((gamma / 2.0).cos(), (gamma / 2.0).sin(), 0.0, 0.0);
    (qa * qb * qc).normalize()
}
