//! Irreducible unitary representations and their matrices.
//!
//! Spin representations use the weight basis with weights in descending
//! order `m = j, j-1, …, -j`. The quaternion unit `i` generates the diagonal
//! circle: `D^j(cos θ + i sin θ) = diag(e^{2imθ})`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, Quaternion};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Band, GroupDescriptor, GroupPoint};

/// An element of the unitary dual. Spin labels are interpreted as SU(2) or
/// SO(3) representations depending on the group they are paired with.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Irrep {
    /// Torus character `x ↦ e^{i m·x}`.
    Character { m: Vec<i64> },
    /// Spin `j2 / 2`.
    Spin { j2: u32 },
    /// Kronecker product, factors left to right.
    Product { factors: Vec<Irrep> },
}

impl Ord for Irrep {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Irrep::Character { m: a }, Irrep::Character { m: b }) => a.cmp(b),
            (Irrep::Spin { j2: a }, Irrep::Spin { j2: b }) => a.cmp(b),
            (Irrep::Product { factors: a }, Irrep::Product { factors: b }) => a.cmp(b),
            _ => self.kind_rank().cmp(&other.kind_rank()),
        }
    }
}

impl PartialOrd for Irrep {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl Irrep {
    pub fn character(m: Vec<i64>) -> Self {
        Irrep::Character { m }
    }

    pub fn spin(j2: u32) -> Self {
        Irrep::Spin { j2 }
    }

    pub fn product(factors: Vec<Irrep>) -> Self {
        Irrep::Product { factors }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Irrep::Character { .. } => 0,
            Irrep::Spin { .. } => 1,
            Irrep::Product { .. } => 2,
        }
    }

    /// The trivial representation of `g`.
    pub fn trivial(g: &GroupDescriptor) -> Self {
        match g {
            GroupDescriptor::Torus { n } => Irrep::character(vec![0; *n]),
            GroupDescriptor::Su2 | GroupDescriptor::So3 => Irrep::spin(0),
            GroupDescriptor::Product { factors } => {
                Irrep::product(factors.iter().map(Irrep::trivial).collect())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Irrep::Character { .. } => 1,
            Irrep::Spin { j2 } => *j2 as usize + 1,
            Irrep::Product { factors } => factors.iter().map(|f| f.dim()).product(),
        }
    }

    /// `max|mᵢ|` for characters, `j` for spins, the max over product factors.
    pub fn band(&self) -> Band {
        match self {
            Irrep::Character { m } => {
                let top = m.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
                Band::new(top as u32)
            }
            Irrep::Spin { j2 } => Band::from_twice(*j2),
            Irrep::Product { factors } => {
                factors.iter().map(|f| f.band()).max().unwrap_or(Band::ZERO)
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            Irrep::Character { m } => m.iter().all(|x| *x == 0),
            Irrep::Spin { j2 } => *j2 == 0,
            Irrep::Product { factors } => factors.iter().all(|f| f.is_trivial()),
        }
    }

    /// Whether this label is a valid irrep of `g`.
    pub fn belongs_to(&self, g: &GroupDescriptor) -> bool {
        match (self, g) {
            (Irrep::Character { m }, GroupDescriptor::Torus { n }) => m.len() == *n,
            (Irrep::Spin { .. }, GroupDescriptor::Su2) => true,
            (Irrep::Spin { j2 }, GroupDescriptor::So3) => j2 % 2 == 0,
            (Irrep::Product { factors: r }, GroupDescriptor::Product { factors: g }) => {
                r.len() == g.len() && r.iter().zip(g).all(|(r, g)| r.belongs_to(g))
            }
            _ => false,
        }
    }

    pub(crate) fn ensure_belongs(&self, g: &GroupDescriptor) -> Result<()> {
        if self.belongs_to(g) {
            Ok(())
        } else {
            Err(Error::InvalidIrrep {
                irrep: self.id(),
                group: g.to_string(),
            })
        }
    }

    fn fits_point(&self, x: &GroupPoint) -> bool {
        match (self, x) {
            (Irrep::Character { m }, GroupPoint::Torus(a)) => m.len() == a.len(),
            (Irrep::Spin { .. }, GroupPoint::Su2(_)) => true,
            (Irrep::Spin { j2 }, GroupPoint::So3(_)) => j2 % 2 == 0,
            (Irrep::Product { factors }, GroupPoint::Product(p)) => {
                factors.len() == p.len() && factors.iter().zip(p).all(|(r, x)| r.fits_point(x))
            }
            _ => false,
        }
    }

    /// Compact JSON form, used as the irrep id in CSV exports.
    pub fn id(&self) -> String {
        serde_json::to_string(self).expect("irrep serializes")
    }
}

/// Representative of the class of the complex-conjugate representation.
pub fn conjugate_dual(rho: &Irrep) -> Irrep {
    match rho {
        Irrep::Character { m } => Irrep::character(m.iter().map(|x| -x).collect()),
        Irrep::Spin { j2 } => Irrep::spin(*j2),
        Irrep::Product { factors } => Irrep::product(factors.iter().map(conjugate_dual).collect()),
    }
}

/// All irreps of `g` with band at most `band`, in ascending order.
pub fn dual_enumerate(g: &GroupDescriptor, band: Band) -> Vec<Irrep> {
    let mut out: Vec<Irrep> = match g {
        GroupDescriptor::Torus { n } => {
            let b = i64::from(band.floor());
            let side = (2 * b + 1) as usize;
            let total = side.pow(*n as u32);
            (0..total)
                .map(|mut idx| {
                    let mut m = vec![0i64; *n];
                    for x in m.iter_mut().rev() {
                        *x = (idx % side) as i64 - b;
                        idx /= side;
                    }
                    Irrep::character(m)
                })
                .collect()
        }
        GroupDescriptor::Su2 => (0..=band.twice()).map(Irrep::spin).collect(),
        GroupDescriptor::So3 => (0..=band.floor()).map(|j| Irrep::spin(2 * j)).collect(),
        GroupDescriptor::Product { factors } => {
            let mut acc: Vec<Vec<Irrep>> = vec![Vec::new()];
            for f in factors {
                let options = dual_enumerate(f, band);
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        options.iter().map(move |r| {
                            let mut v = prefix.clone();
                            v.push(r.clone());
                            v
                        })
                    })
                    .collect();
            }
            acc.into_iter().map(Irrep::product).collect()
        }
    };
    out.sort();
    out
}

/// Euler angles `(α, β, γ)` with `q = e^{iα/2} e^{jβ/2} e^{iγ/2}`.
///
/// At `β ∈ {0, π}` the whole rotation is put into α and γ is zero.
pub fn euler_angles(q: &Quaternion<f64>) -> (f64, f64, f64) {
    let z1 = Complex64::new(q.w, q.i);
    let z2 = Complex64::new(q.j, q.k);
    let (r1, r2) = (z1.norm(), z2.norm());
    let beta = 2.0 * r2.atan2(r1);
    if r2 < 1e-15 {
        (2.0 * z1.arg(), beta, 0.0)
    } else if r1 < 1e-15 {
        (2.0 * z2.arg(), beta, 0.0)
    } else {
        (z1.arg() + z2.arg(), beta, z1.arg() - z2.arg())
    }
}

/// `k!` for `k ≤ n`.
fn factorials(n: usize) -> Vec<f64> {
    let mut out = vec![1.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] * k as f64;
    }
    out
}

/// Powers `x⁰, …, xⁿ`.
fn powers(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![1.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] * x;
    }
    out
}

/// One term `coef · cos(β/2)^p · sin(β/2)^q` of a small-d entry.
type Term = (f64, usize, usize);

/// Explicit Wigner sum for `d^j_{ab}` as a list of terms.
fn small_d_terms(j2: i64, a2: i64, b2: i64, fact: &[f64]) -> Vec<Term> {
    let f = |n: i64| fact[n as usize];
    let jpa = (j2 + a2) / 2;
    let jma = (j2 - a2) / 2;
    let jpb = (j2 + b2) / 2;
    let jmb = (j2 - b2) / 2;
    let amb = (a2 - b2) / 2;
    let prefactor = (f(jpa) * f(jma) * f(jpb) * f(jmb)).sqrt();
    (0.max(-amb)..=jpb.min(jma))
        .map(|k| {
            let denom = f(jpb - k) * f(k) * f(amb + k) * f(jma - k);
            let sign = if (amb + k) % 2 == 0 { 1.0 } else { -1.0 };
            let cos_pow = (j2 + (b2 - a2) / 2 - 2 * k) as usize;
            let sin_pow = (amb + 2 * k) as usize;
            (sign * prefactor / denom, cos_pow, sin_pow)
        })
        .collect()
}

/// Terms of every entry of the spin-`j2/2` small-d matrix, row-major in the
/// descending weight basis (row weight `b`, column weight `a`).
fn small_d_table(j2: u32) -> Vec<Vec<Term>> {
    let n = j2 as usize + 1;
    let fact = factorials(n - 1);
    let j2 = i64::from(j2);
    let weight2 = |idx: usize| j2 - 2 * idx as i64;
    (0..n * n)
        .map(|rc| small_d_terms(j2, weight2(rc % n), weight2(rc / n), &fact))
        .collect()
}

const CACHED_SPINS: u32 = 32;

fn cached_small_d_table(j2: u32) -> &'static [Vec<Term>] {
    static TABLES: OnceLock<Vec<Vec<Vec<Term>>>> = OnceLock::new();
    &TABLES.get_or_init(|| (0..=CACHED_SPINS).map(small_d_table).collect())[j2 as usize]
}

/// Wigner small-d `d^j_{ab}(β)` (Condon–Shortley convention), arguments doubled.
pub fn wigner_small_d(j2: u32, a2: i64, b2: i64, beta: f64) -> f64 {
    let n = j2 as usize;
    let fact = factorials(n);
    let cpow = powers((beta / 2.0).cos(), n);
    let spow = powers((beta / 2.0).sin(), n);
    small_d_terms(i64::from(j2), a2, b2, &fact)
        .iter()
        .map(|(c, p, q)| c * cpow[*p] * spow[*q])
        .sum()
}

/// Euler data of one quaternion shared by every spin up to `top`.
pub(crate) struct SpinFrame {
    top: u32,
    alpha: Vec<Complex64>,
    gamma: Vec<Complex64>,
    cpow: Vec<f64>,
    spow: Vec<f64>,
}

impl SpinFrame {
    pub(crate) fn new(q: &Quaternion<f64>, top: u32) -> Self {
        let (alpha, beta, gamma) = euler_angles(q);
        let n = top as usize;
        // index `m2 + top` holds `e^{i m2 θ / 2}`
        let phases = |theta: f64| -> Vec<Complex64> {
            (0..=2 * n)
                .map(|k| Complex64::from_polar(1.0, 0.5 * (k as f64 - n as f64) * theta))
                .collect()
        };
        SpinFrame {
            top,
            alpha: phases(alpha),
            gamma: phases(gamma),
            cpow: powers((beta / 2.0).cos(), n),
            spow: powers((beta / 2.0).sin(), n),
        }
    }

    /// Entry `(r, c)` of the spin-`j2/2` matrix.
    pub(crate) fn entry(&self, j2: u32, r: usize, c: usize) -> Complex64 {
        debug_assert!(j2 <= self.top);
        let n = j2 as usize + 1;
        let slot = |idx: usize| (i64::from(j2) - 2 * idx as i64 + i64::from(self.top)) as usize;
        let d: f64 = if j2 <= CACHED_SPINS {
            cached_small_d_table(j2)[r * n + c]
                .iter()
                .map(|(k, p, q)| k * self.cpow[*p] * self.spow[*q])
                .sum()
        } else {
            let fact = factorials(n - 1);
            let w = |idx: usize| i64::from(j2) - 2 * idx as i64;
            small_d_terms(i64::from(j2), w(c), w(r), &fact)
                .iter()
                .map(|(k, p, q)| k * self.cpow[*p] * self.spow[*q])
                .sum()
        };
        self.alpha[slot(r)] * self.gamma[slot(c)] * d
    }

    pub(crate) fn matrix(&self, j2: u32) -> DMatrix<Complex64> {
        assert!(j2 <= self.top, "spin {j2} above frame limit {}", self.top);
        let owned;
        let table: &[Vec<Term>] = if j2 <= CACHED_SPINS {
            cached_small_d_table(j2)
        } else {
            owned = small_d_table(j2);
            &owned
        };
        let n = j2 as usize + 1;
        let top = self.top as i64;
        let slot = |idx: usize| (i64::from(j2) - 2 * idx as i64 + top) as usize;
        DMatrix::from_fn(n, n, |r, c| {
            let d: f64 = table[r * n + c]
                .iter()
                .map(|(k, p, q)| k * self.cpow[*p] * self.spow[*q])
                .sum();
            self.alpha[slot(r)] * self.gamma[slot(c)] * d
        })
    }
}

/// Spin-`j2/2` matrix of the unit quaternion `q` in the descending weight basis.
pub fn wigner_d(j2: u32, q: &Quaternion<f64>) -> DMatrix<Complex64> {
    SpinFrame::new(q, j2).matrix(j2)
}

pub(crate) fn rep_matrix_unchecked(rho: &Irrep, x: &GroupPoint) -> DMatrix<Complex64> {
    match (rho, x) {
        (Irrep::Character { m }, GroupPoint::Torus(a)) => {
            let phase: f64 = m.iter().zip(a).map(|(m, a)| *m as f64 * a).sum();
            DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phase))
        }
        (Irrep::Spin { j2 }, GroupPoint::Su2(q) | GroupPoint::So3(q)) => wigner_d(*j2, q),
        (Irrep::Product { factors }, GroupPoint::Product(p)) => factors
            .iter()
            .zip(p)
            .map(|(r, x)| rep_matrix_unchecked(r, x))
            .reduce(|acc, m| acc.kronecker(&m))
            .expect("nonempty product"),
        _ => panic!("irrep {rho} does not act on {}", x.descriptor()),
    }
}

/// `ρ(x)` for every irrep in `irreps`. Euler data and factor matrices are
/// shared across the list.
pub fn rep_matrices(irreps: &[Irrep], x: &GroupPoint) -> Vec<DMatrix<Complex64>> {
    match x {
        GroupPoint::Su2(q) | GroupPoint::So3(q) => {
            let top = irreps
                .iter()
                .filter_map(|r| match r {
                    Irrep::Spin { j2 } => Some(*j2),
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            let frame = SpinFrame::new(q, top);
            irreps
                .iter()
                .map(|r| match r {
                    Irrep::Spin { j2 } => frame.matrix(*j2),
                    _ => rep_matrix_unchecked(r, x),
                })
                .collect()
        }
        GroupPoint::Product(points) => {
            let mut cache: HashMap<(usize, &Irrep), DMatrix<Complex64>> = HashMap::new();
            for (i, p) in points.iter().enumerate() {
                let mut distinct: Vec<&Irrep> = irreps
                    .iter()
                    .filter_map(|r| match r {
                        Irrep::Product { factors } => factors.get(i),
                        _ => None,
                    })
                    .collect();
                distinct.sort();
                distinct.dedup();
                let owned: Vec<Irrep> = distinct.iter().map(|r| (*r).clone()).collect();
                for (r, m) in distinct.into_iter().zip(rep_matrices(&owned, p)) {
                    cache.insert((i, r), m);
                }
            }
            irreps
                .iter()
                .map(|rho| match rho {
                    Irrep::Product { factors } => factors
                        .iter()
                        .enumerate()
                        .map(|(i, r)| cache[&(i, r)].clone())
                        .reduce(|acc, m| acc.kronecker(&m))
                        .expect("nonempty product"),
                    _ => rep_matrix_unchecked(rho, x),
                })
                .collect()
        }
        GroupPoint::Torus(_) => irreps.iter().map(|r| rep_matrix_unchecked(r, x)).collect(),
    }
}

/// The unitary matrix `ρ(x)`.
pub fn rep_matrix(rho: &Irrep, x: &GroupPoint) -> Result<DMatrix<Complex64>> {
    if !rho.fits_point(x) {
        return Err(Error::DescriptorMismatch {
            expected: format!("a group carrying {rho}"),
            found: x.descriptor().to_string(),
        });
    }
    Ok(rep_matrix_unchecked(rho, x))
}
