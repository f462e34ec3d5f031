//! Arithmetic in Z^n ⋊_A Z, its finite quotients and the integer-matrix
//! invariants the pipeline depends on.

mod lattice;
mod matrix;
pub mod primes;
mod subgroup;

use std::borrow::Cow;
use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lattice::Lattice;
pub use matrix::IntMatrix;
pub use subgroup::{Slope, Subgroup};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("bad matrix: {0}")]
    BadMatrix(String),
    #[error("matrix is not invertible over Z (det = {0})")]
    NotUnimodular(BigInt),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exponent of t overflowed")]
    Overflow,
    #[error("matrix is not invertible mod {modulus} (gcd(det, s) = {gcd})")]
    NotInvertibleMod { modulus: u64, gcd: BigInt },
    #[error("invalid quotient descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("matrix order mod {0} exceeds the scan cap")]
    OrderCapExceeded(u64),
    #[error("element cap {0} exceeded")]
    CapExceeded(usize),
    #[error("search budget exceeded after {0} candidates")]
    SearchBudgetExceeded(u64),
    #[error("primality of {0} could not be proven")]
    Unproven(BigInt),
}

/// An element v·t^k of Z^n ⋊_A Z.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct GroupElement {
    #[serde(with = "crate::json::vec_bigint_str")]
    pub v: Vec<BigInt>,
    pub k: i64,
}

impl GroupElement {
    pub fn new(v: Vec<BigInt>, k: i64) -> Self {
        GroupElement { v, k }
    }

    pub fn from_i64(v: &[i64], k: i64) -> Self {
        GroupElement { v: v.iter().map(|&x| BigInt::from(x)).collect(), k }
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { v: vec![BigInt::zero(); n], k: 0 }
    }

    pub fn lattice(v: Vec<BigInt>) -> Self {
        GroupElement { v, k: 0 }
    }

    pub fn is_identity(&self) -> bool {
        self.k == 0 && self.v.iter().all(|x| x.is_zero())
    }
}

/// Word alphabet for ε-checks.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GeneratingSet {
    pub elements: Vec<GroupElement>,
}

const POW_CACHE: i64 = 24;

/// The group Z^n ⋊_A Z for a fixed A ∈ GL_n(Z).
#[derive(Clone, Debug)]
pub struct Semidirect {
    a: IntMatrix,
    a_inv: IntMatrix,
    // A^k for k in -POW_CACHE..=POW_CACHE
    pows: Vec<IntMatrix>,
}

impl Semidirect {
    pub fn new(a: IntMatrix) -> Result<Self, GroupError> {
        let a_inv = a.inverse_unimodular()?;
        let mut pows = Vec::with_capacity(2 * POW_CACHE as usize + 1);
        let mut neg = vec![IntMatrix::identity(a.dim())];
        let mut pos = vec![IntMatrix::identity(a.dim())];
        for i in 1..=POW_CACHE as usize {
            neg.push(neg[i - 1].mul(&a_inv));
            pos.push(pos[i - 1].mul(&a));
        }
        pows.extend(neg.into_iter().skip(1).rev());
        pows.extend(pos);
        Ok(Semidirect { a, a_inv, pows })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.a
    }

    pub fn matrix_inv(&self) -> &IntMatrix {
        &self.a_inv
    }

    /// A^k for any signed k.
    pub fn power(&self, k: i64) -> Cow<'_, IntMatrix> {
        if k.abs() <= POW_CACHE {
            Cow::Borrowed(&self.pows[(k + POW_CACHE) as usize])
        } else if k > 0 {
            Cow::Owned(self.a.pow(k as u64))
        } else {
            Cow::Owned(self.a_inv.pow(k.unsigned_abs()))
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.dim())
    }

    fn check(&self, g: &GroupElement) -> Result<(), GroupError> {
        if g.v.len() != self.dim() {
            return Err(GroupError::DimensionMismatch { expected: self.dim(), got: g.v.len() });
        }
        Ok(())
    }

    /// (v,k)·(w,m) = (v + A^k w, k + m).
    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        self.check(h)?;
        let k = g.k.checked_add(h.k).ok_or(GroupError::Overflow)?;
        let aw = self.power(g.k).mul_vec(&h.v);
        let v = g.v.iter().zip(aw).map(|(a, b)| a + b).collect();
        Ok(GroupElement { v, k })
    }

    /// (v,k)⁻¹ = (−A^{−k} v, −k).
    pub fn inv(&self, g: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        let k = g.k.checked_neg().ok_or(GroupError::Overflow)?;
        let v = self.power(k).mul_vec(&g.v).into_iter().map(|x| -x).collect();
        Ok(GroupElement { v, k })
    }

    pub fn pow(&self, g: &GroupElement, e: i64) -> Result<GroupElement, GroupError> {
        let base = if e < 0 { self.inv(g)? } else { g.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = self.identity();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b)?;
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b)?;
            }
        }
        Ok(acc)
    }

    pub fn conj(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.mul(&self.mul(g, h)?, &self.inv(g)?)
    }

    /// All distinct products of at most `radius` letters of S ∪ S⁻¹.
    pub fn word_ball(
        &self,
        gens: &GeneratingSet,
        radius: usize,
        cap: usize,
    ) -> Result<Vec<GroupElement>, GroupError> {
        let mut letters = Vec::new();
        for s in &gens.elements {
            letters.push(s.clone());
            letters.push(self.inv(s)?);
        }
        let mut seen = HashSet::new();
        let mut out = vec![self.identity()];
        seen.insert(self.identity());
        let mut frontier = VecDeque::from([self.identity()]);
        for _ in 0..radius {
            let mut next = VecDeque::new();
            while let Some(g) = frontier.pop_front() {
                for s in &letters {
                    let h = self.mul(&g, s)?;
                    if seen.insert(h.clone()) {
                        if out.len() >= cap {
                            return Err(GroupError::CapExceeded(cap));
                        }
                        out.push(h.clone());
                        next.push_back(h);
                    }
                }
            }
            frontier = next;
        }
        Ok(out)
    }

    pub fn project(&self, g: &GroupElement, f: &FiniteQuotientDesc) -> Result<FiniteElement, GroupError> {
        self.check(g)?;
        f.project(g)
    }
}

/// Descriptor of F = (Z/s)^n ⋊_{A_s} Z/r.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FiniteQuotientDesc {
    pub n: usize,
    pub s: u64,
    pub r: u64,
    pub a_mod_s: IntMatrix,
}

/// Element of a finite quotient, coordinates reduced.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct FiniteElement {
    pub v: Vec<u64>,
    pub k: u64,
}

impl FiniteQuotientDesc {
    /// Builds the descriptor and checks that the order of A mod s divides r.
    pub fn new(a: &IntMatrix, s: u64, r: u64) -> Result<Self, GroupError> {
        if s < 2 || r < 1 {
            return Err(GroupError::InvalidDescriptor(format!("s = {s}, r = {r}")));
        }
        let ord = matrix_order_mod(a, s)?;
        if !r.is_multiple_of(ord) {
            return Err(GroupError::InvalidDescriptor(format!(
                "order {ord} of A mod {s} does not divide r = {r}"
            )));
        }
        let rows = a
            .reduce_mod(s)
            .chunks(a.dim())
            .map(|c| c.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Ok(FiniteQuotientDesc { n: a.dim(), s, r, a_mod_s: IntMatrix::from_rows(rows)? })
    }

    pub fn order(&self) -> Option<u64> {
        self.s.checked_pow(self.n as u32)?.checked_mul(self.r)
    }

    pub fn project(&self, g: &GroupElement) -> Result<FiniteElement, GroupError> {
        if g.v.len() != self.n {
            return Err(GroupError::DimensionMismatch { expected: self.n, got: g.v.len() });
        }
        let s = BigInt::from(self.s);
        let v = g
            .v
            .iter()
            .map(|x| u64::try_from(x.mod_floor(&s)).expect("residue fits"))
            .collect();
        Ok(FiniteElement { v, k: g.k.rem_euclid(self.r as i64) as u64 })
    }
}

/// Least m ≥ 1 with A^m ≡ I mod s.
pub fn matrix_order_mod(a: &IntMatrix, s: u64) -> Result<u64, GroupError> {
    matrix_order_mod_capped(a, s, 50_000_000)
}

pub fn matrix_order_mod_capped(a: &IntMatrix, s: u64, cap: u64) -> Result<u64, GroupError> {
    if s < 2 {
        return Err(GroupError::InvalidDescriptor(format!("modulus {s} < 2")));
    }
    let g = a.det().gcd(&BigInt::from(s));
    if g != BigInt::from(1) {
        return Err(GroupError::NotInvertibleMod { modulus: s, gcd: g });
    }
    let n = a.dim();
    let base = a.reduce_mod(s);
    let s128 = s as u128;
    let mut cur = base.clone();
    let is_id = |m: &[u64]| (0..n).all(|i| (0..n).all(|j| m[i * n + j] == u64::from(i == j)));
    let mut m = 1u64;
    while !is_id(&cur) {
        if m >= cap {
            return Err(GroupError::OrderCapExceeded(s));
        }
        let mut next = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u128;
                for l in 0..n {
                    acc = (acc + cur[i * n + l] as u128 * base[l * n + j] as u128) % s128;
                }
                next[i * n + j] = acc as u64;
            }
        }
        cur = next;
        m += 1;
    }
    Ok(m)
}

/// |det(I − A^k)|; zero means infinite index.
pub fn index_ik(a: &IntMatrix, k: u64) -> BigInt {
    IntMatrix::identity(a.dim()).sub(&a.pow(k)).det().abs()
}

/// Exponents m with Euler φ(m) ≤ n.
pub fn cyclotomic_exponents(n: usize) -> Vec<u64> {
    // φ(m) ≥ sqrt(m/2), so m ≤ 2n² covers every candidate.
    let bound = (2 * n * n).max(2) as u64;
    (1..=bound).filter(|&m| euler_phi(m) <= n as u64).collect()
}

pub fn euler_phi(mut m: u64) -> u64 {
    let mut out = m;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if m > 1 {
        out -= out / m;
    }
    out
}

/// Whether some eigenvalue of A is a root of unity, decided exactly.
pub fn has_root_of_unity_eigenvalue(a: &IntMatrix) -> bool {
    let id = IntMatrix::identity(a.dim());
    cyclotomic_exponents(a.dim())
        .into_iter()
        .any(|m| a.pow(m).sub(&id).det().is_zero())
}
