use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::CertError;
use crate::group::{index_ik, GroupElement, IntMatrix, Semidirect, Subgroup};
use crate::hyperelementary::{LemmaCase, LemmaOutcome};

type ModMatrix = Vec<Vec<BigInt>>;

fn reduce(m: &IntMatrix, l: &BigInt) -> ModMatrix {
    m.rows().into_iter().map(|r| r.into_iter().map(|x| x.mod_floor(l)).collect()).collect()
}

fn mat_mul_mod(a: &ModMatrix, b: &ModMatrix, l: &BigInt) -> ModMatrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|t| &a[i][t] * &b[t][j]).sum::<BigInt>().mod_floor(l)).collect())
        .collect()
}

fn mat_vec_mod(a: &ModMatrix, v: &[BigInt], l: &BigInt) -> Vec<BigInt> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum::<BigInt>().mod_floor(l)).collect()
}

/// A^e mod l for any signed e.
pub fn power_mod(grp: &Semidirect, e: i64, l: &BigInt) -> ModMatrix {
    let base = if e < 0 { reduce(grp.matrix_inv(), l) } else { reduce(grp.matrix(), l) };
    let n = grp.dim();
    let mut acc: ModMatrix =
        (0..n).map(|i| (0..n).map(|j| BigInt::from(u8::from(i == j)).mod_floor(l)).collect()).collect();
    let mut b = base;
    let mut e = e.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul_mod(&acc, &b, l);
        }
        e >>= 1;
        if e > 0 {
            b = mat_mul_mod(&b, &b, l);
        }
    }
    acc
}

/// (I − A^d) mod l.
fn one_minus_power(grp: &Semidirect, d: i64, l: &BigInt) -> ModMatrix {
    let p = power_mod(grp, d, l);
    p.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, x)| (BigInt::from(u8::from(i == j)) - x).mod_floor(l)).collect())
        .collect()
}

fn inverse_mod(a: &BigInt, l: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(l);
    e.gcd.is_one().then(|| e.x.mod_floor(l))
}

/// Solves M w ≡ b (mod l) through the adjugate; needs det M a unit mod l.
fn solve_unit_det(m: &ModMatrix, b: &[BigInt], l: &BigInt) -> Option<Vec<BigInt>> {
    let n = m.len();
    let mat = IntMatrix::from_rows(m.clone()).ok()?;
    let det_inv = inverse_mod(&mat.det().mod_floor(l), l)?;
    let cofactor = |i: usize, j: usize| -> BigInt {
        if n == 1 {
            return BigInt::one();
        }
        let minor: Vec<Vec<BigInt>> = (0..n)
            .filter(|&r| r != i)
            .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c].clone()).collect())
            .collect();
        let d = IntMatrix::from_rows(minor).expect("square minor").det();
        if (i + j).is_multiple_of(2) {
            d
        } else {
            -d
        }
    };
    // adj(M)[i][j] = cofactor(j, i)
    let w = (0..n)
        .map(|i| ((0..n).map(|j| cofactor(j, i) * &b[j]).sum::<BigInt>() * &det_inv).mod_floor(l))
        .collect();
    Some(w)
}

/// Gaussian elimination over the field Z/q.
fn solve_prime(m: &ModMatrix, b: &[BigInt], q: &BigInt) -> Option<Vec<BigInt>> {
    let n = m.len();
    let mut rows: Vec<Vec<BigInt>> =
        m.iter().zip(b).map(|(r, x)| r.iter().cloned().chain([x.clone()]).collect()).collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..n).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(row, p);
        let inv = inverse_mod(&rows[row][col], q)?;
        for x in rows[row].iter_mut() {
            *x = (&*x * &inv).mod_floor(q);
        }
        for r in 0..n {
            if r != row && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in 0..=n {
                    let t = (&rows[r][c] - &f * &rows[row][c]).mod_floor(q);
                    rows[r][c] = t;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if rows[row..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    let mut w = vec![BigInt::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        w[c] = rows[r][n].clone();
    }
    Some(w)
}

fn lattice_in(h: &Subgroup, l: &BigInt) -> bool {
    h.lattice.basis.iter().all(|b| b.iter().all(|c| c.is_multiple_of(l)))
}

/// Whether (w,0)·H·(w,0)⁻¹ ⊆ (lZ)^n ⋊ Z, checked on the normal-form
/// generators. The lattice part is fixed by the conjugation; the slope
/// u·t^d goes to (u + (I − A^d)w)·t^d.
pub fn conjugates_into(grp: &Semidirect, h: &Subgroup, w: &[BigInt], l: &BigInt) -> bool {
    if !lattice_in(h, l) {
        return false;
    }
    match &h.slope {
        None => true,
        Some(s) => {
            let m = one_minus_power(grp, s.d, l);
            let mw = mat_vec_mod(&m, w, l);
            s.u.iter().zip(mw).all(|(u, x)| (u + x).is_multiple_of(l))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarHClause {
    LatticeNotInLZ,
    ImageNotKZ,
    InfiniteIndex,
    NotOneModIndex,
}

/// Conjugator w with (w,0)·H·(w,0)⁻¹ ⊆ (lZ)^n ⋊ Z, from the three
/// hypotheses: H ∩ Z^n ⊆ (lZ)^n, H maps onto kZ, and l ≡ 1 modulo
/// [Z^n : (I − A^k)Z^n] < ∞.
pub fn barh_conjugator(grp: &Semidirect, h: &Subgroup, l: u64, k: u64) -> Result<Vec<BigInt>, CertError> {
    let lb = BigInt::from(l);
    let n = grp.dim();
    if !lattice_in(h, &lb) {
        return Err(CertError::HypothesisViolated(BarHClause::LatticeNotInLZ));
    }
    let Some(slope) = &h.slope else {
        return Ok(vec![BigInt::zero(); n]);
    };
    if slope.d as u64 != k {
        return Err(CertError::HypothesisViolated(BarHClause::ImageNotKZ));
    }
    let index = index_ik(grp.matrix(), k);
    if index.is_zero() {
        return Err(CertError::HypothesisViolated(BarHClause::InfiniteIndex));
    }
    if !(&lb - 1u32).is_multiple_of(&index) {
        return Err(CertError::HypothesisViolated(BarHClause::NotOneModIndex));
    }
    let m = one_minus_power(grp, slope.d, &lb);
    let rhs: Vec<BigInt> = slope.u.iter().map(|u| (-u).mod_floor(&lb)).collect();
    let w = solve_unit_det(&m, &rhs, &lb).ok_or(CertError::HypothesisViolated(BarHClause::NotOneModIndex))?;
    if !conjugates_into(grp, h, &w, &lb) {
        return Err(CertError::ClassificationFailed("barH conjugator does not conjugate".into()));
    }
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugatorMethod {
    BarH,
    /// The linear system solved directly over Z/q when the index hypothesis
    /// does not apply.
    DirectSolve,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// π⁻¹(H) ⊆ Z^n ⋊ qZ.
    SubgroupOfZnSemidirectqZ { q: u64 },
    /// w·π⁻¹(H)·w⁻¹ ⊆ (qZ)^n ⋊ Z.
    ConjugateIntoLatticeSemidirect {
        q: u64,
        #[serde(with = "crate::json::vec_bigint_str")]
        w: Vec<BigInt>,
        method: ConjugatorMethod,
    },
    /// π⁻¹(H) ⊆ Z^n ⋊ lZ with l > L.
    LatticeSemidirectDirect { l: u64 },
}

impl CaseTag {
    /// Conjugating element c with c·π⁻¹(H)·c⁻¹ inside the target subgroup.
    pub fn conjugator(&self, n: usize) -> GroupElement {
        match self {
            CaseTag::ConjugateIntoLatticeSemidirect { w, .. } => GroupElement::lattice(w.clone()),
            _ => GroupElement::identity(n),
        }
    }
}

pub struct ClassifyContext<'a> {
    pub grp: &'a Semidirect,
    /// Window length L.
    pub window: u64,
    /// Smallest l for which the line construction meets ε.
    pub l_min: BigInt,
}

/// Verifies a tag against the preimage normal form.
pub fn verify_case(grp: &Semidirect, h: &Subgroup, tag: &CaseTag) -> bool {
    let d = h.slope.as_ref().map_or(0, |s| s.d);
    match tag {
        CaseTag::SubgroupOfZnSemidirectqZ { q } => d % *q as i64 == 0,
        CaseTag::LatticeSemidirectDirect { l } => d % *l as i64 == 0,
        CaseTag::ConjugateIntoLatticeSemidirect { q, w, .. } => conjugates_into(grp, h, w, &BigInt::from(*q)),
    }
}

/// Follows the case split of the lemma: an image in qZ is used as is;
/// otherwise H ∩ Z^n ⊆ (qZ)^n and H is conjugated into (qZ)^n ⋊ Z by the
/// barH construction when d ≤ L, or handled by Z^n ⋊ dZ when d > L and the
/// line construction can meet ε there. For L < d < l_min the conjugator is
/// solved for directly.
pub fn classify_preimage(ctx: &ClassifyContext, h: &Subgroup, outcome: &LemmaOutcome) -> Result<CaseTag, CertError> {
    let q = outcome.q;
    let grp = ctx.grp;
    let d = h.slope.as_ref().map_or(0, |s| s.d as u64);
    let tag = match outcome.case {
        LemmaCase::ImageDivisible | LemmaCase::Both => CaseTag::SubgroupOfZnSemidirectqZ { q },
        LemmaCase::LatticeDivisible if d == 0 => CaseTag::ConjugateIntoLatticeSemidirect {
            q,
            w: vec![BigInt::zero(); grp.dim()],
            method: ConjugatorMethod::BarH,
        },
        LemmaCase::LatticeDivisible if d <= ctx.window => CaseTag::ConjugateIntoLatticeSemidirect {
            q,
            w: barh_conjugator(grp, h, q, d)?,
            method: ConjugatorMethod::BarH,
        },
        LemmaCase::LatticeDivisible if BigInt::from(d) >= ctx.l_min => CaseTag::LatticeSemidirectDirect { l: d },
        LemmaCase::LatticeDivisible => {
            let qb = BigInt::from(q);
            let slope = h.slope.as_ref().expect("d > 0");
            let m = one_minus_power(grp, slope.d, &qb);
            let rhs: Vec<BigInt> = slope.u.iter().map(|u| (-u).mod_floor(&qb)).collect();
            match solve_prime(&m, &rhs, &qb) {
                Some(w) => CaseTag::ConjugateIntoLatticeSemidirect { q, w, method: ConjugatorMethod::DirectSolve },
                None => CaseTag::LatticeSemidirectDirect { l: d },
            }
        }
    };
    if !verify_case(grp, h, &tag) {
        return Err(CertError::ClassificationFailed(format!("{tag:?} does not hold")));
    }
    Ok(tag)
}
