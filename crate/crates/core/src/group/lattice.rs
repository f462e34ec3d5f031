use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Sublattice of Z^n in Hermite normal form.
///
/// Basis vectors are kept as the columns of a lower-triangular matrix:
/// column j has its first nonzero entry (the pivot) in row `pivots[j]`,
/// pivot rows strictly increase, pivots are positive, and every other
/// column's entry in a pivot row lies in [0, pivot).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Lattice {
    pub n: usize,
    #[serde(with = "crate::json::mat_bigint_str")]
    pub basis: Vec<Vec<BigInt>>,
}

impl Lattice {
    pub fn zero(n: usize) -> Self {
        Lattice { n, basis: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        Self::scaled(n, &BigInt::one())
    }

    /// (mZ)^n.
    pub fn scaled(n: usize, m: &BigInt) -> Self {
        let basis = (0..n)
            .map(|i| (0..n).map(|j| if i == j { m.abs() } else { BigInt::zero() }).collect())
            .collect();
        Lattice { n, basis }
    }

    pub fn from_generators<I>(n: usize, gens: I) -> Self
    where
        I: IntoIterator<Item = Vec<BigInt>>,
    {
        let rows: Vec<Vec<BigInt>> = gens.into_iter().filter(|g| g.iter().any(|x| !x.is_zero())).collect();
        Lattice { n, basis: hermite(n, rows) }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn pivot(col: &[BigInt]) -> usize {
        col.iter().position(|x| !x.is_zero()).expect("basis vectors are nonzero")
    }

    /// Index in Z^n, or None when the rank is deficient.
    pub fn index(&self) -> Option<BigInt> {
        if self.rank() < self.n {
            return None;
        }
        Some(self.basis.iter().map(|b| b[Self::pivot(b)].clone()).product())
    }

    /// Canonical representative of x + L.
    pub fn reduce(&self, x: &[BigInt]) -> Vec<BigInt> {
        let mut x = x.to_vec();
        for b in &self.basis {
            let p = Self::pivot(b);
            let q = x[p].div_floor(&b[p]);
            if !q.is_zero() {
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= &q * bi;
                }
            }
        }
        x
    }

    pub fn contains(&self, x: &[BigInt]) -> bool {
        let mut x = x.to_vec();
        for b in &self.basis {
            let p = Self::pivot(b);
            if x[..p].iter().any(|v| !v.is_zero()) {
                return false;
            }
            let (q, rem) = x[p].div_rem(&b[p]);
            if !rem.is_zero() {
                return false;
            }
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= &q * bi;
            }
        }
        x.iter().all(|v| v.is_zero())
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        other.basis.iter().all(|b| self.contains(b))
    }

    pub fn join(&self, other: &Lattice) -> Lattice {
        Lattice::from_generators(self.n, self.basis.iter().chain(&other.basis).cloned())
    }
}

/// Vector j of the result starts at coordinate pivot(j); pivots increase.
fn hermite(n: usize, mut rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    for col in 0..n {
        // gcd-eliminate column `col` among the remaining rows
        loop {
            let mut best: Option<usize> = None;
            for (i, r) in rows.iter().enumerate() {
                if !r[col].is_zero() && best.is_none_or(|b| r[col].abs() < rows[b][col].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            let pivot_row = rows.swap_remove(b);
            let mut done = true;
            for r in rows.iter_mut() {
                if r[col].is_zero() {
                    continue;
                }
                let q = r[col].div_floor(&pivot_row[col]);
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= &q * y;
                }
                if !r[col].is_zero() {
                    done = false;
                }
            }
            rows.retain(|r| r.iter().any(|x| !x.is_zero()));
            if done {
                let mut p = pivot_row;
                if p[col].is_negative() {
                    p.iter_mut().for_each(|x| *x = -x.clone());
                }
                out.push(p);
                break;
            }
            rows.push(pivot_row);
        }
    }
    // reduce earlier vectors in each later pivot row
    for j in 0..out.len() {
        let p = Lattice::pivot(&out[j]);
        let pv = out[j][p].clone();
        for i in 0..j {
            let q = out[i][p].div_floor(&pv);
            if !q.is_zero() {
                let bj = out[j].clone();
                for (x, y) in out[i].iter_mut().zip(&bj) {
                    *x -= &q * y;
                }
            }
        }
    }
    out
}
