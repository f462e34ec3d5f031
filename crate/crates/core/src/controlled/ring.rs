use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact commutative coefficient ring.
pub trait Ring:
    Clone + PartialEq + Debug + Zero + One + Neg<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Send + Sync
{
    /// Size used for residual reporting.
    fn magnitude(&self) -> f64;

    /// Image of an integer.
    fn from_bigint(x: &BigInt) -> Self;

    /// Embedding into Q, when there is one.
    fn as_rational(&self) -> Option<BigRational> {
        None
    }

    fn from_rational(_: &BigRational) -> Option<Self> {
        None
    }
}

impl Ring for BigInt {
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_bigint(x: &BigInt) -> Self {
        x.clone()
    }

    fn as_rational(&self) -> Option<BigRational> {
        Some(BigRational::from_integer(self.clone()))
    }

    fn from_rational(q: &BigRational) -> Option<Self> {
        q.is_integer().then(|| q.to_integer())
    }
}

impl Ring for BigRational {
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_bigint(x: &BigInt) -> Self {
        BigRational::from_integer(x.clone())
    }

    fn as_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn from_rational(q: &BigRational) -> Option<Self> {
        Some(q.clone())
    }
}

/// Integers mod M, stored reduced.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Zmod<const M: u64>(u64);

impl<const M: u64> Zmod<M> {
    pub fn new(x: i64) -> Self {
        Zmod(x.rem_euclid(M as i64) as u64)
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl<const M: u64> Debug for Zmod<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {M}", self.0)
    }
}

impl<const M: u64> Add for Zmod<M> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Zmod(((self.0 as u128 + o.0 as u128) % M as u128) as u64)
    }
}

impl<const M: u64> Sub for Zmod<M> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const M: u64> Neg for Zmod<M> {
    type Output = Self;
    fn neg(self) -> Self {
        Zmod((M - self.0) % M)
    }
}

impl<const M: u64> Mul for Zmod<M> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Zmod(((self.0 as u128 * o.0 as u128) % M as u128) as u64)
    }
}

impl<const M: u64> Zero for Zmod<M> {
    fn zero() -> Self {
        Zmod(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl<const M: u64> One for Zmod<M> {
    fn one() -> Self {
        Zmod(1 % M)
    }
}

impl<const M: u64> Ring for Zmod<M> {
    fn magnitude(&self) -> f64 {
        self.0 as f64
    }

    fn from_bigint(x: &BigInt) -> Self {
        let r = x.mod_floor(&BigInt::from(M));
        Zmod(r.to_u64().expect("reduced"))
    }
}

impl<const M: u64> fmt::Display for Zmod<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense row-major matrix over a ring.
#[derive(Clone, PartialEq)]
pub struct Matrix<R> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<R>,
}

impl<R: Debug> Debug for Matrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.cols.max(1))).finish()
    }
}

impl<R: Ring> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![R::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        Matrix { rows, cols, data: (0..rows * cols).map(|i| f(i / cols, i % cols)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn entries(&self) -> &[R] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o.data[k * o.cols + j];
                    if !b.is_zero() {
                        let idx = i * o.cols + j;
                        out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a.clone()).collect() }
    }

    pub fn scale(&self, c: &R) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| c.clone() * a.clone()).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// Kronecker product.
    pub fn kron(&self, o: &Self) -> Self {
        Self::from_fn(self.rows * o.rows, self.cols * o.cols, |i, j| {
            self[(i / o.rows, j / o.cols)].clone() * o[(i % o.rows, j % o.cols)].clone()
        })
    }

    /// Copies `block` with its top-left corner at (r, c).
    pub fn set_block(&mut self, r: usize, c: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r + i, c + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn block(&self, r: usize, c: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r + i, c + j)].clone())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(Ring::magnitude).fold(0.0, f64::max)
    }
}

impl<R> std::ops::Index<(usize, usize)> for Matrix<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R> std::ops::IndexMut<(usize, usize)> for Matrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

impl Matrix<BigRational> {
    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            for j in 0..m.cols {
                m.data.swap(r * m.cols + j, p * m.cols + j);
            }
            let inv = m[(r, c)].recip();
            for j in 0..m.cols {
                m[(r, j)] = &m[(r, j)] * &inv;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..m.cols {
                        let v = &m[(r, j)] * &f;
                        m[(i, j)] = &m[(i, j)] - v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == m.rows {
                break;
            }
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn det(&self) -> BigRational {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let n = m.rows;
        let mut det = BigRational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else { return BigRational::zero() };
            if p != c {
                for j in 0..n {
                    m.data.swap(c * n + j, p * n + j);
                }
                det = -det;
            }
            det *= &m[(c, c)];
            for i in c + 1..n {
                if !m[(i, c)].is_zero() {
                    let f = &m[(i, c)] / &m[(c, c)];
                    for j in c..n {
                        let v = &m[(c, j)] * &f;
                        m[(i, j)] = &m[(i, j)] - v;
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.rows;
        if n != self.cols {
            return None;
        }
        let mut aug = Self::zeros(n, 2 * n);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, &Self::identity(n));
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(r.block(0, n, n, n))
    }

    /// Some X with self·X = b, if one exists.
    pub fn solve(&self, b: &Self) -> Option<Self> {
        let mut aug = Self::zeros(self.rows, self.cols + b.cols);
        aug.set_block(0, 0, self);
        aug.set_block(0, self.cols, b);
        let (r, pivots) = aug.rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Self::zeros(self.cols, b.cols);
        for (i, &c) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(c, j)] = r[(i, self.cols + j)].clone();
            }
        }
        Some(x)
    }
}

pub fn to_rational(m: &Matrix<BigInt>) -> Matrix<BigRational> {
    Matrix::from_fn(m.rows, m.cols, |i, j| BigRational::from_integer(m[(i, j)].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64) -> BigRational {
        BigRational::from_integer(a.into())
    }

    fn mat(rows: &[&[i64]]) -> Matrix<BigRational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect())
    }

    #[test]
    fn zmod_arithmetic() {
        type Z7 = Zmod<7>;
        assert_eq!(Z7::new(3) * Z7::new(5), Z7::new(1));
        assert_eq!(Z7::new(-1), Z7::new(6));
        assert_eq!(Z7::new(2) - Z7::new(5), Z7::new(4));
        assert!((Z7::new(3) + Z7::new(4)).is_zero());
    }

    #[test]
    fn det_and_inverse() {
        let a = mat(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.det(), q(1));
        assert_eq!(a.mul(&a.inverse().unwrap()), Matrix::identity(2));
        assert!(mat(&[&[1, 2], &[2, 4]]).inverse().is_none());
        // cofactor expansion oracle for 3×3
        let b = mat(&[&[1, 2, 3], &[0, 4, 5], &[1, 0, 6]]);
        let cof = q(1) * (q(4) * q(6) - q(5) * q(0)) - q(2) * (q(0) * q(6) - q(5) * q(1)) + q(3) * (q(0) * q(0) - q(4) * q(1));
        assert_eq!(b.det(), cof);
    }

    #[test]
    fn kron_shape() {
        let a = mat(&[&[1, 2]]);
        let b = mat(&[&[0, 1], &[1, 0]]);
        let k = a.kron(&b);
        assert_eq!((k.rows, k.cols), (2, 4));
        assert_eq!(k, mat(&[&[0, 1, 0, 2], &[1, 0, 2, 0]]));
    }

    proptest! {
        #[test]
        fn solve_is_a_solution(entries in prop::collection::vec(-4i64..5, 12), rhs in prop::collection::vec(-4i64..5, 3)) {
            let a = Matrix::from_fn(3, 4, |i, j| q(entries[i * 4 + j]));
            let b = Matrix::from_fn(3, 1, |i, _| q(rhs[i]));
            if let Some(x) = a.solve(&b) {
                prop_assert_eq!(a.mul(&x), b);
            } else {
                prop_assert!(a.rank() < 3);
            }
        }

        #[test]
        fn det_is_multiplicative(x in prop::collection::vec(-3i64..4, 9), y in prop::collection::vec(-3i64..4, 9)) {
            let a = Matrix::from_fn(3, 3, |i, j| q(x[i * 3 + j]));
            let b = Matrix::from_fn(3, 3, |i, j| q(y[i * 3 + j]));
            prop_assert_eq!(a.mul(&b).det(), a.det() * b.det());
        }
    }
}
