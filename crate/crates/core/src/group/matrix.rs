use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GroupError;

/// Square integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self, GroupError> {
        let n = rows.len();
        if n == 0 {
            return Err(GroupError::BadMatrix("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(GroupError::BadMatrix("matrix is not square".into()));
        }
        Ok(IntMatrix { n, entries: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Result<Self, GroupError> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    /// Parses a whitespace/newline separated block, one row per line.
    pub fn parse_text(text: &str) -> Result<Self, GroupError> {
        let rows: Result<Vec<Vec<BigInt>>, _> = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<BigInt>())
                    .collect()
            })
            .collect();
        Self::from_rows(rows.map_err(|e| GroupError::BadMatrix(e.to_string()))?)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix { n, entries: vec![BigInt::zero(); n * n] };
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.entries.chunks(self.n).map(|c| c.to_vec()).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let mut out = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * &other.entries[k * n + j];
                }
            }
        }
        IntMatrix { n, entries: out }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = BigInt::zero();
                for j in 0..n {
                    if !v[j].is_zero() {
                        acc += &self.entries[i * n + j] * &v[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        IntMatrix {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    /// Nonnegative exponent only; see `Semidirect::power` for signed powers.
    pub fn pow(&self, mut e: u64) -> IntMatrix {
        let mut base = self.clone();
        let mut acc = Self::identity(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        let mut m: Vec<Vec<BigInt>> = self.rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(i) => {
                        m.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = t / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        sign * &m[n - 1][n - 1]
    }

    /// Integer inverse; requires det = ±1.
    pub fn inverse_unimodular(&self) -> Result<IntMatrix, GroupError> {
        let det = self.det();
        if det.abs() != BigInt::one() {
            return Err(GroupError::NotUnimodular(det));
        }
        let n = self.n;
        if n == 1 {
            return Ok(IntMatrix { n, entries: vec![det] });
        }
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(j, i);
                let c = minor.det();
                let c = if (i + j) % 2 == 0 { c } else { -c };
                entries[i * n + j] = c * &det;
            }
        }
        Ok(IntMatrix { n, entries })
    }

    fn minor(&self, row: usize, col: usize) -> IntMatrix {
        let n = self.n;
        let entries = (0..n)
            .filter(|&i| i != row)
            .flat_map(|i| (0..n).filter(move |&j| j != col).map(move |j| (i, j)))
            .map(|(i, j)| self.entries[i * n + j].clone())
            .collect();
        IntMatrix { n: n - 1, entries }
    }

    /// Entries reduced into [0, s).
    pub fn reduce_mod(&self, s: u64) -> Vec<u64> {
        let m = BigInt::from(s);
        self.entries
            .iter()
            .map(|x| {
                let r = x.mod_floor(&m);
                u64::try_from(r).expect("residue fits")
            })
            .collect()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    #[serde(with = "crate::json::mat_bigint_str")]
    rows: Vec<Vec<BigInt>>,
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson { n: self.n, rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.rows.len() != raw.n {
            return Err(serde::de::Error::custom("row count does not match n"));
        }
        IntMatrix::from_rows(raw.rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows).unwrap()
    }

    #[test]
    fn det_matches_cofactor_expansion() {
        let a = m(&[&[2, 1, 0], &[1, 1, 3], &[0, -2, 5]]);
        // 2*(5+6) - 1*(5-0) + 0
        assert_eq!(a.det(), BigInt::from(17));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), BigInt::from(-1));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det(), BigInt::from(0));
    }

    #[test]
    fn inverse_of_cat_map() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse_unimodular().unwrap();
        assert_eq!(inv, m(&[&[1, -1], &[-1, 2]]));
        assert!(a.mul(&inv).is_identity());
        assert!(m(&[&[2, 0], &[0, 1]]).inverse_unimodular().is_err());
    }

    #[test]
    fn json_and_text_input() {
        let a: IntMatrix = serde_json::from_str(r#"{"n":2,"rows":[[2,1],[1,"1"]]}"#).unwrap();
        assert_eq!(a, m(&[&[2, 1], &[1, 1]]));
        assert_eq!(IntMatrix::parse_text("2 1\n1 1\n").unwrap(), a);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"n":2,"rows":[["2","1"],["1","1"]]}"#);
        assert!(serde_json::from_str::<IntMatrix>(r#"{"n":3,"rows":[[2,1],[1,1]]}"#).is_err());
    }

    #[test]
    fn pow_and_reduce() {
        let a = m(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.pow(3), a.mul(&a).mul(&a));
        assert_eq!(m(&[&[-1, 3], &[7, 2]]).reduce_mod(5), vec![4, 3, 2, 2]);
    }
}
