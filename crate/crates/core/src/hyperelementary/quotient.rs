use crate::group::{FiniteElement, FiniteQuotientDesc, GroupError};

/// Runtime form of a finite quotient with A_s^k tabulated for k < r.
///
/// Elements are coded as k·s^n + Σ v_i s^i.
#[derive(Clone, Debug)]
pub struct FiniteQuotient {
    desc: FiniteQuotientDesc,
    n: usize,
    s: u64,
    r: u64,
    lattice_size: u64,
    pows: Vec<u64>,
}

impl FiniteQuotient {
    pub fn new(desc: &FiniteQuotientDesc) -> Result<Self, GroupError> {
        let n = desc.n;
        let s = desc.s;
        let lattice_size = s
            .checked_pow(n as u32)
            .filter(|l| l.checked_mul(desc.r).is_some())
            .ok_or_else(|| GroupError::InvalidDescriptor("|F| does not fit in 64 bits".into()))?;
        let a = desc.a_mod_s.reduce_mod(s);
        let mut pows = Vec::with_capacity(desc.r as usize * n * n);
        let mut cur: Vec<u64> = (0..n * n).map(|i| u64::from(i / n == i % n)).collect();
        for _ in 0..desc.r {
            pows.extend_from_slice(&cur);
            cur = matmul(&cur, &a, n, s);
        }
        if cur.iter().enumerate().any(|(i, &x)| x != u64::from(i / n == i % n)) {
            return Err(GroupError::InvalidDescriptor("A^r is not the identity mod s".into()));
        }
        Ok(FiniteQuotient { desc: desc.clone(), n, s, r: desc.r, lattice_size, pows })
    }

    pub fn desc(&self) -> &FiniteQuotientDesc {
        &self.desc
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn size(&self) -> u64 {
        self.lattice_size * self.r
    }

    pub fn lattice_size(&self) -> u64 {
        self.lattice_size
    }

    /// A_s^k, k reduced mod r.
    pub fn apow(&self, k: u64) -> &[u64] {
        let k = (k % self.r) as usize;
        let nn = self.n * self.n;
        &self.pows[k * nn..(k + 1) * nn]
    }

    pub fn identity_code(&self) -> u64 {
        0
    }

    pub fn encode(&self, e: &FiniteElement) -> Option<u64> {
        if e.v.len() != self.n || e.k >= self.r || e.v.iter().any(|&c| c >= self.s) {
            return None;
        }
        Some(self.encode_parts(&e.v, e.k))
    }

    fn encode_parts(&self, v: &[u64], k: u64) -> u64 {
        let mut code = 0;
        for &c in v.iter().rev() {
            code = code * self.s + c;
        }
        k * self.lattice_size + code
    }

    pub fn decode(&self, mut x: u64) -> FiniteElement {
        let k = x / self.lattice_size;
        x %= self.lattice_size;
        let v = (0..self.n)
            .map(|_| {
                let c = x % self.s;
                x /= self.s;
                c
            })
            .collect();
        FiniteElement { v, k }
    }

    pub fn mul_el(&self, a: &FiniteElement, b: &FiniteElement) -> FiniteElement {
        let m = self.apow(a.k);
        let n = self.n;
        let s = self.s as u128;
        let v = (0..n)
            .map(|i| {
                let mut acc = a.v[i] as u128;
                for j in 0..n {
                    acc += m[i * n + j] as u128 * b.v[j] as u128;
                }
                (acc % s) as u64
            })
            .collect();
        FiniteElement { v, k: (a.k + b.k) % self.r }
    }

    pub fn inv_el(&self, a: &FiniteElement) -> FiniteElement {
        let k = (self.r - a.k % self.r) % self.r;
        let m = self.apow(k);
        let n = self.n;
        let s = self.s as u128;
        let v = (0..n)
            .map(|i| {
                let mut acc = 0u128;
                for j in 0..n {
                    acc += m[i * n + j] as u128 * a.v[j] as u128;
                }
                ((s - acc % s) % s) as u64
            })
            .collect();
        FiniteElement { v, k }
    }

    pub fn pow_el(&self, a: &FiniteElement, e: u64) -> FiniteElement {
        let mut acc = FiniteElement { v: vec![0; self.n], k: 0 };
        let mut b = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_el(&acc, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul_el(&b, &b);
            }
        }
        acc
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let x = self.mul_el(&self.decode(a), &self.decode(b));
        self.encode_parts(&x.v, x.k)
    }

    pub fn inv(&self, a: u64) -> u64 {
        let x = self.inv_el(&self.decode(a));
        self.encode_parts(&x.v, x.k)
    }

    pub fn conj(&self, g: u64, x: u64) -> u64 {
        self.mul(self.mul(g, x), self.inv(g))
    }

    /// Order of x given the factorization of a multiple of it.
    pub fn order_of(&self, x: u64, multiple_factors: &[(u64, u32)]) -> u64 {
        let e = self.decode(x);
        let mut ord: u64 = multiple_factors.iter().map(|&(p, k)| p.pow(k)).product();
        for &(p, _) in multiple_factors {
            while ord.is_multiple_of(p) && is_identity(&self.pow_el(&e, ord / p)) {
                ord /= p;
            }
        }
        ord
    }

    /// x^0, x^1, …, x^{ord−1}.
    pub fn powers(&self, x: u64) -> Vec<u64> {
        let mut out = vec![0];
        let mut cur = x;
        while cur != 0 {
            out.push(cur);
            cur = self.mul(cur, x);
        }
        out
    }

    /// Full element order, factoring |F|.
    pub fn element_order(&self, x: u64) -> u64 {
        let mut f = crate::group::primes::factor_u64(self.lattice_size);
        for (p, e) in crate::group::primes::factor_u64(self.r) {
            match f.iter_mut().find(|(q, _)| *q == p) {
                Some(entry) => entry.1 += e,
                None => f.push((p, e)),
            }
        }
        self.order_of(x, &f)
    }
}

fn is_identity(e: &FiniteElement) -> bool {
    e.k == 0 && e.v.iter().all(|&c| c == 0)
}

fn matmul(a: &[u64], b: &[u64], n: usize, s: u64) -> Vec<u64> {
    let mut out = vec![0u64; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0u128;
            for l in 0..n {
                acc += a[i * n + l] as u128 * b[l * n + j] as u128;
            }
            out[i * n + j] = (acc % s as u128) as u64;
        }
    }
    out
}
