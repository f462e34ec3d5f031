//! Element-level machinery for F = (Z/s)^n ⋊_{A_s} Z/r: closures,
//! hyper-elementarity, subgroup enumeration and the two lemmas about
//! preimages of hyper-elementary subgroups.

mod enumerate;
mod quotient;
mod shape;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::primes::{factor_u64, prime_power};
use crate::group::{FiniteElement, GroupError};

pub use enumerate::{
    enumerate_hyperelementary, enumerate_subgroups, sample_hyperelementary, HyperSubgroup, SampleConfig, SampledSubgroup,
};
pub use quotient::FiniteQuotient;
pub use shape::{check_lemma_hyp_elm_shape, verify_witness_shape, QuotientShape};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HyperError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("closure exceeded cap {0}")]
    CapExceeded(u64),
    #[error("lemma falsified: {0}")]
    LemmaFalsified(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
}

/// Subgroup of a finite quotient as an explicit sorted set of element codes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiniteSubgroup {
    pub elements: Vec<u64>,
    pub gens: Vec<u64>,
}

impl FiniteSubgroup {
    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }
}

/// C ⊴ H cyclic with |H/C| = p^a.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct HyperWitness {
    pub cyclic_gen: FiniteElement,
    pub p: u64,
    pub quotient_order: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum LemmaCase {
    /// H ∩ (Z/s)^n ⊆ (qZ/s)^n
    LatticeDivisible,
    /// image of H in Z/r lies in q·Z/r
    ImageDivisible,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub q: u64,
    pub case: LemmaCase,
}

enum Membership {
    Bits(Vec<u64>),
    Hash(HashSet<u64>),
}

impl Membership {
    fn new(size: u64) -> Self {
        if size <= 1 << 24 {
            Membership::Bits(vec![0; (size as usize).div_ceil(64)])
        } else {
            Membership::Hash(HashSet::new())
        }
    }

    fn insert(&mut self, x: u64) -> bool {
        match self {
            Membership::Bits(b) => {
                let (w, m) = ((x / 64) as usize, 1u64 << (x % 64));
                let fresh = b[w] & m == 0;
                b[w] |= m;
                fresh
            }
            Membership::Hash(h) => h.insert(x),
        }
    }
}

/// The subgroup generated by `gens`, enumerated.
pub fn closure(fq: &FiniteQuotient, gens: &[u64], cap: u64) -> Result<FiniteSubgroup, HyperError> {
    closure_from(fq, &[fq.identity_code()], gens, cap)
}

/// Closure of an already closed set `base` together with extra generators.
fn closure_from(fq: &FiniteQuotient, base: &[u64], gens: &[u64], cap: u64) -> Result<FiniteSubgroup, HyperError> {
    let mut seen = Membership::new(fq.size());
    let mut elements: Vec<u64> = Vec::with_capacity(base.len() * 2);
    for &x in base {
        seen.insert(x);
        elements.push(x);
    }
    let mut all_gens: Vec<u64> = gens.to_vec();
    all_gens.sort_unstable();
    all_gens.dedup();
    let mut i = 0;
    while i < elements.len() {
        let x = elements[i];
        for &g in &all_gens {
            let y = fq.mul(x, g);
            if seen.insert(y) {
                if elements.len() as u64 >= cap {
                    return Err(HyperError::CapExceeded(cap));
                }
                elements.push(y);
            }
        }
        i += 1;
    }
    elements.sort_unstable();
    Ok(FiniteSubgroup { elements, gens: all_gens })
}

/// Search for a normal cyclic subgroup with prime-power index.
pub fn is_hyperelementary(fq: &FiniteQuotient, h: &FiniteSubgroup) -> Option<HyperWitness> {
    let m = h.order();
    let factors = factor_u64(m);
    let smallest_p = factors.first().map_or(2, |f| f.0);
    // element orders, largest cyclic subgroups first
    let mut cands: Vec<(u64, u64)> = h
        .elements
        .iter()
        .map(|&x| (fq.order_of(x, &factors), x))
        .filter(|&(o, _)| m / o == 1 || prime_power(m / o).is_some())
        .collect();
    cands.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut tested: HashSet<u64> = HashSet::new();
    for (ord, x) in cands {
        if tested.contains(&x) {
            continue;
        }
        let cyc = fq.powers(x);
        debug_assert_eq!(cyc.len() as u64, ord);
        for (j, &y) in cyc.iter().enumerate() {
            if num_integer::gcd(j as u64, ord) == 1 {
                tested.insert(y);
            }
        }
        let set: HashSet<u64> = cyc.iter().copied().collect();
        let normal = h.gens.iter().all(|&g| set.contains(&fq.conj(g, x)));
        if normal {
            let quotient_order = m / ord;
            let p = prime_power(quotient_order).map_or(smallest_p, |(p, _)| p);
            return Some(HyperWitness { cyclic_gen: fq.decode(x), p, quotient_order });
        }
    }
    None
}

/// Re-checks a witness against an explicit subgroup.
pub fn verify_witness(fq: &FiniteQuotient, h: &FiniteSubgroup, w: &HyperWitness) -> Result<(), HyperError> {
    let c = fq.encode(&w.cyclic_gen).ok_or_else(|| HyperError::InvalidWitness("generator outside F".into()))?;
    if !h.contains(c) {
        return Err(HyperError::InvalidWitness("generator not in H".into()));
    }
    let cyc: HashSet<u64> = fq.powers(c).into_iter().collect();
    if !h.order().is_multiple_of(cyc.len() as u64) || h.order() / cyc.len() as u64 != w.quotient_order {
        return Err(HyperError::InvalidWitness("quotient order mismatch".into()));
    }
    if w.quotient_order != 1 && prime_power(w.quotient_order).map(|x| x.0) != Some(w.p) {
        return Err(HyperError::InvalidWitness("quotient is not a p-group".into()));
    }
    if !h.gens.iter().all(|&g| cyc.contains(&fq.conj(g, c))) {
        return Err(HyperError::InvalidWitness("cyclic subgroup not normal".into()));
    }
    Ok(())
}

/// Finds q ∈ {p1, p2} for a hyper-elementary H by scanning its elements.
pub fn check_lemma_hyp_elm(
    fq: &FiniteQuotient,
    h: &FiniteSubgroup,
    p1: u64,
    p2: u64,
) -> Result<LemmaOutcome, HyperError> {
    if p1 * p2 != fq.s() {
        return Err(HyperError::PreconditionFailed(format!("s = {} is not {p1}·{p2}", fq.s())));
    }
    for q in [p1, p2] {
        let mut lattice_ok = true;
        let mut image_ok = true;
        for &x in &h.elements {
            let e = fq.decode(x);
            if e.k == 0 {
                lattice_ok &= e.v.iter().all(|c| c % q == 0);
            }
            image_ok &= e.k.is_multiple_of(q);
        }
        let case = match (lattice_ok, image_ok) {
            (true, true) => LemmaCase::Both,
            (true, false) => LemmaCase::LatticeDivisible,
            (false, true) => LemmaCase::ImageDivisible,
            (false, false) => continue,
        };
        return Ok(LemmaOutcome { q, case });
    }
    Err(HyperError::LemmaFalsified(format!(
        "no q in {{{p1}, {p2}}} for subgroup of order {}",
        h.order()
    )))
}

/// Prime power q^N | r with q^N ∤ |image of C| and q | |C ∩ (Z/s)^n|.
pub fn find_lemma_prime_power(fq: &FiniteQuotient, c: &FiniteSubgroup) -> Result<(u64, u32), HyperError> {
    let lattice_part = c.elements.iter().filter(|&&x| fq.decode(x).k == 0).count() as u64;
    if lattice_part <= 1 {
        return Err(HyperError::PreconditionFailed("C ∩ (Z/s)^n is trivial".into()));
    }
    let is_cyclic = c.elements.iter().any(|&x| fq.order_of(x, &factor_u64(c.order())) == c.order());
    if !is_cyclic {
        return Err(HyperError::PreconditionFailed("C is not cyclic".into()));
    }
    let image = c.order() / lattice_part;
    for (q, e) in factor_u64(fq.r()) {
        if !lattice_part.is_multiple_of(q) {
            continue;
        }
        for n in 1..=e {
            if !image.is_multiple_of(q.pow(n)) {
                return Ok((q, n));
            }
        }
    }
    Err(HyperError::LemmaFalsified(format!(
        "no prime power for cyclic C of order {} (lattice part {lattice_part})",
        c.order()
    )))
}
