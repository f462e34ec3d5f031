use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{closure, is_hyperelementary, FiniteQuotient, FiniteSubgroup, HyperError, HyperWitness, QuotientShape};
use crate::group::primes::{factor_u64, prime_power};
use crate::group::FiniteElement;

/// A hyper-elementary subgroup together with the witness that proves it.
#[derive(Clone, Debug)]
pub struct HyperSubgroup {
    pub subgroup: FiniteSubgroup,
    pub witness: HyperWitness,
}

/// One representative generator per cyclic subgroup of prime-power order.
fn prime_power_cyclics(fq: &FiniteQuotient) -> Vec<u64> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for x in 1..fq.size() {
        if seen.contains(&x) {
            continue;
        }
        let cyc = fq.powers(x);
        let ord = cyc.len() as u64;
        for (j, &y) in cyc.iter().enumerate() {
            if num_integer::gcd(j as u64, ord) == 1 {
                seen.insert(y);
            }
        }
        if prime_power(ord).is_some() {
            out.push(x);
        }
    }
    out
}

/// Every subgroup of F, by breadth-first joins with cyclic subgroups of
/// prime-power order. Each subgroup is reached because it is generated by
/// its elements of prime-power order.
pub fn enumerate_subgroups(fq: &FiniteQuotient, cap: u64) -> Result<Vec<FiniteSubgroup>, HyperError> {
    if fq.size() > cap || fq.size() > u64::from(u32::MAX) {
        return Err(HyperError::CapExceeded(cap));
    }
    let size = fq.size() as usize;
    let cyclics = prime_power_cyclics(fq);
    // right multiplication by each cyclic generator, tabulated
    let right: Vec<Vec<u32>> = cyclics
        .iter()
        .map(|&c| (0..fq.size()).map(|x| fq.mul(x, c) as u32).collect())
        .collect();
    let mut index: HashSet<Vec<u32>> = HashSet::from([vec![0]]);
    let mut all: Vec<(Vec<u32>, Vec<usize>)> = vec![(vec![0], vec![])];
    let mut seen = vec![false; size];
    let mut i = 0;
    while i < all.len() {
        let (elements, gens) = all[i].clone();
        for (ci, &c) in cyclics.iter().enumerate() {
            if elements.binary_search(&(c as u32)).is_ok() {
                continue;
            }
            let mut g = gens.clone();
            g.push(ci);
            seen.iter_mut().for_each(|b| *b = false);
            let mut join = elements.clone();
            join.iter().for_each(|&x| seen[x as usize] = true);
            let mut k = 0;
            while k < join.len() {
                let x = join[k] as usize;
                for &gi in &g {
                    let y = right[gi][x];
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        join.push(y);
                    }
                }
                k += 1;
            }
            join.sort_unstable();
            if index.insert(join.clone()) {
                all.push((join, g));
            }
        }
        i += 1;
    }
    Ok(all
        .into_iter()
        .map(|(elements, gens)| FiniteSubgroup {
            elements: elements.into_iter().map(u64::from).collect(),
            gens: gens.into_iter().map(|i| cyclics[i]).collect(),
        })
        .collect())
}

/// Exhaustive list of hyper-elementary subgroups with witnesses.
pub fn enumerate_hyperelementary(fq: &FiniteQuotient, cap: u64) -> Result<Vec<HyperSubgroup>, HyperError> {
    Ok(enumerate_subgroups(fq, cap)?
        .into_iter()
        .filter_map(|h| is_hyperelementary(fq, &h).map(|w| HyperSubgroup { subgroup: h, witness: w }))
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub max_gens: usize,
    /// Subgroups larger than this are not enumerated and are skipped.
    pub enumeration_cap: u64,
    pub attempt_cap: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { samples: 100, seed: 0, max_gens: 3, enumeration_cap: 20_000, attempt_cap: 20_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledSubgroup {
    pub gens: Vec<FiniteElement>,
    pub order: u64,
    pub witness: HyperWitness,
}

fn random_divisor(rng: &mut ChaCha8Rng, factors: &[(u64, u32)]) -> u64 {
    factors.iter().map(|&(p, e)| p.pow(rng.gen_range(0..=e))).product()
}

/// Hyper-elementary subgroups generated by at most `max_gens` random
/// elements, deduplicated by preimage normal form. Generators are random
/// elements raised to random divisors of |F| so that small subgroups show up.
pub fn sample_hyperelementary(fq: &FiniteQuotient, cfg: &SampleConfig) -> Result<Vec<SampledSubgroup>, HyperError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut size_factors = factor_u64(fq.lattice_size());
    for (p, e) in factor_u64(fq.r()) {
        match size_factors.iter_mut().find(|(q, _)| *q == p) {
            Some(entry) => entry.1 += e,
            None => size_factors.push((p, e)),
        }
    }
    let mut seen: HashSet<QuotientShape> = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < cfg.samples {
        if attempts >= cfg.attempt_cap {
            return Err(HyperError::CapExceeded(cfg.attempt_cap as u64));
        }
        attempts += 1;
        let count = rng.gen_range(1..=cfg.max_gens.max(1));
        let lattice_only = rng.gen_bool(0.25);
        let gens: Vec<FiniteElement> = (0..count)
            .map(|_| {
                let mut x = FiniteElement {
                    v: (0..fq.n()).map(|_| rng.gen_range(0..fq.s())).collect(),
                    k: if lattice_only { 0 } else { rng.gen_range(0..fq.r()) },
                };
                x = fq.pow_el(&x, random_divisor(&mut rng, &size_factors));
                x
            })
            .collect();
        let shape = QuotientShape::from_gens(fq, &gens);
        if seen.contains(&shape) {
            continue;
        }
        let order = shape.order(fq);
        let witness = if let [g] = gens.as_slice() {
            HyperWitness { cyclic_gen: g.clone(), p: 2, quotient_order: 1 }
        } else {
            if order > cfg.enumeration_cap {
                continue;
            }
            let codes: Vec<u64> = gens.iter().map(|g| fq.encode(g).expect("reduced")).collect();
            let h = closure(fq, &codes, cfg.enumeration_cap)?;
            match is_hyperelementary(fq, &h) {
                Some(w) => w,
                None => continue,
            }
        };
        seen.insert(shape);
        out.push(SampledSubgroup { gens, order, witness });
    }
    Ok(out)
}
