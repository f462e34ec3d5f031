use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{symmetric, CertError};
use crate::group::{GeneratingSet, GroupElement, GroupError, Semidirect};
use crate::simplicial::{l1_distance, line_point, FiberAction, SPoint};

/// F(vt^k) = k/l on the line with vertex set Z. The subgroup Z^n ⋊ lZ acts
/// by the integer translations ξ ↦ ξ + k/l.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineMap {
    pub l: BigInt,
}

impl LineMap {
    pub fn new(l: &BigInt) -> Result<Self, CertError> {
        if !l.is_positive() {
            return Err(CertError::InvalidRequest(format!("l = {l} must be positive")));
        }
        Ok(LineMap { l: l.clone() })
    }

    pub fn position(&self, g: &GroupElement) -> BigRational {
        BigRational::new(BigInt::from(g.k), self.l.clone())
    }

    pub fn eval(&self, g: &GroupElement) -> SPoint<BigInt> {
        line_point(&self.position(g))
    }

    pub fn in_hbar(&self, h: &GroupElement) -> bool {
        BigInt::from(h.k).is_multiple_of(&self.l)
    }
}

impl FiberAction for LineMap {
    type Vertex = BigInt;

    fn act(&self, h: &GroupElement, v: &BigInt) -> Result<BigInt, GroupError> {
        if !self.in_hbar(h) {
            return Err(GroupError::BadMatrix(format!("t-exponent {} is not a multiple of {}", h.k, self.l)));
        }
        Ok(v + BigInt::from(h.k) / &self.l)
    }
}

/// d¹ between two points of the line complex: 2|ξ − ξ′| inside one edge,
/// never more than 2.
pub fn line_distance_bound(a: &BigRational, b: &BigRational) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    (&two * (a - b).abs()).min(two)
}

/// ⌈2·max|k_s| / ε⌉, at least 1.
pub fn min_passing_l(max_abs_k: u64, eps: &BigRational) -> BigInt {
    let x = BigRational::from_integer(BigInt::from(2 * max_abs_k)) / eps;
    x.ceil().to_integer().max(BigInt::one())
}

pub fn max_abs_k(gens: &GeneratingSet) -> u64 {
    gens.elements.iter().map(|g| g.k.unsigned_abs()).max().unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineReport {
    #[serde(with = "crate::json::bigint_str")]
    pub l: BigInt,
    pub max_abs_k: u64,
    /// 2·max|k_s|/l, valid for every pair (g, gs).
    #[serde(with = "crate::json::rational_str")]
    pub bound: BigRational,
    #[serde(with = "crate::json::rational_str")]
    pub eps: BigRational,
    pub equivariance_samples: usize,
    pub equivariance_exact: bool,
    pub pair_samples: usize,
    /// Sampled pairs (g, gs) where d¹ equals 2|Δk|/l exactly.
    pub pair_matches: usize,
    pub dimension: usize,
    pub passed: bool,
}

fn random_element(rng: &mut ChaCha8Rng, n: usize, k_step: i64) -> GroupElement {
    let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-9..=9)).collect();
    GroupElement::from_i64(&v, k_step * rng.gen_range(-9..=9))
}

pub fn build_line_map(
    grp: &Semidirect,
    l: &BigInt,
    gens: &GeneratingSet,
    eps: &BigRational,
    samples: usize,
    seed: u64,
) -> Result<(LineMap, LineReport), CertError> {
    let map = LineMap::new(l)?;
    let n = grp.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = i64::try_from(l).unwrap_or(i64::MAX / 64).min(i64::MAX / 64);
    let mut equivariance_exact = true;
    for _ in 0..samples {
        let h = random_element(&mut rng, n, step);
        let g = random_element(&mut rng, n, 1);
        let lhs = map.eval(&grp.mul(&h, &g)?);
        let rhs: SPoint<BigInt> =
            map.eval(&g).into_iter().map(|(v, w)| Ok((map.act(&h, &v)?, w))).collect::<Result<_, GroupError>>()?;
        equivariance_exact &= lhs == rhs;
    }
    let sym = symmetric(grp, gens)?;
    let mut pair_matches = 0;
    for _ in 0..samples {
        let g = random_element(&mut rng, n, 1);
        let s = &sym[rng.gen_range(0..sym.len())];
        let gs = grp.mul(&g, s)?;
        let d = l1_distance(&map.eval(&g), &map.eval(&gs));
        let predicted = BigRational::new(BigInt::from(2 * (gs.k - g.k).abs()), l.clone());
        pair_matches += usize::from(d == predicted);
    }
    let k = max_abs_k(gens);
    let bound = BigRational::new(BigInt::from(2 * k), l.clone());
    let passed = bound <= *eps && equivariance_exact && pair_matches == samples;
    let report = LineReport {
        l: l.clone(),
        max_abs_k: k,
        bound,
        eps: eps.clone(),
        equivariance_samples: samples,
        equivariance_exact,
        pair_samples: samples,
        pair_matches,
        dimension: 1,
        passed,
    };
    Ok((map, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::IntMatrix;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn setup() -> (Semidirect, GeneratingSet) {
        let grp = Semidirect::new(IntMatrix::from_i64(&[&[2, 1], &[1, 1]]).unwrap()).unwrap();
        let gens = GeneratingSet {
            elements: vec![GroupElement::from_i64(&[1, 0], 0), GroupElement::from_i64(&[0, 1], 0), GroupElement::from_i64(&[0, 0], 1)],
        };
        (grp, gens)
    }

    #[test]
    fn minimal_l_for_half() {
        assert_eq!(min_passing_l(1, &q(1, 2)), BigInt::from(4));
        assert_eq!(min_passing_l(3, &q(1, 10)), BigInt::from(60));
        assert_eq!(min_passing_l(0, &q(1, 2)), BigInt::from(1));
        let (grp, gens) = setup();
        let fails = build_line_map(&grp, &BigInt::from(3), &gens, &q(1, 2), 50, 0).unwrap().1;
        let passes = build_line_map(&grp, &BigInt::from(4), &gens, &q(1, 2), 50, 0).unwrap().1;
        assert!(!fails.passed && passes.passed);
        assert_eq!(passes.bound, q(1, 2));
    }

    #[test]
    fn same_edge_distance_is_two_over_l() {
        let m = LineMap::new(&BigInt::from(7)).unwrap();
        let a = GroupElement::from_i64(&[0, 0], 3);
        let b = GroupElement::from_i64(&[5, 1], 4);
        assert_eq!(l1_distance(&m.eval(&a), &m.eval(&b)), q(2, 7));
    }

    #[test]
    fn bound_shrinks_with_l() {
        let (grp, gens) = setup();
        let mut last = None;
        for l in [1, 2, 4, 8, 100, 10_000] {
            let r = build_line_map(&grp, &BigInt::from(l), &gens, &q(1, 2), 20, 1).unwrap().1;
            assert!(r.equivariance_exact && r.pair_matches == 20);
            if let Some(prev) = last {
                assert!(r.bound <= prev);
            }
            last = Some(r.bound);
        }
        assert!(last.unwrap() < q(1, 1000));
    }

    #[test]
    fn distance_bound_dominates_l1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let a = q(rng.gen_range(-300..300), rng.gen_range(1..40));
            let b = q(rng.gen_range(-300..300), rng.gen_range(1..40));
            let d = l1_distance(&line_point(&a), &line_point(&b));
            assert!(d <= line_distance_bound(&a, &b));
            if a.floor() == b.floor() {
                assert_eq!(d, line_distance_bound(&a, &b));
            }
        }
    }

    #[test]
    fn hbar_action_rejects_outsiders() {
        let m = LineMap::new(&BigInt::from(4)).unwrap();
        assert!(m.act(&GroupElement::from_i64(&[1, 1], 3), &BigInt::from(0)).is_err());
        assert_eq!(m.act(&GroupElement::from_i64(&[1, 1], -8), &BigInt::from(5)).unwrap(), BigInt::from(3));
    }
}
