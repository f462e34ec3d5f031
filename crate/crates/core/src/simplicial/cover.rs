use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{SPoint, SimplicialComplex, SimplicialError};

/// A finite window of an open cover with decidable membership and
/// intersections, plus the distance of a point to a member's complement.
pub trait Cover {
    type Point;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn contains(&self, i: usize, x: &Self::Point) -> bool;

    /// Whether the members listed share a point.
    fn meet(&self, members: &[usize]) -> bool;

    fn dist_to_complement(&self, i: usize, x: &Self::Point) -> BigRational;
}

/// Open box Π (lo_i, hi_i) with the sup metric.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct OpenBox {
    #[serde(with = "crate::json::vec_rational_str")]
    pub lo: Vec<BigRational>,
    #[serde(with = "crate::json::vec_rational_str")]
    pub hi: Vec<BigRational>,
}

impl OpenBox {
    pub fn contains(&self, x: &[BigRational]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((x, lo), hi)| lo < x && x < hi)
    }

    pub fn dist_to_complement(&self, x: &[BigRational]) -> BigRational {
        if !self.contains(x) {
            return BigRational::zero();
        }
        x.iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .map(|((x, lo), hi)| (x - lo).min(hi - x))
            .min()
            .unwrap_or_else(BigRational::zero)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BoxCover {
    pub boxes: Vec<OpenBox>,
}

impl Cover for BoxCover {
    type Point = Vec<BigRational>;

    fn len(&self) -> usize {
        self.boxes.len()
    }

    fn contains(&self, i: usize, x: &Vec<BigRational>) -> bool {
        self.boxes[i].contains(x)
    }

    fn meet(&self, members: &[usize]) -> bool {
        let Some(&first) = members.first() else { return true };
        (0..self.boxes[first].lo.len()).all(|c| {
            let lo = members.iter().map(|&i| &self.boxes[i].lo[c]).max().unwrap();
            let hi = members.iter().map(|&i| &self.boxes[i].hi[c]).min().unwrap();
            lo < hi
        })
    }

    fn dist_to_complement(&self, i: usize, x: &Vec<BigRational>) -> BigRational {
        self.boxes[i].dist_to_complement(x)
    }
}

/// Vertex per member, simplex per subfamily with a common point.
pub fn nerve<C: Cover>(cover: &C) -> SimplicialComplex {
    let mut out = SimplicialComplex::default();
    let mut layer: Vec<Vec<usize>> = (0..cover.len()).filter(|&i| cover.meet(&[i])).map(|i| vec![i]).collect();
    while !layer.is_empty() {
        for s in &layer {
            out.add_simplex(s.clone());
        }
        let mut next = Vec::new();
        for s in &layer {
            let last = *s.last().unwrap();
            for j in last + 1..cover.len() {
                let mut t = s.clone();
                t.push(j);
                // every face must already be present, which prunes most candidates
                let faces_present = (0..t.len() - 1).all(|k| {
                    let mut f = t.clone();
                    f.remove(k);
                    out.contains(&f)
                });
                if faces_present && cover.meet(&t) {
                    next.push(t);
                }
            }
        }
        layer = next;
    }
    out
}

/// Partition of unity: weights proportional to distance to the complement.
pub fn pou_map<C: Cover>(cover: &C, x: &C::Point) -> Result<SPoint<usize>, SimplicialError> {
    let weights: Vec<(usize, BigRational)> = (0..cover.len())
        .filter(|&i| cover.contains(i, x))
        .map(|i| (i, cover.dist_to_complement(i, x)))
        .filter(|(_, a)| a.is_positive())
        .collect();
    let total: BigRational = weights.iter().map(|(_, a)| a).sum();
    if total.is_zero() {
        return Err(SimplicialError::NoCover);
    }
    Ok(weights.into_iter().map(|(i, a)| (i, a / &total)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn intervals(iv: &[(i64, i64)]) -> BoxCover {
        BoxCover {
            boxes: iv.iter().map(|&(a, b)| OpenBox { lo: vec![q(a, 1)], hi: vec![q(b, 1)] }).collect(),
        }
    }

    /// Open arcs (start, start + len) on R/Z, all of length < 1/2.
    struct Arcs(Vec<(BigRational, BigRational)>);

    impl Arcs {
        fn offset(&self, i: usize, x: &BigRational) -> BigRational {
            let d = x - &self.0[i].0;
            &d - BigRational::from_integer(d.floor().to_integer())
        }
    }

    impl Cover for Arcs {
        type Point = BigRational;

        fn len(&self) -> usize {
            self.0.len()
        }

        fn contains(&self, i: usize, x: &BigRational) -> bool {
            let o = self.offset(i, x);
            o.is_positive() && o < self.0[i].1
        }

        fn meet(&self, members: &[usize]) -> bool {
            // a common point can be found just after some member's start
            members.iter().any(|&i| {
                let eps = q(1, 1_000_000);
                let x = &self.0[i].0 + eps;
                members.iter().all(|&j| self.contains(j, &x))
            })
        }

        fn dist_to_complement(&self, i: usize, x: &BigRational) -> BigRational {
            let o = self.offset(i, x);
            (o.clone()).min(&self.0[i].1 - o)
        }
    }

    #[test]
    fn nerve_examples() {
        let disjoint = nerve(&intervals(&[(0, 1), (2, 3)]));
        assert_eq!((disjoint.count(0), disjoint.count(1)), (2, 0));
        let overlap = nerve(&intervals(&[(0, 2), (1, 3)]));
        assert_eq!(overlap.maximal_simplices(), vec![vec![0, 1]]);
        // three arcs meeting pairwise but with no common point
        let arcs = Arcs(vec![(q(0, 1), q(9, 20)), (q(3, 10), q(9, 20)), (q(3, 5), q(9, 20))]);
        let c = nerve(&arcs);
        assert_eq!(c.count(1), 3);
        assert_eq!(c.count(2), 0);
    }

    #[test]
    fn pou_examples() {
        let c = intervals(&[(0, 2), (1, 3), (5, 6)]);
        let p = pou_map(&c, &vec![q(3, 2)]).unwrap();
        assert_eq!(p.get(&0), Some(&q(1, 2)));
        assert_eq!(p.get(&1), Some(&q(1, 2)));
        let p = pou_map(&c, &vec![q(11, 2)]).unwrap();
        assert_eq!(p.len(), 1);
        assert!(matches!(pou_map(&c, &vec![q(4, 1)]), Err(SimplicialError::NoCover)));
    }

    #[test]
    fn nerve_dimension_bounds_multiplicity() {
        let c = intervals(&[(0, 3), (1, 4), (2, 5), (3, 6), (4, 7)]);
        let n = nerve(&c);
        let max_mult = (0..70)
            .map(|t| q(t, 10))
            .map(|x| (0..c.len()).filter(|&i| c.contains(i, &vec![x.clone()])).count())
            .max()
            .unwrap();
        assert_eq!(n.dimension() + 1, max_mult as isize);
    }

    #[test]
    fn pou_is_translation_equivariant() {
        // the cover (m, m + 2) is invariant under x ↦ x + 1, which shifts indices
        let c = BoxCover {
            boxes: (0..10).map(|m| OpenBox { lo: vec![q(m, 1)], hi: vec![q(m + 2, 1)] }).collect(),
        };
        for t in 11..70 {
            let x = q(t, 10);
            let a = pou_map(&c, &vec![x.clone()]).unwrap();
            let b = pou_map(&c, &vec![x + q(1, 1)]).unwrap();
            let shifted: SPoint<usize> = a.into_iter().map(|(i, w)| (i + 1, w)).collect();
            assert_eq!(shifted, b);
        }
    }
}
