use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{l1_distance, SPoint};
use crate::group::{GroupElement, GroupError, Semidirect, Subgroup};

/// Simplicial action of a subgroup H̄ on a (possibly lazy) fiber complex.
pub trait FiberAction {
    type Vertex: Ord + Clone + Debug;

    fn act(&self, h: &GroupElement, v: &Self::Vertex) -> Result<Self::Vertex, GroupError>;
}

/// G ×_H̄ E, with points stored as (coset representative, fiber point).
pub struct InducedComplex<'a, A> {
    pub grp: &'a Semidirect,
    pub hbar: Subgroup,
    pub fiber: A,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InducedPoint<V: Ord> {
    pub coset: GroupElement,
    pub fiber: SPoint<V>,
}

impl<'a, A: FiberAction> InducedComplex<'a, A> {
    pub fn new(grp: &'a Semidirect, hbar: Subgroup, fiber: A) -> Self {
        InducedComplex { grp, hbar, fiber }
    }

    pub fn act_fiber(&self, h: &GroupElement, e: &SPoint<A::Vertex>) -> Result<SPoint<A::Vertex>, GroupError> {
        e.iter().map(|(v, w)| Ok((self.fiber.act(h, v)?, w.clone()))).collect()
    }

    /// Canonical form of [g, e]: g is moved to its coset representative and
    /// the difference pushed into the fiber.
    pub fn point(&self, g: &GroupElement, e: &SPoint<A::Vertex>) -> Result<InducedPoint<A::Vertex>, GroupError> {
        let rep = self.hbar.coset_rep(self.grp, g)?;
        let h = self.grp.mul(&self.grp.inv(&rep)?, g)?;
        debug_assert!(self.hbar.contains(self.grp, &h)?);
        Ok(InducedPoint { coset: rep, fiber: self.act_fiber(&h, e)? })
    }

    pub fn act(&self, g: &GroupElement, p: &InducedPoint<A::Vertex>) -> Result<InducedPoint<A::Vertex>, GroupError> {
        self.point(&self.grp.mul(g, &p.coset)?, &p.fiber)
    }

    /// Global l¹ distance; different cosets share no vertices.
    pub fn distance(&self, a: &InducedPoint<A::Vertex>, b: &InducedPoint<A::Vertex>) -> BigRational {
        if a.coset == b.coset {
            l1_distance(&a.fiber, &b.fiber)
        } else {
            BigRational::from_integer(BigInt::from(2))
        }
    }

    /// [gh, e] = [g, he] for h ∈ H̄.
    pub fn check_well_defined(&self, g: &GroupElement, h: &GroupElement, e: &SPoint<A::Vertex>) -> Result<bool, GroupError> {
        let left = self.point(&self.grp.mul(g, h)?, e)?;
        let right = self.point(g, &self.act_fiber(h, e)?)?;
        Ok(left == right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::IntMatrix;
    use crate::simplicial::{line_point, vertex_point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Z^n ⋊ lZ acting on the line by vt^k ↦ translation by k/l.
    struct LineShift(i64);

    impl FiberAction for LineShift {
        type Vertex = BigInt;

        fn act(&self, h: &GroupElement, v: &BigInt) -> Result<BigInt, GroupError> {
            assert_eq!(h.k % self.0, 0);
            Ok(v + h.k / self.0)
        }
    }

    struct Trivial;

    impl FiberAction for Trivial {
        type Vertex = ();

        fn act(&self, _: &GroupElement, _: &()) -> Result<(), GroupError> {
            Ok(())
        }
    }

    fn cat() -> Semidirect {
        Semidirect::new(IntMatrix::from_i64(&[&[2, 1], &[1, 1]]).unwrap()).unwrap()
    }

    fn random_element(rng: &mut ChaCha8Rng, k_step: i64) -> GroupElement {
        GroupElement::from_i64(&[rng.gen_range(-5..=5), rng.gen_range(-5..=5)], k_step * rng.gen_range(-3..=3))
    }

    #[test]
    fn canonical_points_on_line_fiber() {
        let g = cat();
        let hbar = g
            .subgroup_normal_form(&[
                GroupElement::from_i64(&[1, 0], 0),
                GroupElement::from_i64(&[0, 1], 0),
                GroupElement::from_i64(&[0, 0], 2),
            ])
            .unwrap();
        let ind = InducedComplex::new(&g, hbar, LineShift(2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = random_element(&mut rng, 1);
            let h = random_element(&mut rng, 2);
            let xi = BigRational::new(rng.gen_range(-20..20).into(), rng.gen_range(1..5).into());
            let e = line_point(&xi);
            assert!(ind.check_well_defined(&x, &h, &e).unwrap());
            let p = ind.point(&x, &e).unwrap();
            // coset oracle: two cosets here, distinguished by the parity of k
            assert_eq!(p.coset.k.rem_euclid(2), x.k.rem_euclid(2));
            assert!(p.coset.v.iter().all(|c| *c == BigInt::from(0)));
            // the group acts by isometries
            let y = random_element(&mut rng, 1);
            let q = ind.point(&random_element(&mut rng, 1), &line_point(&BigRational::from_integer(1.into()))).unwrap();
            assert_eq!(
                ind.distance(&ind.act(&y, &p).unwrap(), &ind.act(&y, &q).unwrap()),
                ind.distance(&p, &q)
            );
        }
    }

    #[test]
    fn whole_group_gives_the_fiber() {
        let g = cat();
        let all = g
            .subgroup_normal_form(&[GroupElement::from_i64(&[1, 0], 0), GroupElement::from_i64(&[0, 0], 1)])
            .unwrap();
        let ind = InducedComplex::new(&g, all, LineShift(1));
        let p = ind.point(&GroupElement::from_i64(&[3, -1], 4), &vertex_point(BigInt::from(0))).unwrap();
        assert!(p.coset.is_identity());
        assert_eq!(p.fiber, vertex_point(BigInt::from(4)));
    }

    #[test]
    fn point_fiber_gives_cosets() {
        let g = cat();
        let hbar = g.subgroup_normal_form(&[GroupElement::from_i64(&[0, 0], 3)]).unwrap();
        let ind = InducedComplex::new(&g, hbar, Trivial);
        let a = ind.point(&GroupElement::from_i64(&[0, 0], 1), &vertex_point(())).unwrap();
        let b = ind.point(&GroupElement::from_i64(&[0, 0], 4), &vertex_point(())).unwrap();
        let c = ind.point(&GroupElement::from_i64(&[0, 0], 2), &vertex_point(())).unwrap();
        // t·t³ lies in t⟨t³⟩
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(ind.distance(&a, &c), BigRational::from_integer(2.into()));
    }
}
