use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::{FiniteQuotient, HyperError, HyperWitness, LemmaCase, LemmaOutcome};
use crate::group::primes::prime_power;
use crate::group::{FiniteElement, Lattice, Slope, Subgroup};

/// Structural description of H ≤ F through the normal form of its
/// preimage π⁻¹(H) ≤ Z^n ⋊ Z. Computed with all lattice arithmetic mod s,
/// which is exact because π⁻¹(H) ∩ Z^n contains (sZ)^n.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QuotientShape {
    pub preimage: Subgroup,
}

#[derive(Clone, Debug)]
struct ModEl {
    v: Vec<u64>,
    k: i64,
}

impl FiniteQuotient {
    fn mod_apow(&self, k: i64) -> &[u64] {
        self.apow(k.rem_euclid(self.r() as i64) as u64)
    }

    fn mod_mul(&self, a: &ModEl, b: &ModEl) -> ModEl {
        let m = self.mod_apow(a.k);
        let n = self.n();
        let s = self.s() as u128;
        let v = (0..n)
            .map(|i| {
                let mut acc = a.v[i] as u128;
                for j in 0..n {
                    acc += m[i * n + j] as u128 * b.v[j] as u128;
                }
                (acc % s) as u64
            })
            .collect();
        ModEl { v, k: a.k + b.k }
    }

    fn mod_inv(&self, a: &ModEl) -> ModEl {
        let m = self.mod_apow(-a.k);
        let n = self.n();
        let s = self.s() as u128;
        let v = (0..n)
            .map(|i| {
                let mut acc = 0u128;
                for j in 0..n {
                    acc += m[i * n + j] as u128 * a.v[j] as u128;
                }
                ((s - acc % s) % s) as u64
            })
            .collect();
        ModEl { v, k: -a.k }
    }

    fn mod_pow(&self, a: &ModEl, e: i64) -> ModEl {
        let base = if e < 0 { self.mod_inv(a) } else { a.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = ModEl { v: vec![0; self.n()], k: 0 };
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mod_mul(&acc, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mod_mul(&b, &b);
            }
        }
        acc
    }

    fn int_matrix_pow(&self, k: i64) -> Vec<Vec<BigInt>> {
        let n = self.n();
        let m = self.mod_apow(k);
        (0..n).map(|i| (0..n).map(|j| BigInt::from(m[i * n + j])).collect()).collect()
    }
}

fn apply(m: &[Vec<BigInt>], v: &[BigInt]) -> Vec<BigInt> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

impl QuotientShape {
    pub fn from_gens(fq: &FiniteQuotient, gens: &[FiniteElement]) -> Self {
        let n = fq.n();
        let s = fq.s();
        let mut lattice_gens: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| BigInt::from(if i == j { s } else { 0 })).collect())
            .collect();
        // t^r is central in (Z/s)^n ⋊ Z and lies in the kernel
        let mut slope = ModEl { v: vec![0; n], k: fq.r() as i64 };
        for g in gens {
            let mut b = ModEl { v: g.v.iter().map(|c| c % s).collect(), k: (g.k % fq.r()) as i64 };
            if b.k == 0 {
                lattice_gens.push(b.v.iter().map(|&c| BigInt::from(c)).collect());
                continue;
            }
            let mut a = slope;
            while b.k != 0 {
                let q = a.k / b.k;
                a = fq.mod_mul(&a, &fq.mod_pow(&b, -q));
                std::mem::swap(&mut a, &mut b);
            }
            lattice_gens.push(b.v.iter().map(|&c| BigInt::from(c)).collect());
            slope = a;
        }
        if slope.k < 0 {
            slope = fq.mod_inv(&slope);
        }
        let d = slope.k;
        let fwd = fq.int_matrix_pow(d);
        let back = fq.int_matrix_pow(-d);
        let mut lattice = Lattice::from_generators(n, lattice_gens);
        loop {
            let next = Lattice::from_generators(
                n,
                lattice
                    .basis
                    .iter()
                    .flat_map(|b| [b.clone(), apply(&fwd, b), apply(&back, b)])
                    .collect::<Vec<_>>(),
            );
            if next == lattice {
                break;
            }
            lattice = next;
        }
        let u = lattice.reduce(&slope.v.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>());
        QuotientShape { preimage: Subgroup { lattice, slope: Some(Slope { u, d }) } }
    }

    fn slope(&self) -> &Slope {
        self.preimage.slope.as_ref().expect("preimages always have a slope")
    }

    /// Image of H in Z/r is generated by d.
    pub fn image_step(&self) -> u64 {
        self.slope().d as u64
    }

    /// |H ∩ (Z/s)^n|.
    pub fn lattice_order(&self, fq: &FiniteQuotient) -> u64 {
        let index = self.preimage.lattice.index().expect("contains (sZ)^n");
        fq.lattice_size() / index.to_u64().expect("index divides s^n")
    }

    pub fn order(&self, fq: &FiniteQuotient) -> u64 {
        self.lattice_order(fq) * (fq.r() / self.image_step())
    }

    pub fn contains(&self, fq: &FiniteQuotient, x: &FiniteElement) -> bool {
        let sl = self.slope();
        if x.k as i64 % sl.d != 0 {
            return false;
        }
        let u: Vec<u64> = sl
            .u
            .iter()
            .map(|c| c.to_i128().unwrap().rem_euclid(fq.s() as i128) as u64)
            .collect();
        let slope = ModEl { v: u, k: sl.d };
        let y = fq.mod_mul(&ModEl { v: x.v.clone(), k: x.k as i64 }, &fq.mod_pow(&slope, -(x.k as i64 / sl.d)));
        debug_assert_eq!(y.k, 0);
        self.preimage
            .lattice
            .contains(&y.v.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>())
    }

    pub fn lattice_divisible_by(&self, q: u64) -> bool {
        let q = BigInt::from(q);
        self.preimage
            .lattice
            .basis
            .iter()
            .all(|b| b.iter().all(|c| (c % &q) == BigInt::from(0)))
    }

    pub fn image_divisible_by(&self, q: u64) -> bool {
        self.image_step().is_multiple_of(q)
    }
}

/// Witness check without enumerating H: ⟨c⟩ is compared to H through
/// normal forms, so this works at any size of F.
pub fn verify_witness_shape(fq: &FiniteQuotient, gens: &[FiniteElement], w: &HyperWitness) -> Result<(), HyperError> {
    let c = &w.cyclic_gen;
    if fq.encode(c).is_none() {
        return Err(HyperError::InvalidWitness("generator outside F".into()));
    }
    let h = QuotientShape::from_gens(fq, gens);
    if !h.contains(fq, c) {
        return Err(HyperError::InvalidWitness("generator not in H".into()));
    }
    let cyc = QuotientShape::from_gens(fq, std::slice::from_ref(c));
    let (ho, co) = (h.order(fq), cyc.order(fq));
    if ho % co != 0 || ho / co != w.quotient_order {
        return Err(HyperError::InvalidWitness("quotient order mismatch".into()));
    }
    if w.quotient_order != 1 && prime_power(w.quotient_order).map(|x| x.0) != Some(w.p) {
        return Err(HyperError::InvalidWitness("quotient is not a p-group".into()));
    }
    if !gens.iter().all(|g| cyc.contains(fq, &fq.mul_el(&fq.mul_el(g, c), &fq.inv_el(g)))) {
        return Err(HyperError::InvalidWitness("cyclic subgroup not normal".into()));
    }
    Ok(())
}

/// Same decision as `check_lemma_hyp_elm`, read off the preimage normal form.
pub fn check_lemma_hyp_elm_shape(
    fq: &FiniteQuotient,
    shape: &QuotientShape,
    p1: u64,
    p2: u64,
) -> Result<LemmaOutcome, HyperError> {
    if p1 * p2 != fq.s() {
        return Err(HyperError::PreconditionFailed(format!("s = {} is not {p1}·{p2}", fq.s())));
    }
    for q in [p1, p2] {
        let case = match (shape.lattice_divisible_by(q), shape.image_divisible_by(q)) {
            (true, true) => LemmaCase::Both,
            (true, false) => LemmaCase::LatticeDivisible,
            (false, true) => LemmaCase::ImageDivisible,
            (false, false) => continue,
        };
        return Ok(LemmaOutcome { q, case });
    }
    Err(HyperError::LemmaFalsified(format!("no q in {{{p1}, {p2}}} for subgroup of order {}", shape.order(fq))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{FiniteQuotientDesc, GroupElement, IntMatrix, Semidirect};
    use crate::hyperelementary::{check_lemma_hyp_elm, closure};
    use proptest::prelude::*;

    fn setup() -> (Semidirect, FiniteQuotient) {
        let a = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]).unwrap();
        let f = FiniteQuotient::new(&FiniteQuotientDesc::new(&a, 6, 72).unwrap()).unwrap();
        (Semidirect::new(a).unwrap(), f)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn shape_matches_enumeration(codes in prop::collection::vec(0u64..2592, 0..3)) {
            let (g, f) = setup();
            let gens: Vec<FiniteElement> = codes.iter().map(|&c| f.decode(c)).collect();
            let shape = QuotientShape::from_gens(&f, &gens);
            let h = closure(&f, &codes, 10_000).unwrap();
            prop_assert_eq!(shape.order(&f), h.order());
            for x in (0..f.size()).step_by(7) {
                prop_assert_eq!(shape.contains(&f, &f.decode(x)), h.contains(x));
            }
            prop_assert_eq!(
                check_lemma_hyp_elm_shape(&f, &shape, 2, 3).ok(),
                check_lemma_hyp_elm(&f, &h, 2, 3).ok()
            );
            // equals the exact normal form of the lifted generators plus kernel
            let mut lifted: Vec<GroupElement> = gens
                .iter()
                .map(|e| GroupElement::new(e.v.iter().map(|&c| BigInt::from(c)).collect(), e.k as i64))
                .collect();
            lifted.push(GroupElement::from_i64(&[6, 0], 0));
            lifted.push(GroupElement::from_i64(&[0, 6], 0));
            lifted.push(GroupElement::from_i64(&[0, 0], 72));
            prop_assert_eq!(g.subgroup_normal_form(&lifted).unwrap(), shape.preimage.clone());
        }
    }
}
