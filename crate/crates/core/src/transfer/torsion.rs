use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{max_rat, ChainEquivPack, ChainMap, FiniteChainComplex, Homotopy, TransferError, TransferSpace};
use crate::controlled::{GeometricModule, Group, Matrix, Morphism, Ring};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ContractionMethod {
    /// Try the closed form, then solve when G is trivial.
    Auto,
    /// Γ assembled from Φ′, 𝓗 and 𝓗′.
    ClosedForm,
    /// Degreewise linear solving over Q; G trivial only.
    Solved,
}

/// τ̃ = (∂ + Γ′) from the odd to the even part of cone(Φ), with its inverse.
#[derive(Clone, Debug)]
pub struct SelfTorsion<G: Group, R: Ring> {
    pub tau: Morphism<G, R>,
    pub tau_inv: Morphism<G, R>,
    pub odd_positions: Vec<BigRational>,
    pub even_positions: Vec<BigRational>,
    /// How the contraction was found.
    pub method: ContractionMethod,
}

impl<G: Group, R: Ring> SelfTorsion<G, R> {
    /// det τ̃ over Q, available when G is trivial.
    pub fn determinant(&self) -> Option<BigRational> {
        if !G::TRIVIAL {
            return None;
        }
        rational_dense(&self.tau).map(|m| m.det())
    }
}

fn map_at<G: Group, R: Ring>(c: &FiniteChainComplex<G, R>, f: &ChainMap<G, R>, k: isize) -> Morphism<G, R> {
    match usize::try_from(k).ok().and_then(|i| f.get(i)) {
        Some(m) => m.clone(),
        None => Morphism::zero(c.module(k), c.module(k)),
    }
}

/// Adds `f` (optionally negated) with orbit indices shifted by the offsets.
fn place<G: Group, R: Ring>(out: &mut Morphism<G, R>, f: &Morphism<G, R>, to_off: usize, from_off: usize, negate: bool) {
    for ((to, from, d), m) in f.blocks() {
        out.add_block(to + to_off, from + from_off, d.clone(), if negate { m.neg() } else { m.clone() });
    }
}

fn concat(a: &GeometricModule, b: &GeometricModule) -> GeometricModule {
    GeometricModule::new(a.ranks.iter().chain(&b.ranks).copied().collect())
}

fn orbit_count<G: Group, R: Ring>(c: &FiniteChainComplex<G, R>, k: isize) -> usize {
    c.module(k).ranks.len()
}

/// cone_n = D_{n-1} ⊕ D_n with ∂(a, b) = (−∂a, Φa + ∂b), degrees 0..=top+1.
pub fn mapping_cone<G: Group, R: Ring>(pack: &ChainEquivPack<G, R>) -> Result<FiniteChainComplex<G, R>, TransferError> {
    let d = &pack.complex;
    let top = d.top() as isize + 1;
    let modules: Vec<GeometricModule> = (0..=top).map(|n| concat(&d.module(n - 1), &d.module(n))).collect();
    let positions = (0..=top)
        .map(|n| {
            let a = usize::try_from(n - 1).ok().and_then(|k| d.positions.get(k)).cloned().unwrap_or_default();
            let b = usize::try_from(n).ok().and_then(|k| d.positions.get(k)).cloned().unwrap_or_default();
            a.into_iter().chain(b).collect()
        })
        .collect();
    let boundary = (1..=top)
        .map(|n| {
            let mut out = Morphism::zero(modules[n as usize].clone(), modules[n as usize - 1].clone());
            let (a_len, low_len) = (orbit_count(d, n - 1), orbit_count(d, n - 2));
            place(&mut out, &d.d(n - 1), 0, 0, true);
            place(&mut out, &map_at(d, &pack.phi, n - 1), low_len, 0, false);
            place(&mut out, &d.d(n), low_len, a_len, false);
            out
        })
        .collect();
    FiniteChainComplex::new(modules, boundary, positions)
}

/// Γ(a, b) = (k′a + Φ′b, −hQa − hb) with Q = hΦ − Φk and k′ = k + Φ′Q.
fn closed_form_contraction<G: Group, R: Ring>(
    pack: &ChainEquivPack<G, R>,
    cone: &FiniteChainComplex<G, R>,
) -> Result<Homotopy<G, R>, TransferError> {
    let d = &pack.complex;
    let h = |k: isize| d.hom_at(&pack.h, k);
    let k = |n: isize| d.hom_at(&pack.h_prime, n);
    let phi = |n: isize| map_at(d, &pack.phi, n);
    let phi_inv = |n: isize| map_at(d, &pack.phi_inv, n);
    (0..cone.top() as isize)
        .map(|n| {
            // Q_{n-1}: D_{n-1} → D_n
            let q = h(n - 1).compose(&phi(n - 1))?.sub(&phi(n).compose(&k(n - 1))?)?;
            let k_prime = k(n - 1).add(&phi_inv(n).compose(&q)?)?;
            let hq = h(n).compose(&q)?;
            let mut out = Morphism::zero(cone.module(n), cone.module(n + 1));
            let (a_len, next_a_len) = (orbit_count(d, n - 1), orbit_count(d, n));
            place(&mut out, &k_prime, 0, 0, false);
            place(&mut out, &phi_inv(n), 0, a_len, false);
            place(&mut out, &hq, next_a_len, 0, true);
            place(&mut out, &h(n), next_a_len, a_len, true);
            Ok(out)
        })
        .collect()
}

fn is_contraction<G: Group, R: Ring>(
    cone: &FiniteChainComplex<G, R>,
    gamma: &Homotopy<G, R>,
) -> Result<bool, TransferError> {
    for n in 0..=cone.top() as isize {
        let lhs = cone.d(n + 1).compose(&cone.hom_at(gamma, n))?.add(&cone.hom_at(gamma, n - 1).compose(&cone.d(n))?)?;
        if lhs != Morphism::identity(&cone.module(n)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn rational_dense<G: Group, R: Ring>(f: &Morphism<G, R>) -> Option<Matrix<BigRational>> {
    let m = f.to_dense();
    let entries: Option<Vec<BigRational>> = m.entries().iter().map(Ring::as_rational).collect();
    let entries = entries?;
    Some(Matrix::from_fn(m.rows, m.cols, |i, j| entries[i * m.cols + j].clone()))
}

/// Solves ∂_{n+1} Γ_n = 1 − Γ_{n-1} ∂_n upward from degree zero.
fn solved_contraction<G: Group, R: Ring>(cone: &FiniteChainComplex<G, R>) -> Result<Homotopy<G, R>, TransferError> {
    let fail = |s: &str| TransferError::NotAContraction(s.into());
    if !G::TRIVIAL {
        return Err(fail("linear solving needs the trivial group"));
    }
    let top = cone.top() as isize;
    let mut prev: Option<Matrix<BigRational>> = None;
    let mut out = Vec::new();
    for n in 0..=top {
        let size = cone.module(n).total_rank();
        let dn = rational_dense(&cone.d(n)).ok_or_else(|| fail("coefficients do not embed in Q"))?;
        let mut rhs = Matrix::identity(size);
        if let Some(g) = &prev {
            rhs = rhs.sub(&g.mul(&dn));
        }
        let up = rational_dense(&cone.d(n + 1)).ok_or_else(|| fail("coefficients do not embed in Q"))?;
        let x = up.solve(&rhs).ok_or_else(|| fail("cone is not acyclic"))?;
        if n < top {
            let entries: Option<Vec<R>> = x.entries().iter().map(R::from_rational).collect();
            let entries = entries.ok_or_else(|| fail("solution leaves the coefficient ring"))?;
            let xr = Matrix::from_fn(x.rows, x.cols, |i, j| entries[i * x.cols + j].clone());
            out.push(Morphism::from_dense(cone.module(n), cone.module(n + 1), &xr));
        }
        prev = Some(x);
    }
    Ok(out)
}

pub fn self_torsion<G: Group, R: Ring>(pack: &ChainEquivPack<G, R>) -> Result<SelfTorsion<G, R>, TransferError> {
    self_torsion_with(pack, ContractionMethod::Auto)
}

pub fn self_torsion_with<G: Group, R: Ring>(
    pack: &ChainEquivPack<G, R>,
    method: ContractionMethod,
) -> Result<SelfTorsion<G, R>, TransferError> {
    let cone = mapping_cone(pack)?;
    let (gamma, used) = match method {
        ContractionMethod::Solved => (solved_contraction(&cone)?, ContractionMethod::Solved),
        ContractionMethod::ClosedForm | ContractionMethod::Auto => {
            let g = closed_form_contraction(pack, &cone)?;
            if is_contraction(&cone, &g)? {
                (g, ContractionMethod::ClosedForm)
            } else if method == ContractionMethod::Auto && G::TRIVIAL {
                (solved_contraction(&cone)?, ContractionMethod::Solved)
            } else {
                return Err(TransferError::NotAContraction("closed-form candidate fails ∂Γ + Γ∂ = 1".into()));
            }
        }
    };
    if !is_contraction(&cone, &gamma)? {
        return Err(TransferError::NotAContraction("solved candidate fails ∂Γ + Γ∂ = 1".into()));
    }
    // Γ∂Γ is again a contraction and squares to zero
    let gamma: Homotopy<G, R> = (0..cone.top() as isize)
        .map(|n| {
            let g = cone.hom_at(&gamma, n);
            Ok(g.compose(&cone.d(n + 1))?.compose(&g)?)
        })
        .collect::<Result<_, TransferError>>()?;

    let top = cone.top() as isize;
    let parity = |p: isize| -> (GeometricModule, BTreeMap<isize, usize>, Vec<BigRational>) {
        let mut ranks = Vec::new();
        let mut offsets = BTreeMap::new();
        let mut positions = Vec::new();
        for n in (p..=top).step_by(2) {
            offsets.insert(n, ranks.len());
            ranks.extend(cone.module(n).ranks);
            positions.extend(cone.positions[n as usize].iter().cloned());
        }
        (GeometricModule::new(ranks), offsets, positions)
    };
    let (odd, odd_off, odd_positions) = parity(1);
    let (even, even_off, even_positions) = parity(0);
    let assemble = |src: &GeometricModule, src_off: &BTreeMap<isize, usize>, dst: &GeometricModule, dst_off: &BTreeMap<isize, usize>| {
        let mut out = Morphism::zero(src.clone(), dst.clone());
        for (&n, &from) in src_off {
            if let Some(&to) = dst_off.get(&(n - 1)) {
                place(&mut out, &cone.d(n), to, from, false);
            }
            if let Some(&to) = dst_off.get(&(n + 1)) {
                place(&mut out, &cone.hom_at(&gamma, n), to, from, false);
            }
        }
        out
    };
    let tau = assemble(&odd, &odd_off, &even, &even_off);
    let tau_inv = assemble(&even, &even_off, &odd, &odd_off);
    if tau.compose(&tau_inv)? != Morphism::identity(&even) || tau_inv.compose(&tau)? != Morphism::identity(&odd) {
        return Err(TransferError::NotInvertible);
    }
    Ok(SelfTorsion { tau, tau_inv, odd_positions, even_positions, method: used })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordBound {
    pub k_measured: usize,
    #[serde(with = "crate::json::rational_str")]
    pub delta_measured: BigRational,
}

/// Least K such that each support block (h, x) ↦ (h(g₁…g_j)⁻¹, x′) has a
/// T-word with j ≤ K and d(x′, g₁…g_j x) ≤ K δ₀.
pub fn support_word_bound<G: Group, R: Ring, S: TransferSpace<G>>(
    tau: &SelfTorsion<G, R>,
    t: &[G],
    delta0: &BigRational,
    space: &S,
    cap: usize,
) -> Result<WordBound, TransferError> {
    if !delta0.is_positive() {
        return Err(TransferError::PreconditionFailed("δ₀ must be positive".into()));
    }
    let mut length: BTreeMap<G, usize> = BTreeMap::from([(G::identity(), 0)]);
    let mut layer = vec![G::identity()];
    for j in 1..=cap {
        let mut next = Vec::new();
        for w in &layer {
            for g in t {
                let x = w.mul(g);
                if !length.contains_key(&x) {
                    length.insert(x.clone(), j);
                    next.push(x);
                }
            }
        }
        layer = next;
    }
    let mut k_measured = 0;
    let mut delta_measured = BigRational::zero();
    for ((to, from, delta), _) in tau.tau.blocks() {
        let word = delta.inv();
        let len = *length.get(&word).ok_or(TransferError::NoFactorization { to: *to, from: *from })?;
        let dev = space.dist(&tau.even_positions[*to], &space.act(&word, &tau.odd_positions[*from]));
        let spatial: BigInt = Integer::div_ceil(&(dev.numer() * delta0.denom()), &(dev.denom() * delta0.numer()));
        let spatial = usize::try_from(spatial).unwrap_or(usize::MAX);
        k_measured = k_measured.max(len).max(spatial);
        delta_measured = max_rat(delta_measured, dev);
    }
    Ok(WordBound { k_measured, delta_measured })
}

#[cfg(test)]
mod tests {
    use super::super::pack::tests::idempotent_unit;
    use super::super::{
        collapse_data, psi_morphism, reflection_data, subdivided_interval, transfer, trivial_action_data, Interval,
    };
    use super::*;
    use crate::controlled::Trivial;
    use num_traits::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn q(a: i64) -> Q {
        Q::from_integer(a.into())
    }

    fn one_point_pack(u: Q) -> ChainEquivPack<Trivial, Q> {
        let m = GeometricModule::new(vec![1]);
        let c = FiniteChainComplex::new(vec![m.clone()], vec![], vec![vec![q(0)]]).unwrap();
        let scalar = |x: Q| Morphism::from_dense(m.clone(), m.clone(), &Matrix::from_rows(vec![vec![x]]));
        ChainEquivPack {
            phi: vec![scalar(u.clone())],
            phi_inv: vec![scalar(u.recip())],
            h: vec![],
            h_prime: vec![],
            complex: c,
            augmentation: None,
        }
    }

    #[test]
    fn scalar_in_degree_zero() {
        for u in [q(3), q(-2), Q::new(5.into(), 7.into())] {
            let t = self_torsion(&one_point_pack(u.clone())).unwrap();
            assert_eq!(t.method, ContractionMethod::ClosedForm);
            assert_eq!(t.determinant().unwrap().abs(), u.abs());
        }
    }

    #[test]
    fn identity_has_unit_determinant() {
        let c = subdivided_interval(3).unwrap();
        let data = trivial_action_data(&c, vec![Trivial], vec![Matrix::<Q>::identity(2)], vec![Matrix::identity(2)]);
        let psi = psi_morphism(&data.t, &data.psi);
        let pack = transfer(&psi, &data, &c).unwrap();
        let t = self_torsion(&pack).unwrap();
        assert_eq!(t.determinant().unwrap().abs(), Q::one());
        let wb = support_word_bound(&t, &[Trivial], &Q::new(1.into(), 3.into()), &Interval::default(), 4).unwrap();
        assert!(wb.k_measured <= 3);
    }

    /// D_1 → D_0 with Φ = Φ_aut + (∂s + s∂), Φ′ = Φ_aut⁻¹, and the
    /// homotopies that follow; returns the pack and the oracle det Φ_0 / det Φ_1
    /// of the automorphism part.
    fn random_two_term(rng: &mut ChaCha8Rng) -> (ChainEquivPack<Trivial, Q>, Q) {
        let (r0, r1) = (rng.gen_range(1..4), rng.gen_range(1..4));
        let m0 = GeometricModule::new(vec![1; r0]);
        let m1 = GeometricModule::new(vec![1; r1]);
        // ∂ = u vᵀ has rank at most one
        let u = Matrix::from_fn(r0, 1, |_, _| q(rng.gen_range(-2..=2)));
        let v = Matrix::from_fn(r1, 1, |_, _| q(rng.gen_range(-2..=2)));
        let d = u.mul(&v.transpose());
        // Φ_0 = aB, Φ_1 = aCᵀ with Bu = u and Cv = v commute with ∂
        let a = q(rng.gen_range(1..=3)) * if rng.gen_bool(0.5) { q(1) } else { q(-1) };
        let b = random_fixing(rng, &u);
        let cm = random_fixing(rng, &v).transpose();
        let phi0 = b.scale(&a);
        let phi1 = cm.scale(&a);
        debug_assert_eq!(d.mul(&phi1), phi0.mul(&d));
        let s = Matrix::from_fn(r1, r0, |_, _| q(rng.gen_range(-1..=1)));
        let dm = |x: &Matrix<Q>, src: &GeometricModule, dst: &GeometricModule| Morphism::from_dense(src.clone(), dst.clone(), x);
        let c = FiniteChainComplex::new(
            vec![m0.clone(), m1.clone()],
            vec![dm(&d, &m1, &m0)],
            vec![vec![q(0); r0], vec![q(0); r1]],
        )
        .unwrap();
        let (i0, i1) = (phi0.inverse().unwrap(), phi1.inverse().unwrap());
        let phi = vec![dm(&phi0.add(&d.mul(&s)), &m0, &m0), dm(&phi1.add(&s.mul(&d)), &m1, &m1)];
        let phi_inv = vec![dm(&i0, &m0, &m0), dm(&i1, &m1, &m1)];
        // ΦΦ′ − 1 = (∂s + s∂)Φ_aut⁻¹ and Φ′Φ − 1 = Φ_aut⁻¹(∂s + s∂)
        let h = vec![dm(&s.mul(&i0), &m0, &m1)];
        let h_prime = vec![dm(&i1.mul(&s), &m0, &m1)];
        let oracle = phi0.det() / phi1.det();
        (ChainEquivPack { complex: c, phi, phi_inv, h, h_prime, augmentation: None }, oracle)
    }

    /// Invertible B with B x = x.
    fn random_fixing(rng: &mut ChaCha8Rng, x: &Matrix<Q>) -> Matrix<Q> {
        let n = x.rows;
        loop {
            // B = 1 + y zᵀ with zᵀx = 0 fixes x; det = 1 + zᵀy
            let y = Matrix::from_fn(n, 1, |_, _| q(rng.gen_range(-2..=2)));
            let mut z = Matrix::from_fn(n, 1, |_, _| q(rng.gen_range(-2..=2)));
            let zx = z.transpose().mul(x)[(0, 0)].clone();
            let xx = x.transpose().mul(x)[(0, 0)].clone();
            if !xx.is_zero() {
                z = z.sub(&x.scale(&(zx / xx)));
            }
            let b = Matrix::identity(n).add(&y.mul(&z.transpose()));
            if !b.det().is_zero() {
                return b;
            }
        }
    }

    #[test]
    fn two_term_determinant_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let (pack, oracle) = random_two_term(&mut rng);
            assert!(pack.is_validated().unwrap());
            let closed = self_torsion_with(&pack, ContractionMethod::ClosedForm).unwrap();
            let solved = self_torsion_with(&pack, ContractionMethod::Solved).unwrap();
            let (a, b) = (closed.determinant().unwrap(), solved.determinant().unwrap());
            assert_eq!(a.abs(), oracle.abs());
            assert_eq!(a.abs(), b.abs());
        }
    }

    #[test]
    fn permuted_pack_has_the_same_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let (pack, _) = random_two_term(&mut rng);
            let base = self_torsion(&pack).unwrap().determinant().unwrap();
            // conjugate every map by a degreewise permutation P
            let perms: Vec<Matrix<Q>> = pack
                .complex
                .modules
                .iter()
                .map(|m| {
                    let n = m.total_rank();
                    let shift = rng.gen_range(0..n);
                    Matrix::from_fn(n, n, |i, j| if (i + shift) % n == j { q(1) } else { q(0) })
                })
                .collect();
            let conj = |f: &Morphism<Trivial, Q>, src: usize, dst: usize| {
                let m = perms[dst].mul(&f.to_dense()).mul(&perms[src].transpose());
                Morphism::from_dense(f.source.clone(), f.target.clone(), &m)
            };
            let mut p = pack.clone();
            p.complex.boundary = vec![conj(&pack.complex.boundary[0], 1, 0)];
            p.phi = vec![conj(&pack.phi[0], 0, 0), conj(&pack.phi[1], 1, 1)];
            p.phi_inv = vec![conj(&pack.phi_inv[0], 0, 0), conj(&pack.phi_inv[1], 1, 1)];
            p.h = vec![conj(&pack.h[0], 0, 1)];
            p.h_prime = vec![conj(&pack.h_prime[0], 0, 1)];
            assert!(p.is_validated().unwrap());
            assert_eq!(self_torsion(&p).unwrap().determinant().unwrap().abs(), base.abs());
        }
    }

    #[test]
    fn closed_form_over_the_integers_of_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t = vec![1i64, -1];
        for l in 1..5 {
            let (psi, psi_inv) = idempotent_unit(&mut rng, 2);
            let psi_m = psi_morphism(&t, &psi);
            let delta0 = Q::new(1.into(), (l as i64).into());
            let c = subdivided_interval(l).unwrap();
            let data = trivial_action_data(&c, t.clone(), psi.clone(), psi_inv.clone());
            let tau = self_torsion(&transfer(&psi_m, &data, &c).unwrap()).unwrap();
            assert_eq!(tau.method, ContractionMethod::ClosedForm);
            let wb = support_word_bound(&tau, &t, &delta0, &Interval::default(), 64).unwrap();
            assert!(wb.k_measured <= 10);
            assert!(wb.delta_measured <= delta0.clone() * Q::from_integer(wb.k_measured.into()));
            // nonzero homotopies exercise every term of the closed form
            let (c, data) = collapse_data(l, t.clone(), psi.clone(), psi_inv.clone()).unwrap();
            let tau = self_torsion(&transfer(&psi_m, &data, &c).unwrap()).unwrap();
            assert_eq!(tau.method, ContractionMethod::ClosedForm);
            let (c, data) = reflection_data(l, t.clone(), psi, psi_inv).unwrap();
            let tau = self_torsion(&transfer(&psi_m, &data, &c).unwrap()).unwrap();
            let wb = support_word_bound(&tau, &t, &delta0, &Interval { flip: true }, 64).unwrap();
            assert!(wb.k_measured <= 10);
        }
    }

    #[test]
    fn missing_word_is_reported() {
        let c = subdivided_interval(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let (psi, psi_inv) = idempotent_unit(&mut rng, 2);
        let t = vec![1i64, -1];
        let data = trivial_action_data(&c, t.clone(), psi.clone(), psi_inv);
        let tau = self_torsion(&transfer(&psi_morphism(&t, &psi), &data, &c).unwrap()).unwrap();
        // only even powers of t are reachable from {t²}
        let res = support_word_bound(&tau, &[2], &Q::one(), &Interval::default(), 8);
        assert!(tau.tau.support().iter().any(|(_, _, d)| d % 2 != 0));
        assert!(matches!(res, Err(TransferError::NoFactorization { .. })));
    }

    #[test]
    fn corrupted_inverse_is_not_a_contraction() {
        let mut pack = one_point_pack(q(3));
        pack.phi_inv[0] = pack.phi_inv[0].add(&Morphism::identity(&pack.complex.modules[0])).unwrap();
        assert!(matches!(
            self_torsion_with(&pack, ContractionMethod::ClosedForm),
            Err(TransferError::NotAContraction(_))
        ));
        // a non-equivalence cannot be rescued by solving either
        let mut zero = one_point_pack(q(3));
        zero.phi[0] = Morphism::zero(zero.complex.modules[0].clone(), zero.complex.modules[0].clone());
        assert!(matches!(self_torsion(&zero), Err(TransferError::NotAContraction(_))));
    }
}
