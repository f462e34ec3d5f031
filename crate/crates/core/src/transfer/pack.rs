use num_bigint::BigInt;

use super::{
    compose_chain_maps, subdivided_interval, verify_chain_homotopy, ChainMap, FiniteChainComplex, Homotopy, Residual,
    TransferError,
};
use crate::controlled::{GeometricModule, Group, Matrix, Morphism, Ring, Trivial};

/// Decomposition ψ(h⊗v) = Σ_{g∈T} hg⁻¹ ⊗ ψ_g(v) together with homotopy-action
/// data φ_g on a complex C of Z-modules over X.
#[derive(Clone, Debug)]
pub struct TransferData<G: Group, R: Ring> {
    pub t: Vec<G>,
    pub psi: Vec<Matrix<R>>,
    pub psi_inv: Vec<Matrix<R>>,
    pub phi: Vec<ChainMap<Trivial, BigInt>>,
    /// homotopies[i][j]: φ_{t_i} ∘ φ_{t_j} → φ_{t_i t_j}.
    pub homotopies: Vec<Vec<Homotopy<Trivial, BigInt>>>,
}

/// Σ_g g⁻¹ ψ_g as a morphism of the free module with one orbit point.
pub fn psi_morphism<G: Group, R: Ring>(t: &[G], mats: &[Matrix<R>]) -> Morphism<G, R> {
    let n = mats.first().map_or(0, |m| m.rows);
    let m = GeometricModule::new(vec![n]);
    let mut f = Morphism::zero(m.clone(), m);
    for (g, a) in t.iter().zip(mats) {
        f.add_block(0, 0, g.inv(), a.clone());
    }
    f
}

/// Φ, a homotopy inverse Φ′, and 𝓗: ΦΦ′ → id, 𝓗′: Φ′Φ → id.
#[derive(Clone, Debug)]
pub struct ChainEquivPack<G: Group, R: Ring> {
    pub complex: FiniteChainComplex<G, R>,
    pub phi: ChainMap<G, R>,
    pub phi_inv: ChainMap<G, R>,
    pub h: Homotopy<G, R>,
    pub h_prime: Homotopy<G, R>,
    /// Degree-zero augmentation D_0 → R[G]^n, present on transferred packs.
    pub augmentation: Option<Morphism<G, R>>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PackResiduals {
    pub phi_is_chain_map: bool,
    pub phi_inv_is_chain_map: bool,
    pub h: Residual,
    pub h_prime: Residual,
}

impl PackResiduals {
    pub fn validated(&self) -> bool {
        self.phi_is_chain_map && self.phi_inv_is_chain_map && self.h.exact_zero && self.h_prime.exact_zero
    }
}

impl<G: Group, R: Ring> ChainEquivPack<G, R> {
    pub fn residuals(&self) -> Result<PackResiduals, TransferError> {
        let c = &self.complex;
        let id = c.identity();
        Ok(PackResiduals {
            phi_is_chain_map: c.is_chain_map(&self.phi)?,
            phi_inv_is_chain_map: c.is_chain_map(&self.phi_inv)?,
            h: verify_chain_homotopy(c, &self.h, &compose_chain_maps(&self.phi, &self.phi_inv)?, &id)?,
            h_prime: verify_chain_homotopy(c, &self.h_prime, &compose_chain_maps(&self.phi_inv, &self.phi)?, &id)?,
        })
    }

    pub fn is_validated(&self) -> Result<bool, TransferError> {
        Ok(self.residuals()?.validated())
    }
}

fn lift<R: Ring>(b: &Matrix<BigInt>) -> Matrix<R> {
    Matrix::from_fn(b.rows, b.cols, |i, j| R::from_bigint(&b[(i, j)]))
}

/// Adds f ⊗ coeff, placed at group offset δ.
fn tensor_into<G: Group, R: Ring>(out: &mut Morphism<G, R>, f: &Morphism<Trivial, BigInt>, delta: &G, coeff: &Matrix<R>) {
    for ((to, from, _), b) in f.blocks() {
        out.add_block(*to, *from, delta.clone(), lift::<R>(b).kron(coeff));
    }
}

fn check_data<G: Group, R: Ring>(
    psi: &Morphism<G, R>,
    data: &TransferData<G, R>,
    c: &FiniteChainComplex<Trivial, BigInt>,
) -> Result<usize, TransferError> {
    let bad = |s: &str| Err(TransferError::InconsistentData(s.into()));
    let k = data.t.len();
    if k == 0 || data.psi.len() != k || data.psi_inv.len() != k || data.phi.len() != k {
        return bad("one ψ_g, ψ⁻¹_g and φ_g per element of T");
    }
    if data.homotopies.len() != k || data.homotopies.iter().any(|row| row.len() != k) {
        return bad("one homotopy per pair in T × T");
    }
    let n = data.psi[0].rows;
    if data.psi.iter().chain(&data.psi_inv).any(|m| m.rows != n || m.cols != n) {
        return bad("ψ_g must all be square of the same size");
    }
    if *psi != psi_morphism(&data.t, &data.psi) {
        return bad("ψ differs from Σ g⁻¹ ψ_g");
    }
    let inv = psi_morphism(&data.t, &data.psi_inv);
    let id = Morphism::identity(&GeometricModule::new(vec![n]));
    if psi.compose(&inv)? != id || inv.compose(psi)? != id {
        return bad("the ψ⁻¹_g do not assemble to the inverse of ψ");
    }
    for phi in &data.phi {
        if phi.len() != c.modules.len()
            || phi.iter().zip(&c.modules).any(|(f, m)| f.source != *m || f.target != *m)
        {
            return bad("φ_g must be degreewise endomorphisms of C");
        }
    }
    for h in data.homotopies.iter().flatten() {
        if h.len() != c.top()
            || h.iter().enumerate().any(|(i, f)| f.source != c.modules[i] || f.target != c.modules[i + 1])
        {
            return bad("H_{g,h} must raise degree by one on C");
        }
    }
    Ok(n)
}

/// D_* = Z[G] ⊗ C_* ⊗ R^n with Ψ = Σ g ⊗ φ_g ⊗ ψ_g, Ψ′, 𝓗 and 𝓗′.
pub fn transfer<G: Group, R: Ring>(
    psi: &Morphism<G, R>,
    data: &TransferData<G, R>,
    c: &FiniteChainComplex<Trivial, BigInt>,
) -> Result<ChainEquivPack<G, R>, TransferError> {
    let n = check_data(psi, data, c)?;
    let modules: Vec<GeometricModule> =
        c.modules.iter().map(|m| GeometricModule::new(m.ranks.iter().map(|r| r * n).collect())).collect();
    let id_n = Matrix::identity(n);

    let boundary = c
        .boundary
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let mut out = Morphism::zero(modules[k + 1].clone(), modules[k].clone());
            tensor_into(&mut out, d, &G::identity(), &id_n);
            out
        })
        .collect();
    let complex = FiniteChainComplex::new(modules.clone(), boundary, c.positions.clone())?;

    let chain = |coeffs: &[Matrix<R>]| -> ChainMap<G, R> {
        (0..modules.len())
            .map(|k| {
                let mut out = Morphism::zero(modules[k].clone(), modules[k].clone());
                for (i, g) in data.t.iter().enumerate() {
                    tensor_into(&mut out, &data.phi[i][k], &g.inv(), &coeffs[i]);
                }
                out
            })
            .collect()
    };
    let homotopy = |a: &[Matrix<R>], b: &[Matrix<R>]| -> Homotopy<G, R> {
        (0..c.top())
            .map(|k| {
                let mut out = Morphism::zero(modules[k].clone(), modules[k + 1].clone());
                for (i, g) in data.t.iter().enumerate() {
                    for (j, g2) in data.t.iter().enumerate() {
                        let delta = g.mul(g2).inv();
                        tensor_into(&mut out, &data.homotopies[i][j][k], &delta, &a[i].mul(&b[j]));
                    }
                }
                out
            })
            .collect()
    };

    let mut augmentation = Morphism::zero(modules[0].clone(), GeometricModule::new(vec![n]));
    for (x, &r) in c.modules[0].ranks.iter().enumerate() {
        let ones = Matrix::from_fn(1, r, |_, _| R::one());
        augmentation.add_block(0, x, G::identity(), ones.kron(&id_n));
    }

    Ok(ChainEquivPack {
        phi: chain(&data.psi),
        phi_inv: chain(&data.psi_inv),
        h: homotopy(&data.psi, &data.psi_inv),
        h_prime: homotopy(&data.psi_inv, &data.psi),
        complex,
        augmentation: Some(augmentation),
    })
}

/// q ∘ Ψ = ψ ∘ q in degree zero; q vanishes in positive degrees on both sides.
pub fn augmentation_check<G: Group, R: Ring>(
    pack: &ChainEquivPack<G, R>,
    psi: &Morphism<G, R>,
) -> Result<bool, TransferError> {
    let q = pack
        .augmentation
        .as_ref()
        .ok_or_else(|| TransferError::PreconditionFailed("pack was not built by transfer".into()))?;
    if psi.source != q.target {
        return Ok(false);
    }
    Ok(q.compose(&pack.phi[0])? == psi.compose(q)?)
}

/// φ_g = id and zero homotopies, for G acting trivially on X.
pub fn trivial_action_data<G: Group, R: Ring>(
    c: &FiniteChainComplex<Trivial, BigInt>,
    t: Vec<G>,
    psi: Vec<Matrix<R>>,
    psi_inv: Vec<Matrix<R>>,
) -> TransferData<G, R> {
    let k = t.len();
    TransferData {
        phi: vec![c.identity(); k],
        homotopies: vec![vec![c.zero_homotopy(); k]; k],
        t,
        psi,
        psi_inv,
    }
}

/// Subdivided interval with t^m acting by the flip x ↦ 1 − x when m is odd.
/// The φ_g compose strictly, so all homotopies vanish.
pub fn reflection_data<R: Ring>(
    l: usize,
    t: Vec<i64>,
    psi: Vec<Matrix<R>>,
    psi_inv: Vec<Matrix<R>>,
) -> Result<(FiniteChainComplex<Trivial, BigInt>, TransferData<i64, R>), TransferError> {
    let c = subdivided_interval(l)?;
    let mut flip = vec![
        Morphism::zero(c.modules[0].clone(), c.modules[0].clone()),
        Morphism::zero(c.modules[1].clone(), c.modules[1].clone()),
    ];
    for i in 0..=l {
        flip[0].add_block(l - i, i, Trivial, Matrix::identity(1));
    }
    for j in 0..l {
        flip[1].add_block(l - 1 - j, j, Trivial, Matrix::identity(1).neg());
    }
    let phi = t.iter().map(|m| if m.rem_euclid(2) == 1 { flip.clone() } else { c.identity() }).collect();
    let k = t.len();
    let data = TransferData { homotopies: vec![vec![c.zero_homotopy(); k]; k], phi, t, psi, psi_inv };
    Ok((c, data))
}

/// Subdivided interval with every non-identity φ_g collapsing onto the vertex
/// 0. When gh = e the homotopy collapse → id runs along the edges.
pub fn collapse_data<G: Group, R: Ring>(
    l: usize,
    t: Vec<G>,
    psi: Vec<Matrix<R>>,
    psi_inv: Vec<Matrix<R>>,
) -> Result<(FiniteChainComplex<Trivial, BigInt>, TransferData<G, R>), TransferError> {
    let c = subdivided_interval(l)?;
    let mut collapse = vec![
        Morphism::zero(c.modules[0].clone(), c.modules[0].clone()),
        Morphism::zero(c.modules[1].clone(), c.modules[1].clone()),
    ];
    for i in 0..=l {
        collapse[0].add_block(0, i, Trivial, Matrix::identity(1));
    }
    // H(v_i) = -(e_0 + … + e_{i-1}) satisfies ∂H + H∂ = collapse − id
    let mut path = Morphism::zero(c.modules[0].clone(), c.modules[1].clone());
    for i in 0..=l {
        for j in 0..i {
            path.add_block(j, i, Trivial, Matrix::identity(1).neg());
        }
    }
    let e = G::identity();
    let phi = t.iter().map(|g| if *g == e { c.identity() } else { collapse.clone() }).collect();
    let homotopies = t
        .iter()
        .map(|g| {
            t.iter()
                .map(|h| if *g != e && *h != e && g.mul(h) == e { vec![path.clone()] } else { c.zero_homotopy() })
                .collect()
        })
        .collect();
    Ok((c, TransferData { t, psi, psi_inv, phi, homotopies }))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::super::{deviation, point_complex, Interval};
    use super::*;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Unimodular S with known inverse, as a product of elementary matrices.
    pub(crate) fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> (Matrix<BigInt>, Matrix<BigInt>) {
        let mut s = Matrix::identity(n);
        let mut s_inv = Matrix::identity(n);
        for _ in 0..3 * n {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i == j {
                continue;
            }
            let c = BigInt::from(rng.gen_range(-2..=2));
            let mut e = Matrix::identity(n);
            e[(i, j)] = c.clone();
            let mut e_inv = Matrix::identity(n);
            e_inv[(i, j)] = -c;
            s = s.mul(&e);
            s_inv = e_inv.mul(&s_inv);
        }
        (s, s_inv)
    }

    /// ψ = t·P + t⁻¹·(1 − P) for an integral idempotent P; its inverse swaps
    /// the two coefficients.
    pub(crate) fn idempotent_unit(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Matrix<BigInt>>, Vec<Matrix<BigInt>>) {
        let (s, s_inv) = random_unimodular(rng, n);
        let rank = rng.gen_range(0..=n);
        let d = Matrix::from_fn(n, n, |i, j| BigInt::from((i == j && i < rank) as i64));
        let p = s.mul(&d).mul(&s_inv);
        let q = Matrix::identity(n).sub(&p);
        (vec![p.clone(), q.clone()], vec![q, p])
    }

    #[test]
    fn trivial_action_gives_exact_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (psi, psi_inv) = idempotent_unit(&mut rng, 3);
        let c = super::super::subdivided_interval(3).unwrap();
        let data = trivial_action_data(&c, vec![1i64, -1], psi.clone(), psi_inv);
        let psi_m = psi_morphism(&data.t, &psi);
        let pack = transfer(&psi_m, &data, &c).unwrap();
        let comp = compose_chain_maps(&pack.phi, &pack.phi_inv).unwrap();
        assert_eq!(comp, pack.complex.identity());
        assert!(pack.is_validated().unwrap());
        assert!(augmentation_check(&pack, &psi_m).unwrap());
    }

    #[test]
    fn point_complex_reduces_to_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (psi, psi_inv) = idempotent_unit(&mut rng, 3);
        let c = point_complex();
        let data = trivial_action_data(&c, vec![1i64, -1], psi.clone(), psi_inv);
        let psi_m = psi_morphism(&data.t, &psi);
        let pack = transfer(&psi_m, &data, &c).unwrap();
        assert_eq!(pack.phi[0], psi_m);
        assert!(augmentation_check(&pack, &psi_m).unwrap());
    }

    #[test]
    fn inconsistent_data_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (psi, mut psi_inv) = idempotent_unit(&mut rng, 2);
        let c = super::super::subdivided_interval(2).unwrap();
        let psi_m = psi_morphism(&[1i64, -1], &psi);
        psi_inv[0] = psi_inv[0].add(&Matrix::identity(2));
        let data = trivial_action_data(&c, vec![1i64, -1], psi, psi_inv);
        assert!(matches!(transfer(&psi_m, &data, &c), Err(TransferError::InconsistentData(_))));
    }

    #[test]
    fn collapse_and_reflection_data_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for l in 1..5 {
            let (psi, psi_inv) = idempotent_unit(&mut rng, 2);
            let psi_m = psi_morphism(&[1i64, -1], &psi);
            let (c, data) = collapse_data(l, vec![1i64, -1], psi.clone(), psi_inv.clone()).unwrap();
            let pack = transfer(&psi_m, &data, &c).unwrap();
            let r = pack.residuals().unwrap();
            assert!(r.validated(), "{r:?}");
            assert!(augmentation_check(&pack, &psi_m).unwrap());
            // a corrupted homotopy shows up in the residual
            let mut bad = pack.clone();
            bad.h[0] = bad.h[0].add(&bad.h[0]).unwrap();
            assert!(!bad.residuals().unwrap().h.exact_zero);

            let (c, data) = reflection_data(l, vec![1, -1], psi.clone(), psi_inv).unwrap();
            let pack = transfer(&psi_m, &data, &c).unwrap();
            assert!(pack.is_validated().unwrap());
            assert!(augmentation_check(&pack, &psi_m).unwrap());
            // Ψ moves (h, x) to (hg⁻¹, x′) with x′ within δ₀ of g·x
            let flip = Interval { flip: true };
            for k in 0..2 {
                let dev = deviation(&pack.phi[k], &pack.complex.positions[k], &pack.complex.positions[k], &flip);
                assert_eq!(dev, BigRational::from_integer(0.into()));
                assert!(pack.phi[k].support().iter().all(|(_, _, d)| data.t.contains(&d.inv())));
            }
        }
    }

    #[test]
    fn corrupted_psi_fails_augmentation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (psi, psi_inv) = idempotent_unit(&mut rng, 2);
        let c = super::super::subdivided_interval(2).unwrap();
        let data = trivial_action_data(&c, vec![1i64, -1], psi.clone(), psi_inv);
        let pack = transfer(&psi_morphism(&data.t, &psi), &data, &c).unwrap();
        let mut corrupted = psi.clone();
        corrupted[0] = corrupted[0].add(&Matrix::identity(2));
        assert!(!augmentation_check(&pack, &psi_morphism(&data.t, &corrupted)).unwrap());
    }
}
