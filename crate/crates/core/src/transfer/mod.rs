//! Chain complexes of geometric modules, the transfer of an automorphism of
//! R[G]^n along homotopy-action data, and self-torsion with verified
//! contractions.

mod pack;
mod torsion;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::controlled::{ControlError, GeometricModule, Group, Matrix, Morphism, Ring, Trivial};

pub use pack::{
    augmentation_check, collapse_data, psi_morphism, reflection_data, transfer, trivial_action_data, ChainEquivPack,
    PackResiduals, TransferData,
};
pub use torsion::{
    mapping_cone, self_torsion, self_torsion_with, support_word_bound, ContractionMethod, SelfTorsion, WordBound,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransferError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("boundary does not square to zero in degree {0}")]
    NotAComplex(usize),
    #[error("inconsistent transfer data: {0}")]
    InconsistentData(String),
    #[error("no chain contraction: {0}")]
    NotAContraction(String),
    #[error("odd-to-even map is not invertible")]
    NotInvertible,
    #[error("support pair ({to}, {from}) has no word factorization within the cap")]
    NoFactorization { to: usize, from: usize },
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// Bounded complex in degrees 0..=top. Orbit points carry a position in X.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteChainComplex<G: Group, R: Ring> {
    pub modules: Vec<GeometricModule>,
    /// boundary[k] maps degree k+1 to degree k.
    pub boundary: Vec<Morphism<G, R>>,
    pub positions: Vec<Vec<BigRational>>,
}

/// One morphism per degree.
pub type ChainMap<G, R> = Vec<Morphism<G, R>>;

/// Degree +1 map; entry k goes from degree k to degree k+1.
pub type Homotopy<G, R> = Vec<Morphism<G, R>>;

impl<G: Group, R: Ring> FiniteChainComplex<G, R> {
    pub fn new(
        modules: Vec<GeometricModule>,
        boundary: Vec<Morphism<G, R>>,
        positions: Vec<Vec<BigRational>>,
    ) -> Result<Self, TransferError> {
        if modules.is_empty() || boundary.len() + 1 != modules.len() || positions.len() != modules.len() {
            return Err(TransferError::PreconditionFailed("degree counts disagree".into()));
        }
        for (k, d) in boundary.iter().enumerate() {
            if d.source != modules[k + 1] || d.target != modules[k] {
                return Err(TransferError::PreconditionFailed(format!("boundary {k} has the wrong modules")));
            }
        }
        for (m, p) in modules.iter().zip(&positions) {
            if m.ranks.len() != p.len() {
                return Err(TransferError::PreconditionFailed("one position per orbit point".into()));
            }
        }
        let c = FiniteChainComplex { modules, boundary, positions };
        c.check_boundary_squares()?;
        Ok(c)
    }

    pub fn top(&self) -> usize {
        self.modules.len() - 1
    }

    /// Module in degree k, empty outside 0..=top.
    pub fn module(&self, k: isize) -> GeometricModule {
        usize::try_from(k)
            .ok()
            .and_then(|k| self.modules.get(k))
            .cloned()
            .unwrap_or_else(|| GeometricModule::new(vec![]))
    }

    /// ∂ from degree k to k-1, zero outside the range.
    pub fn d(&self, k: isize) -> Morphism<G, R> {
        match usize::try_from(k - 1).ok().and_then(|i| self.boundary.get(i)) {
            Some(d) => d.clone(),
            None => Morphism::zero(self.module(k), self.module(k - 1)),
        }
    }

    pub fn check_boundary_squares(&self) -> Result<(), TransferError> {
        for k in 2..=self.top() as isize {
            if !self.d(k - 1).compose(&self.d(k))?.is_zero() {
                return Err(TransferError::NotAComplex(k as usize));
            }
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.modules
            .iter()
            .enumerate()
            .map(|(k, m)| if k % 2 == 0 { m.total_rank() as i64 } else { -(m.total_rank() as i64) })
            .sum()
    }

    pub fn identity(&self) -> ChainMap<G, R> {
        self.modules.iter().map(Morphism::identity).collect()
    }

    pub fn zero_homotopy(&self) -> Homotopy<G, R> {
        (0..self.top() as isize).map(|k| Morphism::zero(self.module(k), self.module(k + 1))).collect()
    }

    /// Entry of a degree +1 map, zero outside its range.
    pub fn hom_at(&self, l: &Homotopy<G, R>, k: isize) -> Morphism<G, R> {
        match usize::try_from(k).ok().and_then(|i| l.get(i)) {
            Some(m) => m.clone(),
            None => Morphism::zero(self.module(k), self.module(k + 1)),
        }
    }

    pub fn is_chain_map(&self, f: &ChainMap<G, R>) -> Result<bool, TransferError> {
        for k in 1..=self.top() as isize {
            if self.d(k).compose(&f[k as usize])? != f[k as usize - 1].compose(&self.d(k))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest spatial deviation over the boundary maps.
    pub fn boundary_control<S: TransferSpace<G>>(&self, space: &S) -> BigRational {
        (1..=self.top())
            .map(|k| deviation(&self.boundary[k - 1], &self.positions[k], &self.positions[k - 1], space))
            .fold(BigRational::zero(), max_rat)
    }
}

pub(crate) fn max_rat(a: BigRational, b: BigRational) -> BigRational {
    if b > a {
        b
    } else {
        a
    }
}

pub fn compose_chain_maps<G: Group, R: Ring>(
    f: &ChainMap<G, R>,
    g: &ChainMap<G, R>,
) -> Result<ChainMap<G, R>, TransferError> {
    f.iter().zip(g).map(|(a, b)| Ok(a.compose(b)?)).collect()
}

/// Exact residual of a claimed homotopy.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Residual {
    pub max_norm: f64,
    pub exact_zero: bool,
}

/// Residual of ∂L + L∂ − (f − g); zero iff L is a chain homotopy f → g.
pub fn verify_chain_homotopy<G: Group, R: Ring>(
    c: &FiniteChainComplex<G, R>,
    l: &Homotopy<G, R>,
    f: &ChainMap<G, R>,
    g: &ChainMap<G, R>,
) -> Result<Residual, TransferError> {
    let mut max_norm = 0.0f64;
    let mut exact_zero = true;
    for k in 0..=c.top() as isize {
        let lhs = c.d(k + 1).compose(&c.hom_at(l, k))?.add(&c.hom_at(l, k - 1).compose(&c.d(k))?)?;
        let r = lhs.sub(&f[k as usize].sub(&g[k as usize])?)?;
        exact_zero &= r.is_zero();
        max_norm = max_norm.max(r.max_magnitude());
    }
    Ok(Residual { max_norm, exact_zero })
}

/// G-action and metric on the transfer space X.
pub trait TransferSpace<G> {
    fn act(&self, g: &G, x: &BigRational) -> BigRational;

    fn dist(&self, a: &BigRational, b: &BigRational) -> BigRational;
}

/// X = Δ¹ parametrized by [0,1], with the l¹ metric of the simplex
/// (twice the Euclidean distance). Z acts trivially or through the flip.
#[derive(Clone, Copy, Debug, Default)]
pub struct Interval {
    pub flip: bool,
}

impl Interval {
    fn l1(a: &BigRational, b: &BigRational) -> BigRational {
        (a - b).abs() * BigRational::from_integer(BigInt::from(2))
    }
}

impl TransferSpace<i64> for Interval {
    fn act(&self, g: &i64, x: &BigRational) -> BigRational {
        if self.flip && g.rem_euclid(2) == 1 {
            BigRational::from_integer(BigInt::from(1)) - x
        } else {
            x.clone()
        }
    }

    fn dist(&self, a: &BigRational, b: &BigRational) -> BigRational {
        Self::l1(a, b)
    }
}

impl TransferSpace<Trivial> for Interval {
    fn act(&self, _: &Trivial, x: &BigRational) -> BigRational {
        x.clone()
    }

    fn dist(&self, a: &BigRational, b: &BigRational) -> BigRational {
        Self::l1(a, b)
    }
}

/// max over blocks (to, from, δ) of d(x_to, δ⁻¹·x_from): the block sends
/// (h, from) to (hδ, to), so with g = δ⁻¹ this is d(x′, g x).
pub fn deviation<G: Group, R: Ring, S: TransferSpace<G>>(
    f: &Morphism<G, R>,
    src: &[BigRational],
    dst: &[BigRational],
    space: &S,
) -> BigRational {
    f.blocks()
        .map(|((to, from, delta), _)| space.dist(&dst[*to], &space.act(&delta.inv(), &src[*from])))
        .fold(BigRational::zero(), max_rat)
}

/// Simplicial chains of [0,1] cut into l edges; generators sit at barycenters.
pub fn subdivided_interval(l: usize) -> Result<FiniteChainComplex<Trivial, BigInt>, TransferError> {
    if l == 0 {
        return Err(TransferError::PreconditionFailed("l must be positive".into()));
    }
    let vertices = GeometricModule::new(vec![1; l + 1]);
    let edges = GeometricModule::new(vec![1; l]);
    let mut d = Morphism::zero(edges.clone(), vertices.clone());
    for j in 0..l {
        d.add_block(j + 1, j, Trivial, Matrix::identity(1));
        d.add_block(j, j, Trivial, Matrix::identity(1).neg());
    }
    let lb = BigInt::from(l);
    let positions = vec![
        (0..=l).map(|i| BigRational::new(i.into(), lb.clone())).collect(),
        (0..l).map(|j| BigRational::new((2 * j + 1).into(), &lb * 2)).collect(),
    ];
    FiniteChainComplex::new(vec![vertices, edges], vec![d], positions)
}

/// One vertex, rank one in degree zero.
pub fn point_complex() -> FiniteChainComplex<Trivial, BigInt> {
    FiniteChainComplex {
        modules: vec![GeometricModule::new(vec![1])],
        boundary: vec![],
        positions: vec![vec![BigRational::zero()]],
    }
}
