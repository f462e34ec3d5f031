//! Geometric modules over free G-spaces G × X₀ and morphisms between them,
//! with support and control measured against a control map.

mod ring;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ring::{to_rational, Matrix, Ring, Zmod};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ControlError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("not inverse: {0}")]
    NotInverse(String),
}

/// Discrete group in multiplicative notation.
pub trait Group: Clone + Ord + Debug + Send + Sync {
    /// Whether the group has a single element; enables dense linear algebra.
    const TRIVIAL: bool = false;

    fn identity() -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn inv(&self) -> Self;
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
pub struct Trivial;

impl Group for Trivial {
    const TRIVIAL: bool = true;

    fn identity() -> Self {
        Trivial
    }
    fn mul(&self, _: &Self) -> Self {
        Trivial
    }
    fn inv(&self) -> Self {
        Trivial
    }
}

/// Infinite cyclic group ⟨t⟩, element t^k stored as k.
impl Group for i64 {
    fn identity() -> Self {
        0
    }
    fn mul(&self, o: &Self) -> Self {
        self + o
    }
    fn inv(&self) -> Self {
        -self
    }
}

/// Module over G × X₀ with M_{(g,x)} = R^{ranks[x]} for every g.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GeometricModule {
    pub ranks: Vec<usize>,
}

impl GeometricModule {
    pub fn new(ranks: Vec<usize>) -> Self {
        GeometricModule { ranks }
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// Offset of each orbit point in the flattened coordinate vector.
    pub fn offsets(&self) -> Vec<usize> {
        self.ranks
            .iter()
            .scan(0, |acc, &r| {
                let o = *acc;
                *acc += r;
                Some(o)
            })
            .collect()
    }
}

/// Block key (x″, x′, δ): the block maps M at (e, x′) to N at (δ, x″), and by
/// equivariance M at (g, x′) to N at (gδ, x″).
pub type BlockKey<G> = (usize, usize, G);

/// Equivariant morphism of geometric modules, stored per orbit pair.
#[derive(Clone, PartialEq, Debug)]
pub struct Morphism<G: Group, R: Ring> {
    pub source: GeometricModule,
    pub target: GeometricModule,
    blocks: BTreeMap<BlockKey<G>, Matrix<R>>,
}

impl<G: Group, R: Ring> Morphism<G, R> {
    pub fn zero(source: GeometricModule, target: GeometricModule) -> Self {
        Morphism { source, target, blocks: BTreeMap::new() }
    }

    pub fn identity(m: &GeometricModule) -> Self {
        let mut f = Self::zero(m.clone(), m.clone());
        for (x, &r) in m.ranks.iter().enumerate() {
            f.add_block(x, x, G::identity(), Matrix::identity(r));
        }
        f
    }

    /// Adds `block` into the (x″, x′, δ) entry.
    pub fn add_block(&mut self, to: usize, from: usize, delta: G, block: Matrix<R>) {
        assert_eq!(
            (block.rows, block.cols),
            (self.target.ranks[to], self.source.ranks[from]),
            "block shape"
        );
        let key = (to, from, delta);
        let merged = match self.blocks.remove(&key) {
            Some(b) => b.add(&block),
            None => block,
        };
        if !merged.is_zero() {
            self.blocks.insert(key, merged);
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&BlockKey<G>, &Matrix<R>)> {
        self.blocks.iter()
    }

    pub fn block(&self, to: usize, from: usize, delta: &G) -> Option<&Matrix<R>> {
        self.blocks.get(&(to, from, delta.clone()))
    }

    pub fn support(&self) -> BTreeSet<BlockKey<G>> {
        self.blocks.keys().cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    fn check_same_shape(&self, o: &Self) -> Result<(), ControlError> {
        if self.source != o.source || self.target != o.target {
            return Err(ControlError::ShapeMismatch("sum of morphisms with different modules".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self, ControlError> {
        self.check_same_shape(o)?;
        let mut out = self.clone();
        for ((a, b, d), m) in &o.blocks {
            out.add_block(*a, *b, d.clone(), m.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        Morphism {
            source: self.source.clone(),
            target: self.target.clone(),
            blocks: self.blocks.iter().map(|(k, m)| (k.clone(), m.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Result<Self, ControlError> {
        self.add(&o.neg())
    }

    /// self ∘ g.
    pub fn compose(&self, g: &Self) -> Result<Self, ControlError> {
        if g.target != self.source {
            return Err(ControlError::ShapeMismatch("codomain of g is not the domain of f".into()));
        }
        let mut out = Self::zero(g.source.clone(), self.target.clone());
        // group f's blocks by their source orbit point
        let mut by_source: BTreeMap<usize, Vec<(&BlockKey<G>, &Matrix<R>)>> = BTreeMap::new();
        for (k, m) in &self.blocks {
            by_source.entry(k.1).or_default().push((k, m));
        }
        for ((x, x1, gamma), gm) in &g.blocks {
            for ((x2, _, eta), fm) in by_source.get(x).into_iter().flatten() {
                out.add_block(*x2, *x1, gamma.mul(eta), fm.mul(gm));
            }
        }
        Ok(out)
    }

    /// One JSON object per block: the block sends (e, from) to (δ, to).
    pub fn to_json_lines(&self) -> String
    where
        G: Serialize,
        R: std::fmt::Display,
    {
        self.blocks
            .iter()
            .map(|((to, from, delta), m)| {
                let rows: Vec<Vec<String>> =
                    (0..m.rows).map(|i| m.row(i).iter().map(ToString::to_string).collect()).collect();
                serde_json::json!({
                    "from": {"orbit": from, "group": G::identity()},
                    "to": {"orbit": to, "group": delta},
                    "block": rows,
                })
                .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Entries of the blocks, for residual reporting.
    pub fn max_magnitude(&self) -> f64 {
        self.blocks.values().map(Matrix::max_magnitude).fold(0.0, f64::max)
    }

    /// Applies a ring homomorphism entrywise.
    pub fn map_ring<S: Ring>(&self, f: impl Fn(&R) -> S) -> Morphism<G, S> {
        Morphism {
            source: self.source.clone(),
            target: self.target.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|(k, m)| (k.clone(), Matrix::from_fn(m.rows, m.cols, |i, j| f(&m[(i, j)]))))
                .filter(|(_, m)| !m.is_zero())
                .collect(),
        }
    }

    /// Dense matrix when G is trivial, rows/cols in orbit-point order.
    pub fn to_dense(&self) -> Matrix<R> {
        let (ro, co) = (self.target.offsets(), self.source.offsets());
        let mut out = Matrix::zeros(self.target.total_rank(), self.source.total_rank());
        for ((a, b, _), m) in &self.blocks {
            let cur = out.block(ro[*a], co[*b], m.rows, m.cols);
            out.set_block(ro[*a], co[*b], &cur.add(m));
        }
        out
    }

    pub fn from_dense(source: GeometricModule, target: GeometricModule, m: &Matrix<R>) -> Self {
        let (ro, co) = (target.offsets(), source.offsets());
        let mut f = Self::zero(source.clone(), target.clone());
        for (a, &ra) in target.ranks.iter().enumerate() {
            for (b, &rb) in source.ranks.iter().enumerate() {
                f.add_block(a, b, G::identity(), m.block(ro[a], co[b], ra, rb));
            }
        }
        f
    }
}

/// G-map from G × X₀ to a metric space, with exact distances.
pub trait ControlMap<G: Group> {
    type Point;

    fn eval(&self, g: &G, x: usize) -> Self::Point;

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> BigRational;
}

/// max over supp f of d(p(δ, x″), p(e, x′)).
pub fn control_of<G: Group, R: Ring, P: ControlMap<G>>(f: &Morphism<G, R>, p: &P) -> BigRational {
    control_from(f, p, &G::identity())
}

/// Control measured from the translated base point g; equals `control_of`
/// when p is equivariant and G acts isometrically.
pub fn control_from<G: Group, R: Ring, P: ControlMap<G>>(f: &Morphism<G, R>, p: &P, g: &G) -> BigRational {
    f.blocks
        .keys()
        .map(|(to, from, delta)| p.dist(&p.eval(&g.mul(delta), *to), &p.eval(g, *from)))
        .fold(BigRational::zero(), |a, b| if b > a { b } else { a })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismReport {
    #[serde(with = "crate::json::rational_str")]
    pub control_f: BigRational,
    #[serde(with = "crate::json::rational_str")]
    pub control_inverse: BigRational,
    pub within_eps: bool,
}

/// Checks f∘f⁻¹ = id = f⁻¹∘f exactly and measures both controls against ε.
pub fn is_eps_automorphism<G: Group, R: Ring, P: ControlMap<G>>(
    f: &Morphism<G, R>,
    f_inv: &Morphism<G, R>,
    p: &P,
    eps: &BigRational,
) -> Result<AutomorphismReport, ControlError> {
    let left = f.compose(f_inv)?;
    let right = f_inv.compose(f)?;
    if left != Morphism::identity(&f.target) {
        return Err(ControlError::NotInverse("f ∘ f⁻¹ ≠ id".into()));
    }
    if right != Morphism::identity(&f.source) {
        return Err(ControlError::NotInverse("f⁻¹ ∘ f ≠ id".into()));
    }
    let control_f = control_of(f, p);
    let control_inverse = control_of(f_inv, p);
    let within_eps = control_f <= *eps && control_inverse <= *eps;
    Ok(AutomorphismReport { control_f, control_inverse, within_eps })
}

/// G = Z acting on Z × X₀ ⊂ R by translation, x₀ placed at `offsets[x₀]`.
#[derive(Clone, Debug)]
pub struct LineControl {
    pub offsets: Vec<BigRational>,
}

impl ControlMap<i64> for LineControl {
    type Point = BigRational;

    fn eval(&self, g: &i64, x: usize) -> BigRational {
        BigRational::from_integer((*g).into()) + &self.offsets[x]
    }

    fn dist(&self, a: &BigRational, b: &BigRational) -> BigRational {
        (a - b).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = Morphism<i64, BigInt>;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn rank_one() -> GeometricModule {
        GeometricModule::new(vec![1])
    }

    fn shift(k: i64) -> M {
        let mut f = M::zero(rank_one(), rank_one());
        f.add_block(0, 0, k, Matrix::identity(1));
        f
    }

    fn line() -> LineControl {
        LineControl { offsets: vec![q(0, 1)] }
    }

    #[test]
    fn support_and_control_examples() {
        assert!(M::zero(rank_one(), rank_one()).support().is_empty());
        let id = M::identity(&rank_one());
        assert_eq!(id.support(), BTreeSet::from([(0, 0, 0)]));
        assert_eq!(shift(1).support(), BTreeSet::from([(0, 0, 1)]));
        assert_eq!(control_of(&id, &line()), q(0, 1));
        assert_eq!(control_of(&shift(1), &line()), q(1, 1));
        // two orbit points mapped to the same place: collapsed control
        let two = GeometricModule::new(vec![1, 1]);
        let mut f = M::zero(two.clone(), two);
        f.add_block(1, 0, 0, Matrix::identity(1));
        let collapsed = LineControl { offsets: vec![q(1, 3), q(1, 3)] };
        assert_eq!(control_of(&f, &collapsed), q(0, 1));
    }

    #[test]
    fn composition_examples() {
        let f = shift(1);
        assert_eq!(f.compose(&M::identity(&rank_one())).unwrap(), f);
        let two = f.compose(&f).unwrap();
        assert_eq!(control_of(&two, &line()), q(2, 1));
        assert_eq!(control_of(&two, &line()), control_of(&f, &line()) + control_of(&f, &line()));
        let back = shift(-1).compose(&f).unwrap();
        assert_eq!(back, M::identity(&rank_one()));
        assert_eq!(control_of(&back, &line()), q(0, 1));
        let wrong = M::zero(GeometricModule::new(vec![2]), GeometricModule::new(vec![2]));
        assert!(matches!(f.compose(&wrong), Err(ControlError::ShapeMismatch(_))));
    }

    #[test]
    fn automorphism_examples() {
        let id = M::identity(&rank_one());
        let r = is_eps_automorphism(&id, &id, &line(), &q(0, 1)).unwrap();
        assert!(r.within_eps);
        let r = is_eps_automorphism(&shift(1), &shift(-1), &line(), &q(1, 1)).unwrap();
        assert!(r.within_eps);
        let r = is_eps_automorphism(&shift(1), &shift(-1), &line(), &q(1, 2)).unwrap();
        assert!(!r.within_eps);
        assert_eq!(r.control_f, q(1, 1));
        assert!(matches!(
            is_eps_automorphism(&shift(1), &shift(1), &line(), &q(5, 1)),
            Err(ControlError::NotInverse(_))
        ));
    }

    /// Random morphism over Z with orbit points at the given positions.
    pub(crate) fn random_morphism(rng: &mut ChaCha8Rng, src: &GeometricModule, dst: &GeometricModule) -> M {
        let mut f = M::zero(src.clone(), dst.clone());
        for _ in 0..rng.gen_range(1..5) {
            let to = rng.gen_range(0..dst.ranks.len());
            let from = rng.gen_range(0..src.ranks.len());
            let m = Matrix::from_fn(dst.ranks[to], src.ranks[from], |_, _| BigInt::from(rng.gen_range(-2..3)));
            f.add_block(to, from, rng.gen_range(-3..4), m);
        }
        f
    }

    #[test]
    fn control_is_subadditive_and_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = GeometricModule::new(vec![1, 2]);
        let b = GeometricModule::new(vec![2, 1, 1]);
        let c = GeometricModule::new(vec![1]);
        let p = LineControl { offsets: vec![q(0, 1), q(1, 3), q(3, 4)] };
        for _ in 0..200 {
            let g = random_morphism(&mut rng, &a, &b);
            let f = random_morphism(&mut rng, &b, &c);
            let fg = f.compose(&g).unwrap();
            assert!(control_of(&fg, &p) <= control_of(&f, &p) + control_of(&g, &p));
            // supp(f∘g) only uses composable pairs
            for (x2, x1, d) in fg.support() {
                assert!(g.support().iter().any(|(x, y, gamma)| *y == x1
                    && f.support().iter().any(|(z, w, eta)| *z == x2 && w == x && gamma + eta == d)));
            }
            let h: i64 = rng.gen_range(-10..10);
            assert_eq!(control_from(&f, &p, &h), control_of(&f, &p));
        }
    }

    #[test]
    fn json_lines_dump() {
        let dump = shift(1).to_json_lines();
        let v: serde_json::Value = serde_json::from_str(&dump).unwrap();
        assert_eq!(v["to"]["group"], 1);
        assert_eq!(v["from"]["orbit"], 0);
        assert_eq!(v["block"][0][0], "1");
    }

    #[test]
    fn dense_round_trip_at_trivial_group() {
        let a = GeometricModule::new(vec![1, 2]);
        let m = Matrix::from_rows(vec![vec![BigInt::from(1), 2.into(), 3.into()], vec![0.into(), 5.into(), 6.into()]]);
        let f = Morphism::<Trivial, BigInt>::from_dense(a, GeometricModule::new(vec![1, 1]), &m);
        assert_eq!(f.to_dense(), m);
    }
}
