//! Simplicial complexes with the global l¹ metric, actions, nerves and
//! induced complexes.

mod cover;
mod induced;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{GroupElement, Semidirect, Subgroup};

pub use cover::{nerve, pou_map, BoxCover, Cover, OpenBox};
pub use induced::{FiberAction, InducedComplex, InducedPoint};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("orbit {0:?} does not span a simplex")]
    OrbitNotSimplex(Vec<usize>),
    #[error("point lies in no cover member")]
    NoCover,
    #[error("permutation does not map simplices to simplices")]
    NotSimplicial,
    #[error("not a point: {0}")]
    InvalidPoint(String),
}

/// Point of a complex in barycentric coordinates. Zero weights are never stored.
pub type SPoint<V> = BTreeMap<V, BigRational>;

pub fn vertex_point<V: Ord>(v: V) -> SPoint<V> {
    BTreeMap::from([(v, BigRational::one())])
}

/// Σ_v |z_v − z'_v| over the whole vertex set.
pub fn l1_distance<V: Ord>(a: &SPoint<V>, b: &SPoint<V>) -> BigRational {
    let mut total = BigRational::zero();
    for (v, x) in a {
        total += match b.get(v) {
            Some(y) => (x - y).abs(),
            None => x.abs(),
        };
    }
    for (v, y) in b {
        if !a.contains_key(v) {
            total += y.abs();
        }
    }
    total
}

pub fn barycenter<V: Ord + Clone>(vs: &[V]) -> SPoint<V> {
    let w = BigRational::new(BigInt::one(), BigInt::from(vs.len()));
    vs.iter().map(|v| (v.clone(), w.clone())).collect()
}

/// Weights positive, summing to one.
pub fn check_point<V: Ord>(p: &SPoint<V>) -> Result<(), SimplicialError> {
    if p.values().any(|w| !w.is_positive()) {
        return Err(SimplicialError::InvalidPoint("nonpositive weight".into()));
    }
    if p.values().sum::<BigRational>() != BigRational::one() {
        return Err(SimplicialError::InvalidPoint("weights do not sum to 1".into()));
    }
    Ok(())
}

/// Point ξ on the line complex with vertex set Z and edges {i, i+1}.
pub fn line_point(xi: &BigRational) -> SPoint<BigInt> {
    let lo = xi.floor().to_integer();
    let frac = xi - BigRational::from_integer(lo.clone());
    if frac.is_zero() {
        return vertex_point(lo);
    }
    BTreeMap::from([(lo.clone(), BigRational::one() - &frac), (lo + 1, frac)])
}

/// Finite complex on vertices 0..n, stored as the full face-closed family.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SimplicialComplex {
    simplices: BTreeSet<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ComplexRepr {
    vertices: Vec<usize>,
    maximal_simplices: Vec<Vec<usize>>,
}

impl Serialize for SimplicialComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ComplexRepr { vertices: self.vertices(), maximal_simplices: self.maximal_simplices() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplicialComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = ComplexRepr::deserialize(d)?;
        let mut c = SimplicialComplex::from_maximal(r.maximal_simplices);
        for v in r.vertices {
            c.add_simplex(vec![v]);
        }
        Ok(c)
    }
}

impl SimplicialComplex {
    pub fn from_maximal<I: IntoIterator<Item = Vec<usize>>>(maximal: I) -> Self {
        let mut c = SimplicialComplex::default();
        for s in maximal {
            c.add_simplex(s);
        }
        c
    }

    /// Adds a simplex and all its faces.
    pub fn add_simplex(&mut self, mut s: Vec<usize>) {
        s.sort_unstable();
        s.dedup();
        if s.is_empty() || self.simplices.contains(&s) {
            return;
        }
        let k = s.len();
        for mask in 1u64..(1 << k) {
            let face: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
            self.simplices.insert(face);
        }
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        let mut s = s.to_vec();
        s.sort_unstable();
        s.dedup();
        self.simplices.contains(&s)
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.simplices.iter()
    }

    pub fn vertices(&self) -> Vec<usize> {
        self.simplices.iter().filter(|s| s.len() == 1).map(|s| s[0]).collect()
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.len() == dim + 1).count()
    }

    /// −1 for the empty complex.
    pub fn dimension(&self) -> isize {
        self.simplices.iter().map(|s| s.len() as isize).max().unwrap_or(0) - 1
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.simplices.iter().map(|s| if s.len() % 2 == 1 { 1 } else { -1 }).sum()
    }

    pub fn maximal_simplices(&self) -> Vec<Vec<usize>> {
        self.simplices
            .iter()
            .filter(|s| {
                !self
                    .simplices
                    .iter()
                    .any(|t| t.len() > s.len() && s.iter().all(|v| t.binary_search(v).is_ok()))
            })
            .cloned()
            .collect()
    }

    pub fn supports(&self, p: &SPoint<usize>) -> bool {
        self.contains(&p.keys().copied().collect::<Vec<_>>())
    }

    /// Barycentric subdivision: one vertex per simplex (numbered in the
    /// complex's simplex order), one simplex per chain of faces.
    pub fn subdivide(&self) -> (SimplicialComplex, Vec<Vec<usize>>) {
        let index: BTreeMap<&Vec<usize>, usize> = self.simplices.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let labels: Vec<Vec<usize>> = self.simplices.iter().cloned().collect();
        let mut out = SimplicialComplex::default();
        for m in self.maximal_simplices() {
            let mut flags: Vec<Vec<Vec<usize>>> = Vec::new();
            collect_flags(&m, &mut Vec::new(), &mut flags);
            for flag in flags {
                out.add_simplex(flag.iter().map(|f| index[f]).collect());
            }
        }
        (out, labels)
    }
}

fn collect_flags(s: &[usize], cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
    cur.push(s.to_vec());
    if s.len() == 1 {
        out.push(cur.clone());
    } else {
        for i in 0..s.len() {
            let mut t = s.to_vec();
            t.remove(i);
            collect_flags(&t, cur, out);
        }
    }
    cur.pop();
}

/// Action of a free group on a finite complex through vertex permutations.
#[derive(Clone, Debug)]
pub struct SimplicialAction {
    pub complex: SimplicialComplex,
    pub generators: Vec<Vec<usize>>,
}

/// Letter of a word: generator index and exponent sign.
pub type Letter = (usize, bool);

impl SimplicialAction {
    pub fn new(complex: SimplicialComplex, generators: Vec<Vec<usize>>) -> Result<Self, SimplicialError> {
        for p in &generators {
            if complex.simplices().any(|s| !complex.contains(&s.iter().map(|&v| p[v]).collect::<Vec<_>>())) {
                return Err(SimplicialError::NotSimplicial);
            }
        }
        Ok(SimplicialAction { complex, generators })
    }

    fn letter(&self, (g, forward): Letter, v: usize) -> usize {
        let p = &self.generators[g];
        if forward {
            p[v]
        } else {
            p.iter().position(|&w| w == v).expect("permutation")
        }
    }

    /// Image of a vertex under a word acting on the left (last letter first).
    pub fn act_vertex(&self, word: &[Letter], v: usize) -> usize {
        word.iter().rev().fold(v, |v, &l| self.letter(l, v))
    }

    pub fn act(&self, word: &[Letter], p: &SPoint<usize>) -> SPoint<usize> {
        p.iter().map(|(&v, w)| (self.act_vertex(word, v), w.clone())).collect()
    }

    /// The barycenter of the simplex spanned by a g-orbit of a heavy vertex
    /// of x, a g-fixed point, when x moves by less than 1/(N+1).
    pub fn fixed_simplex(&self, word: &[Letter], x: &SPoint<usize>, n: usize) -> Result<SPoint<usize>, SimplicialError> {
        let threshold = BigRational::new(BigInt::one(), BigInt::from(n + 1));
        let moved = l1_distance(x, &self.act(word, x));
        if moved >= threshold {
            return Err(SimplicialError::PreconditionFailed(format!("d(x, gx) = {moved} ≥ 1/{}", n + 1)));
        }
        let (&v, _) = x
            .iter()
            .find(|(_, w)| **w >= threshold)
            .ok_or_else(|| SimplicialError::PreconditionFailed("no vertex of weight ≥ 1/(N+1)".into()))?;
        let mut orbit = vec![v];
        let mut cur = self.act_vertex(word, v);
        while cur != v {
            orbit.push(cur);
            cur = self.act_vertex(word, cur);
        }
        orbit.sort_unstable();
        if !self.complex.contains(&orbit) {
            return Err(SimplicialError::OrbitNotSimplex(orbit));
        }
        let b = barycenter(&orbit);
        debug_assert_eq!(self.act(word, &b), b);
        Ok(b)
    }
}

/// Coarse family membership for subgroups of the torsion-free group Z^n ⋊ Z.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum FamilyTag {
    Trivial,
    Cyclic,
    Abelian,
    Other,
}

impl FamilyTag {
    /// Torsion-free virtually cyclic groups are trivial or infinite cyclic.
    pub fn is_virtually_cyclic(self) -> bool {
        matches!(self, FamilyTag::Trivial | FamilyTag::Cyclic)
    }

    pub fn is_abelian(self) -> bool {
        self != FamilyTag::Other
    }
}

pub fn classify_subgroup(grp: &Semidirect, h: &Subgroup) -> FamilyTag {
    let rank = h.lattice.rank();
    match (&h.slope, rank) {
        (None, 0) => FamilyTag::Trivial,
        (None, 1) | (Some(_), 0) => FamilyTag::Cyclic,
        (None, _) => FamilyTag::Abelian,
        (Some(s), _) => {
            let m = grp.power(s.d);
            if h.lattice.basis.iter().all(|b| m.mul_vec(b) == *b) {
                FamilyTag::Abelian
            } else {
                FamilyTag::Other
            }
        }
    }
}

/// Whether the generators pairwise commute; an independent check on
/// `classify_subgroup`.
pub fn generators_commute(grp: &Semidirect, gens: &[GroupElement]) -> bool {
    gens.iter().all(|a| {
        gens.iter()
            .all(|b| grp.mul(a, b).ok() == grp.mul(b, a).ok())
    })
}
