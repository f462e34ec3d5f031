use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{symmetric, CertError};
use crate::group::{GeneratingSet, GroupElement, GroupError, IntMatrix, Semidirect};
use crate::simplicial::{l1_distance, FiberAction, SPoint};

/// Index (w, m) of the member V_{w,m}.
pub type NerveVertex = (Vec<BigInt>, i64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverParams {
    /// Half-length of members in the flow direction.
    #[serde(with = "crate::json::rational_str")]
    pub r: BigRational,
    /// Weight of the transversal sup distance.
    #[serde(with = "crate::json::rational_str")]
    pub w: BigRational,
    /// Box overhang.
    #[serde(with = "crate::json::rational_str")]
    pub rho: BigRational,
}

/// A point (x, ξ) of R^n × R.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ambient {
    pub x: Vec<BigRational>,
    pub xi: BigRational,
}

fn rat(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

fn apply(m: &IntMatrix, x: &[BigRational]) -> Vec<BigRational> {
    (0..m.dim())
        .map(|i| x.iter().enumerate().map(|(j, xj)| xj * rat(m.get(i, j))).sum())
        .collect()
}

/// Integers strictly between lo and hi.
fn open_range(lo: &BigRational, hi: &BigRational) -> Vec<BigInt> {
    let b: BigInt = hi.ceil().to_integer() - 1;
    let mut a: BigInt = lo.floor().to_integer() + 1;
    let mut out = Vec::new();
    while a <= b {
        out.push(a.clone());
        a += 1;
    }
    out
}

/// G acts on R^n × R by vt^k·(x, ξ) = (v + A^k x, ξ + k) and on the cover by
/// vt^k·V_{w,m} = V_{w + A^{−(m+k)}v, m+k}. The map is F = pou ∘ F₀ with
/// F₀(vt^k) = (v/q, k), equivariant for (qZ)^n ⋊ Z acting through
/// vt^k ↦ (v/q)t^k.
#[derive(Clone, Debug)]
pub struct NerveMap<'a> {
    pub grp: &'a Semidirect,
    pub q: u64,
    pub params: CoverParams,
}

impl<'a> NerveMap<'a> {
    pub fn new(grp: &'a Semidirect, q: u64, params: CoverParams) -> Result<Self, CertError> {
        let zero = BigRational::zero();
        if q < 2 || params.r <= zero || params.w <= zero || params.rho <= zero || params.rho >= BigRational::one() {
            return Err(CertError::InvalidRequest("need q ≥ 2, R, W > 0 and 0 < ρ < 1".into()));
        }
        Ok(NerveMap { grp, q, params })
    }

    pub fn act_point(&self, g: &GroupElement, p: &Ambient) -> Ambient {
        let ax = apply(&self.grp.power(g.k), &p.x);
        Ambient {
            x: g.v.iter().zip(ax).map(|(v, y)| rat(v) + y).collect(),
            xi: &p.xi + BigRational::from_integer(BigInt::from(g.k)),
        }
    }

    pub fn act_vertex(&self, g: &GroupElement, (w, m): &NerveVertex) -> NerveVertex {
        let m2 = m + g.k;
        let shift = self.grp.power(-m2).mul_vec(&g.v);
        (w.iter().zip(shift).map(|(a, b)| a + b).collect(), m2)
    }

    /// a_{w,m}(p) = min(R − |ξ − m|, W·dist_∞(A^{−m}x, complement of the box)),
    /// zero outside the member.
    pub fn weight(&self, (w, m): &NerveVertex, p: &Ambient) -> BigRational {
        let along = &self.params.r - (&p.xi - BigRational::from_integer(BigInt::from(*m))).abs();
        if !along.is_positive() {
            return BigRational::zero();
        }
        let y = apply(&self.grp.power(-m), &p.x);
        let one = BigRational::one();
        let mut across: Option<BigRational> = None;
        for (yi, wi) in y.iter().zip(w) {
            let wi = rat(wi);
            let d = (yi - &wi + &self.params.rho).min(&wi + &one + &self.params.rho - yi);
            if !d.is_positive() {
                return BigRational::zero();
            }
            across = Some(across.map_or(d.clone(), |a| a.min(d)));
        }
        let across = across.unwrap_or_else(|| along.clone()) * &self.params.w;
        along.min(across)
    }

    pub fn contains(&self, v: &NerveVertex, p: &Ambient) -> bool {
        self.weight(v, p).is_positive()
    }

    /// Every member containing p with its weight.
    pub fn members(&self, p: &Ambient) -> Vec<(NerveVertex, BigRational)> {
        let mut out = Vec::new();
        let one = BigRational::one();
        for m in open_range(&(&p.xi - &self.params.r), &(&p.xi + &self.params.r)) {
            let m = i64::try_from(m).expect("flow coordinate fits in i64");
            let y = apply(&self.grp.power(-m), &p.x);
            let ranges: Vec<Vec<BigInt>> = y
                .iter()
                .map(|yi| {
                    open_range(&(yi - &one - &self.params.rho), &(yi + &self.params.rho))
                })
                .collect();
            if ranges.iter().any(|r| r.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; ranges.len()];
            loop {
                let w: Vec<BigInt> = idx.iter().zip(&ranges).map(|(&i, r)| r[i].clone()).collect();
                let v = (w, m);
                let a = self.weight(&v, p);
                if a.is_positive() {
                    out.push((v, a));
                }
                let mut c = 0;
                while c < idx.len() {
                    idx[c] += 1;
                    if idx[c] < ranges[c].len() {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
                if c == idx.len() {
                    break;
                }
            }
        }
        out
    }

    pub fn pou(&self, p: &Ambient) -> SPoint<NerveVertex> {
        let ms = self.members(p);
        let total: BigRational = ms.iter().map(|(_, a)| a).sum();
        ms.into_iter().map(|(v, a)| (v, a / &total)).collect()
    }

    pub fn f0(&self, g: &GroupElement) -> Ambient {
        let q = BigInt::from(self.q);
        Ambient {
            x: g.v.iter().map(|v| BigRational::new(v.clone(), q.clone())).collect(),
            xi: BigRational::from_integer(BigInt::from(g.k)),
        }
    }

    pub fn eval(&self, g: &GroupElement) -> SPoint<NerveVertex> {
        self.pou(&self.f0(g))
    }

    /// φ(vt^k) = (v/q)t^k for vt^k ∈ (qZ)^n ⋊ Z.
    pub fn phi(&self, h: &GroupElement) -> Option<GroupElement> {
        let q = BigInt::from(self.q);
        let v: Option<Vec<BigInt>> =
            h.v.iter().map(|c| if c.is_multiple_of(&q) { Some(c / &q) } else { None }).collect();
        Some(GroupElement::new(v?, h.k))
    }

    /// ⌈2R⌉·⌈1 + 2ρ⌉^n − 1 bounds the nerve dimension.
    pub fn dimension_bound(&self) -> usize {
        let two = BigRational::from_integer(BigInt::from(2));
        let along = (&two * &self.params.r).ceil().to_integer();
        let across = (BigRational::one() + &two * &self.params.rho).ceil().to_integer();
        let count = along * num_traits::pow(across, self.grp.dim());
        usize::try_from(count).unwrap_or(usize::MAX).saturating_sub(1)
    }
}

impl FiberAction for NerveMap<'_> {
    type Vertex = NerveVertex;

    fn act(&self, h: &GroupElement, v: &NerveVertex) -> Result<NerveVertex, GroupError> {
        let g = self.phi(h).ok_or_else(|| GroupError::BadMatrix(format!("{h:?} is not in (qZ)^n ⋊ Z")))?;
        Ok(self.act_vertex(&g, v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pairs: usize,
    #[serde(with = "crate::json::rational_str")]
    pub worst: BigRational,
    /// (coset representative, generator index) of the worst pair.
    pub worst_pair: (GroupElement, usize),
    pub passed: bool,
    pub touched_vertices: usize,
    pub max_support: usize,
}

/// All coset representatives (v, 0), v ∈ {0..q−1}^n.
fn coset_reps(n: usize, q: u64) -> Vec<GroupElement> {
    let total = q.pow(n as u32);
    (0..total)
        .map(|mut c| {
            let v: Vec<i64> = (0..n)
                .map(|_| {
                    let d = c % q;
                    c /= q;
                    d as i64
                })
                .collect();
            GroupElement::from_i64(&v, 0)
        })
        .collect()
}

/// The finite exact check: d¹(F(g₀), F(g₀s)) for every coset
/// representative g₀ of (qZ)^n ⋊ Z and every s ∈ S ∪ S⁻¹. Equivariance of F
/// and the isometric action on the nerve make this cover every g.
pub fn pair_check(map: &NerveMap, sym: &[GroupElement], eps: &BigRational) -> Result<PairCheck, CertError> {
    let reps = coset_reps(map.grp.dim(), map.q);
    let rows: Vec<(GroupElement, usize, BigRational, Vec<NerveVertex>, usize)> = reps
        .par_iter()
        .flat_map_iter(|g0| {
            let base = map.eval(g0);
            sym.iter().enumerate().map(move |(i, s)| (g0.clone(), i, s, base.clone()))
        })
        .map(|(g0, i, s, base)| {
            let other = map.eval(&map.grp.mul(&g0, s)?);
            let d = l1_distance(&base, &other);
            let support = base.len().max(other.len());
            let touched = base.keys().chain(other.keys()).cloned().collect();
            Ok((g0, i, d, touched, support))
        })
        .collect::<Result<_, GroupError>>()?;
    let mut touched = BTreeSet::new();
    let mut worst = BigRational::zero();
    let mut worst_pair = (map.grp.identity(), 0);
    let mut max_support = 0;
    for (g0, i, d, t, support) in rows.iter() {
        touched.extend(t.iter().cloned());
        max_support = max_support.max(*support);
        if *d > worst {
            worst = d.clone();
            worst_pair = (g0.clone(), *i);
        }
    }
    Ok(PairCheck {
        pairs: rows.len(),
        passed: worst <= *eps,
        worst,
        worst_pair,
        touched_vertices: touched.len(),
        max_support,
    })
}

/// vt^k fixes V_{w,m} iff k = 0 and A^{−m}v = 0, so stabilizers are trivial
/// exactly when every A^{−m} is injective.
pub fn stabilizers_trivial(grp: &Semidirect) -> bool {
    !grp.matrix().det().is_zero()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    #[serde(with = "crate::json::rational_str")]
    pub r: BigRational,
    #[serde(with = "crate::json::rational_str")]
    pub w: BigRational,
    #[serde(with = "crate::json::rational_str")]
    pub worst: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerveReport {
    pub q: u64,
    pub params: CoverParams,
    #[serde(with = "crate::json::rational_str")]
    pub eps: BigRational,
    pub check: PairCheck,
    pub generators: usize,
    pub invariance_spot_checks: usize,
    pub invariance_exact: usize,
    pub equivariance_samples: usize,
    pub equivariance_exact: bool,
    pub stabilizers_trivial: bool,
    /// Largest simplex met by F on the checked pairs.
    pub dimension_measured: usize,
    pub dimension_bound: usize,
    pub passed: bool,
}

fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-60..=60)), BigInt::from(rng.gen_range(1..=12)))
}

fn small_element(rng: &mut ChaCha8Rng, n: usize) -> GroupElement {
    let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
    GroupElement::from_i64(&v, rng.gen_range(-3..=3))
}

/// g·V_{w,m} = V_{g·(w,m)} tested by membership and weights at random
/// ambient points. Returns how many samples agreed exactly.
pub fn invariance_spot_check(map: &NerveMap, samples: usize, seed: u64) -> usize {
    let n = map.grp.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = 0;
    for _ in 0..samples {
        let p = Ambient { x: (0..n).map(|_| small_rational(&mut rng)).collect(), xi: small_rational(&mut rng) };
        let g = small_element(&mut rng, n);
        // a member through p half of the time, a nearby index otherwise
        let ms = map.members(&p);
        let v: NerveVertex = if rng.gen_bool(0.5) && !ms.is_empty() {
            ms[rng.gen_range(0..ms.len())].0.clone()
        } else {
            let m = p.xi.floor().to_integer();
            ((0..n).map(|_| BigInt::from(rng.gen_range(-6..=6))).collect(), i64::try_from(m).unwrap() + rng.gen_range(-2..=2))
        };
        let gp = map.act_point(&g, &p);
        let gv = map.act_vertex(&g, &v);
        if map.contains(&v, &p) == map.contains(&gv, &gp) && map.weight(&v, &p) == map.weight(&gv, &gp) {
            ok += 1;
        }
    }
    ok
}

/// F(hg) = φ(h)·F(g) for random h ∈ (qZ)^n ⋊ Z.
fn equivariance_sample(map: &NerveMap, samples: usize, seed: u64) -> Result<bool, CertError> {
    let n = map.grp.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = map.q as i64;
    for _ in 0..samples {
        let mut h = small_element(&mut rng, n);
        h.v.iter_mut().for_each(|c| *c *= q);
        let g = small_element(&mut rng, n);
        let lhs = map.eval(&map.grp.mul(&h, &g)?);
        let rhs: SPoint<NerveVertex> =
            map.eval(&g).into_iter().map(|(v, a)| Ok((map.act(&h, &v)?, a))).collect::<Result<_, GroupError>>()?;
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Full report for fixed cover parameters.
pub fn build_nerve_map<'a>(
    grp: &'a Semidirect,
    q: u64,
    gens: &GeneratingSet,
    eps: &BigRational,
    params: CoverParams,
    seed: u64,
) -> Result<(NerveMap<'a>, NerveReport), CertError> {
    let map = NerveMap::new(grp, q, params.clone())?;
    let sym = symmetric(grp, gens)?;
    let check = pair_check(&map, &sym, eps)?;
    let spot = 100;
    let invariance_exact = invariance_spot_check(&map, spot, seed);
    let equivariance_samples = 50;
    let equivariance_exact = equivariance_sample(&map, equivariance_samples, seed ^ 0x5eed)?;
    let stabilizers = stabilizers_trivial(grp);
    let passed = check.passed && invariance_exact == spot && equivariance_exact && stabilizers;
    let report = NerveReport {
        q,
        params,
        eps: eps.clone(),
        dimension_measured: check.max_support.saturating_sub(1),
        dimension_bound: map.dimension_bound(),
        check,
        generators: sym.len(),
        invariance_spot_checks: spot,
        invariance_exact,
        equivariance_samples,
        equivariance_exact,
        stabilizers_trivial: stabilizers,
        passed,
    };
    Ok((map, report))
}

/// R runs through 1, 3/2, 2, 3, 4, 6, 8, … up to `r_max`; W through
/// 1/2, 1, 2, 4 at each R.
pub fn search_schedule(r_max: &BigRational) -> Vec<(BigRational, BigRational)> {
    let mut rs = Vec::new();
    let mut base = BigRational::one();
    while base <= *r_max {
        rs.push(base.clone());
        let mid = &base * BigRational::new(3.into(), 2.into());
        if mid <= *r_max {
            rs.push(mid);
        }
        base *= BigRational::from_integer(2.into());
    }
    let ws = [(1, 2), (1, 1), (2, 1), (4, 1)].map(|(a, b)| BigRational::new(a.into(), b.into()));
    rs.into_iter().flat_map(|r| ws.iter().map(move |w| (r.clone(), w.clone()))).collect()
}

/// Runs the schedule until the finite check passes.
pub fn search_nerve_map<'a>(
    grp: &'a Semidirect,
    q: u64,
    gens: &GeneratingSet,
    eps: &BigRational,
    rho: &BigRational,
    r_max: &BigRational,
    seed: u64,
) -> Result<(NerveMap<'a>, NerveReport, Vec<Attempt>), CertError> {
    let sym = symmetric(grp, gens)?;
    let mut attempts = Vec::new();
    for (r, w) in search_schedule(r_max) {
        let params = CoverParams { r: r.clone(), w: w.clone(), rho: rho.clone() };
        let map = NerveMap::new(grp, q, params.clone())?;
        let check = pair_check(&map, &sym, eps)?;
        attempts.push(Attempt { r, w, worst: check.worst.clone() });
        if check.passed {
            let (map, report) = build_nerve_map(grp, q, gens, eps, params, seed)?;
            return Ok((map, report, attempts));
        }
    }
    let worst = attempts.iter().map(|a| a.worst.clone()).min().unwrap_or_else(BigRational::zero);
    Err(CertError::ContractionFailed { q, worst: worst.to_string() })
}
