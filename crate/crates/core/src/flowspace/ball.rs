use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{axpy, dfol_check, dist, norm, FlowError, FlowSpaceParams, GeneralizedGeodesic, Point};

/// Closest-point projection onto the closed ball B_R(x0).
pub fn rho_r(x: &[f64], x0: &[f64], r: f64) -> Point {
    let d = dist(x, x0);
    if d <= r {
        return x.to_vec();
    }
    x0.iter().zip(x).map(|(a, b)| a + r * (b - a) / d).collect()
}

/// Generalized geodesic from x0 (at times ≤ 0) to x (at times ≥ d(x, x0)).
pub fn iota_r(x: &[f64], x0: &[f64]) -> GeneralizedGeodesic {
    let d = dist(x, x0);
    let dir: Point = x.iter().zip(x0).map(|(a, b)| a - b).collect();
    GeneralizedGeodesic::new(x0.to_vec(), dir, 0.0, d).expect("well formed")
}

/// Z^n acting on R^n through the given translation vectors.
#[derive(Clone, Debug, Serialize)]
pub struct Translations {
    pub gens: Vec<Point>,
}

impl Translations {
    pub fn standard(n: usize) -> Self {
        Translations { gens: (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.gens.first().map_or(0, Vec::len)
    }

    /// S ∪ S⁻¹.
    pub fn symmetric(&self) -> Vec<Point> {
        self.gens.iter().flat_map(|g| [g.clone(), g.iter().map(|x| -x).collect()]).collect()
    }

    /// Translation vector of a word of (generator, inverted) letters.
    pub fn word(&self, w: &[(usize, bool)]) -> Point {
        w.iter().fold(vec![0.0; self.dim()], |acc, &(i, inv)| axpy(if inv { -1.0 } else { 1.0 }, &self.gens[i], &acc))
    }

    /// Commutator s_i s_j s_i⁻¹ s_j⁻¹.
    pub fn commutator(i: usize, j: usize) -> Vec<(usize, bool)> {
        vec![(i, false), (j, false), (i, true), (j, true)]
    }
}

/// Uniform samples in B_R(0), half of them in the outer shell of width
/// min(2, R/2) where projections act.
fn ball_samples(n: usize, r: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shell = (r / 2.0).min(2.0);
    (0..count)
        .map(|i| {
            let dir: Point = loop {
                let v: Point = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let l = norm(&v);
                if l > 1e-3 && l <= 1.0 {
                    break v.iter().map(|x| x / l).collect();
                }
            };
            let u: f64 = rng.gen();
            let rad = if i % 2 == 0 { r * u.powf(1.0 / n as f64) } else { r - shell * u };
            dir.iter().map(|x| x * rad).collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallReport {
    pub r: f64,
    pub samples: usize,
    /// Largest diameter of a relator's homotopy track.
    pub max_track_diameter: f64,
    /// Largest d(φ_{s_1} ⋯ φ_{s_k}(x), φ_{s_1⋯s_k}(x)).
    pub max_defect: f64,
}

/// Track of the homotopy φ_{s_1}⋯φ_{s_k} → φ_{s_1⋯s_k} obtained by
/// merging the two innermost letters with H_{a,b} at each stage.
fn relator_track(g: &Translations, w: &[(usize, bool)], x: &[f64], r: f64) -> (Vec<Point>, f64) {
    let x0 = vec![0.0; x.len()];
    let phi = |h: &[f64], y: &[f64]| rho_r(&axpy(1.0, h, y), &x0, r);
    let mut maps: Vec<Point> = w.iter().map(|&l| g.word(&[l])).collect();
    let start = maps.iter().rev().fold(x.to_vec(), |y, h| phi(h, &y));
    let whole = phi(&g.word(w), x);
    let mut track = vec![start.clone()];
    while maps.len() > 1 {
        let b = maps.pop().unwrap();
        let a = maps.pop().unwrap();
        let ab = axpy(1.0, &a, &b);
        let from = axpy(1.0, &a, &phi(&b, x));
        let to = axpy(1.0, &ab, x);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let mut p = rho_r(&from.iter().zip(&to).map(|(u, v)| (1.0 - t) * u + t * v).collect::<Point>(), &x0, r);
            for h in maps.iter().rev() {
                p = phi(h, &p);
            }
            track.push(p);
        }
        maps.push(ab);
    }
    (track, dist(&start, &whole))
}

fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max(dist(p, q));
        }
    }
    d
}

/// φ^R_s(x) = ρ_R(s·x) and H^R_{g,h}(t, x) = ρ_R((1−t)·gφ^R_h(x) + t·ghx) on
/// B_R(0), measured over sampled x for each relator.
pub fn ball_homotopy_action(
    g: &Translations,
    r: f64,
    relators: &[Vec<(usize, bool)>],
    samples: usize,
    seed: u64,
) -> BallReport {
    let points = ball_samples(g.dim(), r, samples, seed);
    let (track, defect) = points
        .par_iter()
        .flat_map_iter(|x| relators.iter().map(move |w| relator_track(g, w, x, r)))
        .map(|(t, d)| (diameter(&t), d))
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    BallReport { r, samples, max_track_diameter: track, max_defect: defect }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma510Spec {
    pub group: Translations,
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    pub r_start: f64,
    pub r_max: f64,
    /// T runs through R(1 − 2^{-i}) for i = 1..=t_levels.
    pub t_levels: u32,
    pub params: FlowSpaceParams,
}

impl Lemma510Spec {
    pub fn new(group: Translations, eps: f64) -> Self {
        Lemma510Spec {
            group,
            eps,
            samples: 1000,
            seed: 0,
            r_start: 1.0,
            r_max: 1024.0,
            t_levels: 8,
            params: FlowSpaceParams::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma510Report {
    pub t: f64,
    pub r: f64,
    pub alpha: f64,
    pub samples: usize,
    pub checks: usize,
    /// Checks with d(sx, x0) ≤ R, where ρ_R(sx) = sx.
    pub case_one: usize,
    /// Checks with d(sx, x0) > R.
    pub case_two: usize,
    /// Largest certified d_FS(φ_t c, c′) over all checks.
    pub worst: f64,
    pub candidates_tried: usize,
}

struct Outcome {
    worst: f64,
    case_one: usize,
    case_two: usize,
}

fn check_pair(spec: &Lemma510Spec, points: &[Point], t: f64, r: f64, alpha: f64) -> Option<Outcome> {
    let n = spec.group.dim();
    let x0 = vec![0.0; n];
    let gens = spec.group.symmetric();
    let failed = AtomicBool::new(false);
    let f = |y: &[f64]| iota_r(y, &x0).flow(t);
    let results: Vec<Option<(f64, bool)>> = points
        .par_iter()
        .flat_map_iter(|x| gens.iter().map(move |s| (x, s)))
        .map(|(x, s)| {
            if failed.load(Ordering::Relaxed) {
                return None;
            }
            let sx = axpy(1.0, s, x);
            let c = f(&rho_r(&sx, &x0, r));
            let c2 = f(x).translate(s);
            match dfol_check(&c, &c2, alpha, spec.eps, &spec.params) {
                Ok(res) if res.holds => Some((res.min_value, norm(&sx) <= r)),
                _ => {
                    failed.store(true, Ordering::Relaxed);
                    None
                }
            }
        })
        .collect();
    if failed.load(Ordering::Relaxed) {
        return None;
    }
    let mut out = Outcome { worst: 0.0, case_one: 0, case_two: 0 };
    for (m, one) in results.into_iter().flatten() {
        out.worst = out.worst.max(m);
        if one {
            out.case_one += 1;
        } else {
            out.case_two += 1;
        }
    }
    Some(out)
}

/// Searches R = r_start·2^j and T = R(1 − 2^{-i}) for the first pair with
/// d_fol(f(φ_s x), s·f(x)) ≤ (α, ε) at every sample x ∈ B_R(0) and
/// s ∈ S ∪ S⁻¹, where f = φ_T ∘ ι_R and α = max_s |s|.
pub fn lemma510_search(spec: &Lemma510Spec) -> Result<Lemma510Report, FlowError> {
    if !(spec.eps > 0.0) || spec.group.gens.is_empty() {
        return Err(FlowError::PreconditionFailed("need ε > 0 and a generator".into()));
    }
    let alpha = spec.group.gens.iter().map(|g| norm(g)).fold(0.0, f64::max);
    let mut tried = 0;
    let mut r = spec.r_start;
    while r <= spec.r_max {
        let points = ball_samples(spec.group.dim(), r, spec.samples, spec.seed);
        for i in 1..=spec.t_levels {
            let t = r * (1.0 - 0.5f64.powi(i as i32));
            tried += 1;
            if let Some(o) = check_pair(spec, &points, t, r, alpha) {
                return Ok(Lemma510Report {
                    t,
                    r,
                    alpha,
                    samples: points.len(),
                    checks: o.case_one + o.case_two,
                    case_one: o.case_one,
                    case_two: o.case_two,
                    worst: o.worst,
                    candidates_tried: tried,
                });
            }
        }
        r *= 2.0;
    }
    Err(FlowError::SearchBudgetExceeded)
}
