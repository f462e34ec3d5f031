//! Flow space of generalized geodesics in R^n: the flow, the exponentially
//! weighted metric, foliated distance, ball projections and long covers.

mod ball;
mod cover;
mod lambda;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ball::{
    ball_homotopy_action, iota_r, lemma510_search, rho_r, BallReport, Lemma510Report, Lemma510Spec, Translations,
};
pub use cover::{line_cover, LineCover, LineCoverReport};
pub use lambda::d_lambda_upper;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("undecided: minimum {min} is within tolerance of {eps}")]
    Undecided { min: f64, eps: f64 },
    #[error("no passing (T, R) within the search budget")]
    SearchBudgetExceeded,
}

pub type Point = Vec<f64>;

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Point {
    x.iter().zip(y).map(|(x, y)| a * x + y).collect()
}

mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *x == f64::INFINITY {
            s.serialize_str("+inf")
        } else if *x == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}

/// c(t) = anchor + (clamp(t) − clamp(0))·dir with clamping to [c−, c+].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedGeodesic {
    pub anchor: Point,
    pub dir: Point,
    #[serde(rename = "cminus", with = "ext_f64")]
    pub c_minus: f64,
    #[serde(rename = "cplus", with = "ext_f64")]
    pub c_plus: f64,
}

impl GeneralizedGeodesic {
    /// Normalizes `dir` to unit length; zero direction or an empty interval
    /// gives the constant geodesic at `anchor`.
    pub fn new(anchor: Point, dir: Point, c_minus: f64, c_plus: f64) -> Result<Self, FlowError> {
        if dir.len() != anchor.len() || c_minus.is_nan() || c_plus.is_nan() || c_minus > c_plus {
            return Err(FlowError::PreconditionFailed("malformed generalized geodesic".into()));
        }
        let len = norm(&dir);
        if len == 0.0 || c_minus == c_plus {
            return Ok(Self::constant(anchor));
        }
        Ok(GeneralizedGeodesic { dir: dir.iter().map(|x| x / len).collect(), anchor, c_minus, c_plus })
    }

    pub fn constant(x: Point) -> Self {
        let n = x.len();
        GeneralizedGeodesic { anchor: x, dir: vec![0.0; n], c_minus: 0.0, c_plus: 0.0 }
    }

    /// Complete line through `x` with c(0) = x.
    pub fn line(x: Point, dir: Point) -> Result<Self, FlowError> {
        Self::new(x, dir, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn is_constant(&self) -> bool {
        self.c_minus == self.c_plus
    }

    fn clamp(&self, t: f64) -> f64 {
        t.max(self.c_minus).min(self.c_plus)
    }

    pub fn eval(&self, t: f64) -> Point {
        if self.is_constant() {
            return self.anchor.clone();
        }
        axpy(self.clamp(t) - self.clamp(0.0), &self.dir, &self.anchor)
    }

    /// φ_τ(c)(t) = c(t + τ).
    pub fn flow(&self, tau: f64) -> Self {
        if self.is_constant() {
            return self.clone();
        }
        GeneralizedGeodesic {
            anchor: self.eval(tau),
            dir: self.dir.clone(),
            c_minus: self.c_minus - tau,
            c_plus: self.c_plus - tau,
        }
    }

    /// Image under the translation x ↦ x + g.
    pub fn translate(&self, g: &[f64]) -> Self {
        GeneralizedGeodesic { anchor: axpy(1.0, g, &self.anchor), ..self.clone() }
    }

    /// Finite bending times.
    fn kinks(&self) -> impl Iterator<Item = f64> {
        [self.c_minus, self.c_plus].into_iter().filter(|t| t.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpaceParams {
    /// Absolute error allowed in each d_FS evaluation.
    pub tolerance: f64,
}

impl Default for FlowSpaceParams {
    fn default() -> Self {
        FlowSpaceParams { tolerance: 1e-6 }
    }
}

/// Value with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson; `f` should be smooth on [a, b].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// ∫_R d(c(t), c′(t)) e^{−|t|}/2 dt.
///
/// The integrand is split where either geodesic bends, at 0, and where the
/// distance between the two affine pieces is smallest, so every piece is
/// smooth. Beyond ±T₀ the distance grows at most like 2|t|, which bounds
/// the tails.
pub fn d_fs(c: &GeneralizedGeodesic, c2: &GeneralizedGeodesic, params: &FlowSpaceParams) -> Estimate {
    assert_eq!(c.dim(), c2.dim(), "ambient dimensions differ");
    let tol = params.tolerance;
    let d_at = |t: f64| dist(&c.eval(t), &c2.eval(t));
    // tail past T: e^{-T}(D_T + 2)/2 on each side, with D_T ≤ D_0 + 2T
    let d0 = d_at(0.0);
    let mut t0 = 1.0f64;
    while (-t0).exp() * (d0 + 2.0 * t0 + 2.0) / 2.0 > tol / 8.0 {
        t0 += 1.0;
    }
    let tail = (-t0).exp() * (d_at(t0) + 2.0) / 2.0 + (-t0).exp() * (d_at(-t0) + 2.0) / 2.0;

    let mut cuts: Vec<f64> = c.kinks().chain(c2.kinks()).chain([0.0, -t0, t0]).filter(|t| t.abs() <= t0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    // within each piece both are affine; split at the closest approach
    let mut all = cuts.clone();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = 0.5 * (a + b);
        let u: Point = c.eval(m).iter().zip(c2.eval(m)).map(|(x, y)| x - y).collect();
        let h = (b - a).max(1e-9);
        let v: Point = c.eval(m + h / 4.0).iter().zip(c2.eval(m + h / 4.0)).map(|(x, y)| x - y).collect();
        let w: Point = v.iter().zip(&u).map(|(v, u)| (v - u) * 4.0 / h).collect();
        let ww: f64 = w.iter().map(|x| x * x).sum();
        if ww > 0.0 {
            let s = m - u.iter().zip(&w).map(|(u, w)| u * w).sum::<f64>() / ww;
            if s > a && s < b {
                all.push(s);
            }
        }
    }
    all.sort_by(f64::total_cmp);
    all.dedup();
    let pieces = all.len().saturating_sub(1).max(1) as f64;
    let f = |t: f64| d_at(t) * (-t.abs()).exp() / 2.0;
    let body: f64 = all.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], tol / (4.0 * pieces))).sum();
    // the true value lies in [body, body + tail] up to quadrature error
    Estimate { value: body + tail / 2.0, error: tail / 2.0 + tol / 4.0 }
}

/// Outcome of a foliated-distance check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DfolResult {
    pub holds: bool,
    /// t ∈ [−α, α] with d_FS(φ_t c, c′) ≤ ε, when one was certified.
    pub witness: Option<f64>,
    /// Smallest value of d_FS(φ_t c, c′) seen.
    pub min_value: f64,
}

/// Decides ∃ t ∈ [−α, α]: d_FS(φ_t c, c′) ≤ ε. The map t ↦ d_FS(φ_t c, c′)
/// is 1-Lipschitz, which bounds it on every subinterval from its midpoint.
pub fn dfol_check(
    c: &GeneralizedGeodesic,
    c2: &GeneralizedGeodesic,
    alpha: f64,
    eps: f64,
    params: &FlowSpaceParams,
) -> Result<DfolResult, FlowError> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(FlowError::PreconditionFailed("α must be nonnegative".into()));
    }
    let tol = params.tolerance;
    let g = |t: f64| d_fs(&c.flow(t), c2, params);
    let mut stack = vec![(-alpha, alpha)];
    let mut min_value = f64::INFINITY;
    let mut undecided = false;
    while let Some((a, b)) = stack.pop() {
        let m = 0.5 * (a + b);
        let e = g(m);
        min_value = min_value.min(e.value);
        if e.value + e.error <= eps {
            return Ok(DfolResult { holds: true, witness: Some(m), min_value });
        }
        let half = 0.5 * (b - a);
        if e.value - e.error - half > eps {
            continue;
        }
        if half <= tol {
            undecided = true;
            continue;
        }
        // search the half nearer to a smaller value first
        stack.push((m, b));
        stack.push((a, m));
    }
    if undecided {
        return Err(FlowError::Undecided { min: min_value, eps });
    }
    Ok(DfolResult { holds: false, witness: None, min_value })
}

/// Whether φ_τ(c) = g·c for some 0 < τ ≤ γ and translation g ∈ Z^n.
///
/// Constant geodesics count as periodic (τ arbitrary, g = 0). Otherwise c
/// must be a complete line whose direction is v/|v| for an integral v with
/// |v| ≤ γ; τ = |v| and g = v.
pub fn is_gamma_periodic(c: &GeneralizedGeodesic, gamma: f64) -> bool {
    if gamma <= 0.0 {
        return false;
    }
    if c.is_constant() {
        return true;
    }
    if c.c_minus.is_finite() || c.c_plus.is_finite() {
        return false;
    }
    integral_direction(&c.dir, gamma).is_some()
}

/// Primitive integral v with |v| ≤ bound and v/|v| = dir (to 1e-12).
pub fn integral_direction(dir: &[f64], bound: f64) -> Option<Vec<i64>> {
    let n = dir.len();
    let b = bound.floor() as i64;
    let mut v = vec![-b; n];
    loop {
        let len = (v.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
        if len > 0.0 && len <= bound && v.iter().zip(dir).all(|(x, d)| ((*x as f64) / len - d).abs() < 1e-12) {
            return Some(v);
        }
        // odometer over the box [-b, b]^n
        let mut i = 0;
        loop {
            if i == n {
                return None;
            }
            if v[i] < b {
                v[i] += 1;
                break;
            }
            v[i] = -b;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> FlowSpaceParams {
        FlowSpaceParams::default()
    }

    fn random_geodesic(rng: &mut ChaCha8Rng, n: usize) -> GeneralizedGeodesic {
        let anchor: Point = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let dir: Point = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cm = if rng.gen_bool(0.3) { f64::NEG_INFINITY } else { rng.gen_range(-4.0..0.5) };
        let cp = if rng.gen_bool(0.3) { f64::INFINITY } else { cm.max(-4.0) + rng.gen_range(0.0..5.0) };
        GeneralizedGeodesic::new(anchor, dir, cm, cp).unwrap()
    }

    #[test]
    fn flow_examples() {
        let line = GeneralizedGeodesic::line(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(line.flow(0.0), line);
        assert_eq!(line.flow(2.0).anchor, vec![2.0, 0.0]);
        let k = GeneralizedGeodesic::constant(vec![1.0, 2.0]);
        assert_eq!(k.flow(5.0), k);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let c = random_geodesic(&mut rng, 2);
            let (a, b) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let (x, y) = (c.flow(a).flow(b), c.flow(a + b));
            for t in [-7.0, -1.0, 0.0, 0.3, 4.0] {
                assert!(dist(&x.eval(t), &y.eval(t)) < 1e-9);
            }
            // flow commutes with translations
            let g = [3.0, -2.0];
            let (u, v) = (c.translate(&g).flow(a), c.flow(a).translate(&g));
            assert!(dist(&u.anchor, &v.anchor) < 1e-12 && u.dir == v.dir && (u.c_minus, u.c_plus) == (v.c_minus, v.c_plus));
            // 1-Lipschitz in t
            let (s, t) = (rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            assert!(dist(&c.eval(s), &c.eval(t)) <= (s - t).abs() + 1e-12);
        }
    }

    #[test]
    fn constants_embed_isometrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x: Point = (0..2).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let y: Point = (0..2).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let d = d_fs(&GeneralizedGeodesic::constant(x.clone()), &GeneralizedGeodesic::constant(y.clone()), &p());
            assert!((d.value - dist(&x, &y)).abs() <= 1e-6, "{d:?}");
        }
        let c = GeneralizedGeodesic::line(vec![0.0], vec![1.0]).unwrap();
        assert!(d_fs(&c, &c, &p()).value.abs() <= 1e-6);
    }

    #[test]
    fn flow_displacement_and_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = random_geodesic(&mut rng, 2);
            let tau = rng.gen_range(-10.0..10.0);
            assert!(d_fs(&c.flow(tau), &c, &p()).value <= tau.abs() + 1e-6);
            let (a, b, e) = (random_geodesic(&mut rng, 2), random_geodesic(&mut rng, 2), random_geodesic(&mut rng, 2));
            let (ab, be, ae) = (d_fs(&a, &b, &p()).value, d_fs(&b, &e, &p()).value, d_fs(&a, &e, &p()).value);
            assert!(ae <= ab + be + 3e-6);
            assert_eq!(d_fs(&a, &b, &p()).value, d_fs(&b, &a, &p()).value);
        }
    }

    #[test]
    fn common_origin_bound_is_two() {
        // opposite rays from a shared c(0) realize ∫ 2|t| e^{-|t|}/2 = 2
        let a = GeneralizedGeodesic::line(vec![0.0], vec![1.0]).unwrap();
        let b = GeneralizedGeodesic::line(vec![0.0], vec![-1.0]).unwrap();
        let d = d_fs(&a, &b, &p()).value;
        assert!((d - 2.0).abs() < 1e-6, "{d}");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let c = random_geodesic(&mut rng, 3);
            let c2 = GeneralizedGeodesic::new(c.eval(0.0), (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(), -2.0, 3.0)
                .unwrap();
            assert!(d_fs(&c, &c2, &p()).value <= 2.0 + 1e-6);
        }
    }

    #[test]
    fn dfol_examples() {
        let c = GeneralizedGeodesic::new(vec![0.0, 0.0], vec![1.0, 1.0], -1.0, 6.0).unwrap();
        let r = dfol_check(&c, &c.flow(1.5), 3.0, 1e-3, &p()).unwrap();
        assert!(r.holds);
        let w = r.witness.unwrap();
        assert!(d_fs(&c.flow(w), &c.flow(1.5), &p()).value <= 1e-3);
        let x = GeneralizedGeodesic::constant(vec![0.0, 0.0]);
        let y = GeneralizedGeodesic::constant(vec![0.5, 0.0]);
        assert!(!dfol_check(&x, &y, 10.0, 0.4, &p()).unwrap().holds);
        // parallel lines offset by 2ε never come within ε
        let eps = 0.1;
        let l1 = GeneralizedGeodesic::line(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let l2 = GeneralizedGeodesic::line(vec![0.0, 2.0 * eps], vec![1.0, 0.0]).unwrap();
        assert!(!dfol_check(&l1, &l2, 5.0, eps, &p()).unwrap().holds);
        assert!(dfol_check(&l1, &l2, 1.0, 0.0, &p()).is_ok());
        assert!(dfol_check(&l1, &l2, -1.0, eps, &p()).is_err());
    }

    #[test]
    fn periodicity_examples() {
        let e1 = GeneralizedGeodesic::line(vec![0.3, 0.1], vec![1.0, 0.0]).unwrap();
        assert!(is_gamma_periodic(&e1, 1.0));
        let diag = GeneralizedGeodesic::line(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(!is_gamma_periodic(&diag, 1.0));
        assert!(is_gamma_periodic(&diag, 1.5));
        let irr = GeneralizedGeodesic::line(vec![0.0, 0.0], vec![1.0, 2f64.sqrt()]).unwrap();
        assert!(!is_gamma_periodic(&irr, 10.0));
        let ray = GeneralizedGeodesic::new(vec![0.0, 0.0], vec![1.0, 0.0], 0.0, f64::INFINITY).unwrap();
        assert!(!is_gamma_periodic(&ray, 10.0));
        assert!(is_gamma_periodic(&GeneralizedGeodesic::constant(vec![0.0, 0.0]), 1.0));
        // φ_τ(c) = g c on the witness
        let v = integral_direction(&diag.dir, 1.5).unwrap();
        let tau = norm(&v.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let g: Point = v.iter().map(|&x| x as f64).collect();
        assert!(dist(&diag.flow(tau).eval(0.7), &diag.translate(&g).eval(0.7)) < 1e-12);
    }

    #[test]
    fn json_shape() {
        let ray = GeneralizedGeodesic::new(vec![1.0], vec![2.0], f64::NEG_INFINITY, 3.0).unwrap();
        let s = serde_json::to_value(&ray).unwrap();
        assert_eq!(s["cminus"], "-inf");
        assert_eq!(s["cplus"], 3.0);
        assert_eq!(s["dir"][0], 1.0);
        let back: GeneralizedGeodesic = serde_json::from_value(s).unwrap();
        assert_eq!(back, ray);
    }

    proptest! {
        #[test]
        fn d_fs_is_symmetric_and_nonnegative(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_geodesic(&mut rng, 2), random_geodesic(&mut rng, 2));
            let d = d_fs(&a, &b, &p());
            prop_assert!(d.value >= 0.0);
            prop_assert_eq!(d.value, d_fs(&b, &a, &p()).value);
        }
    }
}
