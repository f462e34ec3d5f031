use rayon::prelude::*;

use super::{d_fs, FlowSpaceParams, GeneralizedGeodesic};

/// min_t |t| + Λ·d_FS(φ_t u, v), by branch and bound with the Lipschitz
/// constant 1 + Λ. Returned values are attained, so they bound the minimum
/// from above.
fn edge_cost(u: &GeneralizedGeodesic, v: &GeneralizedGeodesic, lambda: f64, params: &FlowSpaceParams) -> f64 {
    let cost = |t: f64| {
        let e = d_fs(&u.flow(t), v, params);
        t.abs() + lambda * (e.value + e.error)
    };
    let mut best = cost(0.0);
    let lip = 1.0 + lambda;
    let resolution = 1e-4;
    let mut stack = vec![(-best, best)];
    while let Some((a, b)) = stack.pop() {
        let m = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let f = cost(m);
        best = best.min(f);
        if f - lip * half >= best - resolution || lip * half < resolution {
            continue;
        }
        stack.push((a, m));
        stack.push((m, b));
    }
    best
}

/// Upper bound for d_Λ(x, y): shortest path through the waypoints, each
/// step costing α + Λ·ε for a foliated step within (α, ε).
pub fn d_lambda_upper(
    x: &GeneralizedGeodesic,
    y: &GeneralizedGeodesic,
    lambda: f64,
    waypoints: &[GeneralizedGeodesic],
    params: &FlowSpaceParams,
) -> f64 {
    let nodes: Vec<&GeneralizedGeodesic> = [x, y].into_iter().chain(waypoints).collect();
    let k = nodes.len();
    let mut d: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| (0..k).map(|j| if i == j { 0.0 } else { edge_cost(nodes[i], nodes[j], lambda, params) }).collect())
        .collect();
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d[0][1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flow_translate_costs_at_most_the_time() {
        let p = FlowSpaceParams::default();
        let x = GeneralizedGeodesic::new(vec![0.0, 0.0], vec![1.0, 2.0], -3.0, 4.0).unwrap();
        for a in [0.5, -1.25, 2.0] {
            let y = x.flow(a);
            assert!(d_lambda_upper(&x, &y, 10.0, &[], &p) <= a.abs() + 1e-3);
        }
        // only the quadrature error bound remains
        assert!(d_lambda_upper(&x, &x, 10.0, &[], &p) <= 10.0 * p.tolerance);
    }

    #[test]
    fn more_waypoints_never_hurt() {
        let p = FlowSpaceParams { tolerance: 1e-5 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut g = || {
            GeneralizedGeodesic::line(
                vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            )
            .unwrap()
        };
        let (x, y) = (g(), g());
        let ten: Vec<_> = (0..10).map(|_| g()).collect();
        let mut fifteen = ten.clone();
        fifteen.extend((0..5).map(|_| g()));
        let a = d_lambda_upper(&x, &y, 3.0, &ten, &p);
        let b = d_lambda_upper(&x, &y, 3.0, &fifteen, &p);
        assert!(b <= a);
        assert!(a <= d_lambda_upper(&x, &y, 3.0, &[], &p));
    }
}
