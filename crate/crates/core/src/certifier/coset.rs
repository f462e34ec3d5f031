use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{symmetric, CertError};
use crate::group::{GeneratingSet, GroupElement, GroupError, Semidirect, Subgroup};
use crate::simplicial::{FiberAction, InducedComplex, InducedPoint, SPoint};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetCheck {
    pub descent_samples: usize,
    pub descent_ok: bool,
    pub equivariance_samples: usize,
    #[serde(with = "crate::json::rational_str")]
    pub max_defect: BigRational,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetSampling {
    pub ball_radius: usize,
    pub points: usize,
    pub descent: usize,
}

impl Default for CosetSampling {
    fn default() -> Self {
        CosetSampling { ball_radius: 4, points: 24, descent: 12 }
    }
}

/// f(gπ⁻¹(H)) := [g c⁻¹, F(c g⁻¹)] in G ×_H̄ E, where c·π⁻¹(H)·c⁻¹ ⊆ H̄.
pub struct CosetMap<'a, A: FiberAction, F> {
    pub induced: InducedComplex<'a, A>,
    pub fmap: F,
    pub conjugator: GroupElement,
}

impl<'a, A, F> CosetMap<'a, A, F>
where
    A: FiberAction,
    F: Fn(&GroupElement) -> SPoint<A::Vertex>,
{
    pub fn eval(&self, g: &GroupElement) -> Result<InducedPoint<A::Vertex>, GroupError> {
        let grp = self.induced.grp;
        let y = grp.mul(g, &grp.inv(&self.conjugator)?)?;
        self.induced.point(&y, &(self.fmap)(&grp.inv(&y)?))
    }
}

/// Random element of the preimage: a small lattice combination times a
/// power ±1 or 0 of the slope element.
fn preimage_element(grp: &Semidirect, h: &Subgroup, rng: &mut ChaCha8Rng) -> Result<GroupElement, GroupError> {
    let n = grp.dim();
    let mut v = vec![BigInt::zero(); n];
    for b in &h.lattice.basis {
        let c = BigInt::from(rng.gen_range(-2..=2));
        for (x, y) in v.iter_mut().zip(b) {
            *x += &c * y;
        }
    }
    let base = GroupElement::lattice(v);
    match h.slope_element() {
        Some(s) => grp.mul(&base, &grp.pow(&s, rng.gen_range(-1..=1))?),
        None => Ok(base),
    }
}

/// Sampled descent f(gh) = f(g) for h ∈ π⁻¹(H) and sampled ε-equivariance
/// d¹(f(sx), s·f(x)) ≤ ε over points of a word ball.
pub fn check_coset_map<A, F>(
    map: &CosetMap<A, F>,
    preimage: &Subgroup,
    gens: &GeneratingSet,
    eps: &BigRational,
    sampling: &CosetSampling,
    seed: u64,
) -> Result<CosetCheck, CertError>
where
    A: FiberAction,
    F: Fn(&GroupElement) -> SPoint<A::Vertex>,
{
    let grp = map.induced.grp;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ball = grp.word_ball(gens, sampling.ball_radius, 1_000_000)?;
    ball.sort();
    let points: Vec<GroupElement> = ball.choose_multiple(&mut rng, sampling.points).cloned().collect();
    let mut descent_ok = true;
    for g in points.iter().take(sampling.descent) {
        let h = preimage_element(grp, preimage, &mut rng)?;
        descent_ok &= map.eval(&grp.mul(g, &h)?)? == map.eval(g)?;
    }
    let sym = symmetric(grp, gens)?;
    let mut max_defect = BigRational::zero();
    let mut count = 0;
    for x in &points {
        let fx = map.eval(x)?;
        for s in &sym {
            let moved = map.induced.act(s, &fx)?;
            let direct = map.eval(&grp.mul(s, x)?)?;
            let d = map.induced.distance(&moved, &direct);
            if d > max_defect {
                max_defect = d;
            }
            count += 1;
        }
    }
    Ok(CosetCheck {
        descent_samples: sampling.descent.min(points.len()),
        descent_ok,
        equivariance_samples: count,
        passed: descent_ok && max_defect <= *eps,
        max_defect,
    })
}
