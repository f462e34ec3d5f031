use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::FlowError;

/// Z-invariant cover of R by U_m = (m − R − 1, m + R + 1), m ∈ Z.
#[derive(Clone, Debug, PartialEq)]
pub struct LineCover {
    pub r: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineCoverReport {
    #[serde(with = "crate::json::rational_str")]
    pub r: BigRational,
    pub invariant: bool,
    /// Every [x − R, x + R] lies in a member, decided exactly on one period.
    pub long: bool,
    pub sampled_long: usize,
    pub samples: usize,
    pub trivial_isotropy: bool,
    pub multiplicity: usize,
    pub dimension: usize,
}

fn ceil(x: &BigRational) -> BigInt {
    x.ceil().to_integer()
}

fn floor(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

impl LineCover {
    pub fn half_width(&self) -> BigRational {
        &self.r + BigRational::one()
    }

    pub fn member(&self, m: &BigInt) -> (BigRational, BigRational) {
        let c = BigRational::from_integer(m.clone());
        (&c - self.half_width(), c + self.half_width())
    }

    pub fn contains(&self, m: &BigInt, x: &BigRational) -> bool {
        let (lo, hi) = self.member(m);
        lo < *x && *x < hi
    }

    /// Members containing x: integers m with |x − m| < R + 1.
    pub fn multiplicity_at(&self, x: &BigRational) -> usize {
        let w = self.half_width();
        let count = ceil(&(x + &w)) - floor(&(x - &w)) - BigInt::one();
        usize::try_from(count).unwrap_or(0)
    }

    /// Exact maximum of the multiplicity: the count is piecewise constant
    /// with breaks where x ± (R + 1) is an integer.
    pub fn max_multiplicity(&self) -> usize {
        let w = self.half_width();
        let frac = |q: BigRational| &q - BigRational::from_integer(floor(&q));
        let mut breaks = vec![BigRational::zero(), frac(w.clone()), frac(-w), BigRational::one()];
        breaks.sort();
        breaks.dedup();
        let mids = breaks.windows(2).map(|p| (&p[0] + &p[1]) / BigInt::from(2));
        breaks.iter().cloned().chain(mids).map(|x| self.multiplicity_at(&x)).max().unwrap_or(0)
    }

    /// Members whose long set {x : [x − R, x + R] ⊂ U_m} contains x.
    pub fn is_long_at(&self, x: &BigRational) -> bool {
        let m = x.round().to_integer();
        [&m - 1, m.clone(), &m + 1].iter().any(|m| {
            let (lo, hi) = self.member(m);
            lo < x - &self.r && x + &self.r < hi
        })
    }

    /// Long sets (m − 1, m + 1) for m = −1..=2 cover [0, 1]; by invariance
    /// this decides longness everywhere.
    pub fn is_long(&self) -> bool {
        let mut long_sets: Vec<(BigRational, BigRational)> = (-1..=2)
            .map(|m| {
                let (lo, hi) = self.member(&BigInt::from(m));
                (lo + &self.r, hi - &self.r)
            })
            .filter(|(lo, hi)| lo < hi)
            .collect();
        long_sets.sort();
        let mut reach = BigRational::zero();
        loop {
            // an open set must contain the current point itself
            let best = long_sets.iter().filter(|(lo, hi)| *lo < reach && *hi > reach).map(|(_, hi)| hi).max();
            match best {
                Some(hi) if *hi > BigRational::one() => return true,
                Some(hi) => reach = hi.clone(),
                None => return false,
            }
        }
    }

    /// U_m + k = U_{m+k}.
    pub fn is_invariant(&self, m: &BigInt, k: &BigInt) -> bool {
        let (lo, hi) = self.member(m);
        let shift = BigRational::from_integer(k.clone());
        (lo + &shift, hi + &shift) == self.member(&(m + k))
    }
}

pub fn line_cover(r: BigRational, samples: usize, seed: u64) -> Result<LineCoverReport, FlowError> {
    if r <= BigRational::zero() {
        return Err(FlowError::PreconditionFailed("R must be positive".into()));
    }
    let cover = LineCover { r: r.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut invariant = true;
    let mut trivial_isotropy = true;
    let mut sampled_long = 0;
    for _ in 0..samples {
        let m = BigInt::from(rng.gen_range(-1000i64..1000));
        let k = BigInt::from(rng.gen_range(-1000i64..1000));
        invariant &= cover.is_invariant(&m, &k);
        trivial_isotropy &= k.is_zero() || cover.member(&(&m + &k)) != cover.member(&m);
        let x = BigRational::new(rng.gen_range(-100_000i64..100_000).into(), rng.gen_range(1i64..1000).into());
        sampled_long += usize::from(cover.is_long_at(&x));
    }
    let multiplicity = cover.max_multiplicity();
    Ok(LineCoverReport {
        r,
        invariant,
        long: cover.is_long(),
        sampled_long,
        samples,
        trivial_isotropy,
        multiplicity,
        dimension: multiplicity.saturating_sub(1),
    })
}
