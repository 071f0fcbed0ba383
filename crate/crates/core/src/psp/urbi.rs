//! Utilities with uniformly relatively bounded indifference.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{expected_utility, PrefOrder, Rational, UtilityFn};

/// Whether `r·(u(a) - min u) >= u(b) - min u` whenever `u(a) > u(b)`.
/// Adjacent pairs suffice since `r <= 1` compounds along the chain.
pub fn urbi_contains(u: &UtilityFn, r: &Rational) -> bool {
    let min = u.min().clone();
    let mut v: Vec<Rational> = u.values().iter().map(|x| x - &min).collect();
    v.sort_by(|a, b| b.cmp(a));
    v.windows(2).all(|w| r * &w[0] >= w[1])
}

/// Resolution of the sampled adjacent ratios.
const RATIO_STEPS: i64 = 1_000_000;

/// A random utility consistent with `t`, with maximum 1, minimum 0 and every
/// adjacent ratio drawn uniformly from `(0, r)` on a fine rational grid.
pub fn sample_urbi<R: Rng + ?Sized>(t: &PrefOrder, r: &Rational, rng: &mut R) -> UtilityFn {
    let m = t.len();
    let mut values = vec![Rational::zero(); m];
    let mut v = Rational::one();
    for k in 1..m {
        values[t.choice(k)] = v.clone();
        let step = rng.gen_range(1..RATIO_STEPS);
        v = v * r * Rational::new(BigInt::from(step), BigInt::from(RATIO_STEPS));
    }
    UtilityFn::new(values)
}

/// Seeded convenience wrapper around [`sample_urbi`].
pub fn sample_urbi_seeded(t: &PrefOrder, r: &Rational, seed: u64) -> UtilityFn {
    sample_urbi(t, r, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Utility with `u(ch(k)) = r^(k-1)` for `k < m` and zero at the bottom:
/// every adjacent constraint binds.
pub fn geometric_utility(t: &PrefOrder, r: &Rational) -> UtilityFn {
    let m = t.len();
    let mut values = vec![Rational::zero(); m];
    let mut v = Rational::one();
    for k in 1..m {
        values[t.choice(k)] = v.clone();
        v *= r;
    }
    UtilityFn::new(values)
}

/// A utility in `URBI(r)` consistent with `t` that strictly prefers the row
/// `f(t) - delta` over `f(t)`, given that the Horner polynomial of `delta`
/// along `t` is negative at rank `rank` and `s = 1/r`.
///
/// Values decay geometrically with ratio `r` (slightly less when `r = 1`)
/// and drop by an extra factor `1/S` after `rank`; `S` starts at `10^6` and
/// grows until the gain is strictly positive.
pub fn witness_utility(t: &PrefOrder, r: &Rational, rank: usize, delta: &[Rational]) -> Option<UtilityFn> {
    let m = t.len();
    let s = r.recip();
    let mut big = Rational::from_integer(BigInt::from(1_000_000));
    for _ in 0..40 {
        let g = if r.is_one() { &s * (Rational::one() + big.recip()) } else { s.clone() };
        let mut values = vec![Rational::zero(); m];
        let mut w = Rational::one();
        for k in (1..m).rev() {
            values[t.choice(k)] = if k <= rank { &w * &big } else { w.clone() };
            w *= &g;
        }
        let u = UtilityFn::new(values);
        if expected_utility(&u, delta) < Rational::zero() {
            return Some(u);
        }
        big *= Rational::from_integer(BigInt::from(10));
    }
    None
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Share of three-object utilities (bottom value 0, the two others uniform
/// on the unit square and ordered) that satisfy `r·u(first) >= u(second)`.
pub fn urbi_share(r: f64, samples: u64, seed: u64) -> Result<ShareEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (first, second) = if a >= b { (a, b) } else { (b, a) };
        if r * first >= second {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(ShareEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio::{int, ratio};
    use crate::model::utility_consistent;

    #[test]
    fn membership_examples() {
        assert!(!urbi_contains(&UtilityFn::from_ints(&[6, 2, 1, 0]), &ratio(1, 3)));
        assert!(urbi_contains(&UtilityFn::from_ints(&[6, 2, 1, 0]), &ratio(1, 2)));
        assert!(urbi_contains(&UtilityFn::from_ints(&[4, 3, 0]), &ratio(3, 4)));
        let t = PrefOrder::identity(4);
        assert!(urbi_contains(&geometric_utility(&t, &ratio(2, 5)), &ratio(2, 5)));
        assert!(!urbi_contains(&geometric_utility(&t, &ratio(2, 5)), &ratio(1, 3)));
    }

    #[test]
    fn samples_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 2..6 {
            let t = PrefOrder::from_vec_unchecked((0..m).rev().collect());
            for r in [ratio(1, 3), ratio(3, 4), int(1)] {
                let u = sample_urbi(&t, &r, &mut rng);
                assert!(utility_consistent(&u, &t));
                assert!(urbi_contains(&u, &r));
                assert_eq!(u.min(), &int(0));
            }
        }
    }

    #[test]
    fn witness_gains_strictly() {
        // Rows (3/4,0,1/4) vs (1/2,1/3,1/6): x_2(s) = s/4 - 1/3 < 0 for s < 4/3.
        let t = PrefOrder::identity(3);
        let delta = vec![ratio(1, 4), ratio(-1, 3), ratio(1, 12)];
        for r in [ratio(4, 5), int(1)] {
            let u = witness_utility(&t, &r, 2, &delta).unwrap();
            assert!(utility_consistent(&u, &t));
            assert!(urbi_contains(&u, &r));
            assert!(expected_utility(&u, &delta) < int(0));
        }
    }

    #[test]
    fn share_endpoints() {
        assert_eq!(urbi_share(1.0, 1000, 3).unwrap().estimate, 1.0);
        assert!(urbi_share(1e-9, 1000, 3).unwrap().estimate < 0.01);
        assert!(urbi_share(0.5, 0, 3).is_err());
    }
}
