use num_traits::{One, Zero};

use crate::error::Result;
use crate::mechanisms::{check_profile, Capabilities, Mechanism};
use crate::model::{Allocation, Profile, Rational, Setting};

/// Probabilistic Serial with uniform eating speeds, simulated event by event
/// in exact arithmetic.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProbabilisticSerial;

impl Mechanism for ProbabilisticSerial {
    fn name(&self) -> String {
        "ps".into()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::SYMMETRIC
    }

    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        ps(setting, profile)
    }
}

pub fn ps(setting: &Setting, profile: &Profile) -> Result<Allocation> {
    check_profile(setting, profile)?;
    let (n, m) = (setting.n(), setting.m());
    let mut supply: Vec<Rational> = setting
        .capacities()
        .iter()
        .map(|&c| Rational::from_integer(c.into()))
        .collect();
    let mut rows = vec![vec![Rational::zero(); m]; n];
    let mut clock = Rational::zero();
    let one = Rational::one();
    let mut eating = vec![0usize; n];
    let mut eaters = vec![0u32; m];
    while clock < one {
        eaters.iter_mut().for_each(|e| *e = 0);
        for i in 0..n {
            let j = *profile
                .agent(i)
                .ranking()
                .iter()
                .find(|&&j| !supply[j].is_zero())
                .expect("supply outlasts the eating phase");
            eating[i] = j;
            eaters[j] += 1;
        }
        // Time until the next exhaustion, or the end of the phase.
        let mut step = &one - &clock;
        for j in 0..m {
            if eaters[j] > 0 {
                let t = &supply[j] / Rational::from_integer(eaters[j].into());
                if t < step {
                    step = t;
                }
            }
        }
        for i in 0..n {
            rows[i][eating[i]] += &step;
        }
        for j in 0..m {
            if eaters[j] > 0 {
                supply[j] -= &step * Rational::from_integer(eaters[j].into());
            }
        }
        clock += step;
    }
    Ok(Allocation::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio::ratio;
    use crate::model::PrefOrder;

    #[test]
    fn manipulable_example_rows() {
        let s = Setting::unit(3, 3).unwrap();
        let p = Profile::parse(&s, &["a>b>c", "b>a>c", "b>c>a"]).unwrap();
        let a = ps(&s, &p).unwrap();
        assert_eq!(a.row(0), &[ratio(3, 4), ratio(0, 1), ratio(1, 4)]);
        let lie = p.with_report(0, PrefOrder::parse(&s, "b>a>c").unwrap());
        let b = ps(&s, &lie).unwrap();
        assert_eq!(b.row(0), &[ratio(1, 2), ratio(1, 3), ratio(1, 6)]);
    }

    #[test]
    fn identical_preferences_uniform() {
        let s = Setting::unit(4, 4).unwrap();
        let p = Profile::parse(&s, &["c>a>d>b"; 4]).unwrap();
        let a = ps(&s, &p).unwrap();
        assert!(a.rows().iter().flatten().all(|x| *x == ratio(1, 4)));
    }

    #[test]
    fn capacities_respected() {
        let s = Setting::new(3, vec!["a".into(), "b".into()], vec![2, 1]).unwrap();
        let p = Profile::parse(&s, &["a>b", "a>b", "a>b"]).unwrap();
        let a = ps(&s, &p).unwrap();
        a.validate(&s).unwrap();
        assert_eq!(a.row(0), &[ratio(2, 3), ratio(1, 3)]);
    }
}
