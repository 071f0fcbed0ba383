//! Boston mechanism with single tie-breaking and no priorities, in its naive
//! and adaptive variants. Probabilities are exact averages over all lottery
//! orders of the agents.

use crate::enumerate::Caps;
use crate::error::Result;
use crate::mechanisms::{check_profile, for_each_order, Capabilities, Mechanism};
use crate::model::{Allocation, Profile, Setting};

/// Naive Boston: in round `k` every unassigned agent applies to its `k`-th
/// choice, even when that object is already exhausted.
#[derive(Debug, Clone, Copy, Default)]
pub struct NaiveBoston {
    caps: Caps,
}

/// Adaptive Boston: every unassigned agent applies to its best object that
/// was not exhausted at the start of the round.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdaptiveBoston {
    caps: Caps,
}

impl NaiveBoston {
    pub fn new(caps: Caps) -> Self {
        NaiveBoston { caps }
    }
}

impl AdaptiveBoston {
    pub fn new(caps: Caps) -> Self {
        AdaptiveBoston { caps }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    Naive,
    Adaptive,
}

fn boston(setting: &Setting, profile: &Profile, caps: &Caps, variant: Variant) -> Result<Allocation> {
    check_profile(setting, profile)?;
    let total = caps.check_orders(setting.n())? as u64;
    let (n, m) = (setting.n(), setting.m());
    let mut counts = vec![vec![0u64; m]; n];
    let mut left = vec![0u32; m];
    let mut open = vec![false; m];
    let mut holds: Vec<Option<usize>> = vec![None; n];
    for_each_order(n, |lottery| {
        left.copy_from_slice(setting.capacities());
        holds.iter_mut().for_each(|h| *h = None);
        let mut unassigned = n;
        let mut round = 0;
        while unassigned > 0 {
            for (j, o) in open.iter_mut().enumerate() {
                *o = left[j] > 0;
            }
            for &i in lottery {
                if holds[i].is_some() {
                    continue;
                }
                let ranking = profile.agent(i).ranking();
                let target = match variant {
                    Variant::Naive => ranking.get(round).copied(),
                    Variant::Adaptive => ranking.iter().copied().find(|&j| open[j]),
                };
                if let Some(j) = target {
                    if left[j] > 0 {
                        left[j] -= 1;
                        holds[i] = Some(j);
                        unassigned -= 1;
                    }
                }
            }
            round += 1;
            debug_assert!(round <= m + n, "Boston rounds must terminate");
        }
        for (i, h) in holds.iter().enumerate() {
            counts[i][h.unwrap()] += 1;
        }
    });
    Ok(Allocation::from_counts(&counts, total))
}

impl Mechanism for NaiveBoston {
    fn name(&self) -> String {
        "nbm".into()
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities::SYMMETRIC
    }
    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        boston(setting, profile, &self.caps, Variant::Naive)
    }
}

impl Mechanism for AdaptiveBoston {
    fn name(&self) -> String {
        "abm".into()
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities::SYMMETRIC
    }
    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        boston(setting, profile, &self.caps, Variant::Adaptive)
    }
}

pub fn nbm(setting: &Setting, profile: &Profile) -> Result<Allocation> {
    NaiveBoston::default().allocate(setting, profile)
}

pub fn abm(setting: &Setting, profile: &Profile) -> Result<Allocation> {
    AdaptiveBoston::default().allocate(setting, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio::ratio;
    use crate::model::Rational;

    fn row(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(a, b)| ratio(a, b)).collect()
    }

    #[test]
    fn naive_boston_example_profile() {
        let s = Setting::unit(4, 4).unwrap();
        let p = Profile::parse(&s, &["a>b>c>d", "a>c>b>d", "b>c>a>d", "b>c>a>d"]).unwrap();
        assert_eq!(nbm(&s, &p).unwrap().row(0), row(&[(1, 2), (0, 1), (0, 1), (1, 2)]).as_slice());
        let p2 = p.with_report(0, crate::model::PrefOrder::parse(&s, "a>c>b>d").unwrap());
        assert_eq!(nbm(&s, &p2).unwrap().row(0), row(&[(1, 2), (0, 1), (1, 4), (1, 4)]).as_slice());
    }

    #[test]
    fn adaptive_skips_exhausted_objects() {
        let s = Setting::unit(4, 4).unwrap();
        let p = Profile::parse(&s, &["a>b>c>d", "a>c>b>d", "b>c>a>d", "b>c>a>d"]).unwrap();
        let a = abm(&s, &p).unwrap();
        a.validate(&s).unwrap();
        // Losing `a` in round one, agent 0 skips the exhausted `b` and
        // competes for `c` with the loser at `b`.
        assert_eq!(a.row(0), row(&[(1, 2), (0, 1), (1, 4), (1, 4)]).as_slice());
    }

    #[test]
    fn distinct_first_choices() {
        let s = Setting::unit(3, 3).unwrap();
        let p = Profile::parse(&s, &["b>a>c", "c>a>b", "a>b>c"]).unwrap();
        for a in [nbm(&s, &p).unwrap(), abm(&s, &p).unwrap()] {
            assert_eq!(a.get(0, 1), &ratio(1, 1));
            assert_eq!(a.get(1, 2), &ratio(1, 1));
            assert_eq!(a.get(2, 0), &ratio(1, 1));
        }
    }
}
