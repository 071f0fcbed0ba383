use crate::error::{Error, Result};
use crate::mechanisms::{check_profile, min_cost_assignment, Capabilities, Mechanism};
use crate::model::{ratio, Allocation, Profile, Rational, Setting};

/// Deterministic rank-minimizing assignment.
///
/// Ties between optimal assignments are broken lexicographically: agent 0
/// gets the lowest-indexed object compatible with optimality, then agent 1,
/// and so on. Not anonymous and not neutral.
#[derive(Debug, Clone, Copy, Default)]
pub struct RankMin;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankMinOutcome {
    /// Object index per agent.
    pub assignment: Vec<usize>,
    /// Sum of 1-indexed ranks.
    pub total_rank: i64,
    /// Whether no other assignment attains `total_rank`.
    pub unique: bool,
}

impl RankMinOutcome {
    pub fn allocation(&self, setting: &Setting) -> Allocation {
        let rows = self
            .assignment
            .iter()
            .map(|&j| {
                (0..setting.m())
                    .map(|c| ratio::int(i64::from(c == j)))
                    .collect::<Vec<Rational>>()
            })
            .collect();
        Allocation::from_rows(rows)
    }
}

impl Mechanism for RankMin {
    fn name(&self) -> String {
        "rank_min".into()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        Ok(rank_min(setting, profile)?.allocation(setting))
    }
}

/// Solves the rank-minimization problem over capacity-expanded slots.
pub fn rank_min(setting: &Setting, profile: &Profile) -> Result<RankMinOutcome> {
    check_profile(setting, profile)?;
    let n = setting.n();
    // Slot columns: object j repeated q_j times (at most n copies matter).
    let slots: Vec<usize> = (0..setting.m())
        .flat_map(|j| std::iter::repeat_n(j, (setting.capacity(j) as usize).min(n)))
        .collect();
    let rank = |i: usize, j: usize| profile.agent(i).rank_of(j) as i64;
    let solve = |allowed: &dyn Fn(usize, usize) -> bool| {
        let cost: Vec<Vec<Option<i64>>> = (0..n)
            .map(|i| {
                slots
                    .iter()
                    .map(|&j| allowed(i, j).then(|| rank(i, j)))
                    .collect()
            })
            .collect();
        min_cost_assignment(&cost).map(|(total, _)| total)
    };
    let unsolvable = || Error::InvalidSetting("no complete assignment exists".into());
    let optimum = solve(&|_, _| true).ok_or_else(unsolvable)?;

    let mut fixed: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        for j in 0..setting.m() {
            let trial = |a: usize, b: usize| match (a == i, fixed[a]) {
                (true, _) => b == j,
                (false, Some(f)) => b == f,
                (false, None) => true,
            };
            if solve(&trial) == Some(optimum) {
                fixed[i] = Some(j);
                break;
            }
        }
    }
    let assignment: Vec<usize> = fixed.into_iter().map(|f| f.expect("optimum is attainable")).collect();

    // Any other optimum differs from ours for some agent.
    let unique = (0..n).all(|i| {
        let other = |a: usize, b: usize| a != i || b != assignment[i];
        solve(&other) != Some(optimum)
    });
    Ok(RankMinOutcome {
        assignment,
        total_rank: optimum,
        unique,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(s: &Setting, orders: &[&str]) -> RankMinOutcome {
        rank_min(s, &Profile::parse(s, orders).unwrap()).unwrap()
    }

    fn labels(s: &Setting, o: &RankMinOutcome) -> Vec<String> {
        o.assignment.iter().map(|&j| s.label(j).to_string()).collect()
    }

    #[test]
    fn distinct_first_choices() {
        let s = Setting::unit(3, 3).unwrap();
        let o = outcome(&s, &["c>a>b", "a>b>c", "b>a>c"]);
        assert_eq!(labels(&s, &o), ["c", "a", "b"]);
        assert_eq!(o.total_rank, 3);
        assert!(o.unique);
    }

    #[test]
    fn four_agent_fixture() {
        let s = Setting::unit(4, 4).unwrap();
        let base = ["a>d>c>b", "a>b>d>c", "b>c>d>a", "c>a>b>d"];
        let o = outcome(&s, &base);
        assert_eq!(labels(&s, &o), ["d", "a", "b", "c"]);
        assert_eq!(o.total_rank, 5);
        assert!(o.unique);
        let mut lie = base;
        lie[0] = "a>c>b>d";
        let o = outcome(&s, &lie);
        assert_eq!(labels(&s, &o), ["a", "d", "b", "c"]);
        assert_eq!(o.total_rank, 6);
        assert!(o.unique);
    }

    #[test]
    fn five_agent_fixture() {
        let s = Setting::unit(5, 5).unwrap();
        let base = ["a>c>b>d>e", "c>b>a>d>e", "c>a>b>e>d", "a>c>b>e>d", "e>a>b>c>d"];
        let o = outcome(&s, &base);
        assert_eq!(labels(&s, &o), ["d", "b", "c", "a", "e"]);
        assert!(o.unique);
        let mut lie = base;
        lie[0] = "b>a>c>d>e";
        let o = outcome(&s, &lie);
        assert_eq!(labels(&s, &o), ["b", "d", "c", "a", "e"]);
        assert!(o.unique);
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let s = Setting::unit(2, 2).unwrap();
        let o = outcome(&s, &["a>b", "a>b"]);
        assert_eq!(labels(&s, &o), ["a", "b"]);
        assert!(!o.unique);
    }

    #[test]
    fn brute_force_optimum() {
        let s = Setting::unit(4, 4).unwrap();
        let space = crate::enumerate::all_types(&s, &Default::default()).unwrap();
        for (x, y) in [(0usize, 5usize), (7, 13), (22, 3), (11, 11)] {
            let p = Profile::new(&s, vec![space[x].clone(), space[y].clone(), space[(x + y) % 24].clone(), space[(x * y) % 24].clone()]).unwrap();
            let o = rank_min(&s, &p).unwrap();
            let mut cols = vec![0, 1, 2, 3];
            let mut best = i64::MAX;
            let mut count = 0;
            loop {
                let t: i64 = (0..4).map(|i| p.agent(i).rank_of(cols[i]) as i64).sum();
                if t < best {
                    best = t;
                    count = 1;
                } else if t == best {
                    count += 1;
                }
                if !crate::enumerate::next_permutation(&mut cols) {
                    break;
                }
            }
            assert_eq!(o.total_rank, best);
            assert_eq!(o.unique, count == 1);
        }
    }
}
