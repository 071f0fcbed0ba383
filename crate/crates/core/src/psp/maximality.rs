use num_traits::{One, Signed, Zero};

use crate::enumerate::{all_types, Caps};
use crate::error::{Error, Result};
use crate::mechanisms::TableMechanism;
use crate::model::{ratio, Allocation, Rational, Setting, UtilityFn};

/// The first adjacent pair `(a, b)` along the order induced by `u` with
/// `r·(u(a) - min u) < u(b) - min u`.
pub fn violating_pair(u: &UtilityFn, r: &Rational) -> Result<(usize, usize)> {
    let t = u
        .induced_order()
        .ok_or_else(|| Error::InvalidArgument("utility has tied values".into()))?;
    let min = u.min();
    for k in 1..t.len() {
        let (a, b) = (t.choice(k), t.choice(k + 1));
        if r * (u.value(a) - min) < u.value(b) - min {
            return Ok((a, b));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no violating pair: utility lies in URBI({})",
        ratio::format(r)
    )))
}

/// A mechanism that is `r`-partially strategyproof yet rewards the agent
/// with utility `u` for swapping the violating pair `a ≻ b`.
///
/// Agent 0 receives the uniform row whenever it reports `a ≻ b`. Reporting
/// `b ≻ a` shifts `1/(2m)` onto `b`, takes `r/(2m)` from `a` and the rest
/// from the reported last choice. The other agents split the residual
/// capacity evenly, so every row depends only on agent 0's report.
pub fn maximality_counterexample(setting: &Setting, r: &Rational, u: &UtilityFn) -> Result<TableMechanism> {
    let m = setting.m();
    if m < 3 {
        return Err(Error::InvalidSetting("at least three objects are required".into()));
    }
    if !r.is_positive() || *r >= Rational::one() {
        return Err(Error::InvalidArgument(format!("bound r = {} outside (0,1)", ratio::format(r))));
    }
    if u.len() != m {
        return Err(Error::InvalidArgument("utility does not match the setting".into()));
    }
    let (a, b) = violating_pair(u, r)?;
    let n = setting.n();
    let uniform = ratio::ratio(1, m as i64);
    let delta_b = ratio::ratio(1, 2 * m as i64);
    let delta_a = -(r * &delta_b);
    let delta_d = -(&delta_a + &delta_b);

    let mut table = TableMechanism::new(setting.clone(), false, Some(0))?
        .with_name(format!("maximality(r={})", ratio::format(r)));
    for t in all_types(setting, &Caps::default())? {
        let mut row = vec![uniform.clone(); m];
        if t.prefers(b, a) {
            let d = t.choice(m);
            row[b] += &delta_b;
            row[a] += &delta_a;
            row[d] += &delta_d;
        }
        let mut rows = vec![row.clone()];
        if n > 1 {
            let mut remaining = ratio::int(n as i64 - 1);
            let share = ratio::ratio(1, n as i64 - 1);
            let mut other = vec![Rational::zero(); m];
            for j in 0..m {
                let room = ratio::int(setting.capacity(j) as i64) - &row[j];
                let take = if room < remaining { room } else { remaining.clone() };
                remaining -= &take;
                other[j] = take * &share;
            }
            rows.extend(std::iter::repeat_n(other, n - 1));
        }
        let allocation = Allocation::from_rows_checked(setting, rows)?;
        table.insert(vec![t], allocation)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::Mechanism;
    use crate::model::ratio::ratio;
    use crate::model::Profile;

    #[test]
    fn constants_on_three_objects() {
        let s = Setting::unit(3, 3).unwrap();
        let u = UtilityFn::from_ints(&[6, 2, 1]);
        // Normalized (5, 1, 0): only (a, b) can violate, and does for r < 1/5.
        assert_eq!(violating_pair(&u, &ratio(1, 6)).unwrap(), (0, 1));
        assert!(violating_pair(&u, &ratio(1, 5)).is_err());
        let u = UtilityFn::from_ints(&[2, 1, 0]);
        assert_eq!(violating_pair(&u, &ratio(1, 3)).unwrap(), (0, 1));
        let table = maximality_counterexample(&s, &ratio(1, 3), &u).unwrap();
        let p = Profile::parse(&s, &["b>a>c", "a>b>c", "a>b>c"]).unwrap();
        let row = table.allocate(&s, &p).unwrap().row(0).to_vec();
        assert_eq!(row, vec![ratio(1, 3) - ratio(1, 18), ratio(1, 3) + ratio(1, 6), ratio(1, 3) - ratio(1, 9)]);
        let truthful = Profile::parse(&s, &["a>b>c", "c>b>a", "a>b>c"]).unwrap();
        assert_eq!(table.allocate(&s, &truthful).unwrap().row(0), &[ratio(1, 3), ratio(1, 3), ratio(1, 3)]);
    }

    #[test]
    fn rejects_members() {
        let s = Setting::unit(3, 3).unwrap();
        let u = UtilityFn::from_ints(&[9, 1, 0]);
        assert!(maximality_counterexample(&s, &ratio(1, 3), &u).is_err());
        assert!(maximality_counterexample(&s, &ratio(1, 1), &UtilityFn::from_ints(&[2, 1, 0])).is_err());
    }
}
