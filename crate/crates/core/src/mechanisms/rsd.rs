use crate::enumerate::Caps;
use crate::error::Result;
use crate::mechanisms::{check_profile, for_each_order, Capabilities, Mechanism};
use crate::model::{Allocation, Profile, Setting};

/// Random Serial Dictatorship, averaged exactly over all `n!` priority orders.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSerialDictatorship {
    caps: Caps,
}

impl RandomSerialDictatorship {
    pub fn new(caps: Caps) -> Self {
        RandomSerialDictatorship { caps }
    }
}

impl Mechanism for RandomSerialDictatorship {
    fn name(&self) -> String {
        "rsd".into()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::SYMMETRIC
    }

    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        check_profile(setting, profile)?;
        let total = self.caps.check_orders(setting.n())? as u64;
        let (n, m) = (setting.n(), setting.m());
        let mut counts = vec![vec![0u64; m]; n];
        let mut left = vec![0u32; m];
        for_each_order(n, |order| {
            left.copy_from_slice(setting.capacities());
            for &i in order {
                let j = *profile
                    .agent(i)
                    .ranking()
                    .iter()
                    .find(|&&j| left[j] > 0)
                    .expect("supply covers demand");
                left[j] -= 1;
                counts[i][j] += 1;
            }
        });
        Ok(Allocation::from_counts(&counts, total))
    }
}

/// RSD with the default order cap.
pub fn rsd(setting: &Setting, profile: &Profile) -> Result<Allocation> {
    RandomSerialDictatorship::default().allocate(setting, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio::ratio;

    #[test]
    fn single_agent_gets_first_choice() {
        let s = Setting::unit(1, 3).unwrap();
        let p = Profile::parse(&s, &["b>c>a"]).unwrap();
        let a = rsd(&s, &p).unwrap();
        assert_eq!(a.row(0), &[ratio(0, 1), ratio(1, 1), ratio(0, 1)]);
    }

    #[test]
    fn identical_reports_split_evenly() {
        let s = Setting::unit(3, 3).unwrap();
        let p = Profile::parse(&s, &["a>b>c"; 3]).unwrap();
        let a = rsd(&s, &p).unwrap();
        for i in 0..3 {
            assert!(a.row(i).iter().all(|x| *x == ratio(1, 3)));
        }
    }

    #[test]
    fn distinct_first_choices() {
        let s = Setting::unit(3, 3).unwrap();
        let p = Profile::parse(&s, &["c>a>b", "a>b>c", "b>c>a"]).unwrap();
        let a = rsd(&s, &p).unwrap();
        assert_eq!(a.get(0, 2), &ratio(1, 1));
        assert_eq!(a.get(1, 0), &ratio(1, 1));
        assert_eq!(a.get(2, 1), &ratio(1, 1));
    }

    #[test]
    fn order_cap_refuses() {
        let s = Setting::unit(4, 4).unwrap();
        let p = Profile::parse(&s, &["a>b>c>d"; 4]).unwrap();
        let caps = Caps {
            max_orders: 6,
            ..Caps::default()
        };
        assert!(RandomSerialDictatorship::new(caps).allocate(&s, &p).is_err());
    }
}
