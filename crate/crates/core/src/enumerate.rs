//! Type spaces, profile enumeration under anonymity/neutrality, and
//! deterministic partitioning for parallel sweeps.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::Capabilities;
use crate::model::{PrefOrder, Profile, Setting};

/// Size limits guarding exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest admissible type space `m!`.
    pub max_types: u128,
    /// Largest admissible expanded profile count `(m!)^n`.
    pub max_profiles: u128,
    /// Largest admissible number of priority/lottery orders `n!`.
    pub max_orders: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_types: 720,
            max_profiles: 100_000_000,
            max_orders: 3_628_800,
        }
    }
}

impl Caps {
    pub fn unlimited() -> Self {
        Caps {
            max_types: u128::MAX,
            max_profiles: u128::MAX,
            max_orders: u128::MAX,
        }
    }

    pub fn check_types(&self, setting: &Setting) -> Result<u128> {
        let size = factorial(setting.real_objects() as u128).unwrap_or(u128::MAX);
        if size > self.max_types {
            return Err(Error::CapExceeded {
                what: "type space",
                size,
                cap: self.max_types,
            });
        }
        Ok(size)
    }

    pub fn check_profiles(&self, setting: &Setting) -> Result<u128> {
        let types = self.check_types(setting)?;
        let size = types.checked_pow(setting.n() as u32).unwrap_or(u128::MAX);
        if size > self.max_profiles {
            return Err(Error::CapExceeded {
                what: "profile space",
                size,
                cap: self.max_profiles,
            });
        }
        Ok(size)
    }

    pub fn check_orders(&self, n: usize) -> Result<u128> {
        let size = factorial(n as u128).unwrap_or(u128::MAX);
        if size > self.max_orders {
            return Err(Error::CapExceeded {
                what: "agent order enumeration",
                size,
                cap: self.max_orders,
            });
        }
        Ok(size)
    }
}

pub fn factorial(k: u128) -> Option<u128> {
    (1..=k).try_fold(1u128, |acc, x| acc.checked_mul(x))
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Every strict order over the setting's real objects, lexicographic by
/// object-list order; a dummy object stays in last position.
pub fn all_types(setting: &Setting, caps: &Caps) -> Result<Vec<PrefOrder>> {
    caps.check_types(setting)?;
    let k = setting.real_objects();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    loop {
        let mut v = perm.clone();
        if setting.has_dummy() {
            v.push(k);
        }
        out.push(PrefOrder::from_vec_unchecked(v));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}

/// Advances to the lexicographically next permutation; false after the last.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Indexed type space with precomputed adjacency.
#[derive(Debug, Clone)]
pub struct TypeSpace {
    types: Vec<PrefOrder>,
    index: HashMap<PrefOrder, usize>,
    /// `(swap rank k, neighbor index)`, only swaps among real objects.
    neighbors: Vec<Vec<(usize, usize)>>,
}

impl TypeSpace {
    pub fn new(setting: &Setting, caps: &Caps) -> Result<Self> {
        let types = all_types(setting, caps)?;
        let index: HashMap<PrefOrder, usize> =
            types.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let k = setting.real_objects();
        let neighbors = types
            .iter()
            .map(|t| (1..k).map(|r| (r, index[&t.swapped(r)])).collect())
            .collect();
        Ok(TypeSpace {
            types,
            index,
            neighbors,
        })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, idx: usize) -> &PrefOrder {
        &self.types[idx]
    }

    pub fn index_of(&self, t: &PrefOrder) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn neighbors(&self, idx: usize) -> &[(usize, usize)] {
        &self.neighbors[idx]
    }

    pub fn types(&self) -> &[PrefOrder] {
        &self.types
    }
}

/// Which symmetry of the mechanism an enumeration may exploit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    None,
    Anonymous,
    AnonymousNeutral,
    /// Only the keyed agent's report varies; the others report the identity.
    Keyed,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::None => "none",
            Symmetry::Anonymous => "anonymous",
            Symmetry::AnonymousNeutral => "anonymous_neutral",
            Symmetry::Keyed => "keyed",
        })
    }
}

impl FromStr for Symmetry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Symmetry::None),
            "anonymous" => Ok(Symmetry::Anonymous),
            "anonymous_neutral" | "anonymous-neutral" => Ok(Symmetry::AnonymousNeutral),
            "keyed" => Ok(Symmetry::Keyed),
            other => Err(Error::InvalidArgument(format!("unknown symmetry `{other}`"))),
        }
    }
}

impl Symmetry {
    /// Fails if the mechanism (or the setting) does not support this reduction.
    pub fn validate(self, caps: Capabilities, setting: &Setting) -> Result<()> {
        let refuse = |reason: &str| {
            Err(Error::Symmetry {
                requested: self.to_string(),
                reason: reason.to_string(),
            })
        };
        match self {
            Symmetry::None => Ok(()),
            Symmetry::Anonymous if !caps.anonymous => refuse("mechanism is not declared anonymous"),
            Symmetry::Anonymous => Ok(()),
            Symmetry::AnonymousNeutral if !caps.anonymous => refuse("mechanism is not declared anonymous"),
            Symmetry::AnonymousNeutral if !caps.neutral => refuse("mechanism is not declared neutral"),
            Symmetry::AnonymousNeutral if !setting.uniform_capacities() => {
                refuse("objects have unequal capacities")
            }
            Symmetry::AnonymousNeutral => Ok(()),
            Symmetry::Keyed => match caps.keyed {
                Some(k) if k < setting.n() => Ok(()),
                Some(_) => refuse("keyed agent out of range"),
                None => refuse("mechanism is not keyed to one agent"),
            },
        }
    }

    /// Strongest reduction the mechanism supports in this setting.
    pub fn strongest(caps: Capabilities, setting: &Setting) -> Symmetry {
        [Symmetry::Keyed, Symmetry::AnonymousNeutral, Symmetry::Anonymous]
            .into_iter()
            .find(|s| s.validate(caps, setting).is_ok())
            .unwrap_or(Symmetry::None)
    }

    /// Number of profile classes for `t = m!` types and `n` agents.
    pub fn class_count(self, types: u128, n: u128) -> u128 {
        match self {
            Symmetry::None => types.checked_pow(n as u32).unwrap_or(u128::MAX),
            Symmetry::Anonymous => binomial(types + n - 1, n),
            Symmetry::AnonymousNeutral => binomial(types + n - 2, n - 1),
            Symmetry::Keyed => types,
        }
    }
}

/// One representative profile standing for `multiplicity` expanded profiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileClass {
    pub representative: Profile,
    pub multiplicity: u64,
    /// Agents whose deviations must be checked to cover the whole class.
    pub deviators: Vec<usize>,
}

/// Enumerates profile classes.
///
/// * `None`: every profile, multiplicity 1.
/// * `Anonymous`: multisets of types (sorted representatives), multiplicity
///   = number of distinct orderings.
/// * `AnonymousNeutral`: agent 0 reports the identity order and the other
///   agents form a multiset; multiplicity counts every profile this class
///   stands for from agent 0's point of view (`m!` relabellings times the
///   orderings of the others).
pub fn profiles(
    setting: &Setting,
    symmetry: Symmetry,
    capabilities: Capabilities,
    caps: &Caps,
) -> Result<ProfileIter> {
    symmetry.validate(capabilities, setting)?;
    caps.check_profiles(setting)?;
    let space = TypeSpace::new(setting, caps)?;
    let n = setting.n();
    let free = match symmetry {
        Symmetry::AnonymousNeutral => n - 1,
        Symmetry::Keyed => 1,
        _ => n,
    };
    Ok(ProfileIter {
        types: space.types,
        symmetry,
        n,
        key: capabilities.keyed.unwrap_or(0),
        odometer: Some(vec![0; free]),
    })
}

pub struct ProfileIter {
    types: Vec<PrefOrder>,
    symmetry: Symmetry,
    n: usize,
    key: usize,
    odometer: Option<Vec<usize>>,
}

impl Iterator for ProfileIter {
    type Item = ProfileClass;

    fn next(&mut self) -> Option<ProfileClass> {
        let digits = self.odometer.clone()?;
        let t = self.types.len();
        self.odometer = match self.symmetry {
            Symmetry::None | Symmetry::Keyed => advance_tuple(digits.clone(), t),
            _ => advance_multiset(digits.clone(), t),
        };
        let (slots, multiplicity, deviators) = match self.symmetry {
            Symmetry::None => (digits, 1, (0..self.n).collect()),
            Symmetry::Anonymous => {
                let mult = arrangements(&digits);
                let dev = (0..digits.len())
                    .filter(|&p| p == 0 || digits[p] != digits[p - 1])
                    .collect();
                (digits, mult, dev)
            }
            Symmetry::AnonymousNeutral => {
                let mult = arrangements(&digits) * t as u64;
                let mut slots = vec![0];
                slots.extend(digits);
                (slots, mult, vec![0])
            }
            Symmetry::Keyed => {
                let mut slots = vec![0; self.n];
                slots[self.key] = digits[0];
                let mult = (t as u64).pow(self.n as u32 - 1);
                (slots, mult, vec![self.key])
            }
        };
        let prefs = slots.iter().map(|&d| self.types[d].clone()).collect();
        Some(ProfileClass {
            representative: Profile::from_vec_unchecked(prefs),
            multiplicity,
            deviators,
        })
    }
}

fn advance_tuple(mut v: Vec<usize>, base: usize) -> Option<Vec<usize>> {
    for p in (0..v.len()).rev() {
        if v[p] + 1 < base {
            v[p] += 1;
            for x in &mut v[p + 1..] {
                *x = 0;
            }
            return Some(v);
        }
    }
    None
}

fn advance_multiset(mut v: Vec<usize>, base: usize) -> Option<Vec<usize>> {
    for p in (0..v.len()).rev() {
        if v[p] + 1 < base {
            let next = v[p] + 1;
            for x in &mut v[p..] {
                *x = next;
            }
            return Some(v);
        }
    }
    None
}

/// Multinomial coefficient: distinct orderings of a sorted digit string.
fn arrangements(sorted: &[usize]) -> u64 {
    let mut result: u128 = factorial(sorted.len() as u128).unwrap();
    let mut p = 0;
    while p < sorted.len() {
        let mut q = p;
        while q < sorted.len() && sorted[q] == sorted[p] {
            q += 1;
        }
        result /= factorial((q - p) as u128).unwrap();
        p = q;
    }
    result as u64
}

/// Splits items into `k` contiguous, pairwise disjoint chunks whose sizes
/// differ by at most one (earlier chunks larger). Concatenating the chunks
/// restores the original sequence.
pub fn partition<I: IntoIterator>(iter: I, k: usize) -> Vec<Vec<I::Item>> {
    let k = k.max(1);
    let items: Vec<I::Item> = iter.into_iter().collect();
    let total = items.len();
    let (base, extra) = (total / k, total % k);
    let mut out = Vec::with_capacity(k);
    let mut it = items.into_iter();
    for c in 0..k {
        let size = base + usize::from(c < extra);
        out.push(it.by_ref().take(size).collect());
    }
    out
}

/// Agent `agent` deviating while everybody else reports `others`.
///
/// `others` holds one type index per agent; the slot of `agent` is ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Context {
    pub agent: usize,
    pub others: Vec<usize>,
    /// Only the identity order needs checking as the truthful report.
    pub identity_truth_only: bool,
}

/// Deviation contexts covering every (agent, profile) pair of the setting
/// under the given reduction.
pub(crate) fn contexts(setting: &Setting, space: &TypeSpace, symmetry: Symmetry, key: usize) -> Vec<Context> {
    let n = setting.n();
    let t = space.len();
    let mut out = Vec::new();
    match symmetry {
        Symmetry::None => {
            for agent in 0..n {
                let mut digits = Some(vec![0; n - 1]);
                while let Some(d) = digits {
                    let mut others = d.clone();
                    others.insert(agent, 0);
                    out.push(Context {
                        agent,
                        others,
                        identity_truth_only: false,
                    });
                    digits = advance_tuple(d, t);
                }
            }
        }
        Symmetry::Anonymous | Symmetry::AnonymousNeutral => {
            let mut digits = Some(vec![0; n - 1]);
            while let Some(d) = digits {
                let mut others = vec![0];
                others.extend(d.iter().copied());
                out.push(Context {
                    agent: 0,
                    others,
                    identity_truth_only: symmetry == Symmetry::AnonymousNeutral,
                });
                digits = advance_multiset(d, t);
            }
        }
        Symmetry::Keyed => out.push(Context {
            agent: key,
            others: vec![0; n],
            identity_truth_only: false,
        }),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_caps() -> Capabilities {
        Capabilities {
            anonymous: true,
            neutral: true,
            keyed: None,
        }
    }

    #[test]
    fn type_counts() {
        let caps = Caps::default();
        assert_eq!(all_types(&Setting::unit(1, 3).unwrap(), &caps).unwrap().len(), 6);
        assert_eq!(all_types(&Setting::unit(1, 1).unwrap(), &caps).unwrap().len(), 1);
        let four = all_types(&Setting::unit(1, 4).unwrap(), &caps).unwrap();
        assert_eq!(four.len(), 24);
        assert_eq!(four[0], PrefOrder::identity(4));
        assert!(four.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn type_cap_refuses_with_estimate() {
        let err = all_types(&Setting::unit(1, 7).unwrap(), &Caps::default()).unwrap_err();
        match err {
            Error::CapExceeded { size, cap, .. } => assert_eq!((size, cap), (5040, 720)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn dummy_stays_last() {
        let s = Setting::unit(3, 2).unwrap();
        let types = all_types(&s, &Caps::default()).unwrap();
        assert_eq!(types.len(), 2);
        assert!(types.iter().all(|t| t.choice(3) == 2));
        let space = TypeSpace::new(&s, &Caps::default()).unwrap();
        assert_eq!(space.neighbors(0).len(), 1);
    }

    #[test]
    fn class_examples() {
        let s = Setting::unit(2, 3).unwrap();
        let c = profiles(&s, Symmetry::Anonymous, all_caps(), &Caps::default()).unwrap();
        assert_eq!(c.count(), 21);
        let s = Setting::unit(1, 2).unwrap();
        let c = profiles(&s, Symmetry::None, all_caps(), &Caps::default()).unwrap();
        assert_eq!(c.count(), 2);
        let s = Setting::unit(3, 3).unwrap();
        let c = profiles(&s, Symmetry::AnonymousNeutral, all_caps(), &Caps::default()).unwrap();
        assert_eq!(c.count(), 21);
    }

    #[test]
    fn refuses_undeclared_symmetry() {
        let s = Setting::unit(2, 2).unwrap();
        let plain = Capabilities::default();
        assert!(profiles(&s, Symmetry::Anonymous, plain, &Caps::default()).is_err());
        let anon = Capabilities {
            anonymous: true,
            neutral: false,
            keyed: None,
        };
        assert!(profiles(&s, Symmetry::AnonymousNeutral, anon, &Caps::default()).is_err());
        let skewed = Setting::new(2, vec!["a".into(), "b".into()], vec![1, 2]).unwrap();
        assert!(profiles(&skewed, Symmetry::AnonymousNeutral, all_caps(), &Caps::default()).is_err());
        assert_eq!(Symmetry::strongest(all_caps(), &skewed), Symmetry::Anonymous);
    }

    #[test]
    fn partition_examples() {
        let p = partition(0..21, 1);
        assert_eq!(p, vec![(0..21).collect::<Vec<_>>()]);
        let p = partition(0..21, 2);
        assert_eq!((p[0].len(), p[1].len()), (11, 10));
        let p = partition(0..3, 5);
        assert_eq!(p.len(), 5);
        assert_eq!(p.iter().filter(|c| c.is_empty()).count(), 2);
        assert_eq!(p.concat(), vec![0, 1, 2]);
    }

    #[test]
    fn context_counts() {
        let s = Setting::unit(3, 3).unwrap();
        let space = TypeSpace::new(&s, &Caps::default()).unwrap();
        assert_eq!(contexts(&s, &space, Symmetry::None, 0).len(), 3 * 36);
        assert_eq!(contexts(&s, &space, Symmetry::Anonymous, 0).len(), 21);
        let keyed = contexts(&s, &space, Symmetry::Keyed, 2);
        assert_eq!((keyed.len(), keyed[0].agent), (1, 2));
    }

    #[test]
    fn keyed_classes() {
        let s = Setting::unit(3, 3).unwrap();
        let caps = Capabilities {
            keyed: Some(1),
            ..Capabilities::default()
        };
        assert_eq!(Symmetry::strongest(caps, &s), Symmetry::Keyed);
        let classes: Vec<_> = profiles(&s, Symmetry::Keyed, caps, &Caps::default()).unwrap().collect();
        assert_eq!(classes.len(), 6);
        assert_eq!(classes.iter().map(|c| c.multiplicity).sum::<u64>(), 216);
        assert!(classes.iter().all(|c| c.deviators == [1]));
        assert!(profiles(&s, Symmetry::Keyed, Capabilities::default(), &Caps::default()).is_err());
    }
}
