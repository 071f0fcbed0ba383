use std::fmt;

use crate::error::{Error, Result};
use crate::model::Setting;

/// A strict ranking of object indices; position 0 holds the first choice.
///
/// Ranks exposed through the API are 1-indexed so that `choice(k)` is the
/// `k`-th choice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrefOrder(Vec<usize>);

impl PrefOrder {
    /// Builds an order from object indices. The indices must form a
    /// permutation of `0..ranking.len()`.
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let m = ranking.len();
        let mut seen = vec![false; m];
        for &j in &ranking {
            if j >= m || seen[j] {
                return Err(Error::InvalidOrder(format!("{ranking:?} is not a permutation of 0..{m}")));
            }
            seen[j] = true;
        }
        Ok(PrefOrder(ranking))
    }

    pub(crate) fn from_vec_unchecked(ranking: Vec<usize>) -> Self {
        PrefOrder(ranking)
    }

    /// Object order of the setting itself (`a ≻ b ≻ ...`).
    pub fn identity(m: usize) -> Self {
        PrefOrder((0..m).collect())
    }

    /// Parses labels against a setting. A dummy object, if present, is
    /// appended when omitted and must be last when given.
    pub fn from_labels<S: AsRef<str>>(setting: &Setting, labels: &[S]) -> Result<Self> {
        let mut ranking = labels
            .iter()
            .map(|l| setting.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        if setting.has_dummy() {
            let d = setting.m() - 1;
            match ranking.iter().position(|&j| j == d) {
                None => ranking.push(d),
                Some(p) if p + 1 == ranking.len() => {}
                Some(_) => {
                    return Err(Error::InvalidOrder("the dummy object must be ranked last".into()));
                }
            }
        }
        if ranking.len() != setting.m() {
            return Err(Error::InvalidOrder(format!(
                "ranking has {} objects, setting has {}",
                ranking.len(),
                setting.m()
            )));
        }
        PrefOrder::new(ranking)
    }

    /// Parses `"a>b>c"`, `"a b c"` or `"a,b,c"`.
    pub fn parse(setting: &Setting, text: &str) -> Result<Self> {
        let labels: Vec<&str> = text
            .split(|c: char| c == '>' || c == ',' || c.is_whitespace() || c == '≻')
            .filter(|s| !s.is_empty())
            .collect();
        PrefOrder::from_labels(setting, &labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ranking(&self) -> &[usize] {
        &self.0
    }

    /// The `k`-th choice, 1-indexed.
    pub fn choice(&self, k: usize) -> usize {
        self.0[k - 1]
    }

    /// 1-indexed rank of object `j`.
    pub fn rank_of(&self, j: usize) -> usize {
        self.position(j) + 1
    }

    pub(crate) fn position(&self, j: usize) -> usize {
        self.0.iter().position(|&x| x == j).expect("object not in order")
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.position(a) < self.position(b)
    }

    /// Swaps the objects at ranks `k` and `k+1` (1-indexed).
    pub fn swapped(&self, k: usize) -> PrefOrder {
        let mut v = self.0.clone();
        v.swap(k - 1, k);
        PrefOrder(v)
    }

    /// Orders reachable by one adjacent transposition, by swap rank `k = 1..m-1`.
    pub fn neighborhood(&self) -> Vec<PrefOrder> {
        (1..self.len()).map(|k| self.swapped(k)).collect()
    }

    /// If `other` is a neighbor, the 1-indexed rank `k` of the swapped pair.
    pub fn swap_rank(&self, other: &PrefOrder) -> Option<usize> {
        if self.len() != other.len() {
            return None;
        }
        let diff: Vec<usize> = (0..self.len()).filter(|&p| self.0[p] != other.0[p]).collect();
        match diff.as_slice() {
            [p, q] if *q == p + 1 && self.0[*p] == other.0[*q] && self.0[*q] == other.0[*p] => Some(p + 1),
            _ => None,
        }
    }

    /// Upper and lower contour sets of object `a`.
    pub fn contour_sets(&self, a: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let p = self
            .0
            .iter()
            .position(|&x| x == a)
            .ok_or_else(|| Error::UnknownObject(format!("#{a}")))?;
        Ok((self.0[..p].to_vec(), self.0[p + 1..].to_vec()))
    }

    /// Adjacent-swap path from `self` to `target`: `target`'s first choice
    /// is bubbled to the front, then its second choice to second position,
    /// and so on. The first element is `self`, the last is `target`.
    pub fn canonical_transition(&self, target: &PrefOrder) -> Result<Vec<PrefOrder>> {
        let mut a = self.0.clone();
        let mut b = target.0.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(Error::InvalidOrder("orders rank different objects".into()));
        }
        let mut current = self.0.clone();
        let mut path = vec![self.clone()];
        for (slot, &obj) in target.0.iter().enumerate() {
            let mut p = current.iter().position(|&x| x == obj).unwrap();
            while p > slot {
                current.swap(p - 1, p);
                p -= 1;
                path.push(PrefOrder(current.clone()));
            }
        }
        Ok(path)
    }

    /// Number of discordant object pairs.
    pub fn kendall_tau(&self, other: &PrefOrder) -> usize {
        let m = self.len();
        let mut d = 0;
        for x in 0..m {
            for y in x + 1..m {
                let a = self.0[x];
                let b = self.0[y];
                if other.prefers(b, a) {
                    d += 1;
                }
            }
        }
        d
    }

    pub fn display<'a>(&'a self, setting: &'a Setting) -> OrderDisplay<'a> {
        OrderDisplay { order: self, setting }
    }

    pub fn labels(&self, setting: &Setting) -> Vec<String> {
        self.0.iter().map(|&j| setting.label(j).to_string()).collect()
    }
}

pub struct OrderDisplay<'a> {
    order: &'a PrefOrder,
    setting: &'a Setting,
}

impl fmt::Display for OrderDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &j) in self.order.0.iter().enumerate() {
            if k > 0 {
                f.write_str(">")?;
            }
            f.write_str(self.setting.label(j))?;
        }
        Ok(())
    }
}
