use num_traits::Zero;

use crate::model::ratio::Rational;
use crate::model::PrefOrder;

/// Von Neumann-Morgenstern utility, one exact value per object index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UtilityFn {
    values: Vec<Rational>,
}

impl UtilityFn {
    pub fn new(values: Vec<Rational>) -> Self {
        UtilityFn { values }
    }

    pub fn from_ints(values: &[i64]) -> Self {
        UtilityFn::new(values.iter().map(|&v| crate::model::ratio::int(v)).collect())
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, j: usize) -> &Rational {
        &self.values[j]
    }

    pub fn min(&self) -> &Rational {
        self.values.iter().min().expect("utility over no objects")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The strict order this utility induces, if all values are distinct.
    pub fn induced_order(&self) -> Option<PrefOrder> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[b].cmp(&self.values[a]));
        if idx.windows(2).any(|w| self.values[w[0]] == self.values[w[1]]) {
            return None;
        }
        Some(PrefOrder::from_vec_unchecked(idx))
    }
}

/// `<u, row>`.
pub fn expected_utility(u: &UtilityFn, row: &[Rational]) -> Rational {
    u.values
        .iter()
        .zip(row)
        .fold(Rational::zero(), |acc, (v, p)| acc + v * p)
}

/// True iff `u` strictly decreases along `t`'s ranking.
pub fn utility_consistent(u: &UtilityFn, t: &PrefOrder) -> bool {
    u.len() == t.len()
        && t
            .ranking()
            .windows(2)
            .all(|w| u.value(w[0]) > u.value(w[1]))
}
