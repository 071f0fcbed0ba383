use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::ratio::{self, Rational};
use crate::model::{PrefOrder, Setting};

/// Marginal assignment probabilities, one row per agent and one column per object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    rows: Vec<Vec<Rational>>,
}

impl Allocation {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        Allocation { rows }
    }

    pub fn from_rows_checked(setting: &Setting, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let a = Allocation { rows };
        a.validate(setting)?;
        Ok(a)
    }

    /// Integer counts divided by a common denominator.
    pub fn from_counts(counts: &[Vec<u64>], total: u64) -> Self {
        let den = num_bigint::BigInt::from(total);
        let rows = counts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| Rational::new(num_bigint::BigInt::from(c), den.clone()))
                    .collect()
            })
            .collect();
        Allocation { rows }
    }

    /// Every agent gets `1/m` of every object.
    pub fn uniform(setting: &Setting) -> Self {
        let p = ratio::ratio(1, setting.m() as i64);
        Allocation {
            rows: vec![vec![p; setting.m()]; setting.n()],
        }
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.rows[i][j]
    }

    pub fn into_rows(self) -> Vec<Vec<Rational>> {
        self.rows
    }

    /// Entries in `[0,1]`, rows summing to one, columns within capacity.
    pub fn validate(&self, setting: &Setting) -> Result<()> {
        if self.rows.len() != setting.n() {
            return Err(Error::InvalidAllocation(format!(
                "{} rows for {} agents",
                self.rows.len(),
                setting.n()
            )));
        }
        let m = setting.m();
        let mut cols = vec![Rational::zero(); m];
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidAllocation(format!(
                    "row {} has {} entries, expected {m}",
                    i + 1,
                    row.len()
                )));
            }
            let mut sum = Rational::zero();
            for (j, p) in row.iter().enumerate() {
                if !ratio::in_unit_interval(p) {
                    return Err(Error::InvalidAllocation(format!(
                        "entry ({}, {}) = {} outside [0,1]",
                        i + 1,
                        setting.label(j),
                        ratio::format(p)
                    )));
                }
                sum += p;
                cols[j] += p;
            }
            if !sum.is_one() {
                return Err(Error::InvalidAllocation(format!(
                    "row {} sums to {}",
                    i + 1,
                    ratio::format(&sum)
                )));
            }
        }
        for (j, c) in cols.iter().enumerate() {
            if *c > ratio::int(setting.capacity(j) as i64) {
                return Err(Error::InvalidAllocation(format!(
                    "column `{}` sums to {} above capacity {}",
                    setting.label(j),
                    ratio::format(c),
                    setting.capacity(j)
                )));
            }
        }
        Ok(())
    }

    /// `(1-beta)·self + beta·other`, entrywise.
    pub fn mix(&self, other: &Allocation, beta: &Rational) -> Allocation {
        let keep = Rational::one() - beta;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| &keep * p + beta * q).collect())
            .collect();
        Allocation { rows }
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(ratio::format).collect())
            .collect()
    }

    pub fn parse_strings(setting: &Setting, rows: &[Vec<String>], entry: &str) -> Result<Self> {
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, s)| {
                        ratio::parse(s).map_err(|e| {
                            Error::parse(format!("{entry}, row {}, column {}", i + 1, j + 1), e.to_string())
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let a = Allocation { rows };
        a.validate(setting).map_err(|e| Error::parse(entry, e.to_string()))?;
        Ok(a)
    }
}

/// `row_x - row_y`, entrywise.
pub fn row_delta(x: &[Rational], y: &[Rational]) -> Vec<Rational> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Outcome of a first-order stochastic dominance comparison of `x` against `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// Every prefix sum of `x` is at least that of `y`, at least one strictly.
    DominatesStrictly,
    /// Every prefix sum of `y` is at least that of `x`, at least one strictly.
    DominatedStrictly,
    Equal,
    Incomparable,
}

impl Dominance {
    /// `x` weakly dominates `y`.
    pub fn weakly_dominates(self) -> bool {
        matches!(self, Dominance::DominatesStrictly | Dominance::Equal)
    }
}

/// Compares two rows by cumulative probability along the ranking of `t`.
pub fn fosd_compare(x: &[Rational], y: &[Rational], t: &PrefOrder) -> Dominance {
    let mut acc = Rational::zero();
    let (mut some_pos, mut some_neg) = (false, false);
    for &j in t.ranking() {
        acc += &x[j] - &y[j];
        if acc.is_positive() {
            some_pos = true;
        } else if acc.is_negative() {
            some_neg = true;
        }
    }
    match (some_pos, some_neg) {
        (false, false) => Dominance::Equal,
        (true, false) => Dominance::DominatesStrictly,
        (false, true) => Dominance::DominatedStrictly,
        (true, true) => Dominance::Incomparable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio::ratio;

    fn q(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(a, b)| ratio(a, b)).collect()
    }

    #[test]
    fn fosd_examples() {
        let t = PrefOrder::identity(3);
        let mixed = q(&[(7, 18), (7, 18), (2, 9)]);
        let uniform = q(&[(1, 3), (1, 3), (1, 3)]);
        assert_eq!(fosd_compare(&mixed, &uniform, &t), Dominance::DominatesStrictly);
        assert_eq!(fosd_compare(&uniform, &mixed, &t), Dominance::DominatedStrictly);
        assert_eq!(fosd_compare(&uniform, &uniform, &t), Dominance::Equal);
        let x = q(&[(1, 2), (0, 1), (1, 2)]);
        let y = q(&[(0, 1), (1, 1), (0, 1)]);
        assert_eq!(fosd_compare(&x, &y, &t), Dominance::Incomparable);
    }

    #[test]
    fn validation_catches_each_invariant() {
        let s = Setting::unit(2, 2).unwrap();
        let ok = Allocation::from_rows(vec![q(&[(1, 2), (1, 2)]), q(&[(1, 2), (1, 2)])]);
        assert!(ok.validate(&s).is_ok());
        let short = Allocation::from_rows(vec![q(&[(1, 2), (1, 4)]), q(&[(1, 2), (1, 2)])]);
        assert!(short.validate(&s).is_err());
        let over = Allocation::from_rows(vec![q(&[(1, 1), (0, 1)]), q(&[(1, 1), (0, 1)])]);
        assert!(over.validate(&s).is_err());
        let neg = Allocation::from_rows(vec![q(&[(3, 2), (-1, 2)]), q(&[(0, 1), (1, 1)])]);
        assert!(neg.validate(&s).is_err());
    }
}
