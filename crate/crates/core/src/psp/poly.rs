//! Univariate polynomials over the rationals with certified real root
//! isolation (square-free decomposition, Sturm sequences, exact rational
//! root recovery).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::model::Rational;

/// Coefficients in increasing degree, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly(Vec<Rational>);

/// A real root, either exact or enclosed in `(lo, hi]` with no other root of
/// the defining polynomial in that interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Root {
    Exact(Rational),
    Interval(Rational, Rational),
}

impl Root {
    pub fn lo(&self) -> &Rational {
        match self {
            Root::Exact(x) => x,
            Root::Interval(lo, _) => lo,
        }
    }

    pub fn hi(&self) -> &Rational {
        match self {
            Root::Exact(x) => x,
            Root::Interval(_, hi) => hi,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Root::Exact(_))
    }
}

/// Width below which isolating intervals are reported as they are.
pub fn isolation_width() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(10u64).pow(12))
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.0.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    fn sign_at(&self, x: &Rational) -> i8 {
        sign(&self.eval(x))
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    fn sub(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        let zero = Rational::zero();
        Poly::new(
            (0..len)
                .map(|k| self.0.get(k).unwrap_or(&zero) - other.0.get(k).unwrap_or(&zero))
                .collect(),
        )
    }

    /// Quotient and remainder; `divisor` must be nonzero.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let d = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().unwrap();
        let mut rem = self.0.clone();
        if rem.len() <= d {
            return (Poly::new(Vec::new()), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - d];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + d] / lead;
            if !c.is_zero() {
                for (j, dc) in divisor.0.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(d);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some(l) => Poly(self.0.iter().map(|c| c / l).collect()),
        }
    }

    /// Product of the square-free factors of odd multiplicity (Yun's
    /// algorithm); its real roots are exactly where `self` changes sign.
    pub fn odd_part(&self) -> Poly {
        if self.degree().unwrap_or(0) == 0 {
            return Poly::new(vec![Rational::one()]);
        }
        let d = self.derivative();
        let a = self.gcd(&d);
        let mut b = self.div_rem(&a).0;
        let c = d.div_rem(&a).0;
        let mut dd = c.sub(&b.derivative());
        let mut odd = Poly::new(vec![Rational::one()]);
        let mut multiplicity = 1;
        while b.degree().unwrap_or(0) > 0 {
            let factor = b.gcd(&dd);
            let nb = b.div_rem(&factor).0;
            let nc = dd.div_rem(&factor).0;
            if multiplicity % 2 == 1 {
                odd = odd.mul(&factor);
            }
            dd = nc.sub(&nb.derivative());
            b = nb;
            multiplicity += 1;
        }
        odd.monic()
    }

    fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::new(Vec::new());
        }
        let mut out = vec![Rational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Sturm sequence of a square-free polynomial.
    fn sturm(&self) -> Vec<Poly> {
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                break;
            }
            let r = seq[n - 2].div_rem(&seq[n - 1]).1;
            if r.is_zero() {
                break;
            }
            seq.push(Poly(r.0.iter().map(|c| -c).collect()));
        }
        seq
    }

    /// Coefficient bound exceeding every real root's absolute value.
    pub fn cauchy_bound(&self) -> Rational {
        let lead = self.leading().expect("nonzero polynomial").abs();
        let max = self.0[..self.0.len() - 1]
            .iter()
            .map(|c| c.abs() / &lead)
            .max()
            .unwrap_or_else(Rational::zero);
        max + Rational::one()
    }

    /// Primitive integer polynomial with the same roots.
    fn integer_coeffs(&self) -> Vec<BigInt> {
        let lcm = self
            .0
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self.0.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() {
            return ints;
        }
        ints.into_iter().map(|c| c / &g).collect()
    }

    /// Largest root strictly above `floor` at which `self` changes sign.
    pub fn max_sign_change_root_above(&self, floor: &Rational) -> Option<Root> {
        if self.is_zero() {
            return None;
        }
        let mut q = self.odd_part();
        if q.degree()? == 0 {
            return None;
        }
        if q.eval(floor).is_zero() {
            let linear = Poly::new(vec![-floor.clone(), Rational::one()]);
            q = q.div_rem(&linear).0;
            if q.degree()? == 0 {
                return None;
            }
        }
        if q.degree() == Some(1) {
            let root = -&q.0[0] / &q.0[1];
            return (root > *floor).then_some(Root::Exact(root));
        }
        let seq = q.sturm();
        let at_infinity = variations(seq.iter().map(|p| sign(p.leading().unwrap())));
        let count_above = |x: &Rational| variations(seq.iter().map(|p| p.sign_at(x))) - at_infinity;
        let mut inside = count_above(floor);
        if inside == 0 {
            return None;
        }
        // Invariant: the largest root lies in (lo, hi] and neither end is a root.
        let mut lo = floor.clone();
        let mut hi = q.cauchy_bound().max(floor + Rational::one());
        let width = isolation_width();
        let denominators = q
            .integer_coeffs()
            .last()
            .and_then(|lead| small_divisors(&lead.abs()))
            .unwrap_or_default();
        let two = Rational::from_integer(BigInt::from(2));
        while &hi - &lo > width {
            let mut mid = (&lo + &hi) / &two;
            let mut step = 3;
            while q.eval(&mid).is_zero() {
                // Nudge off an exact root; finitely many exist.
                mid = &lo + (&hi - &lo) * Rational::new(BigInt::one(), BigInt::from(step));
                step += 1;
            }
            let above = count_above(&mid);
            if above >= 1 {
                lo = mid;
                inside = above;
            } else {
                hi = mid;
            }
            if inside == 1 {
                if let Some(r) = rational_root_in(&q, &denominators, &lo, &hi) {
                    return Some(Root::Exact(r));
                }
            }
        }
        Some(Root::Interval(lo, hi))
    }
}

fn sign(x: &Rational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0;
    let mut count = 0;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// A rational root of `q` in `(lo, hi]`, found by testing every fraction
/// `p/d` in the interval with `d` among `denominators`, the divisors of the
/// leading coefficient of the primitive integer form.
fn rational_root_in(q: &Poly, denominators: &[BigInt], lo: &Rational, hi: &Rational) -> Option<Rational> {
    for d in denominators {
        let dq = Rational::from_integer(d.clone());
        let first: BigInt = (lo * &dq).floor().to_integer() + 1;
        let last: BigInt = (hi * &dq).floor().to_integer();
        if &last - &first > BigInt::from(64) {
            // Interval still too wide for this denominator.
            continue;
        }
        let mut p = first;
        while p <= last {
            let cand = Rational::new(p.clone(), d.clone());
            if q.eval(&cand).is_zero() {
                return Some(cand);
            }
            p += 1;
        }
    }
    None
}

/// Divisors of `n` by trial division; `None` when `n` is too large to factor
/// this way.
fn small_divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.to_u64().filter(|&n| n > 0 && n <= 1_000_000_000_000)?;
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d * d != n {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    Some(out.into_iter().map(BigInt::from).collect())
}
