//! Partial strategyproofness: verification at a given bound `r`, the degree
//! of strategyproofness, bisection cross-checks and the maximality
//! counterexample generator.

mod maximality;
pub mod poly;
mod urbi;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::axioms::{search, Axiom, Test, Witness, WitnessDoc};
use crate::enumerate::Symmetry;
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::model::{expected_utility, ratio, row_delta, PrefOrder, Profile, Rational, Setting, UtilityFn};
use crate::sweep::{CheckOptions, Coverage, Plan, RowCache};

pub use maximality::{maximality_counterexample, violating_pair};
pub use poly::{Poly, Root};
pub use urbi::{
    geometric_utility, sample_urbi, sample_urbi_seeded, urbi_contains, urbi_share, witness_utility, ShareEstimate,
};

/// Horner polynomial `x_k(s)` of one rank; `coeffs[j]` multiplies `s^j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndiffPoly {
    pub rank: usize,
    pub coeffs: Vec<Rational>,
}

impl IndiffPoly {
    pub fn poly(&self) -> Poly {
        Poly::new(self.coeffs.clone())
    }

    pub fn eval(&self, s: &Rational) -> Rational {
        self.poly().eval(s)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}

/// `f(t)_i - f(t')_i` where `profile` holds the truthful report.
pub fn delta_vector(
    mech: &dyn Mechanism,
    setting: &Setting,
    agent: usize,
    profile: &Profile,
    misreport: &PrefOrder,
) -> Result<Vec<Rational>> {
    let x = mech.allocate(setting, profile)?;
    let y = mech.allocate(setting, &profile.with_report(agent, misreport.clone()))?;
    Ok(row_delta(x.row(agent), y.row(agent)))
}

/// `x_1 = δ(ch 1)`, `x_k = s·x_{k-1} + δ(ch k)` for `k = 1..m-1`.
pub fn horner_polys(delta: &[Rational], t: &PrefOrder) -> Vec<IndiffPoly> {
    let m = t.len();
    (1..m)
        .map(|k| IndiffPoly {
            rank: k,
            coeffs: (0..k).map(|j| delta[t.choice(k - j)].clone()).collect(),
        })
        .collect()
}

/// `<u, f(t') - f(t)>` for the agent; positive means the misreport pays.
pub fn manipulation_gain(
    mech: &dyn Mechanism,
    setting: &Setting,
    agent: usize,
    profile: &Profile,
    misreport: &PrefOrder,
    u: &UtilityFn,
) -> Result<Rational> {
    let delta = delta_vector(mech, setting, agent, profile, misreport)?;
    Ok(-expected_utility(u, &delta))
}

fn check_bound(r: &Rational) -> Result<()> {
    if !r.is_positive() || *r > Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "bound r = {} outside (0,1]",
            ratio::format(r)
        )));
    }
    Ok(())
}

/// Outcome of [`verify_psp`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PspVerdict {
    pub r: Rational,
    pub holds: bool,
    /// First violated constraint; `rank` is the failing Horner rank.
    pub witness: Option<Witness>,
    /// Utility in `URBI(r)` for which the witness misreport pays.
    pub utility: Option<UtilityFn>,
    pub gain: Option<Rational>,
    pub coverage: Coverage,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub r: String,
    pub holds: bool,
    pub witness: Option<WitnessDoc>,
    pub utility: Option<Vec<String>>,
    pub gain: Option<String>,
    pub coverage: String,
    pub constraints: u64,
    pub skipped: u64,
    pub symmetry: Symmetry,
}

impl PspVerdict {
    pub fn to_doc(&self, setting: &Setting) -> VerdictDoc {
        VerdictDoc {
            r: ratio::format(&self.r),
            holds: self.holds,
            witness: self.witness.as_ref().map(|w| w.to_doc(setting)),
            utility: self
                .utility
                .as_ref()
                .map(|u| u.values().iter().map(ratio::format).collect()),
            gain: self.gain.as_ref().map(ratio::format),
            coverage: self.coverage.status().into(),
            constraints: self.coverage.evaluated,
            skipped: self.coverage.skipped,
            symmetry: self.symmetry,
        }
    }
}

/// Checks `x_k(1/r) >= 0` for every agent, profile, misreport and rank.
pub fn verify_psp(mech: &dyn Mechanism, setting: &Setting, r: &Rational, options: &CheckOptions) -> Result<PspVerdict> {
    check_bound(r)?;
    let plan = Plan::new(mech, setting, options)?;
    let tally = search(mech, setting, &plan, &[Test::Psp(r.recip())])?.remove(0);
    let (utility, gain) = match &tally.witness {
        Some(w) => {
            let delta = w.delta();
            let u = witness_utility(w.truth(), r, w.rank, &delta).ok_or_else(|| {
                Error::InvalidArgument("could not construct a witness utility".into())
            })?;
            let gain = -expected_utility(&u, &delta);
            (Some(u), Some(gain))
        }
        None => (None, None),
    };
    Ok(PspVerdict {
        r: r.clone(),
        holds: tally.witness.is_none(),
        witness: tally.witness,
        utility,
        gain,
        coverage: tally.coverage,
        symmetry: plan.symmetry,
    })
}

/// Fails with the first violation of swap monotonicity or upper invariance.
fn require_preconditions(mech: &dyn Mechanism, setting: &Setting, plan: &Plan) -> Result<()> {
    let tallies = search(mech, setting, plan, &[Test::Swap, Test::Upper])?;
    for (axiom, tally) in [Axiom::SwapMonotonic, Axiom::UpperInvariant].into_iter().zip(tallies) {
        if let Some(w) = tally.witness {
            return Err(Error::Precondition {
                axiom: axiom.name().replace('_', " "),
                witness: Box::new(w),
            });
        }
    }
    Ok(())
}

/// The constraint that pins the degree of strategyproofness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub agent: usize,
    pub profile: Profile,
    pub misreport: PrefOrder,
    pub poly: IndiffPoly,
    /// Largest sign change of the polynomial, in `s = 1/r`.
    pub root: Root,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoResult {
    /// `rho` lies in `[lo, hi]`; equal bounds mean the value is exact.
    pub lo: Rational,
    pub hi: Rational,
    pub exact: bool,
    /// `None` when no constraint binds and `rho = 1`.
    pub binding: Option<Binding>,
    pub coverage: Coverage,
    pub symmetry: Symmetry,
    pub elapsed_ms: u128,
}

impl RhoResult {
    pub fn value(&self) -> Option<&Rational> {
        self.exact.then_some(&self.lo)
    }

    pub fn to_doc(&self, setting: &Setting) -> RhoDoc {
        RhoDoc {
            value: self.value().map(ratio::format),
            interval: [ratio::format(&self.lo), ratio::format(&self.hi)],
            exact: self.exact,
            binding: self.binding.as_ref().map(|b| BindingDoc {
                agent: b.agent + 1,
                profile: b.profile.prefs().iter().map(|t| t.display(setting).to_string()).collect(),
                misreport: b.misreport.display(setting).to_string(),
                rank: b.poly.rank,
                poly: b.poly.coeffs.iter().map(ratio::format).collect(),
                root: [ratio::format(b.root.lo()), ratio::format(b.root.hi())],
            }),
            constraints: self.coverage.evaluated,
            skipped: self.coverage.skipped,
            symmetry: self.symmetry,
            wall_clock_ms: self.elapsed_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingDoc {
    pub agent: usize,
    pub profile: Vec<String>,
    pub misreport: String,
    pub rank: usize,
    /// Coefficients in increasing powers of `s`.
    pub poly: Vec<String>,
    /// Root in `s`, as `[lo, hi]`.
    pub root: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoDoc {
    pub value: Option<String>,
    pub interval: [String; 2],
    pub exact: bool,
    pub binding: Option<BindingDoc>,
    pub constraints: u64,
    pub skipped: u64,
    pub symmetry: Symmetry,
    pub wall_clock_ms: u128,
}

/// Running maximum of the binding roots, kept as an interval in `s`.
#[derive(Clone)]
struct Best {
    lo: Rational,
    hi: Rational,
    binding: Option<Binding>,
}

impl Best {
    fn new() -> Self {
        Best {
            lo: Rational::one(),
            hi: Rational::one(),
            binding: None,
        }
    }

    fn key(b: &Option<Binding>) -> Option<(&Rational, &Rational)> {
        b.as_ref().map(|b| (b.root.lo(), b.root.hi()))
    }

    /// Later candidates replace earlier ones only when strictly larger.
    fn offer(&mut self, candidate: Binding) {
        if candidate.root.lo() > &self.lo {
            self.lo = candidate.root.lo().clone();
        }
        if candidate.root.hi() > &self.hi {
            self.hi = candidate.root.hi().clone();
        }
        let new_key = (candidate.root.lo(), candidate.root.hi());
        if Best::key(&self.binding).is_none_or(|k| new_key > k) {
            self.binding = Some(candidate);
        }
    }
}

/// Degree of strategyproofness: the minimum over all constraints of
/// `1/s*`, where `s*` is the largest sign change of the Horner polynomial
/// in `[1, ∞)`. Requires swap monotonicity and upper invariance.
pub fn compute_rho(mech: &dyn Mechanism, setting: &Setting, options: &CheckOptions) -> Result<RhoResult> {
    let start = Instant::now();
    let plan = Plan::new(mech, setting, options)?;
    require_preconditions(mech, setting, &plan)?;
    let one = Rational::one();
    let chunks = plan.run_chunks(|_, jobs| -> Result<(Best, Coverage)> {
        let mut best = Best::new();
        let mut coverage = Coverage::default();
        let mut roots: HashMap<Poly, Option<Root>> = HashMap::new();
        for job in jobs {
            let mut cache = RowCache::new(mech, setting, &plan, job);
            for truth in plan.truths(job) {
                let t = plan.space.get(truth);
                for u in 0..plan.space.len() {
                    if u == truth || !plan.allows(job, u) {
                        continue;
                    }
                    let Some((x, y)) = cache.pair(truth, u)? else {
                        coverage.skipped += 1;
                        continue;
                    };
                    coverage.evaluated += 1;
                    if x == y {
                        continue;
                    }
                    let delta = row_delta(x, y);
                    // Nonnegative prefixes along t give nonnegative coefficients.
                    if (1..t.len()).all(|k| !delta[t.choice(k)].is_negative()) {
                        continue;
                    }
                    for ip in horner_polys(&delta, t) {
                        let p = ip.poly();
                        let Some(lead) = p.leading() else { continue };
                        if lead.is_negative() {
                            return Err(Error::NoPositiveBound(format!(
                                "agent {} in [{}] reporting {}: rank {} polynomial has negative leading coefficient",
                                job.agent + 1,
                                plan.profile(job, truth).display(setting),
                                plan.space.get(u).display(setting),
                                ip.rank
                            )));
                        }
                        if p.coeffs().iter().all(|c| !c.is_negative()) {
                            continue;
                        }
                        let root = roots
                            .entry(p.clone())
                            .or_insert_with(|| p.max_sign_change_root_above(&one))
                            .clone();
                        if let Some(root) = root {
                            if root.hi() > &best.lo || best.binding.is_none() {
                                best.offer(Binding {
                                    agent: job.agent,
                                    profile: plan.profile(job, truth),
                                    misreport: plan.space.get(u).clone(),
                                    poly: ip,
                                    root,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok((best, coverage))
    });
    let mut best = Best::new();
    let mut coverage = Coverage::default();
    for chunk in chunks {
        let (b, c) = chunk?;
        coverage.add(c);
        if let Some(binding) = b.binding {
            best.offer(binding);
        }
        // Interval ends from non-binding candidates still count.
        if b.lo > best.lo {
            best.lo = b.lo;
        }
        if b.hi > best.hi {
            best.hi = b.hi;
        }
    }
    Ok(RhoResult {
        lo: best.hi.recip(),
        hi: best.lo.recip(),
        exact: best.lo == best.hi,
        binding: best.binding,
        coverage,
        symmetry: plan.symmetry,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Distinct nonzero allocation changes, each ordered along the truthful
/// ranking (ranks `1..m-1`).
struct ConstraintSet {
    deltas: Vec<Vec<Rational>>,
}

impl ConstraintSet {
    fn collect(mech: &dyn Mechanism, setting: &Setting, plan: &Plan) -> Result<ConstraintSet> {
        let chunks = plan.run_chunks(|_, jobs| -> Result<HashSet<Vec<Rational>>> {
            let mut set = HashSet::new();
            for job in jobs {
                let mut cache = RowCache::new(mech, setting, plan, job);
                for truth in plan.truths(job) {
                    let t = plan.space.get(truth);
                    for u in (0..plan.space.len()).filter(|&u| u != truth && plan.allows(job, u)) {
                        if let Some((x, y)) = cache.pair(truth, u)? {
                            if x != y {
                                set.insert((1..t.len()).map(|k| &x[t.choice(k)] - &y[t.choice(k)]).collect());
                            }
                        }
                    }
                }
            }
            Ok(set)
        });
        let mut all = BTreeSet::new();
        for c in chunks {
            all.extend(c?);
        }
        Ok(ConstraintSet {
            deltas: all.into_iter().collect(),
        })
    }

    /// Same predicate as [`verify_psp`], on the collected constraints.
    fn holds(&self, r: &Rational) -> bool {
        let s = r.recip();
        self.deltas.iter().all(|d| {
            let mut acc = Rational::zero();
            d.iter().all(|dk| {
                acc = &s * &acc + dk;
                !acc.is_negative()
            })
        })
    }
}

/// Binary search for the degree of strategyproofness with r-PSP
/// verification as the predicate. Returns `[lo, hi]` with `hi - lo <= tol`,
/// the predicate true at `lo` (or `lo = 0`) and false at `hi` unless
/// `lo = hi = 1`.
pub fn rho_bisect(
    mech: &dyn Mechanism,
    setting: &Setting,
    tol: &Rational,
    options: &CheckOptions,
) -> Result<(Rational, Rational)> {
    if !tol.is_positive() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let plan = Plan::new(mech, setting, options)?;
    require_preconditions(mech, setting, &plan)?;
    let set = ConstraintSet::collect(mech, setting, &plan)?;
    let one = Rational::one();
    if set.holds(&one) {
        return Ok((one.clone(), one));
    }
    let (mut lo, mut hi) = (Rational::zero(), one);
    let two = ratio::int(2);
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) / &two;
        if set.holds(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}
