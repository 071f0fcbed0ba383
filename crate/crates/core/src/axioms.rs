//! Exhaustive checks of swap monotonicity, upper and lower invariance,
//! strategyproofness and weak strategyproofness.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::Symmetry;
use crate::error::Result;
use crate::mechanisms::Mechanism;
use crate::model::{fosd_compare, ratio, row_delta, Dominance, PrefOrder, Profile, Rational, Setting};
use crate::sweep::{CheckOptions, Coverage, FirstHit, Plan, RowCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    SwapMonotonic,
    UpperInvariant,
    LowerInvariant,
    Strategyproof,
    WeaklyStrategyproof,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::SwapMonotonic,
        Axiom::UpperInvariant,
        Axiom::LowerInvariant,
        Axiom::Strategyproof,
        Axiom::WeaklyStrategyproof,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::SwapMonotonic => "swap_monotonic",
            Axiom::UpperInvariant => "upper_invariant",
            Axiom::LowerInvariant => "lower_invariant",
            Axiom::Strategyproof => "strategyproof",
            Axiom::WeaklyStrategyproof => "weakly_strategyproof",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Strategyproofness against every misreport, or only against adjacent swaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpMode {
    Global,
    Local,
}

/// A violated constraint: agent `agent` with truthful report in `profile`
/// misreporting `misreport`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub agent: usize,
    pub profile: Profile,
    pub misreport: PrefOrder,
    /// Swap position `k` for axiom violations, otherwise the rank at which
    /// the violated prefix ends.
    pub rank: usize,
    /// Objects whose allocation breaks the constraint.
    pub objects: Vec<usize>,
    pub truthful_row: Vec<Rational>,
    pub misreport_row: Vec<Rational>,
}

impl Witness {
    pub fn truth(&self) -> &PrefOrder {
        self.profile.agent(self.agent)
    }

    /// `f(t) - f(t')` for the deviating agent.
    pub fn delta(&self) -> Vec<Rational> {
        row_delta(&self.truthful_row, &self.misreport_row)
    }

    pub fn misreport_profile(&self) -> Profile {
        self.profile.with_report(self.agent, self.misreport.clone())
    }

    /// Re-evaluates the mechanism from scratch and confirms both rows.
    pub fn reproduces(&self, mech: &dyn Mechanism, setting: &Setting) -> Result<bool> {
        let x = mech.allocate(setting, &self.profile)?;
        let y = mech.allocate(setting, &self.misreport_profile())?;
        Ok(x.row(self.agent) == self.truthful_row.as_slice()
            && y.row(self.agent) == self.misreport_row.as_slice())
    }

    pub fn to_doc(&self, setting: &Setting) -> WitnessDoc {
        let strings = |v: &[Rational]| v.iter().map(ratio::format).collect();
        WitnessDoc {
            agent: self.agent + 1,
            profile: self
                .profile
                .prefs()
                .iter()
                .map(|t| t.display(setting).to_string())
                .collect(),
            misreport: self.misreport.display(setting).to_string(),
            rank: self.rank,
            objects: self.objects.iter().map(|&j| setting.label(j).to_string()).collect(),
            truthful_row: strings(&self.truthful_row),
            misreport_row: strings(&self.misreport_row),
            delta: strings(&self.delta()),
        }
    }

    pub fn describe(&self, setting: &Setting) -> String {
        let d = self.to_doc(setting);
        format!(
            "agent {} in [{}] reporting {} (rank {}, objects {{{}}}): ({}) -> ({})",
            d.agent,
            d.profile.join(" | "),
            d.misreport,
            d.rank,
            d.objects.join(","),
            d.truthful_row.join(", "),
            d.misreport_row.join(", ")
        )
    }
}

/// Serialized witness; agents are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub agent: usize,
    pub profile: Vec<String>,
    pub misreport: String,
    pub rank: usize,
    pub objects: Vec<String>,
    pub truthful_row: Vec<String>,
    pub misreport_row: Vec<String>,
    pub delta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub axiom: Axiom,
    /// Set for strategyproofness checks.
    pub mode: Option<SpMode>,
    pub holds: bool,
    pub witness: Option<Witness>,
    pub coverage: Coverage,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageDoc {
    pub status: String,
    pub evaluated: u64,
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub axiom: Axiom,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SpMode>,
    pub holds: bool,
    pub witness: Option<WitnessDoc>,
    pub coverage: CoverageDoc,
    pub constraints: u64,
    pub symmetry: Symmetry,
}

impl AxiomReport {
    pub fn to_doc(&self, setting: &Setting) -> ReportDoc {
        ReportDoc {
            axiom: self.axiom,
            mode: self.mode,
            holds: self.holds,
            witness: self.witness.as_ref().map(|w| w.to_doc(setting)),
            coverage: CoverageDoc {
                status: self.coverage.status().into(),
                evaluated: self.coverage.evaluated,
                skipped: self.coverage.skipped,
            },
            constraints: self.coverage.evaluated,
            symmetry: self.symmetry,
        }
    }

    pub fn summary(&self, setting: &Setting) -> String {
        let name = match self.mode {
            Some(SpMode::Local) => format!("{} (local)", self.axiom),
            _ => self.axiom.to_string(),
        };
        let verdict = if self.holds { "holds" } else { "fails" };
        let mut s = format!(
            "{name}: {verdict} [{} coverage, {} constraints, {} skipped, symmetry {}]",
            self.coverage.status(),
            self.coverage.evaluated,
            self.coverage.skipped,
            self.symmetry
        );
        if let Some(w) = &self.witness {
            s.push_str("\n  witness: ");
            s.push_str(&w.describe(setting));
        }
        s
    }
}

/// One family of constraints the sweep can look for violations of.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Test {
    Swap,
    Upper,
    Lower,
    Sp(SpMode),
    Weak,
    /// Horner prefix polynomials evaluated at `s = 1/r`.
    Psp(Rational),
}

impl Test {
    fn neighbors_only(&self) -> bool {
        matches!(self, Test::Swap | Test::Upper | Test::Lower | Test::Sp(SpMode::Local))
    }

    /// `Some((rank, objects))` if the pair `x = f(t)`, `y = f(t')` violates
    /// the constraint; `k` is the swap position for neighbor tests.
    fn violation(&self, t: &PrefOrder, k: usize, x: &[Rational], y: &[Rational]) -> Option<(usize, Vec<usize>)> {
        let m = t.len();
        let changed = |ranks: std::ops::Range<usize>| -> Vec<usize> {
            ranks.map(|r| t.choice(r)).filter(|&j| x[j] != y[j]).collect()
        };
        match self {
            Test::Swap => {
                let (a, b) = (t.choice(k), t.choice(k + 1));
                let fine = x == y || (x[a] > y[a] && x[b] < y[b]);
                (!fine).then(|| (k, vec![a, b]))
            }
            Test::Upper => Some(changed(1..k)).filter(|v| !v.is_empty()).map(|v| (k, v)),
            Test::Lower => Some(changed(k + 2..m + 1)).filter(|v| !v.is_empty()).map(|v| (k, v)),
            Test::Sp(_) => {
                let mut acc = Rational::zero();
                for r in 1..m {
                    let j = t.choice(r);
                    acc += &x[j] - &y[j];
                    if acc.is_negative() {
                        return Some((r, t.ranking()[..r].to_vec()));
                    }
                }
                None
            }
            Test::Weak => {
                if fosd_compare(y, x, t) != Dominance::DominatesStrictly {
                    return None;
                }
                let mut acc = Rational::zero();
                let r = (1..m)
                    .find(|&r| {
                        let j = t.choice(r);
                        acc += &y[j] - &x[j];
                        acc.is_positive()
                    })
                    .unwrap_or(m);
                Some((r, t.ranking()[..r].to_vec()))
            }
            Test::Psp(s) => {
                let mut acc = Rational::zero();
                for r in 1..m {
                    let j = t.choice(r);
                    acc = s * &acc + (&x[j] - &y[j]);
                    if acc.is_negative() {
                        return Some((r, t.ranking()[..r].to_vec()));
                    }
                }
                None
            }
        }
    }
}

/// Per-test outcome of a sweep.
#[derive(Debug, Clone, Default)]
pub(crate) struct Tally {
    pub coverage: Coverage,
    pub witness: Option<Witness>,
}

/// Looks for the first violation of each test in deterministic order.
///
/// Counts include every constraint up to and including the witness, so the
/// result does not depend on the number of workers.
pub(crate) fn search(mech: &dyn Mechanism, setting: &Setting, plan: &Plan, tests: &[Test]) -> Result<Vec<Tally>> {
    let hits: Vec<FirstHit> = tests.iter().map(|_| FirstHit::new()).collect();
    let chunks = plan.run_chunks(|chunk, jobs| -> Result<Vec<Tally>> {
        let mut tallies = vec![Tally::default(); tests.len()];
        let mut done = vec![false; tests.len()];
        for job in jobs {
            let mut cache = RowCache::new(mech, setting, plan, job);
            for truth in plan.truths(job) {
                let t = plan.space.get(truth);
                for (q, test) in tests.iter().enumerate() {
                    if done[q] || hits[q].beaten(chunk) {
                        done[q] = true;
                        continue;
                    }
                    let misreports: Vec<(usize, usize)> = if test.neighbors_only() {
                        plan.space.neighbors(truth).to_vec()
                    } else {
                        (0..plan.space.len()).filter(|&u| u != truth).map(|u| (0, u)).collect()
                    };
                    for (k, u) in misreports {
                        if !plan.allows(job, u) {
                            continue;
                        }
                        let Some((x, y)) = cache.pair(truth, u)? else {
                            tallies[q].coverage.skipped += 1;
                            continue;
                        };
                        tallies[q].coverage.evaluated += 1;
                        if let Some((rank, objects)) = test.violation(t, k, x, y) {
                            tallies[q].witness = Some(Witness {
                                agent: job.agent,
                                profile: plan.profile(job, truth),
                                misreport: plan.space.get(u).clone(),
                                rank,
                                objects,
                                truthful_row: x.to_vec(),
                                misreport_row: y.to_vec(),
                            });
                            done[q] = true;
                            hits[q].record(chunk);
                            break;
                        }
                    }
                }
                if done.iter().all(|&d| d) {
                    return Ok(tallies);
                }
            }
        }
        Ok(tallies)
    });
    let mut merged = vec![Tally::default(); tests.len()];
    let mut closed = vec![false; tests.len()];
    for chunk in chunks {
        for (q, tally) in chunk?.into_iter().enumerate() {
            if closed[q] {
                continue;
            }
            merged[q].coverage.add(tally.coverage);
            if tally.witness.is_some() {
                merged[q].witness = tally.witness;
                closed[q] = true;
            }
        }
    }
    Ok(merged)
}

fn test_for(axiom: Axiom) -> Test {
    match axiom {
        Axiom::SwapMonotonic => Test::Swap,
        Axiom::UpperInvariant => Test::Upper,
        Axiom::LowerInvariant => Test::Lower,
        Axiom::Strategyproof => Test::Sp(SpMode::Global),
        Axiom::WeaklyStrategyproof => Test::Weak,
    }
}

fn report(axiom: Axiom, mode: Option<SpMode>, tally: Tally, symmetry: Symmetry) -> AxiomReport {
    AxiomReport {
        axiom,
        mode,
        holds: tally.witness.is_none(),
        witness: tally.witness,
        coverage: tally.coverage,
        symmetry,
    }
}

/// Runs several checks in one sweep. Strategyproofness is checked globally.
pub fn check_axioms(
    mech: &dyn Mechanism,
    setting: &Setting,
    axioms: &[Axiom],
    options: &CheckOptions,
) -> Result<Vec<AxiomReport>> {
    let plan = Plan::new(mech, setting, options)?;
    let tests: Vec<Test> = axioms.iter().map(|&a| test_for(a)).collect();
    let tallies = search(mech, setting, &plan, &tests)?;
    Ok(axioms
        .iter()
        .zip(tallies)
        .map(|(&a, t)| {
            let mode = (a == Axiom::Strategyproof).then_some(SpMode::Global);
            report(a, mode, t, plan.symmetry)
        })
        .collect())
}

/// All five checks.
pub fn check_all(mech: &dyn Mechanism, setting: &Setting, options: &CheckOptions) -> Result<Vec<AxiomReport>> {
    check_axioms(mech, setting, &Axiom::ALL, options)
}

fn single(mech: &dyn Mechanism, setting: &Setting, axiom: Axiom, options: &CheckOptions) -> Result<AxiomReport> {
    Ok(check_axioms(mech, setting, &[axiom], options)?.remove(0))
}

/// Adjacent swaps either change nothing or move probability strictly toward
/// the object swapped up and away from the one swapped down.
pub fn check_swap_monotonicity(mech: &dyn Mechanism, setting: &Setting, options: &CheckOptions) -> Result<AxiomReport> {
    single(mech, setting, Axiom::SwapMonotonic, options)
}

/// Adjacent swaps leave the allocation of strictly better objects unchanged.
pub fn check_upper_invariance(mech: &dyn Mechanism, setting: &Setting, options: &CheckOptions) -> Result<AxiomReport> {
    single(mech, setting, Axiom::UpperInvariant, options)
}

/// Adjacent swaps leave the allocation of strictly worse objects unchanged.
pub fn check_lower_invariance(mech: &dyn Mechanism, setting: &Setting, options: &CheckOptions) -> Result<AxiomReport> {
    single(mech, setting, Axiom::LowerInvariant, options)
}

/// The truthful row weakly stochastically dominates every misreport row.
pub fn check_strategyproof(
    mech: &dyn Mechanism,
    setting: &Setting,
    mode: SpMode,
    options: &CheckOptions,
) -> Result<AxiomReport> {
    let plan = Plan::new(mech, setting, options)?;
    let tally = search(mech, setting, &plan, &[Test::Sp(mode)])?.remove(0);
    Ok(report(Axiom::Strategyproof, Some(mode), tally, plan.symmetry))
}

/// No misreport row strictly stochastically dominates the truthful row.
pub fn check_weak_sp(mech: &dyn Mechanism, setting: &Setting, options: &CheckOptions) -> Result<AxiomReport> {
    single(mech, setting, Axiom::WeaklyStrategyproof, options)
}

/// Re-checks a witness against the constraint it claims to violate.
pub fn witness_violates(axiom: Axiom, mode: SpMode, w: &Witness) -> bool {
    let test = match axiom {
        Axiom::Strategyproof => Test::Sp(mode),
        other => test_for(other),
    };
    let t = w.truth();
    let k = if test.neighbors_only() {
        match t.swap_rank(&w.misreport) {
            Some(k) => k,
            None => return false,
        }
    } else {
        0
    };
    test.violation(t, k, &w.truthful_row, &w.misreport_row).is_some()
}
