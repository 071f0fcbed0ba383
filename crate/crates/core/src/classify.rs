//! Classification of mechanisms by the three axioms, strategyproofness and
//! partial strategyproofness, driven by a manifest of witness settings.

use std::time::Instant;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::axioms::{check_axioms, Axiom};
use crate::error::{Error, Result};
use crate::mechanisms::builtin;
use crate::model::{ratio, PrefOrder, Profile, Setting};
use crate::psp::compute_rho;
use crate::sweep::{CheckOptions, Scope};

/// Column names, in manifest order.
pub const PROPERTIES: [&str; 5] = [
    "swap_monotonic",
    "upper_invariant",
    "lower_invariant",
    "strategyproof",
    "r_partially_strategyproof",
];

const AXIOMS: [Axiom; 4] = [
    Axiom::SwapMonotonic,
    Axiom::UpperInvariant,
    Axiom::LowerInvariant,
    Axiom::Strategyproof,
];

static DEFAULT_MANIFEST: &str = include_str!("../manifests/table1.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub properties: Vec<String>,
    pub rows: Vec<RowSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpec {
    pub label: String,
    pub mechanism: String,
    pub expected: [bool; 5],
    pub evidence: Vec<EvidenceSpec>,
}

/// A setting the row is checked on. Without a scope the whole setting is
/// swept; with one, only the canonical transition it describes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSpec {
    pub setting: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<ScopeSpec>,
}

/// Agent numbers start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeSpec {
    pub agent: usize,
    pub profile: Vec<String>,
    pub target: String,
}

impl Manifest {
    pub fn builtin() -> Manifest {
        Manifest::from_json(DEFAULT_MANIFEST).expect("bundled manifest parses")
    }

    pub fn from_json(text: &str) -> Result<Manifest> {
        let manifest: Manifest = serde_json::from_str(text)?;
        if manifest.properties != PROPERTIES {
            return Err(Error::parse("manifest", "unexpected property columns"));
        }
        for row in &manifest.rows {
            if row.evidence.is_empty() {
                return Err(Error::parse(format!("row `{}`", row.label), "no evidence settings"));
            }
        }
        Ok(manifest)
    }
}

impl EvidenceSpec {
    fn resolve(&self) -> Result<(Setting, Scope)> {
        let setting = Setting::named(&self.setting)
            .ok_or_else(|| Error::InvalidSetting(format!("unknown setting `{}`", self.setting)))?;
        let scope = match &self.scope {
            None => Scope::Full,
            Some(s) => {
                if s.agent == 0 || s.agent > setting.n() {
                    return Err(Error::InvalidArgument(format!("scope agent {} out of range", s.agent)));
                }
                let profile = Profile::parse(&setting, &s.profile)?;
                let target = PrefOrder::parse(&setting, &s.target)?;
                Scope::transition(s.agent - 1, profile, &target)?
            }
        };
        Ok((setting, scope))
    }
}

/// Verdicts of one row on one evidence setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceResult {
    pub setting: String,
    pub scoped: bool,
    pub holds: [bool; 5],
    /// `rho` as `p/q`, or an interval `[lo, hi]` when irrational.
    pub rho: Option<String>,
    /// One line per failing property.
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowResult {
    pub label: String,
    pub mechanism: String,
    pub expected: [bool; 5],
    pub observed: [bool; 5],
    pub evidence: Vec<EvidenceResult>,
    pub elapsed_ms: u128,
}

impl RowResult {
    pub fn matches(&self) -> bool {
        self.expected == self.observed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub rows: Vec<RowResult>,
}

fn mark(b: bool) -> &'static str {
    if b {
        "✓"
    } else {
        "✗"
    }
}

impl Classification {
    pub fn matches(&self) -> bool {
        self.rows.iter().all(RowResult::matches)
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(9);
        let mut out = format!("{:width$}  swap  upper  lower  sp  r-psp  expected\n", "mechanism");
        for row in &self.rows {
            let o = row.observed;
            out.push_str(&format!(
                "{:width$}  {}     {}      {}      {}   {}      {}\n",
                row.label,
                mark(o[0]),
                mark(o[1]),
                mark(o[2]),
                mark(o[3]),
                mark(o[4]),
                if row.matches() { "match" } else { "MISMATCH" }
            ));
        }
        for row in &self.rows {
            for ev in &row.evidence {
                if let Some(rho) = &ev.rho {
                    out.push_str(&format!("rho({}, {}) = {rho}\n", row.mechanism, ev.setting));
                }
            }
        }
        out
    }

    /// One line per row with a header; booleans as `true`/`false`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("label,mechanism,{},matches\n", PROPERTIES.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.observed.iter().map(|b| b.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(&row.label),
                csv_field(&row.mechanism),
                cells.join(","),
                row.matches()
            ));
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn evaluate(spec: &RowSpec, ev: &EvidenceSpec, options: &CheckOptions) -> Result<EvidenceResult> {
    let (setting, scope) = ev.resolve()?;
    let mech = builtin(&spec.mechanism, &options.caps)?;
    let opts = options.clone().with_scope(scope);
    let reports = check_axioms(&*mech, &setting, &AXIOMS, &opts)?;
    let mut holds = [false; 5];
    let mut witnesses = Vec::new();
    for (i, report) in reports.iter().enumerate() {
        holds[i] = report.holds;
        if let Some(w) = &report.witness {
            witnesses.push(format!("{}: {}", report.axiom, w.describe(&setting)));
        }
    }
    let rho = match compute_rho(&*mech, &setting, &opts) {
        Ok(r) => {
            holds[4] = r.lo.is_positive();
            Some(match r.value() {
                Some(v) => ratio::format(v),
                None => format!("[{}, {}]", ratio::format(&r.lo), ratio::format(&r.hi)),
            })
        }
        Err(Error::Precondition { axiom, witness }) => {
            witnesses.push(format!("r-psp: not {axiom}: {}", witness.describe(&setting)));
            None
        }
        Err(Error::NoPositiveBound(msg)) => {
            witnesses.push(format!("r-psp: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    Ok(EvidenceResult {
        setting: ev.setting.clone(),
        scoped: ev.scope.is_some(),
        holds,
        rho,
        witnesses,
    })
}

/// A property is marked as holding when it holds on every evidence setting.
pub fn classify_row(spec: &RowSpec, options: &CheckOptions) -> Result<RowResult> {
    let start = Instant::now();
    let evidence = spec
        .evidence
        .iter()
        .map(|ev| evaluate(spec, ev, options))
        .collect::<Result<Vec<_>>>()?;
    let mut observed = [true; 5];
    for ev in &evidence {
        for (o, h) in observed.iter_mut().zip(ev.holds) {
            *o &= h;
        }
    }
    Ok(RowResult {
        label: spec.label.clone(),
        mechanism: spec.mechanism.clone(),
        expected: spec.expected,
        observed,
        evidence,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

pub fn classify(manifest: &Manifest, options: &CheckOptions) -> Result<Classification> {
    let rows = manifest
        .rows
        .iter()
        .map(|row| classify_row(row, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(Classification { rows })
}
