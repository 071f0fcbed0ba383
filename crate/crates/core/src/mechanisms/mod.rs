//! Mechanisms as deterministic maps from profiles to exact allocations.

mod assignment;
mod boston;
mod ps;
mod rank;
mod rsd;
mod table;

use std::sync::Arc;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::enumerate::Caps;
use crate::error::{Error, Result};
use crate::model::{ratio, Allocation, Profile, Rational, Setting};

pub use assignment::min_cost_assignment;
pub use boston::{abm, nbm, AdaptiveBoston, NaiveBoston};
pub use ps::{ps, ProbabilisticSerial};
pub use rank::{rank_min, RankMin, RankMinOutcome};
pub use rsd::{rsd, RandomSerialDictatorship};
pub use table::{EntryDoc, TableDoc, TableMechanism};

/// Symmetries a mechanism declares; enumeration reductions rely on them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    /// Permuting agents permutes rows.
    pub anonymous: bool,
    /// Relabelling objects (of equal capacity) relabels columns.
    pub neutral: bool,
    /// Only this agent's report affects the allocation.
    pub keyed: Option<usize>,
}

impl Capabilities {
    pub const SYMMETRIC: Capabilities = Capabilities {
        anonymous: true,
        neutral: true,
        keyed: None,
    };

    pub fn and(self, other: Capabilities) -> Capabilities {
        Capabilities {
            anonymous: self.anonymous && other.anonymous,
            neutral: self.neutral && other.neutral,
            keyed: if self.keyed == other.keyed { self.keyed } else { None },
        }
    }
}

pub trait Mechanism: Send + Sync {
    fn name(&self) -> String;

    fn capabilities(&self) -> Capabilities;

    /// The allocation for `profile`. Table mechanisms return
    /// [`Error::MissingProfile`] for profiles they do not cover.
    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation>;
}

impl<M: Mechanism + ?Sized> Mechanism for Arc<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        (**self).allocate(setting, profile)
    }
}

impl<M: Mechanism + ?Sized> Mechanism for Box<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        (**self).allocate(setting, profile)
    }
}

/// Convex combination `(1-beta)·f + beta·g`.
pub struct Hybrid {
    f: Arc<dyn Mechanism>,
    g: Arc<dyn Mechanism>,
    beta: Rational,
}

impl Hybrid {
    pub fn new(f: Arc<dyn Mechanism>, g: Arc<dyn Mechanism>, beta: Rational) -> Result<Self> {
        if beta.is_negative() || beta > Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "hybrid weight {} outside [0,1]",
                ratio::format(&beta)
            )));
        }
        Ok(Hybrid { f, g, beta })
    }
}

impl Mechanism for Hybrid {
    fn name(&self) -> String {
        format!(
            "hybrid({},{},{})",
            self.f.name(),
            self.g.name(),
            ratio::format(&self.beta)
        )
    }

    fn capabilities(&self) -> Capabilities {
        self.f.capabilities().and(self.g.capabilities())
    }

    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        let x = self.f.allocate(setting, profile)?;
        let y = self.g.allocate(setting, profile)?;
        Ok(x.mix(&y, &self.beta))
    }
}

pub fn hybrid(f: Arc<dyn Mechanism>, g: Arc<dyn Mechanism>, beta: Rational) -> Result<Hybrid> {
    Hybrid::new(f, g, beta)
}

/// Names accepted by [`builtin`].
pub const LIBRARY: [&str; 7] = [
    "rsd",
    "ps",
    "nbm",
    "abm",
    "rank_min",
    "hybrid(rsd,ps,1/2)",
    "hybrid(rsd,abm,1/2)",
];

/// Resolves `rsd`, `ps`, `nbm`, `abm`, `rank_min` and
/// `hybrid(<f>,<g>,<beta>)` (nesting allowed).
pub fn builtin(name: &str, caps: &Caps) -> Result<Arc<dyn Mechanism>> {
    let name = name.trim();
    let m: Arc<dyn Mechanism> = match name {
        "rsd" => Arc::new(RandomSerialDictatorship::new(*caps)),
        "ps" => Arc::new(ProbabilisticSerial),
        "nbm" => Arc::new(NaiveBoston::new(*caps)),
        "abm" => Arc::new(AdaptiveBoston::new(*caps)),
        "rank_min" | "rank-min" => Arc::new(RankMin),
        _ => {
            let inner = name
                .strip_prefix("hybrid(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::InvalidArgument(format!("unknown mechanism `{name}`")))?;
            let parts = split_top_level(inner);
            let [f, g, beta] = parts.as_slice() else {
                return Err(Error::InvalidArgument(format!(
                    "hybrid needs three arguments, got `{inner}`"
                )));
            };
            Arc::new(Hybrid::new(builtin(f, caps)?, builtin(g, caps)?, ratio::parse(beta)?)?)
        }
    };
    Ok(m)
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

/// Precondition shared by the built-in mechanisms.
pub(crate) fn check_profile(setting: &Setting, profile: &Profile) -> Result<()> {
    if profile.len() != setting.n() || profile.prefs().iter().any(|t| t.len() != setting.m()) {
        return Err(Error::InvalidOrder("profile does not match the setting".into()));
    }
    Ok(())
}

/// Calls `visit` on every permutation of `0..n` in lexicographic order.
pub(crate) fn for_each_order(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        visit(&perm);
        if !crate::enumerate::next_permutation(&mut perm) {
            break;
        }
    }
}
