use crate::error::{Error, Result};
use crate::model::{PrefOrder, Setting};

/// One reported order per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile(Vec<PrefOrder>);

impl Profile {
    pub fn new(setting: &Setting, prefs: Vec<PrefOrder>) -> Result<Self> {
        if prefs.len() != setting.n() {
            return Err(Error::InvalidOrder(format!(
                "profile has {} orders for {} agents",
                prefs.len(),
                setting.n()
            )));
        }
        if let Some(t) = prefs.iter().find(|t| t.len() != setting.m()) {
            return Err(Error::InvalidOrder(format!(
                "order of length {} in a setting with {} objects",
                t.len(),
                setting.m()
            )));
        }
        Ok(Profile(prefs))
    }

    pub(crate) fn from_vec_unchecked(prefs: Vec<PrefOrder>) -> Self {
        Profile(prefs)
    }

    /// Parses one order per agent, e.g. `["a>b>c", "b>a>c"]`.
    pub fn parse<S: AsRef<str>>(setting: &Setting, orders: &[S]) -> Result<Self> {
        let prefs = orders
            .iter()
            .map(|t| PrefOrder::parse(setting, t.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Profile::new(setting, prefs)
    }

    pub fn from_labels(setting: &Setting, orders: &[Vec<String>]) -> Result<Self> {
        let prefs = orders
            .iter()
            .map(|t| PrefOrder::from_labels(setting, t))
            .collect::<Result<Vec<_>>>()?;
        Profile::new(setting, prefs)
    }

    pub fn prefs(&self) -> &[PrefOrder] {
        &self.0
    }

    pub fn agent(&self, i: usize) -> &PrefOrder {
        &self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The same profile with agent `i` reporting `t`.
    pub fn with_report(&self, i: usize, t: PrefOrder) -> Profile {
        let mut v = self.0.clone();
        v[i] = t;
        Profile(v)
    }

    pub fn labels(&self, setting: &Setting) -> Vec<Vec<String>> {
        self.0.iter().map(|t| t.labels(setting)).collect()
    }

    pub fn display(&self, setting: &Setting) -> String {
        self.0
            .iter()
            .map(|t| t.display(setting).to_string())
            .collect::<Vec<_>>()
            .join(" | ")
    }
}
