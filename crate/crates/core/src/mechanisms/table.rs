//! Mechanisms given by explicit allocation tables, possibly partial.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{Capabilities, Mechanism};
use crate::model::{Allocation, PrefOrder, Profile, Setting, SettingDoc};

/// JSON form of a table mechanism.
///
/// With `keyed_agent = Some(k)` every entry's `profile` holds a single
/// order, agent `k`'s report, and the allocation applies whatever the other
/// agents report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub setting: SettingDoc,
    #[serde(default)]
    pub anonymous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyed_agent: Option<usize>,
    #[serde(default)]
    pub entries: Vec<EntryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub profile: Vec<Vec<String>>,
    pub allocation: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableMechanism {
    name: String,
    setting: Setting,
    anonymous: bool,
    keyed_agent: Option<usize>,
    entries: BTreeMap<Vec<PrefOrder>, Allocation>,
    default: Option<Allocation>,
}

impl TableMechanism {
    /// An empty table. `anonymous` tables store one entry per multiset of
    /// reports; `keyed_agent` tables store one entry per report of that agent.
    pub fn new(setting: Setting, anonymous: bool, keyed_agent: Option<usize>) -> Result<Self> {
        if let Some(k) = keyed_agent {
            if k >= setting.n() {
                return Err(Error::InvalidArgument(format!("keyed agent {k} out of range")));
            }
            if anonymous {
                return Err(Error::InvalidArgument(
                    "a keyed table cannot be anonymous".into(),
                ));
            }
        }
        Ok(TableMechanism {
            name: "table".into(),
            setting,
            anonymous,
            keyed_agent,
            entries: BTreeMap::new(),
            default: None,
        })
    }

    /// A table answering every profile with `allocation`.
    pub fn constant(setting: Setting, allocation: Allocation) -> Result<Self> {
        let mut t = TableMechanism::new(setting, true, None)?;
        t.set_default(allocation)?;
        Ok(t)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn setting(&self) -> &Setting {
        &self.setting
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keyed_agent(&self) -> Option<usize> {
        self.keyed_agent
    }

    pub fn set_default(&mut self, allocation: Allocation) -> Result<()> {
        allocation.validate(&self.setting)?;
        self.default = Some(allocation);
        Ok(())
    }

    /// Stores the allocation for `profile` (or, in a keyed table, for a
    /// profile holding just the keyed agent's report).
    pub fn insert(&mut self, profile: Vec<PrefOrder>, allocation: Allocation) -> Result<()> {
        allocation.validate(&self.setting)?;
        let expected = if self.keyed_agent.is_some() { 1 } else { self.setting.n() };
        if profile.len() != expected || profile.iter().any(|t| t.len() != self.setting.m()) {
            return Err(Error::InvalidOrder("entry profile does not match the setting".into()));
        }
        let (key, allocation) = if self.anonymous {
            let perm = sort_permutation(&profile);
            let key = perm.iter().map(|&i| profile[i].clone()).collect();
            let rows = perm.iter().map(|&i| allocation.row(i).to_vec()).collect();
            (key, Allocation::from_rows(rows))
        } else {
            (profile, allocation)
        };
        self.entries.insert(key, allocation);
        Ok(())
    }

    fn lookup(&self, profile: &Profile) -> Option<Allocation> {
        let prefs = profile.prefs();
        let hit = if let Some(k) = self.keyed_agent {
            self.entries.get(std::slice::from_ref(&prefs[k])).cloned()
        } else if self.anonymous {
            let perm = sort_permutation(prefs);
            let key: Vec<PrefOrder> = perm.iter().map(|&i| prefs[i].clone()).collect();
            self.entries.get(&key).map(|a| {
                let mut rows = vec![Vec::new(); prefs.len()];
                for (slot, &i) in perm.iter().enumerate() {
                    rows[i] = a.row(slot).to_vec();
                }
                Allocation::from_rows(rows)
            })
        } else {
            self.entries.get(prefs).cloned()
        };
        hit.or_else(|| self.default.clone())
    }

    pub fn from_doc(doc: &TableDoc) -> Result<Self> {
        let setting = Setting::from_doc(&doc.setting)?;
        let mut table = TableMechanism::new(setting, doc.anonymous, doc.keyed_agent)?;
        if let Some(name) = &doc.name {
            table.name = name.clone();
        }
        if let Some(rows) = &doc.default {
            table.default = Some(Allocation::parse_strings(&table.setting, rows, "default")?);
        }
        for (e, entry) in doc.entries.iter().enumerate() {
            let label = format!("entry {}", e + 1);
            let profile = entry
                .profile
                .iter()
                .map(|t| PrefOrder::from_labels(&table.setting, t))
                .collect::<Result<Vec<_>>>()
                .map_err(|err| Error::parse(&label, err.to_string()))?;
            let allocation = Allocation::parse_strings(&table.setting, &entry.allocation, &label)?;
            table
                .insert(profile, allocation)
                .map_err(|err| Error::parse(&label, err.to_string()))?;
        }
        Ok(table)
    }

    pub fn to_doc(&self) -> TableDoc {
        let real = self.setting.real_objects();
        TableDoc {
            name: Some(self.name.clone()),
            setting: self.setting.to_doc(),
            anonymous: self.anonymous,
            keyed_agent: self.keyed_agent,
            entries: self
                .entries
                .iter()
                .map(|(key, a)| EntryDoc {
                    profile: key
                        .iter()
                        .map(|t| t.labels(&self.setting)[..real].to_vec())
                        .collect(),
                    allocation: a.to_strings(),
                })
                .collect(),
            default: self.default.as_ref().map(Allocation::to_strings),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableDoc = serde_json::from_str(text)?;
        TableMechanism::from_doc(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("table documents serialize")
    }
}

/// Stable permutation sorting `prefs` ascending.
fn sort_permutation(prefs: &[PrefOrder]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..prefs.len()).collect();
    perm.sort_by(|&a, &b| prefs[a].cmp(&prefs[b]));
    perm
}

impl Mechanism for TableMechanism {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            anonymous: self.anonymous,
            neutral: false,
            keyed: self.keyed_agent,
        }
    }

    fn allocate(&self, setting: &Setting, profile: &Profile) -> Result<Allocation> {
        if *setting != self.setting {
            return Err(Error::InvalidArgument("table queried with a different setting".into()));
        }
        self.lookup(profile).ok_or(Error::MissingProfile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio::ratio;

    fn order(s: &Setting, t: &str) -> PrefOrder {
        PrefOrder::parse(s, t).unwrap()
    }

    fn row_alloc(v: &[(i64, i64)]) -> Allocation {
        Allocation::from_rows(vec![v.iter().map(|&(p, q)| ratio(p, q)).collect()])
    }

    #[test]
    fn single_agent_fragment() {
        let s = Setting::unit(1, 4).unwrap();
        let mut t = TableMechanism::new(s.clone(), true, None).unwrap();
        t.insert(vec![order(&s, "a>b>c>d")], row_alloc(&[(0, 1), (1, 2), (0, 1), (1, 2)]))
            .unwrap();
        t.insert(vec![order(&s, "a>c>b>d")], row_alloc(&[(1, 2), (0, 1), (1, 2), (0, 1)]))
            .unwrap();
        let p = Profile::parse(&s, &["a>c>b>d"]).unwrap();
        assert_eq!(t.allocate(&s, &p).unwrap().get(0, 0), &ratio(1, 2));
        let missing = Profile::parse(&s, &["d>c>b>a"]).unwrap();
        assert!(matches!(t.allocate(&s, &missing), Err(Error::MissingProfile)));
        let back = TableMechanism::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn anonymous_lookup_permutes_rows() {
        let s = Setting::unit(2, 2).unwrap();
        let mut t = TableMechanism::new(s.clone(), true, None).unwrap();
        let rows = vec![vec![ratio(1, 1), ratio(0, 1)], vec![ratio(0, 1), ratio(1, 1)]];
        t.insert(vec![order(&s, "b>a"), order(&s, "a>b")], Allocation::from_rows(rows))
            .unwrap();
        let p = Profile::parse(&s, &["a>b", "b>a"]).unwrap();
        let a = t.allocate(&s, &p).unwrap();
        assert_eq!(a.get(0, 1), &ratio(1, 1));
        assert_eq!(a.get(1, 0), &ratio(1, 1));
    }

    #[test]
    fn constant_table() {
        let s = Setting::unit(3, 3).unwrap();
        let t = TableMechanism::constant(s.clone(), Allocation::uniform(&s)).unwrap();
        let p = Profile::parse(&s, &["c>b>a", "a>b>c", "b>a>c"]).unwrap();
        assert_eq!(t.allocate(&s, &p).unwrap(), Allocation::uniform(&s));
        let back = TableMechanism::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn keyed_table() {
        let s = Setting::unit(2, 3).unwrap();
        let mut t = TableMechanism::new(s.clone(), false, Some(0)).unwrap();
        let rows = vec![
            vec![ratio(1, 2), ratio(1, 2), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 2), ratio(1, 2)],
        ];
        t.insert(vec![order(&s, "a>b>c")], Allocation::from_rows(rows.clone())).unwrap();
        for other in ["a>b>c", "c>b>a"] {
            let p = Profile::parse(&s, &["a>b>c", other]).unwrap();
            assert_eq!(t.allocate(&s, &p).unwrap().rows(), rows.as_slice());
        }
        let back = TableMechanism::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn parse_errors_name_the_entry() {
        let doc = r#"{
            "setting": {"n": 1, "objects": ["a", "b"], "q": [1, 1]},
            "anonymous": true,
            "entries": [
                {"profile": [["a", "b"]], "allocation": [["1/2", "1/2"]]},
                {"profile": [["b", "a"]], "allocation": [["1/2", "x"]]}
            ]
        }"#;
        let err = TableMechanism::from_json(doc).unwrap_err().to_string();
        assert!(err.contains("entry 2"), "{err}");

        let bad_object = doc.replace(r#"[["b", "a"]]"#, r#"[["b", "z"]]"#);
        let err = TableMechanism::from_json(&bad_object).unwrap_err().to_string();
        assert!(err.contains("entry 2") && err.contains('z'), "{err}");

        let bad_row = doc.replace(r#""1/2", "x""#, r#""1/2", "1/3""#);
        let err = TableMechanism::from_json(&bad_row).unwrap_err().to_string();
        assert!(err.contains("entry 2"), "{err}");
    }
}
