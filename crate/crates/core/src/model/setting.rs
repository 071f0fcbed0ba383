use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label given to the object appended when demand exceeds supply.
pub const DUMMY_LABEL: &str = "_dummy";

/// A problem instance: agent count, ordered objects and their capacities.
///
/// When `n` exceeds total capacity, construction appends one dummy object
/// (always last) carrying the missing capacity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Setting {
    n: usize,
    objects: Vec<String>,
    capacities: Vec<u32>,
    dummy: bool,
}

/// On-disk form `{n, objects, q}`. Dummy objects are never written; they are
/// re-derived on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingDoc {
    pub n: usize,
    pub objects: Vec<String>,
    pub q: Vec<u32>,
}

impl Setting {
    pub fn new(n: usize, objects: Vec<String>, q: Vec<u32>) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::InvalidSetting("object list is empty".into()));
        }
        if n == 0 {
            return Err(Error::InvalidSetting("need at least one agent".into()));
        }
        if objects.len() != q.len() {
            return Err(Error::InvalidSetting(format!(
                "{} objects but {} capacities",
                objects.len(),
                q.len()
            )));
        }
        if let Some(pos) = q.iter().position(|&c| c == 0) {
            return Err(Error::InvalidSetting(format!(
                "capacity of `{}` must be positive",
                objects[pos]
            )));
        }
        for (i, a) in objects.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::InvalidSetting("empty object label".into()));
            }
            if a == DUMMY_LABEL {
                return Err(Error::InvalidSetting(format!("`{DUMMY_LABEL}` is reserved")));
            }
            if objects[..i].contains(a) {
                return Err(Error::InvalidSetting(format!("duplicate object `{a}`")));
            }
        }
        let supply: usize = q.iter().map(|&c| c as usize).sum();
        let mut setting = Setting {
            n,
            objects,
            capacities: q,
            dummy: false,
        };
        if n > supply {
            setting.objects.push(DUMMY_LABEL.to_string());
            setting.capacities.push((n - supply) as u32);
            setting.dummy = true;
        }
        Ok(setting)
    }

    /// `n` agents and `m` unit-capacity objects labelled `a`, `b`, ...
    pub fn unit(n: usize, m: usize) -> Result<Self> {
        Setting::new(n, default_labels(m), vec![1; m])
    }

    /// Resolves names like `3x3unit` (agents x objects, unit capacity).
    pub fn named(name: &str) -> Option<Self> {
        let rest = name.strip_suffix("unit")?;
        let (n, m) = rest.split_once('x')?;
        let (n, m) = (n.parse().ok()?, m.parse().ok()?);
        if m == 0 || m > 26 {
            return None;
        }
        Setting::unit(n, m).ok()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of objects, including a dummy if one was appended.
    pub fn m(&self) -> usize {
        self.objects.len()
    }

    /// Number of objects agents actually rank freely.
    pub fn real_objects(&self) -> usize {
        self.m() - self.dummy as usize
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn capacity(&self, j: usize) -> u32 {
        self.capacities[j]
    }

    pub fn has_dummy(&self) -> bool {
        self.dummy
    }

    pub fn is_dummy(&self, j: usize) -> bool {
        self.dummy && j + 1 == self.m()
    }

    pub fn label(&self, j: usize) -> &str {
        &self.objects[j]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.objects
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| Error::UnknownObject(label.to_string()))
    }

    /// True when every real object has the same capacity, which is what
    /// relabelling objects (neutrality) requires.
    pub fn uniform_capacities(&self) -> bool {
        let real = &self.capacities[..self.real_objects()];
        real.windows(2).all(|w| w[0] == w[1])
    }

    pub fn to_doc(&self) -> SettingDoc {
        let k = self.real_objects();
        SettingDoc {
            n: self.n,
            objects: self.objects[..k].to_vec(),
            q: self.capacities[..k].to_vec(),
        }
    }

    pub fn from_doc(doc: &SettingDoc) -> Result<Self> {
        Setting::new(doc.n, doc.objects.clone(), doc.q.clone())
    }

    /// Same objects with capacities multiplied and agents scaled to match.
    pub fn scaled(&self, factor: u32) -> Result<Self> {
        let doc = self.to_doc();
        Setting::new(
            doc.n * factor as usize,
            doc.objects,
            doc.q.iter().map(|&c| c * factor).collect(),
        )
    }
}

/// `a`, `b`, `c`, ... (then `o26`, `o27`, ... past the alphabet).
pub fn default_labels(m: usize) -> Vec<String> {
    (0..m)
        .map(|j| {
            if j < 26 {
                ((b'a' + j as u8) as char).to_string()
            } else {
                format!("o{j}")
            }
        })
        .collect()
}

/// `make_setting` under its conventional name.
pub fn make_setting(n: usize, objects: &[&str], q: &[u32]) -> Result<Setting> {
    Setting::new(n, objects.iter().map(|s| s.to_string()).collect(), q.to_vec())
}
