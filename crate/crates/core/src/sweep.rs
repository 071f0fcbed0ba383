//! Shared machinery for exhaustive checks: deviation jobs, per-job row
//! caches and deterministic chunked parallelism.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::enumerate::{contexts, partition, Caps, Symmetry, TypeSpace};
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::model::{PrefOrder, Profile, Rational, Setting};

/// Which part of the deviation space a check covers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Scope {
    /// Every agent, every profile and every report of the setting.
    #[default]
    Full,
    /// One agent facing fixed reports of the others, with the truthful type
    /// ranging over `truths` only.
    Fixed {
        agent: usize,
        profile: Profile,
        truths: Vec<PrefOrder>,
    },
    /// A single constraint: the agent's truthful report in `profile`
    /// against one misreport.
    Single {
        agent: usize,
        profile: Profile,
        misreport: PrefOrder,
    },
}

impl Scope {
    /// Truths along the canonical transition from the agent's report in
    /// `profile` to `target`.
    pub fn transition(agent: usize, profile: Profile, target: &PrefOrder) -> Result<Scope> {
        let truths = profile.agent(agent).canonical_transition(target)?;
        Ok(Scope::Fixed {
            agent,
            profile,
            truths,
        })
    }
}

/// How a sweep is carried out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOptions {
    /// `None` selects the strongest reduction the mechanism declares.
    pub symmetry: Option<Symmetry>,
    pub workers: usize,
    pub caps: Caps,
    pub scope: Scope,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            symmetry: None,
            workers: 1,
            caps: Caps::default(),
            scope: Scope::Full,
        }
    }
}

impl CheckOptions {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = Some(symmetry);
        self
    }

    pub fn with_scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }
}

/// Constraint counts of a (possibly partial) check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub evaluated: u64,
    /// Constraints touching a profile the mechanism does not cover.
    pub skipped: u64,
}

impl Coverage {
    pub fn is_full(&self) -> bool {
        self.skipped == 0
    }

    pub fn status(&self) -> &'static str {
        if self.is_full() {
            "full"
        } else {
            "partial"
        }
    }

    pub(crate) fn add(&mut self, other: Coverage) {
        self.evaluated += other.evaluated;
        self.skipped += other.skipped;
    }
}

/// Which truthful reports a job covers.
#[derive(Debug, Clone)]
pub(crate) enum Truths {
    All,
    Some(Vec<usize>),
}

/// Agent `agent` deviating while the others report `others` (type indices;
/// the agent's own slot is ignored).
#[derive(Debug, Clone)]
pub(crate) struct Job {
    pub agent: usize,
    pub others: Vec<usize>,
    pub truths: Truths,
    /// Restricts misreports to this type.
    pub only: Option<usize>,
}

/// Everything a sweep needs, resolved once.
pub(crate) struct Plan {
    pub space: TypeSpace,
    pub symmetry: Symmetry,
    pub jobs: Vec<Job>,
    pub workers: usize,
}

impl Plan {
    pub fn new(mech: &dyn Mechanism, setting: &Setting, options: &CheckOptions) -> Result<Plan> {
        let space = TypeSpace::new(setting, &options.caps)?;
        match &options.scope {
            Scope::Full => {
                let symmetry = match options.symmetry {
                    Some(s) => {
                        s.validate(mech.capabilities(), setting)?;
                        s
                    }
                    None => Symmetry::strongest(mech.capabilities(), setting),
                };
                // Refuse settings whose unreduced space is beyond the cap.
                options.caps.check_profiles(setting)?;
                let identity = space
                    .index_of(&PrefOrder::identity(setting.m()))
                    .expect("identity is a type");
                let jobs = contexts(setting, &space, symmetry, mech.capabilities().keyed.unwrap_or(0))
                    .into_iter()
                    .map(|c| Job {
                        agent: c.agent,
                        others: c.others,
                        truths: if c.identity_truth_only {
                            Truths::Some(vec![identity])
                        } else {
                            Truths::All
                        },
                        only: None,
                    })
                    .collect();
                Ok(Plan {
                    space,
                    symmetry,
                    jobs,
                    workers: options.workers.max(1),
                })
            }
            Scope::Fixed {
                agent,
                profile,
                truths,
            } => Self::fixed(space, setting, *agent, profile, truths, None),
            Scope::Single {
                agent,
                profile,
                misreport,
            } => {
                if *agent >= setting.n() {
                    return Err(Error::InvalidArgument("scope does not match the setting".into()));
                }
                let truths = [profile.agent(*agent).clone()];
                Self::fixed(space, setting, *agent, profile, &truths, Some(misreport))
            }
        }
    }

    fn fixed(
        space: TypeSpace,
        setting: &Setting,
        agent: usize,
        profile: &Profile,
        truths: &[PrefOrder],
        misreport: Option<&PrefOrder>,
    ) -> Result<Plan> {
        if agent >= setting.n() || profile.len() != setting.n() {
            return Err(Error::InvalidArgument("scope does not match the setting".into()));
        }
        let index = |t: &PrefOrder| {
            space
                .index_of(t)
                .ok_or_else(|| Error::InvalidOrder("scope order is not a type of the setting".into()))
        };
        let others = profile.prefs().iter().map(index).collect::<Result<Vec<_>>>()?;
        let truths = truths.iter().map(index).collect::<Result<Vec<_>>>()?;
        let only = misreport.map(index).transpose()?;
        Ok(Plan {
            symmetry: Symmetry::None,
            jobs: vec![Job {
                agent,
                others,
                truths: Truths::Some(truths),
                only,
            }],
            workers: 1,
            space,
        })
    }

    /// Whether `u` is a misreport the job considers.
    pub fn allows(&self, job: &Job, u: usize) -> bool {
        job.only.is_none_or(|o| o == u)
    }

    pub fn truths<'a>(&'a self, job: &'a Job) -> Box<dyn Iterator<Item = usize> + 'a> {
        match &job.truths {
            Truths::All => Box::new(0..self.space.len()),
            Truths::Some(v) => Box::new(v.iter().copied()),
        }
    }

    /// The profile in which the job's agent reports type `t`.
    pub fn profile(&self, job: &Job, t: usize) -> Profile {
        let prefs = job
            .others
            .iter()
            .enumerate()
            .map(|(i, &o)| self.space.get(if i == job.agent { t } else { o }).clone())
            .collect();
        Profile::from_vec_unchecked(prefs)
    }

    /// Runs `work` on contiguous chunks of jobs, one thread per chunk, and
    /// returns the per-chunk results in job order.
    pub fn run_chunks<T: Send>(&self, work: impl Fn(usize, &[Job]) -> T + Sync) -> Vec<T> {
        let chunks = partition(0..self.jobs.len(), self.workers);
        if chunks.len() == 1 {
            return vec![work(0, &self.jobs)];
        }
        let slices: Vec<&[Job]> = {
            let mut start = 0;
            chunks
                .iter()
                .map(|c| {
                    let s = &self.jobs[start..start + c.len()];
                    start += c.len();
                    s
                })
                .collect()
        };
        std::thread::scope(|scope| {
            let handles: Vec<_> = slices
                .iter()
                .enumerate()
                .map(|(c, jobs)| {
                    let work = &work;
                    scope.spawn(move || work(c, jobs))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    }
}

/// Lazily evaluated rows of the deviating agent, one slot per type.
pub(crate) struct RowCache<'a> {
    mech: &'a dyn Mechanism,
    setting: &'a Setting,
    plan: &'a Plan,
    job: &'a Job,
    rows: Vec<Option<Option<Vec<Rational>>>>,
}

impl<'a> RowCache<'a> {
    pub fn new(mech: &'a dyn Mechanism, setting: &'a Setting, plan: &'a Plan, job: &'a Job) -> Self {
        RowCache {
            mech,
            setting,
            plan,
            job,
            rows: vec![None; plan.space.len()],
        }
    }

    fn ensure(&mut self, t: usize) -> Result<()> {
        if self.rows[t].is_none() {
            let profile = self.plan.profile(self.job, t);
            let row = match self.mech.allocate(self.setting, &profile) {
                Ok(a) => Some(a.into_rows().swap_remove(self.job.agent)),
                Err(Error::MissingProfile) => None,
                Err(e) => return Err(e),
            };
            self.rows[t] = Some(row);
        }
        Ok(())
    }

    /// Rows for `t` and `u`, or `None` if either is uncovered.
    pub fn pair(&mut self, t: usize, u: usize) -> Result<Option<(&[Rational], &[Rational])>> {
        self.ensure(t)?;
        self.ensure(u)?;
        let x = self.rows[t].as_ref().unwrap().as_deref();
        let y = self.rows[u].as_ref().unwrap().as_deref();
        Ok(x.zip(y))
    }
}

/// Smallest chunk index that has reported a witness, shared across workers
/// so later chunks can stop early.
pub(crate) struct FirstHit(AtomicUsize);

impl FirstHit {
    pub fn new() -> Self {
        FirstHit(AtomicUsize::new(usize::MAX))
    }

    pub fn record(&self, chunk: usize) {
        self.0.fetch_min(chunk, Ordering::Relaxed);
    }

    /// Whether a chunk before `chunk` already holds a witness.
    pub fn beaten(&self, chunk: usize) -> bool {
        self.0.load(Ordering::Relaxed) < chunk
    }
}
