//! Shared input type for reoptimization: an old instance with its running
//! assignment, a new instance derived from it, and the 0/1 transition-cost
//! rule (a job pays one unit iff it is new or changes machine).
//!
//! Jobs carry stable identifiers so the cost of a candidate assignment for
//! the new instance is a recount, never bookkeeping. Machines keep their
//! index across instances; when machines are removed, the highest indices
//! disappear.


use serde::{Deserialize, Serialize};

use crate::model::{load_profile, Assignment, Instance, ModelError, Rat};
use crate::oracle::{self, OracleError};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReoptInput {
    pub old: Instance,
    pub new: Instance,
    /// Machine of each old job, parallel to `job_ids_old`.
    pub sigma0: Vec<usize>,
    pub job_ids_old: Vec<u64>,
    pub job_ids_new: Vec<u64>,
    /// Upper bound on `s_max / s_min` for uniform inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_ratio_bound: Option<(u64, u64)>,
}

// Instance itself serializes through its JSON schema.
impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let value: serde_json::Value =
            serde_json::from_str(&self.to_json()).map_err(serde::ser::Error::custom)?;
        value.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        Instance::from_json(&value.to_string()).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReoptError {
    Malformed(String),
    Model(ModelError),
    Oracle(OracleError),
    ConfigurationBudgetExceeded { configurations: usize },
    StateBudgetExceeded { states: usize },
    /// No relaxed packing of the rounded pieces exists anywhere in the
    /// allowed target window.
    NoPath,
    /// The relaxed packing failed to absorb an item; this contradicts the
    /// capacity accounting and means a bug, not an unlucky input.
    RelaxedPackingFailed { job: usize },
}

impl std::fmt::Display for ReoptError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReoptError::Malformed(m) => write!(f, "malformed reopt input: {m}"),
            ReoptError::Model(e) => write!(f, "{e}"),
            ReoptError::Oracle(e) => write!(f, "{e}"),
            ReoptError::ConfigurationBudgetExceeded { configurations } => {
                write!(f, "configuration budget exceeded at {configurations}")
            }
            ReoptError::StateBudgetExceeded { states } => {
                write!(f, "state budget exceeded at {states}")
            }
            ReoptError::NoPath => write!(f, "no relaxed packing at any allowed target"),
            ReoptError::RelaxedPackingFailed { job } => {
                write!(f, "relaxed packing failed to place job {job}")
            }
        }
    }
}

impl std::error::Error for ReoptError {}

impl From<ModelError> for ReoptError {
    fn from(e: ModelError) -> Self {
        ReoptError::Model(e)
    }
}

impl From<OracleError> for ReoptError {
    fn from(e: OracleError) -> Self {
        ReoptError::Oracle(e)
    }
}

impl ReoptInput {
    pub fn validate(&self) -> Result<(), ReoptError> {
        if self.sigma0.len() != self.old.jobs() || self.job_ids_old.len() != self.old.jobs() {
            return Err(ReoptError::Malformed("old-side lengths disagree".into()));
        }
        if self.job_ids_new.len() != self.new.jobs() {
            return Err(ReoptError::Malformed("new-side lengths disagree".into()));
        }
        let mut ids = self.job_ids_old.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.job_ids_old.len() {
            return Err(ReoptError::Malformed("duplicate old job ids".into()));
        }
        let mut ids = self.job_ids_new.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.job_ids_new.len() {
            return Err(ReoptError::Malformed("duplicate new job ids".into()));
        }
        load_profile(&self.old, &Assignment::new(self.sigma0.clone()))?;
        Ok(())
    }

    /// Machine the job held in the old schedule, by stable id; `None` for
    /// jobs appearing for the first time. The returned index may exceed the
    /// new machine count when that machine was removed.
    pub fn old_machine_of(&self, new_job: usize) -> Option<usize> {
        let id = self.job_ids_new[new_job];
        self.job_ids_old
            .iter()
            .position(|&x| x == id)
            .map(|old_idx| self.sigma0[old_idx])
    }

    /// Unit transition cost of placing `new_job` on `machine`.
    pub fn unit_cost(&self, new_job: usize, machine: usize) -> u64 {
        match self.old_machine_of(new_job) {
            Some(i) if i == machine => 0,
            _ => 1,
        }
    }

    /// Recounts moved and new jobs under a candidate assignment.
    pub fn transition_cost(&self, a: &Assignment) -> u64 {
        a.sigma
            .iter()
            .enumerate()
            .map(|(j, &i)| self.unit_cost(j, i))
            .sum()
    }

    /// Per-machine mapping from old content to new job indices: entry `i`
    /// lists the new jobs whose old machine was `i` (removed machines get
    /// entries past the new count).
    pub fn old_content_by_machine(&self) -> Vec<Vec<usize>> {
        let slots = self.old.machines().max(self.new.machines());
        let mut content = vec![Vec::new(); slots];
        for j in 0..self.new.jobs() {
            if let Some(i) = self.old_machine_of(j) {
                content[i].push(j);
            }
        }
        content
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reopt input serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReoptError> {
        let input: ReoptInput =
            serde_json::from_str(text).map_err(|e| ReoptError::Malformed(e.to_string()))?;
        input.validate()?;
        Ok(input)
    }
}

/// Minimum transition cost over all assignments of the new instance with
/// makespan at most `ratio` times the optimum, by exhaustive enumeration.
pub fn exact_reopt(input: &ReoptInput, ratio: &Rat) -> Result<u64, OracleError> {
    // Memoize the per-job old machine to keep the closure cheap.
    let old_machine: Vec<Option<usize>> =
        (0..input.new.jobs()).map(|j| input.old_machine_of(j)).collect();
    oracle::exact_min_cost_within(&input.new, ratio, |j, i| match old_machine[j] {
        Some(prev) if prev == i => 0,
        _ => 1,
    })
}

/// Convenience constructor used by generators and tests: identical ids by
/// position, machines shared by index.
pub fn reopt_input(
    old: Instance,
    new: Instance,
    sigma0: Vec<usize>,
    job_ids_old: Vec<u64>,
    job_ids_new: Vec<u64>,
) -> Result<ReoptInput, ReoptError> {
    let input = ReoptInput {
        old,
        new,
        sigma0,
        job_ids_old,
        job_ids_new,
        speed_ratio_bound: None,
    };
    input.validate()?;
    Ok(input)
}

/// Caches the per-job old machine once; used by the inner loops of both
/// reoptimizers.
#[derive(Clone, Debug)]
pub struct OldPlacement {
    pub machine_of: Vec<Option<usize>>,
}

impl OldPlacement {
    pub fn of(input: &ReoptInput) -> Self {
        OldPlacement {
            machine_of: (0..input.new.jobs()).map(|j| input.old_machine_of(j)).collect(),
        }
    }
}
