//! Instance and assignment representations shared by every algorithm.
//!
//! Processing times are nonnegative integers; a job that cannot run on a
//! machine is marked with an explicit infeasible sentinel (`None`), never a
//! huge finite number. Uniform instances are stored as base times plus
//! rational speeds and carry a derived integer matrix in units of `1/scale`,
//! so all load arithmetic stays exact.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

/// Exact rational scalar used throughout the crate.
pub type Rat = BigRational;

/// Integer as a rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Unsigned integer as a rational.
pub fn rat_u(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `num/den` as a rational. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Unrelated,
    Restricted,
    Uniform,
    Identical,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Unrelated => "unrelated",
            Kind::Restricted => "restricted",
            Kind::Uniform => "uniform",
            Kind::Identical => "identical",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    /// Dimensions or entries do not form a valid instance.
    Malformed(String),
    /// An assignment maps a job to a machine where it cannot run.
    InfeasiblePairAssigned { machine: usize, job: usize },
    /// An assignment has the wrong length or an out-of-range machine.
    BadAssignment(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Malformed(msg) => write!(f, "malformed instance: {msg}"),
            ModelError::InfeasiblePairAssigned { machine, job } => {
                write!(f, "job {job} assigned to machine {machine} where it cannot run")
            }
            ModelError::BadAssignment(msg) => write!(f, "bad assignment: {msg}"),
        }
    }
}

impl std::error::Error for ModelError {}

/// A scheduling instance: `m` machines, `n` jobs, and an `m x n` matrix of
/// processing times with `None` marking machine-job pairs that are not
/// allowed.
///
/// Instances are immutable once constructed and safe to share across
/// concurrent solver runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    kind: Kind,
    m: usize,
    n: usize,
    p: Vec<Vec<Option<u64>>>,
    /// All matrix entries are integers in units of `1/scale`. This is 1 for
    /// every kind except uniform, where it clears the speed denominators.
    scale: u64,
    base_times: Option<Vec<u64>>,
    speeds: Option<Vec<(u64, u64)>>,
}

impl Instance {
    pub fn unrelated(p: Vec<Vec<Option<u64>>>) -> Result<Self, ModelError> {
        Self::checked(Kind::Unrelated, p, 1, None, None)
    }

    /// Restricted assignment: every finite entry in a column must equal that
    /// job's base time.
    pub fn restricted(p: Vec<Vec<Option<u64>>>) -> Result<Self, ModelError> {
        let inst = Self::checked(Kind::Restricted, p, 1, None, None)?;
        for j in 0..inst.n {
            let finite: Vec<u64> = (0..inst.m).filter_map(|i| inst.p[i][j]).collect();
            if finite.windows(2).any(|w| w[0] != w[1]) {
                return Err(ModelError::Malformed(format!(
                    "restricted instance has unequal finite times in column {j}"
                )));
            }
        }
        Ok(inst)
    }

    /// Identical machines: one row of job times replicated across `m` machines.
    pub fn identical(m: usize, jobs: Vec<u64>) -> Result<Self, ModelError> {
        let row: Vec<Option<u64>> = jobs.iter().map(|&t| Some(t)).collect();
        Self::checked(Kind::Identical, vec![row; m], 1, None, None)
    }

    /// Uniform machines from base times and rational speeds `(num, den)`.
    /// The matrix entry for machine `i`, job `j` is `p_j / s_i`, stored as an
    /// integer in units of `1/scale` where `scale` is the lcm of the speed
    /// numerators.
    pub fn uniform(base_times: Vec<u64>, speeds: Vec<(u64, u64)>) -> Result<Self, ModelError> {
        if speeds.is_empty() {
            return Err(ModelError::Malformed("uniform instance needs at least one machine".into()));
        }
        if speeds.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(ModelError::Malformed("speeds must be positive rationals".into()));
        }
        if base_times.iter().any(|&t| t == 0) {
            return Err(ModelError::Malformed("base times must be positive".into()));
        }
        let scale = speeds.iter().map(|&(a, _)| a).fold(1u64, lcm);
        let m = speeds.len();
        let mut p = Vec::with_capacity(m);
        for &(a, b) in &speeds {
            // p_j / (a/b) = p_j * b / a; times scale gives p_j * b * (scale/a).
            let factor = b
                .checked_mul(scale / a)
                .ok_or_else(|| ModelError::Malformed("speed scaling overflow".into()))?;
            let row: Vec<Option<u64>> = base_times
                .iter()
                .map(|&t| t.checked_mul(factor).map(Some).unwrap_or(None))
                .collect();
            if row.iter().any(|e| e.is_none()) {
                return Err(ModelError::Malformed("scaled processing time overflow".into()));
            }
            p.push(row);
        }
        Self::checked(Kind::Uniform, p, scale, Some(base_times), Some(speeds))
    }

    fn checked(
        kind: Kind,
        p: Vec<Vec<Option<u64>>>,
        scale: u64,
        base_times: Option<Vec<u64>>,
        speeds: Option<Vec<(u64, u64)>>,
    ) -> Result<Self, ModelError> {
        let m = p.len();
        if m == 0 {
            return Err(ModelError::Malformed("need at least one machine".into()));
        }
        let n = p[0].len();
        if p.iter().any(|row| row.len() != n) {
            return Err(ModelError::Malformed("ragged processing-time matrix".into()));
        }
        for j in 0..n {
            if (0..m).all(|i| p[i][j].is_none()) {
                return Err(ModelError::Malformed(format!("job {j} runs on no machine")));
            }
        }
        if kind == Kind::Identical {
            let first = &p[0];
            if p.iter().any(|row| row != first) || first.iter().any(|e| e.is_none()) {
                return Err(ModelError::Malformed(
                    "identical instance needs equal, finite rows".into(),
                ));
            }
        }
        Ok(Instance { kind, m, n, p, scale, base_times, speeds })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn machines(&self) -> usize {
        self.m
    }

    pub fn jobs(&self) -> usize {
        self.n
    }

    /// Processing time of job `j` on machine `i` in units of `1/scale`,
    /// or `None` when the pair is not allowed.
    pub fn time(&self, i: usize, j: usize) -> Option<u64> {
        self.p[i][j]
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn base_times(&self) -> Option<&[u64]> {
        self.base_times.as_deref()
    }

    pub fn speeds(&self) -> Option<&[(u64, u64)]> {
        self.speeds.as_deref()
    }

    /// Machines on which job `j` may run, ascending.
    pub fn feasible_machines(&self, j: usize) -> Vec<usize> {
        (0..self.m).filter(|&i| self.p[i][j].is_some()).collect()
    }

    /// Sum of all finite matrix entries (scaled units).
    pub fn total_finite_time(&self) -> u64 {
        self.p.iter().flatten().flatten().sum()
    }

    /// Largest finite entry (scaled units); 0 when there are no jobs.
    pub fn max_finite_time(&self) -> u64 {
        self.p.iter().flatten().flatten().copied().max().unwrap_or(0)
    }

    /// A value in true time units from a scaled one.
    pub fn unscale(&self, v: u64) -> Rat {
        Rat::new(BigInt::from(v), BigInt::from(self.scale))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// A total assignment of jobs to machines: `sigma[j]` is job `j`'s machine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub sigma: Vec<usize>,
}

impl Assignment {
    pub fn new(sigma: Vec<usize>) -> Self {
        Assignment { sigma }
    }

    pub fn empty() -> Self {
        Assignment { sigma: Vec::new() }
    }

    pub fn machine_of(&self, j: usize) -> usize {
        self.sigma[j]
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Exact per-machine loads of a feasible assignment, in scaled units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadProfile {
    pub load: Vec<u64>,
    pub makespan: u64,
    total: u64,
    m: usize,
    scale: u64,
}

impl LoadProfile {
    /// Sum of all loads divided by the machine count, in scaled units.
    pub fn avg_load(&self) -> Rat {
        Rat::new(BigInt::from(self.total), BigInt::from(self.m))
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Makespan in true time units.
    pub fn makespan_true(&self) -> Rat {
        Rat::new(BigInt::from(self.makespan), BigInt::from(self.scale))
    }
}

/// Exact loads of `a` under `inst`. Fails if the assignment is not total and
/// feasible.
pub fn load_profile(inst: &Instance, a: &Assignment) -> Result<LoadProfile, ModelError> {
    if a.sigma.len() != inst.jobs() {
        return Err(ModelError::BadAssignment(format!(
            "assignment covers {} jobs, instance has {}",
            a.sigma.len(),
            inst.jobs()
        )));
    }
    let mut load = vec![0u64; inst.machines()];
    for (j, &i) in a.sigma.iter().enumerate() {
        if i >= inst.machines() {
            return Err(ModelError::BadAssignment(format!("machine {i} out of range")));
        }
        match inst.time(i, j) {
            Some(t) => load[i] += t,
            None => return Err(ModelError::InfeasiblePairAssigned { machine: i, job: j }),
        }
    }
    let makespan = load.iter().copied().max().unwrap_or(0);
    let total = load.iter().sum();
    Ok(LoadProfile { load, makespan, total, m: inst.machines(), scale: inst.scale() })
}

/// Distinct finite processing times of an instance together with the
/// per-threshold feasibility fractions
/// `phi[t] = min_j |{i : p_ij <= p_t}| / m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityProfile {
    pub thresholds: Vec<u64>,
    pub phi: Vec<Rat>,
}

pub fn feasibility_profile(inst: &Instance) -> FeasibilityProfile {
    let distinct: BTreeSet<u64> = inst
        .feasible_entries()
        .collect();
    let thresholds: Vec<u64> = distinct.into_iter().collect();
    let mut phi = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let mut min_frac: Option<Rat> = None;
        for j in 0..inst.jobs() {
            let count = (0..inst.machines())
                .filter(|&i| matches!(inst.time(i, j), Some(p) if p <= t))
                .count();
            let frac = Rat::new(BigInt::from(count), BigInt::from(inst.machines()));
            if min_frac.as_ref().map_or(true, |m| frac < *m) {
                min_frac = Some(frac);
            }
        }
        phi.push(min_frac.unwrap_or_else(Rat::one));
    }
    FeasibilityProfile { thresholds, phi }
}

impl Instance {
    fn feasible_entries(&self) -> impl Iterator<Item = u64> + '_ {
        self.p.iter().flatten().flatten().copied()
    }
}

// ---------------------------------------------------------------------------
// JSON instance schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    kind: Kind,
    m: usize,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<Vec<Vec<Option<u64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base_times: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    speeds: Option<Vec<(u64, u64)>>,
}

impl Instance {
    pub fn to_json(&self) -> String {
        let doc = match self.kind {
            Kind::Uniform => InstanceJson {
                kind: self.kind,
                m: self.m,
                n: self.n,
                p: None,
                base_times: self.base_times.clone(),
                speeds: self.speeds.clone(),
            },
            _ => InstanceJson {
                kind: self.kind,
                m: self.m,
                n: self.n,
                p: Some(self.p.clone()),
                base_times: None,
                speeds: None,
            },
        };
        serde_json::to_string(&doc).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: InstanceJson =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        let inst = match doc.kind {
            Kind::Uniform => {
                let base = doc
                    .base_times
                    .ok_or_else(|| ModelError::Malformed("uniform instance needs base_times".into()))?;
                let speeds = doc
                    .speeds
                    .ok_or_else(|| ModelError::Malformed("uniform instance needs speeds".into()))?;
                Instance::uniform(base, speeds)?
            }
            _ => {
                let p = doc
                    .p
                    .ok_or_else(|| ModelError::Malformed("instance needs a p matrix".into()))?;
                match doc.kind {
                    Kind::Unrelated => Instance::unrelated(p)?,
                    Kind::Restricted => Instance::restricted(p)?,
                    Kind::Identical => {
                        let first = p.first().cloned().unwrap_or_default();
                        let jobs: Vec<u64> = first
                            .into_iter()
                            .collect::<Option<Vec<u64>>>()
                            .ok_or_else(|| {
                                ModelError::Malformed("identical instance with a null entry".into())
                            })?;
                        Instance::identical(p.len(), jobs)?
                    }
                    Kind::Uniform => unreachable!(),
                }
            }
        };
        if inst.machines() != doc.m || inst.jobs() != doc.n {
            return Err(ModelError::Malformed("declared m/n do not match the matrix".into()));
        }
        Ok(inst)
    }
}

/// `phi` must be nondecreasing; used by tests and the report verifier.
pub fn phi_is_monotone(profile: &FeasibilityProfile) -> bool {
    profile.phi.windows(2).all(|w| w[0] <= w[1])
}
