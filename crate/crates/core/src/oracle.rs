//! Exhaustive reference solvers used to verify every stated load bound at
//! desk scale. These enumerate, they do not approximate; a hard state cap
//! keeps accidental blowups loud.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::model::{Assignment, Instance, Rat};

/// Hard cap on enumerated states.
pub const STATE_CAP: u64 = 20_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleError {
    BudgetExceeded { states: u64 },
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleError::BudgetExceeded { states } => {
                write!(f, "oracle budget exceeded: {states} states")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Optimal makespan plus the minimal total load among optimal assignments,
/// produced by exhaustive enumeration only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    /// Minimum makespan in scaled units.
    pub t_opt: u64,
    /// Minimum total load over assignments achieving `t_opt`.
    pub total_opt: u64,
    pub witness: Assignment,
    machines: usize,
}

impl OracleResult {
    /// Minimum average load among makespan-optimal assignments, scaled units.
    pub fn l_opt(&self) -> Rat {
        Rat::new(BigInt::from(self.total_opt), BigInt::from(self.machines))
    }
}

fn state_count(inst: &Instance) -> u64 {
    let mut states = 1u64;
    for j in 0..inst.jobs() {
        let options = inst.feasible_machines(j).len() as u64;
        states = states.saturating_mul(options.max(1));
        if states > STATE_CAP {
            return states;
        }
    }
    states
}

pub fn exact_makespan(inst: &Instance) -> Result<OracleResult, OracleError> {
    let states = state_count(inst);
    if states > STATE_CAP {
        return Err(OracleError::BudgetExceeded { states });
    }
    let n = inst.jobs();
    let m = inst.machines();
    let feasible: Vec<Vec<usize>> = (0..n).map(|j| inst.feasible_machines(j)).collect();
    // Cheapest completion of the remaining suffix, for total-load pruning.
    let min_time: Vec<u64> = (0..n)
        .map(|j| feasible[j].iter().map(|&i| inst.time(i, j).unwrap()).min().unwrap_or(0))
        .collect();
    let suffix_min: Vec<u64> = {
        let mut s = vec![0u64; n + 1];
        for j in (0..n).rev() {
            s[j] = s[j + 1] + min_time[j];
        }
        s
    };

    let mut best_t = u64::MAX;
    let mut best_total = u64::MAX;
    let mut best_sigma: Vec<usize> = Vec::new();
    let mut sigma = vec![0usize; n];
    let mut load = vec![0u64; m];

    fn dfs(
        j: usize,
        n: usize,
        inst: &Instance,
        feasible: &[Vec<usize>],
        suffix_min: &[u64],
        sigma: &mut Vec<usize>,
        load: &mut Vec<u64>,
        running_total: u64,
        best_t: &mut u64,
        best_total: &mut u64,
        best_sigma: &mut Vec<usize>,
    ) {
        let running_max = load.iter().copied().max().unwrap_or(0);
        if running_max > *best_t {
            return;
        }
        if running_max == *best_t && running_total + suffix_min[j] >= *best_total {
            return;
        }
        if j == n {
            let t = running_max;
            if t < *best_t || (t == *best_t && running_total < *best_total) {
                *best_t = t;
                *best_total = running_total;
                *best_sigma = sigma.clone();
            }
            return;
        }
        for &i in &feasible[j] {
            let p = inst.time(i, j).unwrap();
            sigma[j] = i;
            load[i] += p;
            dfs(
                j + 1,
                n,
                inst,
                feasible,
                suffix_min,
                sigma,
                load,
                running_total + p,
                best_t,
                best_total,
                best_sigma,
            );
            load[i] -= p;
        }
    }

    dfs(
        0,
        n,
        inst,
        &feasible,
        &suffix_min,
        &mut sigma,
        &mut load,
        0,
        &mut best_t,
        &mut best_total,
        &mut best_sigma,
    );

    let witness = Assignment::new(if n == 0 { Vec::new() } else { best_sigma });
    let (t_opt, total_opt) =
        if n == 0 { (0, 0) } else { (best_t, best_total) };
    Ok(OracleResult { t_opt, total_opt, witness, machines: m })
}

/// Minimum of `cost` summed over jobs, across all feasible assignments of
/// `inst` whose makespan is at most `ratio * T_opt`. `ratio = 1` gives the
/// reoptimization optimum.
pub fn exact_min_cost_within(
    inst: &Instance,
    ratio: &Rat,
    cost: impl Fn(usize, usize) -> u64,
) -> Result<u64, OracleError> {
    let opt = exact_makespan(inst)?;
    let limit = (ratio * Rat::from_integer(BigInt::from(opt.t_opt)))
        .floor()
        .to_integer()
        .to_u64()
        .unwrap_or(u64::MAX);
    let n = inst.jobs();
    let m = inst.machines();
    let feasible: Vec<Vec<usize>> = (0..n).map(|j| inst.feasible_machines(j)).collect();

    let mut best = u64::MAX;
    let mut load = vec![0u64; m];

    fn dfs(
        j: usize,
        n: usize,
        inst: &Instance,
        feasible: &[Vec<usize>],
        limit: u64,
        running_cost: u64,
        load: &mut Vec<u64>,
        cost: &impl Fn(usize, usize) -> u64,
        best: &mut u64,
    ) {
        if running_cost >= *best {
            return;
        }
        if j == n {
            *best = running_cost;
            return;
        }
        for &i in &feasible[j] {
            let p = inst.time(i, j).unwrap();
            if load[i] + p > limit {
                continue;
            }
            load[i] += p;
            dfs(j + 1, n, inst, feasible, limit, running_cost + cost(j, i), load, cost, best);
            load[i] -= p;
        }
    }

    dfs(0, n, inst, &feasible, limit, 0, &mut load, &cost, &mut best);
    debug_assert_ne!(best, u64::MAX, "an optimal assignment always fits the limit");
    Ok(best)
}

/// Minimum over all orientations of the maximum weighted in-degree, by
/// enumerating the `2^{|E|}` orientations of the non-loop edges. Loops are
/// fixed into their vertex. Returns the optimum and a witness orientation
/// (`true` = edge reversed relative to low-to-high).
pub fn exact_orientation(
    vertices: usize,
    edges: &[(usize, usize, u64)],
) -> Result<(u64, Vec<bool>), OracleError> {
    let orientable: Vec<usize> =
        edges.iter().enumerate().filter(|(_, e)| e.0 != e.1).map(|(k, _)| k).collect();
    if orientable.len() > 24 {
        return Err(OracleError::BudgetExceeded { states: 1u64 << orientable.len().min(63) });
    }
    let mut base = vec![0u64; vertices];
    for &(u, v, w) in edges {
        if u == v {
            base[u] += w;
        }
    }
    let mut best = u64::MAX;
    let mut best_mask = 0usize;
    for mask in 0..(1usize << orientable.len()) {
        let mut load = base.clone();
        for (bit, &k) in orientable.iter().enumerate() {
            let (u, v, w) = edges[k];
            let (lo, hi) = (u.min(v), u.max(v));
            // bit unset: low -> high, weight lands on the high vertex.
            if mask >> bit & 1 == 0 {
                load[hi] += w;
            } else {
                load[lo] += w;
            }
        }
        let mk = load.iter().copied().max().unwrap_or(0);
        if mk < best {
            best = mk;
            best_mask = mask;
        }
    }
    let mut orientation = vec![false; edges.len()];
    for (bit, &k) in orientable.iter().enumerate() {
        orientation[k] = best_mask >> bit & 1 == 1;
    }
    if edges.is_empty() || vertices == 0 {
        return Ok((0, orientation));
    }
    Ok((best, orientation))
}
