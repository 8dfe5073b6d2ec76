//! Parameterized approximation scheme for unrelated machines.
//!
//! For a makespan candidate `T` and accuracy `eps`, pairs with
//! `p_ij > eps * T` (and at most `T`) keep integral variables; everything
//! larger than `T` is dropped outright. Enumerating the `2^k` integral
//! patterns, solving the residual relaxation and rounding yields an
//! assignment of makespan at most `(1 + eps) * T` whenever any pattern is
//! feasible.

use std::collections::HashMap;

use num_traits::One;

use crate::lp::{LpError, LpSolution};
use crate::model::{rat, rat_u, Assignment, Instance, Rat};
use crate::rounding::round;
use crate::simplex::{self, Row, Sense};

pub const DEFAULT_K_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FptError {
    ParameterBudgetExceeded { k: usize, k_cap: usize },
    Infeasible,
    Lp(LpError),
}

impl std::fmt::Display for FptError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FptError::ParameterBudgetExceeded { k, k_cap } => {
                write!(f, "{k} integral pairs exceed the enumeration budget {k_cap}")
            }
            FptError::Infeasible => write!(f, "no integral pattern admits a feasible relaxation"),
            FptError::Lp(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for FptError {}

impl From<LpError> for FptError {
    fn from(e: LpError) -> Self {
        FptError::Lp(e)
    }
}

#[derive(Clone, Debug)]
pub struct MilpParams {
    pub eps: Rat,
    pub t: u64,
    /// Pairs with `eps * T < p_ij <= T`, row-major order.
    pub large_pairs: Vec<(usize, usize)>,
    pub k: usize,
    pub k_cap: usize,
}

/// Classifies the instance's pairs for the given accuracy and candidate
/// makespan. Comparisons are exact rationals, so boundary pairs classify
/// deterministically.
pub fn milp_params(
    inst: &Instance,
    eps: &Rat,
    t: u64,
    k_cap: usize,
) -> Result<MilpParams, FptError> {
    let cut = eps * rat_u(t);
    let mut large_pairs = Vec::new();
    for i in 0..inst.machines() {
        for j in 0..inst.jobs() {
            if let Some(p) = inst.time(i, j) {
                if p <= t && rat_u(p) > cut {
                    large_pairs.push((i, j));
                }
            }
        }
    }
    let k = large_pairs.len();
    if k > k_cap {
        return Err(FptError::ParameterBudgetExceeded { k, k_cap });
    }
    Ok(MilpParams { eps: eps.clone(), t, large_pairs, k, k_cap })
}

/// Solves the scheme at a fixed `T`: enumerates integral patterns over the
/// large pairs, solves the residual relaxation for each, rounds, and returns
/// the minimum-makespan assignment. Patterns that give a job two integral
/// slots or overload a machine are pruned before any solve.
pub fn solve_milp_scheme(
    inst: &Instance,
    eps: &Rat,
    t: u64,
    k_cap: usize,
) -> Result<Assignment, FptError> {
    if inst.jobs() == 0 {
        return Ok(Assignment::empty());
    }
    let params = milp_params(inst, eps, t, k_cap)?;
    let m = inst.machines();
    let n = inst.jobs();
    let cut = eps * rat_u(t);
    // Small pairs per job: allowed entries at most eps * T.
    let small: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            (0..m)
                .filter(|&i| {
                    matches!(inst.time(i, j), Some(p) if p <= t && rat_u(p) <= cut)
                })
                .collect()
        })
        .collect();

    let mut best: Option<(u64, Assignment)> = None;
    'patterns: for mask in 0u64..(1u64 << params.k) {
        let mut fixed_job: Vec<Option<usize>> = vec![None; n];
        let mut fixed_load = vec![0u64; m];
        for (b, &(i, j)) in params.large_pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                if fixed_job[j].is_some() {
                    continue 'patterns;
                }
                fixed_job[j] = Some(i);
                fixed_load[i] += inst.time(i, j).unwrap();
                if fixed_load[i] > t {
                    continue 'patterns;
                }
            }
        }

        // Residual relaxation over the small pairs of unfixed jobs.
        let mut vars: Vec<(usize, usize)> = Vec::new();
        let mut var_of: HashMap<(usize, usize), usize> = HashMap::new();
        for j in 0..n {
            if fixed_job[j].is_none() {
                if small[j].is_empty() {
                    continue 'patterns;
                }
                for &i in &small[j] {
                    var_of.insert((i, j), vars.len());
                    vars.push((i, j));
                }
            }
        }
        let mut rows = Vec::new();
        for j in 0..n {
            if fixed_job[j].is_none() {
                let coeffs =
                    small[j].iter().map(|&i| (var_of[&(i, j)], rat(1))).collect();
                rows.push(Row { coeffs, sense: Sense::Eq, rhs: rat(1) });
            }
        }
        for i in 0..m {
            let coeffs: Vec<(usize, Rat)> = vars
                .iter()
                .enumerate()
                .filter(|(_, &(vi, _))| vi == i)
                .map(|(c, &(vi, vj))| (c, rat_u(inst.time(vi, vj).unwrap())))
                .collect();
            rows.push(Row { coeffs, sense: Sense::Le, rhs: rat_u(t - fixed_load[i]) });
        }
        let Some(values) =
            simplex::feasible_point(vars.len(), &rows, simplex::DEFAULT_BIT_BOUND)
                .map_err(LpError::from)?
        else {
            continue 'patterns;
        };

        // Merge the integral pattern with the fractional residual and round.
        let mut x: HashMap<(usize, usize), Rat> = HashMap::new();
        for (j, fixed) in fixed_job.iter().enumerate() {
            if let Some(i) = fixed {
                x.insert((*i, j), Rat::one());
            }
        }
        for (c, &(i, j)) in vars.iter().enumerate() {
            if !values[c].eq(&rat(0)) {
                x.insert((i, j), values[c].clone());
            }
        }
        let assignment =
            round(inst, &LpSolution::from_values(x)).expect("feasible pattern rounds");
        let mk = crate::model::load_profile(inst, &assignment)
            .expect("rounded assignment feasible")
            .makespan;
        if best.as_ref().map_or(true, |(bm, _)| mk < *bm) {
            best = Some((mk, assignment));
        }
    }

    match best {
        Some((mk, assignment)) => {
            assert!(
                rat_u(mk) <= (Rat::one() + eps) * rat_u(t),
                "scheme output {mk} exceeds (1+eps) * {t}"
            );
            Ok(assignment)
        }
        None => Err(FptError::Infeasible),
    }
}

/// Minimal integer `T` for which the scheme succeeds, by binary search over
/// the monotone feasibility range.
pub fn minimal_t_for_scheme(
    inst: &Instance,
    eps: &Rat,
    k_cap: usize,
) -> Result<(u64, Assignment), FptError> {
    if inst.jobs() == 0 {
        return Ok((0, Assignment::empty()));
    }
    let lo = (0..inst.jobs())
        .map(|j| (0..inst.machines()).filter_map(|i| inst.time(i, j)).min().unwrap())
        .max()
        .unwrap();
    let hi = inst.total_finite_time();
    let mut lo_t = lo;
    let mut hi_t = hi;
    while lo_t < hi_t {
        let mid = lo_t + (hi_t - lo_t) / 2;
        match solve_milp_scheme(inst, eps, mid, k_cap) {
            Ok(_) => hi_t = mid,
            Err(FptError::Infeasible) => lo_t = mid + 1,
            Err(e) => return Err(e),
        }
    }
    let assignment = solve_milp_scheme(inst, eps, lo_t, k_cap)?;
    Ok((lo_t, assignment))
}
