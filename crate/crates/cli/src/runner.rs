//! Algorithm dispatch: runs a solver on a parsed input, recomputes every
//! bound verdict from raw loads, and packages a report.

use std::time::Instant;

use mkspan::balance::{balance, in_degrees, GraphBalancingInstance, TreeDecomposition};
use mkspan::feasible::schedule_fully_feasible_detailed;
use mkspan::fpt::minimal_t_for_scheme;
use mkspan::model::{
    feasibility_profile, load_profile, rat_u, Instance, Kind, Rat,
};
use mkspan::oracle;
use mkspan::reopt::{exact_reopt, ReoptInput};
use mkspan::reopt_identical::reoptimize_identical_capped;
use mkspan::reopt_uniform::reoptimize_uniform_capped;
use mkspan::restricted::schedule_restricted_detailed;
use num_traits::{One, Zero};

use crate::report::{digest, BoundCheck, OracleSummary, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    On,
    Off,
    Auto,
}

impl OracleMode {
    /// Whether to consult the exhaustive oracle for this instance.
    fn enabled(self, inst: &Instance) -> bool {
        match self {
            OracleMode::On => true,
            OracleMode::Off => false,
            OracleMode::Auto => {
                let mut states = 1u64;
                for j in 0..inst.jobs() {
                    states = states.saturating_mul(inst.feasible_machines(j).len() as u64);
                    if states > oracle::STATE_CAP {
                        return false;
                    }
                }
                true
            }
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Input(String),
    Budget(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Input(m) => write!(f, "input error: {m}"),
            RunError::Budget(m) => write!(f, "budget exceeded: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

/// Feasibility parameter of an instance at the true optimum: the minimal
/// fraction of machines with `p_ij <= T_opt`.
fn phi_at_optimum(inst: &Instance, t_opt: u64) -> Rat {
    let m = inst.machines();
    (0..inst.jobs())
        .map(|j| {
            let count = (0..m)
                .filter(|&i| matches!(inst.time(i, j), Some(p) if p <= t_opt))
                .count();
            Rat::new(count.into(), m.into())
        })
        .min()
        .unwrap_or_else(Rat::one)
}

pub fn run_a_um(inst: &Instance, mode: OracleMode) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let run = schedule_fully_feasible_detailed(inst)
        .map_err(|e| RunError::Budget(e.to_string()))?;
    let loads = load_profile(inst, &run.assignment).map_err(|e| RunError::Input(e.to_string()))?;
    let rounded_loads =
        load_profile(inst, &run.rounded).map_err(|e| RunError::Input(e.to_string()))?;

    let mut bounds = Vec::new();
    bounds.push(BoundCheck::from_rats(
        "rounded_avg_load_le_L",
        &rounded_loads.avg_load(),
        &run.params.l,
    ));
    let per_machine_ok = (0..inst.machines()).all(|i| {
        let max_assigned = run
            .rounded
            .sigma
            .iter()
            .enumerate()
            .filter(|&(_, &mi)| mi == i)
            .map(|(j, _)| inst.time(i, j).unwrap())
            .max()
            .unwrap_or(0);
        rounded_loads.load[i] <= run.params.t + max_assigned
    });
    bounds.push(BoundCheck {
        name: "rounded_load_le_T_plus_max".into(),
        bound: "per-machine".into(),
        achieved: if per_machine_ok { "holds" } else { "violated" }.into(),
        pass: per_machine_ok,
    });

    let mut oracle_summary = None;
    if mode.enabled(inst) && run.params.t > 0 {
        match oracle::exact_makespan(inst) {
            Ok(opt) => {
                let phi = phi_at_optimum(inst, opt.t_opt);
                let guard = run.params.l.clone() / rat_u(run.params.t);
                if !phi.is_zero() && phi >= guard {
                    let bound = rat_u(opt.t_opt) + opt.l_opt() / phi;
                    bounds.push(BoundCheck::from_rats(
                        "makespan_le_Topt_plus_Lopt_over_phi",
                        &rat_u(loads.makespan),
                        &bound,
                    ));
                }
                oracle_summary =
                    Some(OracleSummary { t_opt: opt.t_opt, l_opt: opt.l_opt().to_string() });
            }
            Err(e) => {
                if mode == OracleMode::On {
                    return Err(RunError::Budget(e.to_string()));
                }
            }
        }
    }

    Ok(RunReport {
        algorithm: "a_um".into(),
        instance_digest: digest(&inst.to_json()),
        makespan: loads.makespan,
        scale: inst.scale(),
        assignment: Some(run.assignment.sigma.clone()),
        orientation: None,
        cost: None,
        bounds,
        oracle: oracle_summary,
        wall_ms: started.elapsed().as_millis(),
    })
}

pub fn run_a_res(inst: &Instance, mode: OracleMode) -> Result<RunReport, RunError> {
    if inst.kind() != Kind::Restricted && inst.kind() != Kind::Identical {
        return Err(RunError::Input("restricted scheduler needs a restricted instance".into()));
    }
    let started = Instant::now();
    let run = schedule_restricted_detailed(inst);
    let loads = load_profile(inst, &run.assignment).map_err(|e| RunError::Input(e.to_string()))?;

    let mut bounds = Vec::new();
    // The bound is p_max + floor(L_opt/phi), recomputed from the instance.
    bounds.push(BoundCheck::from_counts(
        "makespan_le_pmax_plus_delta",
        loads.makespan,
        run.p_max + run.delta,
    ));
    bounds.push(BoundCheck::from_counts("push_count_le_mS", run.pushes as u64, run.push_cap as u64));
    let part = mkspan::restricted::partition(inst, &run.assignment, run.delta);
    bounds.push(BoundCheck {
        name: "no_overloaded_machine".into(),
        bound: "0".into(),
        achieved: part.overloaded.len().to_string(),
        pass: part.overloaded.is_empty(),
    });

    let mut oracle_summary = None;
    if mode.enabled(inst) {
        if let Ok(opt) = oracle::exact_makespan(inst) {
            oracle_summary =
                Some(OracleSummary { t_opt: opt.t_opt, l_opt: opt.l_opt().to_string() });
        }
    }

    Ok(RunReport {
        algorithm: "a_res".into(),
        instance_digest: digest(&inst.to_json()),
        makespan: loads.makespan,
        scale: inst.scale(),
        assignment: Some(run.assignment.sigma.clone()),
        orientation: None,
        cost: None,
        bounds,
        oracle: oracle_summary,
        wall_ms: started.elapsed().as_millis(),
    })
}

pub fn run_fpt(
    inst: &Instance,
    eps: &Rat,
    k_cap: usize,
    mode: OracleMode,
) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let (t, assignment) = minimal_t_for_scheme(inst, eps, k_cap).map_err(|e| match e {
        mkspan::fpt::FptError::ParameterBudgetExceeded { .. } => RunError::Budget(e.to_string()),
        other => RunError::Input(other.to_string()),
    })?;
    let loads = load_profile(inst, &assignment).map_err(|e| RunError::Input(e.to_string()))?;

    let factor = Rat::one() + eps;
    let mut bounds = vec![BoundCheck::from_rats(
        "makespan_le_one_plus_eps_T",
        &rat_u(loads.makespan),
        &(factor.clone() * rat_u(t)),
    )];
    let mut oracle_summary = None;
    if mode.enabled(inst) {
        if let Ok(opt) = oracle::exact_makespan(inst) {
            bounds.push(BoundCheck::from_counts("minimal_T_le_Topt", t, opt.t_opt));
            bounds.push(BoundCheck::from_rats(
                "makespan_le_one_plus_eps_Topt",
                &rat_u(loads.makespan),
                &(factor * rat_u(opt.t_opt)),
            ));
            oracle_summary =
                Some(OracleSummary { t_opt: opt.t_opt, l_opt: opt.l_opt().to_string() });
        } else if mode == OracleMode::On {
            return Err(RunError::Budget("oracle budget".into()));
        }
    }

    Ok(RunReport {
        algorithm: "fpt".into(),
        instance_digest: digest(&inst.to_json()),
        makespan: loads.makespan,
        scale: inst.scale(),
        assignment: Some(assignment.sigma.clone()),
        orientation: None,
        cost: None,
        bounds,
        oracle: oracle_summary,
        wall_ms: started.elapsed().as_millis(),
    })
}

pub fn run_balance(
    g: &GraphBalancingInstance,
    td: &TreeDecomposition,
    mode: OracleMode,
) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let res = balance(g, td).map_err(|e| match e {
        mkspan::balance::BalanceError::StateBudgetExceeded { .. } => {
            RunError::Budget(e.to_string())
        }
        other => RunError::Input(other.to_string()),
    })?;
    let loads = in_degrees(g, &res.reversed);
    let recomputed = loads.into_iter().max().unwrap_or(0);

    let mut bounds =
        vec![BoundCheck::equality("orientation_reproduces_makespan", recomputed, res.makespan)];
    if mode != OracleMode::Off && g.edges.iter().filter(|e| e.0 != e.1).count() <= 24 {
        let (opt, _) = oracle::exact_orientation(g.vertices, &g.edges)
            .map_err(|e| RunError::Budget(e.to_string()))?;
        bounds.push(BoundCheck::equality("makespan_equals_exhaustive_optimum", res.makespan, opt));
    }

    Ok(RunReport {
        algorithm: "balance".into(),
        instance_digest: digest(&format!("{}|{}", g.to_json(), td.to_json())),
        makespan: res.makespan,
        scale: 1,
        assignment: None,
        orientation: Some(res.reversed.clone()),
        cost: None,
        bounds,
        oracle: None,
        wall_ms: started.elapsed().as_millis(),
    })
}

pub fn run_reopt_id(
    input: &ReoptInput,
    eps: &Rat,
    config_cap: usize,
    mode: OracleMode,
) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let (assignment, cost) =
        reoptimize_identical_capped(input, eps, config_cap).map_err(|e| match e {
            mkspan::reopt::ReoptError::ConfigurationBudgetExceeded { .. }
            | mkspan::reopt::ReoptError::StateBudgetExceeded { .. }
            | mkspan::reopt::ReoptError::Oracle(_) => RunError::Budget(e.to_string()),
            other => RunError::Input(other.to_string()),
        })?;
    let loads =
        load_profile(&input.new, &assignment).map_err(|e| RunError::Input(e.to_string()))?;

    let mut bounds = vec![BoundCheck::equality(
        "cost_equals_recount",
        cost,
        input.transition_cost(&assignment),
    )];
    let mut oracle_summary = None;
    if mode.enabled(&input.new) {
        if let Ok(opt) = oracle::exact_makespan(&input.new) {
            bounds.push(BoundCheck::from_rats(
                "makespan_le_one_plus_eps_opt",
                &rat_u(loads.makespan),
                &((Rat::one() + eps) * rat_u(opt.t_opt)),
            ));
            if let Ok(best) = exact_reopt(input, &Rat::one()) {
                bounds.push(BoundCheck::from_counts("cost_le_exact_reopt", cost, best));
            }
            oracle_summary =
                Some(OracleSummary { t_opt: opt.t_opt, l_opt: opt.l_opt().to_string() });
        } else if mode == OracleMode::On {
            return Err(RunError::Budget("oracle budget".into()));
        }
    }

    Ok(RunReport {
        algorithm: "reopt_id".into(),
        instance_digest: digest(&input.to_json()),
        makespan: loads.makespan,
        scale: input.new.scale(),
        assignment: Some(assignment.sigma.clone()),
        orientation: None,
        cost: Some(cost),
        bounds,
        oracle: oracle_summary,
        wall_ms: started.elapsed().as_millis(),
    })
}

pub fn run_reopt_un(
    input: &ReoptInput,
    eps: &Rat,
    b: &Rat,
    state_cap: usize,
    mode: OracleMode,
) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let (assignment, cost) =
        reoptimize_uniform_capped(input, eps, b, state_cap).map_err(|e| match e {
            mkspan::reopt::ReoptError::StateBudgetExceeded { .. }
            | mkspan::reopt::ReoptError::NoPath
            | mkspan::reopt::ReoptError::Oracle(_) => RunError::Budget(e.to_string()),
            other => RunError::Input(other.to_string()),
        })?;
    let loads =
        load_profile(&input.new, &assignment).map_err(|e| RunError::Input(e.to_string()))?;

    let mut bounds = vec![BoundCheck::equality(
        "cost_equals_recount",
        cost,
        input.transition_cost(&assignment),
    )];
    let mut oracle_summary = None;
    if mode.enabled(&input.new) {
        if let Ok(opt) = oracle::exact_makespan(&input.new) {
            bounds.push(BoundCheck::from_rats(
                "makespan_le_one_plus_eps_opt",
                &rat_u(loads.makespan),
                &((Rat::one() + eps) * rat_u(opt.t_opt)),
            ));
            if let Ok(best) = exact_reopt(input, &Rat::one()) {
                bounds.push(BoundCheck::from_counts("cost_le_exact_reopt", cost, best));
            }
            oracle_summary =
                Some(OracleSummary { t_opt: opt.t_opt, l_opt: opt.l_opt().to_string() });
        } else if mode == OracleMode::On {
            return Err(RunError::Budget("oracle budget".into()));
        }
    }

    Ok(RunReport {
        algorithm: "reopt_un".into(),
        instance_digest: digest(&input.to_json()),
        makespan: loads.makespan,
        scale: input.new.scale(),
        assignment: Some(assignment.sigma.clone()),
        orientation: None,
        cost: Some(cost),
        bounds,
        oracle: oracle_summary,
        wall_ms: started.elapsed().as_millis(),
    })
}

/// Verifies the bound checks of a stored report against its input file, by
/// re-running the cheap recomputation (loads, profile thresholds) on the
/// reported assignment.
pub fn verify_assignment(inst: &Instance, sigma: &[usize]) -> Result<RunReport, RunError> {
    let assignment = mkspan::Assignment::new(sigma.to_vec());
    let loads = load_profile(inst, &assignment).map_err(|e| RunError::Input(e.to_string()))?;
    let profile = feasibility_profile(inst);
    let monotone = mkspan::model::phi_is_monotone(&profile);
    let bounds = vec![BoundCheck {
        name: "assignment_feasible".into(),
        bound: "feasible".into(),
        achieved: "feasible".into(),
        pass: true,
    },
    BoundCheck {
        name: "phi_profile_monotone".into(),
        bound: "monotone".into(),
        achieved: if monotone { "monotone" } else { "violated" }.into(),
        pass: monotone,
    }];
    Ok(RunReport {
        algorithm: "verify".into(),
        instance_digest: digest(&inst.to_json()),
        makespan: loads.makespan,
        scale: inst.scale(),
        assignment: Some(sigma.to_vec()),
        orientation: None,
        cost: None,
        bounds,
        oracle: None,
        wall_ms: 0,
    })
}
