//! The makespan/average-load linear relaxation and the searches that fix its
//! minimal feasible parameters.
//!
//! `LP(T, L)` has one variable per machine-job pair with processing time at
//! most `T` (pairs above `T` are fixed to zero by omission) and four
//! constraint families: total assignment per job, per-machine load at most
//! `T`, average machine load at most `L`, and nonnegativity.

use std::collections::HashMap;

use num_traits::Zero;

use crate::model::{rat, rat_u, Instance, Rat};
use crate::simplex::{self, Row, Sense};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpTlParams {
    /// Candidate makespan in scaled time units.
    pub t: u64,
    /// Candidate average load in scaled time units; a multiple of `1/m` when
    /// produced by [`minimal_tl`].
    pub l: Rat,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub num_vars: usize,
    /// Column index -> (machine, job).
    pub vars: Vec<(usize, usize)>,
    var_of: HashMap<(usize, usize), usize>,
    pub rows: Vec<Row>,
    machines: usize,
    jobs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    x: HashMap<(usize, usize), Rat>,
}

impl LpSolution {
    pub fn is_feasible(&self) -> bool {
        self.status == LpStatus::Feasible
    }

    /// Fractional value of `x_ij`; zero for omitted pairs.
    pub fn value(&self, machine: usize, job: usize) -> Rat {
        self.x.get(&(machine, job)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn from_values(x: HashMap<(usize, usize), Rat>) -> Self {
        LpSolution { status: LpStatus::Feasible, x }
    }

    pub fn infeasible() -> Self {
        LpSolution { status: LpStatus::Infeasible, x: HashMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpError {
    NumericOverflow,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::NumericOverflow => write!(f, "lp solver overflow"),
        }
    }
}

impl std::error::Error for LpError {}

impl From<simplex::SimplexError> for LpError {
    fn from(_: simplex::SimplexError) -> Self {
        LpError::NumericOverflow
    }
}

/// Builds `LP(T, L)` for the instance. Variables exist only where
/// `p_ij <= T` and the pair is allowed.
pub fn build_lp(inst: &Instance, params: &LpTlParams) -> LpProblem {
    let m = inst.machines();
    let n = inst.jobs();
    let mut vars = Vec::new();
    let mut var_of = HashMap::new();
    for i in 0..m {
        for j in 0..n {
            if let Some(p) = inst.time(i, j) {
                if p <= params.t {
                    var_of.insert((i, j), vars.len());
                    vars.push((i, j));
                }
            }
        }
    }

    let mut rows = Vec::new();
    // One assignment row per job; empty rows make the LP infeasible, which is
    // exactly the contract for a job with no admissible pair at this T.
    for j in 0..n {
        let coeffs: Vec<(usize, Rat)> = (0..m)
            .filter_map(|i| var_of.get(&(i, j)).map(|&c| (c, rat(1))))
            .collect();
        rows.push(Row { coeffs, sense: Sense::Eq, rhs: rat(1) });
    }
    for i in 0..m {
        let coeffs: Vec<(usize, Rat)> = (0..n)
            .filter_map(|j| {
                var_of.get(&(i, j)).map(|&c| (c, rat_u(inst.time(i, j).unwrap())))
            })
            .collect();
        rows.push(Row { coeffs, sense: Sense::Le, rhs: rat_u(params.t) });
    }
    // Average-load row scaled by m: sum of all loads <= m * L.
    let coeffs: Vec<(usize, Rat)> = vars
        .iter()
        .enumerate()
        .map(|(c, &(i, j))| (c, rat_u(inst.time(i, j).unwrap())))
        .collect();
    rows.push(Row { coeffs, sense: Sense::Le, rhs: &params.l * rat(m as i64) });

    LpProblem { num_vars: vars.len(), vars, var_of, rows, machines: m, jobs: n }
}

impl LpProblem {
    pub fn var(&self, machine: usize, job: usize) -> Option<usize> {
        self.var_of.get(&(machine, job)).copied()
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }
}

/// Exact feasibility decision for a built problem.
pub fn solve_feasibility(lp: &LpProblem) -> Result<LpSolution, LpError> {
    let point = simplex::feasible_point(lp.num_vars, &lp.rows, simplex::DEFAULT_BIT_BOUND)?;
    Ok(match point {
        None => LpSolution::infeasible(),
        Some(values) => {
            let x = lp
                .vars
                .iter()
                .enumerate()
                .map(|(c, &key)| (key, values[c].clone()))
                .collect();
            LpSolution::from_values(x)
        }
    })
}

fn tl_feasible(inst: &Instance, t: u64, l: &Rat) -> Result<bool, LpError> {
    let lp = build_lp(inst, &LpTlParams { t, l: l.clone() });
    Ok(solve_feasibility(&lp)?.is_feasible())
}

/// Minimal integer `T` with `LP(T, T)` feasible, then minimal `L` on the
/// `1/m` grid with `LP(T, L)` feasible. Guarantees `T <= T_opt` and
/// `L <= T`; see `minimal_l_can_exceed_optimal_average` for why the average
/// can land strictly above the best integral one.
pub fn minimal_tl(inst: &Instance) -> Result<LpTlParams, LpError> {
    if inst.jobs() == 0 {
        return Ok(LpTlParams { t: 0, l: Rat::zero() });
    }
    // Lower bound: each job needs its fastest machine. Upper bound: the sum
    // of every allowed entry dominates any feasible load.
    let lo = (0..inst.jobs())
        .map(|j| {
            (0..inst.machines())
                .filter_map(|i| inst.time(i, j))
                .min()
                .expect("every job has a machine")
        })
        .max()
        .unwrap_or(0);
    let hi = inst.total_finite_time();

    let mut lo_t = lo;
    let mut hi_t = hi;
    while lo_t < hi_t {
        let mid = lo_t + (hi_t - lo_t) / 2;
        if tl_feasible(inst, mid, &rat_u(mid))? {
            hi_t = mid;
        } else {
            lo_t = mid + 1;
        }
    }
    let t = lo_t;
    debug_assert!(tl_feasible(inst, t, &rat_u(t))?);

    // L ranges over multiples of 1/m in [0, T]; search the numerator.
    let m = inst.machines() as u64;
    let mut lo_k = 0u64;
    let mut hi_k = t * m;
    while lo_k < hi_k {
        let mid = lo_k + (hi_k - lo_k) / 2;
        let l = Rat::new(mid.into(), m.into());
        if tl_feasible(inst, t, &l)? {
            hi_k = mid;
        } else {
            lo_k = mid + 1;
        }
    }
    let l = Rat::new(lo_k.into(), m.into());
    Ok(LpTlParams { t, l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;
    use crate::oracle;

    fn fin(v: u64) -> Option<u64> {
        Some(v)
    }

    #[test]
    fn one_by_one_feasible_at_exact_t() {
        let inst = Instance::unrelated(vec![vec![fin(3)]]).unwrap();
        let lp = build_lp(&inst, &LpTlParams { t: 3, l: rat(3) });
        assert_eq!(lp.num_vars, 1);
        let sol = solve_feasibility(&lp).unwrap();
        assert!(sol.is_feasible());
        assert_eq!(sol.value(0, 0), rat(1));
    }

    #[test]
    fn one_by_one_infeasible_below_t() {
        let inst = Instance::unrelated(vec![vec![fin(3)]]).unwrap();
        let lp = build_lp(&inst, &LpTlParams { t: 2, l: rat(2) });
        assert_eq!(lp.num_vars, 0);
        let sol = solve_feasibility(&lp).unwrap();
        assert!(!sol.is_feasible());
    }

    #[test]
    fn identical_two_by_two_permutation() {
        let inst = Instance::identical(2, vec![1, 1]).unwrap();
        let lp = build_lp(&inst, &LpTlParams { t: 1, l: rat(1) });
        let sol = solve_feasibility(&lp).unwrap();
        assert!(sol.is_feasible());
        // Constraint-evaluation check: each job fully assigned, machine loads
        // within T.
        for j in 0..2 {
            assert_eq!(sol.value(0, j).clone() + sol.value(1, j), rat(1));
        }
        for i in 0..2 {
            assert!(sol.value(i, 0).clone() + sol.value(i, 1) <= rat(1));
        }
    }

    #[test]
    fn feasible_with_integral_witness() {
        // sigma = [0, 1, 1] has loads [1, 3], average 2, so LP(3, 2) must be
        // feasible.
        let inst =
            Instance::unrelated(vec![vec![fin(1), fin(2), fin(3)], vec![fin(3), fin(2), fin(1)]])
                .unwrap();
        let lp = build_lp(&inst, &LpTlParams { t: 3, l: rat(2) });
        assert!(solve_feasibility(&lp).unwrap().is_feasible());
    }

    #[test]
    fn minimal_tl_single_machine() {
        let inst = Instance::unrelated(vec![vec![fin(2), fin(3)]]).unwrap();
        let params = minimal_tl(&inst).unwrap();
        assert_eq!(params.t, 5);
        assert_eq!(params.l, rat(5));
    }

    #[test]
    fn minimal_tl_identical_pair() {
        // Brute force over all 4 assignments gives T_opt = 2 = L_opt.
        let inst = Instance::identical(2, vec![2, 2]).unwrap();
        let res = oracle::exact_makespan(&inst).unwrap();
        assert_eq!(res.t_opt, 2);
        assert_eq!(res.l_opt(), rat(2));
        let params = minimal_tl(&inst).unwrap();
        assert_eq!(params.t, 2);
        assert_eq!(params.l, rat(2));
    }

    #[test]
    fn minimal_tl_forced_assignment() {
        let inst = Instance::unrelated(vec![vec![fin(1), None], vec![None, fin(1)]]).unwrap();
        let params = minimal_tl(&inst).unwrap();
        assert_eq!(params.t, 1);
        assert_eq!(params.l, rat(1));
    }

    #[test]
    fn minimal_tl_empty_jobs() {
        let inst = Instance::unrelated(vec![vec![], vec![]]).unwrap();
        let params = minimal_tl(&inst).unwrap();
        assert_eq!(params.t, 0);
        assert_eq!(params.l, rat(0));
    }

    #[test]
    fn monotone_feasibility() {
        let inst =
            Instance::unrelated(vec![vec![fin(1), fin(2), fin(3)], vec![fin(3), fin(2), fin(1)]])
                .unwrap();
        let params = minimal_tl(&inst).unwrap();
        // Everything at or above the minimal pair stays feasible.
        for dt in 0..3u64 {
            assert!(tl_feasible(&inst, params.t + dt, &(params.l.clone() + rat(dt as i64)))
                .unwrap());
        }
        // Below-minimal T or L is infeasible.
        if params.t > 0 {
            assert!(!tl_feasible(&inst, params.t - 1, &rat_u(params.t - 1)).unwrap());
        }
        let m = inst.machines() as i64;
        let below = params.l.clone() - ratio(1, m);
        if below >= rat(0) {
            assert!(!tl_feasible(&inst, params.t, &below).unwrap());
        }
    }

    #[test]
    fn minimal_t_never_exceeds_optimal_makespan() {
        // T <= T_opt on a small corpus, checked against the exhaustive oracle.
        let instances = vec![
            Instance::unrelated(vec![vec![fin(1), fin(2), fin(3)], vec![fin(3), fin(2), fin(1)]])
                .unwrap(),
            Instance::identical(2, vec![3, 3, 2]).unwrap(),
            Instance::unrelated(vec![
                vec![fin(4), fin(4), fin(4)],
                vec![fin(5), fin(5), fin(5)],
            ])
            .unwrap(),
            Instance::restricted(vec![vec![fin(2), None], vec![fin(2), fin(3)]]).unwrap(),
        ];
        for inst in &instances {
            let params = minimal_tl(inst).unwrap();
            let opt = oracle::exact_makespan(inst).unwrap();
            assert!(params.t <= opt.t_opt, "T {} > T_opt {}", params.t, opt.t_opt);
            assert!(params.l <= rat_u(params.t));
        }
    }

    #[test]
    fn integral_witness_soundness() {
        // Whenever some integral assignment meets makespan T and average L,
        // the relaxation at (T, L) must be feasible.
        let mut state = 0x27BB2EE687B0B0FDu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..25 {
            let m = 1 + (next() % 3) as usize;
            let n = 1 + (next() % 4) as usize;
            let p: Vec<Vec<Option<u64>>> =
                (0..m).map(|_| (0..n).map(|_| Some(1 + next() % 9)).collect()).collect();
            let inst = Instance::unrelated(p).unwrap();
            // Enumerate every assignment; each gives a witnessed (T, L) pair.
            let mut sigma = vec![0usize; n];
            loop {
                let lp_prof = crate::model::load_profile(
                    &inst,
                    &crate::model::Assignment::new(sigma.clone()),
                )
                .unwrap();
                let t = lp_prof.makespan;
                let l = lp_prof.avg_load();
                assert!(
                    tl_feasible(&inst, t, &l).unwrap(),
                    "integral witness at T={t} rejected"
                );
                // Mixed-radix increment.
                let mut pos = 0;
                loop {
                    if pos == n {
                        break;
                    }
                    sigma[pos] += 1;
                    if sigma[pos] < m {
                        break;
                    }
                    sigma[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
        }
    }

    #[test]
    fn minimal_l_can_exceed_optimal_average() {
        // Three jobs that cost 4 on machine 0 and 5 on machine 1. The optimal
        // makespan is 8 with average 13/2, but LP(7,7) is already feasible
        // fractionally, and at T = 7 the least feasible grid average is 7.
        let inst = Instance::unrelated(vec![
            vec![fin(4), fin(4), fin(4)],
            vec![fin(5), fin(5), fin(5)],
        ])
        .unwrap();
        let opt = oracle::exact_makespan(&inst).unwrap();
        assert_eq!(opt.t_opt, 8);
        assert_eq!(opt.l_opt(), ratio(13, 2));
        let params = minimal_tl(&inst).unwrap();
        assert_eq!(params.t, 7);
        assert_eq!(params.l, rat(7));
        assert!(params.l > opt.l_opt());
    }
}
