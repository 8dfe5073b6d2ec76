//! Combinatorial scheduler for restricted assignment, where each job has one
//! size and a set of machines it may run on.
//!
//! The push procedure walks directed paths from overloaded machines
//! (load at least `p_max + delta + 1`) to underloaded ones (load at most
//! `delta`) in the bipartite assignment graph and reverses them, moving each
//! job on the path one machine forward. Called once with
//! `delta = floor(L_opt / phi)` it empties the overloaded set, which caps the
//! makespan at `p_max + floor(L_opt / phi)`.

use std::collections::VecDeque;

use num_bigint::BigInt;

use crate::model::{load_profile, Assignment, Instance, Rat};

/// Machine partition under a load slack `delta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachinePartition {
    pub delta: u64,
    /// `load >= p_max + delta + 1`.
    pub overloaded: Vec<usize>,
    /// `load <= delta`.
    pub underloaded: Vec<usize>,
    pub middle: Vec<usize>,
}

pub fn partition(inst: &Instance, a: &Assignment, delta: u64) -> MachinePartition {
    let loads = load_profile(inst, a).expect("assignment feasible").load;
    let p_max = inst.max_finite_time();
    let mut overloaded = Vec::new();
    let mut underloaded = Vec::new();
    let mut middle = Vec::new();
    for (i, &load) in loads.iter().enumerate() {
        if load >= p_max + delta + 1 {
            overloaded.push(i);
        } else if load <= delta {
            underloaded.push(i);
        } else {
            middle.push(i);
        }
    }
    MachinePartition { delta, overloaded, underloaded, middle }
}

/// Every job on its lowest-index allowed machine.
pub fn initial_feasible(inst: &Instance) -> Assignment {
    let sigma = (0..inst.jobs())
        .map(|j| inst.feasible_machines(j)[0])
        .collect();
    Assignment::new(sigma)
}

#[derive(Clone, Debug)]
pub struct UbfRun {
    pub assignment: Assignment,
    pub pushes: usize,
    /// `m * S` where `S` counts allowed machine-job pairs; the push loop
    /// never runs longer.
    pub push_cap: usize,
}

pub fn ubf(inst: &Instance, sigma0: &Assignment, delta: u64) -> Assignment {
    ubf_detailed(inst, sigma0, delta).assignment
}

/// Runs the push loop until no overloaded-to-underloaded path remains.
pub fn ubf_detailed(inst: &Instance, sigma0: &Assignment, delta: u64) -> UbfRun {
    let m = inst.machines();
    let s: usize = (0..inst.jobs()).map(|j| inst.feasible_machines(j).len()).sum();
    let push_cap = m * s;
    let p_max = inst.max_finite_time();

    let mut sigma = sigma0.sigma.clone();
    let mut loads = load_profile(inst, sigma0).expect("initial assignment feasible").load;
    // Jobs currently on each machine, kept in ascending job order.
    let mut on_machine: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (j, &i) in sigma.iter().enumerate() {
        on_machine[i].push(j);
    }

    let mut pushes = 0usize;
    while pushes < push_cap {
        let Some(path) = find_push_path(inst, &loads, &on_machine, delta, p_max) else {
            break;
        };
        // Reverse the path: each (from, job, to) hop moves the job forward.
        let source = path.first().unwrap().0;
        let dest = path.last().unwrap().2;
        let source_before = loads[source];
        let dest_before = loads[dest];
        for &(from, job, to) in &path {
            debug_assert_eq!(sigma[job], from);
            let p = inst.time(from, job).expect("job sits on an allowed machine");
            debug_assert!(inst.time(to, job).is_some(), "push keeps feasibility");
            sigma[job] = to;
            loads[from] -= p;
            loads[to] += inst.time(to, job).unwrap();
            let pos = on_machine[from].binary_search(&job).expect("job listed");
            on_machine[from].remove(pos);
            let ins = on_machine[to].binary_search(&job).unwrap_err();
            on_machine[to].insert(ins, job);
        }
        debug_assert!(loads[source] < source_before, "source load strictly decreases");
        debug_assert!(loads[dest] <= dest_before + p_max, "destination grows by at most p_max");
        pushes += 1;
    }

    UbfRun { assignment: Assignment::new(sigma), pushes, push_cap }
}

/// Multi-source BFS from overloaded machines; the first underloaded machine
/// discovered ends the search, ties resolved by machine index via the scan
/// order. Returns the hops `(from, job, to)` in path order.
fn find_push_path(
    inst: &Instance,
    loads: &[u64],
    on_machine: &[Vec<usize>],
    delta: u64,
    p_max: u64,
) -> Option<Vec<(usize, usize, usize)>> {
    let m = inst.machines();
    let overloaded: Vec<usize> =
        (0..m).filter(|&i| loads[i] >= p_max + delta + 1).collect();
    if overloaded.is_empty() {
        return None;
    }
    let underloaded = |i: usize| loads[i] <= delta;

    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m];
    let mut seen = vec![false; m];
    let mut queue = VecDeque::new();
    for &i in &overloaded {
        seen[i] = true;
        queue.push_back(i);
    }
    let mut target = None;
    'bfs: while let Some(i) = queue.pop_front() {
        for &j in &on_machine[i] {
            for i2 in inst.feasible_machines(j) {
                if i2 == i || seen[i2] {
                    continue;
                }
                seen[i2] = true;
                parent[i2] = Some((i, j));
                if underloaded(i2) {
                    target = Some(i2);
                    break 'bfs;
                }
                queue.push_back(i2);
            }
        }
    }

    let mut hops = Vec::new();
    let mut cur = target?;
    while let Some((prev, job)) = parent[cur] {
        hops.push((prev, job, cur));
        cur = prev;
    }
    hops.reverse();
    Some(hops)
}

/// Feasibility parameter of a restricted instance: the minimal fraction of
/// machines allowed for any job. Exactly computable here, unlike the general
/// threshold-based parameter.
pub fn finite_feasibility(inst: &Instance) -> Rat {
    let m = inst.machines();
    let min_count = (0..inst.jobs())
        .map(|j| inst.feasible_machines(j).len())
        .min()
        .unwrap_or(m);
    Rat::new(BigInt::from(min_count), BigInt::from(m))
}

#[derive(Clone, Debug)]
pub struct ResRun {
    pub assignment: Assignment,
    pub phi: Rat,
    /// Average machine load, identical for every feasible assignment here.
    pub l_opt: Rat,
    pub delta: u64,
    pub pushes: usize,
    pub push_cap: usize,
    pub p_max: u64,
}

pub fn schedule_restricted(inst: &Instance) -> Assignment {
    schedule_restricted_detailed(inst).assignment
}

/// One push-loop call with `delta = floor(L_opt / phi)`; the result has no
/// overloaded machine, i.e. makespan at most `p_max + delta`.
pub fn schedule_restricted_detailed(inst: &Instance) -> ResRun {
    let m = inst.machines();
    let p_max = inst.max_finite_time();
    // Base size of job j is its (unique) finite entry value.
    let total_base: u64 = (0..inst.jobs())
        .map(|j| {
            let i = inst.feasible_machines(j)[0];
            inst.time(i, j).unwrap()
        })
        .sum();
    let min_count = (0..inst.jobs())
        .map(|j| inst.feasible_machines(j).len())
        .min()
        .unwrap_or(m) as u64;
    // floor(L_opt / phi) = floor((total/m) / (d/m)) = floor(total / d).
    let delta = if min_count == 0 { 0 } else { total_base / min_count };
    let l_opt = Rat::new(BigInt::from(total_base), BigInt::from(m));

    let sigma0 = initial_feasible(inst);
    let run = ubf_detailed(inst, &sigma0, delta);
    let part = partition(inst, &run.assignment, delta);
    assert!(
        part.overloaded.is_empty(),
        "push loop must terminate with no overloaded machine at delta {delta}"
    );
    ResRun {
        assignment: run.assignment,
        phi: finite_feasibility(inst),
        l_opt,
        delta,
        pushes: run.pushes,
        push_cap: run.push_cap,
        p_max,
    }
}
