//! Reoptimization on uniform machines with 0/1 transition costs and a
//! bounded speed ratio.
//!
//! Machines become bins of capacity `s_i / s_1`, jobs become pieces of size
//! `p_j / (s_1 T)`, and sizes in the interval `(eps^{k+1}, eps^k]` are
//! rounded down to the `eps^{k+2}` grid. Bins are processed stage by stage
//! in decreasing size interval; a state records the multiset of pieces still
//! to be packed as large or medium for the current interval plus the slack
//! reserved in bigger bins (`v1` enormous, `v2` huge, `v` current), floored
//! to the grid of the interval that will consume it. Packing a bin is an
//! edge whose cost counts the bin's old pieces it fails to re-pack; the
//! cheapest path therefore maximizes pieces staying home. Between stages a
//! boundary step charges the unpacked pieces of the closed interval against
//! the enormous slack and re-bases the rest. After the path, each bin first
//! re-absorbs its own remaining small pieces in increasing size until its
//! capacity is first exceeded, and first-fit places the leftovers into the
//! reserved slack.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::model::{load_profile, rat_u, Assignment, Instance, Kind, Rat};
use crate::oracle;
use crate::reopt::{ReoptError, ReoptInput};

/// Default cap on distinct states explored per run.
pub const DEFAULT_STATE_CAP: usize = 200_000;

/// Piece and bin geometry after normalization by the fastest speed and the
/// makespan target.
#[derive(Clone, Debug)]
pub struct ScaledUniformInstance {
    pub eps: Rat,
    /// Bin capacities `s_i / s_1`, nonincreasing, first entry one.
    pub capacities: Vec<Rat>,
    pub bin_interval: Vec<usize>,
    pub sizes: Vec<Rat>,
    pub rounded: Vec<Rat>,
    pub interval: Vec<usize>,
}

/// Size classes: pieces grouped by (interval, rounded size).
#[derive(Clone, Debug)]
pub struct PieceClass {
    pub interval: usize,
    pub size: Rat,
    pub members: Vec<usize>,
}

fn interval_of(x: &Rat, eps: &Rat) -> usize {
    // Smallest k with x > eps^{k+1}; sizes are in (0, 1].
    let mut k = 0usize;
    let mut bound = eps.clone();
    while *x <= bound {
        bound *= eps;
        k += 1;
    }
    k
}

fn eps_pow(eps: &Rat, k: usize) -> Rat {
    let mut r = Rat::one();
    for _ in 0..k {
        r *= eps;
    }
    r
}

pub fn scale_uniform(
    inst: &Instance,
    t_true: &Rat,
    eps: &Rat,
) -> Result<ScaledUniformInstance, ReoptError> {
    assert_eq!(inst.kind(), Kind::Uniform);
    let speeds = inst.speeds().expect("uniform instance has speeds");
    let base = inst.base_times().expect("uniform instance has base times");
    let as_rat = |&(n, d): &(u64, u64)| Rat::new(n.into(), d.into());
    let s: Vec<Rat> = speeds.iter().map(as_rat).collect();
    if s.windows(2).any(|w| w[0] < w[1]) {
        return Err(ReoptError::Malformed("speeds must be nonincreasing".into()));
    }
    let s1 = s[0].clone();
    let capacities: Vec<Rat> = s.iter().map(|si| si / &s1).collect();
    let denom = &s1 * t_true;
    let mut sizes = Vec::with_capacity(base.len());
    let mut rounded = Vec::with_capacity(base.len());
    let mut interval = Vec::with_capacity(base.len());
    for &p in base {
        let a = rat_u(p) / &denom;
        if a > Rat::one() {
            return Err(ReoptError::Malformed(
                "piece larger than the fastest bin; target below optimum".into(),
            ));
        }
        let k = interval_of(&a, eps);
        let grid = eps_pow(eps, k + 2);
        let r = (&a / &grid).floor() * &grid;
        sizes.push(a);
        rounded.push(r);
        interval.push(k);
    }
    let bin_interval = capacities.iter().map(|c| interval_of(c, eps)).collect();
    Ok(ScaledUniformInstance {
        eps: eps.clone(),
        capacities,
        bin_interval,
        sizes,
        rounded,
        interval,
    })
}

pub fn piece_classes(scaled: &ScaledUniformInstance) -> Vec<PieceClass> {
    let mut map: BTreeMap<(usize, Rat), Vec<usize>> = BTreeMap::new();
    for j in 0..scaled.sizes.len() {
        map.entry((scaled.interval[j], scaled.rounded[j].clone())).or_default().push(j);
    }
    let mut classes: Vec<PieceClass> = map
        .into_iter()
        .map(|((interval, size), members)| PieceClass { interval, size, members })
        .collect();
    // Within an interval, larger sizes first.
    classes.sort_by(|a, b| a.interval.cmp(&b.interval).then(b.size.cmp(&a.size)));
    classes
}

/// Remaining work and reserved slack between layers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackState {
    /// Counts per class of the current interval (to pack as large).
    pub large: Vec<usize>,
    /// Counts per class of the next interval (to pack as medium).
    pub medium: Vec<usize>,
    pub v1: Rat,
    pub v2: Rat,
    pub v: Rat,
}

#[derive(Clone, Debug)]
pub struct BackStep {
    pub prev: PackState,
    /// Large and medium class counts packed into this layer's bin; empty for
    /// boundary steps.
    pub lambda: Vec<usize>,
    pub mu: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct NodeInfo {
    pub cost: u64,
    pub back: Option<BackStep>,
}

#[derive(Clone, Debug)]
pub enum Step {
    /// Pack the bin of this machine (interval attached).
    Bin { machine: usize, interval: usize },
    /// Close `interval` and re-base slack for the next one.
    Boundary { interval: usize },
}

/// The forward exploration of the layered graph: one state map per step.
pub struct LayeredGraph {
    pub scaled: ScaledUniformInstance,
    pub classes: Vec<PieceClass>,
    pub steps: Vec<Step>,
    /// `layers[0]` holds the initial state; `layers[i + 1]` the states after
    /// step `i`.
    pub layers: Vec<BTreeMap<PackState, NodeInfo>>,
    /// Index into `layers` holding the states after the last bin was packed.
    pub last_bin_layer: usize,
    pub states_explored: usize,
}

fn class_indices(classes: &[PieceClass], interval: usize) -> Vec<usize> {
    classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.interval == interval)
        .map(|(i, _)| i)
        .collect()
}

/// Enumerates count sub-vectors of `avail` whose weighted size stays within
/// `cap` after `base`.
fn sub_multisets(
    avail: &[usize],
    sizes: &[Rat],
    cap: &Rat,
    base: &Rat,
) -> Vec<(Vec<usize>, Rat)> {
    let mut out = Vec::new();
    let mut current = vec![0usize; avail.len()];
    fn rec(
        c: usize,
        avail: &[usize],
        sizes: &[Rat],
        cap: &Rat,
        used: Rat,
        current: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, Rat)>,
    ) {
        if c == avail.len() {
            out.push((current.clone(), used));
            return;
        }
        for k in 0..=avail[c] {
            let next = &used + &(&sizes[c] * crate::model::rat(k as i64));
            if next > *cap {
                break;
            }
            current[c] = k;
            rec(c + 1, avail, sizes, cap, next, current, out);
        }
        current[c] = 0;
    }
    rec(0, avail, sizes, cap, base.clone(), &mut current, &mut out);
    out
}

/// Builds and explores the layered graph for the rounded pieces of `input`'s
/// new instance at the given target.
pub fn build_layered_graph(
    scaled: &ScaledUniformInstance,
    input: &ReoptInput,
    state_cap: usize,
) -> Result<LayeredGraph, ReoptError> {
    let classes = piece_classes(scaled);
    let m = scaled.capacities.len();
    let max_piece_interval = scaled.interval.iter().copied().max().unwrap_or(0);
    let max_bin_interval = scaled.bin_interval.iter().copied().max().unwrap_or(0);
    let top = max_piece_interval.max(max_bin_interval);

    // Steps: bins of interval 0, boundary 0, bins of interval 1, boundary 1,
    // ... up to the last interval that still has pieces or bins.
    let mut steps = Vec::new();
    let mut last_bin_step = 0usize;
    for k in 0..=top {
        for i in 0..m {
            if scaled.bin_interval[i] == k {
                steps.push(Step::Bin { machine: i, interval: k });
                last_bin_step = steps.len();
            }
        }
        steps.push(Step::Boundary { interval: k });
    }

    // Old content per machine, as class counts (only pieces surviving into
    // the new instance matter for edge costs).
    let content = input.old_content_by_machine();
    let mut old_counts: Vec<Vec<usize>> = vec![vec![0; classes.len()]; m];
    for (i, jobs) in content.iter().enumerate().take(m) {
        for &j in jobs {
            let c = classes
                .iter()
                .position(|cl| cl.interval == scaled.interval[j] && cl.size == scaled.rounded[j])
                .unwrap();
            old_counts[i][c] += 1;
        }
    }

    let counts_of = |interval: usize| -> Vec<usize> {
        class_indices(&classes, interval)
            .iter()
            .map(|&c| classes[c].members.len())
            .collect()
    };

    let initial = PackState {
        large: counts_of(0),
        medium: counts_of(1),
        v1: Rat::zero(),
        v2: Rat::zero(),
        v: Rat::zero(),
    };
    let mut layers: Vec<BTreeMap<PackState, NodeInfo>> = Vec::with_capacity(steps.len() + 1);
    layers.push(BTreeMap::from([(initial, NodeInfo { cost: 0, back: None })]));
    let mut states_explored = 1usize;
    let mut last_bin_layer = 0usize;

    for (si, step) in steps.iter().enumerate() {
        let mut next: BTreeMap<PackState, NodeInfo> = BTreeMap::new();
        let current = &layers[si];
        match *step {
            Step::Bin { machine, interval } => {
                let large_cls = class_indices(&classes, interval);
                let medium_cls = class_indices(&classes, interval + 1);
                let large_sizes: Vec<Rat> =
                    large_cls.iter().map(|&c| classes[c].size.clone()).collect();
                let medium_sizes: Vec<Rat> =
                    medium_cls.iter().map(|&c| classes[c].size.clone()).collect();
                let cap = &scaled.capacities[machine];
                let v_grid = eps_pow(&scaled.eps, interval + 4);
                for (state, info) in current {
                    for (lambda, lsize) in
                        sub_multisets(&state.large, &large_sizes, cap, &Rat::zero())
                    {
                        for (mu, packed) in
                            sub_multisets(&state.medium, &medium_sizes, cap, &lsize)
                        {
                            // `packed` is the running total including the
                            // large part (the base of the inner call).
                            debug_assert!(packed <= *cap);
                            // Departures: old pieces of this bin not re-packed.
                            let mut cost = info.cost;
                            for (pos, &c) in large_cls.iter().enumerate() {
                                cost +=
                                    old_counts[machine][c].saturating_sub(lambda[pos]) as u64;
                            }
                            for (pos, &c) in medium_cls.iter().enumerate() {
                                cost += old_counts[machine][c].saturating_sub(mu[pos]) as u64;
                            }
                            let slack = cap - &packed;
                            let floored = (&slack / &v_grid).floor() * &v_grid;
                            let mut state2 = state.clone();
                            for (pos, take) in lambda.iter().enumerate() {
                                state2.large[pos] -= take;
                            }
                            for (pos, take) in mu.iter().enumerate() {
                                state2.medium[pos] -= take;
                            }
                            state2.v += floored;
                            let replace = match next.get(&state2) {
                                None => true,
                                Some(old) => cost < old.cost,
                            };
                            if replace {
                                next.insert(
                                    state2,
                                    NodeInfo {
                                        cost,
                                        back: Some(BackStep {
                                            prev: state.clone(),
                                            lambda: lambda.clone(),
                                            mu,
                                        }),
                                    },
                                );
                            }
                        }
                    }
                }
            }
            Step::Boundary { interval } => {
                let next_medium = counts_of(interval + 2);
                let large_cls = class_indices(&classes, interval);
                for (state, info) in current {
                    let Some(state2) =
                        boundary_transform(state, interval, &large_cls, &classes, scaled, &next_medium)
                    else {
                        continue;
                    };
                    let replace = match next.get(&state2) {
                        None => true,
                        Some(old) => info.cost < old.cost,
                    };
                    if replace {
                        next.insert(
                            state2,
                            NodeInfo {
                                cost: info.cost,
                                back: Some(BackStep {
                                    prev: state.clone(),
                                    lambda: Vec::new(),
                                    mu: Vec::new(),
                                }),
                            },
                        );
                    }
                }
            }
        }
        states_explored += next.len();
        if states_explored > state_cap {
            return Err(ReoptError::StateBudgetExceeded { states: states_explored });
        }
        layers.push(next);
        if si + 1 == last_bin_step {
            last_bin_layer = si + 1;
        }
    }
    if last_bin_step == 0 {
        last_bin_layer = 0;
    }

    Ok(LayeredGraph {
        scaled: scaled.clone(),
        classes,
        steps,
        layers,
        last_bin_layer,
        states_explored,
    })
}

/// Closes `interval`: unpacked pieces of it must fit the enormous slack,
/// which is then re-based (floored) to the next interval's grid; huge slack
/// becomes enormous, current becomes huge.
fn boundary_transform(
    state: &PackState,
    interval: usize,
    large_cls: &[usize],
    classes: &[PieceClass],
    scaled: &ScaledUniformInstance,
    next_medium: &[usize],
) -> Option<PackState> {
    let mut need = Rat::zero();
    for (pos, &c) in large_cls.iter().enumerate() {
        need += &classes[c].size * crate::model::rat(state.large[pos] as i64);
    }
    if need > state.v1 {
        return None;
    }
    let rest = &state.v1 - &need;
    let next_grid = eps_pow(&scaled.eps, interval + 3);
    let v1 = (&rest / &next_grid).floor() * &next_grid + &state.v2;
    Some(PackState {
        large: state.medium.clone(),
        medium: next_medium.to_vec(),
        v1,
        v2: state.v.clone(),
        v: Rat::zero(),
    })
}

/// Decoded large/medium pack per machine: counts per class index.
type BinPacks = Vec<Vec<usize>>;

fn decode_path(graph: &LayeredGraph, end_state: &PackState) -> Option<BinPacks> {
    let m = graph.scaled.capacities.len();
    let mut packs: BinPacks = vec![vec![0; graph.classes.len()]; m];
    let mut cursor = end_state.clone();
    for si in (0..graph.last_bin_layer).rev() {
        let info = graph.layers[si + 1].get(&cursor)?;
        let back = info.back.as_ref()?;
        if let Step::Bin { machine, interval } = graph.steps[si] {
            let large_cls = class_indices(&graph.classes, interval);
            let medium_cls = class_indices(&graph.classes, interval + 1);
            for (pos, &c) in large_cls.iter().enumerate() {
                packs[machine][c] = back.lambda[pos];
            }
            for (pos, &c) in medium_cls.iter().enumerate() {
                packs[machine][c] = back.mu[pos];
            }
        }
        cursor = back.prev.clone();
    }
    Some(packs)
}

/// Runs the trailing boundary chain from a post-last-bin state; true iff the
/// slack accounting absorbs everything.
fn chain_succeeds(graph: &LayeredGraph, state: &PackState) -> bool {
    let mut cursor = state.clone();
    for si in graph.last_bin_layer..graph.steps.len() {
        match graph.steps[si] {
            Step::Bin { .. } => unreachable!("no bins after the last bin layer"),
            Step::Boundary { interval } => {
                let large_cls = class_indices(&graph.classes, interval);
                let next_medium: Vec<usize> = class_indices(&graph.classes, interval + 2)
                    .iter()
                    .map(|&c| graph.classes[c].members.len())
                    .collect();
                match boundary_transform(
                    &cursor,
                    interval,
                    &large_cls,
                    &graph.classes,
                    &graph.scaled,
                    &next_medium,
                ) {
                    Some(s) => cursor = s,
                    None => return false,
                }
            }
        }
    }
    cursor.large.iter().all(|&c| c == 0) && cursor.medium.iter().all(|&c| c == 0)
}

/// Expands a decoded pack into an assignment: within each class, pieces stay
/// on their old machine when it packs them, the rest fill remaining slots in
/// ascending id order; leftover pieces go through the greedy small phase.
fn assemble(
    input: &ReoptInput,
    graph: &LayeredGraph,
    packs: &BinPacks,
) -> Result<(Assignment, u64), ReoptError> {
    let scaled = &graph.scaled;
    let m = scaled.capacities.len();
    let n = input.new.jobs();
    let content = input.old_content_by_machine();
    let mut sigma: Vec<Option<usize>> = vec![None; n];
    let mut mixture: Vec<Rat> = vec![Rat::zero(); m];

    for (c, class) in graph.classes.iter().enumerate() {
        // First pass: keep pieces at home.
        let mut remaining: Vec<usize> = Vec::new();
        let mut open_slots: Vec<(usize, usize)> = Vec::new();
        for i in 0..m {
            let want = packs[i][c];
            let home: Vec<usize> = content
                .get(i)
                .map(|jobs| {
                    jobs.iter()
                        .copied()
                        .filter(|&j| {
                            scaled.interval[j] == class.interval
                                && scaled.rounded[j] == class.size
                        })
                        .collect()
                })
                .unwrap_or_default();
            let keep = want.min(home.len());
            for &j in home.iter().take(keep) {
                sigma[j] = Some(i);
                mixture[i] += &class.size;
            }
            if want > keep {
                open_slots.push((i, want - keep));
            }
        }
        for &j in &class.members {
            if sigma[j].is_none() {
                remaining.push(j);
            }
        }
        // Second pass: foreigners fill open slots; whatever stays in
        // `remaining` afterwards goes to the small phase.
        let mut r_iter = remaining.into_iter();
        for (i, missing) in open_slots {
            for _ in 0..missing {
                let j = r_iter.next().expect("pack counts stay within class size");
                sigma[j] = Some(i);
                mixture[i] += &class.size;
            }
        }
    }

    // Greedy small phase, own bin first in increasing size until the
    // capacity is first exceeded.
    for i in 0..m {
        let mut own: Vec<usize> = (0..n)
            .filter(|&j| {
                sigma[j].is_none()
                    && input.old_machine_of(j) == Some(i)
                    && scaled.interval[j] >= scaled.bin_interval[i] + 2
            })
            .collect();
        own.sort_by(|&a, &b| {
            scaled.rounded[a].cmp(&scaled.rounded[b]).then(a.cmp(&b))
        });
        for j in own {
            if mixture[i] > scaled.capacities[i] {
                break;
            }
            sigma[j] = Some(i);
            mixture[i] += &scaled.rounded[j];
        }
    }
    // First-fit for the rest into bins where they count as small and the
    // reserved slack is not exhausted.
    let mut rest: Vec<usize> = (0..n).filter(|&j| sigma[j].is_none()).collect();
    rest.sort_by(|&a, &b| {
        scaled.rounded[b].cmp(&scaled.rounded[a]).then(a.cmp(&b))
    });
    for j in rest {
        let mut placed = false;
        for i in 0..m {
            if scaled.interval[j] < scaled.bin_interval[i] + 2 {
                continue;
            }
            let allowance =
                &scaled.capacities[i] + &eps_pow(&scaled.eps, scaled.bin_interval[i] + 4);
            if mixture[i] <= allowance {
                sigma[j] = Some(i);
                mixture[i] += &scaled.rounded[j];
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(ReoptError::RelaxedPackingFailed { job: j });
        }
    }

    // Per-bin relaxed load bound on the rounded mixture.
    for i in 0..m {
        let eps = &scaled.eps;
        let bound = &scaled.capacities[i]
            * (Rat::one() + eps + &(eps * eps * eps));
        assert!(
            mixture[i] <= bound,
            "bin {i} rounded mixture exceeds the relaxed bound"
        );
    }

    let sigma: Vec<usize> = sigma.into_iter().map(|s| s.expect("all pieces placed")).collect();
    let assignment = Assignment::new(sigma);
    let cost = input.transition_cost(&assignment);
    Ok((assignment, cost))
}

/// Full reoptimizer. `eps_target` is the end-to-end accuracy; the internal
/// grid runs at an eighth of it. `b` bounds the speed ratio `s_1 / s_m`.
pub fn reoptimize_uniform(
    input: &ReoptInput,
    eps_target: &Rat,
    b: &Rat,
) -> Result<(Assignment, u64), ReoptError> {
    reoptimize_uniform_capped(input, eps_target, b, DEFAULT_STATE_CAP)
}

pub fn reoptimize_uniform_capped(
    input: &ReoptInput,
    eps_target: &Rat,
    b: &Rat,
    state_cap: usize,
) -> Result<(Assignment, u64), ReoptError> {
    input.validate()?;
    if input.new.kind() != Kind::Uniform {
        return Err(ReoptError::Malformed("uniform-machine reoptimizer needs a uniform instance".into()));
    }
    let n = input.new.jobs();
    if n == 0 {
        return Ok((Assignment::empty(), 0));
    }
    let speeds = input.new.speeds().expect("uniform");
    let as_rat = |&(num, den): &(u64, u64)| Rat::new(num.into(), den.into());
    let ratio = as_rat(&speeds[0]) / as_rat(speeds.last().unwrap());
    if ratio > *b {
        return Err(ReoptError::Malformed("speed ratio exceeds the declared bound".into()));
    }

    let eps = eps_target / crate::model::rat(8);
    // Oracle-exact target at desk scale; the trailing slack analysis allows
    // raising T a bounded amount if the floored accounting rejects it.
    let opt = oracle::exact_makespan(&input.new)?;
    let t0 = opt.t_opt;
    let scale_div = rat_u(input.new.scale());
    let relax = (Rat::one() + &eps) * (Rat::one() + &eps + &eps_pow(&eps, 3));
    let t_limit_num = (Rat::one() + eps_target) * rat_u(t0) / &relax;

    let mut t_sc = t0.max(1);
    let mut best: Option<(u64, u64, Assignment)> = None;
    while rat_u(t_sc) <= t_limit_num {
        let t_true = rat_u(t_sc) / &scale_div;
        let scaled = scale_uniform(&input.new, &t_true, &eps)?;
        let graph = build_layered_graph(&scaled, input, state_cap)?;
        // One candidate per end-of-last-stage state whose trailing slack
        // chain succeeds: lightest path to it, then the greedy small phase.
        let end_layer = graph.layers[graph.last_bin_layer].clone();
        for (state, _info) in end_layer.iter() {
            if !chain_succeeds(&graph, state) {
                continue;
            }
            let Some(packs) = decode_path(&graph, state) else {
                continue;
            };
            let (assignment, cost) = assemble(input, &graph, &packs)?;
            let mk = load_profile(&input.new, &assignment)?.makespan;
            let better = match &best {
                None => true,
                Some((bc, bm, ba)) => (cost, mk, &assignment.sigma) < (*bc, *bm, &ba.sigma),
            };
            if better {
                best = Some((cost, mk, assignment));
            }
        }
        if best.is_some() {
            break;
        }
        t_sc += (t_sc / 16).max(1);
    }

    let (cost, mk, assignment) = best.ok_or(ReoptError::NoPath)?;
    // End-to-end accuracy against the exact optimum.
    assert!(
        rat_u(mk) <= (Rat::one() + eps_target) * rat_u(t0),
        "makespan {mk} exceeds (1 + eps) * {t0}"
    );
    Ok((assignment, cost))
}
