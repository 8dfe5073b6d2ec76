//! Reoptimization on identical machines with 0/1 transition costs.
//!
//! Jobs become items of size `p_j / T` for a near-optimal target `T`; items
//! above `eps0` are large and have their sizes rounded down to multiples of
//! `eps0^2`. Every feasible multiset placement of the rounded large items
//! into `m` unit bins is tried: a minimum-cost perfect matching decides
//! which machine hosts which bin content (machines keep their old items for
//! free), retained small items stay put up to capacity one, and everything
//! omitted or new lands by first-fit into bins relaxed to `1 + eps0`. The
//! cheapest configuration wins, giving makespan at most `(1 + eps) * C*` at
//! transition cost no higher than any optimal-makespan schedule.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::matching::min_cost_saturating_matching;
use crate::model::{load_profile, rat_u, Assignment, Instance, Kind, Rat};
use crate::oracle;
use crate::reopt::{ReoptError, ReoptInput};

/// Forbidden-edge sentinel for the machine/content matching.
const BIG: i64 = 1 << 40;

pub const DEFAULT_CONFIG_CAP: usize = 1_000_000;

/// Near-optimal makespan target for an identical-machines instance:
/// `C* <= T <= (1 + eps0) C*`. Exact within the enumeration budget, a
/// first-fit-decreasing capacity search beyond it.
pub fn ptas_target(inst: &Instance, _eps0: &Rat) -> Result<u64, ReoptError> {
    assert_eq!(inst.kind(), Kind::Identical, "identical instances only");
    let n = inst.jobs();
    if n == 0 {
        return Ok(0);
    }
    match oracle::exact_makespan(inst) {
        Ok(res) => Ok(res.t_opt),
        Err(oracle::OracleError::BudgetExceeded { .. }) => {
            let jobs: Vec<u64> = (0..n).map(|j| inst.time(0, j).unwrap()).collect();
            let m = inst.machines();
            let total: u64 = jobs.iter().sum();
            let lo = jobs.iter().copied().max().unwrap().max(total.div_ceil(m as u64));
            let hi = lpt_makespan(&jobs, m);
            let mut lo_c = lo;
            let mut hi_c = hi;
            while lo_c < hi_c {
                let mid = lo_c + (hi_c - lo_c) / 2;
                if ffd_fits(&jobs, m, mid) {
                    hi_c = mid;
                } else {
                    lo_c = mid + 1;
                }
            }
            Ok(lo_c)
        }
    }
}

fn lpt_makespan(jobs: &[u64], m: usize) -> u64 {
    let mut sorted: Vec<u64> = jobs.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut loads = vec![0u64; m];
    for p in sorted {
        let i = (0..m).min_by_key(|&i| (loads[i], i)).unwrap();
        loads[i] += p;
    }
    loads.into_iter().max().unwrap_or(0)
}

fn ffd_fits(jobs: &[u64], m: usize, cap: u64) -> bool {
    let mut sorted: Vec<u64> = jobs.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut loads = vec![0u64; m];
    'next: for p in sorted {
        for load in loads.iter_mut() {
            if *load + p <= cap {
                *load += p;
                continue 'next;
            }
        }
        return false;
    }
    true
}

/// Item sizes relative to the target, with large items rounded down to the
/// `eps0^2` grid.
#[derive(Clone, Debug)]
pub struct ItemScale {
    pub t: u64,
    pub eps0: Rat,
    pub alpha: Vec<Rat>,
    pub large: Vec<bool>,
    /// Rounded size for large items, the plain size for small ones.
    pub rounded: Vec<Rat>,
}

pub fn item_scale(inst: &Instance, eps0: &Rat, t: u64) -> ItemScale {
    let grid = eps0 * eps0;
    let mut alpha = Vec::with_capacity(inst.jobs());
    let mut large = Vec::with_capacity(inst.jobs());
    let mut rounded = Vec::with_capacity(inst.jobs());
    for j in 0..inst.jobs() {
        let a = rat_u(inst.time(0, j).unwrap()) / rat_u(t);
        let is_large = a > *eps0;
        let r = if is_large { (&a / &grid).floor() * &grid } else { a.clone() };
        alpha.push(a);
        large.push(is_large);
        rounded.push(r);
    }
    ItemScale { t, eps0: eps0.clone(), alpha, large, rounded }
}

/// One bin's large-item content, as counts per distinct rounded size.
pub type BinType = Vec<usize>;

/// A feasible placement of the rounded large items into `m` unit bins, up to
/// bin identity: bin types with multiplicities summing to `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub bins: Vec<usize>,
}

/// Distinct rounded large sizes, descending, with their members ascending.
pub struct SizeClasses {
    pub sizes: Vec<Rat>,
    pub members: Vec<Vec<usize>>,
}

pub fn size_classes(scale: &ItemScale) -> SizeClasses {
    let mut map: BTreeMap<Rat, Vec<usize>> = BTreeMap::new();
    for j in 0..scale.alpha.len() {
        if scale.large[j] {
            map.entry(scale.rounded[j].clone()).or_default().push(j);
        }
    }
    let mut sizes = Vec::new();
    let mut members = Vec::new();
    for (size, jobs) in map.into_iter().rev() {
        sizes.push(size);
        members.push(jobs);
    }
    SizeClasses { sizes, members }
}

/// All bin contents with unit rounded capacity and at most `floor(1/eps0)`
/// items.
pub fn feasible_bin_types(classes: &SizeClasses, eps0: &Rat) -> Vec<BinType> {
    let cap_items = (Rat::one() / eps0).floor().to_integer();
    let cap_items: usize = cap_items.try_into().unwrap_or(usize::MAX);
    let mut types = Vec::new();
    let mut current = vec![0usize; classes.sizes.len()];
    fn rec(
        c: usize,
        classes: &SizeClasses,
        used: Rat,
        count: usize,
        cap_items: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<BinType>,
    ) {
        if c == classes.sizes.len() {
            out.push(current.clone());
            return;
        }
        let max_by_count = classes.members[c].len().min(cap_items - count);
        for k in 0..=max_by_count {
            let add = classes.sizes[c].clone() * crate::model::rat(k as i64);
            let next_used = &used + &add;
            if next_used > Rat::one() {
                break;
            }
            current[c] = k;
            rec(c + 1, classes, next_used, count + k, cap_items, current, out);
        }
        current[c] = 0;
    }
    rec(0, classes, Rat::zero(), 0, cap_items, &mut current, &mut types);
    types
}

/// Streams every feasible configuration: multisets of `m` bin types whose
/// class totals match the large-item counts exactly.
pub fn enumerate_configurations(
    classes: &SizeClasses,
    types: &[BinType],
    m: usize,
    cap: usize,
) -> Result<Vec<Configuration>, ReoptError> {
    let targets: Vec<usize> = classes.members.iter().map(|v| v.len()).collect();
    let mut out = Vec::new();
    let mut bins: Vec<usize> = Vec::new();
    let mut counts = vec![0usize; targets.len()];

    fn rec(
        next_type: usize,
        bins_left: usize,
        types: &[BinType],
        targets: &[usize],
        counts: &mut Vec<usize>,
        bins: &mut Vec<usize>,
        out: &mut Vec<Configuration>,
        cap: usize,
    ) -> Result<(), ReoptError> {
        if counts == targets && bins_left == 0 {
            out.push(Configuration { bins: bins.clone() });
            if out.len() > cap {
                return Err(ReoptError::ConfigurationBudgetExceeded { configurations: out.len() });
            }
            return Ok(());
        }
        if bins_left == 0 || next_type >= types.len() {
            return Ok(());
        }
        // Use `next_type` zero or more times, then move on; bins are a
        // multiset so types are taken in nondecreasing index order.
        let mut used = 0usize;
        loop {
            if counts.iter().zip(targets).all(|(c, t)| c <= t) {
                rec(next_type + 1, bins_left - used, types, targets, counts, bins, out, cap)?;
            } else {
                break;
            }
            if used == bins_left {
                break;
            }
            for (c, t) in counts.iter_mut().zip(&types[next_type]) {
                *c += t;
            }
            bins.push(next_type);
            used += 1;
        }
        for _ in 0..used {
            bins.pop();
            for (c, t) in counts.iter_mut().zip(&types[next_type]) {
                *c -= t;
            }
        }
        Ok(())
    }

    rec(0, m, types, &targets, &mut counts, &mut bins, &mut out, cap)?;
    Ok(out)
}

/// Matching sketch: which bin type each surviving machine hosts.
#[derive(Clone, Debug)]
pub struct MatchSketch {
    /// Per new machine, index into the type table.
    pub machine_type: Vec<usize>,
    /// Matching cost as estimated on the edges (arrivals of large items plus
    /// omitted small items).
    pub estimated_cost: i64,
}

/// Builds the complete bipartite graph between old machine contents and the
/// configuration's bins and solves the minimum-cost perfect matching.
/// Machines removed from the instance may only take padding bins.
pub fn match_and_cost(
    input: &ReoptInput,
    scale: &ItemScale,
    classes: &SizeClasses,
    types: &[BinType],
    config: &Configuration,
) -> MatchSketch {
    let m = input.new.machines();
    let m0 = input.old.machines();
    let l = m.max(m0);
    let content = input.old_content_by_machine();

    // Old large counts per machine and class; old smalls per machine.
    let mut old_large: Vec<Vec<usize>> = vec![vec![0; classes.sizes.len()]; l];
    let mut old_smalls: Vec<Vec<usize>> = vec![Vec::new(); l];
    for i in 0..l {
        for &j in &content[i] {
            if scale.large[j] {
                let c = classes.sizes.iter().position(|s| *s == scale.rounded[j]).unwrap();
                old_large[i][c] += 1;
            } else {
                old_smalls[i].push(j);
            }
        }
    }

    let edge_cost = |i: usize, k: usize| -> i64 {
        let real_bin = k < m;
        let real_machine = i < m;
        match (real_machine, real_bin) {
            (false, false) => 0,
            (false, true) => BIG,
            (true, false) => BIG,
            (true, true) => {
                let ty = &types[config.bins[k]];
                let arrivals: usize = ty
                    .iter()
                    .zip(&old_large[i])
                    .map(|(&want, &have)| want.saturating_sub(have))
                    .sum();
                let mixture: Rat = ty
                    .iter()
                    .zip(&classes.sizes)
                    .map(|(&c, s)| s * crate::model::rat(c as i64))
                    .fold(Rat::zero(), |a, v| a + v);
                let omitted = omitted_smalls(scale, &old_smalls[i], &mixture).len();
                (arrivals + omitted) as i64
            }
        }
    };

    let edges: Vec<Vec<(usize, i64)>> = (0..l)
        .map(|i| (0..l).map(|k| (k, edge_cost(i, k))).collect())
        .collect();
    let (matched, total) =
        min_cost_saturating_matching(l, l, &edges).expect("complete graph matches");
    assert!(total < BIG, "matching crossed a forbidden edge");

    let mut machine_type = vec![0usize; m];
    for (i, &k) in matched.iter().enumerate() {
        if i < m {
            debug_assert!(k < m, "real machine matched to padding");
            machine_type[i] = config.bins[k];
        }
    }
    MatchSketch { machine_type, estimated_cost: total }
}

/// Small items of one machine that must leave so the mixture stays within
/// capacity one: largest first, ties broken by the higher job id.
fn omitted_smalls(scale: &ItemScale, smalls: &[usize], large_mixture: &Rat) -> Vec<usize> {
    let mut total = large_mixture.clone();
    for &j in smalls {
        total += &scale.alpha[j];
    }
    let mut order: Vec<usize> = smalls.to_vec();
    order.sort_by(|&a, &b| {
        scale.alpha[b].cmp(&scale.alpha[a]).then(b.cmp(&a))
    });
    let mut omitted = Vec::new();
    let mut idx = 0;
    while total > Rat::one() && idx < order.len() {
        total -= &scale.alpha[order[idx]];
        omitted.push(order[idx]);
        idx += 1;
    }
    omitted
}

/// Greedy placement into the first bin that stays within `capacity`;
/// items must be pre-sorted. An item omitted from `home` was already charged
/// as a departure, so foreign bins are scanned first and the home bin serves
/// only as the completeness fallback. Returns the chosen machine per item.
pub fn relaxed_first_fit(
    mixture: &mut [Rat],
    capacity: &Rat,
    items: &[(Rat, usize, Option<usize>)],
) -> Result<Vec<usize>, usize> {
    let mut placed = Vec::with_capacity(items.len());
    'items: for (size, id, home) in items {
        for (i, load) in mixture.iter_mut().enumerate() {
            if Some(i) == *home {
                continue;
            }
            if &*load + size <= *capacity {
                *load += size;
                placed.push(i);
                continue 'items;
            }
        }
        if let Some(h) = home {
            if *h < mixture.len() && &mixture[*h] + size <= *capacity {
                mixture[*h] += size;
                placed.push(*h);
                continue 'items;
            }
        }
        return Err(*id);
    }
    Ok(placed)
}

/// Expands a sketch into a full assignment: retained large items stay on
/// their machine (deficits filled from the pool in ascending job order),
/// retained small items stay within capacity one, and everything else
/// first-fits at capacity `1 + eps0`. Returns the assignment with its
/// recounted transition cost.
pub fn assemble(
    input: &ReoptInput,
    scale: &ItemScale,
    classes: &SizeClasses,
    types: &[BinType],
    sketch: &MatchSketch,
) -> Result<(Assignment, u64), ReoptError> {
    let m = input.new.machines();
    let n = input.new.jobs();
    let content = input.old_content_by_machine();
    let mut sigma: Vec<Option<usize>> = vec![None; n];
    let mut mixture: Vec<Rat> = vec![Rat::zero(); m];
    let mut deficits: Vec<(usize, usize, usize)> = Vec::new(); // (machine, class, missing)
    let mut kept: Vec<Vec<usize>> = vec![Vec::new(); classes.sizes.len()];

    for i in 0..m {
        let ty = &types[sketch.machine_type[i]];
        for (c, &want) in ty.iter().enumerate() {
            let members: Vec<usize> = content
                .get(i)
                .map(|jobs| {
                    jobs.iter()
                        .copied()
                        .filter(|&j| scale.large[j] && scale.rounded[j] == classes.sizes[c])
                        .collect()
                })
                .unwrap_or_default();
            let keep = want.min(members.len());
            for &j in members.iter().take(keep) {
                sigma[j] = Some(i);
                kept[c].push(j);
                mixture[i] += &scale.rounded[j];
            }
            if want > keep {
                deficits.push((i, c, want - keep));
            }
        }
    }

    // Pool per class: large items not retained anywhere, ascending id.
    for (c, members) in classes.members.iter().enumerate() {
        let mut pool: Vec<usize> =
            members.iter().copied().filter(|&j| sigma[j].is_none()).collect();
        pool.sort_unstable();
        let mut pool = pool.into_iter();
        for &(i, dc, missing) in &deficits {
            if dc != c {
                continue;
            }
            for _ in 0..missing {
                let j = pool.next().expect("configuration covers every large item");
                sigma[j] = Some(i);
                mixture[i] += &scale.rounded[j];
            }
        }
        assert!(pool.next().is_none(), "configuration class count mismatch");
    }

    // Retained smalls per machine.
    for i in 0..m {
        let smalls: Vec<usize> = content
            .get(i)
            .map(|jobs| jobs.iter().copied().filter(|&j| !scale.large[j]).collect())
            .unwrap_or_default();
        let omitted = omitted_smalls(scale, &smalls, &mixture[i]);
        for &j in &smalls {
            if !omitted.contains(&j) {
                sigma[j] = Some(i);
                mixture[i] += &scale.alpha[j];
            }
        }
    }

    // First-fit for the rest at relaxed capacity; an item's old bin comes
    // last so that charged departures actually depart whenever possible.
    let cap = Rat::one() + &scale.eps0;
    let mut rest: Vec<(Rat, usize, Option<usize>)> = (0..n)
        .filter(|&j| sigma[j].is_none())
        .map(|j| (scale.alpha[j].clone(), j, input.old_machine_of(j).filter(|&h| h < m)))
        .collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let placed = relaxed_first_fit(&mut mixture, &cap, &rest)
        .map_err(|job| ReoptError::RelaxedPackingFailed { job })?;
    for ((_, j, _), &i) in rest.iter().zip(&placed) {
        sigma[*j] = Some(i);
    }

    for (i, mix) in mixture.iter().enumerate() {
        assert!(mix <= &cap, "machine {i} mixture exceeds relaxed capacity");
    }

    let sigma: Vec<usize> = sigma.into_iter().map(|s| s.expect("all jobs placed")).collect();
    let assignment = Assignment::new(sigma);
    let cost = input.transition_cost(&assignment);
    Ok((assignment, cost))
}

/// Full reoptimizer: enumerates configurations, matches, assembles, and
/// returns the cheapest solution (ties by makespan, then assignment order).
pub fn reoptimize_identical(
    input: &ReoptInput,
    eps: &Rat,
) -> Result<(Assignment, u64), ReoptError> {
    reoptimize_identical_capped(input, eps, DEFAULT_CONFIG_CAP)
}

pub fn reoptimize_identical_capped(
    input: &ReoptInput,
    eps: &Rat,
    config_cap: usize,
) -> Result<(Assignment, u64), ReoptError> {
    input.validate()?;
    if input.new.kind() != Kind::Identical || input.old.kind() != Kind::Identical {
        return Err(ReoptError::Malformed("identical-machine reoptimizer needs identical instances".into()));
    }
    let n = input.new.jobs();
    if n == 0 {
        return Ok((Assignment::empty(), 0));
    }
    let eps0 = eps / crate::model::rat(4);
    let t = ptas_target(&input.new, &eps0)?;
    let m = input.new.machines();
    if t == 0 {
        // Zero-length jobs: keep surviving placements, park the rest on the
        // first machine.
        let sigma: Vec<usize> = (0..n)
            .map(|j| match input.old_machine_of(j) {
                Some(i) if i < m => i,
                _ => 0,
            })
            .collect();
        let a = Assignment::new(sigma);
        let cost = input.transition_cost(&a);
        return Ok((a, cost));
    }

    let scale = item_scale(&input.new, &eps0, t);
    let alpha_sum: Rat = scale.alpha.iter().fold(Rat::zero(), |a, v| a + v);
    assert!(
        alpha_sum <= crate::model::rat(m as i64),
        "item sizes exceed machine count, target below optimum"
    );

    let classes = size_classes(&scale);
    let types = feasible_bin_types(&classes, &eps0);
    let configs = enumerate_configurations(&classes, &types, m, config_cap)?;
    assert!(!configs.is_empty(), "a feasible configuration always exists at T >= C*");

    let mut best: Option<(u64, u64, Assignment)> = None;
    for config in &configs {
        let sketch = match_and_cost(input, &scale, &classes, &types, config);
        let (assignment, cost) = assemble(input, &scale, &classes, &types, &sketch)?;
        let mk = load_profile(&input.new, &assignment)?.makespan;
        // Mixture capacity (1 + eps0) plus rounding slack (eps0) bounds the
        // true makespan by (1 + 2 eps0) T.
        assert!(
            rat_u(mk) <= (Rat::one() + &eps0 + &eps0) * rat_u(t),
            "assembled makespan {mk} exceeds (1 + 2 eps0) T"
        );
        let better = match &best {
            None => true,
            Some((bc, bm, ba)) => {
                (cost, mk, &assignment.sigma) < (*bc, *bm, &ba.sigma)
            }
        };
        if better {
            best = Some((cost, mk, assignment));
        }
    }
    let (cost, _, assignment) = best.expect("at least one configuration evaluated");
    Ok((assignment, cost))
}
