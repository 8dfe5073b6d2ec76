//! Deterministic instance generators with planted structure. The same seed
//! always reproduces the same bytes.

use mkspan::balance::{GraphBalancingInstance, TreeDecomposition};
use mkspan::model::Instance;
use mkspan::oracle;
use mkspan::reopt::{reopt_input, ReoptInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Draws an assignment first, then every entry at most its makespan and
    /// clamps to the running optimum until stable, so every entry ends at or
    /// below the final optimal makespan.
    FullyFeasiblePlanted { m: usize, n: usize, p_max: u64, seed: u64 },
    /// Per job: `d` allowed machines when given, otherwise a random nonempty
    /// set; entries at or below the optimum on the allowed set.
    PhiPlanted { m: usize, n: usize, d: usize, p_max: u64, seed: u64 },
    /// Restricted assignment with random job sizes and machine sets.
    RestrictedRandom {
        m: usize,
        n: usize,
        p_max: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        seed: u64,
    },
    /// Uniform machines with speeds in `[1/b, 1]`, fastest first.
    UniformBoundedRatio { m: usize, n: usize, p_max: u64, b: u64, seed: u64 },
    /// Weighted multigraph whose edges stay within a sliding vertex window,
    /// plus the matching path decomposition (or the single trivial bag).
    GraphBalancingRandom {
        vertices: usize,
        max_edges: usize,
        w_max: u64,
        span: usize,
        single_bag: bool,
        seed: u64,
    },
    /// Perturbs a base instance: add/remove jobs, drop the last machines.
    ReoptPerturbation {
        m: usize,
        n: usize,
        p_max: u64,
        add_jobs: usize,
        remove_jobs: usize,
        remove_machines: usize,
        uniform_b: Option<u64>,
        seed: u64,
    },
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Clamps finite entries to the current optimal makespan until stable; the
/// feasible-machine sets never change, so a planted per-job machine count is
/// preserved exactly.
fn clamp_to_optimum(mut p: Vec<Vec<Option<u64>>>) -> Instance {
    loop {
        let inst = Instance::unrelated(p.clone()).expect("generator output well-formed");
        let t_opt = oracle::exact_makespan(&inst).expect("generator stays in budget").t_opt;
        let mut changed = false;
        for row in &mut p {
            for entry in row.iter_mut().flatten() {
                if *entry > t_opt {
                    *entry = t_opt;
                    changed = true;
                }
            }
        }
        if !changed {
            return inst;
        }
    }
}

pub fn fully_feasible_planted(m: usize, n: usize, p_max: u64, seed: u64) -> Instance {
    let mut rng = rng_for(seed);
    let p: Vec<Vec<Option<u64>>> = (0..m)
        .map(|_| (0..n).map(|_| Some(rng.gen_range(1..=p_max))).collect())
        .collect();
    clamp_to_optimum(p)
}

pub fn phi_planted(m: usize, n: usize, d: usize, p_max: u64, seed: u64) -> Instance {
    assert!(d >= 1 && d <= m);
    let mut rng = rng_for(seed);
    let mut p: Vec<Vec<Option<u64>>> = vec![vec![None; n]; m];
    for j in 0..n {
        let mut machines: Vec<usize> = (0..m).collect();
        for i in (1..machines.len()).rev() {
            let k = rng.gen_range(0..=i);
            machines.swap(i, k);
        }
        for &i in machines.iter().take(d) {
            p[i][j] = Some(rng.gen_range(1..=p_max));
        }
    }
    clamp_to_optimum(p)
}

pub fn restricted_random(m: usize, n: usize, p_max: u64, d: Option<usize>, seed: u64) -> Instance {
    let mut rng = rng_for(seed);
    let mut p: Vec<Vec<Option<u64>>> = vec![vec![None; n]; m];
    for j in 0..n {
        let size = rng.gen_range(1..=p_max);
        let count = d.unwrap_or_else(|| rng.gen_range(1..=m));
        let mut machines: Vec<usize> = (0..m).collect();
        for i in (1..machines.len()).rev() {
            let k = rng.gen_range(0..=i);
            machines.swap(i, k);
        }
        for &i in machines.iter().take(count) {
            p[i][j] = Some(size);
        }
    }
    Instance::restricted(p).expect("restricted generator well-formed")
}

pub fn uniform_bounded_ratio(m: usize, n: usize, p_max: u64, b: u64, seed: u64) -> Instance {
    let mut rng = rng_for(seed);
    let base: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=p_max)).collect();
    // Speeds are 1/k for k in [1, b], fastest first; the first machine runs
    // at full speed so the ratio bound is tight.
    let mut speeds: Vec<(u64, u64)> = vec![(1, 1)];
    for _ in 1..m {
        let den = rng.gen_range(1..=b);
        speeds.push((1, den));
    }
    speeds.sort_by(|a, b| (b.0 * a.1).cmp(&(a.0 * b.1)));
    Instance::uniform(base, speeds).expect("uniform generator well-formed")
}

pub fn graph_balancing_random(
    vertices: usize,
    max_edges: usize,
    w_max: u64,
    span: usize,
    single_bag: bool,
    seed: u64,
) -> (GraphBalancingInstance, TreeDecomposition) {
    let mut rng = rng_for(seed);
    let e = rng.gen_range(1..=max_edges);
    let edges: Vec<(usize, usize, u64)> = (0..e)
        .map(|_| {
            let u = rng.gen_range(0..vertices);
            let lo = u.saturating_sub(span);
            let hi = (u + span).min(vertices - 1);
            let v = rng.gen_range(lo..=hi);
            let w = rng.gen_range(1..=w_max);
            (u, v, w)
        })
        .collect();
    let g = GraphBalancingInstance::new(vertices, edges);
    let td = if single_bag || vertices <= span + 1 {
        TreeDecomposition::trivial(vertices)
    } else {
        let bags: Vec<Vec<usize>> =
            (0..vertices - span).map(|t| (t..=t + span).collect()).collect();
        let tree_edges = (1..bags.len()).map(|i| (i - 1, i)).collect();
        TreeDecomposition { bags, tree_edges }
    };
    (g, td)
}

/// Builds the old instance, takes its exact optimum as the running
/// assignment, and perturbs. Old job ids are `0..n`; added jobs get fresh
/// ids past `1000`.
pub fn reopt_perturbation(
    m: usize,
    n: usize,
    p_max: u64,
    add_jobs: usize,
    remove_jobs: usize,
    remove_machines: usize,
    uniform_b: Option<u64>,
    seed: u64,
) -> ReoptInput {
    let mut rng = rng_for(seed);
    let jobs: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=p_max)).collect();
    let speeds: Option<Vec<(u64, u64)>> = uniform_b.map(|b| {
        let mut s: Vec<(u64, u64)> = vec![(1, 1)];
        for _ in 1..m {
            s.push((1, rng.gen_range(1..=b)));
        }
        s.sort_by(|a, b| (b.0 * a.1).cmp(&(a.0 * b.1)));
        s
    });
    let old = match &speeds {
        Some(s) => Instance::uniform(jobs.clone(), s.clone()).unwrap(),
        None => Instance::identical(m, jobs.clone()).unwrap(),
    };
    let sigma0 = oracle::exact_makespan(&old).expect("old instance within budget").witness.sigma;

    let mut new_jobs = jobs.clone();
    let mut ids_new: Vec<u64> = (0..n as u64).collect();
    for _ in 0..remove_jobs.min(new_jobs.len().saturating_sub(1)) {
        let drop = rng.gen_range(0..new_jobs.len());
        new_jobs.remove(drop);
        ids_new.remove(drop);
    }
    for extra in 0..add_jobs {
        new_jobs.push(rng.gen_range(1..=p_max));
        ids_new.push(1000 + extra as u64);
    }
    let m_new = (m - remove_machines.min(m - 1)).max(1);
    let new = match &speeds {
        Some(s) => {
            let kept: Vec<(u64, u64)> = s.iter().take(m_new).copied().collect();
            Instance::uniform(new_jobs, kept).unwrap()
        }
        None => Instance::identical(m_new, new_jobs).unwrap(),
    };
    let mut input =
        reopt_input(old, new, sigma0, (0..n as u64).collect(), ids_new).expect("valid input");
    if let Some(b) = uniform_b {
        input.speed_ratio_bound = Some((b, 1));
    }
    input
}

/// Renders a generator spec's artifacts as named JSON documents.
pub fn generate(spec: &GeneratorSpec) -> Vec<(String, String)> {
    match spec {
        GeneratorSpec::FullyFeasiblePlanted { m, n, p_max, seed } => {
            let inst = fully_feasible_planted(*m, *n, *p_max, *seed);
            vec![("instance.json".into(), inst.to_json())]
        }
        GeneratorSpec::PhiPlanted { m, n, d, p_max, seed } => {
            let inst = phi_planted(*m, *n, *d, *p_max, *seed);
            vec![("instance.json".into(), inst.to_json())]
        }
        GeneratorSpec::RestrictedRandom { m, n, p_max, d, seed } => {
            let inst = restricted_random(*m, *n, *p_max, *d, *seed);
            vec![("instance.json".into(), inst.to_json())]
        }
        GeneratorSpec::UniformBoundedRatio { m, n, p_max, b, seed } => {
            let inst = uniform_bounded_ratio(*m, *n, *p_max, *b, *seed);
            vec![("instance.json".into(), inst.to_json())]
        }
        GeneratorSpec::GraphBalancingRandom { vertices, max_edges, w_max, span, single_bag, seed } => {
            let (g, td) =
                graph_balancing_random(*vertices, *max_edges, *w_max, *span, *single_bag, *seed);
            vec![
                ("graph.json".into(), g.to_json()),
                ("decomposition.json".into(), td.to_json()),
            ]
        }
        GeneratorSpec::ReoptPerturbation {
            m,
            n,
            p_max,
            add_jobs,
            remove_jobs,
            remove_machines,
            uniform_b,
            seed,
        } => {
            let input = reopt_perturbation(
                *m,
                *n,
                *p_max,
                *add_jobs,
                *remove_jobs,
                *remove_machines,
                *uniform_b,
                *seed,
            );
            vec![("reopt.json".into(), input.to_json())]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mkspan::feasibility_profile;

    #[test]
    fn planted_runs_are_byte_identical() {
        let a = fully_feasible_planted(3, 6, 9, 1);
        let b = fully_feasible_planted(3, 6, 9, 1);
        assert_eq!(a.to_json(), b.to_json());
        let c = fully_feasible_planted(3, 6, 9, 2);
        assert_ne!(a.to_json(), c.to_json());
    }

    #[test]
    fn planted_instances_are_fully_feasible() {
        for seed in 0..10 {
            let inst = fully_feasible_planted(3, 5, 9, seed);
            let t_opt = oracle::exact_makespan(&inst).unwrap().t_opt;
            for i in 0..inst.machines() {
                for j in 0..inst.jobs() {
                    assert!(inst.time(i, j).unwrap() <= t_opt);
                }
            }
            // phi = 1 exactly: the top threshold covers every machine.
            let profile = feasibility_profile(&inst);
            let idx = profile.thresholds.iter().rposition(|&p| p <= t_opt).unwrap();
            assert_eq!(profile.phi[idx], mkspan::model::rat(1));
        }
    }

    #[test]
    fn phi_planted_hits_target_fraction() {
        for seed in 0..10 {
            let inst = phi_planted(4, 5, 2, 9, seed);
            let t_opt = oracle::exact_makespan(&inst).unwrap().t_opt;
            let min_count = (0..inst.jobs())
                .map(|j| {
                    (0..inst.machines())
                        .filter(|&i| matches!(inst.time(i, j), Some(p) if p <= t_opt))
                        .count()
                })
                .min()
                .unwrap();
            assert_eq!(min_count, 2);
        }
    }

    #[test]
    fn restricted_with_full_support_is_finite() {
        let inst = restricted_random(3, 6, 9, Some(3), 7);
        for i in 0..3 {
            for j in 0..6 {
                assert!(inst.time(i, j).is_some());
            }
        }
    }

    #[test]
    fn perturbation_preserves_ids() {
        let input = reopt_perturbation(3, 5, 9, 2, 0, 0, None, 11);
        assert_eq!(input.new.jobs(), 7);
        assert_eq!(&input.job_ids_new[..5], &[0, 1, 2, 3, 4]);
        assert!(input.job_ids_new[5] >= 1000);
    }

    #[test]
    fn uniform_ratio_bound_holds() {
        let inst = uniform_bounded_ratio(3, 4, 9, 2, 3);
        let speeds = inst.speeds().unwrap();
        let first = speeds[0];
        let last = speeds[speeds.len() - 1];
        // s1/sm = (n1/d1)/(nm/dm) <= 2
        assert!(first.0 * last.1 <= 2 * last.0 * first.1);
    }
}
