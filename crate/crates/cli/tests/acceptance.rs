//! Acceptance battery: every guarantee the library claims, checked in exact
//! arithmetic against exhaustive oracles at desk scale. One criterion per
//! test, each printing a pass line with its case count and elapsed time.

use std::time::{Duration, Instant};

use mkspan::balance::{balance, in_degrees, validate_decomposition, TreeDecomposition};
use mkspan::feasible::{balance_view, balance_view_with, schedule_fully_feasible_detailed};
use mkspan::fpt::minimal_t_for_scheme;
use mkspan::lp::{build_lp, minimal_tl, solve_feasibility};
use mkspan::model::{
    feasibility_profile, load_profile, rat, rat_u, ratio, Instance, Rat,
};
use mkspan::oracle;
use mkspan::reopt::{exact_reopt, reopt_input};
use mkspan::reopt_identical::{item_scale, relaxed_first_fit, reoptimize_identical};
use mkspan::reopt_uniform::reoptimize_uniform;
use mkspan::restricted::{partition, schedule_restricted_detailed};
use mkspan::rounding::round;
use mkspan_cli::gen;
use mkspan_cli::runner::{self, OracleMode};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn budget(name: &str, started: Instant, limit: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < limit,
        "{name} took {elapsed:?}, over the {limit:?} budget"
    );
}

fn pass_line(criterion: u32, what: &str, cases: usize, started: Instant) {
    println!(
        "criterion {criterion} PASS: {what} ({cases} cases, {:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn c01_st_rounding_bounds() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut cases = 0;
    while cases < 200 {
        let m = rng.gen_range(1..=4usize);
        let n = rng.gen_range(1..=8usize);
        let p: Vec<Vec<Option<u64>>> = (0..m)
            .map(|_| (0..n).map(|_| Some(rng.gen_range(1..=20u64))).collect())
            .collect();
        let inst = Instance::unrelated(p).unwrap();
        let params = minimal_tl(&inst).unwrap();
        let sol = solve_feasibility(&build_lp(&inst, &params)).unwrap();
        assert!(sol.is_feasible());
        let rounded = round(&inst, &sol).unwrap();
        let loads = load_profile(&inst, &rounded).unwrap();
        assert!(loads.avg_load() <= params.l, "average load above L");
        for i in 0..m {
            let max_assigned = rounded
                .sigma
                .iter()
                .enumerate()
                .filter(|&(_, &mi)| mi == i)
                .map(|(j, _)| inst.time(i, j).unwrap())
                .max()
                .unwrap_or(0);
            assert!(
                loads.load[i] <= params.t + max_assigned,
                "machine {i} load {} above T {} + max {}",
                loads.load[i],
                params.t,
                max_assigned
            );
        }
        cases += 1;
    }
    budget("criterion 1", started, Duration::from_secs(10));
    pass_line(1, "rounding keeps avg <= L and load <= T + max assigned", cases, started);
}

#[test]
fn c02_fully_feasible_bound() {
    let started = Instant::now();
    let mut cases = 0;
    let mut seed = 0u64;
    while cases < 100 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(77));
        let m = rng.gen_range(2..=3usize);
        let n = rng.gen_range(3..=7usize);
        let inst = gen::fully_feasible_planted(m, n, 9, seed);
        let run = schedule_fully_feasible_detailed(&inst).unwrap();
        let mk = load_profile(&inst, &run.assignment).unwrap().makespan;
        let opt = oracle::exact_makespan(&inst).unwrap();
        assert!(
            rat_u(mk) <= rat_u(opt.t_opt) + opt.l_opt(),
            "seed {seed}: makespan {mk} above T_opt {} + L_opt {}",
            opt.t_opt,
            opt.l_opt()
        );
        cases += 1;
    }
    budget("criterion 2", started, Duration::from_secs(60));
    pass_line(2, "planted fully-feasible instances meet T_opt + L_opt", cases, started);
}

#[test]
fn c03_feasibility_parameter_bound() {
    let started = Instant::now();
    let targets = [(2usize, 1usize), (4, 2), (3, 2), (4, 3)]; // phi = 1/2, 1/2, 2/3, 3/4
    let mut cases = 0;
    let mut seed = 0u64;
    while cases < 50 {
        seed += 1;
        let (m, d) = targets[(seed as usize) % targets.len()];
        let inst = gen::phi_planted(m, 4 + (seed as usize % 3), d, 9, seed);
        let opt = oracle::exact_makespan(&inst).unwrap();
        // Exact feasibility parameter at the optimum.
        let phi = (0..inst.jobs())
            .map(|j| {
                (0..m)
                    .filter(|&i| matches!(inst.time(i, j), Some(p) if p <= opt.t_opt))
                    .count()
            })
            .min()
            .unwrap();
        assert_eq!(phi, d, "planted feasibility fraction off");
        let phi = ratio(d as i64, m as i64);
        let params = minimal_tl(&inst).unwrap();
        if params.t == 0 || phi < params.l.clone() / rat_u(params.t) {
            continue; // guard not met; this instance is out of scope
        }
        let run = schedule_fully_feasible_detailed(&inst).unwrap();
        let mk = load_profile(&inst, &run.assignment).unwrap().makespan;
        let bound = rat_u(opt.t_opt) + opt.l_opt() / phi.clone();
        assert!(
            rat_u(mk) <= bound,
            "seed {seed}: makespan {mk} above T_opt + L_opt/phi = {bound}"
        );
        cases += 1;
    }
    budget("criterion 3", started, Duration::from_secs(60));
    pass_line(3, "verified-guard instances meet T_opt + L_opt/phi", cases, started);
}

#[test]
fn c04_restricted_bound() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut cases = 0;
    while cases < 200 {
        let m = rng.gen_range(2..=4usize);
        let n = rng.gen_range(1..=10usize);
        let inst = gen::restricted_random(m, n, 9, None, rng.gen());
        let run = schedule_restricted_detailed(&inst);
        let part = partition(&inst, &run.assignment, run.delta);
        assert!(part.overloaded.is_empty(), "overloaded set nonempty");
        let mk = load_profile(&inst, &run.assignment).unwrap().makespan;
        assert!(
            mk <= run.p_max + run.delta,
            "makespan {mk} above p_max {} + delta {}",
            run.p_max,
            run.delta
        );
        assert!(run.pushes <= run.push_cap, "push count above m*S");
        cases += 1;
    }
    budget("criterion 4", started, Duration::from_secs(10));
    pass_line(4, "push scheduler empties overload within m*S pushes", cases, started);
}

#[test]
fn c05_fpt_scheme() {
    let started = Instant::now();
    let eps_values = [ratio(1, 4), ratio(1, 2), rat(1)];
    let mut cases = 0;
    let mut seed = 500u64;
    let mut attempts = 0;
    while cases < 100 {
        seed += 1;
        attempts += 1;
        assert!(attempts < 3000, "generator cannot hit k <= 8 often enough");
        let eps = &eps_values[cases % 3];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..=3usize);
        let n = rng.gen_range(2..=7usize);
        // Mostly small entries with a couple of big ones keeps the number of
        // above-threshold pairs low at the relevant targets.
        let p: Vec<Vec<Option<u64>>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        Some(if rng.gen_range(0..4u32) == 0 {
                            rng.gen_range(6..=9u64)
                        } else {
                            rng.gen_range(1..=3u64)
                        })
                    })
                    .collect()
            })
            .collect();
        let inst = Instance::unrelated(p).unwrap();
        let Ok((t, assignment)) = minimal_t_for_scheme(&inst, eps, 8) else {
            continue; // more than 8 integral pairs at some probe
        };
        let mk = load_profile(&inst, &assignment).unwrap().makespan;
        let factor = Rat::one() + eps;
        assert!(
            rat_u(mk) <= factor.clone() * rat_u(t),
            "makespan {mk} above (1+eps) * {t}"
        );
        let opt = oracle::exact_makespan(&inst).unwrap();
        assert!(t <= opt.t_opt, "minimal T {t} above optimum {}", opt.t_opt);
        assert!(rat_u(mk) <= factor * rat_u(opt.t_opt));
        cases += 1;
    }
    budget("criterion 5", started, Duration::from_secs(120));
    pass_line(5, "pattern scheme stays within (1+eps) of minimal T and optimum", cases, started);
}

#[test]
fn c06_graph_balancing_exactness() {
    let started = Instant::now();
    let mut cases = 0;
    let mut seed = 600u64;
    while cases < 100 {
        seed += 1;
        let single_bag = cases % 2 == 0;
        let (g, td) = gen::graph_balancing_random(5, 10, 9, 2, single_bag, seed);
        validate_decomposition(&g, &td).unwrap();
        let res = balance(&g, &td).unwrap();
        let (opt, _) = oracle::exact_orientation(g.vertices, &g.edges).unwrap();
        assert_eq!(res.makespan, opt, "DP differs from exhaustive optimum");
        let loads = in_degrees(&g, &res.reversed);
        assert_eq!(
            loads.into_iter().max().unwrap_or(0),
            res.makespan,
            "reconstruction differs from reported value"
        );
        cases += 1;
    }
    budget("criterion 6", started, Duration::from_secs(30));
    pass_line(6, "tree DP equals exhaustive orientation optimum", cases, started);
}

#[test]
fn c07_reopt_identical() {
    let started = Instant::now();
    let eps = ratio(1, 2);
    let mut cases = 0;
    let mut seed = 700u64;
    while cases < 100 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..=3usize);
        let n = rng.gen_range(2..=7usize);
        let identity = cases % 5 == 0;
        let (add, remove, drop_m) = if identity {
            (0, 0, 0)
        } else {
            (
                rng.gen_range(0..=1usize),
                rng.gen_range(0..=1usize),
                if m > 2 { rng.gen_range(0..=1usize) } else { 0 },
            )
        };
        let input = gen::reopt_perturbation(m, n, 9, add, remove, drop_m, None, seed);
        let (a, cost) = reoptimize_identical(&input, &eps).unwrap();
        let mk = load_profile(&input.new, &a).unwrap().makespan;
        let opt = oracle::exact_makespan(&input.new).unwrap();
        assert!(
            rat_u(mk) <= (Rat::one() + &eps) * rat_u(opt.t_opt),
            "seed {seed}: makespan {mk} above (1+eps) * {}",
            opt.t_opt
        );
        let best = exact_reopt(&input, &Rat::one()).unwrap();
        assert!(cost <= best, "seed {seed}: cost {cost} above optimum {best}");
        if identity {
            assert_eq!(cost, 0, "identity perturbation must cost nothing");
        }
        cases += 1;
    }
    budget("criterion 7", started, Duration::from_secs(120));
    pass_line(7, "identical-machine reoptimizer meets (1, 1+eps)", cases, started);
}

#[test]
fn c08_reopt_uniform() {
    let started = Instant::now();
    let eps = ratio(1, 2);
    let mut cases = 0;
    let mut seed = 800u64;
    while cases < 40 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..=3usize);
        let n = rng.gen_range(2..=5usize);
        let b = 1 + (cases % 2) as u64; // alternate b = 1 and b = 2
        let add = rng.gen_range(0..=1usize);
        let input = gen::reopt_perturbation(m, n, 6, add, 0, 0, Some(b), seed);
        let (a, cost) = reoptimize_uniform(&input, &eps, &rat(b as i64)).unwrap();
        let mk = load_profile(&input.new, &a).unwrap().makespan;
        let opt = oracle::exact_makespan(&input.new).unwrap();
        assert!(
            rat_u(mk) <= (Rat::one() + &eps) * rat_u(opt.t_opt),
            "seed {seed}: makespan {mk} above (1+eps) * {}",
            opt.t_opt
        );
        let best = exact_reopt(&input, &Rat::one()).unwrap();
        assert!(cost <= best, "seed {seed}: cost {cost} above optimum {best}");

        if b == 1 {
            // Equal speeds collapse to identical machines: rebuild the same
            // scenario as identical instances and compare costs.
            let jobs_old: Vec<u64> =
                (0..input.old.jobs()).map(|j| input.old.base_times().unwrap()[j]).collect();
            let jobs_new: Vec<u64> =
                (0..input.new.jobs()).map(|j| input.new.base_times().unwrap()[j]).collect();
            let old_i = Instance::identical(input.old.machines(), jobs_old).unwrap();
            let new_i = Instance::identical(input.new.machines(), jobs_new).unwrap();
            let input_i = reopt_input(
                old_i,
                new_i,
                input.sigma0.clone(),
                input.job_ids_old.clone(),
                input.job_ids_new.clone(),
            )
            .unwrap();
            let (_, cost_i) = reoptimize_identical(&input_i, &eps).unwrap();
            assert_eq!(cost, cost_i, "seed {seed}: uniform and identical costs differ at b=1");
        }
        cases += 1;
    }
    budget("criterion 8", started, Duration::from_secs(300));
    pass_line(8, "uniform-machine reoptimizer meets (1, 1+eps), agrees at b=1", cases, started);
}

#[test]
fn c09_lemma_suite() {
    let started = Instant::now();

    // Part A: overload counting lemma, both parts, on rounded assignments.
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let gammas = [rat(1), ratio(3, 2), rat(2), rat(3), rat(5)];
    let mut checked = 0;
    while checked < 500 {
        let m = rng.gen_range(2..=4usize);
        let n = rng.gen_range(1..=6usize);
        let p: Vec<Vec<Option<u64>>> = (0..m)
            .map(|_| (0..n).map(|_| Some(rng.gen_range(1..=9u64))).collect())
            .collect();
        let inst = Instance::unrelated(p).unwrap();
        let params = minimal_tl(&inst).unwrap();
        if params.t == 0 || params.l.is_zero() {
            continue;
        }
        let sol = solve_feasibility(&build_lp(&inst, &params)).unwrap();
        let rounded = round(&inst, &sol).unwrap();
        assert!(load_profile(&inst, &rounded).unwrap().avg_load() <= params.l);
        for gamma in &gammas {
            let view =
                balance_view_with(&inst, &rounded, params.t, &params.l, params.t, gamma);
            let k = rat(view.bad.len() as i64);
            let good = rat(view.good.len() as i64);
            let m_rat = rat(m as i64);
            assert!(k < m_rat.clone() / (gamma.clone() + rat(1)), "part 1 violated");
            let bound = (rat(1) - rat(1) / gamma.clone()) * m_rat
                + k / gamma.clone() * rat_u(params.t) / params.l.clone();
            assert!(good > bound, "part 2 violated: {good} <= {bound}");
            checked += 1;
        }
    }

    // Part B: total item size never exceeds the machine count at T >= C*.
    let mut rng = ChaCha8Rng::seed_from_u64(902);
    for _ in 0..500 {
        let m = rng.gen_range(1..=4usize);
        let n = rng.gen_range(0..=8usize);
        let jobs: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=9u64)).collect();
        let inst = Instance::identical(m, jobs).unwrap();
        let t = oracle::exact_makespan(&inst).unwrap().t_opt;
        if t == 0 {
            continue;
        }
        let scale = item_scale(&inst, &ratio(1, 8), t);
        let total: Rat = scale.alpha.iter().fold(Rat::zero(), |a, v| a + v);
        assert!(total <= rat(m as i64), "sum of item sizes above m");
    }

    // Part C: Hall condition on overloaded sets, subsets enumerated.
    let mut seed = 903u64;
    let mut halls = 0;
    while halls < 500 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..=3usize);
        let n = rng.gen_range(2..=5usize);
        let inst = gen::fully_feasible_planted(m, n, 9, seed);
        let t_opt = oracle::exact_makespan(&inst).unwrap().t_opt;
        let params = minimal_tl(&inst).unwrap();
        if params.t == 0 {
            continue;
        }
        let sol = solve_feasibility(&build_lp(&inst, &params)).unwrap();
        let rounded = round(&inst, &sol).unwrap();
        let profile = feasibility_profile(&inst);
        let Some(t_idx) = profile.thresholds.iter().rposition(|&p| p <= t_opt) else {
            continue;
        };
        let phi = &profile.phi[t_idx];
        if phi.is_zero() || *phi < params.l.clone() / rat_u(params.t) {
            continue;
        }
        let view = balance_view(&inst, &rounded, params.t, &params.l, t_idx);
        assert!(view.bad.len() <= 8);
        for mask in 1usize..(1 << view.bad.len()) {
            let mut neighbors: Vec<usize> = Vec::new();
            let mut size = 0usize;
            for (b, &machine) in view.bad.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    size += 1;
                    let j = view.jmax[machine].unwrap();
                    for g in view.good_for(&inst, j) {
                        if !neighbors.contains(&g) {
                            neighbors.push(g);
                        }
                    }
                }
            }
            assert!(neighbors.len() >= size, "Hall violated");
            halls += 1;
        }
        halls += 1; // count the instance even when its overload set is empty
    }

    // Part D: the relaxed first-fit never strands an item when the total
    // size fits the machine count.
    let mut rng = ChaCha8Rng::seed_from_u64(904);
    for _ in 0..500 {
        let m = rng.gen_range(1..=4usize);
        let eps0 = ratio(1, 8);
        let mut items: Vec<(Rat, usize, Option<usize>)> = Vec::new();
        let mut total = Rat::zero();
        let mut id = 0usize;
        loop {
            let size = ratio(rng.gen_range(1..=12i64), 100);
            if &total + &size > rat(m as i64) {
                break;
            }
            let home = if id % 2 == 0 { Some(id % m) } else { None };
            total += &size;
            items.push((size, id, home));
            id += 1;
        }
        items.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut mixture = vec![Rat::zero(); m];
        let cap = rat(1) + eps0;
        relaxed_first_fit(&mut mixture, &cap, &items).expect("first-fit completes");
    }

    budget("criterion 9", started, Duration::from_secs(30));
    pass_line(9, "counting lemmas, Hall condition, and first-fit completeness", 2000, started);
}

#[test]
fn c10_determinism() {
    let started = Instant::now();
    let mode = OracleMode::Auto;

    // Generators: same seed, same bytes.
    let a = gen::fully_feasible_planted(3, 6, 9, 1);
    let b = gen::fully_feasible_planted(3, 6, 9, 1);
    assert_eq!(a.to_json(), b.to_json());

    // Each runner: byte-identical reports on a rerun.
    let inst = gen::fully_feasible_planted(3, 6, 9, 11);
    let r1 = runner::run_a_um(&inst, mode).unwrap().to_json();
    let r2 = runner::run_a_um(&inst, mode).unwrap().to_json();
    assert_eq!(r1, r2, "a_um report differs across reruns");

    let inst = gen::restricted_random(3, 8, 9, None, 12);
    let r1 = runner::run_a_res(&inst, mode).unwrap().to_json();
    let r2 = runner::run_a_res(&inst, mode).unwrap().to_json();
    assert_eq!(r1, r2, "a_res report differs across reruns");

    let inst = gen::fully_feasible_planted(2, 5, 9, 13);
    let r1 = runner::run_fpt(&inst, &ratio(1, 2), 12, mode).unwrap().to_json();
    let r2 = runner::run_fpt(&inst, &ratio(1, 2), 12, mode).unwrap().to_json();
    assert_eq!(r1, r2, "fpt report differs across reruns");

    let (g, td) = gen::graph_balancing_random(5, 10, 9, 2, false, 14);
    let r1 = runner::run_balance(&g, &td, mode).unwrap().to_json();
    let r2 = runner::run_balance(&g, &td, mode).unwrap().to_json();
    assert_eq!(r1, r2, "balance report differs across reruns");

    let input = gen::reopt_perturbation(3, 6, 9, 1, 1, 1, None, 15);
    let r1 = runner::run_reopt_id(&input, &ratio(1, 2), 1_000_000, mode).unwrap().to_json();
    let r2 = runner::run_reopt_id(&input, &ratio(1, 2), 1_000_000, mode).unwrap().to_json();
    assert_eq!(r1, r2, "reopt_id report differs across reruns");

    let input = gen::reopt_perturbation(2, 4, 6, 1, 0, 0, Some(2), 16);
    let r1 = runner::run_reopt_un(&input, &ratio(1, 2), &rat(2), 200_000, mode)
        .unwrap()
        .to_json();
    let r2 = runner::run_reopt_un(&input, &ratio(1, 2), &rat(2), 200_000, mode)
        .unwrap()
        .to_json();
    assert_eq!(r1, r2, "reopt_un report differs across reruns");

    pass_line(10, "reruns produce byte-identical reports", 7, started);
}

/// The path decomposition generator stays valid; used by criterion 6's setup
/// but pinned separately so a generator regression is visible on its own.
#[test]
fn path_decompositions_from_generator_are_valid() {
    for seed in 0..20 {
        let (g, td) = gen::graph_balancing_random(6, 10, 9, 2, false, seed);
        validate_decomposition(&g, &td).unwrap();
        assert!(td.width() <= 2);
        let trivial = TreeDecomposition::trivial(g.vertices);
        validate_decomposition(&g, &trivial).unwrap();
    }
}
