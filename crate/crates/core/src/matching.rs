//! Bipartite matching primitives: Hopcroft-Karp for maximum cardinality and
//! successive shortest paths for minimum-cost assignments. Costs are exact
//! integers; ties break on the smallest index so reruns are reproducible.

use std::collections::VecDeque;

/// Maximum-cardinality matching. `adj[l]` lists the right neighbors of left
/// node `l`. Returns the left-to-right matching.
pub fn hopcroft_karp(n_left: usize, n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    const NIL: usize = usize::MAX;
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];

    loop {
        // BFS layers from free left nodes.
        let mut queue = VecDeque::new();
        for l in 0..n_left {
            if match_l[l] == NIL {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found_free = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let l2 = match_r[r];
                if l2 == NIL {
                    found_free = true;
                } else if dist[l2] == usize::MAX {
                    dist[l2] = dist[l] + 1;
                    queue.push_back(l2);
                }
            }
        }
        if !found_free {
            break;
        }

        fn try_augment(
            l: usize,
            adj: &[Vec<usize>],
            match_l: &mut [usize],
            match_r: &mut [usize],
            dist: &mut [usize],
        ) -> bool {
            const NIL: usize = usize::MAX;
            for &r in &adj[l] {
                let l2 = match_r[r];
                if l2 == NIL || (dist[l2] == dist[l] + 1
                    && try_augment(l2, adj, match_l, match_r, dist))
                {
                    match_l[l] = r;
                    match_r[r] = l;
                    return true;
                }
            }
            dist[l] = usize::MAX;
            false
        }

        let mut progress = false;
        for l in 0..n_left {
            if match_l[l] == NIL && try_augment(l, adj, &mut match_l, &mut match_r, &mut dist) {
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }

    match_l.into_iter().map(|r| if r == NIL { None } else { Some(r) }).collect()
}

/// Minimum-cost matching that saturates every left node, as a unit-capacity
/// min-cost flow with shortest augmenting paths. Graph sizes here are tiny,
/// so a label-correcting search per augmentation is plenty. Returns `None`
/// when some left node cannot be matched.
pub fn min_cost_saturating_matching(
    n_left: usize,
    n_right: usize,
    edges: &[Vec<(usize, i64)>],
) -> Option<(Vec<usize>, i64)> {
    // Nodes: 0 = source, 1..=n_left = left, then right, last = sink.
    let source = 0usize;
    let left0 = 1usize;
    let right0 = 1 + n_left;
    let sink = 1 + n_left + n_right;
    let n_nodes = sink + 1;

    #[derive(Clone)]
    struct Arc {
        to: usize,
        cap: i64,
        cost: i64,
    }
    let mut arcs: Vec<Arc> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let push_arc = |arcs: &mut Vec<Arc>, out: &mut Vec<Vec<usize>>, u: usize, v: usize, cost: i64| {
        out[u].push(arcs.len());
        arcs.push(Arc { to: v, cap: 1, cost });
        out[v].push(arcs.len());
        arcs.push(Arc { to: u, cap: 0, cost: -cost });
    };

    for l in 0..n_left {
        push_arc(&mut arcs, &mut out, source, left0 + l, 0);
        for &(r, c) in &edges[l] {
            assert!(r < n_right, "right endpoint out of range");
            push_arc(&mut arcs, &mut out, left0 + l, right0 + r, c);
        }
    }
    for r in 0..n_right {
        push_arc(&mut arcs, &mut out, right0 + r, sink, 0);
    }

    let mut total = 0i64;
    for _ in 0..n_left {
        // Shortest path in the residual graph (costs may be negative on
        // reverse arcs); SPFA with deterministic arc order.
        let mut dist = vec![i64::MAX; n_nodes];
        let mut parent_arc = vec![usize::MAX; n_nodes];
        let mut in_queue = vec![false; n_nodes];
        dist[source] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(source);
        in_queue[source] = true;
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for &a in &out[u] {
                let arc = &arcs[a];
                if arc.cap > 0 && dist[u] != i64::MAX && dist[u] + arc.cost < dist[arc.to] {
                    dist[arc.to] = dist[u] + arc.cost;
                    parent_arc[arc.to] = a;
                    if !in_queue[arc.to] {
                        queue.push_back(arc.to);
                        in_queue[arc.to] = true;
                    }
                }
            }
        }
        if dist[sink] == i64::MAX {
            return None;
        }
        total += dist[sink];
        let mut v = sink;
        while v != source {
            let a = parent_arc[v];
            arcs[a].cap -= 1;
            arcs[a ^ 1].cap += 1;
            v = arcs[a ^ 1].to;
        }
    }

    // Read the matching off the saturated left-to-right arcs.
    let mut match_l = vec![usize::MAX; n_left];
    for l in 0..n_left {
        for &a in &out[left0 + l] {
            let arc = &arcs[a];
            if a % 2 == 0 && arc.cap == 0 && arc.to >= right0 && arc.to < sink {
                match_l[l] = arc.to - right0;
            }
        }
    }
    debug_assert!(match_l.iter().all(|&r| r != usize::MAX));
    Some((match_l, total))
}
