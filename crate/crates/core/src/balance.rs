//! Graph balancing: orient each weighted edge of a multigraph (loops
//! allowed) so the maximum weighted in-degree is minimized, by dynamic
//! programming over a supplied tree decomposition.
//!
//! Each bag holds a table keyed by the orientation bit-vector of its induced
//! non-loop edges; loops have no choice and always feed their vertex. Child
//! tables merge into the parent over agreeing shared-edge orientations,
//! combining loads at shared vertices and subtracting doubly counted edges.
//! A row keeps the set of Pareto-minimal (load vector, makespan) pairs
//! rather than a single argmin entry, so a child choice that trades a higher
//! partial makespan for lighter shared vertices is never lost; the root
//! minimum is therefore exact.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphBalancingInstance {
    pub vertices: usize,
    /// `(u, v, weight)`; `u == v` encodes a loop.
    pub edges: Vec<(usize, usize, u64)>,
}

impl GraphBalancingInstance {
    pub fn new(vertices: usize, edges: Vec<(usize, usize, u64)>) -> Self {
        GraphBalancingInstance { vertices, edges }
    }

    /// Maximum number of incident edges over all vertices; loops count once.
    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.vertices];
        for &(u, v, _) in &self.edges {
            deg[u] += 1;
            if v != u {
                deg[v] += 1;
            }
        }
        deg.into_iter().max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let edges: Vec<[serde_json::Value; 3]> = self
            .edges
            .iter()
            .map(|&(u, v, w)| [u.into(), v.into(), w.into()])
            .collect();
        serde_json::json!({ "vertices": self.vertices, "edges": edges }).to_string()
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Doc {
            vertices: usize,
            edges: Vec<(usize, usize, u64)>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Ok(GraphBalancingInstance { vertices: doc.vertices, edges: doc.edges })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub tree_edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    /// Single bag holding every vertex.
    pub fn trivial(vertices: usize) -> Self {
        TreeDecomposition { bags: vec![(0..vertices).collect()], tree_edges: Vec::new() }
    }

    /// Declared width: largest bag size minus one.
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(1).saturating_sub(1)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "bags": self.bags, "tree_edges": self.tree_edges }).to_string()
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Doc {
            bags: Vec<Vec<usize>>,
            tree_edges: Vec<(usize, usize)>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Ok(TreeDecomposition { bags: doc.bags, tree_edges: doc.tree_edges })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecompositionViolation {
    NotATree { reason: String },
    VertexNotCovered { vertex: usize },
    EdgeNotCovered { edge: usize },
    /// Bags holding the vertex do not form a connected subtree.
    Disconnected { vertex: usize },
}

impl std::fmt::Display for DecompositionViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecompositionViolation::NotATree { reason } => write!(f, "bag graph is not a tree: {reason}"),
            DecompositionViolation::VertexNotCovered { vertex } => {
                write!(f, "vertex {vertex} appears in no bag")
            }
            DecompositionViolation::EdgeNotCovered { edge } => {
                write!(f, "edge {edge} has no bag containing both endpoints")
            }
            DecompositionViolation::Disconnected { vertex } => {
                write!(f, "bags containing vertex {vertex} are not connected")
            }
        }
    }
}

/// Checks the three decomposition properties plus tree-ness of the bag
/// graph, reporting the first violation with a witness.
pub fn validate_decomposition(
    g: &GraphBalancingInstance,
    td: &TreeDecomposition,
) -> Result<(), DecompositionViolation> {
    let t = td.bags.len();
    if t == 0 {
        return Err(DecompositionViolation::NotATree { reason: "no bags".into() });
    }
    if td.tree_edges.len() + 1 != t {
        return Err(DecompositionViolation::NotATree {
            reason: format!("{} bags need {} tree edges, found {}", t, t - 1, td.tree_edges.len()),
        });
    }
    let mut adj = vec![Vec::new(); t];
    for &(a, b) in &td.tree_edges {
        if a >= t || b >= t {
            return Err(DecompositionViolation::NotATree {
                reason: format!("tree edge ({a},{b}) out of range"),
            });
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; t];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(DecompositionViolation::NotATree { reason: "disconnected bag graph".into() });
    }

    for v in 0..g.vertices {
        if !td.bags.iter().any(|b| b.contains(&v)) {
            return Err(DecompositionViolation::VertexNotCovered { vertex: v });
        }
    }
    for (e, &(u, v, _)) in g.edges.iter().enumerate() {
        if !td.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            return Err(DecompositionViolation::EdgeNotCovered { edge: e });
        }
    }
    for v in 0..g.vertices {
        let holders: Vec<usize> =
            (0..t).filter(|&i| td.bags[i].contains(&v)).collect();
        let mut reach = vec![false; t];
        reach[holders[0]] = true;
        let mut stack = vec![holders[0]];
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !reach[j] && td.bags[j].contains(&v) {
                    reach[j] = true;
                    stack.push(j);
                }
            }
        }
        if holders.iter().any(|&h| !reach[h]) {
            return Err(DecompositionViolation::Disconnected { vertex: v });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BalanceError {
    InvalidDecomposition(DecompositionViolation),
    StateBudgetExceeded { bits: usize },
}

impl std::fmt::Display for BalanceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BalanceError::InvalidDecomposition(v) => write!(f, "invalid decomposition: {v}"),
            BalanceError::StateBudgetExceeded { bits } => {
                write!(f, "bag with {bits} orientation bits exceeds the state budget")
            }
        }
    }
}

impl std::error::Error for BalanceError {}

/// Orientation of every edge plus the achieved optimum. `reversed[e] = false`
/// sends the weight of edge `(u, v)` to `max(u, v)`; loops always feed their
/// vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orientation {
    pub reversed: Vec<bool>,
    pub makespan: u64,
}

/// Weighted in-degrees induced by an orientation; independent recomputation
/// used by callers to cross-check the DP output.
pub fn in_degrees(g: &GraphBalancingInstance, reversed: &[bool]) -> Vec<u64> {
    let mut load = vec![0u64; g.vertices];
    for (e, &(u, v, w)) in g.edges.iter().enumerate() {
        if u == v {
            load[u] += w;
        } else {
            let (lo, hi) = (u.min(v), u.max(v));
            load[if reversed[e] { lo } else { hi }] += w;
        }
    }
    load
}

const MAX_BAG_BITS: usize = 24;
const MAX_ROWS_PER_BAG: usize = 1 << 22;

#[derive(Clone, Debug)]
struct RowState {
    bits: u32,
    loads: Vec<u64>,
    t: u64,
    back: Vec<(usize, usize)>,
}

struct BagInfo {
    vertices: Vec<usize>,
    /// Induced edge indices, loops included.
    induced: Vec<usize>,
    /// Induced non-loop edges in ascending index order; bit `b` of a row's
    /// orientation word corresponds to `orientable[b]`.
    orientable: Vec<usize>,
}

pub fn balance(
    g: &GraphBalancingInstance,
    td: &TreeDecomposition,
) -> Result<Orientation, BalanceError> {
    validate_decomposition(g, td).map_err(BalanceError::InvalidDecomposition)?;

    let t = td.bags.len();
    let mut adj = vec![Vec::new(); t];
    for &(a, b) in &td.tree_edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let infos: Vec<BagInfo> = td
        .bags
        .iter()
        .map(|bag| {
            let induced: Vec<usize> = g
                .edges
                .iter()
                .enumerate()
                .filter(|(_, &(u, v, _))| bag.contains(&u) && bag.contains(&v))
                .map(|(e, _)| e)
                .collect();
            let orientable: Vec<usize> =
                induced.iter().copied().filter(|&e| g.edges[e].0 != g.edges[e].1).collect();
            BagInfo { vertices: bag.clone(), induced, orientable }
        })
        .collect();
    if let Some(info) = infos.iter().find(|i| i.orientable.len() > MAX_BAG_BITS) {
        return Err(BalanceError::StateBudgetExceeded { bits: info.orientable.len() });
    }

    // Post-order over the bag tree rooted at 0, children in index order.
    let mut order = Vec::with_capacity(t);
    let mut parent = vec![usize::MAX; t];
    let mut stack = vec![(0usize, usize::MAX)];
    while let Some((i, par)) = stack.pop() {
        parent[i] = par;
        order.push(i);
        for &j in adj[i].iter().rev() {
            if j != par {
                stack.push((j, i));
            }
        }
    }
    order.reverse(); // children now precede their parents

    let mut tables: Vec<Vec<RowState>> = vec![Vec::new(); t];
    for &bag in &order {
        let info = &infos[bag];
        let nbits = info.orientable.len();
        let mut rows: Vec<RowState> = Vec::with_capacity(1usize << nbits);
        for bits in 0..(1u32 << nbits) {
            let mut loads = vec![0u64; info.vertices.len()];
            for &e in &info.induced {
                let (u, v, w) = g.edges[e];
                let head = head_of(e, u, v, bits, &info.orientable);
                let pos = info.vertices.iter().position(|&x| x == head).unwrap();
                loads[pos] += w;
            }
            let tmax = loads.iter().copied().max().unwrap_or(0);
            rows.push(RowState { bits, loads, t: tmax, back: Vec::new() });
        }

        // Merge each child table successively.
        for &child in adj[bag].iter().filter(|&&j| parent[j] == bag) {
            let cinfo = &infos[child];
            // Shared non-loop edges: (bit in parent word, bit in child word);
            // shared loops need only load subtraction.
            let shared: Vec<usize> = info
                .induced
                .iter()
                .copied()
                .filter(|e| cinfo.induced.contains(e))
                .collect();
            let shared_bits: Vec<(usize, usize)> = shared
                .iter()
                .filter(|&&e| g.edges[e].0 != g.edges[e].1)
                .map(|&e| {
                    (
                        info.orientable.iter().position(|&x| x == e).unwrap(),
                        cinfo.orientable.iter().position(|&x| x == e).unwrap(),
                    )
                })
                .collect();
            let shared_vertices: Vec<(usize, usize)> = info
                .vertices
                .iter()
                .enumerate()
                .filter_map(|(pp, &v)| {
                    cinfo.vertices.iter().position(|&x| x == v).map(|cp| (pp, cp))
                })
                .collect();

            let mut merged: Vec<RowState> = Vec::new();
            for row in &rows {
                for (cidx, crow) in tables[child].iter().enumerate() {
                    if shared_bits
                        .iter()
                        .any(|&(pb, cb)| (row.bits >> pb & 1) != (crow.bits >> cb & 1))
                    {
                        continue;
                    }
                    let mut loads = row.loads.clone();
                    let mut tmax = row.t.max(crow.t);
                    for &(pp, cp) in &shared_vertices {
                        let v = info.vertices[pp];
                        let mut combined = row.loads[pp] + crow.loads[cp];
                        for &e in &shared {
                            let (u, w, weight) = {
                                let (a, b, c) = g.edges[e];
                                (a, b, c)
                            };
                            let head = head_of(e, u, w, row.bits, &info.orientable);
                            if head == v {
                                combined -= weight;
                            }
                        }
                        loads[pp] = combined;
                        tmax = tmax.max(combined);
                    }
                    let mut back = row.back.clone();
                    back.push((child, cidx));
                    merged.push(RowState { bits: row.bits, loads, t: tmax, back });
                    if merged.len() > MAX_ROWS_PER_BAG {
                        return Err(BalanceError::StateBudgetExceeded {
                            bits: info.orientable.len(),
                        });
                    }
                }
            }
            rows = pareto_prune(merged);
        }
        tables[bag] = rows;
    }

    let root_rows = &tables[0];
    let best_idx = root_rows
        .iter()
        .enumerate()
        .min_by_key(|(idx, r)| (r.t, *idx))
        .map(|(idx, _)| idx)
        .expect("root table nonempty");
    let makespan = root_rows[best_idx].t;

    // Walk back-pointers to fix every edge's orientation.
    let mut reversed: Vec<Option<bool>> = vec![None; g.edges.len()];
    let mut walk = vec![(0usize, best_idx)];
    while let Some((bag, ridx)) = walk.pop() {
        let row = &tables[bag][ridx];
        let info = &infos[bag];
        for (b, &e) in info.orientable.iter().enumerate() {
            let bit = row.bits >> b & 1 == 1;
            match reversed[e] {
                None => reversed[e] = Some(bit),
                Some(prev) => debug_assert_eq!(prev, bit, "edge oriented twice inconsistently"),
            }
        }
        for &link in &row.back {
            walk.push(link);
        }
    }
    let reversed: Vec<bool> = reversed
        .into_iter()
        .map(|o| o.unwrap_or(false))
        .collect();

    // The reconstructed orientation must reproduce the reported optimum.
    let loads = in_degrees(g, &reversed);
    let recomputed = loads.into_iter().max().unwrap_or(0);
    assert_eq!(recomputed, makespan, "reconstruction mismatch");

    Ok(Orientation { reversed, makespan })
}

fn head_of(e: usize, u: usize, v: usize, bits: u32, orientable: &[usize]) -> usize {
    if u == v {
        return u;
    }
    let (lo, hi) = (u.min(v), u.max(v));
    match orientable.iter().position(|&x| x == e) {
        Some(b) if bits >> b & 1 == 1 => lo,
        Some(_) => hi,
        None => unreachable!("non-loop induced edge must be orientable"),
    }
}

/// Keeps, within each orientation word, only rows not dominated in
/// (all loads, makespan).
fn pareto_prune(mut rows: Vec<RowState>) -> Vec<RowState> {
    rows.sort_by_key(|r| (r.bits, r.t));
    let mut kept: Vec<RowState> = Vec::new();
    'outer: for row in rows {
        for k in kept.iter().filter(|k| k.bits == row.bits) {
            if k.t <= row.t && k.loads.iter().zip(&row.loads).all(|(a, b)| a <= b) {
                continue 'outer;
            }
        }
        kept.push(row);
    }
    kept
}
