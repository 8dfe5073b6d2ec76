//! Rounding of a fractional relaxation solution into an integral assignment.
//!
//! Every machine is split into unit-capacity sub-machine bins, its job
//! fractions are packed into the bins in nonincreasing order of processing
//! time (overflow spills into the next bin), and a minimum-cost matching that
//! covers all jobs picks one bin edge per job. The resulting assignment `s`
//! satisfies `avg_load(s) <= L` and
//! `load_s(i) <= T + max { p_ij : s(j) = i }` for every machine.

use num_traits::{One, Zero};

use crate::lp::LpSolution;
use crate::matching::min_cost_saturating_matching;
use crate::model::{Assignment, Instance, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoundingError {
    /// Some job's fractions do not sum to one.
    MalformedFraction { job: usize },
    /// The sub-machine graph has no matching covering all jobs; this breaks
    /// the construction's guarantee and indicates a bug upstream.
    NoPerfectMatching,
}

impl std::fmt::Display for RoundingError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RoundingError::MalformedFraction { job } => {
                write!(f, "fractions of job {job} do not sum to 1")
            }
            RoundingError::NoPerfectMatching => write!(f, "no matching covers all jobs"),
        }
    }
}

impl std::error::Error for RoundingError {}

/// A fraction of `x_ij` placed into one bin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinPiece {
    pub job: usize,
    pub fraction: Rat,
}

/// One unit-capacity bin of a machine.
#[derive(Clone, Debug)]
pub struct SubMachine {
    pub machine: usize,
    pub slot: usize,
    pub pieces: Vec<BinPiece>,
}

/// The bipartite job/sub-machine graph produced by the greedy packing.
#[derive(Clone, Debug)]
pub struct SubMachineGraph {
    pub bins: Vec<SubMachine>,
    /// Per job: (bin index, processing-time cost) edges, one per bin that
    /// received a positive fraction of the job.
    pub edges: Vec<Vec<(usize, u64)>>,
    /// Bins per machine, `ceil(sum_j x_ij)`.
    pub bins_per_machine: Vec<usize>,
}

/// Packs the fractional solution into sub-machine bins.
///
/// Per machine, job fractions are taken in nonincreasing processing-time
/// order (ties by ascending job index). A fraction that does not fit the
/// current bin is split: the part that fills the bin stays, the remainder
/// opens the next bin.
pub fn build_submachine_graph(
    inst: &Instance,
    x: &LpSolution,
) -> Result<SubMachineGraph, RoundingError> {
    let m = inst.machines();
    let n = inst.jobs();
    for j in 0..n {
        let total: Rat = (0..m).map(|i| x.value(i, j)).fold(Rat::zero(), |a, v| a + v);
        if total != Rat::one() {
            return Err(RoundingError::MalformedFraction { job: j });
        }
    }

    let mut bins: Vec<SubMachine> = Vec::new();
    let mut edges: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    let mut bins_per_machine = vec![0usize; m];

    for i in 0..m {
        let mut jobs: Vec<(usize, Rat)> = (0..n)
            .filter_map(|j| {
                let v = x.value(i, j);
                if v.is_zero() { None } else { Some((j, v)) }
            })
            .collect();
        if jobs.is_empty() {
            continue;
        }
        jobs.sort_by(|a, b| {
            let pa = inst.time(i, a.0).unwrap();
            let pb = inst.time(i, b.0).unwrap();
            pb.cmp(&pa).then(a.0.cmp(&b.0))
        });

        let first_bin = bins.len();
        bins.push(SubMachine { machine: i, slot: 0, pieces: Vec::new() });
        let mut remaining = Rat::one();
        for (j, frac) in jobs {
            let mut left = frac;
            while !left.is_zero() {
                if remaining.is_zero() {
                    let slot = bins.len() - first_bin;
                    bins.push(SubMachine { machine: i, slot, pieces: Vec::new() });
                    remaining = Rat::one();
                }
                let bin_idx = bins.len() - 1;
                let take = if left <= remaining { left.clone() } else { remaining.clone() };
                bins[bin_idx].pieces.push(BinPiece { job: j, fraction: take.clone() });
                edges[j].push((bin_idx, inst.time(i, j).unwrap()));
                remaining -= &take;
                left -= take;
            }
        }
        bins_per_machine[i] = bins.len() - first_bin;
    }

    Ok(SubMachineGraph { bins, edges, bins_per_machine })
}

/// Rounds a fractional solution to an integral assignment via a minimum-cost
/// matching over the sub-machine graph.
pub fn round(inst: &Instance, x: &LpSolution) -> Result<Assignment, RoundingError> {
    let graph = build_submachine_graph(inst, x)?;
    if inst.jobs() == 0 {
        return Ok(Assignment::empty());
    }
    let edges: Vec<Vec<(usize, i64)>> = graph
        .edges
        .iter()
        .map(|es| es.iter().map(|&(b, p)| (b, p as i64)).collect())
        .collect();
    let (matched, _cost) =
        min_cost_saturating_matching(inst.jobs(), graph.bins.len(), &edges)
            .ok_or(RoundingError::NoPerfectMatching)?;
    let sigma = matched.iter().map(|&b| graph.bins[b].machine).collect();
    Ok(Assignment::new(sigma))
}
