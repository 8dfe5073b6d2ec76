//! Makespan minimization on parallel machines.
//!
//! The crate bundles an LP-rounding scheduler for unrelated machines with a
//! rebalancing step driven by the instance's feasibility parameter, a
//! combinatorial push procedure for restricted assignment, a parameterized
//! approximation scheme built on a partially integral relaxation, a
//! tree-decomposition dynamic program for graph balancing, and
//! reoptimization with 0/1 transition costs on identical and uniform
//! machines. Exhaustive oracles back every bound at desk scale.

pub mod balance;
pub mod feasible;
pub mod fpt;
pub mod lp;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod reopt;
pub mod reopt_identical;
pub mod reopt_uniform;
pub mod restricted;
pub mod rounding;
pub mod simplex;

pub use model::{
    feasibility_profile, load_profile, Assignment, FeasibilityProfile, Instance, Kind,
    LoadProfile, ModelError, Rat,
};
