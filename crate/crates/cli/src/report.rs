//! Run reports with bound verdicts recomputed from raw loads. The JSON form
//! is deterministic: wall time is kept out of serialization so reruns on the
//! same input are byte-identical.

use mkspan::model::Rat;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    /// Exact rational bound, rendered as `num/den` (or an integer).
    pub bound: String,
    pub achieved: String,
    pub pass: bool,
}

impl BoundCheck {
    pub fn from_rats(name: &str, achieved: &Rat, bound: &Rat) -> Self {
        BoundCheck {
            name: name.to_string(),
            bound: bound.to_string(),
            achieved: achieved.to_string(),
            pass: achieved <= bound,
        }
    }

    pub fn from_counts(name: &str, achieved: u64, bound: u64) -> Self {
        BoundCheck {
            name: name.to_string(),
            bound: bound.to_string(),
            achieved: achieved.to_string(),
            pass: achieved <= bound,
        }
    }

    pub fn equality(name: &str, achieved: u64, expected: u64) -> Self {
        BoundCheck {
            name: name.to_string(),
            bound: expected.to_string(),
            achieved: achieved.to_string(),
            pass: achieved == expected,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleSummary {
    pub t_opt: u64,
    pub l_opt: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub instance_digest: String,
    /// Achieved makespan in scaled units, with the instance scale alongside.
    pub makespan: u64,
    pub scale: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<u64>,
    pub bounds: Vec<BoundCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    /// Wall time never serializes; reports must be reproducible bytes.
    #[serde(skip)]
    pub wall_ms: u128,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.bounds.iter().all(|b| b.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Aligned human-readable row.
    pub fn table_row(&self) -> String {
        let verdict = if self.all_pass() { "pass" } else { "FAIL" };
        format!(
            "{:<10} {:>10} {:>8} {:>6} {:>8}ms  {}",
            self.algorithm,
            self.makespan,
            self.cost.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
            verdict,
            self.wall_ms,
            self.instance_digest,
        )
    }

    pub fn table_header() -> String {
        format!(
            "{:<10} {:>10} {:>8} {:>6} {:>10}  {}",
            "algorithm", "makespan", "cost", "check", "wall", "digest"
        )
    }
}

/// FNV-1a over the canonical input text; stable across runs and platforms.
pub fn digest(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}
