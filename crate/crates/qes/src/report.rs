//! Machine-readable run reports.
//!
//! A solve report embeds the fully resolved problem document, the seed and
//! tolerances, and every solution record, so that a report alone
//! reproduces the run. Serialization is deterministic: all maps are
//! ordered and floats print as shortest round-trip decimals.

use serde::{Deserialize, Serialize};

use crate::model::ProblemSpec;
use crate::oracle::VerificationReport;
use crate::solver::SolutionRecord;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToleranceBlock {
    pub tol_abs: f64,
    pub dedup_tol: f64,
    pub newton_tol: f64,
    pub oracle_pass: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub generator: String,
    pub seed: u64,
    /// Preset name and parameters when the run came from the catalog.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub params: Vec<(String, f64)>,
    pub tolerances: ToleranceBlock,
    /// Orders solved (accumulated) or the single order.
    pub orders: Vec<u32>,
    /// The resolved problem document the run started from.
    pub spec: ProblemSpec,
    pub records: Vec<SolutionRecord>,
    /// Oracle verdict per record, parallel to `records`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub verifications: Vec<VerificationReport>,
}

impl SolveReport {
    pub fn generator() -> String {
        format!("qes {}", env!("CARGO_PKG_VERSION"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub generator: String,
    pub all_pass: bool,
    pub reports: Vec<VerificationReport>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let pre = crate::catalog::preset("exact-darboux", &[]).unwrap();
        let rep = SolveReport {
            schema_version: SCHEMA_VERSION,
            generator: SolveReport::generator(),
            seed: 7,
            preset: Some("exact-darboux".into()),
            params: vec![],
            tolerances: ToleranceBlock {
                tol_abs: 1e-10,
                dedup_tol: 1e-9,
                newton_tol: 1e-11,
                oracle_pass: 1e-7,
            },
            orders: vec![0, 1],
            spec: pre.spec.clone(),
            records: vec![],
            verifications: vec![],
        };
        let s1 = serde_json::to_string_pretty(&rep).unwrap();
        let back: SolveReport = serde_json::from_str(&s1).unwrap();
        let s2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(s1, s2, "serialization must be deterministic");
    }
}
