//! Integrity check for execution datasets: recompute every stored outcome.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env;
use crate::types::{ExecutionRecord, StepOutcome};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("record {index} ({record_id}): {reason}")]
pub struct ReplayRejection {
    pub index: usize,
    pub record_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub index: usize,
    pub record_id: String,
    pub matched: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recomputed: Option<StepOutcome>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub total: usize,
    pub mismatched: usize,
    pub entries: Vec<ReplayEntry>,
}

impl ReplayReport {
    pub fn all_match(&self) -> bool {
        self.mismatched == 0
    }

    pub fn mismatch_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| !e.matched)
            .map(|e| e.index)
            .collect()
    }
}

/// Replays `(state_before, action)` of every record and compares the result
/// with the stored outcome. Records whose state does not belong to their
/// declared environment are rejected outright.
pub fn replay_trace(records: &[ExecutionRecord]) -> Result<ReplayReport, ReplayRejection> {
    let mut report = ReplayReport::default();
    for (index, rec) in records.iter().enumerate() {
        let reject = |reason: String| ReplayRejection {
            index,
            record_id: rec.record_id.clone(),
            reason,
        };
        if rec.state_before.env() != rec.env_id {
            return Err(reject(format!(
                "state belongs to `{}`, record declares `{}`",
                rec.state_before.env(),
                rec.env_id
            )));
        }
        env::validate_state(&rec.state_before).map_err(|e| reject(e.to_string()))?;
        let recomputed = env::step(&rec.state_before, &rec.action).canonical();
        let matched = recomputed == rec.outcome.canonical();
        if !matched {
            report.mismatched += 1;
        }
        report.entries.push(ReplayEntry {
            index,
            record_id: rec.record_id.clone(),
            matched,
            recomputed: (!matched).then_some(recomputed),
        });
    }
    report.total = records.len();
    Ok(report)
}
