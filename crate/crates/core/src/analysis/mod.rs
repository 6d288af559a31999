//! Error-rate breakdowns, paired significance tests and random-tag ablations.

mod ablation;
mod report;
mod stats;

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::ClosedSet;
use crate::error::{Error, Result};
use crate::qa::QAEvalResult;

pub use ablation::{randomize_tags, TagKind};
pub use report::{compare_runs, ComparisonReport, GroupComparison, Grouping};
pub use stats::{mcnemar, paired_significance, paired_t_test, McNemarResult, SignificanceResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupErrorRate {
    pub errors: usize,
    pub support: usize,
    pub error_rate: f64,
}

/// Error rate per group; groups without examples are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateTable<G: Ord> {
    pub rows: BTreeMap<G, GroupErrorRate>,
}

impl<G: ClosedSet> ErrorRateTable<G> {
    pub fn total_support(&self) -> usize {
        self.rows.values().map(|r| r.support).sum()
    }

    pub fn total_errors(&self) -> usize {
        self.rows.values().map(|r| r.errors).sum()
    }

    /// Support-weighted mean of the group error rates.
    pub fn weighted_error_rate(&self) -> f64 {
        let n = self.total_support();
        if n == 0 {
            return 0.0;
        }
        self.rows
            .values()
            .map(|r| r.support as f64 * r.error_rate)
            .sum::<f64>()
            / n as f64
    }

    pub fn get(&self, group: G) -> Option<&GroupErrorRate> {
        self.rows.get(&group)
    }

    /// Members of the closed set that had no examples.
    pub fn missing_groups(&self) -> Vec<G> {
        G::ALL
            .iter()
            .copied()
            .filter(|g| !self.rows.contains_key(g))
            .collect()
    }
}

/// Per-group error rate `1 - mean(correctness)` over aligned group labels.
pub fn error_rate_by_group<G: ClosedSet>(
    result: &QAEvalResult,
    groups: &[G],
) -> Result<ErrorRateTable<G>> {
    error_rates(&result.correctness, groups)
}

pub(crate) fn error_rates<G: ClosedSet>(
    correctness: &[bool],
    groups: &[G],
) -> Result<ErrorRateTable<G>> {
    if correctness.len() != groups.len() {
        return Err(Error::LengthMismatch {
            what: "correctness vs group labels",
            left: correctness.len(),
            right: groups.len(),
        });
    }
    let mut counts: BTreeMap<G, (usize, usize)> = BTreeMap::new();
    for (&ok, &g) in correctness.iter().zip(groups) {
        let entry = counts.entry(g).or_default();
        entry.1 += 1;
        if !ok {
            entry.0 += 1;
        }
    }
    let table = ErrorRateTable {
        rows: counts
            .into_iter()
            .map(|(g, (errors, support))| {
                (
                    g,
                    GroupErrorRate {
                        errors,
                        support,
                        error_rate: errors as f64 / support as f64,
                    },
                )
            })
            .collect(),
    };
    let missing = table.missing_groups();
    if !missing.is_empty() {
        warn!("no examples for groups {missing:?}; omitted from the error-rate table");
    }
    Ok(table)
}
