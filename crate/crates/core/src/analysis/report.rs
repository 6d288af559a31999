use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stats::{paired_significance, SignificanceResult};
use super::{error_rates, ErrorRateTable};
use crate::corpus::{ClosedSet, KnowledgeCategory, RelationTag};
use crate::error::{Error, Result};
use crate::qa::{AugmentationMode, QAEvalResult};

/// Group labels by example id. Examples absent from a map are left out of
/// that breakdown, which is how the category table is restricted to the
/// human-annotated subset.
#[derive(Debug, Clone, Default)]
pub struct Grouping {
    pub relations: Option<HashMap<String, RelationTag>>,
    pub categories: Option<HashMap<String, KnowledgeCategory>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub label: String,
    pub mode: AugmentationMode,
    pub n: usize,
    pub accuracy: f64,
    /// Percentage points relative to the baseline row.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCell {
    pub error_rate: f64,
    pub support: usize,
    pub delta: f64,
    /// `↓` lower than the baseline, `↑` higher, `=` equal.
    pub direction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub label: String,
    pub cells: Vec<Option<GroupCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub groups: Vec<String>,
    pub n: usize,
    pub rows: Vec<GroupRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub label: String,
    pub against: String,
    pub result: SignificanceResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub split: String,
    pub baseline: String,
    pub accuracy: Vec<AccuracyRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_errors: Option<GroupComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category_errors: Option<GroupComparison>,
    pub significance: Vec<SignificanceRow>,
}

/// Compares runs evaluated on the same split. Rows are sorted by mode and
/// label; the baseline is the first `none` run, or the first row when no
/// run is unaugmented.
pub fn compare_runs(results: &[QAEvalResult], grouping: &Grouping) -> Result<ComparisonReport> {
    let first = results
        .first()
        .ok_or_else(|| Error::Precondition("compare_runs needs at least one result".into()))?;
    for r in results {
        if r.split != first.split {
            return Err(Error::SplitMismatch(format!(
                "{:?} is on split {:?}, {:?} on {:?}",
                r.label, r.split, first.label, first.split
            )));
        }
        if r.example_ids != first.example_ids {
            return Err(Error::SplitMismatch(format!(
                "{:?} and {:?} were evaluated on different examples",
                r.label, first.label
            )));
        }
    }

    let mut sorted: Vec<&QAEvalResult> = results.iter().collect();
    sorted.sort_by(|a, b| (a.mode, &a.label).cmp(&(b.mode, &b.label)));
    let baseline = sorted
        .iter()
        .copied()
        .find(|r| r.mode == AugmentationMode::None)
        .unwrap_or(sorted[0]);

    let accuracy = sorted
        .iter()
        .map(|r| AccuracyRow {
            label: r.label.clone(),
            mode: r.mode,
            n: r.correctness.len(),
            accuracy: r.accuracy,
            delta: 100.0 * (r.accuracy - baseline.accuracy),
        })
        .collect();

    let relation_errors = grouping
        .relations
        .as_ref()
        .map(|m| group_comparison(&sorted, baseline, m))
        .transpose()?;
    let category_errors = grouping
        .categories
        .as_ref()
        .map(|m| group_comparison(&sorted, baseline, m))
        .transpose()?;

    let significance = sorted
        .iter()
        .filter(|r| !std::ptr::eq(**r, baseline))
        .map(|r| {
            Ok(SignificanceRow {
                label: r.label.clone(),
                against: baseline.label.clone(),
                result: paired_significance(&r.correctness, &baseline.correctness)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonReport {
        split: first.split.clone(),
        baseline: baseline.label.clone(),
        accuracy,
        relation_errors,
        category_errors,
        significance,
    })
}

fn group_comparison<G: ClosedSet + serde::Serialize>(
    sorted: &[&QAEvalResult],
    baseline: &QAEvalResult,
    labels: &HashMap<String, G>,
) -> Result<GroupComparison> {
    let table_for = |r: &QAEvalResult| -> Result<ErrorRateTable<G>> {
        let (correct, groups): (Vec<bool>, Vec<G>) = r
            .example_ids
            .iter()
            .zip(&r.correctness)
            .filter_map(|(id, ok)| labels.get(id).map(|g| (*ok, *g)))
            .unzip();
        error_rates(&correct, &groups)
    };
    let base = table_for(baseline)?;
    let present: Vec<G> = G::ALL
        .iter()
        .copied()
        .filter(|g| base.rows.contains_key(g))
        .collect();
    let rows = sorted
        .iter()
        .map(|r| {
            let table = table_for(r)?;
            let cells = present
                .iter()
                .map(|g| {
                    let cell = table.get(*g)?;
                    let b = base.get(*g)?;
                    let delta = cell.error_rate - b.error_rate;
                    let direction = if cell.error_rate < b.error_rate {
                        "↓"
                    } else if cell.error_rate > b.error_rate {
                        "↑"
                    } else {
                        "="
                    };
                    Some(GroupCell {
                        error_rate: cell.error_rate,
                        support: cell.support,
                        delta,
                        direction: direction.into(),
                    })
                })
                .collect();
            Ok(GroupRow {
                label: r.label.clone(),
                cells,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupComparison {
        groups: present.iter().map(|g| g.name().to_string()).collect(),
        n: base.total_support(),
        rows,
    })
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let label_w = self
            .accuracy
            .iter()
            .map(|r| r.label.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(out, "split: {}  baseline: {}", self.split, self.baseline);
        let _ = writeln!(out);
        let _ = writeln!(out, "Accuracy");
        let _ = writeln!(
            out,
            "{:<label_w$}  {:<15}  {:>6}  {:>8}  {:>7}",
            "run", "mode", "n", "acc(%)", "delta"
        );
        for row in &self.accuracy {
            let _ = writeln!(
                out,
                "{:<label_w$}  {:<15}  {:>6}  {:>8.2}  {:>+7.2}",
                row.label,
                row.mode,
                row.n,
                100.0 * row.accuracy,
                row.delta
            );
        }
        for (title, table) in [
            ("Error rate by relation", &self.relation_errors),
            ("Error rate by category", &self.category_errors),
        ] {
            if let Some(t) = table {
                let _ = writeln!(out);
                let _ = writeln!(out, "{title} (n={})", t.n);
                let col_w = t.groups.iter().map(|g| g.len()).max().unwrap_or(6).max(7);
                let _ = write!(out, "{:<label_w$}", "run");
                for g in &t.groups {
                    let _ = write!(out, "  {g:>col_w$}");
                }
                let _ = writeln!(out);
                for row in &t.rows {
                    let _ = write!(out, "{:<label_w$}", row.label);
                    for cell in &row.cells {
                        let text = match cell {
                            Some(c) if c.direction == "=" => format!("{:.3}", c.error_rate),
                            Some(c) => format!("{:.3}{}", c.error_rate, c.direction),
                            None => "-".into(),
                        };
                        let _ = write!(out, "  {text:>col_w$}");
                    }
                    let _ = writeln!(out);
                }
            }
        }
        if !self.significance.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "Paired t-test against {} (per-example correctness)", self.baseline);
            let _ = writeln!(
                out,
                "{:<label_w$}  {:>8}  {:>10}  {:>10}  {:>10}",
                "run", "t", "p(2-sided)", "p(1-sided)", "McNemar p"
            );
            for s in &self.significance {
                let r = &s.result;
                let t = if r.degenerate {
                    "degen".to_string()
                } else {
                    format!("{:.3}", r.statistic)
                };
                let _ = writeln!(
                    out,
                    "{:<label_w$}  {:>8}  {:>10.4}  {:>10.4}  {:>10.4}",
                    s.label, t, r.p_value, r.p_value_one_sided, r.mcnemar.p_value
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(label: &str, mode: AugmentationMode, correct: &[bool]) -> QAEvalResult {
        let ids = (0..correct.len()).map(|i| format!("dev:{i}")).collect();
        QAEvalResult::new(label, "dev", mode, ids, vec![0; correct.len()], correct.to_vec(), None).unwrap()
    }

    fn with_accuracy(label: &str, mode: AugmentationMode, correct: usize, n: usize) -> QAEvalResult {
        let v: Vec<bool> = (0..n).map(|i| i < correct).collect();
        result(label, mode, &v)
    }

    #[test]
    fn single_result_one_row() {
        let r = compare_runs(&[result("base", AugmentationMode::None, &[true, false])], &Grouping::default()).unwrap();
        assert_eq!(r.accuracy.len(), 1);
        assert_eq!(r.accuracy[0].delta, 0.0);
        assert!(r.significance.is_empty());
    }

    #[test]
    fn delta_in_points() {
        let base = with_accuracy("roberta", AugmentationMode::None, 774, 1000);
        let rel = with_accuracy("relation", AugmentationMode::Relation, 790, 1000);
        let r = compare_runs(&[rel, base], &Grouping::default()).unwrap();
        assert_eq!(r.baseline, "roberta");
        assert_eq!(r.accuracy[0].label, "roberta");
        approx::assert_relative_eq!(r.accuracy[1].delta, 1.6, max_relative = 1e-9);
        assert!(r.to_text().contains("+1.60"));
    }

    #[test]
    fn identical_results_have_zero_deltas() {
        let a = result("a", AugmentationMode::None, &[true, false, true]);
        let mut b = a.clone();
        b.label = "b".into();
        let grouping = Grouping {
            relations: Some(
                a.example_ids
                    .iter()
                    .map(|id| (id.clone(), RelationTag::XWant))
                    .collect(),
            ),
            categories: None,
        };
        let r = compare_runs(&[a, b], &grouping).unwrap();
        assert!(r.accuracy.iter().all(|row| row.delta == 0.0));
        let groups = r.relation_errors.unwrap();
        assert!(groups.rows.iter().flat_map(|row| &row.cells).all(|c| c.as_ref().unwrap().delta == 0.0));
        assert!(r.significance[0].result.degenerate);
    }

    #[test]
    fn order_insensitive() {
        let a = result("base", AugmentationMode::None, &[true, false, true, false]);
        let b = result("rel", AugmentationMode::Relation, &[true, true, true, false]);
        let c = result("cat", AugmentationMode::Category, &[false, true, true, true]);
        let r1 = compare_runs(&[a.clone(), b.clone(), c.clone()], &Grouping::default()).unwrap();
        let r2 = compare_runs(&[c, a, b], &Grouping::default()).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn split_mismatch() {
        let a = result("a", AugmentationMode::None, &[true, false]);
        let mut b = a.clone();
        b.split = "test".into();
        assert!(matches!(compare_runs(&[a.clone(), b], &Grouping::default()), Err(Error::SplitMismatch(_))));
        let c = result("c", AugmentationMode::None, &[true, false, true]);
        assert!(compare_runs(&[a, c], &Grouping::default()).is_err());
    }

    #[test]
    fn json_round_trip_and_text_agree() {
        let base = with_accuracy("roberta", AugmentationMode::None, 7, 10);
        let rel = with_accuracy("relation", AugmentationMode::Relation, 8, 10);
        let r = compare_runs(&[base, rel], &Grouping::default()).unwrap();
        let back = ComparisonReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let text = r.to_text();
        for row in &back.accuracy {
            let line = text.lines().find(|l| l.starts_with(&row.label)).unwrap();
            assert!(line.contains(&format!("{:.2}", 100.0 * row.accuracy)), "{line}");
            assert!(line.contains(&format!("{:+.2}", row.delta)), "{line}");
        }
    }
}
