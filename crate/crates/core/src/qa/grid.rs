use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{
    train_qa, AugmentationMode, QAEvalResult, QATrainConfig, QaModel, BATCH_SIZES,
    GRADIENT_ACCUMULATION, LEARNING_RATES,
};
use crate::corpus::TaggedExample;
use crate::error::{Error, Result};
use crate::fsutil;

/// Cartesian grid over learning rate, batch size and gradient accumulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub gradient_accumulation: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            learning_rates: LEARNING_RATES.to_vec(),
            batch_sizes: BATCH_SIZES.to_vec(),
            gradient_accumulation: GRADIENT_ACCUMULATION.to_vec(),
        }
    }
}

impl HyperGrid {
    pub fn single(config: &QATrainConfig) -> Self {
        HyperGrid {
            learning_rates: vec![config.learning_rate],
            batch_sizes: vec![config.batch_size],
            gradient_accumulation: vec![config.gradient_accumulation],
        }
    }

    pub fn len(&self) -> usize {
        self.learning_rates.len() * self.batch_sizes.len() * self.gradient_accumulation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in lr-major order, each filled in from `base`.
    pub fn points(&self, base: &QATrainConfig) -> Vec<QATrainConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &learning_rate in &self.learning_rates {
            for &batch_size in &self.batch_sizes {
                for &gradient_accumulation in &self.gradient_accumulation {
                    out.push(QATrainConfig {
                        learning_rate,
                        batch_size,
                        gradient_accumulation,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub config: QATrainConfig,
    pub status: TrialStatus,
    pub dev_accuracy: Option<f64>,
    pub best_epoch: Option<usize>,
    pub error: Option<String>,
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct GridOutcome {
    pub best_config: QATrainConfig,
    pub best_trial: usize,
    pub model: QaModel,
    pub dev_result: QAEvalResult,
    pub trials: Vec<TrialRecord>,
}

pub const TRIALS_FILE: &str = "trials.json";

/// Trains every grid point and keeps the one with the best dev accuracy.
///
/// Ties go to the lower learning rate, then the smaller batch. A trial that
/// fails is recorded and skipped. With `run_root`, each trial writes its
/// config, per-epoch metrics, checkpoint and dev predictions to its own
/// subdirectory.
pub fn grid_search(
    train: &[TaggedExample],
    dev: &[TaggedExample],
    mode: AugmentationMode,
    grid: &HyperGrid,
    base: &QATrainConfig,
    run_root: Option<&Path>,
) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    let mut trials = Vec::new();
    let mut best: Option<(usize, QaModel, QAEvalResult)> = None;

    for (index, config) in grid.points(base).into_iter().enumerate() {
        let run_dir = run_root.map(|r| r.join(trial_dir_name(index, &config)));
        info!(
            "trial {index}: lr {} batch {} accumulation {}",
            config.learning_rate, config.batch_size, config.gradient_accumulation
        );
        let outcome = run_trial(train, dev, mode, &config, run_dir.as_deref());
        let mut record = TrialRecord {
            index,
            config: config.clone(),
            status: TrialStatus::Failed,
            dev_accuracy: None,
            best_epoch: None,
            error: None,
            run_dir: run_dir.clone(),
        };
        match outcome {
            Ok((model, result)) => {
                record.status = TrialStatus::Completed;
                record.dev_accuracy = Some(result.accuracy);
                record.best_epoch = model.fit_outcome().map(|f| f.best_epoch);
                let better = match &best {
                    None => true,
                    Some((_, m, r)) => beats(&config, result.accuracy, m.config(), r.accuracy),
                };
                if better {
                    best = Some((index, model, result));
                }
            }
            Err(e) => {
                warn!("trial {index} failed: {e}");
                record.error = Some(e.to_string());
            }
        }
        if let Some(dir) = &run_dir {
            fsutil::write_json_atomic(&dir.join("trial.json"), &record)?;
        }
        trials.push(record);
    }

    if let Some(root) = run_root {
        fsutil::write_json_atomic(&root.join(TRIALS_FILE), &trials)?;
    }
    match best {
        Some((best_trial, model, dev_result)) => Ok(GridOutcome {
            best_config: model.config().clone(),
            best_trial,
            model,
            dev_result,
            trials,
        }),
        None => Err(Error::AllTrialsFailed(
            trials
                .iter()
                .map(|t| format!("trial {}: {}", t.index, t.error.as_deref().unwrap_or("?")))
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}

/// Whether a candidate beats the incumbent under the selection rule.
fn beats(cand: &QATrainConfig, cand_acc: f64, inc: &QATrainConfig, inc_acc: f64) -> bool {
    if cand_acc != inc_acc {
        return cand_acc > inc_acc;
    }
    if cand.learning_rate != inc.learning_rate {
        return cand.learning_rate < inc.learning_rate;
    }
    cand.batch_size < inc.batch_size
}

pub fn trial_dir_name(index: usize, config: &QATrainConfig) -> String {
    format!(
        "trial-{index:02}-lr{:e}-bs{}-ga{}",
        config.learning_rate, config.batch_size, config.gradient_accumulation
    )
}

fn run_trial(
    train: &[TaggedExample],
    dev: &[TaggedExample],
    mode: AugmentationMode,
    config: &QATrainConfig,
    run_dir: Option<&Path>,
) -> Result<(QaModel, QAEvalResult)> {
    if let Some(dir) = run_dir {
        fsutil::write_json_atomic(&dir.join("config.json"), config)?;
    }
    let (model, result) = train_qa(train, dev, config, mode)?;
    if let Some(dir) = run_dir {
        if let Some(fit) = model.fit_outcome() {
            fsutil::write_json_atomic(&dir.join("metrics.json"), &fit.epochs)?;
        }
        model.save(&dir.join("checkpoint"))?;
        fsutil::write_atomic(&dir.join("predictions.txt"), result.prediction_file().as_bytes())?;
        result.save(&dir.join("dev_result.json"))?;
    }
    Ok((model, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_twelve_points() {
        let g = HyperGrid::default();
        assert_eq!(g.len(), 12);
        let pts = g.points(&QATrainConfig::default());
        assert_eq!(pts.len(), 12);
        assert!(pts.iter().all(QATrainConfig::is_on_grid));
        let names: std::collections::HashSet<_> =
            pts.iter().enumerate().map(|(i, c)| trial_dir_name(i, c)).collect();
        assert_eq!(names.len(), 12);
    }

    #[test]
    fn tie_break_prefers_lower_lr_then_smaller_batch() {
        let c = |lr, bs| QATrainConfig {
            learning_rate: lr,
            batch_size: bs,
            ..Default::default()
        };
        assert!(beats(&c(1e-5, 8), 0.5, &c(2e-5, 4), 0.5));
        assert!(!beats(&c(2e-5, 4), 0.5, &c(1e-5, 8), 0.5));
        assert!(beats(&c(1e-5, 4), 0.5, &c(1e-5, 8), 0.5));
        assert!(beats(&c(2e-5, 8), 0.6, &c(1e-5, 4), 0.5));
        assert!(!beats(&c(1e-5, 4), 0.5, &c(1e-5, 4), 0.5));
    }
}
