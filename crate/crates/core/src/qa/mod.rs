//! Tag-augmented multiple-choice question answering.
//!
//! Each candidate answer becomes one two-segment input. The relation tag goes
//! after the question and the category label after the context:
//!
//! | mode     | first segment       | second segment          |
//! |----------|---------------------|-------------------------|
//! | none     | `Context`           | `Question Answer`       |
//! | relation | `Context`           | `Question [TAG] Answer` |
//! | category | `Context [LABEL]`   | `Question Answer`       |
//! | both     | `Context [LABEL]`   | `Question [TAG] Answer` |
//!
//! The tokenizer joins the segments with its separator token. The random
//! ablation modes have the same layout as their base modes.

mod grid;
mod model;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClosedSet, KnowledgeCategory, RelationTag, TaggedExample};
use crate::error::{Error, Result};
use crate::fsutil;

pub use grid::{grid_search, trial_dir_name, GridOutcome, HyperGrid, TrialRecord, TrialStatus, TRIALS_FILE};
pub use model::{evaluate, register_tag_tokens, train_qa, QaModel};

/// Which tags, if any, are spliced into the QA inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentationMode {
    None,
    Relation,
    Category,
    Both,
    RandomRelation,
    RandomCategory,
}

impl AugmentationMode {
    pub const ALL: [AugmentationMode; 6] = [
        AugmentationMode::None,
        AugmentationMode::Relation,
        AugmentationMode::Category,
        AugmentationMode::Both,
        AugmentationMode::RandomRelation,
        AugmentationMode::RandomCategory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentationMode::None => "none",
            AugmentationMode::Relation => "relation",
            AugmentationMode::Category => "category",
            AugmentationMode::Both => "both",
            AugmentationMode::RandomRelation => "random-relation",
            AugmentationMode::RandomCategory => "random-category",
        }
    }

    pub fn uses_relation(self) -> bool {
        matches!(
            self,
            AugmentationMode::Relation | AugmentationMode::Both | AugmentationMode::RandomRelation
        )
    }

    pub fn uses_category(self) -> bool {
        matches!(
            self,
            AugmentationMode::Category | AugmentationMode::Both | AugmentationMode::RandomCategory
        )
    }

    /// Special tokens this mode puts into inputs.
    pub fn tag_tokens(self) -> Vec<String> {
        let mut tokens = Vec::new();
        if self.uses_relation() {
            tokens.extend(RelationTag::ALL.iter().map(|t| t.token()));
        }
        if self.uses_category() {
            tokens.extend(KnowledgeCategory::ALL.iter().map(|c| c.token()));
        }
        tokens
    }
}

impl fmt::Display for AugmentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for AugmentationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AugmentationMode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown mode {s:?}; expected one of: {}",
                    AugmentationMode::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }
}

/// The two text segments of one (example, candidate answer) input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedInput {
    pub first: String,
    pub second: String,
}

impl AugmentedInput {
    /// Joins the segments with an explicit separator marker.
    pub fn render(&self, separator: &str) -> String {
        format!("{} {} {}", self.first, separator, self.second)
    }
}

impl fmt::Display for AugmentedInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("[SEP]"))
    }
}

/// Builds the input for one candidate answer under `mode`.
pub fn build_input(
    ex: &TaggedExample,
    answer_index: usize,
    mode: AugmentationMode,
) -> Result<AugmentedInput> {
    if answer_index > 2 {
        return Err(Error::Precondition(format!(
            "answer index {answer_index} is outside 0..=2"
        )));
    }
    let missing = |what: &'static str| Error::MissingTag {
        id: ex.id().to_string(),
        mode: mode.to_string(),
        missing: what,
    };
    let relation = if mode.uses_relation() {
        Some(ex.relation_tag().ok_or_else(|| missing("relation tag"))?)
    } else {
        None
    };
    let category = if mode.uses_category() {
        Some(ex.category_label().ok_or_else(|| missing("category label"))?)
    } else {
        None
    };

    let e = &ex.example;
    let first = match category {
        Some(c) => format!("{} {}", e.context(), c.token()),
        None => e.context().to_string(),
    };
    let second = match relation {
        Some(r) => format!("{} {} {}", e.question(), r.token(), e.answer(answer_index)),
        None => format!("{} {}", e.question(), e.answer(answer_index)),
    };
    Ok(AugmentedInput { first, second })
}

/// Hyperparameters of one QA fine-tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QATrainConfig {
    /// `tiny` or a directory holding `config.json`, `tokenizer.json` and
    /// `model.safetensors`.
    pub encoder_name: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gradient_accumulation: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub max_sequence_length: usize,
    /// Permit values outside the published grid. Runs that use it are marked
    /// in their manifests.
    #[serde(default)]
    pub allow_off_grid: bool,
    #[serde(default = "default_max_grad_norm")]
    pub max_grad_norm: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

fn default_max_grad_norm() -> f64 {
    1.0
}

pub const LEARNING_RATES: [f64; 2] = [1e-5, 2e-5];
pub const BATCH_SIZES: [usize; 2] = [4, 8];
pub const GRADIENT_ACCUMULATION: [usize; 3] = [4, 8, 16];
pub const MAX_EPOCHS: usize = 4;

impl Default for QATrainConfig {
    fn default() -> Self {
        QATrainConfig {
            encoder_name: "roberta-large".into(),
            learning_rate: 1e-5,
            batch_size: 8,
            gradient_accumulation: 8,
            max_epochs: MAX_EPOCHS,
            seed: 42,
            max_sequence_length: 128,
            allow_off_grid: false,
            max_grad_norm: default_max_grad_norm(),
            weight_decay: 0.0,
        }
    }
}

impl QATrainConfig {
    /// Best grid point reported for each mode. The random ablations reuse
    /// the configuration of their base mode.
    pub fn best_known(mode: AugmentationMode) -> Self {
        let gradient_accumulation = match mode {
            AugmentationMode::None | AugmentationMode::Relation | AugmentationMode::RandomRelation => 8,
            AugmentationMode::Category | AugmentationMode::RandomCategory => 4,
            AugmentationMode::Both => 16,
        };
        QATrainConfig {
            gradient_accumulation,
            ..QATrainConfig::default()
        }
    }

    pub fn is_on_grid(&self) -> bool {
        LEARNING_RATES.contains(&self.learning_rate)
            && BATCH_SIZES.contains(&self.batch_size)
            && GRADIENT_ACCUMULATION.contains(&self.gradient_accumulation)
            && self.max_epochs <= MAX_EPOCHS
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.batch_size > 0
            && self.gradient_accumulation > 0
            && self.max_epochs > 0
            && self.max_sequence_length > 8;
        if !positive {
            return Err(Error::Config(format!("non-positive hyperparameter in {self:?}")));
        }
        if !self.allow_off_grid && !self.is_on_grid() {
            return Err(Error::Config(format!(
                "lr {} / batch {} / accumulation {} / epochs {} is off the search grid; set allow_off_grid to use it",
                self.learning_rate, self.batch_size, self.gradient_accumulation, self.max_epochs
            )));
        }
        Ok(())
    }
}

/// Accuracy of one model on one split, with the per-example outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAEvalResult {
    pub label: String,
    pub split: String,
    pub mode: AugmentationMode,
    pub accuracy: f64,
    pub correctness: Vec<bool>,
    pub predictions: Vec<usize>,
    pub example_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<QATrainConfig>,
}

impl QAEvalResult {
    pub fn new(
        label: impl Into<String>,
        split: impl Into<String>,
        mode: AugmentationMode,
        example_ids: Vec<String>,
        predictions: Vec<usize>,
        correctness: Vec<bool>,
        config: Option<QATrainConfig>,
    ) -> Result<Self> {
        if example_ids.len() != correctness.len() {
            return Err(Error::LengthMismatch {
                what: "example ids vs correctness",
                left: example_ids.len(),
                right: correctness.len(),
            });
        }
        if predictions.len() != correctness.len() {
            return Err(Error::LengthMismatch {
                what: "predictions vs correctness",
                left: predictions.len(),
                right: correctness.len(),
            });
        }
        let accuracy = mean_correct(&correctness);
        Ok(QAEvalResult {
            label: label.into(),
            split: split.into(),
            mode,
            accuracy,
            correctness,
            predictions,
            example_ids,
            config,
        })
    }

    /// Restriction to the given example ids, in this result's order.
    pub fn subset(&self, keep: &std::collections::HashSet<&str>) -> Result<QAEvalResult> {
        let idx: Vec<usize> = (0..self.example_ids.len())
            .filter(|&i| keep.contains(self.example_ids[i].as_str()))
            .collect();
        QAEvalResult::new(
            self.label.clone(),
            self.split.clone(),
            self.mode,
            idx.iter().map(|&i| self.example_ids[i].clone()).collect(),
            idx.iter().map(|&i| self.predictions[i]).collect(),
            idx.iter().map(|&i| self.correctness[i]).collect(),
            self.config.clone(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::write_json_atomic(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fsutil::read_to_string(path)?;
        let r: QAEvalResult = serde_json::from_str(&text)?;
        if r.accuracy != mean_correct(&r.correctness) {
            return Err(Error::Precondition(format!(
                "{}: accuracy does not match the correctness vector",
                path.display()
            )));
        }
        Ok(r)
    }

    /// Official submission format: one answer number (1-3) per line.
    pub fn prediction_file(&self) -> String {
        self.predictions.iter().map(|p| format!("{}\n", p + 1)).collect()
    }
}

/// Fraction of `true` entries; 0 for an empty slice.
pub fn mean_correct(correctness: &[bool]) -> f64 {
    if correctness.is_empty() {
        return 0.0;
    }
    correctness.iter().filter(|c| **c).count() as f64 / correctness.len() as f64
}
