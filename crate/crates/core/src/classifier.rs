//! Four-way knowledge-category classifier over (context, question) pairs,
//! and propagation of its predictions to unannotated examples.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    write_tagged, CategorySource, ClosedSet, KnowledgeCategory, QAExample, TaggedExample,
};
use crate::encoder::{
    argmax_rows, cross_entropy, fit, EncoderModel, EncoderSource, EpochMetrics, TrainSettings,
};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::manifest::derive_seed;
use crate::qa::AugmentedInput;

const CLASSIFIER_FILE: &str = "classifier.json";
const EVAL_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub encoder_name: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub max_sequence_length: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub max_grad_norm: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            encoder_name: "roberta-large".into(),
            learning_rate: 1e-5,
            batch_size: 8,
            max_epochs: 10,
            max_sequence_length: 128,
            seed: 42,
            max_grad_norm: 1.0,
            weight_decay: 0.0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.max_sequence_length > 8;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("non-positive hyperparameter in {self:?}")))
        }
    }
}

/// Dev-set outcome of the selected epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub dev_accuracy: f64,
    /// `confusion[gold][predicted]`, indexed in closed-set order.
    pub confusion: [[usize; 4]; 4],
    pub config: ClassifierConfig,
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: usize,
}

impl ClassifierReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..4).map(|i| self.confusion[i][i]).sum()
    }

    /// Dev examples per gold category.
    pub fn support(&self) -> [usize; 4] {
        self.confusion.map(|row| row.iter().sum())
    }
}

/// Confusion matrix of predictions against gold labels.
pub fn confusion_matrix(gold: &[KnowledgeCategory], predicted: &[KnowledgeCategory]) -> Result<[[usize; 4]; 4]> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            what: "gold vs predicted categories",
            left: gold.len(),
            right: predicted.len(),
        });
    }
    let mut m = [[0usize; 4]; 4];
    for (g, p) in gold.iter().zip(predicted) {
        m[g.index()][p.index()] += 1;
    }
    Ok(m)
}

/// Context and question as two segments; answers are left out.
pub fn encode_for_classification(example: &QAExample) -> AugmentedInput {
    AugmentedInput {
        first: example.context().to_string(),
        second: example.question().to_string(),
    }
}

#[derive(Debug)]
pub struct CategoryClassifier {
    encoder: EncoderModel,
    config: ClassifierConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierManifest {
    pub config: ClassifierConfig,
    pub dev_accuracy: f64,
    pub best_epoch: usize,
    pub train_digest: String,
    pub dev_digest: String,
    pub train_size: usize,
    pub dev_size: usize,
}

/// Predicted labels plus how many inputs lost context to truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryPredictions {
    pub examples: Vec<TaggedExample>,
    pub truncated: usize,
}

impl CategoryClassifier {
    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn encoder(&self) -> &EncoderModel {
        &self.encoder
    }

    fn max_len(&self) -> usize {
        self.config
            .max_sequence_length
            .min(self.encoder.max_sequence_length())
    }

    fn encode_all(&self, examples: &[&QAExample]) -> Result<(Vec<Vec<u32>>, usize)> {
        let mut truncated = 0;
        let mut out = Vec::with_capacity(examples.len());
        for ex in examples {
            let input = encode_for_classification(ex);
            let enc = self
                .encoder
                .vocab()
                .encode_pair(&input.first, &input.second, self.max_len())
                .map_err(|e| Error::InvalidExample {
                    id: ex.id().to_string(),
                    message: e.to_string(),
                })?;
            if enc.truncated > 0 {
                truncated += 1;
            }
            out.push(enc.ids);
        }
        Ok((out, truncated))
    }

    fn classify_encoded(&self, encoded: &[Vec<u32>]) -> Result<Vec<KnowledgeCategory>> {
        classify(&self.encoder, encoded)
    }

    /// Category per example, in input order.
    pub fn classify(&self, examples: &[&QAExample]) -> Result<(Vec<KnowledgeCategory>, usize)> {
        let (encoded, truncated) = self.encode_all(examples)?;
        Ok((self.classify_encoded(&encoded)?, truncated))
    }

    pub fn save(&self, dir: &Path, manifest: &ClassifierManifest) -> Result<()> {
        self.encoder.save(dir)?;
        fsutil::write_json_atomic(&dir.join(CLASSIFIER_FILE), manifest)
    }

    pub fn load(dir: &Path) -> Result<(Self, ClassifierManifest)> {
        let manifest: ClassifierManifest =
            serde_json::from_str(&fsutil::read_to_string(&dir.join(CLASSIFIER_FILE))?)?;
        let encoder = EncoderModel::load(dir)?;
        if encoder.out_dim() != KnowledgeCategory::ALL.len() {
            return Err(Error::Config(format!(
                "{} is not a category classifier checkpoint",
                dir.display()
            )));
        }
        Ok((
            CategoryClassifier {
                encoder,
                config: manifest.config.clone(),
            },
            manifest,
        ))
    }
}

fn classify(encoder: &EncoderModel, encoded: &[Vec<u32>]) -> Result<Vec<KnowledgeCategory>> {
    let mut out = Vec::with_capacity(encoded.len());
    for chunk in encoded.chunks(EVAL_CHUNK) {
        let logits = encoder.forward(&encoder.batch(chunk)?, None)?;
        out.extend(argmax_rows(&logits)?.into_iter().map(|i| KnowledgeCategory::ALL[i]));
    }
    Ok(out)
}

/// Fine-tunes the classifier and returns the best-dev-accuracy epoch.
pub fn train_classifier(
    train: &[(QAExample, KnowledgeCategory)],
    dev: &[(QAExample, KnowledgeCategory)],
    config: &ClassifierConfig,
) -> Result<(CategoryClassifier, ClassifierReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Precondition("classifier training set is empty".into()));
    }
    if dev.is_empty() {
        return Err(Error::Precondition("classifier dev set is empty".into()));
    }
    let source = EncoderSource::resolve(&config.encoder_name)?;
    let text: Vec<&str> = train
        .iter()
        .chain(dev)
        .flat_map(|(e, _)| [e.context(), e.question()])
        .collect();
    let encoder = EncoderModel::from_source(
        &source,
        &text,
        config.max_sequence_length,
        KnowledgeCategory::ALL.len(),
        derive_seed(config.seed, "init"),
    )?;
    let mut model = CategoryClassifier {
        encoder,
        config: config.clone(),
    };

    let train_refs: Vec<&QAExample> = train.iter().map(|(e, _)| e).collect();
    let dev_refs: Vec<&QAExample> = dev.iter().map(|(e, _)| e).collect();
    let (train_ids, t1) = model.encode_all(&train_refs)?;
    let (dev_ids, t2) = model.encode_all(&dev_refs)?;
    if t1 + t2 > 0 {
        warn!("{} classifier inputs had their context truncated", t1 + t2);
    }
    let train_gold: Vec<u32> = train.iter().map(|(_, c)| c.index() as u32).collect();
    let dev_gold: Vec<KnowledgeCategory> = dev.iter().map(|(_, c)| *c).collect();

    let settings = TrainSettings {
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        gradient_accumulation: 1,
        max_epochs: config.max_epochs,
        seed: derive_seed(config.seed, "shuffle"),
        max_grad_norm: config.max_grad_norm,
        weight_decay: config.weight_decay,
    };
    let outcome = fit(
        &mut model.encoder,
        train.len(),
        &settings,
        |enc, idx, drop| {
            let seqs: Vec<Vec<u32>> = idx.iter().map(|&i| train_ids[i].clone()).collect();
            let targets: Vec<u32> = idx.iter().map(|&i| train_gold[i]).collect();
            cross_entropy(&enc.forward(&enc.batch(&seqs)?, Some(drop))?, &targets)
        },
        |enc| {
            let preds = classify(enc, &dev_ids)?;
            let hits = preds.iter().zip(&dev_gold).filter(|(p, g)| p == g).count();
            Ok(hits as f64 / dev_gold.len() as f64)
        },
    )?;

    let preds = model.classify_encoded(&dev_ids)?;
    let confusion = confusion_matrix(&dev_gold, &preds)?;
    let trace: usize = (0..4).map(|i| confusion[i][i]).sum();
    let report = ClassifierReport {
        dev_accuracy: trace as f64 / dev.len() as f64,
        confusion,
        config: config.clone(),
        epochs: outcome.epochs,
        best_epoch: outcome.best_epoch,
    };
    Ok((model, report))
}

/// Manifest contents for a trained classifier.
pub fn classifier_manifest(
    report: &ClassifierReport,
    train: &[(QAExample, KnowledgeCategory)],
    dev: &[(QAExample, KnowledgeCategory)],
) -> Result<ClassifierManifest> {
    Ok(ClassifierManifest {
        config: report.config.clone(),
        dev_accuracy: report.dev_accuracy,
        best_epoch: report.best_epoch,
        train_digest: labeled_digest(train)?,
        dev_digest: labeled_digest(dev)?,
        train_size: train.len(),
        dev_size: dev.len(),
    })
}

fn labeled_digest(data: &[(QAExample, KnowledgeCategory)]) -> Result<String> {
    let tagged: Vec<TaggedExample> = data
        .iter()
        .map(|(e, c)| TaggedExample::new(e.clone()).with_category(*c, CategorySource::Human))
        .collect();
    let mut buf = Vec::new();
    write_tagged(&mut buf, &tagged)?;
    Ok(hex::encode(Sha256::digest(&buf)))
}

/// Labels every example with the classifier's prediction. Existing relation
/// tags are kept; any previous category is replaced.
pub fn predict_categories(model: &CategoryClassifier, examples: &[TaggedExample]) -> Result<CategoryPredictions> {
    let refs: Vec<&QAExample> = examples.iter().map(|t| &t.example).collect();
    let (cats, truncated) = model.classify(&refs)?;
    if truncated > 0 {
        warn!("{truncated} of {} inputs truncated from the left of the context", examples.len());
    }
    Ok(CategoryPredictions {
        examples: examples
            .iter()
            .zip(cats)
            .map(|(t, c)| t.clone().with_category(c, CategorySource::Predicted))
            .collect(),
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_input_excludes_answers() {
        let ex = QAExample::new(
            "dev:4",
            "Taylor taught math in the schools after studying to be a teacher for 4 years.",
            "What does Taylor need to do before this?",
            ["get a certificate", "teach small children", "work in a school"],
            Some(0),
        )
        .unwrap();
        let a = encode_for_classification(&ex);
        assert_eq!(
            a.to_string(),
            "Taylor taught math in the schools after studying to be a teacher for 4 years. [SEP] What does Taylor need to do before this?"
        );
        assert_eq!(a, encode_for_classification(&ex));
        assert!(!a.to_string().contains("certificate"));
    }

    #[test]
    fn confusion_trace_matches_accuracy() {
        use KnowledgeCategory::*;
        let gold = [Interaction, Interaction, DailyEvents, KnowledgeNormRules, FeelingsAndCharacteristics];
        let pred = [Interaction, DailyEvents, DailyEvents, KnowledgeNormRules, Interaction];
        let m = confusion_matrix(&gold, &pred).unwrap();
        let trace: usize = (0..4).map(|i| m[i][i]).sum();
        assert_eq!(trace, 3);
        assert_eq!(m[Interaction.index()][DailyEvents.index()], 1);
        assert_eq!(m.iter().flatten().sum::<usize>(), 5);
    }

    #[test]
    fn empty_sets_rejected() {
        let cfg = ClassifierConfig {
            encoder_name: "tiny".into(),
            ..Default::default()
        };
        assert!(matches!(train_classifier(&[], &[], &cfg), Err(Error::Precondition(_))));
    }
}
