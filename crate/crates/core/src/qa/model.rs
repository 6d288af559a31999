use std::path::Path;

use candle_core::Tensor;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{build_input, AugmentationMode, QAEvalResult, QATrainConfig};
use crate::corpus::TaggedExample;
use crate::encoder::{
    argmax_rows, cross_entropy, fit, Dropout, EncoderModel, EncoderSource, FitOutcome, TrainSettings,
};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::manifest::derive_seed;

const QA_FILE: &str = "qa.json";
const EVAL_CHUNK: usize = 16;

/// Encoder with a one-output scoring head, applied to each candidate answer.
#[derive(Debug)]
pub struct QaModel {
    encoder: EncoderModel,
    mode: AugmentationMode,
    config: QATrainConfig,
    fit: Option<FitOutcome>,
}

#[derive(Serialize, Deserialize)]
struct QaMeta {
    mode: AugmentationMode,
    config: QATrainConfig,
    fit: Option<FitOutcome>,
    registered_tokens: Vec<String>,
}

/// Adds the mode's tag tokens to the encoder vocabulary and embeddings.
pub fn register_tag_tokens(encoder: &mut EncoderModel, mode: AugmentationMode, seed: u64) -> Result<usize> {
    let added = encoder.register_tokens(&mode.tag_tokens(), derive_seed(seed, "tag-embeddings"))?;
    if added > 0 {
        info!("registered {added} tag tokens for mode {mode}");
    }
    Ok(added)
}

impl QaModel {
    /// Fresh model; tag tokens are not registered yet. `corpus` supplies the
    /// vocabulary for the `tiny` encoder and is ignored otherwise.
    pub fn new(config: &QATrainConfig, mode: AugmentationMode, corpus: &[TaggedExample]) -> Result<Self> {
        config.validate()?;
        let source = EncoderSource::resolve(&config.encoder_name)?;
        let text: Vec<&str> = corpus
            .iter()
            .flat_map(|t| {
                let e = &t.example;
                [e.context(), e.question(), e.answer(0), e.answer(1), e.answer(2)]
            })
            .collect();
        let encoder = EncoderModel::from_source(
            &source,
            &text,
            config.max_sequence_length,
            1,
            derive_seed(config.seed, "init"),
        )?;
        Ok(QaModel {
            encoder,
            mode,
            config: config.clone(),
            fit: None,
        })
    }

    pub fn register_tag_tokens(&mut self) -> Result<usize> {
        register_tag_tokens(&mut self.encoder, self.mode, self.config.seed)
    }

    pub fn mode(&self) -> AugmentationMode {
        self.mode
    }

    pub fn config(&self) -> &QATrainConfig {
        &self.config
    }

    pub fn encoder(&self) -> &EncoderModel {
        &self.encoder
    }

    pub fn fit_outcome(&self) -> Option<&FitOutcome> {
        self.fit.as_ref()
    }

    fn max_len(&self) -> usize {
        self.config
            .max_sequence_length
            .min(self.encoder.max_sequence_length())
    }

    fn check_tokens(&self) -> Result<()> {
        for t in self.mode.tag_tokens() {
            if self.encoder.vocab().token_id(&t).is_none() {
                return Err(Error::UnregisteredToken(t));
            }
        }
        Ok(())
    }

    /// Token ids of the three candidate inputs; also returns how many
    /// context tokens were truncated.
    fn encode(&self, ex: &TaggedExample) -> Result<([Vec<u32>; 3], usize)> {
        let mut truncated = 0;
        let mut out: [Vec<u32>; 3] = Default::default();
        for (i, slot) in out.iter_mut().enumerate() {
            let input = build_input(ex, i, self.mode)?;
            let enc = self
                .encoder
                .vocab()
                .encode_pair(&input.first, &input.second, self.max_len())
                .map_err(|e| Error::InvalidExample {
                    id: ex.id().to_string(),
                    message: e.to_string(),
                })?;
            truncated += enc.truncated;
            *slot = enc.ids;
        }
        Ok((out, truncated))
    }

    fn encode_all(&self, split: &[TaggedExample]) -> Result<Vec<[Vec<u32>; 3]>> {
        let mut n_truncated = 0;
        let mut out = Vec::with_capacity(split.len());
        for ex in split {
            let (ids, t) = self.encode(ex)?;
            if t > 0 {
                n_truncated += 1;
            }
            out.push(ids);
        }
        if n_truncated > 0 {
            warn!("{n_truncated} examples had their context truncated from the left");
        }
        Ok(out)
    }

    fn logits(encoder: &EncoderModel, inputs: &[&[Vec<u32>; 3]], dropout: Option<&mut Dropout>) -> Result<Tensor> {
        let seqs: Vec<Vec<u32>> = inputs.iter().flat_map(|c| c.iter().cloned()).collect();
        let batch = encoder.batch(&seqs)?;
        let scores = encoder.forward(&batch, dropout)?;
        Ok(scores.reshape((inputs.len(), 3))?)
    }

    /// Candidate scores, one row of three per example.
    pub fn scores(&self, split: &[TaggedExample]) -> Result<Vec<[f32; 3]>> {
        self.check_tokens()?;
        let encoded = self.encode_all(split)?;
        let mut out = Vec::with_capacity(split.len());
        for chunk in encoded.chunks(EVAL_CHUNK) {
            let refs: Vec<&[Vec<u32>; 3]> = chunk.iter().collect();
            let rows: Vec<Vec<f32>> = Self::logits(&self.encoder, &refs, None)?.to_vec2()?;
            out.extend(rows.into_iter().map(|r| [r[0], r[1], r[2]]));
        }
        Ok(out)
    }

    /// Predicted answer index per example; works on unlabeled data.
    pub fn predict(&self, split: &[TaggedExample]) -> Result<Vec<usize>> {
        let scores = self.scores(split)?;
        Ok(scores
            .iter()
            .map(|r| {
                let mut best = 0;
                for i in 1..3 {
                    if r[i] > r[best] {
                        best = i;
                    }
                }
                best
            })
            .collect())
    }

    /// Fine-tunes on `train`, keeping the epoch with the best accuracy on
    /// `dev`, and returns the dev result of that epoch.
    pub fn fit(&mut self, train: &[TaggedExample], dev: &[TaggedExample]) -> Result<QAEvalResult> {
        self.check_tokens()?;
        let train_gold = gold_indices(train)?;
        let dev_gold = gold_indices(dev)?;
        let train_inputs = self.encode_all(train)?;
        let dev_inputs = self.encode_all(dev)?;
        let settings = TrainSettings {
            learning_rate: self.config.learning_rate,
            batch_size: self.config.batch_size,
            gradient_accumulation: self.config.gradient_accumulation,
            max_epochs: self.config.max_epochs,
            seed: derive_seed(self.config.seed, "shuffle"),
            max_grad_norm: self.config.max_grad_norm,
            weight_decay: self.config.weight_decay,
        };
        let outcome = fit(
            &mut self.encoder,
            train.len(),
            &settings,
            |enc, idx, drop| {
                let refs: Vec<&[Vec<u32>; 3]> = idx.iter().map(|&i| &train_inputs[i]).collect();
                let targets: Vec<u32> = idx.iter().map(|&i| train_gold[i] as u32).collect();
                cross_entropy(&Self::logits(enc, &refs, Some(drop))?, &targets)
            },
            |enc| {
                let preds = predict_encoded(enc, &dev_inputs)?;
                Ok(accuracy(&preds, &dev_gold))
            },
        )?;
        self.fit = Some(outcome);
        evaluate(self, dev, self.mode)
    }

    /// Saves encoder weights, tokenizer and the QA settings.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.encoder.save(dir)?;
        let meta = QaMeta {
            mode: self.mode,
            config: self.config.clone(),
            fit: self.fit.clone(),
            registered_tokens: self.mode.tag_tokens(),
        };
        fsutil::write_json_atomic(&dir.join(QA_FILE), &meta)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: QaMeta = serde_json::from_str(&fsutil::read_to_string(&dir.join(QA_FILE))?)?;
        let encoder = EncoderModel::load(dir)?;
        if encoder.out_dim() != 1 {
            return Err(Error::Config(format!(
                "{} is not a QA checkpoint (head has {} outputs)",
                dir.display(),
                encoder.out_dim()
            )));
        }
        Ok(QaModel {
            encoder,
            mode: meta.mode,
            config: meta.config,
            fit: meta.fit,
        })
    }
}

fn predict_encoded(encoder: &EncoderModel, inputs: &[[Vec<u32>; 3]]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(EVAL_CHUNK) {
        let refs: Vec<&[Vec<u32>; 3]> = chunk.iter().collect();
        out.extend(argmax_rows(&QaModel::logits(encoder, &refs, None)?)?);
    }
    Ok(out)
}

fn accuracy(preds: &[usize], gold: &[usize]) -> f64 {
    let hits = preds.iter().zip(gold).filter(|(p, g)| p == g).count();
    hits as f64 / gold.len().max(1) as f64
}

fn gold_indices(split: &[TaggedExample]) -> Result<Vec<usize>> {
    split
        .iter()
        .map(|t| {
            t.example.gold_index().ok_or_else(|| Error::InvalidExample {
                id: t.id().to_string(),
                message: "gold answer required".into(),
            })
        })
        .collect()
}

/// Builds a model, registers the mode's tag tokens and fine-tunes it.
pub fn train_qa(
    train: &[TaggedExample],
    dev: &[TaggedExample],
    config: &QATrainConfig,
    mode: AugmentationMode,
) -> Result<(QaModel, QAEvalResult)> {
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Precondition("train and dev sets must be nonempty".into()));
    }
    let corpus: Vec<TaggedExample> = train.iter().chain(dev).cloned().collect();
    let mut model = QaModel::new(config, mode, &corpus)?;
    model.register_tag_tokens()?;
    let result = model.fit(train, dev)?;
    Ok((model, result))
}

/// Accuracy and per-example correctness of `model` on a labeled split.
pub fn evaluate(model: &QaModel, split: &[TaggedExample], mode: AugmentationMode) -> Result<QAEvalResult> {
    if model.mode != mode {
        return Err(Error::ModeMismatch {
            trained: model.mode.to_string(),
            requested: mode.to_string(),
        });
    }
    let gold = gold_indices(split)?;
    let predictions = model.predict(split)?;
    let correctness: Vec<bool> = predictions.iter().zip(&gold).map(|(p, g)| p == g).collect();
    QAEvalResult::new(
        mode.name(),
        split_name(split),
        mode,
        split.iter().map(|t| t.id().to_string()).collect(),
        predictions,
        correctness,
        Some(model.config.clone()),
    )
}

/// Shared `<split>:` id prefix, or `"eval"` when there is none.
fn split_name(split: &[TaggedExample]) -> String {
    let prefix = |id: &str| id.split_once(':').map(|(p, _)| p.to_string());
    let first = split.first().and_then(|t| prefix(t.id()));
    match first {
        Some(p) if split.iter().all(|t| prefix(t.id()).as_deref() == Some(p.as_str())) => p,
        _ => "eval".into(),
    }
}
