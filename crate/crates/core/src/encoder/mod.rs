//! Transformer encoder used by both the category classifier and the QA
//! scorer: RoBERTa layout, pooled first token, small task head.

mod params;
mod train;
mod vocab;

use std::path::{Path, PathBuf};

use candle_core::{DType, Device, IndexOp, Module, Tensor, D};
use candle_nn::{Embedding, Linear};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use params::{Initializer, ParamStore};
pub use train::{fit, EpochMetrics, FitOutcome, TrainSettings};
pub use vocab::{EncodedPair, TokenVocabulary, CLS, PAD, SEP, UNK};

pub const CONFIG_FILE: &str = "config.json";
pub const TOKENIZER_FILE: &str = "tokenizer.json";
pub const WEIGHTS_FILE: &str = "model.safetensors";


/// Architecture hyper-parameters; field names follow the usual
/// `config.json` of pretrained checkpoints so those files load directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "one")]
    pub type_vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "one_u32")]
    pub pad_token_id: u32,
    #[serde(default = "default_dropout")]
    pub hidden_dropout_prob: f64,
    #[serde(default = "default_dropout")]
    pub attention_probs_dropout_prob: f64,
    #[serde(default = "default_model_type")]
    pub model_type: String,
    /// Standard deviation of freshly initialised weights.
    #[serde(default = "default_init_range")]
    pub initializer_range: f64,
}

fn one() -> usize {
    1
}
fn one_u32() -> u32 {
    1
}
fn default_eps() -> f64 {
    1e-5
}
fn default_dropout() -> f64 {
    0.1
}
fn default_init_range() -> f64 {
    0.02
}
fn default_model_type() -> String {
    "roberta".into()
}

impl EncoderConfig {
    /// Small randomly initialised encoder for CPU runs and tests.
    pub fn tiny(vocab_size: usize, max_sequence_length: usize) -> Self {
        EncoderConfig {
            vocab_size,
            hidden_size: 256,
            num_hidden_layers: 2,
            num_attention_heads: 4,
            intermediate_size: 512,
            max_position_embeddings: max_sequence_length + 2,
            type_vocab_size: 1,
            layer_norm_eps: 1e-5,
            pad_token_id: 1,
            hidden_dropout_prob: 0.0,
            attention_probs_dropout_prob: 0.0,
            model_type: "roberta".into(),
            // wider than the usual 0.02; from-scratch runs leave the
            // initial plateau sooner
            initializer_range: 0.1,
        }
    }

    /// Positions are offset past the padding id, as in RoBERTa checkpoints.
    fn position_offset(&self) -> u32 {
        if self.model_type == "roberta" {
            self.pad_token_id + 1
        } else {
            0
        }
    }

    pub fn max_sequence_length(&self) -> usize {
        self.max_position_embeddings
            .saturating_sub(self.position_offset() as usize)
    }

    fn validate(&self) -> Result<()> {
        if self.num_attention_heads == 0 || !self.hidden_size.is_multiple_of(self.num_attention_heads) {
            return Err(Error::Config(format!(
                "hidden size {} not divisible by {} heads",
                self.hidden_size, self.num_attention_heads
            )));
        }
        Ok(())
    }
}

/// Where encoder weights come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncoderSource {
    /// Random initialisation with [`EncoderConfig::tiny`] and a word-level
    /// vocabulary built from the training text.
    Tiny,
    /// A directory holding `config.json`, `tokenizer.json` and
    /// `model.safetensors`.
    Pretrained(PathBuf),
}

impl EncoderSource {
    /// `"tiny"` or a checkpoint directory. Bare names such as
    /// `roberta-large` are looked up under `$SOCIALKC_MODELS`.
    pub fn resolve(name: &str) -> Result<Self> {
        if name == "tiny" {
            return Ok(EncoderSource::Tiny);
        }
        let direct = PathBuf::from(name);
        if direct.join(CONFIG_FILE).is_file() {
            return Ok(EncoderSource::Pretrained(direct));
        }
        if let Some(root) = std::env::var_os("SOCIALKC_MODELS") {
            let p = Path::new(&root).join(name);
            if p.join(CONFIG_FILE).is_file() {
                return Ok(EncoderSource::Pretrained(p));
            }
        }
        Err(Error::Config(format!(
            "encoder {name:?} not found: expected \"tiny\" or a directory with {CONFIG_FILE}, \
             {TOKENIZER_FILE} and {WEIGHTS_FILE} (optionally under $SOCIALKC_MODELS)"
        )))
    }
}

/// Seeded dropout; candle's own random ops cannot be seeded.
pub struct Dropout {
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(seed: u64) -> Self {
        Dropout {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn apply(&mut self, x: &Tensor, p: f64) -> Result<Tensor> {
        if p <= 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 / (1.0 - p) as f32;
        let mask: Vec<f32> = (0..x.elem_count())
            .map(|_| if self.rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?;
        Ok(x.mul(&mask)?)
    }
}

/// A padded batch of token sequences.
#[derive(Debug, Clone)]
pub struct Batch {
    pub ids: Tensor,
    pub mask: Tensor,
    pub positions: Tensor,
}

/// Encoder weights, vocabulary and a pooled-token head with `out_dim` outputs.
pub struct EncoderModel {
    config: EncoderConfig,
    vocab: TokenVocabulary,
    params: ParamStore,
    out_dim: usize,
    device: Device,
}

impl std::fmt::Debug for EncoderModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EncoderModel")
            .field("config", &self.config)
            .field("out_dim", &self.out_dim)
            .field("parameters", &self.params.num_parameters())
            .finish()
    }
}

impl EncoderModel {
    pub fn random(config: EncoderConfig, vocab: TokenVocabulary, out_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let device = Device::Cpu;
        let mut config = config;
        config.vocab_size = config.vocab_size.max(vocab.len());
        config.pad_token_id = vocab.pad_id();
        let mut model = EncoderModel {
            config,
            vocab,
            params: ParamStore::default(),
            out_dim,
            device,
        };
        let mut init = Initializer::new(seed, &model.device);
        model.init_missing_encoder(&mut init)?;
        model.init_head(&mut init)?;
        Ok(model)
    }

    /// Loads a pretrained encoder; the task head is always freshly initialised.
    pub fn pretrained(dir: &Path, out_dim: usize, seed: u64) -> Result<Self> {
        let config: EncoderConfig =
            serde_json::from_str(&crate::fsutil::read_to_string(&dir.join(CONFIG_FILE))?)?;
        config.validate()?;
        let vocab = TokenVocabulary::from_file(&dir.join(TOKENIZER_FILE))?;
        let device = Device::Cpu;
        let raw = candle_core::safetensors::load(dir.join(WEIGHTS_FILE), &device)?;
        let mut params = ParamStore::default();
        for (name, t) in raw {
            if let Some(canonical) = canonical_name(&name) {
                params.insert(canonical, &t)?;
            }
        }
        let mut model = EncoderModel {
            config,
            vocab,
            params,
            out_dim,
            device,
        };
        let mut init = Initializer::new(seed, &model.device);
        let fresh = model.init_missing_encoder(&mut init)?;
        if fresh.iter().any(|n| !n.starts_with("pooler.")) {
            return Err(Error::Config(format!(
                "checkpoint {} lacks encoder weights: {}",
                dir.display(),
                fresh.join(", ")
            )));
        }
        model.init_head(&mut init)?;
        info!(
            "loaded encoder from {} ({} parameters)",
            dir.display(),
            model.params.num_parameters()
        );
        Ok(model)
    }

    pub fn from_source(
        source: &EncoderSource,
        corpus_text: &[&str],
        max_sequence_length: usize,
        out_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        match source {
            EncoderSource::Tiny => {
                let vocab = TokenVocabulary::word_level(corpus_text.iter().copied(), 1)?;
                let config = EncoderConfig::tiny(vocab.len(), max_sequence_length);
                Self::random(config, vocab, out_dim, seed)
            }
            EncoderSource::Pretrained(dir) => Self::pretrained(dir, out_dim, seed),
        }
    }

    /// Saves config, tokenizer and all weights, head included.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        crate::fsutil::write_json_atomic(&dir.join(CONFIG_FILE), &self.config)?;
        self.vocab.save(&dir.join(TOKENIZER_FILE))?;
        let tmp = dir.join(format!(".{WEIGHTS_FILE}.tmp-{}", std::process::id()));
        self.params.save(&tmp)?;
        std::fs::rename(&tmp, dir.join(WEIGHTS_FILE)).map_err(|e| Error::io(dir, e))?;
        Ok(())
    }

    /// Loads what [`EncoderModel::save`] wrote.
    pub fn load(dir: &Path) -> Result<Self> {
        let config: EncoderConfig =
            serde_json::from_str(&crate::fsutil::read_to_string(&dir.join(CONFIG_FILE))?)?;
        config.validate()?;
        let mut vocab = TokenVocabulary::from_file(&dir.join(TOKENIZER_FILE))?;
        vocab.freeze();
        let device = Device::Cpu;
        let params = ParamStore::load(&dir.join(WEIGHTS_FILE), &device)?;
        let out_dim = params.get("head.out_proj.weight")?.dim(0)?;
        Ok(EncoderModel {
            config,
            vocab,
            params,
            out_dim,
            device,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn vocab(&self) -> &TokenVocabulary {
        &self.vocab
    }

    pub fn vocab_mut(&mut self) -> &mut TokenVocabulary {
        &mut self.vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn max_sequence_length(&self) -> usize {
        self.config.max_sequence_length()
    }

    /// Registers tokens and grows the embedding matrix to match. New rows
    /// start at the mean embedding plus small seeded noise.
    pub fn register_tokens(&mut self, tokens: &[String], seed: u64) -> Result<usize> {
        let added = self.vocab.register(tokens)?;
        let emb = self.params.get("embeddings.word_embeddings.weight")?;
        let (rows, hidden) = emb.dims2()?;
        let needed = self.vocab.len();
        if needed > rows {
            let mut init = Initializer::new(seed, &self.device);
            let mean = emb.mean_keepdim(0)?;
            let noise = init.normal(&[needed - rows, hidden], self.config.initializer_range * 0.1)?;
            let fresh = noise.broadcast_add(&mean)?;
            let grown = Tensor::cat(&[&emb, &fresh], 0)?;
            self.params.insert("embeddings.word_embeddings.weight", &grown)?;
            self.config.vocab_size = needed;
        }
        Ok(added)
    }

    /// Pads sequences to a common length.
    pub fn batch(&self, sequences: &[Vec<u32>]) -> Result<Batch> {
        let len = sequences.iter().map(Vec::len).max().unwrap_or(0).max(1);
        if len > self.max_sequence_length() {
            return Err(Error::Precondition(format!(
                "sequence of {len} tokens exceeds encoder limit {}",
                self.max_sequence_length()
            )));
        }
        let pad = self.config.pad_token_id;
        let offset = self.config.position_offset();
        let n = sequences.len();
        let mut ids = Vec::with_capacity(n * len);
        let mut mask = Vec::with_capacity(n * len);
        let mut positions = Vec::with_capacity(n * len);
        for seq in sequences {
            for j in 0..len {
                match seq.get(j) {
                    Some(&id) => {
                        ids.push(id);
                        mask.push(1f32);
                        positions.push(offset + j as u32);
                    }
                    None => {
                        ids.push(pad);
                        mask.push(0f32);
                        positions.push(if offset > 0 { pad } else { 0 });
                    }
                }
            }
        }
        Ok(Batch {
            ids: Tensor::from_vec(ids, (n, len), &self.device)?,
            mask: Tensor::from_vec(mask, (n, len), &self.device)?,
            positions: Tensor::from_vec(positions, (n, len), &self.device)?,
        })
    }

    /// Head outputs of shape `(batch, out_dim)`. Dropout applies only when
    /// a generator is supplied.
    pub fn forward(&self, batch: &Batch, mut dropout: Option<&mut Dropout>) -> Result<Tensor> {
        let c = &self.config;
        let hidden = c.hidden_size;
        let mut drop = |x: &Tensor, p: f64| -> Result<Tensor> {
            match dropout.as_deref_mut() {
                Some(d) => d.apply(x, p),
                None => Ok(x.clone()),
            }
        };

        let word = Embedding::new(self.params.get("embeddings.word_embeddings.weight")?, hidden);
        let pos = Embedding::new(self.params.get("embeddings.position_embeddings.weight")?, hidden);
        let tok_type = self.params.get("embeddings.token_type_embeddings.weight")?.i(0)?;
        let mut x = word
            .forward(&batch.ids)?
            .add(&pos.forward(&batch.positions)?)?
            .broadcast_add(&tok_type)?;
        x = self.layer_norm("embeddings.LayerNorm")?.forward(&x)?;
        x = drop(&x, c.hidden_dropout_prob)?;

        let (b, l) = batch.ids.dims2()?;
        let heads = c.num_attention_heads;
        let dh = hidden / heads;
        // additive mask: 0 for tokens, large negative for padding
        let mask_add = ((batch.mask.clone() - 1.0)? * 1e4)?.reshape((b, 1, 1, l))?;
        let scale = 1.0 / (dh as f64).sqrt();

        for i in 0..c.num_hidden_layers {
            let p = format!("encoder.layer.{i}");
            let split = |t: Tensor| -> Result<Tensor> {
                Ok(t.reshape((b, l, heads, dh))?.transpose(1, 2)?.contiguous()?)
            };
            let q = split(self.linear(&format!("{p}.attention.self.query"))?.forward(&x)?)?;
            let k = split(self.linear(&format!("{p}.attention.self.key"))?.forward(&x)?)?;
            let v = split(self.linear(&format!("{p}.attention.self.value"))?.forward(&x)?)?;
            let scores = (q.matmul(&k.t()?.contiguous()?)? * scale)?.broadcast_add(&mask_add)?;
            let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
            let probs = drop(&probs, c.attention_probs_dropout_prob)?;
            let ctx = probs
                .matmul(&v)?
                .transpose(1, 2)?
                .contiguous()?
                .reshape((b, l, hidden))?;
            let attn = self.linear(&format!("{p}.attention.output.dense"))?.forward(&ctx)?;
            let attn = drop(&attn, c.hidden_dropout_prob)?;
            x = self
                .layer_norm(&format!("{p}.attention.output.LayerNorm"))?
                .forward(&(attn + &x)?)?;

            let inter = self
                .linear(&format!("{p}.intermediate.dense"))?
                .forward(&x)?
                .gelu_erf()?;
            let out = self.linear(&format!("{p}.output.dense"))?.forward(&inter)?;
            let out = drop(&out, c.hidden_dropout_prob)?;
            x = self
                .layer_norm(&format!("{p}.output.LayerNorm"))?
                .forward(&(out + &x)?)?;
        }

        let first = x.i((.., 0, ..))?.contiguous()?;
        let first = drop(&first, c.hidden_dropout_prob)?;
        let h = self.linear("head.dense")?.forward(&first)?.tanh()?;
        let h = drop(&h, c.hidden_dropout_prob)?;
        Ok(self.linear("head.out_proj")?.forward(&h)?)
    }

    fn linear(&self, prefix: &str) -> Result<Linear> {
        Ok(Linear::new(
            self.params.get(&format!("{prefix}.weight"))?,
            Some(self.params.get(&format!("{prefix}.bias"))?),
        ))
    }

    fn layer_norm(&self, prefix: &str) -> Result<LayerNorm> {
        Ok(LayerNorm {
            weight: self.params.get(&format!("{prefix}.weight"))?,
            bias: self.params.get(&format!("{prefix}.bias"))?,
            eps: self.config.layer_norm_eps,
        })
    }

    /// Initialises every encoder parameter not already present; returns
    /// the names it created.
    fn init_missing_encoder(&mut self, init: &mut Initializer) -> Result<Vec<String>> {
        let c = self.config.clone();
        let h = c.hidden_size;
        let mut shapes: Vec<(String, Vec<usize>, Fill)> = vec![
            ("embeddings.word_embeddings.weight".into(), vec![c.vocab_size, h], Fill::Normal),
            ("embeddings.position_embeddings.weight".into(), vec![c.max_position_embeddings, h], Fill::Normal),
            ("embeddings.token_type_embeddings.weight".into(), vec![c.type_vocab_size.max(1), h], Fill::Normal),
        ];
        push_layer_norm(&mut shapes, "embeddings.LayerNorm", h);
        for i in 0..c.num_hidden_layers {
            let p = format!("encoder.layer.{i}");
            for part in ["query", "key", "value"] {
                push_linear(&mut shapes, &format!("{p}.attention.self.{part}"), h, h);
            }
            push_linear(&mut shapes, &format!("{p}.attention.output.dense"), h, h);
            push_layer_norm(&mut shapes, &format!("{p}.attention.output.LayerNorm"), h);
            push_linear(&mut shapes, &format!("{p}.intermediate.dense"), h, c.intermediate_size);
            push_linear(&mut shapes, &format!("{p}.output.dense"), c.intermediate_size, h);
            push_layer_norm(&mut shapes, &format!("{p}.output.LayerNorm"), h);
        }
        push_linear(&mut shapes, "pooler.dense", h, h);

        let mut created = Vec::new();
        for (name, shape, fill) in shapes {
            if self.params.contains(&name) {
                let have = self.params.get(&name)?.dims().to_vec();
                if have != shape {
                    return Err(Error::Config(format!(
                        "parameter {name} has shape {have:?}, config implies {shape:?}"
                    )));
                }
                continue;
            }
            let t = fill.make(init, &shape, self.config.initializer_range)?;
            self.params.insert(name.clone(), &t)?;
            created.push(name);
        }
        Ok(created)
    }

    fn init_head(&mut self, init: &mut Initializer) -> Result<()> {
        let h = self.config.hidden_size;
        let mut shapes = Vec::new();
        push_linear(&mut shapes, "head.dense", h, h);
        push_linear(&mut shapes, "head.out_proj", h, self.out_dim);
        for (name, shape, fill) in shapes {
            let t = fill.make(init, &shape, self.config.initializer_range)?;
            self.params.insert(name, &t)?;
        }
        Ok(())
    }
}

// Built from primitive ops: the fused kernels in candle_nn have no
// backward pass.
struct LayerNorm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl LayerNorm {
    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        normed.broadcast_mul(&self.weight)?.broadcast_add(&self.bias)
    }
}

#[derive(Clone, Copy)]
enum Fill {
    Normal,
    Zeros,
    Ones,
}

impl Fill {
    fn make(self, init: &mut Initializer, shape: &[usize], std: f64) -> Result<Tensor> {
        match self {
            Fill::Normal => init.normal(shape, std),
            Fill::Zeros => init.zeros(shape),
            Fill::Ones => init.ones(shape),
        }
    }
}

fn push_linear(out: &mut Vec<(String, Vec<usize>, Fill)>, prefix: &str, inp: usize, outp: usize) {
    out.push((format!("{prefix}.weight"), vec![outp, inp], Fill::Normal));
    out.push((format!("{prefix}.bias"), vec![outp], Fill::Zeros));
}

fn push_layer_norm(out: &mut Vec<(String, Vec<usize>, Fill)>, prefix: &str, h: usize) {
    out.push((format!("{prefix}.weight"), vec![h], Fill::Ones));
    out.push((format!("{prefix}.bias"), vec![h], Fill::Zeros));
}

/// Maps checkpoint tensor names onto ours; `None` for tensors we do not use
/// such as language-model heads.
fn canonical_name(name: &str) -> Option<String> {
    let name = name
        .strip_prefix("roberta.")
        .or_else(|| name.strip_prefix("bert."))
        .unwrap_or(name);
    if !(name.starts_with("embeddings.") || name.starts_with("encoder.") || name.starts_with("pooler.")) {
        return None;
    }
    if name.ends_with("position_ids") {
        return None;
    }
    let name = if let Some(stem) = name.strip_suffix("LayerNorm.gamma") {
        format!("{stem}LayerNorm.weight")
    } else if let Some(stem) = name.strip_suffix("LayerNorm.beta") {
        format!("{stem}LayerNorm.bias")
    } else {
        name.to_string()
    };
    Some(name)
}

/// Cross-entropy of `logits` (batch, classes) against `targets`.
pub fn cross_entropy(logits: &Tensor, targets: &[u32]) -> Result<Tensor> {
    let t = Tensor::from_slice(targets, targets.len(), logits.device())?;
    Ok(candle_nn::loss::cross_entropy(logits, &t)?)
}

/// Row-wise argmax with ties going to the lowest index.
pub fn argmax_rows(logits: &Tensor) -> Result<Vec<usize>> {
    let rows: Vec<Vec<f32>> = logits.to_dtype(DType::F32)?.to_vec2()?;
    Ok(rows
        .iter()
        .map(|r| {
            let mut best = 0;
            for (i, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = i;
                }
            }
            best
        })
        .collect())
}

/// Mean of a rank-0 or singleton tensor as f32.
pub(crate) fn scalar(t: &Tensor) -> Result<f32> {
    Ok(t.to_dtype(DType::F32)?.flatten_all()?.mean(D::Minus1)?.to_scalar::<f32>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(out_dim: usize) -> EncoderModel {
        let vocab = TokenVocabulary::word_level(["alex met riley at the park today"], 1).unwrap();
        let config = EncoderConfig::tiny(vocab.len(), 32);
        EncoderModel::random(config, vocab, out_dim, 3).unwrap()
    }

    #[test]
    fn output_shape_and_padding_invariance() {
        let m = model(4);
        let a = m.vocab().encode_pair("alex met riley", "park", 32).unwrap().ids;
        let b = m.vocab().encode_pair("alex met riley at the park today", "park", 32).unwrap().ids;
        let alone = m.forward(&m.batch(std::slice::from_ref(&a)).unwrap(), None).unwrap();
        let padded = m.forward(&m.batch(&[a, b]).unwrap(), None).unwrap();
        assert_eq!(padded.dims(), &[2, 4]);
        let x: Vec<f32> = alone.i(0).unwrap().to_vec1().unwrap();
        let y: Vec<f32> = padded.i(0).unwrap().to_vec1().unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-5, "{p} vs {q}");
        }
    }

    #[test]
    fn registering_grows_embeddings_and_round_trips() {
        let mut m = model(1);
        let before = m.params().get("embeddings.word_embeddings.weight").unwrap().dim(0).unwrap();
        let added = m
            .register_tokens(&["[xWant]".to_string(), "[oWant]".to_string()], 9)
            .unwrap();
        assert_eq!(added, 2);
        let after = m.params().get("embeddings.word_embeddings.weight").unwrap().dim(0).unwrap();
        assert_eq!(after, before + 2);
        let ids = m.vocab().encode_pair("alex [xWant]", "park", 32).unwrap().ids;
        let out = m.forward(&m.batch(std::slice::from_ref(&ids)).unwrap(), None).unwrap();

        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let n = EncoderModel::load(dir.path()).unwrap();
        assert!(n.vocab().is_frozen());
        let out2 = n.forward(&n.batch(&[ids]).unwrap(), None).unwrap();
        assert_eq!(out.to_vec2::<f32>().unwrap(), out2.to_vec2::<f32>().unwrap());
    }

    #[test]
    fn checkpoint_names() {
        assert_eq!(
            canonical_name("roberta.encoder.layer.0.output.LayerNorm.gamma").as_deref(),
            Some("encoder.layer.0.output.LayerNorm.weight")
        );
        assert_eq!(canonical_name("lm_head.dense.weight"), None);
        assert_eq!(canonical_name("roberta.embeddings.position_ids"), None);
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let t = Tensor::new(&[[1f32, 3.0, 3.0], [0.0, 0.0, 0.0]], &Device::Cpu).unwrap();
        assert_eq!(argmax_rows(&t).unwrap(), vec![1, 0]);
    }
}
