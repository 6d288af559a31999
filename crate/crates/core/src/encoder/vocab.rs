use std::collections::BTreeMap;
use std::path::Path;

use serde_json::json;
use tokenizers::{AddedToken, PostProcessor, Tokenizer, TruncationDirection};

use crate::error::{Error, Result};

pub const CLS: &str = "<s>";
pub const PAD: &str = "<pad>";
pub const SEP: &str = "</s>";
pub const UNK: &str = "<unk>";

/// A tokenizer plus the bookkeeping for tokens registered after it was built.
#[derive(Clone)]
pub struct TokenVocabulary {
    tokenizer: Tokenizer,
    registered: Vec<String>,
    frozen: bool,
}

/// Token ids for one encoded `(first, second)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub ids: Vec<u32>,
    /// Tokens dropped from the front of the first segment.
    pub truncated: usize,
}

impl std::fmt::Debug for TokenVocabulary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenVocabulary")
            .field("size", &self.len())
            .field("registered", &self.registered)
            .field("frozen", &self.frozen)
            .finish()
    }
}

impl TokenVocabulary {
    pub fn from_tokenizer(tokenizer: Tokenizer) -> Self {
        TokenVocabulary {
            tokenizer,
            registered: Vec::new(),
            frozen: false,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let tokenizer = Tokenizer::from_file(path)
            .map_err(|e| Error::Tokenizer(format!("{}: {e}", path.display())))?;
        Ok(Self::from_tokenizer(tokenizer))
    }

    /// Lower-cased word-level vocabulary over `texts`, keeping words seen at
    /// least `min_count` times. Ids 0..4 are `<s> <pad> </s> <unk>`.
    pub fn word_level<'a>(texts: impl IntoIterator<Item = &'a str>, min_count: usize) -> Result<Self> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            for word in split_words(&text.to_lowercase()) {
                *counts.entry(word).or_default() += 1;
            }
        }
        let mut vocab = serde_json::Map::new();
        for (i, special) in [CLS, PAD, SEP, UNK].iter().enumerate() {
            vocab.insert(special.to_string(), json!(i));
        }
        for (word, count) in counts {
            if count >= min_count.max(1) && !vocab.contains_key(&word) {
                let id = vocab.len();
                vocab.insert(word, json!(id));
            }
        }
        let added: Vec<_> = [CLS, PAD, SEP, UNK]
            .iter()
            .enumerate()
            .map(|(i, t)| {
                json!({"id": i, "content": t, "single_word": false, "lstrip": false,
                       "rstrip": false, "normalized": false, "special": true})
            })
            .collect();
        let definition = json!({
            "version": "1.0",
            "truncation": null,
            "padding": null,
            "added_tokens": added,
            "normalizer": {"type": "Lowercase"},
            "pre_tokenizer": {"type": "BertPreTokenizer"},
            "post_processor": {
                "type": "RobertaProcessing",
                "sep": [SEP, 2],
                "cls": [CLS, 0],
                "trim_offsets": true,
                "add_prefix_space": false
            },
            "decoder": null,
            "model": {"type": "WordLevel", "vocab": vocab, "unk_token": UNK}
        });
        let tokenizer: Tokenizer = definition
            .to_string()
            .parse()
            .map_err(|e: tokenizers::Error| Error::Tokenizer(e.to_string()))?;
        Ok(Self::from_tokenizer(tokenizer))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self
            .tokenizer
            .to_string(false)
            .map_err(|e| Error::Tokenizer(e.to_string()))?;
        crate::fsutil::write_atomic(path, text.as_bytes())
    }

    pub fn len(&self) -> usize {
        self.tokenizer.get_vocab_size(true)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.tokenizer.token_to_id(token)
    }

    pub fn pad_id(&self) -> u32 {
        self.token_id(PAD)
            .or_else(|| self.token_id("[PAD]"))
            .unwrap_or(1)
    }

    pub fn registered(&self) -> &[String] {
        &self.registered
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Adds each token as an unsplittable special token; returns how many
    /// were new. Fails once the vocabulary has been frozen by training.
    pub fn register(&mut self, tokens: &[String]) -> Result<usize> {
        let fresh: Vec<&String> = tokens.iter().filter(|t| self.token_id(t).is_none()).collect();
        if fresh.is_empty() {
            return Ok(0);
        }
        if self.frozen {
            return Err(Error::VocabularyFrozen);
        }
        let added: Vec<AddedToken> = fresh.iter().map(|t| AddedToken::from(t.as_str(), true)).collect();
        let n = self.tokenizer.add_special_tokens(added)?;
        self.registered.extend(fresh.into_iter().cloned());
        for t in tokens {
            let ids = self.encode_plain(t)?;
            if ids.len() != 1 {
                return Err(Error::Tokenizer(format!(
                    "registered token {t} encodes to {} pieces",
                    ids.len()
                )));
            }
        }
        Ok(n)
    }

    /// Ids without any special tokens.
    pub fn encode_plain(&self, text: &str) -> Result<Vec<u32>> {
        let enc = self.tokenizer.encode(text, false)?;
        Ok(enc.get_ids().to_vec())
    }

    /// Encodes a segment pair with the tokenizer's pair template. When the
    /// result would exceed `max_len`, tokens are dropped from the start of
    /// the first segment only.
    pub fn encode_pair(&self, first: &str, second: &str, max_len: usize) -> Result<EncodedPair> {
        let mut a = self.tokenizer.encode(first, false)?;
        let b = self.tokenizer.encode(second, false)?;
        let specials = self
            .tokenizer
            .get_post_processor()
            .map(|p| p.added_tokens(true))
            .unwrap_or(0);
        let fixed = specials + b.len();
        if fixed >= max_len {
            return Err(Error::Precondition(format!(
                "second segment needs {fixed} tokens, leaving no room under max length {max_len}"
            )));
        }
        let budget = max_len - fixed;
        let mut truncated = 0;
        if a.len() > budget {
            truncated = a.len() - budget;
            a.truncate(budget, 0, TruncationDirection::Left);
        }
        let enc = self.tokenizer.post_process(a, Some(b), true)?;
        Ok(EncodedPair {
            ids: enc.get_ids().to_vec(),
            truncated,
        })
    }
}

fn split_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.push(c);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> TokenVocabulary {
        TokenVocabulary::word_level(["Taylor went to the store.", "What will Taylor want to do?"], 1).unwrap()
    }

    #[test]
    fn pair_template() {
        let v = vocab();
        let enc = v.encode_pair("Taylor went", "want", 32).unwrap();
        let taylor = v.token_id("taylor").unwrap();
        let went = v.token_id("went").unwrap();
        let want = v.token_id("want").unwrap();
        assert_eq!(enc.ids, vec![0, taylor, went, 2, 2, want, 2]);
        assert_eq!(enc.truncated, 0);
        assert_eq!(v.encode_plain("zebra").unwrap(), vec![3]);
    }

    #[test]
    fn truncates_front_of_first_segment() {
        let v = vocab();
        let enc = v.encode_pair("taylor went to the store", "want", 8).unwrap();
        assert_eq!(enc.truncated, 2);
        assert_eq!(enc.ids.len(), 8);
        assert_eq!(enc.ids[1], v.token_id("to").unwrap());
        assert!(v.encode_pair("x", "what will taylor want to do ?", 6).is_err());
    }

    #[test]
    fn registration_is_idempotent_and_atomic_tokens() {
        let mut v = vocab();
        let base = v.len();
        let toks = vec!["[xNeed]".to_string(), "[oWant]".to_string()];
        assert_eq!(v.register(&toks).unwrap(), 2);
        assert_eq!(v.len(), base + 2);
        assert_eq!(v.register(&toks).unwrap(), 0);
        let id = v.token_id("[xNeed]").unwrap();
        let ids = v.encode_plain("taylor [xNeed] went").unwrap();
        assert_eq!(ids.iter().filter(|&&i| i == id).count(), 1);
        v.freeze();
        assert_eq!(v.register(&toks).unwrap(), 0);
        assert!(matches!(
            v.register(&["[xIntent]".to_string()]),
            Err(Error::VocabularyFrozen)
        ));
    }

    #[test]
    fn save_round_trip() {
        let mut v = vocab();
        v.register(&["[Interaction]".to_string()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tokenizer.json");
        v.save(&p).unwrap();
        let w = TokenVocabulary::from_file(&p).unwrap();
        assert_eq!(w.len(), v.len());
        assert_eq!(w.token_id("[Interaction]"), v.token_id("[Interaction]"));
    }
}
