//! Person mentions in a context, split into the agents of its main clauses
//! and everyone else.
//!
//! The built-in [`HeuristicAnalyzer`] needs no model: SocialIQA contexts are
//! short, use capitalized first names for people, and almost always open a
//! clause with the person doing the action. A name at the head of a main
//! clause is a subject; a name anywhere else, including the head of a
//! subordinate clause ("... that Austin was loud"), is an object. Analyses
//! from an external dependency parser can be supplied through
//! [`PrecomputedAnalyzer`].

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

/// Lowercased person mentions of one context, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntacticAnalysis {
    #[serde(rename = "subjects")]
    pub sentence_subjects: Vec<String>,
    #[serde(rename = "objects")]
    pub sentence_objects: Vec<String>,
}

impl SyntacticAnalysis {
    pub fn is_subject(&self, mention: &str) -> bool {
        self.sentence_subjects.iter().any(|s| s == mention)
    }

    pub fn is_object(&self, mention: &str) -> bool {
        self.sentence_objects.iter().any(|s| s == mention)
    }

    pub fn mentions(&self) -> impl Iterator<Item = &str> {
        self.sentence_subjects
            .iter()
            .chain(&self.sentence_objects)
            .map(String::as_str)
    }
}

/// Provider of subject/object analyses.
pub trait ContextAnalyzer: Send + Sync {
    fn analyze(&self, context: &str) -> Result<SyntacticAnalysis>;
}

/// Clause-head analyzer over capitalized mentions.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicAnalyzer;

impl ContextAnalyzer for HeuristicAnalyzer {
    fn analyze(&self, context: &str) -> Result<SyntacticAnalysis> {
        if context.trim().is_empty() {
            return Err(Error::EmptyContext);
        }
        let mut acc = Accumulator::default();
        for sentence in sentences(context) {
            analyze_sentence(&sentence, &mut acc);
        }
        Ok(acc.finish())
    }
}

/// Analyses produced elsewhere (for example by a dependency parser), keyed by
/// context text. Contexts missing from the file are an error.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedAnalyzer {
    by_context: HashMap<String, SyntacticAnalysis>,
}

#[derive(Deserialize)]
struct PrecomputedRecord {
    context: String,
    #[serde(flatten)]
    analysis: SyntacticAnalysis,
}

impl PrecomputedAnalyzer {
    /// Reads `{"context": ..., "subjects": [...], "objects": [...]}` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fsutil::read_to_string(path)?;
        let mut by_context = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: PrecomputedRecord = serde_json::from_str(line).map_err(|e| Error::Record {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            let lower = |v: Vec<String>| v.into_iter().map(|m| m.to_lowercase()).collect();
            by_context.insert(
                rec.context.trim().to_string(),
                SyntacticAnalysis {
                    sentence_subjects: lower(rec.analysis.sentence_subjects),
                    sentence_objects: lower(rec.analysis.sentence_objects),
                },
            );
        }
        Ok(PrecomputedAnalyzer { by_context })
    }

    pub fn insert(&mut self, context: &str, analysis: SyntacticAnalysis) {
        self.by_context.insert(context.trim().to_string(), analysis);
    }
}

impl ContextAnalyzer for PrecomputedAnalyzer {
    fn analyze(&self, context: &str) -> Result<SyntacticAnalysis> {
        if context.trim().is_empty() {
            return Err(Error::EmptyContext);
        }
        self.by_context
            .get(context.trim())
            .cloned()
            .ok_or_else(|| Error::Analysis {
                id: String::new(),
                message: "no precomputed analysis for this context".into(),
            })
    }
}

const COORDINATORS: &[&str] = &["and", "but", "so", "or", "yet", "then", "nor"];

const SUBORDINATORS: &[&str] = &[
    "that", "because", "after", "before", "when", "whenever", "while", "since", "although",
    "though", "if", "unless", "until", "once", "whereas", "as", "who", "whom", "whose", "which",
    "where",
];

/// Capitalized words that are not people.
const NOT_NAMES: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "although", "always", "an", "and", "another",
    "any", "april", "as", "at", "august", "because", "before", "being", "both", "but", "by",
    "christmas", "dad", "daddy", "december", "despite", "due", "during", "each", "either",
    "even", "eventually", "every", "everyone", "everybody", "february", "finally", "first",
    "for", "friday", "from", "god", "grandma", "grandpa", "he", "her", "here", "hers", "him",
    "his", "how", "however", "i", "if", "in", "instead", "it", "its", "january", "july", "june",
    "last", "later", "least", "march", "many", "me", "meanwhile", "mom", "mommy", "monday",
    "more", "most", "mr", "mrs", "ms", "dr", "my", "never", "next", "no", "nobody", "none",
    "not", "november", "now", "october", "of", "on", "once", "one", "only", "or", "other",
    "others", "our", "over", "people", "saturday", "september", "several", "she", "since", "so",
    "some", "someone", "somebody", "sometimes", "soon", "still", "suddenly", "sunday", "that",
    "the", "their", "them", "then", "there", "these", "they", "this", "those", "though",
    "three", "through", "thursday", "to", "today", "tomorrow", "tonight", "tuesday", "two",
    "unfortunately", "unless", "until", "upon", "us", "we", "wednesday", "what", "when",
    "where", "whether", "which", "while", "who", "whose", "why", "with", "within", "without",
    "yes", "yesterday", "yet", "you", "your", "ok", "okay", "english", "spanish", "french",
    "american", "halloween", "thanksgiving", "easter",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClauseKind {
    Main,
    Subordinate,
}

#[derive(Default)]
struct Accumulator {
    subjects: Vec<String>,
    objects: Vec<String>,
    subordinate_heads: Vec<String>,
}

impl Accumulator {
    fn push(list: &mut Vec<String>, mention: &str) {
        if !list.iter().any(|m| m == mention) {
            list.push(mention.to_string());
        }
    }

    /// Falls back to the first subordinate-clause head when no main clause
    /// opens with a name ("When Austin arrived, she cried.").
    fn finish(mut self) -> SyntacticAnalysis {
        if self.subjects.is_empty() {
            if let Some(head) = self.subordinate_heads.first().cloned() {
                self.objects.retain(|o| *o != head);
                self.subjects.push(head);
            }
        }
        SyntacticAnalysis {
            sentence_subjects: self.subjects,
            sentence_objects: self.objects,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    Break,
}

fn sentences(text: &str) -> Vec<Vec<Token>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, current: &mut Vec<Token>| {
        let w = word.trim_matches(|c: char| c == '\'' || c == '-');
        if !w.is_empty() {
            current.push(Token::Word(w.to_string()));
        }
        word.clear();
    };
    for ch in text.chars() {
        match ch {
            c if c.is_alphanumeric() || c == '\'' || c == '\u{2019}' || c == '-' => {
                word.push(if c == '\u{2019}' { '\'' } else { c })
            }
            '.' | '!' | '?' => {
                flush(&mut word, &mut current);
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            ',' | ';' | ':' | '(' | ')' | '"' | '\u{201c}' | '\u{201d}' => {
                flush(&mut word, &mut current);
                current.push(Token::Break);
            }
            _ => flush(&mut word, &mut current),
        }
    }
    flush(&mut word, &mut current);
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// The lowercased name a token refers to, with any possessive removed.
pub(crate) fn person_mention(token: &str) -> Option<String> {
    let first = token.chars().next()?;
    if !first.is_uppercase() {
        return None;
    }
    let stem = token
        .strip_suffix("'s")
        .or_else(|| token.strip_suffix("'S"))
        .or_else(|| token.strip_suffix('\''))
        .unwrap_or(token);
    if stem.is_empty() || !stem.chars().all(|c| c.is_alphabetic() || c == '-') {
        return None;
    }
    let lower = stem.to_lowercase();
    if NOT_NAMES.contains(&lower.as_str()) {
        return None;
    }
    Some(lower)
}

fn analyze_sentence(tokens: &[Token], acc: &mut Accumulator) {
    let mut kind = ClauseKind::Main;
    let mut at_head = true;
    let mut prev_was_head_name = false;

    for (i, token) in tokens.iter().enumerate() {
        let word = match token {
            Token::Break => {
                kind = ClauseKind::Main;
                at_head = true;
                prev_was_head_name = false;
                continue;
            }
            Token::Word(w) => w,
        };
        let lower = word.to_lowercase();

        if let Some(name) = person_mention(word) {
            if at_head {
                match kind {
                    ClauseKind::Main => Accumulator::push(&mut acc.subjects, &name),
                    ClauseKind::Subordinate => {
                        Accumulator::push(&mut acc.objects, &name);
                        Accumulator::push(&mut acc.subordinate_heads, &name);
                    }
                }
                prev_was_head_name = true;
            } else {
                Accumulator::push(&mut acc.objects, &name);
                prev_was_head_name = false;
            }
            at_head = false;
            continue;
        }

        if COORDINATORS.contains(&lower.as_str()) {
            // "Riley and Austin went ..." keeps both names in the same head
            let next_is_name = matches!(tokens.get(i + 1), Some(Token::Word(n)) if person_mention(n).is_some());
            if !(prev_was_head_name && next_is_name) {
                kind = ClauseKind::Main;
            }
            at_head = true;
        } else if SUBORDINATORS.contains(&lower.as_str()) {
            kind = ClauseKind::Subordinate;
            at_head = true;
        } else {
            at_head = false;
        }
        prev_was_head_name = false;
    }
}
