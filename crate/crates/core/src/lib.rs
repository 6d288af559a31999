//! Typed social-commonsense question answering on SocialIQA.
//!
//! * [`corpus`]: examples, relation tags, knowledge categories and their file formats.
//! * [`tagger`]: rule-based ATOMIC relation tagging of questions.
//! * [`classifier`]: the four-way knowledge-category classifier.
//! * [`qa`]: tag-augmented multiple-choice inputs, training, evaluation and grid search.
//! * [`analysis`]: error-rate tables, paired significance tests, random-tag ablations.
//! * [`encoder`]: the transformer encoder and tokenizer shared by both models.

pub mod analysis;
pub mod classifier;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod fsutil;
pub mod manifest;
pub mod qa;
pub mod tagger;

pub use corpus::{
    CategorySource, ClosedSet, KnowledgeCategory, QAExample, RelationSource, RelationTag,
    TaggedExample,
};
pub use error::{Error, Result};
