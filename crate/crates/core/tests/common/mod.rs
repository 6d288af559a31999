#![allow(dead_code)]

use std::path::PathBuf;

use socialkc::analysis::{randomize_tags, TagKind};
use socialkc::corpus::{join_annotations, load_category_annotations, load_socialiqa};
use socialkc::tagger::RelationTagger;
use socialkc::{CategorySource, KnowledgeCategory, QAExample, TaggedExample};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini")
}

pub fn split(name: &str) -> Vec<QAExample> {
    let dir = fixtures();
    let labels = dir.join(format!("{name}-labels.lst"));
    load_socialiqa(
        &dir.join(format!("{name}.jsonl")),
        labels.exists().then_some(labels.as_path()),
    )
    .unwrap()
}

pub fn tagged(name: &str) -> Vec<TaggedExample> {
    RelationTagger::default().tag_dataset(&split(name)).unwrap().0
}

pub fn annotated(name: &str) -> Vec<(QAExample, KnowledgeCategory)> {
    let anns = load_category_annotations(&fixtures().join(format!("categories_{name}.jsonl"))).unwrap();
    join_annotations(&split(name), &anns).unwrap()
}

pub fn taylor() -> QAExample {
    QAExample::new(
        "dev:4",
        "Taylor taught math in the schools after studying to be a teacher for 4 years.",
        "What does Taylor need to do before this?",
        ["get a certificate", "teach small children", "work in a school"],
        Some(0),
    )
    .unwrap()
}

/// Relation-tagged split with a category on every example: human labels
/// where annotated, seeded random ones elsewhere.
pub fn labeled(name: &str) -> Vec<TaggedExample> {
    let anns = annotated(name);
    randomize_tags(&tagged(name), TagKind::Category, 0)
        .into_iter()
        .map(|t| match anns.iter().find(|(e, _)| e.id() == t.id()) {
            Some((_, c)) => t.with_category(*c, CategorySource::Human),
            None => t,
        })
        .collect()
}
