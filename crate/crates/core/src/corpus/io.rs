use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CategorySource, KnowledgeCategory, QAExample, RelationSource, RelationTag, TaggedExample};
use crate::error::{Error, Result};
use crate::fsutil;

/// One line of the official distribution, optionally extended with an id, an
/// inline label and the tag fields written by this crate.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    context: String,
    question: String,
    #[serde(rename = "answerA")]
    answer_a: String,
    #[serde(rename = "answerB")]
    answer_b: String,
    #[serde(rename = "answerC")]
    answer_c: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relation_source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category_source: Option<String>,
}

/// Infers the split name used in synthesized ids from a file name such as
/// `socialIQa_v1.4_dev.jsonl` or `train.jsonl`.
pub fn split_name_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let parts: Vec<&str> = stem
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|p| !p.is_empty())
        .collect();
    for part in parts.iter().rev() {
        match *part {
            "trn" | "train" => return "train".into(),
            "dev" | "val" | "valid" | "validation" => return "dev".into(),
            "tst" | "test" => return "test".into(),
            _ => {}
        }
    }
    if stem.is_empty() {
        "data".into()
    } else {
        stem
    }
}

/// Files of one split found under a data root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitFiles {
    pub data: PathBuf,
    pub labels: Option<PathBuf>,
}

const SPLIT_ALIASES: [(&str, &[&str]); 3] = [
    ("train", &["train", "trn"]),
    ("dev", &["dev", "val"]),
    ("test", &["test", "tst"]),
];

/// Looks for `split` under `root` as `<name>.jsonl` or
/// `socialIQa_v1.4_<name>.jsonl`, in `root` or `root/socialiqa`, with the
/// label file named `<stem>-labels.lst` beside it.
pub fn locate_split(root: &Path, split: &str) -> Option<SplitFiles> {
    let names: Vec<&str> = SPLIT_ALIASES
        .iter()
        .find(|(s, _)| *s == split)
        .map(|(_, a)| a.to_vec())
        .unwrap_or_else(|| vec![split]);
    for dir in [root.to_path_buf(), root.join("socialiqa")] {
        for name in &names {
            for stem in [name.to_string(), format!("socialIQa_v1.4_{name}")] {
                let data = dir.join(format!("{stem}.jsonl"));
                if data.is_file() {
                    let labels = dir.join(format!("{stem}-labels.lst"));
                    return Some(SplitFiles {
                        data,
                        labels: labels.is_file().then_some(labels),
                    });
                }
            }
        }
    }
    None
}

/// Looks for the category annotations of `split` (`train` or `dev`) under
/// `root` as `categories_<split>.jsonl` or `category_<split>.jsonl`, in
/// `root` or `root/category`.
pub fn locate_annotations(root: &Path, split: &str) -> Option<PathBuf> {
    for dir in [root.to_path_buf(), root.join("category")] {
        for prefix in ["categories", "category"] {
            let p = dir.join(format!("{prefix}_{split}.jsonl"));
            if p.is_file() {
                return Some(p);
            }
        }
    }
    None
}

/// Loads a SocialIQA split, taking the split name for synthesized ids from the
/// file name.
pub fn load_socialiqa(data_path: &Path, labels_path: Option<&Path>) -> Result<Vec<QAExample>> {
    load_socialiqa_split(data_path, labels_path, &split_name_from_path(data_path))
}

/// Loads a SocialIQA split. Labels come from the sidecar file when given
/// (one of `1`, `2`, `3` per line), otherwise from an inline `label` field.
/// Records without an `id` get `"<split>:<line>"`.
pub fn load_socialiqa_split(
    data_path: &Path,
    labels_path: Option<&Path>,
    split: &str,
) -> Result<Vec<QAExample>> {
    let text = fsutil::read_to_string(data_path)?;
    let lines = content_lines(data_path, &text)?;

    let sidecar = match labels_path {
        Some(p) => {
            let text = fsutil::read_to_string(p)?;
            let labels = content_lines(p, &text)?;
            if labels.len() != lines.len() {
                return Err(Error::LabelCountMismatch {
                    records: lines.len(),
                    labels: labels.len(),
                });
            }
            let parsed = labels
                .iter()
                .map(|(n, l)| parse_label(l).map_err(|m| record_err(p, *n, m)))
                .collect::<Result<Vec<_>>>()?;
            Some(parsed)
        }
        None => None,
    };

    let mut seen = HashSet::with_capacity(lines.len());
    let mut out = Vec::with_capacity(lines.len());
    for (i, (line_no, line)) in lines.iter().enumerate() {
        let record: Record =
            serde_json::from_str(line).map_err(|e| record_err(data_path, *line_no, e.to_string()))?;
        let gold = match &sidecar {
            Some(labels) => Some(labels[i]),
            None => record
                .label
                .as_ref()
                .map(|v| parse_label_value(v).map_err(|m| record_err(data_path, *line_no, m)))
                .transpose()?,
        };
        let id = record
            .id
            .clone()
            .unwrap_or_else(|| format!("{split}:{line_no}"));
        let example = build_example(data_path, *line_no, id, &record, gold)?;
        if !seen.insert(example.id().to_string()) {
            return Err(Error::DuplicateId(example.id().to_string()));
        }
        out.push(example);
    }
    Ok(out)
}

/// Serializes tagged examples as one JSON object per line.
pub fn write_tagged<W: Write>(mut writer: W, examples: &[TaggedExample]) -> Result<()> {
    for ex in examples {
        let record = to_record(ex);
        serde_json::to_writer(&mut writer, &record)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

/// Atomically writes tagged examples to `path`.
pub fn save_tagged(path: &Path, examples: &[TaggedExample]) -> Result<()> {
    let mut buf = Vec::new();
    write_tagged(&mut buf, examples)?;
    fsutil::write_atomic(path, &buf)
}

pub fn load_tagged(path: &Path) -> Result<Vec<TaggedExample>> {
    let text = fsutil::read_to_string(path)?;
    let split = split_name_from_path(path);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line_no, line) in content_lines(path, &text)? {
        let err = |m: String| record_err(path, line_no, m);
        let record: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let gold = record
            .label
            .as_ref()
            .map(|v| parse_label_value(v).map_err(err))
            .transpose()?;
        let id = record.id.clone().unwrap_or_else(|| format!("{split}:{line_no}"));
        let mut tagged = TaggedExample::new(build_example(path, line_no, id, &record, gold)?);

        match (&record.relation, &record.relation_source) {
            (Some(tag), Some(source)) => {
                let tag: RelationTag = tag.parse().map_err(|e: Error| err(e.to_string()))?;
                let source: RelationSource = source.parse().map_err(err)?;
                tagged = tagged.with_relation(tag, source);
            }
            (None, None) => {}
            _ => return Err(err("relation and relation_source must appear together".into())),
        }
        match (&record.category, &record.category_source) {
            (Some(cat), Some(source)) => {
                let cat: KnowledgeCategory = cat.parse().map_err(|e: Error| err(e.to_string()))?;
                let source: CategorySource = source.parse().map_err(err)?;
                tagged = tagged.with_category(cat, source);
            }
            (None, None) => {}
            _ => return Err(err("category and category_source must appear together".into())),
        }
        if !seen.insert(tagged.id().to_string()) {
            return Err(Error::DuplicateId(tagged.id().to_string()));
        }
        out.push(tagged);
    }
    Ok(out)
}

fn to_record(ex: &TaggedExample) -> Record {
    let e = &ex.example;
    Record {
        id: Some(e.id().to_string()),
        context: e.context().to_string(),
        question: e.question().to_string(),
        answer_a: e.answer(0).to_string(),
        answer_b: e.answer(1).to_string(),
        answer_c: e.answer(2).to_string(),
        label: e.gold_index().map(|g| Value::String((g + 1).to_string())),
        relation: ex.relation.map(|r| r.value.to_string()),
        relation_source: ex.relation.map(|r| r.source.to_string()),
        category: ex.category.map(|c| c.value.to_string()),
        category_source: ex.category.map(|c| c.source.to_string()),
    }
}

fn build_example(
    path: &Path,
    line_no: usize,
    id: String,
    record: &Record,
    gold: Option<usize>,
) -> Result<QAExample> {
    QAExample::new(
        id,
        &record.context,
        &record.question,
        [&record.answer_a, &record.answer_b, &record.answer_c],
        gold,
    )
    .map_err(|e| match e {
        Error::InvalidExample { message, .. } => record_err(path, line_no, message),
        other => other,
    })
}

/// Non-empty lines with their 1-based line numbers. Trailing blank lines are
/// ignored; a blank line between records is an error so that nothing is
/// dropped silently.
fn content_lines<'a>(path: &Path, text: &'a str) -> Result<Vec<(usize, &'a str)>> {
    let all: Vec<&str> = text.lines().collect();
    let end = all
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .map_or(0, |i| i + 1);
    all[..end]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let l = l.trim();
            if l.is_empty() {
                Err(record_err(path, i + 1, "blank line".into()))
            } else {
                Ok((i + 1, l))
            }
        })
        .collect()
}

fn parse_label(s: &str) -> std::result::Result<usize, String> {
    match s.trim() {
        "1" => Ok(0),
        "2" => Ok(1),
        "3" => Ok(2),
        other => Err(format!("label {other:?} is not one of 1, 2, 3")),
    }
}

fn parse_label_value(v: &Value) -> std::result::Result<usize, String> {
    match v {
        Value::String(s) => parse_label(s),
        Value::Number(n) => parse_label(&n.to_string()),
        other => Err(format!("label {other} is not one of 1, 2, 3")),
    }
}

fn record_err(path: &Path, line: usize, message: String) -> Error {
    Error::Record {
        path: path.to_path_buf(),
        line,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn line(ctx: &str, q: &str) -> String {
        format!(r#"{{"context": "{ctx}", "question": "{q}", "answerA": "a", "answerB": "b", "answerC": "c"}}"#)
    }

    #[test]
    fn split_names() {
        assert_eq!(split_name_from_path(Path::new("x/socialIQa_v1.4_trn.jsonl")), "train");
        assert_eq!(split_name_from_path(Path::new("dev.jsonl")), "dev");
        assert_eq!(split_name_from_path(Path::new("socialIQa_v1.4_tst.jsonl")), "test");
        assert_eq!(split_name_from_path(Path::new("toy.jsonl")), "toy");
    }

    #[test]
    fn sidecar_labels_and_synthesized_ids() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("dev.jsonl");
        let labels = dir.path().join("dev-labels.lst");
        fs::write(&data, format!("{}\n{}\n", line(" C1 ", "Q1"), line("C2", "Q2"))).unwrap();
        fs::write(&labels, "3\n1\n").unwrap();
        let ex = load_socialiqa(&data, Some(&labels)).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].id(), "dev:1");
        assert_eq!(ex[0].context(), "C1");
        assert_eq!(ex[0].gold_index(), Some(2));
        assert_eq!(ex[1].id(), "dev:2");
        assert_eq!(ex[1].gold_index(), Some(0));
    }

    #[test]
    fn label_errors() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("dev.jsonl");
        let labels = dir.path().join("labels.lst");
        fs::write(&data, format!("{}\n{}\n", line("C1", "Q1"), line("C2", "Q2"))).unwrap();

        fs::write(&labels, "1\n").unwrap();
        let err = load_socialiqa(&data, Some(&labels)).unwrap_err();
        assert!(matches!(err, Error::LabelCountMismatch { records: 2, labels: 1 }), "{err}");

        fs::write(&labels, "1\n4\n").unwrap();
        let err = load_socialiqa(&data, Some(&labels)).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("\"4\""), "{err}");
    }

    #[test]
    fn malformed_records_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("train.jsonl");
        fs::write(
            &data,
            format!("{}\n{{\"context\": \"C\", \"question\": \"Q\", \"answerA\": \"a\", \"answerB\": \"b\"}}\n", line("C", "Q")),
        )
        .unwrap();
        let err = load_socialiqa(&data, None).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("answerC"), "{err}");

        fs::write(&data, format!("{}\n{}\n", line("C", "Q"), line("C", "  "))).unwrap();
        let err = load_socialiqa(&data, None).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("question is empty"), "{err}");

        fs::write(&data, format!("{}\n\n{}\n", line("C", "Q"), line("C", "Q"))).unwrap();
        assert!(load_socialiqa(&data, None).is_err());
    }

    #[test]
    fn empty_file_is_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("test.jsonl");
        fs::write(&data, "").unwrap();
        assert!(load_socialiqa(&data, None).unwrap().is_empty());
    }

    #[test]
    fn inline_labels_accept_strings_and_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("dev.jsonl");
        fs::write(
            &data,
            concat!(
                r#"{"context": "C", "question": "Q", "answerA": "a", "answerB": "b", "answerC": "c", "label": "2"}"#,
                "\n",
                r#"{"context": "C", "question": "Q", "answerA": "a", "answerB": "b", "answerC": "c", "label": 3}"#,
                "\n"
            ),
        )
        .unwrap();
        let ex = load_socialiqa(&data, None).unwrap();
        assert_eq!(ex[0].gold_index(), Some(1));
        assert_eq!(ex[1].gold_index(), Some(2));
    }

    #[test]
    fn tagged_round_trip_keeps_absent_fields_absent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tagged.jsonl");
        let a = QAExample::new("dev:1", "C", "Q", ["a", "b", "c"], Some(1)).unwrap();
        let b = QAExample::new("dev:2", "C2", "Q2", ["a", "b", "c"], None).unwrap();
        let items = vec![
            TaggedExample::new(a).with_relation(RelationTag::XNeed, RelationSource::Rule),
            TaggedExample::new(b)
                .with_category(KnowledgeCategory::Interaction, CategorySource::Human),
        ];
        save_tagged(&path, &items).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.lines().next().unwrap().contains("category"));
        assert!(!text.lines().nth(1).unwrap().contains("label"));
        assert_eq!(load_tagged(&path).unwrap(), items);
    }

    #[test]
    fn tagged_unknown_enum_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tagged.jsonl");
        fs::write(
            &path,
            r#"{"id": "x", "context": "C", "question": "Q", "answerA": "a", "answerB": "b", "answerC": "c", "relation": "xWish", "relation_source": "rule"}"#,
        )
        .unwrap();
        let err = load_tagged(&path).unwrap_err().to_string();
        assert!(err.contains(":1:") && err.contains("xWish"), "{err}");

        fs::write(
            &path,
            r#"{"id": "x", "context": "C", "question": "Q", "answerA": "a", "answerB": "b", "answerC": "c", "relation": "xNeed"}"#,
        )
        .unwrap();
        assert!(load_tagged(&path).is_err());
    }
}
