use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use super::{KnowledgeCategory, QAExample};
use crate::error::{Error, Result};
use crate::fsutil;

/// A human category judgement for one example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryAnnotation {
    pub example_id: String,
    pub category: KnowledgeCategory,
    pub annotator: Option<String>,
}

#[derive(Deserialize)]
struct AnnotationRecord {
    #[serde(alias = "id")]
    example_id: String,
    category: String,
    #[serde(default)]
    annotator: Option<String>,
}

/// Reads one annotation object per line: `example_id` (or `id`), `category`
/// and an optional `annotator`. Other keys, such as a copy of the QA fields,
/// are ignored.
pub fn load_category_annotations(path: &Path) -> Result<Vec<CategoryAnnotation>> {
    let text = fsutil::read_to_string(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let record: AnnotationRecord = serde_json::from_str(line).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let category: KnowledgeCategory = record.category.parse()?;
        let example_id = record.example_id.trim().to_string();
        if !seen.insert(example_id.clone()) {
            return Err(Error::DuplicateId(example_id));
        }
        out.push(CategoryAnnotation {
            example_id,
            category,
            annotator: record.annotator.filter(|a| !a.trim().is_empty()),
        });
    }
    Ok(out)
}

/// Percent agreement: the fraction of ids on which both annotators chose the
/// same category. Both lists must cover the same ids.
pub fn compute_agreement(a: &[CategoryAnnotation], b: &[CategoryAnnotation]) -> Result<f64> {
    let index = |list: &[CategoryAnnotation]| -> Result<HashMap<String, KnowledgeCategory>> {
        let mut map = HashMap::with_capacity(list.len());
        for ann in list {
            if map.insert(ann.example_id.clone(), ann.category).is_some() {
                return Err(Error::DuplicateId(ann.example_id.clone()));
            }
        }
        Ok(map)
    };
    let left = index(a)?;
    let right = index(b)?;

    let only_first: BTreeSet<_> = left.keys().filter(|k| !right.contains_key(*k)).cloned().collect();
    let only_second: BTreeSet<_> = right.keys().filter(|k| !left.contains_key(*k)).cloned().collect();
    if !only_first.is_empty() || !only_second.is_empty() {
        return Err(Error::IdSetMismatch {
            only_first: only_first.into_iter().collect(),
            only_second: only_second.into_iter().collect(),
        });
    }
    if left.is_empty() {
        return Err(Error::Precondition("agreement needs at least one annotation".into()));
    }
    let matching = left.iter().filter(|(id, c)| right[*id] == **c).count();
    Ok(matching as f64 / left.len() as f64)
}

/// Pairs each annotation with its example, in annotation order.
pub fn join_annotations(
    examples: &[QAExample],
    annotations: &[CategoryAnnotation],
) -> Result<Vec<(QAExample, KnowledgeCategory)>> {
    let by_id: HashMap<&str, &QAExample> = examples.iter().map(|e| (e.id(), e)).collect();
    annotations
        .iter()
        .map(|a| {
            by_id
                .get(a.example_id.as_str())
                .map(|e| ((*e).clone(), a.category))
                .ok_or_else(|| Error::UnknownExampleId(a.example_id.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClosedSet;

    fn ann(id: usize, cat: KnowledgeCategory) -> CategoryAnnotation {
        CategoryAnnotation {
            example_id: format!("train:{id}"),
            category: cat,
            annotator: None,
        }
    }

    #[test]
    fn identical_lists_agree_fully() {
        let a: Vec<_> = (0..50)
            .map(|i| ann(i, KnowledgeCategory::ALL[i % 4]))
            .collect();
        assert_eq!(compute_agreement(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn forty_eight_of_fifty() {
        let a: Vec<_> = (0..50).map(|i| ann(i, KnowledgeCategory::ALL[i % 4])).collect();
        let mut b = a.clone();
        b[3].category = KnowledgeCategory::Interaction;
        b[17].category = KnowledgeCategory::DailyEvents;
        assert_ne!(a[3].category, b[3].category);
        assert_ne!(a[17].category, b[17].category);
        // 48 matches out of 50, counted directly
        let expected = 48.0 / 50.0;
        assert_eq!(compute_agreement(&a, &b).unwrap(), expected);
        assert_eq!(compute_agreement(&b, &a).unwrap(), expected);
        b.reverse();
        assert_eq!(compute_agreement(&a, &b).unwrap(), expected);
    }

    #[test]
    fn disjoint_ids_error() {
        let a = vec![ann(1, KnowledgeCategory::Interaction)];
        let b = vec![ann(2, KnowledgeCategory::Interaction)];
        match compute_agreement(&a, &b).unwrap_err() {
            Error::IdSetMismatch { only_first, only_second } => {
                assert_eq!(only_first, vec!["train:1"]);
                assert_eq!(only_second, vec!["train:2"]);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn loader_rejects_unknown_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ann.jsonl");
        std::fs::write(&p, "{\"id\": \"train:1\", \"category\": \"Emotion\"}\n").unwrap();
        let err = load_category_annotations(&p).unwrap_err().to_string();
        assert!(err.contains("Emotion") && err.contains("KnowledgeNormRules"), "{err}");

        std::fs::write(
            &p,
            "{\"id\": \"train:1\", \"category\": \"Interaction\"}\n{\"example_id\": \"train:1\", \"category\": \"Daily Events\"}\n",
        )
        .unwrap();
        assert!(matches!(load_category_annotations(&p).unwrap_err(), Error::DuplicateId(_)));

        std::fs::write(
            &p,
            "{\"id\": \"train:1\", \"category\": \"Interaction\", \"annotator\": \"A\"}\n{\"example_id\": \"train:2\", \"category\": \"Daily Events\"}\n",
        )
        .unwrap();
        let anns = load_category_annotations(&p).unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[0].annotator.as_deref(), Some("A"));
        assert_eq!(anns[1].category, KnowledgeCategory::DailyEvents);
    }

    #[test]
    fn join_requires_known_ids() {
        let ex = QAExample::new("train:1", "C", "Q", ["a", "b", "c"], Some(0)).unwrap();
        let good = vec![ann(1, KnowledgeCategory::Interaction)];
        assert_eq!(join_annotations(std::slice::from_ref(&ex), &good).unwrap().len(), 1);
        let bad = vec![ann(9, KnowledgeCategory::Interaction)];
        assert!(matches!(
            join_annotations(&[ex], &bad).unwrap_err(),
            Error::UnknownExampleId(_)
        ));
    }
}
