use std::collections::HashMap;

use proptest::collection::vec;
use proptest::prelude::*;

use socialkc::analysis::{
    compare_runs, error_rate_by_group, paired_significance, randomize_tags, Grouping, TagKind,
};
use socialkc::corpus::{compute_agreement, load_tagged, save_tagged, CategoryAnnotation};
use socialkc::qa::{AugmentationMode, QAEvalResult};
use socialkc::tagger::{match_base_relation, BaseRelation, RelationTagger};
use socialkc::{
    CategorySource, ClosedSet, KnowledgeCategory, QAExample, RelationSource, RelationTag, TaggedExample,
};

const RELATION_SOURCES: [RelationSource; 2] = [RelationSource::Rule, RelationSource::Random];
const CATEGORY_SOURCES: [CategorySource; 3] =
    [CategorySource::Human, CategorySource::Predicted, CategorySource::Random];

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z][A-Za-z ,.'!?]{0,40}",
        "\\PC{1,30}",
        "[a-z]{1,8}\"[a-z \\\\]{0,8}\n[a-z]{1,5}",
    ]
    .prop_filter("nonblank", |s| !s.trim().is_empty())
}

fn relation() -> impl Strategy<Value = Option<(RelationTag, RelationSource)>> {
    proptest::option::of((0..RelationTag::ALL.len(), 0..RELATION_SOURCES.len()))
        .prop_map(|o| o.map(|(t, s)| (RelationTag::ALL[t], RELATION_SOURCES[s])))
}

fn category() -> impl Strategy<Value = Option<(KnowledgeCategory, CategorySource)>> {
    proptest::option::of((0..KnowledgeCategory::ALL.len(), 0..CATEGORY_SOURCES.len()))
        .prop_map(|o| o.map(|(t, s)| (KnowledgeCategory::ALL[t], CATEGORY_SOURCES[s])))
}

fn tagged_example(i: usize) -> impl Strategy<Value = TaggedExample> {
    (
        text(),
        text(),
        [text(), text(), text()],
        proptest::option::of(0..3usize),
        relation(),
        category(),
    )
        .prop_map(move |(c, q, [a, b, d], gold, rel, cat)| {
            let mut t = TaggedExample::new(
                QAExample::new(format!("train:{i}"), c, q, [&a, &b, &d], gold).unwrap(),
            );
            if let Some((tag, src)) = rel {
                t = t.with_relation(tag, src);
            }
            if let Some((c, src)) = cat {
                t = t.with_category(c, src);
            }
            t
        })
}

fn dataset() -> impl Strategy<Value = Vec<TaggedExample>> {
    (0..12usize).prop_flat_map(|n| (0..n).map(tagged_example).collect::<Vec<_>>())
}

const NAMES: [&str; 6] = ["Taylor", "Riley", "Jordan", "Kai", "Sasha", "Remy"];
const QUESTION_PARTS: [&str; 14] = [
    "why did", "need to do before this", "describe", "think of", "feel", "want to do next",
    "happen to", "others", "as a result", "what", "how would", "next", "afterwards", "before",
];

fn question() -> impl Strategy<Value = (String, String, String)> {
    (0..NAMES.len(), 0..NAMES.len(), vec(0..QUESTION_PARTS.len(), 1..5), any::<bool>()).prop_map(
        |(a, b, parts, mention_b)| {
            let who = if mention_b { NAMES[b] } else { NAMES[a] };
            let words: Vec<&str> = parts.iter().map(|&p| QUESTION_PARTS[p]).collect();
            let context = format!("{} helped {} with the move.", NAMES[a], NAMES[b]);
            let q = format!("{} {who}?", words.join(" "));
            (context, q, who.to_string())
        },
    )
}

fn result(label: &str, mode: AugmentationMode, correct: &[bool]) -> QAEvalResult {
    QAEvalResult::new(
        label,
        "dev",
        mode,
        (0..correct.len()).map(|i| format!("dev:{i}")).collect(),
        vec![0; correct.len()],
        correct.to_vec(),
        None,
    )
    .unwrap()
}

fn paired_bools() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (2..80usize).prop_flat_map(|n| (vec(any::<bool>(), n), vec(any::<bool>(), n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tagged_files_round_trip(data in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tagged.jsonl");
        save_tagged(&path, &data).unwrap();
        prop_assert_eq!(load_tagged(&path).unwrap(), data);
    }

    #[test]
    fn tagger_is_total_and_deterministic((context, q, _) in question()) {
        let ex = QAExample::new("dev:0", &context, &q, ["a", "b", "c"], None).unwrap();
        let tagger = RelationTagger::default();
        let first = tagger.tag_example(&ex).unwrap();
        prop_assert!(RelationTag::ALL.contains(&first));
        prop_assert_eq!(tagger.tag_example(&ex).unwrap(), first);
        prop_assert_eq!(RelationTagger::default().tag_example(&ex).unwrap(), first);
    }

    #[test]
    fn tagger_ignores_question_case((context, q, _) in question()) {
        let tagger = RelationTagger::default();
        let lower = QAExample::new("dev:0", &context, &q, ["a", "b", "c"], None).unwrap();
        let upper = QAExample::new("dev:0", &context, q.to_uppercase(), ["a", "b", "c"], None).unwrap();
        prop_assert_eq!(tagger.tag_example(&lower).unwrap(), tagger.tag_example(&upper).unwrap());
    }

    #[test]
    fn other_perspective_only_for_react_want_effect((context, q, _) in question()) {
        let ex = QAExample::new("dev:0", &context, &q, ["a", "b", "c"], None).unwrap();
        let tag = RelationTagger::default().tag_example(&ex).unwrap();
        if tag.is_other_perspective() {
            let base = match_base_relation(&q);
            prop_assert!(
                matches!(base, Some(BaseRelation::React | BaseRelation::Want | BaseRelation::Effect)),
                "{} from base {:?}", tag, base
            );
        }
    }

    #[test]
    fn agreement_is_symmetric(labels in vec((0..4usize, 0..4usize), 1..50)) {
        let side = |pick: fn(&(usize, usize)) -> usize, who: &str| -> Vec<CategoryAnnotation> {
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| CategoryAnnotation {
                    example_id: format!("dev:{i}"),
                    category: KnowledgeCategory::ALL[pick(l)],
                    annotator: Some(who.into()),
                })
                .collect()
        };
        let a = side(|l| l.0, "a");
        let mut b = side(|l| l.1, "b");
        b.reverse();
        let ab = compute_agreement(&a, &b).unwrap();
        prop_assert_eq!(ab, compute_agreement(&b, &a).unwrap());
        let same = labels.iter().filter(|(x, y)| x == y).count();
        prop_assert_eq!(ab, same as f64 / labels.len() as f64);
    }

    #[test]
    fn accuracy_is_mean_correctness(correct in vec(any::<bool>(), 1..200)) {
        let r = result("m", AugmentationMode::None, &correct);
        let hits = correct.iter().filter(|c| **c).count();
        prop_assert_eq!(r.accuracy, hits as f64 / correct.len() as f64);
    }

    #[test]
    fn group_errors_recombine(
        rows in vec((any::<bool>(), 0..RelationTag::ALL.len()), 1..200)
    ) {
        let correct: Vec<bool> = rows.iter().map(|r| r.0).collect();
        let groups: Vec<RelationTag> = rows.iter().map(|r| RelationTag::ALL[r.1]).collect();
        let r = result("m", AugmentationMode::None, &correct);
        let table = error_rate_by_group(&r, &groups).unwrap();
        let wrong = correct.iter().filter(|c| !**c).count();
        prop_assert_eq!(table.total_support(), correct.len());
        prop_assert_eq!(table.total_errors(), wrong);
        prop_assert!((table.weighted_error_rate() - (1.0 - r.accuracy)).abs() <= 1e-12);
    }

    #[test]
    fn significance_is_antisymmetric((a, b) in paired_bools()) {
        let ab = paired_significance(&a, &b).unwrap();
        let ba = paired_significance(&b, &a).unwrap();
        prop_assert_eq!(ab.statistic, -ba.statistic);
        prop_assert_eq!(ab.p_value, ba.p_value);
        let aa = paired_significance(&a, &a).unwrap();
        prop_assert!(aa.degenerate);
        prop_assert_eq!(aa.p_value, 1.0);
    }

    #[test]
    fn random_tags_ignore_original_tags(data in dataset(), seed in any::<u64>()) {
        let stripped: Vec<TaggedExample> =
            data.iter().map(|t| TaggedExample::new(t.example.clone())).collect();
        for kind in [TagKind::Relation, TagKind::Category] {
            let from_tagged = randomize_tags(&data, kind, seed);
            let from_bare = randomize_tags(&stripped, kind, seed);
            for (x, y) in from_tagged.iter().zip(&from_bare) {
                match kind {
                    TagKind::Relation => prop_assert_eq!(&x.relation, &y.relation),
                    TagKind::Category => prop_assert_eq!(&x.category, &y.category),
                }
            }
        }
    }

    #[test]
    fn comparison_ignores_run_order(
        (a, b) in paired_bools(),
        c in vec(any::<bool>(), 80),
        tags in vec(0..RelationTag::ALL.len(), 80),
    ) {
        let n = a.len();
        let runs = vec![
            result("none", AugmentationMode::None, &a),
            result("relation", AugmentationMode::Relation, &b),
            result("category", AugmentationMode::Category, &c[..n]),
        ];
        let grouping = Grouping {
            relations: Some(
                (0..n).map(|i| (format!("dev:{i}"), RelationTag::ALL[tags[i]])).collect::<HashMap<_, _>>(),
            ),
            categories: None,
        };
        let forward = compare_runs(&runs, &grouping).unwrap();
        let reversed: Vec<QAEvalResult> = runs.iter().rev().cloned().collect();
        prop_assert_eq!(compare_runs(&reversed, &grouping).unwrap(), forward);
    }
}
