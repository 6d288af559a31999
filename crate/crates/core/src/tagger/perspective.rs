use serde::{Deserialize, Serialize};

use super::analyzer::{person_mention, SyntacticAnalysis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Agent,
    Other,
    Unknown,
}

/// Who a question asks about, and whether that person is the context's agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerspectiveResult {
    pub person: Option<String>,
    pub side: Side,
}

/// Words that are capitalized in questions without naming anyone.
const QUESTION_WORDS: &[&str] = &[
    "what", "will", "would", "does", "did", "do", "how", "why", "who", "whom", "which", "when",
    "where", "need", "needs", "to", "before", "after", "this", "that", "want", "wants", "next",
    "happen", "happens", "describe", "feel", "feels", "afterwards", "as", "a", "result", "of",
    "think", "see", "be", "is", "was", "the", "you", "your", "they", "them", "their", "he",
    "she", "his", "her", "him", "it", "i", "others", "other", "people", "likely", "most",
    "best", "can", "could", "should", "may", "might", "are", "were", "has", "have", "had",
    "and", "or", "so", "for", "at", "in", "on", "with", "about", "by", "from", "like",
];

const OTHERS: &[&str] = &["others", "everyone", "everybody"];

/// Resolves the person a question is about.
///
/// Question tokens are compared case-insensitively against the analysis
/// mentions first, so the result does not depend on the question's casing:
/// a subject match gives [`Side::Agent`], any other mention
/// [`Side::Other`]. Without a match, "others" in the question means
/// [`Side::Other`], a remaining capitalized name is reported with
/// [`Side::Unknown`], and "you" stands for the first context subject.
pub fn resolve_perspective(question: &str, analysis: &SyntacticAnalysis) -> PerspectiveResult {
    let tokens: Vec<&str> = question
        .split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}' || c == '-'))
        .map(|t| t.trim_matches(|c| c == '\'' || c == '\u{2019}' || c == '-'))
        .filter(|t| !t.is_empty())
        .collect();
    let folded: Vec<String> = tokens.iter().map(|t| fold_possessive(t)).collect();

    for mention in &folded {
        if analysis.is_subject(mention) {
            return PerspectiveResult {
                person: Some(mention.clone()),
                side: Side::Agent,
            };
        }
        if analysis.is_object(mention) {
            return PerspectiveResult {
                person: Some(mention.clone()),
                side: Side::Other,
            };
        }
    }

    if let Some(w) = folded.iter().find(|w| OTHERS.contains(&w.as_str())) {
        return PerspectiveResult {
            person: Some(w.clone()),
            side: Side::Other,
        };
    }

    let capitalized = tokens
        .iter()
        .skip(1)
        .filter_map(|t| person_mention(t))
        .find(|m| !QUESTION_WORDS.contains(&m.as_str()));
    if let Some(person) = capitalized {
        return PerspectiveResult {
            person: Some(person),
            side: Side::Unknown,
        };
    }

    if folded.iter().any(|w| w == "you") {
        if let Some(subject) = analysis.sentence_subjects.first() {
            return PerspectiveResult {
                person: Some(subject.clone()),
                side: Side::Agent,
            };
        }
    }

    PerspectiveResult {
        person: None,
        side: Side::Unknown,
    }
}

fn fold_possessive(token: &str) -> String {
    let lower = token.to_lowercase().replace('\u{2019}', "'");
    lower
        .strip_suffix("'s")
        .map(str::to_string)
        .unwrap_or(lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analysis(subjects: &[&str], objects: &[&str]) -> SyntacticAnalysis {
        SyntacticAnalysis {
            sentence_subjects: subjects.iter().map(|s| s.to_string()).collect(),
            sentence_objects: objects.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn subject_is_agent() {
        let r = resolve_perspective("What does Taylor need to do before this?", &analysis(&["taylor"], &[]));
        assert_eq!(r, PerspectiveResult { person: Some("taylor".into()), side: Side::Agent });
    }

    #[test]
    fn object_is_other() {
        let r = resolve_perspective("What will happen to Austin?", &analysis(&["riley"], &["austin"]));
        assert_eq!(r, PerspectiveResult { person: Some("austin".into()), side: Side::Other });
        let r = resolve_perspective("How would Austin's landlord feel?", &analysis(&["riley"], &["austin"]));
        assert_eq!(r.side, Side::Other);
    }

    #[test]
    fn no_person() {
        let r = resolve_perspective("What will happen next?", &analysis(&["riley"], &["austin"]));
        assert_eq!(r, PerspectiveResult { person: None, side: Side::Unknown });
    }

    #[test]
    fn others_and_you() {
        let a = analysis(&["riley"], &[]);
        assert_eq!(resolve_perspective("How would Others feel as a result?", &a).side, Side::Other);
        assert_eq!(resolve_perspective("how would others feel as a result?", &a).side, Side::Other);
        let r = resolve_perspective("How would you describe this?", &a);
        assert_eq!(r, PerspectiveResult { person: Some("riley".into()), side: Side::Agent });
        // the named person wins over "you"
        let r = resolve_perspective("How would you describe Kendall?", &analysis(&["kendall"], &[]));
        assert_eq!(r.person.as_deref(), Some("kendall"));
    }

    #[test]
    fn unseen_name_is_unknown() {
        let r = resolve_perspective("What will Jesse want to do next?", &analysis(&["riley"], &[]));
        assert_eq!(r, PerspectiveResult { person: Some("jesse".into()), side: Side::Unknown });
    }

    #[test]
    fn casing_does_not_change_the_side() {
        let a = analysis(&["riley"], &["austin"]);
        for q in ["What will happen to Austin?", "What will Riley want to do next?", "How would others feel?"] {
            assert_eq!(
                resolve_perspective(q, &a).side,
                resolve_perspective(&q.to_uppercase(), &a).side,
                "{q}"
            );
        }
    }
}
