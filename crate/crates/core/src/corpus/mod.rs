//! SocialIQA examples, the two label vocabularies layered on top of them, and
//! the line-delimited formats used to move them between pipeline stages.
//!
//! The social-knowledge taxonomy has four classes:
//!
//! * **Feelings and characteristics**: feelings and emotions caused by an
//!   event, events triggered by feelings, and the personal characteristics an
//!   event reveals.
//! * **Interaction**: events, habits and obligations arising between two or
//!   more people, or between individuals and groups.
//! * **Daily events**: relationships between everyday events, habits and life
//!   experiences, where the focus is the event itself even when several people
//!   take part.
//! * **Knowledge, norms and rules**: situations that hinge on written social or
//!   scientific knowledge such as law, careers, identity or medical care.

mod annotations;
mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use annotations::{
    compute_agreement, join_annotations, load_category_annotations, CategoryAnnotation,
};
pub use io::{
    load_socialiqa, load_socialiqa_split, load_tagged, locate_annotations, locate_split,
    save_tagged, split_name_from_path, write_tagged, SplitFiles,
};

/// A value drawn from a small closed vocabulary.
pub trait ClosedSet: Copy + Ord + fmt::Debug + 'static {
    const ALL: &'static [Self];

    fn name(self) -> &'static str;

    fn index(self) -> usize {
        Self::ALL
            .iter()
            .position(|v| *v == self)
            .expect("value is a member of its own closed set")
    }

    /// The bracketed special token that represents this value in model inputs.
    fn token(self) -> String {
        format!("[{}]", self.name())
    }

    fn legal_names() -> String {
        Self::ALL
            .iter()
            .map(|v| v.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// ATOMIC if-then relation types. `x` relations describe the event's agent,
/// `o` relations other participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationTag {
    #[serde(rename = "xIntent")]
    XIntent,
    #[serde(rename = "xNeed")]
    XNeed,
    #[serde(rename = "xAttr")]
    XAttr,
    #[serde(rename = "xReact")]
    XReact,
    #[serde(rename = "xWant")]
    XWant,
    #[serde(rename = "xEffect")]
    XEffect,
    #[serde(rename = "oReact")]
    OReact,
    #[serde(rename = "oWant")]
    OWant,
    #[serde(rename = "oEffect")]
    OEffect,
    Other,
}

impl ClosedSet for RelationTag {
    const ALL: &'static [Self] = &[
        RelationTag::XIntent,
        RelationTag::XNeed,
        RelationTag::XAttr,
        RelationTag::XReact,
        RelationTag::XWant,
        RelationTag::XEffect,
        RelationTag::OReact,
        RelationTag::OWant,
        RelationTag::OEffect,
        RelationTag::Other,
    ];

    fn name(self) -> &'static str {
        match self {
            RelationTag::XIntent => "xIntent",
            RelationTag::XNeed => "xNeed",
            RelationTag::XAttr => "xAttr",
            RelationTag::XReact => "xReact",
            RelationTag::XWant => "xWant",
            RelationTag::XEffect => "xEffect",
            RelationTag::OReact => "oReact",
            RelationTag::OWant => "oWant",
            RelationTag::OEffect => "oEffect",
            RelationTag::Other => "Other",
        }
    }
}

impl RelationTag {
    pub fn is_other_perspective(self) -> bool {
        matches!(
            self,
            RelationTag::OReact | RelationTag::OWant | RelationTag::OEffect
        )
    }
}

impl fmt::Display for RelationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for RelationTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .unwrap_or(s);
        RelationTag::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownRelation {
                found: s.to_string(),
                expected: RelationTag::legal_names(),
            })
    }
}

/// The four social-knowledge categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KnowledgeCategory {
    FeelingsAndCharacteristics,
    Interaction,
    DailyEvents,
    KnowledgeNormRules,
}

impl ClosedSet for KnowledgeCategory {
    const ALL: &'static [Self] = &[
        KnowledgeCategory::FeelingsAndCharacteristics,
        KnowledgeCategory::Interaction,
        KnowledgeCategory::DailyEvents,
        KnowledgeCategory::KnowledgeNormRules,
    ];

    fn name(self) -> &'static str {
        match self {
            KnowledgeCategory::FeelingsAndCharacteristics => "FeelingsAndCharacteristics",
            KnowledgeCategory::Interaction => "Interaction",
            KnowledgeCategory::DailyEvents => "DailyEvents",
            KnowledgeCategory::KnowledgeNormRules => "KnowledgeNormRules",
        }
    }
}

impl KnowledgeCategory {
    pub fn display_name(self) -> &'static str {
        match self {
            KnowledgeCategory::FeelingsAndCharacteristics => "Feelings and Characteristics",
            KnowledgeCategory::Interaction => "Interaction",
            KnowledgeCategory::DailyEvents => "Daily Events",
            KnowledgeCategory::KnowledgeNormRules => "Knowledge, Norm, and Rules",
        }
    }
}

impl fmt::Display for KnowledgeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for KnowledgeCategory {
    type Err = Error;

    /// Accepts the canonical names and the human-readable forms ("Daily
    /// Events", "Knowledge, Norm and Rules", ...), ignoring case, spaces and
    /// punctuation.
    fn from_str(s: &str) -> Result<Self> {
        fn fold(s: &str) -> String {
            s.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect()
        }
        let key = fold(s);
        let aliases: [(&str, KnowledgeCategory); 3] = [
            ("feelingandcharacteristic", KnowledgeCategory::FeelingsAndCharacteristics),
            ("dailyevent", KnowledgeCategory::DailyEvents),
            ("knowledgenormsandrules", KnowledgeCategory::KnowledgeNormRules),
        ];
        KnowledgeCategory::ALL
            .iter()
            .flat_map(|c| [(fold(c.name()), *c), (fold(c.display_name()), *c)])
            .chain(aliases.iter().map(|(a, c)| (a.to_string(), *c)))
            .find(|(name, _)| *name == key)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::UnknownCategory {
                found: s.trim().to_string(),
                expected: KnowledgeCategory::legal_names(),
            })
    }
}

/// Where a relation tag came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationSource {
    Rule,
    Random,
}

/// Where a category label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategorySource {
    Human,
    Predicted,
    Random,
}

macro_rules! simple_names {
    ($ty:ty, $what:literal, { $($variant:path => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim() {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown {} {:?}", $what, other)),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.name())
            }
        }
    };
}

simple_names!(RelationSource, "relation source", {
    RelationSource::Rule => "rule",
    RelationSource::Random => "random",
});

simple_names!(CategorySource, "category source", {
    CategorySource::Human => "human",
    CategorySource::Predicted => "predicted",
    CategorySource::Random => "random",
});

/// One SocialIQA item. Construction validates the field invariants, so every
/// value of this type has non-empty texts and a gold index in `0..3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAExample {
    id: String,
    context: String,
    question: String,
    answers: [String; 3],
    gold_index: Option<usize>,
}

impl QAExample {
    pub fn new(
        id: impl Into<String>,
        context: impl AsRef<str>,
        question: impl AsRef<str>,
        answers: [&str; 3],
        gold_index: Option<usize>,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |message: String| Error::InvalidExample {
            id: id.clone(),
            message,
        };
        let context = context.as_ref().trim().to_string();
        let question = question.as_ref().trim().to_string();
        if id.is_empty() {
            return Err(invalid("id is empty".into()));
        }
        if context.is_empty() {
            return Err(invalid("context is empty".into()));
        }
        if question.is_empty() {
            return Err(invalid("question is empty".into()));
        }
        let answers = answers.map(|a| a.trim().to_string());
        if let Some(i) = answers.iter().position(String::is_empty) {
            return Err(invalid(format!("answer {} is empty", ["A", "B", "C"][i])));
        }
        if let Some(g) = gold_index {
            if g > 2 {
                return Err(invalid(format!("gold index {g} is outside 0..=2")));
            }
        }
        Ok(QAExample {
            id,
            context,
            question,
            answers,
            gold_index,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn context(&self) -> &str {
        &self.context
    }

    pub fn question(&self) -> &str {
        &self.question
    }

    pub fn answers(&self) -> &[String; 3] {
        &self.answers
    }

    pub fn answer(&self, index: usize) -> &str {
        &self.answers[index]
    }

    pub fn gold_index(&self) -> Option<usize> {
        self.gold_index
    }

    /// Same example with the answers reordered so that new position `i`
    /// holds old answer `order[i]`.
    pub fn permuted(&self, order: [usize; 3]) -> QAExample {
        let mut out = self.clone();
        out.answers = order.map(|i| self.answers[i].clone());
        out.gold_index = self
            .gold_index
            .map(|g| order.iter().position(|&i| i == g).expect("order is a permutation"));
        out
    }
}

/// A label together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sourced<T, S> {
    pub value: T,
    pub source: S,
}

/// A QA example enriched with a relation tag and/or category label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedExample {
    pub example: QAExample,
    pub relation: Option<Sourced<RelationTag, RelationSource>>,
    pub category: Option<Sourced<KnowledgeCategory, CategorySource>>,
}

impl TaggedExample {
    pub fn new(example: QAExample) -> Self {
        TaggedExample {
            example,
            relation: None,
            category: None,
        }
    }

    pub fn with_relation(mut self, value: RelationTag, source: RelationSource) -> Self {
        self.relation = Some(Sourced { value, source });
        self
    }

    pub fn with_category(mut self, value: KnowledgeCategory, source: CategorySource) -> Self {
        self.category = Some(Sourced { value, source });
        self
    }

    pub fn id(&self) -> &str {
        self.example.id()
    }

    pub fn relation_tag(&self) -> Option<RelationTag> {
        self.relation.map(|r| r.value)
    }

    pub fn category_label(&self) -> Option<KnowledgeCategory> {
        self.category.map(|c| c.value)
    }
}
