//! Rule-based mapping from SocialIQA questions to ATOMIC relation tags.
//!
//! A question is tagged in two steps. The keyword table picks the relation
//! family (`need to do before` → Need, `describe` → Attr, ...), then the
//! person the question asks about is located in the context: the agent of a
//! main clause yields the `x` form, any other participant the `o` form.
//! Intent, Need and Attr have no `o` form in ATOMIC and always come out as
//! `x` relations. Questions that match no keyword are tagged `Other`.
//!
//! The keyword lexicon is a reconstruction anchored to the ATOMIC relation
//! glosses; it can be replaced with [`RuleTable::parse`].

mod analyzer;
mod perspective;
mod rules;

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::{ClosedSet, QAExample, RelationSource, RelationTag, TaggedExample};
use crate::error::{Error, Result};

pub use analyzer::{ContextAnalyzer, HeuristicAnalyzer, PrecomputedAnalyzer, SyntacticAnalysis};
pub use perspective::{resolve_perspective, PerspectiveResult, Side};
pub use rules::{BaseRelation, KeywordRule, RuleMatch, RuleTable, DEFAULT_RULES};

/// Keyword lookup with the built-in rule table.
pub fn match_base_relation(question: &str) -> Option<BaseRelation> {
    default_rules().match_question(question).map(|m| m.base_relation)
}

/// Tags one example with the built-in rule table.
pub fn tag_relation(example: &QAExample, analysis: &SyntacticAnalysis) -> RelationTag {
    tag_with_rules(default_rules(), example.question(), analysis)
}

fn default_rules() -> &'static RuleTable {
    static TABLE: std::sync::OnceLock<RuleTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(RuleTable::default)
}

fn tag_with_rules(rules: &RuleTable, question: &str, analysis: &SyntacticAnalysis) -> RelationTag {
    let Some(m) = rules.match_question(question) else {
        return RelationTag::Other;
    };
    let other_side = m.base_relation.has_other_form()
        && resolve_perspective(question, analysis).side == Side::Other;
    combine(m.base_relation, other_side)
}

fn combine(base: BaseRelation, other_side: bool) -> RelationTag {
    match (base, other_side) {
        (BaseRelation::Intent, _) => RelationTag::XIntent,
        (BaseRelation::Need, _) => RelationTag::XNeed,
        (BaseRelation::Attr, _) => RelationTag::XAttr,
        (BaseRelation::React, false) => RelationTag::XReact,
        (BaseRelation::React, true) => RelationTag::OReact,
        (BaseRelation::Want, false) => RelationTag::XWant,
        (BaseRelation::Want, true) => RelationTag::OWant,
        (BaseRelation::Effect, false) => RelationTag::XEffect,
        (BaseRelation::Effect, true) => RelationTag::OEffect,
    }
}

/// Counts per relation tag; every tag is present, possibly with zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagHistogram {
    counts: BTreeMap<RelationTag, usize>,
}

impl Default for TagHistogram {
    fn default() -> Self {
        TagHistogram {
            counts: RelationTag::ALL.iter().map(|t| (*t, 0)).collect(),
        }
    }
}

impl TagHistogram {
    pub fn add(&mut self, tag: RelationTag) {
        *self.counts.entry(tag).or_default() += 1;
    }

    pub fn get(&self, tag: RelationTag) -> usize {
        self.counts.get(&tag).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RelationTag, usize)> + '_ {
        self.counts.iter().map(|(t, c)| (*t, *c))
    }
}

impl fmt::Display for TagHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = self.total().max(1) as f64;
        for (tag, count) in self.iter() {
            writeln!(f, "{:<8} {:>7} {:>6.2}%", tag, count, 100.0 * count as f64 / total)?;
        }
        write!(f, "{:<8} {:>7}", "total", self.total())
    }
}

/// A rule table paired with a context analyzer.
pub struct RelationTagger<A = HeuristicAnalyzer> {
    rules: RuleTable,
    analyzer: A,
}

impl Default for RelationTagger<HeuristicAnalyzer> {
    fn default() -> Self {
        RelationTagger::new(RuleTable::default(), HeuristicAnalyzer)
    }
}

impl<A: ContextAnalyzer> RelationTagger<A> {
    pub fn new(rules: RuleTable, analyzer: A) -> Self {
        RelationTagger { rules, analyzer }
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn analyzer(&self) -> &A {
        &self.analyzer
    }

    pub fn tag(&self, example: &QAExample, analysis: &SyntacticAnalysis) -> RelationTag {
        tag_with_rules(&self.rules, example.question(), analysis)
    }

    pub fn tag_example(&self, example: &QAExample) -> Result<RelationTag> {
        let analysis = self.analyzer.analyze(example.context()).map_err(|e| Error::Analysis {
            id: example.id().to_string(),
            message: e.to_string(),
        })?;
        Ok(self.tag(example, &analysis))
    }

    /// Tags every example (source `rule`), keeping input order.
    pub fn tag_dataset(&self, examples: &[QAExample]) -> Result<(Vec<TaggedExample>, TagHistogram)> {
        let mut histogram = TagHistogram::default();
        let mut out = Vec::with_capacity(examples.len());
        for ex in examples {
            let tag = self.tag_example(ex)?;
            histogram.add(tag);
            out.push(TaggedExample::new(ex.clone()).with_relation(tag, RelationSource::Rule));
        }
        Ok((out, histogram))
    }

    /// Like [`RelationTagger::tag_dataset`] but keeps any category already
    /// attached to the inputs.
    pub fn retag(&self, examples: &[TaggedExample]) -> Result<(Vec<TaggedExample>, TagHistogram)> {
        let mut histogram = TagHistogram::default();
        let mut out = Vec::with_capacity(examples.len());
        for ex in examples {
            let tag = self.tag_example(&ex.example)?;
            histogram.add(tag);
            out.push(ex.clone().with_relation(tag, RelationSource::Rule));
        }
        Ok((out, histogram))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(context: &str, question: &str) -> QAExample {
        QAExample::new("t:1", context, question, ["a", "b", "c"], Some(0)).unwrap()
    }

    fn tag(context: &str, question: &str) -> RelationTag {
        RelationTagger::default().tag_example(&ex(context, question)).unwrap()
    }

    #[test]
    fn perspective_selects_o_forms() {
        let ctx = "Riley told Austin's landlord that Austin was making a lot of noise at late hours.";
        assert_eq!(tag(ctx, "What will happen to Austin?"), RelationTag::OEffect);
        assert_eq!(tag(ctx, "What will happen to Riley?"), RelationTag::XEffect);
        assert_eq!(tag(ctx, "How would Austin feel as a result?"), RelationTag::OReact);
        assert_eq!(tag(ctx, "What will Austin want to do next?"), RelationTag::OWant);
        assert_eq!(tag(ctx, "How would others feel as a result?"), RelationTag::OReact);
        assert_eq!(tag(ctx, "What does Riley need to do before this?"), RelationTag::XNeed);
    }

    #[test]
    fn intent_need_attr_ignore_side() {
        let ctx = "Riley told Austin's landlord that Austin was making a lot of noise at late hours.";
        assert_eq!(tag(ctx, "What does Austin need to do before this?"), RelationTag::XNeed);
        assert_eq!(tag(ctx, "How would you describe Austin?"), RelationTag::XAttr);
        assert_eq!(tag(ctx, "Why did Austin do this?"), RelationTag::XIntent);
    }

    #[test]
    fn unmatched_is_other() {
        assert_eq!(tag("Riley went home.", "Is water wet?"), RelationTag::Other);
    }

    #[test]
    fn dataset_histogram() {
        let tagger = RelationTagger::default();
        let (out, hist) = tagger.tag_dataset(&[]).unwrap();
        assert!(out.is_empty());
        assert_eq!(hist.total(), 0);
        assert_eq!(hist.iter().count(), 10);

        let e = ex("Taylor taught math.", "What does Taylor need to do before this?");
        let (out, hist) = tagger.tag_dataset(&[e.clone(), e]).unwrap();
        assert_eq!(out[0].relation, out[1].relation);
        assert_eq!(hist.get(RelationTag::XNeed), 2);
        assert_eq!(out[0].relation.unwrap().source, RelationSource::Rule);
    }

    #[test]
    fn analyzer_failure_names_example() {
        let tagger = RelationTagger::new(RuleTable::default(), PrecomputedAnalyzer::default());
        let err = tagger.tag_example(&ex("Unparsed.", "Why?")).unwrap_err().to_string();
        assert!(err.contains("t:1"), "{err}");
    }
}
