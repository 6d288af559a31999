use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relation family named by a question, before the agent/other perspective
/// is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseRelation {
    Intent,
    Need,
    Attr,
    React,
    Want,
    Effect,
}

impl BaseRelation {
    pub const ALL: [BaseRelation; 6] = [
        BaseRelation::Intent,
        BaseRelation::Need,
        BaseRelation::Attr,
        BaseRelation::React,
        BaseRelation::Want,
        BaseRelation::Effect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseRelation::Intent => "Intent",
            BaseRelation::Need => "Need",
            BaseRelation::Attr => "Attr",
            BaseRelation::React => "React",
            BaseRelation::Want => "Want",
            BaseRelation::Effect => "Effect",
        }
    }

    /// ATOMIC only defines `o`-relations for reactions, wants and effects.
    pub fn has_other_form(self) -> bool {
        matches!(self, BaseRelation::React | BaseRelation::Want | BaseRelation::Effect)
    }
}

impl fmt::Display for BaseRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for BaseRelation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        BaseRelation::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown base relation {s:?}"))
    }
}

/// A group of lowercase phrases that all indicate one base relation. A
/// phrase may contain `...` to allow any words in between ("see ... as").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordRule {
    patterns: Vec<String>,
    base_relation: BaseRelation,
    priority: u32,
}

impl KeywordRule {
    pub fn new(
        patterns: impl IntoIterator<Item = impl Into<String>>,
        base_relation: BaseRelation,
        priority: u32,
    ) -> Result<Self> {
        let patterns: Vec<String> = patterns
            .into_iter()
            .map(|p| normalize_words(&p.into()).join(" "))
            .collect();
        if patterns.is_empty() || patterns.iter().any(|p| p.is_empty() || p == "...") {
            return Err(Error::Config(format!(
                "rule with priority {priority} needs at least one nonempty pattern"
            )));
        }
        Ok(KeywordRule {
            patterns,
            base_relation,
            priority,
        })
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn base_relation(&self) -> BaseRelation {
        self.base_relation
    }

    pub fn priority(&self) -> u32 {
        self.priority
    }

    fn first_match(&self, words: &[String]) -> Option<&str> {
        self.patterns
            .iter()
            .find(|p| pattern_matches(p, words))
            .map(String::as_str)
    }
}

/// The rule that fired for a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleMatch<'a> {
    pub base_relation: BaseRelation,
    pub rule: &'a KeywordRule,
    pub pattern: &'a str,
}

/// Keyword rules ordered by priority; the lowest number that matches wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    rules: Vec<KeywordRule>,
}

/// Built-in lexicon. Multi-word phrases come before the single words they
/// contain so that, for example, "want" cannot capture a "need to do before"
/// question.
pub const DEFAULT_RULES: &str = "\
# priority  relation  phrase
10  Intent  why did
10  Intent  why does
20  Need    need to do before
20  Need    needs to do before
30  Want    want to do
30  Want    wants to do
40  Effect  happen to
40  Effect  happens to
50  Attr    think of
50  Attr    see ... as
60  Need    need
60  Need    needs
70  Want    want
70  Want    wants
80  Attr    describe
90  React   feel
90  React   feels
100 Effect  happen
100 Effect  happens
";

impl RuleTable {
    pub fn new(mut rules: Vec<KeywordRule>) -> Result<Self> {
        rules.sort_by_key(|r| r.priority);
        if let Some(w) = rules.windows(2).find(|w| w[0].priority == w[1].priority) {
            return Err(Error::Config(format!(
                "duplicate rule priority {}",
                w[0].priority
            )));
        }
        Ok(RuleTable { rules })
    }

    /// Parses `priority relation phrase...` lines. Blank lines and `#`
    /// comments are skipped; lines sharing a priority form one rule and must
    /// agree on the relation.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grouped: BTreeMap<u32, (BaseRelation, Vec<String>)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::RuleTable {
                line: line_no,
                message,
            };
            let mut parts = line.split_whitespace();
            let priority = parts
                .next()
                .unwrap_or("")
                .parse::<u32>()
                .map_err(|e| err(format!("bad priority: {e}")))?;
            let relation: BaseRelation = parts
                .next()
                .ok_or_else(|| err("missing relation".into()))?
                .parse()
                .map_err(err)?;
            let phrase = parts.collect::<Vec<_>>().join(" ");
            if phrase.is_empty() {
                return Err(err("missing phrase".into()));
            }
            let entry = grouped
                .entry(priority)
                .or_insert_with(|| (relation, Vec::new()));
            if entry.0 != relation {
                return Err(err(format!(
                    "priority {priority} already belongs to {}",
                    entry.0
                )));
            }
            entry.1.push(phrase.to_string());
        }
        let rules = grouped
            .into_iter()
            .map(|(priority, (relation, patterns))| KeywordRule::new(patterns, relation, priority))
            .collect::<Result<Vec<_>>>()?;
        RuleTable::new(rules)
    }

    pub fn rules(&self) -> &[KeywordRule] {
        &self.rules
    }

    /// Renders the table in the format accepted by [`RuleTable::parse`].
    pub fn to_config(&self) -> String {
        let mut out = String::from("# priority  relation  phrase\n");
        for rule in &self.rules {
            for p in &rule.patterns {
                out.push_str(&format!("{:<4}{:<8}{}\n", rule.priority, rule.base_relation, p));
            }
        }
        out
    }

    /// Case-insensitive phrase search over the question.
    pub fn match_question(&self, question: &str) -> Option<RuleMatch<'_>> {
        let words = normalize_words(question);
        self.rules.iter().find_map(|rule| {
            rule.first_match(&words).map(|pattern| RuleMatch {
                base_relation: rule.base_relation,
                rule,
                pattern,
            })
        })
    }
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::parse(DEFAULT_RULES).expect("built-in rule table is valid")
    }
}

/// Lowercases and splits on anything that is not a letter, digit, apostrophe
/// or the `...` gap marker.
pub(crate) fn normalize_words(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase().replace('\u{2019}', "'");
    let mut words = Vec::new();
    for (i, chunk) in lowered.split("...").enumerate() {
        if i > 0 {
            words.push("...".to_string());
        }
        words.extend(
            chunk
                .split(|c: char| !(c.is_alphanumeric() || c == '\''))
                .map(|w| w.trim_matches('\''))
                .filter(|w| !w.is_empty())
                .map(str::to_string),
        );
    }
    words
}

fn pattern_matches(pattern: &str, words: &[String]) -> bool {
    let mut start = 0;
    for segment in pattern.split("...") {
        let seg: Vec<&str> = segment.split_whitespace().collect();
        if seg.is_empty() {
            continue;
        }
        match find_run(&words[start..], &seg) {
            Some(pos) => start += pos + seg.len(),
            None => return false,
        }
    }
    true
}

fn find_run(words: &[String], seg: &[&str]) -> Option<usize> {
    if seg.len() > words.len() {
        return None;
    }
    (0..=words.len() - seg.len()).find(|&i| words[i..i + seg.len()].iter().zip(seg).all(|(w, s)| w == s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(q: &str) -> Option<BaseRelation> {
        RuleTable::default().match_question(q).map(|m| m.base_relation)
    }

    #[test]
    fn default_table_examples() {
        assert_eq!(base("What does Taylor need to do before this?"), Some(BaseRelation::Need));
        assert_eq!(base("How would you describe Kendall?"), Some(BaseRelation::Attr));
        assert_eq!(base("What will Alex want to do next?"), Some(BaseRelation::Want));
        assert_eq!(base("Why did Riley do this?"), Some(BaseRelation::Intent));
        assert_eq!(base("How would others feel as a result?"), Some(BaseRelation::React));
        assert_eq!(base("What will happen to Austin?"), Some(BaseRelation::Effect));
        assert_eq!(base("How would others see Jesse as?"), Some(BaseRelation::Attr));
        assert_eq!(base("Is water wet?"), None);
    }

    #[test]
    fn phrases_outrank_single_words() {
        // "want" would match too, but the need phrase has higher priority
        assert_eq!(
            base("What does Casey need to do before they want a car?"),
            Some(BaseRelation::Need)
        );
        let table = RuleTable::default();
        let m = table
            .match_question("WHAT DOES TAYLOR NEED TO DO BEFORE THIS?")
            .unwrap();
        assert_eq!(m.pattern, "need to do before");
    }

    #[test]
    fn words_match_whole_tokens_only() {
        assert_eq!(base("Was the needle sharp?"), None);
        assert_eq!(base("Is the feeling mutual?"), None);
    }

    #[test]
    fn config_round_trip() {
        let table = RuleTable::default();
        let again = RuleTable::parse(&table.to_config()).unwrap();
        assert_eq!(table, again);
        assert_eq!(table.rules().len(), 10);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            RuleTable::parse("10 Need need\n10 Want want\n").unwrap_err(),
            Error::RuleTable { line: 2, .. }
        ));
        assert!(matches!(
            RuleTable::parse("x Need need\n").unwrap_err(),
            Error::RuleTable { line: 1, .. }
        ));
        assert!(RuleTable::parse("10 Wish wish\n").is_err());
        assert!(RuleTable::parse("10 Need\n").is_err());
    }

    #[test]
    fn duplicate_priorities_rejected() {
        let a = KeywordRule::new(["need"], BaseRelation::Need, 5).unwrap();
        let b = KeywordRule::new(["want"], BaseRelation::Want, 5).unwrap();
        assert!(RuleTable::new(vec![a, b]).is_err());
        assert!(KeywordRule::new(Vec::<String>::new(), BaseRelation::Need, 1).is_err());
    }
}
