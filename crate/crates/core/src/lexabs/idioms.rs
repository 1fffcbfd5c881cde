use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::abstraction::{AbstractId, IdiomSet};
use super::token::{Token, TokenKind};

/// Idioms shipped with the toolkit: loop indices, common literals and
/// method names, the boxed primitive types and common exception types.
pub const BASE_IDIOMS: &[&str] = &[
    "-1",
    "0",
    "1",
    "2",
    "0L",
    "0.0",
    "1.0",
    "\"\"",
    "i",
    "j",
    "k",
    "index",
    "size",
    "add",
    "get",
    "put",
    "set",
    "remove",
    "contains",
    "isEmpty",
    "equals",
    "length",
    "min",
    "max",
    "toString",
    "valueOf",
    "hashCode",
    "clear",
    "append",
    "close",
    "e",
    "String",
    "Integer",
    "Long",
    "Double",
    "Float",
    "Boolean",
    "Character",
    "Byte",
    "Short",
    "Object",
    "Math",
    "List",
    "Map",
    "Set",
    "ArrayList",
    "HashMap",
    "System",
    "Exception",
    "RuntimeException",
    "IllegalArgumentException",
    "IllegalStateException",
    "NullPointerException",
    "IndexOutOfBoundsException",
    "UnsupportedOperationException",
    "IOException",
];

pub fn base_idioms() -> IdiomSet {
    IdiomSet::new(BASE_IDIOMS.iter().copied()).expect("base idioms are well formed")
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum IdiomMiningError {
    #[error("idiom mining needs a non-empty corpus")]
    EmptyCorpus,
    #[error("top fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
}

/// Frequency counts of identifier and literal lexemes. Counts merge
/// associatively, so shards of a corpus can be counted independently.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LexemeCounts {
    counts: BTreeMap<String, u64>,
    methods: u64,
}

impl LexemeCounts {
    pub fn add_method(&mut self, tokens: &[Token]) {
        self.methods += 1;
        for t in tokens {
            let counted = matches!(
                t.kind,
                TokenKind::Identifier
                    | TokenKind::StringLiteral
                    | TokenKind::CharLiteral
                    | TokenKind::IntLiteral
                    | TokenKind::FloatLiteral
            );
            if counted && AbstractId::parse(&t.lexeme).is_none() {
                *self.counts.entry(t.lexeme.clone()).or_insert(0) += 1;
            }
        }
    }

    pub fn merge(&mut self, other: LexemeCounts) {
        self.methods += other.methods;
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Lexemes by descending frequency, ties broken alphabetically.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.counts.iter().map(|(k, c)| (k.as_str(), *c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

/// Selects the most frequent `top_fraction` of distinct identifier/literal
/// lexemes (rounded down) and unions them with `base`.
pub fn mine_idioms<'a, I>(corpus: I, top_fraction: f64, base: &IdiomSet) -> Result<IdiomSet, IdiomMiningError>
where
    I: IntoIterator<Item = &'a [Token]>,
{
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(IdiomMiningError::BadFraction(top_fraction));
    }
    let mut counts = LexemeCounts::default();
    for method in corpus {
        counts.add_method(method);
    }
    select_idioms(&counts, top_fraction, base)
}

pub fn select_idioms(counts: &LexemeCounts, top_fraction: f64, base: &IdiomSet) -> Result<IdiomSet, IdiomMiningError> {
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(IdiomMiningError::BadFraction(top_fraction));
    }
    if counts.methods == 0 {
        return Err(IdiomMiningError::EmptyCorpus);
    }
    let take = libm::floor(top_fraction * counts.distinct() as f64) as usize;
    let mut out = base.clone();
    for (lexeme, _) in counts.ranked().into_iter().take(take) {
        // ranked() never yields id-shaped or blank lexemes
        let _ = out.insert(String::from(lexeme));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexabs::tokenize;
    use alloc::vec;

    #[test]
    fn most_frequent_identifier_is_selected() {
        let methods: Vec<Vec<Token>> = ["for (i = 0; i < n; i++) a[i] = b;", "x = i + i;", "y = z;"]
            .iter()
            .map(|s| tokenize(s).unwrap())
            .collect();
        let counts = {
            let mut c = LexemeCounts::default();
            for m in &methods {
                c.add_method(m);
            }
            c
        };
        // i appears 6 times; 8 distinct lexemes, so 0.15 selects one
        assert_eq!(counts.ranked()[0], ("i", 6));
        let base = IdiomSet::new(["size"]).unwrap();
        let got = mine_idioms(methods.iter().map(Vec::as_slice), 0.15, &base).unwrap();
        assert_eq!(got.iter().collect::<Vec<_>>(), vec!["i", "size"]);
    }

    #[test]
    fn tiny_fraction_keeps_base() {
        let m = tokenize("a = b;").unwrap();
        let base = IdiomSet::new(["0"]).unwrap();
        let got = mine_idioms([m.as_slice()], 0.00005, &base).unwrap();
        assert_eq!(got, base);
    }

    #[test]
    fn keywords_and_separators_are_not_counted() {
        let mut c = LexemeCounts::default();
        c.add_method(&tokenize("return this.x; // count\n").unwrap());
        assert_eq!(c.ranked(), vec![("x", 1)]);
    }

    #[test]
    fn errors() {
        let empty: Vec<&[Token]> = Vec::new();
        assert_eq!(
            mine_idioms(empty, 0.1, &IdiomSet::empty()),
            Err(IdiomMiningError::EmptyCorpus)
        );
        let m = tokenize("a").unwrap();
        assert!(matches!(
            mine_idioms([m.as_slice()], 1.0, &IdiomSet::empty()),
            Err(IdiomMiningError::BadFraction(_))
        ));
    }

    #[test]
    fn merge_is_associative() {
        let parts: Vec<Vec<Token>> = ["a b c", "a a", "c d"].iter().map(|s| tokenize(s).unwrap()).collect();
        let one = |xs: &[Vec<Token>]| {
            let mut c = LexemeCounts::default();
            for x in xs {
                c.add_method(x);
            }
            c
        };
        let mut left = one(&parts[..1]);
        left.merge(one(&parts[1..]));
        let mut right = one(&parts[..2]);
        right.merge(one(&parts[2..]));
        assert_eq!(left, right);
        assert_eq!(left, one(&parts));
    }

    #[test]
    fn base_list_is_valid() {
        assert_eq!(base_idioms().len(), BASE_IDIOMS.len());
    }
}
