use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::parser::{parse_method_decls, MethodDecl, ParseError};
use crate::lexabs::{tokenize, Token};

/// Minimum bigram similarity for pairing methods whose signature changed.
pub const RENAME_THRESHOLD: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodPair {
    pub buggy: MethodDecl,
    pub fixed: MethodDecl,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MethodPairList {
    pub pairs: Vec<MethodPair>,
}

/// Parses both file versions and pairs their methods; methods created or
/// deleted by the fix are dropped.
pub fn map_method_pairs(buggy_file: &str, fixed_file: &str) -> Result<MethodPairList, ParseError> {
    let b = parse_method_decls(&tokenize(buggy_file)?)?;
    let f = parse_method_decls(&tokenize(fixed_file)?)?;
    Ok(pair_methods(b, f))
}

/// Pairs by (name, parameter count) in declaration order, then pairs the
/// leftovers greedily by token-bigram similarity of at least
/// [`RENAME_THRESHOLD`]. Output follows the buggy file's order.
pub fn pair_methods(buggy: Vec<MethodDecl>, fixed: Vec<MethodDecl>) -> MethodPairList {
    let mut f_taken = alloc::vec![false; fixed.len()];
    let mut b_partner: Vec<Option<usize>> = alloc::vec![None; buggy.len()];

    let mut by_sig: BTreeMap<(&str, usize), Vec<usize>> = BTreeMap::new();
    for (i, m) in fixed.iter().enumerate() {
        by_sig.entry((m.name.as_str(), m.param_count)).or_default().push(i);
    }
    let mut cursor: BTreeMap<(&str, usize), usize> = BTreeMap::new();
    for (i, m) in buggy.iter().enumerate() {
        let key = (m.name.as_str(), m.param_count);
        if let Some(list) = by_sig.get(&key) {
            let c = cursor.entry(key).or_insert(0);
            if let Some(&j) = list.get(*c) {
                *c += 1;
                b_partner[i] = Some(j);
                f_taken[j] = true;
            }
        }
    }

    let mut scored = Vec::new();
    for (i, bm) in buggy.iter().enumerate() {
        if b_partner[i].is_some() {
            continue;
        }
        for (j, fm) in fixed.iter().enumerate() {
            if f_taken[j] {
                continue;
            }
            let s = bigram_similarity(&bm.tokens, &fm.tokens);
            if s >= RENAME_THRESHOLD {
                scored.push((s, i, j));
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, i, j) in scored {
        if b_partner[i].is_none() && !f_taken[j] {
            b_partner[i] = Some(j);
            f_taken[j] = true;
        }
    }

    let mut fixed: Vec<Option<MethodDecl>> = fixed.into_iter().map(Some).collect();
    let pairs = buggy
        .into_iter()
        .zip(b_partner)
        .filter_map(|(b, j)| {
            let f = fixed[j?].take()?;
            Some(MethodPair { buggy: b, fixed: f })
        })
        .collect();
    MethodPairList { pairs }
}

/// Dice coefficient over the multisets of adjacent lexeme pairs.
pub fn bigram_similarity(a: &[Token], b: &[Token]) -> f64 {
    fn bigrams(t: &[Token]) -> BTreeMap<(&str, &str), usize> {
        let mut m = BTreeMap::new();
        for w in t.windows(2) {
            *m.entry((w[0].lexeme.as_str(), w[1].lexeme.as_str())).or_insert(0) += 1;
        }
        m
    }
    let (ba, bb) = (bigrams(a), bigrams(b));
    let total: usize = ba.values().sum::<usize>() + bb.values().sum::<usize>();
    if total == 0 {
        return if a.iter().map(|t| &t.lexeme).eq(b.iter().map(|t| &t.lexeme)) { 1.0 } else { 0.0 };
    }
    let common: usize = ba.iter().map(|(k, &n)| n.min(bb.get(k).copied().unwrap_or(0))).sum();
    2.0 * common as f64 / total as f64
}

impl MethodPairList {
    pub fn names(&self) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|p| (p.buggy.name.clone(), p.fixed.name.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn identical_files_pair_every_method() {
        let src = "class A { int f() { return 0; } int f(int x) { return x; } void g() { } }";
        let l = map_method_pairs(src, src).unwrap();
        assert_eq!(l.pairs.len(), 3);
        for p in &l.pairs {
            assert_eq!(p.buggy, p.fixed);
        }
    }

    #[test]
    fn deleted_and_created_methods_are_dropped() {
        let b = "class A { void keep() { a(); } void gone() { b(); } }";
        let f = "class A { void keep() { a(); c(); } void fresh(int q, int r) { z(); } }";
        let l = map_method_pairs(b, f).unwrap();
        assert_eq!(l.names(), vec![("keep".to_string(), "keep".to_string())]);
    }

    #[test]
    fn renamed_method_with_similar_body_is_paired() {
        let body = "{ int total = 0; for (int i = 0; i < items.size(); i++) { total += items.get(i).weight(); } return total; }";
        let b = alloc::format!("class A {{ int sumWeights(List<Item> items) {body} }}");
        let f = alloc::format!("class A {{ int totalWeight(List<Item> items) {body} }}");
        let l = map_method_pairs(&b, &f).unwrap();
        assert_eq!(l.names(), vec![("sumWeights".to_string(), "totalWeight".to_string())]);
    }

    #[test]
    fn similarity_matches_hand_count() {
        // a b a b: bigrams {ab:2, ba:1}; a b c: {ab:1, bc:1}; common 1 of 5
        let x = tokenize("a b a b").unwrap();
        let y = tokenize("a b c").unwrap();
        assert!((bigram_similarity(&x, &y) - 0.4).abs() < 1e-12);
        assert_eq!(bigram_similarity(&x, &x), 1.0);
    }
}
