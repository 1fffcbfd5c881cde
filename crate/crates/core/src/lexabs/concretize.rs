use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::abstraction::{AbstractId, AbstractedMethod, IdCategory, IdMapping};

/// Raised when a predicted token names an ID that the pair's mapping does
/// not contain; the lexeme would have to be synthesized.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unmappable id {0}")]
pub struct UnmappableId(pub AbstractId);

/// Replaces every ID with its lexeme from `mapping` and pretty-prints the
/// result.
pub fn concretize(predicted: &AbstractedMethod, mapping: &IdMapping) -> Result<String, UnmappableId> {
    let lexemes = substitute(predicted, |id| mapping.get(&id).map(str::to_string))?;
    Ok(pretty_print(&lexemes))
}

/// Substitutes IDs through `lookup`, leaving every other token untouched.
pub fn substitute<F>(predicted: &AbstractedMethod, mut lookup: F) -> Result<Vec<String>, UnmappableId>
where
    F: FnMut(AbstractId) -> Option<String>,
{
    predicted
        .tokens
        .iter()
        .map(|t| match AbstractId::parse(t) {
            Some(id) => lookup(id).ok_or(UnmappableId(id)),
            None => Ok(t.clone()),
        })
        .collect()
}

/// A lexically valid stand-in for an ID, used when checking whether a
/// candidate patch is well formed without its real mapping.
pub fn placeholder_lexeme(id: AbstractId) -> String {
    match id.category {
        IdCategory::Method | IdCategory::Var | IdCategory::Type => id.to_string(),
        IdCategory::String => alloc::format!("\"{id}\""),
        IdCategory::Char => String::from("'c'"),
        IdCategory::Int => id.index.to_string(),
        IdCategory::Float => alloc::format!("{}.0", id.index),
    }
}

fn is_numeric(tok: &str) -> bool {
    let t = tok.strip_prefix('-').unwrap_or(tok);
    t.starts_with(|c: char| c.is_ascii_digit()) || (t.starts_with('.') && t.len() > 1 && t != "...")
}

fn is_wordlike(tok: &str) -> bool {
    tok.starts_with(|c: char| c == '_' || c == '$' || c.is_alphanumeric())
}

const CONTROL_KEYWORDS: &[&str] = &["if", "for", "while", "switch", "catch", "synchronized", "return", "throw"];

fn glue(prev: &str, next: &str) -> bool {
    if prev == "." || next == "." {
        let other = if prev == "." { next } else { prev };
        return !(is_numeric(other) || other.starts_with('.'));
    }
    match next {
        ";" | "," | ")" | "]" => return true,
        "++" | "--" => {
            return (is_wordlike(prev) && !super::token::is_keyword(prev) && !is_numeric(prev)) || prev == ")" || prev == "]";
        }
        "(" | "[" => {
            return (is_wordlike(prev) && !CONTROL_KEYWORDS.contains(&prev) && !is_numeric(prev))
                || prev == ")"
                || prev == "]";
        }
        _ => {}
    }
    matches!(prev, "(" | "[")
}

/// Deterministic pretty-printer: one statement per line, four-space indent
/// per brace level. The output re-lexes to exactly `tokens`.
pub fn pretty_print<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut line = String::new();
    let mut depth: usize = 0;
    let mut parens: usize = 0;
    let mut prev: Option<&str> = None;

    fn flush(lines: &mut Vec<String>, line: &mut String, depth: usize) {
        if !line.is_empty() {
            let mut l = " ".repeat(depth * 4);
            l.push_str(line);
            lines.push(l);
            line.clear();
        }
    }

    for (i, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        let next = tokens.get(i + 1).map(|t| t.as_ref());
        if tok == "}" {
            flush(&mut lines, &mut line, depth);
            depth = depth.saturating_sub(1);
            line.push('}');
            let keep_line = matches!(next, Some("else" | "catch" | "finally" | ")" | ";" | "," | "while"));
            if !keep_line {
                flush(&mut lines, &mut line, depth);
            }
            prev = Some(tok);
            continue;
        }
        if !line.is_empty() && !prev.is_some_and(|p| glue(p, tok)) {
            line.push(' ');
        }
        line.push_str(tok);
        match tok {
            "(" => parens += 1,
            ")" => parens = parens.saturating_sub(1),
            "{" => {
                flush(&mut lines, &mut line, depth);
                depth += 1;
            }
            ";" if parens == 0 => flush(&mut lines, &mut line, depth),
            _ => {}
        }
        prev = Some(tok);
    }
    flush(&mut lines, &mut line, depth);
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexabs::{abstract_pair, tokenize, IdiomSet};

    fn mapping_of(src: &str) -> (AbstractedMethod, IdMapping) {
        let t = tokenize(src).unwrap();
        let (b, _, m) = abstract_pair(&t, &t, &IdiomSet::empty());
        (b, m)
    }

    #[test]
    fn return_var() {
        let (_, m) = mapping_of("return count ;");
        let out = concretize(&AbstractedMethod::from_line("return VAR_1 ;"), &m).unwrap();
        assert_eq!(out, "return count;");
    }

    #[test]
    fn idioms_pass_through() {
        let out = concretize(&AbstractedMethod::from_line("return 0 ;"), &IdMapping::new()).unwrap();
        assert_eq!(out, "return 0;");
    }

    #[test]
    fn missing_id_is_reported() {
        let (_, m) = mapping_of("a ( ) ;");
        let err = concretize(&AbstractedMethod::from_line("METHOD_6 ( )"), &m).unwrap_err();
        assert_eq!(err, UnmappableId(AbstractId::new(IdCategory::Method, 6)));
        assert_eq!(err.to_string(), "unmappable id METHOD_6");
    }

    #[test]
    fn layout() {
        let src = "public int f(int a) { if (a > 0) { return a; } else { return -1; } }";
        let toks: Vec<String> = tokenize(src).unwrap().into_iter().map(|t| t.lexeme).collect();
        let out = pretty_print(&toks);
        assert_eq!(
            out,
            "public int f(int a) {\n    if (a > 0) {\n        return a;\n    } else {\n        return -1;\n    }\n}"
        );
    }

    #[test]
    fn for_header_stays_on_one_line() {
        let toks: Vec<String> = tokenize("for (int i = 0; i < n; i++) { x.y[i] = 1.5; }")
            .unwrap()
            .into_iter()
            .map(|t| t.lexeme)
            .collect();
        assert_eq!(pretty_print(&toks), "for (int i = 0; i < n; i++) {\n    x.y[i] = 1.5;\n}");
    }

    #[test]
    fn dot_next_to_number_is_spaced() {
        let toks = ["1", ".", "5"];
        let printed = pretty_print(&toks);
        let relexed: Vec<String> = tokenize(&printed).unwrap().into_iter().map(|t| t.lexeme).collect();
        assert_eq!(relexed, toks);
    }

    #[test]
    fn placeholders_lex_in_their_category() {
        use crate::lexabs::TokenKind;
        for (cat, kind) in [
            (IdCategory::Var, TokenKind::Identifier),
            (IdCategory::String, TokenKind::StringLiteral),
            (IdCategory::Char, TokenKind::CharLiteral),
            (IdCategory::Int, TokenKind::IntLiteral),
            (IdCategory::Float, TokenKind::FloatLiteral),
        ] {
            let lex = placeholder_lexeme(AbstractId::new(cat, 3));
            let t = tokenize(&lex).unwrap();
            assert_eq!(t.len(), 1);
            assert_eq!(t[0].kind, kind);
        }
    }
}
