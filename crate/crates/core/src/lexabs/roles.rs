use alloc::vec::Vec;

use super::abstraction::IdCategory;
use super::token::{Token, TokenKind};

/// Role assigned to a token for abstraction. `None` means the token is kept
/// verbatim (keywords, separators, operators, boolean literals).
pub type Role = Option<IdCategory>;

fn looks_like_constant(name: &str) -> bool {
    name.chars().count() > 1
        && name.chars().any(|c| c.is_alphabetic())
        && name.chars().all(|c| !c.is_lowercase())
}

fn starts_uppercase(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_uppercase())
}

/// Skips a balanced `< ... >` starting at `i` (which must be `<`), returning
/// the index just past the closing bracket. Shift operators close two or three
/// levels at once.
fn skip_type_args(tokens: &[Token], mut i: usize) -> Option<usize> {
    let mut depth: i32 = 0;
    while let Some(t) = tokens.get(i) {
        if t.kind == TokenKind::Operator {
            match t.lexeme.as_str() {
                "<" => depth += 1,
                ">" => depth -= 1,
                ">>" => depth -= 2,
                ">>>" => depth -= 3,
                "?" | "&" => {}
                _ => return None,
            }
        } else if !(t.is_ident()
            || t.is_sep(",")
            || t.is_sep(".")
            || t.is_sep("[")
            || t.is_sep("]")
            || t.is_kw("extends")
            || t.is_kw("super")
            || t.kind == TokenKind::Keyword && super::token::is_primitive_type(&t.lexeme))
        {
            return None;
        }
        i += 1;
        if depth <= 0 {
            return (depth == 0).then_some(i);
        }
    }
    None
}

/// True when the identifier at `i` sits in a type position: it is followed
/// (after optional type arguments and array brackets) by another identifier
/// or by `...`.
fn in_declaration_position(tokens: &[Token], i: usize) -> bool {
    let mut j = i + 1;
    if tokens.get(j).is_some_and(|t| t.is_op("<")) {
        match skip_type_args(tokens, j) {
            Some(next) => j = next,
            None => return false,
        }
    }
    while tokens.get(j).is_some_and(|t| t.is_sep("[")) && tokens.get(j + 1).is_some_and(|t| t.is_sep("]")) {
        j += 2;
    }
    match tokens.get(j) {
        Some(t) => t.is_ident() || t.is_sep("..."),
        None => false,
    }
}

/// Labels every token with its abstraction role.
///
/// Heuristics for identifiers, in order: after `new` or in a declaration
/// position it is a TYPE; followed by `(` it is a METHOD; an initial
/// uppercase letter (other than an all-caps constant) marks a TYPE;
/// everything else is a VAR.
pub fn classify_roles(tokens: &[Token]) -> Vec<(Token, Role)> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), role_at(tokens, i)))
        .collect()
}

pub(crate) fn role_at(tokens: &[Token], i: usize) -> Role {
    let t = &tokens[i];
    match t.kind {
        TokenKind::StringLiteral => Some(IdCategory::String),
        TokenKind::CharLiteral => Some(IdCategory::Char),
        TokenKind::IntLiteral => Some(IdCategory::Int),
        TokenKind::FloatLiteral => Some(IdCategory::Float),
        TokenKind::Identifier => Some(identifier_role(tokens, i)),
        _ => None,
    }
}

fn identifier_role(tokens: &[Token], i: usize) -> IdCategory {
    let name = tokens[i].lexeme.as_str();
    let prev = i.checked_sub(1).map(|p| &tokens[p]);
    let next = tokens.get(i + 1);
    let after_dot = prev.is_some_and(|p| p.is_sep("."));
    if prev.is_some_and(|p| p.is_kw("new")) {
        return IdCategory::Type;
    }
    if next.is_some_and(|n| n.is_sep("(")) {
        return IdCategory::Method;
    }
    if !after_dot && in_declaration_position(tokens, i) {
        return IdCategory::Type;
    }
    // `Foo::bar` method references
    if prev.is_some_and(|p| p.is_sep("::")) {
        return IdCategory::Method;
    }
    if starts_uppercase(name) && !looks_like_constant(name) {
        return IdCategory::Type;
    }
    IdCategory::Var
}
