//! Hand-written lexer for the Java subset the pipeline consumes.
//!
//! Comments and annotations never reach the token stream. A `-` immediately
//! followed by a digit is folded into the numeric literal when it cannot be a
//! binary operator (so `return -1;` yields the literal `-1`).

use alloc::string::String;
use alloc::vec::Vec;

use super::token::{is_keyword, Token, TokenKind, OPERATORS, SEPARATORS};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LexError {
    #[error("unterminated string literal starting at byte {0}")]
    UnterminatedString(usize),
    #[error("unterminated char literal starting at byte {0}")]
    UnterminatedChar(usize),
    #[error("unterminated block comment starting at byte {0}")]
    UnterminatedComment(usize),
    #[error("illegal character {ch:?} at byte {offset}")]
    IllegalChar { ch: char, offset: usize },
    #[error("malformed numeric literal at byte {0}")]
    BadNumber(usize),
    #[error("unbalanced annotation arguments starting at byte {0}")]
    UnbalancedAnnotation(usize),
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnterminatedString(o)
            | LexError::UnterminatedChar(o)
            | LexError::UnterminatedComment(o)
            | LexError::BadNumber(o)
            | LexError::UnbalancedAnnotation(o) => o,
            LexError::IllegalChar { offset, .. } => offset,
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    out: Vec<(Token, usize)>,
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_part(c: char) -> bool {
    is_ident_start(c) || c.is_ascii_digit() || c.is_alphanumeric()
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let lexeme = &self.src[start..self.pos];
        self.out.push((Token::new(kind, lexeme), start));
    }

    /// True when the last emitted token could end an operand, i.e. a
    /// following `-` must be binary.
    fn after_operand(&self) -> bool {
        match self.out.last() {
            None => false,
            Some((t, _)) => match t.kind {
                TokenKind::Identifier
                | TokenKind::StringLiteral
                | TokenKind::CharLiteral
                | TokenKind::IntLiteral
                | TokenKind::FloatLiteral
                | TokenKind::BoolLiteral => true,
                TokenKind::Separator => t.lexeme == ")" || t.lexeme == "]",
                TokenKind::Keyword => matches!(t.lexeme.as_str(), "this" | "super" | "null" | "class"),
                TokenKind::Operator => t.lexeme == "++" || t.lexeme == "--",
            },
        }
    }

    fn run(mut self) -> Result<Vec<(Token, usize)>, LexError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                self.bump();
            } else if self.rest().starts_with("//") {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if self.rest().starts_with("/*") {
                match self.src[self.pos + 2..].find("*/") {
                    Some(end) => self.pos += 2 + end + 2,
                    None => return Err(LexError::UnterminatedComment(start)),
                }
            } else if c == '"' {
                self.quoted('"', start)?;
                self.push(TokenKind::StringLiteral, start);
            } else if c == '\'' {
                self.quoted('\'', start)?;
                self.push(TokenKind::CharLiteral, start);
            } else if c.is_ascii_digit()
                || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
            {
                let kind = self.number(start)?;
                self.push(kind, start);
            } else if c == '-'
                && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())
                && !self.after_operand()
            {
                self.bump();
                let kind = self.number(start)?;
                self.push(kind, start);
            } else if is_ident_start(c) {
                while self.peek().is_some_and(is_ident_part) {
                    self.bump();
                }
                let word = &self.src[start..self.pos];
                let kind = if word == "true" || word == "false" {
                    TokenKind::BoolLiteral
                } else if is_keyword(word) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, start);
            } else if let Some(sep) = SEPARATORS.iter().find(|s| self.rest().starts_with(**s)) {
                self.pos += sep.len();
                self.push(TokenKind::Separator, start);
            } else if let Some(op) = OPERATORS.iter().find(|s| self.rest().starts_with(**s)) {
                self.pos += op.len();
                self.push(TokenKind::Operator, start);
            } else {
                return Err(LexError::IllegalChar { ch: c, offset: start });
            }
        }
        Ok(self.out)
    }

    fn quoted(&mut self, quote: char, start: usize) -> Result<(), LexError> {
        let err = || {
            if quote == '"' {
                LexError::UnterminatedString(start)
            } else {
                LexError::UnterminatedChar(start)
            }
        };
        self.bump();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(err()),
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(err());
                    }
                }
                Some(c) if c == quote => return Ok(()),
                Some(_) => {}
            }
        }
    }

    fn digits(&mut self, radix: u32) -> usize {
        let mut n = 0;
        while let Some(c) = self.peek() {
            if c == '_' || c.is_digit(radix) {
                self.bump();
                n += 1;
            } else {
                break;
            }
        }
        n
    }

    fn number(&mut self, start: usize) -> Result<TokenKind, LexError> {
        let mut float = false;
        if self.rest().starts_with("0x") || self.rest().starts_with("0X") {
            self.pos += 2;
            if self.digits(16) == 0 {
                return Err(LexError::BadNumber(start));
            }
        } else if self.rest().starts_with("0b") || self.rest().starts_with("0B") {
            self.pos += 2;
            if self.digits(2) == 0 {
                return Err(LexError::BadNumber(start));
            }
        } else {
            self.digits(10);
            if self.peek() == Some('.') {
                let next = self.peek_at(1);
                if next.is_some_and(|d| d.is_ascii_digit()) {
                    self.bump();
                    self.digits(10);
                    float = true;
                } else if !next.is_some_and(|d| is_ident_start(d) || d == '.') {
                    self.bump();
                    float = true;
                }
            }
            if matches!(self.peek(), Some('e' | 'E')) {
                let save = self.pos;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                if self.digits(10) == 0 {
                    self.pos = save;
                    return Err(LexError::BadNumber(start));
                }
                float = true;
            }
            if matches!(self.peek(), Some('f' | 'F' | 'd' | 'D')) {
                self.bump();
                float = true;
            }
        }
        if !float && matches!(self.peek(), Some('l' | 'L')) {
            self.bump();
        }
        if self.peek().is_some_and(is_ident_part) {
            return Err(LexError::BadNumber(start));
        }
        Ok(if float {
            TokenKind::FloatLiteral
        } else {
            TokenKind::IntLiteral
        })
    }
}

/// Tokenizes `source`, dropping whitespace, comments and annotations.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let raw = Lexer {
        src: source,
        pos: 0,
        out: Vec::new(),
    }
    .run()?;
    strip_annotations(raw)
}

fn strip_annotations(raw: Vec<(Token, usize)>) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let (tok, offset) = &raw[i];
        let is_annotation = tok.is_sep("@") && raw.get(i + 1).is_some_and(|(t, _)| t.is_ident());
        if !is_annotation {
            out.push(tok.clone());
            i += 1;
            continue;
        }
        i += 2;
        while i + 1 < raw.len() && raw[i].0.is_sep(".") && raw[i + 1].0.is_ident() {
            i += 2;
        }
        if raw.get(i).is_some_and(|(t, _)| t.is_sep("(")) {
            let mut depth = 0usize;
            loop {
                let Some((t, _)) = raw.get(i) else {
                    return Err(LexError::UnbalancedAnnotation(*offset));
                };
                if t.is_sep("(") {
                    depth += 1;
                } else if t.is_sep(")") {
                    depth -= 1;
                }
                i += 1;
                if depth == 0 {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Joins a token stream back into a single space-separated line.
pub fn join_lexemes(tokens: &[Token]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&t.lexeme);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    fn t(kind: TokenKind, s: &str) -> (TokenKind, String) {
        (kind, String::from(s))
    }

    #[test]
    fn declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds("int x = 0 ;"),
            vec![
                t(Keyword, "int"),
                t(Identifier, "x"),
                t(Operator, "="),
                t(IntLiteral, "0"),
                t(Separator, ";"),
            ]
        );
    }

    #[test]
    fn line_comment_is_dropped() {
        use TokenKind::*;
        assert_eq!(
            kinds("// note\nreturn a;"),
            vec![t(Keyword, "return"), t(Identifier, "a"), t(Separator, ";")]
        );
        assert_eq!(kinds("a /* b */ c"), vec![t(Identifier, "a"), t(Identifier, "c")]);
    }

    #[test]
    fn escaped_quote_stays_in_string() {
        assert_eq!(
            kinds(r#""a\"b""#),
            vec![t(TokenKind::StringLiteral, r#""a\"b""#)]
        );
        assert_eq!(kinds(r"'\''"), vec![t(TokenKind::CharLiteral, r"'\''")]);
    }

    #[test]
    fn annotations_are_removed() {
        let toks = kinds("@Override public void f(@Named(\"x(\") int a) {}");
        assert_eq!(toks[0], t(TokenKind::Keyword, "public"));
        assert!(!toks.iter().any(|(_, l)| l == "Named" || l == "@"));
        assert!(kinds("@a.b.C x").len() == 1);
    }

    #[test]
    fn numbers() {
        use TokenKind::*;
        assert_eq!(kinds("0x1F")[0].0, IntLiteral);
        assert_eq!(kinds("10L")[0].0, IntLiteral);
        assert_eq!(kinds("1_000")[0].0, IntLiteral);
        assert_eq!(kinds("1.5")[0].0, FloatLiteral);
        assert_eq!(kinds(".5f")[0].0, FloatLiteral);
        assert_eq!(kinds("1e-3")[0].0, FloatLiteral);
        assert_eq!(kinds("2d")[0].0, FloatLiteral);
        assert!(tokenize("12abc").is_err());
    }

    #[test]
    fn negative_literals_fold_only_in_operand_position() {
        use TokenKind::*;
        assert_eq!(
            kinds("return -1;"),
            vec![t(Keyword, "return"), t(IntLiteral, "-1"), t(Separator, ";")]
        );
        assert_eq!(
            kinds("a-1"),
            vec![t(Identifier, "a"), t(Operator, "-"), t(IntLiteral, "1")]
        );
        assert_eq!(kinds("f(x) - 1").len(), 6);
        assert_eq!(kinds("a - -1")[2], t(IntLiteral, "-1"));
        assert_eq!(kinds("i++ -1")[2], t(Operator, "-"));
    }

    #[test]
    fn maximal_munch_operators() {
        let toks = kinds("a >>>= b >> c -> d ... e :: f");
        let lex: Vec<&str> = toks.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(lex, vec!["a", ">>>=", "b", ">>", "c", "->", "d", "...", "e", "::", "f"]);
    }

    #[test]
    fn bool_and_null() {
        assert_eq!(kinds("true")[0].0, TokenKind::BoolLiteral);
        assert_eq!(kinds("null")[0].0, TokenKind::Keyword);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(tokenize("x = \"abc"), Err(LexError::UnterminatedString(4)));
        assert_eq!(tokenize("a /* b"), Err(LexError::UnterminatedComment(2)));
        assert_eq!(
            tokenize("a # b"),
            Err(LexError::IllegalChar { ch: '#', offset: 2 })
        );
        assert_eq!(tokenize("'a"), Err(LexError::UnterminatedChar(0)));
        assert_eq!(tokenize("\"a\nb\"").unwrap_err().offset(), 0);
    }

    #[test]
    fn unicode_identifiers() {
        assert_eq!(kinds("größe = 1")[0], t(TokenKind::Identifier, "größe"));
    }
}
