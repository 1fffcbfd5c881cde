//! Recursive-descent parser for the Java subset: enough structure to build a
//! typed method AST, not a validating compiler front end.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::ast::{AstNode, NodeType};
use crate::lexabs::{tokenize, LexError, Token, TokenKind};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("unbalanced braces")]
    Unbalanced,
    #[error("unexpected {found:?} at token {pos}, expected {expected}")]
    Unexpected {
        pos: usize,
        found: String,
        expected: &'static str,
    },
    #[error("unexpected end of input, expected {0}")]
    Eof(&'static str),
}

/// A method found in a file, with the token span it was parsed from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub param_count: usize,
    pub ast: AstNode,
    pub tokens: Vec<Token>,
}

/// Parses every method (and constructor) with a body, flattening nested
/// classes. Abstract and interface methods without a body are skipped.
pub fn parse_methods(file_source: &str) -> Result<Vec<AstNode>, ParseError> {
    let tokens = tokenize(file_source)?;
    Ok(parse_method_decls(&tokens)?.into_iter().map(|m| m.ast).collect())
}

pub fn parse_method_decls(tokens: &[Token]) -> Result<Vec<MethodDecl>, ParseError> {
    check_balanced(tokens)?;
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut out = Vec::new();
    p.members(false, &mut out)?;
    Ok(out)
}

/// Parses a token stream that must consist of exactly one method
/// declaration.
pub fn parse_single_method(tokens: &[Token]) -> Result<MethodDecl, ParseError> {
    check_balanced(tokens)?;
    let mut p = Parser { toks: tokens, pos: 0 };
    let start = p.pos;
    p.modifiers();
    if p.at_op("<") {
        p.skip_type_args()?;
    }
    let decl = p.method_after_modifiers(start)?;
    match (decl, p.peek()) {
        (Some(d), None) => Ok(d),
        (None, _) => Err(ParseError::Eof("method body")),
        (Some(_), Some(t)) => Err(ParseError::Unexpected {
            pos: p.pos,
            found: t.lexeme.clone(),
            expected: "end of method",
        }),
    }
}

fn check_balanced(tokens: &[Token]) -> Result<(), ParseError> {
    let mut stack = Vec::new();
    for t in tokens {
        if t.kind != TokenKind::Separator {
            continue;
        }
        match t.lexeme.as_str() {
            "(" | "[" | "{" => stack.push(t.lexeme.as_str()),
            ")" | "]" | "}" => {
                let open = match t.lexeme.as_str() {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                if stack.pop() != Some(open) {
                    return Err(ParseError::Unbalanced);
                }
            }
            _ => {}
        }
    }
    if stack.is_empty() {
        Ok(())
    } else {
        Err(ParseError::Unbalanced)
    }
}

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
];

fn binary_precedence(t: &Token) -> Option<u8> {
    if t.is_kw("instanceof") {
        return Some(7);
    }
    if t.kind != TokenKind::Operator {
        return None;
    }
    Some(match t.lexeme.as_str() {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" => 6,
        "<" | ">" | "<=" | ">=" => 7,
        "<<" | ">>" | ">>>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        _ => return None,
    })
}

fn is_assignment_op(t: &Token) -> bool {
    t.kind == TokenKind::Operator
        && matches!(
            t.lexeme.as_str(),
            "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" | ">>=" | ">>>="
        )
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    fn at_sep(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_sep(s))
    }

    fn at_op(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(s))
    }

    fn at_kw(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(s))
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(Token::is_ident)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &'static str) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => Err(ParseError::Unexpected {
                pos: self.pos,
                found: t.lexeme.clone(),
                expected,
            }),
            None => Err(ParseError::Eof(expected)),
        }
    }

    fn expect_sep(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.at_sep(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.unexpected(s)
        }
    }

    fn expect_ident(&mut self) -> Result<&'a str, ParseError> {
        if self.at_ident() {
            Ok(self.bump().map(|t| t.lexeme.as_str()).unwrap_or_default())
        } else {
            self.unexpected("identifier")
        }
    }

    fn eat_sep(&mut self, s: &str) -> bool {
        if self.at_sep(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Skips a balanced bracket group starting at the current opener.
    fn skip_group(&mut self) -> Result<(), ParseError> {
        let mut depth = 0usize;
        loop {
            let t = self.bump().ok_or(ParseError::Unbalanced)?;
            if t.kind == TokenKind::Separator {
                match t.lexeme.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    _ => {}
                }
            }
            if depth == 0 {
                return Ok(());
            }
        }
    }

    /// Skips to and past the next `;` outside any bracket group.
    fn skip_statement(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                None => return Err(ParseError::Eof(";")),
                Some(t) if t.is_sep(";") => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_sep("(") || t.is_sep("[") || t.is_sep("{") => self.skip_group()?,
                Some(t) if t.is_sep("}") => return self.unexpected(";"),
                Some(_) => self.pos += 1,
            }
        }
    }

    fn modifiers(&mut self) {
        while self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Keyword && MODIFIERS.contains(&t.lexeme.as_str()))
        {
            // `default:` inside a switch never reaches member parsing
            self.pos += 1;
        }
        // contextual modifiers
        while self.peek().is_some_and(|t| t.is_ident() && (t.lexeme == "sealed"))
            && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Keyword || t.is_ident())
        {
            self.pos += 1;
        }
    }

    // ---- members -------------------------------------------------------

    fn members(&mut self, in_class: bool, out: &mut Vec<MethodDecl>) -> Result<(), ParseError> {
        loop {
            let Some(t) = self.peek() else {
                return if in_class { Err(ParseError::Unbalanced) } else { Ok(()) };
            };
            if t.is_sep("}") {
                if in_class {
                    self.pos += 1;
                    return Ok(());
                }
                return Err(ParseError::Unbalanced);
            }
            if t.is_sep(";") {
                self.pos += 1;
                continue;
            }
            if t.is_kw("package") || t.is_kw("import") {
                self.skip_statement()?;
                continue;
            }
            let start = self.pos;
            self.modifiers();
            if self.at_sep("{") {
                self.skip_group()?;
                continue;
            }
            if self.at_kw("class") || self.at_kw("interface") || self.at_kw("enum") || self.at_record() || self.at_sep("@") {
                self.type_declaration(out)?;
                continue;
            }
            if self.at_op("<") {
                self.skip_type_args()?;
            }
            match self.method_after_modifiers(start)? {
                Some(m) => out.push(m),
                None => {}
            }
        }
    }

    fn at_record(&self) -> bool {
        self.peek().is_some_and(|t| t.is_ident() && t.lexeme == "record")
            && self.peek_at(1).is_some_and(Token::is_ident)
            && self.peek_at(2).is_some_and(|t| t.is_sep("(") || t.is_op("<"))
    }

    fn type_declaration(&mut self, out: &mut Vec<MethodDecl>) -> Result<(), ParseError> {
        let is_enum = self.at_kw("enum");
        // header: everything up to the body brace
        while !self.at_sep("{") {
            if self.peek().is_none() {
                return Err(ParseError::Eof("{"));
            }
            if self.at_sep("(") {
                self.skip_group()?;
            } else {
                self.pos += 1;
            }
        }
        self.pos += 1;
        if is_enum {
            // constants up to `;` or the closing brace
            loop {
                match self.peek() {
                    None => return Err(ParseError::Unbalanced),
                    Some(t) if t.is_sep(";") => {
                        self.pos += 1;
                        break;
                    }
                    Some(t) if t.is_sep("}") => break,
                    Some(t) if t.is_sep("(") || t.is_sep("{") => self.skip_group()?,
                    Some(_) => self.pos += 1,
                }
            }
        }
        self.members(true, out)
    }

    /// Parses a member after its modifiers: a method or constructor with a
    /// body yields `Some`, fields and bodiless methods yield `None`.
    fn method_after_modifiers(&mut self, start: usize) -> Result<Option<MethodDecl>, ParseError> {
        let name = if self.at_ident() && self.peek_at(1).is_some_and(|t| t.is_sep("(")) {
            self.expect_ident()?
        } else {
            self.parse_type()?;
            if !(self.at_ident() && self.peek_at(1).is_some_and(|t| t.is_sep("("))) {
                // field
                self.skip_statement()?;
                return Ok(None);
            }
            self.expect_ident()?
        };
        let params = self.parameters()?;
        while self.at_sep("[") {
            self.skip_group()?;
        }
        if self.at_kw("throws") {
            while !(self.at_sep("{") || self.at_sep(";")) {
                if self.bump().is_none() {
                    return Err(ParseError::Eof("method body"));
                }
            }
        }
        if self.at_kw("default") {
            self.skip_statement()?;
            return Ok(None);
        }
        if self.eat_sep(";") {
            return Ok(None);
        }
        let body = self.block()?;
        let param_count = params.len();
        let mut children = params;
        children.push(body);
        Ok(Some(MethodDecl {
            name: name.to_string(),
            param_count,
            ast: AstNode::with_children(NodeType::Method, name, children),
            tokens: self.toks[start..self.pos].to_vec(),
        }))
    }

    fn parameters(&mut self) -> Result<Vec<AstNode>, ParseError> {
        self.expect_sep("(")?;
        let mut params = Vec::new();
        if self.eat_sep(")") {
            return Ok(params);
        }
        loop {
            while self.at_kw("final") {
                self.pos += 1;
            }
            let mut ty = self.parse_type()?;
            if self.eat_sep("...") {
                ty.push_str("...");
            }
            // receiver parameter `Foo this`
            let name = if self.at_kw("this") {
                self.pos += 1;
                "this"
            } else {
                self.expect_ident()?
            };
            while self.at_sep("[") && self.peek_at(1).is_some_and(|t| t.is_sep("]")) {
                self.pos += 2;
                ty.push_str("[]");
            }
            params.push(AstNode::with_children(
                NodeType::Parameter,
                name,
                vec![AstNode::leaf(NodeType::TypeAccess, ty)],
            ));
            if self.eat_sep(")") {
                return Ok(params);
            }
            self.expect_sep(",")?;
        }
    }

    // ---- types ---------------------------------------------------------

    fn skip_type_args(&mut self) -> Result<String, ParseError> {
        let mut depth: i32 = 0;
        let mut text = String::new();
        loop {
            let Some(t) = self.peek() else {
                return Err(ParseError::Eof(">"));
            };
            let ok = match t.kind {
                TokenKind::Operator => match t.lexeme.as_str() {
                    "<" => {
                        depth += 1;
                        true
                    }
                    ">" => {
                        depth -= 1;
                        true
                    }
                    ">>" => {
                        depth -= 2;
                        true
                    }
                    ">>>" => {
                        depth -= 3;
                        true
                    }
                    "?" | "&" => true,
                    _ => false,
                },
                TokenKind::Identifier => true,
                TokenKind::Keyword => {
                    matches!(t.lexeme.as_str(), "extends" | "super")
                        || crate::lexabs::KEYWORDS.contains(&t.lexeme.as_str())
                            && is_primitive(&t.lexeme)
                }
                TokenKind::Separator => matches!(t.lexeme.as_str(), "," | "." | "[" | "]"),
                _ => false,
            };
            if !ok || depth < 0 {
                return self.unexpected("type argument");
            }
            if t.kind == TokenKind::Keyword && (t.lexeme == "extends" || t.lexeme == "super") {
                text.push(' ');
                text.push_str(&t.lexeme);
                text.push(' ');
            } else {
                text.push_str(&t.lexeme);
                if t.is_sep(",") {
                    text.push(' ');
                }
            }
            self.pos += 1;
            if depth == 0 {
                return Ok(text);
            }
        }
    }

    /// Parses a type and returns its compact spelling (`Map<K, V>[]`).
    fn parse_type(&mut self) -> Result<String, ParseError> {
        let mut text = String::new();
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && is_primitive(&t.lexeme) => {
                text.push_str(&t.lexeme);
                self.pos += 1;
            }
            Some(t) if t.is_ident() => {
                text.push_str(&t.lexeme);
                self.pos += 1;
                loop {
                    if self.at_op("<") {
                        text.push_str(&self.skip_type_args()?);
                    }
                    if self.at_sep(".") && self.peek_at(1).is_some_and(Token::is_ident) {
                        text.push('.');
                        text.push_str(&self.toks[self.pos + 1].lexeme);
                        self.pos += 2;
                    } else {
                        break;
                    }
                }
            }
            _ => return self.unexpected("type"),
        }
        while self.at_sep("[") && self.peek_at(1).is_some_and(|t| t.is_sep("]")) {
            self.pos += 2;
            text.push_str("[]");
        }
        Ok(text)
    }

    /// Attempts `parse_type`; restores the position on failure.
    fn try_type(&mut self) -> Option<String> {
        let save = self.pos;
        match self.parse_type() {
            Ok(t) => Some(t),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> Result<AstNode, ParseError> {
        self.expect_sep("{")?;
        let mut children = Vec::new();
        while !self.eat_sep("}") {
            if self.peek().is_none() {
                return Err(ParseError::Unbalanced);
            }
            children.extend(self.statement()?);
        }
        Ok(AstNode::with_children(NodeType::Block, "", children))
    }

    /// A statement body that must produce exactly one node.
    fn sub_statement(&mut self) -> Result<AstNode, ParseError> {
        let mut nodes = self.statement()?;
        Ok(match nodes.len() {
            1 => nodes.pop().unwrap_or_else(|| AstNode::new(NodeType::Block, "")),
            _ => AstNode::with_children(NodeType::Block, "", nodes),
        })
    }

    fn paren_expr(&mut self) -> Result<AstNode, ParseError> {
        self.expect_sep("(")?;
        let e = self.expr()?;
        self.expect_sep(")")?;
        Ok(e)
    }

    fn statement(&mut self) -> Result<Vec<AstNode>, ParseError> {
        let Some(t) = self.peek() else {
            return Err(ParseError::Eof("statement"));
        };
        if t.is_sep("{") {
            return Ok(vec![self.block()?]);
        }
        if t.is_sep(";") {
            self.pos += 1;
            return Ok(Vec::new());
        }
        if t.kind == TokenKind::Keyword {
            match t.lexeme.as_str() {
                "if" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let then = self.sub_statement()?;
                    let mut children = vec![cond, then];
                    if self.at_kw("else") {
                        self.pos += 1;
                        children.push(self.sub_statement()?);
                    }
                    return Ok(vec![AstNode::with_children(NodeType::If, "", children)]);
                }
                "while" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let body = self.sub_statement()?;
                    return Ok(vec![AstNode::with_children(NodeType::While, "", vec![cond, body])]);
                }
                "do" => {
                    self.pos += 1;
                    let body = self.sub_statement()?;
                    if !self.at_kw("while") {
                        return self.unexpected("while");
                    }
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    self.expect_sep(";")?;
                    return Ok(vec![AstNode::with_children(NodeType::While, "do", vec![body, cond])]);
                }
                "for" => return Ok(vec![self.for_statement()?]),
                "switch" => return Ok(vec![self.switch_statement()?]),
                "try" => return Ok(vec![self.try_statement()?]),
                "return" => {
                    self.pos += 1;
                    let mut children = Vec::new();
                    if !self.at_sep(";") {
                        children.push(self.expr()?);
                    }
                    self.expect_sep(";")?;
                    return Ok(vec![AstNode::with_children(NodeType::Return, "", children)]);
                }
                "throw" => {
                    self.pos += 1;
                    let e = self.expr()?;
                    self.expect_sep(";")?;
                    return Ok(vec![AstNode::with_children(NodeType::Block, "throw", vec![e])]);
                }
                "break" | "continue" => {
                    self.pos += 1;
                    let mut label = t.lexeme.clone();
                    if self.at_ident() {
                        label.push(' ');
                        label.push_str(self.expect_ident()?);
                    }
                    self.expect_sep(";")?;
                    return Ok(vec![AstNode::new(NodeType::Block, label)]);
                }
                "synchronized" => {
                    self.pos += 1;
                    let lock = self.paren_expr()?;
                    let body = self.block()?;
                    return Ok(vec![AstNode::with_children(NodeType::Block, "synchronized", vec![lock, body])]);
                }
                "assert" => {
                    self.pos += 1;
                    let mut children = vec![self.expr()?];
                    if self.at_op(":") {
                        self.pos += 1;
                        children.push(self.expr()?);
                    }
                    self.expect_sep(";")?;
                    return Ok(vec![AstNode::with_children(NodeType::Block, "assert", children)]);
                }
                "class" | "interface" | "enum" | "abstract" | "static" => {
                    // local type declaration, kept opaque
                    let start = self.pos;
                    while !self.at_sep("{") {
                        if self.bump().is_none() {
                            return Err(ParseError::Eof("{"));
                        }
                    }
                    self.skip_group()?;
                    let label = crate::lexabs::join_lexemes(&self.toks[start..self.pos]);
                    return Ok(vec![AstNode::new(NodeType::Block, label)]);
                }
                _ => {}
            }
        }
        // labeled statement
        if t.is_ident() && self.peek_at(1).is_some_and(|n| n.is_op(":")) {
            let mut label = t.lexeme.clone();
            label.push(':');
            self.pos += 2;
            let body = self.sub_statement()?;
            return Ok(vec![AstNode::with_children(NodeType::Block, label, vec![body])]);
        }
        if let Some(decls) = self.try_local_declaration()? {
            self.expect_sep(";")?;
            return Ok(decls);
        }
        let e = self.expr()?;
        self.expect_sep(";")?;
        Ok(vec![e])
    }

    /// Recognizes `[final] Type name ...` and parses its declarators, leaving
    /// the terminator (`;`, `:` or `)`) unconsumed. Returns `None` without
    /// moving when the tokens are not a declaration.
    fn try_local_declaration(&mut self) -> Result<Option<Vec<AstNode>>, ParseError> {
        let save = self.pos;
        while self.at_kw("final") {
            self.pos += 1;
        }
        let looks_like_type = self
            .peek()
            .is_some_and(|t| t.is_ident() || (t.kind == TokenKind::Keyword && is_primitive(&t.lexeme)));
        if !looks_like_type {
            self.pos = save;
            return Ok(None);
        }
        let Some(ty) = self.try_type() else {
            self.pos = save;
            return Ok(None);
        };
        let declares = self.at_ident()
            && self.peek_at(1).is_some_and(|t| {
                t.is_op("=") || t.is_sep(";") || t.is_sep(",") || t.is_sep("[") || t.is_op(":") || t.is_sep(")")
            });
        if !declares {
            self.pos = save;
            return Ok(None);
        }
        let mut decls = Vec::new();
        loop {
            let name = self.expect_ident()?;
            let mut ty = ty.clone();
            while self.at_sep("[") && self.peek_at(1).is_some_and(|t| t.is_sep("]")) {
                self.pos += 2;
                ty.push_str("[]");
            }
            let mut children = vec![AstNode::leaf(NodeType::TypeAccess, ty)];
            if self.at_op("=") {
                self.pos += 1;
                children.push(self.initializer()?);
            }
            decls.push(AstNode::with_children(NodeType::LocalVariable, name, children));
            if !self.eat_sep(",") {
                return Ok(Some(decls));
            }
        }
    }

    fn initializer(&mut self) -> Result<AstNode, ParseError> {
        if self.at_sep("{") {
            self.array_initializer()
        } else {
            self.expr()
        }
    }

    fn array_initializer(&mut self) -> Result<AstNode, ParseError> {
        self.expect_sep("{")?;
        let mut items = Vec::new();
        while !self.eat_sep("}") {
            items.push(self.initializer()?);
            if !self.eat_sep(",") {
                self.expect_sep("}")?;
                break;
            }
        }
        Ok(AstNode::with_children(NodeType::Block, "{}", items))
    }

    fn for_statement(&mut self) -> Result<AstNode, ParseError> {
        self.pos += 1;
        self.expect_sep("(")?;
        let mut children = Vec::new();
        if let Some(mut decls) = self.try_local_declaration()? {
            if self.at_op(":") {
                self.pos += 1;
                let iterable = self.expr()?;
                self.expect_sep(")")?;
                let body = self.sub_statement()?;
                let var = decls.pop().ok_or(ParseError::Eof("loop variable"))?;
                return Ok(AstNode::with_children(NodeType::For, ":", vec![var, iterable, body]));
            }
            children.extend(decls);
        } else {
            while !self.at_sep(";") {
                children.push(self.expr()?);
                if !self.eat_sep(",") {
                    break;
                }
            }
        }
        self.expect_sep(";")?;
        if !self.at_sep(";") {
            children.push(self.expr()?);
        } else {
            children.push(AstNode::leaf(NodeType::Literal, "true"));
        }
        self.expect_sep(";")?;
        while !self.at_sep(")") {
            children.push(self.expr()?);
            if !self.eat_sep(",") {
                break;
            }
        }
        self.expect_sep(")")?;
        children.push(self.sub_statement()?);
        Ok(AstNode::with_children(NodeType::For, "", children))
    }

    fn switch_statement(&mut self) -> Result<AstNode, ParseError> {
        self.pos += 1;
        let selector = self.paren_expr()?;
        self.expect_sep("{")?;
        let mut children = vec![selector];
        while !self.eat_sep("}") {
            let label = if self.at_kw("default") {
                self.pos += 1;
                "default"
            } else if self.at_kw("case") {
                self.pos += 1;
                ""
            } else {
                return self.unexpected("case");
            };
            let mut case = AstNode::new(NodeType::Case, label);
            if label.is_empty() {
                loop {
                    case.children.push(self.ternary()?);
                    if !self.eat_sep(",") {
                        break;
                    }
                }
            }
            if self.at_op("->") {
                self.pos += 1;
                case.children.push(self.sub_statement()?);
            } else {
                if !self.at_op(":") {
                    return self.unexpected(":");
                }
                self.pos += 1;
                while !(self.at_kw("case") || self.at_kw("default") || self.at_sep("}")) {
                    if self.peek().is_none() {
                        return Err(ParseError::Unbalanced);
                    }
                    case.children.extend(self.statement()?);
                }
            }
            children.push(case);
        }
        Ok(AstNode::with_children(NodeType::Switch, "", children))
    }

    fn try_statement(&mut self) -> Result<AstNode, ParseError> {
        self.pos += 1;
        let mut children = Vec::new();
        if self.eat_sep("(") {
            while !self.eat_sep(")") {
                match self.try_local_declaration()? {
                    Some(d) => children.extend(d),
                    None => children.push(self.expr()?),
                }
                if !self.eat_sep(";") {
                    self.expect_sep(")")?;
                    break;
                }
            }
        }
        children.push(self.block()?);
        while self.at_kw("catch") {
            self.pos += 1;
            self.expect_sep("(")?;
            while self.at_kw("final") {
                self.pos += 1;
            }
            let mut types = self.parse_type()?;
            while self.at_op("|") {
                self.pos += 1;
                types.push('|');
                types.push_str(&self.parse_type()?);
            }
            let name = self.expect_ident()?;
            self.expect_sep(")")?;
            let body = self.block()?;
            children.push(AstNode::with_children(
                NodeType::Catch,
                name,
                vec![AstNode::leaf(NodeType::TypeAccess, types), body],
            ));
        }
        if self.at_kw("finally") {
            self.pos += 1;
            let mut fin = self.block()?;
            fin.label = String::from("finally");
            children.push(fin);
        }
        Ok(AstNode::with_children(NodeType::Try, "", children))
    }

    // ---- expressions ---------------------------------------------------

    fn expr(&mut self) -> Result<AstNode, ParseError> {
        if let Some(l) = self.try_lambda()? {
            return Ok(l);
        }
        let lhs = self.ternary()?;
        if self.peek().is_some_and(is_assignment_op) {
            let op = self.bump().map(|t| t.lexeme.clone()).unwrap_or_default();
            let rhs = self.expr()?;
            return Ok(AstNode::with_children(NodeType::Assignment, op, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn try_lambda(&mut self) -> Result<Option<AstNode>, ParseError> {
        let start = self.pos;
        let params_end = if self.at_ident() && self.peek_at(1).is_some_and(|t| t.is_op("->")) {
            self.pos + 1
        } else if self.at_sep("(") {
            let save = self.pos;
            self.skip_group()?;
            let end = self.pos;
            self.pos = save;
            if self.toks.get(end).is_some_and(|t| t.is_op("->")) {
                end
            } else {
                return Ok(None);
            }
        } else {
            return Ok(None);
        };
        let mut label = String::new();
        for t in &self.toks[start..params_end] {
            label.push_str(&t.lexeme);
        }
        label.push_str("->");
        self.pos = params_end + 1;
        let body = if self.at_sep("{") { self.block()? } else { self.expr()? };
        Ok(Some(AstNode::with_children(NodeType::Block, label, vec![body])))
    }

    fn ternary(&mut self) -> Result<AstNode, ParseError> {
        let cond = self.binary(1)?;
        if self.at_op("?") {
            self.pos += 1;
            let a = self.expr()?;
            if !self.at_op(":") {
                return self.unexpected(":");
            }
            self.pos += 1;
            let b = match self.try_lambda()? {
                Some(l) => l,
                None => self.ternary()?,
            };
            return Ok(AstNode::with_children(NodeType::Conditional, "", vec![cond, a, b]));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> Result<AstNode, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let Some(op) = self.peek() else { break };
            let Some(prec) = binary_precedence(op) else { break };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            if op.is_kw("instanceof") {
                while self.at_kw("final") {
                    self.pos += 1;
                }
                let mut ty = self.parse_type()?;
                if self.at_ident() {
                    ty.push(' ');
                    ty.push_str(self.expect_ident()?);
                }
                lhs = AstNode::with_children(
                    NodeType::BinaryOperator,
                    "instanceof",
                    vec![lhs, AstNode::leaf(NodeType::TypeAccess, ty)],
                );
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = AstNode::with_children(NodeType::BinaryOperator, op.lexeme.clone(), vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<AstNode, ParseError> {
        let Some(t) = self.peek() else {
            return Err(ParseError::Eof("expression"));
        };
        if t.kind == TokenKind::Operator && matches!(t.lexeme.as_str(), "+" | "-" | "!" | "~" | "++" | "--") {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(AstNode::with_children(NodeType::UnaryOperator, t.lexeme.clone(), vec![e]));
        }
        if t.is_sep("(") {
            if let Some(cast) = self.try_cast()? {
                return Ok(cast);
            }
        }
        let prim = self.primary()?;
        self.postfix(prim)
    }

    fn try_cast(&mut self) -> Result<Option<AstNode>, ParseError> {
        let save = self.pos;
        self.pos += 1;
        let primitive = self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Keyword && is_primitive(&t.lexeme));
        let Some(mut ty) = self.try_type() else {
            self.pos = save;
            return Ok(None);
        };
        while self.at_op("&") {
            self.pos += 1;
            match self.try_type() {
                Some(extra) => {
                    ty.push('&');
                    ty.push_str(&extra);
                }
                None => {
                    self.pos = save;
                    return Ok(None);
                }
            }
        }
        if !self.at_sep(")") {
            self.pos = save;
            return Ok(None);
        }
        let follows_operand = self.peek_at(1).is_some_and(|n| match n.kind {
            TokenKind::Identifier
            | TokenKind::StringLiteral
            | TokenKind::CharLiteral
            | TokenKind::IntLiteral
            | TokenKind::FloatLiteral
            | TokenKind::BoolLiteral => true,
            TokenKind::Keyword => matches!(n.lexeme.as_str(), "this" | "super" | "new" | "null")
                || is_primitive(&n.lexeme),
            TokenKind::Separator => n.lexeme == "(",
            TokenKind::Operator => {
                matches!(n.lexeme.as_str(), "!" | "~") || (primitive && matches!(n.lexeme.as_str(), "+" | "-" | "++" | "--"))
            }
        });
        if !follows_operand {
            self.pos = save;
            return Ok(None);
        }
        self.pos += 1;
        let operand = match self.try_lambda()? {
            Some(l) => l,
            None => self.unary()?,
        };
        Ok(Some(AstNode::with_children(
            NodeType::UnaryOperator,
            "cast",
            vec![AstNode::leaf(NodeType::TypeAccess, ty), operand],
        )))
    }

    fn arguments(&mut self) -> Result<Vec<AstNode>, ParseError> {
        self.expect_sep("(")?;
        let mut args = Vec::new();
        if self.eat_sep(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sep(")") {
                return Ok(args);
            }
            self.expect_sep(",")?;
        }
    }

    fn primary(&mut self) -> Result<AstNode, ParseError> {
        let Some(t) = self.peek() else {
            return Err(ParseError::Eof("expression"));
        };
        match t.kind {
            TokenKind::StringLiteral
            | TokenKind::CharLiteral
            | TokenKind::IntLiteral
            | TokenKind::FloatLiteral
            | TokenKind::BoolLiteral => {
                self.pos += 1;
                Ok(AstNode::leaf(NodeType::Literal, t.lexeme.clone()))
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.at_sep("(") {
                    let args = self.arguments()?;
                    return Ok(AstNode::with_children(NodeType::Invocation, t.lexeme.clone(), args));
                }
                let type_like = t.lexeme.starts_with(|c: char| c.is_uppercase())
                    && (self.at_sep(".") || self.at_sep("::"))
                    && !t.lexeme.chars().all(|c| !c.is_lowercase());
                let kind = if type_like { NodeType::TypeAccess } else { NodeType::VariableRead };
                Ok(AstNode::leaf(kind, t.lexeme.clone()))
            }
            TokenKind::Keyword => match t.lexeme.as_str() {
                "null" => {
                    self.pos += 1;
                    Ok(AstNode::leaf(NodeType::Literal, "null"))
                }
                "this" | "super" => {
                    self.pos += 1;
                    if self.at_sep("(") {
                        let args = self.arguments()?;
                        return Ok(AstNode::with_children(NodeType::Invocation, t.lexeme.clone(), args));
                    }
                    Ok(AstNode::leaf(NodeType::ThisAccess, t.lexeme.clone()))
                }
                "new" => self.creation(),
                kw if is_primitive(kw) => {
                    // int.class, int[].class
                    let ty = self.parse_type()?;
                    Ok(AstNode::leaf(NodeType::TypeAccess, ty))
                }
                _ => self.unexpected("expression"),
            },
            TokenKind::Separator if t.lexeme == "(" => self.paren_expr(),
            _ => self.unexpected("expression"),
        }
    }

    fn creation(&mut self) -> Result<AstNode, ParseError> {
        self.pos += 1;
        let mut ty = match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && is_primitive(&t.lexeme) => {
                self.pos += 1;
                t.lexeme.clone()
            }
            Some(t) if t.is_ident() => {
                self.pos += 1;
                let mut s = t.lexeme.clone();
                loop {
                    if self.at_op("<") {
                        s.push_str(&self.skip_type_args()?);
                    }
                    if self.at_sep(".") && self.peek_at(1).is_some_and(Token::is_ident) {
                        s.push('.');
                        s.push_str(&self.toks[self.pos + 1].lexeme);
                        self.pos += 2;
                    } else {
                        break;
                    }
                }
                s
            }
            _ => return self.unexpected("type"),
        };
        if self.at_sep("[") {
            let mut children = Vec::new();
            while self.eat_sep("[") {
                if !self.at_sep("]") {
                    children.push(self.expr()?);
                }
                self.expect_sep("]")?;
                ty.push_str("[]");
            }
            if self.at_sep("{") {
                children.push(self.array_initializer()?);
            }
            let mut label = String::from("new ");
            label.push_str(&ty);
            return Ok(AstNode::with_children(NodeType::Invocation, label, children));
        }
        let mut children = self.arguments()?;
        if self.at_sep("{") {
            let start = self.pos;
            self.skip_group()?;
            let body = crate::lexabs::join_lexemes(&self.toks[start..self.pos]);
            children.push(AstNode::new(NodeType::Block, body));
        }
        let mut label = String::from("new ");
        label.push_str(&ty);
        Ok(AstNode::with_children(NodeType::Invocation, label, children))
    }

    fn postfix(&mut self, mut node: AstNode) -> Result<AstNode, ParseError> {
        loop {
            if self.at_sep(".") {
                self.pos += 1;
                if self.at_op("<") {
                    self.skip_type_args()?;
                }
                let Some(t) = self.peek() else {
                    return Err(ParseError::Eof("member"));
                };
                if t.is_ident() {
                    self.pos += 1;
                    if self.at_sep("(") {
                        let mut children = vec![node];
                        children.extend(self.arguments()?);
                        node = AstNode::with_children(NodeType::Invocation, t.lexeme.clone(), children);
                    } else {
                        node = AstNode::with_children(NodeType::FieldRead, t.lexeme.clone(), vec![node]);
                    }
                } else if t.is_kw("class") || t.is_kw("this") {
                    self.pos += 1;
                    node = AstNode::with_children(NodeType::FieldRead, t.lexeme.clone(), vec![node]);
                } else if t.is_kw("new") {
                    let inner = self.creation()?;
                    node = AstNode::with_children(NodeType::Invocation, inner.label.clone(), {
                        let mut c = vec![node];
                        c.extend(inner.children);
                        c
                    });
                } else if t.is_kw("super") {
                    self.pos += 1;
                    node = AstNode::with_children(NodeType::ThisAccess, "super", vec![node]);
                } else {
                    return self.unexpected("member name");
                }
            } else if self.at_sep("[") {
                self.pos += 1;
                let idx = self.expr()?;
                self.expect_sep("]")?;
                node = AstNode::with_children(NodeType::BinaryOperator, "[]", vec![node, idx]);
            } else if self.at_op("++") || self.at_op("--") {
                let op = self.bump().map(|t| t.lexeme.clone()).unwrap_or_default();
                let mut label = String::from("post");
                label.push_str(&op);
                node = AstNode::with_children(NodeType::UnaryOperator, label, vec![node]);
            } else if self.at_sep("::") {
                self.pos += 1;
                let name = match self.peek() {
                    Some(t) if t.is_ident() || t.is_kw("new") => {
                        self.pos += 1;
                        t.lexeme.clone()
                    }
                    _ => return self.unexpected("method reference"),
                };
                let mut label = String::from("::");
                label.push_str(&name);
                node = AstNode::with_children(NodeType::Block, label, vec![node]);
            } else {
                return Ok(node);
            }
        }
    }
}

fn is_primitive(word: &str) -> bool {
    matches!(
        word,
        "boolean" | "byte" | "char" | "double" | "float" | "int" | "long" | "short" | "void"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::format;

    fn one(src: &str) -> AstNode {
        let mut v = parse_methods(src).unwrap();
        assert_eq!(v.len(), 1, "{src}");
        v.pop().unwrap()
    }

    #[test]
    fn return_literal() {
        assert_eq!(one("int f(){return 0;}").to_string(), "Method(f)[Block[Return[Literal(0)]]]");
    }

    #[test]
    fn counts_methods_and_constructors() {
        let src = "package a.b; import java.util.*; public class A { private int x = 3; \
                   A(int x) { this.x = x; } public int get() { return x; } abstract void g(); \
                   static class B { void h() { } } enum E { P, Q; void k() {} } }";
        let ms = parse_methods(src).unwrap();
        let names: Vec<&str> = ms.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(names, vec!["A", "get", "h", "k"]);
        assert_eq!(parse_methods("").unwrap(), vec![]);
        assert_eq!(parse_methods("class A { void f() {} void g() {} }").unwrap().len(), 2);
    }

    #[test]
    fn unbalanced_is_an_error() {
        assert_eq!(parse_methods("class A { void f() { }"), Err(ParseError::Unbalanced));
        assert_eq!(parse_methods("void f() { } }"), Err(ParseError::Unbalanced));
    }

    #[test]
    fn statements() {
        let m = one(
            "void f(List<String> xs, int... n) throws IOException {
                for (int i = 0; i < n.length; i++) { xs.add(\"a\"); }
                for (String s : xs) if (s == null) continue; else break;
                while (true) { x--; }
                do { y = y + 1; } while (y < 3);
                switch (k) { case 1: case 2: a(); break; default: b(); }
                try (Reader r = open()) { r.read(); } catch (IOException | RuntimeException e) { throw e; } finally { close(); }
                int[] arr = {1, 2}, b = new int[3];
                Object o = (String) xs.get(0);
                Runnable r = () -> { run(); };
                xs.forEach(s -> System.out.println(s));
                label: for (;;) { }
                return cond ? a.b : this.c[2];
            }",
        );
        let s = format!("{m}");
        assert!(s.starts_with("Method(f)[Parameter(xs)[TypeAccess(List<String>)], Parameter(n)[TypeAccess(int...)], Block["));
        for needle in [
            "For[LocalVariable(i)",
            "For(:)[LocalVariable(s)",
            "While[Literal(true)",
            "While(do)",
            "Switch[VariableRead(k), Case[Literal(1)], Case[Literal(2), Invocation(a), Block(break)]",
            "Catch(e)[TypeAccess(IOException|RuntimeException)",
            "Block(finally)",
            "LocalVariable(arr)[TypeAccess(int[]), Block({})[Literal(1), Literal(2)]]",
            "LocalVariable(b)[TypeAccess(int[]), Invocation(new int[])[Literal(3)]]",
            "UnaryOperator(cast)[TypeAccess(String), Invocation(get)",
            "Block(()->)[Block[Invocation(run)]]",
            "Block(s->)[Invocation(println)[FieldRead(out)[TypeAccess(System)]",
            "Block(label:)",
            "Return[Conditional[VariableRead(cond), FieldRead(b)[VariableRead(a)], BinaryOperator([])[FieldRead(c)[ThisAccess(this)], Literal(2)]]]",
        ] {
            assert!(s.contains(needle), "missing {needle} in {s}");
        }
    }

    #[test]
    fn precedence() {
        let m = one("int f() { return a + b * c == d && !e || f; }");
        assert_eq!(
            m.to_string(),
            "Method(f)[Block[Return[BinaryOperator(||)[BinaryOperator(&&)[BinaryOperator(==)[BinaryOperator(+)[VariableRead(a), BinaryOperator(*)[VariableRead(b), VariableRead(c)]], VariableRead(d)], UnaryOperator(!)[VariableRead(e)]], VariableRead(f)]]]]"
        );
    }

    #[test]
    fn generics_comparisons_and_casts() {
        let m = one("boolean f(Map<String, List<Integer>> m) { Map<String, List<Integer>> c = new HashMap<>(); return a < b && (int) x > -1 && (y) + 1 > 0; }");
        let s = m.to_string();
        assert!(s.contains("LocalVariable(c)[TypeAccess(Map<String, List<Integer>>), Invocation(new HashMap<>)]"), "{s}");
        assert!(s.contains("UnaryOperator(cast)[TypeAccess(int), VariableRead(x)]"), "{s}");
        assert!(s.contains("BinaryOperator(+)[VariableRead(y), Literal(1)]"), "{s}");
    }

    #[test]
    fn anonymous_class_is_opaque() {
        let m = one("void f() { run(new Runnable() { public void run() { go(); } }); }");
        let s = m.to_string();
        assert!(s.contains("Invocation(new Runnable)[Block({ public void run ( ) { go ( ) ; } })]"), "{s}");
    }

    #[test]
    fn single_method_tokens() {
        let toks = tokenize("public static int f(int a) { return a; }").unwrap();
        let d = parse_single_method(&toks).unwrap();
        assert_eq!(d.name, "f");
        assert_eq!(d.param_count, 1);
        assert_eq!(d.tokens, toks);
        assert!(parse_single_method(&tokenize("int f() { } int g() { }").unwrap()).is_err());
        assert!(parse_single_method(&tokenize("int f() { return }").unwrap()).is_err());
    }

    #[test]
    fn method_tokens_cover_the_declaration() {
        let toks = tokenize("class A { @Override public void f() { g(); } }").unwrap();
        let ds = parse_method_decls(&toks).unwrap();
        assert_eq!(crate::lexabs::join_lexemes(&ds[0].tokens), "public void f ( ) { g ( ) ; }");
    }
}
