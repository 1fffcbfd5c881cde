use alloc::string::String;
use core::fmt;

/// Lexical category of a [`Token`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Keyword,
    Separator,
    Operator,
    Identifier,
    StringLiteral,
    CharLiteral,
    IntLiteral,
    FloatLiteral,
    BoolLiteral,
}

impl TokenKind {
    pub fn is_literal(self) -> bool {
        matches!(
            self,
            TokenKind::StringLiteral
                | TokenKind::CharLiteral
                | TokenKind::IntLiteral
                | TokenKind::FloatLiteral
                | TokenKind::BoolLiteral
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub lexeme: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(kind: TokenKind, lexeme: impl Into<String>) -> Self {
        Token {
            lexeme: lexeme.into(),
            kind,
        }
    }

    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_sep(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Separator, lexeme)
    }

    pub fn is_op(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Operator, lexeme)
    }

    pub fn is_kw(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Keyword, lexeme)
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Identifier
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme)
    }
}

pub const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

pub const PRIMITIVE_TYPES: &[&str] = &[
    "boolean", "byte", "char", "double", "float", "int", "long", "short", "void",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

pub fn is_primitive_type(word: &str) -> bool {
    PRIMITIVE_TYPES.contains(&word)
}

pub const SEPARATORS: &[&str] = &["...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@"];

/// Operators ordered longest first so the lexer can take the maximal munch.
pub const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "->", "==", "<=", ">=", "!=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>", "=", ">", "<", "!", "~", "?", ":", "+", "-",
    "*", "/", "&", "|", "^", "%",
];
