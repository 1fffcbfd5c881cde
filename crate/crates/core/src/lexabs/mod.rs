//! Tokenization, identifier-role classification, abstraction into the closed
//! vocabulary and concretization back to source.

mod abstraction;
mod concretize;
mod idioms;
mod lexer;
mod roles;
mod token;

pub use abstraction::{
    abstract_method, abstract_pair, AbstractId, AbstractedMethod, IdCategory, IdMapping, IdiomError, IdiomSet,
    MappingError,
};
pub use concretize::{concretize, placeholder_lexeme, pretty_print, substitute, UnmappableId};
pub use idioms::{base_idioms, mine_idioms, select_idioms, IdiomMiningError, LexemeCounts, BASE_IDIOMS};
pub use lexer::{join_lexemes, tokenize, LexError};
pub use roles::{classify_roles, Role};
pub use token::{is_keyword, Token, TokenKind, KEYWORDS, OPERATORS, SEPARATORS};
