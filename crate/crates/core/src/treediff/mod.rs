//! Method-level typed ASTs, method pairing between file versions, and edit
//! scripts between two methods.

mod ast;
mod diff;
mod edit;
mod pairs;
mod parser;

pub use ast::{AstNode, NodeType};
pub use diff::diff;
pub use edit::{apply, ApplyError, EditAction, EditKind, EditOp, NodeId, Operation};
pub use pairs::{bigram_similarity, map_method_pairs, pair_methods, MethodPair, MethodPairList, RENAME_THRESHOLD};
pub use parser::{parse_method_decls, parse_methods, parse_single_method, MethodDecl, ParseError};
