use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The closed node-type taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeType {
    Method,
    Parameter,
    Block,
    If,
    While,
    For,
    Switch,
    Case,
    Try,
    Catch,
    Return,
    LocalVariable,
    Invocation,
    FieldRead,
    VariableRead,
    TypeAccess,
    ThisAccess,
    BinaryOperator,
    UnaryOperator,
    Assignment,
    Literal,
    Conditional,
    Class,
}

impl NodeType {
    pub const ALL: [NodeType; 23] = [
        NodeType::Method,
        NodeType::Parameter,
        NodeType::Block,
        NodeType::If,
        NodeType::While,
        NodeType::For,
        NodeType::Switch,
        NodeType::Case,
        NodeType::Try,
        NodeType::Catch,
        NodeType::Return,
        NodeType::LocalVariable,
        NodeType::Invocation,
        NodeType::FieldRead,
        NodeType::VariableRead,
        NodeType::TypeAccess,
        NodeType::ThisAccess,
        NodeType::BinaryOperator,
        NodeType::UnaryOperator,
        NodeType::Assignment,
        NodeType::Literal,
        NodeType::Conditional,
        NodeType::Class,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeType::Method => "Method",
            NodeType::Parameter => "Parameter",
            NodeType::Block => "Block",
            NodeType::If => "If",
            NodeType::While => "While",
            NodeType::For => "For",
            NodeType::Switch => "Switch",
            NodeType::Case => "Case",
            NodeType::Try => "Try",
            NodeType::Catch => "Catch",
            NodeType::Return => "Return",
            NodeType::LocalVariable => "LocalVariable",
            NodeType::Invocation => "Invocation",
            NodeType::FieldRead => "FieldRead",
            NodeType::VariableRead => "VariableRead",
            NodeType::TypeAccess => "TypeAccess",
            NodeType::ThisAccess => "ThisAccess",
            NodeType::BinaryOperator => "BinaryOperator",
            NodeType::UnaryOperator => "UnaryOperator",
            NodeType::Assignment => "Assignment",
            NodeType::Literal => "Literal",
            NodeType::Conditional => "Conditional",
            NodeType::Class => "Class",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeType {
    type Err = String;

    /// Accepts plain names and Spoon implementation-class names such as
    /// `CtInvocationImpl`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let plain = s
            .strip_prefix("Ct")
            .and_then(|r| r.strip_suffix("Impl"))
            .unwrap_or(s);
        NodeType::ALL
            .into_iter()
            .find(|t| t.name() == plain)
            .ok_or_else(|| alloc::format!("unknown node type {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AstNode {
    pub node_type: NodeType,
    pub label: String,
    pub children: Vec<AstNode>,
}

impl AstNode {
    pub fn new(node_type: NodeType, label: impl Into<String>) -> Self {
        AstNode {
            node_type,
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn with_children(node_type: NodeType, label: impl Into<String>, children: Vec<AstNode>) -> Self {
        AstNode {
            node_type,
            label: label.into(),
            children,
        }
    }

    pub fn leaf(node_type: NodeType, label: impl Into<String>) -> Self {
        Self::new(node_type, label)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(AstNode::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(AstNode::height).max().unwrap_or(0)
    }

    /// Nodes in pre-order.
    pub fn preorder(&self) -> Vec<&AstNode> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = alloc::vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    /// Tree isomorphism on type, label and child order. Equivalent to `==`,
    /// spelled out for readability at call sites.
    pub fn isomorphic(&self, other: &AstNode) -> bool {
        self == other
    }
}

/// Compact S-expression rendering, e.g. `Method(f)[Block[Return[Literal(0)]]]`.
impl fmt::Display for AstNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.node_type.name())?;
        if !self.label.is_empty() {
            write!(f, "({})", self.label)?;
        }
        if !self.children.is_empty() {
            f.write_str("[")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}
