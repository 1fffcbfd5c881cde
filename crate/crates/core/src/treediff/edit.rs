use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ast::{AstNode, NodeType};

/// Identifies a node while a script is applied: nodes of the original tree
/// are numbered in pre-order from 0, inserted nodes continue the numbering
/// in creation order.
pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EditKind {
    Update,
    Insert,
    Delete,
    Move,
}

impl EditKind {
    pub fn name(self) -> &'static str {
        match self {
            EditKind::Update => "Update",
            EditKind::Insert => "Insert",
            EditKind::Delete => "Delete",
            EditKind::Move => "Move",
        }
    }
}

impl fmt::Display for EditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EditKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Update" | "UPD" => Ok(EditKind::Update),
            "Insert" | "INS" => Ok(EditKind::Insert),
            "Delete" | "DEL" => Ok(EditKind::Delete),
            "Move" | "MOV" => Ok(EditKind::Move),
            _ => Err(alloc::format!("unknown edit kind {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditOp {
    Update {
        node: NodeId,
        new_label: String,
    },
    /// Inserts `tree` as a whole; its nodes take consecutive fresh ids
    /// starting at `node`, in pre-order.
    Insert {
        node: NodeId,
        parent: NodeId,
        index: usize,
        tree: AstNode,
    },
    /// Deletes the node together with everything still below it.
    Delete {
        node: NodeId,
    },
    Move {
        node: NodeId,
        parent: NodeId,
        index: usize,
        source_type: NodeType,
        target_type: NodeType,
    },
}

/// One edit action. `context_type` is the type of the parent the action
/// happens at; for a move that is the parent the node leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditAction {
    pub node_type: NodeType,
    pub context_type: NodeType,
    pub op: EditOp,
}

impl EditAction {
    pub fn kind(&self) -> EditKind {
        match self.op {
            EditOp::Update { .. } => EditKind::Update,
            EditOp::Insert { .. } => EditKind::Insert,
            EditOp::Delete { .. } => EditKind::Delete,
            EditOp::Move { .. } => EditKind::Move,
        }
    }

    pub fn operation(&self) -> Operation {
        Operation {
            kind: self.kind(),
            node_type: self.node_type,
            context_type: self.context_type,
        }
    }

    /// `KIND<TAB>node_type<TAB>context_type[<TAB>extra…]`. Updates carry the
    /// new label, moves carry source and target types.
    pub fn to_line(&self) -> String {
        let mut s = alloc::format!("{}\t{}\t{}", self.kind(), self.node_type, self.context_type);
        match &self.op {
            EditOp::Update { new_label, .. } => {
                s.push('\t');
                escape_into(&mut s, new_label);
            }
            EditOp::Move {
                source_type,
                target_type,
                ..
            } => {
                s.push('\t');
                s.push_str(source_type.name());
                s.push('\t');
                s.push_str(target_type.name());
            }
            _ => {}
        }
        s
    }
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

/// The (kind, node type, context type) triple used for operation statistics
/// and coverage, e.g. `Delete Invocation at Block`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Operation {
    pub kind: EditKind,
    pub node_type: NodeType,
    pub context_type: NodeType,
}

impl Operation {
    /// Reads the first three fields of a serialized action line.
    pub fn from_line(line: &str) -> Result<Operation, String> {
        let mut fields = line.split('\t');
        let mut next = |what: &str| fields.next().ok_or_else(|| alloc::format!("missing {what} in {line:?}"));
        let kind = next("kind")?.parse()?;
        let node_type = next("node type")?.parse()?;
        let context_type = next("context type")?.parse()?;
        Ok(Operation {
            kind,
            node_type,
            context_type,
        })
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prep = if self.kind == EditKind::Move { "from" } else { "at" };
        write!(f, "{} {} {} {}", self.kind, self.node_type, prep, self.context_type)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("action references missing node {0}")]
    MissingNode(NodeId),
    #[error("insert expected fresh id {expected}, action says {got}")]
    FreshId { expected: NodeId, got: NodeId },
    #[error("index {index} out of range for node {parent}")]
    BadIndex { parent: NodeId, index: usize },
    #[error("the root cannot be deleted or moved")]
    Root,
    #[error("node {0} cannot move below itself")]
    Cycle(NodeId),
}

#[derive(Clone, Debug)]
struct Slot {
    node_type: NodeType,
    label: String,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
}

/// Mutable id-addressed tree used both to generate and to replay scripts.
#[derive(Clone, Debug)]
pub(crate) struct Arena {
    slots: Vec<Option<Slot>>,
    root: NodeId,
}

impl Arena {
    pub(crate) fn from_tree(tree: &AstNode) -> Arena {
        let mut a = Arena {
            slots: Vec::with_capacity(tree.size()),
            root: 0,
        };
        a.graft(tree, None);
        a
    }

    fn graft(&mut self, tree: &AstNode, parent: Option<NodeId>) -> NodeId {
        let id = self.slots.len();
        self.slots.push(Some(Slot {
            node_type: tree.node_type,
            label: tree.label.clone(),
            parent,
            children: Vec::with_capacity(tree.children.len()),
        }));
        for c in &tree.children {
            let cid = self.graft(c, Some(id));
            if let Some(s) = self.slots[id].as_mut() {
                s.children.push(cid);
            }
        }
        id
    }

    pub(crate) fn len(&self) -> usize {
        self.slots.len()
    }

    pub(crate) fn root(&self) -> NodeId {
        self.root
    }

    fn slot(&self, id: NodeId) -> Result<&Slot, ApplyError> {
        self.slots.get(id).and_then(Option::as_ref).ok_or(ApplyError::MissingNode(id))
    }

    fn slot_mut(&mut self, id: NodeId) -> Result<&mut Slot, ApplyError> {
        self.slots.get_mut(id).and_then(Option::as_mut).ok_or(ApplyError::MissingNode(id))
    }

    // The accessors below are only called with live ids.
    pub(crate) fn node_type(&self, id: NodeId) -> NodeType {
        self.slots[id].as_ref().map(|s| s.node_type).unwrap_or(NodeType::Block)
    }

    pub(crate) fn label(&self, id: NodeId) -> &str {
        self.slots[id].as_ref().map(|s| s.label.as_str()).unwrap_or("")
    }

    pub(crate) fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.slots[id].as_ref().and_then(|s| s.parent)
    }

    pub(crate) fn children(&self, id: NodeId) -> &[NodeId] {
        self.slots[id].as_ref().map(|s| s.children.as_slice()).unwrap_or(&[])
    }

    pub(crate) fn index_in_parent(&self, id: NodeId) -> Option<usize> {
        let p = self.parent(id)?;
        self.children(p).iter().position(|&c| c == id)
    }

    pub(crate) fn to_tree(&self) -> AstNode {
        self.subtree(self.root)
    }

    pub(crate) fn subtree(&self, id: NodeId) -> AstNode {
        AstNode::with_children(
            self.node_type(id),
            self.label(id),
            self.children(id).iter().map(|&c| self.subtree(c)).collect(),
        )
    }

    fn detach(&mut self, id: NodeId) -> Result<(), ApplyError> {
        let parent = self.slot(id)?.parent.ok_or(ApplyError::Root)?;
        self.slot_mut(parent)?.children.retain(|&c| c != id);
        self.slot_mut(id)?.parent = None;
        Ok(())
    }

    fn attach(&mut self, id: NodeId, parent: NodeId, index: usize) -> Result<(), ApplyError> {
        let p = self.slot_mut(parent)?;
        if index > p.children.len() {
            return Err(ApplyError::BadIndex { parent, index });
        }
        p.children.insert(index, id);
        self.slot_mut(id)?.parent = Some(parent);
        Ok(())
    }

    fn is_ancestor_or_self(&self, anc: NodeId, mut id: NodeId) -> bool {
        loop {
            if id == anc {
                return true;
            }
            match self.parent(id) {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    pub(crate) fn apply(&mut self, action: &EditAction) -> Result<(), ApplyError> {
        match &action.op {
            EditOp::Update { node, new_label } => {
                self.slot_mut(*node)?.label = new_label.clone();
            }
            EditOp::Insert {
                node,
                parent,
                index,
                tree,
            } => {
                if *node != self.slots.len() {
                    return Err(ApplyError::FreshId {
                        expected: self.slots.len(),
                        got: *node,
                    });
                }
                let len = self.slot(*parent)?.children.len();
                if *index > len {
                    return Err(ApplyError::BadIndex {
                        parent: *parent,
                        index: *index,
                    });
                }
                let id = self.graft(tree, None);
                self.attach(id, *parent, *index)?;
            }
            EditOp::Delete { node } => {
                self.detach(*node)?;
                let mut stack = alloc::vec![*node];
                while let Some(n) = stack.pop() {
                    if let Some(s) = self.slots[n].take() {
                        stack.extend(s.children);
                    }
                }
            }
            EditOp::Move {
                node, parent, index, ..
            } => {
                self.slot(*parent)?;
                if self.slot(*node)?.parent.is_none() {
                    return Err(ApplyError::Root);
                }
                if self.is_ancestor_or_self(*node, *parent) {
                    return Err(ApplyError::Cycle(*node));
                }
                let old_parent = self.parent(*node);
                let old_index = self.index_in_parent(*node);
                self.detach(*node)?;
                if let Err(e) = self.attach(*node, *parent, *index) {
                    // leave the tree as it was
                    if let (Some(p), Some(i)) = (old_parent, old_index) {
                        let _ = self.attach(*node, p, i);
                    }
                    return Err(e);
                }
            }
        }
        Ok(())
    }
}

/// Replays `actions` on `tree`. Node ids are interpreted as described on
/// [`NodeId`].
pub fn apply(tree: &AstNode, actions: &[EditAction]) -> Result<AstNode, ApplyError> {
    let mut arena = Arena::from_tree(tree);
    for a in actions {
        arena.apply(a)?;
    }
    Ok(arena.to_tree())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn sample() -> AstNode {
        // Method(f)[Block[Return[Literal(0)], Invocation(g)]]
        AstNode::with_children(
            NodeType::Method,
            "f",
            vec![AstNode::with_children(
                NodeType::Block,
                "",
                vec![
                    AstNode::with_children(NodeType::Return, "", vec![AstNode::leaf(NodeType::Literal, "0")]),
                    AstNode::leaf(NodeType::Invocation, "g"),
                ],
            )],
        )
    }

    fn act(node_type: NodeType, context_type: NodeType, op: EditOp) -> EditAction {
        EditAction {
            node_type,
            context_type,
            op,
        }
    }

    #[test]
    fn each_kind_applies() {
        let t = sample();
        let upd = act(NodeType::Literal, NodeType::Return, EditOp::Update { node: 3, new_label: "1".into() });
        assert_eq!(apply(&t, &[upd]).unwrap().to_string(), "Method(f)[Block[Return[Literal(1)], Invocation(g)]]");

        let del = act(NodeType::Invocation, NodeType::Block, EditOp::Delete { node: 4 });
        assert_eq!(apply(&t, &[del]).unwrap().to_string(), "Method(f)[Block[Return[Literal(0)]]]");

        let ins = act(
            NodeType::Invocation,
            NodeType::Block,
            EditOp::Insert {
                node: 5,
                parent: 1,
                index: 0,
                tree: AstNode::with_children(NodeType::Invocation, "h", vec![AstNode::leaf(NodeType::Literal, "2")]),
            },
        );
        let after = apply(&t, &[ins.clone()]).unwrap();
        assert_eq!(after.to_string(), "Method(f)[Block[Invocation(h)[Literal(2)], Return[Literal(0)], Invocation(g)]]");
        // the second inserted node got id 6
        let upd6 = act(NodeType::Literal, NodeType::Invocation, EditOp::Update { node: 6, new_label: "3".into() });
        assert!(apply(&t, &[ins, upd6]).unwrap().to_string().contains("Invocation(h)[Literal(3)]"));

        let mv = act(
            NodeType::Invocation,
            NodeType::Block,
            EditOp::Move {
                node: 4,
                parent: 2,
                index: 1,
                source_type: NodeType::Block,
                target_type: NodeType::Return,
            },
        );
        assert_eq!(apply(&t, &[mv]).unwrap().to_string(), "Method(f)[Block[Return[Literal(0), Invocation(g)]]]");
    }

    #[test]
    fn errors() {
        let t = sample();
        let missing = act(NodeType::Literal, NodeType::Return, EditOp::Delete { node: 99 });
        assert_eq!(apply(&t, &[missing]), Err(ApplyError::MissingNode(99)));
        let root = act(NodeType::Method, NodeType::Method, EditOp::Delete { node: 0 });
        assert_eq!(apply(&t, &[root]), Err(ApplyError::Root));
        let deleted_then_used = [
            act(NodeType::Return, NodeType::Block, EditOp::Delete { node: 2 }),
            act(NodeType::Literal, NodeType::Return, EditOp::Update { node: 3, new_label: "x".into() }),
        ];
        assert_eq!(apply(&t, &deleted_then_used), Err(ApplyError::MissingNode(3)));
        let cyc = act(
            NodeType::Block,
            NodeType::Method,
            EditOp::Move {
                node: 1,
                parent: 2,
                index: 0,
                source_type: NodeType::Method,
                target_type: NodeType::Return,
            },
        );
        assert_eq!(apply(&t, &[cyc]), Err(ApplyError::Cycle(1)));
        let bad = act(
            NodeType::Invocation,
            NodeType::Block,
            EditOp::Insert {
                node: 5,
                parent: 1,
                index: 7,
                tree: AstNode::leaf(NodeType::Invocation, "h"),
            },
        );
        assert_eq!(apply(&t, &[bad]), Err(ApplyError::BadIndex { parent: 1, index: 7 }));
    }

    #[test]
    fn lines_and_operation_names() {
        let mv = act(
            NodeType::Invocation,
            NodeType::Block,
            EditOp::Move {
                node: 4,
                parent: 2,
                index: 1,
                source_type: NodeType::Block,
                target_type: NodeType::Return,
            },
        );
        assert_eq!(mv.to_line(), "Move\tInvocation\tBlock\tBlock\tReturn");
        assert_eq!(mv.operation().to_string(), "Move Invocation from Block");
        let upd = act(NodeType::Literal, NodeType::Return, EditOp::Update { node: 3, new_label: "a\tb".into() });
        assert_eq!(upd.to_line(), "Update\tLiteral\tReturn\ta\\tb");
        assert_eq!(Operation::from_line(&upd.to_line()).unwrap(), upd.operation());
        assert_eq!(
            Operation::from_line("Delete\tCtInvocationImpl\tBlock").unwrap().to_string(),
            "Delete Invocation at Block"
        );
        assert!(Operation::from_line("Delete\tInvocation").is_err());
    }
}
