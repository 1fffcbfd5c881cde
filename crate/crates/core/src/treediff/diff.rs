//! Two-phase matching (isomorphic subtrees top-down, then container and
//! child recovery bottom-up) followed by Chawathe-style script generation.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::ast::AstNode;
use super::edit::{Arena, EditAction, EditOp, NodeId};

const MIN_HEIGHT: usize = 2;
const MIN_DICE: f64 = 0.5;

/// Per-node facts about a freshly built arena (ids are pre-order indices).
struct Facts {
    hash: Vec<u64>,
    height: Vec<usize>,
    size: Vec<usize>,
}

impl Facts {
    fn of(a: &Arena) -> Facts {
        let n = a.len();
        let mut f = Facts {
            hash: vec![0; n],
            height: vec![0; n],
            size: vec![0; n],
        };
        // children have larger pre-order ids than their parent
        for id in (0..n).rev() {
            let mut h = Fnv::new();
            h.write(&[a.node_type(id) as u8]);
            h.write(a.label(id).as_bytes());
            h.write(&[0xff]);
            let mut height = 0;
            let mut size = 1;
            for &c in a.children(id) {
                h.write(&f.hash[c].to_le_bytes());
                height = height.max(f.height[c]);
                size += f.size[c];
            }
            f.hash[id] = h.finish();
            f.height[id] = height + 1;
            f.size[id] = size;
        }
        f
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

fn isomorphic(a: &Arena, x: NodeId, b: &Arena, y: NodeId) -> bool {
    a.node_type(x) == b.node_type(y)
        && a.label(x) == b.label(y)
        && a.children(x).len() == b.children(y).len()
        && a.children(x)
            .iter()
            .zip(b.children(y))
            .all(|(&cx, &cy)| isomorphic(a, cx, b, cy))
}

struct Mapping {
    s2d: Vec<Option<NodeId>>,
    d2s: Vec<Option<NodeId>>,
}

impl Mapping {
    fn link(&mut self, s: NodeId, d: NodeId) {
        self.s2d[s] = Some(d);
        self.d2s[d] = Some(s);
    }

    fn link_subtrees(&mut self, src: &Arena, s: NodeId, dst: &Arena, d: NodeId) {
        self.link(s, d);
        for (&cs, &cd) in src.children(s).iter().zip(dst.children(d)) {
            self.link_subtrees(src, cs, dst, cd);
        }
    }
}

fn match_trees(src: &Arena, dst: &Arena) -> Mapping {
    let sf = Facts::of(src);
    let df = Facts::of(dst);
    let mut m = Mapping {
        s2d: vec![None; src.len()],
        d2s: vec![None; dst.len()],
    };

    // top-down: largest isomorphic subtrees first
    let mut by_hash: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    for s in 0..src.len() {
        if sf.height[s] >= MIN_HEIGHT {
            by_hash.entry(sf.hash[s]).or_default().push(s);
        }
    }
    let mut order: Vec<NodeId> = (0..dst.len()).filter(|&d| df.height[d] >= MIN_HEIGHT).collect();
    order.sort_by(|&a, &b| df.height[b].cmp(&df.height[a]).then(a.cmp(&b)));
    for d in order {
        if m.d2s[d].is_some() {
            continue;
        }
        let Some(cands) = by_hash.get(&df.hash[d]) else { continue };
        let dp = dst.parent(d);
        let best = cands
            .iter()
            .copied()
            .filter(|&s| m.s2d[s].is_none() && isomorphic(src, s, dst, d))
            .min_by_key(|&s| {
                let sp = src.parent(s);
                let same_parent_hash = match (sp, dp) {
                    (Some(a), Some(b)) => sf.hash[a] == df.hash[b],
                    (None, None) => true,
                    _ => false,
                };
                let same_parent_kind = match (sp, dp) {
                    (Some(a), Some(b)) => src.node_type(a) == dst.node_type(b) && src.label(a) == dst.label(b),
                    (None, None) => true,
                    _ => false,
                };
                (!same_parent_hash, !same_parent_kind, s.abs_diff(d), s)
            });
        if let Some(s) = best {
            m.link_subtrees(src, s, dst, d);
        }
    }

    let (sr, dr) = (src.root(), dst.root());
    if m.s2d[sr].is_none() && m.d2s[dr].is_none() && src.node_type(sr) == dst.node_type(dr) {
        m.link(sr, dr);
    }

    recover(src, dst, &mut m, &[true]);

    // bottom-up: containers sharing enough matched descendants
    for s in postorder(src) {
        if m.s2d[s].is_some() || src.children(s).is_empty() {
            continue;
        }
        let s_desc = sf.size[s] - 1;
        let mut best: Option<(f64, NodeId)> = None;
        for d in 0..dst.len() {
            if m.d2s[d].is_some() || dst.node_type(d) != src.node_type(s) || dst.children(d).is_empty() {
                continue;
            }
            let d_end = d + df.size[d];
            let common = (s + 1..s + sf.size[s])
                .filter(|&x| m.s2d[x].is_some_and(|y| y > d && y < d_end))
                .count();
            if common == 0 {
                continue;
            }
            let dice = 2.0 * common as f64 / (s_desc + df.size[d] - 1) as f64;
            if dice >= MIN_DICE && best.is_none_or(|(b, _)| dice > b) {
                best = Some((dice, d));
            }
        }
        if let Some((_, d)) = best {
            m.link(s, d);
        }
    }

    recover(src, dst, &mut m, &[true, false]);
    m
}

/// Matches unmatched children of matched pairs, in target pre-order so that
/// new matches propagate downwards. Each pass in `exact` either requires
/// equal labels or only equal types.
fn recover(src: &Arena, dst: &Arena, m: &mut Mapping, exact: &[bool]) {
    for d in 0..dst.len() {
        let Some(s) = m.d2s[d] else { continue };
        for &exact in exact {
            for &cd in dst.children(d) {
                if m.d2s[cd].is_some() {
                    continue;
                }
                let hit = src.children(s).iter().copied().find(|&cs| {
                    m.s2d[cs].is_none()
                        && src.node_type(cs) == dst.node_type(cd)
                        && (!exact || src.label(cs) == dst.label(cd))
                });
                if let Some(cs) = hit {
                    m.link(cs, cd);
                }
            }
        }
    }
}

fn postorder(a: &Arena) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(a.len());
    let mut stack = vec![(a.root(), false)];
    while let Some((n, expanded)) = stack.pop() {
        if expanded {
            out.push(n);
        } else {
            stack.push((n, true));
            for &c in a.children(n).iter().rev() {
                stack.push((c, false));
            }
        }
    }
    out
}

fn lcs(xs: &[NodeId], ys: &[NodeId], eq: impl Fn(NodeId, NodeId) -> bool) -> Vec<(NodeId, NodeId)> {
    let (n, k) = (xs.len(), ys.len());
    let mut t = vec![vec![0usize; k + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..k).rev() {
            t[i][j] = if eq(xs[i], ys[j]) {
                t[i + 1][j + 1] + 1
            } else {
                t[i + 1][j].max(t[i][j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < n && j < k {
        if eq(xs[i], ys[j]) {
            out.push((xs[i], ys[j]));
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

struct Generator<'a> {
    work: Arena,
    dst: &'a Arena,
    w2d: Vec<Option<NodeId>>,
    d2w: Vec<Option<NodeId>>,
    w_in_order: Vec<bool>,
    d_in_order: Vec<bool>,
    actions: Vec<EditAction>,
}

impl Generator<'_> {
    fn emit(&mut self, action: EditAction) {
        self.work
            .apply(&action)
            .expect("generated actions apply to the working tree");
        self.actions.push(action);
        self.w2d.resize(self.work.len(), None);
        self.w_in_order.resize(self.work.len(), false);
    }

    fn partner_index(&self, x: NodeId) -> usize {
        let y = self.dst.parent(x).expect("non-root");
        let siblings = self.dst.children(y);
        let pos = siblings.iter().position(|&c| c == x).unwrap_or(0);
        match siblings[..pos].iter().rev().find(|&&v| self.d_in_order[v]) {
            None => 0,
            Some(&v) => {
                let u = self.d2w[v].expect("in-order nodes are mapped");
                self.work.index_in_parent(u).map_or(0, |i| i + 1)
            }
        }
    }

    /// Index for moving `w` to `parent`, accounting for its own removal when
    /// it already sits there.
    fn move_index(&self, w: NodeId, parent: NodeId, k: usize) -> usize {
        if self.work.parent(w) == Some(parent) && self.work.index_in_parent(w).is_some_and(|i| i < k) {
            k - 1
        } else {
            k
        }
    }

    fn do_move(&mut self, w: NodeId, z: NodeId, k: usize) {
        let k = self.move_index(w, z, k);
        let source_parent = self.work.parent(w).expect("moved nodes are not the root");
        let source_type = self.work.node_type(source_parent);
        self.emit(EditAction {
            node_type: self.work.node_type(w),
            context_type: source_type,
            op: EditOp::Move {
                node: w,
                parent: z,
                index: k,
                source_type,
                target_type: self.work.node_type(z),
            },
        });
    }

    fn align_children(&mut self, w: NodeId, x: NodeId) {
        for &c in self.work.children(w) {
            self.w_in_order[c] = false;
        }
        for &c in self.dst.children(x) {
            self.d_in_order[c] = false;
        }
        let s1: Vec<NodeId> = self
            .work
            .children(w)
            .iter()
            .copied()
            .filter(|&c| self.w2d[c].is_some_and(|d| self.dst.parent(d) == Some(x)))
            .collect();
        let s2: Vec<NodeId> = self
            .dst
            .children(x)
            .iter()
            .copied()
            .filter(|&c| self.d2w[c].is_some_and(|u| self.work.parent(u) == Some(w)))
            .collect();
        let common = lcs(&s1, &s2, |a, b| self.w2d[a] == Some(b));
        for &(a, b) in &common {
            self.w_in_order[a] = true;
            self.d_in_order[b] = true;
        }
        for b in s2 {
            let a = self.d2w[b].expect("filtered on mapping");
            if common.iter().any(|&(ca, _)| ca == a) {
                continue;
            }
            let k = self.partner_index(b);
            self.do_move(a, w, k);
            self.w_in_order[a] = true;
            self.d_in_order[b] = true;
        }
    }

    fn subtree_unmatched(&self, x: NodeId) -> bool {
        self.d2w[x].is_none() && self.dst.children(x).iter().all(|&c| self.subtree_unmatched(c))
    }

    fn map_inserted(&mut self, w: NodeId, x: NodeId) {
        self.w2d[w] = Some(x);
        self.d2w[x] = Some(w);
        self.w_in_order[w] = true;
        self.d_in_order[x] = true;
        let pairs: Vec<(NodeId, NodeId)> = self
            .work
            .children(w)
            .iter()
            .copied()
            .zip(self.dst.children(x).iter().copied())
            .collect();
        for (cw, cx) in pairs {
            self.map_inserted(cw, cx);
        }
    }

    fn run(mut self) -> Vec<EditAction> {
        let dst = self.dst;
        let mut queue = VecDeque::from([dst.root()]);
        while let Some(x) = queue.pop_front() {
            let mut descend = true;
            let w = if x == dst.root() {
                self.d2w[x].expect("roots are matched")
            } else {
                let y = dst.parent(x).expect("non-root");
                let z = self.d2w[y].expect("parents are processed first");
                match self.d2w[x] {
                    None => {
                        let k = self.partner_index(x);
                        let whole = self.subtree_unmatched(x);
                        let tree = if whole {
                            descend = false;
                            dst.subtree(x)
                        } else {
                            AstNode::new(dst.node_type(x), dst.label(x))
                        };
                        let id = self.work.len();
                        self.emit(EditAction {
                            node_type: dst.node_type(x),
                            context_type: self.work.node_type(z),
                            op: EditOp::Insert {
                                node: id,
                                parent: z,
                                index: k,
                                tree,
                            },
                        });
                        self.map_inserted(id, x);
                        id
                    }
                    Some(w) => {
                        self.update_label(w, x);
                        if self.work.parent(w) != Some(z) {
                            let k = self.partner_index(x);
                            self.do_move(w, z, k);
                        }
                        self.w_in_order[w] = true;
                        self.d_in_order[x] = true;
                        w
                    }
                }
            };
            if x == dst.root() {
                self.update_label(w, x);
            }
            if descend {
                self.align_children(w, x);
                queue.extend(dst.children(x).iter().copied());
            }
        }

        // whatever is still unmatched goes, one action per maximal subtree
        let mut stack = vec![self.work.root()];
        let mut doomed = Vec::new();
        while let Some(n) = stack.pop() {
            if self.w2d[n].is_none() {
                doomed.push(n);
            } else {
                stack.extend(self.work.children(n).iter().rev().copied());
            }
        }
        for n in doomed {
            let parent = self.work.parent(n).expect("the root is always matched");
            self.emit(EditAction {
                node_type: self.work.node_type(n),
                context_type: self.work.node_type(parent),
                op: EditOp::Delete { node: n },
            });
        }
        self.actions
    }

    fn update_label(&mut self, w: NodeId, x: NodeId) {
        if self.work.label(w) != self.dst.label(x) {
            let context_type = self.work.parent(w).map_or(self.work.node_type(w), |p| self.work.node_type(p));
            self.emit(EditAction {
                node_type: self.work.node_type(w),
                context_type,
                op: EditOp::Update {
                    node: w,
                    new_label: self.dst.label(x).into(),
                },
            });
        }
    }
}

/// Computes an edit script turning `buggy` into `fixed`. Both trees are
/// expected to have roots of the same type (two methods); the script is
/// sound, not minimal, and empty exactly when the trees are isomorphic.
pub fn diff(buggy: &AstNode, fixed: &AstNode) -> Vec<EditAction> {
    let src = Arena::from_tree(buggy);
    let dst = Arena::from_tree(fixed);
    let mut m = match_trees(&src, &dst);
    // outside the precondition: treat the roots as the same node anyway
    if m.d2s[dst.root()].is_none() {
        if let Some(d) = m.s2d[src.root()].take() {
            m.d2s[d] = None;
        }
        m.link(src.root(), dst.root());
    }
    let n = src.len();
    Generator {
        work: src,
        dst: &dst,
        w2d: m.s2d,
        d2w: m.d2s,
        w_in_order: vec![false; n],
        d_in_order: vec![false; dst.len()],
        actions: Vec::new(),
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treediff::ast::NodeType;
    use crate::treediff::edit::{apply, EditKind};
    use crate::treediff::parser::parse_methods;
    use alloc::string::ToString;

    fn method(src: &str) -> AstNode {
        parse_methods(src).unwrap().remove(0)
    }

    fn check(b: &str, f: &str) -> Vec<EditAction> {
        let (tb, tf) = (method(b), method(f));
        let acts = diff(&tb, &tf);
        assert_eq!(apply(&tb, &acts).unwrap(), tf, "{b} => {f}: {acts:?}");
        acts
    }

    #[test]
    fn identity_is_empty() {
        let t = method("int f(int a) { if (a > 0) { return a; } return g(a, 1); }");
        assert!(diff(&t, &t).is_empty());
    }

    #[test]
    fn literal_update() {
        let acts = check("int f() { return 0; }", "int f() { return 1; }");
        assert_eq!(acts.len(), 1);
        assert_eq!(acts[0].operation().to_string(), "Update Literal at Return");
    }

    #[test]
    fn statement_deletion() {
        let acts = check("void f() { a(); log(x, 1); b(); }", "void f() { a(); b(); }");
        let ops: Vec<_> = acts.iter().map(|a| a.operation().to_string()).collect();
        assert_eq!(ops, ["Delete Invocation at Block"]);
    }

    #[test]
    fn guard_insertion_moves_statement() {
        let acts = check(
            "void f(T x) { x.run(); done(); }",
            "void f(T x) { if (x != null) { x.run(); } done(); }",
        );

        assert!(acts.iter().any(|a| a.kind() == EditKind::Insert && a.node_type == NodeType::If));
        assert!(acts.iter().any(|a| a.kind() == EditKind::Move && a.node_type == NodeType::Invocation));
    }

    #[test]
    fn reorder_and_nesting_swap() {
        check("void f() { a(); b(); c(); }", "void f() { c(); a(); b(); }");
        check(
            "void f() { if (p) { while (q) { s(1); } } }",
            "void f() { while (q) { if (p) { s(1); } } }",
        );
        check("void f() { x = 1; }", "int g(int y) { return y + x * 2; }");
        check("void f() { }", "void f() { a(); b(); }");
        check("void f() { a(); b(); }", "void f() { }");
    }

    #[test]
    fn deterministic() {
        let (b, f) = (
            method("int f(int[] xs) { int s = 0; for (int i = 0; i < xs.length; i++) s += xs[i]; return s; }"),
            method("int f(int[] xs) { int s = 0; for (int x : xs) { s += x; } return s; }"),
        );
        let one = diff(&b, &f);
        assert_eq!(one, diff(&b, &f));
        assert_eq!(apply(&b, &one).unwrap(), f);
        assert!(!one.iter().any(|a| a.to_line().is_empty()));
        let _ = one.iter().map(|a| a.operation().to_string()).collect::<Vec<_>>();
    }
}
