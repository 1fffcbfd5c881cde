//! Synthetic bug-fix corpus. Fixed methods come from small parameterized
//! templates; the buggy version undoes one fix. Every buggy method carries
//! exactly one trigger for its fix, and filler statements never contain a
//! trigger, so the fix is recoverable from the buggy code alone.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_candidate, filter_pair, BugFixPair, Provenance, Verdict, DEFAULT_ID_CAP};
use crate::lexabs::base_idioms;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MutationKind {
    /// `<=` for `<`, `||` for `&&`, `==` for `!=`.
    OperatorFlip,
    /// `0` and `1` swapped in an initializer.
    LiteralSwap,
    /// A call that should sit inside a null check.
    GuardInsertion,
    /// One harmful extra statement.
    StatementDeletion,
    /// A made-up method name where an idiom (`size`, `min`) belongs.
    MethodRename,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::OperatorFlip,
        MutationKind::LiteralSwap,
        MutationKind::GuardInsertion,
        MutationKind::StatementDeletion,
        MutationKind::MethodRename,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::OperatorFlip => "operator-flip",
            MutationKind::LiteralSwap => "literal-swap",
            MutationKind::GuardInsertion => "guard-insertion",
            MutationKind::StatementDeletion => "statement-deletion",
            MutationKind::MethodRename => "method-call-rename",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown mutation kind {s:?}"))
    }
}

/// Which identifier pool to draw names from. The two pools are disjoint, so
/// a held-out corpus never shares an identifier with a primary one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamePool {
    #[default]
    Primary,
    HeldOut,
}

struct Pools {
    types: &'static [&'static str],
    vars: &'static [&'static str],
    methods: &'static [&'static str],
    strings: &'static [&'static str],
    not_size: &'static [&'static str],
    not_min: &'static [&'static str],
}

const PRIMARY: Pools = Pools {
    types: &["Order", "Node", "Account", "Item", "Customer", "Invoice", "Packet", "Session", "Record", "Ticket", "Widget", "Route"],
    vars: &[
        "items", "orders", "values", "count", "total", "limit", "offset", "result", "current", "name", "key", "amount",
        "width", "height", "score", "level", "target", "source", "buffer", "entry",
    ],
    methods: &["process", "update", "handle", "render", "notify", "validate", "compute", "apply", "flush", "reset", "load", "store"],
    strings: &["start", "done", "ready", "failed", "skip", "retry"],
    not_size: &["count", "getCount", "numItems", "total"],
    not_min: &["lower", "least", "smallest", "floorOf"],
};

const HELD_OUT: Pools = Pools {
    types: &["Parcel", "Vertex", "Ledger", "Cargo", "Member", "Receipt", "Signal", "Channel", "Sample", "Voucher", "Shipment", "Badge"],
    vars: &[
        "entries", "elements", "weights", "volume", "quota", "margin", "factor", "cursor", "label", "holder", "budget",
        "extent", "rank", "tier", "origin", "goal", "payload", "slot", "stock", "weight",
    ],
    methods: &["dispatch", "refresh", "inspect", "verify", "emit", "resolve", "commit", "prepare", "publish", "track", "fetch", "persist"],
    strings: &["begin", "finished", "idle", "broken", "pending", "again"],
    not_size: &["tally", "getTotal", "quantity", "numEntries"],
    not_min: &["bottom", "minimum", "lowest", "clampLow"],
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Number of distinct pairs (after abstraction) to produce.
    pub pairs: usize,
    pub mutations: Vec<MutationKind>,
    pub seed: u64,
    pub names: NamePool,
    /// Longest allowed abstracted method, in tokens.
    pub max_tokens: usize,
}

impl SyntheticConfig {
    pub fn new(pairs: usize, mutations: &[MutationKind], seed: u64) -> Self {
        SyntheticConfig {
            pairs,
            mutations: mutations.to_vec(),
            seed,
            names: NamePool::Primary,
            max_tokens: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SyntheticError {
    #[error("no mutation kinds selected")]
    NoMutations,
    #[error("only {produced} distinct pairs after {attempts} attempts")]
    Exhausted { produced: usize, attempts: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticSample {
    pub kind: MutationKind,
    pub buggy_source: String,
    pub fixed_source: String,
    pub pair: BugFixPair,
}

/// Draws distinct names from a pool.
struct Draw<'a> {
    rng: &'a mut ChaCha8Rng,
    used: BTreeSet<&'static str>,
}

impl Draw<'_> {
    fn pick(&mut self, pool: &'static [&'static str]) -> &'static str {
        loop {
            let n = pool[self.rng.gen_range(0..pool.len())];
            if self.used.insert(n) {
                return n;
            }
        }
    }
}

struct Shape {
    ret: String,
    params: String,
    body_fixed: Vec<String>,
    body_buggy: Vec<String>,
    /// Extra statement present only in the buggy version, right after the body.
    extra_buggy: Option<String>,
    tail_fixed: Option<String>,
    tail_buggy: Option<String>,
}

impl Shape {
    fn same_tail(mut self, tail: Option<String>) -> Self {
        self.tail_buggy = tail.clone();
        self.tail_fixed = tail;
        self
    }
}

fn shape(kind: MutationKind, variant: u32, p: &Pools, d: &mut Draw<'_>) -> Shape {
    let ty = d.pick(p.types);
    let (v, xs, o) = (d.pick(p.vars), d.pick(p.vars), d.pick(p.vars));
    let (h, g) = (d.pick(p.methods), d.pick(p.methods));
    let both = |s: String| (vec![s.clone()], vec![s]);
    let base = |ret: &str, params: String| Shape {
        ret: ret.to_string(),
        params,
        body_fixed: Vec::new(),
        body_buggy: Vec::new(),
        extra_buggy: None,
        tail_fixed: None,
        tail_buggy: None,
    };
    let mut s;
    match (kind, variant) {
        (MutationKind::OperatorFlip, 0) => {
            s = base("int", format!("List<{ty}> {xs}")).same_tail(Some(format!("return {v};")));
            let lp = |op: &str| format!("for (int i = 0; i {op} {xs}.size(); i++) {{ {v} += {h}({xs}.get(i)); }}");
            s.body_fixed = vec![format!("int {v} = 0;"), lp("<")];
            s.body_buggy = vec![format!("int {v} = 0;"), lp("<=")];
        }
        (MutationKind::OperatorFlip, 1) => {
            let (a, b) = (xs, o);
            s = base("boolean", format!("int {a}, int {b}")).same_tail(Some("return false;".into()));
            let atoms = [
                format!("{a} > 0"),
                format!("{b} > 0"),
                format!("{a} < {b}"),
                format!("{a} != {b}"),
                format!("{h}({a})"),
                format!("{b} >= 2"),
            ];
            let i = d.rng.gen_range(0..atoms.len());
            let j = (i + d.rng.gen_range(1..atoms.len())) % atoms.len();
            let cond = |op: &str| format!("if ({} {op} {}) {{ return true; }}", atoms[i], atoms[j]);
            s.body_fixed = vec![cond("&&")];
            s.body_buggy = vec![cond("||")];
        }
        (MutationKind::OperatorFlip, _) => {
            let (m, k) = (xs, o);
            s = base(ty, format!("Map<String, {ty}> {m}, String {k}")).same_tail(Some(format!("return {h}({k});")));
            let get = format!("{ty} {v} = {m}.get({k});");
            let chk = |op: &str| format!("if ({v} {op} null) {{ return {v}; }}");
            s.body_fixed = vec![get.clone(), chk("!=")];
            s.body_buggy = vec![get, chk("==")];
        }
        (MutationKind::LiteralSwap, 0) => {
            let e = d.pick(p.vars);
            s = base("int", format!("List<{ty}> {xs}")).same_tail(Some(format!("return {v};")));
            let lp = format!("for ({ty} {e} : {xs}) {{ {v} += {e}.{g}(); }}");
            s.body_fixed = vec![format!("int {v} = 0;"), lp.clone()];
            s.body_buggy = vec![format!("int {v} = 1;"), lp];
        }
        (MutationKind::LiteralSwap, 1) => {
            s = base("int", format!("int[] {xs}")).same_tail(Some(format!("return {v};")));
            let lp = format!("for (int i = 0; i < {xs}.length; i++) {{ {v} *= {xs}[i]; }}");
            s.body_fixed = vec![format!("int {v} = 1;"), lp.clone()];
            s.body_buggy = vec![format!("int {v} = 0;"), lp];
        }
        (MutationKind::LiteralSwap, _) => {
            s = base("void", format!("List<{ty}> {xs}"));
            let lp = |start: &str| format!("for (int i = {start}; i < {xs}.size(); i++) {{ {h}({xs}.get(i)); }}");
            s.body_fixed = vec![lp("0")];
            s.body_buggy = vec![lp("1")];
        }
        (MutationKind::GuardInsertion, 0) => {
            let n = d.pick(p.vars);
            s = base("void", format!("{ty} {o}, int {n}"));
            let call = format!("{o}.{g}({n});");
            s.body_fixed = vec![format!("if ({o} != null) {{ {call} }}")];
            s.body_buggy = vec![call];
        }
        (MutationKind::GuardInsertion, 1) => {
            s = base("int", format!("{ty} {o}")).same_tail(Some("return 1;".into()));
            let call = format!("{o}.{g}();");
            s.body_fixed = vec![format!("if ({o} != null) {{ {call} }}")];
            s.body_buggy = vec![call];
        }
        (MutationKind::GuardInsertion, _) => {
            s = base("void", format!("List<{ty}> {xs}, {ty} {o}"));
            let call = format!("{xs}.add({o});");
            s.body_fixed = vec![format!("if ({xs} != null) {{ {call} }}")];
            s.body_buggy = vec![call];
        }
        (MutationKind::StatementDeletion, 0) => {
            s = base("int", format!("List<{ty}> {xs}")).same_tail(Some(format!("return {v};")));
            (s.body_fixed, s.body_buggy) = both(format!("int {v} = {xs}.size();"));
            s.extra_buggy = Some(format!("{xs}.clear();"));
        }
        (MutationKind::StatementDeletion, 1) => {
            let n = d.pick(p.vars);
            s = base("void", format!("{ty} {o}, int {n}"));
            (s.body_fixed, s.body_buggy) = both(format!("{o}.{g}({n});"));
            s.extra_buggy = Some(format!("{o} = null;"));
        }
        (MutationKind::StatementDeletion, _) => {
            let k = d.pick(p.vars);
            s = base("boolean", format!("Set<String> {xs}, String {k}")).same_tail(Some(format!("return {v};")));
            (s.body_fixed, s.body_buggy) = both(format!("boolean {v} = {xs}.contains({k});"));
            s.extra_buggy = Some(format!("{xs}.clear();"));
        }
        (MutationKind::MethodRename, 0) => {
            let (a, b) = (xs, o);
            let bad = d.pick(p.not_min);
            s = base("int", format!("int {a}, int {b}"));
            s.tail_fixed = Some(format!("return Math.min({a}, {b});"));
            s.tail_buggy = Some(format!("return Math.{bad}({a}, {b});"));
        }
        (MutationKind::MethodRename, 1) => {
            let n = d.pick(p.vars);
            let bad = d.pick(p.not_size);
            s = base("boolean", format!("List<{ty}> {xs}, int {n}")).same_tail(Some("return false;".into()));
            let cond = |m: &str| format!("if ({xs}.{m}() > {n}) {{ return true; }}");
            s.body_fixed = vec![cond("size")];
            s.body_buggy = vec![cond(bad)];
        }
        (MutationKind::MethodRename, _) => {
            let bad = d.pick(p.not_size);
            s = base("void", format!("List<{ty}> {xs}"));
            let lp = |m: &str| format!("for (int i = 0; i < {xs}.{m}(); i++) {{ {h}({xs}.get(i)); }}");
            s.body_fixed = vec![lp("size")];
            s.body_buggy = vec![lp(bad)];
        }
    }
    s
}

/// Trigger-free filler statements.
fn filler(p: &Pools, d: &mut Draw<'_>) -> String {
    match d.rng.gen_range(0..9) {
        0 => format!("int {} = {}(2);", d.pick(p.vars), d.pick(p.methods)),
        1 => format!("{}(\"{}\");", d.pick(p.methods), d.pick(p.strings)),
        2 => format!("this.{} = {}();", d.pick(p.vars), d.pick(p.methods)),
        3 => format!("System.out.println(\"{}\");", d.pick(p.strings)),
        4 => format!("{}++;", d.pick(p.vars)),
        5 => format!("long {} = System.currentTimeMillis();", d.pick(p.vars)),
        6 => format!("String {} = String.valueOf({});", d.pick(p.vars), d.rng.gen_range(3..10)),
        7 => {
            let t = d.pick(p.types);
            format!("{t} {} = new {t}();", d.pick(p.vars))
        }
        _ => format!("{}(this);", d.pick(p.methods)),
    }
}

const MODIFIERS: &[&str] = &["", "public ", "private ", "protected ", "public static ", "static ", "public final "];

fn render(mods: &str, ret: &str, name: &str, params: &str, stmts: &[String]) -> String {
    let mut s = format!("{mods}{ret} {name}({params}) {{\n");
    for st in stmts {
        s.push_str("    ");
        s.push_str(st);
        s.push('\n');
    }
    s.push('}');
    s
}

/// Generates `config.pairs` pairs that are distinct after abstraction, each
/// passing the dataset filters and fitting in `config.max_tokens`.
pub fn generate_synthetic_samples(config: &SyntheticConfig) -> Result<Vec<SyntheticSample>, SyntheticError> {
    let kinds: Vec<MutationKind> = {
        let set: BTreeSet<MutationKind> = config.mutations.iter().copied().collect();
        set.into_iter().collect()
    };
    if kinds.is_empty() {
        return Err(SyntheticError::NoMutations);
    }
    let pools = match config.names {
        NamePool::Primary => &PRIMARY,
        NamePool::HeldOut => &HELD_OUT,
    };
    let idioms = base_idioms();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(config.pairs);
    let max_attempts = config.pairs * 50 + 1000;
    let mut attempts = 0;
    while out.len() < config.pairs {
        if attempts == max_attempts {
            return Err(SyntheticError::Exhausted {
                produced: out.len(),
                attempts,
            });
        }
        attempts += 1;
        let kind = *kinds.choose(&mut rng).expect("non-empty");
        let variant = rng.gen_range(0..3);
        let mods = MODIFIERS[rng.gen_range(0..MODIFIERS.len())];
        let n_pre = rng.gen_range(0..3);
        let n_post = rng.gen_range(0..2);
        let mut d = Draw {
            rng: &mut rng,
            used: BTreeSet::new(),
        };
        let name = d.pick(pools.methods);
        let s = shape(kind, variant, pools, &mut d);
        let pre: Vec<String> = (0..n_pre).map(|_| filler(pools, &mut d)).collect();
        let post: Vec<String> = (0..n_post).map(|_| filler(pools, &mut d)).collect();

        let assemble = |body: &[String], extra: Option<&String>, tail: Option<&String>| {
            let mut v = pre.clone();
            v.extend(body.iter().cloned());
            v.extend(extra.cloned());
            v.extend(post.iter().cloned());
            v.extend(tail.cloned());
            render(mods, &s.ret, name, &s.params, &v)
        };
        let fixed_source = assemble(&s.body_fixed, None, s.tail_fixed.as_ref());
        let buggy_source = assemble(&s.body_buggy, s.extra_buggy.as_ref(), s.tail_buggy.as_ref());

        let index = out.len();
        let prov = Provenance {
            repo_id: "synthetic".into(),
            commit_id: format!("{:016x}-{index:05}", config.seed),
            path: format!("{kind}/{index:05}.java"),
            method: name.to_string(),
        };
        let cand = build_candidate(&buggy_source, &fixed_source, &idioms, prov);
        if filter_pair(&cand, DEFAULT_ID_CAP) != Verdict::Accept {
            continue;
        }
        let Some(pair) = cand.into_pair() else { continue };
        if pair.buggy.len().max(pair.fixed.len()) > config.max_tokens {
            continue;
        }
        if !seen.insert((pair.buggy.clone(), pair.fixed.clone())) {
            continue;
        }
        out.push(SyntheticSample {
            kind,
            buggy_source,
            fixed_source,
            pair,
        });
    }
    Ok(out)
}

/// `pairs` distinct synthetic pairs from the primary name pool, at most 50
/// abstracted tokens each.
pub fn generate_synthetic_corpus(
    pairs: usize,
    mutations: &[MutationKind],
    seed: u64,
) -> Result<Vec<BugFixPair>, SyntheticError> {
    Ok(generate_synthetic_samples(&SyntheticConfig::new(pairs, mutations, seed))?
        .into_iter()
        .map(|s| s.pair)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_produces_pairs() {
        for kind in MutationKind::ALL {
            let got = generate_synthetic_samples(&SyntheticConfig::new(30, &[kind], 7)).unwrap();
            assert_eq!(got.len(), 30);
            assert!(got.iter().all(|s| s.kind == kind && s.pair.buggy != s.pair.fixed));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_synthetic_corpus(40, &MutationKind::ALL, 3).unwrap();
        assert_eq!(a, generate_synthetic_corpus(40, &MutationKind::ALL, 3).unwrap());
        assert_ne!(a, generate_synthetic_corpus(40, &MutationKind::ALL, 4).unwrap());
    }

    #[test]
    fn empty_mutation_set_is_an_error() {
        assert_eq!(generate_synthetic_corpus(5, &[], 1), Err(SyntheticError::NoMutations));
    }

    #[test]
    fn pools_are_disjoint() {
        let all = |p: &Pools| -> BTreeSet<&str> {
            [p.types, p.vars, p.methods, p.strings, p.not_size, p.not_min]
                .iter()
                .flat_map(|x| x.iter().copied())
                .collect()
        };
        assert!(all(&PRIMARY).is_disjoint(&all(&HELD_OUT)));
        let idioms = base_idioms();
        assert!(all(&PRIMARY).iter().chain(all(&HELD_OUT).iter()).all(|n| !idioms.contains(n)));
    }

    #[test]
    fn names_round_trip() {
        for k in MutationKind::ALL {
            assert_eq!(k.name().parse::<MutationKind>().unwrap(), k);
        }
    }
}
