use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::roles::role_at;
use super::token::Token;

/// Category prefix of an abstract ID such as `VAR_3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IdCategory {
    Method,
    Var,
    Type,
    String,
    Char,
    Int,
    Float,
}

impl IdCategory {
    pub const ALL: [IdCategory; 7] = [
        IdCategory::Method,
        IdCategory::Var,
        IdCategory::Type,
        IdCategory::String,
        IdCategory::Char,
        IdCategory::Int,
        IdCategory::Float,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            IdCategory::Method => "METHOD",
            IdCategory::Var => "VAR",
            IdCategory::Type => "TYPE",
            IdCategory::String => "STRING",
            IdCategory::Char => "CHAR",
            IdCategory::Int => "INT",
            IdCategory::Float => "FLOAT",
        }
    }

    fn from_prefix(s: &str) -> Option<Self> {
        IdCategory::ALL.into_iter().find(|c| c.prefix() == s)
    }
}

/// An abstract identifier `CATEGORY_n`, `n >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractId {
    pub category: IdCategory,
    pub index: u32,
}

impl AbstractId {
    pub fn new(category: IdCategory, index: u32) -> Self {
        debug_assert!(index >= 1);
        AbstractId { category, index }
    }

    /// Parses `s` as an abstract ID; anything else (keywords, idioms,
    /// separators, `VAR_0`, `VAR_01`) yields `None`.
    pub fn parse(s: &str) -> Option<Self> {
        let (prefix, digits) = s.rsplit_once('_')?;
        let category = IdCategory::from_prefix(prefix)?;
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let index = digits.parse().ok()?;
        Some(AbstractId { category, index })
    }
}

impl fmt::Display for AbstractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.category.prefix(), self.index)
    }
}

impl FromStr for AbstractId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AbstractId::parse(s).ok_or_else(|| format!("not an abstract id: {s}"))
    }
}

/// A method as a sequence of abstract tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbstractedMethod {
    pub tokens: Vec<String>,
}

impl AbstractedMethod {
    pub fn new(tokens: Vec<String>) -> Self {
        AbstractedMethod { tokens }
    }

    /// Parses the single-line, space-separated form.
    pub fn from_line(line: &str) -> Self {
        AbstractedMethod {
            tokens: line.split_whitespace().map(String::from).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = AbstractId> + '_ {
        self.tokens.iter().filter_map(|t| AbstractId::parse(t))
    }

    /// Largest ID index used in any category (0 when the method has no IDs).
    pub fn max_id_index(&self) -> u32 {
        self.ids().map(|id| id.index).max().unwrap_or(0)
    }
}

impl fmt::Display for AbstractedMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t)?;
        }
        Ok(())
    }
}

/// The per-pair map `ID -> lexeme`. Lexemes are keyed together with their
/// category, so the same spelling used as a method and as a variable gets
/// one ID in each category.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMapping {
    forward: BTreeMap<AbstractId, String>,
    reverse: BTreeMap<(IdCategory, String), AbstractId>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MappingError {
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("lexeme {lexeme:?} mapped twice in category {category}")]
    DuplicateLexeme { category: &'static str, lexeme: String },
}

impl IdMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &AbstractId) -> Option<&str> {
        self.forward.get(id).map(String::as_str)
    }

    pub fn lookup(&self, category: IdCategory, lexeme: &str) -> Option<AbstractId> {
        self.reverse.get(&(category, lexeme.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn contains(&self, id: &AbstractId) -> bool {
        self.forward.contains_key(id)
    }

    /// Entries ordered by category, then index.
    pub fn iter(&self) -> impl Iterator<Item = (&AbstractId, &str)> {
        self.forward.iter().map(|(k, v)| (k, v.as_str()))
    }

    fn next_index(&self, category: IdCategory) -> u32 {
        self.forward
            .range(AbstractId::new(category, 1)..=AbstractId::new(category, u32::MAX))
            .next_back()
            .map_or(1, |(id, _)| id.index + 1)
    }

    /// Returns the ID for `lexeme`, allocating the next index of `category`
    /// when it is new.
    pub fn intern(&mut self, category: IdCategory, lexeme: &str) -> AbstractId {
        if let Some(id) = self.lookup(category, lexeme) {
            return id;
        }
        let id = AbstractId::new(category, self.next_index(category));
        self.forward.insert(id, lexeme.to_string());
        self.reverse.insert((category, lexeme.to_string()), id);
        id
    }

    /// Inserts a prebuilt entry, as when reading a mapping file.
    pub fn insert(&mut self, id: AbstractId, lexeme: String) -> Result<(), MappingError> {
        if self.forward.contains_key(&id) {
            return Err(MappingError::DuplicateId(id.to_string()));
        }
        if self.reverse.contains_key(&(id.category, lexeme.clone())) {
            return Err(MappingError::DuplicateLexeme {
                category: id.category.prefix(),
                lexeme,
            });
        }
        self.reverse.insert((id.category, lexeme.clone()), id);
        self.forward.insert(id, lexeme);
        Ok(())
    }
}

/// Lexemes kept verbatim during abstraction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdiomSet {
    idioms: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IdiomError {
    #[error("idiom {0:?} collides with the abstract id namespace")]
    LooksLikeId(String),
    #[error("idiom {0:?} is empty or contains whitespace")]
    Malformed(String),
}

impl IdiomSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I, S>(idioms: I) -> Result<Self, IdiomError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = IdiomSet::default();
        for idiom in idioms {
            set.insert(idiom.into())?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, idiom: String) -> Result<(), IdiomError> {
        if idiom.is_empty() || idiom.chars().any(char::is_whitespace) {
            return Err(IdiomError::Malformed(idiom));
        }
        if AbstractId::parse(&idiom).is_some() {
            return Err(IdiomError::LooksLikeId(idiom));
        }
        self.idioms.insert(idiom);
        Ok(())
    }

    pub fn contains(&self, lexeme: &str) -> bool {
        self.idioms.contains(lexeme)
    }

    pub fn len(&self) -> usize {
        self.idioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idioms.is_empty()
    }

    /// Idioms in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.idioms.iter().map(String::as_str)
    }

    pub fn union(&self, other: &IdiomSet) -> IdiomSet {
        IdiomSet {
            idioms: self.idioms.union(&other.idioms).cloned().collect(),
        }
    }

    pub fn is_superset(&self, other: &IdiomSet) -> bool {
        self.idioms.is_superset(&other.idioms)
    }
}

/// Abstracts one token stream, extending `mapping` with any new IDs.
pub fn abstract_method(tokens: &[Token], idioms: &IdiomSet, mapping: &mut IdMapping) -> AbstractedMethod {
    let out = (0..tokens.len())
        .map(|i| {
            let tok = &tokens[i];
            match role_at(tokens, i) {
                Some(category) if !idioms.contains(&tok.lexeme) => {
                    mapping.intern(category, &tok.lexeme).to_string()
                }
                _ => tok.lexeme.clone(),
            }
        })
        .collect();
    AbstractedMethod::new(out)
}

/// Abstracts a buggy/fixed pair with one shared mapping: the buggy method is
/// processed first, so the fixed method only allocates IDs for lexemes the
/// buggy method does not contain.
pub fn abstract_pair(
    buggy: &[Token],
    fixed: &[Token],
    idioms: &IdiomSet,
) -> (AbstractedMethod, AbstractedMethod, IdMapping) {
    let mut mapping = IdMapping::new();
    let b = abstract_method(buggy, idioms, &mut mapping);
    let f = abstract_method(fixed, idioms, &mut mapping);
    (b, f, mapping)
}
