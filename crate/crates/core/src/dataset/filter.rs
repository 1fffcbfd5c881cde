use alloc::collections::BTreeMap;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{BugFixPair, Candidate};

pub const MAX_ACTIONS: usize = 100;
pub const DEFAULT_ID_CAP: u32 = 10;
pub const SMALL_MAX: usize = 50;
pub const MEDIUM_MAX: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    LexOrParseError,
    IdenticalAfterAbstraction,
    TooManyActions,
    NoActions,
    IdOverCap,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            RejectReason::LexOrParseError => "lex_or_parse_error",
            RejectReason::IdenticalAfterAbstraction => "identical_after_abstraction",
            RejectReason::TooManyActions => "too_many_actions",
            RejectReason::NoActions => "no_actions",
            RejectReason::IdOverCap => "id_over_cap",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

/// Applies the filters in order: lex/parse failure, identical abstracted
/// code, more than [`MAX_ACTIONS`] actions, no actions, and an ID index
/// above `id_cap` in any category.
pub fn filter_pair(candidate: &Candidate, id_cap: u32) -> Verdict {
    let Ok(c) = &candidate.content else {
        return Verdict::Reject(RejectReason::LexOrParseError);
    };
    let reason = if c.buggy == c.fixed {
        RejectReason::IdenticalAfterAbstraction
    } else if c.actions.len() > MAX_ACTIONS {
        RejectReason::TooManyActions
    } else if c.actions.is_empty() {
        RejectReason::NoActions
    } else if c.buggy.max_id_index().max(c.fixed.max_id_index()) > id_cap {
        RejectReason::IdOverCap
    } else {
        return Verdict::Accept;
    };
    Verdict::Reject(reason)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Small,
    Medium,
    Oversize,
}

impl Bucket {
    pub fn name(self) -> &'static str {
        match self {
            Bucket::Small => "small",
            Bucket::Medium => "medium",
            Bucket::Oversize => "oversize",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Bucket {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(Bucket::Small),
            "medium" => Ok(Bucket::Medium),
            "oversize" => Ok(Bucket::Oversize),
            _ => Err(alloc::format!("unknown bucket {s:?}")),
        }
    }
}

/// Length is the longer of the two abstracted token sequences.
pub fn bucket(pair: &BugFixPair) -> Bucket {
    bucket_for_len(pair.buggy.len().max(pair.fixed.len()))
}

pub(crate) fn bucket_for_len(len: usize) -> Bucket {
    if len <= SMALL_MAX {
        Bucket::Small
    } else if len <= MEDIUM_MAX {
        Bucket::Medium
    } else {
        Bucket::Oversize
    }
}

/// Counts of accepted candidates, rejections by reason and bucket sizes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub candidates: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<RejectReason, usize>,
    pub buckets: BTreeMap<Bucket, usize>,
}

impl FilterStats {
    pub fn record(&mut self, verdict: Verdict) {
        self.candidates += 1;
        match verdict {
            Verdict::Accept => self.accepted += 1,
            Verdict::Reject(r) => *self.rejected.entry(r).or_insert(0) += 1,
        }
    }

    pub fn record_bucket(&mut self, b: Bucket) {
        *self.buckets.entry(b).or_insert(0) += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CandidateContent, Provenance};
    use crate::lexabs::{AbstractedMethod, IdMapping};
    use crate::treediff::{EditAction, EditOp, NodeType};
    use alloc::string::{String, ToString};
    use alloc::vec::Vec;

    fn actions(n: usize) -> Vec<EditAction> {
        (0..n)
            .map(|i| EditAction {
                node_type: NodeType::Literal,
                context_type: NodeType::Return,
                op: EditOp::Update {
                    node: i,
                    new_label: String::from("1"),
                },
            })
            .collect()
    }

    fn cand(b: &str, f: &str, n: usize) -> Candidate {
        Candidate {
            provenance: Provenance::default(),
            content: Ok(CandidateContent {
                buggy: AbstractedMethod::from_line(b),
                fixed: AbstractedMethod::from_line(f),
                actions: actions(n),
                mapping: IdMapping::new(),
            }),
        }
    }

    #[test]
    fn reasons() {
        assert_eq!(filter_pair(&cand("a", "b", 101), 10), Verdict::Reject(RejectReason::TooManyActions));
        assert_eq!(filter_pair(&cand("a", "b", 100), 10), Verdict::Accept);
        assert_eq!(filter_pair(&cand("a", "a", 3), 10), Verdict::Reject(RejectReason::IdenticalAfterAbstraction));
        assert_eq!(filter_pair(&cand("a", "b", 4), 10), Verdict::Accept);
        assert_eq!(filter_pair(&cand("a", "b", 0), 10), Verdict::Reject(RejectReason::NoActions));
        assert_eq!(filter_pair(&cand("VAR_11", "b", 1), 10), Verdict::Reject(RejectReason::IdOverCap));
        assert_eq!(filter_pair(&cand("VAR_10", "b", 1), 10), Verdict::Accept);
        let broken = Candidate {
            provenance: Provenance::default(),
            content: Err(String::from("x")),
        };
        assert_eq!(filter_pair(&broken, 10), Verdict::Reject(RejectReason::LexOrParseError));
        assert_eq!(RejectReason::TooManyActions.to_string(), "too_many_actions");
    }

    #[test]
    fn bucket_bounds() {
        assert_eq!(bucket_for_len(50), Bucket::Small);
        assert_eq!(bucket_for_len(51), Bucket::Medium);
        assert_eq!(bucket_for_len(100), Bucket::Medium);
        assert_eq!(bucket_for_len(101), Bucket::Oversize);
    }
}
