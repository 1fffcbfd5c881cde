//! Bug-fix pairs: extraction from file pairs, filtering, bucketing,
//! deduplication, splitting, the vocabulary, and a synthetic corpus.

mod extract;
mod filter;
mod split;
mod synthetic;
mod vocab;

pub use extract::{build_candidate, extract_candidates, Candidate, CandidateContent};
pub use filter::{bucket, filter_pair, Bucket, FilterStats, RejectReason, Verdict, DEFAULT_ID_CAP, MAX_ACTIONS};
pub use split::{dedup, dedup_and_split, split_counts, DatasetBundle, SplitError};
pub use synthetic::{
    generate_synthetic_corpus, generate_synthetic_samples, MutationKind, NamePool, SyntheticConfig, SyntheticError,
    SyntheticSample,
};
pub use vocab::{OutOfVocabulary, Vocabulary, VocabularyError, EOS, PAD, SOS};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lexabs::{AbstractedMethod, IdMapping};
use crate::treediff::EditAction;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub repo_id: String,
    pub commit_id: String,
    pub path: String,
    pub method: String,
}

/// An accepted pair: abstracted buggy and fixed code, the edit actions
/// between the original methods, and the identifier mapping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BugFixPair {
    pub buggy: AbstractedMethod,
    pub fixed: AbstractedMethod,
    pub actions: Vec<EditAction>,
    pub mapping: IdMapping,
    pub provenance: Provenance,
}
