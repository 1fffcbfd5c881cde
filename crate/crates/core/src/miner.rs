//! Commit selection and file-pair extraction. Walking actual repositories
//! happens in the `patchnmt` crate; this module only sees commit records.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

const FIX_WORDS: &[&str] = &["fix", "solve"];
const BUG_WORDS: &[&str] = &["bug", "issue", "problem", "error"];

/// True when the message, ignoring case, contains "fix" or "solve" and one
/// of "bug", "issue", "problem", "error", anywhere (so "fixed" counts).
pub fn is_bug_fix_message(message: &str) -> bool {
    let m = message.to_lowercase();
    FIX_WORDS.iter().any(|w| m.contains(w)) && BUG_WORDS.iter().any(|w| m.contains(w))
}

/// One file touched by a commit. `pre_content` is `None` for files the
/// commit created, `post_content` is `None` for files it deleted. Renamed
/// files appear once, under their new path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedFile {
    pub path: String,
    pub pre_content: Option<String>,
    pub post_content: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub repo_id: String,
    pub commit_id: String,
    pub message: String,
    pub changed_files: Vec<ChangedFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("malformed commit record: {field} {problem}")]
pub struct IngestError {
    pub field: &'static str,
    pub problem: &'static str,
}

impl CommitRecord {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |field, problem| Err(IngestError { field, problem });
        if self.repo_id.is_empty() {
            return bad("repo_id", "is empty");
        }
        if self.commit_id.is_empty() {
            return bad("commit_id", "is empty");
        }
        if self.changed_files.is_empty() {
            return bad("changed_files", "is empty");
        }
        let mut seen = BTreeSet::new();
        for f in &self.changed_files {
            if f.path.is_empty() {
                return bad("changed_files.path", "is empty");
            }
            if !seen.insert(f.path.as_str()) {
                return bad("changed_files.path", "is repeated");
            }
            if f.pre_content.is_none() && f.post_content.is_none() {
                return bad("changed_files", "has neither pre nor post content");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FilePair {
    pub repo_id: String,
    pub commit_id: String,
    pub path: String,
    pub buggy_source: String,
    pub fixed_source: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinerConfig {
    /// Source extension including the dot.
    pub extension: String,
    pub max_changed_files: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            extension: String::from(".java"),
            max_changed_files: 5,
        }
    }
}

/// Buggy/fixed pairs for the modified source files of a bug-fixing commit,
/// sorted by path.
///
/// Commits touching more than `max_changed_files` source files yield
/// nothing. Files created or deleted by the commit have no buggy (or fixed)
/// version and are skipped; the other files of the commit are kept.
pub fn extract_file_pairs(commit: &CommitRecord, config: &MinerConfig) -> Result<Vec<FilePair>, IngestError> {
    commit.validate()?;
    let sources: Vec<&ChangedFile> = commit
        .changed_files
        .iter()
        .filter(|f| f.path.ends_with(config.extension.as_str()))
        .collect();
    if sources.len() > config.max_changed_files {
        return Ok(Vec::new());
    }
    let mut out: Vec<FilePair> = sources
        .into_iter()
        .filter_map(|f| match (&f.pre_content, &f.post_content) {
            (Some(pre), Some(post)) if pre != post => Some(FilePair {
                repo_id: commit.repo_id.clone(),
                commit_id: commit.commit_id.clone(),
                path: f.path.clone(),
                buggy_source: pre.clone(),
                fixed_source: post.clone(),
            }),
            _ => None,
        })
        .collect();
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}
