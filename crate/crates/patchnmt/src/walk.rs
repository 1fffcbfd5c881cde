//! Turns git repositories and pre/post directory corpora into commit
//! records for the miner.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use patchnmt_core::miner::{extract_file_pairs, is_bug_fix_message, ChangedFile, CommitRecord, FilePair, MinerConfig};

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct WalkStats {
    pub roots: usize,
    pub skipped_roots: usize,
    pub commits: usize,
    pub bug_fix_commits: usize,
    pub skipped_commits: usize,
    pub file_pairs: usize,
}

fn repo_id(root: &Path) -> String {
    let canon = root.canonicalize().unwrap_or_else(|_| root.to_path_buf());
    canon
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| canon.display().to_string())
}

fn git(root: &Path, args: &[&str]) -> Result<Vec<u8>> {
    let out = Command::new("git")
        .arg("-C")
        .arg(root)
        .args(args)
        .output()
        .context("running git")?;
    if !out.status.success() {
        bail!("git {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim());
    }
    Ok(out.stdout)
}

/// True only when `root` is the top of a work tree, so a directory corpus
/// that happens to sit inside some checkout is not mistaken for one.
fn is_git_repo(root: &Path) -> bool {
    let Ok(top) = git(root, &["rev-parse", "--show-toplevel"]) else {
        return false;
    };
    let top = PathBuf::from(String::from_utf8_lossy(&top).trim());
    match (top.canonicalize(), root.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn blob(root: &Path, rev: &str, path: &str) -> Result<String> {
    let bytes = git(root, &["cat-file", "blob", &format!("{rev}:{path}")])?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// First-parent, non-merge history, oldest first: (hash, message).
fn git_commits(root: &Path) -> Result<Vec<(String, String)>> {
    let raw = git(root, &["log", "--first-parent", "--no-merges", "--reverse", "--format=%H%x00%B%x00"])?;
    let text = String::from_utf8_lossy(&raw);
    let fields: Vec<&str> = text.split('\0').collect();
    Ok(fields
        .chunks(2)
        .filter(|c| c.len() == 2)
        .map(|c| (c[0].trim().to_string(), c[1].to_string()))
        .filter(|(h, _)| !h.is_empty())
        .collect())
}

fn git_record(root: &Path, repo: &str, hash: &str, message: &str) -> Result<CommitRecord> {
    let raw = git(root, &["diff-tree", "-r", "-M", "--root", "--no-commit-id", "--name-status", "-z", hash])?;
    let text = String::from_utf8_lossy(&raw).into_owned();
    let mut it = text.split('\0').filter(|s| !s.is_empty());
    let parent = format!("{hash}^");
    let mut files = Vec::new();
    while let Some(status) = it.next() {
        let code = status.chars().next().unwrap_or('?');
        let (old, new) = match code {
            'R' | 'C' => {
                let old = it.next().context("rename without source")?;
                let new = it.next().context("rename without target")?;
                (Some(old), new)
            }
            _ => {
                let p = it.next().context("status without path")?;
                (Some(p), p)
            }
        };
        let (pre, post) = match code {
            'A' | 'C' => (None, Some(blob(root, hash, new)?)),
            'D' => (Some(blob(root, &parent, new)?), None),
            _ => (Some(blob(root, &parent, old.unwrap_or(new))?), Some(blob(root, hash, new)?)),
        };
        files.push(ChangedFile {
            path: new.to_string(),
            pre_content: pre,
            post_content: post,
        });
    }
    Ok(CommitRecord {
        repo_id: repo.to_string(),
        commit_id: hash.to_string(),
        message: message.to_string(),
        changed_files: files,
    })
}

fn list_files(base: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    if !base.is_dir() {
        return Ok(out);
    }
    let mut stack = vec![base.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(base).expect("under base");
                out.insert(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    Ok(out)
}

fn read_opt(path: &Path) -> Result<Option<String>> {
    if path.is_file() {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Some(String::from_utf8_lossy(&bytes).into_owned()))
    } else {
        Ok(None)
    }
}

/// `<id>/buggy/<path>` and `<id>/fixed/<path>`. Every entry is taken as a
/// bug-fixing commit; there is no message to check.
fn directory_records(root: &Path, repo: &str) -> Result<Vec<CommitRecord>> {
    let mut ids: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    ids.sort();
    let mut out = Vec::new();
    for dir in ids {
        let id = dir.file_name().expect("entry name").to_string_lossy().into_owned();
        let (b, f) = (dir.join("buggy"), dir.join("fixed"));
        let paths: BTreeSet<String> = list_files(&b)?.union(&list_files(&f)?).cloned().collect();
        let mut files = Vec::new();
        for p in paths {
            files.push(ChangedFile {
                pre_content: read_opt(&b.join(&p))?,
                post_content: read_opt(&f.join(&p))?,
                path: p,
            });
        }
        out.push(CommitRecord {
            repo_id: repo.to_string(),
            commit_id: id,
            message: String::new(),
            changed_files: files,
        });
    }
    Ok(out)
}

/// File pairs from every bug-fixing commit under `roots`, in root order,
/// then history order, then path order. Unreadable roots and broken
/// commits are skipped with a warning.
pub fn walk_repositories(roots: &[PathBuf], config: &MinerConfig) -> (Vec<FilePair>, WalkStats) {
    let mut stats = WalkStats::default();
    let mut pairs = Vec::new();
    for root in roots {
        stats.roots += 1;
        let repo = repo_id(root);
        if is_git_repo(root) {
            let commits = match git_commits(root) {
                Ok(c) => c,
                Err(e) => {
                    warn!("skipping repository {}: {e:#}", root.display());
                    stats.skipped_roots += 1;
                    continue;
                }
            };
            for (hash, message) in commits {
                stats.commits += 1;
                if stats.commits % 1000 == 0 {
                    info!("progress commits={} pairs={}", stats.commits, pairs.len());
                }
                if !is_bug_fix_message(&message) {
                    continue;
                }
                stats.bug_fix_commits += 1;
                let got = git_record(root, &repo, &hash, &message)
                    .and_then(|r| extract_file_pairs(&r, config).map_err(anyhow::Error::from));
                match got {
                    Ok(ps) => pairs.extend(ps),
                    Err(e) => {
                        warn!("skipping commit {hash} in {repo}: {e:#}");
                        stats.skipped_commits += 1;
                    }
                }
            }
        } else if root.is_dir() {
            let records = match directory_records(root, &repo) {
                Ok(r) => r,
                Err(e) => {
                    warn!("skipping corpus {}: {e:#}", root.display());
                    stats.skipped_roots += 1;
                    continue;
                }
            };
            for r in records {
                stats.commits += 1;
                stats.bug_fix_commits += 1;
                match extract_file_pairs(&r, config) {
                    Ok(ps) => pairs.extend(ps),
                    Err(e) => {
                        warn!("skipping entry {} in {repo}: {e}", r.commit_id);
                        stats.skipped_commits += 1;
                    }
                }
            }
        } else {
            warn!("skipping {}: not a git repository or directory", root.display());
            stats.skipped_roots += 1;
        }
    }
    stats.file_pairs = pairs.len();
    (pairs, stats)
}
