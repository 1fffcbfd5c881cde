use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{BugFixPair, Provenance};
use crate::lexabs::{abstract_pair, tokenize, AbstractedMethod, IdMapping, IdiomSet, Token};
use crate::miner::FilePair;
use crate::treediff::{diff, pair_methods, parse_method_decls, parse_single_method, EditAction, MethodDecl};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateContent {
    pub buggy: AbstractedMethod,
    pub fixed: AbstractedMethod,
    pub actions: Vec<EditAction>,
    pub mapping: IdMapping,
}

/// A changed method pair before filtering. `content` holds the lex or parse
/// error when either side could not be processed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub provenance: Provenance,
    pub content: Result<CandidateContent, String>,
}

impl Candidate {
    pub fn into_pair(self) -> Option<BugFixPair> {
        let c = self.content.ok()?;
        Some(BugFixPair {
            buggy: c.buggy,
            fixed: c.fixed,
            actions: c.actions,
            mapping: c.mapping,
            provenance: self.provenance,
        })
    }
}

fn from_decls(b: &MethodDecl, f: &MethodDecl, idioms: &IdiomSet, provenance: Provenance) -> Candidate {
    let (buggy, fixed, mapping) = abstract_pair(&b.tokens, &f.tokens, idioms);
    let actions = diff(&b.ast, &f.ast);
    Candidate {
        provenance,
        content: Ok(CandidateContent {
            buggy,
            fixed,
            actions,
            mapping,
        }),
    }
}

fn same_tokens(a: &[Token], b: &[Token]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.lexeme == y.lexeme)
}

/// Candidates for every method that changed between the two file versions.
/// A file that fails to lex or parse yields a single failed candidate.
pub fn extract_candidates(pair: &FilePair, idioms: &IdiomSet) -> Vec<Candidate> {
    let prov = |method: &str| Provenance {
        repo_id: pair.repo_id.clone(),
        commit_id: pair.commit_id.clone(),
        path: pair.path.clone(),
        method: method.to_string(),
    };
    let parse = |src: &str| -> Result<Vec<MethodDecl>, String> {
        let toks = tokenize(src).map_err(|e| e.to_string())?;
        parse_method_decls(&toks).map_err(|e| e.to_string())
    };
    let (b, f) = match (parse(&pair.buggy_source), parse(&pair.fixed_source)) {
        (Ok(b), Ok(f)) => (b, f),
        (Err(e), _) | (_, Err(e)) => {
            return alloc::vec![Candidate {
                provenance: prov(""),
                content: Err(e),
            }]
        }
    };
    pair_methods(b, f)
        .pairs
        .iter()
        .filter(|p| !same_tokens(&p.buggy.tokens, &p.fixed.tokens))
        .map(|p| from_decls(&p.buggy, &p.fixed, idioms, prov(&p.buggy.name)))
        .collect()
}

/// A candidate from two method texts (each a single declaration).
pub fn build_candidate(buggy_method: &str, fixed_method: &str, idioms: &IdiomSet, provenance: Provenance) -> Candidate {
    let parse = |src: &str| -> Result<MethodDecl, String> {
        let toks = tokenize(src).map_err(|e| e.to_string())?;
        parse_single_method(&toks).map_err(|e| e.to_string())
    };
    match (parse(buggy_method), parse(fixed_method)) {
        (Ok(b), Ok(f)) => from_decls(&b, &f, idioms, provenance),
        (Err(e), _) | (_, Err(e)) => Candidate {
            provenance,
            content: Err(e),
        },
    }
}
