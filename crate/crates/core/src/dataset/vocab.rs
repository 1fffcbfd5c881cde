use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::lexabs::AbstractedMethod;

pub const PAD: &str = "<pad>";
pub const SOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Token table: the three specials at indices 0, 1, 2, then every other
/// token in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("token {0:?} is not in the vocabulary")]
pub struct OutOfVocabulary(pub String);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("vocabulary must start with {PAD}, {SOS}, {EOS}")]
    MissingSpecials,
    #[error("token {0:?} appears twice")]
    Duplicate(String),
    #[error("token {0:?} is empty or contains whitespace")]
    BadToken(String),
}

impl Vocabulary {
    pub const PAD_ID: u32 = 0;
    pub const SOS_ID: u32 = 1;
    pub const EOS_ID: u32 = 2;

    pub fn from_methods<'a, I>(methods: I) -> Vocabulary
    where
        I: IntoIterator<Item = &'a AbstractedMethod>,
    {
        let mut set = BTreeSet::new();
        for m in methods {
            for t in &m.tokens {
                if t != PAD && t != SOS && t != EOS {
                    set.insert(t.clone());
                }
            }
        }
        let mut tokens: Vec<String> = [PAD, SOS, EOS].iter().map(|s| String::from(*s)).collect();
        tokens.extend(set);
        Self::from_tokens(tokens).expect("built from distinct tokens")
    }

    /// Rebuilds a vocabulary from its stored token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary, VocabularyError> {
        if tokens.len() < 3 || tokens[0] != PAD || tokens[1] != SOS || tokens[2] != EOS {
            return Err(VocabularyError::MissingSpecials);
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(VocabularyError::BadToken(t.clone()));
            }
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(VocabularyError::Duplicate(t.clone()));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn encode(&self, m: &AbstractedMethod) -> Result<Vec<u32>, OutOfVocabulary> {
        m.tokens
            .iter()
            .map(|t| self.id(t).ok_or_else(|| OutOfVocabulary(t.clone())))
            .collect()
    }

    /// Decodes ids, dropping specials. Unknown ids decode to nothing.
    pub fn decode(&self, ids: &[u32]) -> AbstractedMethod {
        AbstractedMethod::new(
            ids.iter()
                .filter(|&&i| i > Self::EOS_ID)
                .filter_map(|&i| self.token(i).map(String::from))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn layout_and_round_trip() {
        let a = AbstractedMethod::from_line("return VAR_1 ;");
        let b = AbstractedMethod::from_line("return 0 ;");
        let v = Vocabulary::from_methods([&a, &b]);
        assert_eq!(v.tokens(), ["<pad>", "<s>", "</s>", "0", ";", "VAR_1", "return"]);
        assert_eq!(v.decode(&v.encode(&a).unwrap()), a);
        assert_eq!(
            v.encode(&AbstractedMethod::from_line("return VAR_2 ;")),
            Err(OutOfVocabulary("VAR_2".into()))
        );
        assert_eq!(Vocabulary::from_tokens(v.tokens().to_vec()).unwrap(), v);
    }

    #[test]
    fn stored_lists_are_checked() {
        let s = |xs: &[&str]| xs.iter().map(|x| String::from(*x)).collect::<Vec<_>>();
        assert_eq!(Vocabulary::from_tokens(s(&["a"])), Err(VocabularyError::MissingSpecials));
        assert_eq!(
            Vocabulary::from_tokens(s(&[PAD, SOS, EOS, "a", "a"])),
            Err(VocabularyError::Duplicate("a".into()))
        );
        assert!(Vocabulary::from_tokens(vec![PAD.into(), SOS.into(), EOS.into(), "a b".into()]).is_err());
    }
}
