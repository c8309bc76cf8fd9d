//! Term lists used by the government-entity filter and the noise metric.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::text::{fold, Haystack};

pub const GOVERNMENT_TERMS: &str = include_str!("../assets/lexicons/government.txt");
pub const NOISE_TERMS: &str = include_str!("../assets/lexicons/noise.txt");
pub const NOISE_ORG_TERMS: &str = include_str!("../assets/lexicons/noise_org.txt");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon `{0}` has no terms")]
    Empty(String),
    #[error("cannot read lexicon `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A non-empty set of lowercase terms.
///
/// A name matches when it contains a term on word boundaries, so `jury`
/// matches "the grand jury" but not "injury".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterLexicon {
    terms: BTreeSet<String>,
}

impl FilterLexicon {
    pub fn new<I, S>(terms: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: BTreeSet<String> = terms
            .into_iter()
            .map(|t| fold(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(LexiconError::Empty("<inline>".into()));
        }
        Ok(FilterLexicon { terms })
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn parse(name: &str, text: &str) -> Result<Self, LexiconError> {
        let terms = text
            .lines()
            .map(|l| l.split_once('#').map_or(l, |(before, _)| before).trim())
            .filter(|l| !l.is_empty());
        FilterLexicon::new(terms).map_err(|_| LexiconError::Empty(name.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn default_government() -> Self {
        Self::parse("government", GOVERNMENT_TERMS).expect("bundled lexicon")
    }

    pub fn default_noise() -> Self {
        Self::parse("noise", NOISE_TERMS).expect("bundled lexicon")
    }

    pub fn default_noise_org() -> Self {
        Self::parse("noise_org", NOISE_ORG_TERMS).expect("bundled lexicon")
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// First term contained in `name`, if any.
    pub fn matching_term(&self, name: &str) -> Option<&str> {
        let hay = Haystack::new(name);
        self.terms
            .iter()
            .find(|t| !hay.find_all(t).is_empty())
            .map(String::as_str)
    }

    pub fn matches(&self, name: &str) -> bool {
        self.matching_term(name).is_some()
    }
}
