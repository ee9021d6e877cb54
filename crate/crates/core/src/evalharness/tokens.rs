use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::scoring::Percentage;

pub trait Tokenizer {
    fn count(&self, text: &str) -> u64;
}

/// Runs of letters, digits and underscores are one token each; every other
/// non-whitespace character is a token by itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct WordPunctTokenizer;

impl Tokenizer for WordPunctTokenizer {
    fn count(&self, text: &str) -> u64 {
        let mut count = 0;
        let mut in_word = false;
        for c in text.chars() {
            let word = c.is_alphanumeric() || c == '_';
            if word && !in_word || !word && !c.is_whitespace() {
                count += 1;
            }
            in_word = word;
        }
        count
    }
}

/// Programs in a fixed order, each with the name it was loaded under.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub programs: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} contains no programs")]
    Empty(PathBuf),
    #[error("invalid token-count file {path}: {message}")]
    BadCounts { path: PathBuf, message: String },
    #[error("no token count given for program `{0}`")]
    MissingCount(String),
    #[error("reference corpus has no tokens")]
    ZeroReference,
}

/// Every regular file directly inside `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut programs = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        if path.is_file() {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            programs.push((name, std::fs::read_to_string(&path).map_err(io(&path))?));
        }
    }
    if programs.is_empty() {
        return Err(CorpusError::Empty(dir.to_path_buf()));
    }
    programs.sort();
    Ok(Corpus { programs })
}

/// Precomputed token counts keyed by program name, for tokenizers that are
/// not available in-process. The file is a JSON object of name to count.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountFileTokenizer {
    pub counts: BTreeMap<String, u64>,
}

impl CountFileTokenizer {
    pub fn total(&self, corpus: &Corpus) -> Result<u64, CorpusError> {
        corpus
            .programs
            .iter()
            .map(|(name, _)| self.counts.get(name).copied().ok_or_else(|| CorpusError::MissingCount(name.clone())))
            .sum()
    }
}

pub fn load_token_counts(path: &Path) -> Result<CountFileTokenizer, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let counts = serde_json::from_str(&text)
        .map_err(|e| CorpusError::BadCounts { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(CountFileTokenizer { counts })
}

pub fn total_tokens(corpus: &Corpus, tokenizer: &dyn Tokenizer) -> u64 {
    corpus.programs.iter().map(|(_, text)| tokenizer.count(text)).sum()
}

/// `100 * (1 - a / b)`: how many fewer tokens `a` needs than the reference
/// `b`. Negative when `a` is longer.
pub fn token_reduction(a_total: u64, b_total: u64) -> Result<Percentage, CorpusError> {
    if b_total == 0 {
        return Err(CorpusError::ZeroReference);
    }
    Ok(Percentage::from_ratio(i128::from(b_total) - i128::from(a_total), i128::from(b_total)))
}
