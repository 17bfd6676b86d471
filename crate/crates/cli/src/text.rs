//! Raw text to character bigram tables.
//!
//! Text is lower-cased, accents are folded (NFD then combining marks
//! dropped), every character outside `a-z` becomes a blank and runs of
//! blanks collapse to one. Leading and trailing blanks are trimmed.

use std::path::Path;

use latentem::ContingencyTable;
use ndarray::Array2;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{CliError, Context, Result};

pub const BLANK: char = ' ';

/// Which symbols index the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphabetPolicy {
    /// Only symbols that occur in the text.
    #[default]
    Observed,
    /// Blank plus all 26 letters.
    Full,
}

/// Bigram counts over an ordered alphabet (blank first, then letters).
#[derive(Debug, Clone, PartialEq)]
pub struct BigramTable {
    pub alphabet: Vec<char>,
    pub counts: Array2<f64>,
    pub tokens: usize,
}

impl BigramTable {
    pub fn bigrams(&self) -> usize {
        self.tokens.saturating_sub(1)
    }

    pub fn normalized(&self) -> Array2<f64> {
        let total = self.bigrams() as f64;
        self.counts.mapv(|c| c / total)
    }

    pub fn labels(&self) -> Vec<String> {
        self.alphabet.iter().map(|c| c.to_string()).collect()
    }

    pub fn count(&self, from: char, to: char) -> f64 {
        match (self.index(from), self.index(to)) {
            (Some(i), Some(j)) => self.counts[[i, j]],
            _ => 0.0,
        }
    }

    fn empty_line(&self) -> Option<usize> {
        (0..self.alphabet.len())
            .find(|&i| self.counts.row(i).sum() == 0.0 || self.counts.column(i).sum() == 0.0)
    }

    fn index(&self, c: char) -> Option<usize> {
        self.alphabet.iter().position(|&a| a == c)
    }

    /// Labelled contingency table. Fails when a symbol only opens or only
    /// closes bigrams, which leaves an empty row or column.
    pub fn to_table(&self) -> Result<ContingencyTable> {
        let alphabet = &self.alphabet;
        ContingencyTable::normalize(self.counts.view())
            .and_then(|t| t.with_labels(Some(self.labels()), Some(self.labels())))
            .context(|| match self.empty_line() {
                Some(i) => format!("bigram table: symbol {:?} only opens or only closes the text", alphabet[i]),
                None => "bigram table".to_string(),
            })
    }
}

/// Maps text to its token sequence.
pub fn tokenize(text: &str) -> Vec<char> {
    let mut out = Vec::new();
    for c in text.chars().flat_map(char::to_lowercase).nfd() {
        if is_combining_mark(c) {
            continue;
        }
        let c = if c.is_ascii_lowercase() { c } else { BLANK };
        if c == BLANK && out.last().is_none_or(|&p| p == BLANK) {
            continue;
        }
        out.push(c);
    }
    if out.last() == Some(&BLANK) {
        out.pop();
    }
    out
}

pub fn bigrams(tokens: &[char], policy: AlphabetPolicy) -> BigramTable {
    let alphabet: Vec<char> = std::iter::once(BLANK)
        .chain('a'..='z')
        .filter(|c| policy == AlphabetPolicy::Full || tokens.contains(c))
        .collect();
    let mut index = [usize::MAX; 128];
    for (i, &c) in alphabet.iter().enumerate() {
        index[c as usize] = i;
    }
    let n = alphabet.len();
    let mut counts = Array2::<f64>::zeros((n, n));
    for pair in tokens.windows(2) {
        counts[[index[pair[0] as usize], index[pair[1] as usize]]] += 1.0;
    }
    BigramTable {
        alphabet,
        counts,
        tokens: tokens.len(),
    }
}

/// Reads a UTF-8 text file and counts its character bigrams.
pub fn ingest_text(path: &Path, policy: AlphabetPolicy) -> Result<BigramTable> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::UnmappableEncoding {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    let tokens = tokenize(&text);
    if tokens.len() < 2 {
        return Err(CliError::EmptyText {
            path: path.to_path_buf(),
        });
    }
    Ok(bigrams(&tokens, policy))
}
