//! Tokens, samples, and the tab-separated sample file format.
//!
//! A sample line is `source<TAB>target\n` with tokens separated by single
//! spaces. This format is shared by every dataset the crate produces.

use crate::error::{DataError, TokenError};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashSet as StdHashSet;
use std::fmt;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::sync::{Mutex, OnceLock};

/// Global string interner. Vocabularies are small and bounded, so leaking
/// each distinct token once is fine; interning makes `Token` a `Copy` type
/// with pointer-based equality, which the counting pipelines rely on for
/// speed.
static INTERN: OnceLock<Mutex<StdHashSet<&'static str>>> = OnceLock::new();

fn intern(text: &str) -> &'static str {
    let mut set = INTERN
        .get_or_init(|| Mutex::new(StdHashSet::new()))
        .lock()
        .unwrap();
    match set.get(text) {
        Some(&s) => s,
        None => {
            let leaked: &'static str = Box::leak(text.to_owned().into_boxed_str());
            set.insert(leaked);
            leaked
        }
    }
}

/// A single word or action symbol. Non-empty, no internal whitespace.
/// Interned: equal content implies the same pointer.
#[derive(Debug, Clone, Copy, Eq)]
pub struct Token(&'static str);

impl Token {
    pub fn new(text: impl AsRef<str>) -> Result<Self, TokenError> {
        let text = text.as_ref();
        if text.is_empty() {
            return Err(TokenError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace(text.to_owned()));
        }
        Ok(Token(intern(text)))
    }

    pub fn as_str(&self) -> &str {
        self.0
    }
}

impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}

impl Hash for Token {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.0.as_ptr() as usize).hash(state);
    }
}

impl PartialOrd for Token {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Token {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(other.0)
    }
}

impl Serialize for Token {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.0)
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Token::new(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Splits whitespace-separated text into tokens. Panics on tokens that fail
/// validation, which cannot happen for output of `str::split_whitespace`.
pub fn seq(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|w| Token::new(w).expect("whitespace-split token"))
        .collect()
}

/// Renders a token sequence as a space-joined string.
pub fn render(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One source sequence paired with one target sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sample {
    pub source: Vec<Token>,
    pub target: Vec<Token>,
}

impl Sample {
    pub fn new(source: Vec<Token>, target: Vec<Token>) -> Self {
        debug_assert!(!source.is_empty() && !target.is_empty());
        Sample { source, target }
    }

    /// Builds a sample from two space-separated strings.
    pub fn from_text(source: &str, target: &str) -> Self {
        Sample::new(seq(source), seq(target))
    }

    pub fn to_line(&self) -> String {
        format!("{}\t{}", render(&self.source), render(&self.target))
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, DataError> {
        let mut parts = line.splitn(2, '\t');
        let src = parts.next().unwrap_or("");
        let tgt = parts.next().ok_or_else(|| DataError::BadLine {
            line: line_no,
            reason: "missing tab separator".into(),
        })?;
        let source = seq(src);
        let target = seq(tgt);
        if source.is_empty() || target.is_empty() {
            return Err(DataError::BadLine {
                line: line_no,
                reason: "empty source or target".into(),
            });
        }
        Ok(Sample { source, target })
    }
}

/// Writes samples in the tab-separated format, newline-terminated.
pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<(), DataError> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<Vec<Sample>, DataError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Sample::parse_line(l, i + 1))
        .collect()
}

/// Index of the first occurrence of `needle` as a contiguous subsequence.
pub fn find_subseq(haystack: &[Token], needle: &[Token]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Number of non-overlapping occurrences of `needle`, scanned left to right.
pub fn count_subseq(haystack: &[Token], needle: &[Token]) -> usize {
    if needle.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut i = 0;
    while i + needle.len() <= haystack.len() {
        if &haystack[i..i + needle.len()] == needle {
            count += 1;
            i += needle.len();
        } else {
            i += 1;
        }
    }
    count
}

/// Replaces every non-overlapping occurrence of `needle` with `replacement`.
pub fn replace_all_subseq(
    haystack: &[Token],
    needle: &[Token],
    replacement: &[Token],
) -> Vec<Token> {
    let mut out = Vec::with_capacity(haystack.len());
    let mut i = 0;
    while i < haystack.len() {
        if i + needle.len() <= haystack.len() && &haystack[i..i + needle.len()] == needle {
            out.extend_from_slice(replacement);
            i += needle.len();
        } else {
            out.push(haystack[i].clone());
            i += 1;
        }
    }
    out
}
