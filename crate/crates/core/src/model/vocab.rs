use crate::token::Token;
use std::collections::HashMap;

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK_ID: usize = 3;

pub const RESERVED: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Dense bidirectional token <-> index map with reserved specials at 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary in first-occurrence order over the given
    /// sequences. Corpus tokens colliding with reserved names keep the
    /// reserved index.
    pub fn build<'a>(seqs: impl Iterator<Item = &'a [Token]>) -> Self {
        let mut v = Vocab {
            tokens: RESERVED.iter().map(|s| s.to_string()).collect(),
            index: RESERVED
                .iter()
                .enumerate()
                .map(|(i, s)| (s.to_string(), i))
                .collect(),
        };
        for s in seqs {
            for t in s {
                v.intern(t.as_str());
            }
        }
        v
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Vocab { tokens, index }
    }

    fn intern(&mut self, tok: &str) -> usize {
        if let Some(&i) = self.index.get(tok) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(tok.to_string());
        self.index.insert(tok.to_string(), i);
        i
    }

    pub fn id(&self, tok: &str) -> usize {
        self.index.get(tok).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, seq: &[Token]) -> Vec<usize> {
        seq.iter().map(|t| self.id(t.as_str())).collect()
    }

    /// Decodes ids into tokens, dropping specials.
    pub fn decode(&self, ids: &[usize]) -> Vec<Token> {
        ids.iter()
            .filter(|&&i| i >= RESERVED.len())
            .map(|&i| Token::new(self.token(i)).unwrap())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::seq;

    #[test]
    fn dense_indices_and_unknowns() {
        let s = seq("jump twice jump");
        let v = Vocab::build([s.as_slice()].into_iter());
        assert_eq!(v.len(), 6);
        assert_eq!(v.id("jump"), 4);
        assert_eq!(v.id("twice"), 5);
        assert_eq!(v.id("missing"), UNK_ID);
        assert_eq!(v.encode(&s), vec![4, 5, 4]);
        assert_eq!(v.decode(&[4, 5, EOS]), seq("jump twice"));
    }
}
