use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::chem::{parse_smiles, randomize_smiles};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;

const SPECIALS: [&str; 3] = ["<pad>", "<bos>", "<eos>"];

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("sequence tokenizes to {got} tokens, exceeding the limit of {limit}")]
    TooLong { got: usize, limit: usize },
    #[error("unknown token at byte {pos} of '{text}'")]
    UnknownToken { pos: usize, text: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("vocabulary file is malformed: {0}")]
    Malformed(String),
}

/// Bidirectional token/id map with greedy longest-first tokenization.
///
/// Multi-character chemical tokens (`Cl`, `Br`, `%nn`) are single entries;
/// everything else is one character. Ids 0..2 are PAD/BOS/EOS.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    max_token_len: usize,
}

/// Fixed-length id sequence: BOS + tokens + EOS, padded to the model length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence(pub Vec<u32>);

impl TokenSequence {
    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_eos(&self) -> bool {
        self.0.contains(&EOS)
    }
}

impl Vocabulary {
    fn from_token_set(set: BTreeSet<String>) -> Self {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(set);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let max_token_len = tokens.iter().map(String::len).max().unwrap_or(1);
        Self {
            tokens,
            index,
            max_token_len,
        }
    }

    /// Build a vocabulary from corpus lines.
    ///
    /// Besides the lexemes of the lines themselves, a few seeded random
    /// re-serializations of each molecule are scanned (atom reordering can
    /// introduce ring digits and branch parentheses absent from the original
    /// text), and the core structural tokens are always present.
    pub fn from_corpus(lines: &[String], extra_serializations: usize) -> Self {
        let mut set: BTreeSet<String> = ["(", ")", "-", "=", "#", "1", "2", "3", "4", "5"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for line in lines {
            scan_lexemes(line, &mut set);
            if extra_serializations > 0 {
                if let Ok(mol) = parse_smiles(line) {
                    for seed in 0..extra_serializations as u64 {
                        scan_lexemes(&randomize_smiles(&mol, seed), &mut set);
                    }
                }
            }
        }
        Self::from_token_set(set)
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Greedy longest-first tokenization, then BOS + ids + EOS padded to
    /// `seq_len`.
    pub fn tokenize(&self, text: &str, seq_len: usize) -> Result<TokenSequence, VocabError> {
        let mut ids = vec![BOS];
        let bytes = text.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() {
            let mut matched = None;
            let top = (pos + self.max_token_len).min(bytes.len());
            for end in (pos + 1..=top).rev() {
                if let Ok(piece) = std::str::from_utf8(&bytes[pos..end]) {
                    if let Some(&id) = self.index.get(piece) {
                        matched = Some((id, end));
                        break;
                    }
                }
            }
            let Some((id, end)) = matched else {
                return Err(VocabError::UnknownToken {
                    pos,
                    text: text.to_string(),
                });
            };
            ids.push(id);
            pos = end;
        }
        ids.push(EOS);
        if ids.len() > seq_len {
            return Err(VocabError::TooLong {
                got: ids.len(),
                limit: seq_len,
            });
        }
        ids.resize(seq_len, PAD);
        Ok(TokenSequence(ids))
    }

    /// BOS + tokens + EOS with no padding; used for scaffold sequences whose
    /// natural length is kept.
    pub fn tokenize_unpadded(
        &self,
        text: &str,
        max_len: usize,
    ) -> Result<TokenSequence, VocabError> {
        let padded = self.tokenize(text, max_len)?;
        let len = padded
            .ids()
            .iter()
            .position(|&id| id == EOS)
            .expect("tokenize always writes EOS")
            + 1;
        Ok(TokenSequence(padded.ids()[..len].to_vec()))
    }

    /// Join the tokens between BOS and EOS (or to the end when EOS is
    /// missing), dropping all specials.
    pub fn detokenize(&self, seq: &TokenSequence) -> String {
        let mut out = String::new();
        for &id in seq.ids() {
            if id == EOS {
                break;
            }
            if id == PAD || id == BOS {
                continue;
            }
            out.push_str(self.token(id));
        }
        out
    }

    /// One token per line; the line number is the id.
    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        Ok(std::fs::write(path, self.tokens.join("\n") + "\n")?)
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        let text = std::fs::read_to_string(path)?;
        let tokens: Vec<String> = text.lines().map(str::to_string).collect();
        if tokens.len() < SPECIALS.len()
            || tokens[..SPECIALS.len()] != SPECIALS.map(str::to_string)
        {
            return Err(VocabError::Malformed(
                "first three lines must be the special tokens".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &tokens {
            if !seen.insert(t.clone()) {
                return Err(VocabError::Malformed(format!("duplicate token '{t}'")));
            }
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let max_token_len = tokens.iter().map(String::len).max().unwrap_or(1);
        Ok(Self {
            tokens,
            index,
            max_token_len,
        })
    }
}

/// Split a SMILES string into its lexemes: two-letter halogens, `%nn` ring
/// labels, and single characters.
fn scan_lexemes(text: &str, set: &mut BTreeSet<String>) {
    let bytes = text.as_bytes();
    let mut pos = 0;
    while pos < bytes.len() {
        let take = if bytes[pos] == b'%' && pos + 2 < bytes.len() {
            3
        } else if pos + 1 < bytes.len()
            && matches!(&bytes[pos..pos + 2], b"Cl" | b"Br")
        {
            2
        } else {
            1
        };
        set.insert(String::from_utf8_lossy(&bytes[pos..pos + take]).into_owned());
        pos += take;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(lines: &[&str]) -> Vocabulary {
        Vocabulary::from_corpus(&lines.iter().map(|s| s.to_string()).collect::<Vec<_>>(), 4)
    }

    #[test]
    fn chlorine_is_one_token() {
        let v = vocab(&["ClCCl", "CCO"]);
        let seq = v.tokenize("ClC", 8).unwrap();
        // BOS, Cl, C, EOS, PAD...
        assert_eq!(seq.ids()[0], BOS);
        assert_eq!(v.token(seq.ids()[1]), "Cl");
        assert_eq!(v.token(seq.ids()[2]), "C");
        assert_eq!(seq.ids()[3], EOS);
        assert_eq!(seq.ids()[4..], [PAD; 4]);
    }

    #[test]
    fn percent_ring_label_is_one_token() {
        let v = vocab(&["C%12CCCCCCCCCC%12"]);
        let seq = v.tokenize("C%12C", 8).unwrap();
        assert_eq!(v.token(seq.ids()[2]), "%12");
    }

    #[test]
    fn roundtrip_over_corpus_lines() {
        let lines = ["CC(=O)Nc1ccc(O)cc1", "ClCCBr", "c1ccc2ncsc2c1"];
        let v = vocab(&lines);
        for line in lines {
            let seq = v.tokenize(line, 64).unwrap();
            assert_eq!(v.detokenize(&seq), line);
            assert!(seq.has_eos());
        }
    }

    #[test]
    fn too_long_and_unknown_are_errors() {
        let v = vocab(&["CCO"]);
        assert!(matches!(
            v.tokenize("CCCCCCCC", 6),
            Err(VocabError::TooLong { .. })
        ));
        assert!(matches!(
            v.tokenize("CN", 8),
            Err(VocabError::UnknownToken { .. })
        ));
    }

    #[test]
    fn save_load_preserves_ids() {
        let v = vocab(&["CC(=O)Nc1ccc(O)cc1"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        v.save(&path).unwrap();
        let loaded = Vocabulary::load(&path).unwrap();
        assert_eq!(loaded.size(), v.size());
        for id in 0..v.size() as u32 {
            assert_eq!(loaded.token(id), v.token(id));
        }
    }
}
