//! Corpus files: UTF-8 text, one SMILES per line, `#` comment lines ignored,
//! trailing whitespace stripped.

use std::path::Path;

use thiserror::Error;

use super::{check_valence, parse_smiles, MoleculeGraph};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("corpus is empty")]
    Empty,
}

/// Strip comments and blank lines; returns (1-based line number, SMILES).
pub fn corpus_lines(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                None
            } else {
                Some((i + 1, line.to_string()))
            }
        })
        .collect()
}

pub fn load_lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    let lines = corpus_lines(&text);
    if lines.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(lines)
}

/// Parse and valence-check every line; the first failure is reported with
/// its line number.
pub fn parse_corpus(lines: &[(usize, String)]) -> Result<Vec<MoleculeGraph>, CorpusError> {
    let mut out = Vec::with_capacity(lines.len());
    for (line, smiles) in lines {
        let mol = parse_smiles(smiles).map_err(|e| CorpusError::Line {
            line: *line,
            message: e.to_string(),
        })?;
        let report = check_valence(&mol);
        if !report.valid {
            return Err(CorpusError::Line {
                line: *line,
                message: format!(
                    "fails valence check ({})",
                    report
                        .failures
                        .first()
                        .map(|f| f.reason.clone())
                        .unwrap_or_default()
                ),
            });
        }
        out.push(mol);
    }
    if out.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks_are_skipped() {
        let lines = corpus_lines("# header\nCCO\n\nc1ccccc1   \n# tail\n");
        assert_eq!(
            lines,
            vec![(2, "CCO".to_string()), (4, "c1ccccc1".to_string())]
        );
    }

    #[test]
    fn bad_line_is_reported_with_number() {
        let lines = corpus_lines("CCO\nC1CC\n");
        let err = parse_corpus(&lines).unwrap_err();
        match err {
            CorpusError::Line { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
