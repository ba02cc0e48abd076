//! ASCII file formats: a `BRC1 m=<int> t=<int> c=<int>` header line, then
//! one bit string per line, with a trailing newline.
//!
//! Codeword files hold one line of `n` bits, truth files one line of `m`
//! bits, and fragment files one fragment per line in any order. Pattern
//! files hold the ascending cut positions on one line.

use thiserror::Error;

use crate::bits::{BitString, BitsError};
use crate::channel::FragmentMultiset;
use crate::params::{Params, ParamsError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("file is empty; expected a BRC1 header line")]
    Empty,
    #[error(transparent)]
    Header(#[from] ParamsError),
    #[error("file does not end with a newline")]
    MissingNewline,
    #[error("line {0} is empty")]
    EmptyLine(usize),
    #[error("line {line}: {source}")]
    Bits { line: usize, source: BitsError },
    #[error("expected {expected} body line(s), found {got}")]
    LineCount { expected: usize, got: usize },
    #[error("line {line} has {got} bits, expected {expected}")]
    LineLength { line: usize, expected: usize, got: usize },
    #[error("line {line}: {text:?} is not a cut position")]
    BadCut { line: usize, text: String },
}

/// A parsed file: its parameters and body lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitsFile {
    pub params: Params,
    pub lines: Vec<BitString>,
}

impl BitsFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let (params, body) = split_header(text)?;
        let lines = body
            .iter()
            .enumerate()
            .map(|(i, line)| {
                let line_no = i + 2;
                if line.is_empty() {
                    return Err(FormatError::EmptyLine(line_no));
                }
                line.parse().map_err(|source| FormatError::Bits { line: line_no, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { params, lines })
    }

    pub fn render(&self) -> String {
        let mut out = self.params.header();
        out.push('\n');
        for line in &self.lines {
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    /// The single body line, which must have exactly `len` bits.
    pub fn single_line(&self, len: usize) -> Result<&BitString, FormatError> {
        let [line] = &self.lines[..] else {
            return Err(FormatError::LineCount {
                expected: 1,
                got: self.lines.len(),
            });
        };
        if line.len() != len {
            return Err(FormatError::LineLength {
                line: 2,
                expected: len,
                got: line.len(),
            });
        }
        Ok(line)
    }
}

pub fn render_codeword(params: &Params, codeword: &BitString) -> String {
    BitsFile {
        params: *params,
        lines: vec![codeword.clone()],
    }
    .render()
}

pub fn parse_codeword(text: &str) -> Result<(Params, BitString), FormatError> {
    let file = BitsFile::parse(text)?;
    let cw = file.single_line(file.params.n as usize)?.clone();
    Ok((file.params, cw))
}

pub fn parse_truth(text: &str) -> Result<(Params, BitString), FormatError> {
    let file = BitsFile::parse(text)?;
    let z = file.single_line(file.params.m as usize)?.clone();
    Ok((file.params, z))
}

pub fn render_fragments(params: &Params, frags: &FragmentMultiset) -> String {
    BitsFile {
        params: *params,
        lines: frags.fragments().to_vec(),
    }
    .render()
}

pub fn parse_fragments(text: &str) -> Result<(Params, FragmentMultiset), FormatError> {
    let file = BitsFile::parse(text)?;
    Ok((file.params, FragmentMultiset::new(file.lines)))
}

pub fn render_pattern(params: &Params, cuts: &[usize]) -> String {
    let body: Vec<String> = cuts.iter().map(|c| c.to_string()).collect();
    format!("{}\n{}\n", params.header(), body.join(" "))
}

pub fn parse_pattern(text: &str) -> Result<(Params, Vec<usize>), FormatError> {
    let (params, body) = split_header(text)?;
    if body.len() != 1 {
        return Err(FormatError::LineCount {
            expected: 1,
            got: body.len(),
        });
    }
    let cuts = body[0]
        .split_whitespace()
        .map(|s| {
            s.parse().map_err(|_| FormatError::BadCut {
                line: 2,
                text: s.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok((params, cuts))
}

fn split_header(text: &str) -> Result<(Params, Vec<&str>), FormatError> {
    if text.is_empty() {
        return Err(FormatError::Empty);
    }
    let Some(text) = text.strip_suffix('\n') else {
        return Err(FormatError::MissingNewline);
    };
    let mut lines = text.split('\n');
    let header = lines.next().ok_or(FormatError::Empty)?;
    let params = Params::from_header(header.trim_end_matches('\r'))?;
    Ok((params, lines.map(|l| l.trim_end_matches('\r')).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Params {
        Params::derive(256, 2, 3).unwrap()
    }

    #[test]
    fn fragment_file_round_trip() {
        let frags: FragmentMultiset = ["0110", "1", "000111"].iter().map(|s| s.parse().unwrap()).collect();
        let text = render_fragments(&params(), &frags);
        assert!(text.starts_with("BRC1 m=256 t=2 c=3\n"));
        assert!(text.ends_with('\n'));
        let (p, back) = parse_fragments(&text).unwrap();
        assert_eq!(p, params());
        assert_eq!(back, frags);
    }

    #[test]
    fn line_order_is_irrelevant() {
        let a = parse_fragments("BRC1 m=256 t=2 c=3\n01\n1\n").unwrap();
        let b = parse_fragments("BRC1 m=256 t=2 c=3\n1\n01\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse_fragments(""), Err(FormatError::Empty));
        assert_eq!(parse_fragments("BRC1 m=256 t=2 c=3\n01"), Err(FormatError::MissingNewline));
        assert!(matches!(parse_fragments("BRC9 m=256 t=2 c=3\n01\n"), Err(FormatError::Header(_))));
        assert_eq!(parse_fragments("BRC1 m=256 t=2 c=3\n01\n\n1\n"), Err(FormatError::EmptyLine(3)));
        assert!(matches!(
            parse_fragments("BRC1 m=256 t=2 c=3\n0x1\n"),
            Err(FormatError::Bits { line: 2, .. })
        ));
        assert!(matches!(
            parse_codeword("BRC1 m=256 t=2 c=3\n0101\n"),
            Err(FormatError::LineLength { expected: 4456, got: 4, .. })
        ));
        assert!(matches!(
            parse_truth("BRC1 m=256 t=2 c=3\n"),
            Err(FormatError::LineCount { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn pattern_round_trip() {
        let text = render_pattern(&params(), &[3, 17, 400]);
        assert_eq!(text, "BRC1 m=256 t=2 c=3\n3 17 400\n");
        assert_eq!(parse_pattern(&text).unwrap(), (params(), vec![3, 17, 400]));
        assert_eq!(parse_pattern(&render_pattern(&params(), &[])).unwrap().1, Vec::<usize>::new());
    }
}
