//! Plain-text matrix files.
//!
//! ```text
//! # comment
//! matrix x 2
//! 0 1+0.5j
//! 0 -2j
//! ```
//!
//! A block is a header `matrix <name> <n>` followed by `n` rows of `n`
//! entries. Entries are `<float>`, `<float>±<float>j` or `<float>j`.
//! Serialization writes every entry as `<re>±<im>j` with 17 significant
//! digits, which reproduces each `f64` exactly.

use std::fmt::Write as _;

use baerdec::{CMat, C64};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct MatFileError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> MatFileError {
    MatFileError {
        line,
        column,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixFile {
    blocks: Vec<(String, CMat)>,
}

impl MatrixFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block; names must be valid identifiers and unique.
    pub fn push(&mut self, name: &str, m: CMat) -> Result<(), String> {
        if !valid_name(name) {
            return Err(format!("`{name}` is not a valid matrix name"));
        }
        if self.get(name).is_some() {
            return Err(format!("duplicate matrix name `{name}`"));
        }
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(format!("matrix `{name}` is not square of positive size"));
        }
        self.blocks.push((name.to_string(), m));
        Ok(())
    }

    pub fn blocks(&self) -> &[(String, CMat)] {
        &self.blocks
    }

    pub fn names(&self) -> Vec<String> {
        self.blocks.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CMat> {
        self.blocks.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Length of the decimal float at the start of `s` (optional sign, digits
/// with an optional fraction, optional exponent), or 0.
fn float_prefix(s: &[u8]) -> usize {
    let mut i = 0;
    if i < s.len() && (s[i] == b'+' || s[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < s.len() && s[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < s.len() && s[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return 0;
    }
    if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
        let mut j = i + 1;
        if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < s.len() && s[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    i
}

/// Parses one entry; on failure returns the byte offset of the problem.
pub fn parse_entry(token: &str) -> Result<C64, (usize, String)> {
    let b = token.as_bytes();
    let parse = |s: &str, at: usize| -> Result<f64, (usize, String)> {
        let v: f64 = s.parse().map_err(|_| (at, format!("bad number `{s}`")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err((at, format!("number `{s}` is out of range")))
        }
    };
    let n1 = float_prefix(b);
    if n1 == 0 {
        return Err((0, format!("expected a number, found `{token}`")));
    }
    let first = parse(&token[..n1], 0)?;
    let rest = &b[n1..];
    match rest {
        [] => Ok(C64::new(first, 0.0)),
        [b'j'] => Ok(C64::new(0.0, first)),
        [b'+' | b'-', ..] => {
            let n2 = float_prefix(rest);
            if n2 <= 1 || rest[1] == b'+' || rest[1] == b'-' {
                return Err((n1 + 1, "expected the imaginary part after the sign".into()));
            }
            let second = parse(&token[n1..n1 + n2], n1)?;
            match &rest[n2..] {
                [b'j'] => Ok(C64::new(first, second)),
                [] => Err((n1 + n2, "imaginary part must end with `j`".into())),
                _ => Err((n1 + n2, format!("unexpected `{}`", &token[n1 + n2..]))),
            }
        }
        _ => Err((n1, format!("unexpected `{}`", &token[n1..]))),
    }
}

/// `<re>±<im>j` with 17 significant digits in each part.
pub fn format_entry(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{sign}{:.16e}j", z.re, z.im.abs())
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(s, t)| (line[..s].chars().count() + 1, t))
        .collect()
}

struct Pending {
    name: String,
    n: usize,
    header_line: usize,
    rows: Vec<C64>,
    filled: usize,
}

impl Pending {
    fn finish(self, at_line: usize) -> Result<(String, CMat), MatFileError> {
        if self.filled < self.n {
            return Err(err(
                at_line,
                1,
                format!(
                    "matrix `{}` (line {}) has {} of {} rows",
                    self.name, self.header_line, self.filled, self.n
                ),
            ));
        }
        Ok((self.name, CMat::from_row_slice(self.n, self.n, &self.rows)))
    }
}

pub fn parse_matrix_file(text: &str) -> Result<MatrixFile, MatFileError> {
    let mut file = MatrixFile::new();
    let mut pending: Option<Pending> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("");
        let toks = tokens(content);
        if toks.is_empty() {
            continue;
        }
        let is_header = toks[0].1 == "matrix";
        if let Some(p) = pending.as_mut() {
            if p.filled < p.n {
                if is_header {
                    let p = pending.take().expect("pending block");
                    return Err(p.finish(line_no).unwrap_err());
                }
                if toks.len() != p.n {
                    let col = toks.get(p.n).map_or(toks[toks.len() - 1].0, |t| t.0);
                    return Err(err(
                        line_no,
                        col,
                        format!("row has {} entries, matrix `{}` needs {}", toks.len(), p.name, p.n),
                    ));
                }
                for (col, t) in toks {
                    let z = parse_entry(t).map_err(|(off, msg)| {
                        err(line_no, col + t[..off].chars().count(), msg)
                    })?;
                    p.rows.push(z);
                }
                p.filled += 1;
                continue;
            }
            let (name, m) = pending.take().expect("pending block").finish(line_no)?;
            file.blocks.push((name, m));
        }
        if !is_header {
            return Err(err(line_no, toks[0].0, "expected a `matrix <name> <n>` header"));
        }
        if toks.len() != 3 {
            let col = toks.get(3).map_or(toks[toks.len() - 1].0, |t| t.0);
            return Err(err(line_no, col, "header must be `matrix <name> <n>`"));
        }
        let (name_col, name) = toks[1];
        if !valid_name(name) {
            return Err(err(line_no, name_col, format!("`{name}` is not a valid matrix name")));
        }
        if file.get(name).is_some() {
            return Err(err(line_no, name_col, format!("duplicate matrix name `{name}`")));
        }
        let (n_col, n_text) = toks[2];
        let n: usize = match n_text.parse() {
            Ok(n) if n > 0 && n_text.bytes().all(|c| c.is_ascii_digit()) => n,
            _ => return Err(err(line_no, n_col, format!("size must be a positive integer, found `{n_text}`"))),
        };
        pending = Some(Pending {
            name: name.to_string(),
            n,
            header_line: line_no,
            rows: Vec::with_capacity(n * n),
            filled: 0,
        });
    }
    if let Some(p) = pending {
        let (name, m) = p.finish(last_line + 1)?;
        file.blocks.push((name, m));
    }
    Ok(file)
}

pub fn serialize_matrix_file(file: &MatrixFile) -> String {
    let mut out = String::new();
    for (name, m) in &file.blocks {
        let _ = writeln!(out, "matrix {name} {}", m.nrows());
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format_entry(m[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}
