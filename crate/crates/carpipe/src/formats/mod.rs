//! On-disk formats. Every writer has a matching reader, and text formats
//! print floats in shortest round-trip form so values survive exactly.

pub mod checkpoint;
pub mod corpus;
pub mod index;
pub mod kg;
pub mod report;
pub mod run;
pub mod tables;
pub mod text;

use std::io::BufRead;

use crate::error::{Error, Result};

/// Warning sink: line number and message.
pub type Warn<'a> = dyn FnMut(usize, String) + 'a;

pub fn log_warning(line: usize, msg: String) {
    log::warn!("line {line}: {msg}");
}

/// Non-blank lines with 1-based line numbers.
pub(crate) fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::parse(i + 1, e.to_string()))),
    })
}

/// Whitespace-delimited fields must not contain whitespace themselves.
pub(crate) fn check_field(s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::Data(format!(
            "`{s}` cannot be written as a whitespace-delimited field"
        )));
    }
    Ok(())
}

pub(crate) fn parse_f64(n: usize, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(n, format!("`{s}` is not a finite number"))),
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(n: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(n, format!("{what} `{s}` is not a valid count")))
}
