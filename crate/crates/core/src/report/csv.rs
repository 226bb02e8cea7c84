//! Per-pair importance table.
//!
//! ```text
//! pair_id,group,label,base_similarity,band_0,...,band_{B-1}
//! ```
//!
//! One row per pair in `pair_id` order. Floats carry 9 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::importance::PairExplanation;

/// One parsed row of a pair table.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub pair_id: u64,
    pub group: String,
    pub label: Label,
    pub base_similarity: f64,
    pub bands: Vec<f64>,
}

/// `x` with `digits` significant digits, C `%g` style: fixed notation for
/// decimal exponents in `[-5, digits)`, scientific otherwise, trailing zeros
/// dropped.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn pair_csv_header(num_bands: usize) -> String {
    let mut h = String::from("pair_id,group,label,base_similarity");
    for b in 0..num_bands {
        let _ = write!(h, ",band_{b}");
    }
    h
}

/// Renders explanations as pair-table text, sorted by `pair_id`.
///
/// An empty input has no band count to put in the header, so only the four
/// metadata columns are written.
pub fn pair_csv_string(explanations: &[PairExplanation]) -> Result<String> {
    let mut sorted: Vec<&PairExplanation> = explanations.iter().collect();
    sorted.sort_by_key(|e| e.pair_id);
    let num_bands = sorted.first().map_or(0, |e| e.importance.num_bands());
    let mut out = pair_csv_header(num_bands);
    out.push('\n');
    for e in sorted {
        if e.importance.num_bands() != num_bands {
            return Err(Error::InvalidInput(format!(
                "pair {} has {} bands, expected {num_bands}",
                e.pair_id,
                e.importance.num_bands()
            )));
        }
        if e.group.contains([',', '\n', '\r']) {
            return Err(Error::InvalidInput(format!("group {:?} contains a separator", e.group)));
        }
        let _ = write!(
            out,
            "{},{},{},{}",
            e.pair_id,
            e.group,
            e.label,
            format_significant(e.base_similarity, 9)
        );
        for v in e.importance.normalized() {
            out.push(',');
            out.push_str(&format_significant(*v, 9));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_pair_csv(explanations: &[PairExplanation], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = pair_csv_string(explanations)?;
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn parse_pair_csv(text: &str) -> Result<Vec<PairRow>> {
    let err = |line: usize, message: String| Error::Parse {
        path: "<pair table>".into(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 4 || pair_csv_header(columns.len() - 4) != header {
        return Err(err(1, format!("unexpected header {header:?}")));
    }
    let num_bands = columns.len() - 4;
    let number = |line: usize, s: &str| s.parse::<f64>().map_err(|e| err(line, format!("{s:?}: {e}")));
    lines
        .enumerate()
        .map(|(i, line)| {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != num_bands + 4 {
                return Err(err(n, format!("expected {} fields, found {}", num_bands + 4, f.len())));
            }
            Ok(PairRow {
                pair_id: f[0].parse().map_err(|e| err(n, format!("pair id {:?}: {e}", f[0])))?,
                group: f[1].to_string(),
                label: f[2].parse().map_err(|m| err(n, m))?,
                base_similarity: number(n, f[3])?,
                bands: f[4..].iter().map(|s| number(n, s)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn read_pair_csv(path: impl AsRef<Path>) -> Result<Vec<PairRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_pair_csv(&text)
}
