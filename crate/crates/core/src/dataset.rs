//! Verification pair lists and image loading.
//!
//! Pair list format, UTF-8:
//!
//! ```text
//! probe,reference,label,group
//! african/id03_a.png,african/id03_b.png,genuine,African
//! african/id03_a.png,african/id11_b.png,imposter,African
//! ```
//!
//! No quoting; paths must not contain commas. Pair ids are assigned by row
//! order starting at 0.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::SpatialImage;

pub const PAIRS_HEADER: &str = "probe,reference,label,group";

/// Canonical aligned face size.
pub const CANONICAL_HEIGHT: usize = 112;
pub const CANONICAL_WIDTH: usize = 112;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Imposter,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Genuine => "genuine",
            Label::Imposter => "imposter",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "genuine" => Ok(Label::Genuine),
            "imposter" => Ok(Label::Imposter),
            other => Err(format!("unknown label {other:?}, expected genuine or imposter")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub pair_id: u64,
    pub probe_path: PathBuf,
    pub reference_path: PathBuf,
    pub label: Label,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairList {
    records: Vec<PairRecord>,
    groups: Vec<String>,
}

impl PairList {
    /// Builds a list from records, checking id uniqueness and collecting
    /// groups in first-appearance order.
    pub fn new(records: Vec<PairRecord>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut groups: Vec<String> = Vec::new();
        for r in &records {
            if !seen.insert(r.pair_id) {
                return Err(Error::InvalidInput(format!("duplicate pair id {}", r.pair_id)));
            }
            if r.group.is_empty() || r.probe_path.as_os_str().is_empty() || r.reference_path.as_os_str().is_empty() {
                return Err(Error::InvalidInput(format!("pair {} has an empty field", r.pair_id)));
            }
            if !groups.contains(&r.group) {
                groups.push(r.group.clone());
            }
        }
        Ok(PairList { records, groups })
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Serializes in the pair list format, one row per record.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from(PAIRS_HEADER);
        out.push('\n');
        for r in &self.records {
            let probe = path_field(&r.probe_path)?;
            let reference = path_field(&r.reference_path)?;
            if r.group.contains([',', '\n', '\r']) {
                return Err(Error::InvalidInput(format!("group {:?} contains a separator", r.group)));
            }
            out.push_str(&format!("{probe},{reference},{},{}\n", r.label, r.group));
        }
        Ok(out)
    }
}

fn path_field(path: &Path) -> Result<&str> {
    let s = path
        .to_str()
        .ok_or_else(|| Error::InvalidInput(format!("path {} is not UTF-8", path.display())))?;
    if s.contains([',', '\n', '\r']) {
        return Err(Error::InvalidInput(format!("path {s:?} contains a separator")));
    }
    Ok(s)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<PairList> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    parse_pairs(text, path)
}

/// Parses pair list text; `source` only labels errors.
pub fn parse_pairs(text: &str, source: impl AsRef<Path>) -> Result<PairList> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.as_ref().to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
    match lines.next() {
        Some(PAIRS_HEADER) => {}
        Some(other) => return Err(parse_err(1, format!("expected header {PAIRS_HEADER:?}, found {other:?}"))),
        None => return Err(parse_err(1, "missing header".into())),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(line_no, format!("expected 4 fields, found {}", fields.len())));
        }
        if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
            return Err(parse_err(line_no, format!("field {} is empty", pos + 1)));
        }
        let label = fields[2].parse().map_err(|m| parse_err(line_no, m))?;
        records.push(PairRecord {
            pair_id: records.len() as u64,
            probe_path: PathBuf::from(fields[0]),
            reference_path: PathBuf::from(fields[1]),
            label,
            group: fields[3].to_string(),
        });
    }
    PairList::new(records)
}

/// Loads an 8-bit raster and maps each value `p` to `p / 127.5 - 1`.
///
/// Grayscale sources are replicated to three channels. The image must already
/// have the expected size; nothing is resized or aligned here.
pub fn load_image(path: impl AsRef<Path>, expected: (usize, usize)) -> Result<SpatialImage> {
    let path = path.as_ref();
    let decoded = image::ImageReader::open(path)
        .map_err(|e| Error::io(format!("opening image {}", path.display()), e))?
        .with_guessed_format()
        .map_err(|e| Error::io(format!("reading image {}", path.display()), e))?
        .decode()
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    if (h, w) != expected {
        return Err(Error::Shape {
            path: path.to_path_buf(),
            expected_height: expected.0,
            expected_width: expected.1,
            actual_height: h,
            actual_width: w,
        });
    }
    let rgb = decoded.to_rgb8();
    let pixels = rgb.as_raw().iter().map(|&p| byte_to_unit(p)).collect();
    SpatialImage::new(h, w, 3, pixels)
}

#[inline]
pub fn byte_to_unit(p: u8) -> f64 {
    f64::from(p) / 127.5 - 1.0
}

/// Nearest 8-bit value for a `[-1, 1]` pixel, clamping out-of-range input.
#[inline]
pub fn unit_to_byte(x: f64) -> u8 {
    ((x + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}
