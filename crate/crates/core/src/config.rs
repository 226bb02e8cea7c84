use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::aggregate::LabelFilter;
use crate::embedder::BackendDescriptor;
use crate::error::{Error, Result};

/// Default radial band width in frequency-grid units.
pub const DEFAULT_BAND_SIZE: f64 = 4.0;

/// Everything needed to rerun an explain or audit job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pairs_path: PathBuf,
    pub images_root: PathBuf,
    pub backend: BackendDescriptor,
    pub band_size: f64,
    pub label_filter: LabelFilter,
    pub output_dir: PathBuf,
    pub worker_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_report_path: Option<PathBuf>,
    /// Write SVG charts next to the JSON report.
    pub render: bool,
    /// Draw ±1 std whiskers on the importance chart.
    #[serde(default)]
    pub error_bars: bool,
}

impl RunConfig {
    pub fn new(pairs_path: impl Into<PathBuf>, images_root: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            pairs_path: pairs_path.into(),
            images_root: images_root.into(),
            backend: BackendDescriptor::reference(),
            band_size: DEFAULT_BAND_SIZE,
            label_filter: LabelFilter::All,
            output_dir: output_dir.into(),
            worker_count: 1,
            baseline_report_path: None,
            render: true,
            error_bars: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.band_size.is_finite() && self.band_size > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "band size must be positive, got {}",
                self.band_size
            )));
        }
        if self.worker_count == 0 {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        Ok(())
    }
}
