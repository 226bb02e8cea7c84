//! Output artifacts: the per-pair CSV table, the canonical audit JSON and
//! SVG charts.

pub mod csv;
pub mod json;
pub mod svg;

pub use csv::{format_significant, pair_csv_string, parse_pair_csv, read_pair_csv, write_pair_csv, PairRow};
pub use json::{audit_json_string, read_audit_json, write_audit_json, AuditReport, BaselineDelta};
pub use svg::{distribution_svg, ranking_svg, render_distribution_svg, render_ranking_svg, DistributionOptions};
