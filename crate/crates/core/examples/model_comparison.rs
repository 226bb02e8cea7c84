//! Compare a subject model's importance profile against a baseline run.
//!
//! Two audits are run through the same entry point as `freqlens audit`:
//! first on a baseline fixture, then on a subject fixture with the
//! baseline's report attached. The striped bars in `importance.svg` are the
//! baseline.
//!
//! ```bash
//! cargo run -p freqlens --example model_comparison -- /tmp/comparison
//! ```

use std::path::{Path, PathBuf};

use freqlens::cli::{run_audit, AUDIT_FILE};
use freqlens::config::RunConfig;
use freqlens::synthfix::{generate_fixtures, SyntheticSpec, PAIRS_FILE};

fn fixture(root: &Path, name: &str, profiles: [Vec<f64>; 2]) -> freqlens::Result<PathBuf> {
    let dir = root.join(name);
    let [a, b] = profiles;
    let specs = [
        SyntheticSpec { pairs_per_label: 8, num_identities: 4, ..SyntheticSpec::new(10, "GroupA", a) },
        SyntheticSpec { pairs_per_label: 8, num_identities: 4, ..SyntheticSpec::new(20, "GroupB", b) },
    ];
    generate_fixtures(&specs, &dir)?;
    Ok(dir)
}

fn main() -> freqlens::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("freqlens-model-comparison"));
    let band = |bands: &[usize]| {
        let mut p = vec![0.0; 20];
        bands.iter().for_each(|&b| p[b] = 1.0);
        p
    };

    let base_dir = fixture(&root, "baseline-data", [vec![1.0; 20], vec![1.0; 20]])?;
    let base = RunConfig::new(base_dir.join(PAIRS_FILE), &base_dir, root.join("baseline"));
    run_audit(&base)?;

    let subject_dir = fixture(&root, "subject-data", [band(&[1, 2, 3]), band(&[5, 6, 7])])?;
    let subject = RunConfig {
        baseline_report_path: Some(base.output_dir.join(AUDIT_FILE)),
        error_bars: true,
        ..RunConfig::new(subject_dir.join(PAIRS_FILE), &subject_dir, root.join("subject"))
    };
    let report = run_audit(&subject)?;

    println!("bias: {}", report.bias.summary_line());
    let delta = report.delta.expect("baseline was given");
    for (group, row) in delta.delta.groups.iter().zip(&delta.delta.delta) {
        let (peak, value) = row
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (b, &d)| if d > best.1 { (b, d) } else { best });
        println!("{group}: largest gain over baseline in band {peak} ({value:+.3})");
    }
    println!("reports in {}", subject.output_dir.display());
    Ok(())
}
