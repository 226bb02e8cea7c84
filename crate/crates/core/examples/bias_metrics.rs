//! Verification accuracy at the best threshold, and Mean/STD/SER across
//! groups.
//!
//! ```bash
//! cargo run -p freqlens --example bias_metrics
//! ```

use freqlens::dataset::Label;
use freqlens::metrics::{best_threshold_accuracy, bias_report, group_verification, VerificationResult};

fn main() -> freqlens::Result<()> {
    // Published per-group accuracies need no pipeline at all.
    let published = [("African", 80.25), ("Asian", 92.33), ("Caucasian", 94.88), ("Indian", 93.15)];
    let results = published
        .iter()
        .map(|(g, a)| VerificationResult::from_accuracy(*g, *a))
        .collect::<freqlens::Result<Vec<_>>>()?;
    println!("from accuracies: {}", bias_report(results)?.summary_line());

    // Raw scores: one threshold per group, chosen to maximize accuracy.
    let scores = [(0.81, Label::Genuine), (0.64, Label::Genuine), (0.55, Label::Imposter), (0.12, Label::Imposter)];
    let (t, acc) = best_threshold_accuracy(&scores)?;
    println!("threshold {t:.2} -> {acc:.1}% correct");

    let pairs = [
        ("A", Label::Genuine, 0.9),
        ("A", Label::Genuine, 0.7),
        ("A", Label::Imposter, 0.3),
        ("A", Label::Imposter, 0.2),
        ("B", Label::Genuine, 0.6),
        ("B", Label::Genuine, 0.35),
        ("B", Label::Imposter, 0.4),
        ("B", Label::Imposter, 0.1),
    ];
    let per_group = group_verification(pairs.iter().map(|(g, l, s)| (*g, *l, *s)))?;
    for r in &per_group {
        println!("{}: {:.1}% at threshold {:.2}", r.group, r.accuracy, r.threshold);
    }
    let report = bias_report(per_group)?;
    println!("from scores: {}", report.summary_line());
    Ok(())
}
