//! Per-group mean importance and the cross-group ranking, rendered as SVG.
//!
//! Three synthetic groups carry their energy in different bands. The
//! library calls are the same ones `freqlens audit` chains together.
//!
//! ```bash
//! cargo run -p freqlens --example group_ranking -- /tmp/ranking
//! ```

use std::path::PathBuf;

use freqlens::aggregate::{mean_importance, rank_groups, LabelFilter};
use freqlens::embedder::ReferenceEmbedder;
use freqlens::importance::explain_all;
use freqlens::report::{render_distribution_svg, render_ranking_svg, DistributionOptions};
use freqlens::spectral::build_partition;
use freqlens::synthfix::{generate_fixtures, SyntheticSpec};

fn spec(seed: u64, name: &str, bands: &[usize]) -> SyntheticSpec {
    let mut profile = vec![0.0; 20];
    bands.iter().for_each(|&b| profile[b] = 1.0);
    SyntheticSpec {
        num_identities: 4,
        pairs_per_label: 6,
        ..SyntheticSpec::new(seed, name, profile)
    }
}

fn main() -> freqlens::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("freqlens-group-ranking"));
    let pairs = generate_fixtures(
        &[spec(1, "coarse", &[1, 2]), spec(2, "medium", &[3, 4, 5]), spec(3, "fine", &[6, 7, 8])],
        &out,
    )?;

    let partition = build_partition(112, 112, 4.0)?;
    let explanations = explain_all(
        pairs.records(),
        &out,
        &partition,
        &ReferenceEmbedder::default(),
        2,
        &|done, total| eprint!("\r{done}/{total}"),
    )?;
    eprintln!();

    let matrix = mean_importance(&explanations, LabelFilter::All)?;
    let ranking = rank_groups(&matrix)?;
    print!("{:>8}", "band");
    (0..12).for_each(|b| print!("{b:>4}"));
    println!();
    for (group, ranks) in ranking.groups.iter().zip(&ranking.ranks) {
        print!("{group:>8}");
        ranks[..12].iter().for_each(|r| print!("{r:>4}"));
        println!();
    }

    render_ranking_svg(&ranking, out.join("ranking.svg"))?;
    let options = DistributionOptions { error_bars: true, ..Default::default() };
    render_distribution_svg(&matrix, None, options, out.join("importance.svg"))?;
    println!("charts in {}", out.display());
    Ok(())
}
