//! Command-line front end.
//!
//! Exit codes: 0 success, 1 processing failure, 2 configuration or usage
//! error. Outputs are staged in a hidden directory inside `--out` and moved
//! into place only after every file is written, so a failed run leaves
//! nothing behind.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::aggregate::{importance_delta, mean_importance, rank_groups, LabelFilter};
use crate::config::{RunConfig, DEFAULT_BAND_SIZE};
use crate::dataset::{load_pairs, PairList, PairRecord, CANONICAL_HEIGHT, CANONICAL_WIDTH};
use crate::embedder::{serve_echo, BackendDescriptor, EchoOptions};
use crate::error::{Error, Result};
use crate::importance::{explain_all, PairExplanation};
use crate::metrics::{bias_report, verify_explanations, VerificationResult};
use crate::report::{self, AuditReport, BaselineDelta, DistributionOptions};
use crate::spectral::build_partition;

pub const EXPLANATIONS_FILE: &str = "explanations.csv";
pub const AUDIT_FILE: &str = "audit.json";
pub const RANKING_SVG: &str = "ranking.svg";
pub const IMPORTANCE_SVG: &str = "importance.svg";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "freqlens", version, about = "Frequency-band importance and bias audits for face verification")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explain every pair and write the per-pair importance table.
    Explain(RunArgs),
    /// Explain, aggregate per group, rank, compute bias metrics and chart.
    Audit(AuditArgs),
    /// Mean, STD and SER from per-group accuracies given as GROUP=PERCENT.
    Metrics {
        #[arg(required = true, num_args = 2.., value_name = "GROUP=ACCURACY")]
        accuracies: Vec<String>,
    },
    /// Protocol test child: answers each request with its leading pixels.
    #[command(hide = true)]
    EchoEmbedder {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long)]
        shuffle_seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Pair list CSV (`probe,reference,label,group`).
    #[arg(long)]
    pairs: PathBuf,
    /// Directory image paths are relative to. Defaults to the pair list's directory.
    #[arg(long)]
    images_root: Option<PathBuf>,
    /// `reference`, `precomputed:<dir>` or `subprocess:<command line>`.
    #[arg(long, default_value = "reference")]
    backend: BackendDescriptor,
    /// Radial width of each frequency band.
    #[arg(long, default_value_t = DEFAULT_BAND_SIZE)]
    band_size: f64,
    #[arg(long, default_value = "all")]
    label_filter: LabelFilter,
    #[arg(long, env = "FREQLENS_THREADS", default_value_t = 1)]
    threads: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Audit JSON of a baseline model to compare against.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, overrides_with = "no_render")]
    render: bool,
    /// Skip SVG charts.
    #[arg(long, overrides_with = "render")]
    no_render: bool,
    /// Draw standard-deviation whiskers on the importance chart.
    #[arg(long)]
    error_bars: bool,
}

impl RunArgs {
    fn into_config(self) -> RunConfig {
        let images_root = self.images_root.unwrap_or_else(|| {
            self.pairs
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."))
        });
        RunConfig {
            backend: self.backend,
            band_size: self.band_size,
            label_filter: self.label_filter,
            worker_count: self.threads,
            ..RunConfig::new(self.pairs, images_root, self.out)
        }
    }
}

/// Failure split by exit code.
enum Failure {
    Usage(Error),
    Processing(Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Processing(_) => EXIT_FAILURE,
        }
    }

    fn error(&self) -> &Error {
        match self {
            Failure::Usage(e) | Failure::Processing(e) => e,
        }
    }
}

/// Errors that always indicate bad configuration, wherever they surface.
fn classify(e: Error) -> Failure {
    match e.root() {
        Error::InvalidConfig(_) | Error::IncompatibleReport(_) => Failure::Usage(e),
        _ => Failure::Processing(e),
    }
}

fn report_failure(f: Failure) -> i32 {
    eprintln!("freqlens: error: {}", f.error());
    f.code()
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Explain(args) => cmd_explain(&args.into_config()),
        Command::Audit(args) => {
            let config = RunConfig {
                baseline_report_path: args.baseline,
                render: !args.no_render,
                error_bars: args.error_bars,
                ..args.run.into_config()
            };
            cmd_audit(&config)
        }
        Command::Metrics { accuracies } => cmd_metrics(&accuracies, stdout),
        Command::EchoEmbedder { dim, shuffle_seed, window } => {
            let input = std::io::BufReader::new(std::io::stdin());
            let options = EchoOptions { dim, shuffle_seed, window: window.max(1) };
            match serve_echo(input, std::io::stdout().lock(), options) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("freqlens: echo embedder: {e}");
                    EXIT_FAILURE
                }
            }
        }
    }
}

/// Explains the selected pairs and writes the importance table.
pub fn cmd_explain(config: &RunConfig) -> i32 {
    let result = (|| {
        let pairs = load_inputs(config)?;
        let selected: Vec<PairRecord> = pairs
            .records()
            .iter()
            .filter(|r| config.label_filter.accepts(r.label))
            .cloned()
            .collect();
        let explanations = explain(config, &selected)?;
        let staging = Staging::new(&config.output_dir)?;
        report::write_pair_csv(&explanations, staging.path(EXPLANATIONS_FILE)).map_err(Failure::Processing)?;
        staging.commit().map_err(Failure::Processing)
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => report_failure(f),
    }
}

/// Full audit: explanations, group importance, ranking, bias metrics, an
/// optional baseline delta, JSON report and charts.
pub fn cmd_audit(config: &RunConfig) -> i32 {
    match audit(config) {
        Ok(_) => EXIT_OK,
        Err(f) => report_failure(f),
    }
}

/// Library form of [`cmd_audit`].
pub fn run_audit(config: &RunConfig) -> Result<AuditReport> {
    audit(config).map_err(|f| match f {
        Failure::Usage(e) | Failure::Processing(e) => e,
    })
}

fn audit(config: &RunConfig) -> std::result::Result<AuditReport, Failure> {
    let baseline = match &config.baseline_report_path {
        Some(path) => Some(report::read_audit_json(path).map_err(Failure::Usage)?),
        None => None,
    };
    let pairs = load_inputs(config)?;
    if pairs.groups().len() < 2 {
        return Err(Failure::Usage(Error::InvalidConfig(format!(
            "an audit compares at least two groups, the pair list has {}",
            pairs.groups().len()
        ))));
    }
    let explanations = explain(config, pairs.records())?;
    let importance = mean_importance(&explanations, config.label_filter).map_err(classify)?;
    let ranking = rank_groups(&importance).map_err(classify)?;
    let bias = bias_report(verify_explanations(&explanations).map_err(classify)?).map_err(classify)?;
    log::info!("{}", bias.summary_line());
    let delta = match (&baseline, &config.baseline_report_path) {
        (Some(base), Some(path)) => Some(BaselineDelta {
            baseline: path.display().to_string(),
            delta: importance_delta(&importance, &base.importance).map_err(Failure::Usage)?,
        }),
        _ => None,
    };
    let audit = AuditReport {
        config: config.clone(),
        importance,
        ranking,
        bias,
        delta,
    };

    let staging = Staging::new(&config.output_dir)?;
    let write = || -> Result<()> {
        report::write_pair_csv(&explanations, staging.path(EXPLANATIONS_FILE))?;
        report::write_audit_json(&audit, staging.path(AUDIT_FILE))?;
        if config.render {
            report::render_ranking_svg(&audit.ranking, staging.path(RANKING_SVG))?;
            let options = DistributionOptions {
                error_bars: config.error_bars,
                ..Default::default()
            };
            report::render_distribution_svg(
                &audit.importance,
                baseline.as_ref().map(|b| &b.importance),
                options,
                staging.path(IMPORTANCE_SVG),
            )?;
        }
        staging.commit()
    };
    write().map_err(classify)?;
    Ok(audit)
}

/// Validates the configuration and loads the pair list; all failures here
/// are usage errors.
fn load_inputs(config: &RunConfig) -> std::result::Result<PairList, Failure> {
    config.validate().map_err(Failure::Usage)?;
    let pairs = load_pairs(&config.pairs_path).map_err(Failure::Usage)?;
    if !pairs.records().iter().any(|r| config.label_filter.accepts(r.label)) {
        return Err(Failure::Usage(Error::EmptyInput(format!(
            "label filter '{}' selects no pairs in {}",
            config.label_filter,
            config.pairs_path.display()
        ))));
    }
    Ok(pairs)
}

fn explain(config: &RunConfig, records: &[PairRecord]) -> std::result::Result<Vec<PairExplanation>, Failure> {
    let partition =
        build_partition(CANONICAL_HEIGHT, CANONICAL_WIDTH, config.band_size).map_err(Failure::Usage)?;
    let backend = config.backend.open().map_err(classify)?;
    log::info!(
        "explaining {} pairs over {} bands with {} worker(s), backend {}",
        records.len(),
        partition.num_bands(),
        config.worker_count,
        config.backend
    );
    let step = (records.len() / 10).max(1);
    let progress = |done: usize, total: usize| {
        if done.is_multiple_of(step) || done == total {
            log::info!("{done}/{total} pairs");
        }
    };
    explain_all(
        records,
        &config.images_root,
        &partition,
        backend.as_ref(),
        config.worker_count,
        &progress,
    )
    .map_err(classify)
}

/// Parses `GROUP=ACCURACY` arguments and prints the bias summary.
pub fn cmd_metrics(accuracies: &[String], stdout: &mut dyn Write) -> i32 {
    let parsed = accuracies
        .iter()
        .map(|arg| {
            let (group, value) = arg
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected GROUP=ACCURACY, got {arg:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("accuracy in {arg:?}: {e}")))?;
            if group.is_empty() {
                return Err(Error::InvalidConfig(format!("empty group name in {arg:?}")));
            }
            VerificationResult::from_accuracy(group, value)
        })
        .collect::<Result<Vec<_>>>();
    let report = match parsed.and_then(|r| {
        if r.len() < 2 {
            Err(Error::InvalidConfig("need at least two groups".into()))
        } else {
            bias_report(r)
        }
    }) {
        Ok(r) => r,
        Err(e) => return report_failure(Failure::Usage(e)),
    };
    match writeln!(stdout, "{}", report.summary_line()) {
        Ok(()) => EXIT_OK,
        Err(e) => report_failure(Failure::Processing(Error::io("writing to stdout", e))),
    }
}

/// Hidden directory inside the output directory; removed on drop.
struct Staging {
    out_dir: PathBuf,
    created_out_dir: bool,
    dir: Option<tempfile::TempDir>,
    files: std::cell::RefCell<Vec<String>>,
}

impl Staging {
    fn new(out_dir: &Path) -> std::result::Result<Self, Failure> {
        let created_out_dir = !out_dir.exists();
        std::fs::create_dir_all(out_dir)
            .map_err(|e| Failure::Usage(Error::io(format!("creating {}", out_dir.display()), e)))?;
        let dir = tempfile::Builder::new()
            .prefix(".freqlens-staging-")
            .tempdir_in(out_dir)
            .map_err(|e| Failure::Processing(Error::io(format!("staging in {}", out_dir.display()), e)))?;
        Ok(Staging {
            out_dir: out_dir.to_path_buf(),
            created_out_dir,
            dir: Some(dir),
            files: Default::default(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.files.borrow_mut().push(name.to_string());
        self.dir.as_ref().expect("staging directory").path().join(name)
    }

    fn commit(&self) -> Result<()> {
        let staged = self.dir.as_ref().expect("staging directory").path();
        for name in self.files.borrow().iter() {
            let from = staged.join(name);
            if from.exists() {
                let to = self.out_dir.join(name);
                std::fs::rename(&from, &to).map_err(|e| Error::io(format!("moving {}", to.display()), e))?;
            }
        }
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        drop(self.dir.take());
        if self.created_out_dir {
            // Only succeeds when nothing was committed.
            let _ = std::fs::remove_dir(&self.out_dir);
        }
    }
}
