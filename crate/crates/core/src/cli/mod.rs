//! The `ulsgan` command: reproducible workflows over the library.
//!
//! Settings come from, in increasing precedence: built-in defaults, the
//! TOML file named by `$ULSGAN_CONFIG`, the file given with `--config`
//! (which replaces the environment file rather than layering on it), and
//! finally individual command-line flags.
//!
//! Exit codes: 0 success or passed validation, 1 failed validation, 2 usage,
//! parameter or structural error, 3 I/O or on-disk corruption.

mod config;
mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{CorpusSection, Seeds, ToolConfig, ValidationSection, CONFIG_ENV};
pub use plot::{plot_csv, render_svg, PlotSpec};

use crate::cgan::{load_checkpoint, sample, save_checkpoint, train_with_progress, write_loss_log_file};
use crate::corpus::{
    read_dataset, synth_processed_corpus, write_corpus, write_dataset, Dataset, DatasetKind,
    RecordLabel,
};
use crate::signal::PROCESSED_SAMPLE_RATE_HZ;
use crate::stats::{build_trend_table, dominant_bin, Condition, DistanceBin, Ground, LabeledSignal};
use crate::validation::{compare_populations, emit_report, post_lowpass, Tolerances};
use crate::{Error, Result};

/// Exit code of a validation that ran but did not pass.
pub const EXIT_VALIDATION_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "ulsgan",
    version,
    about = "Ultrasonic ground-reflection synthesis with a conditional GAN"
)]
pub struct Cli {
    /// TOML config file (default: $ULSGAN_CONFIG, else built-in defaults).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise a reference corpus and write it as a dataset.
    Corpus(CorpusArgs),
    /// Turn a raw dataset into 583-sample envelopes.
    Process(ProcessArgs),
    /// Fit per-bin Gammas over a processed dataset and export the trend CSV.
    Analyze(AnalyzeArgs),
    /// Train the cGAN on a processed dataset.
    Train(TrainArgs),
    /// Sample envelopes for one condition from a checkpoint.
    Generate(GenerateArgs),
    /// Compare generated against reference statistics; exit 1 on failure.
    Validate(ValidateArgs),
    /// Render a CSV report as an SVG line plot.
    Plot(PlotArgs),
    /// Print the effective configuration as TOML.
    ShowConfig,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed (default: seeds.corpus).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated heights in metres.
    #[arg(long, value_delimiter = ',')]
    pub heights: Option<Vec<f64>>,
    /// Comma-separated beta angles in degrees.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub betas: Option<Vec<f64>>,
    /// Comma-separated ground types (gravel, asphalt).
    #[arg(long, value_delimiter = ',')]
    pub grounds: Option<Vec<Ground>>,
    #[arg(long)]
    pub rotations: Option<u32>,
    #[arg(long)]
    pub reps: Option<u32>,
    /// Write processed envelopes instead of raw captures.
    #[arg(long)]
    pub processed: bool,
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    /// Raw input dataset directory.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Processed output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Processed input dataset directory.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Trend CSV to write.
    #[arg(long)]
    pub report: PathBuf,
    /// Comma-separated bin indices (default: statistics.bins).
    #[arg(long, value_delimiter = ',')]
    pub bins: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Processed training dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Training seed (default: gan.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Loss-log CSV (default: the checkpoint path with extension `loss.csv`).
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Checkpoint file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub height: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long)]
    pub ground: Ground,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Sampling seed (default: seeds.sampling).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Low-pass the generated envelopes (cutoff: validation.post_lowpass_hz).
    #[arg(long)]
    pub post_lowpass: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Reference (processed) dataset directory.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Generated (processed) dataset directory.
    #[arg(long = "gen")]
    pub generated: PathBuf,
    /// Comparison CSV to write.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub tol_k: Option<f64>,
    #[arg(long)]
    pub tol_theta: Option<f64>,
    /// Comma-separated bin indices (default: statistics.bins).
    #[arg(long, value_delimiter = ',', conflicts_with = "dominant")]
    pub bins: Option<Vec<usize>>,
    /// Compare only each condition's dominant clutter bin (chosen on the
    /// reference).
    #[arg(long)]
    pub dominant: bool,
    /// Drop reference conditions that the generated set does not cover.
    #[arg(long)]
    pub ref_subset: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSV report.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// SVG file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Column whose values each get their own line.
    #[arg(long)]
    pub series: Option<String>,
    /// Keep only rows where COLUMN equals VALUE (repeatable).
    #[arg(long, value_name = "COLUMN=VALUE", value_parser = parse_filter)]
    pub filter: Vec<(String, String)>,
    #[arg(long)]
    pub title: Option<String>,
}

fn parse_filter(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(c, v)| (c.trim().to_string(), v.trim().to_string()))
        .filter(|(c, _)| !c.is_empty())
        .ok_or_else(|| format!("expected COLUMN=VALUE, got `{s}`"))
}

/// What a successful command reports back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ValidationFailed => EXIT_VALIDATION_FAILED,
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are printed by clap and are not failures
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = ToolConfig::resolve(cli.config.as_deref())?;
    match &cli.command {
        Command::Corpus(a) => cmd_corpus(&cfg, a),
        Command::Process(a) => cmd_process(&cfg, a),
        Command::Analyze(a) => cmd_analyze(&cfg, a),
        Command::Train(a) => cmd_train(&cfg, a),
        Command::Generate(a) => cmd_generate(&cfg, a),
        Command::Validate(a) => cmd_validate(&cfg, a),
        Command::Plot(a) => cmd_plot(a),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml()?);
            Ok(Outcome::Success)
        }
    }
}

/// Fails early when a file could not be created next to `path`.
fn ensure_parent_dir(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) if !dir.is_dir() => Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "directory does not exist"),
        )),
        _ => Ok(()),
    }
}

fn processed_input(dir: &Path) -> Result<Vec<LabeledSignal>> {
    let ds = read_dataset(dir)?;
    ds.expect_kind(DatasetKind::Processed)?;
    if ds.is_empty() {
        return Err(Error::Structural(format!("dataset {} is empty", dir.display())));
    }
    ds.labeled()
}

pub fn cmd_corpus(cfg: &ToolConfig, a: &CorpusArgs) -> Result<Outcome> {
    let mut grid = cfg.corpus.grid.clone();
    if let Some(h) = &a.heights {
        grid.heights_m = h.clone();
    }
    if let Some(b) = &a.betas {
        grid.betas_deg = b.clone();
    }
    if let Some(g) = &a.grounds {
        grid.grounds = g.clone();
    }
    if let Some(r) = a.rotations {
        grid.rotations = r;
    }
    if let Some(r) = a.reps {
        grid.repetitions = r;
    }
    grid.validate()?;
    cfg.corpus.params.validate()?;
    let seed = a.seed.unwrap_or(cfg.seeds.corpus);
    if a.processed {
        let ds = synth_processed_corpus(&grid, &cfg.corpus.params, &cfg.pipeline, seed)?;
        write_dataset(&ds, &a.out)?;
    } else {
        write_corpus(&grid, &cfg.corpus.params, seed, &a.out)?;
    }
    eprintln!("wrote {} records to {}", grid.record_count(), a.out.display());
    Ok(Outcome::Success)
}

pub fn cmd_process(cfg: &ToolConfig, a: &ProcessArgs) -> Result<Outcome> {
    let raw = read_dataset(&a.input)?;
    let processed = raw.process(&cfg.pipeline)?;
    write_dataset(&processed, &a.out)?;
    eprintln!("processed {} records into {}", processed.len(), a.out.display());
    Ok(Outcome::Success)
}

pub fn cmd_analyze(cfg: &ToolConfig, a: &AnalyzeArgs) -> Result<Outcome> {
    let data = processed_input(&a.input)?;
    let bins: Vec<DistanceBin> = match &a.bins {
        Some(b) => b.iter().copied().map(DistanceBin::new).collect(),
        None => cfg.statistics.distance_bins(),
    };
    let table = build_trend_table(&data, &bins, &cfg.statistics)?;
    crate::stats::write_trend_csv(&table, &a.report)?;
    eprintln!("wrote {} trend rows to {}", table.len(), a.report.display());
    Ok(Outcome::Success)
}

pub fn cmd_train(cfg: &ToolConfig, a: &TrainArgs) -> Result<Outcome> {
    let mut gan = cfg.gan.clone();
    if let Some(s) = a.seed {
        gan.seed = s;
    }
    if let Some(e) = a.epochs {
        gan.epochs = e;
    }
    gan.validate()?;
    let loss_log = a
        .loss_log
        .clone()
        .unwrap_or_else(|| a.out.with_extension("loss.csv"));
    ensure_parent_dir(&a.out)?;
    ensure_parent_dir(&loss_log)?;
    let data = processed_input(&a.data)?;
    let quiet = a.quiet;
    let outcome = train_with_progress(&data, &gan, |e| {
        if !quiet {
            eprintln!(
                "epoch {:>4}/{}  d_loss {:.4}  g_loss {:.4}  D(real) {:.3}  D(fake) {:.3}",
                e.epoch, gan.epochs, e.d_loss, e.g_loss, e.d_real, e.d_fake
            );
        }
    })?;
    save_checkpoint(&outcome.checkpoint, &a.out)?;
    write_loss_log_file(&outcome.log, &loss_log)?;
    eprintln!(
        "wrote checkpoint {} and loss log {}",
        a.out.display(),
        loss_log.display()
    );
    Ok(Outcome::Success)
}

pub fn cmd_generate(cfg: &ToolConfig, a: &GenerateArgs) -> Result<Outcome> {
    if a.count == 0 {
        return Err(Error::param("--count must be positive"));
    }
    let ckpt = load_checkpoint(&a.model)?;
    let cond = Condition::new(a.height, a.beta, a.ground);
    ckpt.metadata.training_hull.ensure_contains(&cond)?;
    let seed = a.seed.unwrap_or(cfg.seeds.sampling);
    let mut signals = sample(&ckpt, &cond, a.count, seed)?;
    if a.post_lowpass {
        signals = post_lowpass(&signals, cfg.validation.post_lowpass_hz)?;
    }
    let records = signals.into_iter().enumerate().map(|(i, s)| {
        let label = RecordLabel {
            condition: cond,
            rotation: 0,
            repetition: i as u32,
            seed,
        };
        (label, s.samples)
    });
    let ds = Dataset::from_records(DatasetKind::Processed, PROCESSED_SAMPLE_RATE_HZ, records)?;
    write_dataset(&ds, &a.out)?;
    eprintln!("wrote {} generated records for {cond} to {}", ds.len(), a.out.display());
    Ok(Outcome::Success)
}

pub fn cmd_validate(cfg: &ToolConfig, a: &ValidateArgs) -> Result<Outcome> {
    let tolerances = Tolerances {
        k: a.tol_k.unwrap_or(cfg.validation.tolerances.k),
        theta: a.tol_theta.unwrap_or(cfg.validation.tolerances.theta),
    };
    let mut reference = processed_input(&a.reference)?;
    let generated = processed_input(&a.generated)?;
    if a.ref_subset {
        let keys: Vec<_> = generated.iter().map(|s| s.condition.key()).collect();
        reference.retain(|s| keys.contains(&s.condition.key()));
    }
    let report = if a.dominant {
        let mut cells = Vec::new();
        let mut conditions: Vec<Condition> = Vec::new();
        for s in &reference {
            if !conditions.iter().any(|c| c.key() == s.condition.key()) {
                conditions.push(s.condition);
            }
        }
        for c in conditions {
            let refs: Vec<LabeledSignal> = reference
                .iter()
                .filter(|s| s.condition.key() == c.key())
                .cloned()
                .collect();
            let gens: Vec<LabeledSignal> = generated
                .iter()
                .filter(|s| s.condition.key() == c.key())
                .cloned()
                .collect();
            let bin = dominant_bin(
                refs.iter().map(|s| &s.signal),
                &cfg.statistics.distance_bins(),
                cfg.statistics.speed_of_sound_mps,
            )?;
            if gens.is_empty() {
                return Err(Error::Structural(format!("generated set has no records for {c}")));
            }
            let r = compare_populations(&refs, &gens, &[bin], tolerances, &cfg.statistics)?;
            cells.extend(r.cells);
        }
        let extra: Vec<String> = generated
            .iter()
            .filter(|g| !reference.iter().any(|r| r.condition.key() == g.condition.key()))
            .map(|g| g.condition.to_string())
            .collect();
        if !extra.is_empty() {
            return Err(Error::Structural(format!(
                "generated conditions absent from the reference: {}",
                extra.join(", ")
            )));
        }
        crate::validation::ValidationReport::from_cells(cells, tolerances)
    } else {
        let bins: Vec<DistanceBin> = match &a.bins {
            Some(b) => b.iter().copied().map(DistanceBin::new).collect(),
            None => cfg.statistics.distance_bins(),
        };
        compare_populations(&reference, &generated, &bins, tolerances, &cfg.statistics)?
    };
    emit_report(&report, &a.report)?;
    let s = &report.summary;
    eprintln!(
        "{} cells, max relative error k {:.4} theta {:.4}: {}",
        s.cells,
        s.max_rel_err_k,
        s.max_rel_err_theta,
        if report.passed() { "PASS" } else { "FAIL" }
    );
    Ok(if report.passed() {
        Outcome::Success
    } else {
        Outcome::ValidationFailed
    })
}

pub fn cmd_plot(a: &PlotArgs) -> Result<Outcome> {
    let spec = PlotSpec {
        x: a.x.clone(),
        y: a.y.clone(),
        series: a.series.clone(),
        filters: a.filter.clone(),
        title: a.title.clone(),
    };
    plot_csv(&a.input, &a.out, &spec)?;
    Ok(Outcome::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("ulsgan").chain(args.iter().copied()))
    }

    #[test]
    fn grid_flags_parse_as_lists() {
        let cli = parse(&[
            "corpus", "--out", "d", "--heights", "0.36,0.48,0.60", "--betas", "0", "--grounds",
            "gravel",
        ])
        .unwrap();
        let Command::Corpus(a) = cli.command else { panic!() };
        assert_eq!(a.heights, Some(vec![0.36, 0.48, 0.60]));
        assert_eq!(a.grounds, Some(vec![Ground::Gravel]));
    }

    #[test]
    fn negative_angles_are_values() {
        let cli = parse(&["corpus", "--out", "d", "--betas", "-8,-2,0"]).unwrap();
        let Command::Corpus(a) = cli.command else { panic!() };
        assert_eq!(a.betas, Some(vec![-8.0, -2.0, 0.0]));
        let cli = parse(&[
            "generate", "--model", "m", "--height", "0.4", "--beta", "-3.5", "--ground", "asphalt",
            "--out", "o",
        ])
        .unwrap();
        let Command::Generate(a) = cli.command else { panic!() };
        assert_eq!(a.beta, -3.5);
    }

    #[test]
    fn missing_required_flag_is_a_usage_error() {
        assert_eq!(run(["ulsgan", "corpus"]), 2);
        assert_eq!(run(["ulsgan", "nonsense"]), 2);
        assert_eq!(run(["ulsgan", "--help"]), 0);
    }

    #[test]
    fn filters_need_an_equals_sign() {
        assert!(parse(&["plot", "--in", "a", "--out", "b", "--x", "h", "--y", "k", "--filter", "g"])
            .is_err());
        assert_eq!(parse_filter("ground=gravel").unwrap(), ("ground".into(), "gravel".into()));
    }

    #[test]
    fn bins_and_dominant_conflict() {
        assert!(parse(&[
            "validate", "--ref", "a", "--gen", "b", "--report", "c", "--bins", "2", "--dominant"
        ])
        .is_err());
    }
}
