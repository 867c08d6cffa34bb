//! The `driftguard` command line: `track`, `bench`, `synth` and `sweep`.
//!
//! [`dispatch`] is the whole program minus process exit, so tests can drive
//! it in-process. Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod output;
mod overlay;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use driftguard_core::benchmark::synth::{self, SynthSpec, PRESETS};
use driftguard_core::benchmark::{
    load_sequence, precision_curve, run_ope, run_ope_dirs, run_sequence, success_curve, OpeSummary, TrackReport,
    GROUND_TRUTH_FILE,
};
use driftguard_core::tracker::load_cn_table;
use driftguard_core::TrackerConfig;
use serde::Serialize;

pub use output::{write_atomic, write_dir_atomic};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "driftguard", version, about = "Distractor-aware correlation filter tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track one OTB-style sequence and write a JSON report.
    Track(TrackArgs),
    /// One-pass evaluation over many sequences.
    Bench(BenchArgs),
    /// Write a synthetic sequence in OTB layout.
    Synth(SynthArgs),
    /// Re-run a benchmark while varying one parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON config file; keys not given take the defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set lambda2=0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    overrides: Vec<(String, String)>,
    /// Colour-names table (32768 rows of 10 values).
    #[arg(long, value_name = "FILE")]
    cn_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrackArgs {
    seq_dir: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_name = "FILE", default_value = "report.json")]
    out: PathBuf,
    /// Directory for per-frame PNGs with predicted (green) and true (red) boxes.
    #[arg(long, value_name = "DIR")]
    overlay: Option<PathBuf>,
    /// Success and precision curves as `curve,threshold,value` rows.
    #[arg(long, value_name = "FILE")]
    curves: Option<PathBuf>,
    /// Per-frame boxes and errors as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// A sequence directory, a directory of sequences, or a file listing one
    /// sequence directory per line.
    input: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_name = "FILE", default_value = "agg.json")]
    out: PathBuf,
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: String,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
    frames: u32,
    /// Frame size as WIDTHxHEIGHT.
    #[arg(long, default_value = "200x200", value_parser = parse_size)]
    size: (usize, usize),
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SweepKey {
    #[value(name = "lambda2")]
    Lambda2,
    #[value(name = "hog_cell")]
    HogCell,
    #[value(name = "cn_cell")]
    CnCell,
    #[value(name = "theta")]
    Theta,
}

impl SweepKey {
    fn name(self) -> &'static str {
        match self {
            SweepKey::Lambda2 => "lambda2",
            SweepKey::HogCell => "hog_cell",
            SweepKey::CnCell => "cn_cell",
            SweepKey::Theta => "theta",
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    key: SweepKey,
    /// Comma-separated values, e.g. `0.01,0.1,1,10,15,50`.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    grid: Vec<String>,
    /// Sequences to sweep over (as for `bench`); the built-in synthetic suite
    /// when omitted.
    #[arg(long, value_name = "DIR")]
    suite: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let (k, v) = (k.trim(), v.trim());
    TrackerConfig::default().set(k, v).map_err(|e| e.to_string())?;
    Ok((k.to_string(), v.to_string()))
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("expected WIDTHxHEIGHT, got '{s}'");
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w = w.trim().parse().map_err(|_| bad())?;
    let h = h.trim().parse().map_err(|_| bad())?;
    Ok((w, h))
}

/// A runtime failure carrying the message shown to the user.
#[derive(Debug)]
pub struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Defaults, then the config file, then the environment, then flags.
fn resolve_config(args: &ConfigArgs) -> CliResult<TrackerConfig> {
    let mut cfg = match &args.config {
        Some(path) => TrackerConfig::load(path)?,
        None => TrackerConfig::default(),
    };
    cfg.apply_env();
    if let Some(path) = &args.cn_table {
        cfg.cn_table_path = Some(path.clone());
    }
    for (k, v) in &args.overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Expands a bench input into sequence directories.
pub fn sequence_dirs(input: &Path) -> CliResult<Vec<PathBuf>> {
    if input.is_file() {
        let text = std::fs::read_to_string(input).map_err(|e| Failure(format!("{}: {e}", input.display())))?;
        let base = input.parent().unwrap_or(Path::new("."));
        let dirs: Vec<PathBuf> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect();
        if dirs.is_empty() {
            return Err(Failure(format!("{}: lists no sequences", input.display())));
        }
        return Ok(dirs);
    }
    if input.join(GROUND_TRUTH_FILE).is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = std::fs::read_dir(input).map_err(|e| Failure(format!("{}: {e}", input.display())))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.join(GROUND_TRUTH_FILE).is_file() {
            dirs.push(path);
        }
    }
    if dirs.is_empty() {
        return Err(Failure(format!(
            "{}: no sequence directories (none contain {GROUND_TRUTH_FILE})",
            input.display()
        )));
    }
    dirs.sort();
    Ok(dirs)
}

#[derive(Serialize)]
struct TrackOutput<'a> {
    config: &'a TrackerConfig,
    #[serde(flatten)]
    report: &'a TrackReport,
}

fn track(args: &TrackArgs) -> CliResult {
    let cfg = resolve_config(&args.config)?;
    let seq = load_sequence(&args.seq_dir)?;
    let table = Arc::new(load_cn_table(&cfg)?);
    let report = run_sequence(&cfg, &seq, table)?;

    if let Some(dir) = &args.overlay {
        overlay::write_overlays(dir, &seq, &report.boxes)?;
    }
    if let Some(path) = &args.curves {
        let mut text = String::from("curve,threshold,value\n");
        for (t, v) in success_curve(&report.overlaps) {
            text.push_str(&format!("success,{t},{v}\n"));
        }
        for (t, v) in precision_curve(&report.center_errors) {
            text.push_str(&format!("precision,{t},{v}\n"));
        }
        write_atomic(path, text.as_bytes())?;
    }
    if let Some(path) = &args.csv {
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    let json = serde_json::to_string_pretty(&TrackOutput {
        config: &cfg,
        report: &report,
    })?;
    write_atomic(&args.out, json.as_bytes())?;
    println!(
        "{}: {} frames  SR {:.3}  AUC {:.3}  DP {:.3}  {:.1} FPS",
        report.name, report.frames, report.sr, report.auc, report.dp, report.fps
    );
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput<'a> {
    config: &'a TrackerConfig,
    #[serde(flatten)]
    summary: &'a OpeSummary,
}

fn print_summary(s: &OpeSummary) {
    for seq in &s.sequences {
        match (&seq.report, &seq.error) {
            (Some(r), _) => println!(
                "{:<24} SR {:.3}  AUC {:.3}  DP {:.3}  {:.1} FPS",
                r.name, r.sr, r.auc, r.dp, r.fps
            ),
            (None, Some(e)) => println!("{:<24} failed: {e}", seq.name),
            (None, None) => {}
        }
    }
    if let (Some(auc), Some(sr), Some(dp)) = (s.mean_auc, s.mean_sr, s.mean_dp) {
        println!(
            "mean over {} sequences: SR {sr:.3}  AUC {auc:.3}  DP {dp:.3}",
            s.completed
        );
    }
}

fn bench(args: &BenchArgs) -> CliResult {
    let cfg = resolve_config(&args.config)?;
    let dirs = sequence_dirs(&args.input)?;
    let jobs = args.jobs.map_or_else(default_jobs, |j| j as usize);
    let summary = run_ope_dirs(&cfg, &dirs, jobs)?;
    let json = serde_json::to_string_pretty(&BenchOutput {
        config: &cfg,
        summary: &summary,
    })?;
    write_atomic(&args.out, json.as_bytes())?;
    print_summary(&summary);
    if summary.completed == 0 {
        return Err(Failure("every sequence failed".into()));
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> CliResult {
    let seq = SynthSpec::preset(&args.preset, args.frames as usize, args.size, args.seed)?.render()?;
    write_dir_atomic(&args.out, |tmp| Ok(seq.write(tmp)?))?;
    println!("wrote {} frames to {}", seq.frames.len(), args.out.display());
    Ok(())
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub auc: f64,
    pub dp: f64,
}

fn sweep(args: &SweepArgs) -> CliResult {
    let base = resolve_config(&args.config)?;
    let key = args.key.name();
    let mut configs = Vec::with_capacity(args.grid.len());
    for v in &args.grid {
        let mut cfg = base.clone();
        cfg.set(key, v)?;
        cfg.validate()?;
        configs.push((v.trim().to_string(), cfg));
    }
    let jobs = args.jobs.map_or_else(default_jobs, |j| j as usize);
    let builtin = match &args.suite {
        None => Some(synth::suite()?),
        Some(_) => None,
    };
    let dirs = args.suite.as_deref().map(sequence_dirs).transpose()?;

    let mut rows = Vec::new();
    for (value, cfg) in configs {
        let summary = match (&builtin, &dirs) {
            (Some(seqs), _) => run_ope(&cfg, seqs, jobs)?,
            (None, Some(dirs)) => run_ope_dirs(&cfg, dirs, jobs)?,
            (None, None) => unreachable!("either a suite directory or the built-in suite"),
        };
        let (Some(auc), Some(dp)) = (summary.mean_auc, summary.mean_dp) else {
            return Err(Failure(format!("{key}={value}: every sequence failed")));
        };
        println!("{key}={value:<8} AUC {auc:.3}  DP {dp:.3}");
        rows.push(SweepRow { value, auc, dp });
    }

    let mut text = String::from("value,auc,dp\n");
    for r in &rows {
        text.push_str(&format!("{},{},{}\n", r.value, r.auc, r.dp));
    }
    write_atomic(&args.out, text.as_bytes())?;
    Ok(())
}

/// Runs the command line `argv` (including the program name) and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Track(a) => track(a),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("driftguard: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_parsing() {
        assert_eq!(parse_assignment("lambda2 = 0").unwrap(), ("lambda2".into(), "0".into()));
        assert!(parse_assignment("lambda2").is_err());
        assert!(parse_assignment("nope=1").is_err());
        assert!(parse_assignment("hog_cell=1.5").is_err());
    }

    #[test]
    fn size_parsing() {
        assert_eq!(parse_size("320x240").unwrap(), (320, 240));
        assert_eq!(parse_size("64X48").unwrap(), (64, 48));
        assert!(parse_size("320").is_err());
        assert!(parse_size("ax2").is_err());
    }

    #[test]
    fn flags_beat_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"lambda2": 3.0, "theta": 0.02}"#).unwrap();
        let args = ConfigArgs {
            config: Some(path),
            overrides: vec![("lambda2".into(), "7".into())],
            cn_table: None,
        };
        let cfg = resolve_config(&args).unwrap();
        assert_eq!((cfg.lambda2, cfg.theta, cfg.hog_cell), (7.0, 0.02, 9));
    }

    #[test]
    fn invalid_override_is_a_runtime_error() {
        let args = ConfigArgs {
            config: None,
            overrides: vec![("theta".into(), "2".into())],
            cn_table: None,
        };
        assert!(resolve_config(&args).unwrap_err().to_string().contains("theta"));
    }
}
