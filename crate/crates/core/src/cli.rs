//! Command-line front end. `run` parses arguments, dispatches a verb and
//! returns the process exit code; errors go to stderr as one JSON object.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::intervene::{
    noise_csv, noise_sweep, pca_csv, pca_sweep, InterventionOutcome, NoiseKind, NoiseSweepReport, SvdMethod,
    SweepInput, SweepReport,
};
use crate::plot::{render_svg, ScatterPlotSpec};
use crate::signatures::{dump_signature, write_signature_csv, SignatureRecord};
use crate::spectral::RandomizedParams;
use crate::stats::corpus::{corpus_analysis, corpus_importance, Corpus, CorrelationReport, ImportanceReport, Target};
use crate::stats::forest::ForestParams;
use crate::stats::leading::{leading_indicator, series_from_path, EpochFit};
use crate::synth::{layered_model, mixture_model, MixtureParams};
use crate::tensor_io::{Dtype, Dump};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "GEODSIG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "geodsig", version, about = "Effective-dimension signatures of network activations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Rows sampled per dump [default: 2000, or all rows if fewer]
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Table)]
    pub format: FormatArg,
    /// Output file (a directory for `intervene` and `synth`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = SvdArg::Auto)]
    pub svd_method: SvdArg,
    #[arg(long, global = true, default_value_t = 10)]
    pub oversampling: usize,
    #[arg(long, global = true, default_value_t = 2)]
    pub power_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SvdArg {
    Auto,
    Exact,
    Randomized,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-layer effective dimensions and signature of each dump
    Signatures {
        #[arg(required = true)]
        dumps: Vec<PathBuf>,
    },
    /// Correlate per-model metrics with accuracy (or another column)
    Corpus {
        records: PathBuf,
        /// Comma-separated metric columns [default: every feature column]
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long, default_value = "accuracy")]
        target: String,
        /// Also fit a random forest and report feature importances
        #[arg(long)]
        rf: bool,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 5)]
        max_depth: usize,
    },
    /// Per-epoch R^2 of a checkpoint metric and of validation accuracy
    Leading { checkpoints: PathBuf },
    /// Noise and PCA interventions on the pre-classifier layer
    Intervene {
        dump: PathBuf,
        /// Comma-separated noise kinds: gaussian, uniform, dropout, salt_pepper
        #[arg(long, value_delimiter = ',')]
        noise: Vec<String>,
        /// Comma-separated levels applied to every noise kind [default: per-kind schedule]
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
        /// Comma-separated cumulative-variance thresholds in (0, 1]
        #[arg(long, value_delimiter = ',')]
        pca: Vec<f64>,
    },
    /// SVG scatter of two columns of a records CSV
    Plot {
        records: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long, default_value = "accuracy")]
        y: String,
        #[arg(long)]
        title: Option<String>,
    },
    /// Write a synthetic dump with known geometry
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        samples_total: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Three layers of intrinsic dimension 10, 5 and 2
    Layered,
    /// Ten-class Gaussian mixture with a matched linear head
    Mixture,
}

impl GlobalArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let config = RunConfig {
            sample_limit: self.samples,
            seed: self.seed,
            svd_method: match self.svd_method {
                SvdArg::Auto => SvdMethod::Auto,
                SvdArg::Exact => SvdMethod::Exact,
                SvdArg::Randomized => SvdMethod::Randomized,
            },
            randomized: RandomizedParams {
                oversampling: self.oversampling,
                power_iters: self.power_iters,
                seed: self.seed,
                ..Default::default()
            },
            format: match self.format {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Table => OutputFormat::Table,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

/// Render an error as the single-line JSON written to stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::to_string(&ErrorReport { error: err.kind(), message: err.to_string(), exit_code: err.exit_code() })
        .expect("error serializes")
}

/// Parse `args`, run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match configure_threads().and_then(|_| execute(&cli)) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            err.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize =
        value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {value:?}"))
        })?;
    // A pool may already exist when running in-process more than once.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let config = cli.global.config()?;
    let out = cli.global.out.as_deref();
    match &cli.command {
        Command::Signatures { dumps } => emit(out, &cmd_signatures(dumps, &config)?),
        Command::Corpus { records, metrics, target, rf, trees, max_depth } => {
            let forest = rf.then_some(ForestParams { n_trees: *trees, max_depth: *max_depth, seed: config.seed });
            emit(out, &cmd_corpus(records, metrics, target, forest, &config)?)
        }
        Command::Leading { checkpoints } => emit(out, &cmd_leading(checkpoints, &config)?),
        Command::Intervene { dump, noise, levels, pca } => {
            let report = cmd_intervene(dump, noise, levels, pca, &config)?;
            match out {
                Some(dir) => report.write_dir(dir),
                None => emit(None, &report.render(config.format)),
            }
        }
        Command::Plot { records, x, y, title } => {
            let corpus = Corpus::from_path(records)?;
            let mut spec = ScatterPlotSpec::from_corpus(&corpus, x, y)?;
            if let Some(t) = title {
                spec.title = t.clone();
            }
            emit(out, &render_svg(&spec)?)
        }
        Command::Synth { kind, samples_total } => {
            let dir = out.ok_or_else(|| Error::InvalidArgument("synth needs --out <dir>".into()))?;
            let model = match kind {
                SynthKind::Layered => layered_model(samples_total.unwrap_or(4000), &[10, 5, 2], 16, config.seed)?,
                SynthKind::Mixture => mixture_model(&MixtureParams {
                    samples: samples_total.unwrap_or(4000),
                    seed: config.seed,
                    ..Default::default()
                })?,
            };
            model.write(dir, Dtype::F32)?;
            Ok(())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_signatures(dumps: &[PathBuf], config: &RunConfig) -> Result<String> {
    let records = dumps
        .iter()
        .map(|dir| {
            let dump = Dump::open(dir)?;
            dump_signature(&dump, config.limit_for(dump.sample_count()), config.seed)
        })
        .collect::<Result<Vec<SignatureRecord>>>()?;
    Ok(match config.format {
        OutputFormat::Json => to_json(&records),
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_signature_csv(&mut buf, &records)?;
            String::from_utf8(buf).expect("utf8")
        }
        OutputFormat::Table => {
            let mut s = String::from("| Model | Family | L | m | d_1 | d_out | d_min | d_max | C |\n");
            s.push_str("|---|---|---|---|---|---|---|---|---|\n");
            for r in &records {
                let g = &r.signature;
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {:+.3} |",
                    r.model_name,
                    r.family,
                    g.depth,
                    g.sample_count,
                    g.input_effdim(),
                    g.output_effdim,
                    g.bottleneck_effdim,
                    g.max_effdim,
                    g.total_compression
                );
            }
            s
        }
    })
}

#[derive(Debug, Serialize)]
struct CorpusOutput<'a> {
    correlations: &'a CorrelationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    importance: Option<&'a ImportanceReport>,
}

pub fn cmd_corpus(
    records: &Path,
    metrics: &[String],
    target: &str,
    forest: Option<ForestParams>,
    config: &RunConfig,
) -> Result<String> {
    let corpus = Corpus::from_path(records)?;
    let target = Target::parse(target);
    let metrics: Vec<&str> = if metrics.is_empty() {
        corpus.feature_names.iter().map(String::as_str).filter(|m| *m != target.name()).collect()
    } else {
        metrics.iter().map(String::as_str).collect()
    };
    let report = corpus_analysis(&corpus, &metrics, &target)?;
    let importance = forest.map(|params| corpus_importance(&corpus, &metrics, &target, params)).transpose()?;
    Ok(match config.format {
        OutputFormat::Json => to_json(&CorpusOutput { correlations: &report, importance: importance.as_ref() }),
        OutputFormat::Csv => {
            let mut s = report.to_csv();
            if let Some(imp) = &importance {
                s.push('\n');
                s.push_str(&imp.to_csv());
            }
            s
        }
        OutputFormat::Table => {
            let mut s = report.to_markdown();
            if let Some(imp) = &importance {
                s.push('\n');
                s.push_str(&imp.to_markdown());
            }
            s
        }
    })
}

pub fn cmd_leading(checkpoints: &Path, config: &RunConfig) -> Result<String> {
    let fits: Vec<EpochFit> = leading_indicator(&series_from_path(checkpoints)?)?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    Ok(match config.format {
        OutputFormat::Json => to_json(&fits),
        OutputFormat::Csv => {
            let mut s = String::from("epoch,models,r2_metric,r2_accuracy\n");
            for f in &fits {
                let _ = writeln!(s, "{},{},{},{}", f.epoch, f.models, cell(f.r2_metric), cell(f.r2_accuracy));
            }
            s
        }
        OutputFormat::Table => {
            let mut s = String::from("| Epoch | Models | R^2 metric | R^2 val acc |\n|---|---|---|---|\n");
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
            for f in &fits {
                let _ = writeln!(s, "| {} | {} | {} | {} |", f.epoch, f.models, fmt(f.r2_metric), fmt(f.r2_accuracy));
            }
            s
        }
    })
}

/// Combined degradation and improvement results for one dump.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct InterventionReport {
    pub model: String,
    pub samples: usize,
    pub seed: u64,
    pub baseline: InterventionOutcome,
    pub noise: Option<NoiseSweepReport>,
    pub pca: Option<SweepReport>,
}

pub const NOISE_CSV_FILE: &str = "noise.csv";
pub const PCA_CSV_FILE: &str = "pca.csv";
pub const SUMMARY_FILE: &str = "summary.json";

fn fmt_r(r: Option<f64>) -> String {
    r.map(|v| format!("{v:+.3}")).unwrap_or_else(|| "-".into())
}

impl InterventionReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => {
                let mut blocks = Vec::new();
                if let Some(n) = &self.noise {
                    blocks.push(noise_csv(n));
                }
                if let Some(p) = &self.pca {
                    blocks.push(pca_csv(&self.model, p));
                }
                blocks.join("\n")
            }
            OutputFormat::Table => self.to_markdown(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let b = &self.baseline;
        let mut s = format!(
            "Interventions on {} (m = {}): baseline EffDim {:.2}, accuracy {:.2}%\n",
            self.model,
            self.samples,
            b.effdim,
            100.0 * b.accuracy
        );
        if let Some(n) = &self.noise {
            s.push_str("\nDegradation\n\n| Noise | Level | EffDim | dEffDim | dAcc (pp) |\n|---|---|---|---|---|\n");
            for sweep in &n.per_kind {
                for o in &sweep.outcomes {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {:.2} | {:+.2} | {:+.2} |",
                        sweep.name, o.level, o.effdim, o.delta_effdim, o.delta_accuracy_pp
                    );
                }
            }
            s.push('\n');
            for sweep in &n.per_kind {
                let _ = writeln!(s, "r({}) = {}", sweep.name, fmt_r(sweep.pooled_r));
            }
            let _ = writeln!(s, "r(pooled) = {}", fmt_r(n.pooled_r));
        }
        if let Some(p) = &self.pca {
            s.push_str(
                "\nImprovement\n\n| Variance | Components | EffDim | dEffDim | dAcc (pp) |\n|---|---|---|---|---|\n",
            );
            for o in &p.outcomes {
                let _ = writeln!(
                    s,
                    "| {}% | {} | {:.2} | {:+.2} | {:+.2} |",
                    o.level * 100.0,
                    o.components_kept.map(|k| k.to_string()).unwrap_or_default(),
                    o.effdim,
                    o.delta_effdim,
                    o.delta_accuracy_pp
                );
            }
        }
        s
    }

    /// Write the sweep CSVs that were run plus the JSON summary into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        if let Some(n) = &self.noise {
            write(NOISE_CSV_FILE, noise_csv(n))?;
        }
        if let Some(p) = &self.pca {
            write(PCA_CSV_FILE, pca_csv(&self.model, p))?;
        }
        write(SUMMARY_FILE, self.to_json())
    }
}

pub fn cmd_intervene(
    dump: &Path,
    noise: &[String],
    levels: &[f64],
    pca: &[f64],
    config: &RunConfig,
) -> Result<InterventionReport> {
    if noise.is_empty() && pca.is_empty() {
        return Err(Error::InvalidArgument("give --noise and/or --pca".into()));
    }
    if !levels.is_empty() && noise.is_empty() {
        return Err(Error::InvalidArgument("--levels needs --noise".into()));
    }
    let kinds = noise.iter().map(|k| k.parse::<NoiseKind>()).collect::<Result<Vec<_>>>()?;
    let dump = Dump::open(dump)?;
    let input = SweepInput::load(&dump, config.limit_for(dump.sample_count()), config.seed)?;

    let noise_report = if kinds.is_empty() {
        None
    } else {
        let schedule: Vec<(NoiseKind, Vec<f64>)> =
            kinds.iter().map(|&k| (k, if levels.is_empty() { k.default_levels() } else { levels.to_vec() })).collect();
        Some(noise_sweep(&input, &schedule, config.seed)?)
    };
    let pca_report =
        if pca.is_empty() { None } else { Some(pca_sweep(&input, pca, config.svd_method, config.randomized)?) };
    let baseline = noise_report
        .as_ref()
        .map(|n| n.baseline.clone())
        .or_else(|| pca_report.as_ref().map(|p| p.baseline.clone()))
        .expect("at least one sweep ran");
    Ok(InterventionReport {
        model: input.model_name.clone(),
        samples: input.labels.len(),
        seed: config.seed,
        baseline,
        noise: noise_report,
        pca: pca_report,
    })
}
