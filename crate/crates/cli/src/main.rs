use std::path::PathBuf;
use std::process::ExitCode;

use citedyn::corpus::{Discipline, InputFormat};
use citedyn::distfit::ZeroHandling;
use citedyn::gamma::Kernel;
use citedyn::historyfit::{HistoryParams, Weighting};
use citedyn::stochastic::{CountingMode, Scheme};
use clap::{Args, Parser, Subcommand};

mod args;
mod commands;
mod inputs;

use args::{List, SeriesArg};

/// Citation dynamics: ingest citation records, fit distributions and
/// citation history curves, score eprints and simulate attention paths.
#[derive(Debug, Parser)]
#[command(name = "citedyn", version, propagate_version = true)]
struct Cli {
    /// Worker threads [default: available cores]. Results do not depend on it.
    #[arg(long, global = true, env = "CITEDYN_THREADS")]
    threads: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and aggregate it into age panels.
    Ingest(IngestArgs),
    /// Fit lognormal and power-law models to a citation-count distribution,
    /// or a volatility schedule to a slope series.
    FitDist(FitDistArgs),
    /// Fit citation history curves to age panels.
    FitHistory(FitHistoryArgs),
    /// Derived obsolescence metrics and cumulative splits for fitted curves.
    Metrics(MetricsArgs),
    /// Refit over growing sub-datasets and report the metric series.
    Trend(TrendArgs),
    /// Score eprints with the γ and γ* indices.
    Gamma(GammaArgs),
    /// Ready-reckoner table of γ over citation counts and ages.
    Reckoner(ReckonerArgs),
    /// Simulate latent attention paths.
    Simulate(SimulateArgs),
    /// Check a simulated ensemble against the closed-form moments and density.
    Verify(VerifyArgs),
    /// Render CSV columns as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Corpus (long-csv) or panel (panel-csv) file.
    #[arg(long)]
    input: PathBuf,
    /// Input format [default: detected from the header].
    #[arg(long, value_parser = args::format)]
    format: Option<InputFormat>,
    /// Disciplines to aggregate (repeatable) [default: all present].
    #[arg(long, value_parser = args::discipline)]
    discipline: Vec<Discipline>,
    /// Percentile cap: eprints above this citation percentile are dropped.
    #[arg(long, default_value_t = 0.99, value_parser = args::cap)]
    cap: f64,
    /// Oldest age kept in panels.
    #[arg(long, default_value_t = 20)]
    max_age: u32,
    /// Last calendar year of data [default: retrieval year].
    #[arg(long)]
    dataset_year: Option<i32>,
    /// Write the aggregated panels as panel-csv.
    #[arg(long)]
    panels_out: Option<PathBuf>,
    /// Result JSON [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitDistArgs {
    /// Corpus file (long-csv).
    #[arg(long, required_unless_present = "m_series")]
    input: Option<PathBuf>,
    #[arg(long, value_parser = args::discipline, required_unless_present = "m_series")]
    discipline: Option<Discipline>,
    /// Only eprints submitted in this year.
    #[arg(long)]
    submit_year: Option<i32>,
    /// Count citations over the first T years [default: through retrieval].
    #[arg(long)]
    age: Option<u32>,
    /// Zero-citation handling: keep, rank-then-drop or drop-then-rank.
    #[arg(long, default_value = "rank-then-drop", value_parser = args::zeros)]
    zeros: ZeroHandling,
    /// Also fit a power law to the tail above this quantile.
    #[arg(long)]
    power_law_qmin: Option<f64>,
    /// Shift θ of the power-law fit [default: 1].
    #[arg(long, value_parser = args::positive, requires = "power_law_qmin")]
    theta: Option<f64>,
    /// Write quantile-plot data (y,phi_inv_q,minus_log1mq).
    #[arg(long)]
    quantile_csv: Option<PathBuf>,
    /// Fit the volatility schedule to a `t,m` CSV of quantile-plot slopes instead.
    #[arg(long, conflicts_with_all = ["input", "discipline", "submit_year", "age", "power_law_qmin", "quantile_csv"])]
    m_series: Option<PathBuf>,
    /// Result JSON [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitHistoryArgs {
    /// Corpus (long-csv) or panel (panel-csv) file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = args::format)]
    format: Option<InputFormat>,
    /// Disciplines to fit (repeatable) [default: all present].
    #[arg(long, value_parser = args::discipline)]
    discipline: Vec<Discipline>,
    /// Percentile cap applied when aggregating a corpus.
    #[arg(long, default_value_t = 0.99, value_parser = args::cap)]
    cap: f64,
    #[arg(long, default_value_t = 20)]
    max_age: u32,
    /// Dataset year [default: retrieval year, or the latest panel year].
    #[arg(long)]
    dataset_year: Option<i32>,
    /// Residual weighting: none, population or relative.
    #[arg(long, default_value = "none", value_parser = args::weighting)]
    weighting: Weighting,
    /// Write the fitted curve (t,u_hat,f_component,g_component).
    #[arg(long)]
    curve_csv: Option<PathBuf>,
    /// Curve sampling step for --curve-csv.
    #[arg(long, default_value_t = 0.1, value_parser = args::positive)]
    curve_step: f64,
    /// Result JSON [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, args = ["fit", "params"])]
struct ParamSource {
    /// Fit result JSON (repeatable).
    #[arg(long)]
    fit: Vec<PathBuf>,
    /// Parameters as A,mu,sigma,B,lambda (lambda may be `inf`).
    #[arg(long, value_parser = args::params)]
    params: Option<HistoryParams>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[command(flatten)]
    source: ParamSource,
    /// Label for --params, or restrict --fit to these disciplines.
    #[arg(long, value_parser = args::discipline)]
    discipline: Vec<Discipline>,
    /// Ages T at which to split cumulative citations.
    #[arg(long, default_value = "1:10", value_parser = args::u32_list)]
    horizons: List<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrendArgs {
    /// Corpus file (long-csv).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = args::discipline)]
    discipline: Discipline,
    /// First dataset year.
    #[arg(long)]
    first: i32,
    /// Last dataset year [default: retrieval year].
    #[arg(long)]
    last: Option<i32>,
    #[arg(long, default_value_t = 0.99, value_parser = args::cap)]
    cap: f64,
    #[arg(long, default_value_t = 20)]
    max_age: u32,
    #[arg(long, default_value = "none", value_parser = args::weighting)]
    weighting: Weighting,
    /// Write dataset_year,s_rate,r_rate,i_rate,converged.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GammaArgs {
    /// Corpus file (long-csv).
    #[arg(long)]
    input: PathBuf,
    /// Fit result JSON with per-discipline parameters (repeatable).
    #[arg(long, required = true)]
    fit: Vec<PathBuf>,
    /// Discipline for a fit file that does not name one.
    #[arg(long, value_parser = args::discipline)]
    discipline: Option<Discipline>,
    /// Score every eprint at this age [default: its age at retrieval].
    #[arg(long)]
    age: Option<u32>,
    /// Scores CSV (eprint_id,discipline,T,c,gamma,gamma_star) [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result JSON with per-discipline group statistics.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Use Welch's ANOVA for the group comparison.
    #[arg(long)]
    welch: bool,
    /// Kernel half-width for density curves of γ.
    #[arg(long, default_value_t = 0.2, value_parser = args::positive)]
    kde_half_width: f64,
    #[arg(long, default_value = "epanechnikov", value_parser = args::kernel)]
    kernel: Kernel,
    /// Write per-discipline density curves (discipline,x,density).
    #[arg(long)]
    kde_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReckonerArgs {
    #[command(flatten)]
    source: ParamSource,
    /// Label for --params, or restrict --fit to these disciplines.
    #[arg(long, value_parser = args::discipline)]
    discipline: Vec<Discipline>,
    /// Citation levels.
    #[arg(long, default_value = "1,5,10,50,100,500", value_parser = args::u64_list)]
    citations: List<u64>,
    /// Ages T.
    #[arg(long, default_value = "2:10", value_parser = args::u32_list)]
    ages: List<u32>,
    /// Table CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result JSON with unrounded values.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Fit result JSON.
    #[arg(long)]
    fit: PathBuf,
    /// Volatility JSON (s1, s2).
    #[arg(long)]
    vol: PathBuf,
    /// Discipline to take from a multi-discipline fit file.
    #[arg(long, value_parser = args::discipline)]
    discipline: Option<Discipline>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.01, value_parser = args::positive)]
    dt: f64,
    /// Step scheme: exact or euler-maruyama.
    #[arg(long, default_value = "exact", value_parser = args::scheme)]
    scheme: Scheme,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 1000)]
    paths: usize,
    #[arg(long, default_value_t = 10.0, value_parser = args::positive)]
    horizon: f64,
    /// Counting mode: integral-floor or yearly-floor-sum.
    #[arg(long, default_value = "integral-floor", value_parser = args::counting)]
    counting: CountingMode,
    /// Ensemble CSV (path_id,t,x) [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep every n-th grid point in the CSV outputs.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Write per-time summary (t,mean,var,q05,q50,q95).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Write per-path citation counts at the horizon (path_id,c).
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Result JSON with the run configuration and count statistics.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    /// Check times.
    #[arg(long, default_value = "1,5,10", value_parser = args::f64_list)]
    times: List<f64>,
    /// Also run the event-timing check with this many events per sample.
    #[arg(long)]
    timing_events: Option<usize>,
    #[arg(long, default_value_t = 0.1, value_parser = args::positive)]
    timing_bound: f64,
    #[arg(long, default_value_t = 2.0, value_parser = args::positive)]
    timing_t0: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// FILE:XCOL:YCOL[:STYLE[:NAME]], STYLE line or scatter (repeatable).
    #[arg(long, required = true, value_parser = args::series)]
    series: Vec<SeriesArg>,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long)]
    x_label: Option<String>,
    #[arg(long)]
    y_label: Option<String>,
    /// SVG output; the plotted data go to a sibling .csv.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(commands::EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }

    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::FitDist(a) => commands::fit_dist(a),
        Command::FitHistory(a) => commands::fit_history(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Trend(a) => commands::trend(a),
        Command::Gamma(a) => commands::gamma(a),
        Command::Reckoner(a) => commands::reckoner(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
        Command::Plot(a) => commands::plot(a),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
