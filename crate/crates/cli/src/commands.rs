//! Subcommand bodies. Each returns an [`Outcome`] or a [`CliError`] that
//! maps onto the process exit code.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use citedyn::corpus::{
    build_age_panel, build_trend_subsets, percentile_summary, write_panel_csv, AgePanel, CitationCorpus, Discipline,
    LoadedInput, PercentileSummary,
};
use citedyn::distfit::{
    fit_lognormal_quantile, fit_power_law_quantile, make_quantile_series, LognormalFit, PowerLawFit, ZeroHandling,
};
use citedyn::gamma::{
    build_reckoner, gamma_star_scores, group_stats, kde_curve, score_corpus, write_reckoner_csv, write_scores_csv,
    GroupComparison, ReadyReckoner,
};
use citedyn::historyfit::{
    cumulative_split, derive_metrics, derive_metrics_from_params, trend_metrics, write_curve_csv,
    CumulativeSplit, DerivedMetrics, FitOptions, HistoryFit, HistoryParams, TrendPoint,
};
use citedyn::plot::{emit_plot, PlotSpec, Series};
use citedyn::report::{digest_files, ResultEnvelope};
use citedyn::stats::{mean, variance};
use citedyn::stochastic::{
    count_citations, fit_volatility, simulate_ensemble, simulate_timing_clt, verify_ensemble, PathEnsemble, SdeConfig,
    TimeCheck, TimingReport, TimingSimConfig, VolatilityFit,
};
use citedyn::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::inputs::{self, load_input, read_fit, read_vol, select_params};
use crate::{
    FitDistArgs, FitHistoryArgs, GammaArgs, IngestArgs, MetricsArgs, ParamSource, PlotArgs, ReckonerArgs, SimArgs,
    SimulateArgs, TrendArgs, VerifyArgs,
};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::InvalidInput(_)) => EXIT_USAGE,
            CliError::Lib(Error::Convergence(_)) => EXIT_CONVERGENCE,
            CliError::Lib(_) => EXIT_DATA,
        }
    }
}

/// A run that wrote its outputs. `Unconverged` still wrote them, flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Unconverged,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Done => 0,
            Outcome::Unconverged => EXIT_CONVERGENCE,
        }
    }
}

type CmdResult = Result<Outcome, CliError>;

fn emit<T: Serialize>(envelope: &ResultEnvelope<T>, out: Option<&Path>) -> Result<(), CliError> {
    for w in &envelope.warnings {
        log::warn!("{w}");
    }
    match out {
        Some(path) => envelope.write(path)?,
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{}", envelope.to_json()?)?;
        }
    }
    Ok(())
}

/// Buffered file, or stdout when no path is given.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn digest(paths: &[&Path]) -> Result<Option<String>, CliError> {
    Ok(digest_files(paths)?)
}

fn require_corpus(loaded: LoadedInput, cmd: &str) -> Result<CitationCorpus, CliError> {
    match loaded {
        LoadedInput::Corpus(c) => Ok(c),
        LoadedInput::Panels(_) => Err(CliError::Usage(format!("{cmd} needs a long-csv corpus, not panels"))),
    }
}

fn truncate_panel(mut panel: AgePanel, max_age: u32) -> AgePanel {
    panel.entries.retain(|e| e.age <= max_age);
    panel
}

/// One panel per requested discipline, at `dataset_year` or the latest
/// year present.
fn panels_for(
    loaded: &LoadedInput,
    requested: &[Discipline],
    cap: f64,
    max_age: u32,
    dataset_year: Option<i32>,
) -> Result<Vec<AgePanel>, CliError> {
    match loaded {
        LoadedInput::Corpus(c) => {
            let year = dataset_year.unwrap_or(c.retrieval_year());
            let ds: Vec<Discipline> =
                if requested.is_empty() { c.disciplines().into_iter().collect() } else { requested.to_vec() };
            Ok(ds.into_iter().map(|d| build_age_panel(c, d, year, cap, max_age)).collect::<Result<_, _>>()?)
        }
        LoadedInput::Panels(all) => {
            let ds: Vec<Discipline> = if requested.is_empty() {
                let mut v: Vec<Discipline> = all.iter().map(|p| p.discipline).collect();
                v.sort();
                v.dedup();
                v
            } else {
                requested.to_vec()
            };
            ds.into_iter()
                .map(|d| {
                    let mut of_d = all.iter().filter(|p| p.discipline == d);
                    let found = match dataset_year {
                        Some(y) => of_d.find(|p| p.dataset_year == y),
                        None => of_d.max_by_key(|p| p.dataset_year),
                    };
                    found
                        .cloned()
                        .map(|p| truncate_panel(p, max_age))
                        .ok_or_else(|| CliError::Lib(Error::data(format!("no panel for {d} in the input"))))
                })
                .collect()
        }
    }
}

#[derive(Debug, Serialize)]
struct PanelSummary {
    discipline: Discipline,
    dataset_year: i32,
    percentile_cap: Option<f64>,
    population: u64,
    n_ages: usize,
    omitted_ages: Vec<u32>,
    percentile: Option<PercentileSummary>,
}

#[derive(Debug, Serialize)]
struct IngestReport {
    format: &'static str,
    n_eprints: Option<usize>,
    total_citations: Option<u64>,
    retrieval_year: Option<i32>,
    panels: Vec<PanelSummary>,
}

pub fn ingest(a: IngestArgs) -> CmdResult {
    let loaded = load_input(&a.input, a.format)?;
    let panels = panels_for(&loaded, &a.discipline, a.cap, a.max_age, a.dataset_year)?;
    let summaries = panels
        .iter()
        .map(|p| {
            let percentile = match &loaded {
                LoadedInput::Corpus(c) => Some(percentile_summary(c, p.discipline, a.cap)?),
                LoadedInput::Panels(_) => None,
            };
            Ok(PanelSummary {
                discipline: p.discipline,
                dataset_year: p.dataset_year,
                percentile_cap: p.percentile_cap,
                population: p.population,
                n_ages: p.len(),
                omitted_ages: p.omitted_ages.clone(),
                percentile,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let report = match &loaded {
        LoadedInput::Corpus(c) => IngestReport {
            format: "long-csv",
            n_eprints: Some(c.len()),
            total_citations: Some(c.total_citations()),
            retrieval_year: Some(c.retrieval_year()),
            panels: summaries,
        },
        LoadedInput::Panels(_) => {
            IngestReport { format: "panel-csv", n_eprints: None, total_citations: None, retrieval_year: None, panels: summaries }
        }
    };
    if let Some(path) = &a.panels_out {
        let mut w = create(path)?;
        write_panel_csv(&panels, &mut w)?;
        w.flush()?;
    }
    let env = ResultEnvelope::new("ingest", report).with_digest(digest(&[&a.input])?);
    emit(&env, a.out.as_deref())?;
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct DistReport {
    discipline: Discipline,
    submit_year: Option<i32>,
    age: Option<u32>,
    n_eprints: usize,
    n_zero: usize,
    zeros: ZeroHandling,
    lognormal: LognormalFit,
    power_law: Option<PowerLawFit>,
}

#[derive(Debug, Serialize)]
struct VolReport {
    volatility: VolatilityFit,
    /// m̂ predicted at each input age.
    fitted: Vec<(f64, f64)>,
}

pub fn fit_dist(a: FitDistArgs) -> CmdResult {
    if let Some(path) = &a.m_series {
        let series = inputs::read_m_series(path)?;
        let vol = fit_volatility(&series)?;
        let fitted = series.iter().map(|&(t, _)| (t, vol.m_hat(t))).collect();
        let env = ResultEnvelope::new("fit-dist", VolReport { volatility: vol, fitted }).with_digest(digest(&[path])?);
        emit(&env, a.out.as_deref())?;
        return Ok(Outcome::Done);
    }
    let (Some(input), Some(d)) = (&a.input, a.discipline) else {
        return Err(CliError::Usage("fit-dist needs --input and --discipline".into()));
    };
    let corpus = require_corpus(load_input(input, None)?, "fit-dist")?;
    let counts: Vec<u64> = corpus
        .in_discipline(d)
        .filter(|r| a.submit_year.is_none_or(|y| r.submit_year == y))
        .filter_map(|r| match a.age {
            Some(t) => (r.yearly_citations.len() >= t as usize).then(|| r.cumulative_at_age(t as usize)),
            None => Some(r.citations_through(corpus.retrieval_year())),
        })
        .collect();
    if counts.is_empty() {
        return Err(Error::InsufficientData(format!("no {d} eprints match the filters")).into());
    }
    let series = make_quantile_series(&counts, a.zeros)?;
    let lognormal = fit_lognormal_quantile(&series)?;
    let power_law = a.power_law_qmin.map(|q| fit_power_law_quantile(&series, q, a.theta)).transpose()?;
    if let Some(path) = &a.quantile_csv {
        let mut w = create(path)?;
        series.write_csv(&mut w)?;
        w.flush()?;
    }
    let report = DistReport {
        discipline: d,
        submit_year: a.submit_year,
        age: a.age,
        n_eprints: counts.len(),
        n_zero: counts.iter().filter(|&&c| c == 0).count(),
        zeros: a.zeros,
        lognormal,
        power_law,
    };
    let env = ResultEnvelope::new("fit-dist", report).with_digest(digest(&[input])?);
    emit(&env, a.out.as_deref())?;
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct FitEntry {
    discipline: Discipline,
    fit: HistoryFit,
    metrics: DerivedMetrics,
}

#[derive(Debug, Serialize)]
struct FitReport {
    options: FitOptions,
    fits: Vec<FitEntry>,
}

fn unconverged_warning(fit: &HistoryFit) -> String {
    format!(
        "fit for {} ({}) did not converge after {} iterations",
        fit.discipline, fit.dataset_year, fit.iterations
    )
}

/// `curve.csv` → `curve-hep.csv` when several curves share one flag.
fn suffixed(path: &Path, d: Discipline) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{d}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{d}"),
    };
    path.with_file_name(name)
}

pub fn fit_history(a: FitHistoryArgs) -> CmdResult {
    let loaded = load_input(&a.input, a.format)?;
    let panels = panels_for(&loaded, &a.discipline, a.cap, a.max_age, a.dataset_year)?;
    let options = FitOptions { weighting: a.weighting, ..FitOptions::default() };
    let fits = panels.par_iter().map(|p| citedyn::historyfit::fit_history(p, &options)).collect::<Result<Vec<_>, _>>()?;
    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    for fit in fits {
        if !fit.converged {
            warnings.push(unconverged_warning(&fit));
        }
        let metrics = derive_metrics(&fit)?;
        entries.push(FitEntry { discipline: fit.discipline, fit, metrics });
    }
    if let Some(path) = &a.curve_csv {
        for e in &entries {
            let target = if entries.len() == 1 { path.clone() } else { suffixed(path, e.discipline) };
            let mut w = create(&target)?;
            write_curve_csv(&e.fit.params, a.max_age as f64, a.curve_step, &mut w)?;
            w.flush()?;
        }
    }
    let outcome = if warnings.is_empty() { Outcome::Done } else { Outcome::Unconverged };
    let env = ResultEnvelope::new("fit-history", FitReport { options, fits: entries })
        .with_digest(digest(&[&a.input])?)
        .with_warnings(warnings);
    emit(&env, a.out.as_deref())?;
    Ok(outcome)
}

/// Parameter sets named by `--fit` files or `--params`.
fn gather_params(
    source: &ParamSource,
    disciplines: &[Discipline],
) -> Result<Vec<(Option<Discipline>, HistoryParams)>, CliError> {
    if let Some(p) = source.params {
        return match disciplines {
            [] => Ok(vec![(None, p)]),
            [d] => Ok(vec![(Some(*d), p)]),
            _ => Err(CliError::Usage("--params takes at most one --discipline".into())),
        };
    }
    let mut out = Vec::new();
    for path in &source.fit {
        let fits = read_fit(path)?;
        if disciplines.is_empty() {
            out.extend(fits);
        } else {
            for &d in disciplines {
                if let Ok(sel) = select_params(&fits, Some(d)) {
                    out.push(sel);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no parameters match the requested disciplines".into()).into());
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct MetricsEntry {
    discipline: Option<Discipline>,
    params: HistoryParams,
    metrics: DerivedMetrics,
    splits: Vec<CumulativeSplit>,
}

pub fn metrics(a: MetricsArgs) -> CmdResult {
    let sets = gather_params(&a.source, &a.discipline)?;
    let entries = sets
        .into_iter()
        .map(|(d, p)| {
            let splits = a.horizons.0.iter().map(|&t| cumulative_split(&p, t as f64)).collect::<Result<Vec<_>, _>>()?;
            Ok(MetricsEntry { discipline: d, params: p, metrics: derive_metrics_from_params(&p), splits })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let files: Vec<&Path> = a.source.fit.iter().map(PathBuf::as_path).collect();
    let env = ResultEnvelope::new("metrics", serde_json::json!({ "entries": entries })).with_digest(digest(&files)?);
    emit(&env, a.out.as_deref())?;
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct TrendReport {
    discipline: Discipline,
    percentile_cap: f64,
    max_age: u32,
    points: Vec<TrendPoint>,
}

pub fn trend(a: TrendArgs) -> CmdResult {
    let corpus = require_corpus(load_input(&a.input, None)?, "trend")?;
    let last = a.last.unwrap_or(corpus.retrieval_year());
    if a.first > last {
        return Err(CliError::Usage(format!("--first {} is after --last {last}", a.first)));
    }
    let panels = build_trend_subsets(&corpus, a.discipline, a.first, last, a.cap, a.max_age)?;
    let options = FitOptions { weighting: a.weighting, ..FitOptions::default() };
    let points = trend_metrics(&panels, &options)?;
    let warnings: Vec<String> = points.iter().filter(|p| !p.converged).map(|p| unconverged_warning(&p.fit)).collect();
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["dataset_year", "s_rate", "r_rate", "i_rate", "converged"])?;
        for p in &points {
            w.write_record([
                p.dataset_year.to_string(),
                p.s_rate.to_string(),
                p.r_rate.to_string(),
                p.i_rate.to_string(),
                p.converged.to_string(),
            ])?;
        }
        w.flush()?;
    }
    let outcome = if warnings.is_empty() { Outcome::Done } else { Outcome::Unconverged };
    let report = TrendReport { discipline: a.discipline, percentile_cap: a.cap, max_age: a.max_age, points };
    let env = ResultEnvelope::new("trend", report).with_digest(digest(&[&a.input])?).with_warnings(warnings);
    emit(&env, a.out.as_deref())?;
    Ok(outcome)
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Lib(Error::Csv(e))
    }
}

#[derive(Debug, Serialize)]
struct GammaGroup {
    discipline: Discipline,
    n: usize,
    gamma_mean: f64,
    gamma_sd: f64,
    gamma_star_mean: f64,
    gamma_star_sd: f64,
}

#[derive(Debug, Serialize)]
struct GammaReport {
    age: Option<u32>,
    n_scored: usize,
    unscored: BTreeMap<String, usize>,
    groups: Vec<GammaGroup>,
    comparison: Option<GroupComparison>,
}

fn sd(v: &[f64]) -> f64 {
    if v.len() > 1 {
        variance(v).sqrt()
    } else {
        0.0
    }
}

pub fn gamma(a: GammaArgs) -> CmdResult {
    let corpus = require_corpus(load_input(&a.input, None)?, "gamma")?;
    let mut params = BTreeMap::new();
    for path in &a.fit {
        for (d, p) in read_fit(path)? {
            let d = d.or(a.discipline).ok_or_else(|| {
                CliError::Usage(format!("{} does not name a discipline; pass --discipline", path.display()))
            })?;
            params.insert(d, p);
        }
    }
    let scored = score_corpus(&corpus, &params, a.age);
    if scored.scores.is_empty() {
        return Err(Error::InsufficientData("no eprint could be scored".into()).into());
    }
    let stars = gamma_star_scores(&scored.scores)?;
    {
        let mut w = sink(a.out.as_deref())?;
        write_scores_csv(&scored.scores, &stars, &mut w)?;
        w.flush()?;
    }

    let mut by_d: BTreeMap<Discipline, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (s, g) in scored.scores.iter().zip(&stars) {
        let e = by_d.entry(s.discipline).or_default();
        e.0.push(s.gamma);
        e.1.push(g.gamma_star);
    }

    if let Some(path) = &a.kde_csv {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["discipline", "x", "density"])?;
        for (d, (g, _)) in &by_d {
            let curve = kde_curve(g, a.kde_half_width, a.kernel)?;
            for (x, y) in curve.x.iter().zip(&curve.density) {
                w.write_record([d.to_string(), x.to_string(), y.to_string()])?;
            }
        }
        w.flush()?;
    }

    if let Some(path) = &a.json {
        let mut warnings = Vec::new();
        let groups: Vec<GammaGroup> = by_d
            .iter()
            .map(|(d, (g, s))| GammaGroup {
                discipline: *d,
                n: g.len(),
                gamma_mean: mean(g),
                gamma_sd: sd(g),
                gamma_star_mean: mean(s),
                gamma_star_sd: sd(s),
            })
            .collect();
        let labelled: Vec<(String, Vec<f64>)> = by_d.iter().map(|(d, (g, _))| (d.to_string(), g.clone())).collect();
        let all_g: Vec<f64> = scored.scores.iter().map(|s| s.gamma).collect();
        let all_s: Vec<f64> = stars.iter().map(|s| s.gamma_star).collect();
        let comparison = match group_stats(&labelled, Some((&all_g, &all_s)), a.welch) {
            Ok(c) => Some(c),
            Err(e) => {
                warnings.push(format!("group comparison skipped: {e}"));
                None
            }
        };
        let mut unscored = BTreeMap::new();
        for u in &scored.unscored {
            *unscored.entry(u.reason.clone()).or_insert(0) += 1;
        }
        let report = GammaReport { age: a.age, n_scored: scored.scores.len(), unscored, groups, comparison };
        let mut files: Vec<&Path> = vec![&a.input];
        files.extend(a.fit.iter().map(PathBuf::as_path));
        let env = ResultEnvelope::new("gamma", report).with_digest(digest(&files)?).with_warnings(warnings);
        emit(&env, Some(path))?;
    }
    Ok(Outcome::Done)
}

pub fn reckoner(a: ReckonerArgs) -> CmdResult {
    let sets = gather_params(&a.source, &a.discipline)?;
    let tables: Vec<ReadyReckoner> =
        sets.iter().map(|(d, p)| build_reckoner(p, *d, &a.citations.0, &a.ages.0)).collect::<Result<_, _>>()?;
    {
        let mut w = sink(a.out.as_deref())?;
        write_reckoner_csv(&tables, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.json {
        let files: Vec<&Path> = a.source.fit.iter().map(PathBuf::as_path).collect();
        let env = ResultEnvelope::new("reckoner", serde_json::json!({ "tables": tables })).with_digest(digest(&files)?);
        emit(&env, Some(path))?;
    }
    Ok(Outcome::Done)
}

struct Prepared {
    discipline: Option<Discipline>,
    params: HistoryParams,
    vol: VolatilityFit,
    config: SdeConfig,
    digest: Option<String>,
}

fn prepare(sim: &SimArgs, n_paths: usize, horizon: f64) -> Result<Prepared, CliError> {
    let (discipline, params) = select_params(&read_fit(&sim.fit)?, sim.discipline)?;
    let vol = read_vol(&sim.vol)?;
    if n_paths == 0 {
        return Err(CliError::Usage("--paths must be at least 1".into()));
    }
    let config = SdeConfig {
        dt: sim.dt,
        horizon,
        n_paths,
        seed: sim.seed,
        scheme: sim.scheme,
        ..SdeConfig::default()
    };
    let digest = digest(&[&sim.fit, &sim.vol])?;
    Ok(Prepared { discipline, params, vol, config, digest })
}

#[derive(Debug, Serialize)]
struct CountStats {
    horizon: f64,
    mean: f64,
    variance: f64,
    min: u64,
    max: u64,
    n_zero: usize,
}

fn count_stats(ens: &PathEnsemble, counts: &[u64]) -> CountStats {
    let vals: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    CountStats {
        horizon: ens.time(ens.n_points - 1),
        mean: mean(&vals),
        variance: if vals.len() > 1 { variance(&vals) } else { 0.0 },
        min: counts.iter().copied().min().unwrap_or(0),
        max: counts.iter().copied().max().unwrap_or(0),
        n_zero: counts.iter().filter(|&&c| c == 0).count(),
    }
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    discipline: Option<Discipline>,
    params: HistoryParams,
    volatility: VolatilityFit,
    config: SdeConfig,
    counts: CountStats,
}

pub fn simulate(a: SimulateArgs) -> CmdResult {
    let mut prep = prepare(&a.sim, a.paths, a.horizon)?;
    prep.config.counting_mode = a.counting;
    let ens = simulate_ensemble(&prep.params, &prep.vol, &prep.config)?;
    {
        let mut w = sink(a.out.as_deref())?;
        ens.write_csv(&mut w, a.stride)?;
        w.flush()?;
    }
    if let Some(path) = &a.summary {
        let mut w = create(path)?;
        ens.write_summary_csv(&mut w, a.stride)?;
        w.flush()?;
    }
    let counts = count_citations(&ens, a.counting, None)?;
    if let Some(path) = &a.counts {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["path_id", "c"])?;
        for (i, c) in counts.iter().enumerate() {
            w.write_record([i.to_string(), c.to_string()])?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.json {
        let report = SimulateReport {
            discipline: prep.discipline,
            params: prep.params,
            volatility: prep.vol,
            config: prep.config,
            counts: count_stats(&ens, &counts),
        };
        emit(&ResultEnvelope::new("simulate", report).with_digest(prep.digest), Some(path))?;
    }
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    discipline: Option<Discipline>,
    params: HistoryParams,
    volatility: VolatilityFit,
    config: SdeConfig,
    checks: Vec<TimeCheck>,
    /// Every check has |z| ≤ 3 for the mean.
    means_within_3se: bool,
    timing: Option<TimingReport>,
}

pub fn verify(a: VerifyArgs) -> CmdResult {
    if a.times.0.iter().any(|t| !(*t > 0.0)) {
        return Err(CliError::Usage("--times must all be positive".into()));
    }
    let horizon = a.times.0.iter().copied().fold(0.0, f64::max);
    let prep = prepare(&a.sim, a.paths, horizon)?;
    let ens = simulate_ensemble(&prep.params, &prep.vol, &prep.config)?;
    let checks = verify_ensemble(&ens, &a.times.0)?;
    let timing = a
        .timing_events
        .map(|n| {
            simulate_timing_clt(&TimingSimConfig {
                t0: a.timing_t0,
                n_events: n,
                epsilon_bound: a.timing_bound,
                n_samples: a.paths,
                seed: a.sim.seed,
            })
        })
        .transpose()?;
    let report = VerifyReport {
        discipline: prep.discipline,
        params: prep.params,
        volatility: prep.vol,
        config: prep.config,
        means_within_3se: checks.iter().all(|c| c.z.abs() <= 3.0),
        checks,
        timing,
    };
    emit(&ResultEnvelope::new("verify", report).with_digest(prep.digest), a.out.as_deref())?;
    Ok(Outcome::Done)
}

pub fn plot(a: PlotArgs) -> CmdResult {
    let mut series = Vec::new();
    for s in &a.series {
        let (x, y) = inputs::read_columns(&s.file, &s.x, &s.y)?;
        let name = s.name.clone().unwrap_or_else(|| s.y.clone());
        series.push(Series::new(name, x, y, s.style));
    }
    let spec = PlotSpec {
        title: a.title,
        x_label: a.x_label.unwrap_or_else(|| a.series[0].x.clone()),
        y_label: a.y_label.unwrap_or_else(|| a.series[0].y.clone()),
        series,
    };
    let csv_path = emit_plot(&spec, &a.out)?;
    log::info!("wrote {} and {}", a.out.display(), csv_path.display());
    Ok(Outcome::Done)
}
