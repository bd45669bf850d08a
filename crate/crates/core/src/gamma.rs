//! Age- and discipline-normalised citation indices.
//!
//! γ = ln(c / H(T)) compares an eprint's cumulative citations with the
//! discipline's expected cumulative citations at the same age. γ* maps the
//! within-discipline rank of γ through Φ⁻¹.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::corpus::{CitationCorpus, Discipline};
use crate::error::{Error, Result};
use crate::historyfit::{cumulative_split, HistoryParams};
use crate::special::normal_quantile;
use crate::stats::{mean, mid_rank_quantiles, pearson, trapezoid, variance};

/// Quantile ranks are clamped to this interval before Φ⁻¹.
pub const Q_CLAMP: (f64, f64) = (0.001, 0.999);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaScore {
    pub eprint_id: String,
    pub discipline: Discipline,
    #[serde(rename = "T")]
    pub age: u32,
    pub c: u64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaStarScore {
    pub eprint_id: String,
    pub discipline: Discipline,
    #[serde(rename = "Q")]
    pub q: f64,
    pub gamma_star: f64,
}

/// γ = ln(c / H(T)).
pub fn gamma_index(c: f64, horizon: f64, params: &HistoryParams) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("γ needs a positive citation count, got {c}")));
    }
    Ok((c / cumulative_split(params, horizon)?.h).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unscored {
    pub eprint_id: String,
    pub discipline: Discipline,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CorpusScores {
    pub scores: Vec<GammaScore>,
    pub unscored: Vec<Unscored>,
}

/// Score every (eprint, discipline) pair that has parameters.
///
/// With `age = None` each eprint is scored at T = retrieval_year −
/// submit_year using the citations of its first T years; otherwise at the
/// given T. Eprints younger than one year or without citations are
/// reported as unscored.
pub fn score_corpus(
    corpus: &CitationCorpus,
    params: &BTreeMap<Discipline, HistoryParams>,
    age: Option<u32>,
) -> CorpusScores {
    let pairs: Vec<_> = corpus
        .records()
        .iter()
        .flat_map(|r| r.disciplines.iter().filter_map(move |d| params.get(d).map(|p| (r, *d, p))))
        .collect();
    let results: Vec<std::result::Result<GammaScore, Unscored>> = pairs
        .par_iter()
        .map(|&(r, d, p)| {
            let unscored = |reason: &str| Unscored { eprint_id: r.eprint_id.clone(), discipline: d, reason: reason.into() };
            let t = match age {
                Some(t) => t,
                None => (corpus.retrieval_year() - r.submit_year).max(0) as u32,
            };
            if t < 1 {
                return Err(unscored("younger than one year"));
            }
            if (t as usize) > r.yearly_citations.len() {
                return Err(unscored("not observed for the full horizon"));
            }
            let c = r.cumulative_at_age(t as usize);
            if c == 0 {
                return Err(unscored("no citations"));
            }
            let gamma = gamma_index(c as f64, t as f64, p).map_err(|e| unscored(&e.to_string()))?;
            Ok(GammaScore { eprint_id: r.eprint_id.clone(), discipline: d, age: t, c, gamma })
        })
        .collect();
    let mut out = CorpusScores::default();
    for r in results {
        match r {
            Ok(s) => out.scores.push(s),
            Err(u) => out.unscored.push(u),
        }
    }
    out
}

/// γ* for each score, in input order.
pub fn gamma_star_scores(scores: &[GammaScore]) -> Result<Vec<GammaStarScore>> {
    if scores.is_empty() {
        return Err(Error::data("no γ scores to standardise"));
    }
    let mut groups: BTreeMap<Discipline, Vec<usize>> = BTreeMap::new();
    for (i, s) in scores.iter().enumerate() {
        groups.entry(s.discipline).or_default().push(i);
    }
    let mut q = vec![0.0; scores.len()];
    for idx in groups.values() {
        let vals: Vec<f64> = idx.iter().map(|&i| scores[i].gamma).collect();
        for (&i, r) in idx.iter().zip(mid_rank_quantiles(&vals)) {
            q[i] = r.clamp(Q_CLAMP.0, Q_CLAMP.1);
        }
    }
    scores
        .iter()
        .zip(q)
        .map(|(s, q)| {
            Ok(GammaStarScore {
                eprint_id: s.eprint_id.clone(),
                discipline: s.discipline,
                q,
                gamma_star: normal_quantile(q)?,
            })
        })
        .collect()
}

pub fn write_scores_csv<W: Write>(scores: &[GammaScore], stars: &[GammaStarScore], writer: W) -> Result<()> {
    if scores.len() != stars.len() {
        return Err(Error::InvalidInput("γ and γ* score lists differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["eprint_id", "discipline", "T", "c", "gamma", "gamma_star"])?;
    for (s, g) in scores.iter().zip(stars) {
        w.write_record([
            s.eprint_id.clone(),
            s.discipline.to_string(),
            s.age.to_string(),
            s.c.to_string(),
            s.gamma.to_string(),
            g.gamma_star.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadyReckoner {
    pub discipline: Option<Discipline>,
    pub c_levels: Vec<u64>,
    pub ages: Vec<u32>,
    /// Row per citation level, column per age; negative values are `None`.
    pub gamma: Vec<Vec<Option<f64>>>,
}

impl ReadyReckoner {
    pub fn get(&self, c: u64, age: u32) -> Option<f64> {
        let i = self.c_levels.iter().position(|&v| v == c)?;
        let j = self.ages.iter().position(|&v| v == age)?;
        self.gamma[i][j]
    }
}

pub fn build_reckoner(
    params: &HistoryParams,
    discipline: Option<Discipline>,
    c_levels: &[u64],
    ages: &[u32],
) -> Result<ReadyReckoner> {
    if c_levels.is_empty() || ages.is_empty() {
        return Err(Error::InvalidInput("reckoner needs at least one citation level and one age".into()));
    }
    if let Some(&a) = ages.iter().find(|&&a| a < 1) {
        return Err(Error::Domain(format!("reckoner ages must be >= 1, got {a}")));
    }
    let gamma = c_levels
        .iter()
        .map(|&c| {
            ages.iter()
                .map(|&t| gamma_index(c as f64, t as f64, params).map(|g| (g >= 0.0).then_some(g)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReadyReckoner { discipline, c_levels: c_levels.to_vec(), ages: ages.to_vec(), gamma })
}

/// Table layout: one row per (discipline, c), one column per age, values to
/// two decimals, masked cells empty.
pub fn write_reckoner_csv<W: Write>(tables: &[ReadyReckoner], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let Some(first) = tables.first() else {
        return Err(Error::InvalidInput("no reckoner tables to write".into()));
    };
    let mut header = vec!["discipline".to_string(), "c".to_string()];
    header.extend(first.ages.iter().map(|t| format!("T={t}")));
    w.write_record(&header)?;
    for tab in tables {
        if tab.ages != first.ages {
            return Err(Error::InvalidInput("reckoner tables must share the same ages".into()));
        }
        let label = tab.discipline.map(|d| d.to_string()).unwrap_or_default();
        for (c, row) in tab.c_levels.iter().zip(&tab.gamma) {
            let mut rec = vec![label.clone(), c.to_string()];
            rec.extend(row.iter().map(|g| g.map(|v| format!("{v:.2}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub first: String,
    pub second: String,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p_raw: Option<f64>,
    /// min(1, p_raw · number of pairs).
    pub p_adjusted: Option<f64>,
    /// Set when the pair has no within-group variance.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub groups: Vec<GroupSummary>,
    pub welch: bool,
    pub f_statistic: Option<f64>,
    pub df_between: f64,
    pub df_within: f64,
    pub p_value: Option<f64>,
    pub pairwise: Vec<PairwiseTest>,
    pub pearson_r: Option<f64>,
}

fn f_upper_tail(f: f64, d1: f64, d2: f64) -> Option<f64> {
    if f.is_nan() {
        return None;
    }
    if f.is_infinite() {
        return Some(0.0);
    }
    FisherSnedecor::new(d1, d2).ok().map(|dist| dist.sf(f).clamp(0.0, 1.0))
}

fn t_two_sided(t: f64, df: f64) -> Option<f64> {
    if t.is_nan() || !(df > 0.0) {
        return None;
    }
    if t.is_infinite() {
        return Some(0.0);
    }
    StudentsT::new(0.0, 1.0, df).ok().map(|dist| (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
}

/// One-way ANOVA (classical or Welch) with Bonferroni-adjusted pairwise t
/// tests, and optionally Pearson's r between two paired vectors.
pub fn group_stats(
    groups: &[(String, Vec<f64>)],
    paired: Option<(&[f64], &[f64])>,
    welch: bool,
) -> Result<GroupComparison> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData("group comparison needs at least two groups".into()));
    }
    if let Some((label, _)) = groups.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::InsufficientData(format!("group '{label}' has fewer than two values")));
    }
    let summaries: Vec<GroupSummary> = groups
        .iter()
        .map(|(label, v)| GroupSummary { label: label.clone(), n: v.len(), mean: mean(v), sd: variance(v).sqrt() })
        .collect();
    let k = groups.len() as f64;
    let n_total: f64 = summaries.iter().map(|s| s.n as f64).sum();

    let (f_statistic, df_between, df_within) = if welch {
        welch_anova(&summaries)
    } else {
        let grand = groups.iter().flat_map(|(_, v)| v.iter()).sum::<f64>() / n_total;
        let ssb: f64 = summaries.iter().map(|s| s.n as f64 * (s.mean - grand).powi(2)).sum();
        let ssw: f64 = summaries.iter().map(|s| (s.n as f64 - 1.0) * s.sd * s.sd).sum();
        let (d1, d2) = (k - 1.0, n_total - k);
        let f = if ssb == 0.0 && ssw > 0.0 { 0.0 } else { (ssb / d1) / (ssw / d2) };
        (f, d1, d2)
    };
    let p_value = f_upper_tail(f_statistic, df_between, df_within);

    let n_pairs = summaries.len() * (summaries.len() - 1) / 2;
    let mut pairwise = Vec::with_capacity(n_pairs);
    for i in 0..summaries.len() {
        for j in i + 1..summaries.len() {
            let (a, b) = (&summaries[i], &summaries[j]);
            let (na, nb) = (a.n as f64, b.n as f64);
            let (va, vb) = (a.sd * a.sd, b.sd * b.sd);
            let degenerate = va == 0.0 && vb == 0.0;
            let (t, df) = if degenerate {
                (None, None)
            } else if welch {
                let se2 = va / na + vb / nb;
                let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
                (Some((a.mean - b.mean) / se2.sqrt()), Some(df))
            } else {
                let df = na + nb - 2.0;
                let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
                (Some((a.mean - b.mean) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt()), Some(df))
            };
            let p_raw = match (t, df) {
                (Some(t), Some(df)) => t_two_sided(t, df),
                _ => None,
            };
            pairwise.push(PairwiseTest {
                first: a.label.clone(),
                second: b.label.clone(),
                t,
                df,
                p_raw,
                p_adjusted: p_raw.map(|p| (p * n_pairs as f64).min(1.0)),
                degenerate,
            });
        }
    }

    let pearson_r = match paired {
        Some((x, y)) => {
            if x.len() != y.len() {
                return Err(Error::InvalidInput(format!("paired vectors differ in length ({} vs {})", x.len(), y.len())));
            }
            Some(pearson(x, y)?)
        }
        None => None,
    };
    Ok(GroupComparison {
        groups: summaries,
        welch,
        f_statistic: (!f_statistic.is_nan()).then_some(f_statistic),
        df_between,
        df_within,
        p_value,
        pairwise,
        pearson_r,
    })
}

fn welch_anova(s: &[GroupSummary]) -> (f64, f64, f64) {
    let k = s.len() as f64;
    if s.iter().any(|g| g.sd == 0.0) {
        return (f64::NAN, k - 1.0, f64::NAN);
    }
    let w: Vec<f64> = s.iter().map(|g| g.n as f64 / (g.sd * g.sd)).collect();
    let wsum: f64 = w.iter().sum();
    let mw = s.iter().zip(&w).map(|(g, wi)| wi * g.mean).sum::<f64>() / wsum;
    let between = s.iter().zip(&w).map(|(g, wi)| wi * (g.mean - mw).powi(2)).sum::<f64>() / (k - 1.0);
    let lam: f64 = s.iter().zip(&w).map(|(g, wi)| (1.0 - wi / wsum).powi(2) / (g.n as f64 - 1.0)).sum();
    let f = between / (1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * lam);
    (f, k - 1.0, (k * k - 1.0) / (3.0 * lam))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Gaussian,
}

impl Kernel {
    fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }
}

pub const KDE_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub kernel: Kernel,
    pub half_width: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.x, &self.density)
    }
}

/// Kernel density estimate at a single point.
pub fn kde_at(values: &[f64], half_width: f64, kernel: Kernel, x: f64) -> f64 {
    let s: f64 = values.iter().map(|v| kernel.eval((x - v) / half_width)).sum();
    s / (values.len() as f64 * half_width)
}

/// Density on a 512-point grid over [min − 3h, max + 3h].
pub fn kde_curve(values: &[f64], half_width: f64, kernel: Kernel) -> Result<DensityCurve> {
    if values.len() < 2 {
        return Err(Error::InsufficientData("density estimate needs at least two values".into()));
    }
    if !(half_width > 0.0) {
        return Err(Error::Domain(format!("half-width must be positive, got {half_width}")));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * half_width;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * half_width;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let x: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + i as f64 * step).collect();
    let density = x.par_iter().map(|&xi| kde_at(values, half_width, kernel, xi)).collect();
    Ok(DensityCurve { kernel, half_width, x, density })
}
