//! Latent attention process.
//!
//! The yearly citation rate of a single eprint is modelled as a positive
//! process X(t) with dX = α(t)·X dt + β(t)·X dW, where the drift makes
//! E[X(t)] follow the discipline history curve u(t) and the volatility
//! schedule β(t)² = s₂/(t + s₁) decays with age. On the log scale the
//! increments are Gaussian with known variance, so paths can be sampled
//! exactly on any grid.

use std::io::Write;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::historyfit::HistoryParams;
use crate::special::normal_cdf;
use crate::stats::{golden_section_max, jarque_bera_p_value, mean, pairwise_sum, quantile_sorted, variance, ks_statistic, Moments};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityFit {
    /// Time offset (years).
    pub s1: f64,
    pub s2: f64,
    #[serde(default)]
    pub se_s1: Option<f64>,
    #[serde(default)]
    pub se_s2: Option<f64>,
    #[serde(default)]
    pub r2_adj: Option<f64>,
    #[serde(default)]
    pub n: usize,
}

impl VolatilityFit {
    pub fn new(s1: f64, s2: f64) -> Result<Self> {
        let v = VolatilityFit { s1, s2, se_s1: None, se_s2: None, r2_adj: None, n: 0 };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s1 > 0.0 && self.s2 >= 0.0 && self.s1.is_finite() && self.s2.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("volatility needs s1 > 0 and s2 >= 0, got ({}, {})", self.s1, self.s2)))
        }
    }

    /// β(t) = √(s₂ / (t + s₁)).
    pub fn beta_star(&self, t: f64) -> f64 {
        (self.s2 / (t + self.s1)).sqrt()
    }

    /// ∫ₐᵇ β(s)² ds.
    pub fn integrated_variance(&self, a: f64, b: f64) -> f64 {
        self.s2 * ((b - a) / (a + self.s1)).ln_1p()
    }

    /// ln w(t) = ½·s₂·ln(t/s₁ + 1).
    pub fn log_w(&self, t: f64) -> f64 {
        0.5 * self.integrated_variance(0.0, t)
    }

    /// Quantile-plot slope implied at age t: √(s₂ ln(t/s₁ + 1)).
    pub fn m_hat(&self, t: f64) -> f64 {
        self.integrated_variance(0.0, t).sqrt()
    }
}

fn profile(series: &[(f64, f64)], s1: f64) -> (f64, f64) {
    let l: Vec<f64> = series.iter().map(|&(t, _)| (t / s1).ln_1p()).collect();
    let num: Vec<f64> = series.iter().zip(&l).map(|(&(_, m), li)| m * li.sqrt()).collect();
    let c = pairwise_sum(&num) / pairwise_sum(&l);
    let res: Vec<f64> = series.iter().zip(&l).map(|(&(_, m), li)| (m - c * li.sqrt()).powi(2)).collect();
    (c * c, pairwise_sum(&res))
}

const LN_S1_RANGE: (f64, f64) = (-16.0, 10.0);

/// Least squares fit of m̂(t) = √(s₂ ln(t/s₁ + 1)).
///
/// For fixed s₁ the model is linear in √s₂, so the search is one
/// dimensional over ln s₁.
pub fn fit_volatility(series: &[(f64, f64)]) -> Result<VolatilityFit> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!("volatility fit needs at least 3 points, got {}", series.len())));
    }
    for (i, &(t, m)) in series.iter().enumerate() {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::data_at(i + 1, format!("slope must be positive, got {m}")));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::data_at(i + 1, format!("age must be positive, got {t}")));
        }
    }
    let ss_at = |x: f64| profile(series, x.exp()).1;
    let n_grid = 521;
    let step = (LN_S1_RANGE.1 - LN_S1_RANGE.0) / (n_grid - 1) as f64;
    let (best, _) = (0..n_grid)
        .map(|i| (i, ss_at(LN_S1_RANGE.0 + i as f64 * step)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if best == 0 || best == n_grid - 1 {
        return Err(Error::Convergence(format!(
            "no interior optimum for s1 in [{:.2e}, {:.2e}]",
            LN_S1_RANGE.0.exp(),
            LN_S1_RANGE.1.exp()
        )));
    }
    let lo = LN_S1_RANGE.0 + (best - 1) as f64 * step;
    let (x, _) = golden_section_max(|x| -ss_at(x), lo, lo + 2.0 * step, 1e-13);
    let s1 = x.exp();
    let (s2, ss) = profile(series, s1);
    if !(s2 > 0.0) {
        return Err(Error::Convergence("fitted s2 is not positive".into()));
    }

    let n = series.len();
    let nf = n as f64;
    let ms: Vec<f64> = series.iter().map(|p| p.1).collect();
    let ss_tot = variance(&ms) * (nf - 1.0);
    let r2_adj = (n > 2 && ss_tot > 0.0).then(|| 1.0 - (ss / (nf - 2.0)) / (ss_tot / (nf - 1.0)));
    let (se_s1, se_s2) = if n > 2 {
        let mut jtj = Matrix2::zeros();
        for &(t, _) in series {
            let l = (t / s1).ln_1p();
            let d_s1 = -(s2.sqrt()) * t / (2.0 * l.sqrt() * s1 * (t + s1));
            let d_s2 = l.sqrt() / (2.0 * s2.sqrt());
            let g = nalgebra::Vector2::new(d_s1, d_s2);
            jtj += g * g.transpose();
        }
        match jtj.try_inverse() {
            Some(cov) => {
                let s2_hat = ss / (nf - 2.0);
                let se = |v: f64| (v >= 0.0 && v.is_finite()).then(|| (s2_hat * v).sqrt());
                (se(cov[(0, 0)]), se(cov[(1, 1)]))
            }
            None => (None, None),
        }
    } else {
        (None, None)
    };
    Ok(VolatilityFit { s1, s2, se_s1, se_s2, r2_adj, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Gaussian log-scale increments with the exact per-step variance.
    #[default]
    Exact,
    /// Euler–Maruyama on X, truncated at the smallest positive double.
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CountingMode {
    /// ⌊∫₀ᵀ X dt⌋ by the trapezoid rule.
    #[default]
    IntegralFloor,
    /// Σ ⌊X(i)⌋ over whole years i = 0..T−1.
    YearlyFloorSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub counting_mode: CountingMode,
    pub scheme: Scheme,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig {
            dt: 0.01,
            horizon: 10.0,
            n_paths: 1000,
            seed: 0,
            counting_mode: CountingMode::IntegralFloor,
            scheme: Scheme::Exact,
        }
    }
}

impl SdeConfig {
    /// Number of steps; the horizon must be a whole number of steps.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::InvalidInput(format!("dt must be in (0, 1], got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be >= dt, got {}", self.horizon)));
        }
        if self.n_paths < 1 {
            return Err(Error::InvalidInput("need at least one path".into()));
        }
        let n = (self.horizon / self.dt).round();
        if (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::InvalidInput(format!(
                "horizon {} is not a whole number of steps of {}",
                self.horizon, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Simulated paths on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub dt: f64,
    pub n_points: usize,
    /// Row-major, one row of `n_points` values per path.
    values: Vec<f64>,
    pub params: Option<HistoryParams>,
    pub vol: Option<VolatilityFit>,
    pub config: Option<SdeConfig>,
}

impl PathEnsemble {
    /// Ensemble from explicit paths sampled every `dt` starting at t = 0.
    pub fn from_paths(dt: f64, paths: Vec<Vec<f64>>) -> Result<PathEnsemble> {
        let n_points = paths.first().map_or(0, Vec::len);
        if paths.is_empty() || n_points < 2 {
            return Err(Error::InvalidInput("ensemble needs at least one path of two points".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        if paths.iter().any(|p| p.len() != n_points) {
            return Err(Error::InvalidInput("paths differ in length".into()));
        }
        if paths.iter().flatten().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidInput("path values must be positive".into()));
        }
        Ok(PathEnsemble { dt, n_points, values: paths.concat(), params: None, vol: None, config: None })
    }

    pub fn n_paths(&self) -> usize {
        self.values.len() / self.n_points
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.time(i)).collect()
    }

    pub fn path(&self, p: usize) -> &[f64] {
        &self.values[p * self.n_points..(p + 1) * self.n_points]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_points)
    }

    /// Grid index of time t, if t lies on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let i = (t / self.dt).round();
        if i < 0.0 || i as usize >= self.n_points || (i * self.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidInput(format!("time {t} is not on the simulation grid")));
        }
        Ok(i as usize)
    }

    /// Cross-section X(t) over all paths.
    pub fn values_at(&self, t: f64) -> Result<Vec<f64>> {
        let i = self.index_of(t)?;
        Ok(self.paths().map(|p| p[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, writer: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["path_id", "t", "x"])?;
        for (p, path) in self.paths().enumerate() {
            for i in (0..self.n_points).step_by(stride) {
                w.write_record([p.to_string(), self.time(i).to_string(), path[i].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self, stride: usize) -> Vec<SummaryRow> {
        let idx: Vec<usize> = (0..self.n_points).step_by(stride.max(1)).collect();
        idx.par_iter()
            .map(|&i| {
                let mut col: Vec<f64> = self.paths().map(|p| p[i]).collect();
                let m = mean(&col);
                let v = if col.len() > 1 { variance(&col) } else { 0.0 };
                col.sort_by(f64::total_cmp);
                SummaryRow {
                    t: self.time(i),
                    mean: m,
                    var: v,
                    q05: quantile_sorted(&col, 0.05),
                    q50: quantile_sorted(&col, 0.5),
                    q95: quantile_sorted(&col, 0.95),
                }
            })
            .collect()
    }

    pub fn write_summary_csv<W: Write>(&self, writer: W, stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "mean", "var", "q05", "q50", "q95"])?;
        for r in self.summary(stride) {
            w.write_record([r.t, r.mean, r.var, r.q05, r.q50, r.q95].map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub t: f64,
    pub mean: f64,
    pub var: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

/// Independent stream for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sample `config.n_paths` paths of X on [0, horizon], starting at u(0).
/// Each path draws from its own stream, so output does not depend on the
/// thread count.
pub fn simulate_ensemble(params: &HistoryParams, vol: &VolatilityFit, config: &SdeConfig) -> Result<PathEnsemble> {
    params.validate()?;
    vol.validate()?;
    let n_steps = config.n_steps()?;
    let n_points = n_steps + 1;
    let t: Vec<f64> = (0..n_points).map(|i| i as f64 * config.dt).collect();
    let u: Vec<f64> = t.iter().map(|&ti| params.eval(ti)).collect();
    if let Some(i) = u.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("mean curve is not positive at t = {}", t[i])));
    }
    let log_u: Vec<f64> = u.iter().map(|v| v.ln()).collect();
    let var: Vec<f64> = t.windows(2).map(|w| vol.integrated_variance(w[0], w[1])).collect();
    let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let beta_sqrt_dt: Vec<f64> = t[..n_steps].iter().map(|&ti| vol.beta_star(ti) * config.dt.sqrt()).collect();

    let mut values = vec![0.0; config.n_paths * n_points];
    values.par_chunks_mut(n_points).enumerate().for_each(|(p, row)| {
        let mut rng = path_rng(config.seed, p as u64);
        match config.scheme {
            Scheme::Exact => {
                let mut y = log_u[0];
                row[0] = u[0];
                for i in 0..n_steps {
                    let z: f64 = rng.sample(StandardNormal);
                    y += log_u[i + 1] - log_u[i] - 0.5 * var[i] + sd[i] * z;
                    row[i + 1] = y.exp().max(f64::MIN_POSITIVE);
                }
            }
            Scheme::EulerMaruyama => {
                let mut x = u[0];
                row[0] = x;
                for i in 0..n_steps {
                    let z: f64 = rng.sample(StandardNormal);
                    x += x * ((u[i + 1] - u[i]) / u[i] + beta_sqrt_dt[i] * z);
                    x = x.max(f64::MIN_POSITIVE);
                    row[i + 1] = x;
                }
            }
        }
    });
    Ok(PathEnsemble {
        dt: config.dt,
        n_points,
        values,
        params: Some(*params),
        vol: Some(*vol),
        config: Some(*config),
    })
}

fn check_density_args(t: f64, vol: &VolatilityFit) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("density needs t > 0 (X(0) is a point mass), got {t}")));
    }
    let lw = vol.log_w(t);
    if !(lw > 0.0) {
        return Err(Error::Domain("density needs positive volatility".into()));
    }
    Ok(lw)
}

/// Marginal density of X(t): lognormal with median u(t)/w(t) and log-scale
/// variance 2·ln w(t).
pub fn closed_form_density(x: f64, t: f64, params: &HistoryParams, vol: &VolatilityFit) -> Result<f64> {
    let lw = check_density_args(t, vol)?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("density needs x > 0, got {x}")));
    }
    let z = (x / params.eval(t)).ln() + lw;
    Ok((-(z * z) / (4.0 * lw)).exp() / (x * (4.0 * std::f64::consts::PI * lw).sqrt()))
}

pub fn closed_form_cdf(x: f64, t: f64, params: &HistoryParams, vol: &VolatilityFit) -> Result<f64> {
    let lw = check_density_args(t, vol)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(normal_cdf(((x / params.eval(t)).ln() + lw) / (2.0 * lw).sqrt()))
}

/// Cumulative citation count per path at `horizon` (defaults to the end of
/// the grid).
pub fn count_citations(ensemble: &PathEnsemble, mode: CountingMode, horizon: Option<f64>) -> Result<Vec<u64>> {
    let end = match horizon {
        Some(t) => ensemble.index_of(t)?,
        None => ensemble.n_points - 1,
    };
    let t_end = ensemble.time(end);
    let counts = match mode {
        CountingMode::IntegralFloor => ensemble
            .paths()
            .map(|p| {
                let parts: Vec<f64> = p[..=end].windows(2).map(|w| 0.5 * ensemble.dt * (w[0] + w[1])).collect();
                snap_floor(pairwise_sum(&parts))
            })
            .collect(),
        CountingMode::YearlyFloorSum => {
            let years = (t_end + 1e-9).floor() as usize;
            let idx = (0..years).map(|y| ensemble.index_of(y as f64)).collect::<Result<Vec<_>>>()?;
            ensemble.paths().map(|p| idx.iter().map(|&i| p[i].floor() as u64).sum()).collect()
        }
    };
    Ok(counts)
}

// Floor that forgives rounding error just below an integer.
fn snap_floor(v: f64) -> u64 {
    (v + 1e-9 * v.max(1.0)).floor().max(0.0) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCheck {
    pub t: f64,
    /// u(t), the target mean.
    pub u: f64,
    pub mean: f64,
    pub se: f64,
    /// (mean − u) / se.
    pub z: f64,
    pub log_mean: f64,
    pub log_mean_expected: f64,
    pub log_mean_se: f64,
    pub log_var: f64,
    pub log_var_expected: f64,
    pub log_var_rel_err: f64,
    /// Kolmogorov–Smirnov distance to the closed-form marginal.
    pub ks: f64,
}

pub fn verify_ensemble(ensemble: &PathEnsemble, times: &[f64]) -> Result<Vec<TimeCheck>> {
    let (Some(params), Some(vol)) = (ensemble.params, ensemble.vol) else {
        return Err(Error::InvalidInput("ensemble carries no model parameters".into()));
    };
    if ensemble.n_paths() < 2 {
        return Err(Error::InsufficientData("verification needs at least two paths".into()));
    }
    times
        .iter()
        .map(|&t| {
            let x = ensemble.values_at(t)?;
            let n = x.len() as f64;
            let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
            let u = params.eval(t);
            let m = mean(&x);
            let se = (variance(&x) / n).sqrt();
            let lw = vol.log_w(t);
            let log_var = variance(&logs);
            let ks = if lw > 0.0 {
                ks_statistic(&x, |v| closed_form_cdf(v, t, &params, &vol).unwrap_or(f64::NAN))
            } else {
                f64::NAN
            };
            Ok(TimeCheck {
                t,
                u,
                mean: m,
                se,
                z: (m - u) / se,
                log_mean: mean(&logs),
                log_mean_expected: u.ln() - lw,
                log_mean_se: (log_var / n).sqrt(),
                log_var,
                log_var_expected: 2.0 * lw,
                log_var_rel_err: log_var / (2.0 * lw) - 1.0,
                ks,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSimConfig {
    pub t0: f64,
    pub n_events: usize,
    pub epsilon_bound: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl TimingSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) {
            return Err(Error::InvalidInput(format!("t0 must be positive, got {}", self.t0)));
        }
        if self.n_events < 1 {
            return Err(Error::InvalidInput("need at least one event".into()));
        }
        if !(0.0..1.0).contains(&self.epsilon_bound) {
            return Err(Error::InvalidInput(format!("perturbation bound must be in [0, 1), got {}", self.epsilon_bound)));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidInput("need at least two samples".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n_samples: usize,
    pub mean_log: f64,
    /// ln t₀ + n·E[ln(1 + ε)].
    pub expected_mean_log: f64,
    pub variance_log: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub jarque_bera: f64,
    pub jarque_bera_p: f64,
}

/// E[ln(1 + ε)] for ε uniform on [−b, b].
pub fn expected_log_factor(b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let xlx = |x: f64| x * x.ln() - x;
    (xlx(1.0 + b) - xlx(1.0 - b)) / (2.0 * b)
}

/// Draw ln t_n = ln t₀ + Σ ln(1 + ε_j) and report how close it is to normal.
pub fn simulate_timing_clt(config: &TimingSimConfig) -> Result<TimingReport> {
    config.validate()?;
    let b = config.epsilon_bound;
    let ln_t0 = config.t0.ln();
    let logs: Vec<f64> = (0..config.n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = path_rng(config.seed, s as u64);
            let mut acc = ln_t0;
            if b > 0.0 {
                for _ in 0..config.n_events {
                    acc += rng.random_range(-b..=b).ln_1p();
                }
            }
            acc
        })
        .collect();
    let m = Moments::of(&logs);
    let jb = m.jarque_bera();
    Ok(TimingReport {
        n_samples: config.n_samples,
        mean_log: m.mean,
        expected_mean_log: ln_t0 + config.n_events as f64 * expected_log_factor(b),
        variance_log: m.variance,
        skewness: m.skewness,
        excess_kurtosis: m.excess_kurtosis,
        jarque_bera: jb,
        jarque_bera_p: jarque_bera_p_value(jb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn astro() -> (HistoryParams, VolatilityFit) {
        (HistoryParams::new(2.19, 1.61, 0.817, 0.158, 1.21).unwrap(), VolatilityFit::new(0.0281, 0.200).unwrap())
    }

    #[test]
    fn volatility_reference_values() {
        let (_, v) = astro();
        // mpmath references
        assert!((v.m_hat(10.0) - 1.0841934195490161).abs() < 1e-13);
        assert!((2.0 * v.log_w(10.0) - 1.1754753709933888).abs() < 1e-13);
    }

    #[test]
    fn integrated_variance_is_additive() {
        let (_, v) = astro();
        let whole = v.integrated_variance(0.3, 4.0);
        let parts = v.integrated_variance(0.3, 1.7) + v.integrated_variance(1.7, 4.0);
        assert!((whole - parts).abs() < 1e-14);
    }

    #[test]
    fn volatility_round_trip() {
        let truth = VolatilityFit::new(0.0281, 0.200).unwrap();
        let series: Vec<(f64, f64)> = (1..=24).map(|t| (t as f64, truth.m_hat(t as f64))).collect();
        let fit = fit_volatility(&series).unwrap();
        assert!((fit.s1 / 0.0281 - 1.0).abs() < 1e-4, "{}", fit.s1);
        assert!((fit.s2 / 0.200 - 1.0).abs() < 1e-4, "{}", fit.s2);
    }

    #[test]
    fn volatility_input_checks() {
        assert!(matches!(fit_volatility(&[(1.0, 1.0), (2.0, 1.1)]), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_volatility(&[(1.0, 1.0), (2.0, -1.1), (3.0, 1.2)]), Err(Error::Data { .. })));
        // a decreasing series has no interior optimum
        assert!(matches!(fit_volatility(&[(1.0, 1.0), (2.0, 0.8), (3.0, 0.5)]), Err(Error::Convergence(_))));
    }

    #[test]
    fn zero_volatility_reproduces_mean_curve() {
        let (p, _) = astro();
        let vol = VolatilityFit::new(0.0281, 0.0).unwrap();
        let cfg = SdeConfig { dt: 0.1, horizon: 5.0, n_paths: 4, ..Default::default() };
        let e = simulate_ensemble(&p, &vol, &cfg).unwrap();
        for path in e.paths() {
            for (i, x) in path.iter().enumerate() {
                let u = p.eval(e.time(i));
                assert!((x / u - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_replay() {
        let (p, v) = astro();
        let cfg = SdeConfig { dt: 0.05, horizon: 2.0, n_paths: 50, seed: 7, ..Default::default() };
        let a = simulate_ensemble(&p, &v, &cfg).unwrap();
        let b = simulate_ensemble(&p, &v, &cfg).unwrap();
        assert_eq!(a, b);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = one.install(|| simulate_ensemble(&p, &v, &cfg).unwrap());
        assert_eq!(a, c);
        let other = simulate_ensemble(&p, &v, &SdeConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn euler_maruyama_stays_positive() {
        let (p, v) = astro();
        let cfg = SdeConfig { dt: 0.1, horizon: 5.0, n_paths: 200, scheme: Scheme::EulerMaruyama, ..Default::default() };
        let e = simulate_ensemble(&p, &v, &cfg).unwrap();
        assert!(e.paths().flatten().all(|x| *x > 0.0));
    }

    #[test]
    fn config_checks() {
        assert!(SdeConfig { dt: 0.0, ..Default::default() }.n_steps().is_err());
        assert!(SdeConfig { dt: 2.0, ..Default::default() }.n_steps().is_err());
        assert!(SdeConfig { horizon: 0.001, ..Default::default() }.n_steps().is_err());
        assert!(SdeConfig { n_paths: 0, ..Default::default() }.n_steps().is_err());
        assert!(SdeConfig { dt: 0.3, horizon: 1.0, ..Default::default() }.n_steps().is_err());
        assert_eq!(SdeConfig { dt: 0.01, horizon: 10.0, ..Default::default() }.n_steps().unwrap(), 1000);
    }

    #[test]
    fn density_shape() {
        let (p, v) = astro();
        let t = 5.0;
        let lw = v.log_w(t);
        let median = p.eval(t) / lw.exp();
        let mode = median * (-2.0 * lw).exp();
        let f = |x: f64| closed_form_density(x, t, &p, &v).unwrap();
        assert!(f(mode) > f(mode * 1.01) && f(mode) > f(mode * 0.99));
        assert!((closed_form_cdf(median, t, &p, &v).unwrap() - 0.5).abs() < 1e-15);
        assert!(closed_form_density(1.0, 0.0, &p, &v).is_err());
        assert!(closed_form_density(0.0, 1.0, &p, &v).is_err());
    }

    #[test]
    fn counting_constant_paths() {
        let e = PathEnsemble::from_paths(0.01, vec![vec![2.5; 401], vec![0.4; 401]]).unwrap();
        assert_eq!(count_citations(&e, CountingMode::IntegralFloor, None).unwrap(), vec![10, 1]);
        assert_eq!(count_citations(&e, CountingMode::YearlyFloorSum, None).unwrap(), vec![8, 0]);
        assert_eq!(count_citations(&e, CountingMode::IntegralFloor, Some(2.0)).unwrap(), vec![5, 0]);
    }

    #[test]
    fn ensemble_csv_and_summary() {
        let e = PathEnsemble::from_paths(0.5, vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]).unwrap();
        let mut out = Vec::new();
        e.write_csv(&mut out, 1).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("path_id,t,x"));
        assert_eq!(text.lines().nth(2), Some("0,0.5,2"));
        let s = e.summary(1);
        assert_eq!(s[1].mean, 2.0);
        assert_eq!(s[1].var, 0.0);
        assert_eq!(s[0].q50, 2.0);
    }

    #[test]
    fn timing_without_perturbation() {
        let cfg = TimingSimConfig { t0: 2.0, n_events: 10, epsilon_bound: 0.0, n_samples: 100, seed: 1 };
        let r = simulate_timing_clt(&cfg).unwrap();
        assert!((r.mean_log - 2f64.ln()).abs() < 1e-14);
        assert!(r.variance_log < 1e-28);
    }

    #[test]
    fn expected_log_factor_matches_quadrature() {
        let b = 0.3;
        let n = 200_000;
        let h = 2.0 * b / n as f64;
        let mid: f64 = (0..n).map(|i| (-b + (i as f64 + 0.5) * h).ln_1p()).sum::<f64>() * h / (2.0 * b);
        assert!((expected_log_factor(b) - mid).abs() < 1e-10);
    }
}
