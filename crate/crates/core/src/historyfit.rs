//! The citation history curve
//!
//! ```text
//! u(t) = A·f(t + 1; μ, σ) + B·tanh(λt)
//! ```
//!
//! where `f` is the lognormal density. The first term is the jump–decay
//! response after publication, the second the slowly saturating baseline
//! attention.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AgePanel, Discipline};
use crate::error::{Error, Result};
use crate::special::normal_cdf;
use crate::stats::golden_section_max;

/// Fitted λ above this value is reported as capped.
pub const LAMBDA_DISPLAY_CAP: f64 = 10.0;
/// Upper bound on λ inside the optimizer.
pub const LAMBDA_BOUND: f64 = 50.0;
/// Horizon of the numerical peak search, in years.
pub const PEAK_SEARCH_HORIZON: f64 = 50.0;

const N_PARAMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryParams {
    #[serde(rename = "A")]
    pub a: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub lambda: f64,
    /// When set, the sigmoid is evaluated in its λ → ∞ limit.
    pub lambda_capped: bool,
}

impl HistoryParams {
    pub fn new(a: f64, mu: f64, sigma: f64, b: f64, lambda: f64) -> Result<Self> {
        let p = HistoryParams { a, mu, sigma, b, lambda, lambda_capped: lambda > LAMBDA_DISPLAY_CAP };
        p.validate()?;
        Ok(p)
    }

    /// Parameters whose λ is only known to be large.
    pub fn capped(a: f64, mu: f64, sigma: f64, b: f64) -> Result<Self> {
        let p = HistoryParams { a, mu, sigma, b, lambda: LAMBDA_BOUND, lambda_capped: true };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0
            && self.b > 0.0
            && self.sigma > 0.0
            && self.lambda > 0.0
            && [self.a, self.mu, self.sigma, self.b, self.lambda].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "history parameters need finite A, B, σ, λ > 0 (got A={}, μ={}, σ={}, B={}, λ={})",
                self.a, self.mu, self.sigma, self.b, self.lambda
            )))
        }
    }

    /// Jump–decay component A·f(t + 1).
    pub fn lognormal_part(&self, t: f64) -> f64 {
        self.a * lognormal_pdf(t + 1.0, self.mu, self.sigma)
    }

    /// Constant-attention component B·tanh(λt).
    pub fn sigmoid_part(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if self.lambda_capped {
            self.b
        } else {
            self.b * (self.lambda * t).tanh()
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.lognormal_part(t) + self.sigmoid_part(t)
    }

    /// Noiseless panel at ages `0..=max_age`.
    pub fn sample_panel(&self, discipline: Discipline, dataset_year: i32, max_age: u32) -> AgePanel {
        let means: Vec<(u32, f64)> = (0..=max_age).map(|i| (i, self.eval(i as f64))).collect();
        AgePanel::from_means(discipline, dataset_year, &means)
    }
}

pub fn lognormal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = (x.ln() - mu) / sigma;
    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// u(t) for t ≥ 0.
pub fn eval_history(params: &HistoryParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("age must be >= 0, got {t}")));
    }
    Ok(params.eval(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Each age weighted by the number of eprints behind its mean.
    Population,
    /// Each age weighted by 1/u², i.e. least squares on relative residuals.
    /// Suited to multiplicative noise.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub max_iterations: usize,
    /// Converged when the projected gradient of the sum of squares is below
    /// this fraction of the total sum of squares.
    pub gradient_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { weighting: Weighting::Unweighted, max_iterations: 500, gradient_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ParamErrors {
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryFit {
    pub params: HistoryParams,
    pub std_errors: ParamErrors,
    pub r2_adj: f64,
    pub ss_res: f64,
    /// Observed minus fitted, one per panel entry.
    pub residuals: Vec<f64>,
    pub ages: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub discipline: Discipline,
    pub dataset_year: i32,
    pub percentile_cap: Option<f64>,
}

// Internal coordinates: (ln A, μ, ln σ, ln B, ln λ).
type Theta = [f64; N_PARAMS];

fn to_params(th: &Theta) -> HistoryParams {
    HistoryParams {
        a: th[0].exp(),
        mu: th[1],
        sigma: th[2].exp(),
        b: th[3].exp(),
        lambda: th[4].exp(),
        lambda_capped: false,
    }
}

fn sech2(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

struct Problem<'a> {
    t: &'a [f64],
    u: &'a [f64],
    sqrt_w: Vec<f64>,
    lower: Theta,
    upper: Theta,
}

impl Problem<'_> {
    fn residuals(&self, th: &Theta) -> Vec<f64> {
        let p = to_params(th);
        self.t
            .iter()
            .zip(self.u)
            .zip(&self.sqrt_w)
            .map(|((&t, &u), &w)| w * (p.a * lognormal_pdf(t + 1.0, p.mu, p.sigma) + p.b * (p.lambda * t).tanh() - u))
            .collect()
    }

    fn jacobian(&self, th: &Theta) -> DMatrix<f64> {
        let p = to_params(th);
        let s2 = p.sigma * p.sigma;
        DMatrix::from_fn(self.t.len(), N_PARAMS, |i, j| {
            let t = self.t[i];
            let af = p.a * lognormal_pdf(t + 1.0, p.mu, p.sigma);
            let d = (t + 1.0).ln() - p.mu;
            self.sqrt_w[i]
                * match j {
                    0 => af,
                    1 => af * d / s2,
                    2 => af * (d * d / s2 - 1.0),
                    3 => p.b * (p.lambda * t).tanh(),
                    _ => p.b * p.lambda * t * sech2(p.lambda * t),
                }
        })
    }

    fn clamp(&self, th: &mut Theta) {
        for k in 0..N_PARAMS {
            th[k] = th[k].clamp(self.lower[k], self.upper[k]);
        }
    }

    /// Infinity norm of the gradient of ½·SS, ignoring components pinned at
    /// a bound and pointing outward.
    fn projected_gradient(&self, th: &Theta, j: &DMatrix<f64>, r: &[f64]) -> f64 {
        let g = j.transpose() * DVector::from_column_slice(r);
        (0..N_PARAMS)
            .map(|k| {
                let at_lower = th[k] <= self.lower[k] && g[k] > 0.0;
                let at_upper = th[k] >= self.upper[k] && g[k] < 0.0;
                if at_lower || at_upper {
                    0.0
                } else {
                    g[k].abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

struct LocalResult {
    theta: Theta,
    ss: f64,
    converged: bool,
    iterations: usize,
}

fn levenberg_marquardt(prob: &Problem, start: Theta, opts: &FitOptions, ss_scale: f64) -> LocalResult {
    let mut th = start;
    prob.clamp(&mut th);
    let mut r = prob.residuals(&th);
    let mut ss = sum_sq(&r);
    let mut damping = 1e-3;
    let gtol = opts.gradient_tolerance * ss_scale;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let j = prob.jacobian(&th);
        if prob.projected_gradient(&th, &j, &r) <= gtol {
            return LocalResult { theta: th, ss, converged: true, iterations };
        }
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        while damping < 1e16 {
            let mut lhs = jtj.clone();
            for k in 0..N_PARAMS {
                lhs[(k, k)] += damping * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&g))) else {
                damping *= 10.0;
                continue;
            };
            let mut trial = th;
            for k in 0..N_PARAMS {
                trial[k] += step[k];
            }
            prob.clamp(&mut trial);
            let r_new = prob.residuals(&trial);
            let ss_new = sum_sq(&r_new);
            if ss_new.is_finite() && ss_new < ss {
                let stalled = ss - ss_new <= 1e-15 * ss.max(f64::MIN_POSITIVE)
                    && trial.iter().zip(&th).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
                th = trial;
                r = r_new;
                ss = ss_new;
                damping = (damping / 3.0).max(1e-12);
                improved = !stalled;
                break;
            }
            damping *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let j = prob.jacobian(&th);
    let converged = prob.projected_gradient(&th, &j, &r) <= gtol;
    LocalResult { theta: th, ss, converged, iterations }
}

pub const START_MU: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
pub const START_SIGMA: [f64; 3] = [0.5, 0.8, 1.2];
pub const START_LAMBDA: [f64; 3] = [0.5, 2.0, 20.0];

/// Least-squares fit of the history curve, multi-started over a fixed grid.
pub fn fit_history(panel: &AgePanel, options: &FitOptions) -> Result<HistoryFit> {
    let n = panel.len();
    if n < N_PARAMS + 1 {
        return Err(Error::InsufficientData(format!(
            "history fit needs at least {} ages, panel has {n}",
            N_PARAMS + 1
        )));
    }
    let t = panel.ages();
    let u = panel.means();
    if u.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::data("panel means must be finite and non-negative"));
    }
    let peak = u.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::Degenerate("all panel means are zero".into()));
    }
    let weights: Vec<f64> = match options.weighting {
        Weighting::Unweighted => vec![1.0; n],
        Weighting::Population => {
            let c = panel.counts();
            let mean_c = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| v / mean_c).collect()
        }
        Weighting::Relative => u.iter().map(|v| (peak / v.max(1e-3 * peak)).powi(2)).collect(),
    };
    let wsum: f64 = weights.iter().sum();
    let u_bar = u.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() / wsum;
    let ss_tot: f64 = u.iter().zip(&weights).map(|(a, w)| w * (a - u_bar).powi(2)).sum();

    let ln_peak = peak.ln();
    let prob = Problem {
        t: &t,
        u: &u,
        sqrt_w: weights.iter().map(|w| w.sqrt()).collect(),
        lower: [ln_peak - 25.0, -3.0, 0.05f64.ln(), ln_peak - 25.0, 1e-3f64.ln()],
        upper: [ln_peak + 12.0, 6.0, 5f64.ln(), ln_peak + 7.0, LAMBDA_BOUND.ln()],
    };

    // tail mean over the oldest third of the ages seeds B
    let tail = &u[n - (n / 3).max(1)..];
    let b0 = (tail.iter().sum::<f64>() / tail.len() as f64).max(1e-3 * peak);
    let mut best: Option<LocalResult> = None;
    let ss_scale = ss_tot.max(1e-300 * peak * peak).max(f64::MIN_POSITIVE);
    for &mu in &START_MU {
        for &sigma in &START_SIGMA {
            let f_max = t.iter().map(|&x| lognormal_pdf(x + 1.0, mu, sigma)).fold(0.0, f64::max);
            let a0 = ((peak - b0).max(0.1 * peak) / f_max).max(1e-6);
            for &lambda in &START_LAMBDA {
                let start = [a0.ln(), mu, sigma.ln(), b0.ln(), lambda.ln()];
                let res = levenberg_marquardt(&prob, start, options, ss_scale);
                let better = match &best {
                    None => true,
                    Some(b) => (res.converged && !b.converged) || (res.converged == b.converged && res.ss < b.ss),
                };
                if better {
                    best = Some(res);
                }
            }
        }
    }
    let best = best.expect("start grid is non-empty");
    if !best.converged {
        log::warn!(
            "{} {}: no start met the gradient tolerance; reporting the lowest residual",
            panel.discipline,
            panel.dataset_year
        );
    }
    let mut params = to_params(&best.theta);
    params.lambda_capped = params.lambda > LAMBDA_DISPLAY_CAP;
    let residuals: Vec<f64> = t.iter().zip(&u).map(|(&ti, &ui)| ui - params.eval(ti)).collect();
    // unweighted goodness of fit regardless of the weighting used
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let mean_u = u.iter().sum::<f64>() / n as f64;
    let ss_tot_u: f64 = u.iter().map(|v| (v - mean_u).powi(2)).sum();
    let nf = n as f64;
    let r2_adj = if ss_tot_u > 0.0 {
        1.0 - (ss_res / (nf - N_PARAMS as f64)) / (ss_tot_u / (nf - 1.0))
    } else {
        1.0
    };
    let std_errors = standard_errors(&prob, &best.theta, best.ss, params.lambda_capped);
    Ok(HistoryFit {
        params,
        std_errors,
        r2_adj,
        ss_res,
        residuals,
        ages: t.clone(),
        converged: best.converged,
        iterations: best.iterations,
        discipline: panel.discipline,
        dataset_year: panel.dataset_year,
        percentile_cap: panel.percentile_cap,
    })
}

/// s²·(JᵀJ)⁻¹ mapped back to natural parameters. λ is left out when capped
/// because the data carry no information about it.
fn standard_errors(prob: &Problem, th: &Theta, ss: f64, capped: bool) -> ParamErrors {
    let n = prob.t.len();
    let k = if capped { N_PARAMS - 1 } else { N_PARAMS };
    if n <= N_PARAMS {
        return ParamErrors::default();
    }
    let s2 = ss / (n - N_PARAMS) as f64;
    let j = prob.jacobian(th).columns(0, k).into_owned();
    let Some(cov) = (j.transpose() * &j).try_inverse() else {
        return ParamErrors::default();
    };
    let p = to_params(th);
    let se = |idx: usize, scale: f64| {
        let v = s2 * cov[(idx, idx)];
        (v >= 0.0 && v.is_finite()).then(|| v.sqrt() * scale)
    };
    ParamErrors {
        a: se(0, p.a),
        mu: se(1, 1.0),
        sigma: se(2, p.sigma),
        b: se(3, p.b),
        lambda: if capped { None } else { se(4, p.lambda) },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedMetrics {
    /// Yearly citations at the lognormal mode, û_p.
    pub u_peak: f64,
    /// Age of the lognormal mode, max(δ₁ − 1, 0).
    pub t_peak: f64,
    /// Maximum of the full curve over [0, 50] years.
    pub u_max: f64,
    pub t_max: f64,
    /// Growth interval e^{μ−σ²}.
    pub delta1: f64,
    /// Obsolescence interval e^{μ}(1 − e^{−σ²}).
    pub delta2: f64,
    /// Internal obsolescence rate δ₁/δ₂.
    pub s_rate: f64,
    /// Retention rate B/û_p.
    pub r_rate: f64,
    /// Inflation rate û_p/B.
    pub i_rate: f64,
    pub ln_mean: f64,
    pub ln_median: f64,
    pub ln_mode: f64,
    pub ln_variance: f64,
}

pub fn derive_metrics(fit: &HistoryFit) -> Result<DerivedMetrics> {
    if !fit.converged {
        return Err(Error::InvalidInput(format!(
            "fit for {} {} did not converge",
            fit.discipline, fit.dataset_year
        )));
    }
    Ok(derive_metrics_from_params(&fit.params))
}

/// Metrics straight from a parameter set, e.g. published estimates.
pub fn derive_metrics_from_params(p: &HistoryParams) -> DerivedMetrics {
    let s2 = p.sigma * p.sigma;
    let delta1 = (p.mu - s2).exp();
    let delta2 = p.mu.exp() * -(-s2).exp_m1();
    let t_peak = (delta1 - 1.0).max(0.0);
    let u_peak = p.eval(t_peak);
    let (t_max, u_max) = curve_maximum(p);
    let r_rate = p.b / u_peak;
    DerivedMetrics {
        u_peak,
        t_peak,
        u_max,
        t_max,
        delta1,
        delta2,
        s_rate: delta1 / delta2,
        r_rate,
        i_rate: 1.0 / r_rate,
        ln_mean: (p.mu + 0.5 * s2).exp(),
        ln_median: p.mu.exp(),
        ln_mode: delta1,
        ln_variance: s2.exp_m1() * (2.0 * p.mu + s2).exp(),
    }
}

/// Dense scan of [0, 50] followed by golden-section refinement around the
/// best grid point.
pub fn curve_maximum(p: &HistoryParams) -> (f64, f64) {
    let step = 0.01;
    let n = (PEAK_SEARCH_HORIZON / step).round() as usize;
    let (mut best_i, mut best_u) = (0, p.eval(0.0));
    for i in 1..=n {
        let v = p.eval(i as f64 * step);
        if v > best_u {
            best_i = i;
            best_u = v;
        }
    }
    let lo = (best_i as f64 - 1.0).max(0.0) * step;
    let hi = ((best_i + 1) as f64 * step).min(PEAK_SEARCH_HORIZON);
    let (t, u) = golden_section_max(|x| p.eval(x), lo, hi, 1e-10);
    if u >= best_u {
        (t, u)
    } else {
        (best_i as f64 * step, best_u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeSplit {
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Lognormal contribution A·Φ((ln T − μ)/σ).
    #[serde(rename = "F")]
    pub f: f64,
    /// Sigmoid contribution accumulated up to T − 1.
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub rho: f64,
}

/// ln cosh x without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

pub fn cumulative_split(p: &HistoryParams, horizon: f64) -> Result<CumulativeSplit> {
    if !(horizon >= 1.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be >= 1, got {horizon}")));
    }
    let f = p.a * normal_cdf((horizon.ln() - p.mu) / p.sigma);
    let s = horizon - 1.0;
    let g = if p.lambda_capped { p.b * s } else { p.b / p.lambda * ln_cosh(p.lambda * s) };
    let h = f + g;
    Ok(CumulativeSplit { horizon, f, g, h, rho: f / h })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub dataset_year: i32,
    pub s_rate: f64,
    pub r_rate: f64,
    pub i_rate: f64,
    pub converged: bool,
    pub fit: HistoryFit,
}

/// Fit every panel independently; years whose fit did not converge are kept
/// and flagged.
pub fn trend_metrics(panels: &[AgePanel], options: &FitOptions) -> Result<Vec<TrendPoint>> {
    if panels.is_empty() {
        return Err(Error::InvalidInput("trend analysis needs at least one panel".into()));
    }
    panels
        .par_iter()
        .map(|panel| {
            let fit = fit_history(panel, options)?;
            let m = derive_metrics_from_params(&fit.params);
            Ok(TrendPoint {
                dataset_year: panel.dataset_year,
                s_rate: m.s_rate,
                r_rate: m.r_rate,
                i_rate: m.i_rate,
                converged: fit.converged,
                fit,
            })
        })
        .collect()
}

/// Sampled curve `t,u_hat,f_component,g_component` on [0, t_end].
pub fn write_curve_csv<W: Write>(p: &HistoryParams, t_end: f64, step: f64, writer: W) -> Result<()> {
    if !(step > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidInput("curve sampling needs step > 0 and t_end >= 0".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "u_hat", "f_component", "g_component"])?;
    let n = (t_end / step + 1e-9).floor() as usize;
    for i in 0..=n {
        let t = i as f64 * step;
        let (f, g) = (p.lognormal_part(t), p.sigmoid_part(t));
        w.write_record([t.to_string(), (f + g).to_string(), f.to_string(), g.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn astro() -> HistoryParams {
        HistoryParams::new(2.19, 1.61, 0.817, 0.158, 1.21).unwrap()
    }

    #[test]
    fn value_at_zero_is_lognormal_only() {
        let p = astro();
        let expected = p.a / ((2.0 * std::f64::consts::PI).sqrt() * p.sigma) * (-p.mu * p.mu / (2.0 * p.sigma * p.sigma)).exp();
        assert!((p.eval(0.0) - expected).abs() < 1e-15);
        // reference value computed with mpmath
        assert!((p.eval(0.0) - 0.15341620710561323).abs() < 1e-14);
    }

    #[test]
    fn negative_age_rejected() {
        assert!(eval_history(&astro(), -0.5).is_err());
    }

    #[test]
    fn pure_lognormal_decays() {
        let mut p = astro();
        p.b = 1e-300;
        assert!(p.eval(1e4) < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let t: Vec<f64> = (0..12).map(f64::from).collect();
        let u = vec![1.0; 12];
        let prob = Problem { t: &t, u: &u, sqrt_w: vec![1.0; 12], lower: [-1e9; 5], upper: [1e9; 5] };
        let th = [0.8, 1.4, -0.2, -1.5, 0.3];
        let j = prob.jacobian(&th);
        for k in 0..N_PARAMS {
            let h = 1e-6;
            let (mut up, mut dn) = (th, th);
            up[k] += h;
            dn[k] -= h;
            let (ru, rd) = (prob.residuals(&up), prob.residuals(&dn));
            for i in 0..t.len() {
                let fd = (ru[i] - rd[i]) / (2.0 * h);
                assert!((fd - j[(i, k)]).abs() < 1e-7, "param {k}, age {i}: {fd} vs {}", j[(i, k)]);
            }
        }
    }

    #[test]
    fn roundtrip_finite_lambda() {
        let p = astro();
        let fit = fit_history(&p.sample_panel(Discipline::AstroPh, 2019, 20), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        let q = fit.params;
        for (got, want) in [(q.a, p.a), (q.mu, p.mu), (q.sigma, p.sigma), (q.b, p.b), (q.lambda, p.lambda)] {
            assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
        }
        assert!(fit.r2_adj > 0.999_999);
        assert!(fit.std_errors.a.is_some());
    }

    #[test]
    fn roundtrip_capped_lambda() {
        let p = HistoryParams::new(3.71, 1.37, 0.725, 0.277, 50.0).unwrap();
        let fit = fit_history(&p.sample_panel(Discipline::Hep, 2019, 20), &FitOptions::default()).unwrap();
        assert!(fit.params.lambda_capped);
        for (got, want) in [(fit.params.a, p.a), (fit.params.mu, p.mu), (fit.params.sigma, p.sigma), (fit.params.b, p.b)] {
            assert!((got / want - 1.0).abs() < 0.01, "{got} vs {want}");
        }
        assert!(fit.std_errors.lambda.is_none());
    }

    #[test]
    fn pure_sigmoid_limit() {
        let mut means = vec![(0u32, 1e-4)];
        means.extend((1..=20).map(|i| (i, 0.3)));
        let panel = AgePanel::from_means(Discipline::Math, 2019, &means);
        let fit = fit_history(&panel, &FitOptions::default()).unwrap();
        assert!(fit.r2_adj > 0.999, "{}", fit.r2_adj);
        assert!((fit.params.b - 0.3).abs() < 1e-3);
        assert!(fit.params.eval(5.0) - 0.3 < 1e-3);
    }

    #[test]
    fn too_few_ages() {
        let panel = astro().sample_panel(Discipline::AstroPh, 2019, 4);
        assert!(matches!(fit_history(&panel, &FitOptions::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn all_zero_is_degenerate() {
        let means: Vec<(u32, f64)> = (0..10).map(|i| (i, 0.0)).collect();
        let panel = AgePanel::from_means(Discipline::Math, 2019, &means);
        assert!(matches!(fit_history(&panel, &FitOptions::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn obsolescence_identities() {
        let p = HistoryParams::new(6.25, 1.91, 0.927, 0.452, 0.439).unwrap();
        let m = derive_metrics_from_params(&p);
        let closed = 1.0 / (p.sigma * p.sigma).exp_m1();
        assert!((m.s_rate - closed).abs() <= 4.0 * f64::EPSILON * closed);
        assert!((m.r_rate * m.i_rate - 1.0).abs() <= 2.0 * f64::EPSILON);
        assert!(m.ln_mode <= m.ln_median && m.ln_median <= m.ln_mean);
    }

    #[test]
    fn unit_obsolescence_rate() {
        let p = HistoryParams::new(1.0, 1.0, 2f64.ln().sqrt(), 0.1, 1.0).unwrap();
        let m = derive_metrics_from_params(&p);
        assert!((m.s_rate - 1.0).abs() < 1e-14);
        assert!((m.delta1 - m.delta2).abs() < 1e-14);
    }

    #[test]
    fn split_at_one_year() {
        let s = cumulative_split(&astro(), 1.0).unwrap();
        assert_eq!(s.g, 0.0);
        assert_eq!(s.rho, 1.0);
        assert!(cumulative_split(&astro(), 0.5).is_err());
    }

    #[test]
    fn split_reference_values() {
        // mpmath references
        let s = cumulative_split(&astro(), 2.0).unwrap();
        assert!((s.f - 0.28663748198080963).abs() < 1e-13);
        assert!((s.g - 0.078613576942397527).abs() < 1e-13);
        assert!((s.h - 0.36525105892320716).abs() < 1e-13);
    }

    #[test]
    fn ln_cosh_is_overflow_safe() {
        assert!((ln_cosh(1.0) - 1f64.cosh().ln()).abs() < 1e-15);
        assert!((ln_cosh(1e4) - (1e4 - std::f64::consts::LN_2)).abs() < 1e-9);
        assert_eq!(ln_cosh(0.0), 0.0);
    }

    #[test]
    fn curve_csv_columns_add_up() {
        let mut out = Vec::new();
        write_curve_csv(&astro(), 2.0, 0.5, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), 5);
        for r in rows {
            assert!((r[1] - r[2] - r[3]).abs() < 1e-15);
            assert!((r[1] - astro().eval(r[0])).abs() < 1e-15);
        }
    }
}
