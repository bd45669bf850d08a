//! Small descriptive-statistics toolkit shared by the fitting and
//! verification code. Reductions use pairwise summation so results do not
//! depend on how work was split across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 64;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Sample moments used by normality diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Population skewness g1 = m3 / m2^{3/2}.
    pub skewness: f64,
    /// Population excess kurtosis g2 = m4 / m2² - 3.
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Moments {
        let n = xs.len();
        let m = mean(xs);
        let d2: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
        let d3: Vec<f64> = xs.iter().map(|x| (x - m).powi(3)).collect();
        let d4: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
        let nf = n as f64;
        let m2 = pairwise_sum(&d2) / nf;
        let m3 = pairwise_sum(&d3) / nf;
        let m4 = pairwise_sum(&d4) / nf;
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Moments {
            n,
            mean: m,
            variance: if n > 1 { m2 * nf / (nf - 1.0) } else { f64::NAN },
            skewness,
            excess_kurtosis,
        }
    }

    /// Jarque–Bera statistic n/6·(S² + K²/4).
    pub fn jarque_bera(&self) -> f64 {
        self.n as f64 / 6.0 * (self.skewness.powi(2) + self.excess_kurtosis.powi(2) / 4.0)
    }
}

/// Upper-tail p value of the Jarque–Bera statistic (χ² with 2 d.o.f.).
pub fn jarque_bera_p_value(jb: f64) -> f64 {
    (-0.5 * jb).exp()
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "paired vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("correlation needs at least 2 pairs".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx).powi(2)).collect();
    let syy: Vec<f64> = y.iter().map(|b| (b - my).powi(2)).collect();
    let denom = (pairwise_sum(&sxx) * pairwise_sum(&syy)).sqrt();
    if denom == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation input".into()));
    }
    Ok(pairwise_sum(&sxy) / denom)
}

/// Mid-distribution quantile ranks: (#{v < x} + ½·#{v = x}) / n for each x,
/// returned in input order. Always strictly inside (0, 1).
pub fn mid_rank_quantiles(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut q = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let ties = (j - i + 1) as f64;
        let rank = (i as f64 + 0.5 * ties) / n as f64;
        for &k in &order[i..=j] {
            q[k] = rank;
        }
        i = j + 1;
    }
    q
}

/// Empirical quantile with linear interpolation between order statistics
/// (type 7). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One-sample Kolmogorov–Smirnov distance between the empirical CDF of
/// `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Simple (weighted) least-squares line y = intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: f64,
    pub se_slope: f64,
    pub r2: f64,
    pub r2_adj: f64,
    /// Number of observations (sum of weights).
    pub n: f64,
}

/// Ordinary least squares where point i stands for `weights[i]` identical
/// observations.
pub fn weighted_line_fit(x: &[f64], y: &[f64], weights: &[f64]) -> Result<LineFit> {
    debug_assert!(x.len() == y.len() && x.len() == weights.len());
    let wsum = pairwise_sum(weights);
    if x.len() < 2 || wsum <= 2.0 {
        return Err(Error::InsufficientData("line fit needs more than 2 observations".into()));
    }
    let wx: Vec<f64> = x.iter().zip(weights).map(|(a, w)| a * w).collect();
    let wy: Vec<f64> = y.iter().zip(weights).map(|(b, w)| b * w).collect();
    let mx = pairwise_sum(&wx) / wsum;
    let my = pairwise_sum(&wy) / wsum;
    let sxx: Vec<f64> = x.iter().zip(weights).map(|(a, w)| w * (a - mx).powi(2)).collect();
    let sxy: Vec<f64> = x
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((a, b), w)| w * (a - mx) * (b - my))
        .collect();
    let syy: Vec<f64> = y.iter().zip(weights).map(|(b, w)| w * (b - my).powi(2)).collect();
    let sxx = pairwise_sum(&sxx);
    let sxy = pairwise_sum(&sxy);
    let syy = pairwise_sum(&syy);
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::Degenerate("regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = (syy - slope * sxy).max(0.0);
    let dof = wsum - 2.0;
    let s2 = ssr / dof;
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let r2_adj = 1.0 - (1.0 - r2) * (wsum - 1.0) / dof;
    Ok(LineFit {
        intercept,
        slope,
        se_intercept: (s2 * (1.0 / wsum + mx * mx / sxx)).sqrt(),
        se_slope: (s2 / sxx).sqrt(),
        r2,
        r2_adj,
        n: wsum,
    })
}

/// Composite trapezoid rule on (possibly non-uniform) abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let parts: Vec<f64> = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .collect();
    pairwise_sum(&parts)
}

/// Golden-section search for the maximum of a unimodal `f` on [a, b].
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
