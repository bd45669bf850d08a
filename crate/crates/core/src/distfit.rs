//! Quantile-plot regression for citation-count distributions.
//!
//! Each eprint's count `c` maps to `y = ln(c + 1)` and to its quantile rank
//! `q` within the population. A lognormal population is a straight line in
//! (Φ⁻¹(q), y); a power-law tail is a straight line in (−ln(1−q), y).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_quantile;
pub use crate::special::{normal_cdf_quantile, NormalMode};
use crate::stats::{weighted_line_fit, LineFit};

/// How zero-citation entries are treated when building a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroHandling {
    /// Zeros are ranked and kept (mapped to y = 0).
    Keep,
    /// Zeros take part in ranking, then are left out of the points.
    #[default]
    RankThenDrop,
    /// Zeros are removed before ranking, so ranks refer to the nonzero
    /// sub-population only.
    DropThenRank,
}

impl std::str::FromStr for ZeroHandling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keep" => Ok(ZeroHandling::Keep),
            "rank-then-drop" => Ok(ZeroHandling::RankThenDrop),
            "drop-then-rank" => Ok(ZeroHandling::DropThenRank),
            other => Err(Error::InvalidInput(format!("unknown zero handling '{other}'"))),
        }
    }
}

/// One distinct citation value with its shared rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    /// Citation count c.
    pub value: f64,
    /// ln(c + 1).
    pub y: f64,
    pub q: f64,
    /// Number of observations with this value.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSeries {
    /// Sorted by `y`, one entry per distinct value.
    pub points: Vec<QuantilePoint>,
    /// Size of the ranked population.
    pub n_total: u64,
    pub zeros: ZeroHandling,
}

impl QuantileSeries {
    /// Series from explicit (y, q) pairs, each counted once.
    pub fn from_points(pairs: &[(f64, f64)]) -> Result<QuantileSeries> {
        let mut points = Vec::with_capacity(pairs.len());
        for &(y, q) in pairs {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Domain(format!("quantile rank {q} outside (0, 1)")));
            }
            if !(y >= 0.0) || !y.is_finite() {
                return Err(Error::Domain(format!("shifted-log value {y} must be finite and >= 0")));
            }
            points.push(QuantilePoint { value: y.exp_m1(), y, q, count: 1 });
        }
        if points.is_empty() {
            return Err(Error::data("empty quantile series"));
        }
        points.sort_by(|a, b| a.y.total_cmp(&b.y));
        Ok(QuantileSeries { n_total: points.len() as u64, points, zeros: ZeroHandling::Keep })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Observations represented by the points.
    pub fn n_observations(&self) -> u64 {
        self.points.iter().map(|p| p.count).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["y", "phi_inv_q", "minus_log1mq"])?;
        for p in &self.points {
            w.write_record([
                p.y.to_string(),
                normal_quantile(p.q)?.to_string(),
                (-(-p.q).ln_1p()).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rank a multiset of citation counts with mid-distribution ranks
/// q = (#{c < c_k} + ½·#{c = c_k}) / N.
pub fn make_quantile_series(citations: &[u64], zeros: ZeroHandling) -> Result<QuantileSeries> {
    let mut sorted: Vec<u64> = match zeros {
        ZeroHandling::DropThenRank => citations.iter().copied().filter(|&c| c > 0).collect(),
        _ => citations.to_vec(),
    };
    if sorted.is_empty() {
        return Err(Error::data("no citation counts to rank"));
    }
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut below = 0usize;
    for chunk in sorted.chunk_by(|a, b| a == b) {
        let c = chunk[0];
        let ties = chunk.len();
        let q = (below as f64 + 0.5 * ties as f64) / n;
        below += ties;
        if c == 0 && zeros == ZeroHandling::RankThenDrop {
            continue;
        }
        let value = c as f64;
        points.push(QuantilePoint { value, y: value.ln_1p(), q, count: ties as u64 });
    }
    if points.is_empty() {
        return Err(Error::data("all citation counts are zero"));
    }
    Ok(QuantileSeries { points, n_total: sorted.len() as u64, zeros })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalFit {
    /// Location: mean of ln(c + 1).
    pub b: f64,
    /// Scale: standard deviation of ln(c + 1).
    pub m: f64,
    pub se_b: f64,
    pub se_m: f64,
    pub r2_adj: f64,
    /// Observations used (ties counted individually).
    pub n: u64,
}

fn weighted(
    pts: &[&QuantilePoint],
    x: impl Fn(&QuantilePoint) -> Result<f64>,
    y: impl Fn(&QuantilePoint) -> f64,
) -> Result<LineFit> {
    let xs = pts.iter().map(|p| x(p)).collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = pts.iter().map(|p| y(p)).collect();
    let ws: Vec<f64> = pts.iter().map(|p| p.count as f64).collect();
    weighted_line_fit(&xs, &ys, &ws)
}

/// OLS of y on Φ⁻¹(q) over all observations.
pub fn fit_lognormal_quantile(series: &QuantileSeries) -> Result<LognormalFit> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "lognormal fit needs at least 3 distinct values, got {}",
            series.len()
        )));
    }
    let pts: Vec<&QuantilePoint> = series.points.iter().collect();
    let line = weighted(&pts, |p| normal_quantile(p.q), |p| p.y)?;
    if line.slope <= 0.0 {
        return Err(Error::Degenerate(format!("non-positive lognormal scale {}", line.slope)));
    }
    Ok(LognormalFit {
        b: line.intercept,
        m: line.slope,
        se_b: line.se_intercept,
        se_m: line.se_slope,
        r2_adj: line.r2_adj,
        n: series.n_observations(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Tail exponent a = 1 + 1/slope.
    pub a: f64,
    /// Shift θ; `None` means the unshifted model (θ = 1).
    pub theta: Option<f64>,
    pub q_min: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2_adj: f64,
    pub n: u64,
}

/// OLS of ln(c/θ + 1) on −ln(1 − q) over points with q ≥ `q_min`.
pub fn fit_power_law_quantile(series: &QuantileSeries, q_min: f64, theta: Option<f64>) -> Result<PowerLawFit> {
    if !(0.0..1.0).contains(&q_min) {
        return Err(Error::Domain(format!("q_min must be in [0, 1), got {q_min}")));
    }
    if let Some(t) = theta {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("shift must be positive, got {t}")));
        }
    }
    let th = theta.unwrap_or(1.0);
    let pts: Vec<&QuantilePoint> = series.points.iter().filter(|p| p.q >= q_min).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 3 distinct values above q = {q_min}, got {}",
            pts.len()
        )));
    }
    let line = weighted(&pts, |p| Ok(-(-p.q).ln_1p()), |p| (p.value / th).ln_1p())?;
    if line.slope <= 0.0 {
        return Err(Error::Degenerate(format!("non-positive tail slope {}", line.slope)));
    }
    Ok(PowerLawFit {
        a: 1.0 + 1.0 / line.slope,
        theta,
        q_min,
        slope: line.slope,
        intercept: line.intercept,
        r2_adj: line.r2_adj,
        n: pts.iter().map(|p| p.count).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    #[test]
    fn single_observation() {
        let s = make_quantile_series(&[1], ZeroHandling::Keep).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].y, 2f64.ln());
        assert_eq!(s.points[0].q, 0.5);
    }

    #[test]
    fn drop_then_rank_counts_brute_force() {
        let s = make_quantile_series(&[0, 0, 1, 3], ZeroHandling::DropThenRank).unwrap();
        let qs: Vec<f64> = s.points.iter().map(|p| p.q).collect();
        let values = [1u64, 3];
        let brute: Vec<f64> = values
            .iter()
            .map(|&v| {
                let lt = values.iter().filter(|&&c| c < v).count() as f64;
                let eq = values.iter().filter(|&&c| c == v).count() as f64;
                (lt + 0.5 * eq) / values.len() as f64
            })
            .collect();
        assert_eq!(qs, brute);
        assert_eq!(qs, vec![0.25, 0.75]);
    }

    #[test]
    fn rank_then_drop_keeps_population_ranks() {
        let s = make_quantile_series(&[0, 0, 1, 3], ZeroHandling::RankThenDrop).unwrap();
        let qs: Vec<f64> = s.points.iter().map(|p| p.q).collect();
        assert_eq!(qs, vec![0.625, 0.875]);
        assert_eq!(s.n_total, 4);
    }

    #[test]
    fn zero_maps_to_origin() {
        let s = make_quantile_series(&[0, 5], ZeroHandling::Keep).unwrap();
        assert_eq!(s.points[0].y, 0.0);
    }

    #[test]
    fn empty_input_is_data_error() {
        assert!(matches!(make_quantile_series(&[], ZeroHandling::Keep), Err(Error::Data { .. })));
        assert!(matches!(make_quantile_series(&[0, 0], ZeroHandling::DropThenRank), Err(Error::Data { .. })));
    }

    #[test]
    fn noiseless_lognormal_line() {
        let pairs: Vec<(f64, f64)> = (1..50)
            .map(|k| {
                let q = k as f64 / 50.0;
                (1.0 + 0.5 * normal_quantile(q).unwrap() + 2.0, q)
            })
            .collect();
        let fit = fit_lognormal_quantile(&QuantileSeries::from_points(&pairs).unwrap()).unwrap();
        assert!((fit.b - 3.0).abs() < 1e-12);
        assert!((fit.m - 0.5).abs() < 1e-12);
        assert!((fit.r2_adj - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_rank_is_degenerate() {
        let s = QuantileSeries::from_points(&[(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!(matches!(fit_lognormal_quantile(&s), Err(Error::Degenerate(_))));
    }

    #[test]
    fn noiseless_power_law() {
        let pairs: Vec<(f64, f64)> = (1..40)
            .map(|k| {
                let q = k as f64 / 40.0;
                (0.5 * -(-q).ln_1p(), q)
            })
            .collect();
        let s = QuantileSeries::from_points(&pairs).unwrap();
        let fit = fit_power_law_quantile(&s, 0.0, None).unwrap();
        assert!((fit.a - 3.0).abs() < 1e-9, "{}", fit.a);
    }

    #[test]
    fn power_law_needs_tail_points() {
        let s = QuantileSeries::from_points(&[(0.1, 0.2), (0.2, 0.4), (0.3, 0.6), (0.5, 0.95)]).unwrap();
        assert!(matches!(fit_power_law_quantile(&s, 0.9, None), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn quantile_csv_layout() {
        let s = make_quantile_series(&[0, 1, 1, 4], ZeroHandling::Keep).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "y,phi_inv_q,minus_log1mq");
        assert_eq!(lines.len(), 4);
        let f: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[0], 2f64.ln());
        assert!((normal_cdf(f[1]) - 0.5).abs() < 1e-15);
    }
}
