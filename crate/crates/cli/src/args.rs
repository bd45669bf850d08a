//! Flag value parsers shared by the subcommands.

use std::path::PathBuf;
use std::str::FromStr;

use citedyn::corpus::{Discipline, InputFormat};
use citedyn::distfit::ZeroHandling;
use citedyn::gamma::Kernel;
use citedyn::historyfit::{HistoryParams, Weighting};
use citedyn::plot::PlotStyle;
use citedyn::stochastic::{CountingMode, Scheme};

pub fn discipline(s: &str) -> Result<Discipline, String> {
    Discipline::from_str(s).map_err(|_| {
        let known: Vec<&str> = Discipline::ALL.iter().map(|d| d.label()).collect();
        format!("unknown discipline '{s}' (expected one of {})", known.join(", "))
    })
}

pub fn format(s: &str) -> Result<InputFormat, String> {
    InputFormat::from_str(s).map_err(|e| e.to_string())
}

pub fn zeros(s: &str) -> Result<ZeroHandling, String> {
    ZeroHandling::from_str(s).map_err(|e| e.to_string())
}

pub fn style(s: &str) -> Result<PlotStyle, String> {
    PlotStyle::from_str(s).map_err(|e| e.to_string())
}

pub fn weighting(s: &str) -> Result<Weighting, String> {
    match s {
        "none" | "unweighted" => Ok(Weighting::Unweighted),
        "population" => Ok(Weighting::Population),
        "relative" => Ok(Weighting::Relative),
        _ => Err(format!("unknown weighting '{s}' (expected none, population or relative)")),
    }
}

pub fn scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "exact" => Ok(Scheme::Exact),
        "euler" | "euler-maruyama" => Ok(Scheme::EulerMaruyama),
        _ => Err(format!("unknown scheme '{s}' (expected exact or euler-maruyama)")),
    }
}

pub fn counting(s: &str) -> Result<CountingMode, String> {
    match s {
        "integral-floor" => Ok(CountingMode::IntegralFloor),
        "yearly-floor-sum" => Ok(CountingMode::YearlyFloorSum),
        _ => Err(format!("unknown counting mode '{s}' (expected integral-floor or yearly-floor-sum)")),
    }
}

pub fn kernel(s: &str) -> Result<Kernel, String> {
    match s {
        "epanechnikov" => Ok(Kernel::Epanechnikov),
        "gaussian" => Ok(Kernel::Gaussian),
        _ => Err(format!("unknown kernel '{s}' (expected epanechnikov or gaussian)")),
    }
}

pub fn cap(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("cap must lie in (0, 1], got {v}"))
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

/// Comma-separated list where each item is a value or an inclusive `a:b`
/// range, e.g. `2:4,7` → 2,3,4,7.
pub fn int_list<T>(s: &str) -> Result<Vec<T>, String>
where
    T: FromStr + Copy + Into<u64> + TryFrom<u64>,
{
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("'{v}' is not a non-negative integer"));
        match item.split_once(':') {
            Some((a, b)) => {
                let (lo, hi): (u64, u64) = (parse(a)?.into(), parse(b)?.into());
                if lo > hi {
                    return Err(format!("empty range '{item}'"));
                }
                for v in lo..=hi {
                    out.push(T::try_from(v).map_err(|_| format!("'{v}' out of range"))?);
                }
            }
            None => out.push(parse(item)?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// A whole comma-separated flag value; clap would otherwise read a bare
/// `Vec` field as a repeated flag.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

pub fn u32_list(s: &str) -> Result<List<u32>, String> {
    int_list::<u32>(s).map(List)
}

pub fn u64_list(s: &str) -> Result<List<u64>, String> {
    int_list::<u64>(s).map(List)
}

pub fn f64_list(s: &str) -> Result<List<f64>, String> {
    let vals = s
        .split(',')
        .map(str::trim)
        .filter(|i| !i.is_empty())
        .map(|v| v.parse::<f64>().map_err(|_| format!("'{v}' is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    if vals.is_empty() {
        return Err("empty list".into());
    }
    Ok(List(vals))
}

/// `A,mu,sigma,B,lambda` where lambda may be `inf` for the capped limit.
pub fn params(s: &str) -> Result<HistoryParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(format!("expected A,mu,sigma,B,lambda, got {} value(s)", parts.len()));
    }
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("'{v}' is not a number"));
    let (a, mu, sigma, b) = (num(parts[0])?, num(parts[1])?, num(parts[2])?, num(parts[3])?);
    let result = match parts[4] {
        "inf" | "capped" => HistoryParams::capped(a, mu, sigma, b),
        l => HistoryParams::new(a, mu, sigma, b, num(l)?),
    };
    result.map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesArg {
    pub file: PathBuf,
    pub x: String,
    pub y: String,
    pub style: PlotStyle,
    pub name: Option<String>,
}

/// `FILE:XCOL:YCOL[:STYLE[:NAME]]`
pub fn series(s: &str) -> Result<SeriesArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=5).contains(&parts.len()) || parts[..3].iter().any(|p| p.is_empty()) {
        return Err(format!("expected FILE:XCOL:YCOL[:STYLE[:NAME]], got '{s}'"));
    }
    Ok(SeriesArg {
        file: PathBuf::from(parts[0]),
        x: parts[1].to_string(),
        y: parts[2].to_string(),
        style: parts.get(3).map(|v| style(v)).transpose()?.unwrap_or_default(),
        name: parts.get(4).map(|v| v.to_string()),
    })
}
