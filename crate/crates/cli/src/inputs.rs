//! Reading result files and corpora written by earlier runs.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use citedyn::corpus::{detect_format, load_corpus, Discipline, InputFormat, LoadedInput};
use citedyn::historyfit::HistoryParams;
use citedyn::stochastic::VolatilityFit;
use citedyn::{Error, Result};
use serde_json::Value;

/// Load a corpus or panel file, sniffing the format from the header when
/// none is given.
pub fn load_input(path: &Path, format: Option<InputFormat>) -> Result<LoadedInput> {
    let format = match format {
        Some(f) => f,
        None => {
            let mut header = String::new();
            BufReader::new(fs::File::open(path)?).read_line(&mut header)?;
            detect_format(&header).ok_or_else(|| {
                Error::schema_at(1, "header matches neither long-csv nor panel-csv; pass --format".to_string())
            })?
        }
    };
    load_corpus(path, format)
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn payload(v: &Value) -> &Value {
    v.get("payload").unwrap_or(v)
}

fn params_from(v: &Value) -> Result<HistoryParams> {
    let p: HistoryParams = serde_json::from_value(v.clone())?;
    p.validate()?;
    Ok(p)
}

fn discipline_from(v: Option<&Value>) -> Result<Option<Discipline>> {
    match v {
        Some(Value::String(s)) => Ok(Some(s.parse()?)),
        _ => Ok(None),
    }
}

/// Parameter sets in a fit file. Accepts the envelope written by
/// `fit-history` (one or more fits), a `{discipline, params}` object, or a
/// bare parameter object.
pub fn read_fit(path: &Path) -> Result<Vec<(Option<Discipline>, HistoryParams)>> {
    let doc = read_json(path)?;
    let body = payload(&doc);
    let one = |v: &Value| -> Result<(Option<Discipline>, HistoryParams)> {
        let fit = v.get("fit").unwrap_or(v);
        let params = fit.get("params").unwrap_or(fit);
        let d = discipline_from(fit.get("discipline").or_else(|| v.get("discipline")))?;
        Ok((d, params_from(params)?))
    };
    let out = match body.get("fits") {
        Some(Value::Array(items)) => items.iter().map(one).collect::<Result<Vec<_>>>()?,
        _ => vec![one(body)?],
    };
    if out.is_empty() {
        return Err(Error::data(format!("{} holds no fits", path.display())));
    }
    Ok(out)
}

/// Pick the parameters for `discipline`, or the only set in the file.
pub fn select_params(
    fits: &[(Option<Discipline>, HistoryParams)],
    discipline: Option<Discipline>,
) -> Result<(Option<Discipline>, HistoryParams)> {
    match discipline {
        Some(d) => fits
            .iter()
            .find(|(fd, _)| *fd == Some(d))
            .or_else(|| (fits.len() == 1 && fits[0].0.is_none()).then(|| &fits[0]))
            .map(|(_, p)| (Some(d), *p))
            .ok_or_else(|| Error::InvalidInput(format!("fit file has no parameters for {d}"))),
        None if fits.len() == 1 => Ok(fits[0]),
        None => Err(Error::InvalidInput("fit file holds several disciplines; pass --discipline".into())),
    }
}

/// Volatility schedule from the envelope written by `fit-dist --m-series`
/// or a bare `{s1, s2}` object.
pub fn read_vol(path: &Path) -> Result<VolatilityFit> {
    let doc = read_json(path)?;
    let body = payload(&doc);
    let v: VolatilityFit = serde_json::from_value(body.get("volatility").unwrap_or(body).clone())?;
    v.validate()?;
    Ok(v)
}

/// Two numeric columns `t,m` (header required).
pub fn read_m_series(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(format!("m-series needs columns t,m; missing '{name}'")))
    };
    let (ti, mi) = (col("t")?, col("m")?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let num = |c: usize| {
            let raw = rec.get(c).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::schema_at(row, format!("'{raw}' is not a number")))
        };
        out.push((num(ti)?, num(mi)?));
    }
    Ok(out)
}

/// Two named numeric columns from any headed CSV.
pub fn read_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(format!("{}: no column '{name}'", path.display())))
    };
    let (xi, yi) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (rx, ry) = (rec.get(xi).unwrap_or(""), rec.get(yi).unwrap_or(""));
        // Empty cells (e.g. masked reckoner entries) are skipped.
        if rx.is_empty() || ry.is_empty() {
            continue;
        }
        let num = |raw: &str| {
            raw.parse::<f64>().map_err(|_| Error::schema_at(i + 2, format!("'{raw}' is not a number")))
        };
        xs.push(num(rx)?);
        ys.push(num(ry)?);
    }
    Ok((xs, ys))
}
