//! Citation records, percentile thresholds and age panels.
//!
//! Two CSV layouts are understood:
//!
//! * long-csv: `eprint_id,discipline,submit_year,age,citations_in_year`, one
//!   row per (eprint, discipline, age). An eprint listed under several
//!   disciplines repeats its rows once per discipline.
//! * panel-csv: `discipline,dataset_year,age,n_eprints,total_citations`,
//!   pre-aggregated age panels.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIRST_ARXIV_YEAR: i32 = 1991;

pub const LONG_CSV_HEADER: [&str; 5] = ["eprint_id", "discipline", "submit_year", "age", "citations_in_year"];
pub const PANEL_CSV_HEADER: [&str; 5] = ["discipline", "dataset_year", "age", "n_eprints", "total_citations"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Discipline {
    #[serde(rename = "astro-ph")]
    AstroPh,
    #[serde(rename = "comp-sci")]
    CompSci,
    #[serde(rename = "cond-mat")]
    CondMat,
    #[serde(rename = "hep")]
    Hep,
    #[serde(rename = "math")]
    Math,
    #[serde(rename = "oth-phys")]
    OthPhys,
}

impl Discipline {
    pub const ALL: [Discipline; 6] = [
        Discipline::AstroPh,
        Discipline::CompSci,
        Discipline::CondMat,
        Discipline::Hep,
        Discipline::Math,
        Discipline::OthPhys,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Discipline::AstroPh => "astro-ph",
            Discipline::CompSci => "comp-sci",
            Discipline::CondMat => "cond-mat",
            Discipline::Hep => "hep",
            Discipline::Math => "math",
            Discipline::OthPhys => "oth-phys",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Discipline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Discipline::ALL
            .into_iter()
            .find(|d| d.label() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown discipline '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprintRecord {
    pub eprint_id: String,
    pub disciplines: BTreeSet<Discipline>,
    pub submit_year: i32,
    pub doi_year: Option<i32>,
    /// Citations received at age 0, 1, 2, ... (age 0 = submission year).
    pub yearly_citations: Vec<u64>,
}

impl EprintRecord {
    pub fn new(
        eprint_id: impl Into<String>,
        disciplines: impl IntoIterator<Item = Discipline>,
        submit_year: i32,
        yearly_citations: Vec<u64>,
    ) -> Result<Self> {
        let rec = EprintRecord {
            eprint_id: eprint_id.into(),
            disciplines: disciplines.into_iter().collect(),
            submit_year,
            doi_year: None,
            yearly_citations,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.disciplines.is_empty() {
            return Err(Error::data(format!("eprint {} has no discipline", self.eprint_id)));
        }
        if self.submit_year < FIRST_ARXIV_YEAR {
            return Err(Error::data(format!(
                "eprint {} submitted in {} (before {FIRST_ARXIV_YEAR})",
                self.eprint_id, self.submit_year
            )));
        }
        if let Some(doi) = self.doi_year {
            if doi < self.submit_year {
                return Err(Error::data(format!("eprint {} has DOI year before submission", self.eprint_id)));
            }
        }
        Ok(())
    }

    pub fn in_discipline(&self, d: Discipline) -> bool {
        self.disciplines.contains(&d)
    }

    pub fn total_citations(&self) -> u64 {
        self.yearly_citations.iter().sum()
    }

    /// Largest age observable when the data are cut at `dataset_year`, or
    /// `None` if the eprint is newer than the cut.
    pub fn last_observed_age(&self, dataset_year: i32) -> Option<usize> {
        if self.submit_year > dataset_year || self.yearly_citations.is_empty() {
            return None;
        }
        let window = (dataset_year - self.submit_year) as usize;
        Some(window.min(self.yearly_citations.len() - 1))
    }

    /// Lifetime citations up to and including `dataset_year`.
    pub fn citations_through(&self, dataset_year: i32) -> u64 {
        match self.last_observed_age(dataset_year) {
            Some(last) => self.yearly_citations[..=last].iter().sum(),
            None => 0,
        }
    }

    /// Cumulative citations c(T) after `t` full years, i.e. ages 0..t-1.
    pub fn cumulative_at_age(&self, t: usize) -> u64 {
        self.yearly_citations.iter().take(t).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationCorpus {
    records: Vec<EprintRecord>,
    retrieval_year: i32,
}

impl CitationCorpus {
    pub fn new(mut records: Vec<EprintRecord>, retrieval_year: i32) -> Result<Self> {
        records.sort_by(|a, b| a.eprint_id.cmp(&b.eprint_id));
        for w in records.windows(2) {
            if w[0].eprint_id == w[1].eprint_id {
                return Err(Error::data(format!("duplicate eprint id {}", w[0].eprint_id)));
            }
        }
        for r in &records {
            r.validate()?;
            if r.submit_year > retrieval_year {
                return Err(Error::data(format!(
                    "eprint {} submitted after the retrieval year {retrieval_year}",
                    r.eprint_id
                )));
            }
        }
        Ok(CitationCorpus { records, retrieval_year })
    }

    pub fn records(&self) -> &[EprintRecord] {
        &self.records
    }

    pub fn retrieval_year(&self) -> i32 {
        self.retrieval_year
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn in_discipline(&self, d: Discipline) -> impl Iterator<Item = &EprintRecord> {
        self.records.iter().filter(move |r| r.in_discipline(d))
    }

    pub fn disciplines(&self) -> BTreeSet<Discipline> {
        self.records.iter().flat_map(|r| r.disciplines.iter().copied()).collect()
    }

    pub fn total_citations(&self) -> u64 {
        self.records.iter().map(EprintRecord::total_citations).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileSummary {
    pub p: f64,
    /// c_[p]: smallest c with P(c_k <= c) >= p.
    pub threshold: u64,
    /// N_{<=p} = |{k : c_k <= c_[p]}|.
    pub n_below: usize,
    pub population: usize,
}

/// Percentile threshold of a set of citation totals.
pub fn percentile_threshold(totals: &[u64], p: f64) -> Result<PercentileSummary> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("percentile must be in (0, 1], got {p}")));
    }
    if totals.is_empty() {
        return Err(Error::data("percentile of an empty population"));
    }
    let mut sorted = totals.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    // smallest k with k/n >= p, evaluated in floating point like the definition
    let mut k = ((p * n as f64).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / n as f64 >= p {
        k -= 1;
    }
    while k < n && (k as f64 / n as f64) < p {
        k += 1;
    }
    let threshold = sorted[k - 1];
    let n_below = sorted.partition_point(|&c| c <= threshold);
    Ok(PercentileSummary { p, threshold, n_below, population: n })
}

pub fn percentile_summary(corpus: &CitationCorpus, discipline: Discipline, p: f64) -> Result<PercentileSummary> {
    let totals: Vec<u64> = corpus.in_discipline(discipline).map(EprintRecord::total_citations).collect();
    if totals.is_empty() {
        return Err(Error::data(format!("no eprints in {discipline}")));
    }
    percentile_threshold(&totals, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelEntry {
    pub age: u32,
    /// u_i: mean yearly citations at this age.
    pub mean_citations: f64,
    pub n_eprints: u64,
    pub total_citations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgePanel {
    pub discipline: Discipline,
    pub dataset_year: i32,
    /// `None` when the panel was read pre-aggregated.
    pub percentile_cap: Option<f64>,
    /// Number of eprints that passed the percentile cap.
    pub population: u64,
    pub entries: Vec<PanelEntry>,
    /// Ages in 0..=max_age that had no eprints and were left out.
    #[serde(default)]
    pub omitted_ages: Vec<u32>,
}

impl AgePanel {
    pub fn ages(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.age as f64).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.mean_citations).collect()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.n_eprints as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Build a panel straight from (age, mean) pairs with unit counts; used
    /// for synthetic panels.
    pub fn from_means(discipline: Discipline, dataset_year: i32, means: &[(u32, f64)]) -> AgePanel {
        AgePanel {
            discipline,
            dataset_year,
            percentile_cap: None,
            population: 1,
            entries: means
                .iter()
                .map(|&(age, u)| PanelEntry { age, mean_citations: u, n_eprints: 1, total_citations: 0 })
                .collect(),
            omitted_ages: Vec::new(),
        }
    }
}

pub fn build_age_panel(
    corpus: &CitationCorpus,
    discipline: Discipline,
    dataset_year: i32,
    percentile_cap: f64,
    max_age: u32,
) -> Result<AgePanel> {
    if dataset_year > corpus.retrieval_year() {
        return Err(Error::InvalidInput(format!(
            "dataset year {dataset_year} is after the retrieval year {}",
            corpus.retrieval_year()
        )));
    }
    if max_age < 1 {
        return Err(Error::InvalidInput("max_age must be at least 1".into()));
    }
    let eligible: Vec<(&EprintRecord, usize, u64)> = corpus
        .in_discipline(discipline)
        .filter_map(|r| r.last_observed_age(dataset_year).map(|last| (r, last, r.citations_through(dataset_year))))
        .collect();
    if eligible.is_empty() {
        return Err(Error::data(format!("no {discipline} eprints submitted by {dataset_year}")));
    }
    let totals: Vec<u64> = eligible.iter().map(|e| e.2).collect();
    let cap = percentile_threshold(&totals, percentile_cap)?;
    let included: Vec<&(&EprintRecord, usize, u64)> = eligible.iter().filter(|e| e.2 <= cap.threshold).collect();

    let mut entries = Vec::new();
    let mut omitted_ages = Vec::new();
    for age in 0..=max_age {
        let a = age as usize;
        let (mut n, mut sum) = (0u64, 0u64);
        for (rec, last, _) in &included {
            if a <= *last {
                n += 1;
                sum += rec.yearly_citations[a];
            }
        }
        if n == 0 {
            omitted_ages.push(age);
            continue;
        }
        entries.push(PanelEntry { age, mean_citations: sum as f64 / n as f64, n_eprints: n, total_citations: sum });
    }
    if !omitted_ages.is_empty() {
        log::warn!("{discipline} {dataset_year}: no eprints of age(s) {omitted_ages:?}; omitted");
    }
    Ok(AgePanel {
        discipline,
        dataset_year,
        percentile_cap: Some(percentile_cap),
        population: included.len() as u64,
        entries,
        omitted_ages,
    })
}

/// One panel per dataset year in `first_year..=last_year`, each holding the
/// eprints posted up to and including that year.
pub fn build_trend_subsets(
    corpus: &CitationCorpus,
    discipline: Discipline,
    first_year: i32,
    last_year: i32,
    percentile_cap: f64,
    max_age: u32,
) -> Result<Vec<AgePanel>> {
    if first_year > last_year || last_year > corpus.retrieval_year() {
        return Err(Error::InvalidInput(format!(
            "need first_year <= last_year <= {}, got {first_year}..{last_year}",
            corpus.retrieval_year()
        )));
    }
    (first_year..=last_year)
        .map(|y| build_age_panel(corpus, discipline, y, percentile_cap, max_age))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    LongCsv,
    PanelCsv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "long-csv" => Ok(InputFormat::LongCsv),
            "panel-csv" => Ok(InputFormat::PanelCsv),
            other => Err(Error::InvalidInput(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum LoadedInput {
    Corpus(CitationCorpus),
    Panels(Vec<AgePanel>),
}

/// Guess the format from a header line.
pub fn detect_format(header: &str) -> Option<InputFormat> {
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if LONG_CSV_HEADER.iter().all(|c| cols.contains(c)) {
        Some(InputFormat::LongCsv)
    } else if PANEL_CSV_HEADER.iter().all(|c| cols.contains(c)) {
        Some(InputFormat::PanelCsv)
    } else {
        None
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: InputFormat) -> Result<LoadedInput> {
    let file = File::open(path)?;
    match format {
        InputFormat::LongCsv => read_long_csv(file, None).map(LoadedInput::Corpus),
        InputFormat::PanelCsv => read_panel_csv(file).map(LoadedInput::Panels),
    }
}

fn column_index(headers: &csv::StringRecord, wanted: &[&str]) -> Result<Vec<usize>> {
    let mut missing = Vec::new();
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| {
            headers.iter().position(|h| h.trim() == *w).unwrap_or_else(|| {
                missing.push(*w);
                0
            })
        })
        .collect();
    if missing.is_empty() {
        Ok(idx)
    } else {
        Err(Error::schema(format!("missing column(s): {}", missing.join(", "))))
    }
}

fn parse_int(rec: &csv::StringRecord, col: usize, name: &str, row: usize) -> Result<i64> {
    let raw = rec.get(col).unwrap_or("").trim();
    raw.parse::<i64>()
        .map_err(|_| Error::schema_at(row, format!("column {name}: '{raw}' is not an integer")))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader)
}

struct EprintRows {
    disciplines: BTreeSet<Discipline>,
    submit_year: i32,
    ages: BTreeMap<u32, u64>,
}

/// Read a long-csv corpus. Row numbers in errors are file line numbers (the
/// header is line 1). The retrieval year defaults to the latest observed
/// calendar year.
pub fn read_long_csv<R: Read>(reader: R, retrieval_year: Option<i32>) -> Result<CitationCorpus> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = column_index(&headers, &LONG_CSV_HEADER)?;
    let mut eprints: BTreeMap<String, EprintRows> = BTreeMap::new();
    let mut seen: HashMap<(String, Discipline, u32), usize> = HashMap::new();

    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let id = rec.get(idx[0]).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::schema_at(row, "empty eprint_id"));
        }
        let disc: Discipline = rec
            .get(idx[1])
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::data_at(row, e.to_string()))?;
        let submit_year = parse_int(&rec, idx[2], "submit_year", row)?;
        let age = parse_int(&rec, idx[3], "age", row)?;
        let count = parse_int(&rec, idx[4], "citations_in_year", row)?;
        if count < 0 {
            return Err(Error::data_at(row, format!("negative citation count {count}")));
        }
        if age < 0 {
            return Err(Error::data_at(row, format!("negative age {age}")));
        }
        if submit_year < FIRST_ARXIV_YEAR as i64 {
            return Err(Error::data_at(row, format!("submit_year {submit_year} before {FIRST_ARXIV_YEAR}")));
        }
        let (submit_year, age, count) = (submit_year as i32, age as u32, count as u64);

        if let Some(prev) = seen.insert((id.clone(), disc, age), row) {
            return Err(Error::data_at(
                row,
                format!("duplicate row for eprint {id}, discipline {disc}, age {age} (first at row {prev})"),
            ));
        }
        let entry = eprints.entry(id.clone()).or_insert_with(|| EprintRows {
            disciplines: BTreeSet::new(),
            submit_year,
            ages: BTreeMap::new(),
        });
        if entry.submit_year != submit_year {
            return Err(Error::data_at(row, format!("eprint {id} has conflicting submit years")));
        }
        entry.disciplines.insert(disc);
        match entry.ages.get(&age) {
            Some(&c) if c != count => {
                return Err(Error::data_at(row, format!("eprint {id} age {age}: conflicting counts {c} and {count}")));
            }
            _ => {
                entry.ages.insert(age, count);
            }
        }
    }

    let mut latest = FIRST_ARXIV_YEAR;
    let mut records = Vec::with_capacity(eprints.len());
    for (id, rows) in eprints {
        let n = rows.ages.len() as u32;
        if rows.ages.keys().copied().ne(0..n) {
            return Err(Error::data(format!("eprint {id}: ages are not contiguous from 0")));
        }
        latest = latest.max(rows.submit_year + n as i32 - 1);
        records.push(EprintRecord {
            eprint_id: id,
            disciplines: rows.disciplines,
            submit_year: rows.submit_year,
            doi_year: None,
            yearly_citations: rows.ages.into_values().collect(),
        });
    }
    CitationCorpus::new(records, retrieval_year.unwrap_or(latest))
}

pub fn read_panel_csv<R: Read>(reader: R) -> Result<Vec<AgePanel>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = column_index(&headers, &PANEL_CSV_HEADER)?;
    let mut panels: BTreeMap<(Discipline, i32), BTreeMap<u32, PanelEntry>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let disc: Discipline = rec
            .get(idx[0])
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::data_at(row, e.to_string()))?;
        let year = parse_int(&rec, idx[1], "dataset_year", row)?;
        let age = parse_int(&rec, idx[2], "age", row)?;
        let n = parse_int(&rec, idx[3], "n_eprints", row)?;
        let total = parse_int(&rec, idx[4], "total_citations", row)?;
        if age < 0 {
            return Err(Error::data_at(row, format!("negative age {age}")));
        }
        if n < 1 {
            return Err(Error::data_at(row, format!("n_eprints must be at least 1, got {n}")));
        }
        if total < 0 {
            return Err(Error::data_at(row, format!("negative citation total {total}")));
        }
        let entry = PanelEntry {
            age: age as u32,
            mean_citations: total as f64 / n as f64,
            n_eprints: n as u64,
            total_citations: total as u64,
        };
        let ages = panels.entry((disc, year as i32)).or_default();
        if ages.insert(age as u32, entry).is_some() {
            return Err(Error::data_at(row, format!("duplicate age {age} for {disc} {year}")));
        }
    }
    Ok(panels
        .into_iter()
        .map(|((discipline, dataset_year), ages)| {
            let population = ages.get(&0).map_or(0, |e| e.n_eprints);
            AgePanel {
                discipline,
                dataset_year,
                percentile_cap: None,
                population,
                entries: ages.into_values().collect(),
                omitted_ages: Vec::new(),
            }
        })
        .collect())
}

pub fn write_panel_csv<W: Write>(panels: &[AgePanel], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PANEL_CSV_HEADER)?;
    for p in panels {
        for e in &p.entries {
            w.write_record([
                p.discipline.label().to_string(),
                p.dataset_year.to_string(),
                e.age.to_string(),
                e.n_eprints.to_string(),
                e.total_citations.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_long_csv<W: Write>(corpus: &CitationCorpus, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LONG_CSV_HEADER)?;
    for r in corpus.records() {
        for d in &r.disciplines {
            for (age, c) in r.yearly_citations.iter().enumerate() {
                w.write_record([
                    r.eprint_id.clone(),
                    d.label().to_string(),
                    r.submit_year.to_string(),
                    age.to_string(),
                    c.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
