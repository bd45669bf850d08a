use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use citedyn::historyfit::HistoryParams;
use serde_json::Value;

// Published astro-ph top-99% curve and volatility.
const ASTRO: (f64, f64, f64, f64, f64) = (2.19, 1.61, 0.817, 0.158, 1.21);
const ASTRO_VOL: (f64, f64) = (0.0281, 0.200);

// Published ready-reckoner block for astro-ph, T = 2..10.
const ASTRO_RECKONER: [(u64, [f64; 9]); 4] = [
    (5, [2.61, 1.82, 1.39, 1.12, 0.92, 0.77, 0.66, 0.56, 0.48]),
    (10, [3.31, 2.51, 2.08, 1.81, 1.61, 1.47, 1.35, 1.26, 1.17]),
    (50, [4.92, 4.12, 3.69, 3.42, 3.22, 3.08, 2.96, 2.87, 2.78]),
    (100, [5.61, 4.82, 4.39, 4.11, 3.92, 3.77, 3.65, 3.56, 3.48]),
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_citedyn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn citedyn")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn astro() -> HistoryParams {
    HistoryParams::new(ASTRO.0, ASTRO.1, ASTRO.2, ASTRO.3, ASTRO.4).unwrap()
}

/// Noiseless panel: large cohorts so that total/n reproduces u(t) to 1e-6.
fn write_astro_panel(dir: &Path) -> PathBuf {
    let p = astro();
    let n = 1_000_000u64;
    let mut text = String::from("discipline,dataset_year,age,n_eprints,total_citations\n");
    for age in 0..=20u32 {
        let total = (p.eval(age as f64) * n as f64).round() as u64;
        text.push_str(&format!("astro-ph,2019,{age},{n},{total}\n"));
    }
    let path = dir.join("panel.csv");
    fs::write(&path, text).unwrap();
    path
}

fn write_vol(dir: &Path) -> PathBuf {
    let path = dir.join("vol.json");
    fs::write(&path, format!(r#"{{"s1":{},"s2":{}}}"#, ASTRO_VOL.0, ASTRO_VOL.1)).unwrap();
    path
}

fn fit_astro(dir: &Path) -> PathBuf {
    let panel = write_astro_panel(dir);
    let fit = dir.join("fit.json");
    let out = run(&[
        "fit-history", "--input", s(&panel), "--discipline", "astro-ph", "--cap", "0.99", "--max-age", "20", "--out",
        s(&fit),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    fit
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_history_recovers_published_curve() {
    let dir = tempfile::tempdir().unwrap();
    let doc = read_json(&fit_astro(dir.path()));
    assert_eq!(doc["subcommand"], "fit-history");
    assert!(doc["input_digest"].as_str().unwrap().starts_with("sha256:"));
    let fit = &doc["payload"]["fits"][0]["fit"];
    assert_eq!(fit["discipline"], "astro-ph");
    assert_eq!(fit["converged"], true);
    let p = &fit["params"];
    for (key, want) in [("A", ASTRO.0), ("mu", ASTRO.1), ("sigma", ASTRO.2), ("B", ASTRO.3), ("lambda", ASTRO.4)] {
        let got = p[key].as_f64().unwrap();
        assert!(((got - want) / want).abs() < 0.01, "{key}: {got} vs {want}");
    }
}

#[test]
fn reckoner_matches_published_astro_block() {
    let dir = tempfile::tempdir().unwrap();
    let fit = fit_astro(dir.path());
    let out = run(&["reckoner", "--fit", s(&fit), "--citations", "5,10,50,100", "--ages", "2:10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "discipline,c,T=2,T=3,T=4,T=5,T=6,T=7,T=8,T=9,T=10");
    for (line, (c, want)) in lines.zip(ASTRO_RECKONER) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!((cells[0], cells[1]), ("astro-ph", c.to_string().as_str()));
        for (cell, w) in cells[2..].iter().zip(want) {
            let got: f64 = cell.parse().unwrap();
            assert!((got - w).abs() <= 0.01 + 1e-9, "c={c}: {got} vs {w}");
        }
    }
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let fit = fit_astro(dir.path());
    let vol = write_vol(dir.path());
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "1", "4"].iter().enumerate() {
        let ens = dir.path().join(format!("ens{k}.csv"));
        let out = bin()
            .args(["simulate", "--fit", s(&fit), "--vol", s(&vol), "--paths", "100", "--seed", "7", "--out", s(&ens)])
            .env("CITEDYN_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(&ens).unwrap());
    }
    assert!(outputs[0].starts_with(b"path_id,t,x\n"));
    // 100 paths × 1001 grid points plus the header.
    assert_eq!(outputs[0].iter().filter(|&&b| b == b'\n').count(), 100 * 1001 + 1);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let other_seed = dir.path().join("other.csv");
    run(&["simulate", "--fit", s(&fit), "--vol", s(&vol), "--paths", "100", "--seed", "8", "--out", s(&other_seed)]);
    assert_ne!(outputs[0], fs::read(other_seed).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["fit-history", "--input", "x.csv", "--cap", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&["reckoner", "--params", "1,2,3"]).status.code(), Some(1));

    // Missing file and malformed rows are data errors.
    assert_eq!(run(&["ingest", "--input", s(&dir.path().join("missing.csv"))]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "eprint_id,discipline,submit_year,age,citations_in_year\na,astro-ph,2010,0,-3\n").unwrap();
    let out = run(&["ingest", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    // A flat panel gives the curve nothing to fit.
    let flat = dir.path().join("flat.csv");
    let mut text = String::from("discipline,dataset_year,age,n_eprints,total_citations\n");
    for age in 0..3 {
        text.push_str(&format!("hep,2019,{age},10,10\n"));
    }
    fs::write(&flat, text).unwrap();
    let code = run(&["fit-history", "--input", s(&flat), "--out", s(&dir.path().join("f.json"))]).status.code();
    assert!(matches!(code, Some(2) | Some(3)), "{code:?}");
}

#[test]
fn metrics_from_params_flag() {
    let out = run(&["metrics", "--params", "2.19,1.61,0.817,0.158,1.21", "--discipline", "astro-ph", "--horizons", "2"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let e = &doc["payload"]["entries"][0];
    assert_eq!(e["discipline"], "astro-ph");
    let s_rate = e["metrics"]["s_rate"].as_f64().unwrap();
    assert!((s_rate - 1.0 / (0.817f64 * 0.817).exp_m1()).abs() < 1e-12);
    let split = &e["splits"][0];
    assert!((split["F"].as_f64().unwrap() - 0.287).abs() < 5e-4);
    assert!((split["G"].as_f64().unwrap() - 0.079).abs() < 5e-4);
}

/// Long-csv corpus of scaled, rounded copies of the astro-ph curve.
fn write_corpus(dir: &Path) -> PathBuf {
    let p = astro();
    let mut text = String::from("eprint_id,discipline,submit_year,age,citations_in_year\n");
    for k in 0..60 {
        let submit = 2009 + (k % 11);
        let scale = 0.5 + (k % 7) as f64 * 0.25;
        for age in 0..=(2019 - submit) {
            let c = (scale * p.eval(age as f64) * 4.0).round() as u64;
            text.push_str(&format!("e{k},astro-ph,{submit},{age},{c}\n"));
        }
    }
    let path = dir.join("corpus.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn ingest_gamma_and_fit_dist_on_a_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let panels = dir.path().join("panels.csv");
    let out = run(&["ingest", "--input", s(&corpus), "--cap", "1", "--panels-out", s(&panels)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["payload"]["n_eprints"], 60);
    assert_eq!(doc["payload"]["retrieval_year"], 2019);
    assert!(fs::read_to_string(&panels).unwrap().starts_with("discipline,dataset_year,age,n_eprints,total_citations"));

    let fit = dir.path().join("fit.json");
    fs::write(&fit, r#"{"discipline":"astro-ph","params":{"A":2.19,"mu":1.61,"sigma":0.817,"B":0.158,"lambda":1.21,"lambda_capped":false}}"#).unwrap();
    let scores = dir.path().join("scores.csv");
    let report = dir.path().join("gamma.json");
    let out = run(&["gamma", "--input", s(&corpus), "--fit", s(&fit), "--out", s(&scores), "--json", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&scores).unwrap();
    assert!(text.starts_with("eprint_id,discipline,T,c,gamma,gamma_star\n"));
    // Eprints submitted in the retrieval year are too young to score.
    let n_scored = text.lines().count() - 1;
    let doc = read_json(&report);
    assert_eq!(doc["payload"]["n_scored"], n_scored);
    assert!(n_scored > 40);

    let quant = dir.path().join("q.csv");
    let out = run(&["fit-dist", "--input", s(&corpus), "--discipline", "astro-ph", "--zeros", "keep", "--quantile-csv", s(&quant)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&quant).unwrap().starts_with("y,phi_inv_q,minus_log1mq\n"));
}

#[test]
fn volatility_fit_feeds_simulation_and_verification() {
    let dir = tempfile::tempdir().unwrap();
    let (s1, s2) = ASTRO_VOL;
    let m_series = dir.path().join("m.csv");
    let mut text = String::from("t,m\n");
    for t in 1..=20 {
        let t = t as f64;
        text.push_str(&format!("{t},{}\n", (s2 * (t / s1 + 1.0).ln()).sqrt()));
    }
    fs::write(&m_series, text).unwrap();
    let vol = dir.path().join("vol.json");
    assert!(run(&["fit-dist", "--m-series", s(&m_series), "--out", s(&vol)]).status.success());
    let v = &read_json(&vol)["payload"]["volatility"];
    assert!((v["s1"].as_f64().unwrap() / s1 - 1.0).abs() < 1e-4);

    let fit = fit_astro(dir.path());
    let report = dir.path().join("verify.json");
    let out = run(&["verify", "--fit", s(&fit), "--vol", s(&vol), "--paths", "2000", "--seed", "3", "--out", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&report);
    assert_eq!(doc["payload"]["checks"].as_array().unwrap().len(), 3);
    assert_eq!(doc["payload"]["means_within_3se"], true);
}

#[test]
fn plot_writes_svg_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "t,u\n0,1\n1,2\n").unwrap();
    let svg = dir.path().join("fig.svg");
    assert!(run(&["plot", "--series", &format!("{}:t:u", s(&data)), "--out", s(&svg)]).status.success());
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 1);
    assert_eq!(fs::read_to_string(dir.path().join("fig.csv")).unwrap(), "series,x,y\nu,0,1\nu,1,2\n");

    let empty = dir.path().join("e.csv");
    fs::write(&empty, "t,u\n").unwrap();
    let code = run(&["plot", "--series", &format!("{}:t:u", s(&empty)), "--out", s(&svg)]).status.code();
    assert_eq!(code, Some(2));
}
