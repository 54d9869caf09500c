use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn summary(&self) -> Value {
        let line = self.stdout.lines().last().expect("summary line");
        serde_json::from_str(line).expect("summary is json")
    }
}

fn crossprice(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_crossprice")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> Value {
    let r = crossprice(args);
    assert_eq!(r.code, 0, "{args:?}\n{}\n{}", r.stdout, r.stderr);
    let s = r.summary();
    assert_eq!(s["status"], "ok");
    s
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth_matched(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--seed", "1", "--out", p(dir)];
    args.extend_from_slice(extra);
    ok(&args);
    ok(&["match", "--in", p(dir), "--k", "20"]);
}

#[test]
fn planted_chain_reproduces_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth_matched(d, &[]);
    let s = ok(&["detect", "--in", p(d)]);
    assert!(s["counts"]["opportunities"].as_u64().unwrap() > 0);
    assert_eq!(
        fs::read(d.join("opportunities.jsonl")).unwrap(),
        fs::read(d.join("ledger.jsonl")).unwrap()
    );
    assert!(!d.join(".crossprice.lock").exists());
}

#[test]
fn match_runs_offline_and_reuses_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--out", p(d)]);
    let cache = d.join("cache");
    let first = ok(&["match", "--in", p(d), "--cache-dir", p(&cache)]);
    let relations = fs::read(d.join("relations.jsonl")).unwrap();
    assert_eq!(first["counts"]["recall_at_k"], 1.0);
    let second = ok(&["match", "--in", p(d), "--cache-dir", p(&cache)]);
    assert_eq!(second["counts"]["provider_calls"], 0);
    assert!(second["counts"]["cache_hits"].as_u64().unwrap() > first["counts"]["cache_hits"].as_u64().unwrap());
    assert_eq!(fs::read(d.join("relations.jsonl")).unwrap(), relations);
    let recall = fs::read_to_string(d.join("recall.csv")).unwrap();
    assert!(recall.starts_with("k,recall\n"));
}

#[test]
fn zero_staleness_on_async_quotes_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth_matched(d, &["--async-quotes"]);
    let s = ok(&["detect", "--in", p(d), "--staleness", "0s"]);
    assert_eq!(s["counts"]["joins"], 0);
    assert!(s["counts"]["missed_joins"].as_u64().unwrap() > 0);
    let warnings = s["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("staleness")));

    let s = ok(&["detect", "--in", p(d)]);
    assert!(s["counts"]["joins"].as_u64().unwrap() > 0);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("data");
    synth_matched(&d, &["--async-quotes"]);
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[paths]\nin_dir = \"data\"\n\n[pipeline]\nstaleness = \"0s\"\n").unwrap();
    let from_file = ok(&["detect", "--config", p(&cfg)]);
    assert_eq!(from_file["counts"]["joins"], 0);
    let flagged = ok(&["detect", "--config", p(&cfg), "--staleness", "5m"]);
    assert!(flagged["counts"]["joins"].as_u64().unwrap() > 0);
}

#[test]
fn downstream_stages_are_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth_matched(d, &[]);
    let names = ["opportunities.jsonl", "metrics.csv", "case_study.csv", "trades.jsonl", "report.txt", "report.csv"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        ok(&["detect", "--in", p(d)]);
        let a = ok(&["analyze", "--in", p(d)]);
        assert!(a["counts"]["relations"].as_u64().unwrap() > 0);
        ok(&["backtest", "--in", p(d)]);
        ok(&["report", "--in", p(d)]);
        runs.push(names.map(|n| fs::read(d.join(n)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    let metrics = String::from_utf8(runs[0][1].clone()).unwrap();
    assert!(metrics.starts_with("relation_id,kind,eff_liquidity,max_dev_1h,median_dev,median_raw_gap,max_apy_worst,"));
    let case = String::from_utf8(runs[0][2].clone()).unwrap();
    assert!(case.starts_with("t,diff,roll_min,roll_max,persistent\n"));
    let report = String::from_utf8(runs[0][4].clone()).unwrap();
    assert!(report.contains("cross_conditional"));
}

#[test]
fn backtest_compounds_trades() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth_matched(d, &[]);
    ok(&["detect", "--in", p(d)]);
    let s = ok(&["backtest", "--in", p(d)]);
    let trades = fs::read_to_string(d.join("trades.jsonl")).unwrap();
    let product: f64 = trades
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["return"].as_f64().unwrap())
        .fold(1.0, |acc, r| acc * (1.0 + r));
    assert!(s["counts"]["trades"].as_u64().unwrap() >= 1);
    assert!((s["counts"]["cumulative_return"].as_f64().unwrap() - (product - 1.0)).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    let r = crossprice(&["detect", "--bogus"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("Usage"));
    assert_eq!(crossprice(&["frobnicate"]).code, 2);
    assert_eq!(crossprice(&["detect", "--staleness", "soon"]).code, 2);
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let missing = crossprice(&["detect", "--in", p(&d.join("nowhere"))]);
    assert_eq!(missing.code, 2);
    assert_eq!(missing.summary()["status"], "error");
    assert_eq!(crossprice(&["match", "--in", p(d), "--k", "0"]).code, 2);

    let cfg = d.join("bad.toml");
    fs::write(&cfg, "[pipeline]\nkay = 3\n").unwrap();
    assert_eq!(crossprice(&["detect", "--config", p(&cfg), "--in", p(d)]).code, 2);

    let spec = d.join("scenario.toml");
    fs::write(&spec, "platforms = 1\n").unwrap();
    assert_eq!(crossprice(&["synth", "--spec", p(&spec), "--out", p(d)]).code, 2);

    ok(&["synth", "--out", p(d)]);
    fs::remove_file(d.join("truth.jsonl")).unwrap();
    assert_eq!(crossprice(&["match", "--in", p(d)]).code, 2);
}

#[test]
fn data_errors_exit_one_and_leave_outputs_intact() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth_matched(d, &[]);
    ok(&["detect", "--in", p(d)]);
    let before = fs::read(d.join("opportunities.jsonl")).unwrap();
    fs::write(d.join("relations.jsonl"), "{not json\n").unwrap();
    let r = crossprice(&["detect", "--in", p(d)]);
    assert_eq!(r.code, 1, "{}", r.stderr);
    assert_eq!(fs::read(d.join("opportunities.jsonl")).unwrap(), before);
    let leftovers: Vec<_> = fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with(".tmp") || n == ".crossprice.lock")
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn locked_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth_matched(d, &[]);
    fs::write(d.join(".crossprice.lock"), "1\n").unwrap();
    let r = crossprice(&["detect", "--in", p(d)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("locked"));
    assert!(!d.join("opportunities.jsonl").exists());
}

#[test]
fn ingest_records_diagnostics_and_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw");
    ok(&["synth", "--out", p(&raw)]);
    let markets = raw.join("markets.jsonl");
    let mut text = fs::read_to_string(&markets).unwrap();
    text.push_str("{\"broken\": \n");
    fs::write(&markets, text).unwrap();

    let kept = tmp.path().join("kept");
    let s = ok(&[
        "ingest",
        "--markets",
        p(&markets),
        "--prices",
        p(&raw.join("prices.csv")),
        "--out",
        p(&kept),
        "--frictions",
        p(&raw.join("frictions.toml")),
        "--keep-all",
    ]);
    assert_eq!(s["counts"]["excluded"], 0);
    assert_eq!(s["counts"]["diagnostics"], 1);
    assert_eq!(s["warnings"].as_array().unwrap().len(), 1);
    let diags = fs::read_to_string(kept.join("diagnostics.jsonl")).unwrap();
    assert!(diags.contains("\"file\":\"markets.jsonl\""));
    assert_eq!(fs::read(kept.join("prices.csv")).unwrap(), fs::read(raw.join("prices.csv")).unwrap());
    assert_eq!(fs::read(kept.join("frictions.toml")).unwrap(), fs::read(raw.join("frictions.toml")).unwrap());

    let filtered = tmp.path().join("filtered");
    let cfg = tmp.path().join("strict.toml");
    fs::write(&cfg, "[policy]\nmin_markets_per_platform = 10000\n").unwrap();
    let s = ok(&[
        "ingest",
        "--config",
        p(&cfg),
        "--markets",
        p(&markets),
        "--prices",
        p(&raw.join("prices.csv")),
        "--out",
        p(&filtered),
    ]);
    let parsed = s["counts"]["parsed"].as_u64().unwrap();
    assert_eq!(s["counts"]["excluded"].as_u64().unwrap(), parsed);
    assert_eq!(s["counts"]["markets"], 0);
    assert_eq!(s["counts"]["excluded_by_reason"]["platform_too_small"].as_u64().unwrap(), parsed);
}
