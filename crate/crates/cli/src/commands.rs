use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::Duration;
use crossprice::align::{
    build_relation_graph, read_relations, recall_report, write_recall_csv, EmbeddingCache, HashEmbedder, KeywordClassifier,
    RelationKind, SemanticRelation, RECALL_SWEEP,
};
use crossprice::analytics::{
    backtest_naive, read_metrics, rolling_spread, write_metrics, write_rolling_spread, write_trades, yield_stats, CapitalBasis,
    YieldStats,
};
use crossprice::arbitrage::{read_opportunities, write_opportunities, ArbitrageOpportunity, OpportunityKind};
use crossprice::ingest::{
    apply_inclusion_policy, load_price_series, parse_corpus, write_corpus, write_price_series, Corpus, Diagnostic, FrictionModel,
};
use crossprice::model::{MarketId, PriceSeries};
use crossprice::pipeline::{detect, joined_prices, plan_detection, relation_series, run_match, MatchParams, PipelineError};
use crossprice::synth::{generate, GroundTruth, ScenarioSpec, SynthError};
use serde::Serialize;

use crate::config::{Inputs, Provider, RunConfig};
use crate::error::{CliError, Classify};
use crate::output::{OutputDir, Summary};

pub const MARKETS: &str = "markets.jsonl";
pub const PRICES: &str = "prices.csv";
pub const FRICTIONS: &str = "frictions.toml";
pub const TRUTH: &str = "truth.jsonl";
pub const LEDGER: &str = "ledger.jsonl";
pub const RELATIONS: &str = "relations.jsonl";
pub const RECALL: &str = "recall.csv";
pub const OPPORTUNITIES: &str = "opportunities.jsonl";
pub const METRICS: &str = "metrics.csv";
pub const CASE_STUDY: &str = "case_study.csv";
pub const TRADES: &str = "trades.jsonl";

const CASE_WINDOW: Duration = Duration::hours(3);

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).data(format!("opening {}", path.display()))
}

fn note_diagnostics(summary: &mut Summary, file: &Path, diags: &[Diagnostic]) {
    if let Some(first) = diags.first() {
        summary.warn(format!(
            "{}: {} rows rejected or adjusted (first at line {}: {})",
            file.display(),
            diags.len(),
            first.line,
            first.message
        ));
    }
}

fn load_corpus(path: &Path, summary: &mut Summary) -> Result<(Corpus, Vec<Diagnostic>), CliError> {
    let parsed = parse_corpus(open(path)?).data(format!("reading {}", path.display()))?;
    note_diagnostics(summary, path, &parsed.diagnostics);
    Ok((parsed.corpus, parsed.diagnostics))
}

fn load_prices(path: &Path, corpus: &Corpus, summary: &mut Summary) -> Result<(Vec<PriceSeries>, Vec<Diagnostic>), CliError> {
    let loaded = load_price_series(open(path)?, corpus).data(format!("reading {}", path.display()))?;
    note_diagnostics(summary, path, &loaded.diagnostics);
    Ok((loaded.series, loaded.diagnostics))
}

fn load_frictions(path: Option<PathBuf>, summary: &mut Summary) -> Result<FrictionModel, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(&p).data(format!("reading {}", p.display()))?;
            FrictionModel::from_toml(&text).config(format!("parsing {}", p.display()))
        }
        None => {
            summary.warn("no frictions.toml found; using the reference schedule");
            Ok(FrictionModel::reference())
        }
    }
}

fn load_relations(path: &Path) -> Result<Vec<SemanticRelation>, CliError> {
    read_relations(open(path)?).data(format!("reading {}", path.display()))
}

fn pipeline_error(context: &str, e: PipelineError) -> CliError {
    match e {
        PipelineError::Friction(e) => CliError::config(format!("{context}: {e}")),
        e => CliError::data(format!("{context}: {e}")),
    }
}

fn by_kind(opps: &[ArbitrageOpportunity]) -> BTreeMap<OpportunityKind, usize> {
    let mut counts = BTreeMap::new();
    for o in opps {
        *counts.entry(o.kind).or_default() += 1;
    }
    counts
}

fn jsonl<T: Serialize>(w: &mut impl Write, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut *w, &row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub struct IngestArgs {
    pub markets: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub frictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub keep_all: bool,
}

pub fn ingest(cfg: &RunConfig, a: IngestArgs, summary: &mut Summary) -> Result<OutputDir, CliError> {
    let inputs = Inputs::new(cfg, None);
    let markets_path = inputs.require(a.markets, cfg.paths.markets.as_ref(), MARKETS)?;
    let prices_path = inputs.require(a.prices, cfg.paths.prices.as_ref(), PRICES)?;
    let frictions_path = inputs.optional(a.frictions, cfg.paths.frictions.as_ref(), FRICTIONS)?;
    let out_dir = inputs.out_dir(a.out)?;

    let (parsed, corpus_diags) = load_corpus(&markets_path, summary)?;
    let frictions = load_frictions(frictions_path, summary)?;
    let (corpus, report) = if a.keep_all {
        (parsed.clone(), Default::default())
    } else {
        apply_inclusion_policy(&parsed, &cfg.policy.clone().unwrap_or_default())
    };
    let (prices, price_diags) = load_prices(&prices_path, &corpus, summary)?;

    let mut out = OutputDir::lock(&out_dir)?;
    out.write(MARKETS, |w| Ok(write_corpus(w, &corpus)?))?;
    out.write(PRICES, |w| Ok(write_price_series(w, &prices)?))?;
    out.write(FRICTIONS, |w| Ok(w.write_all(frictions.to_toml().as_bytes())?))?;
    out.write("diagnostics.jsonl", |w| {
        #[derive(Serialize)]
        struct Row<'a> {
            file: &'a str,
            #[serde(flatten)]
            diag: &'a Diagnostic,
        }
        jsonl(w, corpus_diags.iter().map(|diag| Row { file: MARKETS, diag }))?;
        jsonl(w, price_diags.iter().map(|diag| Row { file: PRICES, diag }))?;
        jsonl(
            w,
            report
                .excluded
                .iter()
                .map(|(market, reason)| serde_json::json!({"file": "policy", "market": market, "reason": reason})),
        )
    })?;
    summary.count("parsed", parsed.len());
    summary.count("markets", corpus.len());
    summary.count("excluded", report.total());
    summary.count("excluded_by_reason", &report.counts);
    summary.count("series", prices.len());
    summary.count("diagnostics", corpus_diags.len() + price_diags.len());
    Ok(out)
}

pub struct SynthArgs {
    pub out: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub seed: Option<u64>,
    pub platforms: Option<usize>,
    pub events_per_category: Option<usize>,
    pub intensity: Option<f64>,
    pub async_quotes: bool,
}

pub fn synth(cfg: &RunConfig, a: SynthArgs, summary: &mut Summary) -> Result<OutputDir, CliError> {
    let out_dir = Inputs::new(cfg, None).out_dir(a.out)?;
    let mut spec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).config(format!("reading {}", p.display()))?;
            toml::from_str::<ScenarioSpec>(&text).config(format!("parsing {}", p.display()))?
        }
        None => ScenarioSpec::default(),
    };
    spec.seed = a.seed.unwrap_or(spec.seed);
    spec.platforms = a.platforms.unwrap_or(spec.platforms);
    spec.events_per_category = a.events_per_category.unwrap_or(spec.events_per_category);
    spec.paraphrase_intensity = a.intensity.unwrap_or(spec.paraphrase_intensity);
    spec.async_quotes |= a.async_quotes;

    let gen = generate(&spec).map_err(|e| match e {
        SynthError::Spec(_) => CliError::config(e),
        e => CliError::data(e),
    })?;
    for w in &gen.warnings {
        summary.warn(w.clone());
    }
    let scenario = toml::to_string(&spec).config("serializing scenario")?;

    let mut out = OutputDir::lock(&out_dir)?;
    out.write(MARKETS, |w| Ok(write_corpus(w, &gen.corpus)?))?;
    out.write(PRICES, |w| Ok(write_price_series(w, &gen.prices)?))?;
    out.write(FRICTIONS, |w| Ok(w.write_all(gen.frictions.to_toml().as_bytes())?))?;
    out.write(TRUTH, |w| Ok(gen.truth.write(w)?))?;
    out.write(LEDGER, |w| Ok(write_opportunities(w, &gen.ledger)?))?;
    out.write("scenario.toml", |w| Ok(w.write_all(scenario.as_bytes())?))?;
    summary.count("seed", spec.seed);
    summary.count("markets", gen.corpus.len());
    summary.count("spaces", gen.truth.spaces.len());
    summary.count("relations", gen.truth.relations.len());
    summary.count("plants", gen.truth.plants.len());
    summary.count("ledger", gen.ledger.len());
    Ok(out)
}

pub struct DirArgs {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub markets: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub frictions: Option<PathBuf>,
    pub relations: Option<PathBuf>,
}

pub struct MatchArgs {
    pub dir: DirArgs,
    pub k: Option<usize>,
    pub retrieve_k: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub provider: Option<Provider>,
}

pub fn match_markets(cfg: &RunConfig, a: MatchArgs, summary: &mut Summary) -> Result<OutputDir, CliError> {
    let inputs = Inputs::new(cfg, a.dir.input);
    let markets_path = inputs.require(a.dir.markets, cfg.paths.markets.as_ref(), MARKETS)?;
    let k = cfg.k(a.k)?;
    let retrieve_k = cfg.retrieve_k(a.retrieve_k, k)?;
    let out_dir = inputs.out_dir(a.dir.out)?;
    let Provider::Deterministic = cfg.provider(a.provider);
    let truth_path = inputs.optional(a.truth, cfg.paths.truth.as_ref(), TRUTH)?.ok_or_else(|| {
        CliError::config("the deterministic verifier needs region ground truth (truth.jsonl); pass --truth or --in")
    })?;
    let truth = GroundTruth::read(open(&truth_path)?).data(format!("reading {}", truth_path.display()))?;
    let cache = match a.cache_dir.or_else(|| cfg.paths.cache_dir.clone()) {
        Some(dir) => Some(EmbeddingCache::open(&dir).data(format!("opening cache {}", dir.display()))?),
        None => None,
    };

    let (corpus, _) = load_corpus(&markets_path, summary)?;
    let markets = corpus.len();
    let m = run_match(
        corpus,
        &KeywordClassifier,
        &HashEmbedder::default(),
        cache.as_ref(),
        &truth.rule_verifier(),
        MatchParams { k, retrieve_k },
    )
    .data("matching")?;

    let mut sweep: Vec<usize> = RECALL_SWEEP.iter().copied().chain([k]).collect();
    sweep.sort_unstable();
    sweep.dedup();
    let recall = recall_report(&truth.true_relations(), &m.neighbors, &sweep).data("recall")?;
    let recall_at_k = recall.iter().find(|(rk, _)| *rk == k).map(|r| r.1);

    if !m.unclassified.is_empty() {
        summary.warn(format!("{} markets left without a category", m.unclassified.len()));
    }
    if !m.embed_errors.is_empty() {
        summary.warn(format!("{} markets failed to embed", m.embed_errors.len()));
    }
    if !m.unverified.is_empty() {
        summary.warn(format!("{} candidate pairs could not be verified", m.unverified.len()));
    }

    let mut out = OutputDir::lock(&out_dir)?;
    out.write(RELATIONS, |w| Ok(crossprice::align::write_relations(w, &m.relations)?))?;
    out.write(RECALL, |w| Ok(write_recall_csv(w, &recall)?))?;
    let equivalent = m.relations.iter().filter(|r| r.kind == RelationKind::Equivalent).count();
    summary.count("markets", markets);
    summary.count("classified", m.classified);
    summary.count("candidates", m.candidates.len());
    summary.count("equivalent", equivalent);
    summary.count("subset", m.relations.len() - equivalent);
    summary.count("independent", m.independent);
    summary.count("unverified", m.unverified.len());
    summary.count("cache_hits", m.cache_hits);
    summary.count("provider_calls", m.provider_calls);
    summary.count("recall_at_k", recall_at_k);
    summary.count("graph", m.graph.stats());
    Ok(out)
}

struct Loaded {
    corpus: Corpus,
    prices: Vec<PriceSeries>,
    frictions: FrictionModel,
    relations: Vec<SemanticRelation>,
}

fn load_priced(cfg: &RunConfig, inputs: &Inputs, d: &mut DirArgs, summary: &mut Summary) -> Result<Loaded, CliError> {
    let markets = inputs.require(d.markets.take(), cfg.paths.markets.as_ref(), MARKETS)?;
    let prices = inputs.require(d.prices.take(), cfg.paths.prices.as_ref(), PRICES)?;
    let relations = inputs.require(d.relations.take(), cfg.paths.relations.as_ref(), RELATIONS)?;
    let frictions = inputs.optional(d.frictions.take(), cfg.paths.frictions.as_ref(), FRICTIONS)?;
    let (corpus, _) = load_corpus(&markets, summary)?;
    let (prices, _) = load_prices(&prices, &corpus, summary)?;
    Ok(Loaded {
        frictions: load_frictions(frictions, summary)?,
        relations: load_relations(&relations)?,
        corpus,
        prices,
    })
}

pub struct DetectArgs {
    pub dir: DirArgs,
    pub staleness: Option<Duration>,
}

pub fn detect_opportunities(cfg: &RunConfig, mut a: DetectArgs, summary: &mut Summary) -> Result<OutputDir, CliError> {
    let inputs = Inputs::new(cfg, a.dir.input.take());
    let staleness = cfg.staleness(a.staleness)?;
    let limits = cfg.partition_limits()?;
    let out_dir = inputs.out_dir(a.dir.out.take())?;
    let data = load_priced(cfg, &inputs, &mut a.dir, summary)?;

    let graph = build_relation_graph(&data.relations);
    let plan = plan_detection(&graph, &data.corpus, limits);
    let report = detect(&data.corpus, &data.prices, &plan, &data.frictions, staleness).map_err(|e| pipeline_error("detect", e))?;
    if report.joins == 0 && report.missed_joins > 0 {
        summary.warn(format!(
            "no cross-venue bundle had all legs quoted within the {}s staleness window ({} attempts); \
             quotes may be asynchronous",
            staleness.num_seconds(),
            report.missed_joins
        ));
    }

    let mut out = OutputDir::lock(&out_dir)?;
    out.write(OPPORTUNITIES, |w| Ok(write_opportunities(w, &report.opportunities)?))?;
    summary.count("staleness_secs", staleness.num_seconds());
    summary.count("equivalent_pairs", plan.equivalent.len());
    summary.count("subset_pairs", plan.subsets.len());
    summary.count("partitions", plan.partitions.len());
    summary.count("timestamps", report.timestamps);
    summary.count("joins", report.joins);
    summary.count("missed_joins", report.missed_joins);
    summary.count("opportunities", report.opportunities.len());
    summary.count("by_kind", by_kind(&report.opportunities));
    Ok(out)
}

pub struct AnalyzeArgs {
    pub dir: DirArgs,
    pub staleness: Option<Duration>,
    pub persistence: Option<Duration>,
    pub case_study: Option<String>,
}

pub fn analyze(cfg: &RunConfig, mut a: AnalyzeArgs, summary: &mut Summary) -> Result<OutputDir, CliError> {
    let inputs = Inputs::new(cfg, a.dir.input.take());
    let staleness = cfg.staleness(a.staleness)?;
    let persistence = cfg.persistence(a.persistence)?;
    let limits = cfg.partition_limits()?;
    let out_dir = inputs.out_dir(a.dir.out.take())?;
    let data = load_priced(cfg, &inputs, &mut a.dir, summary)?;

    let graph = build_relation_graph(&data.relations);
    let plan = plan_detection(&graph, &data.corpus, limits);
    let series = relation_series(&data.corpus, &data.prices, &plan, &data.frictions, staleness)
        .map_err(|e| pipeline_error("deviation series", e))?;
    let mut rows: Vec<YieldStats> = Vec::with_capacity(series.len());
    for rs in &series {
        let legs: Vec<_> = rs.legs.iter().filter_map(|id| data.corpus.get(id)).collect();
        rows.push(yield_stats(&rs.series, &legs, rs.settle).data(format!("metrics for {}", rs.series.relation_id))?);
    }
    let unjoined = plan.equivalent.len() + plan.subsets.len() - series.len();
    if unjoined > 0 {
        summary.warn(format!("{unjoined} relations never had both legs quoted within the staleness window"));
    }

    let pair = match &a.case_study {
        Some(id) => Some(parse_pair(id)?),
        None => rows
            .iter()
            .filter(|r| r.kind == OpportunityKind::CrossConditional)
            .max_by(|x, y| x.max_dev_1h.cmp(&y.max_dev_1h).then_with(|| y.relation_id.cmp(&x.relation_id)))
            .map(|r| parse_pair(&r.relation_id))
            .transpose()?,
    };
    let spread = pair.as_ref().map(|(x, y)| {
        let joined = joined_prices(&data.prices, x, y, staleness);
        rolling_spread(&joined, CASE_WINDOW, persistence)
    });

    let mut out = OutputDir::lock(&out_dir)?;
    out.write(METRICS, |w| Ok(write_metrics(w, &rows)?))?;
    match (&pair, &spread) {
        (Some((x, y)), Some(points)) => {
            if points.is_empty() {
                summary.warn(format!("case study {x}|{y}: the pair never joined"));
            }
            out.write(CASE_STUDY, |w| Ok(write_rolling_spread(w, points)?))?;
            summary.count("case_study", format!("{x}|{y}"));
        }
        _ => summary.warn("no equivalent pair to export as a case study"),
    }
    summary.count("relations", rows.len());
    summary.count("in_arb", rows.iter().filter(|r| r.time_in_arb > 0.0).count());
    summary.count("persistence_secs", persistence.num_seconds());
    Ok(out)
}

fn parse_pair(id: &str) -> Result<(MarketId, MarketId), CliError> {
    let parse = |s: &str| s.trim().parse::<MarketId>().config(format!("case study {id:?}"));
    let (a, b) = id
        .split_once('|')
        .ok_or_else(|| CliError::config(format!("case study {id:?}: expected `market|market`")))?;
    Ok((parse(a)?, parse(b)?))
}

pub struct BacktestArgs {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub markets: Option<PathBuf>,
    pub opportunities: Option<PathBuf>,
    pub basis: CapitalBasis,
}

pub fn backtest(cfg: &RunConfig, a: BacktestArgs, summary: &mut Summary) -> Result<OutputDir, CliError> {
    let inputs = Inputs::new(cfg, a.input);
    let markets = inputs.require(a.markets, cfg.paths.markets.as_ref(), MARKETS)?;
    let opps_path = inputs.require(a.opportunities, None, OPPORTUNITIES)?;
    let out_dir = inputs.out_dir(a.out)?;
    let (corpus, _) = load_corpus(&markets, summary)?;
    let opps = read_opportunities(open(&opps_path)?).data(format!("reading {}", opps_path.display()))?;
    let resolution: BTreeMap<MarketId, _> = corpus.iter().map(|m| (m.id.clone(), m.resolution_time)).collect();
    let result = backtest_naive(&opps, &resolution, a.basis).data("backtest")?;

    let mut out = OutputDir::lock(&out_dir)?;
    out.write(TRADES, |w| Ok(write_trades(w, &result.trades)?))?;
    summary.count("opportunities", opps.len());
    summary.count("trades", result.trades.len());
    summary.count("cumulative_return", result.cumulative_return);
    Ok(out)
}

pub struct ReportArgs {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub trades: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct KindSummary {
    kind: OpportunityKind,
    relations: usize,
    in_arb: usize,
    median_eff_liquidity: f64,
    median_max_dev_1h: String,
    median_median_dev: String,
    max_max_dev_1h: String,
    max_apy_worst: f64,
    mean_time_in_arb: f64,
}

fn median<T: Clone + Ord>(mut v: Vec<T>) -> Option<T> {
    v.sort();
    (!v.is_empty()).then(|| v[(v.len() - 1) / 2].clone())
}

fn summarize(kind: OpportunityKind, rows: &[&YieldStats]) -> KindSummary {
    let text = |v: Option<crossprice::Fixed>| v.map(|f| f.to_string()).unwrap_or_default();
    let mut liq: Vec<f64> = rows.iter().map(|r| r.eff_liquidity).collect();
    liq.sort_by(f64::total_cmp);
    KindSummary {
        kind,
        relations: rows.len(),
        in_arb: rows.iter().filter(|r| r.time_in_arb > 0.0).count(),
        median_eff_liquidity: liq.get(liq.len().saturating_sub(1) / 2).copied().unwrap_or(0.0),
        median_max_dev_1h: text(median(rows.iter().map(|r| r.max_dev_1h).collect())),
        median_median_dev: text(median(rows.iter().map(|r| r.median_dev).collect())),
        max_max_dev_1h: text(rows.iter().map(|r| r.max_dev_1h).max()),
        max_apy_worst: rows.iter().map(|r| r.max_apy_worst).fold(0.0, f64::max),
        mean_time_in_arb: if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| r.time_in_arb).sum::<f64>() / rows.len() as f64
        },
    }
}

pub fn report(cfg: &RunConfig, a: ReportArgs, summary: &mut Summary) -> Result<OutputDir, CliError> {
    let inputs = Inputs::new(cfg, a.input);
    let metrics_path = inputs.require(a.metrics, None, METRICS)?;
    let trades_path = inputs.optional(a.trades, None, TRADES)?;
    let out_dir = inputs.out_dir(a.out)?;
    let rows = read_metrics(open(&metrics_path)?).data(format!("reading {}", metrics_path.display()))?;
    let trade_returns: Option<Vec<f64>> = match &trades_path {
        Some(p) => Some(read_trade_returns(p).map_err(|e| CliError::data(format!("{e:#}")))?),
        None => None,
    };

    let mut grouped: BTreeMap<OpportunityKind, Vec<&YieldStats>> = BTreeMap::new();
    for r in &rows {
        grouped.entry(r.kind).or_default().push(r);
    }
    let kinds: Vec<KindSummary> = grouped.iter().map(|(k, v)| summarize(*k, v)).collect();
    let text = render_report(&rows, &kinds, trade_returns.as_deref());

    let mut out = OutputDir::lock(&out_dir)?;
    out.write("report.txt", |w| Ok(w.write_all(text.as_bytes())?))?;
    out.write("report.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        for k in &kinds {
            csv.serialize(k)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    summary.count("relations", rows.len());
    summary.count("kinds", kinds.len());
    if let Some(r) = &trade_returns {
        summary.count("trades", r.len());
    }
    Ok(out)
}

fn read_trade_returns(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: serde_json::Value = serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1))?;
            v.get("return")
                .and_then(|r| r.as_f64())
                .with_context(|| format!("{} line {}: no numeric `return`", path.display(), i + 1))
        })
        .collect()
}

fn render_report(rows: &[YieldStats], kinds: &[KindSummary], trades: Option<&[f64]>) -> String {
    let mut s = String::new();
    s.push_str("Relations by kind\n");
    s.push_str(&format!(
        "{:<18} {:>9} {:>7} {:>12} {:>12} {:>12} {:>14} {:>10}\n",
        "kind", "relations", "in_arb", "med_liq", "med_dev_1h", "max_dev_1h", "max_apy_worst", "mean_tia"
    ));
    for k in kinds {
        let kind = serde_json::to_value(k.kind).expect("kind serializes");
        s.push_str(&format!(
            "{:<18} {:>9} {:>7} {:>12.2} {:>12} {:>12} {:>14.4} {:>10.4}\n",
            kind.as_str().unwrap_or_default(),
            k.relations,
            k.in_arb,
            k.median_eff_liquidity,
            k.median_max_dev_1h,
            k.max_max_dev_1h,
            k.max_apy_worst,
            k.mean_time_in_arb
        ));
    }
    let mut top: Vec<&YieldStats> = rows.iter().collect();
    top.sort_by(|a, b| b.max_dev_1h.cmp(&a.max_dev_1h).then_with(|| a.relation_id.cmp(&b.relation_id)));
    s.push_str("\nLargest one-hour persistent deviations\n");
    for r in top.iter().take(20) {
        s.push_str(&format!(
            "{:<48} {:>10} median {:>10} apy {:>12.4} tia {:.4}\n",
            r.relation_id, r.max_dev_1h, r.median_dev, r.max_apy_worst, r.time_in_arb
        ));
    }
    if let Some(returns) = trades {
        let cumulative = returns.iter().fold(1.0, |acc, r| acc * (1.0 + r)) - 1.0;
        s.push_str(&format!("\nBacktest: {} trades, cumulative return {:.6}\n", returns.len(), cumulative));
    }
    s
}
