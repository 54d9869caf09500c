use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{Diagnostic, DiagnosticKind, IngestError};
use crate::fixed::Fixed;
use crate::model::{
    BinaryMarket, CategoryId, EventId, Mechanism, MarketId, PlatformId, Timestamp,
};

const KNOWN_KEYS: &[&str] = &[
    "id",
    "platform",
    "event_id",
    "title",
    "description",
    "category",
    "open_time",
    "close_time",
    "resolution_time",
    "volume_usd",
    "mechanism",
    "resolution_meta",
    "outcome_labels",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("duplicate market id {0}")]
    Duplicate(MarketId),
}

/// Immutable market set ordered by `(platform, id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    markets: Vec<BinaryMarket>,
    index: HashMap<MarketId, usize>,
}

impl Corpus {
    pub fn new(mut markets: Vec<BinaryMarket>) -> Result<Self, CorpusError> {
        markets.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = markets.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CorpusError::Duplicate(w[0].id.clone()));
        }
        let index = markets
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.clone(), i))
            .collect();
        Ok(Corpus { markets, index })
    }

    pub fn markets(&self) -> &[BinaryMarket] {
        &self.markets
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BinaryMarket> {
        self.markets.iter()
    }

    pub fn len(&self) -> usize {
        self.markets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markets.is_empty()
    }

    pub fn get(&self, id: &MarketId) -> Option<&BinaryMarket> {
        self.index.get(id).map(|&i| &self.markets[i])
    }

    pub fn position(&self, id: &MarketId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn into_markets(self) -> Vec<BinaryMarket> {
        self.markets
    }

    /// Markets grouped by `(platform, event)`, in id order within each group.
    pub fn events(&self) -> BTreeMap<(PlatformId, EventId), Vec<&BinaryMarket>> {
        let mut groups: BTreeMap<(PlatformId, EventId), Vec<&BinaryMarket>> = BTreeMap::new();
        for market in &self.markets {
            groups
                .entry((market.platform().clone(), market.event.clone()))
                .or_default()
                .push(market);
        }
        groups
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub corpus: Corpus,
    pub diagnostics: Vec<Diagnostic>,
}

enum RecordError {
    Missing(DiagnosticKind, String),
    Invalid(String),
    Inconsistent(String),
}

impl RecordError {
    fn into_diagnostic(self, line: usize) -> Diagnostic {
        match self {
            RecordError::Missing(kind, msg) => Diagnostic::new(line, kind, msg),
            RecordError::Invalid(msg) => Diagnostic::new(line, DiagnosticKind::InvalidField, msg),
            RecordError::Inconsistent(msg) => {
                Diagnostic::new(line, DiagnosticKind::Inconsistent, msg)
            }
        }
    }
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, RecordError> {
    match obj.get(key) {
        Some(Value::Null) | None => {
            let kind = if key.ends_with("_time") {
                DiagnosticKind::MissingTemporal
            } else {
                DiagnosticKind::MissingField
            };
            let msg = if kind == DiagnosticKind::MissingTemporal {
                format!("missing temporal information: `{key}`")
            } else {
                format!("missing required key `{key}`")
            };
            Err(RecordError::Missing(kind, msg))
        }
        Some(v) => Ok(v),
    }
}

fn text(value: &Value, key: &str) -> Result<String, RecordError> {
    match value {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(RecordError::Invalid(format!("`{key}` must be a string"))),
    }
}

fn timestamp(value: &Value, key: &str) -> Result<Timestamp, RecordError> {
    let raw = value
        .as_str()
        .ok_or_else(|| RecordError::Invalid(format!("`{key}` must be an ISO-8601 string")))?;
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| RecordError::Invalid(format!("`{key}`: {e}")))
}

fn fixed(value: &Value, key: &str) -> Result<Fixed, RecordError> {
    serde_json::from_value(value.clone()).map_err(|e| RecordError::Invalid(format!("`{key}`: {e}")))
}

fn market_from_record(obj: &Map<String, Value>) -> Result<BinaryMarket, RecordError> {
    let open_time = timestamp(required(obj, "open_time")?, "open_time")?;
    let close_time = timestamp(required(obj, "close_time")?, "close_time")?;
    let resolution_time = match obj.get("resolution_time") {
        None | Some(Value::Null) => close_time,
        Some(v) => timestamp(v, "resolution_time")?,
    };

    let platform = PlatformId::new(text(required(obj, "platform")?, "platform")?)
        .map_err(|e| RecordError::Invalid(e.to_string()))?;
    let id = MarketId::new(platform, text(required(obj, "id")?, "id")?)
        .map_err(|e| RecordError::Invalid(e.to_string()))?;
    let event = EventId(text(required(obj, "event_id")?, "event_id")?);
    let title = text(required(obj, "title")?, "title")?;
    let description = text(required(obj, "description")?, "description")?;
    let volume_usd = fixed(required(obj, "volume_usd")?, "volume_usd")?;
    let mechanism: Mechanism = text(required(obj, "mechanism")?, "mechanism")?
        .parse()
        .map_err(RecordError::Invalid)?;

    let category = match obj.get("category") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let raw = v
                .as_i64()
                .ok_or_else(|| RecordError::Invalid("`category` must be an integer".into()))?;
            Some(CategoryId::new(raw).map_err(|e| RecordError::Invalid(e.to_string()))?)
        }
    };

    let resolution_meta = match obj.get("resolution_meta") {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(Value::Object(map)) => map
            .iter()
            .map(|(k, v)| Ok((k.clone(), text(v, "resolution_meta")?)))
            .collect::<Result<_, RecordError>>()?,
        Some(_) => return Err(RecordError::Invalid("`resolution_meta` must be an object".into())),
    };

    let outcome_labels = match obj.get("outcome_labels") {
        None | Some(Value::Null) => ("Yes".to_string(), "No".to_string()),
        Some(Value::Array(items)) if items.len() == 2 => (
            text(&items[0], "outcome_labels")?,
            text(&items[1], "outcome_labels")?,
        ),
        Some(_) => {
            return Err(RecordError::Invalid(
                "`outcome_labels` must be a two-element array".into(),
            ))
        }
    };

    let extra = obj
        .iter()
        .filter(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    let market = BinaryMarket {
        id,
        event,
        title,
        description,
        category,
        mechanism,
        open_time,
        close_time,
        resolution_time,
        volume_usd,
        outcome_labels,
        resolution_meta,
        extra,
    };
    market
        .validate()
        .map_err(|e| RecordError::Inconsistent(e.to_string()))?;
    Ok(market)
}

/// Reads line-delimited market records. Malformed or invalid lines become
/// diagnostics; only an unreadable stream is fatal.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<ParsedCorpus, IngestError> {
    let mut markets: Vec<BinaryMarket> = Vec::new();
    let mut seen: HashMap<MarketId, usize> = HashMap::new();
    let mut diagnostics = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                diagnostics.push(Diagnostic::new(line_no, DiagnosticKind::Malformed, e.to_string()));
                continue;
            }
        };
        let Value::Object(obj) = value else {
            diagnostics.push(Diagnostic::new(
                line_no,
                DiagnosticKind::Malformed,
                "record is not a JSON object",
            ));
            continue;
        };
        match market_from_record(&obj) {
            Ok(market) => {
                if let Some(first) = seen.get(&market.id) {
                    diagnostics.push(Diagnostic::new(
                        line_no,
                        DiagnosticKind::DuplicateId,
                        format!("{} already defined on line {first}", market.id),
                    ));
                    continue;
                }
                seen.insert(market.id.clone(), line_no);
                markets.push(market);
            }
            Err(e) => diagnostics.push(e.into_diagnostic(line_no)),
        }
    }

    let corpus = Corpus::new(markets).expect("duplicates removed above");
    Ok(ParsedCorpus {
        corpus,
        diagnostics,
    })
}

fn format_time(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub(crate) fn market_to_record(market: &BinaryMarket) -> Map<String, Value> {
    let mut obj: Map<String, Value> = market
        .extra
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    obj.insert("id".into(), market.id.local().into());
    obj.insert("platform".into(), market.platform().as_str().into());
    obj.insert("event_id".into(), market.event.0.clone().into());
    obj.insert("title".into(), market.title.clone().into());
    obj.insert("description".into(), market.description.clone().into());
    if let Some(category) = market.category {
        obj.insert("category".into(), category.get().into());
    }
    obj.insert("open_time".into(), format_time(&market.open_time).into());
    obj.insert("close_time".into(), format_time(&market.close_time).into());
    obj.insert("resolution_time".into(), format_time(&market.resolution_time).into());
    obj.insert("volume_usd".into(), market.volume_usd.to_string().into());
    obj.insert("mechanism".into(), market.mechanism.to_string().into());
    obj.insert(
        "resolution_meta".into(),
        Value::Object(
            market
                .resolution_meta
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        ),
    );
    obj.insert(
        "outcome_labels".into(),
        Value::Array(vec![
            market.outcome_labels.0.clone().into(),
            market.outcome_labels.1.clone().into(),
        ]),
    );
    obj
}

/// Writes one record per line in corpus order with sorted keys.
pub fn write_corpus<W: Write>(mut writer: W, corpus: &Corpus) -> Result<(), IngestError> {
    for market in corpus.iter() {
        serde_json::to_writer(&mut writer, &Value::Object(market_to_record(market)))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(id: &str, platform: &str) -> String {
        format!(
            r#"{{"id":"{id}","platform":"{platform}","event_id":"ev-{id}","title":"Will X happen?","description":"Resolves YES if X happens.","category":8,"open_time":"2024-01-01T00:00:00Z","close_time":"2024-03-01T00:00:00Z","volume_usd":"1200.5","mechanism":"clob","resolution_meta":{{"source":"AP"}}}}"#
        )
    }

    fn parse(text: &str) -> ParsedCorpus {
        parse_corpus(text.as_bytes()).unwrap()
    }

    #[test]
    fn three_valid_lines() {
        let input = [line("b", "kalshi"), line("a", "polymarket"), line("a", "kalshi")].join("\n");
        let parsed = parse(&input);
        assert_eq!(parsed.corpus.len(), 3);
        assert!(parsed.diagnostics.is_empty());
        let ids: Vec<String> = parsed.corpus.iter().map(|m| m.id.to_string()).collect();
        assert_eq!(ids, ["kalshi:a", "kalshi:b", "polymarket:a"]);
        let first = &parsed.corpus.markets()[0];
        assert_eq!(first.resolution_time, first.close_time);
        assert_eq!(first.volume_usd, "1200.5".parse().unwrap());
    }

    #[test]
    fn missing_close_time_is_a_temporal_diagnostic() {
        let input = line("a", "kalshi").replace(r#""close_time":"2024-03-01T00:00:00Z","#, "");
        let parsed = parse(&input);
        assert!(parsed.corpus.is_empty());
        assert_eq!(parsed.diagnostics.len(), 1);
        assert_eq!(parsed.diagnostics[0].kind, DiagnosticKind::MissingTemporal);
        assert!(parsed.diagnostics[0].message.contains("missing temporal information"));
    }

    #[test]
    fn duplicate_id_rejected_on_second_occurrence() {
        let input = [line("a", "kalshi"), line("a", "kalshi")].join("\n");
        let parsed = parse(&input);
        assert_eq!(parsed.corpus.len(), 1);
        assert_eq!(parsed.diagnostics[0].kind, DiagnosticKind::DuplicateId);
        assert_eq!(parsed.diagnostics[0].line, 2);
    }

    #[test]
    fn bad_lines_are_non_fatal() {
        let input = [
            "{not json".to_string(),
            "[1,2]".to_string(),
            line("a", "kalshi").replace("\"category\":8", "\"category\":42"),
            line("b", "kalshi").replace("2024-01-01", "2024-05-01"),
            line("c", "kalshi").replace(r#""title":"Will X happen?","#, ""),
            line("d", "kalshi"),
        ]
        .join("\n");
        let parsed = parse(&input);
        assert_eq!(parsed.corpus.len(), 1);
        let kinds: Vec<DiagnosticKind> = parsed.diagnostics.iter().map(|d| d.kind).collect();
        assert_eq!(
            kinds,
            [
                DiagnosticKind::Malformed,
                DiagnosticKind::Malformed,
                DiagnosticKind::InvalidField,
                DiagnosticKind::Inconsistent,
                DiagnosticKind::MissingField,
            ]
        );
    }

    #[test]
    fn unknown_keys_pass_through() {
        let input = line("a", "kalshi").replace("\"title\"", "\"ticker\":\"PRES\",\"title\"");
        let parsed = parse(&input);
        let market = &parsed.corpus.markets()[0];
        assert_eq!(market.extra.get("ticker"), Some(&Value::String("PRES".into())));
        let mut out = Vec::new();
        write_corpus(&mut out, &parsed.corpus).unwrap();
        assert!(String::from_utf8(out).unwrap().contains("\"ticker\":\"PRES\""));
    }

    fn arb_market() -> impl Strategy<Value = BinaryMarket> {
        (
            "[a-z]{3,8}",
            "[A-Za-z0-9-]{1,10}",
            "[ -~]{0,40}",
            "[ -~]{0,80}",
            prop::option::of(1i64..=20),
            0i64..1_000_000,
            1i64..1_000_000,
            0i64..100_000,
            0i64..10_000_000_000,
            prop::collection::btree_map("[a-z_]{1,8}", "[ -~]{0,12}", 0..3),
            prop_oneof![Just(Mechanism::Clob), Just(Mechanism::Cpmm), Just(Mechanism::Lmsr)],
        )
            .prop_map(
                |(platform, local, title, description, category, open, len, extra_res, volume, meta, mechanism)| {
                    let base = DateTime::from_timestamp(1_600_000_000, 0).unwrap();
                    let open_time = base + chrono::Duration::seconds(open);
                    let close_time = open_time + chrono::Duration::seconds(len);
                    BinaryMarket {
                        id: MarketId::new(PlatformId::new(platform).unwrap(), local).unwrap(),
                        event: EventId("ev".into()),
                        title,
                        description,
                        category: category.map(|c| CategoryId::new(c).unwrap()),
                        mechanism,
                        open_time,
                        close_time,
                        resolution_time: close_time + chrono::Duration::seconds(extra_res),
                        volume_usd: Fixed::from_micros(volume),
                        outcome_labels: ("Yes".into(), "No".into()),
                        resolution_meta: meta,
                        extra: BTreeMap::new(),
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn parse_inverts_write(markets in prop::collection::vec(arb_market(), 0..12)) {
            let mut unique = BTreeMap::new();
            for m in markets {
                unique.entry(m.id.clone()).or_insert(m);
            }
            let corpus = Corpus::new(unique.into_values().collect()).unwrap();
            let mut out = Vec::new();
            write_corpus(&mut out, &corpus).unwrap();
            let parsed = parse_corpus(out.as_slice()).unwrap();
            prop_assert!(parsed.diagnostics.is_empty());
            prop_assert_eq!(parsed.corpus, corpus);
        }
    }
}
