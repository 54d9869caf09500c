use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Deserialize;

use super::{Corpus, Diagnostic, DiagnosticKind, IngestError};
use crate::fixed::Fixed;
use crate::model::{MarketId, PriceQuote, PriceSeries};

#[derive(Debug, Deserialize)]
struct PriceRow {
    market_id: String,
    t: String,
    p_yes: String,
    p_no: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedPrices {
    /// One series per market with at least one valid row, in market-id order.
    pub series: Vec<PriceSeries>,
    pub diagnostics: Vec<Diagnostic>,
}

impl LoadedPrices {
    pub fn by_market(&self) -> BTreeMap<&MarketId, &PriceSeries> {
        self.series.iter().map(|s| (&s.market, s)).collect()
    }
}

/// Reads `market_id,t,p_yes,p_no` rows. Rows for unknown markets, with
/// out-of-range prices or outside the market's `[open, resolution]` lifetime
/// are rejected; out-of-order rows are re-sorted with a warning.
pub fn load_price_series<R: Read>(reader: R, corpus: &Corpus) -> Result<LoadedPrices, IngestError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut by_market: BTreeMap<MarketId, Vec<(usize, PriceQuote)>> = BTreeMap::new();
    let mut diagnostics = Vec::new();

    for (i, row) in csv.deserialize::<PriceRow>().enumerate() {
        let line = i + 2;
        let row = match row {
            Ok(row) => row,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                diagnostics.push(Diagnostic::new(line, DiagnosticKind::Malformed, e.to_string()));
                continue;
            }
        };
        let market_id: MarketId = match row.market_id.parse() {
            Ok(id) => id,
            Err(e) => {
                diagnostics.push(Diagnostic::new(line, DiagnosticKind::InvalidField, e.to_string()));
                continue;
            }
        };
        let Some(market) = corpus.get(&market_id) else {
            diagnostics.push(Diagnostic::new(
                line,
                DiagnosticKind::UnknownMarket,
                format!("no market {market_id} in corpus"),
            ));
            continue;
        };
        let t = match DateTime::parse_from_rfc3339(&row.t) {
            Ok(t) => t.with_timezone(&Utc),
            Err(e) => {
                diagnostics.push(Diagnostic::new(line, DiagnosticKind::InvalidField, format!("t: {e}")));
                continue;
            }
        };
        let prices = row.p_yes.parse::<Fixed>().and_then(|y| Ok((y, row.p_no.parse::<Fixed>()?)));
        let (p_yes, p_no) = match prices {
            Ok(p) => p,
            Err(e) => {
                diagnostics.push(Diagnostic::new(line, DiagnosticKind::InvalidField, e.to_string()));
                continue;
            }
        };
        let quote = match PriceQuote::new(t, p_yes, p_no) {
            Ok(q) => q,
            Err(e) => {
                diagnostics.push(Diagnostic::new(line, DiagnosticKind::OutOfRange, e.to_string()));
                continue;
            }
        };
        if t < market.open_time || t > market.resolution_time {
            diagnostics.push(Diagnostic::new(
                line,
                DiagnosticKind::OutsideLifetime,
                format!("{t} outside lifetime of {market_id}"),
            ));
            continue;
        }
        by_market.entry(market_id).or_default().push((line, quote));
    }

    let mut series = Vec::with_capacity(by_market.len());
    for (market, mut rows) in by_market {
        if rows.windows(2).any(|w| w[0].1.t > w[1].1.t) {
            diagnostics.push(Diagnostic::new(
                rows[0].0,
                DiagnosticKind::Reordered,
                format!("rows for {market} were out of time order and have been sorted"),
            ));
            rows.sort_by_key(|(line, q)| (q.t, *line));
        }
        let mut quotes: Vec<PriceQuote> = Vec::with_capacity(rows.len());
        for (line, quote) in rows {
            if quotes.last().is_some_and(|last| last.t == quote.t) {
                diagnostics.push(Diagnostic::new(
                    line,
                    DiagnosticKind::DuplicateTimestamp,
                    format!("second quote for {market} at {}", quote.t),
                ));
                continue;
            }
            quotes.push(quote);
        }
        series.push(PriceSeries::new(market, quotes).expect("sorted and deduplicated"));
    }
    diagnostics.sort_by_key(|d| d.line);
    Ok(LoadedPrices { series, diagnostics })
}

pub fn write_price_series<W: Write>(writer: W, series: &[PriceSeries]) -> Result<(), IngestError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["market_id", "t", "p_yes", "p_no"])?;
    for s in series {
        let id = s.market.to_string();
        for q in &s.quotes {
            csv.write_record([
                id.as_str(),
                &q.t.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                &q.p_yes.to_string(),
                &q.p_no.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_corpus;

    fn corpus() -> Corpus {
        let line = r#"{"id":"a","platform":"kalshi","event_id":"e","title":"t","description":"d","open_time":"2024-01-01T00:00:00Z","close_time":"2024-02-01T00:00:00Z","resolution_time":"2024-02-02T00:00:00Z","volume_usd":"1000","mechanism":"clob"}"#;
        parse_corpus(line.as_bytes()).unwrap().corpus
    }

    fn load(body: &str) -> LoadedPrices {
        let text = format!("market_id,t,p_yes,p_no\n{body}");
        load_price_series(text.as_bytes(), &corpus()).unwrap()
    }

    #[test]
    fn two_ordered_rows() {
        let loaded = load("kalshi:a,2024-01-02T00:00:00Z,0.4,0.6\nkalshi:a,2024-01-02T01:00:00Z,0.41,0.59\n");
        assert_eq!(loaded.series.len(), 1);
        assert_eq!(loaded.series[0].quotes.len(), 2);
        assert!(loaded.diagnostics.is_empty());
    }

    #[test]
    fn out_of_order_rows_are_sorted_with_warning() {
        let loaded = load("kalshi:a,2024-01-02T01:00:00Z,0.41,0.59\nkalshi:a,2024-01-02T00:00:00Z,0.4,0.6\n");
        let quotes = &loaded.series[0].quotes;
        assert!(quotes[0].t < quotes[1].t);
        assert_eq!(loaded.diagnostics.len(), 1);
        assert!(loaded.diagnostics[0].kind.is_warning());
    }

    #[test]
    fn invalid_rows_rejected() {
        let loaded = load(concat!(
            "kalshi:a,2024-01-02T00:00:00Z,1.2,0.6\n",
            "kalshi:a,2023-12-31T00:00:00Z,0.4,0.6\n",
            "kalshi:zzz,2024-01-02T00:00:00Z,0.4,0.6\n",
            "kalshi:a,not-a-time,0.4,0.6\n",
            "kalshi:a,2024-01-03T00:00:00Z,0.4,0.6\n",
            "kalshi:a,2024-01-03T00:00:00Z,0.5,0.5\n",
        ));
        let kinds: Vec<DiagnosticKind> = loaded.diagnostics.iter().map(|d| d.kind).collect();
        assert_eq!(
            kinds,
            [
                DiagnosticKind::OutOfRange,
                DiagnosticKind::OutsideLifetime,
                DiagnosticKind::UnknownMarket,
                DiagnosticKind::InvalidField,
                DiagnosticKind::DuplicateTimestamp,
            ]
        );
        assert_eq!(loaded.series[0].quotes.len(), 1);
    }

    #[test]
    fn write_then_load() {
        let loaded = load("kalshi:a,2024-01-02T00:00:00Z,0.4,0.6\n");
        let mut out = Vec::new();
        write_price_series(&mut out, &loaded.series).unwrap();
        let again = load_price_series(out.as_slice(), &corpus()).unwrap();
        assert_eq!(again.series, loaded.series);
    }
}
