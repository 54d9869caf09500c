use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{BinaryMarket, CategoryId};

/// A provider answered, but not in the agreed format. The raw payload is kept.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("protocol error: {message} (raw payload: {raw:?})")]
pub struct ProtocolError {
    pub message: String,
    pub raw: String,
}

impl ProtocolError {
    pub fn new(message: impl Into<String>, raw: &str) -> Self {
        ProtocolError {
            message: message.into(),
            raw: raw.to_string(),
        }
    }
}

/// A provider could not be reached or failed to answer.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("provider failure: {0}")]
pub struct ProviderError(pub String);

/// A single category number, nothing else.
pub fn parse_category(raw: &str) -> Result<CategoryId, ProtocolError> {
    let value: i64 = raw
        .trim()
        .parse()
        .map_err(|_| ProtocolError::new("expected a category number", raw))?;
    CategoryId::new(value).map_err(|e| ProtocolError::new(e.to_string(), raw))
}

/// `Line 1: 1 or 0`, `Line 2: reason`. The reason may be omitted.
pub fn parse_binary_verdict(raw: &str) -> Result<(bool, String), ProtocolError> {
    let mut lines = raw.lines().map(str::trim).filter(|l| !l.is_empty());
    let verdict = match lines.next() {
        Some("1") => true,
        Some("0") => false,
        _ => return Err(ProtocolError::new("first line must be 1 or 0", raw)),
    };
    let reason = lines.next().unwrap_or_default().to_string();
    if lines.next().is_some() {
        return Err(ProtocolError::new("more than two lines", raw));
    }
    Ok((verdict, reason))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlausibleClass {
    Equivalent,
    Subset,
}

/// Lines of `<rank>,<classification>` for the candidates judged related.
/// Ranks are 1-based positions in the candidate list.
pub fn parse_plausibility(raw: &str, candidates: usize) -> Result<Vec<(usize, PlausibleClass)>, ProtocolError> {
    let mut out = Vec::new();
    for line in raw.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (rank, class) = line
            .split_once(',')
            .ok_or_else(|| ProtocolError::new(format!("line `{line}` is not `<rank>,<classification>`"), raw))?;
        let rank: usize = rank
            .trim()
            .parse()
            .map_err(|_| ProtocolError::new(format!("bad rank in `{line}`"), raw))?;
        if rank == 0 || rank > candidates {
            return Err(ProtocolError::new(format!("rank {rank} outside 1..={candidates}"), raw));
        }
        let class = match class.trim().to_ascii_lowercase().as_str() {
            "equivalent" => PlausibleClass::Equivalent,
            "subset" => PlausibleClass::Subset,
            other => return Err(ProtocolError::new(format!("unknown classification `{other}`"), raw)),
        };
        out.push((rank, class));
    }
    Ok(out)
}

/// Prompt templates for remote text models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub category: String,
    pub plausibility: String,
    pub equivalence: String,
    pub subset: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            category: include_str!("../../prompts/category.txt").into(),
            plausibility: include_str!("../../prompts/plausibility.txt").into(),
            equivalence: include_str!("../../prompts/equivalence.txt").into(),
            subset: include_str!("../../prompts/subset.txt").into(),
        }
    }
}

impl PromptSet {
    /// Reads `category.txt`, `plausibility.txt`, `equivalence.txt` and `subset.txt`.
    pub fn load(dir: &Path) -> std::io::Result<Self> {
        let read = |name: &str| fs::read_to_string(dir.join(name));
        Ok(PromptSet {
            category: read("category.txt")?,
            plausibility: read("plausibility.txt")?,
            equivalence: read("equivalence.txt")?,
            subset: read("subset.txt")?,
        })
    }

    pub fn category_prompt(&self, description: &str) -> String {
        self.category.replace("{description}", description)
    }

    pub fn plausibility_prompt(&self, target: &BinaryMarket, candidates: &[&BinaryMarket]) -> String {
        let listed: Vec<String> = candidates
            .iter()
            .enumerate()
            .map(|(i, m)| format!("{}. {}", i + 1, market_document(m).replace('\n', " ")))
            .collect();
        self.plausibility
            .replace("{target_document_text}", &market_document(target))
            .replace("{similar_documents_text}", &listed.join("\n"))
    }

    pub fn equivalence_prompt(&self, reference: &BinaryMarket, candidate: &BinaryMarket) -> String {
        self.equivalence
            .replace("{REFERENCE}", &market_document(reference))
            .replace("{CANDIDATE}", &market_document(candidate))
    }

    /// `superset` is the reference event.
    pub fn subset_prompt(&self, superset: &BinaryMarket, subset: &BinaryMarket) -> String {
        self.subset
            .replace("{REFERENCE}", &market_document(superset))
            .replace("{CANDIDATE}", &market_document(subset))
    }
}

/// Everything a verifier may look at: text, outcomes, timing and resolution metadata.
pub fn market_document(m: &BinaryMarket) -> String {
    let mut doc = format!(
        "Title: {}\nDescription: {}\nOutcomes: {} | {}\nCloses: {}\nResolves: {}",
        m.title,
        m.description,
        m.outcome_labels.0,
        m.outcome_labels.1,
        m.close_time.to_rfc3339(),
        m.resolution_time.to_rfc3339()
    );
    for (k, v) in &m.resolution_meta {
        doc.push_str(&format!("\n{k}: {v}"));
    }
    doc
}
