use super::protocol::{parse_category, ProviderError};
use super::AlignError;
use crate::model::{BinaryMarket, CategoryId};

/// Text classifier over the twenty-category taxonomy. Implementations return
/// the raw answer; parsing happens in [`classify_category`].
pub trait CategoryClassifier {
    fn tag(&self) -> &str;
    fn classify_raw(&self, description: &str) -> Result<String, ProviderError>;
}

pub const CATEGORY_LABELS: [&str; 20] = [
    "Markets & Trading",
    "Economics & Policy",
    "Technology & Software",
    "Digital Platforms",
    "AI & Computing",
    "Digital Assets",
    "Blockchain & Web3",
    "Elections & Politics",
    "Governance & Policy",
    "International Diplomacy",
    "Conflicts & Security",
    "Media & Entertainment",
    "Society & Culture",
    "Legal & Justice",
    "Health & Medical",
    "Environment & Climate",
    "Sports",
    "Gaming & E-Sports",
    "Science & Research",
    "Space & Exploration",
];

const KEYWORDS: [(u8, &[&str]); 20] = [
    (1, &["stock", "stocks", "s&p", "nasdaq", "dow", "ipo", "shares", "earnings", "market cap", "index"]),
    (2, &["fed", "federal reserve", "rates", "rate", "inflation", "cpi", "gdp", "recession", "unemployment", "ecb", "tariff"]),
    (3, &["apple", "iphone", "microsoft", "software", "chip", "nvidia", "hardware", "tesla"]),
    (4, &["twitter", "tiktok", "youtube", "instagram", "facebook", "social media", "app store", "followers"]),
    (5, &["ai", "openai", "gpt", "model", "llm", "artificial intelligence", "machine learning", "agi"]),
    (6, &["bitcoin", "btc", "ethereum", "eth", "solana", "token", "crypto", "nft", "memecoin"]),
    (7, &["blockchain", "defi", "web3", "layer 2", "staking", "etf approval", "protocol"]),
    (8, &["election", "presidential", "president", "senate", "house", "primary", "nominee", "vote", "ballot", "governor", "mayor", "wins"]),
    (9, &["bill", "law", "legislation", "regulation", "executive order", "congress", "government", "shutdown", "cabinet"]),
    (10, &["treaty", "summit", "diplomatic", "ceasefire talks", "sanctions", "un", "nato", "ambassador"]),
    (11, &["war", "invasion", "military", "strike", "missile", "troops", "attack", "conflict"]),
    (12, &["movie", "film", "oscar", "grammy", "album", "box office", "celebrity", "netflix", "show"]),
    (13, &["population", "survey", "cultural", "religion", "pope", "census", "trend"]),
    (14, &["court", "trial", "verdict", "judge", "lawsuit", "indicted", "supreme court", "convicted", "sentence"]),
    (15, &["covid", "vaccine", "fda", "disease", "pandemic", "outbreak", "drug", "health", "measles"]),
    (16, &["temperature", "climate", "hurricane", "emissions", "heat", "rainfall", "wildfire", "weather", "snow"]),
    (17, &["nba", "nfl", "fifa", "world cup", "championship", "super bowl", "match", "tournament", "league", "olympics"]),
    (18, &["esports", "video game", "gta", "nintendo", "playstation", "xbox", "twitch", "steam"]),
    (19, &["study", "research", "scientists", "discovery", "physics", "nobel", "experiment", "superconductor"]),
    (20, &["spacex", "nasa", "launch", "moon", "mars", "starship", "orbit", "asteroid", "rocket"]),
];

/// Fallback when no keyword matches.
const FALLBACK: u8 = 13;

/// Deterministic reference classifier: the category with the most keyword
/// hits wins; ties go to the lower number.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordClassifier;

impl KeywordClassifier {
    fn score(text: &str) -> u8 {
        let lowered = text.to_lowercase();
        let tokens: Vec<&str> = lowered
            .split(|c: char| !(c.is_alphanumeric() || c == '&'))
            .filter(|t| !t.is_empty())
            .collect();
        let padded = format!(" {} ", tokens.join(" "));
        let mut best = (0usize, FALLBACK);
        for (id, words) in KEYWORDS {
            let hits = words
                .iter()
                .filter(|w| padded.contains(&format!(" {w} ")))
                .count();
            if hits > best.0 {
                best = (hits, id);
            }
        }
        best.1
    }
}

impl CategoryClassifier for KeywordClassifier {
    fn tag(&self) -> &str {
        "keyword"
    }

    fn classify_raw(&self, description: &str) -> Result<String, ProviderError> {
        Ok(Self::score(description).to_string())
    }
}

/// Assigns one category from the market's title and description.
pub fn classify_category(market: &BinaryMarket, classifier: &dyn CategoryClassifier) -> Result<CategoryId, AlignError> {
    if market.description.trim().is_empty() {
        return Err(AlignError::EmptyDescription(market.id.clone()));
    }
    let text = format!("{}\n{}", market.title, market.description);
    let raw = classifier.classify_raw(&text)?;
    Ok(parse_category(&raw)?)
}
