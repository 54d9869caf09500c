use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EntityKind {
    Person,
    Place,
    Org,
}

/// Phrasings for one category. `{e}` entity, `{d}` date, `{x}` threshold,
/// `{c}` candidate; `[a|b]` marks paraphrase alternatives, first canonical.
pub(crate) struct Theme {
    pub category: u8,
    pub entity: EntityKind,
    pub binary: &'static str,
    pub ladder: &'static str,
    pub ladder_base: i64,
    pub ladder_step: i64,
    pub winner: &'static str,
}

const fn theme(
    category: u8,
    entity: EntityKind,
    binary: &'static str,
    ladder: &'static str,
    ladder_base: i64,
    ladder_step: i64,
    winner: &'static str,
) -> Theme {
    Theme {
        category,
        entity,
        binary,
        ladder,
        ladder_base,
        ladder_step,
        winner,
    }
}

use EntityKind::{Org, Person, Place};

pub(crate) const THEMES: [Theme; 18] = [
    theme(1, Org, "Will {e} [complete|finalize] its IPO by {d}?", "Will {e} shares close [above|higher than] ${x} on {d}?", 40, 10, "Will {c} be [named|appointed] CEO of {e} by {d}?"),
    theme(2, Place, "Will the central bank of {e} [cut|lower] interest rates by {d}?", "Will inflation in {e} [exceed|be above] {x}% in the report released on {d}?", 2, 1, "Will {c} be [appointed|named] finance minister of {e} by {d}?"),
    theme(3, Org, "Will {e} [release|ship] its new operating system by {d}?", "Will {e} sell more than {x} million devices by {d}?", 5, 5, "Will {c} [become|be named] chief technology officer of {e} by {d}?"),
    theme(4, Org, "Will {e} [launch|roll out] a paid subscription tier by {d}?", "Will {e} [reach|surpass] {x} million daily users by {d}?", 10, 10, "Will {c} be the most followed creator on {e} on {d}?"),
    theme(5, Org, "Will {e} [release|publish] an open-weight AI model by {d}?", "Will the {e} AI model score [above|over] {x}% on the reasoning benchmark by {d}?", 60, 5, "Will {c} [lead|head] the AI research lab at {e} on {d}?"),
    theme(6, Org, "Will the {e} token be [listed|added] on a major exchange by {d}?", "Will the {e} token price be [above|over] ${x} on {d}?", 1, 1, "Will {c} be the top trader in the {e} token competition on {d}?"),
    theme(7, Org, "Will the {e} protocol [complete|finish] its network upgrade by {d}?", "Will total value locked in {e} [exceed|top] ${x} million on {d}?", 100, 50, "Will {c} win the {e} protocol governance vote on {d}?"),
    theme(8, Place, "Will the incumbent mayor of {e} [win|be reelected in] the election on {d}?", "Will turnout in the {e} election [exceed|be above] {x}% on {d}?", 40, 5, "Will {c} [win|be elected in] the {e} mayoral election on {d}?"),
    theme(9, Place, "Will {e} pass its annual budget [bill|legislation] by {d}?", "Will the {e} legislature pass more than {x} bills by {d}?", 10, 10, "Will {c} be [confirmed|approved] as governor of the {e} region by {d}?"),
    theme(10, Place, "Will {e} sign a trade [treaty|agreement] with its neighbors by {d}?", "Will more than {x} countries attend the {e} summit on {d}?", 10, 10, "Will {c} be [appointed|named] ambassador to {e} by {d}?"),
    theme(11, Place, "Will a ceasefire be [declared|announced] in {e} by {d}?", "Will more than {x} thousand troops be deployed to {e} by {d}?", 5, 5, "Will {c} be [named|appointed] defense chief of {e} by {d}?"),
    theme(12, Person, "Will {e} [release|drop] a new album by {d}?", "Will the new film starring {e} gross more than ${x} million by {d}?", 50, 50, "Will {c} win best actor at the {e} film awards on {d}?"),
    theme(13, Place, "Will {e} [hold|host] its annual cultural festival by {d}?", "Will the census population of {e} [exceed|be above] {x} thousand on {d}?", 100, 50, "Will {c} be [named|chosen as] citizen of the year in {e} on {d}?"),
    theme(14, Person, "Will {e} be [convicted|found guilty] at trial by {d}?", "Will {e} be sentenced to more than {x} years by {d}?", 2, 3, "Will {c} be [appointed|assigned as] judge in the {e} case by {d}?"),
    theme(15, Place, "Will {e} [report|confirm] a measles outbreak by {d}?", "Will {e} report more than {x} flu cases by {d}?", 100, 100, "Will {c} be [appointed|named] health minister of {e} by {d}?"),
    theme(16, Place, "Will {e} record snowfall by {d}?", "Will the high temperature in {e} [exceed|be above] {x}°F on {d}?", 70, 5, "Will {c} [lead|chair] the {e} climate council on {d}?"),
    theme(19, Org, "Will {e} [publish|announce] a superconductor discovery by {d}?", "Will {e} publish more than {x} research papers by {d}?", 20, 20, "Will {c} win the {e} research prize on {d}?"),
    theme(20, Org, "Will {e} [launch|fly] a crewed rocket by {d}?", "Will {e} complete more than {x} orbital launches by {d}?", 5, 5, "Will {c} command the {e} lunar mission on {d}?"),
];

const FIRST: [&str; 40] = [
    "Marlow", "Ines", "Dorian", "Talia", "Caspian", "Wren", "Oren", "Lysa", "Bram", "Odette", "Quill", "Saskia", "Teodor",
    "Yara", "Emrys", "Nadia", "Corwin", "Ilse", "Rafe", "Mireille", "Anselm", "Petra", "Lucan", "Sable", "Gideon", "Aurel",
    "Hollis", "Junia", "Kestrel", "Leander", "Maren", "Niall", "Ottilie", "Perrin", "Rosalind", "Soren", "Thea", "Ulric",
    "Vesna", "Zephyr",
];

const LAST: [&str; 40] = [
    "Vance", "Okafor", "Lindqvist", "Marchetti", "Haldane", "Brennick", "Castell", "Darrow", "Eastwick", "Fennimore",
    "Galloway", "Hartigan", "Ivers", "Jessop", "Kovalenko", "Larkspur", "Mendez", "Northcott", "Oyelaran", "Pellham",
    "Quintero", "Rossiter", "Szabo", "Thorne", "Underhill", "Valdivia", "Whitcombe", "Yarrow", "Zelenko", "Ashdown",
    "Bellamy", "Crowther", "Delacroix", "Ellery", "Faraday", "Grimsby", "Holloway", "Ingram", "Jardine", "Kinsella",
];

const PLACE_HEAD: [&str; 40] = [
    "Ash", "Bel", "Cor", "Dun", "Elm", "Fair", "Glen", "Hal", "Iver", "Kil", "Lan", "Mar", "Nor", "Oak", "Pen", "Quen",
    "Ros", "Sal", "Tor", "Ux", "Val", "Wes", "Yor", "Zen", "Alder", "Bram", "Cal", "Dor", "Ever", "Fen", "Gal", "Hart",
    "Ives", "Kes", "Lor", "Mel", "Nar", "Orm", "Pry", "Rav",
];

const PLACE_TAIL: [&str; 40] = [
    "ford", "haven", "mont", "field", "wick", "stead", "bury", "mere", "dale", "port", "gate", "holm", "ton", "moor",
    "crest", "brook", "vale", "ridge", "shaw", "thorpe", "by", "combe", "ley", "mouth", "well", "worth", "hurst", "den",
    "fell", "garth", "ness", "rigg", "scar", "tarn", "wold", "lund", "strand", "vik", "berg", "heim",
];

const ORG_SUFFIX: [&str; 4] = ["Labs", "Systems", "Dynamics", "Networks"];

/// Distinct for `g < 1600`.
fn pair_index(g: usize) -> (usize, usize) {
    (g % 40, (g / 40 + g) % 40)
}

pub(crate) const MAX_EVENTS: usize = 1600;

pub(crate) fn entity(kind: EntityKind, g: usize) -> String {
    let (i, j) = pair_index(g % MAX_EVENTS);
    match kind {
        Person => format!("{} {}", FIRST[i], LAST[j]),
        Place => format!("{}{}", PLACE_HEAD[i], PLACE_TAIL[j]),
        Org => format!("{}{} {}", PLACE_HEAD[j], PLACE_TAIL[i], ORG_SUFFIX[g % 4]),
    }
}

/// Candidate names for a winner event; distinct first names within an event.
pub(crate) fn candidate(g: usize, i: usize) -> String {
    let h = g * 5 + i;
    format!("{} {}", FIRST[(h * 7) % 40], LAST[(h * 11 + h / 40) % 40])
}

const DATE_FORMATS: [&str; 4] = ["%B %-d, %Y", "%Y-%m-%d", "%-d %b %Y", "%b %-d %Y"];

const DESCRIPTIONS: [&str; 3] = [
    "This market resolves to Yes if the following question is answered affirmatively by official sources: {q} Otherwise it resolves to No.",
    "Resolves Yes when official reporting confirms the outcome asked here: {q} Resolves No otherwise.",
    "The contract pays out if, according to public sources, the answer is yes: {q}",
];

/// Renders `template`; with probability `intensity` per choice, picks a random
/// alternative instead of the canonical one.
pub(crate) struct Phrasing {
    pub title: String,
    pub description: String,
}

pub(crate) fn render<R: Rng>(
    rng: &mut R,
    template: &str,
    fields: &[(&str, &str)],
    date: NaiveDate,
    intensity: f64,
) -> Phrasing {
    let mut vary = |n: usize| -> usize {
        if n > 1 && intensity > 0.0 && rng.gen_bool(intensity.min(1.0)) {
            rng.gen_range(0..n)
        } else {
            0
        }
    };
    let date_text = date.format(DATE_FORMATS[vary(DATE_FORMATS.len())]).to_string();
    let mut title = String::new();
    let mut rest = template;
    while let Some(open) = rest.find('[') {
        title.push_str(&rest[..open]);
        let close = open + rest[open..].find(']').expect("balanced alternatives");
        let options: Vec<&str> = rest[open + 1..close].split('|').collect();
        title.push_str(options[vary(options.len())]);
        rest = &rest[close + 1..];
    }
    title.push_str(rest);
    for (key, value) in fields {
        title = title.replace(&format!("{{{key}}}"), value);
    }
    title = title.replace("{d}", &date_text);
    let description = DESCRIPTIONS[vary(DESCRIPTIONS.len())].replace("{q}", &title);
    Phrasing { title, description }
}

pub(crate) fn shuffled<R: Rng, T: Clone>(rng: &mut R, items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v
}
