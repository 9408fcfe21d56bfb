//! Token-level building blocks for the rule-based tagger: tokenization,
//! month/weekday/holiday tables, and explicit-date parsing.

use crate::date::CalendarDate;

const DETACH: &[char] = &[
    '.', ',', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '"', '\'', '`', '…', '“', '”',
    '‘', '’',
];

/// Whitespace split followed by punctuation detachment. Chunks made entirely
/// of punctuation (e.g. `...`) stay intact as one token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if chunk.chars().all(|c| DETACH.contains(&c)) {
            out.push(chunk.to_string());
            continue;
        }
        let mut lead = Vec::new();
        let mut trail = Vec::new();
        let mut core = chunk;
        while let Some(c) = core.chars().next() {
            if DETACH.contains(&c) && core.chars().count() > 1 {
                lead.push(c.to_string());
                core = &core[c.len_utf8()..];
            } else {
                break;
            }
        }
        while let Some(c) = core.chars().last() {
            if DETACH.contains(&c) && core.chars().count() > 1 {
                trail.push(c.to_string());
                core = &core[..core.len() - c.len_utf8()];
            } else {
                break;
            }
        }
        out.extend(lead);
        out.push(core.to_string());
        out.extend(trail.into_iter().rev());
    }
    out
}

pub fn month_number(token: &str) -> Option<u32> {
    let t = token.to_lowercase();
    let names: [(&str, &str, u32); 12] = [
        ("january", "jan", 1),
        ("february", "feb", 2),
        ("march", "mar", 3),
        ("april", "apr", 4),
        ("may", "may", 5),
        ("june", "jun", 6),
        ("july", "jul", 7),
        ("august", "aug", 8),
        ("september", "sep", 9),
        ("october", "oct", 10),
        ("november", "nov", 11),
        ("december", "dec", 12),
    ];
    for (full, abbr, n) in names {
        if t == full || t == abbr || (n == 9 && t == "sept") {
            return Some(n);
        }
    }
    None
}

/// Weekday as 0 = Monday .. 6 = Sunday.
pub fn weekday_number(token: &str) -> Option<u32> {
    match token.to_lowercase().as_str() {
        "monday" | "mon" => Some(0),
        "tuesday" | "tue" | "tues" => Some(1),
        "wednesday" | "wed" => Some(2),
        "thursday" | "thu" | "thur" | "thurs" => Some(3),
        "friday" | "fri" => Some(4),
        "saturday" | "sat" => Some(5),
        "sunday" | "sun" => Some(6),
        _ => None,
    }
}

/// Fixed-date holidays: lowercased token sequence -> (month, day).
/// Longer sequences are listed first so a greedy match prefers them.
pub const HOLIDAYS: &[(&[&str], (u32, u32))] = &[
    (&["new", "year's", "eve"], (12, 31)),
    (&["new", "year's", "day"], (1, 1)),
    (&["christmas", "eve"], (12, 24)),
    (&["valentine's", "day"], (2, 14)),
    (&["independence", "day"], (7, 4)),
    (&["boxing", "day"], (12, 26)),
    (&["christmas"], (12, 25)),
    (&["halloween"], (10, 31)),
];

pub fn number_word(token: &str) -> Option<i64> {
    match token.to_lowercase().as_str() {
        "a" | "an" | "one" => Some(1),
        "two" => Some(2),
        "three" => Some(3),
        "four" => Some(4),
        "five" => Some(5),
        "six" => Some(6),
        "seven" => Some(7),
        "eight" => Some(8),
        "nine" => Some(9),
        "ten" => Some(10),
        _ => None,
    }
}

const VERB_LIST: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "will", "would", "shall", "should", "can", "could", "may", "might", "must", "make",
    "made", "say", "said", "go", "went", "gone", "come", "came", "see", "saw", "seen", "take",
    "took", "taken", "get", "got", "set", "begin", "began", "begun", "hold", "held", "meet",
    "met", "win", "won",
];

const SUFFIX_STOPLIST: &[&str] = &[
    "this", "its", "his", "hers", "ours", "yours", "theirs", "us", "news", "politics", "series",
    "species", "analysis", "basis", "crisis", "plus", "thus", "gas", "bus", "lens", "always",
    "perhaps", "during", "evening", "morning", "thing", "things", "something", "nothing",
    "anything", "everything", "spring", "string", "king", "wing", "ring", "sometimes", "status",
    "virus", "focus", "bonus", "census", "versus", "across", "unless", "less", "business",
    "united", "red", "speed", "seed", "need", "indeed", "hundred", "thousand",
];

/// Closed-list verbs plus suffix heuristics (-ed, -es, -ing, -s after a
/// consonant) filtered through a stoplist of frequent non-verbs.
pub fn is_verb_like(token: &str) -> bool {
    let t = token.to_lowercase();
    if VERB_LIST.contains(&t.as_str()) {
        return true;
    }
    if SUFFIX_STOPLIST.contains(&t.as_str()) {
        return false;
    }
    if !t.chars().all(|c| c.is_ascii_alphabetic()) {
        return false;
    }
    let n = t.len();
    if n > 3 && t.ends_with("ed") {
        return true;
    }
    if n > 4 && t.ends_with("ing") {
        return true;
    }
    if n > 3 && t.ends_with("es") {
        return true;
    }
    if n > 2 && t.ends_with('s') {
        let prev = t.as_bytes()[n - 2] as char;
        if !"aeiou".contains(prev) && prev != 's' {
            return true;
        }
    }
    false
}

fn day_of_month(token: &str) -> Option<u32> {
    let t = token.to_lowercase();
    let digits = t
        .strip_suffix("st")
        .or_else(|| t.strip_suffix("nd"))
        .or_else(|| t.strip_suffix("rd"))
        .or_else(|| t.strip_suffix("th"))
        .unwrap_or(&t);
    if digits.is_empty() || digits.len() > 2 || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let d: u32 = digits.parse().ok()?;
    (1..=31).contains(&d).then_some(d)
}

fn four_digit_year(token: &str) -> Option<i32> {
    if token.len() == 4 && token.chars().all(|c| c.is_ascii_digit()) {
        let y: i32 = token.parse().ok()?;
        (1000..=2999).contains(&y).then_some(y)
    } else {
        None
    }
}

/// Year token eligible for standalone extraction (tighter range than the
/// year field of a full date, to limit false positives).
pub fn bare_year(token: &str) -> Option<i32> {
    four_digit_year(token).filter(|y| (1900..=2099).contains(y))
}

/// Parse an explicit full date starting at `tokens[i]`. Returns the date and
/// the number of tokens consumed. Supported: ISO `YYYY-MM-DD`, `Month D(,)
/// YYYY`, `D Month(,) YYYY`, and one-token `M/D/YYYY` (US order).
pub fn parse_explicit_date(tokens: &[String], i: usize) -> Option<(CalendarDate, usize)> {
    let tok = tokens.get(i)?;

    if tok.len() == 10 && tok.as_bytes()[4] == b'-' && tok.as_bytes()[7] == b'-' {
        if let Ok(d) = tok.parse::<CalendarDate>() {
            return Some((d, 1));
        }
    }

    if tok.matches('/').count() == 2 {
        let parts: Vec<&str> = tok.split('/').collect();
        if let (Ok(m), Ok(d), Some(y)) = (
            parts[0].parse::<u32>(),
            parts[1].parse::<u32>(),
            four_digit_year(parts[2]),
        ) {
            if let Ok(date) = CalendarDate::new(y, m, d) {
                return Some((date, 1));
            }
        }
    }

    // Month D [,] YYYY
    if let Some(m) = month_number(tok) {
        if let Some(d) = tokens.get(i + 1).and_then(|t| day_of_month(t)) {
            let mut j = i + 2;
            if tokens.get(j).map(String::as_str) == Some(",") {
                j += 1;
            }
            if let Some(y) = tokens.get(j).and_then(|t| four_digit_year(t)) {
                if let Ok(date) = CalendarDate::new(y, m, d) {
                    return Some((date, j + 1 - i));
                }
            }
        }
    }

    // D Month [,] YYYY
    if let Some(d) = day_of_month(tok) {
        if let Some(m) = tokens.get(i + 1).and_then(|t| month_number(t)) {
            let mut j = i + 2;
            if tokens.get(j).map(String::as_str) == Some(",") {
                j += 1;
            }
            if let Some(y) = tokens.get(j).and_then(|t| four_digit_year(t)) {
                if let Ok(date) = CalendarDate::new(y, m, d) {
                    return Some((date, j + 1 - i));
                }
            }
        }
    }

    None
}

/// `Month YYYY`, normalized to the first of the month.
pub fn parse_month_year(tokens: &[String], i: usize) -> Option<(CalendarDate, usize)> {
    let m = month_number(tokens.get(i)?)?;
    let y = four_digit_year(tokens.get(i + 1)?)?;
    CalendarDate::new(y, m, 1).ok().map(|d| (d, 2))
}
