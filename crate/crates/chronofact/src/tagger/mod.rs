//! Rule-based temporal tagger.
//!
//! Turns raw document text into (a) an optional publication date, (b) a list
//! of time expressions normalized to calendar dates, and (c) per-token
//! annotations marking time spans and the verb-like predicate nearest to each
//! expression. All rules are deterministic; there is no learned component.
//!
//! Expressions fall into three kinds:
//! - explicit: full dates, month + year, bare years
//! - relative: deictics, weekday references, offsets like "three days ago"
//! - implicit: fixed-date holidays
//!
//! Relative and year-less implicit expressions need an anchor date (the
//! document creation time); without one they are skipped rather than guessed.

mod patterns;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::date::CalendarDate;
use crate::error::Result;

pub use patterns::{is_verb_like, parse_explicit_date, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExprKind {
    Explicit,
    Relative,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeExpression {
    /// Token span, start inclusive, end exclusive.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub normalized: CalendarDate,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenType {
    #[serde(rename = "O")]
    Other,
    #[serde(rename = "B-PRED")]
    BeginPredicate,
    #[serde(rename = "PRED")]
    Predicate,
    #[serde(rename = "B-TIME")]
    BeginTime,
    #[serde(rename = "TIME")]
    Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAnnotation {
    pub token_type: TokenType,
    /// Signed token distance from a B-PRED to the nearest B-TIME it governs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred_offset: Option<i64>,
    /// Index into the expression list for B-TIME/TIME tokens.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr_index: Option<usize>,
}

impl TokenAnnotation {
    fn other() -> Self {
        TokenAnnotation { token_type: TokenType::Other, pred_offset: None, expr_index: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerRecord {
    pub doc_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub publication_date: Option<CalendarDate>,
    pub expressions: Vec<TimeExpression>,
    pub annotations: Vec<TokenAnnotation>,
}

/// Run the full pipeline on one document. `fallback_anchor` is used for
/// relative expressions when the text itself yields no publication date
/// (callers typically pass the claim date, or None).
pub fn tag_document(
    doc_id: &str,
    text: &str,
    fallback_anchor: Option<CalendarDate>,
) -> TaggerRecord {
    let publication_date = extract_publication_date(text);
    let anchor = publication_date.or(fallback_anchor);
    let tokens = tokenize(text);
    let expressions = extract_time_expressions(&tokens, anchor);
    let annotations = annotate_tokens(&tokens, &expressions);
    TaggerRecord { doc_id: doc_id.to_string(), publication_date, expressions, annotations }
}

/// Publication date of a document, if stated.
///
/// Rule 1: if the text contains an ellipsis ("..." or the one-char form), the
/// segment before the first one must parse entirely as an explicit date.
/// Rule 2: otherwise the first explicit date whose span lies within three
/// tokens of a "published"/"posted" keyword wins.
pub fn extract_publication_date(text: &str) -> Option<CalendarDate> {
    let ellipsis = match (text.find("..."), text.find('…')) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    if let Some(idx) = ellipsis {
        let toks = tokenize(&text[..idx]);
        if !toks.is_empty() {
            if let Some((d, len)) = parse_explicit_date(&toks, 0) {
                if len == toks.len() {
                    return Some(d);
                }
            }
        }
    }

    let toks = tokenize(text);
    let keywords: Vec<usize> = toks
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let l = t.to_lowercase();
            l == "published" || l == "posted"
        })
        .map(|(i, _)| i)
        .collect();
    if keywords.is_empty() {
        return None;
    }
    for s in 0..toks.len() {
        if let Some((d, len)) = parse_explicit_date(&toks, s) {
            let adjacent = keywords
                .iter()
                .any(|&k| (s..s + len).any(|t| t.abs_diff(k) <= 3));
            if adjacent {
                return Some(d);
            }
        }
    }
    None
}

/// Normalize a single expression surface against an anchor date. Returns
/// None when the surface is not a supported expression.
pub fn normalize_expression(surface: &str, anchor: CalendarDate) -> Option<CalendarDate> {
    let toks = tokenize(surface);
    let (date, len, _) = match_expression(&toks, 0, Some(anchor))?;
    (len == toks.len()).then_some(date)
}

/// Left-to-right greedy scan; matches never overlap and failed
/// normalizations (e.g. relative forms without an anchor) are skipped.
pub fn extract_time_expressions(
    tokens: &[String],
    anchor: Option<CalendarDate>,
) -> Vec<TimeExpression> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some((date, len, kind)) = match_expression(tokens, i, anchor) {
            out.push(TimeExpression {
                start: i,
                end: i + len,
                surface: tokens[i..i + len].join(" "),
                normalized: date,
                kind,
            });
            i += len;
        } else {
            i += 1;
        }
    }
    out
}

fn parse_count(token: &str) -> Option<i64> {
    if token.len() <= 3 && !token.is_empty() && token.chars().all(|c| c.is_ascii_digit()) {
        return token.parse().ok();
    }
    patterns::number_word(token)
}

fn unit_days(token: &str) -> Option<i64> {
    match token.to_lowercase().as_str() {
        "day" | "days" => Some(1),
        "week" | "weeks" => Some(7),
        _ => None,
    }
}

fn is_sentence_end(token: &str) -> bool {
    matches!(token, "." | "!" | "?" | "..." | "…")
}

/// Next calendar date with the given weekday strictly after `from`
/// (same weekday means seven days out).
fn weekday_forward(from: CalendarDate, target: u32) -> CalendarDate {
    let ahead = (i64::from(target) - i64::from(from.weekday())).rem_euclid(7);
    from.plus_days(if ahead == 0 { 7 } else { ahead })
}

fn weekday_backward(from: CalendarDate, target: u32) -> CalendarDate {
    let back = (i64::from(from.weekday()) - i64::from(target)).rem_euclid(7);
    from.plus_days(-(if back == 0 { 7 } else { back }))
}

fn match_holiday(tokens: &[String], i: usize) -> Option<(u32, u32, usize)> {
    for (seq, (m, d)) in patterns::HOLIDAYS {
        if tokens.len() >= i + seq.len()
            && seq
                .iter()
                .zip(&tokens[i..i + seq.len()])
                .all(|(p, t)| t.to_lowercase() == *p)
        {
            return Some((*m, *d, seq.len()));
        }
    }
    None
}

/// Try every expression class at position `i`, most specific first. Returns
/// the normalized date, tokens consumed, and kind.
fn match_expression(
    tokens: &[String],
    i: usize,
    anchor: Option<CalendarDate>,
) -> Option<(CalendarDate, usize, ExprKind)> {
    if let Some((d, len)) = parse_explicit_date(tokens, i) {
        return Some((d, len, ExprKind::Explicit));
    }

    if let Some((m, d, len)) = match_holiday(tokens, i) {
        if let Some(y) = tokens.get(i + len).and_then(|t| patterns::bare_year(t)) {
            if let Ok(date) = CalendarDate::new(y, m, d) {
                return Some((date, len + 1, ExprKind::Implicit));
            }
        }
        if let Some(a) = anchor {
            if let Ok(date) = CalendarDate::new(a.year(), m, d) {
                return Some((date, len, ExprKind::Implicit));
            }
        }
        return None;
    }

    if let Some((d, len)) = patterns::parse_month_year(tokens, i) {
        return Some((d, len, ExprKind::Explicit));
    }

    let tok = tokens.get(i)?;
    let low = tok.to_lowercase();

    if low == "last" || low == "next" {
        let forward = low == "next";
        if let Some(nxt) = tokens.get(i + 1) {
            if let Some(a) = anchor {
                if let Some(wd) = patterns::weekday_number(nxt) {
                    let d = if forward { weekday_forward(a, wd) } else { weekday_backward(a, wd) };
                    return Some((d, 2, ExprKind::Relative));
                }
                if let Some(m) = patterns::month_number(nxt) {
                    // Month names resolve to the first of the nearest strictly
                    // past/future occurrence of that month.
                    let y = if forward {
                        if m > a.month() { a.year() } else { a.year() + 1 }
                    } else if m < a.month() {
                        a.year()
                    } else {
                        a.year() - 1
                    };
                    if let Ok(d) = CalendarDate::new(y, m, 1) {
                        return Some((d, 2, ExprKind::Relative));
                    }
                }
                if nxt.to_lowercase() == "week" {
                    let d = a.plus_days(if forward { 7 } else { -7 });
                    return Some((d, 2, ExprKind::Relative));
                }
            }
        }
    }

    if low == "in" {
        if let (Some(n), Some(mult)) = (
            tokens.get(i + 1).and_then(|t| parse_count(t)),
            tokens.get(i + 2).and_then(|t| unit_days(t)),
        ) {
            if let Some(a) = anchor {
                return Some((a.plus_days(n * mult), 3, ExprKind::Relative));
            }
        }
    }

    if let (Some(n), Some(mult)) = (
        parse_count(tok),
        tokens.get(i + 1).and_then(|t| unit_days(t)),
    ) {
        if tokens.get(i + 2).map(|t| t.to_lowercase()) == Some("ago".into()) {
            if let Some(a) = anchor {
                return Some((a.plus_days(-n * mult), 3, ExprKind::Relative));
            }
        }
    }

    if let Some(a) = anchor {
        match low.as_str() {
            "today" => return Some((a, 1, ExprKind::Relative)),
            "tomorrow" => return Some((a.plus_days(1), 1, ExprKind::Relative)),
            "yesterday" => return Some((a.plus_days(-1), 1, ExprKind::Relative)),
            _ => {}
        }
        if let Some(wd) = patterns::weekday_number(tok) {
            return Some((weekday_forward(a, wd), 1, ExprKind::Relative));
        }
    }

    if let Some(y) = patterns::bare_year(tok) {
        let d = CalendarDate::new(y, 1, 1).expect("jan 1 always valid");
        return Some((d, 1, ExprKind::Explicit));
    }

    None
}

/// Mark B-TIME/TIME over expression spans, then for each expression walk left
/// within the sentence to the nearest verb-like token and mark it B-PRED with
/// the signed offset to that expression. A token already marked B-PRED keeps
/// whichever offset is smaller in magnitude.
pub fn annotate_tokens(tokens: &[String], expressions: &[TimeExpression]) -> Vec<TokenAnnotation> {
    let n = tokens.len();
    let mut ann = vec![TokenAnnotation::other(); n];

    let mut sentence = vec![0usize; n];
    let mut s = 0;
    for (t, tok) in tokens.iter().enumerate() {
        sentence[t] = s;
        if is_sentence_end(tok) {
            s += 1;
        }
    }

    let mut in_expr = vec![false; n];
    for (j, e) in expressions.iter().enumerate() {
        debug_assert!(e.start < e.end && e.end <= n);
        for t in e.start..e.end {
            in_expr[t] = true;
            ann[t] = TokenAnnotation {
                token_type: if t == e.start { TokenType::BeginTime } else { TokenType::Time },
                pred_offset: None,
                expr_index: Some(j),
            };
        }
    }

    for e in expressions {
        let mut p = e.start;
        while p > 0 {
            p -= 1;
            if sentence[p] != sentence[e.start] {
                break;
            }
            if in_expr[p] {
                continue;
            }
            if is_verb_like(&tokens[p]) {
                let offset = e.start as i64 - p as i64;
                match ann[p].token_type {
                    TokenType::Other => {
                        ann[p] = TokenAnnotation {
                            token_type: TokenType::BeginPredicate,
                            pred_offset: Some(offset),
                            expr_index: None,
                        };
                    }
                    TokenType::BeginPredicate => {
                        if ann[p].pred_offset.map_or(true, |old| offset.abs() < old.abs()) {
                            ann[p].pred_offset = Some(offset);
                        }
                    }
                    _ => {}
                }
                break;
            }
        }
    }

    ann
}

pub fn write_records(path: &Path, records: &[TaggerRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<TaggerRecord>> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
