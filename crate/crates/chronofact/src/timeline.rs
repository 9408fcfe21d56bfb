//! Quantile time buckets and temporal grounding.
//!
//! A [`BucketScheme`] partitions the integers (day deltas) into inclusive
//! intervals built from the quantiles of an observed delta distribution.
//! Document-level schemes carry three extra special buckets for missing
//! dates; content-level schemes have intervals only. Grounding maps a claim
//! and its evidence onto bucket index sequences ([`TemporalRep`]).

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::date::CalendarDate;
use crate::error::{Error, Result};

/// Signed day count `target - reference`; negative means `target` is earlier.
pub fn delta_days(target: CalendarDate, reference: CalendarDate) -> i64 {
    target.delta_days(reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeLevel {
    Document,
    Content,
}

impl SchemeLevel {
    fn as_str(self) -> &'static str {
        match self {
            SchemeLevel::Document => "document",
            SchemeLevel::Content => "content",
        }
    }
}

impl std::str::FromStr for SchemeLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "document" => Ok(SchemeLevel::Document),
            "content" => Ok(SchemeLevel::Content),
            other => Err(Error::InvalidScheme(format!("unknown level {other:?}"))),
        }
    }
}

/// Special buckets appended after the intervals of a document-level scheme,
/// in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialBucket {
    EvidenceNoDate,
    ClaimDateAvailable,
    ClaimNoDate,
}

pub const DOCUMENT_SPECIALS: [SpecialBucket; 3] = [
    SpecialBucket::EvidenceNoDate,
    SpecialBucket::ClaimDateAvailable,
    SpecialBucket::ClaimNoDate,
];

impl SpecialBucket {
    pub fn name(self) -> &'static str {
        match self {
            SpecialBucket::EvidenceNoDate => "evidence_no_date",
            SpecialBucket::ClaimDateAvailable => "claim_date_available",
            SpecialBucket::ClaimNoDate => "claim_no_date",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        DOCUMENT_SPECIALS.into_iter().find(|s| s.name() == name)
    }
}

/// Inclusive integer interval; `None` bounds are open ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl Interval {
    pub fn contains(&self, d: i64) -> bool {
        self.lo.map_or(true, |lo| lo <= d) && self.hi.map_or(true, |hi| d <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeStats {
    pub mean_count: f64,
    pub std_count: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BucketScheme {
    level: SchemeLevel,
    intervals: Vec<Interval>,
    /// Population mean/std of bucket counts at build time; metadata only.
    pub stats: Option<SchemeStats>,
}

impl TryFrom<String> for BucketScheme {
    type Error = Error;
    fn try_from(text: String) -> Result<Self> {
        BucketScheme::from_text(&text)
    }
}

impl From<BucketScheme> for String {
    fn from(scheme: BucketScheme) -> String {
        scheme.to_text()
    }
}

impl BucketScheme {
    pub fn new(level: SchemeLevel, intervals: Vec<Interval>) -> Result<Self> {
        let scheme = BucketScheme { level, intervals, stats: None };
        scheme.validate()?;
        Ok(scheme)
    }

    fn validate(&self) -> Result<()> {
        let ivs = &self.intervals;
        if ivs.is_empty() {
            return Err(Error::InvalidScheme("no intervals".into()));
        }
        if ivs[0].lo.is_some() || ivs[ivs.len() - 1].hi.is_some() {
            return Err(Error::InvalidScheme("outer bounds must be open".into()));
        }
        for (i, iv) in ivs.iter().enumerate() {
            if let (Some(lo), Some(hi)) = (iv.lo, iv.hi) {
                if lo > hi {
                    return Err(Error::InvalidScheme(format!("interval {i} has lo > hi")));
                }
            }
            if i > 0 {
                match (ivs[i - 1].hi, iv.lo) {
                    (Some(prev), Some(lo)) if lo == prev + 1 => {}
                    _ => {
                        return Err(Error::InvalidScheme(format!(
                            "gap or overlap between intervals {} and {i}",
                            i - 1
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn level(&self) -> SchemeLevel {
        self.level
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Interval count plus specials.
    pub fn num_buckets(&self) -> usize {
        self.intervals.len()
            + match self.level {
                SchemeLevel::Document => DOCUMENT_SPECIALS.len(),
                SchemeLevel::Content => 0,
            }
    }

    pub fn special_index(&self, special: SpecialBucket) -> Option<usize> {
        match self.level {
            SchemeLevel::Content => None,
            SchemeLevel::Document => {
                let pos = DOCUMENT_SPECIALS.iter().position(|s| *s == special).unwrap();
                Some(self.intervals.len() + pos)
            }
        }
    }

    /// Bucket index for a day delta. A missing delta maps to
    /// `evidence_no_date` at document level and is an error at content level
    /// (content reps are built only from found expressions).
    pub fn assign_bucket(&self, delta: Option<i64>) -> Result<usize> {
        match delta {
            Some(d) => Ok(self.interval_index(d)),
            None => self
                .special_index(SpecialBucket::EvidenceNoDate)
                .ok_or(Error::MissingContentDelta),
        }
    }

    /// Index of the unique interval containing `d`.
    pub fn interval_index(&self, d: i64) -> usize {
        // lo of interval 0 is -inf, so partition_point is always >= 1.
        let idx = self
            .intervals
            .partition_point(|iv| iv.lo.map_or(true, |lo| lo <= d))
            - 1;
        debug_assert!(self.intervals[idx].contains(d));
        idx
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# bucket-scheme v1\n");
        let _ = writeln!(out, "# level {}", self.level.as_str());
        let _ = writeln!(out, "# count {}", self.num_buckets());
        if let Some(s) = self.stats {
            let _ = writeln!(out, "# mean_count {:.2}", s.mean_count);
            let _ = writeln!(out, "# std_count {:.2}", s.std_count);
        }
        let bound = |b: Option<i64>, open: &str| match b {
            Some(v) => v.to_string(),
            None => open.to_string(),
        };
        for (i, iv) in self.intervals.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{}\t{}", bound(iv.lo, "-inf"), bound(iv.hi, "+inf"));
        }
        if self.level == SchemeLevel::Document {
            for s in DOCUMENT_SPECIALS {
                let _ = writeln!(out, "special\t{}\t{}", self.special_index(s).unwrap(), s.name());
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::SchemeParse { line, msg };
        let mut level: Option<SchemeLevel> = None;
        let mut declared_count: Option<usize> = None;
        let mut mean = None;
        let mut std = None;
        let mut intervals = Vec::new();
        let mut specials = Vec::new();
        let mut saw_version = false;

        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let c = comment.trim();
                if c == "bucket-scheme v1" {
                    saw_version = true;
                } else if let Some(v) = c.strip_prefix("level ") {
                    level = Some(v.trim().parse()?);
                } else if let Some(v) = c.strip_prefix("count ") {
                    declared_count = Some(
                        v.trim()
                            .parse()
                            .map_err(|e| err(line_no, format!("bad count: {e}")))?,
                    );
                } else if let Some(v) = c.strip_prefix("mean_count ") {
                    mean = v.trim().parse::<f64>().ok();
                } else if let Some(v) = c.strip_prefix("std_count ") {
                    std = v.trim().parse::<f64>().ok();
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(line_no, "expected three tab-separated fields".into()));
            }
            if fields[0] == "special" {
                let idx: usize = fields[1]
                    .parse()
                    .map_err(|e| err(line_no, format!("bad special index: {e}")))?;
                let special = SpecialBucket::from_name(fields[2])
                    .ok_or_else(|| err(line_no, format!("unknown special {:?}", fields[2])))?;
                specials.push((idx, special));
                continue;
            }
            let idx: usize = fields[0]
                .parse()
                .map_err(|e| err(line_no, format!("bad index: {e}")))?;
            if idx != intervals.len() {
                return Err(err(line_no, format!("expected index {}", intervals.len())));
            }
            let parse_bound = |f: &str, open: &str| -> Result<Option<i64>> {
                if f == open {
                    Ok(None)
                } else {
                    f.parse()
                        .map(Some)
                        .map_err(|e| err(line_no, format!("bad bound {f:?}: {e}")))
                }
            };
            intervals.push(Interval {
                lo: parse_bound(fields[1], "-inf")?,
                hi: parse_bound(fields[2], "+inf")?,
            });
        }

        if !saw_version {
            return Err(err(1, "missing '# bucket-scheme v1' header".into()));
        }
        let level = level.ok_or_else(|| err(1, "missing '# level' header".into()))?;
        let mut scheme = BucketScheme::new(level, intervals)?;
        scheme.stats = match (mean, std) {
            (Some(m), Some(s)) => Some(SchemeStats { mean_count: m, std_count: s }),
            _ => None,
        };

        let expected: Vec<(usize, SpecialBucket)> = match level {
            SchemeLevel::Document => DOCUMENT_SPECIALS
                .into_iter()
                .map(|s| (scheme.special_index(s).unwrap(), s))
                .collect(),
            SchemeLevel::Content => Vec::new(),
        };
        if specials != expected {
            return Err(Error::InvalidScheme(format!(
                "special buckets {specials:?} do not match level {}",
                level.as_str()
            )));
        }
        if let Some(c) = declared_count {
            if c != scheme.num_buckets() {
                return Err(Error::InvalidScheme(format!(
                    "declared count {c} != actual {}",
                    scheme.num_buckets()
                )));
            }
        }
        Ok(scheme)
    }

    /// Hash of the canonical text form; stamped into artifacts that depend
    /// on the scheme.
    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

pub fn write_scheme(path: &Path, scheme: &BucketScheme) -> Result<()> {
    std::fs::write(path, scheme.to_text())?;
    Ok(())
}

pub fn read_scheme(path: &Path) -> Result<BucketScheme> {
    BucketScheme::from_text(&std::fs::read_to_string(path)?)
}

/// Build a scheme from observed deltas.
///
/// Deltas are sorted ascending and cut into `n_quantiles` rank-contiguous
/// groups of near-equal size. A cut landing inside a run of equal values
/// moves to the end of the run, so the value stays whole in the group where
/// it first occurs; groups emptied this way are dropped. Group maxima become
/// inclusive upper bounds, the outer bounds open to infinity. If 0 occurs in
/// the deltas, a [0,0] interval is forced by splitting its host interval.
pub fn build_bucket_scheme(
    deltas: &[i64],
    n_quantiles: usize,
    level: SchemeLevel,
) -> Result<BucketScheme> {
    if deltas.is_empty() {
        return Err(Error::EmptyInput("bucket scheme needs at least one delta".into()));
    }
    if n_quantiles < 2 {
        return Err(Error::InvalidScheme("need at least two quantiles".into()));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mut distinct = 1;
    for w in sorted.windows(2) {
        if w[0] != w[1] {
            distinct += 1;
        }
    }
    if n_quantiles > distinct {
        return Err(Error::TooManyQuantiles { quantiles: n_quantiles, distinct });
    }

    let mut cuts: Vec<usize> = Vec::new();
    for k in 1..n_quantiles {
        let mut b = k * n / n_quantiles;
        if b == 0 || b >= n {
            continue;
        }
        if sorted[b - 1] == sorted[b] {
            let v = sorted[b];
            b = sorted.partition_point(|&x| x <= v);
        }
        if b < n && cuts.last() != Some(&b) {
            cuts.push(b);
        }
    }

    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(n);
    let group_maxima: Vec<i64> = bounds.windows(2).map(|w| sorted[w[1] - 1]).collect();

    let last = group_maxima.len() - 1;
    let mut intervals: Vec<Interval> = group_maxima
        .iter()
        .enumerate()
        .map(|(i, &hi)| Interval {
            lo: if i == 0 { None } else { Some(group_maxima[i - 1] + 1) },
            hi: if i == last { None } else { Some(hi) },
        })
        .collect();

    if sorted.binary_search(&0).is_ok() {
        let pos = intervals.iter().position(|iv| iv.contains(0)).expect("partition covers 0");
        let host = intervals[pos];
        if host != (Interval { lo: Some(0), hi: Some(0) }) {
            let mut parts = Vec::with_capacity(3);
            if host.lo.map_or(true, |lo| lo < 0) {
                parts.push(Interval { lo: host.lo, hi: Some(-1) });
            }
            parts.push(Interval { lo: Some(0), hi: Some(0) });
            if host.hi.map_or(true, |hi| hi > 0) {
                parts.push(Interval { lo: Some(1), hi: host.hi });
            }
            intervals.splice(pos..pos + 1, parts);
        }
    }

    let mut scheme = BucketScheme::new(level, intervals)?;

    let mut counts = vec![0usize; scheme.intervals.len()];
    for &d in &sorted {
        counts[scheme.interval_index(d)] += 1;
    }
    let m = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / m;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / m;
    scheme.stats = Some(SchemeStats { mean_count: mean, std_count: var.sqrt() });
    Ok(scheme)
}

/// Sequence of bucket indices into one scheme. Document-level reps have
/// length exactly 1; content-level reps have one entry per time expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalRep {
    pub indices: Vec<usize>,
}

impl TemporalRep {
    pub fn empty() -> Self {
        TemporalRep { indices: Vec::new() }
    }
}

/// Bucket a claim and its evidence by publication date. The claim rep only
/// signals date availability; each evidence doc gets the bucket of its day
/// delta to the claim, or `evidence_no_date` when either date is missing.
pub fn ground_document_level(
    claim_pub: Option<CalendarDate>,
    evidence_pubs: &[Option<CalendarDate>],
    scheme: &BucketScheme,
) -> (TemporalRep, Vec<TemporalRep>) {
    assert_eq!(scheme.level(), SchemeLevel::Document, "document-level scheme required");
    let claim_bucket = match claim_pub {
        Some(_) => SpecialBucket::ClaimDateAvailable,
        None => SpecialBucket::ClaimNoDate,
    };
    let claim_rep = TemporalRep { indices: vec![scheme.special_index(claim_bucket).unwrap()] };
    let no_date = scheme.special_index(SpecialBucket::EvidenceNoDate).unwrap();
    let evidence_reps = evidence_pubs
        .iter()
        .map(|ev| {
            let idx = match (claim_pub, ev) {
                (Some(c), Some(e)) => scheme.interval_index(delta_days(*e, c)),
                _ => no_date,
            };
            TemporalRep { indices: vec![idx] }
        })
        .collect();
    (claim_rep, evidence_reps)
}

/// Bucket every normalized time expression against the claim's publication
/// date, preserving reading order. Without a claim date all reps are empty:
/// content deltas are defined only relative to it.
pub fn ground_content_level(
    claim_pub: Option<CalendarDate>,
    claim_exprs: &[CalendarDate],
    evidence_exprs: &[Vec<CalendarDate>],
    scheme: &BucketScheme,
) -> (TemporalRep, Vec<TemporalRep>) {
    assert_eq!(scheme.level(), SchemeLevel::Content, "content-level scheme required");
    let Some(anchor) = claim_pub else {
        return (TemporalRep::empty(), vec![TemporalRep::empty(); evidence_exprs.len()]);
    };
    let bucket_all = |dates: &[CalendarDate]| TemporalRep {
        indices: dates.iter().map(|d| scheme.interval_index(delta_days(*d, anchor))).collect(),
    };
    let claim_rep = bucket_all(claim_exprs);
    let evidence_reps = evidence_exprs.iter().map(|e| bucket_all(e)).collect();
    (claim_rep, evidence_reps)
}

static T_DOC: OnceLock<BucketScheme> = OnceLock::new();
static T_CON: OnceLock<BucketScheme> = OnceLock::new();

/// The shipped 23-bucket document-level scheme (20 intervals + 3 specials).
pub fn shipped_document_scheme() -> &'static BucketScheme {
    T_DOC.get_or_init(|| {
        BucketScheme::from_text(include_str!("../fixtures/t_doc.buckets"))
            .expect("shipped t_doc fixture is valid")
    })
}

/// The shipped 24-interval content-level scheme.
pub fn shipped_content_scheme() -> &'static BucketScheme {
    T_CON.get_or_init(|| {
        BucketScheme::from_text(include_str!("../fixtures/t_con.buckets"))
            .expect("shipped t_con fixture is valid")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> CalendarDate {
        s.parse().unwrap()
    }

    fn iv(lo: Option<i64>, hi: Option<i64>) -> Interval {
        Interval { lo, hi }
    }

    #[test]
    fn delta_days_examples() {
        assert_eq!(delta_days(d("2018-05-28"), d("2018-05-28")), 0);
        assert_eq!(delta_days(d("2018-05-25"), d("2018-05-28")), -3);
        assert_eq!(delta_days(d("2020-03-01"), d("2020-02-28")), 2);
    }

    #[test]
    fn build_small_example_with_forced_zero() {
        let s = build_bucket_scheme(&[-2, -1, 0, 0, 1, 2], 3, SchemeLevel::Content).unwrap();
        assert_eq!(
            s.intervals(),
            &[iv(None, Some(-1)), iv(Some(0), Some(0)), iv(Some(1), None)]
        );
    }

    #[test]
    fn build_repairs_tie_at_cut() {
        // The cut falls inside the run of 5s; the run stays whole in the
        // first group and no zero bucket appears (0 is not observed).
        let s = build_bucket_scheme(&[5, 5, 5, 6], 2, SchemeLevel::Content).unwrap();
        assert_eq!(s.intervals(), &[iv(None, Some(5)), iv(Some(6), None)]);
    }

    #[test]
    fn build_rejects_too_many_quantiles() {
        match build_bucket_scheme(&[5, 5, 5, 6], 3, SchemeLevel::Content) {
            Err(Error::TooManyQuantiles { quantiles: 3, distinct: 2 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        assert!(build_bucket_scheme(&[], 2, SchemeLevel::Content).is_err());
        assert!(build_bucket_scheme(&[1, 2, 3], 1, SchemeLevel::Content).is_err());
    }

    #[test]
    fn shipped_document_scheme_shape() {
        let s = shipped_document_scheme();
        assert_eq!(s.level(), SchemeLevel::Document);
        assert_eq!(s.intervals().len(), 20);
        assert_eq!(s.num_buckets(), 23);
        assert_eq!(s.special_index(SpecialBucket::EvidenceNoDate), Some(20));
        assert_eq!(s.special_index(SpecialBucket::ClaimDateAvailable), Some(21));
        assert_eq!(s.special_index(SpecialBucket::ClaimNoDate), Some(22));
        assert_eq!(s.interval_index(0), 7, "[0,0] is the 8th interval");
        assert_eq!(s.interval_index(-2), 6, "[-3,-1]");
        assert_eq!(s.interval_index(1_000_000_000), 19);
        assert_eq!(s.interval_index(-1_000_000_000), 0);
        assert_eq!(s.assign_bucket(None).unwrap(), 20);
    }

    #[test]
    fn shipped_content_scheme_shape() {
        let s = shipped_content_scheme();
        assert_eq!(s.level(), SchemeLevel::Content);
        assert_eq!(s.intervals().len(), 24);
        assert_eq!(s.num_buckets(), 24);
        assert_eq!(s.interval_index(0), 11);
        assert!(matches!(s.assign_bucket(None), Err(Error::MissingContentDelta)));
    }

    #[test]
    fn shipped_schemes_minimize_width_at_zero() {
        for s in [shipped_document_scheme(), shipped_content_scheme()] {
            let zero = s.interval_index(0);
            assert_eq!(s.intervals()[zero], iv(Some(0), Some(0)));
            for (i, v) in s.intervals().iter().enumerate() {
                if i != zero {
                    match (v.lo, v.hi) {
                        (Some(lo), Some(hi)) => assert!(hi - lo >= 1),
                        _ => {} // unbounded, wider by definition
                    }
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        for s in [shipped_document_scheme(), shipped_content_scheme()] {
            let back = BucketScheme::from_text(&s.to_text()).unwrap();
            assert_eq!(&back, s);
            assert_eq!(back.sha256_hex(), s.sha256_hex());
        }
        let built = build_bucket_scheme(&[-4, -1, 0, 2, 9], 2, SchemeLevel::Document).unwrap();
        let back = BucketScheme::from_text(&built.to_text()).unwrap();
        assert_eq!(back.intervals(), built.intervals());
    }

    #[test]
    fn from_text_rejects_garbage() {
        assert!(BucketScheme::from_text("0\t-inf\t+inf\n").is_err(), "missing header");
        let gap = "# bucket-scheme v1\n# level content\n0\t-inf\t5\n1\t7\t+inf\n";
        assert!(BucketScheme::from_text(gap).is_err());
    }

    #[test]
    fn document_grounding_examples() {
        let s = shipped_document_scheme();
        let (c, e) = ground_document_level(Some(d("2018-05-28")), &[Some(d("2018-05-28"))], s);
        assert_eq!(c.indices, vec![21]);
        assert_eq!(e[0].indices, vec![7]);

        let (c, e) = ground_document_level(None, &[Some(d("2018-05-28"))], s);
        assert_eq!(c.indices, vec![22]);
        assert_eq!(e[0].indices, vec![20]);

        let (_, e) = ground_document_level(Some(d("2018-05-28")), &[None], s);
        assert_eq!(e[0].indices, vec![20]);
    }

    #[test]
    fn content_grounding_examples() {
        let s = shipped_content_scheme();
        let (c, e) = ground_content_level(
            Some(d("2018-05-28")),
            &[d("2018-05-29")],
            &[vec![d("2018-05-28"), d("2018-06-30"), d("2017-01-01")], vec![]],
            s,
        );
        assert_eq!(c.indices, vec![12], "delta +1 lands in [1,8]");
        assert_eq!(e[0].indices.len(), 3);
        assert_eq!(e[1].indices, Vec::<usize>::new());

        let (c, e) = ground_content_level(None, &[d("2018-05-29")], &[vec![d("2018-05-28")]], s);
        assert!(c.indices.is_empty());
        assert!(e[0].indices.is_empty());
    }

    proptest! {
        #[test]
        fn partition_and_monotonicity(
            mut deltas in proptest::collection::vec(-3000i64..3000, 2..200),
            q in 2usize..12,
            probes in proptest::collection::vec(-5000i64..5000, 1..50),
        ) {
            deltas.sort_unstable();
            deltas.dedup();
            prop_assume!(deltas.len() >= q);
            let s = build_bucket_scheme(&deltas, q, SchemeLevel::Content).unwrap();
            for &p in &probes {
                let idx = s.interval_index(p);
                let hits = s.intervals().iter().filter(|iv| iv.contains(p)).count();
                prop_assert_eq!(hits, 1);
                prop_assert!(s.intervals()[idx].contains(p));
            }
            let mut sorted_probes = probes.clone();
            sorted_probes.sort_unstable();
            for w in sorted_probes.windows(2) {
                prop_assert!(s.interval_index(w[0]) <= s.interval_index(w[1]));
            }
        }

        #[test]
        fn quantile_balance_on_distinct_nonzero(
            mut deltas in proptest::collection::vec((-3000i64..3000).prop_filter("nonzero", |d| *d != 0), 2..200),
            q in 2usize..12,
        ) {
            deltas.sort_unstable();
            deltas.dedup();
            prop_assume!(deltas.len() >= q);
            let s = build_bucket_scheme(&deltas, q, SchemeLevel::Content).unwrap();
            let mut counts = vec![0usize; s.intervals().len()];
            for &d in &deltas {
                counts[s.interval_index(d)] += 1;
            }
            let max = *counts.iter().max().unwrap();
            let min = *counts.iter().min().unwrap();
            prop_assert!(max - min <= 1, "counts {:?}", counts);
        }

        #[test]
        fn built_schemes_round_trip(
            deltas in proptest::collection::vec(-500i64..500, 8..60),
        ) {
            let distinct = {
                let mut v = deltas.clone();
                v.sort_unstable();
                v.dedup();
                v.len()
            };
            prop_assume!(distinct >= 4);
            let s = build_bucket_scheme(&deltas, 4, SchemeLevel::Document).unwrap();
            let back = BucketScheme::from_text(&s.to_text()).unwrap();
            prop_assert_eq!(back.intervals(), s.intervals());
            prop_assert_eq!(back.level(), s.level());
        }
    }
}
