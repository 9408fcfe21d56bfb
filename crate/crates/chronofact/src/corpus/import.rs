//! MultiFC-style TSV import. One claims file (tab-separated, no header
//! assumed) plus a directory of per-claim snippet files, one evidence
//! snippet per line.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::{ClaimInstance, EvidenceDoc, Metadata};
use crate::error::{Error, Result};
use crate::tagger;

/// Zero-based column positions in the claims file. Defaults follow the
/// common MultiFC dump order; override per source in the experiment config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub claim_id: usize,
    pub claim: usize,
    pub label: usize,
    pub category: Option<usize>,
    pub speaker: Option<usize>,
    pub tags: Option<usize>,
    pub publish_date: Option<usize>,
    pub entities: Option<usize>,
    /// Explicit domain column; when absent the domain is the claim id
    /// prefix before the first '-'.
    pub domain: Option<usize>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            claim_id: 0,
            claim: 1,
            label: 2,
            category: Some(5),
            speaker: Some(6),
            tags: Some(8),
            publish_date: Some(10),
            entities: Some(11),
            domain: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub imported: usize,
    pub skipped_unknown_label: usize,
    pub missing_snippet_files: usize,
}

fn split_bag(field: &str) -> Vec<String> {
    field
        .split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty() && *s != "None")
        .map(str::to_string)
        .collect()
}

fn parse_field_date(field: &str) -> Option<crate::date::CalendarDate> {
    let toks = tagger::tokenize(field);
    if toks.is_empty() {
        return None;
    }
    tagger::parse_explicit_date(&toks, 0).and_then(|(d, len)| (len == toks.len()).then_some(d))
}

/// Import claims and evidence snippets. `label_map` maps raw labels to
/// canonical ones; rows whose label is absent from a non-empty map are
/// skipped and counted. Evidence keeps the first `evidence_cap` snippets in
/// file order; a missing snippet file yields an empty evidence list.
pub fn import_multifc(
    claims_path: &Path,
    snippets_dir: &Path,
    columns: &ColumnMap,
    label_map: &BTreeMap<String, String>,
    evidence_cap: usize,
) -> Result<(Vec<ClaimInstance>, ImportReport)> {
    let file = BufReader::new(std::fs::File::open(claims_path)?);
    let mut out = Vec::new();
    let mut report = ImportReport::default();
    let malformed = |line: usize, msg: String| Error::MalformedRow {
        path: claims_path.display().to_string(),
        line,
        msg,
    };

    for (ln, line) in file.lines().enumerate() {
        let line_no = ln + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |idx: usize, what: &str| -> Result<&str> {
            fields
                .get(idx)
                .copied()
                .ok_or_else(|| malformed(line_no, format!("missing {what} column {idx}")))
        };
        let opt = |idx: Option<usize>| idx.and_then(|i| fields.get(i)).copied().unwrap_or("");

        let claim_id = get(columns.claim_id, "claim id")?.trim().to_string();
        if claim_id.is_empty() {
            return Err(malformed(line_no, "empty claim id".into()));
        }
        let claim_raw = get(columns.claim, "claim text")?;
        let raw_label = get(columns.label, "label")?.trim().to_lowercase();

        let label = if label_map.is_empty() {
            raw_label
        } else {
            match label_map.get(&raw_label) {
                Some(l) => l.clone(),
                None => {
                    report.skipped_unknown_label += 1;
                    continue;
                }
            }
        };

        let domain = match columns.domain {
            Some(i) => get(i, "domain")?.trim().to_string(),
            None => claim_id.split('-').next().unwrap_or(&claim_id).to_string(),
        };

        let claim_pub = parse_field_date(opt(columns.publish_date));
        let claim_text = tagger::tokenize(claim_raw);
        let claim_expressions = tagger::extract_time_expressions(&claim_text, claim_pub);
        let claim_annotations = tagger::annotate_tokens(&claim_text, &claim_expressions);

        let speaker = opt(columns.speaker).trim();
        let metadata = Metadata {
            speaker: (!speaker.is_empty() && speaker != "None").then(|| speaker.to_string()),
            category: split_bag(opt(columns.category)),
            tags: split_bag(opt(columns.tags)),
            entities: split_bag(opt(columns.entities)),
        };

        let snippet_path = snippets_dir.join(&claim_id);
        let mut evidence = Vec::new();
        match std::fs::read_to_string(&snippet_path) {
            Ok(content) => {
                for (i, snippet) in content
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .take(evidence_cap)
                    .enumerate()
                {
                    let doc_id = format!("{claim_id}#{i}");
                    let rec = tagger::tag_document(&doc_id, snippet, claim_pub);
                    evidence.push(EvidenceDoc {
                        doc_id,
                        text: tagger::tokenize(snippet),
                        pub_date: rec.publication_date,
                        expressions: rec.expressions,
                        annotations: rec.annotations,
                    });
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                report.missing_snippet_files += 1;
            }
            Err(e) => return Err(e.into()),
        }

        report.imported += 1;
        out.push(ClaimInstance {
            claim_id,
            domain,
            claim_text,
            claim_pub,
            label,
            claim_expressions,
            claim_annotations,
            metadata,
            evidence,
        });
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, content: &str) {
        std::fs::write(dir.join(name), content).unwrap();
    }

    #[test]
    fn imports_claims_and_snippets() {
        let dir = tempfile::tempdir().unwrap();
        let snip = dir.path().join("snippets");
        std::fs::create_dir(&snip).unwrap();
        let claims = "pomt-001\tThe storm hit yesterday.\tTRUE\t\t\tweather\talice\t\tstorms\t\t6/1/2017\tAlberto\n\
                      pomt-002\tTaxes rose.\tmaybe\t\t\t\tbob\t\t\t\t\t\n";
        write(dir.path(), "claims.tsv", claims);
        write(
            &snip,
            "pomt-001",
            "Jun 2, 2017 ... Storm made landfall.\nNo date in this one.\n",
        );

        let mut label_map = BTreeMap::new();
        label_map.insert("true".to_string(), "true".to_string());
        label_map.insert("false".to_string(), "false".to_string());

        let (insts, report) = import_multifc(
            &dir.path().join("claims.tsv"),
            &snip,
            &ColumnMap::default(),
            &label_map,
            10,
        )
        .unwrap();

        assert_eq!(report.imported, 1);
        assert_eq!(report.skipped_unknown_label, 1);
        assert_eq!(insts.len(), 1);
        let inst = &insts[0];
        assert_eq!(inst.domain, "pomt");
        assert_eq!(inst.label, "true");
        assert_eq!(inst.claim_pub, Some("2017-06-01".parse().unwrap()));
        assert_eq!(inst.metadata.speaker.as_deref(), Some("alice"));
        assert_eq!(inst.evidence.len(), 2);
        assert_eq!(inst.evidence[0].pub_date, Some("2017-06-02".parse().unwrap()));
        assert_eq!(inst.evidence[1].pub_date, None);
        // "yesterday" in the claim is anchored to the claim date.
        assert_eq!(inst.claim_expressions.len(), 1);
        assert_eq!(
            inst.claim_expressions[0].normalized,
            "2017-05-31".parse().unwrap()
        );
        inst.validate().unwrap();
    }

    #[test]
    fn missing_snippet_file_yields_empty_evidence() {
        let dir = tempfile::tempdir().unwrap();
        let snip = dir.path().join("snippets");
        std::fs::create_dir(&snip).unwrap();
        write(dir.path(), "claims.tsv", "abc-1\tSomething happened.\ttrue\n");
        let (insts, report) = import_multifc(
            &dir.path().join("claims.tsv"),
            &snip,
            &ColumnMap::default(),
            &BTreeMap::new(),
            10,
        )
        .unwrap();
        assert_eq!(insts[0].evidence.len(), 0);
        assert_eq!(report.missing_snippet_files, 1);
    }

    #[test]
    fn malformed_row_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let snip = dir.path().join("snippets");
        std::fs::create_dir(&snip).unwrap();
        write(dir.path(), "claims.tsv", "ok-1\tfine claim\ttrue\nonly-one-field\n");
        match import_multifc(
            &dir.path().join("claims.tsv"),
            &snip,
            &ColumnMap::default(),
            &BTreeMap::new(),
            10,
        ) {
            Err(Error::MalformedRow { line: 2, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn evidence_cap_applies_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let snip = dir.path().join("snippets");
        std::fs::create_dir(&snip).unwrap();
        write(dir.path(), "claims.tsv", "x-1\tclaim text\ttrue\n");
        let lines: Vec<String> = (0..12).map(|i| format!("snippet number {i}")).collect();
        write(&snip, "x-1", &lines.join("\n"));
        let (insts, _) = import_multifc(
            &dir.path().join("claims.tsv"),
            &snip,
            &ColumnMap::default(),
            &BTreeMap::new(),
            10,
        )
        .unwrap();
        assert_eq!(insts[0].evidence.len(), 10);
        assert_eq!(insts[0].evidence[0].text[1], "number");
        assert!(insts[0].evidence[0].doc_id.ends_with("#0"));
    }
}
