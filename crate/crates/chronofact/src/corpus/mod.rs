//! Claim instances, their canonical on-disk format, metadata encoding, and
//! corpus construction (import of MultiFC-style TSV, synthetic generation,
//! stratified splits).
//!
//! The canonical format is line-delimited JSON, one instance per line. The
//! importer owns all TSV quirks behind a column map so nothing downstream
//! depends on the source layout.

mod import;
mod split;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::date::CalendarDate;
use crate::error::{Error, Result};
use crate::tagger::{TimeExpression, TokenAnnotation};

pub use import::{import_multifc, ColumnMap, ImportReport};
pub use split::stratified_split;
pub use synth::{generate_synthetic, InstanceTruth, LabelRule, SynthConfig};

/// Categorical feature bags attached to a claim.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub category: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceDoc {
    pub doc_id: String,
    /// Token list, not raw text.
    pub text: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pub_date: Option<CalendarDate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expressions: Vec<TimeExpression>,
    pub annotations: Vec<TokenAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimInstance {
    pub claim_id: String,
    pub domain: String,
    pub claim_text: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_pub: Option<CalendarDate>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claim_expressions: Vec<TimeExpression>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claim_annotations: Vec<TokenAnnotation>,
    #[serde(default)]
    pub metadata: Metadata,
    pub evidence: Vec<EvidenceDoc>,
}

impl ClaimInstance {
    /// Structural checks the canonical reader enforces: annotation lists
    /// align with their token lists.
    pub fn validate(&self) -> Result<()> {
        if !self.claim_annotations.is_empty() && self.claim_annotations.len() != self.claim_text.len()
        {
            return Err(Error::Corpus(format!(
                "{}: claim annotations/token mismatch",
                self.claim_id
            )));
        }
        for ev in &self.evidence {
            if !ev.annotations.is_empty() && ev.annotations.len() != ev.text.len() {
                return Err(Error::Corpus(format!(
                    "{}: annotations/token mismatch",
                    ev.doc_id
                )));
            }
        }
        Ok(())
    }
}

pub fn write_instances(path: &Path, instances: &[ClaimInstance]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for inst in instances {
        serde_json::to_writer(&mut f, inst)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_instances(path: &Path) -> Result<Vec<ClaimInstance>> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (ln, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: ClaimInstance = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            path: path.display().to_string(),
            line: ln + 1,
            msg: e.to_string(),
        })?;
        inst.validate()?;
        out.push(inst);
    }
    Ok(out)
}

/// Label sets observed per domain, in sorted order.
pub fn domain_label_sets(instances: &[ClaimInstance]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for inst in instances {
        out.entry(inst.domain.clone()).or_default().insert(inst.label.clone());
    }
    out
}

/// One-hot/multi-hot metadata encoding over a vocabulary built from the
/// training split. Unseen features at encode time are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataVocab {
    features: BTreeMap<String, usize>,
}

impl MetadataVocab {
    pub fn build(instances: &[ClaimInstance]) -> Self {
        let mut names = BTreeSet::new();
        for inst in instances {
            for f in Self::feature_names(&inst.metadata) {
                names.insert(f);
            }
        }
        let features = names.into_iter().zip(0..).collect();
        MetadataVocab { features }
    }

    fn feature_names(m: &Metadata) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(s) = &m.speaker {
            out.push(format!("speaker={s}"));
        }
        out.extend(m.category.iter().map(|c| format!("category={c}")));
        out.extend(m.tags.iter().map(|t| format!("tag={t}")));
        out.extend(m.entities.iter().map(|e| format!("entity={e}")));
        out
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn encode(&self, m: &Metadata) -> Vec<f32> {
        let mut v = vec![0.0; self.features.len()];
        for name in Self::feature_names(m) {
            if let Some(&i) = self.features.get(&name) {
                v[i] = 1.0;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger;

    fn sample_instance() -> ClaimInstance {
        let ev_text = "Jun 2, 2017 ... Storm Alberto is expected to make landfall tomorrow.";
        let rec = tagger::tag_document("c1#0", ev_text, None);
        ClaimInstance {
            claim_id: "c1".into(),
            domain: "pomt".into(),
            claim_text: tagger::tokenize("A storm will hit tomorrow."),
            claim_pub: Some("2017-06-01".parse().unwrap()),
            label: "true".into(),
            claim_expressions: Vec::new(),
            claim_annotations: Vec::new(),
            metadata: Metadata {
                speaker: Some("alice".into()),
                category: vec!["weather".into()],
                tags: vec![],
                entities: vec!["Alberto".into()],
            },
            evidence: vec![EvidenceDoc {
                doc_id: "c1#0".into(),
                text: tagger::tokenize(ev_text),
                pub_date: rec.publication_date,
                expressions: rec.expressions,
                annotations: rec.annotations,
            }],
        }
    }

    #[test]
    fn canonical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let insts = vec![sample_instance()];
        write_instances(&path, &insts).unwrap();
        let back = read_instances(&path).unwrap();
        assert_eq!(back, insts);
    }

    #[test]
    fn reader_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let mut good = String::new();
        good.push_str(&serde_json::to_string(&sample_instance()).unwrap());
        good.push_str("\n{not json}\n");
        std::fs::write(&path, good).unwrap();
        match read_instances(&path) {
            Err(Error::MalformedRow { line: 2, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn metadata_vocab_encodes_multihot() {
        let inst = sample_instance();
        let vocab = MetadataVocab::build(std::slice::from_ref(&inst));
        assert_eq!(vocab.dim(), 3);
        let v = vocab.encode(&inst.metadata);
        assert_eq!(v, vec![1.0, 1.0, 1.0]);
        let other = Metadata { speaker: Some("bob".into()), ..Default::default() };
        assert_eq!(vocab.encode(&other), vec![0.0, 0.0, 0.0]);
        assert!(vocab.encode(&inst.metadata).iter().all(|&x| x == 0.0 || x == 1.0));
    }
}
