//! Turns corpus instances into the integer form the network consumes:
//! word ids, label ids with per-domain masks, metadata multi-hot vectors,
//! and temporal bucket indices at both levels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimInstance, MetadataVocab};
use crate::error::{Error, Result};
use crate::tagger::{TokenAnnotation, TokenType};
use crate::timeline::{ground_content_level, ground_document_level, BucketScheme, SchemeLevel};

pub const UNK: usize = 0;
const UNK_TOKEN: &str = "<unk>";

/// Token vocabulary. Id 0 is reserved for unknown tokens; everything else
/// is assigned in sorted order so builds are reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    pub fn build(instances: &[ClaimInstance]) -> Self {
        let mut seen = BTreeSet::new();
        for inst in instances {
            seen.extend(inst.claim_text.iter().cloned());
            for ev in &inst.evidence {
                seen.extend(ev.text.iter().cloned());
            }
        }
        seen.remove(UNK_TOKEN);
        let mut tokens = vec![UNK_TOKEN.to_string()];
        tokens.extend(seen);
        Vocab::from(tokens)
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().cloned().zip(0..).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Vec<String> {
        v.tokens
    }
}

/// Global label vocabulary with one mask per domain. Scores are produced
/// for every label; the mask confines the softmax to the domain's set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocab {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
    domain_masks: BTreeMap<String, Vec<bool>>,
}

impl LabelVocab {
    pub fn build(instances: &[ClaimInstance]) -> Self {
        let per_domain = crate::corpus::domain_label_sets(instances);
        let mut all = BTreeSet::new();
        for labels in per_domain.values() {
            all.extend(labels.iter().cloned());
        }
        let labels: Vec<String> = all.into_iter().collect();
        let index: BTreeMap<String, usize> = labels.iter().cloned().zip(0..).collect();
        let domain_masks = per_domain
            .into_iter()
            .map(|(domain, set)| {
                let mask = labels.iter().map(|l| set.contains(l)).collect();
                (domain, mask)
            })
            .collect();
        LabelVocab { labels, index, domain_masks }
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn domains(&self) -> impl Iterator<Item = &String> {
        self.domain_masks.keys()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn mask(&self, domain: &str) -> Result<&[bool]> {
        self.domain_masks
            .get(domain)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Corpus(format!("domain {domain:?} not in label vocabulary")))
    }

    /// Label ids allowed for a domain, ascending.
    pub fn domain_label_ids(&self, domain: &str) -> Result<Vec<usize>> {
        Ok(self
            .mask(domain)?
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect())
    }
}

/// One document ready for the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDoc {
    pub tokens: Vec<usize>,
    /// Aligned with `tokens`. All-Other when the source had no annotations.
    pub marks: Vec<TokenAnnotation>,
    /// Document-level bucket index.
    pub doc_bucket: usize,
    /// Content-level bucket per time expression; empty when the claim has
    /// no publication date.
    pub content_buckets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedInstance {
    pub claim_id: String,
    pub domain: String,
    pub label_id: usize,
    pub label_mask: Vec<bool>,
    /// Metadata multi-hot; length is the metadata vocabulary dimension.
    pub metadata: Vec<f64>,
    pub claim: EncodedDoc,
    pub evidence: Vec<EncodedDoc>,
}

/// Everything fitted on the training split that instance encoding needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Encoder {
    pub vocab: Vocab,
    pub labels: LabelVocab,
    pub metadata: MetadataVocab,
    pub doc_scheme: BucketScheme,
    pub con_scheme: BucketScheme,
}

impl Encoder {
    pub fn fit(
        train: &[ClaimInstance],
        doc_scheme: BucketScheme,
        con_scheme: BucketScheme,
    ) -> Result<Encoder> {
        if doc_scheme.level() != SchemeLevel::Document {
            return Err(Error::Config("document scheme required for doc grounding".into()));
        }
        if con_scheme.level() != SchemeLevel::Content {
            return Err(Error::Config("content scheme required for content grounding".into()));
        }
        if train.is_empty() {
            return Err(Error::EmptyInput("encoder needs at least one training instance".into()));
        }
        Ok(Encoder {
            vocab: Vocab::build(train),
            labels: LabelVocab::build(train),
            metadata: MetadataVocab::build(train),
            doc_scheme,
            con_scheme,
        })
    }

    pub fn encode_instance(&self, inst: &ClaimInstance) -> Result<EncodedInstance> {
        inst.validate()?;
        let label_id = self.labels.id(&inst.label).ok_or_else(|| {
            Error::Corpus(format!(
                "{}: label {:?} not in label vocabulary",
                inst.claim_id, inst.label
            ))
        })?;
        let label_mask = self.labels.mask(&inst.domain)?.to_vec();
        if !label_mask[label_id] {
            return Err(Error::Corpus(format!(
                "{}: label {:?} outside domain {:?}",
                inst.claim_id, inst.label, inst.domain
            )));
        }

        let evidence_pubs: Vec<_> = inst.evidence.iter().map(|e| e.pub_date).collect();
        let (doc_claim, doc_evidence) =
            ground_document_level(inst.claim_pub, &evidence_pubs, &self.doc_scheme);

        let claim_dates: Vec<_> = inst.claim_expressions.iter().map(|e| e.normalized).collect();
        let evidence_dates: Vec<Vec<_>> = inst
            .evidence
            .iter()
            .map(|e| e.expressions.iter().map(|x| x.normalized).collect())
            .collect();
        let (con_claim, con_evidence) =
            ground_content_level(inst.claim_pub, &claim_dates, &evidence_dates, &self.con_scheme);

        let claim = encode_doc(
            &self.vocab,
            &inst.claim_text,
            &inst.claim_annotations,
            doc_claim.indices[0],
            con_claim.indices,
        )?;
        let evidence = inst
            .evidence
            .iter()
            .zip(doc_evidence)
            .zip(con_evidence)
            .map(|((ev, doc_rep), con_rep)| {
                encode_doc(
                    &self.vocab,
                    &ev.text,
                    &ev.annotations,
                    doc_rep.indices[0],
                    con_rep.indices,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(EncodedInstance {
            claim_id: inst.claim_id.clone(),
            domain: inst.domain.clone(),
            label_id,
            label_mask,
            metadata: self.metadata.encode(&inst.metadata).into_iter().map(f64::from).collect(),
            claim,
            evidence,
        })
    }

    pub fn encode_all(&self, instances: &[ClaimInstance]) -> Result<Vec<EncodedInstance>> {
        instances.iter().map(|i| self.encode_instance(i)).collect()
    }
}

fn encode_doc(
    vocab: &Vocab,
    tokens: &[String],
    annotations: &[TokenAnnotation],
    doc_bucket: usize,
    content_buckets: Vec<usize>,
) -> Result<EncodedDoc> {
    let other = TokenAnnotation { token_type: TokenType::Other, pred_offset: None, expr_index: None };
    let mut marks: Vec<TokenAnnotation> = if annotations.is_empty() {
        vec![other; tokens.len()]
    } else {
        annotations.to_vec()
    };
    // Without content buckets the time-token mixing has no expression
    // embedding to draw on, so time marks revert to plain tokens.
    // Predicate marks stay: they do not reference bucket embeddings.
    if content_buckets.is_empty() {
        for m in &mut marks {
            if matches!(m.token_type, TokenType::BeginTime | TokenType::Time) {
                m.token_type = TokenType::Other;
                m.expr_index = None;
            }
        }
    } else {
        for m in &marks {
            if let Some(j) = m.expr_index {
                if j >= content_buckets.len() {
                    return Err(Error::DanglingExprIndex { index: j, len: content_buckets.len() });
                }
            }
        }
    }
    Ok(EncodedDoc {
        tokens: vocab.encode(tokens),
        marks,
        doc_bucket,
        content_buckets,
    })
}
