//! Synthetic desk-scale corpora with known label rules. Evidence dates are
//! rendered into the snippet text, so the full tagging/grounding path is
//! exercised end to end rather than bypassed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimInstance, EvidenceDoc, Metadata};
use crate::date::CalendarDate;
use crate::error::{Error, Result};
use crate::seed;
use crate::tagger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Label is "false" iff a strict majority of evidence postdates the claim.
    TimeRule,
    /// Label follows a keyword planted in the claim text; dates are noise.
    TextRule,
    /// XOR of the two signals above.
    Mixed,
}

impl std::str::FromStr for LabelRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time_rule" => Ok(LabelRule::TimeRule),
            "text_rule" => Ok(LabelRule::TextRule),
            "mixed" => Ok(LabelRule::Mixed),
            other => Err(Error::Config(format!("unknown label rule {other:?}"))),
        }
    }
}

impl LabelRule {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelRule::TimeRule => "time_rule",
            LabelRule::TextRule => "text_rule",
            LabelRule::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_domains: usize,
    pub claims_per_domain: usize,
    /// Odd counts keep the strict-majority rule unambiguous.
    pub evidence_per_claim: usize,
    pub rule: LabelRule,
    pub vocab_size: usize,
    pub claim_len: usize,
    pub evidence_len: usize,
    pub max_abs_delta: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_domains: 3,
            claims_per_domain: 60,
            evidence_per_claim: 5,
            rule: LabelRule::TimeRule,
            vocab_size: 40,
            claim_len: 8,
            evidence_len: 10,
            max_abs_delta: 30,
        }
    }
}

/// Per-instance generation record, emitted alongside the corpus so tests can
/// check grounding and labels against the construction directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceTruth {
    pub claim_id: String,
    /// Publication-date delta of each evidence doc, in days.
    pub deltas: Vec<i64>,
    pub majority_after: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_bit: Option<bool>,
}

const MONTH_ABBR: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

fn render_date(d: CalendarDate) -> String {
    format!("{} {}, {}", MONTH_ABBR[d.month() as usize - 1], d.day(), d.year())
}

pub fn generate_synthetic(
    config: &SynthConfig,
    gen_seed: u64,
) -> (Vec<ClaimInstance>, Vec<InstanceTruth>) {
    assert!(config.n_domains > 0 && config.claims_per_domain > 0);
    assert!(config.evidence_per_claim > 0 && config.max_abs_delta > 0);
    let mut instances = Vec::new();
    let mut truths = Vec::new();
    let base: CalendarDate = "2018-01-01".parse().expect("valid base date");

    for d in 0..config.n_domains {
        let domain = format!("d{d}");
        let mut rng = seed::rng(gen_seed, &format!("synth/{domain}"));
        for c in 0..config.claims_per_domain {
            let claim_id = format!("{domain}-c{c:04}");
            let claim_pub = base.plus_days(rng.gen_range(0..365));

            let mut deltas = Vec::with_capacity(config.evidence_per_claim);
            for _ in 0..config.evidence_per_claim {
                let magnitude = rng.gen_range(1..=config.max_abs_delta);
                deltas.push(if rng.gen_bool(0.5) { magnitude } else { -magnitude });
            }
            let majority_after =
                deltas.iter().filter(|&&x| x > 0).count() * 2 > config.evidence_per_claim;

            let text_bit = match config.rule {
                LabelRule::TimeRule => None,
                LabelRule::TextRule | LabelRule::Mixed => Some(rng.gen_bool(0.5)),
            };
            let label = match config.rule {
                LabelRule::TimeRule => !majority_after,
                LabelRule::TextRule => text_bit.unwrap(),
                LabelRule::Mixed => majority_after ^ text_bit.unwrap(),
            };
            let label = if label { "true" } else { "false" };

            let mut claim_text: Vec<String> = (0..config.claim_len)
                .map(|_| format!("w{}", rng.gen_range(0..config.vocab_size)))
                .collect();
            if let Some(bit) = text_bit {
                let pos = rng.gen_range(0..=claim_text.len());
                claim_text.insert(pos, if bit { "zeta" } else { "omega" }.to_string());
            }
            let claim_expressions = tagger::extract_time_expressions(&claim_text, Some(claim_pub));
            let claim_annotations = tagger::annotate_tokens(&claim_text, &claim_expressions);

            let evidence = deltas
                .iter()
                .enumerate()
                .map(|(i, &delta)| {
                    let ev_date = claim_pub.plus_days(delta);
                    let filler: Vec<String> = (0..config.evidence_len)
                        .map(|_| format!("w{}", rng.gen_range(0..config.vocab_size)))
                        .collect();
                    let text = format!("{} ... {}", render_date(ev_date), filler.join(" "));
                    let doc_id = format!("{claim_id}#{i}");
                    let rec = tagger::tag_document(&doc_id, &text, Some(claim_pub));
                    debug_assert_eq!(rec.publication_date, Some(ev_date));
                    EvidenceDoc {
                        doc_id,
                        text: tagger::tokenize(&text),
                        pub_date: rec.publication_date,
                        expressions: rec.expressions,
                        annotations: rec.annotations,
                    }
                })
                .collect();

            truths.push(InstanceTruth {
                claim_id: claim_id.clone(),
                deltas: deltas.clone(),
                majority_after,
                text_bit,
            });
            instances.push(ClaimInstance {
                claim_id: claim_id.clone(),
                domain: domain.clone(),
                claim_text,
                claim_pub: Some(claim_pub),
                label: label.to_string(),
                claim_expressions,
                claim_annotations,
                metadata: Metadata {
                    speaker: Some(format!("spk{}_{}", d, c % 7)),
                    category: vec![domain.clone()],
                    tags: Vec::new(),
                    entities: Vec::new(),
                },
                evidence,
            });
        }
    }
    (instances, truths)
}
