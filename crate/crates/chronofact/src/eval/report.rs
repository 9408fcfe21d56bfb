//! Corpus-level evaluation: per-domain and aggregate F1, confusion
//! matrices, per-instance predicted distributions, and plain-text
//! renderings (tables plus two-column plot dumps).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{micro_macro_f1, Confusion};
use crate::model::encode::{EncodedInstance, LabelVocab};
use crate::model::forward::predict;
use crate::model::{ModelConfig, ParamSet, Real};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceEval {
    pub claim_id: String,
    pub domain: String,
    pub gold: usize,
    pub predicted: usize,
    /// Masked label distribution over the full label set.
    pub probs: Vec<f64>,
    pub zero_evidence: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainEval {
    pub domain: String,
    pub n: usize,
    pub micro_f1: f64,
    /// Averaged over the domain's full label set, including labels the
    /// model never predicted.
    pub macro_f1: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub domains: Vec<DomainEval>,
    /// Pooled over all instances.
    pub micro_f1: f64,
    /// Averaged over the global label set.
    pub macro_f1: f64,
    pub confusion: Confusion,
    pub n_instances: usize,
    pub n_zero_evidence: usize,
    pub per_instance: Vec<InstanceEval>,
    /// Human-readable label names aligned with label ids.
    pub labels: Vec<String>,
}

/// Run the model over every instance and aggregate. Zero-evidence
/// instances predict the uniform-distribution argmax and are counted.
pub fn evaluate<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    labels: &LabelVocab,
    insts: &[EncodedInstance],
) -> Result<EvalReport> {
    if insts.is_empty() {
        return Err(Error::EmptyInput("nothing to evaluate".into()));
    }
    let mut per_instance = Vec::with_capacity(insts.len());
    let mut n_zero = 0usize;
    for inst in insts {
        let pred = predict(cfg, params, inst)?;
        if pred.zero_evidence {
            n_zero += 1;
        }
        per_instance.push(InstanceEval {
            claim_id: inst.claim_id.clone(),
            domain: inst.domain.clone(),
            gold: inst.label_id,
            predicted: pred.predicted,
            probs: pred.probs.iter().map(|p| p.to_f64()).collect(),
            zero_evidence: pred.zero_evidence,
        });
    }

    let n_labels = labels.n_labels();
    let mut by_domain: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for row in &per_instance {
        let entry = by_domain.entry(row.domain.clone()).or_default();
        entry.0.push(row.predicted);
        entry.1.push(row.gold);
    }
    let mut domains = Vec::with_capacity(by_domain.len());
    for (domain, (preds, golds)) in &by_domain {
        let label_ids = labels.domain_label_ids(domain)?;
        let (micro, macro_) = micro_macro_f1(preds, golds, &label_ids)?;
        domains.push(DomainEval {
            domain: domain.clone(),
            n: preds.len(),
            micro_f1: micro,
            macro_f1: macro_,
            confusion: Confusion::from_pairs(preds, golds, n_labels)?,
        });
    }

    let preds: Vec<usize> = per_instance.iter().map(|r| r.predicted).collect();
    let golds: Vec<usize> = per_instance.iter().map(|r| r.gold).collect();
    let all_labels: Vec<usize> = (0..n_labels).collect();
    let (micro, macro_) = micro_macro_f1(&preds, &golds, &all_labels)?;

    Ok(EvalReport {
        domains,
        micro_f1: micro,
        macro_f1: macro_,
        confusion: Confusion::from_pairs(&preds, &golds, n_labels)?,
        n_instances: insts.len(),
        n_zero_evidence: n_zero,
        per_instance,
        labels: labels.labels().to_vec(),
    })
}

impl EvalReport {
    /// Plain-text summary: one row per domain plus the aggregate.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>6} {:>10} {:>10}", "domain", "n", "micro_f1", "macro_f1");
        for d in &self.domains {
            let _ = writeln!(
                out,
                "{:<16} {:>6} {:>10.4} {:>10.4}",
                d.domain, d.n, d.micro_f1, d.macro_f1
            );
        }
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>10.4} {:>10.4}",
            "ALL", self.n_instances, self.micro_f1, self.macro_f1
        );
        if self.n_zero_evidence > 0 {
            let _ = writeln!(out, "zero-evidence instances: {}", self.n_zero_evidence);
        }
        out
    }

    /// Confusion matrix as text, rows = gold, columns = predicted.
    pub fn render_confusion(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<14}", "gold\\pred");
        for l in &self.labels {
            let _ = write!(out, " {l:>12}");
        }
        let _ = writeln!(out);
        for (g, row) in self.confusion.counts.iter().enumerate() {
            let _ = write!(out, "{:<14}", self.labels[g]);
            for c in row {
                let _ = write!(out, " {c:>12}");
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Two-column x/y dump consumable by any plotting tool. Lines starting
/// with `#` are comments.
pub fn plot_series(title: &str, points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    for (x, y) in points {
        let _ = writeln!(out, "{x}\t{y}");
    }
    out
}
