//! Classification metrics and rank correlation.

use crate::error::{Error, Result};

/// Per-label confusion counts for label ids in `0..n_labels`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Confusion {
    pub n_labels: usize,
    /// `counts[gold][pred]`.
    pub counts: Vec<Vec<usize>>,
}

impl Confusion {
    pub fn from_pairs(preds: &[usize], golds: &[usize], n_labels: usize) -> Result<Confusion> {
        if preds.len() != golds.len() {
            return Err(Error::DimMismatch(format!(
                "{} predictions vs {} golds",
                preds.len(),
                golds.len()
            )));
        }
        if preds.is_empty() {
            return Err(Error::EmptyInput("metrics need at least one prediction".into()));
        }
        let mut counts = vec![vec![0usize; n_labels]; n_labels];
        for (&p, &g) in preds.iter().zip(golds) {
            if p >= n_labels || g >= n_labels {
                return Err(Error::DimMismatch(format!(
                    "label id out of range: pred {p}, gold {g}, {n_labels} labels"
                )));
            }
            counts[g][p] += 1;
        }
        Ok(Confusion { n_labels, counts })
    }

    pub fn tp(&self, l: usize) -> usize {
        self.counts[l][l]
    }

    pub fn fp(&self, l: usize) -> usize {
        (0..self.n_labels).filter(|&g| g != l).map(|g| self.counts[g][l]).sum()
    }

    pub fn fn_(&self, l: usize) -> usize {
        (0..self.n_labels).filter(|&p| p != l).map(|p| self.counts[l][p]).sum()
    }

    pub fn gold_count(&self, l: usize) -> usize {
        self.counts[l].iter().sum()
    }

    pub fn f1(&self, l: usize) -> f64 {
        let tp = self.tp(l) as f64;
        let denom = 2.0 * tp + self.fp(l) as f64 + self.fn_(l) as f64;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    }
}

/// Micro F1 pools true/false positives over all labels, which reduces to
/// accuracy for single-label multiclass. Macro F1 is the unweighted mean
/// over `labels`; labels absent from both sides contribute 0.
pub fn micro_macro_f1(
    preds: &[usize],
    golds: &[usize],
    labels: &[usize],
) -> Result<(f64, f64)> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("macro F1 needs a non-empty label set".into()));
    }
    let n_labels = 1 + labels
        .iter()
        .chain(preds)
        .chain(golds)
        .copied()
        .max()
        .expect("non-empty by checks above");
    let c = Confusion::from_pairs(preds, golds, n_labels)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for l in 0..n_labels {
        tp += c.tp(l);
        fp += c.fp(l);
        fn_ += c.fn_(l);
    }
    let micro = 2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64);
    let macro_ = labels.iter().map(|&l| c.f1(l)).sum::<f64>() / labels.len() as f64;
    Ok((micro, macro_))
}

/// 1-based ranks with ties assigned the mean rank of their run.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).expect("non-finite rank input"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Numerical("rank correlation undefined for constant input".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Spearman rank correlation: Pearson over average ranks, so ties are
/// handled. Rejects fewer than two points and constant inputs.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(format!("{} vs {} scores", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::EmptyInput("rank correlation needs at least two points".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}
