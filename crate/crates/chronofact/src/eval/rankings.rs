//! Rank-correlation analyses over evidence orderings: how differently two
//! model variants order the same evidence, and whether evidence sharing a
//! publication-date bucket induces similar label-score orderings.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::metrics::spearman;
use crate::model::encode::EncodedInstance;
use crate::model::forward::predict;
use crate::model::{ModelConfig, ParamSet, Real};
use crate::seed;

/// Which per-evidence quantity induces the ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBy {
    /// Relevance score `o_i`.
    Relevance,
    /// Label score `q_i` at the instance's gold label. Orderings from
    /// different models stay comparable because both are read at the same
    /// label.
    LabelScores,
}

/// Ranks (1 = largest score) with ties broken by evidence index, so the
/// result is always a permutation and two models' rankings are comparable
/// even when one scores two documents identically.
fn ranks_desc(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; scores.len()];
    for (rank, &i) in order.iter().enumerate() {
        ranks[i] = (rank + 1) as f64;
    }
    ranks
}

fn evidence_scores<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    inst: &EncodedInstance,
    by: RankBy,
) -> Result<Vec<f64>> {
    let pred = predict(cfg, params, inst)?;
    let scores = match by {
        RankBy::Relevance => pred.evidence_scores.iter().map(|s| s.to_f64()).collect(),
        RankBy::LabelScores => pred
            .label_scores
            .iter()
            .map(|q| q[inst.label_id].to_f64())
            .collect(),
    };
    Ok(scores)
}

/// Distribution of per-instance Spearman correlations between two models'
/// evidence orderings.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RankingComparison {
    /// One r_s per compared instance, in input order.
    pub r_values: Vec<f64>,
    pub mean_r: f64,
    pub mean_abs_r: f64,
    /// Instances with fewer than two evidence documents.
    pub skipped: usize,
}

impl RankingComparison {
    /// Histogram over [-1, 1] with `bins` equal-width cells; r = 1 lands
    /// in the last cell. Returns (lower edge, count) rows.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, usize)> {
        assert!(bins >= 1);
        let width = 2.0 / bins as f64;
        let mut counts = vec![0usize; bins];
        for &r in &self.r_values {
            let cell = (((r + 1.0) / width) as usize).min(bins - 1);
            counts[cell] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (-1.0 + i as f64 * width, c))
            .collect()
    }
}

/// Per-instance Spearman between the evidence orderings two models assign
/// to the same instances. Instances with fewer than two evidence documents
/// cannot be ranked and are skipped but counted. Symmetric in the models.
pub fn compare_rankings<F: Real>(
    model_a: (&ModelConfig, &ParamSet<F>),
    model_b: (&ModelConfig, &ParamSet<F>),
    instances: &[EncodedInstance],
    by: RankBy,
) -> Result<RankingComparison> {
    let mut r_values = Vec::new();
    let mut skipped = 0usize;
    for inst in instances {
        if inst.evidence.len() < 2 {
            skipped += 1;
            continue;
        }
        let sa = evidence_scores(model_a.0, model_a.1, inst, by)?;
        let sb = evidence_scores(model_b.0, model_b.1, inst, by)?;
        let r = spearman(&ranks_desc(&sa), &ranks_desc(&sb))?;
        r_values.push(r);
    }
    if r_values.is_empty() {
        return Err(Error::EmptyInput(
            "no instance with at least two evidence documents".into(),
        ));
    }
    let mean_r = r_values.iter().sum::<f64>() / r_values.len() as f64;
    let mean_abs_r = r_values.iter().map(|r| r.abs()).sum::<f64>() / r_values.len() as f64;
    Ok(RankingComparison { r_values, mean_r, mean_abs_r, skipped })
}

/// Within- versus across-bucket agreement of label-score orderings.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BucketCorrelation {
    /// Mean Spearman over evidence pairs sharing a publication-date bucket.
    pub within_mean: f64,
    /// Mean Spearman over evidence pairs from different buckets.
    pub across_mean: f64,
    pub n_within: usize,
    pub n_across: usize,
    /// Buckets too small to form a pair.
    pub skipped_small_buckets: usize,
    /// Pairs dropped because a constant score vector has no ranking.
    pub skipped_constant: usize,
}

/// One evidence document's label scores, restricted to its domain's labels.
#[derive(Debug, Clone)]
pub struct ScoredDoc {
    pub domain: String,
    pub bucket: usize,
    pub q: Vec<f64>,
}

/// Groups every evidence document by its publication-date bucket and
/// compares label-score orderings (Spearman over each document's `q_i`
/// restricted to the domain's labels) within buckets versus across
/// buckets. Pairs never cross domains, since label sets differ. At most
/// `max_pairs` pairs are used on each side, subsampled deterministically
/// from `sample_seed` when the population is larger.
pub fn bucket_label_correlation<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    instances: &[EncodedInstance],
    max_pairs: usize,
    sample_seed: u64,
) -> Result<BucketCorrelation> {
    let mut docs: Vec<ScoredDoc> = Vec::new();
    for inst in instances {
        if inst.evidence.is_empty() {
            continue;
        }
        let allowed: Vec<usize> = inst
            .label_mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
            .collect();
        let pred = predict(cfg, params, inst)?;
        for (doc, q) in inst.evidence.iter().zip(&pred.label_scores) {
            docs.push(ScoredDoc {
                domain: inst.domain.clone(),
                bucket: doc.doc_bucket,
                q: allowed.iter().map(|&l| q[l].to_f64()).collect(),
            });
        }
    }
    bucket_score_correlation(&docs, max_pairs, sample_seed)
}

/// The pairing and correlation core of [`bucket_label_correlation`], over
/// pre-computed scores. Useful for null checks: feeding random score
/// vectors should drive both means toward zero.
pub fn bucket_score_correlation(
    docs: &[ScoredDoc],
    max_pairs: usize,
    sample_seed: u64,
) -> Result<BucketCorrelation> {
    if max_pairs == 0 {
        return Err(Error::Config("max_pairs must be at least 1".into()));
    }
    if docs.len() < 2 {
        return Err(Error::EmptyInput("need at least two scored evidence documents".into()));
    }

    let mut by_bucket: BTreeMap<(String, usize), Vec<usize>> = BTreeMap::new();
    for (i, d) in docs.iter().enumerate() {
        by_bucket.entry((d.domain.clone(), d.bucket)).or_default().push(i);
    }

    let mut within_pairs: Vec<(usize, usize)> = Vec::new();
    let mut skipped_small_buckets = 0usize;
    for members in by_bucket.values() {
        if members.len() < 2 {
            skipped_small_buckets += 1;
            continue;
        }
        for (ai, &a) in members.iter().enumerate() {
            for &b in &members[ai + 1..] {
                within_pairs.push((a, b));
            }
        }
    }
    if within_pairs.len() > max_pairs {
        let mut rng = seed::rng(sample_seed, "bucket/within");
        within_pairs.shuffle(&mut rng);
        within_pairs.truncate(max_pairs);
    }

    // Across-bucket pairs are quadratic in corpus size; sample instead of
    // enumerating once the population is large.
    let mut across_pairs: Vec<(usize, usize)> = Vec::new();
    let total_pairs = docs.len() * (docs.len() - 1) / 2;
    let mut rng = seed::rng(sample_seed, "bucket/across");
    let cross = |a: usize, b: usize| {
        docs[a].domain == docs[b].domain && docs[a].bucket != docs[b].bucket
    };
    if total_pairs <= 4 * max_pairs {
        for a in 0..docs.len() {
            for b in a + 1..docs.len() {
                if cross(a, b) {
                    across_pairs.push((a, b));
                }
            }
        }
        if across_pairs.len() > max_pairs {
            across_pairs.shuffle(&mut rng);
            across_pairs.truncate(max_pairs);
        }
    } else {
        let mut attempts = 0usize;
        while across_pairs.len() < max_pairs && attempts < 50 * max_pairs {
            attempts += 1;
            let a = rng.gen_range(0..docs.len());
            let b = rng.gen_range(0..docs.len());
            if a != b && cross(a.min(b), a.max(b)) {
                across_pairs.push((a.min(b), a.max(b)));
            }
        }
    }

    let mut skipped_constant = 0usize;
    let mut mean_over = |pairs: &[(usize, usize)]| -> (f64, usize) {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &(a, b) in pairs {
            let ra = ranks_desc(&docs[a].q);
            let rb = ranks_desc(&docs[b].q);
            match spearman(&ra, &rb) {
                Ok(r) => {
                    sum += r;
                    n += 1;
                }
                Err(Error::Numerical(_)) => skipped_constant += 1,
                Err(e) => panic!("unexpected spearman failure: {e}"),
            }
        }
        (if n > 0 { sum / n as f64 } else { f64::NAN }, n)
    };
    let (within_mean, n_within) = mean_over(&within_pairs);
    let (across_mean, n_across) = mean_over(&across_pairs);
    if n_within == 0 || n_across == 0 {
        return Err(Error::EmptyInput(
            "not enough comparable evidence pairs within and across buckets".into(),
        ));
    }
    Ok(BucketCorrelation {
        within_mean,
        across_mean,
        n_within,
        n_across,
        skipped_small_buckets,
        skipped_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, LabelRule, SynthConfig};
    use crate::model::encode::Encoder;
    use crate::model::Mode;
    use crate::timeline::{shipped_content_scheme, shipped_document_scheme};

    fn setup(
        n_claims: usize,
    ) -> (ModelConfig, crate::model::ParamSet<f64>, Encoder, Vec<EncodedInstance>) {
        let synth = SynthConfig {
            n_domains: 1,
            claims_per_domain: n_claims,
            evidence_per_claim: 5,
            rule: LabelRule::TimeRule,
            vocab_size: 25,
            claim_len: 5,
            evidence_len: 6,
            max_abs_delta: 50,
        };
        let (instances, _) = generate_synthetic(&synth, 23);
        let encoder = Encoder::fit(
            &instances,
            shipped_document_scheme().clone(),
            shipped_content_scheme().clone(),
        )
        .unwrap();
        let encoded = encoder.encode_all(&instances).unwrap();
        let mut cfg = ModelConfig::for_mode(Mode::DlGlob);
        cfg.d1 = 8;
        cfg.hidden = 4;
        cfg.dt = 4;
        cfg.conv_filters = 2;
        cfg.conv_kernel = 2;
        cfg.evidence_hidden = 4;
        cfg.label_hidden1 = 8;
        cfg.label_hidden2 = 4;
        let params = ParamSet::<f64>::init(
            &cfg,
            encoder.vocab.len(),
            encoder.doc_scheme.num_buckets(),
            encoder.con_scheme.num_buckets(),
            encoder.labels.n_labels(),
            7,
        );
        (cfg, params, encoder, encoded)
    }

    #[test]
    fn ranks_break_ties_by_index() {
        assert_eq!(ranks_desc(&[0.5, 0.9, 0.5]), vec![2.0, 1.0, 3.0]);
        assert_eq!(ranks_desc(&[1.0, 1.0, 1.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn model_against_itself_is_perfectly_correlated() {
        let (cfg, params, _, insts) = setup(6);
        for by in [RankBy::Relevance, RankBy::LabelScores] {
            let cmp =
                compare_rankings((&cfg, &params), (&cfg, &params), &insts, by).unwrap();
            assert_eq!(cmp.skipped, 0);
            for &r in &cmp.r_values {
                assert!((r - 1.0).abs() < 1e-12, "self comparison gave {r}");
            }
            assert!((cmp.mean_abs_r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn comparison_is_symmetric_and_skips_thin_instances() {
        let (cfg, params, encoder, mut insts) = setup(6);
        let other = ParamSet::<f64>::init(
            &cfg,
            encoder.vocab.len(),
            encoder.doc_scheme.num_buckets(),
            encoder.con_scheme.num_buckets(),
            encoder.labels.n_labels(),
            99,
        );
        insts[0].evidence.truncate(1);
        let ab =
            compare_rankings((&cfg, &params), (&cfg, &other), &insts, RankBy::Relevance).unwrap();
        let ba =
            compare_rankings((&cfg, &other), (&cfg, &params), &insts, RankBy::Relevance).unwrap();
        assert_eq!(ab.skipped, 1);
        assert_eq!(ab.r_values, ba.r_values);
        let hist = ab.histogram(8);
        assert_eq!(hist.len(), 8);
        assert_eq!(hist.iter().map(|(_, c)| c).sum::<usize>(), ab.r_values.len());
    }

    #[test]
    fn random_scores_have_near_zero_correlation() {
        use rand::Rng;
        let mut rng = crate::seed::rng(3, "test/null-scores");
        let docs: Vec<ScoredDoc> = (0..300)
            .map(|_| ScoredDoc {
                domain: "d0".into(),
                bucket: rng.gen_range(0..6),
                q: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let corr = bucket_score_correlation(&docs, 400, 11).unwrap();
        assert!(corr.n_within >= 200, "want many pairs, got {}", corr.n_within);
        assert!(corr.n_across >= 200, "want many pairs, got {}", corr.n_across);
        assert!(corr.within_mean.abs() < 0.15, "null within {}", corr.within_mean);
        assert!(corr.across_mean.abs() < 0.15, "null across {}", corr.across_mean);
    }

    #[test]
    fn bucket_correlation_reports_both_sides() {
        let (cfg, params, _, insts) = setup(12);
        let corr = bucket_label_correlation(&cfg, &params, &insts, 500, 17).unwrap();
        assert!(corr.n_within >= 1);
        assert!(corr.n_across >= 1);
        assert!(corr.within_mean.abs() <= 1.0 + 1e-12);
        assert!(corr.across_mean.abs() <= 1.0 + 1e-12);
        let again = bucket_label_correlation(&cfg, &params, &insts, 500, 17).unwrap();
        assert_eq!(corr.within_mean, again.within_mean, "sampling is seeded");
        assert_eq!(corr.n_across, again.n_across);
    }
}
