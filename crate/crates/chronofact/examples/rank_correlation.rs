//! Compare the evidence orderings two trained model variants produce for
//! the same instances, then test whether evidence scores correlate with
//! publication-date buckets. Low rank correlation between a time-blind and
//! a time-aware model means the time signal reorders evidence, not just
//! relabels claims.

use chronofact::corpus::{generate_synthetic, stratified_split, LabelRule, SynthConfig};
use chronofact::eval::{bucket_label_correlation, compare_rankings, RankBy};
use chronofact::model::encode::{EncodedInstance, Encoder};
use chronofact::model::{Mode, ModelConfig, ParamSet};
use chronofact::timeline::{shipped_content_scheme, shipped_document_scheme};
use chronofact::train::optim::Schedule;
use chronofact::train::{pretrain, TrainConfig};

fn small_model(mode: Mode) -> ModelConfig {
    ModelConfig {
        d1: 10,
        hidden: 5,
        dt: 5,
        dropout: 0.1,
        conv_filters: 4,
        conv_kernel: 2,
        evidence_hidden: 8,
        label_hidden1: 12,
        label_hidden2: 6,
        ..ModelConfig::for_mode(mode)
    }
}

fn train_one(
    mode: Mode,
    encoder: &Encoder,
    train: &[EncodedInstance],
    val: &[EncodedInstance],
) -> chronofact::Result<(ModelConfig, ParamSet<f32>)> {
    let model = small_model(mode);
    let cfg = TrainConfig {
        batch_size: 16,
        lr: 1e-2,
        scheduler: Schedule::None,
        epochs_pretrain: 20,
        seed: 4,
        ..TrainConfig::default()
    };
    let run = pretrain::<f32>(&model, &cfg, encoder, train, val)?;
    let params = run.last.params_as::<f32>()?;
    Ok((model, params))
}

fn main() -> chronofact::Result<()> {
    let synth = SynthConfig {
        n_domains: 2,
        claims_per_domain: 100,
        rule: LabelRule::TimeRule,
        ..SynthConfig::default()
    };
    let (instances, _) = generate_synthetic(&synth, 13);
    let (train_set, val_set, test_set) =
        stratified_split(instances, (0.6, 0.2, 0.2), 0)?;
    let encoder = Encoder::fit(
        &train_set,
        shipped_document_scheme().clone(),
        shipped_content_scheme().clone(),
    )?;
    let train_enc = encoder.encode_all(&train_set)?;
    let val_enc = encoder.encode_all(&val_set)?;
    let test_enc = encoder.encode_all(&test_set)?;

    println!("training a time-blind and a time-aware variant...");
    let base = train_one(Mode::Base, &encoder, &train_enc, &val_enc)?;
    let fused = train_one(Mode::DlGlob, &encoder, &train_enc, &val_enc)?;

    for (by, what) in [
        (RankBy::Relevance, "relevance scores"),
        (RankBy::LabelScores, "gold-label scores"),
    ] {
        let cmp = compare_rankings(
            (&base.0, &base.1),
            (&fused.0, &fused.1),
            &test_enc,
            by,
        )?;
        println!();
        println!(
            "evidence rankings by {what}: mean r_s {:+.3}, mean |r_s| {:.3} \
             over {} instances ({} skipped)",
            cmp.mean_r,
            cmp.mean_abs_r,
            cmp.r_values.len(),
            cmp.skipped
        );
        for (edge, count) in cmp.histogram(8) {
            let bar = "#".repeat(count.min(60));
            println!("  [{edge:+.2}, {:+.2}) {count:>4} {bar}", edge + 0.25);
        }
    }

    println!();
    let corr = bucket_label_correlation(&fused.0, &fused.1, &test_enc, 500, 9)?;
    println!(
        "label-score correlation for evidence sharing a date bucket:   {:+.3} ({} pairs)",
        corr.within_mean, corr.n_within
    );
    println!(
        "label-score correlation for evidence in different buckets:    {:+.3} ({} pairs)",
        corr.across_mean, corr.n_across
    );
    println!(
        "({} buckets too small to pair, {} constant-score pairs dropped)",
        corr.skipped_small_buckets, corr.skipped_constant
    );
    Ok(())
}
