//! Train the verification model on a corpus whose labels are decided purely
//! by publication-date order, with and without time fusion. The text carries
//! no label signal, so the gap between the two runs isolates what the time
//! buckets contribute.

use chronofact::corpus::{generate_synthetic, stratified_split, LabelRule, SynthConfig};
use chronofact::model::encode::{EncodedInstance, Encoder};
use chronofact::model::forward::predict;
use chronofact::model::{Mode, ModelConfig};
use chronofact::timeline::{shipped_content_scheme, shipped_document_scheme};
use chronofact::train::optim::{OptimKind, Schedule};
use chronofact::train::{pretrain, TrainConfig, TrainRun};

fn small_model(mode: Mode) -> ModelConfig {
    ModelConfig {
        d1: 12,
        hidden: 6,
        dt: 6,
        dropout: 0.1,
        conv_filters: 4,
        conv_kernel: 2,
        evidence_hidden: 8,
        label_hidden1: 16,
        label_hidden2: 8,
        ..ModelConfig::for_mode(mode)
    }
}

/// Accuracy of each domain's best checkpoint on that domain's test slice.
fn test_accuracy(run: &TrainRun, test: &[EncodedInstance]) -> chronofact::Result<f64> {
    let mut correct = 0usize;
    for (domain, ckpt) in &run.best {
        let params = ckpt.params_as::<f32>()?;
        for inst in test.iter().filter(|i| &i.domain == domain) {
            let pred = predict(&ckpt.model, &params, inst)?;
            if pred.predicted == inst.label_id {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

fn main() -> chronofact::Result<()> {
    let synth = SynthConfig {
        n_domains: 2,
        claims_per_domain: 150,
        rule: LabelRule::TimeRule,
        ..SynthConfig::default()
    };
    let (instances, _) = generate_synthetic(&synth, 42);
    let (train_set, val_set, test_set) =
        stratified_split(instances, (0.7, 0.15, 0.15), 0)?;
    println!(
        "time-rule corpus: {} train / {} val / {} test",
        train_set.len(),
        val_set.len(),
        test_set.len()
    );

    let encoder = Encoder::fit(
        &train_set,
        shipped_document_scheme().clone(),
        shipped_content_scheme().clone(),
    )?;
    let train_enc = encoder.encode_all(&train_set)?;
    let val_enc = encoder.encode_all(&val_set)?;
    let test_enc = encoder.encode_all(&test_set)?;

    let cfg = TrainConfig {
        batch_size: 16,
        lr: 1e-2,
        optimizer: OptimKind::Adam,
        scheduler: Schedule::None,
        epochs_pretrain: 40,
        seed: 1,
        ..TrainConfig::default()
    };

    for mode in [Mode::Base, Mode::DlGlob] {
        let model = small_model(mode);
        println!();
        println!("training {mode:?} (alpha = {}):", model.alpha);
        let run = pretrain::<f32>(&model, &cfg, &encoder, &train_enc, &val_enc)?;
        for m in run.metrics.iter().step_by(8) {
            let val: f64 =
                m.val_loss.values().sum::<f64>() / m.val_loss.len() as f64;
            println!(
                "  epoch {:>2}: train loss {:.4}, mean val loss {val:.4}",
                m.epoch, m.train_loss
            );
        }
        let acc = test_accuracy(&run, &test_enc)?;
        println!("  test accuracy: {:.1}%", 100.0 * acc);
    }

    println!();
    println!(
        "the base model never sees dates and hovers near the majority class; \
         document-level fusion recovers the rule"
    );
    Ok(())
}
