//! Sweep the fusion weight of a global-fusion model over its default grid
//! and rank the settings by validation loss, the same criterion checkpoint
//! selection uses. Low alpha leans on the time signal, high alpha on text.

use chronofact::corpus::{generate_synthetic, stratified_split, LabelRule, SynthConfig};
use chronofact::model::encode::Encoder;
use chronofact::model::{Mode, ModelConfig};
use chronofact::pipeline::render_sweep;
use chronofact::timeline::{shipped_content_scheme, shipped_document_scheme};
use chronofact::train::optim::Schedule;
use chronofact::train::{default_grid, sweep, TrainConfig};

fn main() -> chronofact::Result<()> {
    let synth = SynthConfig {
        n_domains: 2,
        claims_per_domain: 80,
        rule: LabelRule::TimeRule,
        ..SynthConfig::default()
    };
    let (instances, _) = generate_synthetic(&synth, 7);
    let (train_set, val_set, _) = stratified_split(instances, (0.7, 0.3, 0.0), 0)?;

    let encoder = Encoder::fit(
        &train_set,
        shipped_document_scheme().clone(),
        shipped_content_scheme().clone(),
    )?;
    let train_enc = encoder.encode_all(&train_set)?;
    let val_enc = encoder.encode_all(&val_set)?;

    let model = ModelConfig {
        d1: 10,
        hidden: 5,
        dt: 5,
        dropout: 0.1,
        conv_filters: 4,
        conv_kernel: 2,
        evidence_hidden: 8,
        label_hidden1: 12,
        label_hidden2: 6,
        ..ModelConfig::for_mode(Mode::DlGlob)
    };
    let cfg = TrainConfig {
        batch_size: 16,
        lr: 1e-2,
        scheduler: Schedule::None,
        epochs_pretrain: 12,
        seed: 2,
        ..TrainConfig::default()
    };

    let grid = default_grid(Mode::DlGlob)?;
    println!(
        "sweeping alpha over {:?} ({} pretrain epochs each)...",
        grid.iter().map(|p| p.alpha).collect::<Vec<_>>(),
        cfg.epochs_pretrain
    );
    let rows = sweep::<f32>(&model, &cfg, &encoder, &train_enc, &val_enc, &grid)?;
    println!();
    print!("{}", render_sweep(&rows));
    println!();
    println!(
        "winner: alpha = {} (val loss {:.4})",
        rows[0].point.alpha, rows[0].val_loss
    );
    Ok(())
}
