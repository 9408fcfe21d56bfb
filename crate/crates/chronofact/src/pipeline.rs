//! End-to-end orchestration shared by the command-line binary and the
//! examples: loading and splitting corpora, fitting encoders against
//! bucket schemes, training, evaluation, attribution, and sweeps.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::corpus::{read_instances, stratified_split, ClaimInstance};
use crate::error::{Error, Result};
use crate::eval::attribution::{integrated_gradients, AttributionReport, IgBaseline};
use crate::eval::report::{evaluate, EvalReport};
use crate::model::encode::{EncodedInstance, Encoder};
use crate::timeline::{
    build_bucket_scheme, delta_days, shipped_content_scheme, shipped_document_scheme,
    BucketScheme, SchemeLevel,
};
use crate::train::{finetune, pretrain, sweep, Checkpoint, SweepRow, TrainRun};

/// Corpus loaded, split, and encoded against one encoder.
pub struct PreparedData {
    pub encoder: Encoder,
    pub train: Vec<EncodedInstance>,
    pub val: Vec<EncodedInstance>,
    pub test: Vec<EncodedInstance>,
}

/// Read a scheme file, or fall back to the shipped scheme of that level.
pub fn load_scheme(path: Option<&Path>, level: SchemeLevel) -> Result<BucketScheme> {
    let scheme = match path {
        Some(p) => BucketScheme::from_text(&std::fs::read_to_string(p)?)?,
        None => match level {
            SchemeLevel::Document => shipped_document_scheme().clone(),
            SchemeLevel::Content => shipped_content_scheme().clone(),
        },
    };
    if scheme.level() != level {
        return Err(Error::InvalidScheme(format!(
            "expected a {level:?}-level scheme, got {:?}",
            scheme.level()
        )));
    }
    Ok(scheme)
}

/// Load the corpus named by the config and cap evidence lists.
pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Vec<ClaimInstance>> {
    let path = cfg
        .corpus
        .as_deref()
        .ok_or_else(|| Error::Config("no corpus path given".into()))?;
    let mut instances = read_instances(path)?;
    if instances.is_empty() {
        return Err(Error::EmptyInput(format!("{} holds no instances", path.display())));
    }
    let cap = cfg.max_evidence();
    for inst in &mut instances {
        inst.evidence.truncate(cap);
    }
    Ok(instances)
}

/// Load, split, fit the encoder on the training part, and encode all
/// three parts.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let instances = load_corpus(cfg)?;
    let (train, val, test) = stratified_split(instances, cfg.split_ratios()?, cfg.split_seed())?;
    let doc = load_scheme(cfg.doc_buckets.as_deref(), SchemeLevel::Document)?;
    let con = load_scheme(cfg.con_buckets.as_deref(), SchemeLevel::Content)?;
    let encoder = Encoder::fit(&train, doc, con)?;
    Ok(PreparedData {
        train: encoder.encode_all(&train)?,
        val: encoder.encode_all(&val)?,
        test: encoder.encode_all(&test)?,
        encoder,
    })
}

/// Pretrain over every domain; when a domain filter is set, continue with
/// fine-tuning that domain from its best pretraining checkpoint and merge
/// the refined checkpoint back into the result.
pub fn run_train(cfg: &ExperimentConfig) -> Result<(TrainRun, Encoder)> {
    let model = cfg.model_config()?;
    let train_cfg = cfg.train_config()?;
    let data = prepare(cfg)?;
    let mut run = pretrain::<f32>(&model, &train_cfg, &data.encoder, &data.train, &data.val)?;
    if let Some(domain) = &cfg.domain {
        let start = run.best.get(domain).ok_or_else(|| {
            Error::Config(format!("domain {domain} not present in the training data"))
        })?;
        let tuned = finetune::<f32>(domain, start, &train_cfg, &data.encoder, &data.train, &data.val)?;
        run.metrics.extend(tuned.metrics);
        let refined = tuned.best.get(domain).expect("finetune tracked its domain").clone();
        if refined.val_loss < run.best[domain].val_loss {
            run.best.insert(domain.clone(), refined);
        }
        run.last = tuned.last;
    }
    Ok((run, data.encoder))
}

/// Which slice of the split feeds evaluation.
fn eval_slice<'a>(cfg: &ExperimentConfig, data: &'a PreparedData) -> Result<Vec<&'a EncodedInstance>> {
    let which = cfg.eval_split.as_deref().unwrap_or("test");
    let slice: Vec<&EncodedInstance> = match which {
        "train" => data.train.iter().collect(),
        "val" => data.val.iter().collect(),
        "test" => data.test.iter().collect(),
        "all" => data.train.iter().chain(&data.val).chain(&data.test).collect(),
        other => {
            return Err(Error::Config(format!(
                "eval_split {other:?} not one of train/val/test/all"
            )))
        }
    };
    Ok(slice)
}

/// Checks that a checkpoint belongs with the configuration it is used
/// under: explicitly requested model settings must match the stored ones,
/// and explicitly given scheme files must hash-match the encoder the
/// checkpoint was trained with.
pub fn check_checkpoint_compat(cfg: &ExperimentConfig, ckpt: &Checkpoint) -> Result<()> {
    if let Some(mode) = &cfg.mode {
        let requested: crate::model::Mode = mode.parse()?;
        if requested != ckpt.model.mode {
            return Err(Error::ArtifactMismatch(format!(
                "checkpoint holds a {} model, not {requested}",
                ckpt.model.mode
            )));
        }
    }
    for (name, given, stored) in [
        ("alpha", cfg.alpha, ckpt.model.alpha),
        ("beta", cfg.beta, ckpt.model.beta),
        ("gamma", cfg.gamma, ckpt.model.gamma),
    ] {
        if let Some(v) = given {
            if v != stored {
                return Err(Error::ArtifactMismatch(format!(
                    "checkpoint was trained with {name} {stored}, not {v}"
                )));
            }
        }
    }
    for (path, stored, level) in [
        (cfg.doc_buckets.as_deref(), &ckpt.encoder.doc_scheme, SchemeLevel::Document),
        (cfg.con_buckets.as_deref(), &ckpt.encoder.con_scheme, SchemeLevel::Content),
    ] {
        if path.is_some() {
            let given = load_scheme(path, level)?;
            if &given != stored {
                return Err(Error::ArtifactMismatch(format!(
                    "{level:?}-level scheme file differs from the one the checkpoint \
                     was trained with"
                )));
            }
        }
    }
    Ok(())
}

/// Load a checkpoint and score it on the configured slice of the corpus,
/// encoded with the checkpoint's own encoder so vocabularies always line
/// up. Mismatched artifacts are refused.
pub fn run_evaluate(cfg: &ExperimentConfig) -> Result<(EvalReport, Checkpoint)> {
    let path = cfg
        .checkpoint
        .as_deref()
        .ok_or_else(|| Error::Config("no checkpoint given".into()))?;
    let ckpt = Checkpoint::load(path)?;
    check_checkpoint_compat(cfg, &ckpt)?;

    let instances = load_corpus(cfg)?;
    let (train, val, test) = stratified_split(instances, cfg.split_ratios()?, cfg.split_seed())?;
    let data = PreparedData {
        train: ckpt.encoder.encode_all(&train)?,
        val: ckpt.encoder.encode_all(&val)?,
        test: ckpt.encoder.encode_all(&test)?,
        encoder: ckpt.encoder.clone(),
    };
    let mut slice = eval_slice(cfg, &data)?;
    if let Some(domain) = &cfg.domain {
        slice.retain(|i| &i.domain == domain);
    }
    let owned: Vec<EncodedInstance> = slice.into_iter().cloned().collect();
    if owned.is_empty() {
        return Err(Error::EmptyInput("evaluation slice is empty".into()));
    }
    let params = ckpt.params_as::<f32>()?;
    let report = evaluate(&ckpt.model, &params, &ckpt.encoder.labels, &owned)?;
    Ok((report, ckpt))
}

/// Attribute one claim's prediction onto its inputs.
pub fn run_attribute(
    cfg: &ExperimentConfig,
    claim_id: &str,
    steps: usize,
) -> Result<(AttributionReport, Checkpoint)> {
    let path = cfg
        .checkpoint
        .as_deref()
        .ok_or_else(|| Error::Config("no checkpoint given".into()))?;
    let ckpt = Checkpoint::load(path)?;
    check_checkpoint_compat(cfg, &ckpt)?;
    let instances = load_corpus(cfg)?;
    let inst = instances
        .iter()
        .find(|i| i.claim_id == claim_id)
        .ok_or_else(|| Error::Corpus(format!("claim {claim_id} not in the corpus")))?;
    let encoded = ckpt.encoder.encode_instance(inst)?;
    // Attribution differentiates through the whole net; do it in f64.
    let params = ckpt.params_as::<f64>()?;
    let report = integrated_gradients(&ckpt.model, &params, &encoded, IgBaseline::Zero, steps)?;
    Ok((report, ckpt))
}

/// Sweep the mode's fusion-weight grid.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let model = cfg.model_config()?;
    let train_cfg = cfg.train_config()?;
    let data = prepare(cfg)?;
    let grid = crate::train::default_grid(model.mode)?;
    sweep::<f32>(&model, &train_cfg, &data.encoder, &data.train, &data.val, &grid)
}

/// Day deltas a bucket scheme of the given level is built from.
pub fn collect_deltas(instances: &[ClaimInstance], level: SchemeLevel) -> Vec<i64> {
    let mut deltas = Vec::new();
    for inst in instances {
        let Some(anchor) = inst.claim_pub else { continue };
        match level {
            SchemeLevel::Document => {
                for ev in &inst.evidence {
                    if let Some(p) = ev.pub_date {
                        deltas.push(delta_days(p, anchor));
                    }
                }
            }
            SchemeLevel::Content => {
                for e in &inst.claim_expressions {
                    deltas.push(delta_days(e.normalized, anchor));
                }
                for ev in &inst.evidence {
                    for e in &ev.expressions {
                        deltas.push(delta_days(e.normalized, anchor));
                    }
                }
            }
        }
    }
    deltas
}

/// Build a quantile bucket scheme from the corpus at the given level.
pub fn run_build_buckets(
    cfg: &ExperimentConfig,
    level: SchemeLevel,
    quantiles: usize,
) -> Result<BucketScheme> {
    let instances = load_corpus(cfg)?;
    let deltas = collect_deltas(&instances, level);
    build_bucket_scheme(&deltas, quantiles, level)
}

/// Text dump of every instance's temporal representations under the
/// configured schemes: one JSON object per line.
pub fn run_ground(cfg: &ExperimentConfig) -> Result<String> {
    let instances = load_corpus(cfg)?;
    let doc = load_scheme(cfg.doc_buckets.as_deref(), SchemeLevel::Document)?;
    let con = load_scheme(cfg.con_buckets.as_deref(), SchemeLevel::Content)?;
    let mut out = String::new();
    for inst in &instances {
        let (claim_doc, ev_doc) = crate::timeline::ground_document_level(
            inst.claim_pub,
            &inst.evidence.iter().map(|e| e.pub_date).collect::<Vec<_>>(),
            &doc,
        );
        let claim_exprs: Vec<_> = inst.claim_expressions.iter().map(|e| e.normalized).collect();
        let ev_exprs: Vec<Vec<_>> = inst
            .evidence
            .iter()
            .map(|e| e.expressions.iter().map(|x| x.normalized).collect())
            .collect();
        let (claim_con, ev_con) =
            crate::timeline::ground_content_level(inst.claim_pub, &claim_exprs, &ev_exprs, &con);
        let row = serde_json::json!({
            "claim_id": inst.claim_id,
            "document": {
                "claim": claim_doc.indices,
                "evidence": ev_doc.iter().map(|r| r.indices.clone()).collect::<Vec<_>>(),
            },
            "content": {
                "claim": claim_con.indices,
                "evidence": ev_con.iter().map(|r| r.indices.clone()).collect::<Vec<_>>(),
            },
        });
        let _ = writeln!(out, "{row}");
    }
    Ok(out)
}

/// Provenance header prepended to text artifacts.
pub fn artifact_header(cfg: &ExperimentConfig) -> Result<String> {
    Ok(format!("# config {}\n# seed {}\n", cfg.hash()?, cfg.seed()))
}

/// Render a sweep result as an aligned text table.
pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>6} {:>10} {:>10} {:>10}",
        "alpha", "beta", "gamma", "val_loss", "micro_f1", "macro_f1"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6.3} {:>6.3} {:>6.3} {:>10.4} {:>10.4} {:>10.4}",
            r.point.alpha, r.point.beta, r.point.gamma, r.val_loss, r.val_micro_f1, r.val_macro_f1
        );
    }
    out
}

/// Render an attribution report as an aligned text table.
pub fn render_attribution(report: &AttributionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "predicted label index: {}", report.predicted);
    let _ = writeln!(
        out,
        "F(input) {:.6}  F(baseline) {:.6}  residual {:.2e}  steps {}",
        report.f_input, report.f_baseline, report.residual, report.steps
    );
    let _ = writeln!(out, "{:<26} {:>12} {:>12}", "block", "signed", "abs");
    for (name, b) in &report.blocks {
        let _ = writeln!(out, "{:<26} {:>12.6} {:>12.6}", name, b.signed, b.abs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, write_instances, LabelRule, SynthConfig};

    fn synth_file(dir: &Path, n_domains: usize, claims: usize) -> std::path::PathBuf {
        let synth = SynthConfig {
            n_domains,
            claims_per_domain: claims,
            evidence_per_claim: 3,
            rule: LabelRule::TimeRule,
            vocab_size: 30,
            claim_len: 5,
            evidence_len: 6,
            max_abs_delta: 40,
        };
        let (instances, _) = generate_synthetic(&synth, 11);
        let path = dir.join("corpus.jsonl");
        write_instances(&path, &instances).unwrap();
        path
    }

    fn tiny_cfg(corpus: std::path::PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            corpus: Some(corpus),
            mode: Some("DL_glob".into()),
            d1: Some(8),
            hidden: Some(4),
            dt: Some(4),
            conv_filters: Some(2),
            conv_kernel: Some(2),
            evidence_hidden: Some(4),
            label_hidden1: Some(8),
            label_hidden2: Some(4),
            batch_size: Some(4),
            lr: Some(5e-3),
            epochs_pretrain: Some(2),
            epochs_finetune: Some(2),
            scheduler: Some("none".into()),
            split: Some("0.6,0.4,0.0".into()),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn train_then_evaluate_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synth_file(dir.path(), 1, 10);
        let mut cfg = tiny_cfg(corpus);
        cfg.eval_split = Some("val".into());

        let (run, _encoder) = run_train(&cfg).unwrap();
        let ckpt_path = dir.path().join("model.ckpt");
        run.best["d0"].save(&ckpt_path).unwrap();

        cfg.checkpoint = Some(ckpt_path);
        let (report, ckpt) = run_evaluate(&cfg).unwrap();
        assert!(report.n_instances > 0);
        assert_eq!(ckpt.domain, "d0");

        // A conflicting explicit weight is refused.
        let mut bad = cfg.clone();
        bad.alpha = Some(0.9);
        let err = run_evaluate(&bad).unwrap_err();
        assert!(matches!(err, Error::ArtifactMismatch(_)), "{err}");
    }

    #[test]
    fn grounding_and_bucket_building_run_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synth_file(dir.path(), 1, 8);
        let cfg = ExperimentConfig { corpus: Some(corpus), ..ExperimentConfig::default() };

        let scheme = run_build_buckets(&cfg, SchemeLevel::Document, 5).unwrap();
        assert_eq!(scheme.level(), SchemeLevel::Document);

        let dump = run_ground(&cfg).unwrap();
        assert_eq!(dump.lines().count(), 8);
        let first: serde_json::Value = serde_json::from_str(dump.lines().next().unwrap()).unwrap();
        assert!(first["document"]["claim"][0].is_number());
    }

    #[test]
    fn finetune_path_updates_the_target_domain() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synth_file(dir.path(), 2, 10);
        let mut cfg = tiny_cfg(corpus);
        cfg.domain = Some("d1".into());
        let (run, _) = run_train(&cfg).unwrap();
        assert_eq!(run.last.domain, "d1");
        assert!(run.metrics.len() == 4, "2 pretrain + 2 finetune epochs");
    }
}
