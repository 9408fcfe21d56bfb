//! Multi-domain training: round-robin pretraining with per-domain
//! checkpoint selection, single-domain fine-tuning that resumes optimizer
//! state, and fusion-weight sweeps.
//!
//! An epoch draws exactly one batch from every active domain; batch order
//! within a domain comes from a persistent cursor over a per-pass shuffle,
//! so no instance repeats before its domain's pass completes. All shuffles
//! and dropout masks are keyed by `(seed, purpose tag)` streams, which makes
//! a run, and any resumed continuation of it, bit-reproducible.

pub mod optim;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::metrics::micro_macro_f1;
use crate::model::encode::{EncodedInstance, Encoder};
use crate::model::forward::{forward_instance, mean_loss, predict, InstanceInputs};
use crate::model::{Graph, Mode, ModelConfig, ParamSet, Real};
use crate::seed;

use optim::{clip_global_norm, lr_at, OptimKind, Optimizer, OptimizerState, Schedule};

/// Optimization settings. Fusion mode and weights live in [`ModelConfig`];
/// this struct only controls how parameters are updated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub optimizer: OptimKind,
    #[serde(default)]
    pub scheduler: Schedule,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "default_epochs_pretrain")]
    pub epochs_pretrain: usize,
    #[serde(default = "default_epochs_finetune")]
    pub epochs_finetune: usize,
    /// Global gradient-norm ceiling; 0 disables clipping.
    #[serde(default = "default_clip_norm")]
    pub clip_norm: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch_size() -> usize {
    32
}
fn default_lr() -> f64 {
    1e-4
}
fn default_epochs_pretrain() -> usize {
    10
}
fn default_epochs_finetune() -> usize {
    5
}
fn default_clip_norm() -> f64 {
    5.0
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: default_batch_size(),
            lr: default_lr(),
            optimizer: OptimKind::default(),
            scheduler: Schedule::default(),
            weight_decay: 0.0,
            epochs_pretrain: default_epochs_pretrain(),
            epochs_finetune: default_epochs_finetune(),
            clip_norm: default_clip_norm(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr {} must be positive", self.lr)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight_decay {} must be non-negative",
                self.weight_decay
            )));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return Err(Error::Config(format!(
                "clip_norm {} must be non-negative",
                self.clip_norm
            )));
        }
        if self.epochs_pretrain == 0 || self.epochs_finetune == 0 {
            return Err(Error::Config("epoch counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Position of a domain's batch cursor: which shuffle pass over the domain's
/// instances we are in and how far into it the next batch starts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CursorState {
    pub pass: u64,
    pub offset: usize,
}

/// One epoch's summary row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean over this epoch's batch losses.
    pub train_loss: f64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    /// Per-domain validation loss after the epoch.
    pub val_loss: BTreeMap<String, f64>,
}

/// Everything needed to resume or evaluate a training state: parameters,
/// optimizer moments, batch cursors, and the configs that produced them.
/// `fingerprint` ties the checkpoint to its model config and encoder so a
/// resume against different shapes or schemes is refused instead of
/// silently misloaded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Domain this snapshot was selected for, or "pretrain" for the
    /// end-of-run state.
    pub domain: String,
    /// Epoch after which the snapshot was taken (1-based, cumulative
    /// across pretrain and finetune).
    pub epoch: usize,
    pub val_loss: f64,
    pub global_step: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub encoder: Encoder,
    pub params: BTreeMap<String, (Vec<usize>, Vec<f64>)>,
    pub optimizer: OptimizerState,
    pub cursors: BTreeMap<String, CursorState>,
    pub fingerprint: String,
}

/// Hash binding a model config to the encoder (vocabulary, label set,
/// metadata layout, bucket schemes) it was trained with.
pub fn config_fingerprint(model: &ModelConfig, encoder: &Encoder) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(model).expect("model config serializes"));
    h.update(serde_json::to_vec(encoder).expect("encoder serializes"));
    hex::encode(h.finalize())
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let file = fs::File::open(path)?;
        let ckpt: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        let expect = config_fingerprint(&ckpt.model, &ckpt.encoder);
        if ckpt.fingerprint != expect {
            return Err(Error::Checkpoint(format!(
                "fingerprint {} does not match the stored config ({expect})",
                ckpt.fingerprint
            )));
        }
        Ok(ckpt)
    }

    /// Rebuild the parameter set at the requested precision.
    pub fn params_as<F: Real>(&self) -> Result<ParamSet<F>> {
        let template = ParamSet::<f64>::init(
            &self.model,
            self.encoder.vocab.len(),
            self.encoder.doc_scheme.num_buckets(),
            self.encoder.con_scheme.num_buckets(),
            self.encoder.labels.n_labels(),
            0,
        )
        .cast::<F>();
        ParamSet::from_named_arrays(&template, &self.params)
    }
}

/// Output of a training run: the best checkpoint per domain (by validation
/// loss), the final state, and one metrics row per epoch.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub best: BTreeMap<String, Checkpoint>,
    pub last: Checkpoint,
    pub metrics: Vec<EpochMetrics>,
}

/// Persistent batch cursor over one domain's training instances.
struct DomainCursor {
    name: String,
    /// Indices into the full training set.
    indices: Vec<usize>,
    state: CursorState,
    /// Current pass's visiting order; regenerated whenever `state.pass`
    /// advances.
    order: Vec<usize>,
}

impl DomainCursor {
    fn new(name: String, indices: Vec<usize>, state: CursorState, train_seed: u64) -> Self {
        let mut cursor = DomainCursor { name, indices, state, order: Vec::new() };
        cursor.reshuffle(train_seed);
        cursor
    }

    fn reshuffle(&mut self, train_seed: u64) {
        let tag = format!("order/{}/{}", self.name, self.state.pass);
        let mut rng = seed::rng(train_seed, &tag);
        self.order = self.indices.clone();
        self.order.shuffle(&mut rng);
    }

    fn next_batch(&mut self, batch_size: usize, train_seed: u64) -> Vec<usize> {
        if self.state.offset >= self.order.len() {
            self.state.pass += 1;
            self.state.offset = 0;
            self.reshuffle(train_seed);
        }
        let end = (self.state.offset + batch_size).min(self.order.len());
        let batch = self.order[self.state.offset..end].to_vec();
        self.state.offset = end;
        batch
    }
}

/// Forward/backward over one batch on a training graph (dropout active).
/// Returns `None` when no instance in the batch carries evidence.
fn batch_grads<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    batch: &[&EncodedInstance],
    dropout_rng: ChaCha8Rng,
) -> Result<Option<(f64, ParamSet<F>)>> {
    let mut g = Graph::training(dropout_rng);
    let nodes = params.leaves(&mut g);
    let mut losses = Vec::new();
    for inst in batch {
        let inputs = InstanceInputs::from_tables(&mut g, &nodes, inst);
        let out = forward_instance(&mut g, cfg, &nodes, &inputs, inst)?;
        if let Some(l) = out.loss {
            losses.push(l);
        }
    }
    if losses.is_empty() {
        return Ok(None);
    }
    let mut total = losses[0];
    for &l in &losses[1..] {
        total = g.add(total, l);
    }
    let mean = g.scale(total, F::from_f64(1.0 / losses.len() as f64));
    g.backward(mean)?;
    Ok(Some((g.scalar(mean).to_f64(), params.grads(&g, &nodes))))
}

/// Mutable training state threaded through pretrain and finetune. The two
/// entry points differ only in how this is constructed.
struct Trainer<'a, F: Real> {
    model: &'a ModelConfig,
    cfg: &'a TrainConfig,
    encoder: &'a Encoder,
    train_set: &'a [EncodedInstance],
    val_by_domain: BTreeMap<String, Vec<&'a EncodedInstance>>,
    cursors: BTreeMap<String, DomainCursor>,
    params: ParamSet<F>,
    optimizer: Optimizer<F>,
    global_step: u64,
    best: BTreeMap<String, Checkpoint>,
    metrics: Vec<EpochMetrics>,
    fingerprint: String,
}

fn group_by_domain(insts: &[EncodedInstance]) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, inst) in insts.iter().enumerate() {
        out.entry(inst.domain.clone()).or_default().push(i);
    }
    out
}

impl<'a, F: Real> Trainer<'a, F> {
    fn snapshot(&self, domain: &str, epoch: usize, val_loss: f64) -> Checkpoint {
        Checkpoint {
            domain: domain.to_string(),
            epoch,
            val_loss,
            global_step: self.global_step,
            model: self.model.clone(),
            train: self.cfg.clone(),
            encoder: self.encoder.clone(),
            params: self.params.to_named_arrays(),
            optimizer: self.optimizer.to_state(),
            cursors: self.cursors.iter().map(|(k, c)| (k.clone(), c.state)).collect(),
            fingerprint: self.fingerprint.clone(),
        }
    }

    /// One batch per active domain per epoch, domain order reshuffled each
    /// epoch, then per-domain validation and best-checkpoint updates.
    /// `start_epoch` continues the cumulative epoch numbering; the learning
    /// rate schedule restarts for each run (`epochs` epochs of
    /// `domains.len()` steps each).
    fn run_epochs(&mut self, start_epoch: usize, epochs: usize) -> Result<()> {
        let domains: Vec<String> = self.cursors.keys().cloned().collect();
        let total_steps = (epochs * domains.len()) as u64;
        let mut step_in_run = 0u64;

        for epoch in start_epoch..start_epoch + epochs {
            let mut order = domains.clone();
            order.shuffle(&mut seed::rng(self.cfg.seed, &format!("epoch/{epoch}")));

            let mut batch_losses = Vec::new();
            let mut last_lr = self.cfg.lr;
            for domain in &order {
                let cursor = self.cursors.get_mut(domain).expect("active domain has cursor");
                let idxs = cursor.next_batch(self.cfg.batch_size, self.cfg.seed);
                let batch: Vec<&EncodedInstance> =
                    idxs.iter().map(|&i| &self.train_set[i]).collect();
                let lr = lr_at(self.cfg.scheduler, self.cfg.lr, step_in_run, total_steps);
                let dropout_rng = seed::rng(self.cfg.seed, &format!("dropout/{}", self.global_step));

                if let Some((loss, mut grads)) =
                    batch_grads(self.model, &self.params, &batch, dropout_rng)?
                {
                    if !loss.is_finite() {
                        return Err(Error::Diverged(format!(
                            "training loss {loss} at epoch {epoch}, domain {domain}"
                        )));
                    }
                    if self.cfg.weight_decay > 0.0 {
                        let wd = F::from_f64(self.cfg.weight_decay);
                        let mut params_iter = Vec::new();
                        self.params.for_each(&mut |_, a| params_iter.push(a));
                        let mut i = 0;
                        grads.for_each_mut(&mut |_, ga| {
                            ga.zip_mut_with(params_iter[i], |g0, &p| *g0 = *g0 + wd * p);
                            i += 1;
                        });
                    }
                    if self.cfg.clip_norm > 0.0 {
                        clip_global_norm(&mut grads, self.cfg.clip_norm);
                    }
                    self.optimizer.step(&mut self.params, &grads, lr);
                    batch_losses.push(loss);
                }
                last_lr = lr;
                self.global_step += 1;
                step_in_run += 1;
            }

            let mut val_losses = BTreeMap::new();
            for domain in &domains {
                let slice = &self.val_by_domain[domain];
                let vl = mean_loss(self.model, &self.params, slice.iter().copied())?.to_f64();
                if !vl.is_finite() {
                    return Err(Error::Diverged(format!(
                        "validation loss {vl} for domain {domain} at epoch {epoch}"
                    )));
                }
                let improved = self.best.get(domain).map_or(true, |b| vl < b.val_loss);
                if improved {
                    let snap = self.snapshot(domain, epoch, vl);
                    self.best.insert(domain.clone(), snap);
                }
                val_losses.insert(domain.clone(), vl);
            }

            let train_loss = if batch_losses.is_empty() {
                f64::NAN
            } else {
                batch_losses.iter().sum::<f64>() / batch_losses.len() as f64
            };
            self.metrics.push(EpochMetrics {
                epoch,
                train_loss,
                lr: last_lr,
                val_loss: val_losses,
            });
        }
        Ok(())
    }

    fn finish(self, last_domain: &str, last_epoch: usize) -> TrainRun {
        let last_val = self
            .metrics
            .last()
            .map(|m| m.val_loss.values().sum::<f64>() / m.val_loss.len().max(1) as f64)
            .unwrap_or(f64::NAN);
        let last = self.snapshot(last_domain, last_epoch, last_val);
        TrainRun { best: self.best, last, metrics: self.metrics }
    }
}

fn check_val_coverage(
    train_domains: &BTreeMap<String, Vec<usize>>,
    val_by_domain: &BTreeMap<String, Vec<&EncodedInstance>>,
) -> Result<()> {
    for domain in train_domains.keys() {
        if val_by_domain.get(domain).map_or(true, |v| v.is_empty()) {
            return Err(Error::EmptyInput(format!(
                "domain {domain} has no validation instances; cannot select checkpoints"
            )));
        }
    }
    Ok(())
}

/// Train from scratch over every domain present in `train_set`. Parameters
/// are initialized from `cfg.seed` independently of the fusion mode, one
/// batch per domain is drawn per epoch, and the best state per domain (by
/// validation loss) is snapshotted along the way.
pub fn pretrain<F: Real>(
    model: &ModelConfig,
    cfg: &TrainConfig,
    encoder: &Encoder,
    train_set: &[EncodedInstance],
    val_set: &'_ [EncodedInstance],
) -> Result<TrainRun> {
    model.validate()?;
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("empty training set".into()));
    }
    let by_domain = group_by_domain(train_set);
    let mut val_by_domain: BTreeMap<String, Vec<&EncodedInstance>> = BTreeMap::new();
    for inst in val_set {
        val_by_domain.entry(inst.domain.clone()).or_default().push(inst);
    }
    check_val_coverage(&by_domain, &val_by_domain)?;

    let params = ParamSet::<f64>::init(
        model,
        encoder.vocab.len(),
        encoder.doc_scheme.num_buckets(),
        encoder.con_scheme.num_buckets(),
        encoder.labels.n_labels(),
        cfg.seed,
    )
    .cast::<F>();
    let optimizer = Optimizer::new(cfg.optimizer, &params);
    let cursors = by_domain
        .into_iter()
        .map(|(name, idxs)| {
            let cursor = DomainCursor::new(name.clone(), idxs, CursorState::default(), cfg.seed);
            (name, cursor)
        })
        .collect();

    let mut trainer = Trainer {
        model,
        cfg,
        encoder,
        train_set,
        val_by_domain,
        cursors,
        params,
        optimizer,
        global_step: 0,
        best: BTreeMap::new(),
        metrics: Vec::new(),
        fingerprint: config_fingerprint(model, encoder),
    };
    trainer.run_epochs(1, cfg.epochs_pretrain)?;
    let last_epoch = cfg.epochs_pretrain;
    Ok(trainer.finish("pretrain", last_epoch))
}

/// Continue training on a single domain from a checkpoint. Optimizer
/// moments, batch cursors, dropout streams, and epoch numbering all resume
/// where the checkpoint left them; only the learning-rate schedule restarts
/// (over `cfg.epochs_finetune` steps). The checkpoint must match the
/// encoder and model config it was produced with.
pub fn finetune<F: Real>(
    domain: &str,
    ckpt: &Checkpoint,
    cfg: &TrainConfig,
    encoder: &Encoder,
    train_set: &[EncodedInstance],
    val_set: &[EncodedInstance],
) -> Result<TrainRun> {
    ckpt.model.validate()?;
    cfg.validate()?;
    let fingerprint = config_fingerprint(&ckpt.model, encoder);
    if fingerprint != ckpt.fingerprint {
        return Err(Error::ArtifactMismatch(format!(
            "checkpoint was built for a different model config or encoder \
             (fingerprint {} vs {fingerprint})",
            ckpt.fingerprint
        )));
    }
    if cfg.optimizer != ckpt.train.optimizer {
        return Err(Error::ArtifactMismatch(format!(
            "cannot resume {:?} moments with a {:?} optimizer",
            ckpt.train.optimizer, cfg.optimizer
        )));
    }

    let train_idxs: Vec<usize> = train_set
        .iter()
        .enumerate()
        .filter(|(_, inst)| inst.domain == domain)
        .map(|(i, _)| i)
        .collect();
    if train_idxs.is_empty() {
        return Err(Error::EmptyInput(format!("no training instances for domain {domain}")));
    }
    let val: Vec<&EncodedInstance> =
        val_set.iter().filter(|inst| inst.domain == domain).collect();
    if val.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no validation instances for domain {domain}; fine-tuning requires them"
        )));
    }

    let params = ckpt.params_as::<F>()?;
    let optimizer = Optimizer::from_state(&ckpt.optimizer, &params)?;
    let cursor_state = ckpt.cursors.get(domain).copied().unwrap_or_default();
    let mut cursors = BTreeMap::new();
    cursors.insert(
        domain.to_string(),
        DomainCursor::new(domain.to_string(), train_idxs, cursor_state, cfg.seed),
    );
    let mut val_by_domain = BTreeMap::new();
    val_by_domain.insert(domain.to_string(), val);

    let mut trainer = Trainer {
        model: &ckpt.model,
        cfg,
        encoder,
        train_set,
        val_by_domain,
        cursors,
        params,
        optimizer,
        global_step: ckpt.global_step,
        best: BTreeMap::new(),
        metrics: Vec::new(),
        fingerprint: ckpt.fingerprint.clone(),
    };
    trainer.run_epochs(ckpt.epoch + 1, cfg.epochs_finetune)?;
    let last_epoch = ckpt.epoch + cfg.epochs_finetune;
    Ok(trainer.finish(domain, last_epoch))
}

/// One fusion-weight setting of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Sweep result row: validation loss (checkpoint-selection criterion,
/// weighted by per-domain validation size) plus pooled F1 on validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub val_loss: f64,
    pub val_micro_f1: f64,
    pub val_macro_f1: f64,
}

/// Candidate values for a single mixing weight.
pub const ALPHA_GRID: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];

/// Candidate (alpha, beta) pairs for three-way mixing; every pair keeps
/// alpha + beta < 1 so the content share stays positive.
pub const ALPHA_BETA_GRID: [(f64, f64); 13] = [
    (0.20, 0.20),
    (0.20, 0.35),
    (0.20, 0.40),
    (0.20, 0.55),
    (0.20, 0.60),
    (1.0 / 3.0, 1.0 / 3.0),
    (0.35, 0.20),
    (0.35, 0.55),
    (0.40, 0.20),
    (0.40, 0.40),
    (0.55, 0.20),
    (0.55, 0.35),
    (0.60, 0.20),
];

/// Default sweep grid for a fusion mode. Modes without a free mixing
/// weight cannot be swept.
pub fn default_grid(mode: Mode) -> Result<Vec<SweepPoint>> {
    match mode {
        Mode::DlGlob | Mode::ClGlob => Ok(ALPHA_GRID
            .iter()
            .map(|&a| SweepPoint { alpha: a, beta: 0.0, gamma: 1.0 })
            .collect()),
        Mode::ClLoc => Ok(ALPHA_GRID
            .iter()
            .map(|&g| SweepPoint { alpha: 1.0, beta: 0.0, gamma: g })
            .collect()),
        Mode::DlclGlob => Ok(ALPHA_BETA_GRID
            .iter()
            .map(|&(a, b)| SweepPoint { alpha: a, beta: b, gamma: 1.0 })
            .collect()),
        Mode::Base | Mode::DlLoc => Err(Error::Config(format!(
            "mode {mode} has no fusion weight to sweep"
        ))),
    }
}

/// Pretrain once per grid point and score each point on validation data:
/// per-domain best checkpoints are evaluated on their own domain's
/// validation slice, pooled into micro/macro F1, and ranked by
/// size-weighted validation loss (ascending).
pub fn sweep<F: Real>(
    model: &ModelConfig,
    cfg: &TrainConfig,
    encoder: &Encoder,
    train_set: &[EncodedInstance],
    val_set: &[EncodedInstance],
    grid: &[SweepPoint],
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let all_labels: Vec<usize> = (0..encoder.labels.n_labels()).collect();
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let candidate = ModelConfig {
            alpha: point.alpha,
            beta: point.beta,
            gamma: point.gamma,
            ..model.clone()
        };
        candidate.validate()?;
        let run = pretrain::<F>(&candidate, cfg, encoder, train_set, val_set)?;

        let mut preds = Vec::new();
        let mut golds = Vec::new();
        let mut loss_weighted = 0.0;
        let mut n_val = 0usize;
        for (domain, ckpt) in &run.best {
            let params = ckpt.params_as::<F>()?;
            let slice: Vec<&EncodedInstance> =
                val_set.iter().filter(|i| &i.domain == domain).collect();
            for inst in &slice {
                let p = predict(&candidate, &params, inst)?;
                preds.push(p.predicted);
                golds.push(inst.label_id);
            }
            loss_weighted += ckpt.val_loss * slice.len() as f64;
            n_val += slice.len();
        }
        let (micro, macro_) = micro_macro_f1(&preds, &golds, &all_labels)?;
        rows.push(SweepRow {
            point: *point,
            val_loss: loss_weighted / n_val.max(1) as f64,
            val_micro_f1: micro,
            val_macro_f1: macro_,
        });
    }
    rows.sort_by(|a, b| a.val_loss.total_cmp(&b.val_loss));
    Ok(rows)
}
