//! Joint veracity / evidence-ranking model: configuration, parameters,
//! autodiff graph, instance encoding, and the forward pass.

pub mod encode;
pub mod forward;
pub mod graph;
pub mod real;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::seed;

pub use graph::{Graph, NodeId};
pub use real::Real;

/// Where temporal information enters the network, if at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// No temporal signal.
    #[serde(rename = "base")]
    Base,
    /// Document-level bucket embedding prepended as a pseudo-token.
    #[serde(rename = "DL_loc")]
    DlLoc,
    /// Content-level mixing into time and predicate token embeddings.
    #[serde(rename = "CL_loc")]
    ClLoc,
    /// Document-level bucket mixed into the sentence representation.
    #[serde(rename = "DL_glob")]
    DlGlob,
    /// Averaged content-level buckets mixed into the sentence representation.
    #[serde(rename = "CL_glob")]
    ClGlob,
    /// Both global signals mixed into the sentence representation.
    #[serde(rename = "DLCL_glob")]
    DlclGlob,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Base,
        Mode::DlLoc,
        Mode::ClLoc,
        Mode::DlGlob,
        Mode::ClGlob,
        Mode::DlclGlob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::DlLoc => "DL_loc",
            Mode::ClLoc => "CL_loc",
            Mode::DlGlob => "DL_glob",
            Mode::ClGlob => "CL_glob",
            Mode::DlclGlob => "DLCL_glob",
        }
    }

    /// True when the mode consumes document-level bucket indices.
    pub fn uses_document_buckets(self) -> bool {
        matches!(self, Mode::DlLoc | Mode::DlGlob | Mode::DlclGlob)
    }

    /// True when the mode consumes content-level bucket indices.
    pub fn uses_content_buckets(self) -> bool {
        matches!(self, Mode::ClLoc | Mode::ClGlob | Mode::DlclGlob)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Mode::Base),
            "dl_loc" => Ok(Mode::DlLoc),
            "cl_loc" => Ok(Mode::ClLoc),
            "dl_glob" => Ok(Mode::DlGlob),
            "cl_glob" => Ok(Mode::ClGlob),
            "dlcl_glob" => Ok(Mode::DlclGlob),
            _ => Err(Error::Config(format!(
                "unknown mode {s:?}; expected one of base, DL_loc, CL_loc, DL_glob, CL_glob, DLCL_glob"
            ))),
        }
    }
}

fn default_d1() -> usize {
    300
}
fn default_hidden() -> usize {
    128
}
fn default_dt() -> usize {
    100
}
fn default_dropout() -> f64 {
    0.1
}
fn default_conv_filters() -> usize {
    3
}
fn default_conv_kernel() -> usize {
    3
}
fn default_evidence_hidden() -> usize {
    100
}
fn default_label_hidden1() -> usize {
    100
}
fn default_label_hidden2() -> usize {
    50
}
fn default_offset_window() -> i64 {
    16
}
fn default_leaky_slope() -> f64 {
    0.01
}
fn default_one() -> f64 {
    1.0
}
fn default_zero() -> f64 {
    0.0
}

/// Architecture hyperparameters plus the fusion weights for the active mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: Mode,
    /// Word embedding dimension.
    #[serde(default = "default_d1")]
    pub d1: usize,
    /// LSTM hidden size per direction; the sentence vector has size 2*hidden.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Time bucket embedding dimension.
    #[serde(default = "default_dt")]
    pub dt: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default = "default_conv_filters")]
    pub conv_filters: usize,
    #[serde(default = "default_conv_kernel")]
    pub conv_kernel: usize,
    #[serde(default = "default_evidence_hidden")]
    pub evidence_hidden: usize,
    #[serde(default = "default_label_hidden1")]
    pub label_hidden1: usize,
    #[serde(default = "default_label_hidden2")]
    pub label_hidden2: usize,
    /// Predicate-to-expression offsets are clipped to [-offset_window, offset_window].
    #[serde(default = "default_offset_window")]
    pub offset_window: i64,
    #[serde(default = "default_leaky_slope")]
    pub leaky_slope: f64,
    /// Weight on the text representation in global fusion.
    #[serde(default = "default_one")]
    pub alpha: f64,
    /// Weight on the document-level signal in combined global fusion.
    #[serde(default = "default_zero")]
    pub beta: f64,
    /// Weight on the word embedding in content-local mixing.
    #[serde(default = "default_one")]
    pub gamma: f64,
}

impl ModelConfig {
    /// Config for `mode` with the best fusion weights found on the
    /// benchmark sweep. Base and DL_loc take degenerate weights since
    /// they have no mixing coefficient.
    pub fn for_mode(mode: Mode) -> Self {
        let (alpha, beta, gamma) = match mode {
            Mode::Base | Mode::DlLoc => (1.0, 0.0, 1.0),
            Mode::ClLoc => (1.0, 0.0, 0.5),
            Mode::DlGlob => (0.10, 0.0, 1.0),
            Mode::ClGlob => (0.25, 0.0, 1.0),
            Mode::DlclGlob => (0.20, 0.40, 1.0),
        };
        ModelConfig {
            mode,
            d1: default_d1(),
            hidden: default_hidden(),
            dt: default_dt(),
            dropout: default_dropout(),
            conv_filters: default_conv_filters(),
            conv_kernel: default_conv_kernel(),
            evidence_hidden: default_evidence_hidden(),
            label_hidden1: default_label_hidden1(),
            label_hidden2: default_label_hidden2(),
            offset_window: default_offset_window(),
            leaky_slope: default_leaky_slope(),
            alpha,
            beta,
            gamma,
        }
    }

    /// Sentence representation dimension (both LSTM directions).
    pub fn d2(&self) -> usize {
        2 * self.hidden
    }

    /// Dimension of the claim/evidence match vector fed to both scorers.
    pub fn match_dim(&self) -> usize {
        4 * self.d2() + self.conv_filters
    }

    /// Rows of the predicate offset table: one per clipped offset.
    pub fn offset_rows(&self) -> usize {
        2 * self.offset_window as usize + 1
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("d1", self.d1),
            ("hidden", self.hidden),
            ("dt", self.dt),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("evidence_hidden", self.evidence_hidden),
            ("label_hidden1", self.label_hidden1),
            ("label_hidden2", self.label_hidden2),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.offset_window < 0 {
            return Err(Error::Config("offset_window must be non-negative".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.mode == Mode::DlclGlob && self.alpha + self.beta > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "alpha + beta must not exceed 1 for DLCL_glob, got {} + {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// One LSTM direction: gate order is input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDir<T> {
    pub w: [T; 4],
    pub u: [T; 4],
    pub b: [T; 4],
}

pub const GATE_NAMES: [&str; 4] = ["i", "f", "g", "o"];

impl<T> LstmDir<T> {
    fn for_each<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a T)) {
        for (k, name) in GATE_NAMES.iter().enumerate() {
            f(format!("{prefix}.w{name}"), &self.w[k]);
        }
        for (k, name) in GATE_NAMES.iter().enumerate() {
            f(format!("{prefix}.u{name}"), &self.u[k]);
        }
        for (k, name) in GATE_NAMES.iter().enumerate() {
            f(format!("{prefix}.b{name}"), &self.b[k]);
        }
    }

    fn for_each_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut T)) {
        for (k, name) in GATE_NAMES.iter().enumerate() {
            f(format!("{prefix}.w{name}"), &mut self.w[k]);
        }
        for (k, name) in GATE_NAMES.iter().enumerate() {
            f(format!("{prefix}.u{name}"), &mut self.u[k]);
        }
        for (k, name) in GATE_NAMES.iter().enumerate() {
            f(format!("{prefix}.b{name}"), &mut self.b[k]);
        }
    }

    fn map_ref<U>(&self, mut f: impl FnMut(&T) -> U) -> LstmDir<U> {
        LstmDir {
            w: [f(&self.w[0]), f(&self.w[1]), f(&self.w[2]), f(&self.w[3])],
            u: [f(&self.u[0]), f(&self.u[1]), f(&self.u[2]), f(&self.u[3])],
            b: [f(&self.b[0]), f(&self.b[1]), f(&self.b[2]), f(&self.b[3])],
        }
    }
}

/// One bidirectional LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer<T> {
    pub fwd: LstmDir<T>,
    pub bwd: LstmDir<T>,
}

impl<T> LstmLayer<T> {
    fn for_each<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a T)) {
        self.fwd.for_each(&format!("{prefix}.fwd"), f);
        self.bwd.for_each(&format!("{prefix}.bwd"), f);
    }

    fn for_each_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut T)) {
        self.fwd.for_each_mut(&format!("{prefix}.fwd"), f);
        self.bwd.for_each_mut(&format!("{prefix}.bwd"), f);
    }

    fn map_ref<U>(&self, mut f: impl FnMut(&T) -> U) -> LstmLayer<U> {
        LstmLayer {
            fwd: self.fwd.map_ref(&mut f),
            bwd: self.bwd.map_ref(&mut f),
        }
    }
}

/// Every tensor in the model. Generic over the payload so the same shape
/// describes parameter arrays, graph leaf ids, and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTensors<T> {
    pub word_emb: T,
    pub time_emb_doc: T,
    pub time_emb_con: T,
    /// Predicate marker vector mixed into verb tokens.
    pub pr: T,
    /// Table of predicate-to-expression offset vectors, row`offset + window`.
    pub po: T,
    /// Time marker vector mixed into tagged time tokens.
    pub te: T,
    /// Projection of a bucket embedding into word space (content-local path).
    pub l_w: T,
    pub l_b: T,
    /// Projection of a bucket embedding into sentence space (global paths).
    pub k_w: T,
    pub k_b: T,
    pub enc: [LstmLayer<T>; 2],
    pub conv_w: T,
    pub conv_b: T,
    pub ev_w1: T,
    pub ev_b1: T,
    pub ev_w2: T,
    pub ev_b2: T,
    pub lab_w1: T,
    pub lab_b1: T,
    pub lab_w2: T,
    pub lab_b2: T,
    pub lab_w3: T,
    pub lab_b3: T,
}

impl<T> ModelTensors<T> {
    /// Visits every tensor in a fixed order. The order is part of the
    /// checkpoint and optimizer-state contracts.
    pub fn for_each<'a>(&'a self, f: &mut dyn FnMut(String, &'a T)) {
        f("word_emb".into(), &self.word_emb);
        f("time_emb_doc".into(), &self.time_emb_doc);
        f("time_emb_con".into(), &self.time_emb_con);
        f("pr".into(), &self.pr);
        f("po".into(), &self.po);
        f("te".into(), &self.te);
        f("l_w".into(), &self.l_w);
        f("l_b".into(), &self.l_b);
        f("k_w".into(), &self.k_w);
        f("k_b".into(), &self.k_b);
        self.enc[0].for_each("enc1", f);
        self.enc[1].for_each("enc2", f);
        f("conv_w".into(), &self.conv_w);
        f("conv_b".into(), &self.conv_b);
        f("ev_w1".into(), &self.ev_w1);
        f("ev_b1".into(), &self.ev_b1);
        f("ev_w2".into(), &self.ev_w2);
        f("ev_b2".into(), &self.ev_b2);
        f("lab_w1".into(), &self.lab_w1);
        f("lab_b1".into(), &self.lab_b1);
        f("lab_w2".into(), &self.lab_w2);
        f("lab_b2".into(), &self.lab_b2);
        f("lab_w3".into(), &self.lab_w3);
        f("lab_b3".into(), &self.lab_b3);
    }

    /// Mutable visitor over the same fixed order as `for_each`. Borrows are
    /// per call, so the closure may not retain them.
    pub fn for_each_mut(&mut self, f: &mut dyn FnMut(String, &mut T)) {
        f("word_emb".into(), &mut self.word_emb);
        f("time_emb_doc".into(), &mut self.time_emb_doc);
        f("time_emb_con".into(), &mut self.time_emb_con);
        f("pr".into(), &mut self.pr);
        f("po".into(), &mut self.po);
        f("te".into(), &mut self.te);
        f("l_w".into(), &mut self.l_w);
        f("l_b".into(), &mut self.l_b);
        f("k_w".into(), &mut self.k_w);
        f("k_b".into(), &mut self.k_b);
        self.enc[0].for_each_mut("enc1", f);
        self.enc[1].for_each_mut("enc2", f);
        f("conv_w".into(), &mut self.conv_w);
        f("conv_b".into(), &mut self.conv_b);
        f("ev_w1".into(), &mut self.ev_w1);
        f("ev_b1".into(), &mut self.ev_b1);
        f("ev_w2".into(), &mut self.ev_w2);
        f("ev_b2".into(), &mut self.ev_b2);
        f("lab_w1".into(), &mut self.lab_w1);
        f("lab_b1".into(), &mut self.lab_b1);
        f("lab_w2".into(), &mut self.lab_w2);
        f("lab_b2".into(), &mut self.lab_b2);
        f("lab_w3".into(), &mut self.lab_w3);
        f("lab_b3".into(), &mut self.lab_b3);
    }

    pub fn map_ref<U>(&self, mut f: impl FnMut(&T) -> U) -> ModelTensors<U> {
        ModelTensors {
            word_emb: f(&self.word_emb),
            time_emb_doc: f(&self.time_emb_doc),
            time_emb_con: f(&self.time_emb_con),
            pr: f(&self.pr),
            po: f(&self.po),
            te: f(&self.te),
            l_w: f(&self.l_w),
            l_b: f(&self.l_b),
            k_w: f(&self.k_w),
            k_b: f(&self.k_b),
            enc: [self.enc[0].map_ref(&mut f), self.enc[1].map_ref(&mut f)],
            conv_w: f(&self.conv_w),
            conv_b: f(&self.conv_b),
            ev_w1: f(&self.ev_w1),
            ev_b1: f(&self.ev_b1),
            ev_w2: f(&self.ev_w2),
            ev_b2: f(&self.ev_b2),
            lab_w1: f(&self.lab_w1),
            lab_b1: f(&self.lab_b1),
            lab_w2: f(&self.lab_w2),
            lab_b2: f(&self.lab_b2),
            lab_w3: f(&self.lab_w3),
            lab_b3: f(&self.lab_b3),
        }
    }

    pub fn entries(&self) -> Vec<(String, &T)> {
        let mut out = Vec::new();
        self.for_each(&mut |name, t| out.push((name, t)));
        out
    }
}

/// Model parameters as plain arrays.
pub type ParamSet<F> = ModelTensors<Array2<F>>;

/// Graph leaf ids for one forward pass over a `ParamSet`.
pub type ParamNodes = ModelTensors<NodeId>;

fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, limit: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit))
}

/// Uniform Xavier initialization for a matrix mapping `cols` to `rows`.
fn xavier(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    uniform(rng, rows, cols, limit)
}

fn zeros(rows: usize, cols: usize) -> Array2<f64> {
    Array2::zeros((rows, cols))
}

const EMB_LIMIT: f64 = 0.05;

impl ParamSet<f64> {
    /// Initializes every tensor, each from its own named substream of
    /// `seed`, so values never depend on the mode or on sibling tensors.
    pub fn init(
        cfg: &ModelConfig,
        vocab_size: usize,
        n_doc_buckets: usize,
        n_con_buckets: usize,
        n_labels: usize,
        seed: u64,
    ) -> ParamSet<f64> {
        let d1 = cfg.d1;
        let h = cfg.hidden;
        let d2 = cfg.d2();
        let dt = cfg.dt;
        let ds = cfg.match_dim();

        let emb = |name: &str, rows: usize, cols: usize| {
            let mut rng = seed::rng(seed, &format!("init/{name}"));
            uniform(&mut rng, rows, cols, EMB_LIMIT)
        };
        let mut dense = |name: &str, rows: usize, cols: usize| {
            let mut rng = seed::rng(seed, &format!("init/{name}"));
            xavier(&mut rng, rows, cols)
        };

        let lstm_dir = |dense: &mut dyn FnMut(&str, usize, usize) -> Array2<f64>,
                        prefix: &str,
                        in_dim: usize| {
            let gate_w = |d: &mut dyn FnMut(&str, usize, usize) -> Array2<f64>, g: &str| {
                d(&format!("{prefix}.w{g}"), h, in_dim)
            };
            let gate_u = |d: &mut dyn FnMut(&str, usize, usize) -> Array2<f64>, g: &str| {
                d(&format!("{prefix}.u{g}"), h, h)
            };
            LstmDir {
                w: [
                    gate_w(dense, "i"),
                    gate_w(dense, "f"),
                    gate_w(dense, "g"),
                    gate_w(dense, "o"),
                ],
                u: [
                    gate_u(dense, "i"),
                    gate_u(dense, "f"),
                    gate_u(dense, "g"),
                    gate_u(dense, "o"),
                ],
                b: [zeros(h, 1), zeros(h, 1), zeros(h, 1), zeros(h, 1)],
            }
        };

        ParamSet {
            word_emb: emb("word_emb", vocab_size, d1),
            time_emb_doc: emb("time_emb_doc", n_doc_buckets, dt),
            time_emb_con: emb("time_emb_con", n_con_buckets, dt),
            pr: emb("pr", d1, 1),
            po: emb("po", cfg.offset_rows(), d1),
            te: emb("te", d1, 1),
            l_w: dense("l_w", d1, dt),
            l_b: zeros(d1, 1),
            k_w: dense("k_w", d2, dt),
            k_b: zeros(d2, 1),
            enc: [
                LstmLayer {
                    fwd: lstm_dir(&mut dense, "enc1.fwd", d1),
                    bwd: lstm_dir(&mut dense, "enc1.bwd", d1),
                },
                LstmLayer {
                    fwd: lstm_dir(&mut dense, "enc2.fwd", d2),
                    bwd: lstm_dir(&mut dense, "enc2.bwd", d2),
                },
            ],
            conv_w: dense("conv_w", cfg.conv_filters, cfg.conv_kernel),
            conv_b: zeros(cfg.conv_filters, 1),
            ev_w1: dense("ev_w1", cfg.evidence_hidden, ds),
            ev_b1: zeros(cfg.evidence_hidden, 1),
            ev_w2: dense("ev_w2", 1, cfg.evidence_hidden),
            ev_b2: zeros(1, 1),
            lab_w1: dense("lab_w1", cfg.label_hidden1, ds),
            lab_b1: zeros(cfg.label_hidden1, 1),
            lab_w2: dense("lab_w2", cfg.label_hidden2, cfg.label_hidden1),
            lab_b2: zeros(cfg.label_hidden2, 1),
            lab_w3: dense("lab_w3", n_labels, cfg.label_hidden2),
            lab_b3: zeros(n_labels, 1),
        }
    }
}

impl<F: Real> ParamSet<F> {
    pub fn cast<G: Real>(&self) -> ParamSet<G> {
        self.map_ref(|a| a.mapv(|x| G::from_f64(x.to_f64())))
    }

    /// Total scalar parameter count.
    pub fn n_scalars(&self) -> usize {
        let mut n = 0;
        self.for_each(&mut |_, a| n += a.len());
        n
    }

    /// Inserts every tensor as a trainable leaf of `graph`.
    pub fn leaves(&self, graph: &mut Graph<F>) -> ParamNodes {
        self.map_ref(|a| graph.leaf(a.clone(), true))
    }

    /// Inserts every tensor without gradient tracking, for inference.
    pub fn constants(&self, graph: &mut Graph<F>) -> ParamNodes {
        self.map_ref(|a| graph.leaf(a.clone(), false))
    }

    /// Copy of the set with a single element shifted by `eps`.
    /// Panics on an unknown tensor name.
    pub fn perturbed(&self, tensor: &str, index: (usize, usize), eps: F) -> ParamSet<F> {
        let mut out = self.clone();
        let mut found = false;
        out.for_each_mut(&mut |name, a| {
            if name == tensor {
                a[index] = a[index] + eps;
                found = true;
            }
        });
        assert!(found, "unknown tensor {tensor}");
        out
    }

    /// Accumulated gradients for every tensor after a backward pass,
    /// in the same shape as the parameters. Missing gradients are zero.
    pub fn grads(&self, graph: &Graph<F>, nodes: &ParamNodes) -> ParamSet<F> {
        let names: Vec<NodeId> = nodes.entries().into_iter().map(|(_, id)| *id).collect();
        let mut idx = 0;
        self.map_ref(|a| {
            let id = names[idx];
            idx += 1;
            match graph.grad(id) {
                Some(g) => g.clone(),
                None => Array2::zeros(a.raw_dim()),
            }
        })
    }

    pub fn to_named_arrays(&self) -> BTreeMap<String, (Vec<usize>, Vec<f64>)> {
        let mut out = BTreeMap::new();
        self.for_each(&mut |name, a| {
            let shape = a.shape().to_vec();
            let data = a.iter().map(|x| x.to_f64()).collect();
            out.insert(name, (shape, data));
        });
        out
    }

    /// Rebuilds a parameter set shaped like `self` from serialized arrays.
    /// Every tensor must be present with a matching shape.
    pub fn from_named_arrays(
        template: &ParamSet<F>,
        named: &BTreeMap<String, (Vec<usize>, Vec<f64>)>,
    ) -> Result<ParamSet<F>, Error> {
        let mut missing = Vec::new();
        let mut out = template.clone();
        out.for_each_mut(&mut |name, a| match named.get(&name) {
            Some((shape, data)) => {
                if shape.as_slice() != a.shape() {
                    missing.push(format!(
                        "{name}: shape {shape:?} does not match expected {:?}",
                        a.shape()
                    ));
                    return;
                }
                for (dst, src) in a.iter_mut().zip(data) {
                    *dst = F::from_f64(*src);
                }
            }
            None => missing.push(format!("{name}: absent")),
        });
        if !missing.is_empty() {
            return Err(Error::Checkpoint(format!(
                "parameter set mismatch: {}",
                missing.join("; ")
            )));
        }
        let extra: Vec<&String> = {
            let known: std::collections::BTreeSet<String> =
                out.entries().into_iter().map(|(n, _)| n).collect();
            named.keys().filter(|k| !known.contains(*k)).collect()
        };
        if !extra.is_empty() {
            return Err(Error::Checkpoint(format!(
                "parameter set has unknown tensors: {extra:?}"
            )));
        }
        Ok(out)
    }
}
