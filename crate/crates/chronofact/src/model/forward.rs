//! Forward pass: token mixing, the BiLSTM encoder, temporal fusion, the
//! metadata CNN, claim/evidence matching, and the joint scoring head.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::encode::{EncodedDoc, EncodedInstance};
use crate::model::graph::{Graph, NodeId};
use crate::model::real::Real;
use crate::model::{LstmDir, LstmLayer, Mode, ModelConfig, ParamNodes, ParamSet};
use crate::tagger::TokenType;

/// Embedding nodes for one document: one column per token plus the bucket
/// embeddings its temporal representation selects. Built either from the
/// parameter tables or from caller-provided leaves (the attribution path).
pub struct DocInputs {
    /// `(D1, 1)` column per token, aligned with the encoded document.
    pub words: Vec<NodeId>,
    /// `(Dt, 1)` document-level bucket embedding.
    pub doc_time: NodeId,
    /// `(Dt, 1)` per time expression, aligned with `content_buckets`.
    pub con_time: Vec<NodeId>,
}

pub struct InstanceInputs {
    pub claim: DocInputs,
    pub evidence: Vec<DocInputs>,
    /// `(Dm, 1)` metadata multi-hot column.
    pub metadata: NodeId,
}

fn doc_inputs_from_tables<F: Real>(
    g: &mut Graph<F>,
    nodes: &ParamNodes,
    doc: &EncodedDoc,
) -> DocInputs {
    DocInputs {
        words: doc.tokens.iter().map(|&id| g.table_row(nodes.word_emb, id)).collect(),
        doc_time: g.table_row(nodes.time_emb_doc, doc.doc_bucket),
        con_time: doc
            .content_buckets
            .iter()
            .map(|&b| g.table_row(nodes.time_emb_con, b))
            .collect(),
    }
}

impl InstanceInputs {
    /// Gathers all embeddings from the parameter tables (the training and
    /// inference path; gradients flow back into the tables).
    pub fn from_tables<F: Real>(
        g: &mut Graph<F>,
        nodes: &ParamNodes,
        inst: &EncodedInstance,
    ) -> InstanceInputs {
        let dm = inst.metadata.len();
        let meta = Array2::from_shape_fn((dm, 1), |(i, _)| F::from_f64(inst.metadata[i]));
        InstanceInputs {
            claim: doc_inputs_from_tables(g, nodes, &inst.claim),
            evidence: inst
                .evidence
                .iter()
                .map(|d| doc_inputs_from_tables(g, nodes, d))
                .collect(),
            metadata: g.constant(meta),
        }
    }
}

/// Graph handles and extracted values from one instance forward.
pub struct ForwardOutput<F: Real> {
    /// Evidence score node per evidence, `(1, 1)`.
    pub o_nodes: Vec<NodeId>,
    /// Label score node per evidence, `(L, 1)`.
    pub q_nodes: Vec<NodeId>,
    /// Aggregated label logits, `(L, 1)`. Absent without evidence.
    pub logits: Option<NodeId>,
    /// Masked label distribution node, `(L, 1)`.
    pub prob: Option<NodeId>,
    /// Cross-entropy at the gold label. Absent without evidence.
    pub loss: Option<NodeId>,
    /// Masked label distribution values.
    pub probs: Vec<F>,
    /// Argmax of `probs`; earliest label on ties.
    pub predicted: usize,
    /// Set when the instance had no evidence and `probs` is the uniform
    /// distribution over the domain's labels.
    pub zero_evidence: bool,
}

fn affine<F: Real>(g: &mut Graph<F>, w: NodeId, b: NodeId, x: NodeId) -> NodeId {
    let wx = g.matmul(w, x);
    g.add(wx, b)
}

fn po_row(offset: Option<i64>, window: i64) -> usize {
    (offset.unwrap_or(0).clamp(-window, window) + window) as usize
}

/// Content-local mixing. Time tokens blend toward the projected bucket
/// embedding plus a time marker; predicate tokens toward a predicate
/// marker plus an offset embedding. At gamma 1 the words pass through
/// untouched and the graph is identical to the base mode's.
fn mixed_tokens<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    nodes: &ParamNodes,
    d: &DocInputs,
    doc: &EncodedDoc,
) -> Result<Vec<NodeId>> {
    if cfg.gamma == 1.0 {
        return Ok(d.words.clone());
    }
    let keep = F::from_f64(cfg.gamma);
    let mix_in = F::from_f64(1.0 - cfg.gamma);
    doc.marks
        .iter()
        .zip(&d.words)
        .map(|(m, &w)| {
            let mixed = match m.token_type {
                TokenType::Other => None,
                TokenType::BeginTime => {
                    let j = m
                        .expr_index
                        .ok_or_else(|| Error::Corpus("time span without expression index".into()))?;
                    let e = *d.con_time.get(j).ok_or(Error::DanglingExprIndex {
                        index: j,
                        len: d.con_time.len(),
                    })?;
                    let le = affine(g, nodes.l_w, nodes.l_b, e);
                    Some(g.add(le, nodes.te))
                }
                TokenType::Time => Some(nodes.te),
                TokenType::BeginPredicate => {
                    let row = po_row(m.pred_offset, cfg.offset_window);
                    let po = g.table_row(nodes.po, row);
                    Some(g.add(nodes.pr, po))
                }
                TokenType::Predicate => Some(nodes.pr),
            };
            Ok(match mixed {
                None => w,
                Some(mx) => {
                    let a = g.scale(w, keep);
                    let b = g.scale(mx, mix_in);
                    g.add(a, b)
                }
            })
        })
        .collect()
}

fn gate_pre<F: Real>(
    g: &mut Graph<F>,
    w: NodeId,
    u: NodeId,
    b: NodeId,
    x: NodeId,
    h: NodeId,
) -> NodeId {
    let wx = g.matmul(w, x);
    let uh = g.matmul(u, h);
    let s = g.add(wx, uh);
    g.add(s, b)
}

/// One LSTM direction. Returns the hidden state at every position,
/// indexed by the original position regardless of direction.
fn lstm_run<F: Real>(
    g: &mut Graph<F>,
    p: &LstmDir<NodeId>,
    xs: &[NodeId],
    hidden: usize,
    reverse: bool,
) -> Vec<NodeId> {
    let zero = g.constant(Array2::zeros((hidden, 1)));
    let mut h = zero;
    let mut c = zero;
    let mut out = vec![zero; xs.len()];
    let order: Vec<usize> = if reverse {
        (0..xs.len()).rev().collect()
    } else {
        (0..xs.len()).collect()
    };
    for t in order {
        let x = xs[t];
        let pre_i = gate_pre(g, p.w[0], p.u[0], p.b[0], x, h);
        let pre_f = gate_pre(g, p.w[1], p.u[1], p.b[1], x, h);
        let pre_g = gate_pre(g, p.w[2], p.u[2], p.b[2], x, h);
        let pre_o = gate_pre(g, p.w[3], p.u[3], p.b[3], x, h);
        let i = g.sigmoid(pre_i);
        let f = g.sigmoid(pre_f);
        let cand = g.tanh(pre_g);
        let o = g.sigmoid(pre_o);
        let keep = g.mul(f, c);
        let write = g.mul(i, cand);
        c = g.add(keep, write);
        let ct = g.tanh(c);
        h = g.mul(o, ct);
        out[t] = h;
    }
    out
}

/// Two stacked BiLSTM layers with a skip summary: the final forward and
/// backward states of each layer are concatenated and the two layers
/// summed, giving a `(2*hidden, 1)` sentence vector. Dropout sits between
/// the layers. Empty token lists encode to zeros.
fn bilstm_summary<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    enc: &[LstmLayer<NodeId>; 2],
    xs: &[NodeId],
) -> NodeId {
    if xs.is_empty() {
        return g.constant(Array2::zeros((cfg.d2(), 1)));
    }
    let h = cfg.hidden;
    let last = xs.len() - 1;
    let f1 = lstm_run(g, &enc[0].fwd, xs, h, false);
    let b1 = lstm_run(g, &enc[0].bwd, xs, h, true);
    let mut mid = Vec::with_capacity(xs.len());
    for t in 0..xs.len() {
        let cat = g.concat_rows(&[f1[t], b1[t]]);
        mid.push(g.dropout(cat, cfg.dropout));
    }
    let f2 = lstm_run(g, &enc[1].fwd, &mid, h, false);
    let b2 = lstm_run(g, &enc[1].bwd, &mid, h, true);
    let s1 = g.concat_rows(&[f1[last], b1[0]]);
    let s2 = g.concat_rows(&[f2[last], b2[0]]);
    g.add(s1, s2)
}

fn blend<F: Real>(g: &mut Graph<F>, a: NodeId, weight_a: f64, b: NodeId) -> NodeId {
    let sa = g.scale(a, F::from_f64(weight_a));
    let sb = g.scale(b, F::from_f64(1.0 - weight_a));
    g.add(sa, sb)
}

/// Mean of the projected content bucket embeddings, or None without
/// expressions.
fn content_mean<F: Real>(
    g: &mut Graph<F>,
    nodes: &ParamNodes,
    con_time: &[NodeId],
) -> Option<NodeId> {
    if con_time.is_empty() {
        return None;
    }
    let mut sum = affine(g, nodes.k_w, nodes.k_b, con_time[0]);
    for &e in &con_time[1..] {
        let k = affine(g, nodes.k_w, nodes.k_b, e);
        sum = g.add(sum, k);
    }
    Some(g.scale(sum, F::from_f64(1.0 / con_time.len() as f64)))
}

/// Global fusion of the sentence vector with temporal signals. A weight of
/// exactly 1 on the text returns `h` unchanged, node for node, so the
/// degenerate configurations reproduce the base mode bit for bit.
fn global_fuse<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    nodes: &ParamNodes,
    h: NodeId,
    d: &DocInputs,
) -> NodeId {
    match cfg.mode {
        Mode::Base | Mode::DlLoc | Mode::ClLoc => h,
        Mode::DlGlob => {
            if cfg.alpha == 1.0 {
                return h;
            }
            let k = affine(g, nodes.k_w, nodes.k_b, d.doc_time);
            blend(g, h, cfg.alpha, k)
        }
        Mode::ClGlob => {
            if cfg.alpha == 1.0 {
                return h;
            }
            match content_mean(g, nodes, &d.con_time) {
                Some(mean) => blend(g, h, cfg.alpha, mean),
                None => h,
            }
        }
        Mode::DlclGlob => {
            if cfg.alpha == 1.0 {
                return h;
            }
            match content_mean(g, nodes, &d.con_time) {
                Some(mean) => {
                    let k = affine(g, nodes.k_w, nodes.k_b, d.doc_time);
                    let sh = g.scale(h, F::from_f64(cfg.alpha));
                    let sk = g.scale(k, F::from_f64(cfg.beta));
                    let sm = g.scale(mean, F::from_f64(1.0 - cfg.alpha - cfg.beta));
                    let hk = g.add(sh, sk);
                    g.add(hk, sm)
                }
                // Without content buckets the remaining weights renormalize
                // between text and the document-level signal.
                None => {
                    let denom = cfg.alpha + cfg.beta;
                    if denom == 0.0 {
                        return h;
                    }
                    let k = affine(g, nodes.k_w, nodes.k_b, d.doc_time);
                    blend(g, h, cfg.alpha / denom, k)
                }
            }
        }
    }
}

/// Sentence vector for one document under the active mode.
fn encode_document<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    nodes: &ParamNodes,
    d: &DocInputs,
    doc: &EncodedDoc,
) -> Result<NodeId> {
    debug_assert_eq!(d.words.len(), doc.tokens.len(), "inputs/encoding misaligned");
    let mut xs = if cfg.mode == Mode::ClLoc {
        mixed_tokens(g, cfg, nodes, d, doc)?
    } else {
        d.words.clone()
    };
    if cfg.mode == Mode::DlLoc {
        let pseudo = affine(g, nodes.l_w, nodes.l_b, d.doc_time);
        xs.insert(0, pseudo);
    }
    let h = bilstm_summary(g, cfg, &nodes.enc, &xs);
    Ok(global_fuse(g, cfg, nodes, h, d))
}

/// Metadata CNN: kernel-width windows over the multi-hot vector, one
/// filter bank, ReLU, then global max pooling to `(filters, 1)`.
fn metadata_cnn<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    nodes: &ParamNodes,
    meta: NodeId,
) -> NodeId {
    let dm = g.value(meta).nrows();
    let k = cfg.conv_kernel;
    // Short vectors still yield one (zero-padded) window.
    let p = if dm >= k { dm - k + 1 } else { 1 };
    let mut window_rows = Vec::with_capacity(k);
    for off in 0..k {
        let mut sel = Array2::zeros((p, dm));
        for w in 0..p {
            if w + off < dm {
                sel[(w, w + off)] = F::one();
            }
        }
        let sel = g.constant(sel);
        let col = g.matmul(sel, meta);
        window_rows.push(g.transpose(col));
    }
    let windows = g.concat_rows(&window_rows);
    let conv = g.matmul(nodes.conv_w, windows);
    let biased = g.add_col_broadcast(conv, nodes.conv_b);
    let act = g.relu(biased);
    g.row_max(act)
}

/// `[h_c; h_e; h_c - h_e; h_c * h_e; g_m]`.
fn match_vector<F: Real>(g: &mut Graph<F>, hc: NodeId, he: NodeId, gm: NodeId) -> NodeId {
    let diff = g.sub(hc, he);
    let prod = g.mul(hc, he);
    g.concat_rows(&[hc, he, diff, prod, gm])
}

fn evidence_score<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    nodes: &ParamNodes,
    s: NodeId,
) -> NodeId {
    let h1 = affine(g, nodes.ev_w1, nodes.ev_b1, s);
    let a1 = g.leaky_relu(h1, F::from_f64(cfg.leaky_slope));
    affine(g, nodes.ev_w2, nodes.ev_b2, a1)
}

fn label_scores<F: Real>(
    g: &mut Graph<F>,
    nodes: &ParamNodes,
    s: NodeId,
) -> NodeId {
    let h1 = affine(g, nodes.lab_w1, nodes.lab_b1, s);
    let a1 = g.relu(h1);
    let h2 = affine(g, nodes.lab_w2, nodes.lab_b2, a1);
    let a2 = g.relu(h2);
    affine(g, nodes.lab_w3, nodes.lab_b3, a2)
}

/// Aggregates per-evidence scores into label logits: the evidence score
/// column weights the rows of the stacked label score matrix.
fn combine_scores<F: Real>(g: &mut Graph<F>, o: &[NodeId], q: &[NodeId]) -> NodeId {
    let o_col = g.concat_rows(o);
    let q_rows: Vec<NodeId> = q.iter().map(|&qi| g.transpose(qi)).collect();
    let q_mat = g.concat_rows(&q_rows);
    let o_row = g.transpose(o_col);
    let logit_row = g.matmul(o_row, q_mat);
    g.transpose(logit_row)
}

fn argmax<F: Real>(probs: &[F]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}

/// Runs one instance through the network. `inputs` must have been built
/// for the same encoded instance.
pub fn forward_instance<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    nodes: &ParamNodes,
    inputs: &InstanceInputs,
    inst: &EncodedInstance,
) -> Result<ForwardOutput<F>> {
    let n_labels = inst.label_mask.len();
    if inst.evidence.is_empty() {
        let allowed: Vec<usize> = (0..n_labels).filter(|&l| inst.label_mask[l]).collect();
        if allowed.is_empty() {
            return Err(Error::Corpus(format!("{}: empty domain label mask", inst.claim_id)));
        }
        let u = F::from_f64(1.0 / allowed.len() as f64);
        let mut probs = vec![F::zero(); n_labels];
        for &l in &allowed {
            probs[l] = u;
        }
        return Ok(ForwardOutput {
            o_nodes: Vec::new(),
            q_nodes: Vec::new(),
            logits: None,
            prob: None,
            loss: None,
            predicted: allowed[0],
            probs,
            zero_evidence: true,
        });
    }

    let h_c = encode_document(g, cfg, nodes, &inputs.claim, &inst.claim)?;
    let g_m = metadata_cnn(g, cfg, nodes, inputs.metadata);

    let mut o_nodes = Vec::with_capacity(inst.evidence.len());
    let mut q_nodes = Vec::with_capacity(inst.evidence.len());
    for (d, doc) in inputs.evidence.iter().zip(&inst.evidence) {
        let h_e = encode_document(g, cfg, nodes, d, doc)?;
        let s = match_vector(g, h_c, h_e, g_m);
        o_nodes.push(evidence_score(g, cfg, nodes, s));
        q_nodes.push(label_scores(g, nodes, s));
    }

    let logits = combine_scores(g, &o_nodes, &q_nodes);
    let prob = g.masked_softmax(logits, &inst.label_mask);
    let loss = g.ce_from_logits(logits, &inst.label_mask, inst.label_id);
    let probs: Vec<F> = g.value(prob).column(0).to_vec();
    let predicted = argmax(&probs);
    Ok(ForwardOutput {
        o_nodes,
        q_nodes,
        logits: Some(logits),
        prob: Some(prob),
        loss: Some(loss),
        probs,
        predicted,
        zero_evidence: false,
    })
}

/// Plain-value view of one forward pass, for evaluation.
#[derive(Debug, Clone)]
pub struct Prediction<F: Real> {
    pub probs: Vec<F>,
    pub predicted: usize,
    pub evidence_scores: Vec<F>,
    /// Per-evidence scores over the full label set.
    pub label_scores: Vec<Vec<F>>,
    /// Cross-entropy at the gold label; absent without evidence.
    pub loss: Option<F>,
    pub zero_evidence: bool,
}

/// Inference on one instance: no dropout, no gradient tracking.
pub fn predict<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    inst: &EncodedInstance,
) -> Result<Prediction<F>> {
    let mut g = Graph::new();
    let nodes = params.constants(&mut g);
    let inputs = InstanceInputs::from_tables(&mut g, &nodes, inst);
    let out = forward_instance(&mut g, cfg, &nodes, &inputs, inst)?;
    Ok(Prediction {
        probs: out.probs.clone(),
        predicted: out.predicted,
        evidence_scores: out.o_nodes.iter().map(|&o| g.scalar(o)).collect(),
        label_scores: out
            .q_nodes
            .iter()
            .map(|&q| g.value(q).column(0).to_vec())
            .collect(),
        loss: out.loss.map(|l| g.scalar(l)),
        zero_evidence: out.zero_evidence,
    })
}

/// Mean cross-entropy over the instances that carry evidence, without
/// gradient tracking. Instances with no evidence contribute nothing.
pub fn mean_loss<'a, F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    insts: impl IntoIterator<Item = &'a EncodedInstance>,
) -> Result<F> {
    let mut sum = F::zero();
    let mut n = 0usize;
    for inst in insts {
        let mut g = Graph::new();
        let nodes = params.constants(&mut g);
        let inputs = InstanceInputs::from_tables(&mut g, &nodes, inst);
        let out = forward_instance(&mut g, cfg, &nodes, &inputs, inst)?;
        if let Some(l) = out.loss {
            sum = sum + g.scalar(l);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("no instance with evidence".into()));
    }
    Ok(sum * F::from_f64(1.0 / n as f64))
}

/// Mean loss and its gradient for every parameter, eval graph (no
/// dropout). The finite-difference counterpart is `mean_loss`.
pub fn analytic_grads<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    insts: &[EncodedInstance],
) -> Result<(F, ParamSet<F>)> {
    let mut g = Graph::new();
    let nodes = params.leaves(&mut g);
    let mut losses = Vec::new();
    for inst in insts {
        let inputs = InstanceInputs::from_tables(&mut g, &nodes, inst);
        let out = forward_instance(&mut g, cfg, &nodes, &inputs, inst)?;
        if let Some(l) = out.loss {
            losses.push(l);
        }
    }
    if losses.is_empty() {
        return Err(Error::EmptyInput("no instance with evidence".into()));
    }
    let mut total = losses[0];
    for &l in &losses[1..] {
        total = g.add(total, l);
    }
    let mean = g.scale(total, F::from_f64(1.0 / losses.len() as f64));
    g.backward(mean)?;
    Ok((g.scalar(mean), params.grads(&g, &nodes)))
}
