//! Integrated-gradients attribution of a veracity prediction onto the
//! model's embedding inputs: claim and evidence word vectors, publication
//! and content time embeddings, and the metadata column.
//!
//! IG_i = (x_i - x'_i) * mean over t in 1..=m of dF/dx_i evaluated at
//! x' + (t/m)(x - x'), with F the predicted label's probability after
//! masking and softmax. The right-endpoint mean makes the completeness sum
//! converge to F(x) - F(x') as m grows; the residual is reported, never
//! hidden.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::model::encode::{EncodedDoc, EncodedInstance};
use crate::model::forward::{forward_instance, predict, DocInputs, InstanceInputs};
use crate::model::{Graph, ModelConfig, NodeId, ParamSet, Real};

/// Reference point the input is interpolated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgBaseline {
    /// All-zero embeddings of identical shape (the standard choice for
    /// embedding inputs).
    Zero,
    /// The input itself; attributions vanish. Useful as a self-check.
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockAttribution {
    /// Sum of signed attributions over the block's dimensions.
    pub signed: f64,
    /// Sum of absolute attributions; comparable across blocks.
    pub abs: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AttributionReport {
    /// Label whose probability was attributed.
    pub predicted: usize,
    /// F at the full input.
    pub f_input: f64,
    /// F at the baseline.
    pub f_baseline: f64,
    pub steps: usize,
    /// Per-block sums in a stable order: claim text / pub time / content
    /// time, the same triple per evidence document, then metadata.
    pub blocks: Vec<(String, BlockAttribution)>,
    /// |sum of signed attributions - (F(input) - F(baseline))|.
    pub residual: f64,
}

/// Interpolation points of the right-endpoint Riemann approximation. For a
/// linear function, gradients averaged over these points recover the exact
/// path integral at any step count.
pub fn riemann_scales(m: usize) -> impl Iterator<Item = f64> {
    (1..=m).map(move |t| t as f64 / m as f64)
}

/// One named group of input columns, e.g. all word vectors of one document.
struct Block<F: Real> {
    name: String,
    values: Vec<Array2<F>>,
}

fn column<F: Real>(table: &Array2<F>, row: usize) -> Array2<F> {
    table.row(row).to_owned().insert_axis(Axis(1))
}

fn doc_blocks<F: Real>(params: &ParamSet<F>, doc: &EncodedDoc, prefix: &str) -> Vec<Block<F>> {
    vec![
        Block {
            name: format!("{prefix}/text"),
            values: doc.tokens.iter().map(|&id| column(&params.word_emb, id)).collect(),
        },
        Block {
            name: format!("{prefix}/pub_time"),
            values: vec![column(&params.time_emb_doc, doc.doc_bucket)],
        },
        Block {
            name: format!("{prefix}/content_time"),
            values: doc
                .content_buckets
                .iter()
                .map(|&b| column(&params.time_emb_con, b))
                .collect(),
        },
    ]
}

fn gather_blocks<F: Real>(params: &ParamSet<F>, inst: &EncodedInstance) -> Vec<Block<F>> {
    let mut blocks = doc_blocks(params, &inst.claim, "claim");
    for (i, doc) in inst.evidence.iter().enumerate() {
        blocks.extend(doc_blocks(params, doc, &format!("evidence/{i}")));
    }
    let dm = inst.metadata.len();
    let meta = Array2::from_shape_fn((dm, 1), |(r, _)| F::from_f64(inst.metadata[r]));
    blocks.push(Block { name: "metadata".into(), values: vec![meta] });
    blocks
}

/// Forward pass with every input column inserted as a trainable leaf at
/// `scale` times its value. Returns F = P(predicted) and, when asked, the
/// gradient of F at each input column (same nesting as `blocks`).
fn forward_at_scale<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    inst: &EncodedInstance,
    blocks: &[Block<F>],
    predicted: usize,
    scale: f64,
    want_grads: bool,
) -> Result<(f64, Option<Vec<Vec<Array2<F>>>>)> {
    let s = F::from_f64(scale);
    let mut g = Graph::new();
    let nodes = params.constants(&mut g);

    let mut leaf_ids: Vec<Vec<NodeId>> = Vec::with_capacity(blocks.len());
    for block in blocks {
        leaf_ids.push(block.values.iter().map(|v| g.leaf(v.mapv(|x| x * s), true)).collect());
    }

    // Blocks were laid out as claim triple, per-evidence triples, metadata.
    let n_ev = inst.evidence.len();
    let doc_of = |ids: &[Vec<NodeId>], base: usize| DocInputs {
        words: ids[base].clone(),
        doc_time: ids[base + 1][0],
        con_time: ids[base + 2].clone(),
    };
    let inputs = InstanceInputs {
        claim: doc_of(&leaf_ids, 0),
        evidence: (0..n_ev).map(|i| doc_of(&leaf_ids, 3 + 3 * i)).collect(),
        metadata: leaf_ids[3 + 3 * n_ev][0],
    };

    let out = forward_instance(&mut g, cfg, &nodes, &inputs, inst)?;
    let prob = out.prob.ok_or_else(|| {
        Error::EmptyInput("attribution needs at least one evidence document".into())
    })?;
    let f_node = g.pick_row(prob, predicted);
    let f_val = g.scalar(f_node).to_f64();
    if !f_val.is_finite() {
        return Err(Error::Numerical(format!("non-finite F {f_val} at scale {scale}")));
    }
    if !want_grads {
        return Ok((f_val, None));
    }
    g.backward(f_node)?;
    let grads = leaf_ids
        .iter()
        .zip(blocks)
        .map(|(ids, block)| {
            ids.iter()
                .zip(&block.values)
                .map(|(&id, v)| match g.grad(id) {
                    Some(gr) => gr.clone(),
                    None => Array2::zeros(v.raw_dim()),
                })
                .collect()
        })
        .collect();
    Ok((f_val, Some(grads)))
}

/// Attribute the predicted label's probability onto every embedding input
/// of one instance. `m` is the number of interpolation steps; fewer than
/// 20 gives residuals too coarse to trust and is rejected.
pub fn integrated_gradients<F: Real>(
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    inst: &EncodedInstance,
    baseline: IgBaseline,
    m: usize,
) -> Result<AttributionReport> {
    if m < 20 {
        return Err(Error::Config(format!("integration steps {m} < 20")));
    }
    let predicted = predict(cfg, params, inst)?.predicted;
    let blocks = gather_blocks(params, inst);

    let (f_input, _) = forward_at_scale(cfg, params, inst, &blocks, predicted, 1.0, false)?;
    let base_scale = match baseline {
        IgBaseline::Zero => 0.0,
        IgBaseline::Input => 1.0,
    };
    let (f_baseline, _) =
        forward_at_scale(cfg, params, inst, &blocks, predicted, base_scale, false)?;

    // Mean gradient over the interpolation path, per input column.
    let mut acc: Vec<Vec<Array2<f64>>> = blocks
        .iter()
        .map(|b| b.values.iter().map(|v| Array2::zeros(v.raw_dim())).collect())
        .collect();
    for s in riemann_scales(m) {
        // With the input itself as baseline the path never leaves x.
        let at = match baseline {
            IgBaseline::Zero => s,
            IgBaseline::Input => 1.0,
        };
        let (_, grads) = forward_at_scale(cfg, params, inst, &blocks, predicted, at, true)?;
        let grads = grads.expect("gradients were requested");
        for (accb, gb) in acc.iter_mut().zip(&grads) {
            for (a, gr) in accb.iter_mut().zip(gb) {
                a.zip_mut_with(gr, |x, &y| *x += y.to_f64() / m as f64);
            }
        }
    }

    // IG = (x - x') elementwise mean gradient; x' is 0 or x itself.
    let mut out_blocks = Vec::with_capacity(blocks.len());
    let mut total = 0.0;
    for (block, accb) in blocks.iter().zip(&acc) {
        let mut signed = 0.0;
        let mut abs = 0.0;
        for (v, a) in block.values.iter().zip(accb) {
            for (x, g) in v.iter().zip(a.iter()) {
                let dx = match baseline {
                    IgBaseline::Zero => x.to_f64(),
                    IgBaseline::Input => 0.0,
                };
                let ig = dx * g;
                signed += ig;
                abs += ig.abs();
            }
        }
        if !signed.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite attribution in block {}",
                block.name
            )));
        }
        total += signed;
        out_blocks.push((block.name.clone(), BlockAttribution { signed, abs }));
    }
    let residual = (total - (f_input - f_baseline)).abs();

    Ok(AttributionReport {
        predicted,
        f_input,
        f_baseline,
        steps: m,
        blocks: out_blocks,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, LabelRule, SynthConfig};
    use crate::model::encode::Encoder;
    use crate::model::Mode;
    use crate::timeline::{shipped_content_scheme, shipped_document_scheme};
    use ndarray::array;

    /// The exactness oracle: for F(x) = w.x the path gradient is constant,
    /// so the Riemann mean reproduces w and IG_i = w_i * x_i for any m.
    #[test]
    fn linear_map_is_attributed_exactly() {
        let w = array![[0.5, -2.0, 3.0]];
        let x = array![[1.0], [2.0], [-0.5]];
        for m in [1usize, 3, 20] {
            let mut mean_grad: Array2<f64> = Array2::zeros((3, 1));
            for s in riemann_scales(m) {
                let mut g = Graph::<f64>::new();
                let wn = g.leaf(w.clone(), false);
                let xn = g.leaf(x.mapv(|v| v * s), true);
                let f = g.matmul(wn, xn);
                g.backward(f).unwrap();
                mean_grad.zip_mut_with(g.grad(xn).unwrap(), |a, &b| *a += b / m as f64);
            }
            let ig = &x * &mean_grad;
            let expect = array![[0.5 * 1.0], [-2.0 * 2.0], [3.0 * -0.5]];
            for (a, b) in ig.iter().zip(expect.iter()) {
                assert!((a - b).abs() < 1e-12, "m={m}: {a} vs {b}");
            }
        }
    }

    fn setup(mode: Mode) -> (ModelConfig, ParamSet<f64>, Vec<EncodedInstance>) {
        let synth = SynthConfig {
            n_domains: 1,
            claims_per_domain: 8,
            evidence_per_claim: 3,
            rule: LabelRule::TimeRule,
            vocab_size: 25,
            claim_len: 5,
            evidence_len: 6,
            max_abs_delta: 40,
        };
        let (instances, _) = generate_synthetic(&synth, 31);
        let encoder = Encoder::fit(
            &instances,
            shipped_document_scheme().clone(),
            shipped_content_scheme().clone(),
        )
        .unwrap();
        let encoded = encoder.encode_all(&instances).unwrap();
        let mut cfg = ModelConfig::for_mode(mode);
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
        (cfg, params, encoded)
    }

    #[test]
    fn input_baseline_attributes_nothing() {
        let (cfg, params, insts) = setup(Mode::DlGlob);
        let report =
            integrated_gradients(&cfg, &params, &insts[0], IgBaseline::Input, 20).unwrap();
        assert_eq!(report.f_input, report.f_baseline);
        for (name, b) in &report.blocks {
            assert_eq!(b.signed, 0.0, "block {name}");
            assert_eq!(b.abs, 0.0, "block {name}");
        }
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn completeness_residual_is_small_and_shrinks() {
        let (cfg, params, insts) = setup(Mode::DlGlob);
        // Pick the instance where the prediction moves most from baseline,
        // so the 1% relative bound has a meaningful denominator.
        let inst = insts
            .iter()
            .map(|i| {
                let r = integrated_gradients(&cfg, &params, i, IgBaseline::Zero, 20).unwrap();
                ((r.f_input - r.f_baseline).abs(), i)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, i)| i)
            .unwrap();
        let coarse = integrated_gradients(&cfg, &params, inst, IgBaseline::Zero, 20).unwrap();
        let fine = integrated_gradients(&cfg, &params, inst, IgBaseline::Zero, 300).unwrap();
        let delta = (fine.f_input - fine.f_baseline).abs();
        assert!(delta > 1e-6, "degenerate test instance, delta {delta}");
        assert!(fine.residual <= coarse.residual + 1e-12, "no shrink: {coarse:?} {fine:?}");
        assert!(
            fine.residual <= 0.01 * delta,
            "residual {} above 1% of {delta}",
            fine.residual
        );
    }

    #[test]
    fn time_blocks_get_nothing_in_base_mode() {
        let (cfg, params, insts) = setup(Mode::Base);
        let report =
            integrated_gradients(&cfg, &params, &insts[0], IgBaseline::Zero, 20).unwrap();
        for (name, b) in &report.blocks {
            if name.ends_with("pub_time") || name.ends_with("content_time") {
                assert_eq!(b.abs, 0.0, "unused time block {name} was attributed");
            }
        }
        let text_mass: f64 = report
            .blocks
            .iter()
            .filter(|(n, _)| n.ends_with("/text"))
            .map(|(_, b)| b.abs)
            .sum();
        assert!(text_mass > 0.0);
    }

    #[test]
    fn too_few_steps_and_zero_evidence_are_rejected() {
        let (cfg, params, mut insts) = setup(Mode::DlGlob);
        let err =
            integrated_gradients(&cfg, &params, &insts[0], IgBaseline::Zero, 5).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        insts[0].evidence.clear();
        let err =
            integrated_gradients(&cfg, &params, &insts[0], IgBaseline::Zero, 20).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)), "{err}");
    }
}
