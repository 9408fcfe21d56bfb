//! Acceptance gate. One test per criterion; each prints a single pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`) and
//! enforces its runtime budget. Criteria 5, 7, and 9 share one set of
//! trained models; its build time is measured once and charged to the
//! learning-sanity budget, so the analysis criteria time only their own
//! work.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use chronofact::corpus::{generate_synthetic, stratified_split, LabelRule, SynthConfig};
use chronofact::eval::rankings::bucket_score_correlation;
use chronofact::eval::{
    compare_rankings, integrated_gradients, micro_macro_f1, riemann_scales, spearman,
    IgBaseline, RankBy, ScoredDoc,
};
use chronofact::model::encode::{EncodedInstance, Encoder};
use chronofact::model::forward::{analytic_grads, mean_loss, predict, Prediction};
use chronofact::model::{Graph, Mode, ModelConfig, ParamSet, Real};
use chronofact::seed;
use chronofact::timeline::{
    build_bucket_scheme, shipped_content_scheme, shipped_document_scheme, Interval,
    SchemeLevel, SpecialBucket,
};
use chronofact::train::optim::Schedule;
use chronofact::train::{pretrain, TrainConfig, TrainRun};
use chronofact::Error;

// Pinned tolerances.
const METRIC_TOL: f64 = 1e-12;
const GRAD_RTOL: f64 = 1e-4;
/// Floor under which central differences are pure cancellation noise.
const GRAD_ATOL: f64 = 1e-9;
const FD_EPS: f64 = 1e-5;
const IG_LINEAR_TOL: f64 = 1e-9;
const IG_RESIDUAL_FRAC: f64 = 0.01;
const IG_STEPS: usize = 300;
const NULL_CORR_BOUND: f64 = 0.15;
const DL_MIN_ACCURACY: f64 = 0.95;
const BASE_MAJORITY_SLACK: f64 = 0.05;
const TEXT_RULE_GAP: f64 = 0.02;

/// Runs a criterion body, prints its pass/fail line, then re-raises any
/// failure so the test itself fails too.
fn criterion(n: usize, name: &str, budget: Option<Duration>, body: impl FnOnce()) {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let in_budget = budget.map_or(true, |b| elapsed <= b);
    println!(
        "criterion {n} ({name}): {} in {elapsed:.2?}{}",
        if outcome.is_ok() && in_budget { "pass" } else { "fail" },
        budget.map_or(String::new(), |b| format!(" (budget {b:.0?})")),
    );
    if let Err(panic) = outcome {
        std::panic::resume_unwind(panic);
    }
    if let Some(b) = budget {
        assert!(elapsed <= b, "criterion {n} took {elapsed:?}, budget {b:?}");
    }
}

#[test]
fn criterion_1_bucket_fixture_fidelity() {
    criterion(1, "bucket fixture fidelity", Some(Duration::from_secs(1)), || {
        for scheme in [shipped_document_scheme(), shipped_content_scheme()] {
            let n = scheme.intervals().len();
            for (i, iv) in scheme.intervals().iter().enumerate() {
                if let Some(lo) = iv.lo {
                    assert_eq!(scheme.assign_bucket(Some(lo)).unwrap(), i, "lo of {iv:?}");
                }
                if let Some(hi) = iv.hi {
                    assert_eq!(scheme.assign_bucket(Some(hi)).unwrap(), i, "hi of {iv:?}");
                }
                if let (Some(lo), Some(hi)) = (iv.lo, iv.hi) {
                    let mid = lo + (hi - lo) / 2;
                    assert_eq!(scheme.assign_bucket(Some(mid)).unwrap(), i, "mid of {iv:?}");
                }
            }
            // Open ends swallow anything beyond the fitted range.
            assert_eq!(scheme.assign_bucket(Some(-1_000_000_000)).unwrap(), 0);
            assert_eq!(scheme.assign_bucket(Some(1_000_000_000)).unwrap(), n - 1);
        }
        let doc = shipped_document_scheme();
        assert_eq!(
            doc.assign_bucket(None).unwrap(),
            doc.special_index(SpecialBucket::EvidenceNoDate).unwrap()
        );
    });
}

/// Independent nearest-rank construction: near-equal rank-contiguous
/// groups, a value split by a cut moves wholly to the group holding its
/// first occurrence, empty groups drop, group maxima become bounds, and a
/// [0, 0] interval is forced when 0 occurs.
fn oracle_intervals(deltas: &[i64], q: usize) -> Option<Vec<Interval>> {
    let mut sorted = deltas.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mut distinct = sorted.clone();
    distinct.dedup();
    if q > distinct.len() {
        return None;
    }

    let mut groups: Vec<Vec<i64>> =
        (0..q).map(|k| sorted[k * n / q..(k + 1) * n / q].to_vec()).collect();
    for k in 1..groups.len() {
        let Some(j) = (0..k).rev().find(|&j| !groups[j].is_empty()) else { continue };
        while groups[k].first() == groups[j].last() {
            let v = groups[k].remove(0);
            groups[j].push(v);
        }
    }
    groups.retain(|g| !g.is_empty());

    let maxima: Vec<i64> = groups.iter().map(|g| *g.last().unwrap()).collect();
    let last = maxima.len() - 1;
    let mut intervals: Vec<Interval> = maxima
        .iter()
        .enumerate()
        .map(|(i, &hi)| Interval {
            lo: if i == 0 { None } else { Some(maxima[i - 1] + 1) },
            hi: if i == last { None } else { Some(hi) },
        })
        .collect();

    if sorted.binary_search(&0).is_ok() {
        let pos = intervals.iter().position(|iv| iv.contains(0)).unwrap();
        let host = intervals[pos];
        if host != (Interval { lo: Some(0), hi: Some(0) }) {
            let mut parts = Vec::new();
            if host.lo.map_or(true, |lo| lo < 0) {
                parts.push(Interval { lo: host.lo, hi: Some(-1) });
            }
            parts.push(Interval { lo: Some(0), hi: Some(0) });
            if host.hi.map_or(true, |hi| hi > 0) {
                parts.push(Interval { lo: Some(1), hi: host.hi });
            }
            intervals.splice(pos..pos + 1, parts);
        }
    }
    Some(intervals)
}

#[test]
fn criterion_2_quantile_oracle() {
    criterion(2, "quantile construction oracle", Some(Duration::from_secs(10)), || {
        let mut rng = seed::rng(2, "acceptance/quantiles");
        for case in 0..100 {
            let n_random = rng.gen_range(1..=160);
            let n_zeros = rng.gen_range(0..=40);
            let mut deltas: Vec<i64> =
                (0..n_random).map(|_| rng.gen_range(-400..=400)).collect();
            deltas.extend(std::iter::repeat(0).take(n_zeros));
            let q = rng.gen_range(2..=12);

            match (build_bucket_scheme(&deltas, q, SchemeLevel::Content), oracle_intervals(&deltas, q)) {
                (Ok(scheme), Some(expect)) => {
                    assert_eq!(
                        scheme.intervals(),
                        expect.as_slice(),
                        "case {case}: q={q}, deltas={deltas:?}"
                    );
                }
                (Err(Error::TooManyQuantiles { .. }), None) => {}
                (got, want) => panic!(
                    "case {case}: q={q} disagreement: impl {got:?} vs oracle {want:?}"
                ),
            }
        }
    });
}

fn tiny_corpus(gen_seed: u64) -> (Encoder, Vec<EncodedInstance>) {
    let synth = SynthConfig {
        n_domains: 1,
        claims_per_domain: 4,
        evidence_per_claim: 2,
        rule: LabelRule::TimeRule,
        vocab_size: 12,
        claim_len: 3,
        evidence_len: 3,
        max_abs_delta: 20,
    };
    let (instances, _) = generate_synthetic(&synth, gen_seed);
    let encoder = Encoder::fit(
        &instances,
        shipped_document_scheme().clone(),
        shipped_content_scheme().clone(),
    )
    .unwrap();
    let encoded = encoder.encode_all(&instances).unwrap();
    (encoder, encoded)
}

fn tiny_config(encoder: &Encoder, mode: Mode) -> (ModelConfig, ParamSet<f64>) {
    let mut cfg = ModelConfig::for_mode(mode);
    cfg.d1 = 8;
    cfg.hidden = 4;
    cfg.dt = 8;
    cfg.dropout = 0.0;
    cfg.conv_filters = 2;
    cfg.conv_kernel = 2;
    cfg.evidence_hidden = 4;
    cfg.label_hidden1 = 8;
    cfg.label_hidden2 = 4;
    cfg.offset_window = 3;
    cfg.validate().unwrap();
    let params = ParamSet::<f64>::init(
        &cfg,
        encoder.vocab.len(),
        encoder.doc_scheme.num_buckets(),
        encoder.con_scheme.num_buckets(),
        encoder.labels.n_labels(),
        9,
    );
    (cfg, params)
}

#[test]
fn criterion_3_gradient_check_every_mode() {
    criterion(3, "finite-difference gradient check", Some(Duration::from_secs(60)), || {
        let (encoder, encoded) = tiny_corpus(5);
        let batch = &encoded[..2];
        for mode in [Mode::Base, Mode::DlLoc, Mode::ClLoc, Mode::DlGlob, Mode::ClGlob, Mode::DlclGlob] {
            let (mut cfg, params) = tiny_config(&encoder, mode);
            // Non-degenerate mixing weights so every fusion path carries
            // gradient instead of short-circuiting to the base model.
            match mode {
                Mode::DlGlob | Mode::ClGlob => cfg.alpha = 0.3,
                Mode::DlclGlob => {
                    cfg.alpha = 0.3;
                    cfg.beta = 0.3;
                }
                Mode::ClLoc => cfg.gamma = 0.5,
                Mode::Base | Mode::DlLoc => {}
            }
            let (_, grads) = analytic_grads(&cfg, &params, batch).unwrap();
            let mut checked = 0usize;
            for (name, g) in grads.entries() {
                for ((r, c), &analytic) in g.indexed_iter() {
                    let plus = params.perturbed(&name, (r, c), FD_EPS);
                    let minus = params.perturbed(&name, (r, c), -FD_EPS);
                    let lp = mean_loss(&cfg, &plus, batch).unwrap();
                    let lm = mean_loss(&cfg, &minus, batch).unwrap();
                    let numeric = (lp - lm) / (2.0 * FD_EPS);
                    let tol = GRAD_RTOL * analytic.abs().max(numeric.abs()) + GRAD_ATOL;
                    assert!(
                        (analytic - numeric).abs() <= tol,
                        "{mode:?} {name}[{r},{c}]: analytic {analytic} vs numeric {numeric}"
                    );
                    checked += 1;
                }
            }
            assert!(checked > 1000, "{mode:?}: only {checked} parameters checked");
        }
    });
}

fn assert_bit_identical<F: Real>(a: &Prediction<F>, b: &Prediction<F>, ctx: &str) {
    // f32 embeds exactly into f64, so comparing the f64 images bitwise is
    // bit identity at either precision.
    let bits = |v: F| v.to_f64().to_bits();
    assert_eq!(a.predicted, b.predicted, "{ctx}: predicted");
    assert_eq!(a.zero_evidence, b.zero_evidence, "{ctx}: zero_evidence flag");
    assert_eq!(a.loss.map(bits), b.loss.map(bits), "{ctx}: loss");
    let pa: Vec<u64> = a.probs.iter().map(|&v| bits(v)).collect();
    let pb: Vec<u64> = b.probs.iter().map(|&v| bits(v)).collect();
    assert_eq!(pa, pb, "{ctx}: probs");
    let ea: Vec<u64> = a.evidence_scores.iter().map(|&v| bits(v)).collect();
    let eb: Vec<u64> = b.evidence_scores.iter().map(|&v| bits(v)).collect();
    assert_eq!(ea, eb, "{ctx}: evidence scores");
    let qa: Vec<Vec<u64>> =
        a.label_scores.iter().map(|q| q.iter().map(|&v| bits(v)).collect()).collect();
    let qb: Vec<Vec<u64>> =
        b.label_scores.iter().map(|q| q.iter().map(|&v| bits(v)).collect()).collect();
    assert_eq!(qa, qb, "{ctx}: label scores");
}

fn check_degenerate<F: Real>(encoder: &Encoder, encoded: &[EncodedInstance]) {
    let (base_cfg, base64) = tiny_config(encoder, Mode::Base);
    let base_params = base64.cast::<F>();
    let degenerate = [
        (Mode::DlGlob, 1.0, 0.0, 1.0),
        (Mode::ClGlob, 1.0, 0.0, 1.0),
        (Mode::DlclGlob, 1.0, 0.0, 1.0),
        (Mode::ClLoc, 1.0, 0.0, 1.0),
    ];
    for (mode, alpha, beta, gamma) in degenerate {
        let (mut cfg, p64) = tiny_config(encoder, mode);
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.gamma = gamma;
        let params = p64.cast::<F>();
        for inst in encoded {
            let a = predict(&base_cfg, &base_params, inst).unwrap();
            let b = predict(&cfg, &params, inst).unwrap();
            assert_bit_identical(&a, &b, &format!("{mode:?} vs base, {}", inst.claim_id));
        }
    }
}

#[test]
fn criterion_4_degenerate_fusion_equivalence() {
    criterion(4, "degenerate fusion bit-identity", None, || {
        let (encoder, encoded) = tiny_corpus(6);
        check_degenerate::<f64>(&encoder, &encoded);
        check_degenerate::<f32>(&encoder, &encoded);
    });
}

struct Fixture {
    base_cfg: ModelConfig,
    dl_cfg: ModelConfig,
    time_test: Vec<EncodedInstance>,
    base_time: TrainRun,
    dl_time: TrainRun,
    n_time_instances: usize,
    base_time_acc: f64,
    dl_time_acc: f64,
    majority_acc: f64,
    base_text_acc: f64,
    dl_text_acc: f64,
    build: Duration,
}

fn desk_model(mode: Mode) -> ModelConfig {
    let mut cfg = ModelConfig {
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
    };
    if mode == Mode::DlGlob {
        // Balanced fusion: at desk scale the sweep example finds even
        // text/time mixing best, and it leaves the text pathway strong
        // enough to learn corpora where time carries no signal.
        cfg.alpha = 0.7;
    }
    cfg
}

fn desk_train() -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        lr: 1e-2,
        scheduler: Schedule::None,
        // Light decay keeps the base model from memorizing random text,
        // so its test accuracy tracks the majority prior instead of
        // wandering with overfit noise.
        weight_decay: 1e-4,
        epochs_pretrain: 50,
        seed: 1,
        ..TrainConfig::default()
    }
}

/// Accuracy of each domain's best checkpoint on that domain's test slice.
fn best_accuracy(run: &TrainRun, test: &[EncodedInstance]) -> f64 {
    let mut correct = 0usize;
    for (domain, ckpt) in &run.best {
        let params = ckpt.params_as::<f32>().unwrap();
        for inst in test.iter().filter(|i| &i.domain == domain) {
            if predict(&ckpt.model, &params, inst).unwrap().predicted == inst.label_id {
                correct += 1;
            }
        }
    }
    correct as f64 / test.len() as f64
}

/// Test accuracy of always predicting each domain's most frequent
/// training label.
fn majority_accuracy(train: &[EncodedInstance], test: &[EncodedInstance]) -> f64 {
    let mut counts: BTreeMap<&str, BTreeMap<usize, usize>> = BTreeMap::new();
    for inst in train {
        *counts.entry(&inst.domain).or_default().entry(inst.label_id).or_default() += 1;
    }
    let majors: BTreeMap<&str, usize> = counts
        .iter()
        .map(|(&d, by_label)| {
            let (&label, _) = by_label.iter().max_by_key(|(_, &n)| n).unwrap();
            (d, label)
        })
        .collect();
    let hits = test.iter().filter(|i| majors[i.domain.as_str()] == i.label_id).count();
    hits as f64 / test.len() as f64
}

fn encode_splits(
    rule: LabelRule,
    gen_seed: u64,
) -> (Encoder, Vec<EncodedInstance>, Vec<EncodedInstance>, Vec<EncodedInstance>, usize) {
    let synth = SynthConfig {
        n_domains: 2,
        claims_per_domain: 250,
        rule,
        ..SynthConfig::default()
    };
    let (instances, _) = generate_synthetic(&synth, gen_seed);
    let total = instances.len();
    let (train, val, test) = stratified_split(instances, (0.7, 0.15, 0.15), 0).unwrap();
    let encoder = Encoder::fit(
        &train,
        shipped_document_scheme().clone(),
        shipped_content_scheme().clone(),
    )
    .unwrap();
    let train_enc = encoder.encode_all(&train).unwrap();
    let val_enc = encoder.encode_all(&val).unwrap();
    let test_enc = encoder.encode_all(&test).unwrap();
    (encoder, train_enc, val_enc, test_enc, total)
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let start = Instant::now();
        let base_cfg = desk_model(Mode::Base);
        let dl_cfg = desk_model(Mode::DlGlob);
        let cfg = desk_train();

        let (encoder, train_enc, val_enc, test_enc, n_time) =
            encode_splits(LabelRule::TimeRule, 17);
        let base_time = pretrain::<f32>(&base_cfg, &cfg, &encoder, &train_enc, &val_enc).unwrap();
        let dl_time = pretrain::<f32>(&dl_cfg, &cfg, &encoder, &train_enc, &val_enc).unwrap();
        let base_time_acc = best_accuracy(&base_time, &test_enc);
        let dl_time_acc = best_accuracy(&dl_time, &test_enc);
        let majority_acc = majority_accuracy(&train_enc, &test_enc);

        let (encoder, train_enc, val_enc, text_test, _) =
            encode_splits(LabelRule::TextRule, 18);
        let base_text = pretrain::<f32>(&base_cfg, &cfg, &encoder, &train_enc, &val_enc).unwrap();
        let dl_text = pretrain::<f32>(&dl_cfg, &cfg, &encoder, &train_enc, &val_enc).unwrap();
        let base_text_acc = best_accuracy(&base_text, &text_test);
        let dl_text_acc = best_accuracy(&dl_text, &text_test);

        Fixture {
            base_cfg,
            dl_cfg,
            time_test: test_enc,
            base_time,
            dl_time,
            n_time_instances: n_time,
            base_time_acc,
            dl_time_acc,
            majority_acc,
            base_text_acc,
            dl_text_acc,
            build: start.elapsed(),
        }
    })
}

#[test]
fn criterion_5_learning_sanity() {
    let fx = fixture();
    criterion(5, "learning sanity", None, || {
        assert!(
            fx.build <= Duration::from_secs(600),
            "training fixture took {:?}, budget 600s",
            fx.build
        );
        assert!(fx.n_time_instances >= 500, "corpus has {} instances", fx.n_time_instances);
        println!(
            "  time rule: DL_glob {:.1}%, base {:.1}%, majority {:.1}%; \
             text rule: DL_glob {:.1}%, base {:.1}% (trained in {:.1?})",
            100.0 * fx.dl_time_acc,
            100.0 * fx.base_time_acc,
            100.0 * fx.majority_acc,
            100.0 * fx.dl_text_acc,
            100.0 * fx.base_text_acc,
            fx.build
        );
        assert!(
            fx.dl_time_acc >= DL_MIN_ACCURACY,
            "DL_glob reached only {:.3} on the time rule",
            fx.dl_time_acc
        );
        assert!(
            (fx.base_time_acc - fx.majority_acc).abs() <= BASE_MAJORITY_SLACK,
            "base {:.3} strays from majority {:.3}",
            fx.base_time_acc,
            fx.majority_acc
        );
        assert!(
            (fx.base_text_acc - fx.dl_text_acc).abs() <= TEXT_RULE_GAP,
            "text rule gap: base {:.3} vs DL_glob {:.3}",
            fx.base_text_acc,
            fx.dl_text_acc
        );
    });
}

/// Independent F1 oracle. Micro F1 pools the confusion over every label,
/// which for single-label classification collapses to plain accuracy; macro
/// F1 is the unweighted mean over the requested labels only.
fn oracle_f1(preds: &[usize], golds: &[usize], labels: &[usize]) -> (f64, f64) {
    let correct = preds.iter().zip(golds).filter(|&(p, g)| p == g).count();
    let micro = correct as f64 / preds.len() as f64;
    let mut macro_sum = 0.0;
    for &l in labels {
        let tp = preds.iter().zip(golds).filter(|&(&p, &g)| p == l && g == l).count() as f64;
        let fp = preds.iter().zip(golds).filter(|&(&p, &g)| p == l && g != l).count() as f64;
        let fn_ = preds.iter().zip(golds).filter(|&(&p, &g)| p != l && g == l).count() as f64;
        let denom = 2.0 * tp + fp + fn_;
        macro_sum += if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    (micro, macro_sum / labels.len() as f64)
}

fn permutations(n: usize) -> Vec<Vec<f64>> {
    fn build(rest: &mut Vec<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if rest.is_empty() {
            out.push(acc.iter().map(|&v| v as f64).collect());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            acc.push(v);
            build(rest, acc, out);
            acc.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    build(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    out
}

#[test]
fn criterion_6_metric_oracles() {
    criterion(6, "metric oracles", Some(Duration::from_secs(10)), || {
        let mut rng = seed::rng(6, "acceptance/metrics");
        for case in 0..100 {
            let n_labels = rng.gen_range(2..=6);
            let len = rng.gen_range(1..=50);
            let preds: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n_labels)).collect();
            let golds: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n_labels)).collect();
            // Sometimes score against a subset of the label space, the way
            // per-domain macro F1 does.
            let labels: Vec<usize> = if rng.gen_bool(0.5) {
                (0..n_labels).collect()
            } else {
                (0..n_labels).filter(|_| rng.gen_bool(0.7)).collect()
            };
            if labels.is_empty() {
                continue;
            }
            let (micro, macro_) = micro_macro_f1(&preds, &golds, &labels).unwrap();
            let (want_micro, want_macro) = oracle_f1(&preds, &golds, &labels);
            assert!((micro - want_micro).abs() <= METRIC_TOL, "case {case} micro");
            assert!((macro_ - want_macro).abs() <= METRIC_TOL, "case {case} macro");
        }

        // Spearman against the closed form for distinct ranks, exhaustively
        // for every pair of permutations up to n = 6.
        for n in 2..=6usize {
            let perms = permutations(n);
            let denom = (n * (n * n - 1)) as f64;
            for a in &perms {
                for b in &perms {
                    let d2: f64 =
                        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    let want = 1.0 - 6.0 * d2 / denom;
                    let got = spearman(a, b).unwrap();
                    assert!(
                        (got - want).abs() <= METRIC_TOL,
                        "n={n}: {a:?} vs {b:?}: {got} != {want}"
                    );
                }
            }
        }
    });
}

#[test]
fn criterion_7_integrated_gradients() {
    criterion(7, "integrated-gradients completeness", Some(Duration::from_secs(120)), || {
        // Linear map: attribution through the library's own Riemann scales
        // must equal w_i * x_i at any step count.
        let w = [0.7, -1.3, 0.2, 2.4, -0.6];
        let x = [1.5, -0.4, 0.0, 0.9, 2.2];
        for m in [20usize, 300] {
            let mut acc = [0.0f64; 5];
            for s in riemann_scales(m) {
                let mut g = Graph::<f64>::new();
                let wrow = g.constant(Array2::from_shape_vec((1, 5), w.to_vec()).unwrap());
                let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
                let xcol = g.leaf(Array2::from_shape_vec((5, 1), scaled).unwrap(), true);
                let y = g.matmul(wrow, xcol);
                g.backward(y).unwrap();
                let grad = g.grad(xcol).unwrap();
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += grad[(i, 0)] / m as f64;
                }
            }
            for i in 0..5 {
                let ig = x[i] * acc[i];
                assert!(
                    (ig - w[i] * x[i]).abs() <= IG_LINEAR_TOL,
                    "m={m}, weight {i}: {ig} vs {}",
                    w[i] * x[i]
                );
            }
        }

        // Completeness on trained-model instances: the signed block sums
        // must reconstruct F(x) - F(baseline) to within 1%. The probe model
        // is trained to solid but not razor-edge accuracy; a fully
        // saturated net puts a near-step probability transition on the
        // integration path, which no fixed-step quadrature bounds.
        let synth = SynthConfig {
            n_domains: 1,
            claims_per_domain: 140,
            rule: LabelRule::TimeRule,
            ..SynthConfig::default()
        };
        let (instances, _) = generate_synthetic(&synth, 21);
        let (train_set, val_set, test_set) =
            stratified_split(instances, (0.7, 0.15, 0.15), 0).unwrap();
        let encoder = Encoder::fit(
            &train_set,
            shipped_document_scheme().clone(),
            shipped_content_scheme().clone(),
        )
        .unwrap();
        let train_enc = encoder.encode_all(&train_set).unwrap();
        let val_enc = encoder.encode_all(&val_set).unwrap();
        let test_enc = encoder.encode_all(&test_set).unwrap();
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
            epochs_pretrain: 25,
            seed: 6,
            ..TrainConfig::default()
        };
        let run = pretrain::<f64>(&model, &cfg, &encoder, &train_enc, &val_enc).unwrap();
        let params = run.best["d0"].params_as::<f64>().unwrap();

        let mut rng = seed::rng(7, "acceptance/ig");
        let mut picks: Vec<usize> = (0..test_enc.len()).collect();
        for i in (1..picks.len()).rev() {
            picks.swap(i, rng.gen_range(0..=i));
        }
        assert!(picks.len() >= 20, "probe test split has {} instances", picks.len());
        for &idx in picks.iter().take(20) {
            let inst = &test_enc[idx];
            let report =
                integrated_gradients(&model, &params, inst, IgBaseline::Zero, IG_STEPS)
                    .unwrap();
            let delta = (report.f_input - report.f_baseline).abs();
            assert!(
                report.residual <= IG_RESIDUAL_FRAC * delta,
                "{}: residual {} vs 1% of {delta}",
                inst.claim_id,
                report.residual
            );
        }
    });
}

#[test]
fn criterion_8_tagger_fixture() {
    criterion(8, "tagger fixture", Some(Duration::from_secs(1)), || {
        let fixture = include_str!("../fixtures/expressions.tsv");
        let mut checked = 0usize;
        let mut surfaces: Vec<String> = Vec::new();
        for line in fixture.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let anchor: chronofact::CalendarDate = cols.next().unwrap().parse().unwrap();
            let surface = cols.next().unwrap();
            let want: chronofact::CalendarDate = cols.next().unwrap().parse().unwrap();
            assert_eq!(
                chronofact::tagger::normalize_expression(surface, anchor),
                Some(want),
                "{surface} @ {anchor}"
            );
            surfaces.push(surface.to_lowercase());
            checked += 1;
        }
        assert!(checked >= 60, "only {checked} fixture rows");
        // Every supported expression class is represented.
        let classes: [(&str, fn(&str) -> bool); 6] = [
            ("explicit", |s| s.contains("20") && (s.contains('-') || s.contains('/') || s.contains(','))),
            ("deictic", |s| ["today", "tomorrow", "yesterday"].contains(&s)),
            ("offset", |s| s.ends_with("ago") || s.starts_with("in ")),
            ("weekday", |s| s.contains("monday") || s.contains("friday") || s.contains("tuesday")),
            ("month/year", |s| s == "2012" || s.contains("march 2018") || s.contains("next january")),
            ("holiday", |s| s.contains("christmas") || s.contains("halloween")),
        ];
        for (class, matcher) in classes {
            assert!(surfaces.iter().any(|s| matcher(s)), "no {class} rows in fixture");
        }
    });
}

#[test]
fn criterion_9_ranking_impact_analysis() {
    let fx = fixture();
    criterion(9, "ranking-impact analysis", Some(Duration::from_secs(120)), || {
        let base_params = fx.base_time.last.params_as::<f32>().unwrap();
        let dl_params = fx.dl_time.last.params_as::<f32>().unwrap();
        let cmp = compare_rankings(
            (&fx.base_cfg, &base_params),
            (&fx.dl_cfg, &dl_params),
            &fx.time_test,
            RankBy::Relevance,
        )
        .unwrap();
        // The r_s distribution is complete: every instance is either
        // compared or accounted for, and the histogram re-partitions it.
        assert_eq!(cmp.r_values.len() + cmp.skipped, fx.time_test.len());
        assert!(cmp.r_values.iter().all(|r| (-1.0..=1.0).contains(r)));
        let hist = cmp.histogram(10);
        assert_eq!(hist.iter().map(|(_, c)| c).sum::<usize>(), cmp.r_values.len());
        assert!(cmp.mean_abs_r <= 1.0);

        // The trained-model correlation report runs end to end.
        let corr = chronofact::eval::bucket_label_correlation(
            &fx.dl_cfg,
            &dl_params,
            &fx.time_test,
            300,
            3,
        )
        .unwrap();
        assert!(corr.n_within > 0 && corr.n_across > 0);

        // Monte-Carlo null: the same pairing machinery over random scores
        // must show no bucket effect.
        let mut rng = seed::rng(9, "acceptance/null");
        let docs: Vec<ScoredDoc> = (0..400)
            .map(|_| ScoredDoc {
                domain: "d0".into(),
                bucket: rng.gen_range(0..8),
                q: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let null = bucket_score_correlation(&docs, 600, 5).unwrap();
        assert!(null.n_within >= 200, "{} within-bucket pairs", null.n_within);
        assert!(null.n_across >= 200, "{} across-bucket pairs", null.n_across);
        assert!(
            null.within_mean.abs() < NULL_CORR_BOUND,
            "null within-bucket mean {}",
            null.within_mean
        );
        assert!(
            null.across_mean.abs() < NULL_CORR_BOUND,
            "null across-bucket mean {}",
            null.across_mean
        );
    });
}
