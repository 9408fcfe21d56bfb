//! First-order optimizers, learning-rate schedules, and global-norm
//! gradient clipping. Written against the parameter container directly so
//! optimizer state serializes alongside checkpoints.

use std::str::FromStr;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParamSet, Real};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimKind {
    #[default]
    #[serde(rename = "adam")]
    Adam,
    #[serde(rename = "rmsprop")]
    Rmsprop,
}

impl FromStr for OptimKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimKind::Adam),
            "rmsprop" => Ok(OptimKind::Rmsprop),
            other => Err(Error::Config(format!(
                "unknown optimizer {other:?}; expected adam or rmsprop"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    #[serde(rename = "none")]
    None,
    #[default]
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "linear_warmup")]
    LinearWarmup,
}

impl FromStr for Schedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Schedule::None),
            "linear" => Ok(Schedule::Linear),
            "linear_warmup" => Ok(Schedule::LinearWarmup),
            other => Err(Error::Config(format!(
                "unknown scheduler {other:?}; expected none, linear, or linear_warmup"
            ))),
        }
    }
}

/// Learning rate for 0-based `step` out of `total` planned steps.
/// Linear decays to 0 at the end of the plan; the warmup variant ramps
/// over the first tenth and then decays the same way.
pub fn lr_at(schedule: Schedule, base: f64, step: u64, total: u64) -> f64 {
    let total = total.max(1);
    match schedule {
        Schedule::None => base,
        Schedule::Linear => base * (1.0 - step.min(total) as f64 / total as f64),
        Schedule::LinearWarmup => {
            let warm = ((total as f64 * 0.1).ceil() as u64).max(1);
            if step < warm {
                base * (step + 1) as f64 / warm as f64
            } else if total > warm {
                base * (1.0 - (step - warm).min(total - warm) as f64 / (total - warm) as f64)
            } else {
                base
            }
        }
    }
}

/// Scales all gradients so the global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm<F: Real>(grads: &mut ParamSet<F>, max_norm: f64) -> f64 {
    let mut sq = 0.0;
    grads.for_each(&mut |_, g| {
        sq += g.iter().map(|x| x.to_f64() * x.to_f64()).sum::<f64>();
    });
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let factor = F::from_f64(max_norm / norm);
        grads.for_each_mut(&mut |_, g| g.mapv_inplace(|x| x * factor));
    }
    norm
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const RMS_RHO: f64 = 0.9;
const RMS_EPS: f64 = 1e-8;

/// Optimizer with per-tensor moment buffers in parameter traversal order.
#[derive(Debug, Clone)]
pub enum Optimizer<F: Real> {
    Adam {
        step_count: u64,
        m: Vec<Array2<F>>,
        v: Vec<Array2<F>>,
    },
    Rmsprop {
        step_count: u64,
        v: Vec<Array2<F>>,
    },
}

fn zeros_like<F: Real>(params: &ParamSet<F>) -> Vec<Array2<F>> {
    params.entries().into_iter().map(|(_, a)| Array2::zeros(a.raw_dim())).collect()
}

impl<F: Real> Optimizer<F> {
    pub fn new(kind: OptimKind, params: &ParamSet<F>) -> Self {
        match kind {
            OptimKind::Adam => Optimizer::Adam {
                step_count: 0,
                m: zeros_like(params),
                v: zeros_like(params),
            },
            OptimKind::Rmsprop => Optimizer::Rmsprop { step_count: 0, v: zeros_like(params) },
        }
    }

    pub fn kind(&self) -> OptimKind {
        match self {
            Optimizer::Adam { .. } => OptimKind::Adam,
            Optimizer::Rmsprop { .. } => OptimKind::Rmsprop,
        }
    }

    pub fn step_count(&self) -> u64 {
        match self {
            Optimizer::Adam { step_count, .. } | Optimizer::Rmsprop { step_count, .. } => {
                *step_count
            }
        }
    }

    /// One update with learning rate `lr`. Gradients must be in the same
    /// traversal order as `params` (they always are when both come from
    /// the same parameter container).
    pub fn step(&mut self, params: &mut ParamSet<F>, grads: &ParamSet<F>, lr: f64) {
        let gs: Vec<&Array2<F>> = grads.entries().into_iter().map(|(_, g)| g).collect();
        let lr = F::from_f64(lr);
        match self {
            Optimizer::Adam { step_count, m, v } => {
                *step_count += 1;
                let b1 = F::from_f64(ADAM_BETA1);
                let b2 = F::from_f64(ADAM_BETA2);
                let one = F::one();
                let eps = F::from_f64(ADAM_EPS);
                let corr1 = F::from_f64(1.0 - ADAM_BETA1.powi(*step_count as i32));
                let corr2 = F::from_f64(1.0 - ADAM_BETA2.powi(*step_count as i32));
                let mut i = 0;
                params.for_each_mut(&mut |_, p| {
                    let g = gs[i];
                    Zip::from(&mut m[i]).and(g).for_each(|mi, &gi| {
                        *mi = b1 * *mi + (one - b1) * gi;
                    });
                    Zip::from(&mut v[i]).and(g).for_each(|vi, &gi| {
                        *vi = b2 * *vi + (one - b2) * gi * gi;
                    });
                    Zip::from(p).and(&m[i]).and(&v[i]).for_each(|pi, &mi, &vi| {
                        let m_hat = mi / corr1;
                        let v_hat = vi / corr2;
                        *pi = *pi - lr * m_hat / (v_hat.sqrt() + eps);
                    });
                    i += 1;
                });
            }
            Optimizer::Rmsprop { step_count, v } => {
                *step_count += 1;
                let rho = F::from_f64(RMS_RHO);
                let one = F::one();
                let eps = F::from_f64(RMS_EPS);
                let mut i = 0;
                params.for_each_mut(&mut |_, p| {
                    let g = gs[i];
                    Zip::from(&mut v[i]).and(g).for_each(|vi, &gi| {
                        *vi = rho * *vi + (one - rho) * gi * gi;
                    });
                    Zip::from(p).and(g).and(&v[i]).for_each(|pi, &gi, &vi| {
                        *pi = *pi - lr * gi / (vi.sqrt() + eps);
                    });
                    i += 1;
                });
            }
        }
    }

    pub fn to_state(&self) -> OptimizerState {
        let dump = |ts: &[Array2<F>]| {
            ts.iter()
                .map(|a| (a.shape().to_vec(), a.iter().map(|x| x.to_f64()).collect()))
                .collect()
        };
        match self {
            Optimizer::Adam { step_count, m, v } => OptimizerState {
                kind: OptimKind::Adam,
                step_count: *step_count,
                m: dump(m),
                v: dump(v),
            },
            Optimizer::Rmsprop { step_count, v } => OptimizerState {
                kind: OptimKind::Rmsprop,
                step_count: *step_count,
                m: Vec::new(),
                v: dump(v),
            },
        }
    }

    /// Restores moment buffers, validating shape against `params`.
    pub fn from_state(state: &OptimizerState, params: &ParamSet<F>) -> Result<Self> {
        let template = zeros_like(params);
        let load = |src: &[(Vec<usize>, Vec<f64>)], what: &str| -> Result<Vec<Array2<F>>> {
            if src.len() != template.len() {
                return Err(Error::Checkpoint(format!(
                    "optimizer {what} buffers: {} tensors, expected {}",
                    src.len(),
                    template.len()
                )));
            }
            src.iter()
                .zip(&template)
                .map(|((shape, data), t)| {
                    if shape.as_slice() != t.shape() {
                        return Err(Error::Checkpoint(format!(
                            "optimizer {what} buffer shape {shape:?}, expected {:?}",
                            t.shape()
                        )));
                    }
                    Ok(Array2::from_shape_vec(
                        (shape[0], shape[1]),
                        data.iter().map(|&x| F::from_f64(x)).collect(),
                    )
                    .expect("shape checked above"))
                })
                .collect()
        };
        match state.kind {
            OptimKind::Adam => Ok(Optimizer::Adam {
                step_count: state.step_count,
                m: load(&state.m, "first-moment")?,
                v: load(&state.v, "second-moment")?,
            }),
            OptimKind::Rmsprop => Ok(Optimizer::Rmsprop {
                step_count: state.step_count,
                v: load(&state.v, "second-moment")?,
            }),
        }
    }
}

/// Serialized optimizer moments, stored inside checkpoints so fine-tuning
/// continues from the pretrained trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: OptimKind,
    pub step_count: u64,
    pub m: Vec<(Vec<usize>, Vec<f64>)>,
    pub v: Vec<(Vec<usize>, Vec<f64>)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mode, ModelConfig};

    fn tiny_params() -> ParamSet<f64> {
        let mut cfg = ModelConfig::for_mode(Mode::Base);
        cfg.d1 = 3;
        cfg.hidden = 2;
        cfg.dt = 2;
        cfg.evidence_hidden = 2;
        cfg.label_hidden1 = 2;
        cfg.label_hidden2 = 2;
        ParamSet::init(&cfg, 5, 23, 24, 2, 3)
    }

    fn quadratic_grads(params: &ParamSet<f64>, target: f64) -> ParamSet<f64> {
        params.map_ref(|a| a.mapv(|x| 2.0 * (x - target)))
    }

    fn max_distance(params: &ParamSet<f64>, target: f64) -> f64 {
        let mut worst: f64 = 0.0;
        params.for_each(&mut |_, a| {
            for x in a.iter() {
                worst = worst.max((x - target).abs());
            }
        });
        worst
    }

    #[test]
    fn both_optimizers_descend_a_quadratic() {
        for kind in [OptimKind::Adam, OptimKind::Rmsprop] {
            let mut params = tiny_params();
            let mut opt = Optimizer::new(kind, &params);
            let before = max_distance(&params, 0.5);
            for _ in 0..600 {
                let grads = quadratic_grads(&params, 0.5);
                opt.step(&mut params, &grads, 0.01);
            }
            let after = max_distance(&params, 0.5);
            assert!(after < 0.02, "{kind:?}: {before} -> {after}");
        }
    }

    #[test]
    fn single_step_decreases_quadratic() {
        for kind in [OptimKind::Adam, OptimKind::Rmsprop] {
            let mut params = tiny_params();
            let loss =
                |p: &ParamSet<f64>| {
                    let mut s = 0.0;
                    p.for_each(&mut |_, a| s += a.iter().map(|x| (x - 0.5) * (x - 0.5)).sum::<f64>());
                    s
                };
            let before = loss(&params);
            let grads = quadratic_grads(&params, 0.5);
            let mut opt = Optimizer::new(kind, &params);
            opt.step(&mut params, &grads, 1e-3);
            assert!(loss(&params) < before, "{kind:?} step must descend");
        }
    }

    #[test]
    fn clipping_caps_global_norm() {
        let params = tiny_params();
        let mut grads = params.map_ref(|a| a.mapv(|_| 10.0));
        let before = clip_global_norm(&mut grads, 5.0);
        assert!(before > 5.0);
        let mut sq = 0.0;
        grads.for_each(&mut |_, g| sq += g.iter().map(|x| x * x).sum::<f64>());
        assert!((sq.sqrt() - 5.0).abs() < 1e-9);

        let mut small = params.map_ref(|a| a.mapv(|_| 1e-6));
        let norm = clip_global_norm(&mut small, 5.0);
        assert!(norm < 5.0);
        small.for_each(&mut |_, g| assert!(g.iter().all(|&x| x == 1e-6)));
    }

    #[test]
    fn schedules_follow_their_shapes() {
        assert_eq!(lr_at(Schedule::None, 0.1, 0, 100), 0.1);
        assert_eq!(lr_at(Schedule::None, 0.1, 99, 100), 0.1);
        assert_eq!(lr_at(Schedule::Linear, 0.1, 0, 100), 0.1);
        assert!((lr_at(Schedule::Linear, 0.1, 50, 100) - 0.05).abs() < 1e-12);
        assert!(lr_at(Schedule::Linear, 0.1, 100, 100).abs() < 1e-12);
        // Warmup ramps over the first tenth, then decays linearly.
        let w = lr_at(Schedule::LinearWarmup, 0.1, 0, 100);
        assert!((w - 0.01).abs() < 1e-12);
        assert!((lr_at(Schedule::LinearWarmup, 0.1, 9, 100) - 0.1).abs() < 1e-12);
        assert!(lr_at(Schedule::LinearWarmup, 0.1, 55, 100) < 0.1);
        assert!(lr_at(Schedule::LinearWarmup, 0.1, 100, 100).abs() < 1e-12);
    }

    #[test]
    fn optimizer_state_round_trips() {
        let mut params = tiny_params();
        let mut opt = Optimizer::new(OptimKind::Adam, &params);
        for _ in 0..3 {
            let grads = quadratic_grads(&params, 0.0);
            opt.step(&mut params, &grads, 0.01);
        }
        let state = opt.to_state();
        let restored: Optimizer<f64> = Optimizer::from_state(&state, &params).unwrap();
        assert_eq!(restored.step_count(), 3);

        // Continuing from restored state matches continuing the original.
        let mut a_params = params.clone();
        let mut b_params = params.clone();
        let mut a = opt;
        let mut b = restored;
        for _ in 0..3 {
            let ga = quadratic_grads(&a_params, 0.0);
            a.step(&mut a_params, &ga, 0.01);
            let gb = quadratic_grads(&b_params, 0.0);
            b.step(&mut b_params, &gb, 0.01);
        }
        for ((_, x), (_, y)) in a_params.entries().iter().zip(b_params.entries().iter()) {
            for (xa, yb) in x.iter().zip(y.iter()) {
                assert_eq!(xa, yb);
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("adam".parse::<OptimKind>().unwrap(), OptimKind::Adam);
        assert_eq!("RMSProp".parse::<OptimKind>().unwrap(), OptimKind::Rmsprop);
        assert!("sgd".parse::<OptimKind>().is_err());
        assert_eq!("linear_warmup".parse::<Schedule>().unwrap(), Schedule::LinearWarmup);
        assert!("cosine".parse::<Schedule>().is_err());
    }
}
