use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelParams;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, kept in f64 regardless of the
/// parameter precision.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new<T: Real>(params: &ModelParams<T>) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors
            .iter()
            .map(|t| vec![0.0; t.data.len()])
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update. The gradient is checked for finiteness
/// before anything is modified.
pub fn adam_step<T: Real>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState,
    lr: f64,
    hp: &AdamParams,
) -> Result<()> {
    if grads.tensors.len() != params.tensors.len() || state.m.len() != params.tensors.len() {
        return Err(Error::Shape(
            "optimizer state does not match parameters".into(),
        ));
    }
    for (p, g) in params.tensors.iter().zip(&grads.tensors) {
        if p.data.len() != g.data.len() {
            return Err(Error::Shape(format!(
                "gradient for {} has wrong length",
                p.name
            )));
        }
        if g.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                param: p.name.clone(),
            });
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hp.beta1.powi(t);
    let c2 = 1.0 - hp.beta2.powi(t);
    for (k, (p, g)) in params.tensors.iter_mut().zip(&grads.tensors).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.data.len() {
            let gi = g.data[i].to_f64c();
            m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * gi;
            v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * gi * gi;
            let step = lr * (m[i] / c1) / ((v[i] / c2).sqrt() + hp.eps);
            p.data[i] = T::of(p.data[i].to_f64c() - step);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ParamSpec, ParamTensor};

    fn scalar(v: f64) -> ModelParams<f64> {
        ModelParams {
            tensors: vec![ParamTensor {
                name: "w".into(),
                shape: vec![1],
                data: vec![v],
            }],
        }
    }

    #[test]
    fn first_step_is_signed_lr() {
        for g in [0.3, -7.0, 1e3] {
            let mut p = scalar(1.0);
            let mut s = AdamState::new(&p);
            adam_step(&mut p, &scalar(g), &mut s, 1e-3, &AdamParams::default()).unwrap();
            assert!((p.tensors[0].data[0] - (1.0 - 1e-3 * g.signum())).abs() < 1e-9);
        }
    }

    #[test]
    fn two_constant_steps() {
        let mut p = scalar(0.0);
        let mut s = AdamState::new(&p);
        for _ in 0..2 {
            adam_step(&mut p, &scalar(1.0), &mut s, 0.1, &AdamParams::default()).unwrap();
        }
        assert!((p.tensors[0].data[0] + 0.2).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = scalar(0.25);
        let mut s = AdamState::new(&p);
        for _ in 0..5 {
            adam_step(&mut p, &scalar(0.0), &mut s, 0.1, &AdamParams::default()).unwrap();
        }
        assert_eq!(p.tensors[0].data[0], 0.25);
    }

    #[test]
    fn gradient_scale_invariance_at_first_step() {
        let (mut a, mut b) = (scalar(0.0), scalar(0.0));
        let (mut sa, mut sb) = (AdamState::new(&a), AdamState::new(&b));
        let lr = 0.01;
        adam_step(&mut a, &scalar(1.5), &mut sa, lr, &AdamParams::default()).unwrap();
        adam_step(&mut b, &scalar(15.0), &mut sb, lr, &AdamParams::default()).unwrap();
        assert!((a.tensors[0].data[0] - b.tensors[0].data[0]).abs() < lr * 1e-6);
    }

    #[test]
    fn non_finite_gradient_named() {
        let mut p = ModelParams::<f64>::zeros(&[
            ParamSpec {
                name: "a".into(),
                shape: vec![2],
            },
            ParamSpec {
                name: "b".into(),
                shape: vec![1],
            },
        ]);
        let mut g = p.clone();
        g.tensors[1].data[0] = f64::NAN;
        let mut s = AdamState::new(&p);
        let err = adam_step(&mut p, &g, &mut s, 0.1, &AdamParams::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { ref param } if param == "b"));
        assert_eq!(s.t, 0);
    }
}
