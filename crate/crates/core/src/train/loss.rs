use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

pub const DEFAULT_EDGE_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[derive(Default)]
pub enum Loss {
    #[default]
    Mae,
    /// MAE plus `lambda` times the MAE of horizontal and vertical forward differences.
    Epl { lambda: f64 },
}

impl Loss {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Loss::Epl { lambda } if !(lambda >= 0.0) => Err(Error::Config(format!(
                "edge weight must be >= 0, got {lambda}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn value<T: Real>(&self, pred: &Grid<T>, target: &Grid<T>) -> Result<f64> {
        Ok(self.value_and_grad(pred, target)?.0)
    }

    /// Loss value and its (sub)gradient with respect to `pred`.
    pub fn value_and_grad<T: Real>(
        &self,
        pred: &Grid<T>,
        target: &Grid<T>,
    ) -> Result<(f64, Grid<T>)> {
        pred.ensure_same_dims(target)?;
        let (value, grad) = mae_grad(pred, target);
        match *self {
            Loss::Mae => Ok((value, grad)),
            Loss::Epl { lambda } => {
                let (h, hg) = diff_mae_grad(pred, target, 0, 1);
                let (v, vg) = diff_mae_grad(pred, target, 1, 0);
                let total = value + lambda * (h + v);
                let grad = Grid::from_fn(pred.width, pred.height, |r, c| {
                    let i = r * pred.width + c;
                    grad.data[i] + T::of(lambda * (hg[i] + vg[i]))
                });
                Ok((total, grad))
            }
        }
    }
}

#[inline]
fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn mae_grad<T: Real>(pred: &Grid<T>, target: &Grid<T>) -> (f64, Grid<T>) {
    let n = pred.data.len() as f64;
    let mut sum = 0.0;
    let grad = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| {
            let d = p.to_f64c() - t.to_f64c();
            sum += d.abs();
            T::of(sign(d) / n)
        })
        .collect();
    (
        sum / n,
        Grid {
            width: pred.width,
            height: pred.height,
            data: grad,
        },
    )
}

/// MAE between forward differences along (dr, dc) and its gradient (f64).
fn diff_mae_grad<T: Real>(
    pred: &Grid<T>,
    target: &Grid<T>,
    dr: usize,
    dc: usize,
) -> (f64, Vec<f64>) {
    let (w, h) = pred.dims();
    let mut grad = vec![0.0; w * h];
    if w <= dc || h <= dr {
        return (0.0, grad);
    }
    let count = ((w - dc) * (h - dr)) as f64;
    let mut sum = 0.0;
    for r in 0..h - dr {
        for c in 0..w - dc {
            let (i, j) = (r * w + c, (r + dr) * w + c + dc);
            let dp = pred.data[j].to_f64c() - pred.data[i].to_f64c();
            let dt = target.data[j].to_f64c() - target.data[i].to_f64c();
            let d = dp - dt;
            sum += d.abs();
            let s = sign(d) / count;
            grad[j] += s;
            grad[i] -= s;
        }
    }
    (sum / count, grad)
}
