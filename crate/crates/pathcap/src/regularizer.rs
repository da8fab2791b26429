//! Basis-path regularization: the penalty term R(p), its per-weight
//! gradients, and the weight-decay baseline.
//!
//! R(p) = (lambda1/2) |p+|^2 + (lambda2/4) |log (p-)^2|^2 penalizes large
//! positive-basis values and negative-basis values far from 1.
//!
//! Per-weight gradients exploit the basis structure: a non-skeleton weight
//! sits on exactly one (positive) basis path, a skeleton weight on exactly
//! one negative basis path plus the positive paths it completes. The
//! skeleton part is off by default, matching the usual simplification of
//! dropping it during training; the `include_skeleton_grad` flag restores
//! the full gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::BasisPathValues;
use crate::network::{Matrix, Network};
use crate::pathspace::{is_skeleton, path_value, BasisPathSet};

/// Coefficients of the regularization terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegConfig {
    /// Positive-basis coefficient (lambda1).
    pub lambda1: f64,
    /// Negative-basis coefficient (lambda2).
    pub lambda2: f64,
    /// Evaluate the skeleton-weight gradient terms (default false).
    pub include_skeleton_grad: bool,
    /// Plain l2 weight-decay coefficient (baseline).
    pub weight_decay: f64,
}

impl Default for RegConfig {
    fn default() -> Self {
        RegConfig { lambda1: 0.0, lambda2: 0.0, include_skeleton_grad: false, weight_decay: 0.0 }
    }
}

impl RegConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("weight_decay", self.weight_decay)]
        {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{} must be finite and >= 0, got {}", name, v)));
            }
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.lambda1 > 0.0 || self.lambda2 > 0.0 || self.weight_decay > 0.0
    }
}

/// The lambda grid used for regularization-strength tuning:
/// {0.1, 0.2, 0.5} x 10^-alpha for alpha in 3..=6.
pub fn lambda_grid() -> Vec<f64> {
    let mut grid = Vec::new();
    for alpha in 3..=6 {
        for mantissa in [0.1, 0.2, 0.5] {
            grid.push(mantissa * 10f64.powi(-alpha));
        }
    }
    grid
}

/// R(p) = (lambda1/2) sum p_j^2 + (lambda2/4) sum (log p_i^2)^2.
pub fn reg_value(values: &BasisPathValues, cfg: &RegConfig) -> Result<f64> {
    let positive_term: f64 = values.positive.iter().map(|&v| v * v).sum();
    let mut negative_term = 0.0;
    if cfg.lambda2 != 0.0 {
        for (i, &v) in values.negative.iter().enumerate() {
            if v == 0.0 {
                return Err(Error::DegenerateSkeleton { index: i });
            }
            let log_sq = (v * v).ln();
            negative_term += log_sq * log_sq;
        }
    }
    Ok(cfg.lambda1 / 2.0 * positive_term + cfg.lambda2 / 4.0 * negative_term)
}

/// Per-weight gradient h(w) of the regularization term.
///
/// Non-skeleton weight w_j (owner path value p_j): h = lambda1 p_j^2 / w_j.
/// Skeleton weight w_i, only when `include_skeleton_grad`: the exact
/// gradient lambda2 log(p_i^2) / w_i from the negative-basis term, plus
/// lambda1 sum over the positive paths containing w_i of p_j^2 / w_i.
pub fn reg_gradient(net: &Network, basis: &BasisPathSet, cfg: &RegConfig) -> Result<Vec<Matrix>> {
    cfg.validate()?;
    let spec = net.spec();
    let mut grads: Vec<Matrix> = (0..spec.depth)
        .map(|l| {
            let (r, c) = spec.weight_shape(l);
            Matrix::zeros(r, c)
        })
        .collect();
    if cfg.lambda1 == 0.0 && cfg.lambda2 == 0.0 {
        return Ok(grads);
    }

    if cfg.lambda1 != 0.0 {
        for p in basis.positive() {
            let value = path_value(net, p);
            if value == 0.0 {
                continue; // every term p^2/w with p = 0 vanishes, and dead
                          // paths stay dead under the update
            }
            for c in p.weight_coords() {
                let skeleton = is_skeleton(spec, c);
                if skeleton && !cfg.include_skeleton_grad {
                    continue;
                }
                let w = net.weight(c.layer).get(c.row, c.col);
                if w == 0.0 {
                    return Err(Error::ZeroWeight { layer: c.layer, row: c.row, col: c.col });
                }
                let g = grads[c.layer].get(c.row, c.col);
                grads[c.layer].set(c.row, c.col, g + cfg.lambda1 * value * value / w);
            }
        }
    }

    if cfg.lambda2 != 0.0 && cfg.include_skeleton_grad {
        for (i, p) in basis.negative().iter().enumerate() {
            let value = path_value(net, p);
            if value == 0.0 {
                return Err(Error::DegenerateSkeleton { index: i });
            }
            let log_sq = (value * value).ln();
            for c in p.weight_coords() {
                let w = net.weight(c.layer).get(c.row, c.col);
                if w == 0.0 {
                    return Err(Error::ZeroWeight { layer: c.layer, row: c.row, col: c.col });
                }
                let g = grads[c.layer].get(c.row, c.col);
                grads[c.layer].set(c.row, c.col, g + cfg.lambda2 * log_sq / w);
            }
        }
    }

    Ok(grads)
}

/// Gradient of the weight-decay baseline: coefficient times each weight.
pub fn weight_decay_gradient(net: &Network, cfg: &RegConfig) -> Vec<Matrix> {
    net.weights().iter().map(|w| w.map(|v| cfg.weight_decay * v)).collect()
}
