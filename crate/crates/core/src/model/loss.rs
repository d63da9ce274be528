//! Reconstruction and Kirchhoff-consistency losses over batches of
//! row-major `rows × 6` windows in normalized units.
//!
//! The physics terms denormalize each reconstructed channel first
//! (`y = min + (x̂ + 1)·(max − min)/2`) and differentiate through that map.

use serde::{Deserialize, Serialize};

use crate::data::{NormalizationParams, CHANNELS};
use crate::error::{Error, Result};
use crate::nn::ScalarLoss;

const V: usize = 0;
const I: usize = 1;
const THETA: usize = 2;
const DELTA: usize = 3;
const P: usize = 4;
const Q: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    #[serde(rename = "L_data")]
    pub data: f64,
    #[serde(rename = "L_phy_P")]
    pub phy_p: f64,
    #[serde(rename = "L_phy_Q")]
    pub phy_q: f64,
    #[serde(rename = "L_total")]
    pub total: f64,
}

impl LossBreakdown {
    pub fn assemble(data: f64, phy_p: f64, phy_q: f64, weights: LossWeights) -> Self {
        Self {
            data,
            phy_p,
            phy_q,
            total: weights.alpha_d * data + weights.alpha_phy * (phy_p + phy_q),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.is_finite() && self.phy_p.is_finite() && self.phy_q.is_finite() && self.total.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha_d: f64,
    pub alpha_phy: f64,
}

fn check_rows(x_hat: &[f64]) -> Result<usize> {
    if x_hat.is_empty() || x_hat.len() % CHANNELS != 0 {
        return Err(Error::Dimension(format!(
            "{} values do not form rows of {CHANNELS} channels",
            x_hat.len()
        )));
    }
    Ok(x_hat.len() / CHANNELS)
}

/// Neumaier-compensated sum. Loss values feed finite-difference checks,
/// where the roundoff of a naive sum over thousands of terms is of the
/// same order as the difference being measured.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Mean squared error over every feature of every sample.
pub fn loss_data(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Dimension(format!(
            "input has {} values, reconstruction {}",
            x.len(),
            x_hat.len()
        )));
    }
    check_rows(x_hat)?;
    let sse = compensated_sum(x.iter().zip(x_hat).map(|(a, b)| (b - a) * (b - a)));
    Ok(sse / x.len() as f64)
}

#[inline]
fn physical(row: &[f64], norm: &NormalizationParams) -> [f64; CHANNELS] {
    std::array::from_fn(|k| norm.denormalize_value(k, row[k]))
}

/// Mean of `|P̂ − V̂·Î·cos(θ̂−δ̂)|²` in physical units.
pub fn loss_phy_p(x_hat: &[f64], norm: &NormalizationParams) -> Result<f64> {
    let rows = check_rows(x_hat)?;
    let sum = compensated_sum(x_hat.chunks_exact(CHANNELS).map(|row| {
        let y = physical(row, norm);
        let r = y[P] - y[V] * y[I] * (y[THETA] - y[DELTA]).cos();
        r * r
    }));
    Ok(sum / rows as f64)
}

/// Mean of `|Q̂ − V̂·Î·sin(θ̂−δ̂)|²` in physical units.
pub fn loss_phy_q(x_hat: &[f64], norm: &NormalizationParams) -> Result<f64> {
    let rows = check_rows(x_hat)?;
    let sum = compensated_sum(x_hat.chunks_exact(CHANNELS).map(|row| {
        let y = physical(row, norm);
        let r = y[Q] - y[V] * y[I] * (y[THETA] - y[DELTA]).sin();
        r * r
    }));
    Ok(sum / rows as f64)
}

pub fn loss_total(x: &[f64], x_hat: &[f64], weights: LossWeights, norm: &NormalizationParams) -> Result<LossBreakdown> {
    Ok(LossBreakdown::assemble(
        loss_data(x, x_hat)?,
        loss_phy_p(x_hat, norm)?,
        loss_phy_q(x_hat, norm)?,
        weights,
    ))
}

/// Loss over a reconstruction batch plus its gradient with respect to the
/// reconstruction.
pub trait BatchObjective {
    fn evaluate(&self, x: &[f64], x_hat: &[f64], norm: &NormalizationParams) -> Result<(LossBreakdown, Vec<f64>)>;
}

/// `α_d·L_data + α_phy·(L_phy_P + L_phy_Q)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsInformedObjective {
    pub weights: LossWeights,
}

impl BatchObjective for PhysicsInformedObjective {
    fn evaluate(&self, x: &[f64], x_hat: &[f64], norm: &NormalizationParams) -> Result<(LossBreakdown, Vec<f64>)> {
        let breakdown = loss_total(x, x_hat, self.weights, norm)?;
        let LossWeights { alpha_d, alpha_phy } = self.weights;
        let n = x.len() as f64;
        let mut grad: Vec<f64> = x
            .iter()
            .zip(x_hat)
            .map(|(a, b)| alpha_d * 2.0 * (b - a) / n)
            .collect();
        if alpha_phy != 0.0 {
            let rows = (x_hat.len() / CHANNELS) as f64;
            let s: [f64; CHANNELS] = std::array::from_fn(|k| norm.half_range(k));
            for (row, g) in x_hat.chunks_exact(CHANNELS).zip(grad.chunks_exact_mut(CHANNELS)) {
                let y = physical(row, norm);
                let ang = y[THETA] - y[DELTA];
                let (sin, cos) = ang.sin_cos();
                let vi = y[V] * y[I];
                let c = alpha_phy * 2.0 / rows;
                let rp = c * (y[P] - vi * cos);
                let rq = c * (y[Q] - vi * sin);
                // d/dy of rp·(P − VI·cos) and rq·(Q − VI·sin), then chain through y = min + (x̂+1)·s
                let d_v = -rp * y[I] * cos - rq * y[I] * sin;
                let d_i = -rp * y[V] * cos - rq * y[V] * sin;
                let d_ang = rp * vi * sin - rq * vi * cos;
                g[V] += d_v * s[V];
                g[I] += d_i * s[I];
                g[THETA] += d_ang * s[THETA];
                g[DELTA] -= d_ang * s[DELTA];
                g[P] += rp * s[P];
                g[Q] += rq * s[Q];
            }
        }
        Ok((breakdown, grad))
    }
}

/// Adapter exposing a [`BatchObjective`] against a fixed target as a
/// scalar loss on network outputs, for gradient checking.
pub struct ReconstructionLoss<'a, O> {
    pub objective: O,
    pub target: &'a [f64],
    pub norm: NormalizationParams,
}

impl<O: BatchObjective> ScalarLoss for ReconstructionLoss<'_, O> {
    fn evaluate(&self, output: &[f64], _batch: usize) -> Result<(f64, Vec<f64>)> {
        let (b, g) = self.objective.evaluate(self.target, output, &self.norm)?;
        Ok((b.total, g))
    }
}
