//! Loss terms: graph BCE, edge-count regression and correlation
//! regularization, as plain evaluations and as graph nodes.

use crate::error::{Error, Result};
use crate::nn::graph::{Graph, Var, P_CLAMP};
use crate::nn::matrix::Matrix;
use crate::nn::ForwardNodes;
use crate::semgen::CoeffTensor;
use crate::series::Series;
use crate::stats::{corr_features, GraphScores};

/// Mean binary cross-entropy over all entries, probabilities clamped to
/// `[1e-7, 1 − 1e-7]`.
pub fn bce_loss(graph: &GraphScores, labels: &[bool]) -> Result<f64> {
    if graph.values().len() != labels.len() {
        return Err(Error::shape(graph.values().len(), labels.len()));
    }
    let total: f64 = graph
        .values()
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / labels.len() as f64)
}

/// `(estimate − #non-zero entries)²`.
pub fn reg_loss(count_estimate: f64, coeffs: &CoeffTensor) -> f64 {
    (count_estimate - coeffs.edge_count() as f64).powi(2)
}

/// `1 / (|lcc| + β)` per entry.
pub fn cr_weights(abs_lcc: &[f64], beta: f64) -> Vec<f64> {
    abs_lcc.iter().map(|c| 1.0 / (c + beta)).collect()
}

/// `Σ (G / (|lcc| + β))^α` over all `(i, j, n)`.
pub fn cr_penalty(graph: &GraphScores, series: &Series, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::config("cr_alpha and cr_beta must be positive"));
    }
    let abs_lcc = corr_features(series, graph.max_lag())?;
    if abs_lcc.len() != graph.values().len() {
        return Err(Error::shape(graph.values().len(), abs_lcc.len()));
    }
    Ok(cr_penalty_from(graph.values(), &abs_lcc, alpha, beta))
}

pub fn cr_penalty_from(values: &[f64], abs_lcc: &[f64], alpha: f64, beta: f64) -> f64 {
    values
        .iter()
        .zip(abs_lcc)
        .map(|(g, c)| (g / (c + beta)).powf(alpha))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_reg: f64,
    pub lambda_cr: f64,
    pub cr_alpha: f64,
}

/// Targets for one batch, all `batch × V·V·N` except `counts` (`batch × 1`).
#[derive(Debug, Clone)]
pub struct BatchTargets {
    pub labels: Matrix,
    /// Zero weight drops an entry from the BCE (ignored diagonal).
    pub mask: Option<Matrix>,
    pub counts: Matrix,
    /// `1 / (|lcc| + β)`, zeroed on masked entries.
    pub cr_weights: Matrix,
}

#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    pub total: Var,
    pub bce: Var,
    pub reg: Option<Var>,
    pub cr: Option<Var>,
}

/// `bce + λ_reg · mean reg + λ_cr · mean cr / (V·V·N)`. Terms with zero
/// weight are not built.
pub fn total_loss(g: &mut Graph, nodes: &ForwardNodes, t: &BatchTargets, w: &LossWeights) -> LossNodes {
    let bce = g.bce(nodes.probs, t.labels.clone(), t.mask.clone());
    let mut total = bce;
    let mut reg = None;
    if w.lambda_reg > 0.0 {
        let count = nodes.count.expect("lambda_reg > 0 needs the count head");
        let target = g.constant(t.counts.clone());
        let diff = g.sub(count, target);
        let sq = g.square(diff);
        let term = g.mean(sq);
        let scaled = g.scale(term, w.lambda_reg);
        total = g.add(total, scaled);
        reg = Some(term);
    }
    let mut cr = None;
    if w.lambda_cr > 0.0 {
        // Mean over batch × entries equals mean cr_penalty / (V·V·N).
        let ratio = g.mul_const(nodes.probs, t.cr_weights.clone());
        let powed = g.powf(ratio, w.cr_alpha);
        let term = g.mean(powed);
        let scaled = g.scale(term, w.lambda_cr);
        total = g.add(total, scaled);
        cr = Some(term);
    }
    LossNodes { total, bce, reg, cr }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(values: Vec<f64>) -> GraphScores {
        let n = values.len();
        GraphScores::new(1, n, values).unwrap()
    }

    #[test]
    fn bce_examples() {
        let labels = [true, false, true, false];
        let exact = graph(vec![1.0, 0.0, 1.0, 0.0]);
        assert!(bce_loss(&exact, &labels).unwrap() < 1e-6);
        let half = graph(vec![0.5; 4]);
        assert!((bce_loss(&half, &labels).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let better = graph(vec![0.7, 0.5, 0.5, 0.5]);
        assert!(bce_loss(&better, &labels).unwrap() < bce_loss(&half, &labels).unwrap());
        assert!(bce_loss(&half, &labels[..3]).is_err());
    }

    #[test]
    fn reg_examples() {
        let mut c = CoeffTensor::zeros(2, 1);
        c.set(0, 1, 1, 0.4, 0);
        c.set(1, 0, 1, -0.3, 0);
        c.set(1, 1, 1, 0.2, 0);
        assert_eq!(reg_loss(3.0, &c), 0.0);
        assert_eq!(reg_loss(5.0, &c), 4.0);
        c.set(0, 0, 1, 0.5, 0);
        assert_eq!(reg_loss(0.0, &c), 16.0);
    }

    #[test]
    fn cr_spot_values() {
        let v = cr_penalty_from(&[1.0], &[0.0], 1.5, 0.15);
        assert!((v - (1.0f64 / 0.15).powf(1.5)).abs() < 1e-12);
        assert!((v - 17.21).abs() < 5e-3);
        assert!((cr_penalty_from(&[1.0], &[0.85], 1.5, 0.15) - 1.0).abs() < 1e-12);
        assert_eq!(cr_penalty_from(&[0.0; 5], &[0.3; 5], 1.5, 0.15), 0.0);
    }

    #[test]
    fn cr_on_series_uses_abs_lcc() {
        let s = Series::new(6, 1, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        // Alternating series: lag-1 autocorrelation −1, so |lcc| = 1.
        let g = GraphScores::new(1, 1, vec![1.0]).unwrap();
        let v = cr_penalty(&g, &s, 1.5, 0.15).unwrap();
        assert!((v - (1.0f64 / 1.15).powf(1.5)).abs() < 1e-12);
        assert!(cr_penalty(&g, &s, 0.0, 0.15).is_err());
    }

    proptest! {
        #[test]
        fn cr_monotone(g in 0.01f64..1.0, c in 0.0f64..0.9, dg in 1e-3f64..0.5, dc in 1e-3f64..0.5) {
            let base = cr_penalty_from(&[g], &[c], 1.5, 0.15);
            prop_assert!(cr_penalty_from(&[(g + dg).min(1.0)], &[c], 1.5, 0.15) > base);
            prop_assert!(cr_penalty_from(&[g], &[(c + dc).min(1.0)], 1.5, 0.15) <= base);
        }
    }
}
