//! Central finite-difference verification of reverse-mode gradients.

use rand::Rng as _;

use crate::nn::graph::{Graph, Var};
use crate::nn::matrix::Matrix;
use crate::nn::model::{init_params, Architecture, ModelDims, ModelFlags, ModelParams, ParamVars, SizePreset};
use crate::seed;

pub const FD_STEP: f64 = 1e-4;
/// Relative errors are measured against `max(|analytic|, |numeric|, REL_FLOOR)`.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub checked: usize,
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares the gradient of `loss` with central differences for every
/// parameter. `loss` must build a scalar node from the given leaves.
pub fn gradcheck_loss<F>(params: &ModelParams, step: f64, loss: F) -> GradcheckReport
where
    F: Fn(&ModelParams, &mut Graph, &ParamVars) -> Var,
{
    let mut g = Graph::new();
    let vars = params.leaves(&mut g, true);
    let out = loss(params, &mut g, &vars);
    g.backward(out);
    let mut analytic = params.clone();
    analytic.collect_grads(&g, &vars);

    let eval = |p: &ModelParams| {
        let mut g = Graph::new();
        let vars = p.leaves(&mut g, false);
        let out = loss(p, &mut g, &vars);
        g.value(out).data[0]
    };

    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        checked: 0,
    };
    let mut probe = params.clone();
    for (ti, tensor) in analytic.tensors.iter().enumerate() {
        for k in 0..tensor.len() {
            let orig = probe.tensors[ti].values[k];
            probe.tensors[ti].values[k] = orig + step;
            let plus = eval(&probe);
            probe.tensors[ti].values[k] = orig - step;
            let minus = eval(&probe);
            probe.tensors[ti].values[k] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let err = rel_error(tensor.grad[k], numeric);
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_tensor = tensor.name.clone();
                report.worst_index = k;
            }
        }
    }
    report
}

/// Tiny instance (V=2, N=1, T=8, batch 3) with correlation injection and
/// the count head active; loss is BCE on random labels plus the squared
/// count error. Returns the maximum relative error over all parameters.
pub fn gradcheck(arch: Architecture, preset: SizePreset, seed: u64) -> f64 {
    gradcheck_report(arch, preset, seed).max_rel_error
}

pub fn gradcheck_report(arch: Architecture, preset: SizePreset, seed: u64) -> GradcheckReport {
    let dims = ModelDims {
        num_vars: 2,
        max_lag: 1,
        series_len: 8,
    };
    let flags = ModelFlags {
        correlation_injection: true,
        regression_head: true,
    };
    let params = init_params(arch, preset, dims, flags, seed).expect("valid tiny dims");
    let mut rng = seed::rng(seed ^ 0x6772_6164);
    let batch = 3;
    let x = Matrix::from_vec(
        batch,
        dims.input_len(),
        (0..batch * dims.input_len()).map(|_| rng.random::<f64>()).collect(),
    );
    let corr = Matrix::from_vec(
        batch,
        dims.graph_len(),
        (0..batch * dims.graph_len()).map(|_| rng.random::<f64>()).collect(),
    );
    let labels = Matrix::from_vec(
        batch,
        dims.graph_len(),
        (0..batch * dims.graph_len()).map(|_| rng.random_bool(0.5) as u8 as f64).collect(),
    );
    let counts = Matrix::from_vec(batch, 1, (0..batch).map(|_| rng.random_range(0..4) as f64).collect());
    gradcheck_loss(&params, FD_STEP, |p, g, vars| {
        let xv = g.constant(x.clone());
        let cv = g.constant(corr.clone());
        let nodes = p.build(g, vars, xv, Some(cv));
        let bce = g.bce(nodes.probs, labels.clone(), None);
        let target = g.constant(counts.clone());
        let diff = g.sub(nodes.count.expect("count head"), target);
        let sq = g.square(diff);
        let reg = g.mean(sq);
        g.add(bce, reg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlp_small_passes() {
        let r = gradcheck_report(Architecture::Mlp, SizePreset::Small, 1);
        assert!(r.checked > 10_000);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn gru_small_passes() {
        let r = gradcheck_report(Architecture::Gru, SizePreset::Small, 2);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let dims = ModelDims {
            num_vars: 2,
            max_lag: 1,
            series_len: 4,
        };
        let p = init_params(Architecture::Mlp, SizePreset::Small, dims, ModelFlags::default(), 0).unwrap();
        // Σ w ⊙ stop_grad(w): the tape sees w, the true derivative is 2w.
        let r = gradcheck_loss(&p, FD_STEP, |_, g, vars| {
            let frozen = g.value(vars.0[0]).clone();
            let prod = g.mul_const(vars.0[0], frozen);
            g.sum(prod)
        });
        assert!((r.max_rel_error - 0.5).abs() < 1e-3, "{r:?}");
        assert_eq!(r.worst_tensor, "w1");
    }
}
