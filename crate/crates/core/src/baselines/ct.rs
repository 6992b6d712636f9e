use crate::error::Result;
use crate::series::Series;
use crate::stats::{corr_features, GraphScores};

/// Absolute lagged cross-correlations used directly as edge scores.
pub fn correlation_thresholding(series: &Series, max_lag: usize) -> Result<GraphScores> {
    GraphScores::new(series.num_vars(), max_lag, corr_features(series, max_lag)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semgen::{generate_dataset, builtin_config, CoeffTensor, SimParams, FunctionSetId};
    use crate::stats::auroc;
    use crate::seed;

    #[test]
    fn independent_channels_near_chance() {
        let mut config = builtin_config("SL").unwrap().with_sizes(0, 0, 300);
        config.link_probability = 0.0;
        let d = generate_dataset(&config).unwrap();
        // Random labels against pure-noise scores.
        let mut total = 0.0;
        let mut count = 0;
        for (k, s) in d.test1.iter().enumerate() {
            let g = correlation_thresholding(&s.series, 2).unwrap();
            let labels: Vec<bool> = (0..18).map(|e| (seed::mix64((k * 18 + e) as u64) & 3) == 0).collect();
            if let Some(a) = auroc(g.values(), &labels) {
                total += a;
                count += 1;
            }
        }
        let mean = total / count as f64;
        assert!((mean - 0.5).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn strong_single_edge_gets_max_score() {
        let mut coeffs = CoeffTensor::zeros(3, 2);
        coeffs.set(2, 0, 1, 0.9, 0);
        let params = SimParams {
            series_len: 500,
            burn_in: 50,
            noise_variance: 0.4,
            function_set: FunctionSetId::L,
        };
        let mut rng = seed::rng(1);
        let raw = crate::semgen::simulate::simulate_with(&coeffs, &params, &mut rng).unwrap();
        let g = correlation_thresholding(&raw.normalize_minmax(), 2).unwrap();
        let argmax = g
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, g.index(2, 0, 1));
    }

    #[test]
    fn permutation_equivariant() {
        let d = generate_dataset(&builtin_config("SL").unwrap().with_sizes(0, 0, 5)).unwrap();
        let perm = [2, 0, 1];
        for s in &d.test1 {
            let g = correlation_thresholding(&s.series, 2).unwrap();
            let gp = correlation_thresholding(&s.series.permute_vars(&perm), 2).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    for n in 1..=2 {
                        assert_eq!(gp.get(i, j, n), g.get(perm[i], perm[j], n));
                    }
                }
            }
        }
    }
}
