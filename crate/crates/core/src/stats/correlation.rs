use crate::error::{Error, Result};
use crate::series::Series;

/// Pearson correlation of two equal-length windows; 0 if either is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let len = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / len;
    let mean_b = b.iter().sum::<f64>() / len;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Lagged cross-correlation: Pearson correlation between `a^t` and
/// `b^{t-lag}` over the overlap `t = lag..T-1`, with moments taken on the
/// overlapping windows only.
pub fn lcc(a: &[f64], b: &[f64], lag: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    if lag >= a.len() {
        return Err(Error::data(format!(
            "lag {lag} must be smaller than series length {}",
            a.len()
        )));
    }
    let t = a.len();
    Ok(pearson(&a[lag..], &b[..t - lag]))
}

/// `|lcc(X_i, X_j, n)|` for every `(i, j, n)`, `n = 1..=max_lag`, flattened
/// in `GraphScores` order.
pub fn corr_features(series: &Series, max_lag: usize) -> Result<Vec<f64>> {
    let v = series.num_vars();
    if max_lag >= series.len() {
        return Err(Error::data(format!(
            "max_lag {max_lag} must be smaller than series length {}",
            series.len()
        )));
    }
    let channels = series.channels();
    let mut out = Vec::with_capacity(v * v * max_lag);
    for a in &channels {
        for b in &channels {
            for lag in 1..=max_lag {
                out.push(lcc(a, b, lag)?.abs());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn self_correlation() {
        let a = [0.3, 1.2, -0.4, 2.0, 0.9];
        assert!((lcc(&a, &a, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alternating_lag_one() {
        let a = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let b = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        assert!((lcc(&a, &b, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((lcc(&a, &b, 0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn anti_correlation() {
        let r = lcc(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0], 0).unwrap();
        assert!((r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_window_is_zero() {
        assert_eq!(lcc(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], 0).unwrap(), 0.0);
        // Only the overlap is constant.
        assert_eq!(lcc(&[5.0, 1.0, 1.0, 1.0], &[0.0, 1.0, 2.0, 3.0], 1).unwrap(), 0.0);
    }

    #[test]
    fn lag_errors() {
        assert!(lcc(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
        assert!(lcc(&[1.0, 2.0], &[1.0], 0).is_err());
    }

    #[test]
    fn lag_asymmetry() {
        let a = [0.1, 0.5, 0.2, 0.9, 0.4, 0.8, 0.3];
        let b = [0.7, 0.1, 0.6, 0.2, 0.9, 0.0, 0.5];
        assert_eq!(lcc(&a, &b, 0).unwrap(), lcc(&b, &a, 0).unwrap());
        assert!((lcc(&a, &b, 1).unwrap() - lcc(&b, &a, 1).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn features_shape_and_order() {
        let s = Series::from_channels(&[
            vec![0.1, 0.5, 0.2, 0.9, 0.4, 0.8],
            vec![0.7, 0.1, 0.6, 0.2, 0.9, 0.0],
            vec![0.3, 0.3, 0.8, 0.1, 0.5, 0.6],
        ])
        .unwrap();
        let f = corr_features(&s, 2).unwrap();
        assert_eq!(f.len(), 18);
        let ch = s.channels();
        // entry (i=2, j=0, lag=2) at (2*3+0)*2+1
        assert_eq!(f[13], lcc(&ch[2], &ch[0], 2).unwrap().abs());
        assert!(f.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn white_noise_features_near_zero() {
        let mut rng = seed::rng(42);
        let channels: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let s = Series::from_channels(&channels).unwrap().normalize_minmax();
        let f = corr_features(&s, 2).unwrap();
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        // E|r| ≈ sqrt(2/π)/sqrt(T) ≈ 0.018 under the null.
        assert!(mean < 0.05, "mean |lcc| {mean}");
        assert!(f.iter().all(|&x| x < 0.1));
    }
}
