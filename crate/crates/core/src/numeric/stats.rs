//! Small statistics helpers for the Monte-Carlo diagnostics.

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
/// The sample slice must be sorted ascending.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let c = cdf(*x);
        sup = sup.max((c - i as f64 / n).abs());
        sup = sup.max(((i + 1) as f64 / n - c).abs());
    }
    sup
}

/// Ordinary least squares fit `y = a + b x`.
#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope under iid residuals.
    pub slope_se: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(n >= 2.0);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = (n - 2.0).max(1.0);
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_se = (ss_res / dof / sxx).sqrt();
    LinearFit { intercept, slope, slope_se }
}

/// Standard error of the mean of a correlated series via batch means.
pub fn batch_means_se(series: &[f64], n_batches: usize) -> f64 {
    let n_batches = n_batches.clamp(2, series.len().max(2));
    let per = (series.len() / n_batches).max(1);
    let means: Vec<f64> = series
        .chunks(per)
        .take(n_batches)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let k = means.len() as f64;
    let m = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0).max(1.0);
    (var / k).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_uniform_grid() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&sample, |x| x.clamp(0.0, 1.0));
        assert!(d < 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-10);
        assert!(f.slope_se < 1e-10);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
