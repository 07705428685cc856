//! Population-moment estimators (divide-by-N, matching the mean-field
//! definitions rather than the unbiased N-1 convention).

/// Arithmetic mean. Returns 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (second central moment).
pub fn pop_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn pop_std(xs: &[f64]) -> f64 {
    pop_var(xs).sqrt()
}

/// Population covariance of two equal-length slices.
pub fn pop_cov(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "covariance needs equal lengths");
    let mx = mean(xs);
    let my = mean(ys);
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.len() as f64
}

/// Population correlation; 0 when either marginal is degenerate.
pub fn pop_corr(xs: &[f64], ys: &[f64]) -> f64 {
    let sx = pop_std(xs);
    let sy = pop_std(ys);
    if sx == 0.0 || sy == 0.0 {
        return 0.0;
    }
    pop_cov(xs, ys) / (sx * sy)
}

/// k-th central moment about the sample mean.
pub fn central_moment(xs: &[f64], k: u32) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(k as i32)).sum::<f64>() / xs.len() as f64
}

/// Sample skewness m3 / m2^{3/2}; 0 for a degenerate sample.
pub fn skewness(xs: &[f64]) -> f64 {
    let m2 = central_moment(xs, 2);
    if m2 == 0.0 {
        return 0.0;
    }
    central_moment(xs, 3) / m2.powf(1.5)
}

/// Sample excess kurtosis m4 / m2^2 - 3; 0 for a degenerate sample.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m2 = central_moment(xs, 2);
    if m2 == 0.0 {
        return 0.0;
    }
    central_moment(xs, 4) / (m2 * m2) - 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_a_symmetric_two_point_sample() {
        let xs = [-1.0, 1.0, -1.0, 1.0];
        assert_eq!(mean(&xs), 0.0);
        assert_eq!(pop_var(&xs), 1.0);
        assert_eq!(skewness(&xs), 0.0);
        assert_eq!(excess_kurtosis(&xs), -2.0);
    }

    #[test]
    fn correlation_of_identical_series_is_one() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((pop_corr(&xs, &xs) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_marginal_gives_zero_correlation() {
        let xs = [2.0, 2.0, 2.0];
        let ys = [1.0, 2.0, 3.0];
        assert_eq!(pop_corr(&xs, &ys), 0.0);
    }
}
