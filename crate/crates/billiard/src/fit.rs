//! Small numeric helpers shared by the diagnostics: least-squares fits,
//! batch-means error bars, and the Kolmogorov-Smirnov machinery.

/// Result of a weighted least-squares line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope under the usual homoscedastic model.
    pub slope_se: f64,
}

/// Ordinary least squares with optional per-point weights.
pub fn fit_line(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(&w).sum();
    if sw <= 0.0 {
        return None;
    }
    let mx = (0..n).map(|i| w(i) * xs[i]).sum::<f64>() / sw;
    let my = (0..n).map(|i| w(i) * ys[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w(i) * (xs[i] - mx) * (xs[i] - mx)).sum();
    let sxy: f64 = (0..n).map(|i| w(i) * (xs[i] - mx) * (ys[i] - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = (0..n).map(|i| w(i) * (ys[i] - my) * (ys[i] - my)).sum();
    let ss_res: f64 = (0..n)
        .map(|i| {
            let r = ys[i] - intercept - slope * xs[i];
            w(i) * r * r
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let dof = (n as f64 - 2.0).max(1.0);
    let slope_se = (ss_res / dof / sxx).sqrt();
    Some(LineFit { slope, intercept, r2, slope_se })
}

/// Smallest exponential envelope `C * K^n` dominating the points
/// `(n_i, u_i)` with `u_i > 0`: fit a line to `log u` and lift the intercept
/// until every residual is non-positive.
pub fn exponential_envelope(ns: &[f64], us: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(us)
        .filter(|(_, &u)| u > 0.0)
        .map(|(&n, &u)| (n, u.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys, None)?;
    let max_resid = pts
        .iter()
        .map(|&(x, y)| y - fit.intercept - fit.slope * x)
        .fold(f64::NEG_INFINITY, f64::max);
    Some(((fit.intercept + max_resid).exp(), fit.slope.exp()))
}

/// Mean and batch-means standard error of a sample, using `n_batches`
/// contiguous batches.
pub fn batch_means(samples: &[f64], n_batches: usize) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let b = n_batches.clamp(2, n.max(2));
    let per = n / b;
    if per == 0 {
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (n.saturating_sub(1).max(1)) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let batch_means: Vec<f64> = (0..b)
        .map(|k| samples[k * per..(k + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let bm = batch_means.iter().sum::<f64>() / b as f64;
    let bvar = batch_means.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (b - 1) as f64;
    (mean, (bvar / b as f64).sqrt())
}

/// Sample mean and variance (unbiased).
pub fn mean_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (n.saturating_sub(1).max(1)) as f64;
    (mean, var)
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Abramowitz-Stegun 7.1.26 style rational approximation, |error| < 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Kolmogorov-Smirnov statistic of `samples` against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let c = cdf(x);
        d = d.max((c - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - c).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value: P(D > d) for sample size n.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let lambda = (n as f64).sqrt() * d;
    if lambda < 1e-8 {
        return 1.0;
    }
    // Two-sided Kolmogorov distribution Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Chi-squared survival function P(X > x) with k degrees of freedom, via the
/// regularized upper incomplete gamma function.
pub fn chi2_p_value(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    upper_gamma_regularized(k as f64 / 2.0, x / 2.0)
}

fn upper_gamma_regularized(a: f64, x: f64) -> f64 {
    if x < a + 1.0 {
        1.0 - lower_gamma_series(a, x)
    } else {
        upper_gamma_cf(a, x)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Pearson correlation of two equally long slices.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    assert_eq!(n, ys.len());
    if n < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys, None).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_dominates_all_points() {
        let ns: Vec<f64> = (1..12).map(|i| i as f64).collect();
        let us: Vec<f64> = ns.iter().map(|n| 2.0f64.powf(*n) * (1.0 + (n * 7.3).sin().abs())).collect();
        let (c, k) = exponential_envelope(&ns, &us).unwrap();
        for (n, u) in ns.iter().zip(&us) {
            assert!(c * k.powf(*n) >= *u * (1.0 - 1e-9));
        }
    }

    #[test]
    fn normal_cdf_midpoint() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-6);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-6);
    }

    #[test]
    fn chi2_matches_known_values() {
        // P(X > 3.841) = 0.05 for k = 1; P(X > 18.307) = 0.05 for k = 10.
        assert!((chi2_p_value(3.841458820694124, 1) - 0.05).abs() < 1e-6);
        assert!((chi2_p_value(18.307038053275146, 10) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn ks_p_value_is_uniformish_for_exact_cdf() {
        // Deterministic "uniform" sample: stratified midpoints -> tiny D.
        let mut xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(d < 1.0e-3 + 1e-12);
        assert!(ks_p_value(d, 1000) > 0.99);
    }
}
