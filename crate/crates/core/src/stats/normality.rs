use statrs::distribution::{ContinuousCDF, Normal};

use super::{StatsError, TestResult};

/// Anderson-Darling test against a normal with estimated mean and variance.
///
/// The statistic is the small-sample adjusted A*²; the p-value uses the
/// piecewise approximation of D'Agostino and Stephens. `extra` carries the
/// unadjusted `a2` and a `reject_at_005` flag (1 or 0).
pub fn anderson_darling_normal(samples: &[f64]) -> Result<TestResult, StatsError> {
    let n = samples.len();
    if n < 8 {
        return Err(StatsError::TooFewSamples { needed: 8, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 || !var.is_finite() {
        return Err(StatsError::ZeroVariance);
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);

    let norm = Normal::standard();
    let tiny = f64::MIN_POSITIVE;
    let mut s = 0.0;
    for i in 0..n {
        let lower = norm.cdf(z[i]).max(tiny).ln();
        let upper = norm.sf(z[n - 1 - i]).max(tiny).ln();
        s += (2.0 * (i as f64) + 1.0) * (lower + upper);
    }
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    let p = p.clamp(0.0, 1.0);
    Ok(TestResult::new(a, p, None).with("a2", a2).with("reject_at_005", if p < 0.05 { 1.0 } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_inputs() {
        assert_eq!(anderson_darling_normal(&[1.0; 20]), Err(StatsError::ZeroVariance));
        assert!(matches!(anderson_darling_normal(&[1.0, 2.0]), Err(StatsError::TooFewSamples { .. })));
    }

    #[test]
    fn reference_value() {
        // A² for 1..=10 against a fitted normal, cross-checked with scipy.
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = anderson_darling_normal(&x).unwrap();
        assert!((r.get("a2").unwrap() - 0.141_109_25).abs() < 1e-6, "{r:?}");
        assert!(r.p_value > 0.9);
    }
}
