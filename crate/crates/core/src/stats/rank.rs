use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::{StatsError, TestResult};

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn check(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidArgument("non-finite value".into()));
    }
    Ok(())
}

/// Spearman's ρ as the Pearson correlation of mid-ranks, with a two-sided
/// t-approximation p-value.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    check(x, y)?;
    let (rx, ry) = (midranks(x), midranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = n - 2.0;
    let p = if 1.0 - rho.abs() < 1e-15 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        2.0 * StudentsT::new(0.0, 1.0, df).expect("df >= 1").sf(t.abs())
    };
    Ok(TestResult::new(rho, p, Some(df as u32)))
}

fn tie_sums(sorted: &[f64]) -> (f64, f64, f64, f64) {
    // Σ t(t-1)/2, Σ t(t-1)(2t+5), Σ t(t-1), Σ t(t-1)(t-2) over tie groups
    let (mut pairs, mut v, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        pairs += t * (t - 1.0) / 2.0;
        v += t * (t - 1.0) * (2.0 * t + 5.0);
        t1 += t * (t - 1.0);
        t2 += t * (t - 1.0) * (t - 2.0);
        i = j;
    }
    (pairs, v, t1, t2)
}

/// Counts inversions of `v` by merge sort, sorting it in place.
fn count_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_swaps(&mut v[..mid], buf) + count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's τ-b (Knight's O(n log n) algorithm) with a normal-approximation
/// p-value using the tie-adjusted variance of S.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    check(x, y)?;
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    // pairs tied in both x and y
    let mut joint = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && xs[j] == xs[i] && ys[j] == ys[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        joint += t * (t - 1.0) / 2.0;
        i = j;
    }
    let (x_pairs, vx, x1, x2) = tie_sums(&xs);
    let swaps = count_swaps(&mut ys, &mut Vec::with_capacity(n)) as f64;
    let (y_pairs, vy, y1, y2) = tie_sums(&ys);

    let nf = n as f64;
    let n0 = nf * (nf - 1.0) / 2.0;
    if x_pairs == n0 || y_pairs == n0 {
        return Err(StatsError::ZeroVariance);
    }
    let s = n0 - x_pairs - y_pairs + joint - 2.0 * swaps;
    let tau = (s / ((n0 - x_pairs) * (n0 - y_pairs)).sqrt()).clamp(-1.0, 1.0);

    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - vx - vy) / 18.0
        + x1 * y1 / (2.0 * nf * (nf - 1.0))
        + x2 * y2 / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    let p = if var > 0.0 { 2.0 * Normal::standard().sf((s / var.sqrt()).abs()) } else { 1.0 };
    Ok(TestResult::new(tau, p, None).with("s", s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman_rho(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap().statistic, 1.0);
        assert_eq!(spearman_rho(&x, &[40.0, 30.0, 20.0, 10.0]).unwrap().statistic, -1.0);
        let r = spearman_rho(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        // Σd² = 4, so 1 − 6·4/(5·24) = 0.8
        assert!((r.statistic - 0.8).abs() < 1e-12);
        assert_eq!(spearman_rho(&x, &[1.0; 4]), Err(StatsError::ZeroVariance));
        assert_eq!(spearman_rho(&x, &[1.0; 3]), Err(StatsError::LengthMismatch(4, 3)));
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(kendall_tau(&x, &x).unwrap().statistic, 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().statistic, -1.0);
        assert_eq!(kendall_tau(&x, &[2.0; 5]), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn values_against_scipy() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0];
        let s = spearman_rho(&x, &y).unwrap();
        assert!((s.statistic - 0.904_761_904_761_904_8).abs() < 1e-12);
        assert!((s.p_value - 0.002_008_275_505_429_467_7).abs() < 1e-9, "{}", s.p_value);
        let k = kendall_tau(&x, &[1.0, 1.0, 2.0, 2.0, 3.0, 5.0, 4.0, 4.0]).unwrap();
        assert!((k.statistic - K_TAU).abs() < 1e-12, "{}", k.statistic);
        assert!((k.p_value - K_P).abs() < 1e-9, "{}", k.p_value);
    }

    const K_TAU: f64 = 0.793_725_393_319_377_1;
    const K_P: f64 = 0.007_817_265_406_565_509;
}
