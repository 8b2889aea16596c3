use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct BonferroniOutcome {
    pub threshold: f64,
    pub rejections: Vec<usize>,
    /// `min(1, m·p)` per input, in input order.
    pub p_adjusted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BhOutcome {
    pub rejections: Vec<usize>,
    pub p_adjusted: Vec<f64>,
}

fn check(p: &[f64], alpha: f64) -> Result<(), StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    if p.is_empty() {
        return Err(StatsError::InvalidArgument("no p-values".into()));
    }
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(StatsError::InvalidArgument("p-values must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Family-wise correction: reject `p_i < alpha / m`.
pub fn bonferroni(p: &[f64], alpha: f64) -> Result<BonferroniOutcome, StatsError> {
    check(p, alpha)?;
    let m = p.len() as f64;
    let threshold = alpha / m;
    Ok(BonferroniOutcome {
        threshold,
        rejections: (0..p.len()).filter(|&i| p[i] < threshold).collect(),
        p_adjusted: p.iter().map(|&v| (v * m).min(1.0)).collect(),
    })
}

/// Benjamini-Hochberg step-up procedure.
pub fn benjamini_hochberg(p: &[f64], alpha: f64) -> Result<BhOutcome, StatsError> {
    check(p, alpha)?;
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));

    let mut k = 0;
    for (rank, &i) in order.iter().enumerate() {
        if p[i] <= (rank + 1) as f64 * alpha / m as f64 {
            k = rank + 1;
        }
    }
    let mut rejections: Vec<usize> = order[..k].to_vec();
    rejections.sort_unstable();

    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * m as f64 / (rank + 1) as f64).min(1.0);
        // m·p/i ≥ p analytically; rounding can undershoot by an ulp
        adjusted[i] = running.max(p[i]);
    }
    Ok(BhOutcome { rejections, p_adjusted: adjusted })
}
