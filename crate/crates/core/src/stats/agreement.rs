use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::{ContingencyTable, StatsError, TestResult};

/// Cohen's kappa with the large-sample standard error of Fleiss, Cohen and
/// Everitt.
///
/// `extra` carries `std_err`, `ci_low`, `ci_high` (κ ± 1.96·SE), `std_err_0`
/// (SE under κ = 0) and `z`. The p-value is the one-sided test of κ > 0.
pub fn cohen_kappa(table: &ContingencyTable) -> Result<TestResult, StatsError> {
    table.validate()?;
    let k = table.k();
    let n = table.total() as f64;
    let p: Vec<Vec<f64>> = table.counts.iter().map(|r| r.iter().map(|&c| c as f64 / n).collect()).collect();
    let row: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..k).map(|j| p.iter().map(|r| r[j]).sum()).collect();
    let po: f64 = (0..k).map(|i| p[i][i]).sum();
    let pe: f64 = (0..k).map(|i| row[i] * col[i]).sum();
    if (1.0 - pe).abs() < 1e-15 {
        return Err(StatsError::DegenerateTable);
    }
    let kappa = (po - pe) / (1.0 - pe);

    let mut a = 0.0;
    for i in 0..k {
        a += p[i][i] * ((1.0 - pe) - (row[i] + col[i]) * (1.0 - po)).powi(2);
    }
    let mut b = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                b += p[i][j] * (col[i] + row[j]).powi(2);
            }
        }
    }
    b *= (1.0 - po).powi(2);
    let c = (po * pe - 2.0 * pe + po).powi(2);
    let var = ((a + b - c) / (n * (1.0 - pe).powi(4))).max(0.0);
    let se = var.sqrt();

    let s: f64 = (0..k).map(|i| row[i] * col[i] * (row[i] + col[i])).sum();
    let var0 = ((pe + pe * pe - s) / (n * (1.0 - pe).powi(2))).max(0.0);
    let se0 = var0.sqrt();
    let z = if se0 > 0.0 { kappa / se0 } else { f64::INFINITY * kappa.signum() };
    let p_value = if z.is_finite() { Normal::standard().sf(z) } else if z > 0.0 { 0.0 } else { 1.0 };

    Ok(TestResult::new(kappa, p_value, None)
        .with("std_err", se)
        .with("ci_low", kappa - 1.96 * se)
        .with("ci_high", kappa + 1.96 * se)
        .with("std_err_0", se0)
        .with("z", z)
        .with("observed_agreement", po)
        .with("expected_agreement", pe))
}

/// Bowker's test of symmetry. Pairs with no off-diagonal mass do not count
/// towards the degrees of freedom; a table without any off-diagonal mass is
/// symmetric by vacuity (statistic 0, df 0, p = 1).
pub fn bowker_test(table: &ContingencyTable) -> Result<TestResult, StatsError> {
    table.validate()?;
    let k = table.k();
    let mut stat = 0.0;
    let mut df = 0u32;
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (table.counts[i][j] as f64, table.counts[j][i] as f64);
            if a + b > 0.0 {
                stat += (a - b).powi(2) / (a + b);
                df += 1;
            }
        }
    }
    if df == 0 {
        return Ok(TestResult::new(0.0, 1.0, Some(0)).with("no_off_diagonal_mass", 1.0));
    }
    let p = ChiSquared::new(f64::from(df)).expect("df > 0").sf(stat);
    Ok(TestResult::new(stat, p, Some(df)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(counts: Vec<Vec<u64>>) -> ContingencyTable {
        let labels = (0..counts.len()).map(|i| format!("l{i}")).collect();
        ContingencyTable::new(labels, counts).unwrap()
    }

    #[test]
    fn kappa_extremes() {
        assert_abs_diff_eq!(cohen_kappa(&t(vec![vec![50, 0], vec![0, 50]])).unwrap().statistic, 1.0);
        assert_abs_diff_eq!(cohen_kappa(&t(vec![vec![25, 25], vec![25, 25]])).unwrap().statistic, 0.0);
        assert_eq!(cohen_kappa(&t(vec![vec![10, 0], vec![0, 0]])), Err(StatsError::DegenerateTable));
    }

    #[test]
    fn bowker_examples() {
        let r = bowker_test(&t(vec![vec![10, 5], vec![5, 10]])).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let r = bowker_test(&t(vec![vec![1, 12, 3], vec![4, 1, 0], vec![3, 8, 1]])).unwrap();
        assert_abs_diff_eq!(r.statistic, 12.0);
        assert_eq!(r.df, Some(3));
        let r = bowker_test(&t(vec![vec![3, 0], vec![0, 4]])).unwrap();
        assert_eq!((r.statistic, r.p_value, r.df), (0.0, 1.0, Some(0)));
    }

    #[test]
    fn invalid_tables() {
        assert!(ContingencyTable::new(vec!["a"], vec![vec![1]]).is_err());
        assert!(ContingencyTable::new(vec!["a", "b"], vec![vec![0, 0], vec![0, 0]]).is_err());
        assert!(ContingencyTable::new(vec!["a", "b"], vec![vec![1, 0]]).is_err());
    }
}
