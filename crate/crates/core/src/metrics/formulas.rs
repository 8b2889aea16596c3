use std::collections::BTreeMap;

use regex::Regex;

/// Normalized Shannon entropy of per-file churn.
///
/// Files with zero churn do not take part; fewer than two participating files
/// gives 0.
pub fn entropy(churns: &[u64]) -> f64 {
    let live: Vec<f64> = churns.iter().filter(|&&c| c > 0).map(|&c| c as f64).collect();
    if live.len() <= 1 {
        return 0.0;
    }
    let total: f64 = live.iter().sum();
    let h: f64 = live
        .iter()
        .map(|c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum();
    (h / (live.len() as f64).log2()).clamp(0.0, 1.0)
}

/// Share threshold below which an author counts as a minor contributor.
pub const MINOR_SHARE: f64 = 0.05;

/// `(OWN, MINOR)` from cumulative added-line totals per author.
///
/// Authors present with a zero total still count towards MINOR. Both values
/// are 0 while no line has been added.
pub fn ownership<K>(totals: &BTreeMap<K, u64>) -> (f64, u64) {
    let sum: u64 = totals.values().sum();
    if sum == 0 {
        return (0.0, 0);
    }
    let sum = sum as f64;
    let mut own = 0.0f64;
    let mut minor = 0;
    for &lines in totals.values() {
        let share = lines as f64 / sum;
        own = own.max(share);
        if share < MINOR_SHARE {
            minor += 1;
        }
    }
    (own, minor)
}

pub const DEFAULT_FIX_KEYWORDS: [&str; 8] =
    ["fix", "fixes", "fixed", "bug", "bugs", "defect", "defects", "patch"];

/// Keyword matcher for defect-fixing commit messages.
#[derive(Debug, Clone)]
pub struct FixDetector {
    re: Regex,
}

impl FixDetector {
    pub fn new<S: AsRef<str>>(keywords: &[S]) -> Self {
        let alts: Vec<String> = keywords.iter().map(|k| regex::escape(k.as_ref())).collect();
        let pattern = if alts.is_empty() {
            // matches nothing
            r"[^\s\S]".to_string()
        } else {
            format!(r"(?i)\b(?:{})\b", alts.join("|"))
        };
        Self { re: Regex::new(&pattern).expect("escaped keywords form a valid regex") }
    }

    pub fn is_fix(&self, message: &str) -> bool {
        self.re.is_match(message)
    }
}

impl Default for FixDetector {
    fn default() -> Self {
        Self::new(&DEFAULT_FIX_KEYWORDS)
    }
}

/// Defect-fix heuristic with the default keyword list.
pub fn detect_fix(message: &str) -> bool {
    use std::sync::OnceLock;
    static DEFAULT: OnceLock<FixDetector> = OnceLock::new();
    DEFAULT.get_or_init(FixDetector::default).is_fix(message)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[10]), 0.0);
        assert_abs_diff_eq!(entropy(&[5, 5]), 1.0, epsilon = 1e-12);
        let expected = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert_abs_diff_eq!(entropy(&[3, 1]), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(entropy(&[3, 1]), 0.811, epsilon = 0.001);
        assert_eq!(entropy(&[0, 0]), 0.0);
        assert_eq!(entropy(&[0, 7]), 0.0);
    }

    #[test]
    fn ownership_examples() {
        let m = |v: &[(&str, u64)]| v.iter().map(|(k, n)| (k.to_string(), *n)).collect::<BTreeMap<_, _>>();
        assert_eq!(ownership(&m(&[("a", 100)])), (1.0, 0));
        assert_eq!(ownership(&m(&[("a", 96), ("b", 4)])), (0.96, 1));
        assert_eq!(ownership(&m(&[("a", 50), ("b", 50)])), (0.5, 0));
        assert_eq!(ownership(&m(&[])), (0.0, 0));
        assert_eq!(ownership(&m(&[("a", 0)])), (0.0, 0));
    }

    #[test]
    fn fix_keywords() {
        assert!(detect_fix("Fix NPE in parser"));
        assert!(!detect_fix("prefix refactor"));
        assert!(!detect_fix(""));
        assert!(detect_fix("squash BUGS"));
        assert!(detect_fix("bug-fix for #12"));
        assert!(!detect_fix("debugging output"));
        assert!(!FixDetector::new::<&str>(&[]).is_fix("fix"));
        assert!(FixDetector::new(&["hotfix"]).is_fix("Hotfix release"));
    }
}
