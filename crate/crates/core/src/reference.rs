//! Published reference values: the human-vs-LLM agreement tables, the
//! motivation-category taxonomy and the default analysis columns.

/// Alignment labels in the order used by [`AGREEMENT_TABLE`].
pub const AGREEMENT_LABELS: [&str; 2] = ["No", "Yes"];

/// Rows: LLM verdict, columns: human verdict.
pub const AGREEMENT_TABLE: [[u64; 2]; 2] = [[59, 8], [34, 97]];

/// Reported agreement statistics for [`AGREEMENT_TABLE`].
pub mod agreement {
    pub const KAPPA: f64 = 0.567;
    pub const STD_ERR: f64 = 0.057;
    pub const CI_LOW: f64 = 0.455;
    pub const CI_HIGH: f64 = 0.679;
    pub const BOWKER_CHI2: f64 = 16.095;
}

/// Human-validated alignment of sampled motivations with earlier catalogued ones.
pub const ALIGNMENT_COUNTS: [(&str, u64); 3] = [("yes", 105), ("no", 49), ("extends", 44)];

/// Motivation pairs available and the validated subset drawn from them.
pub const MOTIVATION_PAIRS: u64 = 758;
pub const VALIDATED_PAIRS: u64 = 198;

/// Family-wise significance level used for the metric correlations.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotivationCategory {
    pub code: &'static str,
    pub name: &'static str,
    pub description: &'static str,
    /// Occurrences among the open-coded motivations.
    pub occurrences: u32,
}

macro_rules! rmc {
    ($code:literal, $name:literal, $n:literal, $desc:literal) => {
        MotivationCategory { code: $code, name: $name, description: $desc, occurrences: $n }
    };
}

/// The 14 refactoring-motivation categories, most frequent first.
pub const MOTIVATION_CATEGORIES: [MotivationCategory; 14] = [
    rmc!("CCR", "Code Clarity and Readability", 119,
        "Motivations aiming to improve the readability, abstraction, and understandability of the code."),
    rmc!("CSRR", "Code Simplification and Redundancy Reduction", 81,
        "Focus on reducing complexity, eliminating duplication, and streamlining code."),
    rmc!("MM", "Maintainability and Modularity", 35,
        "Focuses on long-term maintainability and modular decomposition of software components."),
    rmc!("EA", "Encapsulation and Abstraction", 24,
        "Deals with isolating responsibilities and minimizing external dependencies or access."),
    rmc!("OSG", "Other Specialized Goals", 20,
        "All other motivations that serve niche, technical, or domain-specific purposes."),
    rmc!("TR", "Testing and Reliability", 19,
        "Refactorings aimed at improving code testability and reliability."),
    rmc!("SS", "Security and Safety", 15,
        "Motivations ensuring safer, more secure code, such as null safety or thread safety."),
    rmc!("EEH", "Exception and Error Handling", 13,
        "Related to improving how exceptions and errors are managed in the codebase."),
    rmc!("TPH", "Type and Parameter Handling", 13,
        "Deals with type safety, parameter handling, and semantic correctness of method inputs."),
    rmc!("SF", "Support (New) Functionalities", 12,
        "Motivations enhancing current code functionality and introduction of new functionalities."),
    rmc!("SR", "Structural Reorganization", 11,
        "Code transformations involving movement or reclassification of structural elements."),
    rmc!("CS", "Consistency and Standardization", 10,
        "Focus on aligning code with standards or maintaining consistent patterns."),
    rmc!("PRM", "Performance and Resource Management", 8,
        "Improvements targeting efficiency, memory, or threading concerns."),
    rmc!("DPP", "Design Principles and Patterns", 5,
        "Encourages use of standard design patterns and separation of concerns."),
];

pub fn category(code: &str) -> Option<&'static MotivationCategory> {
    MOTIVATION_CATEGORIES.iter().find(|c| c.code.eq_ignore_ascii_case(code))
}

/// Matches either a category code or its full name, ignoring case and
/// runs of whitespace.
pub fn lookup_category(label: &str) -> Option<&'static MotivationCategory> {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let l = norm(label);
    MOTIVATION_CATEGORIES.iter().find(|c| c.code.to_lowercase() == l || norm(c.name) == l)
}

pub fn category_codes() -> Vec<&'static str> {
    MOTIVATION_CATEGORIES.iter().map(|c| c.code).collect()
}

/// Recurring reasons behind human/LLM disagreement.
pub const DISAGREEMENT_CATEGORIES: [(&str, &str); 5] = [
    ("Different Focus of Refactoring Granularity",
        "Human focuses on attributes, classes, or packages while LLM focuses more localized structures such as methods."),
    ("Intent Misalignment: Structural vs Functional",
        "Human focuses on structural aspects (e.g. clarity, visibility) while LLM emphasizes a more functional perspective (e.g. testability)."),
    ("Future vs Present Orientation",
        "Humans often refer to future needs (e.g. extension, scalability) while LLM focuses on immediate operations such as current testing needs."),
    ("Interpretation of Refactoring Scope",
        "Human views refactoring as modular reorganization while LLM sees the operation as an isolated change."),
    ("Semantic vs Syntactic Understanding",
        "Human centres on semantic changes to clarify intentional code statements while LLM refers to class organisation or simple syntactical clarity."),
];

/// Ways an LLM motivation extends a catalogued one.
pub const EXTENSION_CHARACTERISTICS: [&str; 7] = [
    "Enhanced Detail and Precision",
    "Broader Scope",
    "Maintainability and Readability Emphasis",
    "Structural Clarity",
    "Comprehensive Renaming Context",
    "Improved Explanation",
    "Explicit Testing and Flexibility Context",
];

/// Metric columns correlated against each category: every process and
/// product feature of the importance models except the categorical
/// readability level. Names follow the metrics CSV header.
pub const CORRELATION_METRICS: [&str; 41] = [
    "ADD", "ADEV", "AGE", "CBO", "CEXP", "COMM", "COMREAD_val", "DDEV", "DELE", "DIT", "ENTROPY", "EXP",
    "FIX", "HsLCOM", "LA", "LD", "ELOC", "LT", "MINOR", "NADEV", "NCOMM", "NDDEV", "NDEV", "NF", "NOC",
    "NOF", "NOM", "NOPF", "NOPM", "NOSF", "NOSI", "NOSM", "NS", "NSCTR", "NUC", "OEXP", "OWN", "REXP", "RFC",
    "SEXP", "WMC",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{PROCESS_COLUMNS, PRODUCT_COLUMNS};

    #[test]
    fn tables_are_consistent() {
        let total: u64 = AGREEMENT_TABLE.iter().flatten().sum();
        assert_eq!(total, VALIDATED_PAIRS);
        assert_eq!(ALIGNMENT_COUNTS.iter().map(|(_, n)| n).sum::<u64>(), VALIDATED_PAIRS);
        let codes = category_codes();
        assert_eq!(codes.len(), 14);
        assert!(MOTIVATION_CATEGORIES.windows(2).all(|w| w[0].occurrences >= w[1].occurrences));
        assert_eq!(category("ccr").unwrap().occurrences, 119);
        assert_eq!(lookup_category("code  clarity and READABILITY").unwrap().code, "CCR");
        assert_eq!(lookup_category("tph").unwrap().code, "TPH");
        assert!(lookup_category("Readability").is_none());
    }

    #[test]
    fn correlation_metrics_are_known_columns() {
        for m in CORRELATION_METRICS {
            assert!(PROCESS_COLUMNS.contains(&m) || PRODUCT_COLUMNS.contains(&m), "{m}");
        }
        let mut sorted = CORRELATION_METRICS.to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), 41);
    }
}
