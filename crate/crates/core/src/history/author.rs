use super::HistoryError;

/// Email-dominant identity key: the lowercased, trimmed email when present,
/// otherwise the lowercased, trimmed name. No alias merging.
pub fn normalize_author(name: &str, email: &str) -> Result<String, HistoryError> {
    let email = email.trim();
    if !email.is_empty() {
        return Ok(email.to_lowercase());
    }
    let name = name.trim();
    if !name.is_empty() {
        return Ok(name.to_lowercase());
    }
    Err(HistoryError::EmptyIdentity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn email_dominates() {
        assert_eq!(normalize_author("Jane Doe", "Jane@X.COM").unwrap(), "jane@x.com");
        assert_eq!(
            normalize_author("A", "a@x.com").unwrap(),
            normalize_author("B", "A@X.com").unwrap()
        );
    }

    #[test]
    fn falls_back_to_name() {
        assert_eq!(normalize_author("jane", "").unwrap(), "jane");
        assert_eq!(normalize_author("  Jane ", "   ").unwrap(), "jane");
    }

    #[test]
    fn blank_identity_is_rejected() {
        assert!(matches!(normalize_author(" ", ""), Err(HistoryError::EmptyIdentity)));
    }
}
