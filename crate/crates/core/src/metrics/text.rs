use std::collections::HashMap;

use unicode_normalization::UnicodeNormalization;

/// NFC-normalizes, lowercases, and collapses whitespace runs to one space.
pub fn normalize_text(s: &str) -> String {
    let folded: String = s.nfc().collect::<String>().to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Token-level F1 between two operation strings.
///
/// Tokens are whitespace-separated after lowercasing; overlap counts shared
/// tokens as a multiset. Two empty strings score 1, one empty string 0.
pub fn token_f1(pred: &str, reference: &str) -> f64 {
    let pred = pred.to_lowercase();
    let reference = reference.to_lowercase();
    let p: Vec<&str> = pred.split_whitespace().collect();
    let r: Vec<&str> = reference.split_whitespace().collect();
    match (p.is_empty(), r.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &r {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    // 2PR/(P+R) with P = o/|p| and R = o/|r| reduces to 2o/(|p|+|r|).
    2.0 * overlap as f64 / (p.len() + r.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_examples() {
        assert_eq!(token_f1("click", "click"), 1.0);
        assert!((token_f1("type hello world", "type hello there") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(token_f1("select a", "click b"), 0.0);
        assert_eq!(token_f1("", "  "), 1.0);
        assert_eq!(token_f1("", "click"), 0.0);
        assert_eq!(token_f1("Type A a", "type a"), 0.8);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_text("Hello "), "hello");
        assert_eq!(normalize_text("  New\t York\n"), "new york");
        // Decomposed e + combining acute composes to the precomposed form.
        assert_eq!(normalize_text("Cafe\u{301}"), normalize_text("caf\u{e9}"));
    }
}
