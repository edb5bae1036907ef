//! Sound-label normalization and fuzzy matching.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

/// Lowercase with internal whitespace collapsed to single spaces.
pub fn normalize_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for word in label.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

pub fn labels_match(a: &str, b: &str) -> bool {
    normalize_label(a) == normalize_label(b)
}

// Light suffix stripping so inflections ("crowing", "crows") meet their stem.
fn stem(word: &str) -> &str {
    if word.len() > 5 && word.ends_with("ing") {
        &word[..word.len() - 3]
    } else if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        &word[..word.len() - 1]
    } else {
        word
    }
}

/// Stemmed token set of a label; punctuation other than `-` splits tokens.
pub fn label_tokens(label: &str) -> BTreeSet<String> {
    normalize_label(label)
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .filter(|w| !w.is_empty())
        .map(|w| String::from(stem(w)))
        .collect()
}

/// Jaccard similarity of the stemmed token sets; 0 when both are empty.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let ta = label_tokens(a);
    let tb = label_tokens(b);
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

/// Best fuzzy candidate at or above `threshold`; ties go to the earliest candidate.
pub fn best_match<'a>(label: &str, candidates: impl IntoIterator<Item = &'a str>, threshold: f64) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for c in candidates {
        let score = token_jaccard(label, c);
        if score >= threshold && best.is_none_or(|(_, s)| score > s) {
            best = Some((c, score));
        }
    }
    best.map(|(c, _)| c)
}

/// Collects the distinct normalized labels, preserving first-seen order.
pub fn dedup_normalized<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    labels
        .into_iter()
        .map(normalize_label)
        .filter(|l| seen.insert(l.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_collapses_case_and_space() {
        assert_eq!(normalize_label("  Dog   BARK\t"), "dog bark");
        assert!(labels_match("dog bark", "Dog  Bark"));
    }

    /// Token-set oracle written out by hand for the catalog used in tests.
    #[test]
    fn jaccard_values() {
        assert_eq!(token_jaccard("rooster crowing", "rooster crow"), 1.0);
        assert_eq!(token_jaccard("dog barking", "dog"), 0.5);
        assert_eq!(token_jaccard("zither glissando", "rain"), 0.0);
        assert!((token_jaccard("heavy rain", "light rain on roof") - 0.2).abs() < 1e-12);
    }

    #[test]
    fn best_match_respects_threshold() {
        let cands = ["rain", "rooster crow", "dog bark"];
        assert_eq!(best_match("rooster crowing", cands, 0.5), Some("rooster crow"));
        assert_eq!(best_match("zither glissando", cands, 0.5), None);
    }
}
