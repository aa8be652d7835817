//! System-call window featurization: relative n-gram frequencies over a
//! fixed, enumerated vocabulary.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Enumerate every n-gram over an alphabet, odometer order (last position
/// varies fastest). With a sorted alphabet the result is lexicographic.
pub fn ngram_vocab<S: AsRef<str>>(alphabet: &[S], n: usize) -> Vec<Vec<String>> {
    if alphabet.is_empty() || n == 0 {
        return Vec::new();
    }
    let mut vocab = vec![Vec::new()];
    for _ in 0..n {
        vocab = vocab
            .into_iter()
            .flat_map(|prefix| {
                alphabet.iter().map(move |sym| {
                    let mut gram = prefix.clone();
                    gram.push(sym.as_ref().to_string());
                    gram
                })
            })
            .collect();
    }
    vocab
}

/// Relative frequency of each vocabulary n-gram within a window of call
/// identifiers. Frequencies are counts over the total number of n-grams in
/// the window (`len - n + 1`), so the components sum to 1 whenever the
/// vocabulary covers every n-gram that occurs; out-of-vocabulary grams
/// still contribute to the denominator.
pub fn syscall_featurize<S: AsRef<str>>(
    window: &[S],
    n: usize,
    vocab: &[Vec<String>],
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::input("n-gram size must be >= 1"));
    }
    if window.is_empty() {
        return Err(Error::input("call window is empty"));
    }
    if window.len() < n {
        return Err(Error::input(format!(
            "call window has {} entries, shorter than n = {n}",
            window.len()
        )));
    }
    if vocab.is_empty() {
        return Err(Error::input("n-gram vocabulary is empty"));
    }
    let mut index: HashMap<Vec<&str>, usize> = HashMap::with_capacity(vocab.len());
    for (i, gram) in vocab.iter().enumerate() {
        if gram.len() != n {
            return Err(Error::input(format!(
                "vocabulary entry {i} has length {}, expected {n}",
                gram.len()
            )));
        }
        let key: Vec<&str> = gram.iter().map(String::as_str).collect();
        if index.insert(key, i).is_some() {
            return Err(Error::input(format!("duplicate vocabulary entry at index {i}")));
        }
    }
    let mut counts = vec![0u64; vocab.len()];
    for gram in window.windows(n) {
        let key: Vec<&str> = gram.iter().map(|s| s.as_ref()).collect();
        if let Some(&i) = index.get(&key) {
            counts[i] += 1;
        }
    }
    let total = (window.len() - n + 1) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(entries: &[&[&str]]) -> Vec<Vec<String>> {
        entries.iter().map(|g| g.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn repeated_call_unigram_is_one_hot() {
        let v = vocab(&[&["open"], &["read"], &["close"]]);
        let out = syscall_featurize(&["read", "read", "read"], 1, &v).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_window_is_input_error() {
        let v = vocab(&[&["a"]]);
        let empty: [&str; 0] = [];
        assert!(syscall_featurize(&empty, 1, &v).is_err());
    }

    #[test]
    fn short_window_is_input_error() {
        let v = vocab(&[&["a", "a"]]);
        assert!(syscall_featurize(&["a"], 2, &v).is_err());
    }

    // Counting oracle: [a,b,a,b,a] has 4 bigrams, 2x "ab" and 2x "ba".
    #[test]
    fn bigram_frequencies() {
        let v = vocab(&[&["a", "b"], &["b", "a"], &["a", "a"], &["b", "b"]]);
        let out = syscall_featurize(&["a", "b", "a", "b", "a"], 2, &v).unwrap();
        assert_eq!(out, vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(out.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn enumerated_vocab_covers_window_so_sum_is_one() {
        let alphabet = ["a", "b", "c"];
        let v = ngram_vocab(&alphabet, 2);
        assert_eq!(v.len(), 9);
        assert_eq!(v[0], vec!["a", "a"]);
        assert_eq!(v[8], vec!["c", "c"]);
        let out = syscall_featurize(&["c", "a", "b", "b", "a", "c"], 2, &v).unwrap();
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocab_grams_lower_the_sum() {
        let v = vocab(&[&["a", "b"]]);
        let out = syscall_featurize(&["a", "b", "z", "a", "b"], 2, &v).unwrap();
        assert_eq!(out, vec![0.5]);
    }

    #[test]
    fn mismatched_vocab_entry_rejected() {
        let v = vocab(&[&["a"], &["a", "b"]]);
        assert!(syscall_featurize(&["a", "b"], 1, &v).is_err());
    }

    #[test]
    fn duplicate_vocab_entry_rejected() {
        let v = vocab(&[&["a"], &["a"]]);
        assert!(syscall_featurize(&["a"], 1, &v).is_err());
    }
}
