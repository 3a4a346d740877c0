use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference and hypothesis gloss sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptPair {
    pub reference: Vec<String>,
    pub hypothesis: Vec<String>,
}

impl TranscriptPair {
    /// Splits both strings on whitespace.
    pub fn from_text(reference: &str, hypothesis: &str) -> Self {
        let split = |s: &str| s.split_whitespace().map(str::to_string).collect();
        Self {
            reference: split(reference),
            hypothesis: split(hypothesis),
        }
    }

    fn check(&self) -> Result<()> {
        if self.reference.is_empty() {
            return Err(Error::InvalidInput("reference transcript is empty".into()));
        }
        Ok(())
    }
}

/// Unit-cost edit distance, two rows of the usual table.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Token edit distance over reference length.
pub fn wer(pair: &TranscriptPair) -> Result<f64> {
    pair.check()?;
    Ok(levenshtein(&pair.reference, &pair.hypothesis) as f64 / pair.reference.len() as f64)
}

/// Character edit distance of the space-joined strings over reference length.
pub fn cer(pair: &TranscriptPair) -> Result<f64> {
    pair.check()?;
    let r: Vec<char> = pair.reference.join(" ").chars().collect();
    let h: Vec<char> = pair.hypothesis.join(" ").chars().collect();
    Ok(levenshtein(&r, &h) as f64 / r.len() as f64)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for g in tokens.windows(n) {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

/// Sentence BLEU: geometric mean of clipped n-gram precisions for
/// `n = 1..=min(4, hyp_len)`, uniform weights, times the brevity penalty
/// `exp(1 - ref_len / hyp_len)` when the hypothesis is shorter. An empty
/// hypothesis scores 0.
pub fn bleu(pair: &TranscriptPair) -> Result<f64> {
    pair.check()?;
    let (r, h) = (&pair.reference, &pair.hypothesis);
    if h.is_empty() {
        return Ok(0.0);
    }
    let max_n = h.len().min(4);
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let refs = ngram_counts(r, n);
        let matched: usize = ngram_counts(h, n)
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        if matched == 0 {
            return Ok(0.0);
        }
        log_sum += (matched as f64 / (h.len() - n + 1) as f64).ln();
    }
    let bp = if h.len() < r.len() {
        (1.0 - r.len() as f64 / h.len() as f64).exp()
    } else {
        1.0
    };
    Ok(bp * (log_sum / max_n as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(r: &str, h: &str) -> TranscriptPair {
        TranscriptPair::from_text(r, h)
    }

    #[test]
    fn wer_cases() {
        assert_eq!(wer(&pair("a b c", "a b c")).unwrap(), 0.0);
        assert!((wer(&pair("a b c", "a x c")).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(wer(&pair("a b c", "")).unwrap(), 1.0);
        assert!(wer(&pair("", "a")).is_err());
    }

    #[test]
    fn cer_counts_characters() {
        // "HELP ME" vs "HELD ME": one substitution in 7 characters
        assert!((cer(&pair("HELP ME", "HELD ME")).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(cer(&pair("HELLO", "HELLO")).unwrap(), 0.0);
    }

    #[test]
    fn bleu_cases() {
        assert_eq!(bleu(&pair("a b c d e", "a b c d e")).unwrap(), 1.0);
        assert_eq!(bleu(&pair("a b c", "x y z")).unwrap(), 0.0);
        assert_eq!(bleu(&pair("a b c", "")).unwrap(), 0.0);
        // unigrams 2/2, bigrams 1/1, brevity exp(1 - 3/2)
        let b = bleu(&pair("the cat sat", "the cat")).unwrap();
        assert!((b - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn bleu_clips_repeated_tokens() {
        // "the the the" against "the cat": unigram matches clipped to 1 of 3
        let b = bleu(&pair("the cat", "the the the")).unwrap();
        assert_eq!(b, 0.0); // no bigram overlap
        let b = bleu(&pair("the cat", "the")).unwrap();
        assert!((b - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein::<u8>(b"", b"abc"), 3);
        assert_eq!(levenshtein(b"abc", b""), 3);
    }
}
