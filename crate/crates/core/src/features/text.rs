//! Signed feature hashing of word unigrams and bigrams.
//!
//! Tokens are maximal runs of ASCII alphanumerics, lowercased. Each unigram
//! and each space-joined bigram is hashed twice with 64-bit FNV-1a: over
//! `"b:" + token` for the bucket (modulo the bucket count) and over
//! `"s:" + token` for the sign (top bit clear gives +1). The summed vector is
//! L2-normalized; text without tokens maps to the zero vector.

use crate::simulator::text::fnv1a64;

use super::TEXT_DIM;

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect()
}

fn prefixed_hash(prefix: &[u8], token: &str) -> u64 {
    let mut buf = Vec::with_capacity(prefix.len() + token.len());
    buf.extend_from_slice(prefix);
    buf.extend_from_slice(token.as_bytes());
    fnv1a64(&buf)
}

pub fn embed_text_buckets(text: &str, buckets: usize) -> Vec<f64> {
    let mut v = vec![0.0; buckets];
    let toks = tokens(text);
    let bigrams = toks.windows(2).map(|w| format!("{} {}", w[0], w[1]));
    for feature in toks.iter().cloned().chain(bigrams) {
        let bucket = (prefixed_hash(b"b:", &feature) % buckets as u64) as usize;
        let sign = if prefixed_hash(b"s:", &feature) >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn embed_text(text: &str) -> Vec<f64> {
    embed_text_buckets(text, TEXT_DIM)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_blank_text() {
        assert_eq!(embed_text(""), vec![0.0; 128]);
        assert_eq!(embed_text("  \t ..."), vec![0.0; 128]);
    }

    // Expected entries produced by a standalone script implementing the same
    // hashing rules (FNV-1a written from its published definition).
    #[test]
    fn matches_reference_oracle() {
        let v = embed_text("help the merchant");
        let a = 0.4472135954999579;
        let expected = [(4, -a), (13, a), (98, a), (109, a), (116, -a)];
        let nonzero: Vec<(usize, f64)> = v.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
        assert_eq!(nonzero.len(), expected.len());
        for ((i, x), (ei, ex)) in nonzero.iter().zip(expected) {
            assert_eq!(*i, ei);
            assert!((x - ex).abs() < 1e-15);
        }
        let b = 0.3779644730092272;
        let v = embed_text("You help the merchant.");
        let expected = [(4, -b), (13, b), (31, b), (52, b), (98, b), (109, b), (116, -b)];
        for (i, x) in expected {
            assert!((v[i] - x).abs() < 1e-15, "bucket {i}");
        }
        let w = embed_text_buckets("help the merchant", 512);
        for (i, x) in [(132, -a), (226, a), (244, -a), (397, a), (493, a)] {
            assert!((w[i] - x).abs() < 1e-15, "bucket {i}");
        }
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        assert_eq!(embed_text("Help the MERCHANT!"), embed_text("help the merchant"));
    }

    proptest! {
        #[test]
        fn unit_norm_for_tokenful_text(words in proptest::collection::vec("[a-z]{1,8}", 1..12)) {
            let text = words.join(" ");
            let v = embed_text(&text);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            // Summed signs can cancel only when every bucket cancels exactly.
            prop_assert!((norm - 1.0).abs() < 1e-9 || norm == 0.0);
            prop_assert_eq!(v, embed_text(&text));
        }
    }
}
