//! Seeded synthetic corpora for offline tests and demos.
//!
//! Vishing and benign documents draw from disjoint vocabulary pools, so the
//! classes are linearly separable in any bag-of-words feature space.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, Label, Transcript};

const VISHING_POOL: &[&str] = &[
    "account", "verify", "transfer", "urgent", "prosecutor", "refund", "warrant", "deposit",
    "password", "security", "freeze", "violation", "investigation", "immediately", "suspend",
    "identity", "court", "penalty", "wire", "confirm",
];

const BENIGN_POOL: &[&str] = &[
    "weather", "lunch", "weekend", "movie", "garden", "coffee", "holiday", "recipe", "soccer",
    "birthday", "museum", "concert", "travel", "painting", "library", "picnic", "novel",
    "bicycle", "hiking", "dinner",
];

/// Options for [`generate`].
#[derive(Debug, Clone, Copy)]
pub struct SyntheticOpts {
    /// Tokens per document.
    pub doc_len: usize,
}

impl Default for SyntheticOpts {
    fn default() -> Self {
        SyntheticOpts { doc_len: 12 }
    }
}

/// Generates a balanced corpus of `n` transcripts (alternating labels),
/// deterministic in `seed`.
///
/// The first two tokens of every document are the class pool's anchor words
/// (scam scripts repeat their core phrases), so any bag-of-words learner has
/// an exact separating feature; the rest of the document is sampled from the
/// class pool.
pub fn generate(n: usize, seed: u64, opts: SyntheticOpts) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcripts = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Vishing } else { Label::Benign };
        let pool = match label {
            Label::Vishing => VISHING_POOL,
            Label::Benign => BENIGN_POOL,
        };
        let len = opts.doc_len.max(3);
        let mut words: Vec<&str> = vec![pool[0], pool[1]];
        words.extend((0..len - 2).map(|_| pool[rng.gen_range(0..pool.len())]));
        transcripts.push(Transcript::new(format!("syn-{i:04}"), words.join(" "), label));
    }
    Corpus::new(transcripts).expect("generated ids are unique and texts non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_balanced() {
        let a = generate(40, 5, SyntheticOpts::default());
        let b = generate(40, 5, SyntheticOpts::default());
        assert_eq!(a, b);
        let counts = a.class_counts();
        assert_eq!(counts[&Label::Vishing], 20);
        assert_eq!(counts[&Label::Benign], 20);
    }

    #[test]
    fn pools_are_disjoint() {
        for w in VISHING_POOL {
            assert!(!BENIGN_POOL.contains(w));
        }
    }
}
