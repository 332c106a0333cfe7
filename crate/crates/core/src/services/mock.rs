//! Deterministic offline stand-ins for the remote services.

use std::sync::Arc;

use super::{JudgeClient, RewriteClient, ServiceError};
use crate::error::Result;
use crate::metrics::keywords::{normalize, yes_no_polarity, KeywordRuleSet};
use crate::mirror::{swap_directions, DirectionalLexicon};
use crate::rewards::SimilarityProvider;

pub const TRIGRAM_DIM: usize = 256;

/// Hashed character-trigram counts, L2-normalized.
///
/// Text is lowercased and padded with two spaces on each side, so every
/// input (including the empty string) has at least one trigram.
#[derive(Debug, Clone)]
pub struct TrigramEmbedder {
    dim: usize,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        TrigramEmbedder { dim: TRIGRAM_DIM }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl TrigramEmbedder {
    pub fn with_dim(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        TrigramEmbedder { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let padded: Vec<char> = format!("  {}  ", text.to_lowercase()).chars().collect();
        let mut v = vec![0.0; self.dim];
        let mut buf = [0u8; 12];
        for w in padded.windows(3) {
            let mut n = 0;
            for c in w {
                n += c.encode_utf8(&mut buf[n..]).len();
            }
            v[(fnv1a(&buf[..n]) % self.dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

impl SimilarityProvider for TrigramEmbedder {
    fn provider_id(&self) -> &str {
        "mock:trigram-256"
    }

    fn embed(&self, text: &str) -> Result<Arc<Vec<f64>>> {
        Ok(Arc::new(self.vector(text)))
    }
}

/// Alias-normalized equality: answers with a yes/no polarity compare by
/// polarity, everything else by normalized text.
#[derive(Debug, Clone, Default)]
pub struct MockJudge {
    rules: KeywordRuleSet,
}

fn squash(text: &str) -> String {
    normalize(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

impl MockJudge {
    pub fn new(rules: KeywordRuleSet) -> Self {
        MockJudge { rules }
    }
}

impl JudgeClient for MockJudge {
    fn judge(&self, pred: &str, gt: &str) -> std::result::Result<bool, ServiceError> {
        match (yes_no_polarity(pred, &self.rules), yes_no_polarity(gt, &self.rules)) {
            (Some(p), Some(g)) => Ok(p == g),
            _ => Ok(squash(pred) == squash(gt)),
        }
    }
}

/// Swaps directional terms with the rule-based lexicon.
#[derive(Debug, Clone, Default)]
pub struct MockRewriter {
    lexicon: DirectionalLexicon,
}

impl MockRewriter {
    pub fn new(lexicon: DirectionalLexicon) -> Self {
        MockRewriter { lexicon }
    }
}

impl RewriteClient for MockRewriter {
    fn rewrite(&self, question: &str, answer: &str) -> std::result::Result<(String, String), ServiceError> {
        Ok((swap_directions(question, &self.lexicon), swap_directions(answer, &self.lexicon)))
    }
}
