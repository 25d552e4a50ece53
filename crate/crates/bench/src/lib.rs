//! Benchmark fixtures.

use std::ops::Range;

use msnet_core::msnet::DenseVectors;
use msnet_core::rng::Rng;

/// A random document with its pronoun index and two candidate spans.
pub struct Doc {
    pub vectors: DenseVectors,
    pub p_index: usize,
    pub a_span: Range<usize>,
    pub b_span: Range<usize>,
}

/// `n` random documents of `tokens` tokens, spans of up to four tokens.
pub fn random_docs(n: usize, layers: usize, tokens: usize, hidden: usize, seed: u64) -> Vec<Doc> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let mut vectors = DenseVectors::zeros(layers, tokens, hidden);
            vectors.data.iter_mut().for_each(|v| *v = rng.uniform_in(-1.0, 1.0));
            let span = |rng: &mut Rng| {
                let start = 1 + rng.below(tokens - 5);
                start..start + 1 + rng.below(4)
            };
            let a_span = span(&mut rng);
            let b_span = span(&mut rng);
            Doc {
                vectors,
                p_index: 1 + rng.below(tokens - 2),
                a_span,
                b_span,
            }
        })
        .collect()
}
