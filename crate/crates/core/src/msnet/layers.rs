//! Span representation, similarity and distance-encoding layers.

use std::ops::Range;

use crate::embed_store::EmbeddingSet;
use crate::error::{Error, Result};
use crate::numkit::{affine, Dropout, DropoutMask, Parameter, Tensor};
use crate::rng::Rng;

/// Floor on token norms inside attention scoring.
pub const NORM_FLOOR: f64 = 1e-12;

/// Read access to per-layer token vectors, top layer first.
pub trait TokenVectors: Sync {
    fn layers(&self) -> usize;
    fn tokens(&self) -> usize;
    fn hidden(&self) -> usize;
    /// Write the vector at `(layer, token)` into `out` (length `hidden`).
    fn read(&self, layer: usize, token: usize, out: &mut [f64]);

    fn vector(&self, layer: usize, token: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.hidden()];
        self.read(layer, token, &mut v);
        v
    }
}

impl TokenVectors for EmbeddingSet {
    fn layers(&self) -> usize {
        self.layers
    }

    fn tokens(&self) -> usize {
        self.tokens
    }

    fn hidden(&self) -> usize {
        self.hidden
    }

    fn read(&self, layer: usize, token: usize, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(EmbeddingSet::vector(self, layer, token)) {
            *o = v as f64;
        }
    }
}

/// Token vectors held in `f64`, for tests and gradient checks on inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVectors {
    pub layers: usize,
    pub tokens: usize,
    pub hidden: usize,
    pub data: Vec<f64>,
}

impl DenseVectors {
    pub fn zeros(layers: usize, tokens: usize, hidden: usize) -> Self {
        DenseVectors {
            layers,
            tokens,
            hidden,
            data: vec![0.0; layers * tokens * hidden],
        }
    }

    pub fn from_set(set: &EmbeddingSet) -> Self {
        DenseVectors {
            layers: set.layers,
            tokens: set.tokens,
            hidden: set.hidden,
            data: set.values().iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn index(&self, layer: usize, token: usize) -> usize {
        (layer * self.tokens + token) * self.hidden
    }

    pub fn at_mut(&mut self, layer: usize, token: usize) -> &mut [f64] {
        let i = self.index(layer, token);
        &mut self.data[i..i + self.hidden]
    }
}

impl TokenVectors for DenseVectors {
    fn layers(&self) -> usize {
        self.layers
    }

    fn tokens(&self) -> usize {
        self.tokens
    }

    fn hidden(&self) -> usize {
        self.hidden
    }

    fn read(&self, layer: usize, token: usize, out: &mut [f64]) {
        let i = self.index(layer, token);
        out.copy_from_slice(&self.data[i..i + self.hidden]);
    }
}

fn check_span(emb: &dyn TokenVectors, span: &Range<usize>, layer: usize) -> Result<()> {
    if span.is_empty() {
        return Err(Error::Validation(format!("empty span {span:?}")));
    }
    if span.end > emb.tokens() || layer >= emb.layers() {
        return Err(Error::Validation(format!(
            "span {span:?} at layer {layer} outside {} layers x {} tokens",
            emb.layers(),
            emb.tokens()
        )));
    }
    Ok(())
}

/// Arithmetic mean of the span's token vectors at `layer`.
pub fn span_mean(emb: &dyn TokenVectors, span: Range<usize>, layer: usize) -> Result<Vec<f64>> {
    check_span(emb, &span, layer)?;
    let mut out = vec![0.0; emb.hidden()];
    let mut buf = vec![0.0; emb.hidden()];
    for i in span.clone() {
        emb.read(layer, i, &mut buf);
        out.iter_mut().zip(&buf).for_each(|(o, v)| *o += v);
    }
    let n = span.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    Ok(out)
}

/// Saved state of one attention pooling call.
#[derive(Clone, Debug)]
pub struct AttentionCache {
    /// Token vectors after dropout.
    pub tokens: Vec<Vec<f64>>,
    pub masks: Vec<DropoutMask>,
    /// Unit vectors `x / max(|x|, floor)`.
    pub unit: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub weights: Vec<f64>,
    pub pronoun: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AttentionOutput {
    pub vector: Vec<f64>,
    pub weights: Vec<f64>,
    pub cache: AttentionCache,
}

/// Parameter-free attention pooling of a span against the pronoun vector.
///
/// `score_i = (x_i / |x_i|) . x_p / sqrt(hidden)`, weights are the softmax of
/// the scores over the span, and the output is the weighted sum of the token
/// vectors. In training, `dropout` is applied to each token vector before it
/// enters both the score and the sum.
pub fn span_attn(
    emb: &dyn TokenVectors,
    span: Range<usize>,
    p_index: usize,
    layer: usize,
    dropout: Option<(&Dropout, &mut Rng)>,
) -> Result<AttentionOutput> {
    check_span(emb, &span, layer)?;
    if p_index >= emb.tokens() {
        return Err(Error::Validation(format!("pronoun index {p_index} out of range")));
    }
    let pronoun = emb.vector(layer, p_index);
    let mut tokens: Vec<Vec<f64>> = span.map(|i| emb.vector(layer, i)).collect();
    let mut masks = Vec::with_capacity(tokens.len());
    match dropout {
        Some((d, rng)) => {
            for t in tokens.iter_mut() {
                let m = d.sample_mask(t.len(), rng, true);
                m.apply_in_place(t);
                masks.push(m);
            }
        }
        None => masks.resize(tokens.len(), DropoutMask::identity()),
    }
    Ok(attend(tokens, masks, pronoun))
}

pub(crate) fn attend(tokens: Vec<Vec<f64>>, masks: Vec<DropoutMask>, pronoun: Vec<f64>) -> AttentionOutput {
    let hidden = pronoun.len();
    let scale = 1.0 / (hidden as f64).sqrt();
    let mut unit = Vec::with_capacity(tokens.len());
    let mut norms = Vec::with_capacity(tokens.len());
    let mut scores = Vec::with_capacity(tokens.len());
    for t in &tokens {
        let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_FLOOR);
        let u: Vec<f64> = t.iter().map(|v| v / norm).collect();
        scores.push(scale * dot(&u, &pronoun));
        unit.push(u);
        norms.push(norm);
    }
    let weights = crate::numkit::softmax(&scores).expect("finite scores over a non-empty span");
    let mut vector = vec![0.0; hidden];
    for (w, t) in weights.iter().zip(&tokens) {
        vector.iter_mut().zip(t).for_each(|(o, v)| *o += w * v);
    }
    AttentionOutput {
        vector,
        weights: weights.clone(),
        cache: AttentionCache {
            tokens,
            masks,
            unit,
            norms,
            weights,
            pronoun,
        },
    }
}

/// Backward of attention pooling. Returns gradients with respect to the
/// original (pre-dropout) token vectors and the pronoun vector.
pub fn span_attn_backward(cache: &AttentionCache, dout: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let hidden = cache.pronoun.len();
    let scale = 1.0 / (hidden as f64).sqrt();
    let n = cache.tokens.len();
    // d weight_i = dout . x_i
    let dw: Vec<f64> = cache.tokens.iter().map(|t| dot(dout, t)).collect();
    let avg: f64 = cache.weights.iter().zip(&dw).map(|(a, d)| a * d).sum();
    let mut dp = vec![0.0; hidden];
    let mut dtokens = Vec::with_capacity(n);
    for i in 0..n {
        let a = cache.weights[i];
        let ds = a * (dw[i] - avg);
        let u = &cache.unit[i];
        // through the weighted sum
        let mut dx: Vec<f64> = dout.iter().map(|g| a * g).collect();
        // through the score: s = scale * u . p
        let du: Vec<f64> = cache.pronoun.iter().map(|p| ds * scale * p).collect();
        dp.iter_mut().zip(u).for_each(|(d, uv)| *d += ds * scale * uv);
        let norm = cache.norms[i];
        if norm > NORM_FLOOR {
            let proj = dot(u, &du);
            for k in 0..hidden {
                dx[k] += (du[k] - u[k] * proj) / norm;
            }
        } else {
            for k in 0..hidden {
                dx[k] += du[k] / NORM_FLOOR;
            }
        }
        cache.masks[i].apply_in_place(&mut dx);
        dtokens.push(dx);
    }
    (dtokens, dp)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The similarity-layer input `[p, a, b, a*p, b*p]`.
pub fn similarity_input(p: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let d = p.len();
    if a.len() != d || b.len() != d {
        return Err(Error::dim("similarity_input", d, format!("{}/{}", a.len(), b.len())));
    }
    let mut u = Vec::with_capacity(5 * d);
    u.extend_from_slice(p);
    u.extend_from_slice(a);
    u.extend_from_slice(b);
    u.extend(a.iter().zip(p).map(|(x, y)| x * y));
    u.extend(b.iter().zip(p).map(|(x, y)| x * y));
    Ok(u)
}

/// `s_l = W^T dropout([p, a, b, a*p, b*p]) + bias`.
pub fn similarity_vec(
    p: &[f64],
    a: &[f64],
    b: &[f64],
    weight: &Parameter,
    bias: &Parameter,
    dropout: Option<(&Dropout, &mut Rng)>,
) -> Result<Vec<f64>> {
    let mut u = similarity_input(p, a, b)?;
    if let Some((d, rng)) = dropout {
        d.sample_mask(u.len(), rng, true).apply_in_place(&mut u);
    }
    let x = Tensor::from_vec(&[1, u.len()], u)?;
    Ok(affine(&x, weight, bias)?.into_data())
}

/// Split the gradient of `[p, a, b, a*p, b*p]` into gradients for p, a, b.
pub(crate) fn similarity_input_backward(
    du: &[f64],
    p: &[f64],
    a: &[f64],
    b: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = p.len();
    let (g_p, rest) = du.split_at(d);
    let (g_a, rest) = rest.split_at(d);
    let (g_b, rest) = rest.split_at(d);
    let (g_ap, g_bp) = rest.split_at(d);
    let mut dp = g_p.to_vec();
    let mut da = g_a.to_vec();
    let mut db = g_b.to_vec();
    for k in 0..d {
        dp[k] += g_ap[k] * a[k] + g_bp[k] * b[k];
        da[k] += g_ap[k] * p[k];
        db[k] += g_bp[k] * p[k];
    }
    (dp, da, db)
}

/// `[tanh(w (start_a - start_p) + b), tanh(w (start_b - start_p) + b)]`.
pub fn distance_enc(start_a: usize, start_b: usize, start_p: usize, weight: f64, bias: f64) -> [f64; 2] {
    let da = start_a as f64 - start_p as f64;
    let db = start_b as f64 - start_p as f64;
    [(weight * da + bias).tanh(), (weight * db + bias).tanh()]
}
