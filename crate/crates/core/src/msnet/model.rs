use std::collections::BTreeMap;
use std::ops::Range;

use super::config::MsnetConfig;
use super::layers::{
    distance_enc, similarity_input, similarity_input_backward, span_attn, span_attn_backward, span_mean, AttentionCache,
    TokenVectors,
};
use super::params::MsnetParams;
use super::SpanMethod;
use crate::error::{Error, Result};
use crate::numkit::{
    affine, affine_backward, grad_check_with, softmax_rows, softmax_xent, BatchNormCache, Dropout, DropoutMask,
    FdScheme, GradCheckReport, Tensor,
};
use crate::rng::Rng;
use crate::tokenizer::TokenizedDoc;

/// One resolved example: embeddings plus finalized token positions.
#[derive(Clone)]
pub struct ExampleInput<'a> {
    pub embeddings: &'a dyn TokenVectors,
    pub p_index: usize,
    pub a_span: Range<usize>,
    pub b_span: Range<usize>,
}

impl<'a> ExampleInput<'a> {
    pub fn new(embeddings: &'a dyn TokenVectors, p_index: usize, a_span: Range<usize>, b_span: Range<usize>) -> Self {
        ExampleInput {
            embeddings,
            p_index,
            a_span,
            b_span,
        }
    }

    pub fn from_doc(doc: &TokenizedDoc, embeddings: &'a dyn TokenVectors) -> Result<Self> {
        if embeddings.tokens() != doc.len() {
            return Err(Error::Alignment(format!(
                "doc {:?}: {} tokens but embeddings hold {}",
                doc.id,
                doc.len(),
                embeddings.tokens()
            )));
        }
        Ok(ExampleInput::new(embeddings, doc.p_index, doc.a_span.clone(), doc.b_span.clone()))
    }

    pub fn validate(&self, cfg: &MsnetConfig) -> Result<()> {
        let e = self.embeddings;
        if e.layers() < cfg.layers {
            return Err(Error::Config(format!(
                "model uses {} layers but embeddings hold {}",
                cfg.layers,
                e.layers()
            )));
        }
        if e.hidden() != cfg.hidden {
            return Err(Error::Config(format!(
                "model hidden size {} but embeddings have {}",
                cfg.hidden,
                e.hidden()
            )));
        }
        let n = e.tokens();
        for (name, span) in [("A", &self.a_span), ("B", &self.b_span)] {
            if span.is_empty() || span.end > n {
                return Err(Error::Validation(format!("span {name} {span:?} invalid for {n} tokens")));
            }
        }
        if self.p_index >= n {
            return Err(Error::Validation(format!("pronoun index {} out of range for {n} tokens", self.p_index)));
        }
        Ok(())
    }

    /// The same example with the two candidates exchanged.
    pub fn swapped(&self) -> Self {
        ExampleInput::new(self.embeddings, self.p_index, self.b_span.clone(), self.a_span.clone())
    }
}

#[derive(Clone, Debug)]
enum SpanCache {
    Mean(Range<usize>),
    Attention(AttentionCache, Range<usize>),
}

#[derive(Clone, Debug)]
struct LayerCache {
    p: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    a_span: SpanCache,
    b_span: SpanCache,
    sim_mask: DropoutMask,
}

#[derive(Clone, Debug)]
struct ExampleCache {
    layers: Vec<LayerCache>,
    offsets: [f64; 2],
    dist: [f64; 2],
    p_index: usize,
}

/// Saved state of a training-mode batch forward pass.
#[derive(Clone, Debug)]
pub struct BatchCache {
    examples: Vec<ExampleCache>,
    /// Per layer, the dropped-out similarity inputs `[batch, 5 * hidden]`.
    sim_inputs: Vec<Tensor>,
    bn: BatchNormCache,
    score_masks: Vec<DropoutMask>,
    score_inputs: Tensor,
}

/// Scores and probabilities for a batch, rows in class order (A, B, NEITHER).
#[derive(Clone, Debug)]
pub struct BatchForward {
    pub scores: Tensor,
    pub probs: Tensor,
    cache: Option<BatchCache>,
}

impl BatchForward {
    pub fn is_training(&self) -> bool {
        self.cache.is_some()
    }
}

/// Gradient with respect to the token vectors an example touched, keyed by
/// `(layer, token)`.
pub type InputGrads = BTreeMap<(usize, usize), Vec<f64>>;

struct Encoded {
    /// Per layer, the similarity input after dropout.
    sim_inputs: Vec<Vec<f64>>,
    cache: ExampleCache,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Msnet {
    pub config: MsnetConfig,
    pub params: MsnetParams,
}

impl Msnet {
    pub fn new(config: MsnetConfig) -> Result<Self> {
        let params = MsnetParams::init(&config)?;
        Ok(Msnet { config, params })
    }

    pub fn from_parts(config: MsnetConfig, params: MsnetParams) -> Result<Self> {
        config.validate()?;
        params.check(&config)?;
        Ok(Msnet { config, params })
    }

    fn sim_index(&self, layer: usize) -> usize {
        if self.config.per_layer_sim {
            layer
        } else {
            0
        }
    }

    fn pool(
        &self,
        ex: &ExampleInput,
        span: &Range<usize>,
        layer: usize,
        rng: Option<&mut Rng>,
    ) -> Result<(Vec<f64>, SpanCache)> {
        match self.config.span_method {
            SpanMethod::Meanpool => Ok((span_mean(ex.embeddings, span.clone(), layer)?, SpanCache::Mean(span.clone()))),
            SpanMethod::Attention => {
                let drop = Dropout::new(self.config.dropout_attn_tokens)?;
                let out = span_attn(ex.embeddings, span.clone(), ex.p_index, layer, rng.map(|r| (&drop, r)))?;
                Ok((out.vector, SpanCache::Attention(out.cache, span.clone())))
            }
        }
    }

    fn encode(&self, ex: &ExampleInput, mut rng: Option<&mut Rng>) -> Result<Encoded> {
        ex.validate(&self.config)?;
        let sim_drop = Dropout::new(self.config.dropout_sim)?;
        let mut sim_inputs = Vec::with_capacity(self.config.layers);
        let mut layers = Vec::with_capacity(self.config.layers);
        for l in 0..self.config.layers {
            let p = ex.embeddings.vector(l, ex.p_index);
            let (a, a_span) = self.pool(ex, &ex.a_span, l, rng.as_deref_mut())?;
            let (b, b_span) = self.pool(ex, &ex.b_span, l, rng.as_deref_mut())?;
            let mut u = similarity_input(&p, &a, &b)?;
            let sim_mask = match rng.as_deref_mut() {
                Some(r) => sim_drop.sample_mask(u.len(), r, true),
                None => DropoutMask::identity(),
            };
            sim_mask.apply_in_place(&mut u);
            sim_inputs.push(u);
            layers.push(LayerCache {
                p,
                a,
                b,
                a_span,
                b_span,
                sim_mask,
            });
        }
        let (w, b) = (self.params.dist_weight.value.data()[0], self.params.dist_bias.value.data()[0]);
        let dist = distance_enc(ex.a_span.start, ex.b_span.start, ex.p_index, w, b);
        let offsets = [
            ex.a_span.start as f64 - ex.p_index as f64,
            ex.b_span.start as f64 - ex.p_index as f64,
        ];
        Ok(Encoded {
            sim_inputs,
            cache: ExampleCache {
                layers,
                offsets,
                dist,
                p_index: ex.p_index,
            },
        })
    }

    /// Assemble `z = [s_0 .. s_{L-1}, d_a, d_b]` for every example.
    fn features(&self, encoded: &[Encoded]) -> Result<(Tensor, Vec<Tensor>)> {
        let n = encoded.len();
        let (layers, s_dim) = (self.config.layers, self.config.s_dim);
        let mut z = Tensor::zeros(&[n, self.config.features()]);
        let mut per_layer = Vec::with_capacity(layers);
        for l in 0..layers {
            let rows: Vec<Vec<f64>> = encoded.iter().map(|e| e.sim_inputs[l].clone()).collect();
            let u = Tensor::from_rows(&rows)?;
            let k = self.sim_index(l);
            let s = affine(&u, &self.params.sim_weight[k], &self.params.sim_bias[k])?;
            for i in 0..n {
                z.row_mut(i)[l * s_dim..(l + 1) * s_dim].copy_from_slice(s.row(i));
            }
            per_layer.push(u);
        }
        for (i, e) in encoded.iter().enumerate() {
            let f = self.config.features();
            z.row_mut(i)[f - 2..].copy_from_slice(&e.cache.dist);
        }
        Ok((z, per_layer))
    }

    /// Eval-mode forward over a batch. Pure in `(examples, params)`.
    pub fn forward_eval(&self, examples: &[ExampleInput]) -> Result<BatchForward> {
        let encoded = examples.iter().map(|ex| self.encode(ex, None)).collect::<Result<Vec<_>>>()?;
        let (z, _) = self.features(&encoded)?;
        let y = self.params.bn.forward_eval(&z)?;
        let scores = affine(&y, &self.params.score_weight, &self.params.score_bias)?;
        let probs = softmax_rows(&scores)?;
        Ok(BatchForward {
            scores,
            probs,
            cache: None,
        })
    }

    /// Eval-mode scores and probabilities for one example.
    pub fn forward_example(&self, ex: &ExampleInput) -> Result<([f64; 3], [f64; 3])> {
        let out = self.forward_eval(std::slice::from_ref(ex))?;
        let s = out.scores.row(0);
        let p = out.probs.row(0);
        Ok(([s[0], s[1], s[2]], [p[0], p[1], p[2]]))
    }

    /// Training-mode forward: dropout masks are drawn from `rng` and the
    /// batchnorm running statistics are updated.
    pub fn forward_train(&mut self, examples: &[ExampleInput], rng: &mut Rng) -> Result<BatchForward> {
        let encoded = examples
            .iter()
            .map(|ex| self.encode(ex, Some(&mut *rng)))
            .collect::<Result<Vec<_>>>()?;
        let (z, sim_inputs) = self.features(&encoded)?;
        let (mut y, bn) = self.params.bn.forward_train(&z)?;
        let score_drop = Dropout::new(self.config.dropout_score)?;
        let mut score_masks = Vec::with_capacity(examples.len());
        for i in 0..examples.len() {
            let m = score_drop.sample_mask(y.cols(), rng, true);
            m.apply_in_place(y.row_mut(i));
            score_masks.push(m);
        }
        let scores = affine(&y, &self.params.score_weight, &self.params.score_bias)?;
        let probs = softmax_rows(&scores)?;
        Ok(BatchForward {
            scores,
            probs,
            cache: Some(BatchCache {
                examples: encoded.into_iter().map(|e| e.cache).collect(),
                sim_inputs,
                bn,
                score_masks,
                score_inputs: y,
            }),
        })
    }

    /// Backward from `dscores` (`[batch, 3]`). Accumulates parameter
    /// gradients; when `want_inputs` is set also returns per-example
    /// gradients with respect to the token vectors.
    pub fn backward(
        &mut self,
        forward: &BatchForward,
        dscores: &Tensor,
        want_inputs: bool,
    ) -> Result<Option<Vec<InputGrads>>> {
        let cache = forward
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage("backward needs a training-mode forward pass".into()))?;
        let n = cache.examples.len();
        if dscores.shape() != [n, 3] {
            return Err(Error::dim("backward", format!("[{n}, 3]"), format!("{:?}", dscores.shape())));
        }
        let p = &mut self.params;
        let mut dy = affine_backward(&cache.score_inputs, dscores, &mut p.score_weight, &mut p.score_bias)?;
        for (i, m) in cache.score_masks.iter().enumerate() {
            m.apply_in_place(dy.row_mut(i));
        }
        let dz = p.bn.backward(&cache.bn, &dy)?;

        let (layers, s_dim, f) = (self.config.layers, self.config.s_dim, self.config.features());
        let per_layer = self.config.per_layer_sim;
        let mut inputs: Vec<InputGrads> = if want_inputs { vec![BTreeMap::new(); n] } else { Vec::new() };

        // distance encoding
        {
            let (mut gw, mut gb) = (0.0, 0.0);
            for (i, ex) in cache.examples.iter().enumerate() {
                for j in 0..2 {
                    let g = dz.at(i, f - 2 + j) * (1.0 - ex.dist[j] * ex.dist[j]);
                    gw += g * ex.offsets[j];
                    gb += g;
                }
            }
            p.dist_weight.grad.data_mut()[0] += gw;
            p.dist_bias.grad.data_mut()[0] += gb;
        }

        for l in 0..layers {
            let mut ds = Tensor::zeros(&[n, s_dim]);
            for i in 0..n {
                ds.row_mut(i).copy_from_slice(&dz.row(i)[l * s_dim..(l + 1) * s_dim]);
            }
            let k = if per_layer { l } else { 0 };
            let du = affine_backward(&cache.sim_inputs[l], &ds, &mut p.sim_weight[k], &mut p.sim_bias[k])?;
            if !want_inputs {
                continue;
            }
            for (i, ex) in cache.examples.iter().enumerate() {
                let lc = &ex.layers[l];
                let mut g = du.row(i).to_vec();
                lc.sim_mask.apply_in_place(&mut g);
                let (dp, da, db) = similarity_input_backward(&g, &lc.p, &lc.a, &lc.b);
                let grads = &mut inputs[i];
                add_grad(grads, l, ex.p_index, &dp);
                for (span, d) in [(&lc.a_span, &da), (&lc.b_span, &db)] {
                    match span {
                        SpanCache::Mean(r) => {
                            let scaled: Vec<f64> = d.iter().map(|v| v / r.len() as f64).collect();
                            for t in r.clone() {
                                add_grad(grads, l, t, &scaled);
                            }
                        }
                        SpanCache::Attention(c, r) => {
                            let (dt, dpron) = span_attn_backward(c, d);
                            for (t, dv) in r.clone().zip(&dt) {
                                add_grad(grads, l, t, dv);
                            }
                            add_grad(grads, l, ex.p_index, &dpron);
                        }
                    }
                }
            }
        }
        Ok(want_inputs.then_some(inputs))
    }

    /// Zero gradients, run a training forward and backward, return the mean
    /// cross-entropy of the batch.
    pub fn train_step_grads(&mut self, examples: &[ExampleInput], labels: &[usize], rng: &mut Rng) -> Result<f64> {
        self.params.zero_grad();
        let fwd = self.forward_train(examples, rng)?;
        let (loss, dscores) = softmax_xent(&fwd.scores, labels)?;
        self.backward(&fwd, &dscores, false)?;
        Ok(loss)
    }

    /// Training-mode mean cross-entropy without touching `self`.
    pub fn train_loss(&self, examples: &[ExampleInput], labels: &[usize], seed: u64) -> Result<f64> {
        let mut scratch = self.clone();
        let fwd = scratch.forward_train(examples, &mut Rng::new(seed))?;
        Ok(softmax_xent(&fwd.scores, labels)?.0)
    }

    /// Compare the analytic parameter gradient of the training loss with
    /// central finite differences. Dropout draws use `seed` on every
    /// evaluation, so the check is meaningful with dropout on as well.
    pub fn grad_check(
        &self,
        examples: &[ExampleInput],
        labels: &[usize],
        seed: u64,
        scheme: FdScheme,
    ) -> Result<GradCheckReport> {
        let mut model = self.clone();
        model.train_step_grads(examples, labels, &mut Rng::new(seed))?;
        let analytic = model.params.flat_grads();
        let point = self.params.flat_values();
        let mut probe = self.clone();
        grad_check_with(
            &point,
            &analytic,
            |values| {
                probe.params.set_flat_values(values)?;
                probe.train_loss(examples, labels, seed)
            },
            scheme,
        )
    }
}

fn add_grad(grads: &mut InputGrads, layer: usize, token: usize, g: &[f64]) {
    let entry = grads.entry((layer, token)).or_insert_with(|| vec![0.0; g.len()]);
    entry.iter_mut().zip(g).for_each(|(e, v)| *e += v);
}
