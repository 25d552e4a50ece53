use super::tensor::{Parameter, Tensor};
use crate::error::{Error, Result};

pub const DEFAULT_MOMENTUM: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 1e-5;

/// Per-feature batch normalization over a `[batch, features]` input.
///
/// Running statistics follow `running = (1 - momentum) * running + momentum * batch_stat`;
/// the running variance tracks the unbiased (n - 1) batch variance while the
/// training-mode normalization uses the biased one.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Parameter,
    pub beta: Parameter,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub eps: f64,
}

/// Values saved by a training-mode forward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache {
    normalized: Tensor,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(features: usize, momentum: f64, eps: f64) -> Result<Self> {
        if !(momentum > 0.0 && momentum < 1.0) {
            return Err(Error::Config(format!("batchnorm momentum {momentum} not in (0, 1)")));
        }
        if eps <= 0.0 || !eps.is_finite() {
            return Err(Error::Config(format!("batchnorm eps {eps} must be positive")));
        }
        Ok(BatchNorm {
            gamma: Parameter::new(Tensor::full(&[features], 1.0)),
            beta: Parameter::zeros(&[features]),
            running_mean: Tensor::zeros(&[features]),
            running_var: Tensor::full(&[features], 1.0),
            momentum,
            eps,
        })
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize)> {
        let (n, f) = x.expect_rank2("batchnorm")?;
        if f != self.features() {
            return Err(Error::dim("batchnorm", self.features(), f));
        }
        Ok((n, f))
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, BatchNormCache)> {
        let (n, f) = self.check_input(x)?;
        if n < 2 {
            return Err(Error::Validation(
                "batchnorm in training mode needs a batch of at least 2".into(),
            ));
        }
        let nf = n as f64;
        let mut mean = vec![0.0; f];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![0.0; f];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= nf);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();

        let mut normalized = Tensor::zeros(&[n, f]);
        let mut y = Tensor::zeros(&[n, f]);
        let (g, b) = (self.gamma.value.data(), self.beta.value.data());
        for i in 0..n {
            let xi = x.row(i);
            let hi = normalized.row_mut(i);
            for j in 0..f {
                hi[j] = (xi[j] - mean[j]) * inv_std[j];
            }
            let yi = y.row_mut(i);
            for j in 0..f {
                yi[j] = g[j] * normalized.row(i)[j] + b[j];
            }
        }

        let m = self.momentum;
        let unbias = nf / (nf - 1.0);
        for j in 0..f {
            let rm = &mut self.running_mean.data_mut()[j];
            *rm = (1.0 - m) * *rm + m * mean[j];
            let rv = &mut self.running_var.data_mut()[j];
            *rv = (1.0 - m) * *rv + m * var[j] * unbias;
        }
        Ok((y, BatchNormCache { normalized, inv_std }))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        let (n, f) = self.check_input(x)?;
        let mut y = Tensor::zeros(&[n, f]);
        let (g, b) = (self.gamma.value.data(), self.beta.value.data());
        let (rm, rv) = (self.running_mean.data(), self.running_var.data());
        for i in 0..n {
            let xi = x.row(i);
            let yi = y.row_mut(i);
            for j in 0..f {
                yi[j] = g[j] * (xi[j] - rm[j]) / (rv[j] + self.eps).sqrt() + b[j];
            }
        }
        Ok(y)
    }

    /// Accumulates gamma/beta gradients and returns the input gradient.
    pub fn backward(&mut self, cache: &BatchNormCache, dy: &Tensor) -> Result<Tensor> {
        let (n, f) = dy.expect_rank2("batchnorm_backward")?;
        if cache.normalized.shape() != dy.shape() {
            return Err(Error::dim(
                "batchnorm_backward",
                format!("{:?}", cache.normalized.shape()),
                format!("{:?}", dy.shape()),
            ));
        }
        let nf = n as f64;
        let g = self.gamma.value.data().to_vec();
        let mut sum_dh = vec![0.0; f];
        let mut sum_dh_h = vec![0.0; f];
        {
            let gg = self.gamma.grad.data_mut();
            for i in 0..n {
                let (dyi, hi) = (dy.row(i), cache.normalized.row(i));
                for j in 0..f {
                    gg[j] += dyi[j] * hi[j];
                    let dh = dyi[j] * g[j];
                    sum_dh[j] += dh;
                    sum_dh_h[j] += dh * hi[j];
                }
            }
        }
        {
            let gb = self.beta.grad.data_mut();
            for i in 0..n {
                for (b, d) in gb.iter_mut().zip(dy.row(i)) {
                    *b += d;
                }
            }
        }
        let mut dx = Tensor::zeros(&[n, f]);
        for i in 0..n {
            let (dyi, hi) = (dy.row(i), cache.normalized.row(i));
            let dxi = dx.row_mut(i);
            for j in 0..f {
                let dh = dyi[j] * g[j];
                dxi[j] = cache.inv_std[j] / nf * (nf * dh - sum_dh[j] - hi[j] * sum_dh_h[j]);
            }
        }
        Ok(dx)
    }
}
