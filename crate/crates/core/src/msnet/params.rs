use super::config::MsnetConfig;
use crate::error::{Error, Result};
use crate::numkit::{BatchNorm, Parameter, Tensor};
use crate::rng::Rng;

/// All learnable weights plus the batchnorm running statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct MsnetParams {
    /// `[5 * hidden, s_dim]`, one entry shared by all layers unless
    /// `per_layer_sim` is set.
    pub sim_weight: Vec<Parameter>,
    pub sim_bias: Vec<Parameter>,
    /// Scalar distance weight and bias, shape `[1]`.
    pub dist_weight: Parameter,
    pub dist_bias: Parameter,
    /// `[layers * s_dim + 2, 3]`.
    pub score_weight: Parameter,
    pub score_bias: Parameter,
    pub bn: BatchNorm,
}

fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform_in(-bound, bound)).collect();
    Tensor::from_vec(&[rows, cols], data).expect("shape matches")
}

impl MsnetParams {
    /// Xavier-uniform weights, `w_dist = 0.01`, zero biases, identity batchnorm.
    pub fn init(cfg: &MsnetConfig) -> Result<Self> {
        cfg.validate()?;
        let root = Rng::new(cfg.seed);
        let copies = if cfg.per_layer_sim { cfg.layers } else { 1 };
        let mut sim_rng = root.fork(1);
        let sim_weight = (0..copies)
            .map(|_| Parameter::new(xavier(cfg.sim_input(), cfg.s_dim, &mut sim_rng)))
            .collect();
        let sim_bias = (0..copies).map(|_| Parameter::zeros(&[cfg.s_dim])).collect();
        let mut score_rng = root.fork(2);
        Ok(MsnetParams {
            sim_weight,
            sim_bias,
            dist_weight: Parameter::new(Tensor::vector(vec![0.01])),
            dist_bias: Parameter::zeros(&[1]),
            score_weight: Parameter::new(xavier(cfg.features(), 3, &mut score_rng)),
            score_bias: Parameter::zeros(&[3]),
            bn: BatchNorm::new(cfg.features(), cfg.bn_momentum, cfg.bn_eps)?,
        })
    }

    /// Learnable parameters in a fixed order.
    pub fn params(&self) -> Vec<&Parameter> {
        let mut v: Vec<&Parameter> = self.sim_weight.iter().collect();
        v.extend(self.sim_bias.iter());
        v.extend([
            &self.dist_weight,
            &self.dist_bias,
            &self.score_weight,
            &self.score_bias,
            &self.bn.gamma,
            &self.bn.beta,
        ]);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v: Vec<&mut Parameter> = self.sim_weight.iter_mut().collect();
        v.extend(self.sim_bias.iter_mut());
        v.extend([
            &mut self.dist_weight,
            &mut self.dist_bias,
            &mut self.score_weight,
            &mut self.score_bias,
            &mut self.bn.gamma,
            &mut self.bn.beta,
        ]);
        v
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Parameter::zero_grad);
    }

    pub fn num_values(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.grad.data().iter().copied()).collect()
    }

    pub fn set_flat_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_values() {
            return Err(Error::dim("set_flat_values", self.num_values(), values.len()));
        }
        let mut at = 0;
        for p in self.params_mut() {
            let n = p.len();
            p.value.data_mut().copy_from_slice(&values[at..at + n]);
            at += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.value.is_finite())
            && self.bn.running_mean.is_finite()
            && self.bn.running_var.is_finite()
    }

    /// Check shapes against a config.
    pub fn check(&self, cfg: &MsnetConfig) -> Result<()> {
        let copies = if cfg.per_layer_sim { cfg.layers } else { 1 };
        let ok = self.sim_weight.len() == copies
            && self.sim_bias.len() == copies
            && self.sim_weight.iter().all(|w| w.value.shape() == [cfg.sim_input(), cfg.s_dim])
            && self.sim_bias.iter().all(|b| b.value.shape() == [cfg.s_dim])
            && self.dist_weight.value.shape() == [1]
            && self.dist_bias.value.shape() == [1]
            && self.score_weight.value.shape() == [cfg.features(), 3]
            && self.score_bias.value.shape() == [3]
            && self.bn.features() == cfg.features();
        if ok {
            Ok(())
        } else {
            Err(Error::Config("parameter shapes do not match the model config".into()))
        }
    }
}
