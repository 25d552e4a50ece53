use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` at train time
/// so evaluation is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dropout {
    rate: f64,
}

/// Per-element multipliers saved by a training-mode forward pass. `None`
/// means the pass was the identity.
#[derive(Clone, Debug, Default)]
pub struct DropoutMask(Option<Vec<f64>>);

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} not in [0, 1)")));
        }
        Ok(Dropout { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Draw a mask for `len` elements.
    pub fn sample_mask(&self, len: usize, rng: &mut Rng, training: bool) -> DropoutMask {
        if !training || self.rate == 0.0 {
            return DropoutMask(None);
        }
        let scale = 1.0 / (1.0 - self.rate);
        let mask = (0..len)
            .map(|_| if rng.uniform() < self.rate { 0.0 } else { scale })
            .collect();
        DropoutMask(Some(mask))
    }

    pub fn forward(&self, x: &Tensor, rng: &mut Rng, training: bool) -> (Tensor, DropoutMask) {
        let mask = self.sample_mask(x.len(), rng, training);
        let mut y = x.clone();
        mask.apply_in_place(y.data_mut());
        (y, mask)
    }
}

impl DropoutMask {
    pub fn identity() -> Self {
        DropoutMask(None)
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_none()
    }

    pub fn apply_in_place(&self, values: &mut [f64]) {
        if let Some(m) = &self.0 {
            debug_assert_eq!(m.len(), values.len());
            values.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
        }
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.0.as_ref().map_or(1.0, |m| m[i])
    }

    /// Gradient through the mask: `dx = dy * mask`.
    pub fn backward(&self, dy: &Tensor) -> Tensor {
        let mut dx = dy.clone();
        self.apply_in_place(dx.data_mut());
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_zero_or_eval_is_identity() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.0]);
        let mut rng = Rng::new(1);
        let (y, m) = Dropout::new(0.0).unwrap().forward(&x, &mut rng, true);
        assert_eq!(y, x);
        assert!(m.is_identity());
        let (y, _) = Dropout::new(0.6).unwrap().forward(&x, &mut rng, false);
        assert_eq!(y, x);
    }

    #[test]
    fn rate_one_is_rejected() {
        assert!(matches!(Dropout::new(1.0), Err(Error::Config(_))));
        assert!(Dropout::new(-0.1).is_err());
    }

    #[test]
    fn expectation_is_preserved() {
        // Mean of 1e5 inverted-dropout samples of 1.0 at rate 0.6. Per-element
        // std is sqrt(p/(1-p)) = 1.2247, so 3 sigma at n=1e5 is 0.0116.
        let n = 100_000;
        let x = Tensor::full(&[n], 1.0);
        let mut rng = Rng::new(42);
        let (y, _) = Dropout::new(0.6).unwrap().forward(&x, &mut rng, true);
        let mean = y.data().iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!((mean - 1.0).abs() < 3.0 * (0.6f64 / 0.4).sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn backward_applies_same_mask() {
        let x = Tensor::full(&[64], 2.0);
        let mut rng = Rng::new(3);
        let (y, m) = Dropout::new(0.5).unwrap().forward(&x, &mut rng, true);
        let dx = m.backward(&Tensor::full(&[64], 1.0));
        for (a, b) in y.data().iter().zip(dx.data()) {
            assert_eq!(*a, 2.0 * b);
        }
    }
}
