//! Differentiable primitives. Each forward has a matching backward that
//! takes the upstream gradient and returns (or accumulates) the exact
//! local gradients.

use super::tensor::{Parameter, Tensor};
use crate::error::{Error, Result};

/// `out[i, j] = sum_k x[i, k] * w[k, j] + b[j]`.
pub fn affine(x: &Tensor, w: &Parameter, b: &Parameter) -> Result<Tensor> {
    affine_values(x, &w.value, &b.value)
}

pub(crate) fn affine_values(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (batch, inp) = x.expect_rank2("affine")?;
    let (w_in, out) = w.expect_rank2("affine")?;
    if w_in != inp {
        return Err(Error::dim("affine", format!("W rows = {inp}"), w_in));
    }
    if b.shape() != [out] {
        return Err(Error::dim("affine", format!("[{out}]"), format!("{:?}", b.shape())));
    }
    let mut y = Tensor::zeros(&[batch, out]);
    let wd = w.data();
    for i in 0..batch {
        let xi = x.row(i);
        let yi = y.row_mut(i);
        yi.copy_from_slice(b.data());
        for (k, &xv) in xi.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wk = &wd[k * out..(k + 1) * out];
            for (yv, &wv) in yi.iter_mut().zip(wk) {
                *yv += xv * wv;
            }
        }
    }
    Ok(y)
}

/// Backward of [`affine`]. Accumulates into `w.grad` and `b.grad` and
/// returns the gradient with respect to `x`.
pub fn affine_backward(
    x: &Tensor,
    dout: &Tensor,
    w: &mut Parameter,
    b: &mut Parameter,
) -> Result<Tensor> {
    let (batch, inp) = x.expect_rank2("affine_backward")?;
    let (db, out) = dout.expect_rank2("affine_backward")?;
    if db != batch || w.value.shape() != [inp, out] {
        return Err(Error::dim(
            "affine_backward",
            format!("dout [{batch}, {}]", w.value.shape().get(1).copied().unwrap_or(0)),
            format!("{:?}", dout.shape()),
        ));
    }
    let mut dx = Tensor::zeros(&[batch, inp]);
    let wv = w.value.data();
    let gw = w.grad.data_mut();
    let gb = b.grad.data_mut();
    for i in 0..batch {
        let xi = x.row(i);
        let di = dout.row(i);
        for (g, &d) in gb.iter_mut().zip(di) {
            *g += d;
        }
        let dxi = dx.row_mut(i);
        for k in 0..inp {
            let wk = &wv[k * out..(k + 1) * out];
            let gk = &mut gw[k * out..(k + 1) * out];
            let mut acc = 0.0;
            for j in 0..out {
                gk[j] += xi[k] * di[j];
                acc += wk[j] * di[j];
            }
            dxi[k] = acc;
        }
    }
    Ok(dx)
}

pub fn tanh_op(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|v| v.tanh()).collect();
    Tensor::from_vec(x.shape(), data).expect("shape preserved")
}

/// Backward of [`tanh_op`] given its output `y`.
pub fn tanh_backward(y: &Tensor, dy: &Tensor) -> Result<Tensor> {
    if !y.same_shape(dy) {
        return Err(Error::dim("tanh_backward", format!("{:?}", y.shape()), format!("{:?}", dy.shape())));
    }
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&t, &g)| g * (1.0 - t * t))
        .collect();
    Tensor::from_vec(y.shape(), data)
}

/// Numerically stable softmax over a slice.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Validation("softmax of an empty vector".into()));
    }
    if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("softmax input {bad} is not finite")));
    }
    Ok(softmax_unchecked(scores))
}

pub(crate) fn softmax_unchecked(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Row-wise softmax of a 2-D tensor.
pub fn softmax_rows(scores: &Tensor) -> Result<Tensor> {
    let (rows, _) = scores.expect_rank2("softmax_rows")?;
    let mut data = Vec::with_capacity(scores.len());
    for i in 0..rows {
        data.extend(softmax(scores.row(i))?);
    }
    Tensor::from_vec(scores.shape(), data)
}

/// Mean cross-entropy of row-wise softmax against class indices.
///
/// Returns the loss and its gradient `(p - onehot) / batch` with respect to
/// the scores.
pub fn softmax_xent(scores: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (batch, classes) = scores.expect_rank2("softmax_xent")?;
    if labels.len() != batch {
        return Err(Error::dim("softmax_xent", batch, labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Validation(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    let probs = softmax_rows(scores)?;
    let mut grad = probs.clone();
    let inv = 1.0 / batch as f64;
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let row = scores.row(i);
        // -ln p_label computed in log-space so saturated rows stay finite.
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        loss += lse - row[label];
        let g = grad.row_mut(i);
        g[label] -= 1.0;
        g.iter_mut().for_each(|v| *v *= inv);
    }
    Ok((loss * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(shape: &[usize], v: Vec<f64>) -> Parameter {
        Parameter::new(Tensor::from_vec(shape, v).unwrap())
    }

    #[test]
    fn affine_identity_and_hand_product() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let w = p(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let b = p(&[2], vec![0.0, 0.0]);
        assert_eq!(affine(&x, &w, &b).unwrap().data(), &[1.0, 2.0]);

        let x = Tensor::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let w = p(&[2, 2], vec![2.0, 3.0, 4.0, 5.0]);
        let b = p(&[2], vec![1.0, 1.0]);
        assert_eq!(affine(&x, &w, &b).unwrap().data(), &[7.0, 9.0]);
    }

    #[test]
    fn affine_backward_sum_loss() {
        // Frozen from a central-difference oracle (eps 1e-6) on sum(out).
        let x = Tensor::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let mut w = p(&[2, 2], vec![2.0, 3.0, 4.0, 5.0]);
        let mut b = p(&[2], vec![1.0, 1.0]);
        let dout = Tensor::full(&[1, 2], 1.0);
        let dx = affine_backward(&x, &dout, &mut w, &mut b).unwrap();
        assert_eq!(w.grad.data(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(b.grad.data(), &[1.0, 1.0]);
        assert_eq!(dx.data(), &[5.0, 9.0]);
    }

    #[test]
    fn affine_shape_mismatch() {
        let x = Tensor::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        let w = p(&[2, 2], vec![0.0; 4]);
        let b = p(&[2], vec![0.0; 2]);
        assert!(matches!(affine(&x, &w, &b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn tanh_values_and_saturation() {
        let y = tanh_op(&Tensor::vector(vec![0.0, 0.5, 20.0]));
        assert_eq!(y.data()[0], 0.0);
        assert_abs_diff_eq!(y.data()[1], 0.462_117_157_260_009_8, epsilon = 1e-12);
        assert!(y.data()[2] > 0.999 && y.data()[2] <= 1.0);
        let g = tanh_backward(&y, &Tensor::full(&[3], 1.0)).unwrap();
        assert_abs_diff_eq!(g.data()[1], 0.786_447_732_965_927, epsilon = 1e-12);
        assert!(g.data()[2].abs() < 1e-15);
    }

    #[test]
    fn softmax_examples() {
        let s = softmax(&[0.0, 0.0, 0.0]).unwrap();
        s.iter().for_each(|v| assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-15));
        let s = softmax(&[1000.0, 1000.0, 1000.0]).unwrap();
        s.iter().for_each(|v| assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-15));
        let s = softmax(&[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(s[0], 0.576_117, epsilon = 1e-6);
        assert_abs_diff_eq!(s[1], 0.211_942, epsilon = 1e-6);
        assert_abs_diff_eq!(s[2], 0.211_942, epsilon = 1e-6);
        assert!(matches!(softmax(&[f64::NAN]), Err(Error::Numeric(_))));
    }

    #[test]
    fn xent_examples() {
        let s = Tensor::zeros(&[1, 3]);
        let (loss, _) = softmax_xent(&s, &[0]).unwrap();
        assert_abs_diff_eq!(loss, 3f64.ln(), epsilon = 1e-15);
        let s = Tensor::from_rows(&[vec![60.0, 0.0, 0.0]]).unwrap();
        let (loss, _) = softmax_xent(&s, &[0]).unwrap();
        assert!(loss < 1e-20);
        assert!(softmax_xent(&s, &[3]).is_err());
    }

    #[test]
    fn xent_grad_matches_finite_differences() {
        let s = Tensor::from_rows(&[vec![0.3, -1.2, 0.8], vec![2.0, 0.1, -0.4]]).unwrap();
        let labels = [2, 0];
        let (_, g) = softmax_xent(&s, &labels).unwrap();
        let eps = 1e-6;
        for k in 0..s.len() {
            let mut plus = s.clone();
            plus.data_mut()[k] += eps;
            let mut minus = s.clone();
            minus.data_mut()[k] -= eps;
            let fd = (softmax_xent(&plus, &labels).unwrap().0
                - softmax_xent(&minus, &labels).unwrap().0)
                / (2.0 * eps);
            let rel = (fd - g.data()[k]).abs() / fd.abs().max(g.data()[k].abs()).max(1e-8);
            assert!(rel < 1e-6, "k={k} fd={fd} an={}", g.data()[k]);
        }
    }
}
