use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-5;

/// How each partial derivative is estimated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FdScheme {
    /// `(f(x + eps) - f(x - eps)) / 2 eps`.
    Central { eps: f64 },
    /// Central differences over the step ladder [`ADAPTIVE_STEPS`]; the
    /// estimate is taken from the adjacent pair of steps whose results agree
    /// most closely (the finer of the two). Suits losses where some
    /// parameters need a small step (high curvature) and others a large one
    /// (true gradient zero, so only roundoff is measured).
    AdaptiveCentral,
}

/// Steps tried by [`FdScheme::AdaptiveCentral`], coarsest first.
pub const ADAPTIVE_STEPS: [f64; 7] = [1e-2, 2.5e-3, 6.25e-4, 1.5625e-4, 3.90625e-5, 9.765625e-6, 2.44140625e-6];

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the element with the largest relative error.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compare analytic gradients against central differences of `loss_fn`.
///
/// `point` is the flattened parameter vector at which `analytic` was
/// computed. `loss_fn` must be a pure function of its argument: it is
/// evaluated twice at `point` first and the check aborts if the results
/// differ.
pub fn grad_check<F>(point: &[f64], analytic: &[f64], loss_fn: F, eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    grad_check_with(point, analytic, loss_fn, FdScheme::Central { eps })
}

/// [`grad_check`] with an explicit differencing scheme.
pub fn grad_check_with<F>(point: &[f64], analytic: &[f64], mut loss_fn: F, scheme: FdScheme) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if point.len() != analytic.len() {
        return Err(Error::dim("grad_check", point.len(), analytic.len()));
    }
    let first = loss_fn(point)?;
    let second = loss_fn(point)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::Numeric(format!(
            "loss function is not deterministic ({first} vs {second}); disable dropout and fix the batch"
        )));
    }
    let mut x = point.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: analytic.first().copied().unwrap_or(0.0),
        numeric: 0.0,
        checked: point.len(),
    };
    for i in 0..x.len() {
        let orig = x[i];
        let mut central = |h: f64| -> Result<f64> {
            x[i] = orig + h;
            let plus = loss_fn(&x);
            x[i] = orig - h;
            let minus = loss_fn(&x);
            x[i] = orig;
            Ok((plus? - minus?) / (2.0 * h))
        };
        let numeric = match scheme {
            FdScheme::Central { eps } => central(eps)?,
            FdScheme::AdaptiveCentral => {
                let estimates = ADAPTIVE_STEPS.iter().map(|&h| central(h)).collect::<Result<Vec<_>>>()?;
                let best = (0..estimates.len() - 1)
                    .min_by(|&a, &b| {
                        let da = (estimates[a] - estimates[a + 1]).abs();
                        let db = (estimates[b] - estimates[b + 1]).abs();
                        da.total_cmp(&db)
                    })
                    .expect("ladder has at least two steps");
                estimates[best + 1]
            }
        };
        let err = relative_error(analytic[i], numeric);
        if !err.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient check at index {i}")));
        }
        if err > report.max_rel_error || i == 0 {
            report = GradCheckReport {
                max_rel_error: err.max(report.max_rel_error),
                worst_index: i,
                analytic: analytic[i],
                numeric,
                checked: point.len(),
            };
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let x = [1.0, 2.0];
        let analytic = [2.0, 4.0];
        let r = grad_check(&x, &analytic, |v| Ok(v.iter().map(|a| a * a).sum()), DEFAULT_EPS).unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
    }

    #[test]
    fn adaptive_handles_mixed_scales() {
        // x0 enters through a sharply curved term, x1 only through an exact
        // cancellation that leaves roundoff behind.
        let loss = |v: &[f64]| {
            let c = 1.0 / 3.0;
            Ok((400.0 * v[0]).sin() / 400.0 + (c + v[1]) - v[1] - c + 1.1)
        };
        let x = [0.01, 0.0];
        let analytic = [(4.0f64).cos(), 0.0];
        let fixed = grad_check(&x, &analytic, loss, 1e-3).unwrap();
        assert!(fixed.max_rel_error > 1e-4);
        let adaptive = grad_check_with(&x, &analytic, loss, FdScheme::AdaptiveCentral).unwrap();
        assert!(adaptive.max_rel_error < 1e-6, "{adaptive:?}");
    }

    #[test]
    fn wrong_gradient_is_reported() {
        let x = [1.0, 2.0];
        let r = grad_check(&x, &[2.0, 5.0], |v| Ok(v.iter().map(|a| a * a).sum()), DEFAULT_EPS).unwrap();
        assert_eq!(r.worst_index, 1);
        assert!(r.max_rel_error > 0.1);
    }

    #[test]
    fn nondeterministic_loss_aborts() {
        let mut calls = 0u32;
        let res = grad_check(
            &[1.0],
            &[0.0],
            |_| {
                calls += 1;
                Ok(calls as f64)
            },
            DEFAULT_EPS,
        );
        assert!(matches!(res, Err(Error::Numeric(_))));
    }
}
