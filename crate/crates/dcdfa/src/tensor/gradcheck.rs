//! Finite-difference gradient checking.
//!
//! Runs the function twice per sampled coordinate with a central
//! difference (f(x+h) - f(x-h)) / 2h. Both the analytic backward pass and
//! the perturbed evaluations run in Double precision so the comparison is
//! limited by truncation error, not by f32 storage rounding.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use super::{Tape, Tensor};
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-3;

/// Max over sampled coordinates of
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
///
/// `f` must be deterministic (dropout off) and rebuild its graph from the
/// given tape on every call. At most `max_coords` coordinates are sampled
/// per parameter.
pub fn grad_check<F>(
    f: F,
    params: &[Tensor],
    h: f64,
    max_coords: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64>
where
    F: Fn(&Tape) -> Result<Tensor>,
{
    for p in params {
        p.clear_grad();
    }
    let tape = Tape::training_double();
    let loss = f(&tape)?;
    if !loss.is_scalar() {
        return Err(Error::NonScalarLoss(loss.shape().to_vec()));
    }
    if !loss.item().is_finite() {
        return Err(Error::NonFinite("grad_check loss".into()));
    }
    tape.backward(&loss)?;
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.numel()]))
        .collect();
    for p in params {
        p.clear_grad();
    }

    let mut worst = 0.0f64;
    for (pi, p) in params.iter().enumerate() {
        let n = p.numel();
        let picked: Vec<usize> = if n <= max_coords {
            (0..n).collect()
        } else {
            sample(rng, n, max_coords).into_vec()
        };
        for idx in picked {
            let original = p.data()[idx];
            p.write_raw(idx, original + h);
            let f_plus = eval_double(&f)?;
            p.write_raw(idx, original - h);
            let f_minus = eval_double(&f)?;
            p.write_raw(idx, original);
            let numeric = (f_plus - f_minus) / (2.0 * h);
            let a = analytic[pi][idx];
            let denom = 1.0f64.max(a.abs()).max(numeric.abs());
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

fn eval_double<F>(f: &F) -> Result<f64>
where
    F: Fn(&Tape) -> Result<Tensor>,
{
    let tape = Tape::inference_double();
    let loss = f(&tape)?;
    let v = loss.item();
    if !v.is_finite() {
        return Err(Error::NonFinite("grad_check loss".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn quadratic_form_is_near_exact() {
        // f(x) = x^T A x with fixed A; central differences are exact for
        // quadratics up to rounding.
        let a = Tensor::from_vec(&[3, 3], vec![2.0, 0.5, 0.0, 0.5, 1.0, 0.25, 0.0, 0.25, 3.0])
            .unwrap();
        let x = Tensor::param(&[3], vec![0.3, -0.7, 1.1]).unwrap();
        let mut r = rng::stream(11, &[99]);
        let err = grad_check(
            |tape| {
                let ax = a.matvec(&x, tape)?;
                x.dot(&ax, tape)
            },
            &[x.clone()],
            DEFAULT_STEP,
            16,
            &mut r,
        )
        .unwrap();
        assert!(err < 1e-8, "quadratic form error {err}");
    }

    #[test]
    fn sigmoid_chain_depth_five() {
        let x = Tensor::param(&[4], vec![0.2, -0.4, 0.9, -1.3]).unwrap();
        let mut r = rng::stream(12, &[98]);
        let err = grad_check(
            |tape| {
                let mut y = x.clone();
                for _ in 0..5 {
                    y = y.sigmoid(tape);
                }
                y.sum(tape)
            },
            &[x.clone()],
            DEFAULT_STEP,
            8,
            &mut r,
        )
        .unwrap();
        assert!(err < 1e-5, "sigmoid chain error {err}");
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let x = Tensor::param(&[1], vec![2.0]).unwrap();
        let mut r = rng::stream(13, &[97]);
        let res = grad_check(
            |tape| Ok(x.mul_scalar(f64::INFINITY, tape)),
            &[x.clone()],
            DEFAULT_STEP,
            4,
            &mut r,
        );
        assert!(matches!(res, Err(Error::NonFinite(_))));
    }

    #[test]
    fn random_composite_graphs_pass() {
        let mut r = rng::stream(14, &[96]);
        for trial in 0..20 {
            let n = 6;
            let data: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            let w_data: Vec<f64> = (0..n * n).map(|_| r.random_range(-0.8..0.8)).collect();
            let x = Tensor::param(&[n], data).unwrap();
            let w = Tensor::param(&[n, n], w_data).unwrap();
            let err = grad_check(
                |tape| {
                    let h = w.matvec(&x, tape)?.sigmoid(tape);
                    let g = h.mul(&h, tape)?.add_scalar(0.1, tape).log(tape)?;
                    g.mean(tape)
                },
                &[x.clone(), w.clone()],
                DEFAULT_STEP,
                10,
                &mut r,
            )
            .unwrap();
            assert!(err < 1e-4, "trial {trial}: error {err}");
        }
    }
}
