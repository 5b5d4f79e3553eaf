//! Small numeric core: dense tensors, a reverse-mode tape, a GRU cell and Adam.

mod adam;
mod checkpoint;
mod graph;
mod gru;
mod params;
mod tensor;

use rand::Rng;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use graph::{Graph, NodeId};
pub use gru::{GruCell, GruCellParams};
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use tensor::Tensor;

use crate::error::{Error, Result};

/// Lower clamp on probabilities inside [`cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-12;

fn check_finite(op: &'static str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

/// `W x + b` for a single vector.
pub fn linear_forward(x: &[f64], w: &Tensor, b: &[f64]) -> Result<Vec<f64>> {
    if w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::shape(
            "linear_forward",
            format!("W is {}x{}, x has {}, b has {}", w.rows(), w.cols(), x.len(), b.len()),
        ));
    }
    let out: Vec<f64> = (0..w.rows())
        .map(|i| w.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[i])
        .collect();
    check_finite("linear_forward", &out)?;
    Ok(out)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One unbatched GRU step.
pub fn gru_cell_step(x: &[f64], h: &[f64], p: &GruCellParams) -> Result<Vec<f64>> {
    p.validate()?;
    if x.len() != p.input() || h.len() != p.hidden() {
        return Err(Error::shape(
            "gru_cell_step",
            format!("x has {}, h has {}, cell is {}->{}", x.len(), h.len(), p.input(), p.hidden()),
        ));
    }
    let zero = vec![0.0; p.hidden()];
    let gate = |w: &Tensor, u: &Tensor, b: &Tensor, hh: &[f64]| -> Result<Vec<f64>> {
        let a = linear_forward(x, w, b.data())?;
        let c = linear_forward(hh, u, &zero)?;
        Ok(a.iter().zip(&c).map(|(a, c)| a + c).collect())
    };
    let z: Vec<f64> = gate(&p.w_z, &p.u_z, &p.b_z, h)?.into_iter().map(sigmoid).collect();
    let r: Vec<f64> = gate(&p.w_r, &p.u_r, &p.b_r, h)?.into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(r, h)| r * h).collect();
    let n: Vec<f64> = gate(&p.w_h, &p.u_h, &p.b_h, &rh)?.into_iter().map(f64::tanh).collect();
    let out: Vec<f64> = (0..h.len()).map(|i| (1.0 - z[i]) * n[i] + z[i] * h[i]).collect();
    check_finite("gru_cell_step", &out)?;
    Ok(out)
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("softmax of an empty vector".into()));
    }
    check_finite("softmax", logits)?;
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `−ln probs[target]` with the probability clamped at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], target: usize) -> f64 {
    -probs.get(target).copied().unwrap_or(0.0).max(PROB_FLOOR).ln()
}

/// Inverse-CDF draw from a probability vector.
pub fn categorical_sample<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_cases() {
        let x = [1.5, -2.0, 0.25];
        assert_eq!(linear_forward(&x, &Tensor::identity(3), &[0.0; 3]).unwrap(), x.to_vec());
        assert_eq!(linear_forward(&x, &Tensor::zeros(2, 3), &[4.0, -1.0]).unwrap(), vec![4.0, -1.0]);
        let w = Tensor::from_vec(3, 3, vec![1., 2., 3., 0., -1., 4., 2., 2., -2.]).unwrap();
        // Hand multiplication.
        let expect = [1.5 - 4.0 + 0.75 + 1.0, 2.0 + 1.0 + 2.0, 3.0 - 4.0 - 0.5 - 3.0];
        let got = linear_forward(&x, &w, &[1.0, 2.0, -3.0]).unwrap();
        for (g, e) in got.iter().zip(expect) {
            assert_abs_diff_eq!(*g, e, epsilon = 1e-15);
        }
        assert!(linear_forward(&x, &Tensor::zeros(2, 2), &[0.0; 2]).is_err());
    }

    #[test]
    fn gru_zero_weights() {
        let p = GruCellParams::zeros(2, 3);
        let h = [0.4, -1.0, 2.0];
        let out = gru_cell_step(&[1.0, 1.0], &h, &p).unwrap();
        for (o, hh) in out.iter().zip(h) {
            assert_abs_diff_eq!(*o, 0.5 * hh, epsilon = 1e-15);
        }
        assert_eq!(gru_cell_step(&[1.0, 1.0], &[0.0; 3], &p).unwrap(), vec![0.0; 3]);
        assert!(gru_cell_step(&[1.0], &h, &p).is_err());
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        for p in softmax(&[1000.0; 3]).unwrap() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
        let p = softmax(&[1f64.ln(), 2f64.ln(), 3f64.ln()]).unwrap();
        for (a, b) in p.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(softmax(&[f64::NAN, 0.0]).is_err());
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy(&[0.0, 1.0, 0.0], 1), 0.0);
        let u = vec![1.0 / 15.0; 15];
        assert_abs_diff_eq!(cross_entropy(&u, 7), 15f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(cross_entropy(&u, 7), 2.708, epsilon = 5e-4);
        let ce = cross_entropy(&[1.0, 0.0], 1);
        assert!(ce.is_finite() && ce <= -(1e-12f64).ln() + 1e-9);
    }

    #[test]
    fn categorical_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(categorical_sample(&[1.0, 0.0, 0.0], &mut rng), 0);
        }
        let n = 1_000_000;
        let ones = (0..n).filter(|_| categorical_sample(&[0.3, 0.7], &mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 0.7).abs() < 0.005);
        let draw = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| categorical_sample(&[0.2, 0.3, 0.5], &mut r)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }
}
