//! Dense, dropout and loss primitives.

use rand::Rng;

use super::activation::Activation;
use super::tensor::Tensor;
use super::{Mode, NeuralError, Result};

fn dense_check(x: &[f64], w: &Tensor, b: &Tensor) -> Result<usize> {
    let units = b.len();
    if w.shape() != [units, x.len()] || b.rank() != 1 {
        return Err(NeuralError::ShapeMismatch {
            context: "dense parameters",
            expected: vec![units, x.len()],
            actual: w.shape().to_vec(),
        });
    }
    Ok(units)
}

pub(crate) fn dense_pre(x: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>> {
    let units = dense_check(x, w, b)?;
    let d = x.len();
    Ok((0..units)
        .map(|r| {
            let row = &w.data()[r * d..(r + 1) * d];
            b.data()[r] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
        })
        .collect())
}

/// Affine map `W x + b` followed by the activation.
pub fn dense_forward(x: &[f64], w: &Tensor, b: &Tensor, activation: Activation) -> Result<Vec<f64>> {
    Ok(dense_pre(x, w, b)?
        .into_iter()
        .map(|v| activation.apply(v))
        .collect())
}

pub(crate) fn dense_backward(
    x: &[f64],
    pre: &[f64],
    w: &Tensor,
    activation: Activation,
    dout: &[f64],
    dw: &mut Tensor,
    db: &mut Tensor,
) -> Vec<f64> {
    let d = x.len();
    let mut dx = vec![0.0; d];
    for (r, (&g, &p)) in dout.iter().zip(pre).enumerate() {
        let dp = g * activation.derivative(p);
        if dp == 0.0 {
            continue;
        }
        db.data_mut()[r] += dp;
        let wrow = &w.data()[r * d..(r + 1) * d];
        let dwrow = &mut dw.data_mut()[r * d..(r + 1) * d];
        for k in 0..d {
            dwrow[k] += dp * x[k];
            dx[k] += dp * wrow[k];
        }
    }
    dx
}

/// Per-entry multipliers for inverted dropout: 0 with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub(crate) fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Inverted dropout. Evaluation mode is the identity and draws nothing
/// from `rng`.
pub fn dropout_forward<R: Rng + ?Sized>(x: &[f64], rate: f64, mode: Mode, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NeuralError::InvalidLayer(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(match mode {
        Mode::Eval => x.to_vec(),
        Mode::Train => {
            let mask = dropout_mask(x.len(), rate, rng);
            x.iter().zip(&mask).map(|(v, m)| v * m).collect()
        }
    })
}

/// Mean squared error and its gradient with respect to the predictions.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(NeuralError::ShapeMismatch {
            context: "loss target",
            expected: vec![pred.len()],
            actual: vec![target.len()],
        });
    }
    let n = pred.len() as f64;
    let diff: Vec<f64> = pred.iter().zip(target).map(|(p, t)| p - t).collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = diff.iter().map(|d| 2.0 * d / n).collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_cases() {
        let w = Tensor::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        let b = Tensor::vector(vec![1.0]);
        assert_eq!(dense_forward(&[1.0, 2.0], &w, &b, Activation::Linear).unwrap(), vec![2.5]);
        let zw = Tensor::zeros(&[1, 3]);
        let b = Tensor::vector(vec![-0.25]);
        assert_eq!(dense_forward(&[9.0, -4.0, 1.0], &zw, &b, Activation::Linear).unwrap(), vec![-0.25]);
        let w = Tensor::new(vec![1, 1], vec![1.0]).unwrap();
        assert_eq!(
            dense_forward(&[-3.0], &w, &Tensor::zeros(&[1]), Activation::Relu).unwrap(),
            vec![0.0]
        );
        assert!(dense_forward(&[1.0], &zw, &b, Activation::Linear).is_err());
    }

    #[test]
    fn dropout_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..50).map(|i| i as f64 - 20.0).collect();
        assert_eq!(dropout_forward(&x, 0.2, Mode::Eval, &mut rng).unwrap(), x);
        let y = dropout_forward(&x, 0.2, Mode::Train, &mut rng).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!(*b == 0.0 || *b == 1.25 * a);
        }
        assert!(dropout_forward(&x, 1.0, Mode::Train, &mut rng).is_err());
    }

    #[test]
    fn mse_cases() {
        assert_eq!(mse_loss(&[2.0], &[0.0]).unwrap(), (4.0, vec![4.0]));
        assert_eq!(mse_loss(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), (0.0, vec![0.0, 0.0]));
        assert_eq!(mse_loss(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), (5.0, vec![1.0, 3.0]));
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }
}
