//! A small fully connected head: optional tanh hidden layer, linear output.
//! Parameters live in one flat buffer so the optimizer and the gradient
//! checker can treat them uniformly.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input_dim: usize,
    /// Hidden width; `None` gives a purely linear head.
    pub hidden: Option<usize>,
    pub output_dim: usize,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn param_count(input_dim: usize, hidden: Option<usize>, output_dim: usize) -> usize {
        match hidden {
            Some(h) => h * input_dim + h + output_dim * h + output_dim,
            None => output_dim * input_dim + output_dim,
        }
    }

    /// Seeded initialization: Xavier-uniform hidden layer, zero output
    /// layer. Starting at the uniform/zero output lets a short training
    /// budget grow only the informative weights.
    pub fn init(input_dim: usize, hidden: Option<usize>, output_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Self::param_count(input_dim, hidden, output_dim);
        let mut params = vec![0.0; n];
        if let Some(h) = hidden {
            let lim1 = (6.0 / (input_dim + h) as f64).sqrt();
            for p in params[..h * input_dim].iter_mut() {
                *p = rng.gen_range(-lim1..lim1);
            }
        }
        Mlp {
            input_dim,
            hidden,
            output_dim,
            params,
        }
    }

    pub fn zeros(input_dim: usize, hidden: Option<usize>, output_dim: usize) -> Self {
        Mlp {
            input_dim,
            hidden,
            output_dim,
            params: vec![0.0; Self::param_count(input_dim, hidden, output_dim)],
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "input length {} != {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Logits plus the hidden activation needed for the backward pass.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        match self.hidden {
            Some(h) => {
                let (w1, rest) = self.params.split_at(h * self.input_dim);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(self.output_dim * h);
                let mut act = vec![0.0; h];
                for (j, a) in act.iter_mut().enumerate() {
                    let row = &w1[j * self.input_dim..(j + 1) * self.input_dim];
                    let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b1[j];
                    *a = z.tanh();
                }
                let mut logits = vec![0.0; self.output_dim];
                for (o, l) in logits.iter_mut().enumerate() {
                    let row = &w2[o * h..(o + 1) * h];
                    *l = row.iter().zip(&act).map(|(w, v)| w * v).sum::<f64>() + b2[o];
                }
                Ok((logits, act))
            }
            None => {
                let (w, b) = self.params.split_at(self.output_dim * self.input_dim);
                let mut logits = vec![0.0; self.output_dim];
                for (o, l) in logits.iter_mut().enumerate() {
                    let row = &w[o * self.input_dim..(o + 1) * self.input_dim];
                    *l = row.iter().zip(x).map(|(wv, v)| wv * v).sum::<f64>() + b[o];
                }
                Ok((logits, Vec::new()))
            }
        }
    }

    /// Accumulate parameter gradients for one sample given the gradient of
    /// the loss w.r.t. the logits.
    pub fn accumulate_grad(
        &self,
        x: &[f64],
        hidden_act: &[f64],
        dlogits: &[f64],
        grad: &mut [f64],
    ) {
        match self.hidden {
            Some(h) => {
                let in_dim = self.input_dim;
                let w2_off = h * in_dim + h;
                let b2_off = w2_off + self.output_dim * h;
                let w2 = &self.params[w2_off..b2_off];

                // output layer
                for (o, &dl) in dlogits.iter().enumerate() {
                    for (j, &a) in hidden_act.iter().enumerate() {
                        grad[w2_off + o * h + j] += dl * a;
                    }
                    grad[b2_off + o] += dl;
                }
                // hidden layer through tanh'
                for (j, &a) in hidden_act.iter().enumerate() {
                    let mut da = 0.0;
                    for (o, &dl) in dlogits.iter().enumerate() {
                        da += dl * w2[o * h + j];
                    }
                    let dz = da * (1.0 - a * a);
                    for (i, &xv) in x.iter().enumerate() {
                        grad[j * in_dim + i] += dz * xv;
                    }
                    grad[h * in_dim + j] += dz;
                }
            }
            None => {
                let b_off = self.output_dim * self.input_dim;
                for (o, &dl) in dlogits.iter().enumerate() {
                    for (i, &xv) in x.iter().enumerate() {
                        grad[o * self.input_dim + i] += dl * xv;
                    }
                    grad[b_off + o] += dl;
                }
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
