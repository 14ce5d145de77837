//! Analytic-vs-numeric gradient verification by central finite differences.

use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::Mlp;
use super::train::{ce_batch, l1_batch};
use crate::error::{Error, Result};

const FD_STEP: f64 = 1e-5;

/// A loss evaluated over standardized inputs, for checking.
#[derive(Debug, Clone)]
pub enum LossBatch {
    CrossEntropy {
        xs: Vec<Vec<f64>>,
        labels: Vec<usize>,
    },
    L1 {
        xs: Vec<Vec<f64>>,
        targets: Vec<f64>,
    },
}

impl LossBatch {
    fn is_empty(&self) -> bool {
        match self {
            LossBatch::CrossEntropy { xs, .. } => xs.is_empty(),
            LossBatch::L1 { xs, .. } => xs.is_empty(),
        }
    }

    fn eval(&self, mlp: &Mlp, grad: Option<&mut [f64]>) -> Result<f64> {
        match self {
            LossBatch::CrossEntropy { xs, labels } => ce_batch(mlp, xs, labels, grad),
            LossBatch::L1 { xs, targets } => l1_batch(mlp, xs, targets, grad),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// `||g_a - g_n|| / max(||g_a||, ||g_n||, 1e-12)` over the checked
    /// parameter subset.
    pub relative_error: f64,
    pub checked_params: usize,
}

/// Compare the analytic gradient of the batch loss against central finite
/// differences. At most `max_params` parameters are checked (a seeded
/// random subset when the model has more).
pub fn gradient_check(
    mlp: &Mlp,
    batch: &LossBatch,
    max_params: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    if batch.is_empty() {
        return Err(Error::validation("empty batch"));
    }
    let mut analytic = vec![0.0; mlp.params.len()];
    batch.eval(mlp, Some(&mut analytic))?;

    let indices: Vec<usize> = if mlp.params.len() <= max_params {
        (0..mlp.params.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&mut rng, mlp.params.len(), max_params).into_vec()
    };

    let mut perturbed = mlp.clone();
    let mut diff_sq = 0.0;
    let mut a_sq = 0.0;
    let mut n_sq = 0.0;
    for &i in &indices {
        let original = perturbed.params[i];
        perturbed.params[i] = original + FD_STEP;
        let plus = batch.eval(&perturbed, None)?;
        perturbed.params[i] = original - FD_STEP;
        let minus = batch.eval(&perturbed, None)?;
        perturbed.params[i] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        diff_sq += (analytic[i] - numeric).powi(2);
        a_sq += analytic[i].powi(2);
        n_sq += numeric.powi(2);
    }
    let relative_error = diff_sq.sqrt() / a_sq.sqrt().max(n_sq.sqrt()).max(1e-12);
    Ok(GradCheckReport {
        relative_error,
        checked_params: indices.len(),
    })
}

/// Same check with one analytic gradient component deliberately scaled, as
/// a negative control that the comparison actually detects errors.
pub fn gradient_check_corrupted(
    mlp: &Mlp,
    batch: &LossBatch,
    max_params: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    if batch.is_empty() {
        return Err(Error::validation("empty batch"));
    }
    let mut analytic = vec![0.0; mlp.params.len()];
    batch.eval(mlp, Some(&mut analytic))?;
    // corrupt the largest component so the error cannot hide in noise
    let (worst, _) = analytic
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty params");
    analytic[worst] *= 2.0;

    let indices: Vec<usize> = if mlp.params.len() <= max_params {
        (0..mlp.params.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = sample(&mut rng, mlp.params.len(), max_params).into_vec();
        if !v.contains(&worst) {
            v[0] = worst;
        }
        v
    };

    let mut perturbed = mlp.clone();
    let mut diff_sq = 0.0;
    let mut a_sq = 0.0;
    let mut n_sq = 0.0;
    for &i in &indices {
        let original = perturbed.params[i];
        perturbed.params[i] = original + FD_STEP;
        let plus = batch.eval(&perturbed, None)?;
        perturbed.params[i] = original - FD_STEP;
        let minus = batch.eval(&perturbed, None)?;
        perturbed.params[i] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        diff_sq += (analytic[i] - numeric).powi(2);
        a_sq += analytic[i].powi(2);
        n_sq += numeric.powi(2);
    }
    let relative_error = diff_sq.sqrt() / a_sq.sqrt().max(n_sq.sqrt()).max(1e-12);
    Ok(GradCheckReport {
        relative_error,
        checked_params: indices.len(),
    })
}
