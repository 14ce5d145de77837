//! Evaluation metrics and protocol: Spearman and Pearson correlations,
//! content-disjoint train/validation splitting, and repeated-run medians.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two headline metrics for one evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricPair {
    pub srcc: f64,
    pub plcc: f64,
    pub n: usize,
}

/// Which mapping produced a PLCC value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlccMode {
    Logistic,
    Raw,
    /// The logistic fit failed to converge; raw Pearson was used instead.
    RawFallback,
}

#[derive(Debug, Clone, Copy)]
pub struct PlccResult {
    pub value: f64,
    pub mode: PlccMode,
}

fn check_inputs(pred: &[f64], label: &[f64]) -> Result<()> {
    if pred.len() != label.len() {
        return Err(Error::DimensionMismatch(format!(
            "pred {} vs label {}",
            pred.len(),
            label.len()
        )));
    }
    if pred.len() < 3 {
        return Err(Error::validation("need at least 3 samples"));
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Pearson correlation of two raw vectors.
fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if is_constant(a) || is_constant(b) {
        return Err(Error::UndefinedMetric(
            "correlation of a constant sequence".to_string(),
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Average (fractional) ranks, ties sharing the mean of their positions.
pub fn fractional_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of fractional ranks.
///
/// ```
/// use dgqa::eval::srcc;
/// let rho = srcc(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
/// assert!((rho - 0.8).abs() < 1e-12);
/// ```
pub fn srcc(pred: &[f64], label: &[f64]) -> Result<f64> {
    check_inputs(pred, label)?;
    pearson(&fractional_ranks(pred), &fractional_ranks(label))
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Very large width: the sigmoid is effectively linear over the data, so
/// this candidate recovers plain Pearson correlation as a special case.
const LOGISTIC_LINEAR_LIMIT: f64 = 1e6;

/// 4-parameter logistic `y = b1 + (b2 - b1) / (1 + exp(-(x - b3) / |b4|))`
/// fitted on standardized inputs. The shape parameters `(b3, b4)` come from
/// a deterministic grid search (with local refinement) maximizing
/// `|corr(sigmoid, label)|`; the affine pair `(b1, b2)` then has a closed
/// form via least squares. Returns `None` when no finite fit exists.
fn fit_logistic(pred: &[f64], label: &[f64]) -> Option<Vec<f64>> {
    let n = pred.len() as f64;
    let px_mean = pred.iter().sum::<f64>() / n;
    let px_std = (pred.iter().map(|v| (v - px_mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(1e-12);
    let x: Vec<f64> = pred.iter().map(|v| (v - px_mean) / px_std).collect();
    let x_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let score = |b3: f64, b4: f64| -> f64 {
        let s: Vec<f64> = x.iter().map(|&xi| sigmoid((xi - b3) / b4)).collect();
        pearson(&s, label).map(f64::abs).unwrap_or(f64::NEG_INFINITY)
    };

    let mut best = (0.0, LOGISTIC_LINEAR_LIMIT, score(0.0, LOGISTIC_LINEAR_LIMIT));
    let widths = [
        0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8, LOGISTIC_LINEAR_LIMIT,
    ];
    let centers = 17;
    let span = (x_max - x_min).max(1e-12);
    for i in 0..centers {
        let b3 = x_min + span * i as f64 / (centers - 1) as f64;
        for &b4 in &widths {
            let sc = score(b3, b4);
            if sc > best.2 {
                best = (b3, b4, sc);
            }
        }
    }
    // local refinement around the best cell
    let mut db3 = span / (centers - 1) as f64;
    let mut fb4 = 2.0f64;
    for _ in 0..6 {
        db3 *= 0.5;
        fb4 = fb4.sqrt();
        let (c3, c4, _) = best;
        for &b3 in &[c3 - db3, c3, c3 + db3] {
            for &b4 in &[c4 / fb4, c4, c4 * fb4] {
                let sc = score(b3, b4);
                if sc > best.2 {
                    best = (b3, b4, sc);
                }
            }
        }
    }
    if !best.2.is_finite() {
        return None;
    }
    let (b3, b4, _) = best;

    // closed-form affine layer: least squares of label on the sigmoid
    let s: Vec<f64> = x.iter().map(|&xi| sigmoid((xi - b3) / b4)).collect();
    let ms = s.iter().sum::<f64>() / n;
    let my = label.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (&si, &yi) in s.iter().zip(label) {
        cov += (si - ms) * (yi - my);
        var += (si - ms) * (si - ms);
    }
    if var <= 0.0 {
        return None;
    }
    let a = cov / var;
    let c = my - a * ms;
    let params = vec![c, a + c, b3, b4, px_mean, px_std];
    if params.iter().all(|v| v.is_finite()) {
        Some(params)
    } else {
        None
    }
}

fn logistic_apply(params: &[f64], pred: f64) -> f64 {
    let (b1, b2, b3, b4, m, s) = (
        params[0], params[1], params[2], params[3], params[4], params[5],
    );
    let x = (pred - m) / s;
    b1 + (b2 - b1) / (1.0 + (-(x - b3) / b4.abs().max(1e-6)).exp())
}

/// Pearson linear correlation after a fitted monotone logistic mapping of
/// the predictions; `raw` skips the mapping.
pub fn plcc(pred: &[f64], label: &[f64], raw: bool) -> Result<PlccResult> {
    check_inputs(pred, label)?;
    if is_constant(pred) || is_constant(label) {
        return Err(Error::UndefinedMetric(
            "correlation of a constant sequence".to_string(),
        ));
    }
    if raw {
        return Ok(PlccResult {
            value: pearson(pred, label)?,
            mode: PlccMode::Raw,
        });
    }
    match fit_logistic(pred, label) {
        Some(params) => {
            let mapped: Vec<f64> = pred.iter().map(|&p| logistic_apply(&params, p)).collect();
            if is_constant(&mapped) {
                Ok(PlccResult {
                    value: pearson(pred, label)?,
                    mode: PlccMode::RawFallback,
                })
            } else {
                Ok(PlccResult {
                    value: pearson(&mapped, label)?,
                    mode: PlccMode::Logistic,
                })
            }
        }
        None => Ok(PlccResult {
            value: pearson(pred, label)?,
            mode: PlccMode::RawFallback,
        }),
    }
}

/// Content-disjoint train/validation split over reference ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_reference_ids: BTreeSet<String>,
    pub val_reference_ids: BTreeSet<String>,
    pub ratio: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn is_train(&self, reference_id: &str) -> bool {
        self.train_reference_ids.contains(reference_id)
    }
}

/// Shuffle the reference ids with the seed and put the first `ratio` share
/// on the training side; every sample of a reference lands on one side.
pub fn split_by_reference(
    reference_ids: impl IntoIterator<Item = String>,
    ratio: f64,
    seed: u64,
) -> Result<SplitPlan> {
    let unique: BTreeSet<String> = reference_ids.into_iter().collect();
    if unique.is_empty() {
        return Err(Error::validation("no reference ids"));
    }
    if unique.iter().any(|r| r.is_empty()) {
        return Err(Error::validation("missing reference_id"));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::validation(format!("ratio {ratio} outside [0,1]")));
    }
    let mut ids: Vec<String> = unique.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = (ratio * ids.len() as f64).round() as usize;
    let train: BTreeSet<String> = ids[..n_train.min(ids.len())].iter().cloned().collect();
    let val: BTreeSet<String> = ids[n_train.min(ids.len())..].iter().cloned().collect();
    Ok(SplitPlan {
        train_reference_ids: train,
        val_reference_ids: val,
        ratio,
        seed,
    })
}

/// One repeat of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub outcome: std::result::Result<MetricPair, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatedResult {
    pub median: Option<MetricPair>,
    pub runs: Vec<RunRecord>,
    pub failures: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Run `experiment_fn` with seeds `base_seed + 0 .. n_repeats` and report
/// the element-wise median of SRCC and PLCC over the successful runs.
pub fn repeated_experiment(
    experiment_fn: &dyn Fn(u64) -> Result<MetricPair>,
    n_repeats: usize,
    base_seed: u64,
) -> Result<RepeatedResult> {
    if n_repeats == 0 {
        return Err(Error::validation("n_repeats must be >= 1"));
    }
    let mut runs = Vec::with_capacity(n_repeats);
    for i in 0..n_repeats {
        let seed = base_seed + i as u64;
        let outcome = experiment_fn(seed).map_err(|e| e.to_string());
        runs.push(RunRecord {
            run: i,
            seed,
            outcome,
        });
    }
    let ok: Vec<MetricPair> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().copied())
        .collect();
    let failures = runs.len() - ok.len();
    let median_pair = if ok.is_empty() {
        None
    } else {
        let mut srccs: Vec<f64> = ok.iter().map(|m| m.srcc).collect();
        let mut plccs: Vec<f64> = ok.iter().map(|m| m.plcc).collect();
        Some(MetricPair {
            srcc: median(&mut srccs),
            plcc: median(&mut plccs),
            n: ok[0].n,
        })
    };
    Ok(RepeatedResult {
        median: median_pair,
        runs,
        failures,
    })
}
