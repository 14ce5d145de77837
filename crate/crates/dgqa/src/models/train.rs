//! The two trainable heads (domain classifier, quality regressor), their
//! losses, and the mini-batch training loops.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState, TrainConfig};
use super::mlp::{softmax, Mlp};
use crate::distortion::{DatasetSample, DomainDataset, DomainId};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NormStats, PatchMode, PatchPolicy, FEATURE_DIM};
use crate::raster::RasterImage;

pub const DEFAULT_HIDDEN: usize = 32;
const PROB_CLAMP: f64 = 1e-12;

/// Multi-source domain classifier: standardized NSS features through a
/// small MLP with a softmax output per source domain.
#[derive(Debug, Clone)]
pub struct SoftmaxClassifier {
    pub mlp: Mlp,
    pub norm_stats: NormStats,
    /// Domain id of each output class, in class order.
    pub domain_ids: Vec<DomainId>,
    pub config: TrainConfig,
}

impl SoftmaxClassifier {
    pub fn zeros(input_dim: usize, hidden: Option<usize>, domain_ids: Vec<DomainId>) -> Self {
        SoftmaxClassifier {
            mlp: Mlp::zeros(input_dim, hidden, domain_ids.len()),
            norm_stats: NormStats::identity(input_dim),
            domain_ids,
            config: TrainConfig::default(),
        }
    }

    pub fn k(&self) -> usize {
        self.mlp.output_dim
    }

    /// Per-domain probability vector; components sum to 1.
    pub fn classify(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        let z = self.norm_stats.apply(x);
        let (logits, _) = self.mlp.forward(&z)?;
        Ok(softmax(&logits))
    }
}

/// Quality regressor: same feature pathway, scalar output. Training
/// standardizes the quality targets so the loss scale is independent of the
/// label range; predictions are mapped back.
#[derive(Debug, Clone)]
pub struct Regressor {
    pub mlp: Mlp,
    pub norm_stats: NormStats,
    pub target_mean: f64,
    pub target_std: f64,
    pub config: TrainConfig,
}

impl Regressor {
    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        let z = self.norm_stats.apply(x);
        let (logits, _) = self.mlp.forward(&z)?;
        Ok(logits[0] * self.target_std + self.target_mean)
    }
}

/// Per-epoch mean losses; validation entries present only when a holdout
/// was supplied.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

/// Mean categorical cross-entropy over a labeled batch, probabilities
/// clamped away from 0 and 1.
pub fn cross_entropy_loss(
    model: &SoftmaxClassifier,
    batch: &[(FeatureVector, usize)],
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::validation("empty batch"));
    }
    let mut total = 0.0;
    for (x, label) in batch {
        if *label >= model.k() {
            return Err(Error::validation(format!(
                "label {label} out of range for k={}",
                model.k()
            )));
        }
        let p = model.classify(x)?;
        total += -p[*label].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln();
    }
    Ok(total / batch.len() as f64)
}

/// Mean absolute error over a batch.
pub fn l1_loss(model: &Regressor, batch: &[(FeatureVector, f64)]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::validation("empty batch"));
    }
    let mut total = 0.0;
    for (x, y) in batch {
        total += (model.predict(x)? - y).abs();
    }
    Ok(total / batch.len() as f64)
}

/// Batch cross-entropy on standardized inputs; optionally accumulates the
/// parameter gradient.
pub(crate) fn ce_batch(
    mlp: &Mlp,
    xs: &[Vec<f64>],
    labels: &[usize],
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    let m = xs.len() as f64;
    let mut total = 0.0;
    for (x, &label) in xs.iter().zip(labels) {
        let (logits, act) = mlp.forward(x)?;
        let p = softmax(&logits);
        total += -p[label].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln();
        if let Some(g) = grad.as_deref_mut() {
            let mut dlogits = p;
            dlogits[label] -= 1.0;
            for d in &mut dlogits {
                *d /= m;
            }
            mlp.accumulate_grad(x, &act, &dlogits, g);
        }
    }
    Ok(total / m)
}

/// Batch L1 on standardized inputs; optionally accumulates the gradient.
pub(crate) fn l1_batch(
    mlp: &Mlp,
    xs: &[Vec<f64>],
    targets: &[f64],
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    let m = xs.len() as f64;
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(targets) {
        let (logits, act) = mlp.forward(x)?;
        let r = logits[0] - y;
        total += r.abs();
        if let Some(g) = grad.as_deref_mut() {
            let dlogits = [r.signum() / m];
            mlp.accumulate_grad(x, &act, &dlogits, g);
        }
    }
    Ok(total / m)
}

struct LoopSpec<'a> {
    xs: &'a [Vec<f64>],
    val_xs: &'a [Vec<f64>],
    hidden: Option<usize>,
    output_dim: usize,
    config: &'a TrainConfig,
}

fn run_training(
    spec: &LoopSpec,
    loss: impl Fn(&Mlp, &[usize], Option<&mut [f64]>) -> Result<f64>,
    val_loss: impl Fn(&Mlp) -> Result<f64>,
) -> Result<(Mlp, TrainLog)> {
    spec.config.validate()?;
    let input_dim = spec.xs[0].len();
    let mut mlp = Mlp::init(
        input_dim,
        spec.hidden,
        spec.output_dim,
        spec.config.seed ^ 0xa5a5_5a5a,
    );
    let mut state = AdamState::new(mlp.params.len());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(spec.config.seed);
    let mut log = TrainLog::default();
    let mut indices: Vec<usize> = (0..spec.xs.len()).collect();
    let mut grad = vec![0.0; mlp.params.len()];

    for _ in 0..spec.config.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut epoch_total = 0.0;
        let mut batches = 0usize;
        for chunk in indices.chunks(spec.config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let batch_loss = loss(&mlp, chunk, Some(&mut grad))?;
            adam_step(&mut mlp.params, &grad, &mut state, spec.config)?;
            epoch_total += batch_loss;
            batches += 1;
        }
        if !mlp.all_finite() {
            return Err(Error::validation("non-finite parameters during training"));
        }
        log.epoch_loss.push(epoch_total / batches.max(1) as f64);
        if !spec.val_xs.is_empty() {
            log.val_loss.push(val_loss(&mlp)?);
        }
    }
    Ok((mlp, log))
}

/// Train the domain classifier on precomputed features. `labels` are class
/// indices into `domain_ids`; an optional holdout is logged per epoch.
pub fn fit_classifier(
    features: &[FeatureVector],
    labels: &[usize],
    domain_ids: Vec<DomainId>,
    hidden: Option<usize>,
    config: &TrainConfig,
    holdout: Option<(&[FeatureVector], &[usize])>,
) -> Result<(SoftmaxClassifier, TrainLog)> {
    let k = domain_ids.len();
    if k < 2 {
        return Err(Error::validation("need at least 2 domains"));
    }
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::validation("features/labels length mismatch or empty"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::validation(format!("label {bad} out of range")));
    }
    let norm_stats = NormStats::fit(features)?;
    let xs: Vec<Vec<f64>> = features.iter().map(|f| norm_stats.apply(f)).collect();
    let (val_xs, val_labels): (Vec<Vec<f64>>, Vec<usize>) = match holdout {
        Some((hf, hl)) => (hf.iter().map(|f| norm_stats.apply(f)).collect(), hl.to_vec()),
        None => (Vec::new(), Vec::new()),
    };
    let spec = LoopSpec {
        xs: &xs,
        val_xs: &val_xs,
        hidden,
        output_dim: k,
        config,
    };
    let (mlp, log) = run_training(
        &spec,
        |mlp, chunk, grad| {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let bl: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            ce_batch(mlp, &bx, &bl, grad)
        },
        |mlp| ce_batch(mlp, &val_xs, &val_labels, None),
    )?;
    Ok((
        SoftmaxClassifier {
            mlp,
            norm_stats,
            domain_ids,
            config: *config,
        },
        log,
    ))
}

/// Train the quality regressor on precomputed features.
pub fn fit_regressor(
    features: &[FeatureVector],
    targets: &[f64],
    hidden: Option<usize>,
    config: &TrainConfig,
    holdout: Option<(&[FeatureVector], &[f64])>,
) -> Result<(Regressor, TrainLog)> {
    if features.is_empty() || features.len() != targets.len() {
        return Err(Error::validation("features/targets length mismatch or empty"));
    }
    let norm_stats = NormStats::fit(features)?;
    let xs: Vec<Vec<f64>> = features.iter().map(|f| norm_stats.apply(f)).collect();
    let n = targets.len() as f64;
    let target_mean = targets.iter().sum::<f64>() / n;
    let target_var = targets.iter().map(|t| (t - target_mean).powi(2)).sum::<f64>() / n;
    let target_std = if target_var.sqrt() > 1e-12 {
        target_var.sqrt()
    } else {
        1.0
    };
    let targets: Vec<f64> = targets.iter().map(|t| (t - target_mean) / target_std).collect();
    let (val_xs, val_targets): (Vec<Vec<f64>>, Vec<f64>) = match holdout {
        Some((hf, ht)) => (
            hf.iter().map(|f| norm_stats.apply(f)).collect(),
            ht.iter().map(|t| (t - target_mean) / target_std).collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    let spec = LoopSpec {
        xs: &xs,
        val_xs: &val_xs,
        hidden,
        output_dim: 1,
        config,
    };
    let (mlp, log) = run_training(
        &spec,
        |mlp, chunk, grad| {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let bt: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            l1_batch(mlp, &bx, &bt, grad)
        },
        |mlp| l1_batch(mlp, &val_xs, &val_targets, None),
    )?;
    Ok((
        Regressor {
            mlp,
            norm_stats,
            target_mean,
            target_std,
            config: *config,
        },
        log,
    ))
}

/// Per-sample feature hook: receives the sample image and a deterministic
/// sample key for patch seeding, returns one or more feature vectors.
pub type FeatureFn<'a> = &'a dyn Fn(&RasterImage, u64) -> Result<Vec<FeatureVector>>;

/// Extract one patch per image (train mode) and return its features.
pub fn train_patch_features(policy: &PatchPolicy) -> impl Fn(&RasterImage, u64) -> Result<Vec<FeatureVector>> + '_ {
    move |image, key| {
        let p = policy.with_seed(policy.seed ^ key.wrapping_mul(0x2545_f491_4f6c_dd1d));
        let patches = crate::features::sample_patches(image, &p, PatchMode::Train)?;
        patches
            .iter()
            .map(crate::features::extract_features)
            .collect()
    }
}

/// Train the multi-source domain classifier end-to-end from datasets.
pub fn train_classifier(
    domains: &[&DomainDataset],
    feature_fn: FeatureFn,
    config: &TrainConfig,
    hidden: Option<usize>,
) -> Result<(SoftmaxClassifier, TrainLog)> {
    if domains.len() < 2 {
        return Err(Error::validation("need at least 2 domains"));
    }
    if domains.iter().any(|d| d.is_empty()) {
        return Err(Error::validation("every domain must be non-empty"));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut key = 0u64;
    for (class, domain) in domains.iter().enumerate() {
        for sample in &domain.samples {
            for f in feature_fn(&sample.image, key)? {
                features.push(f);
                labels.push(class);
            }
            key += 1;
        }
    }
    let domain_ids = domains.iter().map(|d| d.domain).collect();
    fit_classifier(&features, &labels, domain_ids, hidden, config, None)
}

/// Train the quality regressor on merged domain samples.
pub fn train_regressor(
    samples: &[&DatasetSample],
    feature_fn: FeatureFn,
    config: &TrainConfig,
    hidden: Option<usize>,
) -> Result<(Regressor, TrainLog)> {
    if samples.is_empty() {
        return Err(Error::validation("empty training data"));
    }
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (key, sample) in samples.iter().enumerate() {
        for f in feature_fn(&sample.image, key as u64)? {
            features.push(f);
            targets.push(sample.quality);
        }
    }
    fit_regressor(&features, &targets, hidden, config, None)
}

/// Image-level quality score: mean over the policy's test patches.
pub fn predict_quality(
    model: &Regressor,
    image: &RasterImage,
    policy: &PatchPolicy,
) -> Result<f64> {
    let patches = crate::features::sample_patches(image, policy, PatchMode::Test)?;
    let mut total = 0.0;
    for patch in &patches {
        total += model.predict(&crate::features::extract_features(patch)?)?;
    }
    Ok(total / patches.len() as f64)
}

/// Versioned JSON checkpoint; round-trip reproduces predictions bit-exactly.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: String,
    pub input_dim: usize,
    pub hidden: Option<usize>,
    pub output_dim: usize,
    pub params: Vec<f64>,
    pub norm_stats: NormStats,
    pub domain_ids: Vec<DomainId>,
    /// Target standardization of the regressor head (0/1 for classifiers).
    #[serde(default)]
    pub target_mean: f64,
    #[serde(default = "one")]
    pub target_std: f64,
    pub config: TrainConfig,
}

fn one() -> f64 {
    1.0
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn from_classifier(model: &SoftmaxClassifier) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: "classifier".to_string(),
            input_dim: model.mlp.input_dim,
            hidden: model.mlp.hidden,
            output_dim: model.mlp.output_dim,
            params: model.mlp.params.clone(),
            norm_stats: model.norm_stats.clone(),
            domain_ids: model.domain_ids.clone(),
            target_mean: 0.0,
            target_std: 1.0,
            config: model.config,
        }
    }

    pub fn from_regressor(model: &Regressor) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: "regressor".to_string(),
            input_dim: model.mlp.input_dim,
            hidden: model.mlp.hidden,
            output_dim: 1,
            params: model.mlp.params.clone(),
            norm_stats: model.norm_stats.clone(),
            domain_ids: Vec::new(),
            target_mean: model.target_mean,
            target_std: model.target_std,
            config: model.config,
        }
    }

    pub fn into_classifier(self) -> Result<SoftmaxClassifier> {
        self.check("classifier")?;
        Ok(SoftmaxClassifier {
            mlp: Mlp {
                input_dim: self.input_dim,
                hidden: self.hidden,
                output_dim: self.output_dim,
                params: self.params,
            },
            norm_stats: self.norm_stats,
            domain_ids: self.domain_ids,
            config: self.config,
        })
    }

    pub fn into_regressor(self) -> Result<Regressor> {
        self.check("regressor")?;
        Ok(Regressor {
            mlp: Mlp {
                input_dim: self.input_dim,
                hidden: self.hidden,
                output_dim: 1,
                params: self.params,
            },
            norm_stats: self.norm_stats,
            target_mean: self.target_mean,
            target_std: self.target_std,
            config: self.config,
        })
    }

    fn check(&self, kind: &str) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        if self.kind != kind {
            return Err(Error::validation(format!(
                "checkpoint kind {} is not a {kind}",
                self.kind
            )));
        }
        let expected = Mlp::param_count(self.input_dim, self.hidden, self.output_dim);
        if self.params.len() != expected {
            return Err(Error::validation("checkpoint parameter count mismatch"));
        }
        if self.norm_stats.mean.len() != self.input_dim && self.input_dim == FEATURE_DIM {
            return Err(Error::validation("checkpoint norm_stats dimension mismatch"));
        }
        Ok(())
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}
