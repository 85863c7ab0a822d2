use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::{augment_with, AugmentConfig};
use super::cloud::PointCloud;
use super::loss::nt_xent_grad;
use super::network::{backward, forward, input_matrix, EncoderParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Samples per batch; each contributes two views.
    pub batch_size: usize,
    pub temperature: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub augment: AugmentConfig,
    pub seed: u64,
    /// Update only the projector.
    pub freeze_encoder: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4,
            temperature: 0.1,
            learning_rate: 0.05,
            epochs: 10,
            augment: AugmentConfig::default(),
            seed: 0,
            freeze_encoder: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig("batch size must be at least 2".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning rate must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutput {
    pub params: EncoderParams,
    /// Mean batch loss of every epoch.
    pub loss_curve: Vec<f64>,
}

/// NT-Xent of a batch of views (`views[2k]`, `views[2k+1]` are a pair) and
/// its gradient with respect to every weight.
pub fn batch_loss_grad(
    params: &EncoderParams,
    views: &[PointCloud],
    tau: f64,
    freeze_encoder: bool,
) -> Result<(f64, Vec<f64>)> {
    let traces: Vec<_> = views
        .iter()
        .map(|v| forward(input_matrix(v), params))
        .collect();
    let z: Vec<Vec<f64>> = traces.iter().map(|t| t.z.to_vec()).collect();
    let (loss, dz) = nt_xent_grad(&z, tau)?;
    let mut grad = vec![0.0; params.weights.len()];
    for (t, d) in traces.iter().zip(dz) {
        backward(t, &Array1::from(d), params, &mut grad, freeze_encoder);
    }
    Ok((loss, grad))
}

pub fn batch_loss(params: &EncoderParams, views: &[PointCloud], tau: f64) -> Result<f64> {
    let z: Vec<Vec<f64>> = views
        .iter()
        .map(|v| forward(input_matrix(v), params).z.to_vec())
        .collect();
    super::loss::nt_xent(&z, tau)
}

/// Plain mini-batch gradient descent on NT-Xent. Each epoch shuffles the
/// dataset, drops the incomplete last batch, and draws two fresh augmented
/// views per sample. Single-threaded, so the loss curve is bit-identical for
/// a fixed seed.
pub fn train(
    dataset: &[PointCloud],
    cfg: &TrainConfig,
    init: EncoderParams,
) -> Result<TrainOutput> {
    cfg.validate()?;
    init.validate()?;
    if dataset.len() < cfg.batch_size {
        return Err(Error::InvalidConfig(format!(
            "dataset of {} clouds is smaller than one batch of {}",
            dataset.len(),
            cfg.batch_size
        )));
    }
    let mut params = init;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut losses = Vec::new();
        for (step, batch) in order.chunks_exact(cfg.batch_size).enumerate() {
            let views: Vec<PointCloud> = batch
                .iter()
                .flat_map(|&i| {
                    let a = augment_with(&dataset[i], &cfg.augment, &mut rng).0;
                    let b = augment_with(&dataset[i], &cfg.augment, &mut rng).0;
                    [a, b]
                })
                .collect();
            let (loss, grad) =
                batch_loss_grad(&params, &views, cfg.temperature, cfg.freeze_encoder)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, step });
            }
            for (w, g) in params.weights.iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
            losses.push(loss);
        }
        curve.push(losses.iter().sum::<f64>() / losses.len() as f64);
    }
    Ok(TrainOutput {
        params,
        loss_curve: curve,
    })
}
