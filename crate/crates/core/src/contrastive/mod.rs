//! Self-supervised point-cloud representation: normalization, augmentation,
//! the encoder/projector network, NT-Xent and SGD training.

mod augment;
mod cloud;
mod loss;
mod network;
mod train;

use base64::Engine;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub use augment::{apply, augment, augment_with, Applied, AugmentConfig, FlipAxis};
pub use cloud::{cloud_from_mask, normalize, PointCloud, CLOUD_POINTS, MIN_POINTS};
pub use loss::{cosine, nt_xent, nt_xent_grad};
pub use network::{encode, similarity, similarity_of, EncoderParams, Encoding};
pub use train::{batch_loss, batch_loss_grad, train, TrainConfig, TrainOutput};

use crate::error::{Error, Result};

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    point_widths: Vec<usize>,
    projector_widths: Vec<usize>,
    rng_seed: u64,
    /// Little-endian f64 weights, base64.
    weights: String,
}

impl EncoderParams {
    pub fn to_json(&self) -> Result<String> {
        let bytes: Vec<u8> = self.weights.iter().flat_map(|w| w.to_le_bytes()).collect();
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            point_widths: self.point_widths.clone(),
            projector_widths: self.projector_widths.clone(),
            rng_seed: self.rng_seed,
            weights: base64::engine::general_purpose::STANDARD.encode(bytes),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(file.weights.as_bytes())
            .map_err(|e| Error::Format(format!("model weights: {e}")))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Format(
                "model weights are not a whole number of f64".into(),
            ));
        }
        let weights = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let p = Self {
            point_widths: file.point_widths,
            projector_widths: file.projector_widths,
            weights,
            rng_seed: file.rng_seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
