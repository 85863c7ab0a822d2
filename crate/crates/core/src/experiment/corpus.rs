use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::contrastive::{
    augment_with, cloud_from_mask, encode, similarity_of, train, EncoderParams, PointCloud,
    TrainConfig, TrainOutput, CLOUD_POINTS,
};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, HandEyeCalibration};
use crate::scene::{default_camera_pose, render, Category, Scene, SceneObject, Workspace};

/// Kept clear of the workspace edge when placing corpus objects.
const PLACEMENT_MARGIN: f64 = 0.03;
const HOLDOUT_STREAM: u64 = 1 << 32;

/// Normalized, fixed-size cloud of a lone object seen from the detection
/// pose, labelled with its family.
pub fn render_object_cloud(obj: &SceneObject) -> Result<PointCloud> {
    let scene = Scene {
        objects: vec![obj.clone()],
        seed: 0,
        workspace: Workspace::default(),
    };
    let cam = default_camera_pose();
    let frame = render(&scene, &cam, &CameraIntrinsics::default());
    let mask = frame.mask(obj.id).ok_or(Error::EmptyMask)?;
    let cal = HandEyeCalibration::default();
    let ee = cam.compose(&cal.transform.inverse());
    Ok(cloud_from_mask(&frame, mask, &cal, &ee)?
        .fixed_size(CLOUD_POINTS)
        .with_hint(obj.category.name()))
}

/// Object of `category` with random size and yaw, centred anywhere within
/// `half` of the camera nadir.
pub(crate) fn sample_object<R: Rng>(
    category: Category,
    half: (f64, f64),
    rng: &mut R,
) -> SceneObject {
    let size = category.sample_size(rng);
    let x = rng.random_range(-half.0..half.0);
    let y = rng.random_range(-half.1..half.1);
    let yaw = rng.random_range(0.0..2.0 * PI);
    SceneObject::new(0, category, size, x, y, yaw)
}

/// `per_family` clouds of each family, interleaved by family. Sample `i`
/// draws from its own random stream, so rendering runs in parallel without
/// changing the result.
pub fn generate_corpus(
    families: &[Category],
    per_family: usize,
    seed: u64,
) -> Result<Vec<PointCloud>> {
    corpus_stream(families, per_family, seed, 0)
}

/// Like [`generate_corpus`] but from disjoint random streams.
pub fn generate_holdout(
    families: &[Category],
    per_family: usize,
    seed: u64,
) -> Result<Vec<PointCloud>> {
    corpus_stream(families, per_family, seed, HOLDOUT_STREAM)
}

fn corpus_stream(
    families: &[Category],
    per_family: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<PointCloud>> {
    if families.is_empty() {
        return Err(Error::InvalidConfig("no families to sample".into()));
    }
    let ws = Workspace::default();
    let half = (
        ws.x_max.min(-ws.x_min) - PLACEMENT_MARGIN,
        ws.y_max.min(-ws.y_min) - PLACEMENT_MARGIN,
    );
    (0..families.len() * per_family)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream + i as u64);
            render_object_cloud(&sample_object(families[i % families.len()], half, &mut rng))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub families: Vec<Category>,
    pub samples_per_family: usize,
    pub train: TrainConfig,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            families: Category::ALL.to_vec(),
            samples_per_family: 40,
            train: TrainConfig::default(),
        }
    }
}

/// Renders the corpus and trains a fresh default-architecture network.
pub fn pretrain(cfg: &PretrainConfig) -> Result<TrainOutput> {
    let corpus = generate_corpus(&cfg.families, cfg.samples_per_family, cfg.train.seed)?;
    log::info!(
        "pretraining on {} clouds from {} families",
        corpus.len(),
        cfg.families.len()
    );
    train(
        &corpus,
        &cfg.train,
        EncoderParams::with_default_architecture(cfg.train.seed),
    )
}

/// Held-out quality of a representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    /// Mean cosine between two augmented views of the same cloud.
    pub positive_mean: f64,
    /// Mean cosine between clouds of different families.
    pub cross_family_mean: f64,
    /// Fraction of clouds whose nearest other cloud shares their family.
    pub top1_retrieval: f64,
}

impl RepresentationReport {
    pub fn margin(&self) -> f64 {
        self.positive_mean - self.cross_family_mean
    }
}

pub fn evaluate_representation(
    params: &EncoderParams,
    held_out: &[PointCloud],
    seed: u64,
) -> Result<RepresentationReport> {
    if held_out.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least two held-out clouds".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = crate::contrastive::AugmentConfig::default();
    let mut positive = 0.0;
    for pc in held_out {
        let a = encode(&augment_with(pc, &cfg, &mut rng).0, params).z;
        let b = encode(&augment_with(pc, &cfg, &mut rng).0, params).z;
        positive += similarity_of(&a, &b);
    }
    let z: Vec<Vec<f64>> = held_out.iter().map(|pc| encode(pc, params).z).collect();
    let (mut cross, mut n_cross, mut hits) = (0.0, 0usize, 0usize);
    for i in 0..z.len() {
        let mut best = (f64::NEG_INFINITY, i);
        for j in 0..z.len() {
            if i == j {
                continue;
            }
            let s = similarity_of(&z[i], &z[j]);
            if s > best.0 {
                best = (s, j);
            }
            if j > i && held_out[i].category_hint != held_out[j].category_hint {
                cross += s;
                n_cross += 1;
            }
        }
        hits += (held_out[best.1].category_hint == held_out[i].category_hint) as usize;
    }
    Ok(RepresentationReport {
        positive_mean: positive / held_out.len() as f64,
        cross_family_mean: if n_cross > 0 {
            cross / n_cross as f64
        } else {
            0.0
        },
        top1_retrieval: hits as f64 / held_out.len() as f64,
    })
}
