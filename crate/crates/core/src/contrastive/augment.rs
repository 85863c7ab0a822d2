use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;

/// Augmentation parameters. Each of jitter, resize and flip is applied
/// independently with probability `apply_prob`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub jitter_sigma: f64,
    /// Per-point displacement norm bound.
    pub jitter_clip: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub apply_prob: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            jitter_sigma: 0.01,
            jitter_clip: 0.05,
            scale_min: 0.8,
            scale_max: 1.25,
            apply_prob: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlipAxis {
    X,
    Y,
}

/// Which augmentations fired.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Applied {
    pub jitter: bool,
    pub scale: Option<f64>,
    pub flip: Option<FlipAxis>,
}

pub fn augment(pc: &PointCloud, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    augment_with(pc, &AugmentConfig::default(), &mut rng).0
}

pub fn augment_with<R: Rng>(
    pc: &PointCloud,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> (PointCloud, Applied) {
    let applied = Applied {
        jitter: rng.random_bool(cfg.apply_prob),
        scale: rng
            .random_bool(cfg.apply_prob)
            .then(|| rng.random_range(cfg.scale_min..=cfg.scale_max)),
        flip: rng.random_bool(cfg.apply_prob).then(|| {
            if rng.random_bool(0.5) {
                FlipAxis::X
            } else {
                FlipAxis::Y
            }
        }),
    };
    (apply(pc, cfg, &applied, rng), applied)
}

/// Runs the given augmentations; jitter noise is drawn from `rng`.
pub fn apply<R: Rng>(
    pc: &PointCloud,
    cfg: &AugmentConfig,
    applied: &Applied,
    rng: &mut R,
) -> PointCloud {
    let mut points = pc.points.clone();
    if applied.jitter {
        let normal = Normal::new(0.0, cfg.jitter_sigma).expect("finite jitter sigma");
        for p in &mut points {
            let mut d = crate::geometry::Vec3::new(
                normal.sample(rng),
                normal.sample(rng),
                normal.sample(rng),
            );
            let n = d.norm();
            if n > cfg.jitter_clip {
                d *= cfg.jitter_clip / n;
            }
            *p += d;
        }
    }
    if let Some(s) = applied.scale {
        for p in &mut points {
            *p *= s;
        }
    }
    match applied.flip {
        Some(FlipAxis::X) => points.iter_mut().for_each(|p| p.x = -p.x),
        Some(FlipAxis::Y) => points.iter_mut().for_each(|p| p.y = -p.y),
        None => {}
    }
    PointCloud {
        points,
        ..pc.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::cloud::normalize;
    use crate::geometry::Vec3;

    fn blob() -> PointCloud {
        let raw: Vec<Vec3> = (0..64)
            .map(|i| {
                let t = i as f64 * 0.37;
                Vec3::new(
                    t.cos() * (1.0 + 0.5 * (i % 5) as f64),
                    t.sin() * 0.4 + 0.3,
                    (i % 7) as f64 * 0.1,
                )
            })
            .collect();
        normalize(&raw).unwrap()
    }

    #[test]
    fn seeded_determinism() {
        let pc = blob();
        assert_eq!(augment(&pc, 42), augment(&pc, 42));
        assert_ne!(augment(&pc, 42).points, augment(&pc, 43).points);
    }

    #[test]
    fn jitter_is_clipped() {
        let pc = blob();
        let cfg = AugmentConfig {
            jitter_sigma: 0.2,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let only = Applied {
            jitter: true,
            ..Default::default()
        };
        let out = apply(&pc, &cfg, &only, &mut rng);
        for (a, b) in pc.points.iter().zip(&out.points) {
            assert!((a - b).norm() <= cfg.jitter_clip + 1e-15);
        }
    }

    #[test]
    fn flip_mirrors_one_coordinate() {
        let pc = blob();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = apply(
            &pc,
            &AugmentConfig::default(),
            &Applied {
                flip: Some(FlipAxis::Y),
                ..Default::default()
            },
            &mut rng,
        );
        let reflect = nalgebra::Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0));
        for (a, b) in pc.points.iter().zip(&out.points) {
            assert_eq!(reflect * a, *b);
        }
        // centroid of an off-center subset flips sign in y only
        let mean = |ps: &[Vec3]| ps[..10].iter().sum::<Vec3>() / 10.0;
        let (ma, mb) = (mean(&pc.points), mean(&out.points));
        assert_eq!((mb.x, mb.y, mb.z), (ma.x, -ma.y, ma.z));
    }

    #[test]
    fn each_augmentation_fires_about_half_the_time() {
        let pc = blob();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = AugmentConfig::default();
        let (mut j, mut s, mut f) = (0, 0, 0);
        for _ in 0..2000 {
            let (_, a) = augment_with(&pc, &cfg, &mut rng);
            j += a.jitter as usize;
            s += a.scale.is_some() as usize;
            f += a.flip.is_some() as usize;
            if let Some(k) = a.scale {
                assert!((0.8..=1.25).contains(&k));
            }
        }
        for c in [j, s, f] {
            assert!((900..1100).contains(&c), "{c}");
        }
    }
}
