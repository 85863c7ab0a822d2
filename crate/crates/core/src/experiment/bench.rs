use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use super::corpus::sample_object;
use crate::contrastive::{cloud_from_mask, EncoderParams};
use crate::demo::{record_demo, DemoStore};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::pipeline::{detect, PipelineConfig};
use crate::plan::{pre_grasp_for, GraspPlan, Provenance};
use crate::scene::{
    evaluate_grasp, generate_scene, render, success_rates, Category, Outcome, Scene, SceneConfig,
    SceneObject, SuccessRates,
};

pub const REPORT_VERSION: u32 = 1;
/// A category whose rate without demonstrations is below this gets demos.
pub const HARD_CATEGORY_RATE: f64 = 0.5;
const PLACEMENT_RETRIES: u64 = 16;
const DEMO_STREAM: u64 = 1 << 40;
/// Demonstrations are recorded on an object set down near the camera nadir.
const DEMO_SPREAD: f64 = 0.06;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenes: usize,
    pub objects_per_scene: usize,
    pub seed: u64,
    pub categories: Vec<Category>,
    pub pipeline: PipelineConfig,
    pub scene: SceneConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenes: 40,
            objects_per_scene: 4,
            seed: 0,
            categories: Category::ALL.to_vec(),
            pipeline: PipelineConfig::default(),
            scene: SceneConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub scene: usize,
    pub object_id: u32,
    pub category: Category,
    /// 1 or 2.
    pub attempt: u8,
    pub outcome: Outcome,
    pub provenance: Option<Provenance>,
    pub similarity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub version: u32,
    pub seed: u64,
    pub demos_per_category: usize,
    pub config: BenchConfig,
    pub overall: SuccessRates,
    pub per_category: BTreeMap<Category, SuccessRates>,
    pub log: Vec<AttemptRecord>,
}

fn rates_of<'a>(log: impl Iterator<Item = &'a AttemptRecord>) -> Result<SuccessRates> {
    let keyed: Vec<((usize, u32), Outcome)> =
        log.map(|r| ((r.scene, r.object_id), r.outcome)).collect();
    success_rates(&keyed)
}

impl BenchmarkReport {
    fn from_log(cfg: &BenchConfig, demos: usize, log: Vec<AttemptRecord>) -> Result<Self> {
        let overall = rates_of(log.iter())?;
        let mut per_category = BTreeMap::new();
        for c in &cfg.categories {
            if log.iter().any(|r| r.category == *c) {
                per_category.insert(*c, rates_of(log.iter().filter(|r| r.category == *c))?);
            }
        }
        Ok(Self {
            version: REPORT_VERSION,
            seed: cfg.seed,
            demos_per_category: demos,
            config: cfg.clone(),
            overall,
            per_category,
            log,
        })
    }

    /// Recomputes every rate from the embedded log.
    pub fn verify(&self) -> Result<()> {
        let again = Self::from_log(&self.config, self.demos_per_category, self.log.clone())?;
        if again.overall != self.overall || again.per_category != self.per_category {
            return Err(Error::Format(
                "report rates do not match its outcome log".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.version != REPORT_VERSION {
            return Err(Error::Format(format!(
                "unsupported report version {}",
                r.version
            )));
        }
        Ok(r)
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<14}{:>9}{:>10}{:>10}\n",
            "category", "objects", "attempt", "object"
        );
        let mut row = |name: &str, r: &SuccessRates, n: usize| {
            let _ = writeln!(
                s,
                "{:<14}{:>9}{:>9.1}%{:>9.1}%",
                name,
                n,
                100.0 * r.attempt_centric,
                100.0 * r.object_centric
            );
        };
        let objects = |c: Option<Category>| {
            self.log
                .iter()
                .filter(|r| r.attempt == 1 && c.is_none_or(|c| r.category == c))
                .count()
        };
        for (c, r) in &self.per_category {
            row(c.name(), r, objects(Some(*c)));
        }
        row("overall", &self.overall, objects(None));
        s
    }
}

/// Scene `index` of a benchmark: its own random stream, re-drawn when the
/// objects do not fit.
pub fn bench_scene(cfg: &BenchConfig, index: usize) -> Result<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let mut last = None;
    for _ in 0..PLACEMENT_RETRIES {
        match generate_scene(
            rng.random(),
            cfg.objects_per_scene,
            &cfg.categories,
            &cfg.scene,
        ) {
            Ok(s) => return Ok(s),
            Err(e @ Error::PlacementFailure { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

fn run_scene(
    index: usize,
    params: &EncoderParams,
    store: &DemoStore,
    cfg: &BenchConfig,
) -> Result<Vec<AttemptRecord>> {
    let scene = bench_scene(cfg, index)?;
    let (_, detections) = detect(&scene, params, store, &cfg.pipeline)?;
    let mut log = Vec::new();
    for det in &detections {
        let category = scene
            .object(det.object_id)
            .map(|o| o.category)
            .ok_or(Error::EmptyMask)?;
        let outcome = match &det.plan {
            Some(plan) => evaluate_grasp(&scene, det.object_id, plan, &cfg.pipeline.gripper),
            None => Outcome::Miss,
        };
        // a failed attempt is retried once with the same plan
        let attempts = if outcome.is_success() { 1 } else { 2 };
        for attempt in 1..=attempts {
            log.push(AttemptRecord {
                scene: index,
                object_id: det.object_id,
                category,
                attempt,
                outcome,
                provenance: det.provenance(),
                similarity: det.similarity,
            });
        }
    }
    Ok(log)
}

/// Runs every scene once with the given demonstrations.
pub fn run_benchmark(
    params: &EncoderParams,
    store: &DemoStore,
    cfg: &BenchConfig,
    demos: usize,
) -> Result<BenchmarkReport> {
    if cfg.scenes == 0 || cfg.objects_per_scene == 0 {
        return Err(Error::EmptyLog);
    }
    let logs: Vec<Vec<AttemptRecord>> = (0..cfg.scenes)
        .into_par_iter()
        .map(|i| run_scene(i, params, store, cfg))
        .collect::<Result<_>>()?;
    BenchmarkReport::from_log(cfg, demos, logs.into_iter().flatten().collect())
}

/// Initial grasps only.
pub fn bench_normal(params: &EncoderParams, cfg: &BenchConfig) -> Result<BenchmarkReport> {
    run_benchmark(params, &DemoStore::new(), cfg, 0)
}

fn lone(obj: &SceneObject) -> Scene {
    Scene {
        objects: vec![obj.clone()],
        seed: 0,
        workspace: Default::default(),
    }
}

/// Candidate grasps a demonstrator would try, in preference order: rim
/// pinches for walled objects, a pinch across the short side for bars, and
/// a yaw sweep over the middle for everything else.
fn candidate_grasps(obj: &SceneObject) -> Vec<Pose> {
    let solid = obj.solid();
    let top = solid.local_bounds().1.z;
    let yaw = obj.pose.yaw();
    let centre = obj.pose.position;
    let mut out = Vec::new();
    let heights = |from: f64| {
        let mut z = from;
        let mut hs = Vec::new();
        while z >= 0.002 {
            hs.push(z);
            z -= 0.003;
        }
        hs
    };
    if let Some((inner, outer)) = solid.wall() {
        let r = (inner + outer) / 2.0;
        // low pinches on a plate carry over to plates of other heights
        let mut hs = heights(top - 0.004);
        if obj.category == Category::Plate {
            hs.reverse();
        }
        for z in hs {
            for k in 0..24 {
                let b = yaw + k as f64 * PI / 12.0;
                let p = centre + Vec3::new(r * b.cos(), r * b.sin(), z);
                out.push(Pose::from_position_yaw(p, b));
            }
        }
        return out;
    }
    let along = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let offsets: &[f64] = if obj.category == Category::Bar {
        &[0.0, 0.02, -0.02, 0.04, -0.04]
    } else {
        &[0.0]
    };
    for z in heights(top - 0.01) {
        for off in offsets {
            for k in 0..12 {
                let y = yaw + FRAC_PI_2 + k as f64 * PI / 12.0;
                out.push(Pose::from_position_yaw(
                    centre + along * *off + Vec3::new(0.0, 0.0, z),
                    y,
                ));
            }
        }
    }
    out
}

/// Waypoints of a successful demonstration on a lone object: from the
/// detection pose over an arc down to the grasp. `None` when no candidate
/// grasp succeeds.
pub fn scripted_demonstration(obj: &SceneObject, cfg: &PipelineConfig) -> Option<Vec<Pose>> {
    let scene = lone(obj);
    let grasp = candidate_grasps(obj).into_iter().find(|g| {
        evaluate_grasp(
            &scene,
            obj.id,
            &GraspPlan::direct(*g, cfg.m_points),
            &cfg.gripper,
        )
        .is_success()
    })?;
    let start = cfg.detection_ee_pose();
    let pre = pre_grasp_for(&grasp);
    let mid = Pose::new(
        (start.position + pre.position) / 2.0 + Vec3::new(0.0, 0.0, 0.03),
        *grasp.orientation(),
    );
    Some(vec![start, mid, pre, grasp])
}

/// `k` demonstrations for each category, each on a freshly drawn lone
/// object. The first `j` demos of a category do not depend on `k`.
pub fn scripted_store(
    categories: &[Category],
    k: usize,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<DemoStore> {
    let mut store = DemoStore::new();
    for (ci, c) in categories.iter().enumerate() {
        let mut made = 0;
        let mut draw = 0u64;
        while made < k {
            if draw > 64 * k as u64 {
                return Err(Error::InvalidConfig(format!("no demonstrable {c} found")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(DEMO_STREAM + ((ci as u64) << 16) + draw);
            draw += 1;
            let obj = sample_object(*c, (DEMO_SPREAD, DEMO_SPREAD), &mut rng);
            let Some(waypoints) = scripted_demonstration(&obj, cfg) else {
                continue;
            };
            let ee = cfg.detection_ee_pose();
            let frame = render(
                &lone(&obj),
                &ee.compose(&cfg.calibration.transform),
                &cfg.intrinsics,
            );
            let Some(mask) = frame.mask(obj.id) else {
                continue;
            };
            let cloud = cloud_from_mask(&frame, mask, &cfg.calibration, &ee)?;
            store.push(record_demo(c.name(), cloud, waypoints)?);
            made += 1;
        }
    }
    Ok(store)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoBenchReport {
    pub version: u32,
    pub seed: u64,
    /// Categories below the hard-category rate without demonstrations.
    pub hard_categories: Vec<Category>,
    /// One report per demo count, starting at zero.
    pub rows: Vec<BenchmarkReport>,
}

impl DemoBenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.version != REPORT_VERSION {
            return Err(Error::Format(format!(
                "unsupported report version {}",
                r.version
            )));
        }
        Ok(r)
    }

    pub fn rate(&self, demos: usize, category: Option<Category>) -> Option<f64> {
        let row = self.rows.iter().find(|r| r.demos_per_category == demos)?;
        match category {
            Some(c) => row.per_category.get(&c).map(|r| r.attempt_centric),
            None => Some(row.overall.attempt_centric),
        }
    }

    /// Attempt-centric rates, categories down and demo counts across.
    pub fn table(&self) -> String {
        let mut s = format!("{:<14}", "category");
        for r in &self.rows {
            let _ = write!(s, "{:>10}", format!("{} demos", r.demos_per_category));
        }
        s.push('\n');
        let Some(first) = self.rows.first() else {
            return s;
        };
        let mut names: Vec<Option<Category>> =
            first.per_category.keys().map(|c| Some(*c)).collect();
        names.push(None);
        for c in names {
            let label = c.map_or("overall", |c| c.name());
            let mark = if c.is_some_and(|c| self.hard_categories.contains(&c)) {
                "*"
            } else {
                ""
            };
            let _ = write!(s, "{:<14}", format!("{label}{mark}"));
            for r in &self.rows {
                let v = self.rate(r.demos_per_category, c).unwrap_or(f64::NAN);
                let _ = write!(s, "{:>9.1}%", 100.0 * v);
            }
            s.push('\n');
        }
        s
    }
}

/// The zero-demo benchmark, then hard categories with 1..=`max_demos`
/// scripted demonstrations each.
pub fn bench_demo(
    params: &EncoderParams,
    cfg: &BenchConfig,
    max_demos: usize,
) -> Result<DemoBenchReport> {
    let base = bench_normal(params, cfg)?;
    let hard: Vec<Category> = base
        .per_category
        .iter()
        .filter(|(_, r)| r.attempt_centric < HARD_CATEGORY_RATE)
        .map(|(c, _)| *c)
        .collect();
    log::info!("hard categories: {hard:?}");
    let full = scripted_store(&hard, max_demos, cfg.seed, &cfg.pipeline)?;
    let mut rows = vec![base];
    for k in 1..=max_demos {
        let mut store = DemoStore::new();
        for r in full.records() {
            if store.count_for(&r.category) < k {
                store.push(r.clone());
            }
        }
        rows.push(run_benchmark(params, &store, cfg, k)?);
    }
    Ok(DemoBenchReport {
        version: REPORT_VERSION,
        seed: cfg.seed,
        hard_categories: hard,
        rows,
    })
}
