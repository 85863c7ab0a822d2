//! Demonstration store and the rules that turn a detected object, its
//! initial grasp and similar past demonstrations into a 6-DoF plan.

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use crate::contrastive::{similarity, EncoderParams, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose, Vec3};
use crate::grasp::InitialGrasp;
use crate::plan::{pre_grasp_for, GraspPlan, Provenance};

pub const MIN_WAYPOINTS: usize = 2;
pub const MAX_WAYPOINTS: usize = 9;
/// Final waypoints further than this (horizontally) from every object point
/// are pulled onto the object outline.
pub const SNAP_DISTANCE: f64 = 0.02;
/// Lowest fingertip height a transferred grasp may have.
pub const FINGER_CLEARANCE: f64 = 0.002;
pub const DEFAULT_M: usize = 10;
/// Metres of position error equivalent to one radian of orientation error
/// when picking a pseudo pose.
pub const ANGLE_WEIGHT: f64 = 0.1;
/// Fraction of the demonstrated path's sideways deviation carried into a
/// transferred plan.
pub const SHAPE_BLEND: f64 = 0.5;
pub const DEMO_FILE_VERSION: u32 = 1;

const SNAP_SECTOR: f64 = 10.0 * PI / 180.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationRecord {
    pub category: String,
    pub cloud: PointCloud,
    /// Start pose first, demonstrated grasp last.
    pub waypoints: Vec<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_ref: Option<u64>,
}

impl DemonstrationRecord {
    pub fn grasp(&self) -> &Pose {
        self.waypoints
            .last()
            .expect("records hold at least two waypoints")
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct File<'a> {
            version: u32,
            #[serde(flatten)]
            record: &'a DemonstrationRecord,
        }
        Ok(serde_json::to_string_pretty(&File {
            version: DEMO_FILE_VERSION,
            record: self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            version: u32,
            #[serde(flatten)]
            record: DemonstrationRecord,
        }
        let f: File = serde_json::from_str(s)?;
        if f.version != DEMO_FILE_VERSION {
            return Err(Error::Format(format!(
                "unsupported demo version {}",
                f.version
            )));
        }
        let n = f.record.waypoints.len();
        if !(MIN_WAYPOINTS..=MAX_WAYPOINTS).contains(&n) {
            return Err(Error::WaypointCount { count: n });
        }
        if !f.record.cloud.has_metadata() {
            return Err(Error::MissingMetadata);
        }
        Ok(f.record)
    }
}

/// Validates the waypoint count and snaps a final waypoint that missed the
/// object onto its outline, keeping height and orientation.
pub fn record_demo(
    category: impl Into<String>,
    cloud: PointCloud,
    waypoints: Vec<Pose>,
) -> Result<DemonstrationRecord> {
    if !(MIN_WAYPOINTS..=MAX_WAYPOINTS).contains(&waypoints.len()) {
        return Err(Error::WaypointCount {
            count: waypoints.len(),
        });
    }
    if !cloud.has_metadata() {
        return Err(Error::MissingMetadata);
    }
    let mut waypoints = waypoints;
    let last = waypoints.last_mut().unwrap();
    if let Some(xy) = snap_to_outline(&cloud, &last.position) {
        log::debug!(
            "snapping demonstrated grasp from ({:.3}, {:.3}) to ({:.3}, {:.3})",
            last.position.x,
            last.position.y,
            xy.0,
            xy.1
        );
        last.position.x = xy.0;
        last.position.y = xy.1;
    }
    Ok(DemonstrationRecord {
        category: category.into(),
        cloud,
        waypoints,
        frame_ref: None,
    })
}

fn snap_to_outline(cloud: &PointCloud, p: &Vec3) -> Option<(f64, f64)> {
    let pts: Vec<Vec3> = cloud.original_points().collect();
    let off = |q: &Vec3| ((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt();
    let nearest = pts.iter().min_by(|a, b| off(a).total_cmp(&off(b)))?;
    if off(nearest) <= SNAP_DISTANCE {
        return None;
    }
    let c = cloud.centroid;
    let (dx, dy) = (p.x - c.x, p.y - c.y);
    let r = dx.hypot(dy);
    if r < 1e-9 {
        return Some((nearest.x, nearest.y));
    }
    let bearing = dy.atan2(dx);
    // radial extent of the object along the grasp bearing
    let radii: Vec<f64> = pts
        .iter()
        .filter(|q| {
            let b = (q.y - c.y).atan2(q.x - c.x);
            (wrap_angle(b - bearing + PI, 2.0 * PI) - PI).abs() <= SNAP_SECTOR
        })
        .map(|q| (q.x - c.x).hypot(q.y - c.y))
        .collect();
    match radii
        .iter()
        .copied()
        .min_by(|a, b| (a - r).abs().total_cmp(&(b - r).abs()))
    {
        Some(rs) => Some((c.x + dx / r * rs, c.y + dy / r * rs)),
        None => Some((nearest.x, nearest.y)),
    }
}

/// All recorded demonstrations. One writer (the session), any number of
/// readers through shared references.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DemoStore {
    records: Vec<DemonstrationRecord>,
}

impl DemoStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: DemonstrationRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[DemonstrationRecord] {
        &self.records
    }

    pub fn count_for(&self, category: &str) -> usize {
        self.records
            .iter()
            .filter(|r| r.category == category)
            .count()
    }

    /// Writes `demo-0000.json`, `demo-0001.json`, ... into `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (i, r) in self.records.iter().enumerate() {
            std::fs::write(dir.join(format!("demo-{i:04}.json")), r.to_json()?)?;
        }
        Ok(())
    }

    /// Loads every `*.json` in `dir` in file-name order.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut store = Self::new();
        for p in paths {
            store.push(DemonstrationRecord::from_json(&std::fs::read_to_string(
                &p,
            )?)?);
        }
        Ok(store)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Above this the demonstrated orientation is transferred.
    pub t_r: f64,
    /// Above this the demonstrated grasp itself is transferred.
    pub t_l: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { t_r: 0.7, t_l: 0.9 }
    }
}

impl Thresholds {
    pub fn new(t_r: f64, t_l: f64) -> Result<Self> {
        if 0.0 < t_r && t_r < t_l && t_l <= 1.0 {
            Ok(Self { t_r, t_l })
        } else {
            Err(Error::InvalidConfig(format!(
                "thresholds need 0 < t_r < t_l <= 1, got {t_r}, {t_l}"
            )))
        }
    }

    pub fn provenance(&self, i_s: f64) -> Provenance {
        if i_s > self.t_l {
            Provenance::Demonstrated
        } else if i_s > self.t_r {
            Provenance::Pseudo
        } else {
            Provenance::Initial
        }
    }
}

/// Highest similarity over the store and the record achieving it (the first
/// one on ties).
pub fn similarity_index<'a>(
    detected: &PointCloud,
    store: &'a DemoStore,
    params: &EncoderParams,
) -> Option<(f64, &'a DemonstrationRecord)> {
    let mut best: Option<(f64, &DemonstrationRecord)> = None;
    for r in store.records() {
        let s = similarity(detected, &r.cloud, params);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, r));
        }
    }
    best
}

/// `m` poses evenly spaced by arc length along the piecewise-linear path,
/// orientations slerped on the same parameter. Endpoints are copied exactly.
pub fn resample_waypoints(traj: &[Pose], m: usize) -> Result<Vec<Pose>> {
    if traj.len() < 2 {
        return Err(Error::WaypointCount { count: traj.len() });
    }
    if m < 2 {
        return Err(Error::InvalidConfig(
            "need at least two resampled waypoints".into(),
        ));
    }
    let mut cum = vec![0.0];
    for w in traj.windows(2) {
        cum.push(cum.last().unwrap() + (w[1].position - w[0].position).norm());
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::DegenerateTrajectory);
    }
    let mut out = Vec::with_capacity(m);
    out.push(traj[0]);
    let mut seg = 0;
    for i in 1..m - 1 {
        let s = total * i as f64 / (m - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 {
            ((s - cum[seg]) / len).clamp(0.0, 1.0)
        } else {
            1.0
        };
        out.push(traj[seg].interpolate(&traj[seg + 1], t));
    }
    out.push(*traj.last().unwrap());
    Ok(out)
}

/// Horizontal centre, horizontal radius and top height of an object cloud.
/// The centre is the middle of the xy extent taken along the cloud's
/// heading. Unlike the mean it does not drift toward whichever side of the
/// object the camera sees more of.
#[derive(Clone, Copy, Debug)]
struct Extent {
    centre: Vec3,
    radius: f64,
}

fn extent(cloud: &PointCloud) -> Extent {
    let h = cloud.heading();
    let (c, s) = (h.cos(), h.sin());
    let pts: Vec<Vec3> = cloud.original_points().collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut top = f64::NEG_INFINITY;
    for p in &pts {
        let (a, b) = (p.x * c + p.y * s, -p.x * s + p.y * c);
        lo = [lo[0].min(a), lo[1].min(b)];
        hi = [hi[0].max(a), hi[1].max(b)];
        top = top.max(p.z);
    }
    let (a, b) = ((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0);
    let centre = Vec3::new(a * c - b * s, a * s + b * c, top);
    let radius = pts
        .iter()
        .map(|p| (p.x - centre.x).hypot(p.y - centre.y))
        .fold(0.0, f64::max);
    Extent { centre, radius }
}

/// Maps the demonstrated object onto the detected one: a turn about `z`
/// lining up their headings, and the ratio of their horizontal radii.
#[derive(Clone, Copy, Debug)]
struct Transfer {
    turn: f64,
    scale: f64,
    from: Vec3,
    to: Vec3,
}

impl Transfer {
    fn new(detected: &PointCloud, demo: &DemonstrationRecord) -> Result<Self> {
        if !detected.has_metadata()
            || !demo.cloud.has_metadata()
            || detected.is_empty()
            || demo.cloud.is_empty()
        {
            return Err(Error::MissingMetadata);
        }
        let (a, b) = (extent(&demo.cloud), extent(detected));
        if !(a.radius > 0.0 && b.radius > 0.0) {
            return Err(Error::DegenerateCloud);
        }
        Ok(Self {
            turn: wrap_angle(detected.heading() - demo.cloud.heading() + PI, 2.0 * PI) - PI,
            scale: b.radius / a.radius,
            from: a.centre,
            to: b.centre,
        })
    }

    fn rotation(&self, extra: f64) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Vec3::z_axis(), self.turn + extra)
    }
}

/// Four grasps around the detected object at the demonstrated grasp's
/// scaled distance from the centre, a quarter turn apart, starting from the
/// demonstrated bearing carried over by heading. Heights scale with the
/// object.
pub fn pseudo_grasp_poses(detected: &PointCloud, demo: &DemonstrationRecord) -> Result<[Pose; 4]> {
    let tf = Transfer::new(detected, demo)?;
    let g = demo.grasp();
    let (dx, dy) = (g.position.x - tf.from.x, g.position.y - tf.from.y);
    let d = dx.hypot(dy) * tf.scale;
    let bearing = dy.atan2(dx);
    let z = (g.position.z * tf.scale).max(FINGER_CLEARANCE);
    Ok(std::array::from_fn(|k| {
        let extra = k as f64 * FRAC_PI_2;
        let b = bearing + tf.turn + extra;
        let position = Vec3::new(tf.to.x + d * b.cos(), tf.to.y + d * b.sin(), z);
        Pose::new(position, tf.rotation(extra) * g.orientation())
    }))
}

/// The demonstrated grasp moved onto the detected object: its offset from
/// the demonstrated object's top centre is turned and scaled, orientation
/// turned.
pub fn demonstrated_grasp(detected: &PointCloud, demo: &DemonstrationRecord) -> Result<Pose> {
    let tf = Transfer::new(detected, demo)?;
    let g = demo.grasp();
    let q = tf.rotation(0.0);
    let mut position = tf.to + q * ((g.position - tf.from) * tf.scale);
    position.z = position.z.max(FINGER_CLEARANCE);
    Ok(Pose::new(position, q * g.orientation()))
}

/// Rotation distance that treats the two jaw orderings of a parallel
/// gripper as the same grasp.
fn grasp_angle(a: &Pose, b: &Pose) -> f64 {
    let flipped = Pose::new(
        b.position,
        b.orientation() * UnitQuaternion::from_axis_angle(&Vec3::z_axis(), PI),
    );
    a.angle_to(b).min(a.angle_to(&flipped))
}

fn pick_pseudo(poses: &[Pose; 4], initial: Option<&InitialGrasp>) -> Pose {
    let Some(init) = initial else {
        return poses[0];
    };
    let ip = init.pose();
    let cost = |p: &Pose| (p.position - ip.position).norm() + ANGLE_WEIGHT * grasp_angle(p, &ip);
    let mut best = poses[0];
    for p in &poses[1..] {
        if cost(p) < cost(&best) {
            best = *p;
        }
    }
    best
}

/// Straight standoff-to-grasp path with a share of the demonstrated path's
/// deviation from its own chord added, turned and scaled like the grasp.
fn transferred_plan(grasp: Pose, demo: &DemonstrationRecord, turn: f64, m: usize) -> GraspPlan {
    let mut plan = GraspPlan::direct(grasp, m);
    let Ok(shape) = resample_waypoints(&demo.waypoints, m) else {
        return plan;
    };
    let (a, b) = (shape[0].position, shape[m - 1].position);
    let demo_chord = (b - a).norm();
    let chord = (plan.grasp.position - plan.pre_grasp.position).norm();
    if demo_chord <= 0.0 {
        return plan;
    }
    let q = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), turn);
    let k = SHAPE_BLEND * chord / demo_chord;
    for i in 1..m - 1 {
        let t = i as f64 / (m - 1) as f64;
        let dev = shape[i].position - (a + (b - a) * t);
        let w = &mut plan.waypoints[i];
        w.position += q * dev * k;
        w.position.z = w.position.z.max(grasp.position.z);
    }
    plan
}

/// Decision ladder over the similarity index `i_s`:
/// above `t_l` the demonstrated grasp, above `t_r` the pseudo grasp nearest
/// the initial one, otherwise the initial grasp. With an empty store the
/// result is exactly the initial plan.
pub fn final_grasp(
    detected: &PointCloud,
    initial: Option<&InitialGrasp>,
    store: &DemoStore,
    params: &EncoderParams,
    th: &Thresholds,
    m: usize,
) -> Result<GraspPlan> {
    let initial_plan = || initial.map(|g| g.plan(m)).ok_or(Error::NoGraspAvailable);
    let Some((i_s, demo)) = similarity_index(detected, store, params) else {
        return initial_plan();
    };
    let grasp = match th.provenance(i_s) {
        Provenance::Initial => {
            let mut plan = initial_plan()?;
            plan.similarity_used = Some(i_s);
            return Ok(plan);
        }
        Provenance::Pseudo => pick_pseudo(&pseudo_grasp_poses(detected, demo)?, initial),
        Provenance::Demonstrated => demonstrated_grasp(detected, demo)?,
    };
    let turn = Transfer::new(detected, demo)?.turn;
    let mut plan = transferred_plan(grasp, demo, turn, m.max(2));
    plan.provenance = th.provenance(i_s);
    plan.pre_grasp = pre_grasp_for(&grasp);
    plan.similarity_used = Some(i_s);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::normalize;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn at(x: f64, y: f64, z: f64) -> Pose {
        Pose::from_translation(x, y, z)
    }

    /// Ring of points like a plate of radius `r` centred at `(cx, cy)`.
    fn ring(cx: f64, cy: f64, r: f64, skew: f64) -> PointCloud {
        let raw: Vec<Vec3> = (0..180)
            .flat_map(|i| {
                let a = i as f64 * PI / 90.0;
                // a touch of elongation so the heading is well defined
                let rr = r * (1.0 + skew * a.cos());
                [0.82, 0.91, 1.0]
                    .map(|f| Vec3::new(cx + f * rr * a.cos(), cy + f * rr * a.sin(), 0.018))
            })
            .collect();
        normalize(&raw).unwrap()
    }

    fn demo_on_ring() -> DemonstrationRecord {
        let g = Pose::from_position_yaw(Vec3::new(0.055, 0.0, 0.008), 0.0);
        record_demo(
            "plate",
            ring(0.0, 0.0, 0.06, 0.05),
            vec![at(0.0, 0.0, 0.3), at(0.03, 0.02, 0.15), g],
        )
        .unwrap()
    }

    #[test]
    fn record_keeps_on_object_demo() {
        let cloud = ring(0.0, 0.0, 0.06, 0.0);
        let w: Vec<Pose> = (0..5)
            .map(|i| at(0.06, 0.0, 0.3 - 0.07 * i as f64))
            .collect();
        let r = record_demo("plate", cloud, w.clone()).unwrap();
        assert_eq!(r.waypoints, w);
    }

    #[test]
    fn record_snaps_to_rim() {
        let cloud = ring(0.1, -0.05, 0.06, 0.0);
        let w = vec![
            at(0.1, -0.05, 0.3),
            at(0.1 + 0.11 * 0.6, -0.05 + 0.11 * 0.8, 0.01),
        ];
        let r = record_demo("plate", cloud, w).unwrap();
        let g = r.grasp().position;
        let rad = (g.x - 0.1).hypot(g.y + 0.05);
        assert_abs_diff_eq!(rad, 0.06, epsilon = 1e-9);
        // stays on the same bearing, height untouched
        assert_abs_diff_eq!(
            (g.y + 0.05).atan2(g.x - 0.1),
            0.8f64.atan2(0.6),
            epsilon = 1e-9
        );
        assert_eq!(g.z, 0.01);
    }

    #[test]
    fn record_rejects_waypoint_counts() {
        let c = ring(0.0, 0.0, 0.06, 0.0);
        assert!(matches!(
            record_demo("p", c.clone(), vec![at(0.0, 0.0, 0.1)]),
            Err(Error::WaypointCount { count: 1 })
        ));
        assert!(matches!(
            record_demo("p", c, vec![at(0.0, 0.0, 0.1); 10]),
            Err(Error::WaypointCount { count: 10 })
        ));
    }

    #[test]
    fn demo_file_round_trip() {
        let r = demo_on_ring();
        let back = DemonstrationRecord::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in ["version", "category", "cloud", "waypoints"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let dir = tempfile::tempdir().unwrap();
        let mut store = DemoStore::new();
        store.push(r.clone());
        store.push(r);
        store.save_dir(dir.path()).unwrap();
        assert_eq!(DemoStore::load_dir(dir.path()).unwrap(), store);
    }

    #[test]
    fn similarity_index_cases() {
        let p = EncoderParams::with_default_architecture(1);
        let store = DemoStore::new();
        assert!(similarity_index(&ring(0.0, 0.0, 0.06, 0.0), &store, &p).is_none());
        let mut store = DemoStore::new();
        let r = demo_on_ring();
        store.push(r.clone());
        let (s, best) = similarity_index(&r.cloud, &store, &p).unwrap();
        assert!((s - 1.0).abs() < 1e-6);
        assert_eq!(best, &r);
    }

    #[test]
    fn resample_straight_segment() {
        let out = resample_waypoints(&[at(0.0, 0.0, 0.0), at(1.0, 0.0, 0.0)], 5).unwrap();
        let xs: Vec<f64> = out.iter().map(|p| p.position.x).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn resample_fixed_point() {
        let traj: Vec<Pose> = (0..6)
            .map(|i| {
                Pose::from_position_yaw(
                    Vec3::new(0.1 * i as f64, 0.02 * i as f64, 0.3),
                    0.1 * i as f64,
                )
            })
            .collect();
        for (a, b) in resample_waypoints(&traj, 6).unwrap().iter().zip(&traj) {
            assert!((a.position - b.position).norm() < 1e-9);
            assert!(a.angle_to(b) < 1e-9);
        }
    }

    #[test]
    fn resample_l_shape() {
        let traj = [at(0.0, 0.0, 0.0), at(0.3, 0.0, 0.0), at(0.3, 0.1, 0.0)];
        let out = resample_waypoints(&traj, 5).unwrap();
        // hand-computed arc length 0, .1, .2, .3, .4
        let want = [(0.0, 0.0), (0.1, 0.0), (0.2, 0.0), (0.3, 0.0), (0.3, 0.1)];
        for (p, (x, y)) in out.iter().zip(want) {
            assert_abs_diff_eq!(p.position.x, x, epsilon = 1e-12);
            assert_abs_diff_eq!(p.position.y, y, epsilon = 1e-12);
        }
        assert!(matches!(
            resample_waypoints(&[at(0.1, 0.0, 0.0); 3], 4),
            Err(Error::DegenerateTrajectory)
        ));
    }

    #[test]
    fn pseudo_poses_on_identical_object() {
        let r = demo_on_ring();
        let poses = pseudo_grasp_poses(&r.cloud, &r).unwrap();
        assert!((poses[0].position - r.grasp().position).norm() < 1e-3);
        assert!(poses[0].angle_to(r.grasp()) < 1f64.to_radians());
    }

    #[test]
    fn pseudo_poses_double_plate() {
        let r = demo_on_ring();
        let big = ring(0.2, 0.1, 0.12, 0.05);
        let d = (r.grasp().position.xy() - extent(&r.cloud).centre.xy()).norm();
        let c = extent(&big).centre;
        let poses = pseudo_grasp_poses(&big, &r).unwrap();
        for p in &poses {
            assert_abs_diff_eq!((p.position.xy() - c.xy()).norm(), 2.0 * d, epsilon = 1e-6);
        }
        let bearing = |p: &Pose| (p.position.y - c.y).atan2(p.position.x - c.x);
        for k in 0..3 {
            let gap = wrap_angle(bearing(&poses[k + 1]) - bearing(&poses[k]), 2.0 * PI);
            assert_abs_diff_eq!(gap, FRAC_PI_2, epsilon = 1e-9);
        }
    }

    #[test]
    fn missing_metadata() {
        let r = demo_on_ring();
        let mut bare = r.cloud.clone();
        bare.scale = 0.0;
        assert!(matches!(
            pseudo_grasp_poses(&bare, &r),
            Err(Error::MissingMetadata)
        ));
    }

    #[test]
    fn ladder_by_threshold() {
        let th = Thresholds::default();
        assert_eq!(th.provenance(0.95), Provenance::Demonstrated);
        assert_eq!(th.provenance(0.80), Provenance::Pseudo);
        assert_eq!(th.provenance(0.50), Provenance::Initial);
        assert_eq!(th.provenance(0.9), Provenance::Pseudo);
        assert_eq!(th.provenance(0.7), Provenance::Initial);
        assert!(Thresholds::new(0.9, 0.7).is_err());
        assert!(Thresholds::new(0.0, 0.7).is_err());
        assert!(Thresholds::new(0.5, 1.1).is_err());
    }

    fn initial_at(x: f64, y: f64) -> InitialGrasp {
        let position = Vec3::new(x, y, 0.003);
        let pose = Pose::from_position_yaw(position, 0.0);
        InitialGrasp {
            position,
            yaw: 0.0,
            pre_grasp: pre_grasp_for(&pose),
            approach: -Vec3::z(),
            keypoint: crate::grasp::KeyPoint {
                pixel: (0, 0),
                kind: crate::grasp::KeyPointKind::Centroid,
                confidence: 1.0,
            },
        }
    }

    #[test]
    fn empty_store_gives_the_initial_plan() {
        let p = EncoderParams::with_default_architecture(2);
        let init = initial_at(0.0, 0.0);
        let det = ring(0.0, 0.0, 0.06, 0.0);
        let plan = final_grasp(
            &det,
            Some(&init),
            &DemoStore::new(),
            &p,
            &Thresholds::default(),
            DEFAULT_M,
        )
        .unwrap();
        assert_eq!(plan, init.plan(DEFAULT_M));
        assert!(matches!(
            final_grasp(
                &det,
                None,
                &DemoStore::new(),
                &p,
                &Thresholds::default(),
                DEFAULT_M
            ),
            Err(Error::NoGraspAvailable)
        ));
    }

    #[test]
    fn identical_object_uses_the_demonstration() {
        let p = EncoderParams::with_default_architecture(2);
        let r = demo_on_ring();
        let mut store = DemoStore::new();
        store.push(r.clone());
        let plan = final_grasp(
            &r.cloud,
            Some(&initial_at(0.0, 0.0)),
            &store,
            &p,
            &Thresholds::default(),
            7,
        )
        .unwrap();
        assert_eq!(plan.provenance, Provenance::Demonstrated);
        assert_eq!(plan.waypoints.len(), 7);
        assert_eq!(*plan.waypoints.last().unwrap(), plan.grasp);
        assert!((plan.grasp.position - r.grasp().position).norm() < 1e-9);
        // without an initial grasp the transfer still works
        let plan = final_grasp(&r.cloud, None, &store, &p, &Thresholds::default(), 7).unwrap();
        assert_eq!(plan.provenance, Provenance::Demonstrated);
    }

    #[test]
    fn pseudo_band_picks_nearest_to_initial() {
        let p = EncoderParams::with_default_architecture(2);
        let r = demo_on_ring();
        let mut store = DemoStore::new();
        store.push(r.clone());
        // t_l = 1 forces the pseudo band for a perfect match
        let th = Thresholds::new(0.5, 1.0).unwrap();
        let init = initial_at(-0.05, 0.01);
        let plan = final_grasp(&r.cloud, Some(&init), &store, &p, &th, DEFAULT_M).unwrap();
        assert_eq!(plan.provenance, Provenance::Pseudo);
        let poses = pseudo_grasp_poses(&r.cloud, &r).unwrap();
        let pos = plan.grasp.position;
        assert!((pos - poses[2].position).norm() < 1e-9, "{pos:?}");
        let plan = final_grasp(&r.cloud, None, &store, &p, &th, DEFAULT_M).unwrap();
        assert_eq!(plan.grasp, poses[0]);
    }

    proptest! {
        #[test]
        fn pseudo_scale_equivariance(k in 0.3f64..3.0, yaw in -3.0f64..3.0) {
            let r = demo_on_ring();
            let det = ring(0.05, -0.02, 0.07, 0.05);
            let rot = Pose::from_position_yaw(Vec3::zeros(), yaw);
            let raw: Vec<Vec3> = det.original_points().map(|q| rot.rotate_vector(&(q - det.centroid)) * k + det.centroid).collect();
            let scaled = normalize(&raw).unwrap();
            let a = pseudo_grasp_poses(&det, &r).unwrap();
            let b = pseudo_grasp_poses(&scaled, &r).unwrap();
            let (ca, cb) = (extent(&det).centre.xy(), extent(&scaled).centre.xy());
            for (pa, pb) in a.iter().zip(&b) {
                let da = (pa.position.xy() - ca).norm();
                let db = (pb.position.xy() - cb).norm();
                prop_assert!((db - k * da).abs() < 1e-6);
                prop_assert!((db - (b[0].position.xy() - cb).norm()).abs() < 1e-6);
            }
        }

        #[test]
        fn plan_shape_and_monotone_ladder(i_a in 0.0f64..1.0, i_b in 0.0f64..1.0, m in 2usize..15) {
            let th = Thresholds::default();
            let (lo, hi) = if i_a <= i_b { (i_a, i_b) } else { (i_b, i_a) };
            prop_assert!(th.provenance(lo) <= th.provenance(hi));
            let p = EncoderParams::with_default_architecture(2);
            let r = demo_on_ring();
            let mut store = DemoStore::new();
            store.push(r.clone());
            let plan = final_grasp(&r.cloud, Some(&initial_at(0.0, 0.0)), &store, &p, &th, m).unwrap();
            prop_assert_eq!(plan.waypoints.len(), m);
            prop_assert_eq!(*plan.waypoints.last().unwrap(), plan.grasp);
        }
    }
}
