use serde::{Deserialize, Serialize};

use super::shape::{clip, Spans};
use super::{Outcome, Scene, SceneObject};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::plan::{approach_of, closing_axis_of, GraspPlan};

/// Parallel-jaw gripper dimensions, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    pub max_width: f64,
    pub finger_length: f64,
    pub finger_thickness: f64,
}

impl Default for Gripper {
    fn default() -> Self {
        Self {
            max_width: 0.085,
            finger_length: 0.05,
            finger_thickness: 0.01,
        }
    }
}

impl Gripper {
    pub fn new(max_width: f64, finger_length: f64, finger_thickness: f64) -> Result<Self> {
        if [max_width, finger_length, finger_thickness]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0)
        {
            Ok(Self {
                max_width,
                finger_length,
                finger_thickness,
            })
        } else {
            Err(Error::InvalidConfig(
                "gripper dimensions must be positive".into(),
            ))
        }
    }
}

const TABLE_TOL: f64 = 1e-6;
const FINGER_LINES: usize = 5;
const PALM_LINES: usize = 9;
const CLOSING_HEIGHTS: usize = 5;
/// Radial slack allowed around the middle of a wall, on top of a quarter of
/// its width.
const WALL_RADIAL_SLACK: f64 = 0.001;
const WALL_MAX_TILT: f64 = 25.0 * std::f64::consts::PI / 180.0;

fn segment_hits(obj: &SceneObject, start: &Vec3, dir: &Vec3, len: f64) -> bool {
    !clip(&obj.spans(start, dir), 0.0, len).is_empty()
}

/// Extent of the material the closing fingers squeeze: the pieces of
/// `spans` overlapping the opening `[lo, hi]`, measured end to end.
fn squeezed_extent(spans: &Spans, lo: f64, hi: f64) -> Option<f64> {
    let mut touching = spans.iter().filter(|s| s.1 > lo && s.0 < hi);
    let first = touching.next()?;
    let last = touching.last().unwrap_or(first);
    Some(last.1 - first.0)
}

/// Geometric grasp judge. The gripper opens to `max_width`, descends along
/// its approach axis from the pre-grasp pose and closes along its closing
/// axis. Checks run in a fixed order and the first failure wins:
///
/// 1. a fingertip below the table, or any finger or palm sweep touching a
///    non-target object, is a collision;
/// 2. no target material between the open fingers, from the tips up to the
///    palm, is a miss;
/// 3. plates and bowls must be pinched across their wall (grasp centered on
///    the wall, closing axis near radial, one finger each side), anything
///    else on them is a miss;
/// 4. squeezed material wider than the opening is too-wide;
/// 5. a finger or palm sweep landing on the target is a collision.
pub fn evaluate_grasp(scene: &Scene, target_id: u32, plan: &GraspPlan, g: &Gripper) -> Outcome {
    let Some(target) = scene.object(target_id) else {
        return Outcome::Miss;
    };
    let p = plan.grasp.position;
    let c = closing_axis_of(&plan.grasp);
    let up = -approach_of(&plan.grasp);
    let travel = (p - plan.pre_grasp.position).norm();
    let half = g.max_width / 2.0;

    let finger_starts: Vec<Vec3> = [-1.0, 1.0]
        .iter()
        .flat_map(|side| {
            (0..FINGER_LINES).map(move |j| {
                let off = half + g.finger_thickness * j as f64 / (FINGER_LINES - 1) as f64;
                p + c * (side * off)
            })
        })
        .collect();
    let palm_starts: Vec<Vec3> = (0..PALM_LINES)
        .map(|i| {
            p + c * (-half + g.max_width * i as f64 / (PALM_LINES - 1) as f64)
                + up * g.finger_length
        })
        .collect();
    let finger_len = travel + g.finger_length;

    if finger_starts.iter().any(|s| s.z < -TABLE_TOL) {
        return Outcome::Collision;
    }
    for other in scene.objects.iter().filter(|o| o.id != target_id) {
        if finger_starts
            .iter()
            .any(|s| segment_hits(other, s, &up, finger_len))
            || palm_starts
                .iter()
                .any(|s| segment_hits(other, s, &up, travel))
        {
            return Outcome::Collision;
        }
    }

    let squeezed: Vec<f64> = (0..CLOSING_HEIGHTS)
        .filter_map(|k| {
            let h = p + up * (g.finger_length * k as f64 / (CLOSING_HEIGHTS - 1) as f64);
            squeezed_extent(&target.spans(&h, &c), -half, half)
        })
        .collect();
    if squeezed.is_empty() {
        return Outcome::Miss;
    }
    if let Some((inner, outer)) = target.solid().wall() {
        let lp = target.to_local(&p);
        let lc = target.pose.inverse().rotate_vector(&c);
        let r = lp.xy().norm();
        let mid = (inner + outer) / 2.0;
        let centered = (r - mid).abs() <= (outer - inner) / 4.0 + WALL_RADIAL_SLACK;
        let ch = lc.xy();
        let radial_ok = r > 0.0
            && ch.norm() > 1e-9
            && (ch.dot(&lp.xy()) / (ch.norm() * r)).abs() >= WALL_MAX_TILT.cos();
        let ra = (lp + lc * half).xy().norm();
        let rb = (lp - lc * half).xy().norm();
        let straddles = (ra < inner && rb > outer) || (rb < inner && ra > outer);
        if !(centered && radial_ok && straddles) {
            return Outcome::Miss;
        }
    }
    if squeezed.iter().any(|w| *w > g.max_width) {
        return Outcome::TooWide;
    }
    if palm_starts
        .iter()
        .any(|s| segment_hits(target, s, &up, travel))
        || finger_starts
            .iter()
            .any(|s| segment_hits(target, s, &up, finger_len))
    {
        return Outcome::Collision;
    }
    Outcome::Success
}

#[cfg(test)]
mod tests {
    use super::super::{Category, Workspace};
    use super::*;
    use crate::geometry::Pose;
    use std::f64::consts::FRAC_PI_2;

    fn scene(objects: Vec<SceneObject>) -> Scene {
        Scene {
            objects,
            seed: 0,
            workspace: Workspace::default(),
        }
    }

    fn top_down(x: f64, y: f64, z: f64, yaw: f64) -> GraspPlan {
        GraspPlan::direct(Pose::from_position_yaw(Vec3::new(x, y, z), yaw), 10)
    }

    fn plate() -> SceneObject {
        SceneObject::new(
            0,
            Category::Plate,
            Vec3::new(0.12, 0.12, 0.018),
            0.0,
            0.0,
            0.0,
        )
    }

    #[test]
    fn centroid_pinch_on_plate_misses() {
        let s = scene(vec![plate()]);
        for yaw in [0.0, 0.4, FRAC_PI_2] {
            assert_eq!(
                evaluate_grasp(&s, 0, &top_down(0.0, 0.0, 0.003, yaw), &Gripper::default()),
                Outcome::Miss
            );
        }
    }

    #[test]
    fn rim_pinch_on_plate_succeeds() {
        let s = scene(vec![plate()]);
        let mid = (0.06 + 0.82 * 0.06) / 2.0;
        let plan = top_down(mid, 0.0, 0.004, 0.0);
        assert_eq!(
            evaluate_grasp(&s, 0, &plan, &Gripper::default()),
            Outcome::Success
        );
        // tangential closing does not straddle the rim
        let plan = top_down(mid, 0.0, 0.004, FRAC_PI_2);
        assert_ne!(
            evaluate_grasp(&s, 0, &plan, &Gripper::default()),
            Outcome::Success
        );
    }

    #[test]
    fn rim_pinch_on_bowl_succeeds() {
        let bowl = SceneObject::new(
            0,
            Category::Bowl,
            Vec3::new(0.11, 0.11, 0.055),
            0.0,
            0.0,
            0.0,
        );
        let s = scene(vec![bowl]);
        let mid = 0.055 - 0.003;
        let plan = top_down(0.0, mid, 0.045, FRAC_PI_2);
        assert_eq!(
            evaluate_grasp(&s, 0, &plan, &Gripper::default()),
            Outcome::Success
        );
        assert_ne!(
            evaluate_grasp(&s, 0, &top_down(0.0, 0.0, 0.0, 0.0), &Gripper::default()),
            Outcome::Success
        );
    }

    #[test]
    fn small_cube_center_pinch() {
        let s = scene(vec![SceneObject::new(
            0,
            Category::Box,
            Vec3::repeat(0.03),
            0.1,
            0.2,
            0.0,
        )]);
        assert_eq!(
            evaluate_grasp(&s, 0, &top_down(0.1, 0.2, 0.015, 0.0), &Gripper::default()),
            Outcome::Success
        );
    }

    #[test]
    fn wide_box_is_too_wide() {
        let s = scene(vec![SceneObject::new(
            0,
            Category::Box,
            Vec3::new(0.12, 0.12, 0.05),
            0.0,
            0.0,
            0.0,
        )]);
        assert_eq!(
            evaluate_grasp(&s, 0, &top_down(0.0, 0.0, 0.035, 0.0), &Gripper::default()),
            Outcome::TooWide
        );
    }

    #[test]
    fn grasp_far_above_misses() {
        let s = scene(vec![SceneObject::new(
            0,
            Category::Box,
            Vec3::repeat(0.03),
            0.0,
            0.0,
            0.0,
        )]);
        assert_eq!(
            evaluate_grasp(&s, 0, &top_down(0.0, 0.0, 0.2, 0.0), &Gripper::default()),
            Outcome::Miss
        );
    }

    #[test]
    fn palm_on_tall_object_collides() {
        let s = scene(vec![SceneObject::new(
            0,
            Category::Cylinder,
            Vec3::new(0.04, 0.04, 0.15),
            0.0,
            0.0,
            0.0,
        )]);
        assert_eq!(
            evaluate_grasp(&s, 0, &top_down(0.0, 0.0, 0.02, 0.0), &Gripper::default()),
            Outcome::Collision
        );
    }

    #[test]
    fn neighbour_under_a_finger_collides() {
        let s = scene(vec![
            SceneObject::new(0, Category::Box, Vec3::repeat(0.03), 0.0, 0.0, 0.0),
            SceneObject::new(
                1,
                Category::Box,
                Vec3::new(0.03, 0.03, 0.06),
                0.05,
                0.0,
                0.0,
            ),
        ]);
        let g = Gripper::default();
        assert_eq!(
            evaluate_grasp(&s, 0, &top_down(0.0, 0.0, 0.015, 0.0), &g),
            Outcome::Collision
        );
        assert_eq!(
            evaluate_grasp(&s, 0, &top_down(0.0, 0.0, 0.015, FRAC_PI_2), &g),
            Outcome::Success
        );
    }

    #[test]
    fn tip_below_table_collides() {
        let s = scene(vec![SceneObject::new(
            0,
            Category::Box,
            Vec3::repeat(0.03),
            0.0,
            0.0,
            0.0,
        )]);
        let tilted = Pose::from_rpy(Vec3::new(0.0, 0.0, 0.005), 0.0, 0.6, 0.0);
        assert_eq!(
            evaluate_grasp(&s, 0, &GraspPlan::direct(tilted, 10), &Gripper::default()),
            Outcome::Collision
        );
    }

    #[test]
    fn invariant_under_scene_rotation() {
        let gripper = Gripper::default();
        for seed in 0..10 {
            let s =
                super::super::generate_scene(seed, 4, &Category::ALL, &Default::default()).unwrap();
            for o in &s.objects {
                for (dx, yaw) in [(0.0, 0.0), (0.01, 0.7), (0.03, 1.9)] {
                    let top = o.height() - 0.015;
                    let plan =
                        top_down(o.pose.position.x + dx, o.pose.position.y, top.max(0.0), yaw);
                    let before = evaluate_grasp(&s, o.id, &plan, &gripper);
                    for theta in [0.5, 2.0, -1.2] {
                        let rot = Pose::from_position_yaw(Vec3::zeros(), theta);
                        let mut rp = plan.clone();
                        rp.grasp = rot.compose(&rp.grasp);
                        rp.pre_grasp = rot.compose(&rp.pre_grasp);
                        rp.waypoints = rp.waypoints.iter().map(|w| rot.compose(w)).collect();
                        assert_eq!(
                            evaluate_grasp(&s.rotated(theta), o.id, &rp, &gripper),
                            before
                        );
                    }
                }
            }
        }
    }
}
