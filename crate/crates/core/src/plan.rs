use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec3};

/// Distance between the pre-grasp standoff and the grasp, along the approach.
pub const PRE_GRASP_OFFSET: f64 = 0.15;

/// Where a grasp plan came from. Ordered by how much demonstration knowledge
/// it uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Initial,
    Pseudo,
    Demonstrated,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Initial => "initial",
            Provenance::Pseudo => "pseudo",
            Provenance::Demonstrated => "demonstrated",
        })
    }
}

/// Gripper convention: the tool `x` axis is the closing axis and the
/// approach direction is the tool `-z` axis, so the identity orientation is a
/// top-down grasp closing along world `x`.
pub fn approach_of(pose: &Pose) -> Vec3 {
    pose.rotate_vector(&-Vec3::z())
}

pub fn closing_axis_of(pose: &Pose) -> Vec3 {
    pose.rotate_vector(&Vec3::x())
}

/// Standoff pose backed off along the approach direction.
pub fn pre_grasp_for(grasp: &Pose) -> Pose {
    Pose::new(
        grasp.position - approach_of(grasp) * PRE_GRASP_OFFSET,
        *grasp.orientation(),
    )
}

/// A complete executable grasp: standoff, waypoints (last one is the grasp)
/// and the final pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspPlan {
    pub pre_grasp: Pose,
    pub waypoints: Vec<Pose>,
    pub grasp: Pose,
    pub provenance: Provenance,
    pub similarity_used: Option<f64>,
}

impl GraspPlan {
    pub fn approach(&self) -> Vec3 {
        approach_of(&self.grasp)
    }
}

impl GraspPlan {
    /// Straight-line plan from the standoff down to `grasp`, sampled at `m`
    /// evenly spaced poses (the first is the standoff, the last is `grasp`).
    pub fn direct(grasp: Pose, m: usize) -> GraspPlan {
        let pre_grasp = pre_grasp_for(&grasp);
        let m = m.max(2);
        let mut waypoints: Vec<Pose> = (0..m - 1)
            .map(|i| pre_grasp.interpolate(&grasp, i as f64 / (m - 1) as f64))
            .collect();
        waypoints.push(grasp);
        GraspPlan {
            pre_grasp,
            waypoints,
            grasp,
            provenance: Provenance::Initial,
            similarity_used: None,
        }
    }
}
