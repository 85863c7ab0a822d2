use serde::{Deserialize, Serialize};
use std::sync::mpsc::Sender;

use super::Workspace;
use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Trace sample period, seconds.
pub const SAMPLE_PERIOD: f64 = 0.033;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub pose: Pose,
}

fn check(waypoints: &[Pose], speed: f64, ws: &Workspace) -> Result<()> {
    if waypoints.is_empty() {
        return Err(Error::EmptyPlan);
    }
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "speed must be positive, got {speed}"
        )));
    }
    for (index, w) in waypoints.iter().enumerate() {
        let p = w.position;
        if !ws.contains_xy(p.x, p.y) || p.z < 0.0 {
            return Err(Error::WorkspaceViolation {
                index,
                x: p.x,
                y: p.y,
                z: p.z,
            });
        }
    }
    Ok(())
}

/// Moves through `waypoints` along straight segments at constant tool
/// speed, emitting a sample every [`SAMPLE_PERIOD`] and a final sample at
/// arrival. Orientation is slerped within each segment.
pub fn execute_streamed(
    waypoints: &[Pose],
    speed: f64,
    ws: &Workspace,
    tx: &Sender<TracePoint>,
) -> Result<()> {
    check(waypoints, speed, ws)?;
    let mut cumulative = vec![0.0];
    for w in waypoints.windows(2) {
        let l = (w[1].position - w[0].position).norm();
        cumulative.push(cumulative.last().unwrap() + l);
    }
    let total = *cumulative.last().unwrap();
    let duration = total / speed;
    let pose_at = |s: f64| {
        let i = cumulative
            .windows(2)
            .position(|c| s <= c[1])
            .unwrap_or(cumulative.len().saturating_sub(2));
        if waypoints.len() == 1 {
            return waypoints[0];
        }
        let seg = cumulative[i + 1] - cumulative[i];
        let f = if seg > 0.0 {
            ((s - cumulative[i]) / seg).clamp(0.0, 1.0)
        } else {
            1.0
        };
        waypoints[i].interpolate(&waypoints[i + 1], f)
    };
    let mut k = 0u64;
    loop {
        let t = k as f64 * SAMPLE_PERIOD;
        if t >= duration {
            break;
        }
        // a closed receiver just means nobody is listening any more
        let _ = tx.send(TracePoint {
            t,
            pose: pose_at(t * speed),
        });
        k += 1;
    }
    let _ = tx.send(TracePoint {
        t: duration,
        pose: *waypoints.last().unwrap(),
    });
    Ok(())
}

pub fn execute(waypoints: &[Pose], speed: f64, ws: &Workspace) -> Result<Vec<TracePoint>> {
    let (tx, rx) = std::sync::mpsc::channel();
    execute_streamed(waypoints, speed, ws, &tx)?;
    drop(tx);
    Ok(rx.into_iter().collect())
}
