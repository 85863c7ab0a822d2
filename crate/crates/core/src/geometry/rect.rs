use std::f64::consts::{FRAC_PI_2, PI};

use super::image::Mask;
use super::wrap_angle;

/// Minimum-area enclosing rectangle in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinAreaRect {
    pub center: (f64, f64),
    /// `(a, b)` with `a >= b`.
    pub half_extents: (f64, f64),
    /// Direction of the `a` axis in the image plane, `[0, π)`, measured from
    /// `+u` toward `+v`.
    pub angle: f64,
}

impl MinAreaRect {
    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.0 * self.half_extents.1
    }

    pub fn is_square(&self) -> bool {
        let (a, b) = self.half_extents;
        a - b <= SQUARE_TOL * a
    }
}

const SQUARE_TOL: f64 = 1e-9;
const AREA_TOL: f64 = 1e-9;

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain; returns the hull counter-clockwise in a
/// y-up frame without repeated endpoints. Collinear points are dropped.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Corner points of the pixel squares that can lie on the hull: the
/// left- and right-most pixel of every row.
fn silhouette_corners(m: &Mask) -> Vec<(f64, f64)> {
    let b = m.bbox();
    let mut pts = Vec::new();
    for v in b.v_min..=b.v_max {
        let left = (b.u_min..=b.u_max).find(|&u| m.get(u, v));
        let right = (b.u_min..=b.u_max).rev().find(|&u| m.get(u, v));
        if let (Some(l), Some(r)) = (left, right) {
            let (v0, v1) = (v as f64 - 0.5, v as f64 + 0.5);
            pts.extend([
                (l as f64 - 0.5, v0),
                (l as f64 - 0.5, v1),
                (r as f64 + 0.5, v0),
                (r as f64 + 0.5, v1),
            ]);
        }
    }
    pts
}

/// Minimum-area rectangle enclosing the pixel squares of the mask, found by
/// rotating calipers over the convex hull. Among equal-area candidates the
/// one with the smallest `angle` wins; for squares the angle is reduced into
/// `[0, π/2)`.
pub fn min_area_rect(m: &Mask) -> MinAreaRect {
    let hull = convex_hull(&silhouette_corners(m));
    let mut best: Option<MinAreaRect> = None;
    let n = hull.len();
    for i in 0..n {
        let p = hull[i];
        let q = hull[(i + 1) % n];
        let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        let e = ((q.0 - p.0) / len, (q.1 - p.1) / len);
        let nrm = (-e.1, e.0);
        let (mut e_lo, mut e_hi, mut n_lo, mut n_hi) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &h in &hull {
            let pe = h.0 * e.0 + h.1 * e.1;
            let pn = h.0 * nrm.0 + h.1 * nrm.1;
            e_lo = e_lo.min(pe);
            e_hi = e_hi.max(pe);
            n_lo = n_lo.min(pn);
            n_hi = n_hi.max(pn);
        }
        let (he, hn) = ((e_hi - e_lo) / 2.0, (n_hi - n_lo) / 2.0);
        let (ce, cn) = ((e_hi + e_lo) / 2.0, (n_hi + n_lo) / 2.0);
        let center = (ce * e.0 + cn * nrm.0, ce * e.1 + cn * nrm.1);
        let edge_angle = e.1.atan2(e.0);
        let (a, b, a_angle) = if he >= hn {
            (he, hn, edge_angle)
        } else {
            (hn, he, edge_angle + FRAC_PI_2)
        };
        let mut angle = wrap_angle(a_angle, PI);
        if a - b <= SQUARE_TOL * a {
            angle = wrap_angle(angle, FRAC_PI_2);
        }
        let cand = MinAreaRect {
            center,
            half_extents: (a, b),
            angle,
        };
        best = Some(match best {
            None => cand,
            Some(cur) => {
                let (ca, cb) = (cand.area(), cur.area());
                if ca < cb * (1.0 - AREA_TOL)
                    || (ca <= cb * (1.0 + AREA_TOL) && cand.angle < cur.angle)
                {
                    cand
                } else {
                    cur
                }
            }
        });
    }
    best.unwrap_or_else(|| {
        // Degenerate hull cannot happen for pixel squares, but keep a sane answer.
        let b = m.bbox();
        MinAreaRect {
            center: b.center(),
            half_extents: (b.width() as f64 / 2.0, b.height() as f64 / 2.0),
            angle: 0.0,
        }
    })
}

/// Image-plane direction of the rectangle's shorter edges, `[0, π)`: the
/// line a parallel gripper should close along. Squares resolve to the
/// smallest equivalent angle.
pub fn compute_image_yaw(m: &Mask) -> f64 {
    let r = min_area_rect(m);
    if r.is_square() {
        r.angle
    } else {
        wrap_angle(r.angle + FRAC_PI_2, PI)
    }
}
