//! Analytic solids with exact ray/solid interval queries. Rendering, the
//! grasp oracle and the collision checks all reduce to "where along this line
//! am I inside the object".

use crate::geometry::Vec3;

/// Sorted, disjoint parameter intervals `[t0, t1]` along a line.
pub type Spans = Vec<(f64, f64)>;

const EMPTY: Spans = Vec::new();

fn full() -> Spans {
    vec![(f64::NEG_INFINITY, f64::INFINITY)]
}

pub fn intersect(a: &Spans, b: &Spans) -> Spans {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

pub fn union(a: &Spans, b: &Spans) -> Spans {
    let mut all: Vec<(f64, f64)> = a.iter().chain(b.iter()).copied().collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Spans = Vec::new();
    for s in all {
        match out.last_mut() {
            Some(last) if s.0 <= last.1 => last.1 = last.1.max(s.1),
            _ => out.push(s),
        }
    }
    out
}

pub fn subtract(a: &Spans, b: &Spans) -> Spans {
    let mut out = Vec::new();
    for &(lo, hi) in a {
        let mut cur = lo;
        for &(blo, bhi) in b {
            if bhi <= cur || blo >= hi {
                continue;
            }
            if blo > cur {
                out.push((cur, blo));
            }
            cur = cur.max(bhi);
            if cur >= hi {
                break;
            }
        }
        if cur < hi {
            out.push((cur, hi));
        }
    }
    out
}

/// Clips spans to `[lo, hi]`, dropping empty pieces.
pub fn clip(a: &Spans, lo: f64, hi: f64) -> Spans {
    intersect(a, &vec![(lo, hi)])
}

fn slab(o: f64, d: f64, lo: f64, hi: f64) -> Spans {
    if d.abs() < 1e-15 {
        return if o >= lo && o <= hi { full() } else { EMPTY };
    }
    let (t0, t1) = ((lo - o) / d, (hi - o) / d);
    vec![(t0.min(t1), t0.max(t1))]
}

fn quadratic(a: f64, b: f64, c: f64) -> Spans {
    // inside where a t^2 + b t + c <= 0 with a > 0
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return EMPTY;
    }
    let sq = disc.sqrt();
    // numerically stable roots
    let q = -0.5 * (b + b.signum() * sq);
    let (r0, r1) = if q != 0.0 {
        (q / a, c / q)
    } else {
        (-sq / (2.0 * a), sq / (2.0 * a))
    };
    vec![(r0.min(r1), r0.max(r1))]
}

/// Infinite cylinder of radius `r` about the local `z` axis.
fn z_cylinder(o: &Vec3, d: &Vec3, r: f64) -> Spans {
    let a = d.x * d.x + d.y * d.y;
    let c = o.x * o.x + o.y * o.y - r * r;
    if a < 1e-18 {
        return if c <= 0.0 { full() } else { EMPTY };
    }
    quadratic(a, 2.0 * (o.x * d.x + o.y * d.y), c)
}

fn sphere(o: &Vec3, d: &Vec3, center: &Vec3, r: f64) -> Spans {
    let oc = o - center;
    let a = d.norm_squared();
    if a < 1e-18 {
        return if oc.norm() <= r { full() } else { EMPTY };
    }
    quadratic(a, 2.0 * oc.dot(d), oc.norm_squared() - r * r)
}

/// Primitive solids in an object-local frame whose base rests on `z = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Solid {
    /// Axis-aligned box `[-hx, hx] × [-hy, hy] × [0, height]`.
    Cuboid { hx: f64, hy: f64, height: f64 },
    /// Upright cylinder.
    Cylinder { radius: f64, height: f64 },
    /// Sphere resting on the table.
    Ball { radius: f64 },
    /// Flat ring: cylinder with a concentric through-hole.
    Annulus { inner: f64, outer: f64, height: f64 },
    /// Hemispherical shell, open at the top, resting on its pole.
    Shell { radius: f64, wall: f64 },
    /// Union of table-resting spheres.
    Lobes(Vec<(Vec3, f64)>),
}

impl Solid {
    /// Parameter spans along `o + t·d` where the point is inside the solid.
    pub fn spans(&self, o: &Vec3, d: &Vec3) -> Spans {
        match self {
            Solid::Cuboid { hx, hy, height } => {
                let s = intersect(&slab(o.x, d.x, -hx, *hx), &slab(o.y, d.y, -hy, *hy));
                intersect(&s, &slab(o.z, d.z, 0.0, *height))
            }
            Solid::Cylinder { radius, height } => {
                intersect(&z_cylinder(o, d, *radius), &slab(o.z, d.z, 0.0, *height))
            }
            Solid::Ball { radius } => sphere(o, d, &Vec3::new(0.0, 0.0, *radius), *radius),
            Solid::Annulus {
                inner,
                outer,
                height,
            } => {
                let disk = intersect(&z_cylinder(o, d, *outer), &slab(o.z, d.z, 0.0, *height));
                subtract(&disk, &z_cylinder(o, d, *inner))
            }
            Solid::Shell { radius, wall } => {
                let c = Vec3::new(0.0, 0.0, *radius);
                let shell = subtract(&sphere(o, d, &c, *radius), &sphere(o, d, &c, radius - wall));
                intersect(&shell, &slab(o.z, d.z, f64::NEG_INFINITY, *radius))
            }
            Solid::Lobes(lobes) => lobes
                .iter()
                .fold(EMPTY, |acc, (c, r)| union(&acc, &sphere(o, d, c, *r))),
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        match self {
            Solid::Cuboid { hx, hy, height } => {
                p.x.abs() <= *hx && p.y.abs() <= *hy && p.z >= 0.0 && p.z <= *height
            }
            Solid::Cylinder { radius, height } => {
                p.x * p.x + p.y * p.y <= radius * radius && p.z >= 0.0 && p.z <= *height
            }
            Solid::Ball { radius } => (p - Vec3::new(0.0, 0.0, *radius)).norm() <= *radius,
            Solid::Annulus {
                inner,
                outer,
                height,
            } => {
                let r2 = p.x * p.x + p.y * p.y;
                r2 <= outer * outer && r2 >= inner * inner && p.z >= 0.0 && p.z <= *height
            }
            Solid::Shell { radius, wall } => {
                let r = (p - Vec3::new(0.0, 0.0, *radius)).norm();
                r <= *radius && r >= radius - wall && p.z <= *radius
            }
            Solid::Lobes(lobes) => lobes.iter().any(|(c, r)| (p - c).norm() <= *r),
        }
    }

    /// Distance from `p` to the solid's surface (exact for the primitives
    /// used here, evaluated by their closed forms).
    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        match self {
            Solid::Cuboid { hx, hy, height } => {
                let c = Vec3::new(0.0, 0.0, height / 2.0);
                let q = (p - c).abs() - Vec3::new(*hx, *hy, height / 2.0);
                let outside = q.map(|x| x.max(0.0)).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                (outside + inside).abs()
            }
            Solid::Cylinder { radius, height } => {
                let dr = (p.x * p.x + p.y * p.y).sqrt() - radius;
                let dz = (p.z - height / 2.0).abs() - height / 2.0;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                (outside + dr.max(dz).min(0.0)).abs()
            }
            Solid::Ball { radius } => ((p - Vec3::new(0.0, 0.0, *radius)).norm() - radius).abs(),
            Solid::Annulus {
                inner,
                outer,
                height,
            } => {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                let mid = (inner + outer) / 2.0;
                let half = (outer - inner) / 2.0;
                let dr = (r - mid).abs() - half;
                let dz = (p.z - height / 2.0).abs() - height / 2.0;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                (outside + dr.max(dz).min(0.0)).abs()
            }
            Solid::Shell { radius, wall } => {
                let c = Vec3::new(0.0, 0.0, *radius);
                let q = p - c;
                if q.z <= 0.0 {
                    let mid = radius - wall / 2.0;
                    ((q.norm() - mid).abs() - wall / 2.0).abs()
                } else {
                    // nearest point lies on the flat rim annulus
                    let r = (q.x * q.x + q.y * q.y).sqrt();
                    let dr = if r < radius - wall {
                        radius - wall - r
                    } else if r > *radius {
                        r - radius
                    } else {
                        0.0
                    };
                    (dr * dr + q.z * q.z).sqrt()
                }
            }
            Solid::Lobes(lobes) => {
                // points on the union boundary lie on at least one lobe
                let ds: Vec<f64> = lobes.iter().map(|(c, r)| (p - c).norm() - r).collect();
                let min = ds.iter().copied().fold(f64::INFINITY, f64::min);
                min.abs()
            }
        }
    }

    /// Local-frame axis-aligned bounds `(min, max)`.
    pub fn local_bounds(&self) -> (Vec3, Vec3) {
        match self {
            Solid::Cuboid { hx, hy, height } => {
                (Vec3::new(-hx, -hy, 0.0), Vec3::new(*hx, *hy, *height))
            }
            Solid::Cylinder { radius, height } => (
                Vec3::new(-radius, -radius, 0.0),
                Vec3::new(*radius, *radius, *height),
            ),
            Solid::Ball { radius } => (
                Vec3::new(-radius, -radius, 0.0),
                Vec3::new(*radius, *radius, 2.0 * radius),
            ),
            Solid::Annulus { outer, height, .. } => (
                Vec3::new(-outer, -outer, 0.0),
                Vec3::new(*outer, *outer, *height),
            ),
            Solid::Shell { radius, .. } => (
                Vec3::new(-radius, -radius, 0.0),
                Vec3::new(*radius, *radius, *radius),
            ),
            Solid::Lobes(lobes) => {
                let mut lo = Vec3::repeat(f64::INFINITY);
                let mut hi = Vec3::repeat(f64::NEG_INFINITY);
                for (c, r) in lobes {
                    lo = lo.inf(&(c - Vec3::repeat(*r)));
                    hi = hi.sup(&(c + Vec3::repeat(*r)));
                }
                (lo, hi)
            }
        }
    }

    /// Thin-walled solids with a rim that must be pinched across the wall:
    /// `(inner, outer)` horizontal radii of the wall.
    pub fn wall(&self) -> Option<(f64, f64)> {
        match self {
            Solid::Annulus { inner, outer, .. } => Some((*inner, *outer)),
            Solid::Shell { radius, wall } => Some((radius - wall, *radius)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_algebra() {
        let a = vec![(0.0, 4.0), (6.0, 8.0)];
        let b = vec![(1.0, 2.0), (3.0, 7.0)];
        assert_eq!(intersect(&a, &b), vec![(1.0, 2.0), (3.0, 4.0), (6.0, 7.0)]);
        assert_eq!(subtract(&a, &b), vec![(0.0, 1.0), (2.0, 3.0), (7.0, 8.0)]);
        assert_eq!(union(&a, &b), vec![(0.0, 8.0)]);
        assert_eq!(
            union(&vec![(0.0, 1.0)], &vec![(0.5, 3.0)]),
            vec![(0.0, 3.0)]
        );
    }

    #[test]
    fn vertical_ray_hits_sphere_top() {
        let s = Solid::Ball { radius: 0.05 };
        let spans = s.spans(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(spans.len(), 1);
        assert!((spans[0].0 - 0.9).abs() < 1e-12 && (spans[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn annulus_has_a_hole() {
        let s = Solid::Annulus {
            inner: 0.04,
            outer: 0.06,
            height: 0.01,
        };
        let spans = s.spans(&Vec3::new(-1.0, 0.0, 0.005), &Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(spans.len(), 2);
        assert!((spans[0].0 - 0.94).abs() < 1e-12 && (spans[0].1 - 0.96).abs() < 1e-12);
        assert!(!s.contains(&Vec3::new(0.0, 0.0, 0.005)));
        assert!(s.contains(&Vec3::new(0.05, 0.0, 0.005)));
        assert!(s
            .spans(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(0.0, 0.0, -1.0))
            .is_empty());
    }

    #[test]
    fn shell_spans_match_membership() {
        let s = Solid::Shell {
            radius: 0.06,
            wall: 0.006,
        };
        let o = Vec3::new(-0.1, 0.0, 0.03);
        let d = Vec3::new(1.0, 0.0, 0.0);
        let spans = s.spans(&o, &d);
        for i in 0..2000 {
            let t = i as f64 * 1e-4;
            let p = o + d * t;
            let inside = spans.iter().any(|&(a, b)| t > a + 1e-9 && t < b - 1e-9);
            let boundary = spans
                .iter()
                .any(|&(a, b)| (t - a).abs() <= 1e-9 || (t - b).abs() <= 1e-9);
            if !boundary {
                assert_eq!(inside, s.contains(&p), "t={t}");
            }
        }
    }
}
