use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depth values beyond this are treated as sensor garbage.
pub const MAX_DEPTH: f32 = 10.0;

/// Row-major metric depth map; `0.0` marks an invalid pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ImageShape {
                len: data.len(),
                width,
                height,
            });
        }
        if let Some(bad) = data
            .iter()
            .find(|d| !(d.is_finite() && **d >= 0.0 && **d <= MAX_DEPTH))
        {
            return Err(Error::Format(format!(
                "depth value {bad} outside [0, {MAX_DEPTH}]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    /// Builds an image from raw sensor values, mapping anything non-finite
    /// or outside `(0, MAX_DEPTH]` to the invalid sentinel.
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height, "depth buffer size");
        for d in &mut data {
            if !(d.is_finite() && *d > 0.0 && *d <= MAX_DEPTH) {
                *d = 0.0;
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn min_valid(&self) -> Option<f32> {
        self.data
            .iter()
            .copied()
            .filter(|d| *d > 0.0)
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Inclusive pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
}

impl BBox {
    pub fn center(&self) -> (f64, f64) {
        (
            (self.u_min + self.u_max) as f64 / 2.0,
            (self.v_min + self.v_max) as f64 / 2.0,
        )
    }

    pub fn width(&self) -> usize {
        self.u_max - self.u_min + 1
    }

    pub fn height(&self) -> usize {
        self.v_max - self.v_min + 1
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min as f64
            && u <= self.u_max as f64
            && v >= self.v_min as f64
            && v <= self.v_max as f64
    }
}

/// Binary object mask with at least one set pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    bbox: BBox,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::ImageShape {
                len: bits.len(),
                width,
                height,
            });
        }
        let mut bbox: Option<BBox> = None;
        for v in 0..height {
            for u in 0..width {
                if bits[v * width + u] {
                    bbox = Some(match bbox {
                        None => BBox {
                            u_min: u,
                            v_min: v,
                            u_max: u,
                            v_max: v,
                        },
                        Some(b) => BBox {
                            u_min: b.u_min.min(u),
                            v_min: b.v_min,
                            u_max: b.u_max.max(u),
                            v_max: v,
                        },
                    });
                }
            }
        }
        let bbox = bbox.ok_or(Error::EmptyMask)?;
        Ok(Self {
            width,
            height,
            bits,
            bbox,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut bits = vec![false; width * height];
        for v in 0..height {
            for u in 0..width {
                bits[v * width + u] = f(u, v);
            }
        }
        Self::new(width, height, bits)
    }

    pub fn from_pixels(width: usize, height: usize, pixels: &[(usize, usize)]) -> Result<Self> {
        let mut bits = vec![false; width * height];
        for &(u, v) in pixels {
            if u >= width || v >= height {
                return Err(Error::OutOfBounds {
                    u: u as f64,
                    v: v as f64,
                    width,
                    height,
                });
            }
            bits[v * width + u] = true;
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        u < self.width && v < self.height && self.bits[v * self.width + u]
    }

    fn get_signed(&self, u: i64, v: i64) -> bool {
        u >= 0 && v >= 0 && self.get(u as usize, v as usize)
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let b = self.bbox;
        (b.v_min..=b.v_max)
            .flat_map(move |v| (b.u_min..=b.u_max).map(move |u| (u, v)))
            .filter(move |&(u, v)| self.bits[v * self.width + u])
    }

    pub fn count(&self) -> usize {
        self.pixels().count()
    }

    /// Set pixel nearest to a sub-pixel location; ties resolve to row-major order.
    pub fn nearest_pixel(&self, u: f64, v: f64) -> (usize, usize) {
        let mut best = (self.bbox.u_min, self.bbox.v_min);
        let mut best_d = f64::INFINITY;
        for (pu, pv) in self.pixels() {
            let d = (pu as f64 - u).powi(2) + (pv as f64 - v).powi(2);
            if d < best_d {
                best_d = d;
                best = (pu, pv);
            }
        }
        best
    }

    /// Uncompressed run-length counts over the row-major bitmap, starting
    /// with a (possibly zero) run of unset pixels.
    pub fn to_rle(&self) -> Vec<u32> {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &b in &self.bits {
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
        counts.push(run);
        counts
    }

    pub fn from_rle(width: usize, height: usize, counts: &[u32]) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        let mut value = false;
        for &c in counts {
            bits.extend(std::iter::repeat_n(value, c as usize));
            value = !value;
        }
        Self::new(width, height, bits)
    }
}

/// Arithmetic mean `(u, v)` of the set pixels.
pub fn mask_centroid(m: &Mask) -> (f64, f64) {
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for (u, v) in m.pixels() {
        su += u as f64;
        sv += v as f64;
        n += 1;
    }
    (su / n as f64, sv / n as f64)
}

// Clockwise on screen (v grows downward): E, SE, S, SW, W, NW, N, NE.
const MOORE: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn direction_index(du: i64, dv: i64) -> usize {
    MOORE
        .iter()
        .position(|&d| d == (du, dv))
        .expect("Moore neighbours are 8-adjacent")
}

/// Clockwise 8-connected outer boundary of the component containing the
/// topmost-then-leftmost set pixel (Moore-neighbour tracing with Jacob's
/// stopping criterion).
pub fn mask_outline(m: &Mask) -> Vec<(usize, usize)> {
    let b = m.bbox();
    let start_u = (b.u_min..=b.u_max)
        .find(|&u| m.get(u, b.v_min))
        .expect("bbox row holds a set pixel");
    let start = (start_u as i64, b.v_min as i64);
    // Came in from the west: that neighbour is background by construction.
    let start_back = 4usize;

    let mut trace = vec![(start.0 as usize, start.1 as usize)];
    let mut current = start;
    let mut back = start_back;
    let limit = 4 * m.count() + 16;
    for _ in 0..limit {
        let mut next = None;
        for i in 1..=8 {
            let d = (back + i) % 8;
            let p = (current.0 + MOORE[d].0, current.1 + MOORE[d].1);
            if m.get_signed(p.0, p.1) {
                next = Some((p, d));
                break;
            }
        }
        let Some((p, d)) = next else {
            break; // isolated pixel
        };
        let prev_d = (d + 7) % 8;
        let prev = (current.0 + MOORE[prev_d].0, current.1 + MOORE[prev_d].1);
        back = direction_index(prev.0 - p.0, prev.1 - p.1);
        current = p;
        if current == start && back == start_back {
            break;
        }
        trace.push((current.0 as usize, current.1 as usize));
    }
    trace
}
