use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;
use crate::error::{Error, Result};

/// Point-set encoder `f` (shared per-point MLP, ReLU after every layer, then
/// coordinate-wise max pooling) followed by a projector `g` (ReLU between
/// layers, none after the last) and unit normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub point_widths: Vec<usize>,
    pub projector_widths: Vec<usize>,
    pub weights: Vec<f64>,
    pub rng_seed: u64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Layer {
    pub w: usize,
    pub b: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

fn layout(widths: &[usize], offset: &mut usize) -> Vec<Layer> {
    widths
        .windows(2)
        .map(|p| {
            let l = Layer {
                w: *offset,
                b: *offset + p[0] * p[1],
                fan_in: p[0],
                fan_out: p[1],
            };
            *offset += p[0] * p[1] + p[1];
            l
        })
        .collect()
}

impl EncoderParams {
    pub const DEFAULT_POINT_WIDTHS: [usize; 3] = [3, 64, 128];
    pub const DEFAULT_PROJECTOR_WIDTHS: [usize; 2] = [128, 64];

    /// He-initialized weights and zero biases from `seed`.
    pub fn new(point_widths: &[usize], projector_widths: &[usize], seed: u64) -> Result<Self> {
        Self::check_architecture(point_widths, projector_widths)?;
        let mut p = Self {
            point_widths: point_widths.to_vec(),
            projector_widths: projector_widths.to_vec(),
            weights: Vec::new(),
            rng_seed: seed,
        };
        let (pl, gl) = p.layers();
        let total = gl.last().map(|l| l.b + l.fan_out).unwrap();
        p.weights = vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in pl.iter().chain(&gl) {
            let normal = Normal::new(0.0, (2.0 / l.fan_in as f64).sqrt()).unwrap();
            for w in &mut p.weights[l.w..l.b] {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(p)
    }

    pub fn with_default_architecture(seed: u64) -> Self {
        Self::new(
            &Self::DEFAULT_POINT_WIDTHS,
            &Self::DEFAULT_PROJECTOR_WIDTHS,
            seed,
        )
        .unwrap()
    }

    fn check_architecture(point_widths: &[usize], projector_widths: &[usize]) -> Result<()> {
        if point_widths.len() < 2 || point_widths[0] != 3 {
            return Err(Error::InvalidConfig(
                "point widths must start at 3 and have a layer".into(),
            ));
        }
        if projector_widths.len() < 2 || projector_widths[0] != *point_widths.last().unwrap() {
            return Err(Error::InvalidConfig(
                "projector must start at the descriptor width".into(),
            ));
        }
        if point_widths.iter().chain(projector_widths).any(|w| *w == 0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        Ok(())
    }

    /// Checks widths against the weight vector and that all weights are finite.
    pub fn validate(&self) -> Result<()> {
        Self::check_architecture(&self.point_widths, &self.projector_widths)?;
        let (_, gl) = self.layers();
        let want = gl.last().map(|l| l.b + l.fan_out).unwrap();
        if self.weights.len() != want {
            return Err(Error::Format(format!(
                "{} weights for an architecture that needs {want}",
                self.weights.len()
            )));
        }
        if !self.weights.iter().all(|w| w.is_finite()) {
            return Err(Error::Format("non-finite weight".into()));
        }
        Ok(())
    }

    pub(crate) fn layers(&self) -> (Vec<Layer>, Vec<Layer>) {
        let mut off = 0;
        let pl = layout(&self.point_widths, &mut off);
        let gl = layout(&self.projector_widths, &mut off);
        (pl, gl)
    }

    /// First weight index belonging to the projector.
    pub fn projector_offset(&self) -> usize {
        self.layers().1[0].w
    }

    pub fn descriptor_width(&self) -> usize {
        *self.point_widths.last().unwrap()
    }

    fn weight(&self, l: &Layer) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((l.fan_in, l.fan_out), &self.weights[l.w..l.b]).unwrap()
    }

    fn bias(&self, l: &Layer) -> ndarray::ArrayView1<'_, f64> {
        ndarray::ArrayView1::from(&self.weights[l.b..l.b + l.fan_out])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Encoding {
    /// Pooled descriptor.
    pub h: Vec<f64>,
    /// Unit-norm projection.
    pub z: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
pub(crate) struct Trace {
    /// Input then post-ReLU output of every point layer.
    point_acts: Vec<Array2<f64>>,
    argmax: Vec<usize>,
    /// Descriptor then every projector layer output (post-ReLU for hidden).
    proj_acts: Vec<Array1<f64>>,
    y_norm: f64,
    pub z: Array1<f64>,
    pub h: Array1<f64>,
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub(crate) fn input_matrix(pc: &PointCloud) -> Array2<f64> {
    let canon = pc.canonical();
    let mut x = Array2::zeros((canon.len(), 3));
    for (i, p) in canon.points.iter().enumerate() {
        x[[i, 0]] = p.x;
        x[[i, 1]] = p.y;
        x[[i, 2]] = p.z;
    }
    x
}

pub(crate) fn forward(x: Array2<f64>, params: &EncoderParams) -> Trace {
    let (pl, gl) = params.layers();
    let mut point_acts = vec![x];
    for l in &pl {
        let a = point_acts.last().unwrap().dot(&params.weight(l)) + params.bias(l);
        point_acts.push(a.mapv(relu));
    }
    let last = point_acts.last().unwrap();
    let width = last.ncols();
    let mut h = Array1::zeros(width);
    let mut argmax = vec![0; width];
    for j in 0..width {
        let col = last.column(j);
        let mut best = f64::NEG_INFINITY;
        for (i, &v) in col.iter().enumerate() {
            if v > best {
                best = v;
                argmax[j] = i;
            }
        }
        h[j] = best;
    }
    let mut proj_acts = vec![h.clone()];
    for (k, l) in gl.iter().enumerate() {
        let a = proj_acts.last().unwrap().dot(&params.weight(l)) + params.bias(l);
        proj_acts.push(if k + 1 < gl.len() { a.mapv(relu) } else { a });
    }
    let y = proj_acts.last().unwrap();
    let y_norm = y.dot(y).sqrt().max(1e-12);
    let z = y / y_norm;
    Trace {
        point_acts,
        argmax,
        proj_acts,
        y_norm,
        z,
        h,
    }
}

/// Accumulates `∂L/∂weights` into `grad` given `∂L/∂z`. With
/// `encoder_frozen` only the projector receives gradient.
pub(crate) fn backward(
    trace: &Trace,
    dz: &Array1<f64>,
    params: &EncoderParams,
    grad: &mut [f64],
    encoder_frozen: bool,
) {
    let (pl, gl) = params.layers();
    let z = &trace.z;
    let mut dy = (dz - &(z * z.dot(dz))) / trace.y_norm;
    for (k, l) in gl.iter().enumerate().rev() {
        let input = &trace.proj_acts[k];
        for i in 0..l.fan_in {
            let row = &mut grad[l.w + i * l.fan_out..l.w + (i + 1) * l.fan_out];
            for (g, d) in row.iter_mut().zip(dy.iter()) {
                *g += input[i] * d;
            }
        }
        for (g, d) in grad[l.b..l.b + l.fan_out].iter_mut().zip(dy.iter()) {
            *g += d;
        }
        let mut din = params.weight(l).dot(&dy);
        if k > 0 {
            din.zip_mut_with(input, |d, &a| {
                if a <= 0.0 {
                    *d = 0.0
                }
            });
        }
        dy = din;
    }
    if encoder_frozen {
        return;
    }
    let last = trace.point_acts.last().unwrap();
    let mut dx = Array2::zeros(last.raw_dim());
    for (j, &i) in trace.argmax.iter().enumerate() {
        dx[[i, j]] = dy[j];
    }
    for (k, l) in pl.iter().enumerate().rev() {
        let out = &trace.point_acts[k + 1];
        dx.zip_mut_with(out, |d, &a| {
            if a <= 0.0 {
                *d = 0.0
            }
        });
        let input = &trace.point_acts[k];
        let dw = input.t().dot(&dx);
        for (g, d) in grad[l.w..l.b].iter_mut().zip(dw.iter()) {
            *g += d;
        }
        let db = dx.sum_axis(Axis(0));
        for (g, d) in grad[l.b..l.b + l.fan_out].iter_mut().zip(db.iter()) {
            *g += d;
        }
        if k > 0 {
            dx = dx.dot(&params.weight(l).t());
        }
    }
}

/// Descriptor and unit projection of a cloud. The cloud is first rotated to
/// its canonical yaw, so the result does not depend on the object's heading.
pub fn encode(pc: &PointCloud, params: &EncoderParams) -> Encoding {
    let t = forward(input_matrix(pc), params);
    Encoding {
        h: t.h.to_vec(),
        z: t.z.to_vec(),
    }
}

/// Cosine similarity of the two clouds' projections, each evaluated on its
/// fixed-size subsample.
pub fn similarity(a: &PointCloud, b: &PointCloud, params: &EncoderParams) -> f64 {
    let za = encode(&a.fixed_size(super::CLOUD_POINTS), params).z;
    let zb = encode(&b.fixed_size(super::CLOUD_POINTS), params).z;
    similarity_of(&za, &zb)
}

/// Symmetric by construction: the dot product is summed in index order and
/// multiplication commutes.
pub fn similarity_of(za: &[f64], zb: &[f64]) -> f64 {
    za.iter()
        .zip(zb)
        .map(|(x, y)| x * y)
        .sum::<f64>()
        .clamp(-1.0, 1.0)
}
