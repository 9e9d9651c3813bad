//! Loop-to-mesh generator: three dense layers (ReLU after the first two)
//! mapping a flattened boundary loop to `N` predicted points, with
//! hand-written backpropagation.
//!
//! Weights are stored row-major as `[fan_out x fan_in]`. Outputs are
//! interleaved `[x0, y0, x1, y1, ...]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Interval, Point2, PointSet};

pub const DEFAULT_HIDDEN1: usize = 256;
pub const DEFAULT_HIDDEN2: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetDims {
    pub loop_size: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub nodes: usize,
}

impl NetDims {
    pub fn input_len(&self) -> usize {
        2 * self.loop_size
    }

    pub fn output_len(&self) -> usize {
        2 * self.nodes
    }

    /// `(fan_in, fan_out)` of each layer.
    pub fn layer_shapes(&self) -> [(usize, usize); 3] {
        [
            (self.input_len(), self.hidden1),
            (self.hidden1, self.hidden2),
            (self.hidden2, self.output_len()),
        ]
    }

    fn validate(&self) -> Result<()> {
        if self.loop_size == 0 || self.hidden1 == 0 || self.hidden2 == 0 || self.nodes == 0 {
            return Err(Error::Shape(format!(
                "all network dimensions must be >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Xavier-uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub dims: NetDims,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

/// Gradient of a scalar loss with respect to each [`NetworkParams`] entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrads {
    pub dims: NetDims,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

macro_rules! tensor_views {
    ($ty:ty) => {
        impl $ty {
            pub fn zeros(dims: NetDims) -> Self {
                let [(i1, o1), (i2, o2), (i3, o3)] = dims.layer_shapes();
                Self {
                    dims,
                    w1: vec![0.0; i1 * o1],
                    b1: vec![0.0; o1],
                    w2: vec![0.0; i2 * o2],
                    b2: vec![0.0; o2],
                    w3: vec![0.0; i3 * o3],
                    b3: vec![0.0; o3],
                }
            }

            /// Tensors in the fixed order `w1, b1, w2, b2, w3, b3`.
            pub fn tensors(&self) -> [&[f64]; 6] {
                [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
            }

            pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
                [
                    &mut self.w1,
                    &mut self.b1,
                    &mut self.w2,
                    &mut self.b2,
                    &mut self.w3,
                    &mut self.b3,
                ]
            }

            pub fn num_values(&self) -> usize {
                self.tensors().iter().map(|t| t.len()).sum()
            }

            /// Check every tensor length against `dims`.
            pub fn check_shapes(&self) -> Result<()> {
                let expected = Self::zeros(self.dims);
                for (name, (a, b)) in ["w1", "b1", "w2", "b2", "w3", "b3"]
                    .iter()
                    .zip(self.tensors().iter().zip(expected.tensors()))
                {
                    if a.len() != b.len() {
                        return Err(Error::Shape(format!(
                            "{name} has {} entries, expected {}",
                            a.len(),
                            b.len()
                        )));
                    }
                }
                Ok(())
            }
        }
    };
}

tensor_views!(NetworkParams);
tensor_views!(ParamGrads);

impl ParamGrads {
    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl NetworkParams {
    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Xavier-uniform weights, zero biases. Deterministic in `seed`.
pub fn init_params(seed: u64, dims: NetDims) -> Result<NetworkParams> {
    dims.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = NetworkParams::zeros(dims);
    let [s1, s2, s3] = dims.layer_shapes();
    for (w, (fan_in, fan_out)) in [&mut params.w1, &mut params.w2, &mut params.w3]
        .into_iter()
        .zip([s1, s2, s3])
    {
        let a = xavier_bound(fan_in, fan_out);
        w.iter_mut().for_each(|v| *v = rng.gen_range(-a..a));
    }
    Ok(params)
}

/// Intermediates kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub z1: Vec<f64>,
    pub a1: Vec<f64>,
    pub z2: Vec<f64>,
    pub a2: Vec<f64>,
    /// Network output before clamping.
    pub output: Vec<f64>,
    /// `false` where clamping replaced the output value; those entries pass no gradient.
    pub gate: Vec<bool>,
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for ((row, bias), o) in w.chunks_exact(cols).zip(b).zip(out.iter_mut()) {
        *o = bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Run the generator on a loop of exactly `dims.loop_size` points.
///
/// With `clamp_y`, predicted y coordinates are clipped into the interval and
/// the clipped entries are recorded in the trace gate. The prediction keeps
/// the frame of `boundary`.
pub fn forward(
    params: &NetworkParams,
    boundary: &PointSet,
    clamp_y: Option<Interval>,
) -> Result<(PointSet, ForwardTrace)> {
    let dims = params.dims;
    if boundary.len() != dims.loop_size {
        return Err(Error::Shape(format!(
            "loop has {} points, network expects {}",
            boundary.len(),
            dims.loop_size
        )));
    }
    params.check_shapes()?;
    let input = boundary.flatten();

    let mut z1 = vec![0.0; dims.hidden1];
    affine(&params.w1, &params.b1, &input, &mut z1);
    let a1 = relu(&z1);
    let mut z2 = vec![0.0; dims.hidden2];
    affine(&params.w2, &params.b2, &a1, &mut z2);
    let a2 = relu(&z2);
    let mut output = vec![0.0; dims.output_len()];
    affine(&params.w3, &params.b3, &a2, &mut output);

    let mut gate = vec![true; output.len()];
    let mut points = Vec::with_capacity(dims.nodes);
    for (k, xy) in output.chunks_exact(2).enumerate() {
        let mut y = xy[1];
        if let Some(band) = clamp_y {
            if !band.contains(y) {
                y = band.clamp(y);
                gate[2 * k + 1] = false;
            }
        }
        points.push(Point2::new(xy[0], y));
    }
    let prediction = PointSet::with_frame(points, boundary.frame())?;
    let trace = ForwardTrace {
        input,
        z1,
        a1,
        z2,
        a2,
        output,
        gate,
    };
    Ok((prediction, trace))
}

// acc[r, :] += g[r] * x
fn outer_accumulate(acc: &mut [f64], g: &[f64], x: &[f64], scale: f64) {
    for (row, &gr) in acc.chunks_exact_mut(x.len()).zip(g) {
        if gr == 0.0 {
            continue;
        }
        let k = gr * scale;
        row.iter_mut().zip(x).for_each(|(a, &v)| *a += k * v);
    }
}

// W^T g
fn transpose_apply(w: &[f64], g: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (row, &gr) in w.chunks_exact(cols).zip(g) {
        if gr == 0.0 {
            continue;
        }
        out.iter_mut().zip(row).for_each(|(o, &v)| *o += gr * v);
    }
    out
}

/// Add `scale * d loss / d params` into `grads`.
pub fn backward_accumulate(
    params: &NetworkParams,
    trace: &ForwardTrace,
    d_output: &[f64],
    scale: f64,
    grads: &mut ParamGrads,
) -> Result<()> {
    let dims = params.dims;
    if d_output.len() != dims.output_len() || trace.output.len() != dims.output_len() {
        return Err(Error::Shape(format!(
            "output cotangent has {} entries, expected {}",
            d_output.len(),
            dims.output_len()
        )));
    }
    if grads.dims != dims || trace.a2.len() != dims.hidden2 || trace.a1.len() != dims.hidden1 {
        return Err(Error::Shape(
            "trace or gradient buffer does not match params".into(),
        ));
    }

    let g3: Vec<f64> = d_output
        .iter()
        .zip(&trace.gate)
        .map(|(&g, &open)| if open { g } else { 0.0 })
        .collect();
    outer_accumulate(&mut grads.w3, &g3, &trace.a2, scale);
    grads
        .b3
        .iter_mut()
        .zip(&g3)
        .for_each(|(b, g)| *b += scale * g);

    let mut g2 = transpose_apply(&params.w3, &g3, dims.hidden2);
    g2.iter_mut().zip(&trace.z2).for_each(|(g, &z)| {
        if z <= 0.0 {
            *g = 0.0
        }
    });
    outer_accumulate(&mut grads.w2, &g2, &trace.a1, scale);
    grads
        .b2
        .iter_mut()
        .zip(&g2)
        .for_each(|(b, g)| *b += scale * g);

    let mut g1 = transpose_apply(&params.w2, &g2, dims.hidden1);
    g1.iter_mut().zip(&trace.z1).for_each(|(g, &z)| {
        if z <= 0.0 {
            *g = 0.0
        }
    });
    outer_accumulate(&mut grads.w1, &g1, &trace.input, scale);
    grads
        .b1
        .iter_mut()
        .zip(&g1)
        .for_each(|(b, g)| *b += scale * g);
    Ok(())
}

pub fn backward(
    params: &NetworkParams,
    trace: &ForwardTrace,
    d_output: &[f64],
) -> Result<ParamGrads> {
    let mut grads = ParamGrads::zeros(params.dims);
    backward_accumulate(params, trace, d_output, 1.0, &mut grads)?;
    Ok(grads)
}
