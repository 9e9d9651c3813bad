//! Density-based comparison of predicted and reference node sets: Gaussian
//! KDE on a uniform grid, then KL divergence between the two grids.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Interval, PointSet};

pub const DEFAULT_GRID: usize = 100;
pub const DEFAULT_KL_EPSILON: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WindowName {
    Center,
    Whole,
}

impl WindowName {
    /// Single-letter region code used in reports.
    pub fn code(self) -> &'static str {
        match self {
            WindowName::Center => "c",
            WindowName::Whole => "w",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalWindow {
    pub name: WindowName,
    pub x_range: Interval,
    pub y_range: Interval,
    pub grid_nx: usize,
    pub grid_ny: usize,
}

impl EvalWindow {
    /// Band around the unit chord: x in [-0.5, 1.5], y in [-0.4, 0.4].
    pub fn center() -> Self {
        EvalWindow {
            name: WindowName::Center,
            x_range: Interval { lo: -0.5, hi: 1.5 },
            y_range: Interval { lo: -0.4, hi: 0.4 },
            grid_nx: DEFAULT_GRID,
            grid_ny: DEFAULT_GRID,
        }
    }

    /// Bounding box of `truth`, padded by 5% of its extent on every side.
    pub fn whole(truth: &PointSet) -> Self {
        let (lo, hi) = truth.bounds();
        let pad_x = 0.05 * (hi.x - lo.x).max(f64::EPSILON);
        let pad_y = 0.05 * (hi.y - lo.y).max(f64::EPSILON);
        EvalWindow {
            name: WindowName::Whole,
            x_range: Interval {
                lo: lo.x - pad_x,
                hi: hi.x + pad_x,
            },
            y_range: Interval {
                lo: lo.y - pad_y,
                hi: hi.y + pad_y,
            },
            grid_nx: DEFAULT_GRID,
            grid_ny: DEFAULT_GRID,
        }
    }

    /// Center and Whole windows for a reference set.
    pub fn standard_pair(truth: &PointSet) -> [EvalWindow; 2] {
        [EvalWindow::center(), EvalWindow::whole(truth)]
    }

    pub fn with_grid(mut self, nx: usize, ny: usize) -> Self {
        self.grid_nx = nx;
        self.grid_ny = ny;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |r: &Interval| r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi;
        if !finite(&self.x_range) || !finite(&self.y_range) {
            return Err(Error::InvalidInput(format!(
                "window ranges must be finite and non-empty: {self:?}"
            )));
        }
        if self.grid_nx < 2 || self.grid_ny < 2 {
            return Err(Error::InvalidInput(format!(
                "grid must be at least 2x2, got {}x{}",
                self.grid_nx, self.grid_ny
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x_range.contains(x) && self.y_range.contains(y)
    }

    fn centers(range: &Interval, n: usize) -> Vec<f64> {
        let step = range.width() / n as f64;
        (0..n).map(|i| range.lo + (i as f64 + 0.5) * step).collect()
    }

    pub fn x_centers(&self) -> Vec<f64> {
        Self::centers(&self.x_range, self.grid_nx)
    }

    pub fn y_centers(&self) -> Vec<f64> {
        Self::centers(&self.y_range, self.grid_ny)
    }
}

/// Kernel widths per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// Scott's rule per axis on the points inside the window.
    Auto,
    Isotropic(f64),
    PerAxis {
        x: f64,
        y: f64,
    },
}

/// Scott's rule `sigma * n^(-1/6)` per axis, over the points inside `window`.
pub fn scott_bandwidth(ps: &PointSet, window: &EvalWindow) -> Result<(f64, f64)> {
    let inside: Vec<_> = ps
        .points()
        .iter()
        .filter(|p| window.contains(p.x, p.y))
        .collect();
    let n = inside.len();
    if n < 2 {
        return Err(Error::DegenerateData(format!(
            "{n} points inside the {:?} window, need at least 2 to fit a bandwidth",
            window.name
        )));
    }
    let nf = n as f64;
    let mx = inside.iter().map(|p| p.x).sum::<f64>() / nf;
    let my = inside.iter().map(|p| p.y).sum::<f64>() / nf;
    let vx = inside.iter().map(|p| (p.x - mx).powi(2)).sum::<f64>() / (nf - 1.0);
    let vy = inside.iter().map(|p| (p.y - my).powi(2)).sum::<f64>() / (nf - 1.0);
    let factor = nf.powf(-1.0 / 6.0);
    let (hx, hy) = (vx.sqrt() * factor, vy.sqrt() * factor);
    if !(hx > 0.0 && hy > 0.0) {
        return Err(Error::DegenerateData(format!(
            "zero spread inside the {:?} window",
            window.name
        )));
    }
    Ok((hx, hy))
}

/// Normalised probability mass on a uniform grid, indexed `[ix * ny + iy]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub window: EvalWindow,
    pub mass: Vec<f64>,
}

impl DensityGrid {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.mass[ix * self.window.grid_ny + iy]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `(ix, iy)` of the heaviest cell; ties go to the first in storage order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &m) in self.mass.iter().enumerate() {
            if m > self.mass[best] {
                best = k;
            }
        }
        (best / self.window.grid_ny, best % self.window.grid_ny)
    }
}

fn axis_kernel(centers: &[f64], coord: f64, h: f64) -> Vec<f64> {
    centers
        .iter()
        .map(|&c| {
            let u = (c - coord) / h;
            (-0.5 * u * u).exp()
        })
        .collect()
}

/// Gaussian KDE evaluated at grid cell centres and normalised to unit mass.
///
/// Every point contributes, including points outside the window.
pub fn kde(ps: &PointSet, window: &EvalWindow, bandwidth: Bandwidth) -> Result<DensityGrid> {
    window.validate()?;
    let (hx, hy) = match bandwidth {
        Bandwidth::Auto => scott_bandwidth(ps, window)?,
        Bandwidth::Isotropic(h) => (h, h),
        Bandwidth::PerAxis { x, y } => (x, y),
    };
    if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be positive, got ({hx}, {hy})"
        )));
    }
    let xs = window.x_centers();
    let ys = window.y_centers();
    let ny = ys.len();
    let mut mass = vec![0.0; xs.len() * ny];
    for p in ps.points() {
        let kx = axis_kernel(&xs, p.x, hx);
        let ky = axis_kernel(&ys, p.y, hy);
        for (row, &wx) in mass.chunks_exact_mut(ny).zip(&kx) {
            if wx == 0.0 {
                continue;
            }
            row.iter_mut().zip(&ky).for_each(|(m, &wy)| *m += wx * wy);
        }
    }
    let total: f64 = mass.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateData(format!(
            "kernel mass inside the {:?} window is numerically zero",
            window.name
        )));
    }
    mass.iter_mut().for_each(|m| *m /= total);
    Ok(DensityGrid {
        window: *window,
        mass,
    })
}

/// `sum P log(P / (Q + eps))` in nats, with `0 log 0 = 0`, clipped below at 0.
pub fn kl_divergence(p: &DensityGrid, q: &DensityGrid, epsilon: f64) -> Result<f64> {
    if p.window != q.window || p.mass.len() != q.mass.len() {
        return Err(Error::InvalidInput(
            "KL operands use different windows".into(),
        ));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let kl: f64 = p
        .mass
        .iter()
        .zip(&q.mass)
        .filter(|(&pm, _)| pm > 0.0)
        .map(|(&pm, &qm)| pm * (pm / (qm + epsilon)).ln())
        .sum();
    Ok(kl.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowKl {
    pub window: WindowName,
    pub kl: f64,
}

/// KL of the predicted density against the reference density in each
/// window, both smoothed with the bandwidth fitted on the reference.
pub fn evaluate(
    pred: &PointSet,
    truth: &PointSet,
    windows: &[EvalWindow],
) -> Result<Vec<WindowKl>> {
    evaluate_with(pred, truth, windows, DEFAULT_KL_EPSILON)
}

pub fn evaluate_with(
    pred: &PointSet,
    truth: &PointSet,
    windows: &[EvalWindow],
    epsilon: f64,
) -> Result<Vec<WindowKl>> {
    windows
        .iter()
        .map(|w| {
            let (x, y) = scott_bandwidth(truth, w)?;
            let bw = Bandwidth::PerAxis { x, y };
            let q = kde(truth, w, bw)?;
            let p = kde(pred, w, bw)?;
            Ok(WindowKl {
                window: w.name,
                kl: kl_divergence(&p, &q, epsilon)?,
            })
        })
        .collect()
}

/// One cell of a ratio x node-count sweep; `kl` is `None` for a missing run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlRow {
    pub ratio: f64,
    pub region: WindowName,
    pub nodes: usize,
    pub kl: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KlReport {
    pub rows: Vec<KlRow>,
}

impl KlReport {
    pub const CSV_HEADER: &'static str = "ratio,region,nodes,kl";

    /// Long-form CSV. Rows are emitted in stored order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let kl = r.kl.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.ratio, r.region.code(), r.nodes, kl);
        }
        out
    }

    /// Sort by ratio, then region (c before w), then node count.
    pub fn sort_canonical(&mut self) {
        self.rows.sort_by(|a, b| {
            a.ratio
                .total_cmp(&b.ratio)
                .then(a.region.cmp(&b.region))
                .then(a.nodes.cmp(&b.nodes))
        });
    }

    /// Wide table: one row per (ratio, region), one column per node count.
    pub fn to_table(&self) -> String {
        let mut ratios: Vec<f64> = Vec::new();
        let mut nodes: Vec<usize> = Vec::new();
        for r in &self.rows {
            if !ratios.contains(&r.ratio) {
                ratios.push(r.ratio);
            }
            if !nodes.contains(&r.nodes) {
                nodes.push(r.nodes);
            }
        }
        let mut out = String::from("ratio,region");
        for n in &nodes {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for &ratio in &ratios {
            for region in [WindowName::Center, WindowName::Whole] {
                let _ = write!(out, "{ratio},{}", region.code());
                for &n in &nodes {
                    let cell = self
                        .rows
                        .iter()
                        .find(|r| r.ratio == ratio && r.region == region && r.nodes == n)
                        .and_then(|r| r.kl)
                        .map(|v| format!("{v:.6}"))
                        .unwrap_or_default();
                    let _ = write!(out, ",{cell}");
                }
                out.push('\n');
            }
        }
        out
    }
}
