//! Planar primitives shared by every stage of the pipeline.
//!
//! Coordinates are in chord units unless a [`PointSet`] is tagged
//! [`Frame::Standardised`]. Only [`apply_standardize`] and
//! [`invert_standardize`] move a set between frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2 { x, y }
    }
}

/// Coordinate frame a point set lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Original,
    Standardised,
}

/// Non-empty ordered collection of finite points tagged with its frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<Point2>,
    frame: Frame,
}

impl PointSet {
    /// Build a set in the original (chord) frame.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        Self::with_frame(points, Frame::Original)
    }

    pub(crate) fn with_frame(points: Vec<Point2>, frame: Frame) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("point set is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "point {i} is not finite: ({}, {})",
                points[i].x, points[i].y
            )));
        }
        Ok(PointSet { points, frame })
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().copied().map(Point2::from).collect())
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Interleaved `[x0, y0, x1, y1, ...]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Per-axis (min, max) as two points.
    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

/// Closed real interval `[lo, hi]`; infinite bounds are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInput(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub const fn unbounded() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_valid(&self) -> bool {
        !(self.lo.is_nan() || self.hi.is_nan() || self.lo > self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Signed area of a closed polygon (positive when counter-clockwise).
pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point2, b: Point2, p: Point2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Closest point to `p` on segment `ab`.
pub fn closest_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let ex = b.x - a.x;
    let ey = b.y - a.y;
    let len_sq = ex * ex + ey * ey;
    if len_sq == 0.0 {
        return a;
    }
    let t = (((p.x - a.x) * ex + (p.y - a.y) * ey) / len_sq).clamp(0.0, 1.0);
    Point2::new(a.x + t * ex, a.y + t * ey)
}

fn characteristic_scale(vertices: &[Point2]) -> f64 {
    vertices
        .iter()
        .fold(1.0_f64, |m, v| m.max(v.x.abs()).max(v.y.abs()))
}

fn on_boundary(p: Point2, vertices: &[Point2], tol: f64) -> bool {
    let n = vertices.len();
    (0..n).any(|i| {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        closest_on_segment(p, a, b).dist(&p) <= tol
    })
}

fn crossing_test(p: Point2, vertices: &[Point2]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Ray-casting containment. Points on an edge count as outside.
pub fn point_in_polygon(p: Point2, vertices: &[Point2]) -> Result<bool> {
    if vertices.len() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    if signed_area(vertices) == 0.0 {
        return Err(Error::InvalidGeometry("polygon has zero area".into()));
    }
    Ok(contains_unchecked(p, vertices))
}

fn contains_unchecked(p: Point2, vertices: &[Point2]) -> bool {
    let tol = 1e-12 * characteristic_scale(vertices);
    !on_boundary(p, vertices, tol) && crossing_test(p, vertices)
}

/// Closed simple polygon bounding the forbidden airfoil interior.
#[derive(Clone, Debug, PartialEq)]
pub struct AirfoilLoop {
    vertices: Vec<Point2>,
    frame: Frame,
}

impl AirfoilLoop {
    /// Validate a vertex ring. The closing edge (last to first) is implicit.
    pub fn new(ps: PointSet) -> Result<Self> {
        let frame = ps.frame();
        let vertices = ps.into_points();
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!(
                "loop needs at least 3 vertices, got {n}"
            )));
        }
        if signed_area(&vertices).abs() <= f64::EPSILON * characteristic_scale(&vertices).powi(2) {
            return Err(Error::InvalidGeometry("loop has zero signed area".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                // adjacent edges share a vertex
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidGeometry(format!(
                        "loop self-intersects between edges {i} and {j}"
                    )));
                }
            }
        }
        Ok(AirfoilLoop { vertices, frame })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        closed_perimeter(&self.vertices)
    }

    /// Strict interior test; boundary points are outside.
    pub fn contains(&self, p: Point2) -> bool {
        contains_unchecked(p, &self.vertices)
    }

    /// Edges as `(start, end)` pairs including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Closest boundary point to `p`; ties resolve to the lowest edge index.
    pub fn nearest_boundary_point(&self, p: Point2) -> Point2 {
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for (a, b) in self.edges() {
            let c = closest_on_segment(p, a, b);
            let d = c.dist_sq(&p);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    pub fn to_point_set(&self) -> PointSet {
        PointSet {
            points: self.vertices.clone(),
            frame: self.frame,
        }
    }

    /// Number of points of `ps` strictly inside the loop.
    pub fn count_inside(&self, ps: &PointSet) -> usize {
        ps.points().iter().filter(|p| self.contains(**p)).count()
    }
}

fn closed_perimeter(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].dist(&vertices[(i + 1) % n]))
        .sum()
}

/// Resample a closed contour to `target` vertices evenly spaced in arc length.
///
/// The first output vertex is the first raw vertex. A trailing vertex that
/// repeats the first one is treated as the explicit closure and dropped.
pub fn resample_loop(raw: &PointSet, target: usize) -> Result<AirfoilLoop> {
    if target < 3 {
        return Err(Error::InvalidGeometry(format!(
            "target vertex count must be at least 3, got {target}"
        )));
    }
    let scale = characteristic_scale(raw.points());
    let tol = 1e-12 * scale;
    let mut ring: Vec<Point2> = Vec::with_capacity(raw.len());
    for &p in raw.points() {
        if ring.last().is_none_or(|q| q.dist(&p) > tol) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && ring[ring.len() - 1].dist(&ring[0]) <= tol {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "contour has {} distinct points, need at least 3",
            ring.len()
        )));
    }

    let n = ring.len();
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    for i in 0..n {
        let len = ring[i].dist(&ring[(i + 1) % n]);
        cumulative.push(cumulative[i] + len);
    }
    let perimeter = cumulative[n];
    let step = perimeter / target as f64;

    let mut out = Vec::with_capacity(target);
    let mut edge = 0;
    for k in 0..target {
        let s = k as f64 * step;
        while edge + 1 < n && cumulative[edge + 1] <= s {
            edge += 1;
        }
        let a = ring[edge];
        let b = ring[(edge + 1) % n];
        let len = cumulative[edge + 1] - cumulative[edge];
        let t = if len > 0.0 {
            ((s - cumulative[edge]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
    }
    AirfoilLoop::new(PointSet::with_frame(out, raw.frame())?)
}

/// Per-axis affine map `(v - mean) / scale` into the standardised frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizeTransform {
    pub mean_x: f64,
    pub mean_y: f64,
    pub scale_x: f64,
    pub scale_y: f64,
}

impl StandardizeTransform {
    pub const IDENTITY: StandardizeTransform = StandardizeTransform {
        mean_x: 0.0,
        mean_y: 0.0,
        scale_x: 1.0,
        scale_y: 1.0,
    };

    pub fn new(mean_x: f64, mean_y: f64, scale_x: f64, scale_y: f64) -> Result<Self> {
        let t = StandardizeTransform {
            mean_x,
            mean_y,
            scale_x,
            scale_y,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mean_x, self.mean_y, self.scale_x, self.scale_y]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.scale_x <= 0.0 || self.scale_y <= 0.0 {
            return Err(Error::DegenerateData(format!(
                "transform scales must be finite and positive, got ({}, {})",
                self.scale_x, self.scale_y
            )));
        }
        Ok(())
    }

    pub fn forward_point(&self, p: Point2) -> Point2 {
        Point2::new(
            (p.x - self.mean_x) / self.scale_x,
            (p.y - self.mean_y) / self.scale_y,
        )
    }

    pub fn inverse_point(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x * self.scale_x + self.mean_x,
            p.y * self.scale_y + self.mean_y,
        )
    }

    /// Standardise a loop. Positive per-axis scaling keeps it simple and non-degenerate.
    pub fn apply_loop(&self, lp: &AirfoilLoop) -> Result<AirfoilLoop> {
        AirfoilLoop::new(apply_standardize(self, &lp.to_point_set())?)
    }

    pub fn invert_loop(&self, lp: &AirfoilLoop) -> Result<AirfoilLoop> {
        AirfoilLoop::new(invert_standardize(self, &lp.to_point_set())?)
    }
}

/// Fit per-axis mean and population standard deviation.
pub fn fit_standardize(ps: &PointSet) -> Result<StandardizeTransform> {
    if ps.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "standardisation needs at least 2 points, got {}",
            ps.len()
        )));
    }
    let n = ps.len() as f64;
    let (sx, sy) = ps
        .points()
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    let (mean_x, mean_y) = (sx / n, sy / n);
    let (vx, vy) = ps.points().iter().fold((0.0, 0.0), |(vx, vy), p| {
        (
            vx + (p.x - mean_x) * (p.x - mean_x),
            vy + (p.y - mean_y) * (p.y - mean_y),
        )
    });
    let (scale_x, scale_y) = ((vx / n).sqrt(), (vy / n).sqrt());
    if !(scale_x > 0.0 && scale_y > 0.0) {
        return Err(Error::DegenerateData(format!(
            "zero variance on an axis (sigma_x = {scale_x}, sigma_y = {scale_y})"
        )));
    }
    StandardizeTransform::new(mean_x, mean_y, scale_x, scale_y)
}

pub fn apply_standardize(t: &StandardizeTransform, ps: &PointSet) -> Result<PointSet> {
    if ps.frame() != Frame::Original {
        return Err(Error::FrameMismatch {
            expected: Frame::Original,
            found: ps.frame(),
        });
    }
    t.validate()?;
    let points = ps.points().iter().map(|p| t.forward_point(*p)).collect();
    PointSet::with_frame(points, Frame::Standardised)
}

pub fn invert_standardize(t: &StandardizeTransform, ps: &PointSet) -> Result<PointSet> {
    if ps.frame() != Frame::Standardised {
        return Err(Error::FrameMismatch {
            expected: Frame::Standardised,
            found: ps.frame(),
        });
    }
    t.validate()?;
    let points = ps.points().iter().map(|p| t.inverse_point(*p)).collect();
    PointSet::with_frame(points, Frame::Original)
}

/// Clip each coordinate into its range. Frame is preserved.
pub fn clamp_points(ps: &PointSet, x_range: Interval, y_range: Interval) -> PointSet {
    let points = ps
        .points()
        .iter()
        .map(|p| Point2::new(x_range.clamp(p.x), y_range.clamp(p.y)))
        .collect();
    PointSet {
        points,
        frame: ps.frame(),
    }
}
