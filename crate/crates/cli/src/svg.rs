//! Minimal SVG scatter plots: loop in red, prediction in blue, truth in green.

use std::fmt::Write as _;

use loopmesh::geometry::{AirfoilLoop, Point2};

use crate::error::{CliError, CliResult};

/// Plot extent in data coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            x0: -0.5,
            x1: 1.5,
            y0: -0.6,
            y1: 0.6,
        }
    }
}

impl std::str::FromStr for Viewport {
    type Err = CliError;

    /// Parses `x0,x1,y0,y1`.
    fn from_str(s: &str) -> CliResult<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("view {s:?}: {e}")))?;
        match v[..] {
            [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok(Viewport { x0, x1, y0, y1 }),
            _ => Err(CliError::Config(format!(
                "view {s:?}: expected x0,x1,y0,y1 with x0<x1 and y0<y1"
            ))),
        }
    }
}

const WIDTH: f64 = 800.0;

pub struct Plot {
    view: Viewport,
    height: f64,
    body: String,
}

impl Plot {
    pub fn new(view: Viewport) -> Self {
        let height = (WIDTH * (view.y1 - view.y0) / (view.x1 - view.x0)).round();
        Plot {
            view,
            height,
            body: String::new(),
        }
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        let v = &self.view;
        (
            (p.x - v.x0) / (v.x1 - v.x0) * WIDTH,
            (v.y1 - p.y) / (v.y1 - v.y0) * self.height,
        )
    }

    pub fn points(&mut self, pts: &[Point2], color: &str, radius: f64) {
        let _ = writeln!(self.body, "<g fill=\"{color}\">");
        for &p in pts {
            let (x, y) = self.map(p);
            let _ = writeln!(
                self.body,
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{radius}\"/>"
            );
        }
        self.body.push_str("</g>\n");
    }

    pub fn outline(&mut self, boundary: &AirfoilLoop, color: &str) {
        let pts: Vec<String> = boundary
            .vertices()
            .iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            "<polygon points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
        self.points(boundary.vertices(), color, 2.5);
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = WIDTH,
            h = self.height,
            body = self.body
        )
    }
}

/// Standard figure: optional truth under the prediction, loop on top.
pub fn render(
    boundary: &AirfoilLoop,
    pred: &[Point2],
    truth: Option<&[Point2]>,
    view: Viewport,
) -> String {
    let mut plot = Plot::new(view);
    if let Some(t) = truth {
        plot.points(t, "green", 1.2);
    }
    plot.points(pred, "blue", 1.5);
    plot.outline(boundary, "red");
    plot.finish()
}
