//! Writes the NACA fixture pairs under `data/`.
//!
//! Each pair is a Selig-format contour from the analytic NACA 4-digit
//! equations and a Gmsh v2 mesh of jittered O-type rings whose radial
//! spacing grows slowly away from the wall, cropped to a box about one chord
//! above and below the airfoil. The rings stand in for an externally
//! generated reference mesh.
//!
//! ```text
//! cargo run -p loopmesh --example make_fixtures -- data
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// NACA 4-digit contour in Selig order (upper TE -> LE -> lower TE), closed.
fn naca4(code: &str, per_side: usize) -> Vec<(f64, f64)> {
    let d: Vec<f64> = code
        .chars()
        .map(|c| c.to_digit(10).unwrap() as f64)
        .collect();
    let m = d[0] / 100.0;
    let p = d[1] / 10.0;
    let t = (d[2] * 10.0 + d[3]) / 100.0;
    let surface = |x: f64| {
        let yt = 5.0
            * t
            * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3)
                - 0.1036 * x.powi(4));
        let (yc, dyc) = if m == 0.0 {
            (0.0, 0.0)
        } else if x < p {
            (
                m / (p * p) * (2.0 * p * x - x * x),
                2.0 * m / (p * p) * (p - x),
            )
        } else {
            (
                m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x),
                2.0 * m / ((1.0 - p) * (1.0 - p)) * (p - x),
            )
        };
        let th = dyc.atan();
        (
            (x - yt * th.sin(), yc + yt * th.cos()),
            (x + yt * th.sin(), yc - yt * th.cos()),
        )
    };
    let xs: Vec<f64> = (0..=per_side)
        .map(|i| 0.5 * (1.0 - (PI * i as f64 / per_side as f64).cos()))
        .collect();
    let mut out = Vec::with_capacity(2 * per_side + 1);
    for &x in xs.iter().rev() {
        out.push(surface(x).0);
    }
    for &x in xs.iter().skip(1) {
        out.push(surface(x).1);
    }
    out
}

/// Distance from `o` to the contour along direction `theta`.
fn ray_radius(contour: &[(f64, f64)], o: (f64, f64), theta: f64) -> f64 {
    let (dx, dy) = (theta.cos(), theta.sin());
    let mut best = f64::INFINITY;
    let n = contour.len();
    for i in 0..n {
        let (ax, ay) = contour[i];
        let (bx, by) = contour[(i + 1) % n];
        let (ex, ey) = (bx - ax, by - ay);
        let den = dx * ey - dy * ex;
        if den.abs() < 1e-15 {
            continue;
        }
        let (wx, wy) = (ax - o.0, ay - o.1);
        let r = (wx * ey - wy * ex) / den;
        let s = (wx * dy - wy * dx) / den;
        if r > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
            best = best.min(r);
        }
    }
    best
}

/// Wall-normal spacing of the first ring and its growth rate.
const FIRST_LAYER: f64 = 0.03;
const GROWTH: f64 = 1.01;
/// Crop box: `|y - mean y| <= HALF_HEIGHT`, x within `X_RANGE`.
const HALF_HEIGHT: f64 = 1.1;
const X_RANGE: (f64, f64) = (-1.0, 2.0);

struct RingMesh {
    nodes: Vec<(f64, f64)>,
    quads: Vec<[usize; 4]>,
}

fn ring_mesh(contour: &[(f64, f64)], per_ring: usize, rings: usize, seed: u64) -> RingMesh {
    let o = (
        0.5,
        contour.iter().map(|p| p.1).sum::<f64>() / contour.len() as f64,
    );
    // angles taken from a cosine-spaced contour so nodes cluster at LE and TE
    let dense = naca_angles(contour, o, per_ring);
    let first = FIRST_LAYER;
    let growth = GROWTH;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(per_ring * rings);
    for k in 0..rings {
        let offset = if k == 0 {
            0.0
        } else {
            first * (growth.powi(k as i32) - 1.0) / (growth - 1.0)
        };
        for (i, &theta) in dense.iter().enumerate() {
            let wall = ray_radius(contour, o, theta);
            let mut r = wall + offset;
            let mut th = theta;
            if k > 0 {
                let dth = 0.5
                    * (dense[(i + 1) % per_ring] - dense[(i + per_ring - 1) % per_ring])
                        .rem_euclid(2.0 * PI);
                th += rng.gen_range(-0.25..0.25) * dth;
                r += rng.gen_range(-0.2..0.2) * first * growth.powi(k as i32);
                r = r.max(ray_radius(contour, o, th) + 0.25 * first);
            }
            nodes.push((o.0 + r * th.cos(), o.1 + r * th.sin()));
        }
    }
    let n = per_ring;
    let quads = (0..rings - 1)
        .flat_map(|k| {
            (0..n).map(move |i| {
                let a = k * n + i;
                let b = k * n + (i + 1) % n;
                [a, b, b + n, a + n]
            })
        })
        .collect();
    RingMesh { nodes, quads }
}

/// Keep nodes with `|y - yc| <= half_height` and x in `x_range`, plus the
/// quads whose corners all survive.
fn crop(mesh: RingMesh, yc: f64, half_height: f64, x_range: (f64, f64)) -> RingMesh {
    let mut new_id = vec![usize::MAX; mesh.nodes.len()];
    let mut nodes = Vec::new();
    for (i, &(x, y)) in mesh.nodes.iter().enumerate() {
        if (y - yc).abs() <= half_height && x >= x_range.0 && x <= x_range.1 {
            new_id[i] = nodes.len();
            nodes.push((x, y));
        }
    }
    let quads = mesh
        .quads
        .iter()
        .filter(|q| q.iter().all(|&v| new_id[v] != usize::MAX))
        .map(|q| q.map(|v| new_id[v]))
        .collect();
    RingMesh { nodes, quads }
}

fn naca_angles(contour: &[(f64, f64)], o: (f64, f64), count: usize) -> Vec<f64> {
    // resample the contour uniformly in arc length, then take polar angles
    let n = contour.len();
    let mut cum = vec![0.0];
    for i in 0..n {
        let (a, b) = (contour[i], contour[(i + 1) % n]);
        cum.push(cum[i] + ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt());
    }
    let total = cum[n];
    let mut out = Vec::with_capacity(count);
    let mut e = 0;
    for k in 0..count {
        let s = total * k as f64 / count as f64;
        while cum[e + 1] < s {
            e += 1;
        }
        let t = (s - cum[e]) / (cum[e + 1] - cum[e]);
        let (a, b) = (contour[e], contour[(e + 1) % n]);
        let p = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        out.push((p.1 - o.1).atan2(p.0 - o.0));
    }
    out
}

fn write_dat(path: &Path, name: &str, pts: &[(f64, f64)]) {
    let mut s = format!("{name}\n");
    for (x, y) in pts {
        let _ = writeln!(s, " {x:.7}  {y:.7}");
    }
    fs::write(path, s).unwrap();
}

fn write_msh(path: &Path, mesh: &RingMesh) {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.nodes.len());
    for (i, (x, y)) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} {x:.9} {y:.9} 0", i + 1);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.quads.len());
    for (id, q) in mesh.quads.iter().enumerate() {
        let [a, b, c, d] = q.map(|v| v + 1);
        let _ = writeln!(s, "{} 3 2 1 1 {a} {b} {c} {d}", id + 1);
    }
    s.push_str("$EndElements\n");
    fs::write(path, s).unwrap();
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let out = Path::new(&out);
    fs::create_dir_all(out).unwrap();
    for (code, per_ring, rings, seed) in [("2220", 64, 44, 2220), ("0012", 56, 40, 12)] {
        let contour = naca4(code, 60);
        write_dat(
            &out.join(format!("naca{code}.dat")),
            &format!("NACA {code}"),
            &contour,
        );
        let mut closed = contour.clone();
        closed.pop();
        let yc = closed.iter().map(|p| p.1).sum::<f64>() / closed.len() as f64;
        let mesh = crop(
            ring_mesh(&closed, per_ring, rings, seed),
            yc,
            HALF_HEIGHT,
            X_RANGE,
        );
        let n = mesh.nodes.len() as f64;
        let my = mesh.nodes.iter().map(|p| p.1).sum::<f64>() / n;
        let sy = (mesh.nodes.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n).sqrt();
        let mx = mesh.nodes.iter().map(|p| p.0).sum::<f64>() / n;
        let sx = (mesh.nodes.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n).sqrt();
        let ymax = mesh
            .nodes
            .iter()
            .map(|p| ((p.1 - my) / sy).abs())
            .fold(0.0, f64::max);
        println!(
            "naca{code}: {} nodes, mean ({mx:.3}, {my:.3}), sigma ({sx:.3}, {sy:.3}), max |y_s| {ymax:.2}",
            mesh.nodes.len()
        );
        write_msh(&out.join(format!("naca{code}.msh")), &mesh);
    }
}
