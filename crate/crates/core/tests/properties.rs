//! Property tests for geometry transforms, resampling and the file parsers.

use loopmesh::geometry::{
    apply_standardize, clamp_points, fit_standardize, invert_standardize, resample_loop, Interval,
    Point2, PointSet,
};
use loopmesh::ingest::{parse_airfoil_dat, parse_msh_nodes, upsample_target};
use proptest::collection::vec;
use proptest::prelude::*;

fn coords(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    vec((-50.0f64..50.0, -50.0f64..50.0), 2..max)
}

fn ellipse(n: usize, a: f64, b: f64) -> PointSet {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            (a * t.cos(), b * t.sin())
        })
        .collect();
    PointSet::from_xy(&pts).unwrap()
}

proptest! {
    #[test]
    fn standardize_round_trips(xy in coords(60)) {
        let ps = PointSet::from_xy(&xy).unwrap();
        let Ok(t) = fit_standardize(&ps) else { return Ok(()) };
        let back = invert_standardize(&t, &apply_standardize(&t, &ps).unwrap()).unwrap();
        for (a, b) in ps.points().iter().zip(back.points()) {
            prop_assert!((a.x - b.x).abs() <= 1e-9 * (1.0 + a.x.abs()));
            prop_assert!((a.y - b.y).abs() <= 1e-9 * (1.0 + a.y.abs()));
        }
    }

    #[test]
    fn standardized_moments_are_zero_and_one(xy in coords(60)) {
        let ps = PointSet::from_xy(&xy).unwrap();
        let Ok(t) = fit_standardize(&ps) else { return Ok(()) };
        let s = apply_standardize(&t, &ps).unwrap();
        let n = s.len() as f64;
        let mx = s.points().iter().map(|p| p.x).sum::<f64>() / n;
        let vy = s.points().iter().map(|p| p.y * p.y).sum::<f64>() / n;
        prop_assert!(mx.abs() < 1e-9);
        prop_assert!((vy - 1.0).abs() < 1e-9 || t.scale_y < 1e-6);
    }

    #[test]
    fn clamping_is_idempotent_and_bounded(xy in coords(40), lo in -5.0f64..0.0, w in 0.0f64..5.0) {
        let ps = PointSet::from_xy(&xy).unwrap();
        let yr = Interval::new(lo, lo + w).unwrap();
        let once = clamp_points(&ps, Interval::unbounded(), yr);
        let twice = clamp_points(&once, Interval::unbounded(), yr);
        prop_assert_eq!(once.points(), twice.points());
        for (p, q) in ps.points().iter().zip(once.points()) {
            prop_assert!(yr.contains(q.y));
            prop_assert_eq!(p.x, q.x);
            if yr.contains(p.y) {
                prop_assert_eq!(p.y, q.y);
            }
        }
    }

    #[test]
    fn resampled_loop_has_uniform_spacing(n in 20usize..200, target in 3usize..80, b in 0.05f64..1.0) {
        let raw = ellipse(n, 1.0, b);
        let lp = resample_loop(&raw, target).unwrap();
        prop_assert_eq!(lp.len(), target);
        // every resampled point lies on the raw polygon, and consecutive
        // chords never exceed the arc-length step
        let raw_len: f64 = (0..n).map(|i| raw.points()[i].dist(&raw.points()[(i + 1) % n])).sum();
        let step = raw_len / target as f64;
        for (a, c) in lp.edges() {
            prop_assert!(a.dist(&c) <= step * (1.0 + 1e-9));
        }
    }

    #[test]
    fn dat_whitespace_does_not_change_values(
        xy in vec((-2.0f64..2.0, -1.0f64..1.0), 3..30),
        pads in vec((0usize..4, 1usize..4, 0usize..4, any::<bool>()), 30),
        crlf in any::<bool>(),
    ) {
        let mut plain = String::from("FOIL\n");
        let mut fuzzed = String::from("  FOIL  \n\n");
        let nl = if crlf { "\r\n" } else { "\n" };
        for (i, (x, y)) in xy.iter().enumerate() {
            plain.push_str(&format!("{x} {y}\n"));
            let (lead, mid, trail, tab) = pads[i];
            let ws = if tab { "\t" } else { " " };
            fuzzed.push_str(&format!(
                "{}{x}{}{y}{}{nl}",
                ws.repeat(lead),
                ws.repeat(mid),
                " ".repeat(trail)
            ));
        }
        let a = parse_airfoil_dat(&plain).unwrap();
        let b = parse_airfoil_dat(&fuzzed).unwrap();
        prop_assert_eq!(a.points(), b.points());
    }

    #[test]
    fn msh_whitespace_does_not_change_values(
        xy in vec((-20.0f64..20.0, -20.0f64..20.0), 1..30),
        pad in 0usize..4,
    ) {
        let ws = " ".repeat(pad);
        let mut plain = format!("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n{}\n", xy.len());
        let mut fuzzed = format!("$MeshFormat\n{ws}2.2 0 8{ws}\n$EndMeshFormat\n$Nodes\n{ws}{}\n", xy.len());
        for (i, (x, y)) in xy.iter().enumerate() {
            plain.push_str(&format!("{} {x} {y} 0\n", i + 1));
            fuzzed.push_str(&format!("{ws}{}\t{x}  {ws}{y} 0{ws}\n", i + 1));
        }
        plain.push_str("$EndNodes\n");
        fuzzed.push_str("$EndNodes\n");
        let a = parse_msh_nodes(&plain).unwrap();
        let b = parse_msh_nodes(&fuzzed).unwrap();
        prop_assert_eq!(a.points(), b.points());
        prop_assert_eq!(a.len(), xy.len());
    }

    #[test]
    fn upsample_hits_count_and_draws_from_source(
        xy in vec((-5.0f64..5.0, -5.0f64..5.0), 1..80),
        m in 1usize..150,
        seed in any::<u64>(),
    ) {
        let ps = PointSet::from_xy(&xy).unwrap();
        let out = upsample_target(&ps, m, seed).unwrap();
        prop_assert_eq!(out.len(), m);
        for p in out.points() {
            prop_assert!(ps.points().contains(p));
        }
        if m >= ps.len() {
            prop_assert_eq!(&out.points()[..ps.len()], ps.points());
        }
        let again = upsample_target(&ps, m, seed).unwrap();
        prop_assert_eq!(out.points(), again.points());
    }
}

#[test]
fn subsample_has_no_repeated_indices() {
    let pts: Vec<Point2> = (0..100).map(|i| Point2::new(i as f64, 0.0)).collect();
    let ps = PointSet::new(pts).unwrap();
    let out = upsample_target(&ps, 60, 4).unwrap();
    let xs: Vec<f64> = out.points().iter().map(|p| p.x).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]), "sorted and distinct");
}
