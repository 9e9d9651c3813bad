//! Checks against the NACA fixtures shipped in `data/`.

use std::path::{Path, PathBuf};

use loopmesh::geometry::{resample_loop, Point2};
use loopmesh::ingest::{
    build_dataset, load_manifest, normalise_chord, read_dat, read_msh, DatasetConfig,
};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

#[test]
fn naca2220_contains_mid_chord_point() {
    let contour = normalise_chord(&read_dat(&data("naca2220.dat")).unwrap()).unwrap();
    let lp = resample_loop(&contour, 35).unwrap();
    assert!(lp.contains(Point2::new(0.5, 0.0)));
    assert!(!lp.contains(Point2::new(0.5, 0.3)));
    assert!(!lp.contains(Point2::new(-0.1, 0.0)));
}

#[test]
fn resampled_perimeter_is_within_two_percent() {
    for name in ["naca2220.dat", "naca0012.dat"] {
        let contour = normalise_chord(&read_dat(&data(name)).unwrap()).unwrap();
        let pts = contour.points();
        let n = pts.len();
        let dense: f64 = (0..n).map(|i| pts[i].dist(&pts[(i + 1) % n])).sum();
        let coarse = resample_loop(&contour, 35).unwrap().perimeter();
        let rel = (dense - coarse).abs() / dense;
        assert!(rel < 0.02, "{name}: {coarse} vs {dense}");
    }
}

#[test]
fn mesh_fixtures_parse_with_expected_counts() {
    assert_eq!(read_msh(&data("naca2220.msh")).unwrap().len(), 2260);
    assert_eq!(read_msh(&data("naca0012.msh")).unwrap().len(), 1970);
    assert_eq!(read_dat(&data("naca2220.dat")).unwrap().len(), 121);
}

#[test]
fn dataset_invariants_hold() {
    let pairs = load_manifest(&data("manifest_pair.json")).unwrap();
    let ds = build_dataset(&pairs, &DatasetConfig::default()).unwrap();
    assert_eq!(ds.len(), 2);
    for s in &ds.samples {
        assert_eq!(s.boundary.len(), 35);
        assert_eq!(s.target.len(), 1500);
        assert_eq!(s.boundary.count_inside(&s.target), 0, "{}", s.name);
        let (lo, hi) = s.boundary.to_point_set().bounds();
        assert!(
            lo.x.abs() < 0.02 && (hi.x - 1.0).abs() < 0.02,
            "{}: chord {lo:?} {hi:?}",
            s.name
        );
    }
    let again = build_dataset(&pairs, &DatasetConfig::default()).unwrap();
    assert_eq!(
        ds.samples[0].target.points(),
        again.samples[0].target.points()
    );
}

#[test]
fn missing_mesh_names_its_path() {
    let dir = tempdir();
    let manifest = dir.join("m.json");
    let dat = data("naca2220.dat");
    std::fs::write(
        &manifest,
        format!(
            r#"[{{"name":"a","dat":"{}","msh":"nope.msh"}}]"#,
            dat.display()
        ),
    )
    .unwrap();
    let err = build_dataset(
        &load_manifest(&manifest).unwrap(),
        &DatasetConfig::default(),
    )
    .unwrap_err();
    assert!(err.is_parse());
    assert!(err.to_string().contains("nope.msh"), "{err}");
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("loopmesh-fixtures-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
