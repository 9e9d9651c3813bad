//! The four subcommands as library functions.

use std::path::{Path, PathBuf};

use log::{info, warn};
use loopmesh::eval::{evaluate, EvalWindow, KlReport, KlRow, WindowName, DEFAULT_GRID};
use loopmesh::geometry::{resample_loop, AirfoilLoop, Point2, PointSet};
use loopmesh::ingest::{
    build_dataset, load_manifest, read_dat, read_msh, ChordTransform, DatasetConfig, SamplePaths,
};
use loopmesh::train::{train, Checkpoint, TrainConfig, TrainMode, TrainedModel};

use crate::error::{CliError, CliResult};
use crate::manifest::{write_atomic, InputHash, RunManifest};
use crate::svg::{render, Viewport};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOG_FILE: &str = "train_log.csv";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const PRED_CSV_FILE: &str = "prediction.csv";
pub const PRED_SVG_FILE: &str = "prediction.svg";
pub const KL_FILE: &str = "kl.csv";
pub const KL_TABLE_FILE: &str = "kl_table.csv";

pub struct TrainOutput {
    pub model: TrainedModel,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub manifest: PathBuf,
}

/// Dataset pairs minus held-out names, plus hashes of every file read.
fn load_inputs(
    manifest: &Path,
    holdout: &[String],
) -> CliResult<(Vec<SamplePaths>, Vec<InputHash>)> {
    let pairs = load_manifest(manifest)?;
    for name in holdout {
        if !pairs.iter().any(|p| &p.name == name) {
            warn!("holdout sample {name:?} is not in {}", manifest.display());
        }
    }
    let pairs: Vec<SamplePaths> = pairs
        .into_iter()
        .filter(|p| !holdout.contains(&p.name))
        .collect();
    if pairs.is_empty() {
        return Err(CliError::Config(
            "no training samples left after holdout".into(),
        ));
    }
    let mut inputs = vec![InputHash::of(manifest)?];
    for p in &pairs {
        inputs.push(InputHash::of(&p.dat)?);
        inputs.push(InputHash::of(&p.msh)?);
    }
    Ok((pairs, inputs))
}

fn train_into(pairs: &[SamplePaths], run: &RunManifest, out_dir: &Path) -> CliResult<TrainOutput> {
    let manifest_path = out_dir.join(RUN_MANIFEST_FILE);
    write_atomic(&manifest_path, run.to_json().as_bytes())?;

    let config = &run.config;
    let data_config = DatasetConfig {
        loop_size: config.loop_size,
        upsample: config.upsample,
        seed: config.seed,
    };
    let dataset = build_dataset(pairs, &data_config)?;
    info!(
        "training {} sample(s), mode {}, N={}, ratio {}, {} epochs",
        dataset.len(),
        config.mode.as_str(),
        config.nodes,
        config.weights.repulsion,
        config.epochs
    );
    let model = train(&dataset, config)?;

    let checkpoint = out_dir.join(CHECKPOINT_FILE);
    write_atomic(&checkpoint, model.to_checkpoint().to_json()?.as_bytes())?;
    let log = out_dir.join(LOG_FILE);
    write_atomic(&log, model.log.to_csv().as_bytes())?;
    Ok(TrainOutput {
        model,
        checkpoint,
        log,
        manifest: manifest_path,
    })
}

/// Train on a dataset manifest; writes checkpoint, log and run manifest.
pub fn cmd_train(
    manifest: &Path,
    config: &TrainConfig,
    holdout: &[String],
    out_dir: &Path,
) -> CliResult<TrainOutput> {
    let (pairs, inputs) = load_inputs(manifest, holdout)?;
    let run = RunManifest::new(config, holdout, inputs, &[CHECKPOINT_FILE, LOG_FILE]);
    train_into(&pairs, &run, out_dir)
}

/// Chord-normalised contour resampled to `loop_size`, with its transform.
pub fn load_loop(dat: &Path, loop_size: usize) -> CliResult<(AirfoilLoop, ChordTransform)> {
    let contour = read_dat(dat)?;
    let chord = ChordTransform::fit(&contour).map_err(|e| e.in_file(dat))?;
    let boundary = resample_loop(&chord.apply(&contour)?, loop_size).map_err(|e| e.in_file(dat))?;
    Ok((boundary, chord))
}

/// Mesh nodes, chord-normalised with the contour in `dat` when given.
pub fn load_truth(msh: &Path, dat: Option<&Path>) -> CliResult<PointSet> {
    let mesh = read_msh(msh)?;
    match dat {
        Some(d) => {
            let chord = ChordTransform::fit(&read_dat(d)?).map_err(|e| e.in_file(d))?;
            Ok(chord.apply(&mesh)?)
        }
        None => Ok(mesh),
    }
}

pub fn points_csv(ps: &PointSet) -> String {
    let mut out = String::from("x,y\n");
    for p in ps.points() {
        out.push_str(&format!("{},{}\n", p.x, p.y));
    }
    out
}

/// Parse an `x,y` CSV with a header line; row numbers in errors are file lines.
pub fn parse_points_csv(text: &str, path: &Path) -> CliResult<PointSet> {
    let row_err = |row: usize, message: String| CliError::CsvRow {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim().eq_ignore_ascii_case("x,y") => {}
        Some((_, h)) => return Err(row_err(1, format!("expected header \"x,y\", found {h:?}"))),
        None => return Err(row_err(1, "empty file".into())),
    }
    let mut pts = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [x, y] = fields[..] else {
            return Err(row_err(
                row,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| row_err(row, format!("invalid number {s:?}")))
        };
        pts.push(Point2::new(parse(x)?, parse(y)?));
    }
    if pts.is_empty() {
        return Err(row_err(1, "no data rows".into()));
    }
    Ok(PointSet::new(pts)?)
}

#[derive(Clone, Debug, Default)]
pub struct PredictOptions {
    pub sample: Option<String>,
    pub truth: Option<PathBuf>,
    pub view: Viewport,
    /// Expected node count and mode; a mismatch with the checkpoint is a config error.
    pub nodes: Option<usize>,
    pub mode: Option<TrainMode>,
}

pub struct PredictOutput {
    pub points: PointSet,
    pub interior: usize,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

fn check_compatible(
    config: &TrainConfig,
    nodes: Option<usize>,
    mode: Option<TrainMode>,
) -> CliResult<()> {
    if let Some(n) = nodes.filter(|&n| n != config.nodes) {
        return Err(CliError::Config(format!(
            "checkpoint predicts {} nodes, --nodes asked for {n}",
            config.nodes
        )));
    }
    if let Some(m) = mode.filter(|&m| m != config.mode) {
        return Err(CliError::Config(format!(
            "checkpoint was trained in mode {}, --mode asked for {}",
            config.mode.as_str(),
            m.as_str()
        )));
    }
    Ok(())
}

pub fn cmd_predict(
    checkpoint: &Path,
    dat: &Path,
    opts: &PredictOptions,
    out_dir: &Path,
) -> CliResult<PredictOutput> {
    let model = Checkpoint::load(checkpoint)?.into_model();
    check_compatible(&model.config, opts.nodes, opts.mode)?;
    let (boundary, _) = load_loop(dat, model.config.loop_size)?;
    let points = model.predict(&boundary, opts.sample.as_deref())?;
    let interior = boundary.count_inside(&points);

    let truth = match &opts.truth {
        Some(msh) => Some(load_truth(msh, Some(dat))?),
        None => None,
    };
    let csv = out_dir.join(PRED_CSV_FILE);
    write_atomic(&csv, points_csv(&points).as_bytes())?;
    let svg = out_dir.join(PRED_SVG_FILE);
    let figure = render(
        &boundary,
        points.points(),
        truth.as_ref().map(|t| t.points()),
        opts.view,
    );
    write_atomic(&svg, figure.as_bytes())?;
    Ok(PredictOutput {
        points,
        interior,
        csv,
        svg,
    })
}

#[derive(Clone, Debug)]
pub struct EvaluateOptions {
    /// Contour used to build the loop for a checkpoint and to chord-normalise the truth.
    pub dat: Option<PathBuf>,
    pub sample: Option<String>,
    pub grid: usize,
    /// Ratio label for the report rows; defaults to the checkpoint's, else 0.
    pub ratio: Option<f64>,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            dat: None,
            sample: None,
            grid: DEFAULT_GRID,
            ratio: None,
        }
    }
}

/// KL over the center and whole windows, one row per window.
pub fn kl_rows(
    pred: &PointSet,
    truth: &PointSet,
    ratio: f64,
    grid: usize,
) -> CliResult<Vec<KlRow>> {
    let windows = EvalWindow::standard_pair(truth).map(|w| w.with_grid(grid, grid));
    Ok(evaluate(pred, truth, &windows)?
        .into_iter()
        .map(|w| KlRow {
            ratio,
            region: w.window,
            nodes: pred.len(),
            kl: Some(w.kl),
        })
        .collect())
}

/// Evaluate a prediction CSV, or a checkpoint (`.json`, needs `dat`), against a mesh.
pub fn cmd_evaluate(
    pred: &Path,
    truth: &Path,
    opts: &EvaluateOptions,
    out_dir: &Path,
) -> CliResult<KlReport> {
    let is_checkpoint = pred
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (points, ratio) = if is_checkpoint {
        let dat = opts
            .dat
            .as_deref()
            .ok_or_else(|| CliError::Config("evaluating a checkpoint needs --dat".into()))?;
        let model = Checkpoint::load(pred)?.into_model();
        let (boundary, _) = load_loop(dat, model.config.loop_size)?;
        let ratio = model.config.weights.repulsion;
        (model.predict(&boundary, opts.sample.as_deref())?, ratio)
    } else {
        let text = std::fs::read_to_string(pred).map_err(|e| CliError::io(pred, e))?;
        (parse_points_csv(&text, pred)?, 0.0)
    };
    let truth = load_truth(truth, opts.dat.as_deref())?;
    let mut report = KlReport {
        rows: kl_rows(&points, &truth, opts.ratio.unwrap_or(ratio), opts.grid)?,
    };
    report.sort_canonical();
    write_atomic(&out_dir.join(KL_FILE), report.to_csv().as_bytes())?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub ratios: Vec<f64>,
    pub nodes: Vec<usize>,
    pub holdout: Vec<String>,
    pub view: Viewport,
    pub grid: usize,
}

#[derive(Debug, Default)]
pub struct SweepOutput {
    pub report: KlReport,
    pub trained: usize,
    pub reused: usize,
    /// `(ratio, nodes, message)` for cells that failed.
    pub failed: Vec<(f64, usize, String)>,
}

/// Train or reuse one checkpoint per (ratio, nodes) cell and tabulate KL
/// on the first training sample. Rows follow the input grid order.
pub fn cmd_sweep(
    manifest: &Path,
    base: &TrainConfig,
    opts: &SweepOptions,
    out_dir: &Path,
) -> CliResult<SweepOutput> {
    if opts.ratios.is_empty() || opts.nodes.is_empty() {
        return Err(CliError::Config(
            "sweep needs at least one ratio and one node count".into(),
        ));
    }
    let (pairs, inputs) = load_inputs(manifest, &opts.holdout)?;
    let eval_pair = &pairs[0];
    let truth = load_truth(&eval_pair.msh, Some(&eval_pair.dat))?;
    let mut out = SweepOutput::default();

    for &ratio in &opts.ratios {
        for &nodes in &opts.nodes {
            let mut config = base.clone();
            config.weights.repulsion = ratio;
            config.nodes = nodes;
            let cell = sweep_cell(&pairs, &inputs, &config, opts, &truth, out_dir, &mut out);
            let rows = cell.unwrap_or_else(|e| {
                warn!("sweep cell ratio {ratio}, nodes {nodes} failed: {e}");
                out.failed.push((ratio, nodes, e.to_string()));
                [WindowName::Center, WindowName::Whole]
                    .map(|region| KlRow {
                        ratio,
                        region,
                        nodes,
                        kl: None,
                    })
                    .to_vec()
            });
            out.report.rows.extend(rows);
        }
    }
    // input order: ratio major, then region, then nodes
    let order = |r: &KlRow| {
        let ri = opts
            .ratios
            .iter()
            .position(|&x| x == r.ratio)
            .unwrap_or(usize::MAX);
        let ni = opts
            .nodes
            .iter()
            .position(|&x| x == r.nodes)
            .unwrap_or(usize::MAX);
        (ri, r.region, ni)
    };
    out.report.rows.sort_by_key(order);
    write_atomic(&out_dir.join(KL_FILE), out.report.to_csv().as_bytes())?;
    write_atomic(
        &out_dir.join(KL_TABLE_FILE),
        out.report.to_table().as_bytes(),
    )?;
    Ok(out)
}

fn sweep_cell(
    pairs: &[SamplePaths],
    inputs: &[InputHash],
    config: &TrainConfig,
    opts: &SweepOptions,
    truth: &PointSet,
    out_dir: &Path,
    out: &mut SweepOutput,
) -> CliResult<Vec<KlRow>> {
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let run = RunManifest::new(
        config,
        &opts.holdout,
        inputs.to_vec(),
        &[CHECKPOINT_FILE, LOG_FILE],
    );
    let cell_dir = out_dir.join("cells").join(run.cache_key());
    let cached = cell_dir.join(CHECKPOINT_FILE);
    let model = match Checkpoint::load(&cached) {
        Ok(ck) if ck.config == *config => {
            info!("reusing {}", cached.display());
            out.reused += 1;
            ck.into_model()
        }
        _ => {
            let trained = train_into(pairs, &run, &cell_dir)?.model;
            out.trained += 1;
            trained
        }
    };
    let (boundary, _) = load_loop(&pairs[0].dat, config.loop_size)?;
    let pred = model.predict(&boundary, Some(&pairs[0].name))?;
    let panel = out_dir.join("panels").join(format!(
        "r{}_n{}.svg",
        config.weights.repulsion, config.nodes
    ));
    write_atomic(
        &panel,
        render(&boundary, pred.points(), Some(truth.points()), opts.view).as_bytes(),
    )?;
    kl_rows(&pred, truth, config.weights.repulsion, opts.grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_exactly() {
        let ps = PointSet::from_xy(&[(0.1, -0.2), (1.0 / 3.0, 2e-17)]).unwrap();
        let back = parse_points_csv(&points_csv(&ps), Path::new("p.csv")).unwrap();
        assert_eq!(back.points(), ps.points());
    }

    #[test]
    fn malformed_row_reports_its_line() {
        let err = parse_points_csv("x,y\n0,0\n1,abc\n", Path::new("p.csv")).unwrap_err();
        assert!(matches!(err, CliError::CsvRow { row: 3, .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
        let err = parse_points_csv("x,y\n0,0,0\n", Path::new("p.csv")).unwrap_err();
        assert!(matches!(err, CliError::CsvRow { row: 2, .. }));
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(parse_points_csv("0,0\n", Path::new("p.csv")).is_err());
    }

    #[test]
    fn compatibility_checks_nodes_and_mode() {
        let cfg = TrainConfig::for_mode(TrainMode::Raw);
        check_compatible(&cfg, Some(400), Some(TrainMode::Raw)).unwrap();
        assert_eq!(
            check_compatible(&cfg, Some(300), None)
                .unwrap_err()
                .exit_code(),
            2
        );
        assert_eq!(
            check_compatible(&cfg, None, Some(TrainMode::Standardised))
                .unwrap_err()
                .exit_code(),
            2
        );
    }
}
