//! Readers for airfoil contours (`.dat`) and reference meshes (`.msh`), and
//! assembly of fixed-size training pairs.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{resample_loop, AirfoilLoop, Point2, PointSet};

pub const DEFAULT_LOOP_SIZE: usize = 35;
pub const DEFAULT_UPSAMPLE: usize = 1500;

fn parse_pair(line: &str) -> Option<(f64, f64)> {
    let mut tokens = line.split_whitespace();
    let x = tokens.next()?.parse::<f64>().ok()?;
    let y = tokens.next()?.parse::<f64>().ok()?;
    if tokens.next().is_some() || !x.is_finite() || !y.is_finite() {
        return None;
    }
    Some((x, y))
}

/// Parse a Selig-style airfoil file: an optional name line followed by
/// one `x y` pair per line. Blank lines are ignored.
pub fn parse_airfoil_dat(text: &str) -> Result<PointSet> {
    let mut points = Vec::new();
    let mut seen_content = false;
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first = !seen_content;
        seen_content = true;
        match parse_pair(trimmed) {
            Some((x, y)) => points.push(Point2::new(x, y)),
            None if first => continue, // name line
            None => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected two numeric tokens, found {trimmed:?}"),
                })
            }
        }
    }
    if points.len() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "airfoil contour has {} points, need at least 3",
            points.len()
        )));
    }
    PointSet::new(points)
}

/// Uniform scaling that puts the leading edge at `x = 0` and the chord at unit length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordTransform {
    pub x_offset: f64,
    pub chord: f64,
}

impl ChordTransform {
    pub fn fit(ps: &PointSet) -> Result<Self> {
        let (lo, hi) = ps.bounds();
        let chord = hi.x - lo.x;
        if chord.is_nan() || chord <= 0.0 {
            return Err(Error::DegenerateData(
                "contour has zero chord length".into(),
            ));
        }
        Ok(ChordTransform {
            x_offset: lo.x,
            chord,
        })
    }

    pub fn apply(&self, ps: &PointSet) -> Result<PointSet> {
        let points = ps
            .points()
            .iter()
            .map(|p| Point2::new((p.x - self.x_offset) / self.chord, p.y / self.chord))
            .collect();
        PointSet::new(points)
    }
}

pub fn normalise_chord(ps: &PointSet) -> Result<PointSet> {
    ChordTransform::fit(ps)?.apply(ps)
}

/// Extract `(x, y)` node coordinates from a Gmsh ASCII v2 file.
///
/// Nodes are returned in id order; `z` is read and discarded.
pub fn parse_msh_nodes(text: &str) -> Result<PointSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let mut saw_nodes = false;
    while let Some((line_no, line)) = lines.next() {
        match line {
            "$MeshFormat" => {
                let (ln, header) = lines.next().ok_or(Error::Parse {
                    line: line_no,
                    message: "truncated $MeshFormat block".into(),
                })?;
                check_mesh_format(ln, header)?;
            }
            "$Nodes" => {
                saw_nodes = true;
                break;
            }
            _ => {}
        }
    }
    if !saw_nodes {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "missing $Nodes block".into(),
        });
    }

    let (count_line, count_text) = lines.next().ok_or(Error::Parse {
        line: text.lines().count(),
        message: "missing node count after $Nodes".into(),
    })?;
    let expected: usize = count_text.parse().map_err(|_| Error::Parse {
        line: count_line,
        message: format!("invalid node count {count_text:?}"),
    })?;

    let mut nodes: Vec<(u64, Point2)> = Vec::with_capacity(expected);
    loop {
        let Some((line_no, line)) = lines.next() else {
            return Err(Error::Parse {
                line: count_line,
                message: format!(
                    "unterminated $Nodes block: expected {expected} nodes, found {}",
                    nodes.len()
                ),
            });
        };
        if line == "$EndNodes" {
            if nodes.len() != expected {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "node count mismatch: header says {expected}, found {}",
                        nodes.len()
                    ),
                });
            }
            break;
        }
        if line.is_empty() {
            continue;
        }
        if nodes.len() == expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "node count mismatch: header says {expected}, found more node lines"
                ),
            });
        }
        nodes.push(parse_node_line(line_no, line)?);
    }

    nodes.sort_by_key(|(id, _)| *id);
    if let Some(w) = nodes.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse {
            line: count_line,
            message: format!("duplicate node id {}", w[0].0),
        });
    }
    PointSet::new(nodes.into_iter().map(|(_, p)| p).collect())
}

fn check_mesh_format(line_no: usize, header: &str) -> Result<()> {
    let mut tokens = header.split_whitespace();
    let version = tokens.next().and_then(|v| v.parse::<f64>().ok());
    let file_type = tokens.next();
    match (version, file_type) {
        (Some(v), Some("0")) if (2.0..3.0).contains(&v) => Ok(()),
        (Some(v), Some("0")) => Err(Error::Parse {
            line: line_no,
            message: format!("unsupported mesh format version {v}, expected 2.x"),
        }),
        (Some(_), Some(_)) => Err(Error::Parse {
            line: line_no,
            message: "binary .msh files are not supported".into(),
        }),
        _ => Err(Error::Parse {
            line: line_no,
            message: format!("malformed $MeshFormat header {header:?}"),
        }),
    }
}

fn parse_node_line(line_no: usize, line: &str) -> Result<(u64, Point2)> {
    let err = || Error::Parse {
        line: line_no,
        message: format!("expected `id x y z`, found {line:?}"),
    };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 4 {
        return Err(err());
    }
    let id = tokens[0].parse::<u64>().map_err(|_| err())?;
    let mut xyz = [0.0; 3];
    for (slot, tok) in xyz.iter_mut().zip(&tokens[1..]) {
        *slot = tok.parse::<f64>().map_err(|_| err())?;
        if !slot.is_finite() {
            return Err(err());
        }
    }
    Ok((id, Point2::new(xyz[0], xyz[1])))
}

/// Bring a node set to exactly `m` points.
///
/// Larger sets are subsampled without replacement (original order kept);
/// smaller sets keep every original and append draws with replacement.
pub fn upsample_target(ps: &PointSet, m: usize, seed: u64) -> Result<PointSet> {
    if m == 0 {
        return Err(Error::InvalidInput(
            "upsample count must be at least 1".into(),
        ));
    }
    let n = ps.len();
    let src = ps.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = if n >= m {
        let mut picked = index::sample(&mut rng, n, m).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| src[i]).collect()
    } else {
        let mut out = src.to_vec();
        out.extend((0..m - n).map(|_| src[rng.gen_range(0..n)]));
        out
    };
    PointSet::new(points)
}

/// One training pair in the chord frame.
#[derive(Clone, Debug)]
pub struct MeshSample {
    pub name: String,
    pub boundary: AirfoilLoop,
    pub target: PointSet,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub samples: Vec<MeshSample>,
    pub upsample_count: usize,
    pub loop_size: usize,
}

impl Dataset {
    pub fn new(samples: Vec<MeshSample>, upsample_count: usize, loop_size: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        for s in &samples {
            if s.target.len() != upsample_count || s.boundary.len() != loop_size {
                return Err(Error::Shape(format!(
                    "sample {:?} has {} targets / {} loop vertices, expected {upsample_count} / {loop_size}",
                    s.name,
                    s.target.len(),
                    s.boundary.len()
                )));
            }
        }
        Ok(Dataset {
            samples,
            upsample_count,
            loop_size,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, name: &str) -> Option<&MeshSample> {
        self.samples.iter().find(|s| s.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub loop_size: usize,
    pub upsample: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            loop_size: DEFAULT_LOOP_SIZE,
            upsample: DEFAULT_UPSAMPLE,
            seed: 0,
        }
    }
}

/// File pair for one airfoil.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePaths {
    pub name: String,
    pub dat: PathBuf,
    pub msh: PathBuf,
}

/// Read a dataset manifest: a JSON array of `{name, dat, msh}` records with
/// paths relative to the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<SamplePaths>> {
    let text = read_text(path)?;
    let records: Vec<SamplePaths> =
        serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(records
        .into_iter()
        .map(|r| SamplePaths {
            name: r.name,
            dat: base.join(r.dat),
            msh: base.join(r.msh),
        })
        .collect())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_dat(path: &Path) -> Result<PointSet> {
    parse_airfoil_dat(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn read_msh(path: &Path) -> Result<PointSet> {
    parse_msh_nodes(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// Chord-normalise a contour/mesh pair with the contour's transform and
/// assemble a sample with `loop_size` loop vertices and `upsample` targets.
pub fn build_sample(
    name: &str,
    contour: &PointSet,
    mesh: &PointSet,
    config: &DatasetConfig,
    seed: u64,
) -> Result<MeshSample> {
    let chord = ChordTransform::fit(contour)?;
    let contour = chord.apply(contour)?;
    let mesh = chord.apply(mesh)?;
    let boundary = resample_loop(&contour, config.loop_size)?;

    let target = upsample_target(&mesh, config.upsample, seed)?;
    let kept: Vec<Point2> = target
        .points()
        .iter()
        .copied()
        .filter(|p| !boundary.contains(*p))
        .collect();
    let dropped = target.len() - kept.len();
    let target = if dropped == 0 {
        target
    } else {
        warn!("{name}: dropped {dropped} target nodes inside the airfoil loop");
        if kept.is_empty() {
            return Err(Error::DegenerateData(format!(
                "{name}: every target node lies inside the airfoil loop"
            )));
        }
        upsample_target(&PointSet::new(kept)?, config.upsample, seed)?
    };
    Ok(MeshSample {
        name: name.to_string(),
        boundary,
        target,
    })
}

pub fn build_dataset(pairs: &[SamplePaths], config: &DatasetConfig) -> Result<Dataset> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput(
            "dataset is empty: no sample pairs".into(),
        ));
    }
    let mut samples = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let contour = read_dat(&pair.dat)?;
        let mesh = read_msh(&pair.msh)?;
        let seed = config.seed.wrapping_add(i as u64);
        let sample = build_sample(&pair.name, &contour, &mesh, config, seed)
            .map_err(|e| e.in_file(&pair.msh))?;
        samples.push(sample);
    }
    Dataset::new(samples, config.upsample, config.loop_size)
}
