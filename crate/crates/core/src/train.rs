//! Full-batch training of the generator with Adam, in one of three
//! coordinate modes, plus prediction and checkpoint I/O.

use std::fmt::Write as _;
use std::path::Path;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    apply_standardize, fit_standardize, invert_standardize, AirfoilLoop, Interval, PointSet,
    StandardizeTransform,
};
use crate::ingest::{Dataset, DEFAULT_LOOP_SIZE, DEFAULT_UPSAMPLE};
use crate::loss::{composite, mean_pairwise_distance, LossWeights};
use crate::net::{
    backward_accumulate, forward, init_params, NetDims, NetworkParams, ParamGrads, DEFAULT_HIDDEN1,
    DEFAULT_HIDDEN2,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrainMode {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "stand")]
    Standardised,
    #[serde(rename = "stand-clamp")]
    StandardisedClamped,
}

impl TrainMode {
    pub fn standardises(self) -> bool {
        !matches!(self, TrainMode::Raw)
    }

    /// Interior-penalty weight used when none is configured: clamped runs
    /// are already confined, the others rely on the penalty.
    pub fn default_interior_weight(self) -> f64 {
        match self {
            TrainMode::StandardisedClamped => 0.0,
            _ => 10.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Raw => "raw",
            TrainMode::Standardised => "stand",
            TrainMode::StandardisedClamped => "stand-clamp",
        }
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(TrainMode::Raw),
            "stand" => Ok(TrainMode::Standardised),
            "stand-clamp" => Ok(TrainMode::StandardisedClamped),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected raw, stand or stand-clamp)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub clamp_y: Interval,
    pub nodes: usize,
    pub weights: LossWeights,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden1: usize,
    pub hidden2: usize,
    pub upsample: usize,
    pub loop_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::for_mode(TrainMode::Standardised)
    }
}

impl TrainConfig {
    /// Defaults for `mode`, with Chamfer weight 1 and no repulsion.
    pub fn for_mode(mode: TrainMode) -> Self {
        TrainConfig {
            mode,
            clamp_y: Interval { lo: -1.0, hi: 1.0 },
            nodes: 400,
            weights: LossWeights::new(1.0, 0.0, mode.default_interior_weight()),
            lr: 1e-3,
            epochs: 5000,
            seed: 0,
            hidden1: DEFAULT_HIDDEN1,
            hidden2: DEFAULT_HIDDEN2,
            upsample: DEFAULT_UPSAMPLE,
            loop_size: DEFAULT_LOOP_SIZE,
            adam: AdamConfig::default(),
        }
    }

    pub fn dims(&self) -> NetDims {
        NetDims {
            loop_size: self.loop_size,
            hidden1: self.hidden1,
            hidden2: self.hidden2,
            nodes: self.nodes,
        }
    }

    pub fn clamp(&self) -> Option<Interval> {
        (self.mode == TrainMode::StandardisedClamped).then_some(self.clamp_y)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.nodes < 2 {
            return Err(Error::Config(format!(
                "nodes must be at least 2 (repulsion needs pairs), got {}",
                self.nodes
            )));
        }
        if self.loop_size < 3 || self.hidden1 == 0 || self.hidden2 == 0 || self.upsample == 0 {
            return Err(Error::Config(format!(
                "invalid sizes: loop {} hidden {}x{} upsample {}",
                self.loop_size, self.hidden1, self.hidden2, self.upsample
            )));
        }
        if self.mode == TrainMode::StandardisedClamped && !self.clamp_y.is_valid() {
            return Err(Error::Config(format!(
                "invalid clamp interval {:?}",
                self.clamp_y
            )));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1)
            || !(0.0..1.0).contains(&a.beta2)
            || a.eps.is_nan()
            || a.eps <= 0.0
        {
            return Err(Error::Config(format!("invalid Adam settings {a:?}")));
        }
        self.weights.validate()
    }
}

/// First and second moment estimates for Adam.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: ParamGrads,
    pub v: ParamGrads,
    pub t: u64,
}

impl AdamState {
    pub fn new(dims: NetDims) -> Self {
        AdamState {
            m: ParamGrads::zeros(dims),
            v: ParamGrads::zeros(dims),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update on a flat slice at step `t >= 1`.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    cfg: &AdamConfig,
    t: u64,
) {
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for (((w, &g), m), v) in param
        .iter_mut()
        .zip(grad)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

pub fn adam_step(
    params: &mut NetworkParams,
    grads: &ParamGrads,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if grads.dims != params.dims || state.m.dims != params.dims || state.v.dims != params.dims {
        return Err(Error::Shape("Adam state does not match parameters".into()));
    }
    state.t += 1;
    let t = state.t;
    for (((p, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut())
    {
        adam_update(p, g, m, v, lr, cfg, t);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub chamfer: f64,
    pub repulsion: f64,
    pub interior: f64,
    pub total: f64,
    pub mean_pairwise: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "epoch,chamfer,repulsion,interior,total,mean_pairwise";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch, r.chamfer, r.repulsion, r.interior, r.total, r.mean_pairwise
            );
        }
        out
    }

    pub fn first(&self) -> Option<&EpochRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Transform that maps one sample into the training frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleTransform {
    pub name: String,
    pub transform: Option<StandardizeTransform>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub config: TrainConfig,
    pub params: NetworkParams,
    pub transforms: Vec<SampleTransform>,
    pub log: TrainLog,
}

impl TrainedModel {
    /// Transform for sample `name`, or the first sample when `name` is `None`.
    pub fn transform_for(&self, name: Option<&str>) -> Result<Option<StandardizeTransform>> {
        let entry = match name {
            Some(n) => self.transforms.iter().find(|t| t.name == n),
            None => self.transforms.first(),
        };
        entry.map(|e| e.transform).ok_or_else(|| {
            Error::InvalidInput(format!("no transform recorded for sample {name:?}"))
        })
    }

    pub fn predict(&self, boundary: &AirfoilLoop, sample: Option<&str>) -> Result<PointSet> {
        let t = self.transform_for(sample)?;
        predict(&self.params, t.as_ref(), boundary, &self.config)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            transforms: self.transforms.clone(),
            params: self.params.clone(),
        }
    }
}

struct PreparedSample {
    boundary: AirfoilLoop,
    input: PointSet,
    target: PointSet,
}

fn prepare(
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(Vec<PreparedSample>, Vec<SampleTransform>)> {
    let mut prepared = Vec::with_capacity(dataset.len());
    let mut transforms = Vec::with_capacity(dataset.len());
    for s in &dataset.samples {
        let (boundary, target, transform) = if config.mode.standardises() {
            let t = fit_standardize(&s.target)?;
            (
                t.apply_loop(&s.boundary)?,
                apply_standardize(&t, &s.target)?,
                Some(t),
            )
        } else {
            (s.boundary.clone(), s.target.clone(), None)
        };
        prepared.push(PreparedSample {
            input: boundary.to_point_set(),
            boundary,
            target,
        });
        transforms.push(SampleTransform {
            name: s.name.clone(),
            transform,
        });
    }
    Ok((prepared, transforms))
}

/// Train on every sample with full-batch gradient averaging.
///
/// Each epoch records the losses of the parameters it starts from, then
/// takes one Adam step.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("dataset is empty".into()));
    }
    if dataset.loop_size != config.loop_size {
        return Err(Error::Config(format!(
            "dataset loops have {} vertices, config expects {}",
            dataset.loop_size, config.loop_size
        )));
    }
    let (samples, transforms) = prepare(dataset, config)?;
    let dims = config.dims();
    let mut params = init_params(config.seed, dims)?;
    let mut adam = AdamState::new(dims);
    let mut log = TrainLog::default();
    let clamp = config.clamp();
    let share = 1.0 / samples.len() as f64;

    for epoch in 1..=config.epochs {
        let mut grads = ParamGrads::zeros(dims);
        let mut rec = EpochRecord {
            epoch,
            chamfer: 0.0,
            repulsion: 0.0,
            interior: 0.0,
            total: 0.0,
            mean_pairwise: 0.0,
        };
        for s in &samples {
            let (pred, trace) = forward(&params, &s.input, clamp).map_err(|e| match e {
                Error::InvalidInput(m) => Error::Divergence {
                    epoch,
                    message: format!("non-finite prediction: {m}"),
                },
                other => other,
            })?;
            let loss = composite(&pred, &s.target, &s.boundary, &config.weights)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: format!(
                        "non-finite loss (chamfer {}, repulsion {}, interior {}, total {})",
                        loss.chamfer, loss.repulsion, loss.interior, loss.total
                    ),
                });
            }
            backward_accumulate(&params, &trace, &loss.flat_grad(), share, &mut grads)?;
            rec.chamfer += share * loss.chamfer;
            rec.repulsion += share * loss.repulsion;
            rec.interior += share * loss.interior;
            rec.total += share * loss.total;
            rec.mean_pairwise += share * mean_pairwise_distance(&pred);
        }
        if epoch == 1 || epoch % 500 == 0 {
            debug!(
                "epoch {epoch}: total {:.6} chamfer {:.6} repulsion {:.6} interior {:.6}",
                rec.total, rec.chamfer, rec.repulsion, rec.interior
            );
        }
        log.records.push(rec);
        adam_step(&mut params, &grads, &mut adam, config.lr, &config.adam)?;
        if !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: "parameters became non-finite after the update".into(),
            });
        }
    }
    if let (Some(first), Some(last)) = (log.first(), log.last()) {
        info!(
            "trained {} epochs: total {:.6} -> {:.6}",
            config.epochs, first.total, last.total
        );
    }
    Ok(TrainedModel {
        config: config.clone(),
        params,
        transforms,
        log,
    })
}

/// Predict `config.nodes` points around an original-frame loop.
///
/// With a transform the loop is standardised first and the prediction is
/// mapped back; the result is always in the original frame.
pub fn predict(
    params: &NetworkParams,
    transform: Option<&StandardizeTransform>,
    boundary: &AirfoilLoop,
    config: &TrainConfig,
) -> Result<PointSet> {
    if params.dims != config.dims() {
        return Err(Error::Shape(format!(
            "checkpoint dims {:?} do not match config {:?}",
            params.dims,
            config.dims()
        )));
    }
    match (config.mode.standardises(), transform) {
        (false, _) => Ok(forward(params, &boundary.to_point_set(), None)?.0),
        (true, Some(t)) => {
            let input = apply_standardize(t, &boundary.to_point_set())?;
            let (pred, _) = forward(params, &input, config.clamp())?;
            invert_standardize(t, &pred)
        }
        (true, None) => Err(Error::InvalidInput(
            "standardised model needs its transform to predict".into(),
        )),
    }
}

pub const CHECKPOINT_FORMAT: &str = "loopmesh-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized model: dims, flat parameter arrays and per-sample transforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: TrainConfig,
    pub transforms: Vec<SampleTransform>,
    pub params: NetworkParams,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        ck.params.check_shapes()?;
        if ck.params.dims != ck.config.dims() {
            return Err(Error::Shape(
                "checkpoint params do not match its config".into(),
            ));
        }
        Ok(ck)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::ingest::read_text(path)?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }

    pub fn into_model(self) -> TrainedModel {
        TrainedModel {
            config: self.config,
            params: self.params,
            transforms: self.transforms,
            log: TrainLog::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_dims() -> NetDims {
        NetDims {
            loop_size: 1,
            hidden1: 1,
            hidden2: 1,
            nodes: 1,
        }
    }

    #[test]
    fn adam_first_step_scalar() {
        let cfg = AdamConfig::default();
        let (mut w, mut m, mut v) = ([1.0], [0.0], [0.0]);
        adam_update(&mut w, &[1.0], &mut m, &mut v, 0.001, &cfg, 1);
        let expected = 1.0 - 0.001 * (1.0 / (1.0 + 1e-8));
        assert!((w[0] - expected).abs() < 1e-15);
        assert!((w[0] - 0.999).abs() < 1e-10);
    }

    #[test]
    fn adam_zero_grad_is_noop() {
        let mut p = init_params(3, scalar_dims()).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(p.dims);
        let g = ParamGrads::zeros(p.dims);
        for _ in 0..3 {
            adam_step(&mut p, &g, &mut st, 0.01, &AdamConfig::default()).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.t, 3);
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut p = init_params(3, scalar_dims()).unwrap();
        let other = NetDims {
            nodes: 2,
            ..scalar_dims()
        };
        let mut st = AdamState::new(p.dims);
        assert!(adam_step(
            &mut p,
            &ParamGrads::zeros(other),
            &mut st,
            0.01,
            &AdamConfig::default()
        )
        .is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::default();
        assert!(c.validate().is_ok());
        c.lr = 0.0;
        assert!(c.validate().is_err());
        let c = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = TrainConfig::for_mode(TrainMode::StandardisedClamped);
        c.clamp_y = Interval { lo: 1.0, hi: -1.0 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn mode_strings_round_trip() {
        for m in [
            TrainMode::Raw,
            TrainMode::Standardised,
            TrainMode::StandardisedClamped,
        ] {
            assert_eq!(m.as_str().parse::<TrainMode>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert!("fast".parse::<TrainMode>().is_err());
    }

    #[test]
    fn log_csv_layout() {
        let log = TrainLog {
            records: vec![EpochRecord {
                epoch: 1,
                chamfer: 2.5,
                repulsion: 0.5,
                interior: 0.0,
                total: 3.0,
                mean_pairwise: 1.25,
            }],
        };
        assert_eq!(
            log.to_csv(),
            "epoch,chamfer,repulsion,interior,total,mean_pairwise\n1,2.5,0.5,0,3,1.25\n"
        );
    }

    fn tiny_dataset() -> Dataset {
        let contour: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 40.0;
                (0.5 + 0.5 * t.cos(), 0.1 * t.sin())
            })
            .collect();
        let mesh: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 60.0;
                (0.5 + 0.9 * t.cos(), 0.4 * t.sin())
            })
            .collect();
        let config = crate::ingest::DatasetConfig {
            upsample: 50,
            ..Default::default()
        };
        let s = crate::ingest::build_sample(
            "ellipse",
            &PointSet::from_xy(&contour).unwrap(),
            &PointSet::from_xy(&mesh).unwrap(),
            &config,
            0,
        )
        .unwrap();
        Dataset::new(vec![s], 50, 35).unwrap()
    }

    fn tiny_config(mode: TrainMode) -> TrainConfig {
        TrainConfig {
            nodes: 6,
            hidden1: 8,
            hidden2: 8,
            epochs: 30,
            upsample: 50,
            ..TrainConfig::for_mode(mode)
        }
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let mut cfg = tiny_config(TrainMode::Raw);
        cfg.lr = 1e300;
        match train(&tiny_dataset(), &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn training_is_repeatable_and_logs_every_epoch() {
        let ds = tiny_dataset();
        let cfg = tiny_config(TrainMode::StandardisedClamped);
        let a = train(&ds, &cfg).unwrap();
        let b = train(&ds, &cfg).unwrap();
        assert_eq!(a.log.records.len(), 30);
        assert_eq!(a.params, b.params);
        assert_eq!(a.log.to_csv(), b.log.to_csv());
        let pred = a.predict(&ds.samples[0].boundary, None).unwrap();
        assert_eq!(pred.len(), 6);
        // clamped predictions map back inside the band
        let t = a.transform_for(None).unwrap().unwrap();
        for p in pred.points() {
            let y = (p.y - t.mean_y) / t.scale_y;
            assert!(y.abs() <= 1.0 + 1e-12, "{y}");
        }
    }

    #[test]
    fn raw_and_standardised_start_from_the_same_parameters() {
        let ds = tiny_dataset();
        let mut raw = tiny_config(TrainMode::Raw);
        raw.epochs = 1;
        raw.lr = 1e-300;
        let mut st = raw.clone();
        st.mode = TrainMode::Standardised;
        let a = train(&ds, &raw).unwrap();
        let b = train(&ds, &st).unwrap();
        let init = init_params(raw.seed, raw.dims()).unwrap();
        for (x, y) in a
            .params
            .w1
            .iter()
            .zip(&b.params.w1)
            .zip(&init.w1)
            .map(|((a, b), c)| (a - c, b - c))
        {
            assert!(x.abs() < 1e-200 && y.abs() < 1e-200);
        }
    }

    #[test]
    fn checkpoint_round_trips_bit_exact() {
        let ds = tiny_dataset();
        let model = train(&ds, &tiny_config(TrainMode::Standardised)).unwrap();
        let json = model.to_checkpoint().to_json().unwrap();
        let back = Checkpoint::from_json(&json).unwrap().into_model();
        assert_eq!(back.params, model.params);
        assert_eq!(back.transforms, model.transforms);
        let p1 = model.predict(&ds.samples[0].boundary, None).unwrap();
        let p2 = back
            .predict(&ds.samples[0].boundary, Some("ellipse"))
            .unwrap();
        assert_eq!(p1.points(), p2.points());
    }
}
