//! Ground-truth and measurement simulation, and the scenario text format.
//!
//! Each target's state at a reference step is drawn from a Gaussian; the
//! rest of the trajectory is obtained by running the motion model forward
//! and, through `x_{k-1} = F^{-1}(x_k - w)`, backward. Measurements follow
//! the standard point-target model: each live target is detected with
//! probability `p_d`, and clutter is Poisson and uniform over the area.
//!
//! Text format, one record per line, steps starting at 1:
//!
//! ```text
//! # steps: 81
//! 1 truth 0 150.2 0.01 149.8 -0.02
//! 1 meas -1 151.0 148.7
//! ```
//!
//! Blank lines and other `#` comments are ignored.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gaussian::{CvModelConfig, LinearGaussianModel};

/// Axis-aligned rectangle in measurement coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Area {
    pub fn measure(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0) * (self.y_max - self.y_min).max(0.0)
    }
}

impl Default for Area {
    fn default() -> Self {
        Area {
            x_min: 0.0,
            x_max: 300.0,
            y_min: 0.0,
            y_max: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub area: Area,
    pub num_steps: u32,
    pub model: CvModelConfig,
    /// Step at which each trajectory is initialised.
    pub midpoint_step: u32,
    pub midpoint_mean: Vec<f64>,
    /// Diagonal of the midpoint covariance.
    pub midpoint_cov_diag: Vec<f64>,
    /// Inclusive `(birth, death)` steps of each target.
    pub targets: Vec<(u32, u32)>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area: Area::default(),
            num_steps: 81,
            model: CvModelConfig::default(),
            midpoint_step: 41,
            midpoint_mean: vec![150.0, 0.0, 150.0, 0.0],
            midpoint_cov_diag: vec![0.1; 4],
            targets: vec![(1, 81), (1, 81), (1, 81), (1, 40)],
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Motion/measurement model with the clutter density taken from `area`.
    pub fn model(&self) -> LinearGaussianModel {
        let cfg = CvModelConfig {
            surveillance_area: self.area.measure(),
            ..self.model.clone()
        };
        LinearGaussianModel::constant_velocity(&cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_steps < 1 {
            return Err(Error::InvalidParameter("num_steps must be >= 1".into()));
        }
        if self.midpoint_mean.len() != 4 || self.midpoint_cov_diag.len() != 4 {
            return Err(Error::DimensionMismatch {
                context: "midpoint",
                expected: 4,
                actual: self.midpoint_mean.len().min(self.midpoint_cov_diag.len()),
            });
        }
        if self.midpoint_step < 1 || self.midpoint_step > self.num_steps {
            return Err(Error::InvalidParameter(
                "midpoint_step must lie in 1..=num_steps".into(),
            ));
        }
        for &(b, d) in &self.targets {
            if b < 1 || d < b {
                return Err(Error::InvalidParameter(format!(
                    "target window ({b}, {d}) must satisfy 1 <= birth <= death"
                )));
            }
        }
        if self.area.measure() <= 0.0 {
            return Err(Error::InvalidParameter("area must have positive size".into()));
        }
        let m = &self.model;
        let positive = [
            ("sampling_period", m.sampling_period),
            ("birth_weight", m.birth_weight),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
            }
        }
        for (name, v) in [
            ("process_noise_intensity", m.process_noise_intensity),
            ("measurement_noise_std", m.measurement_noise_std),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be >= 0")));
            }
        }
        if m.birth_cov_diag.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("birth_cov_diag entries must be > 0".into()));
        }
        if self.midpoint_cov_diag.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("midpoint_cov_diag entries must be >= 0".into()));
        }
        self.model().validate()
    }
}

/// True target states per step. `steps[k - 1]` holds step `k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub steps: Vec<Vec<(u64, DVector<f64>)>>,
}

impl GroundTruth {
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn states_at(&self, step: usize) -> Vec<DVector<f64>> {
        self.steps[step - 1].iter().map(|(_, x)| x.clone()).collect()
    }
}

/// Unlabelled measurements per step. `steps[k - 1]` holds step `k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementSet {
    pub steps: Vec<Vec<DVector<f64>>>,
}

/// Generator for Monte Carlo substreams. Stream 0 is used for the
/// trajectories, stream `run + 1` for the measurements of run `run`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw from `N(mean, cov)` for positive semi-definite `cov`.
pub fn sample_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> DVector<f64> {
    let n = mean.len();
    let white = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let root = match cov.clone().cholesky() {
        Some(c) => c.l(),
        None => {
            let eig = cov.clone().symmetric_eigen();
            let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
        }
    };
    mean + root * white
}

pub fn generate_trajectories(cfg: &ScenarioConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let model = cfg.model();
    let f = &model.transition;
    let f_inv = f
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("transition matrix is not invertible".into()))?;
    let q = &model.process_noise;
    let zero = DVector::zeros(f.nrows());
    let mean = DVector::from_row_slice(&cfg.midpoint_mean);
    let cov = DMatrix::from_diagonal(&DVector::from_row_slice(&cfg.midpoint_cov_diag));
    let n = cfg.num_steps as usize;
    let mid = cfg.midpoint_step as usize;

    let mut rng = stream_rng(cfg.seed, 0);
    let mut steps = vec![Vec::new(); n];
    for (id, &(birth, death)) in cfg.targets.iter().enumerate() {
        let mut states = vec![zero.clone(); n + 1];
        states[mid] = sample_gaussian(&mut rng, &mean, &cov);
        for k in mid + 1..=n {
            states[k] = f * &states[k - 1] + sample_gaussian(&mut rng, &zero, q);
        }
        for k in (1..mid).rev() {
            states[k] = &f_inv * (&states[k + 1] - sample_gaussian(&mut rng, &zero, q));
        }
        for k in birth as usize..=(death as usize).min(n) {
            steps[k - 1].push((id as u64, states[k].clone()));
        }
    }
    Ok(GroundTruth { steps })
}

pub fn generate_measurements(
    truth: &GroundTruth,
    model: &LinearGaussianModel,
    area: &Area,
    rng: &mut ChaCha8Rng,
) -> Result<MeasurementSet> {
    let zero = DVector::zeros(model.measurement_dim());
    let clutter = if model.clutter_rate > 0.0 {
        Some(
            Poisson::new(model.clutter_rate)
                .map_err(|e| Error::InvalidParameter(format!("clutter rate: {e}")))?,
        )
    } else {
        None
    };
    let mut steps = Vec::with_capacity(truth.steps.len());
    for targets in &truth.steps {
        let mut z = Vec::new();
        for (_, x) in targets {
            if rng.random::<f64>() < model.p_detection {
                let noise = sample_gaussian(rng, &zero, &model.measurement_noise);
                z.push(&model.observation * x + noise);
            }
        }
        let count = clutter.map_or(0, |p| p.sample(rng) as usize);
        for _ in 0..count {
            z.push(DVector::from_vec(vec![
                rng.random_range(area.x_min..area.x_max),
                rng.random_range(area.y_min..area.y_max),
            ]));
        }
        z.shuffle(rng);
        steps.push(z);
    }
    Ok(MeasurementSet { steps })
}

/// Serialises truth and/or measurements in the scenario text format.
pub fn write_scenario(truth: Option<&GroundTruth>, meas: Option<&MeasurementSet>) -> String {
    let steps = truth
        .map(|t| t.steps.len())
        .max(meas.map(|m| m.steps.len()))
        .unwrap_or(0);
    let mut out = String::new();
    writeln!(out, "# steps: {steps}").unwrap();
    for k in 0..steps {
        if let Some(t) = truth.and_then(|t| t.steps.get(k)) {
            for (id, x) in t {
                write_record(&mut out, k + 1, "truth", &id.to_string(), x);
            }
        }
        if let Some(zs) = meas.and_then(|m| m.steps.get(k)) {
            for z in zs {
                write_record(&mut out, k + 1, "meas", "-1", z);
            }
        }
    }
    out
}

fn write_record(out: &mut String, step: usize, kind: &str, id: &str, v: &DVector<f64>) {
    write!(out, "{step} {kind} {id}").unwrap();
    for c in v.iter() {
        write!(out, " {c}").unwrap();
    }
    out.push('\n');
}

/// Parses the scenario text format. Errors name the offending line.
pub fn parse_scenario(text: &str) -> Result<(GroundTruth, MeasurementSet)> {
    let mut declared: Option<usize> = None;
    let mut truth: Vec<Vec<(u64, DVector<f64>)>> = Vec::new();
    let mut meas: Vec<Vec<DVector<f64>>> = Vec::new();
    let err = |line: usize, message: String| Error::Parse { line, message };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("steps:") {
                let n = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| err(line_no, format!("bad step count: {e}")))?;
                declared = Some(n);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(err(line_no, "expected 'step kind id values...'".into()));
        }
        let step: usize = fields[0]
            .parse()
            .map_err(|e| err(line_no, format!("bad step '{}': {e}", fields[0])))?;
        if step == 0 {
            return Err(err(line_no, "steps start at 1".into()));
        }
        let values = fields[3..]
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| err(line_no, format!("bad value '{s}': {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let v = DVector::from_vec(values);
        match fields[1] {
            "truth" => {
                let id: u64 = fields[2]
                    .parse()
                    .map_err(|e| err(line_no, format!("bad target id '{}': {e}", fields[2])))?;
                if truth.len() < step {
                    truth.resize(step, Vec::new());
                }
                truth[step - 1].push((id, v));
            }
            "meas" => {
                if meas.len() < step {
                    meas.resize(step, Vec::new());
                }
                meas[step - 1].push(v);
            }
            other => return Err(err(line_no, format!("unknown record kind '{other}'"))),
        }
    }
    let n = declared.unwrap_or(0).max(truth.len()).max(meas.len());
    truth.resize(n, Vec::new());
    meas.resize(n, Vec::new());
    Ok((GroundTruth { steps: truth }, MeasurementSet { steps: meas }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.model.process_noise_intensity = 0.0;
        cfg.midpoint_cov_diag = vec![0.0; 4];
        cfg.midpoint_mean = vec![150.0, 1.0, 150.0, -0.5];
        cfg
    }

    #[test]
    fn noiseless_trajectories_are_straight_lines() {
        let truth = generate_trajectories(&noiseless()).unwrap();
        for k in 1..=81usize {
            for (_, x) in &truth.steps[k - 1] {
                let dt = k as f64 - 41.0;
                assert!((x[0] - (150.0 + dt)).abs() < 1e-9);
                assert!((x[2] - (150.0 - 0.5 * dt)).abs() < 1e-9);
            }
        }
        assert_eq!(truth.steps[40][0].1[0], 150.0);
    }

    #[test]
    fn forward_then_backward_returns_midpoint() {
        let model = noiseless().model();
        let f_inv = model.transition.clone().try_inverse().unwrap();
        let x0 = DVector::from_vec(vec![150.3, 0.7, 149.1, -0.2]);
        let mut x = x0.clone();
        for _ in 0..40 {
            x = &model.transition * x;
        }
        for _ in 0..40 {
            x = &f_inv * x;
        }
        assert!((x - x0).amax() < 1e-12);
    }

    #[test]
    fn paper_windows() {
        let truth = generate_trajectories(&ScenarioConfig::default()).unwrap();
        assert_eq!(truth.num_steps(), 81);
        assert_eq!(truth.steps[0].len(), 4);
        assert_eq!(truth.steps[39].len(), 4);
        assert_eq!(truth.steps[40].len(), 3);
        assert_eq!(truth.steps[80].len(), 3);
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let cfg = ScenarioConfig::default();
        assert_eq!(
            generate_trajectories(&cfg).unwrap(),
            generate_trajectories(&cfg).unwrap()
        );
        let truth = generate_trajectories(&cfg).unwrap();
        let model = cfg.model();
        let a = generate_measurements(&truth, &model, &cfg.area, &mut stream_rng(3, 1)).unwrap();
        let b = generate_measurements(&truth, &model, &cfg.area, &mut stream_rng(3, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_detection_no_clutter_is_empty() {
        let mut cfg = ScenarioConfig::default();
        cfg.model.p_detection = 0.0;
        cfg.model.clutter_rate = 0.0;
        let truth = generate_trajectories(&cfg).unwrap();
        let m = generate_measurements(&truth, &cfg.model(), &cfg.area, &mut stream_rng(0, 1))
            .unwrap();
        assert!(m.steps.iter().all(|z| z.is_empty()));
    }

    #[test]
    fn perfect_sensor_measures_positions() {
        let mut cfg = ScenarioConfig::default();
        cfg.model.p_detection = 1.0;
        cfg.model.clutter_rate = 0.0;
        cfg.model.measurement_noise_std = 0.0;
        let truth = generate_trajectories(&cfg).unwrap();
        let m = generate_measurements(&truth, &cfg.model(), &cfg.area, &mut stream_rng(0, 1))
            .unwrap();
        for (zs, xs) in m.steps.iter().zip(&truth.steps) {
            assert_eq!(zs.len(), xs.len());
            for (_, x) in xs {
                assert!(zs.iter().any(|z| z[0] == x[0] && z[1] == x[2]));
            }
        }
    }

    #[test]
    fn clutter_rate_matches() {
        let mut cfg = ScenarioConfig::default();
        cfg.model.p_detection = 0.0;
        cfg.num_steps = 10_000;
        cfg.midpoint_step = 1;
        cfg.targets.clear();
        let truth = GroundTruth {
            steps: vec![Vec::new(); 10_000],
        };
        let m = generate_measurements(&truth, &cfg.model(), &cfg.area, &mut stream_rng(5, 1))
            .unwrap();
        let mean = m.steps.iter().map(|z| z.len()).sum::<usize>() as f64 / 10_000.0;
        assert!((mean - 10.0).abs() < 0.3, "mean clutter count {mean}");
        for z in m.steps.iter().flatten() {
            assert!((0.0..300.0).contains(&z[0]) && (0.0..300.0).contains(&z[1]));
        }
    }

    #[test]
    fn text_round_trip() {
        let cfg = ScenarioConfig::default();
        let truth = generate_trajectories(&cfg).unwrap();
        let meas =
            generate_measurements(&truth, &cfg.model(), &cfg.area, &mut stream_rng(1, 1)).unwrap();
        let text = write_scenario(Some(&truth), Some(&meas));
        let (t2, m2) = parse_scenario(&text).unwrap();
        assert_eq!(t2, truth);
        assert_eq!(m2, meas);
        assert_eq!(write_scenario(Some(&t2), Some(&m2)), text);
    }

    #[test]
    fn empty_steps_survive_round_trip() {
        let meas = MeasurementSet {
            steps: vec![Vec::new(); 3],
        };
        let (_, m) = parse_scenario(&write_scenario(None, Some(&meas))).unwrap();
        assert_eq!(m.steps.len(), 3);
    }

    #[test]
    fn parse_errors_name_line() {
        let e = parse_scenario("# steps: 2\n1 meas -1 1.0 2.0\n2 meas -1 x 2.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse_scenario("1 radar -1 1.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }
}
