//! Tracking runs and the Monte Carlo OSPA benchmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::PmbmDensity;
use crate::error::Result;
use crate::estimators::Estimator;
use crate::filter::{predict, update, FilterParams};
use crate::gaussian::{GaussianMixture, LinearGaussianModel};
use crate::metrics::{ospa, rms_aggregate, OspaParams};
use crate::scenario::{
    generate_measurements, generate_trajectories, stream_rng, GroundTruth, MeasurementSet,
    ScenarioConfig,
};

/// Published time-averaged RMS OSPA of estimators 1, 2 and 3, keyed by
/// `(p_d, lambda_c)`.
pub const PAPER_TABLE: [((f64, f64), [f64; 3]); 15] = [
    ((0.95, 10.0), [2.10, 2.10, 2.10]),
    ((0.95, 15.0), [2.15, 2.17, 2.15]),
    ((0.95, 20.0), [2.26, 2.27, 2.26]),
    ((0.9, 10.0), [2.23, 2.34, 2.36]),
    ((0.9, 15.0), [2.30, 2.42, 2.44]),
    ((0.9, 20.0), [2.37, 2.48, 2.50]),
    ((0.8, 10.0), [2.67, 2.64, 2.66]),
    ((0.8, 15.0), [2.80, 2.78, 2.80]),
    ((0.8, 20.0), [2.93, 2.90, 2.92]),
    ((0.7, 10.0), [3.02, 2.99, 3.01]),
    ((0.7, 15.0), [3.10, 3.07, 3.09]),
    ((0.7, 20.0), [3.29, 3.25, 3.28]),
    ((0.6, 10.0), [3.42, 3.39, 3.42]),
    ((0.6, 15.0), [3.62, 3.60, 3.62]),
    ((0.6, 20.0), [3.71, 3.69, 3.71]),
];

pub fn paper_value(p_d: f64, clutter_rate: f64, e: Estimator) -> Option<f64> {
    PAPER_TABLE
        .iter()
        .find(|((pd, lc), _)| (pd - p_d).abs() < 1e-9 && (lc - clutter_rate).abs() < 1e-9)
        .map(|(_, v)| v[e.number() as usize - 1])
}

/// The `(p_d, lambda_c)` grid of the published table.
pub fn paper_grid() -> Vec<(f64, f64)> {
    PAPER_TABLE.iter().map(|(k, _)| *k).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub estimator: Estimator,
    pub ospa: f64,
    pub cardinality_estimate: usize,
    pub truth_cardinality: usize,
}

/// Runs the filter over every step of `meas`, starting from an empty
/// density, and scores each estimator against `truth`. `on_step` sees the
/// updated density of every step.
pub fn track_run(
    model: &LinearGaussianModel,
    params: &FilterParams,
    truth: &GroundTruth,
    meas: &MeasurementSet,
    estimators: &[Estimator],
    ospa_params: &OspaParams,
    mut on_step: impl FnMut(usize, &PmbmDensity),
) -> Result<Vec<StepRecord>> {
    model.validate()?;
    params.validate()?;
    let mut d = PmbmDensity::new(GaussianMixture::empty());
    let mut out = Vec::with_capacity(meas.steps.len() * estimators.len());
    for (k, z) in meas.steps.iter().enumerate() {
        let step = k + 1;
        d = update(&predict(&d, model)?, z, model, params)?;
        on_step(step, &d);
        let truth_states = truth.steps.get(k).map_or_else(Vec::new, |s| {
            s.iter().map(|(_, x)| x.clone()).collect::<Vec<_>>()
        });
        for &e in estimators {
            let est = e.estimate(&d, params.estimator_threshold)?;
            out.push(StepRecord {
                step,
                estimator: e,
                ospa: ospa(&est.means(), &truth_states, ospa_params),
                cardinality_estimate: est.cardinality(),
                truth_cardinality: truth_states.len(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub p_detection: f64,
    pub clutter_rate: f64,
    pub estimator: Estimator,
    /// Square root of the mean squared OSPA over runs and steps.
    pub rms: f64,
    /// Per-step RMS over runs.
    pub curve: Vec<f64>,
}

/// One grid cell: `runs` Monte Carlo runs on the scenario with the given
/// detection probability and clutter rate. Trajectories are fixed by the
/// scenario seed; run `i` draws its measurements from substream `i + 1`.
pub fn run_cell(
    scenario: &ScenarioConfig,
    params: &FilterParams,
    ospa_params: &OspaParams,
    estimators: &[Estimator],
    runs: usize,
    p_detection: f64,
    clutter_rate: f64,
) -> Result<Vec<CellResult>> {
    let mut cfg = scenario.clone();
    cfg.model.p_detection = p_detection;
    cfg.model.clutter_rate = clutter_rate;
    let truth = generate_trajectories(&cfg)?;
    let model = cfg.model();
    let per_run: Vec<Result<Vec<StepRecord>>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream_rng(cfg.seed, run as u64 + 1);
            let meas = generate_measurements(&truth, &model, &cfg.area, &mut rng)?;
            track_run(&model, params, &truth, &meas, estimators, ospa_params, |_, _| {})
        })
        .collect();
    let per_run = per_run.into_iter().collect::<Result<Vec<_>>>()?;
    estimators
        .iter()
        .map(|&e| {
            let grid: Vec<Vec<f64>> = per_run
                .iter()
                .map(|recs| {
                    recs.iter()
                        .filter(|r| r.estimator == e)
                        .map(|r| r.ospa)
                        .collect()
                })
                .collect();
            let (curve, rms) = rms_aggregate(&grid)?;
            Ok(CellResult {
                p_detection,
                clutter_rate,
                estimator: e,
                rms,
                curve,
            })
        })
        .collect()
}
