//! Run configuration: a flat TOML file whose keys default to the published
//! simulation setup.

use anyhow::{bail, Context, Result};
use pmbm_core::scenario::Area;
use pmbm_core::{CvModelConfig, Estimator, FilterParams, OspaParams, ScenarioConfig};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub runs: usize,
    pub estimators: Vec<u8>,

    pub num_steps: u32,
    /// `[x_min, x_max, y_min, y_max]`.
    pub area: [f64; 4],
    pub midpoint_step: u32,
    pub midpoint_mean: Vec<f64>,
    pub midpoint_cov_diag: Vec<f64>,
    /// Inclusive `[birth, death]` step pairs.
    pub targets: Vec<[u32; 2]>,

    pub sampling_period: f64,
    pub process_noise_intensity: f64,
    pub measurement_noise_std: f64,
    pub p_survival: f64,
    pub p_detection: f64,
    pub clutter_rate: f64,
    pub birth_weight: f64,
    pub birth_mean: [f64; 4],
    pub birth_cov_diag: [f64; 4],

    pub max_globals: usize,
    pub poisson_prune_threshold: f64,
    pub existence_prune_threshold: f64,
    pub gate_threshold: f64,
    pub estimator_threshold: f64,

    pub ospa_order: f64,
    pub ospa_cutoff: f64,
    pub ospa_position_indices: Vec<usize>,

    /// `(p_d, lambda_c)` cells for `benchmark`. Empty means the single cell
    /// given by `p_detection` and `clutter_rate`.
    pub grid: Vec<[f64; 2]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        let f = FilterParams::default();
        let o = OspaParams::default();
        RunConfig {
            seed: s.seed,
            runs: 100,
            estimators: vec![1, 2, 3],
            num_steps: s.num_steps,
            area: [s.area.x_min, s.area.x_max, s.area.y_min, s.area.y_max],
            midpoint_step: s.midpoint_step,
            midpoint_mean: s.midpoint_mean,
            midpoint_cov_diag: s.midpoint_cov_diag,
            targets: s.targets.iter().map(|&(b, d)| [b, d]).collect(),
            sampling_period: s.model.sampling_period,
            process_noise_intensity: s.model.process_noise_intensity,
            measurement_noise_std: s.model.measurement_noise_std,
            p_survival: s.model.p_survival,
            p_detection: s.model.p_detection,
            clutter_rate: s.model.clutter_rate,
            birth_weight: s.model.birth_weight,
            birth_mean: s.model.birth_mean,
            birth_cov_diag: s.model.birth_cov_diag,
            max_globals: f.max_globals,
            poisson_prune_threshold: f.poisson_prune_threshold,
            existence_prune_threshold: f.existence_prune_threshold,
            gate_threshold: f.gate_threshold,
            estimator_threshold: f.estimator_threshold,
            ospa_order: o.order,
            ospa_cutoff: o.cutoff,
            ospa_position_indices: o.position_indices,
            grid: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            bail!("runs must be at least 1");
        }
        self.estimator_list()?;
        self.scenario().validate()?;
        self.filter().validate()?;
        self.ospa().validate()?;
        Ok(())
    }

    pub fn estimator_list(&self) -> Result<Vec<Estimator>> {
        let mut out: Vec<Estimator> = self
            .estimators
            .iter()
            .map(|e| e.to_string().parse::<Estimator>())
            .collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            bail!("at least one estimator must be selected");
        }
        Ok(out)
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            area: Area {
                x_min: self.area[0],
                x_max: self.area[1],
                y_min: self.area[2],
                y_max: self.area[3],
            },
            num_steps: self.num_steps,
            model: CvModelConfig {
                sampling_period: self.sampling_period,
                process_noise_intensity: self.process_noise_intensity,
                measurement_noise_std: self.measurement_noise_std,
                p_survival: self.p_survival,
                p_detection: self.p_detection,
                clutter_rate: self.clutter_rate,
                surveillance_area: (self.area[1] - self.area[0]) * (self.area[3] - self.area[2]),
                birth_weight: self.birth_weight,
                birth_mean: self.birth_mean,
                birth_cov_diag: self.birth_cov_diag,
            },
            midpoint_step: self.midpoint_step,
            midpoint_mean: self.midpoint_mean.clone(),
            midpoint_cov_diag: self.midpoint_cov_diag.clone(),
            targets: self.targets.iter().map(|t| (t[0], t[1])).collect(),
            seed: self.seed,
        }
    }

    pub fn filter(&self) -> FilterParams {
        FilterParams {
            max_globals: self.max_globals,
            poisson_prune_threshold: self.poisson_prune_threshold,
            existence_prune_threshold: self.existence_prune_threshold,
            gate_threshold: self.gate_threshold,
            estimator_threshold: self.estimator_threshold,
        }
    }

    pub fn ospa(&self) -> OspaParams {
        OspaParams {
            order: self.ospa_order,
            cutoff: self.ospa_cutoff,
            position_indices: self.ospa_position_indices.clone(),
        }
    }

    pub fn grid_cells(&self) -> Vec<(f64, f64)> {
        if self.grid.is_empty() {
            vec![(self.p_detection, self.clutter_rate)]
        } else {
            self.grid.iter().map(|c| (c[0], c[1])).collect()
        }
    }
}
