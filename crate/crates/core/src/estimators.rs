//! Multi-target state extraction from a PMBM density.
//!
//! All three estimators pick one global hypothesis and report Bernoulli
//! means from it. They differ in how the hypothesis is scored:
//!
//! 1. highest global weight, then threshold the existence probabilities;
//! 2. MAP cardinality `n*`, then the hypothesis whose best deterministic
//!    expansion with `n*` targets is most likely;
//! 3. the hypothesis containing the most likely deterministic expansion.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::density::{log_existence, PmbmDensity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    pub time: u32,
    /// `(track id, mean)` in track order.
    pub targets: Vec<(u64, DVector<f64>)>,
}

impl StateEstimate {
    pub fn cardinality(&self) -> usize {
        self.targets.len()
    }

    pub fn means(&self) -> Vec<DVector<f64>> {
        self.targets.iter().map(|(_, x)| x.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    One,
    Two,
    Three,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::One, Estimator::Two, Estimator::Three];

    pub fn number(self) -> u8 {
        match self {
            Estimator::One => 1,
            Estimator::Two => 2,
            Estimator::Three => 3,
        }
    }

    /// Runs this estimator. `threshold` is only used by estimator 1.
    pub fn estimate(self, d: &PmbmDensity, threshold: f64) -> Result<StateEstimate> {
        match self {
            Estimator::One => estimate1(d, threshold),
            Estimator::Two => estimate2(d),
            Estimator::Three => estimate3(d),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "one" | "est1" => Ok(Estimator::One),
            "2" | "two" | "est2" => Ok(Estimator::Two),
            "3" | "three" | "est3" => Ok(Estimator::Three),
            other => Err(Error::InvalidParameter(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Reports the Bernoullis with existence above `threshold` in the most
/// likely global hypothesis.
pub fn estimate1(d: &PmbmDensity, threshold: f64) -> Result<StateEstimate> {
    let j = d.best_global().ok_or(Error::NoGlobalHypotheses)?;
    Ok(collect(d, j, |_, r| r > threshold))
}

/// A global hypothesis choice together with its score and the tracks
/// (by position) that are reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub global: usize,
    pub log_score: f64,
    pub present: Vec<usize>,
}

/// Estimator 2's hypothesis choice. `None` when there are no global
/// hypotheses.
pub fn select2(d: &PmbmDensity) -> Option<Selection> {
    let n_star = d.cardinality_distribution().map_estimate();
    let mut best: Option<Selection> = None;
    for (j, g) in d.globals.iter().enumerate() {
        let rs: Vec<f64> = d.selected(j).map(|(_, h)| h.existence()).collect();
        let mut order: Vec<usize> = (0..rs.len()).collect();
        // Track order is id order within a density, so a stable sort breaks
        // ties by track id.
        order.sort_by(|&a, &b| rs[b].total_cmp(&rs[a]));
        let mut chosen = vec![false; rs.len()];
        for &i in order.iter().take(n_star) {
            chosen[i] = true;
        }
        let mut score = g.log_weight;
        for (i, &r) in rs.iter().enumerate() {
            score += log_existence(r, chosen[i]);
        }
        if n_star > rs.len() {
            score = f64::NEG_INFINITY;
        }
        let present = (0..rs.len()).filter(|&i| chosen[i]).collect();
        keep_best(&mut best, j, score, present);
    }
    best
}

/// Estimator 3's hypothesis choice.
pub fn select3(d: &PmbmDensity) -> Option<Selection> {
    let mut best: Option<Selection> = None;
    for (j, g) in d.globals.iter().enumerate() {
        let mut score = g.log_weight;
        let mut present = Vec::new();
        for (i, (_, h)) in d.selected(j).enumerate() {
            let r = h.existence();
            let exists = r >= 0.5;
            score += log_existence(r, exists);
            if exists {
                present.push(i);
            }
        }
        keep_best(&mut best, j, score, present);
    }
    best
}

fn keep_best(best: &mut Option<Selection>, j: usize, log_score: f64, present: Vec<usize>) {
    let better = match best {
        None => true,
        Some(b) => log_score > b.log_score,
    };
    if better {
        *best = Some(Selection {
            global: j,
            log_score,
            present,
        });
    }
}

/// Reports the `n*` most likely Bernoullis of the hypothesis chosen by
/// [`select2`]. An empty MBM gives an empty estimate.
pub fn estimate2(d: &PmbmDensity) -> Result<StateEstimate> {
    Ok(from_selection(d, select2(d)))
}

/// Reports the Bernoullis with existence at least 0.5 in the hypothesis
/// chosen by [`select3`].
pub fn estimate3(d: &PmbmDensity) -> Result<StateEstimate> {
    Ok(from_selection(d, select3(d)))
}

fn from_selection(d: &PmbmDensity, s: Option<Selection>) -> StateEstimate {
    match s {
        Some(s) => collect(d, s.global, |i, _| s.present.contains(&i)),
        None => StateEstimate {
            time: d.time,
            targets: Vec::new(),
        },
    }
}

fn collect(d: &PmbmDensity, j: usize, keep: impl Fn(usize, f64) -> bool) -> StateEstimate {
    StateEstimate {
        time: d.time,
        targets: d
            .selected(j)
            .enumerate()
            .filter(|(i, (_, h))| keep(*i, h.existence()))
            .map(|(_, (t, h))| (t.id, h.bernoulli.density.mean.clone()))
            .collect(),
    }
}
