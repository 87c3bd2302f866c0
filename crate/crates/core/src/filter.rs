//! PMBM prediction, update and pruning for linear/Gaussian models.
//!
//! One scan is `predict` followed by `update`. The update has three parts:
//! the undetected-target intensity is scaled by `1 - p_d`, every gated
//! measurement may start a new track from the Poisson intensity, and every
//! single-target hypothesis is extended by a missed detection and by each
//! measurement in its gate. Global hypotheses are then formed per parent
//! with Murty's algorithm over a cost matrix normalised by the misdetection
//! weights, and the result is pruned.

use nalgebra::DVector;
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};

use crate::assignment::{murty_kbest, CostMatrix};
use crate::density::{
    Association, AssociationRecord, BernoulliComponent, GlobalHypothesis, PmbmDensity,
    SingleTargetHypothesis, Track,
};
use crate::error::{Error, Result};
use crate::gaussian::{
    kalman_predict, log_sum_exp, moment_match, posterior_from_innovation, GaussianMixture,
    Innovation, LinearGaussianModel, WeightedGaussian,
};

/// Stand-in for `ln 0` when normalising cost-matrix rows by a misdetection
/// weight that is exactly zero. Only affects ranking, never stored weights.
const MISS_LOG_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Maximum number of global hypotheses kept after pruning.
    pub max_globals: usize,
    /// Poisson components with weight below this are dropped.
    pub poisson_prune_threshold: f64,
    /// Bernoullis with existence below this are removed.
    pub existence_prune_threshold: f64,
    /// Squared Mahalanobis gate.
    pub gate_threshold: f64,
    /// Existence threshold used by estimator 1.
    pub estimator_threshold: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            max_globals: 200,
            poisson_prune_threshold: 1e-5,
            existence_prune_threshold: 1e-5,
            gate_threshold: 20.0,
            estimator_threshold: 0.4,
        }
    }
}

impl FilterParams {
    /// No gating, no pruning and unbounded hypothesis count: the update is
    /// then exact up to the moment-matching of new tracks.
    pub fn exact() -> Self {
        FilterParams {
            max_globals: usize::MAX,
            poisson_prune_threshold: 0.0,
            existence_prune_threshold: 0.0,
            gate_threshold: f64::INFINITY,
            estimator_threshold: 0.4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_globals == 0 {
            return Err(Error::InvalidParameter("max_globals must be at least 1".into()));
        }
        if !(self.gate_threshold > 0.0) {
            return Err(Error::InvalidThreshold(self.gate_threshold));
        }
        for (name, v) in [
            ("poisson_prune_threshold", self.poisson_prune_threshold),
            ("existence_prune_threshold", self.existence_prune_threshold),
            ("estimator_threshold", self.estimator_threshold),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Prediction: birth plus surviving undetected intensity, and survival
/// scaling of every Bernoulli. Weights and global hypotheses are unchanged.
pub fn predict(d: &PmbmDensity, m: &LinearGaussianModel) -> Result<PmbmDensity> {
    let log_ps = m.p_survival.ln();
    let mut poisson = m.birth.components.clone();
    for c in &d.poisson.components {
        poisson.push(WeightedGaussian::new(
            c.log_weight + log_ps,
            kalman_predict(&c.gaussian, &m.transition, &m.process_noise)?,
        ));
    }
    let tracks = d
        .tracks
        .iter()
        .map(|t| {
            let hypotheses = t
                .hypotheses
                .iter()
                .map(|h| {
                    Ok(SingleTargetHypothesis {
                        bernoulli: BernoulliComponent {
                            existence: h.existence() * m.p_survival,
                            density: kalman_predict(
                                &h.bernoulli.density,
                                &m.transition,
                                &m.process_noise,
                            )?,
                        },
                        ..h.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Track {
                hypotheses,
                ..t.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PmbmDensity {
        poisson: GaussianMixture::new(poisson)?,
        tracks,
        globals: d.globals.clone(),
        time: d.time + 1,
        next_track_id: d.next_track_id,
    })
}

/// Undetected targets after a scan: intensity times `1 - p_d`.
pub fn update_poisson_undetected(intensity: &GaussianMixture, p_d: f64) -> GaussianMixture {
    let log_miss = (1.0 - p_d).ln();
    GaussianMixture {
        components: intensity
            .components
            .iter()
            .map(|c| WeightedGaussian::new(c.log_weight + log_miss, c.gaussian.clone()))
            .collect(),
    }
}

/// First-detection update of measurement `z` (index `meas` at scan `time`)
/// against the Poisson intensity. Returns `None` when no intensity
/// component gates `z` or the detection mass is zero. Otherwise returns a
/// track with one hypothesis (existence `e/(e+c)`, moment-matched density,
/// log weight `ln(e+c)`) together with `ln(e+c)`.
pub fn create_new_track(
    z: &DVector<f64>,
    meas: usize,
    time: u32,
    id: u64,
    intensity: &GaussianMixture,
    m: &LinearGaussianModel,
    params: &FilterParams,
) -> Result<Option<(Track, f64)>> {
    let mut posteriors = Vec::new();
    for c in &intensity.components {
        if c.log_weight == f64::NEG_INFINITY {
            continue;
        }
        let inn = Innovation::compute(&c.gaussian, z, &m.observation, &m.measurement_noise)?;
        if params.gate_threshold != f64::INFINITY && inn.mahalanobis2() > params.gate_threshold {
            continue;
        }
        let (post, ll) =
            posterior_from_innovation(&c.gaussian, &m.observation, &m.measurement_noise, &inn);
        posteriors.push(WeightedGaussian::new(c.log_weight + ll, post));
    }
    if posteriors.is_empty() {
        return Ok(None);
    }
    let mixture = GaussianMixture {
        components: posteriors,
    };
    let log_e = m.p_detection.ln() + log_sum_exp(&mixture.log_weights());
    if log_e == f64::NEG_INFINITY {
        return Ok(None);
    }
    let log_rho = log_sum_exp(&[log_e, m.clutter_density.ln()]);
    let density = moment_match(&mixture)?.gaussian;
    let hyp = SingleTargetHypothesis {
        bernoulli: BernoulliComponent {
            existence: (log_e - log_rho).exp().min(1.0),
            density,
        },
        log_weight: log_rho,
        history: vec![AssociationRecord {
            time,
            association: Association::Measurement(meas),
        }],
        parent: None,
    };
    Ok(Some((
        Track {
            id,
            hypotheses: vec![hyp],
            birth_time: time,
            birth_measurement: meas,
        },
        log_rho,
    )))
}

/// Missed-detection child. Its weight factor is `1 - r + r (1 - p_d)`.
pub fn extend_track_misdetection(
    h: &SingleTargetHypothesis,
    p_d: f64,
    time: u32,
) -> SingleTargetHypothesis {
    let r = h.existence();
    let factor = 1.0 - r + r * (1.0 - p_d);
    let existence = if factor > 0.0 {
        (r * (1.0 - p_d) / factor).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut history = h.history.clone();
    history.push(AssociationRecord {
        time,
        association: Association::Miss,
    });
    SingleTargetHypothesis {
        bernoulli: BernoulliComponent {
            existence,
            density: h.bernoulli.density.clone(),
        },
        log_weight: h.log_weight + factor.ln(),
        history,
        parent: h.parent,
    }
}

/// Detection child for measurement `z`: weight factor `r p_d N(z; Hx, S)`,
/// existence one, Kalman posterior density.
pub fn extend_track_detection(
    h: &SingleTargetHypothesis,
    z: &DVector<f64>,
    meas: usize,
    time: u32,
    m: &LinearGaussianModel,
) -> Result<SingleTargetHypothesis> {
    let inn = Innovation::compute(&h.bernoulli.density, z, &m.observation, &m.measurement_noise)?;
    Ok(detection_from_innovation(h, &inn, meas, time, m))
}

fn detection_from_innovation(
    h: &SingleTargetHypothesis,
    inn: &Innovation,
    meas: usize,
    time: u32,
    m: &LinearGaussianModel,
) -> SingleTargetHypothesis {
    let (post, ll) =
        posterior_from_innovation(&h.bernoulli.density, &m.observation, &m.measurement_noise, inn);
    let mut history = h.history.clone();
    history.push(AssociationRecord {
        time,
        association: Association::Measurement(meas),
    });
    SingleTargetHypothesis {
        bernoulli: BernoulliComponent {
            existence: 1.0,
            density: post,
        },
        log_weight: h.log_weight + h.existence().ln() + m.p_detection.ln() + ll,
        history,
        parent: h.parent,
    }
}

/// New single-target hypotheses of one prior track after a scan.
#[derive(Debug, Clone)]
pub struct TrackExpansion {
    /// Children of all prior hypotheses, in creation order.
    pub hypotheses: Vec<SingleTargetHypothesis>,
    /// Per prior hypothesis: index of the misdetection child and its log
    /// weight factor `ln rho(empty)`.
    pub miss: Vec<(usize, f64)>,
    /// Per prior hypothesis and retained measurement row: index of the
    /// detection child and its log weight factor `ln rho({z})`.
    pub detections: Vec<Vec<Option<(usize, f64)>>>,
}

/// Measurements that take part in data association at this scan.
#[derive(Debug, Clone)]
pub struct GatedScan {
    /// Measurement index of each cost-matrix row.
    pub retained: Vec<usize>,
    /// `ln rho^p(z)` when the row has a new track, otherwise `ln c(z)`.
    pub new_track_log_weight: Vec<f64>,
    /// Position in the new-track list for rows with a new track.
    pub new_track: Vec<Option<usize>>,
}

/// Cost matrix of one parent global hypothesis. Rows are the retained
/// measurements, the first columns the prior tracks, and the diagonal block
/// the new-track/clutter option of each row.
pub fn build_cost_matrix(
    g: &GlobalHypothesis,
    expansions: &[TrackExpansion],
    scan: &GatedScan,
) -> CostMatrix {
    let rows = scan.retained.len();
    let old: Vec<Vec<f64>> = (0..rows)
        .map(|p| {
            expansions
                .iter()
                .zip(&g.selection)
                .map(|(e, &h)| {
                    let (_, miss) = e.miss[h];
                    let norm = if miss.is_finite() { miss } else { MISS_LOG_FLOOR };
                    match e.detections[h][p] {
                        Some((_, det)) if det > f64::NEG_INFINITY => norm - det,
                        _ => f64::INFINITY,
                    }
                })
                .collect()
        })
        .collect();
    let diag: Vec<f64> = scan.new_track_log_weight.iter().map(|w| -w).collect();
    CostMatrix::tracking(&old, &diag)
}

/// Result of an update before pruning.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub density: PmbmDensity,
    /// `ln p(Z)` under the prior (exact when nothing is gated or truncated).
    pub log_evidence: f64,
    /// Measurement indices that entered data association.
    pub retained: Vec<usize>,
    /// Per global hypothesis, the retained measurements declared clutter.
    pub clutter: Vec<Vec<usize>>,
}

struct Child {
    log_weight: f64,
    selection: Vec<usize>,
    clutter: Vec<usize>,
}

/// Full update with pruning.
pub fn update(
    d: &PmbmDensity,
    z: &[DVector<f64>],
    m: &LinearGaussianModel,
    params: &FilterParams,
) -> Result<PmbmDensity> {
    let out = update_unpruned(d, z, m, params)?;
    Ok(prune(&out.density, params))
}

/// Update without the final pruning step. Murty truncation (`max_globals`)
/// and gating still apply.
pub fn update_unpruned(
    d: &PmbmDensity,
    z: &[DVector<f64>],
    m: &LinearGaussianModel,
    params: &FilterParams,
) -> Result<UpdateOutcome> {
    params.validate()?;
    let d = d.normalize()?;
    let time = d.time;
    let p_d = m.p_detection;
    let log_clutter = m.clutter_density.ln();

    // Potential first detections.
    let mut candidates = Vec::with_capacity(z.len());
    for (p, zp) in z.iter().enumerate() {
        candidates.push(create_new_track(zp, p, time, 0, &d.poisson, m, params)?);
    }

    // Misdetection and gated detection children of every prior hypothesis,
    // indexed by measurement for now.
    let raw: Vec<Result<(Vec<SingleTargetHypothesis>, Vec<(usize, f64)>, Vec<Vec<Option<(usize, f64)>>>)>> =
        d.tracks
            .par_iter()
            .map(|t| expand_track(t, z, time, m, params))
            .collect();
    let mut raw_expansions = Vec::with_capacity(raw.len());
    for r in raw {
        raw_expansions.push(r?);
    }

    let mut gated_by_track = vec![false; z.len()];
    for (_, _, dets) in &raw_expansions {
        for per_h in dets {
            for (p, det) in per_h.iter().enumerate() {
                if det.is_some() {
                    gated_by_track[p] = true;
                }
            }
        }
    }

    let mut next_id = d.next_track_id;
    let mut scan = GatedScan {
        retained: Vec::new(),
        new_track_log_weight: Vec::new(),
        new_track: Vec::new(),
    };
    let mut new_tracks: Vec<Track> = Vec::new();
    let mut log_unexplained = 0.0;
    for (p, cand) in candidates.into_iter().enumerate() {
        match cand {
            Some((mut track, log_rho)) => {
                track.id = next_id;
                next_id += 1;
                let ne = SingleTargetHypothesis::non_existent(
                    track.hypotheses[0].bernoulli.density.clone(),
                );
                track.hypotheses.push(ne);
                scan.retained.push(p);
                scan.new_track_log_weight.push(log_rho);
                scan.new_track.push(Some(new_tracks.len()));
                new_tracks.push(track);
            }
            None if gated_by_track[p] => {
                scan.retained.push(p);
                scan.new_track_log_weight.push(log_clutter);
                scan.new_track.push(None);
            }
            None => log_unexplained += log_clutter,
        }
    }

    let expansions: Vec<TrackExpansion> = raw_expansions
        .into_iter()
        .map(|(hypotheses, miss, dets)| TrackExpansion {
            hypotheses,
            miss,
            detections: dets
                .into_iter()
                .map(|per_meas| scan.retained.iter().map(|&p| per_meas[p]).collect())
                .collect(),
        })
        .collect();

    let n_old = d.tracks.len();
    let n_new = new_tracks.len();
    let children_per_parent: Vec<Vec<Child>> = d
        .globals
        .par_iter()
        .map(|g| expand_global(g, &expansions, &scan, n_new, params))
        .collect();

    // Merge identical selections, keeping first-appearance order.
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut merged: Vec<Child> = Vec::new();
    for child in children_per_parent.into_iter().flatten() {
        if child.log_weight == f64::NEG_INFINITY {
            continue;
        }
        match index.get(&child.selection) {
            Some(&k) => {
                merged[k].log_weight = log_sum_exp(&[merged[k].log_weight, child.log_weight]);
            }
            None => {
                index.insert(child.selection.clone(), merged.len());
                merged.push(child);
            }
        }
    }
    if merged.is_empty() {
        return Err(Error::NoFeasibleHypothesis);
    }
    let log_total = log_sum_exp(&merged.iter().map(|c| c.log_weight).collect::<Vec<_>>());
    let log_evidence =
        log_total + log_unexplained - m.clutter_rate - p_d * d.poisson.total_weight();

    let mut tracks: Vec<Track> = d
        .tracks
        .iter()
        .zip(expansions)
        .map(|(t, e)| Track {
            hypotheses: e.hypotheses,
            ..t.clone()
        })
        .collect();
    tracks.extend(new_tracks);
    debug_assert_eq!(tracks.len(), n_old + n_new);

    let mut clutter = Vec::with_capacity(merged.len());
    let globals = merged
        .into_iter()
        .map(|c| {
            clutter.push(c.clutter);
            GlobalHypothesis {
                log_weight: c.log_weight - log_total,
                selection: c.selection,
            }
        })
        .collect();

    let mut density = PmbmDensity {
        poisson: update_poisson_undetected(&d.poisson, p_d),
        tracks,
        globals,
        time,
        next_track_id: next_id,
    };
    let keep = compact(&mut density);
    let clutter = keep.iter().map(|&j| clutter[j].clone()).collect();
    Ok(UpdateOutcome {
        density,
        log_evidence,
        retained: scan.retained,
        clutter,
    })
}

type RawExpansion = (
    Vec<SingleTargetHypothesis>,
    Vec<(usize, f64)>,
    Vec<Vec<Option<(usize, f64)>>>,
);

fn expand_track(
    t: &Track,
    z: &[DVector<f64>],
    time: u32,
    m: &LinearGaussianModel,
    params: &FilterParams,
) -> Result<RawExpansion> {
    let mut hypotheses = Vec::new();
    let mut miss = Vec::with_capacity(t.hypotheses.len());
    let mut detections = Vec::with_capacity(t.hypotheses.len());
    for (hi, h) in t.hypotheses.iter().enumerate() {
        let mut child = extend_track_misdetection(h, m.p_detection, time);
        child.parent = Some(hi);
        miss.push((hypotheses.len(), child.log_weight - h.log_weight));
        hypotheses.push(child);

        let mut per_meas = vec![None; z.len()];
        if h.existence() > 0.0 && m.p_detection > 0.0 {
            for (p, zp) in z.iter().enumerate() {
                let inn = Innovation::compute(
                    &h.bernoulli.density,
                    zp,
                    &m.observation,
                    &m.measurement_noise,
                )?;
                if params.gate_threshold != f64::INFINITY
                    && inn.mahalanobis2() > params.gate_threshold
                {
                    continue;
                }
                let mut child = detection_from_innovation(h, &inn, p, time, m);
                child.parent = Some(hi);
                let factor = child.log_weight - h.log_weight;
                if factor == f64::NEG_INFINITY {
                    continue;
                }
                per_meas[p] = Some((hypotheses.len(), factor));
                hypotheses.push(child);
            }
        }
        detections.push(per_meas);
    }
    Ok((hypotheses, miss, detections))
}

/// Murty expansion of one parent global hypothesis.
fn expand_global(
    g: &GlobalHypothesis,
    expansions: &[TrackExpansion],
    scan: &GatedScan,
    n_new: usize,
    params: &FilterParams,
) -> Vec<Child> {
    let rows = scan.retained.len();
    let n_old = expansions.len();
    let full = build_cost_matrix(g, expansions, scan);

    // Rows whose only option is their diagonal entry are fixed, and old
    // tracks that no row can take are dropped. Neither changes the ranking.
    let free_rows: Vec<usize> = (0..rows)
        .filter(|&p| (0..n_old).any(|i| full.get(p, i).is_finite()))
        .collect();
    let live_cols: Vec<usize> = (0..n_old)
        .filter(|&i| free_rows.iter().any(|&p| full.get(p, i).is_finite()))
        .collect();
    let forced_rows: Vec<usize> = (0..rows).filter(|p| !free_rows.contains(p)).collect();
    if forced_rows
        .iter()
        .any(|&p| !full.get(p, n_old + p).is_finite())
    {
        return Vec::new();
    }
    let reduced_old: Vec<Vec<f64>> = free_rows
        .iter()
        .map(|&p| live_cols.iter().map(|&i| full.get(p, i)).collect())
        .collect();
    let reduced_diag: Vec<f64> = free_rows.iter().map(|&p| full.get(p, n_old + p)).collect();
    let reduced = CostMatrix::tracking(&reduced_old, &reduced_diag);

    let k = if params.max_globals == usize::MAX {
        usize::MAX
    } else {
        // Saturating float-to-int cast.
        ((params.max_globals as f64) * g.log_weight.exp()).ceil().max(1.0) as usize
    };

    let mut children = Vec::new();
    for a in murty_kbest(&reduced, k) {
        // Row of the cost matrix assigned to each old track, if any.
        let mut track_row: Vec<Option<usize>> = vec![None; n_old];
        let mut diag_rows: Vec<usize> = forced_rows.clone();
        for (ri, &col) in a.row_to_col.iter().enumerate() {
            let p = free_rows[ri];
            if col < live_cols.len() {
                track_row[live_cols[col]] = Some(p);
            } else {
                diag_rows.push(p);
            }
        }
        let mut log_weight = g.log_weight;
        let mut selection = Vec::with_capacity(n_old + n_new);
        for (i, e) in expansions.iter().enumerate() {
            let h = g.selection[i];
            let (idx, factor) = match track_row[i] {
                Some(p) => e.detections[h][p].expect("finite cost implies a detection child"),
                None => e.miss[h],
            };
            log_weight += factor;
            selection.push(idx);
        }
        // New tracks: detected hypothesis (0) if their row took the
        // diagonal, otherwise the non-existent hypothesis (1).
        let mut new_sel = vec![1usize; n_new];
        let mut clutter = Vec::new();
        diag_rows.sort_unstable();
        for &p in &diag_rows {
            log_weight += scan.new_track_log_weight[p];
            match scan.new_track[p] {
                Some(k) => new_sel[k] = 0,
                None => clutter.push(scan.retained[p]),
            }
        }
        selection.extend(new_sel);
        children.push(Child {
            log_weight,
            selection,
            clutter,
        });
    }
    children
}

/// Drops unreferenced hypotheses and tracks that are non-existent in every
/// global hypothesis, reindexing selections. Returns the indices of the
/// global hypotheses that were kept (all of them).
fn compact(d: &mut PmbmDensity) -> Vec<usize> {
    let n_tracks = d.tracks.len();
    let mut keep_track = vec![false; n_tracks];
    let mut remap: Vec<HashMap<usize, usize>> = vec![HashMap::new(); n_tracks];
    let mut new_tracks = Vec::with_capacity(n_tracks);
    for (ti, t) in d.tracks.iter().enumerate() {
        let referenced: std::collections::BTreeSet<usize> =
            d.globals.iter().map(|g| g.selection[ti]).collect();
        if referenced.iter().all(|&h| t.hypotheses[h].existence() == 0.0) {
            continue;
        }
        keep_track[ti] = true;
        let mut hyps = Vec::with_capacity(referenced.len());
        for (new_idx, &h) in referenced.iter().enumerate() {
            remap[ti].insert(h, new_idx);
            hyps.push(t.hypotheses[h].clone());
        }
        new_tracks.push(Track {
            hypotheses: hyps,
            ..t.clone()
        });
    }
    for g in &mut d.globals {
        g.selection = g
            .selection
            .iter()
            .enumerate()
            .filter(|(ti, _)| keep_track[*ti])
            .map(|(ti, h)| remap[ti][h])
            .collect();
    }
    d.tracks = new_tracks;
    (0..d.globals.len()).collect()
}

/// Pruning in three stages: weak Poisson components, the global hypothesis
/// cap, then low-existence Bernoullis and unreferenced hypotheses.
pub fn prune(d: &PmbmDensity, params: &FilterParams) -> PmbmDensity {
    let mut out = d.clone();
    let log_poisson_thr = params.poisson_prune_threshold.ln();
    out.poisson.components.retain(|c| {
        c.log_weight > f64::NEG_INFINITY && !(c.log_weight < log_poisson_thr)
    });

    let mut order: Vec<usize> = (0..out.globals.len()).collect();
    order.sort_by(|&a, &b| {
        out.globals[b]
            .log_weight
            .total_cmp(&out.globals[a].log_weight)
            .then(a.cmp(&b))
    });
    order.truncate(params.max_globals);
    order.sort_unstable();
    let before = out.globals.len();
    out.globals = order.iter().map(|&j| out.globals[j].clone()).collect();
    out.globals.retain(|g| g.log_weight > f64::NEG_INFINITY);
    if out.globals.len() != before && out.normalize_in_place().is_err() {
        return out;
    }

    // Low-existence Bernoullis become non-existent, keeping their history
    // so the measurements they explain stay accounted for.
    let thr = params.existence_prune_threshold;
    let mut replaced: Vec<HashMap<usize, usize>> = vec![HashMap::new(); out.tracks.len()];
    for j in 0..out.globals.len() {
        for ti in 0..out.tracks.len() {
            let h = out.globals[j].selection[ti];
            let hyp = &out.tracks[ti].hypotheses[h];
            if hyp.existence() > 0.0 && hyp.existence() < thr {
                let idx = match replaced[ti].get(&h) {
                    Some(&idx) => idx,
                    None => {
                        let mut dead = hyp.clone();
                        dead.bernoulli.existence = 0.0;
                        dead.log_weight = 0.0;
                        out.tracks[ti].hypotheses.push(dead);
                        let idx = out.tracks[ti].hypotheses.len() - 1;
                        replaced[ti].insert(h, idx);
                        idx
                    }
                };
                out.globals[j].selection[ti] = idx;
            }
        }
    }
    compact(&mut out);
    out
}

/// Convenience wrapper bundling model and parameters with a density.
#[derive(Debug, Clone)]
pub struct PmbmFilter {
    pub model: LinearGaussianModel,
    pub params: FilterParams,
    pub density: PmbmDensity,
}

impl PmbmFilter {
    /// Starts with no targets: empty intensity and no tracks.
    pub fn new(model: LinearGaussianModel, params: FilterParams) -> Result<Self> {
        model.validate()?;
        params.validate()?;
        Ok(PmbmFilter {
            model,
            params,
            density: PmbmDensity::new(GaussianMixture::empty()),
        })
    }

    /// One prediction and update.
    pub fn step(&mut self, z: &[DVector<f64>]) -> Result<&PmbmDensity> {
        let predicted = predict(&self.density, &self.model)?;
        self.density = update(&predicted, z, &self.model, &self.params)?;
        Ok(&self.density)
    }
}

/// Ids of tracks whose selected hypothesis claims measurement `meas` at
/// `time` in global hypothesis `j`.
pub fn claimants(d: &PmbmDensity, j: usize, time: u32, meas: usize) -> HashSet<u64> {
    d.selected(j)
        .filter(|(_, h)| h.measurement_at(time) == Some(meas))
        .map(|(t, _)| t.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{CvModelConfig, Gaussian};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn npdf(x: f64, mean: f64, var: f64) -> f64 {
        (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    fn scalar_model(p_d: f64, clutter_density: f64) -> LinearGaussianModel {
        let one = DMatrix::from_element(1, 1, 1.0);
        LinearGaussianModel {
            transition: one.clone(),
            process_noise: DMatrix::zeros(1, 1),
            observation: one.clone(),
            measurement_noise: one,
            p_survival: 1.0,
            p_detection: p_d,
            clutter_rate: 1.0,
            clutter_density,
            birth: GaussianMixture::empty(),
        }
    }

    fn hyp(r: f64, mean: f64, var: f64, lw: f64) -> SingleTargetHypothesis {
        SingleTargetHypothesis {
            bernoulli: BernoulliComponent {
                existence: r,
                density: Gaussian::scalar(mean, var),
            },
            log_weight: lw,
            history: vec![],
            parent: None,
        }
    }

    fn z1(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn predict_with_identity_keeps_density() {
        let mut d = PmbmDensity::new(GaussianMixture {
            components: vec![WeightedGaussian::new(-1.0, Gaussian::scalar(2.0, 3.0))],
        });
        d.tracks.push(Track {
            id: 0,
            hypotheses: vec![hyp(0.7, 1.0, 2.0, -0.5)],
            birth_time: 0,
            birth_measurement: 0,
        });
        d.globals[0].selection = vec![0];
        let p = predict(&d, &scalar_model(0.9, 0.1)).unwrap();
        assert_eq!(p.poisson, d.poisson);
        assert_eq!(p.tracks, d.tracks);
        assert_eq!(p.globals, d.globals);
        assert_eq!(p.time, 1);
    }

    #[test]
    fn predict_scales_existence() {
        let mut m = scalar_model(0.9, 0.1);
        m.p_survival = 0.99;
        let mut d = PmbmDensity::new(GaussianMixture::empty());
        d.tracks.push(Track {
            id: 0,
            hypotheses: vec![hyp(1.0, 0.0, 1.0, 0.0)],
            birth_time: 0,
            birth_measurement: 0,
        });
        d.globals[0].selection = vec![0];
        let p = predict(&d, &m).unwrap();
        assert_eq!(p.tracks[0].hypotheses[0].existence(), 0.99);
    }

    #[test]
    fn predict_empty_prior_gives_birth() {
        let m = LinearGaussianModel::constant_velocity(&CvModelConfig::default());
        let p = predict(&PmbmDensity::new(GaussianMixture::empty()), &m).unwrap();
        assert_eq!(p.poisson, m.birth);
        assert!(p.tracks.is_empty());
    }

    #[test]
    fn undetected_scaling() {
        let mix = GaussianMixture {
            components: vec![WeightedGaussian::new(0.5_f64.ln(), Gaussian::scalar(0.0, 1.0))],
        };
        assert_eq!(update_poisson_undetected(&mix, 0.0), mix);
        assert_eq!(
            update_poisson_undetected(&mix, 1.0).components[0].log_weight,
            f64::NEG_INFINITY
        );
        let w = update_poisson_undetected(&mix, 0.9).components[0].weight();
        assert_abs_diff_eq!(w, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn new_track_scalar_oracle() {
        let m = scalar_model(0.9, 0.1);
        let mix = GaussianMixture {
            components: vec![WeightedGaussian::new(0.0, Gaussian::scalar(0.0, 1.0))],
        };
        let (track, log_rho) = create_new_track(&z1(0.0), 0, 1, 7, &mix, &m, &FilterParams::default())
            .unwrap()
            .unwrap();
        let e = 0.9 * npdf(0.0, 0.0, 2.0);
        let h = &track.hypotheses[0];
        assert_abs_diff_eq!(h.existence(), e / (e + 0.1), epsilon = 1e-14);
        assert_abs_diff_eq!(log_rho, (e + 0.1).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(h.bernoulli.density.mean[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.bernoulli.density.cov[(0, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(track.id, 7);
    }

    #[test]
    fn new_track_without_clutter_is_certain() {
        let m = scalar_model(0.9, 0.0);
        let mix = GaussianMixture {
            components: vec![WeightedGaussian::new(0.0, Gaussian::scalar(0.0, 1.0))],
        };
        let (track, _) = create_new_track(&z1(1.0), 0, 1, 0, &mix, &m, &FilterParams::default())
            .unwrap()
            .unwrap();
        assert_eq!(track.hypotheses[0].existence(), 1.0);
    }

    #[test]
    fn new_track_outside_gate_is_none() {
        let m = scalar_model(0.9, 0.1);
        let mix = GaussianMixture {
            components: vec![WeightedGaussian::new(0.0, Gaussian::scalar(0.0, 1.0))],
        };
        let out = create_new_track(&z1(100.0), 0, 1, 0, &mix, &m, &FilterParams::default()).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn misdetection_examples() {
        let h = hyp(1.0, 0.0, 1.0, 0.0);
        let c = extend_track_misdetection(&h, 0.9, 1);
        assert_abs_diff_eq!(c.log_weight.exp(), 0.1, epsilon = 1e-15);
        assert_eq!(c.existence(), 1.0);
        assert_eq!(c.history.last().unwrap().association, Association::Miss);

        let c = extend_track_misdetection(&hyp(0.0, 0.0, 1.0, 0.0), 0.9, 1);
        assert_eq!(c.log_weight, 0.0);
        assert_eq!(c.existence(), 0.0);

        let c = extend_track_misdetection(&hyp(0.5, 0.0, 1.0, 0.0), 0.9, 1);
        assert_abs_diff_eq!(c.log_weight.exp(), 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(c.existence(), 0.05 / 0.55, epsilon = 1e-15);

        let c = extend_track_misdetection(&h, 1.0, 1);
        assert_eq!(c.log_weight, f64::NEG_INFINITY);
    }

    #[test]
    fn detection_examples() {
        let m = scalar_model(0.9, 0.1);
        let c = extend_track_detection(&hyp(0.0, 0.0, 1.0, 0.0), &z1(0.0), 0, 1, &m).unwrap();
        assert_eq!(c.log_weight, f64::NEG_INFINITY);

        let c = extend_track_detection(&hyp(1.0, 0.0, 1.0, 0.0), &z1(0.0), 0, 1, &m).unwrap();
        assert_abs_diff_eq!(c.log_weight.exp(), 0.9 * npdf(0.0, 0.0, 2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(c.bernoulli.density.cov[(0, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(c.existence(), 1.0);
        assert_eq!(
            c.history.last().unwrap().association,
            Association::Measurement(0)
        );
    }

    fn one_track_density(r: f64) -> PmbmDensity {
        let mut d = PmbmDensity::new(GaussianMixture {
            components: vec![WeightedGaussian::new(0.0, Gaussian::scalar(0.0, 1.0))],
        });
        d.tracks.push(Track {
            id: 0,
            hypotheses: vec![hyp(r, 0.0, 1.0, 0.0)],
            birth_time: 0,
            birth_measurement: 0,
        });
        d.globals[0].selection = vec![0];
        d.next_track_id = 1;
        d.time = 1;
        d
    }

    #[test]
    fn cost_matrix_no_old_tracks_is_diagonal() {
        let scan = GatedScan {
            retained: vec![0, 1],
            new_track_log_weight: vec![-2.0, -3.0],
            new_track: vec![Some(0), Some(1)],
        };
        let g = GlobalHypothesis {
            log_weight: 0.0,
            selection: vec![],
        };
        let c = build_cost_matrix(&g, &[], &scan);
        assert_eq!(c.row(0), &[2.0, f64::INFINITY]);
        assert_eq!(c.row(1), &[f64::INFINITY, 3.0]);
    }

    #[test]
    fn cost_matrix_one_track_one_measurement() {
        let m = scalar_model(0.9, 0.1);
        let d = one_track_density(1.0);
        let (hyps, miss, dets) =
            expand_track(&d.tracks[0], &[z1(0.0)], 1, &m, &FilterParams::default()).unwrap();
        let e = TrackExpansion {
            hypotheses: hyps,
            miss,
            detections: dets,
        };
        let log_rho = (0.9 * npdf(0.0, 0.0, 2.0) + 0.1).ln();
        let scan = GatedScan {
            retained: vec![0],
            new_track_log_weight: vec![log_rho],
            new_track: vec![Some(0)],
        };
        let c = build_cost_matrix(&d.globals[0], &[e], &scan);
        let det = 0.9 * npdf(0.0, 0.0, 2.0);
        assert_abs_diff_eq!(c.get(0, 0), -(det / 0.1).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(c.get(0, 1), -log_rho, epsilon = 1e-15);
    }

    #[test]
    fn cost_matrix_gated_out_is_infinite() {
        let m = scalar_model(0.9, 0.1);
        let d = one_track_density(1.0);
        let (hyps, miss, dets) =
            expand_track(&d.tracks[0], &[z1(50.0)], 1, &m, &FilterParams::default()).unwrap();
        let e = TrackExpansion {
            hypotheses: hyps,
            miss,
            detections: dets,
        };
        let scan = GatedScan {
            retained: vec![0],
            new_track_log_weight: vec![-1.0],
            new_track: vec![None],
        };
        assert_eq!(build_cost_matrix(&d.globals[0], &[e], &scan).get(0, 0), f64::INFINITY);
    }

    #[test]
    fn first_measurement_creates_one_track() {
        let m = scalar_model(0.9, 0.1);
        let mut d = PmbmDensity::new(GaussianMixture {
            components: vec![WeightedGaussian::new(0.0, Gaussian::scalar(0.0, 1.0))],
        });
        d.time = 1;
        let out = update(&d, &[z1(0.5)], &m, &FilterParams::default()).unwrap();
        assert_eq!(out.tracks.len(), 1);
        assert_eq!(out.globals.len(), 1);
        let e = 0.9 * npdf(0.5, 0.0, 2.0);
        let (_, h) = out.selected(0).next().unwrap();
        assert_abs_diff_eq!(h.existence(), e / (e + 0.1), epsilon = 1e-14);
    }

    #[test]
    fn three_global_hypotheses_from_one_track_two_measurements() {
        let m = scalar_model(0.9, 0.1);
        let d = one_track_density(1.0);
        let out = update_unpruned(&d, &[z1(0.2), z1(-0.3)], &m, &FilterParams::exact()).unwrap();
        assert_eq!(out.density.globals.len(), 3);
        assert_eq!(out.density.tracks.len(), 3);
        let mut patterns: Vec<(Option<usize>, bool, bool)> = (0..3)
            .map(|j| {
                let sel: Vec<_> = out.density.selected(j).collect();
                (
                    sel[0].1.measurement_at(1),
                    sel[1].1.existence() > 0.0,
                    sel[2].1.existence() > 0.0,
                )
            })
            .collect();
        patterns.sort();
        assert_eq!(
            patterns,
            vec![(None, true, true), (Some(0), false, true), (Some(1), true, false)]
        );
        assert!(out
            .density
            .partition_violations(1, &out.retained, Some(&out.clutter))
            .is_empty());
    }

    #[test]
    fn empty_scan_only_misdetections() {
        let m = scalar_model(0.9, 0.1);
        let mut d = one_track_density(0.8);
        d.tracks[0].hypotheses.push(hyp(0.3, 1.0, 1.0, -1.0));
        d.globals = vec![
            GlobalHypothesis {
                log_weight: 0.6_f64.ln(),
                selection: vec![0],
            },
            GlobalHypothesis {
                log_weight: 0.4_f64.ln(),
                selection: vec![1],
            },
        ];
        let out = update(&d, &[], &m, &FilterParams::default()).unwrap();
        assert_eq!(out.globals.len(), 2);
        assert_eq!(out.tracks.len(), 1);
        for h in &out.tracks[0].hypotheses {
            assert_eq!(h.history.last().unwrap().association, Association::Miss);
        }
    }

    #[test]
    fn prune_examples() {
        let m = scalar_model(0.9, 0.1);
        let d = one_track_density(1.0);
        let out = update_unpruned(&d, &[z1(0.2), z1(-0.3)], &m, &FilterParams::exact())
            .unwrap()
            .density;
        let loose = FilterParams {
            poisson_prune_threshold: 0.0,
            existence_prune_threshold: 0.0,
            ..FilterParams::default()
        };
        assert_eq!(prune(&out, &loose), out);

        let single = prune(
            &out,
            &FilterParams {
                max_globals: 1,
                ..loose
            },
        );
        assert_eq!(single.globals.len(), 1);
        assert_eq!(single.globals[0].log_weight, 0.0);

        let mut weak = out.clone();
        weak.poisson.components[0].log_weight = 1e-6_f64.ln();
        assert!(prune(&weak, &FilterParams::default()).poisson.is_empty());
    }

    #[test]
    fn certain_target_cannot_be_missed_with_perfect_detection() {
        let m = scalar_model(1.0, 0.0);
        let d = one_track_density(1.0);
        let c = extend_track_misdetection(&d.tracks[0].hypotheses[0], m.p_detection, 2);
        assert_eq!(c.log_weight, f64::NEG_INFINITY);
    }
}
