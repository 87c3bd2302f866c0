//! The PMBM density: a Poisson intensity for undetected targets plus a
//! multi-Bernoulli mixture (MBM) over potentially detected targets.
//!
//! The MBM is stored track-oriented. Each [`Track`] owns the single-target
//! hypotheses of one potentially detected target, and each
//! [`GlobalHypothesis`] picks one hypothesis per track. Weights are kept in
//! the log domain throughout.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gaussian::{log_sum_exp, Gaussian, GaussianMixture, WeightedGaussian};

/// What a single-target hypothesis says happened to its target at one scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Association {
    Miss,
    Measurement(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AssociationRecord {
    pub time: u32,
    pub association: Association,
}

/// Existence probability plus the state density given existence.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent {
    pub existence: f64,
    pub density: Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleTargetHypothesis {
    pub bernoulli: BernoulliComponent,
    /// Unnormalised log weight accumulated since the track was created.
    pub log_weight: f64,
    pub history: Vec<AssociationRecord>,
    /// Index of the hypothesis this one was derived from at the previous scan.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub hypotheses: Vec<SingleTargetHypothesis>,
    pub birth_time: u32,
    pub birth_measurement: usize,
}

/// One hypothesis index per track, aligned with [`PmbmDensity::tracks`].
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalHypothesis {
    pub log_weight: f64,
    pub selection: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmbmDensity {
    pub poisson: GaussianMixture,
    pub tracks: Vec<Track>,
    pub globals: Vec<GlobalHypothesis>,
    /// Index of the most recent scan (0 before the first prediction).
    pub time: u32,
    pub next_track_id: u64,
}

/// A mixture hypothesis with its own list of Bernoulli components.
#[derive(Debug, Clone, PartialEq)]
pub struct MbmHypothesis {
    pub log_weight: f64,
    pub bernoullis: Vec<BernoulliComponent>,
}

/// Flat multi-Bernoulli mixture. The empty MBM has one hypothesis with no
/// Bernoulli components.
#[derive(Debug, Clone, PartialEq)]
pub struct Mbm {
    pub hypotheses: Vec<MbmHypothesis>,
}

/// Mixture component with deterministic target existence.
#[derive(Debug, Clone, PartialEq)]
pub struct Mbm01Component {
    pub log_weight: f64,
    pub deterministic_targets: Vec<Gaussian>,
    /// Hypothesis of the source MBM this component expands.
    pub source: usize,
    /// Indices (within the source hypothesis) of the Bernoullis that exist.
    pub present: Vec<usize>,
}

/// Probability mass function of the number of targets, indexed by count.
#[derive(Debug, Clone, PartialEq)]
pub struct CardinalityPmf {
    pub probabilities: Vec<f64>,
}

impl SingleTargetHypothesis {
    /// The explicit "target does not exist" hypothesis: `r = 0`, weight 1.
    pub fn non_existent(density: Gaussian) -> Self {
        SingleTargetHypothesis {
            bernoulli: BernoulliComponent {
                existence: 0.0,
                density,
            },
            log_weight: 0.0,
            history: Vec::new(),
            parent: None,
        }
    }

    pub fn existence(&self) -> f64 {
        self.bernoulli.existence
    }

    pub fn measurement_at(&self, time: u32) -> Option<usize> {
        self.history.iter().rev().find_map(|rec| match rec {
            AssociationRecord {
                time: t,
                association: Association::Measurement(p),
            } if *t == time => Some(*p),
            _ => None,
        })
    }
}

impl PmbmDensity {
    /// A density with the given undetected-target intensity and no detected
    /// targets.
    pub fn new(poisson: GaussianMixture) -> Self {
        PmbmDensity {
            poisson,
            tracks: Vec::new(),
            globals: vec![GlobalHypothesis {
                log_weight: 0.0,
                selection: Vec::new(),
            }],
            time: 0,
            next_track_id: 0,
        }
    }

    /// Shifts global log weights so they sum to one in the linear domain.
    pub fn normalize(&self) -> Result<PmbmDensity> {
        let mut out = self.clone();
        out.normalize_in_place()?;
        Ok(out)
    }

    pub(crate) fn normalize_in_place(&mut self) -> Result<f64> {
        let lw: Vec<f64> = self.globals.iter().map(|g| g.log_weight).collect();
        let total = log_sum_exp(&lw);
        if !total.is_finite() {
            return Err(Error::DegenerateWeights);
        }
        for g in &mut self.globals {
            g.log_weight -= total;
        }
        Ok(total)
    }

    /// Selected single-target hypotheses of global hypothesis `j`, paired
    /// with their tracks.
    pub fn selected(&self, j: usize) -> impl Iterator<Item = (&Track, &SingleTargetHypothesis)> {
        self.globals[j]
            .selection
            .iter()
            .zip(&self.tracks)
            .map(|(&h, t)| (t, &t.hypotheses[h]))
    }

    /// Index of the highest-weight global hypothesis (lowest index on ties).
    pub fn best_global(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (j, g) in self.globals.iter().enumerate() {
            match best {
                Some(b) if self.globals[b].log_weight >= g.log_weight => {}
                _ => best = Some(j),
            }
        }
        best
    }

    /// Expected number of undetected targets.
    pub fn expected_undetected(&self) -> f64 {
        self.poisson.total_weight()
    }

    /// Flattens the track-oriented MBM. Bernoulli order follows track order.
    pub fn to_mbm(&self) -> Mbm {
        Mbm {
            hypotheses: (0..self.globals.len())
                .map(|j| MbmHypothesis {
                    log_weight: self.globals[j].log_weight,
                    bernoullis: self.selected(j).map(|(_, h)| h.bernoulli.clone()).collect(),
                })
                .collect(),
        }
    }

    pub fn cardinality_distribution(&self) -> CardinalityPmf {
        self.to_mbm().cardinality_distribution()
    }

    pub fn mbm01(&self) -> Vec<Mbm01Component> {
        self.to_mbm().to_mbm01()
    }

    /// Structural and numerical invariants. Returns one message per
    /// violation; an empty list means the density is well formed.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.globals.is_empty() {
            errs.push("no global hypotheses".to_string());
        }
        let mut ids = std::collections::HashSet::new();
        for t in &self.tracks {
            if !ids.insert(t.id) {
                errs.push(format!("duplicate track id {}", t.id));
            }
            if t.hypotheses.is_empty() {
                errs.push(format!("track {} has no hypotheses", t.id));
            }
            for (i, h) in t.hypotheses.iter().enumerate() {
                let r = h.existence();
                if !(0.0..=1.0).contains(&r) {
                    errs.push(format!("track {} hypothesis {i}: existence {r}", t.id));
                }
                if h.log_weight.is_nan() || h.log_weight == f64::INFINITY {
                    errs.push(format!("track {} hypothesis {i}: log weight {}", t.id, h.log_weight));
                }
                if h.history.windows(2).any(|w| w[0].time >= w[1].time) {
                    errs.push(format!("track {} hypothesis {i}: history not increasing", t.id));
                }
                if let Some(msg) = covariance_problem(&h.bernoulli.density.cov) {
                    errs.push(format!("track {} hypothesis {i}: {msg}", t.id));
                }
            }
        }
        for (k, c) in self.poisson.components.iter().enumerate() {
            if c.log_weight.is_nan() || c.log_weight == f64::INFINITY {
                errs.push(format!("poisson component {k}: log weight {}", c.log_weight));
            }
            if let Some(msg) = covariance_problem(&c.gaussian.cov) {
                errs.push(format!("poisson component {k}: {msg}"));
            }
        }
        for (j, g) in self.globals.iter().enumerate() {
            if g.selection.len() != self.tracks.len() {
                errs.push(format!(
                    "global {j}: selection covers {} of {} tracks",
                    g.selection.len(),
                    self.tracks.len()
                ));
                continue;
            }
            for (t, &h) in self.tracks.iter().zip(&g.selection) {
                if h >= t.hypotheses.len() {
                    errs.push(format!("global {j}: track {} index {h} out of range", t.id));
                }
            }
            if g.log_weight.is_nan() {
                errs.push(format!("global {j}: NaN weight"));
            }
        }
        if errs.is_empty() {
            errs.extend(self.measurement_reuse_violations());
        }
        errs
    }

    /// True when global weights sum to one within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        let lw: Vec<f64> = self.globals.iter().map(|g| g.log_weight).collect();
        log_sum_exp(&lw).abs() <= tol
    }

    /// Measurements claimed by more than one selected hypothesis at the
    /// same scan.
    pub fn measurement_reuse_violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for j in 0..self.globals.len() {
            let mut seen: HashMap<(u32, usize), u64> = HashMap::new();
            for (t, h) in self.selected(j) {
                for rec in &h.history {
                    if let Association::Measurement(p) = rec.association {
                        if let Some(other) = seen.insert((rec.time, p), t.id) {
                            errs.push(format!(
                                "global {j}: measurement {p} at time {} used by tracks {other} and {}",
                                rec.time, t.id
                            ));
                        }
                    }
                }
            }
        }
        errs
    }

    /// Checks that every measurement in `retained` at scan `time` is claimed
    /// by exactly one selected hypothesis, or is explicitly listed as clutter
    /// in `clutter[j]` for global hypothesis `j`.
    pub fn partition_violations(
        &self,
        time: u32,
        retained: &[usize],
        clutter: Option<&[Vec<usize>]>,
    ) -> Vec<String> {
        let mut errs = self.measurement_reuse_violations();
        for j in 0..self.globals.len() {
            let mut count: HashMap<usize, usize> = HashMap::new();
            for (_, h) in self.selected(j) {
                if let Some(p) = h.measurement_at(time) {
                    *count.entry(p).or_default() += 1;
                }
            }
            if let Some(cl) = clutter {
                for &p in &cl[j] {
                    *count.entry(p).or_default() += 1;
                }
            }
            for &p in retained {
                let c = count.get(&p).copied().unwrap_or(0);
                if c != 1 {
                    errs.push(format!(
                        "global {j}: measurement {p} at time {time} explained {c} times"
                    ));
                }
            }
        }
        errs
    }
}

fn covariance_problem(p: &DMatrix<f64>) -> Option<String> {
    let asym = (p - p.transpose()).abs().max();
    let scale = p.abs().max().max(1.0);
    if asym > 1e-9 * scale {
        return Some(format!("covariance asymmetry {asym:e}"));
    }
    let trace = p.trace();
    let min_eig = p.clone().symmetric_eigenvalues().min();
    if min_eig < -1e-9 * trace.abs().max(f64::MIN_POSITIVE) {
        return Some(format!("covariance eigenvalue {min_eig:e}"));
    }
    None
}

/// `ln r` and `ln(1 - r)`, shared by the MBM01 expansion and the
/// estimators so both produce bit-identical weights.
#[inline]
pub(crate) fn log_existence(r: f64, exists: bool) -> f64 {
    if exists {
        r.ln()
    } else {
        (1.0 - r).ln()
    }
}

impl Mbm {
    pub fn empty() -> Self {
        Mbm {
            hypotheses: vec![MbmHypothesis {
                log_weight: 0.0,
                bernoullis: Vec::new(),
            }],
        }
    }

    fn normalized_weights(&self) -> Vec<f64> {
        let lw: Vec<f64> = self.hypotheses.iter().map(|h| h.log_weight).collect();
        let total = log_sum_exp(&lw);
        lw.iter().map(|w| (w - total).exp()).collect()
    }

    /// Expansion into components whose Bernoullis have existence 0 or 1.
    /// Hypothesis `j` contributes `2^{n_j}` components, `n_j` being its
    /// number of Bernoullis with existence strictly inside (0, 1).
    pub fn to_mbm01(&self) -> Vec<Mbm01Component> {
        let mut out = Vec::new();
        for (j, hyp) in self.hypotheses.iter().enumerate() {
            let uncertain: Vec<usize> = hyp
                .bernoullis
                .iter()
                .enumerate()
                .filter(|(_, b)| b.existence > 0.0 && b.existence < 1.0)
                .map(|(i, _)| i)
                .collect();
            assert!(uncertain.len() < 63, "too many uncertain Bernoullis to expand");
            for mask in 0u64..(1u64 << uncertain.len()) {
                let mut log_weight = hyp.log_weight;
                let mut present = Vec::new();
                for (i, b) in hyp.bernoullis.iter().enumerate() {
                    if b.existence >= 1.0 {
                        present.push(i);
                    } else if let Some(bit) = uncertain.iter().position(|&u| u == i) {
                        let exists = mask & (1 << bit) != 0;
                        log_weight += log_existence(b.existence, exists);
                        if exists {
                            present.push(i);
                        }
                    }
                }
                out.push(Mbm01Component {
                    log_weight,
                    deterministic_targets: present
                        .iter()
                        .map(|&i| hyp.bernoullis[i].density.clone())
                        .collect(),
                    source: j,
                    present,
                });
            }
        }
        out
    }

    /// Weighted mixture of per-hypothesis Poisson-binomial pmfs.
    pub fn cardinality_distribution(&self) -> CardinalityPmf {
        let weights = self.normalized_weights();
        let mut total = vec![0.0];
        for (w, hyp) in weights.iter().zip(&self.hypotheses) {
            if *w == 0.0 {
                continue;
            }
            let pmf = bernoulli_sum_pmf(hyp.bernoullis.iter().map(|b| b.existence));
            if pmf.len() > total.len() {
                total.resize(pmf.len(), 0.0);
            }
            for (n, p) in pmf.iter().enumerate() {
                total[n] += w * p;
            }
        }
        CardinalityPmf {
            probabilities: total,
        }
    }
}

/// Pmf of a sum of independent Bernoullis, by repeated convolution.
/// Components with zero existence do not lengthen the support.
fn bernoulli_sum_pmf(existences: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for r in existences {
        if r <= 0.0 {
            continue;
        }
        let mut next = vec![0.0; pmf.len() + 1];
        for (n, p) in pmf.iter().enumerate() {
            next[n] += p * (1.0 - r);
            next[n + 1] += p * r;
        }
        pmf = next;
    }
    pmf
}

/// Union of two independent MBM-distributed sets: one hypothesis per pair,
/// concatenating Bernoullis and adding log weights.
pub fn mbm_union(a: &Mbm, b: &Mbm) -> Mbm {
    let mut hypotheses = Vec::with_capacity(a.hypotheses.len() * b.hypotheses.len());
    for ha in &a.hypotheses {
        for hb in &b.hypotheses {
            let mut bernoullis = ha.bernoullis.clone();
            bernoullis.extend(hb.bernoullis.iter().cloned());
            hypotheses.push(MbmHypothesis {
                log_weight: ha.log_weight + hb.log_weight,
                bernoullis,
            });
        }
    }
    Mbm { hypotheses }
}

impl CardinalityPmf {
    /// Most probable count; ties go to the smaller count.
    pub fn map_estimate(&self) -> usize {
        let mut best = 0;
        for (n, p) in self.probabilities.iter().enumerate() {
            if *p > self.probabilities[best] {
                best = n;
            }
        }
        best
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// JSON dump format
// ---------------------------------------------------------------------------

mod log_weight_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad log weight {other:?}"))),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GaussianDto {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ComponentDto {
    #[serde(with = "log_weight_serde")]
    log_weight: f64,
    #[serde(flatten)]
    gaussian: GaussianDto,
}

#[derive(Serialize, Deserialize)]
struct HypothesisDto {
    #[serde(with = "log_weight_serde")]
    log_weight: f64,
    existence: f64,
    #[serde(flatten)]
    gaussian: GaussianDto,
    /// `(time, measurement index)`, with `-1` for a missed detection.
    history: Vec<(u32, i64)>,
    parent: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct TrackDto {
    id: u64,
    birth_time: u32,
    birth_measurement: usize,
    hypotheses: Vec<HypothesisDto>,
}

#[derive(Serialize, Deserialize)]
struct GlobalDto {
    #[serde(with = "log_weight_serde")]
    log_weight: f64,
    selection: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DensityDto {
    time: u32,
    next_track_id: u64,
    poisson: Vec<ComponentDto>,
    tracks: Vec<TrackDto>,
    globals: Vec<GlobalDto>,
}

impl From<&Gaussian> for GaussianDto {
    fn from(g: &Gaussian) -> Self {
        GaussianDto {
            mean: g.mean.iter().copied().collect(),
            cov: (0..g.cov.nrows())
                .map(|i| g.cov.row(i).iter().copied().collect())
                .collect(),
        }
    }
}

impl GaussianDto {
    fn into_gaussian(self) -> Result<Gaussian> {
        let n = self.mean.len();
        if self.cov.len() != n || self.cov.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("covariance shape in JSON".into()));
        }
        let flat: Vec<f64> = self.cov.into_iter().flatten().collect();
        Gaussian::new(DVector::from_vec(self.mean), DMatrix::from_row_slice(n, n, &flat))
    }
}

impl PmbmDensity {
    /// JSON dump with fields `poisson`, `tracks` and `globals`; weights are
    /// in the log domain and non-finite values are written as strings.
    pub fn to_json(&self) -> String {
        let dto = DensityDto {
            time: self.time,
            next_track_id: self.next_track_id,
            poisson: self
                .poisson
                .components
                .iter()
                .map(|c| ComponentDto {
                    log_weight: c.log_weight,
                    gaussian: (&c.gaussian).into(),
                })
                .collect(),
            tracks: self
                .tracks
                .iter()
                .map(|t| TrackDto {
                    id: t.id,
                    birth_time: t.birth_time,
                    birth_measurement: t.birth_measurement,
                    hypotheses: t
                        .hypotheses
                        .iter()
                        .map(|h| HypothesisDto {
                            log_weight: h.log_weight,
                            existence: h.existence(),
                            gaussian: (&h.bernoulli.density).into(),
                            history: h
                                .history
                                .iter()
                                .map(|r| match r.association {
                                    Association::Miss => (r.time, -1),
                                    Association::Measurement(p) => (r.time, p as i64),
                                })
                                .collect(),
                            parent: h.parent,
                        })
                        .collect(),
                })
                .collect(),
            globals: self
                .globals
                .iter()
                .map(|g| GlobalDto {
                    log_weight: g.log_weight,
                    selection: g.selection.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&dto).expect("density serialises")
    }

    pub fn from_json(s: &str) -> Result<PmbmDensity> {
        let dto: DensityDto =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let poisson = dto
            .poisson
            .into_iter()
            .map(|c| Ok(WeightedGaussian::new(c.log_weight, c.gaussian.into_gaussian()?)))
            .collect::<Result<Vec<_>>>()?;
        let tracks = dto
            .tracks
            .into_iter()
            .map(|t| {
                let hypotheses = t
                    .hypotheses
                    .into_iter()
                    .map(|h| {
                        Ok(SingleTargetHypothesis {
                            bernoulli: BernoulliComponent {
                                existence: h.existence,
                                density: h.gaussian.into_gaussian()?,
                            },
                            log_weight: h.log_weight,
                            history: h
                                .history
                                .into_iter()
                                .map(|(time, p)| AssociationRecord {
                                    time,
                                    association: if p < 0 {
                                        Association::Miss
                                    } else {
                                        Association::Measurement(p as usize)
                                    },
                                })
                                .collect(),
                            parent: h.parent,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Track {
                    id: t.id,
                    hypotheses,
                    birth_time: t.birth_time,
                    birth_measurement: t.birth_measurement,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PmbmDensity {
            poisson: GaussianMixture::new(poisson)?,
            tracks,
            globals: dto
                .globals
                .into_iter()
                .map(|g| GlobalHypothesis {
                    log_weight: g.log_weight,
                    selection: g.selection,
                })
                .collect(),
            time: dto.time,
            next_track_id: dto.next_track_id,
        })
    }
}
