//! Brute-force reference computations for tiny instances.
//!
//! Nothing here shares code with the filter beyond the data types. Sums
//! run in the linear domain and densities are evaluated with an explicit
//! inverse and determinant.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::assignment::{Assignment, CostMatrix};
use crate::density::{
    BernoulliComponent, GlobalHypothesis, PmbmDensity, SingleTargetHypothesis, Track,
};
use crate::gaussian::{Gaussian, GaussianMixture, LinearGaussianModel, WeightedGaussian};
use crate::metrics::OspaParams;

/// `N(x; mean, cov)` by the textbook formula.
pub fn normal_pdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let k = x.len() as f64;
    let inv = cov.clone().try_inverse().expect("covariance must be invertible");
    let d = x - mean;
    let q = (d.transpose() * inv * &d)[(0, 0)];
    (-0.5 * q).exp() / ((2.0 * PI).powf(k) * cov.determinant()).sqrt()
}

/// Single-measurement likelihood `p(z | x)`.
fn meas_pdf(z: &DVector<f64>, x: &DVector<f64>, m: &LinearGaussianModel) -> f64 {
    normal_pdf(z, &(&m.observation * x), &m.measurement_noise)
}

/// Predicted measurement density `N(z; H mean, H P H' + R)`.
fn predictive_pdf(z: &DVector<f64>, g: &Gaussian, m: &LinearGaussianModel) -> f64 {
    let h = &m.observation;
    let s = h * &g.cov * h.transpose() + &m.measurement_noise;
    normal_pdf(z, &(h * &g.mean), &s)
}

/// Every function from `0..len` into `0..base`, as digit vectors.
fn all_functions(len: usize, base: usize) -> Vec<Vec<usize>> {
    let total = base.pow(len as u32);
    (0..total)
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let d = code % base;
                    code /= base;
                    d
                })
                .collect()
        })
        .collect()
}

/// Standard point-target likelihood `l(Z | X)` summed over every way of
/// splitting `Z` into clutter and one cell per target. Returns the total
/// and each association term; cell assignments putting more than one
/// measurement on a target contribute a zero term.
pub fn likelihood_direct_terms(
    z: &[DVector<f64>],
    x: &[DVector<f64>],
    m: &LinearGaussianModel,
) -> (f64, Vec<f64>) {
    let n = x.len();
    let mut terms = Vec::new();
    // Digit 0 is clutter, digit i + 1 is target i.
    for f in all_functions(z.len(), n + 1) {
        let mut counts = vec![0usize; n];
        for &c in &f {
            if c > 0 {
                counts[c - 1] += 1;
            }
        }
        if counts.iter().any(|&c| c > 1) {
            terms.push(0.0);
            continue;
        }
        let mut term = (-m.clutter_rate).exp();
        for (p, &c) in f.iter().enumerate() {
            term *= if c == 0 {
                m.clutter_density
            } else {
                m.p_detection * meas_pdf(&z[p], &x[c - 1], m)
            };
        }
        for count in counts {
            if count == 0 {
                term *= 1.0 - m.p_detection;
            }
        }
        terms.push(term);
    }
    (terms.iter().sum(), terms)
}

pub fn likelihood_direct(z: &[DVector<f64>], x: &[DVector<f64>], m: &LinearGaussianModel) -> f64 {
    likelihood_direct_terms(z, x, m).0
}

/// The same likelihood summed over splits of `X` into undetected targets
/// and one source cell per measurement.
pub fn likelihood_decomposed(
    z: &[DVector<f64>],
    x: &[DVector<f64>],
    m: &LinearGaussianModel,
) -> f64 {
    let mm = z.len();
    let mut total = 0.0;
    // Digit 0 is undetected, digit p + 1 is "source of measurement p".
    for f in all_functions(x.len(), mm + 1) {
        let mut source: Vec<Option<usize>> = vec![None; mm];
        let mut ok = true;
        for (i, &c) in f.iter().enumerate() {
            if c > 0 {
                if source[c - 1].is_some() {
                    ok = false;
                    break;
                }
                source[c - 1] = Some(i);
            }
        }
        if !ok {
            continue;
        }
        let mut term = (-m.clutter_rate).exp();
        for &c in &f {
            if c == 0 {
                term *= 1.0 - m.p_detection;
            }
        }
        for (p, s) in source.iter().enumerate() {
            term *= match s {
                Some(i) => m.p_detection * meas_pdf(&z[p], &x[*i], m),
                None => m.clutter_density,
            };
        }
        total += term;
    }
    total
}

/// The partitioned form: targets split into a free set `y` and blocks of
/// at most one target each. Measurements go either to `y` (including
/// clutter) or to a block, at most one per block.
pub fn likelihood_lo(
    z: &[DVector<f64>],
    y: &[DVector<f64>],
    blocks: &[Option<DVector<f64>>],
    m: &LinearGaussianModel,
) -> f64 {
    let n = blocks.len();
    let mut total = 0.0;
    // Digit 0 sends the measurement to Z^y, digit i + 1 to block i.
    for f in all_functions(z.len(), n + 1) {
        let mut block_meas: Vec<Option<usize>> = vec![None; n];
        let mut ok = true;
        for (p, &c) in f.iter().enumerate() {
            if c > 0 {
                if block_meas[c - 1].is_some() || blocks[c - 1].is_none() {
                    ok = false;
                    break;
                }
                block_meas[c - 1] = Some(p);
            }
        }
        if !ok {
            continue;
        }
        let zy: Vec<DVector<f64>> = f
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(p, _)| z[p].clone())
            .collect();
        let mut term = likelihood_direct(&zy, y, m);
        for (b, zi) in blocks.iter().zip(&block_meas) {
            term *= match (b, zi) {
                (Some(x), Some(p)) => m.p_detection * meas_pdf(&z[*p], x, m),
                (Some(_), None) => 1.0 - m.p_detection,
                (None, None) => 1.0,
                (None, Some(_)) => 0.0,
            };
        }
        total += term;
    }
    total
}

/// One hypothesis of a prior track in a tiny instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyHypothesis {
    pub existence: f64,
    pub density: Gaussian,
}

/// Small PMBM prior plus one measurement set.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    pub poisson: Vec<(f64, Gaussian)>,
    pub tracks: Vec<Vec<TinyHypothesis>>,
    /// `(weight, hypothesis index per track)`, weights summing to one.
    pub globals: Vec<(f64, Vec<usize>)>,
    pub measurements: Vec<DVector<f64>>,
    pub model: LinearGaussianModel,
}

/// One association event of the exact posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEvent {
    pub parent: usize,
    /// Measurement assigned to each prior track, if any.
    pub track_measurement: Vec<Option<usize>>,
    /// Posterior existence of each prior track under this event.
    pub track_existence: Vec<f64>,
    /// Normalised weight.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePosterior {
    pub events: Vec<OracleEvent>,
    /// Existence of the Bernoulli started by each measurement when no prior
    /// track takes it (zero without a Poisson intensity).
    pub new_existence: Vec<f64>,
    pub log_evidence: f64,
}

/// Exact posterior over association events by enumeration.
pub fn brute_posterior(t: &TinyInstance) -> OraclePosterior {
    let m = &t.model;
    let pd = m.p_detection;
    let c = m.clutter_density;
    let e: Vec<f64> = t
        .measurements
        .iter()
        .map(|z| {
            t.poisson
                .iter()
                .map(|(w, g)| pd * w * predictive_pdf(z, g, m))
                .sum::<f64>()
        })
        .collect();
    let rho_new: Vec<f64> = e.iter().map(|e| c + e).collect();
    let new_existence = e.iter().zip(&rho_new).map(|(e, r)| e / r).collect();

    let n = t.tracks.len();
    let mut events = Vec::new();
    let mut total = 0.0;
    for (j, (wj, sel)) in t.globals.iter().enumerate() {
        // Digit 0: new target or clutter; digit i + 1: prior track i.
        for f in all_functions(t.measurements.len(), n + 1) {
            let mut track_meas: Vec<Option<usize>> = vec![None; n];
            let mut ok = true;
            for (p, &d) in f.iter().enumerate() {
                if d > 0 {
                    if track_meas[d - 1].is_some() {
                        ok = false;
                        break;
                    }
                    track_meas[d - 1] = Some(p);
                }
            }
            if !ok {
                continue;
            }
            let mut w = *wj;
            let mut existence = Vec::with_capacity(n);
            for (i, hyps) in t.tracks.iter().enumerate() {
                let h = &hyps[sel[i]];
                let r = h.existence;
                match track_meas[i] {
                    Some(p) => {
                        w *= r * pd * predictive_pdf(&t.measurements[p], &h.density, m);
                        existence.push(1.0);
                    }
                    None => {
                        let miss = 1.0 - r + r * (1.0 - pd);
                        w *= miss;
                        existence.push(if miss > 0.0 { r * (1.0 - pd) / miss } else { 0.0 });
                    }
                }
            }
            for (p, &d) in f.iter().enumerate() {
                if d == 0 {
                    w *= rho_new[p];
                }
            }
            total += w;
            events.push(OracleEvent {
                parent: j,
                track_measurement: track_meas,
                track_existence: existence,
                weight: w,
            });
        }
    }
    for ev in &mut events {
        ev.weight /= total;
    }
    let mu: f64 = t.poisson.iter().map(|(w, _)| w).sum();
    let log_evidence = total.ln() - m.clutter_rate - pd * mu;
    OraclePosterior {
        events,
        new_existence,
        log_evidence,
    }
}

fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, spread: f64) -> Gaussian {
    let mean = DVector::from_fn(2, |_, _| rng.random_range(-spread..spread));
    let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
    let cov = &a * a.transpose() + DMatrix::identity(2, 2) * rng.random_range(0.3..2.0);
    Gaussian { mean, cov }
}

impl TinyInstance {
    /// Random instance with a 2-D random-walk model, up to two Poisson
    /// components, two tracks of two hypotheses each and two measurements.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> TinyInstance {
        let r_diag = DVector::from_fn(2, |_, _| rng.random_range(0.3..2.0));
        let model = LinearGaussianModel {
            transition: DMatrix::identity(2, 2),
            process_noise: DMatrix::identity(2, 2) * 0.1,
            observation: DMatrix::identity(2, 2),
            measurement_noise: DMatrix::from_diagonal(&r_diag),
            p_survival: 0.99,
            p_detection: rng.random_range(0.3..0.95),
            clutter_rate: rng.random_range(0.5..5.0),
            clutter_density: rng.random_range(0.005..0.2),
            birth: GaussianMixture::empty(),
        };
        let poisson = (0..rng.random_range(0..=2))
            .map(|_| (rng.random_range(0.05..1.5), random_gaussian(rng, 3.0)))
            .collect();
        let tracks: Vec<Vec<TinyHypothesis>> = (0..rng.random_range(0..=2))
            .map(|_| {
                (0..rng.random_range(1..=2))
                    .map(|_| TinyHypothesis {
                        existence: if rng.random_bool(0.25) {
                            1.0
                        } else {
                            rng.random_range(0.05..1.0)
                        },
                        density: random_gaussian(rng, 3.0),
                    })
                    .collect()
            })
            .collect();
        // Every combination of hypotheses, each with a random weight.
        let sizes: Vec<usize> = tracks.iter().map(|t| t.len()).collect();
        let mut selections: Vec<Vec<usize>> = vec![Vec::new()];
        for &s in &sizes {
            selections = selections
                .into_iter()
                .flat_map(|sel| {
                    (0..s).map(move |h| {
                        let mut v = sel.clone();
                        v.push(h);
                        v
                    })
                })
                .collect();
        }
        let raw: Vec<f64> = selections.iter().map(|_| rng.random_range(0.1..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let globals = raw.iter().map(|w| w / sum).zip(selections).collect();
        let measurements = (0..rng.random_range(0..=2))
            .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-4.0..4.0)))
            .collect();
        TinyInstance {
            poisson,
            tracks,
            globals,
            measurements,
            model,
        }
    }

    /// The prior as a filter density at scan 1. Track `i` gets id `i`.
    pub fn to_density(&self) -> PmbmDensity {
        let poisson = GaussianMixture {
            components: self
                .poisson
                .iter()
                .map(|(w, g)| WeightedGaussian::new(w.ln(), g.clone()))
                .collect(),
        };
        let mut d = PmbmDensity::new(poisson);
        d.tracks = self
            .tracks
            .iter()
            .enumerate()
            .map(|(i, hyps)| Track {
                id: i as u64,
                hypotheses: hyps
                    .iter()
                    .map(|h| SingleTargetHypothesis {
                        bernoulli: BernoulliComponent {
                            existence: h.existence,
                            density: h.density.clone(),
                        },
                        log_weight: 0.0,
                        history: Vec::new(),
                        parent: None,
                    })
                    .collect(),
                birth_time: 0,
                birth_measurement: 0,
            })
            .collect();
        d.globals = self
            .globals
            .iter()
            .map(|(w, sel)| GlobalHypothesis {
                log_weight: w.ln(),
                selection: sel.clone(),
            })
            .collect();
        d.time = 1;
        d.next_track_id = self.tracks.len() as u64;
        d
    }
}

/// Every feasible assignment of rows to distinct columns, sorted by cost
/// and then lexicographically by `row_to_col`.
pub fn enumerate_assignments(c: &CostMatrix) -> Vec<Assignment> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(c.rows());
    let mut used = vec![false; c.cols()];
    enumerate_rec(c, &mut current, &mut used, &mut out);
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.row_to_col.cmp(&b.row_to_col)));
    out
}

fn enumerate_rec(
    c: &CostMatrix,
    current: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<Assignment>,
) {
    let row = current.len();
    if row == c.rows() {
        let mut cost = 0.0;
        for (r, &col) in current.iter().enumerate() {
            cost += c.get(r, col);
        }
        out.push(Assignment {
            row_to_col: current.clone(),
            cost,
        });
        return;
    }
    for col in 0..c.cols() {
        if used[col] || !c.get(row, col).is_finite() {
            continue;
        }
        used[col] = true;
        current.push(col);
        enumerate_rec(c, current, used, out);
        current.pop();
        used[col] = false;
    }
}

/// OSPA by minimising over every injection of the smaller set.
pub fn ospa_brute(x: &[DVector<f64>], y: &[DVector<f64>], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    let p = params.order;
    let c = params.cutoff;
    let dist = |a: &DVector<f64>, b: &DVector<f64>| -> f64 {
        let d2: f64 = params
            .position_indices
            .iter()
            .map(|&i| (a[i] - b[i]).powi(2))
            .sum();
        d2.sqrt().min(c).powf(p)
    };
    let mut best = f64::INFINITY;
    for f in all_functions(small.len(), n) {
        let mut seen = HashMap::new();
        if f.iter().any(|&k| seen.insert(k, ()).is_some()) {
            continue;
        }
        let s: f64 = f.iter().enumerate().map(|(i, &k)| dist(&small[i], &large[k])).sum();
        best = best.min(s);
    }
    ((best + c.powf(p) * (n - small.len()) as f64) / n as f64).powf(1.0 / p)
}
