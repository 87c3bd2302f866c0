use pmbm_core::filter::{predict, prune, update_unpruned};
use pmbm_core::metrics::ospa;
use pmbm_core::scenario::{generate_measurements, generate_trajectories, stream_rng};
use pmbm_core::{Estimator, FilterParams, GaussianMixture, OspaParams, PmbmDensity, ScenarioConfig};

/// Runs the filter over the published scenario and checks every structural
/// invariant after each update and each pruning. Returns the violations.
pub fn paper_run_violations(p_detection: f64, run: u64) -> Vec<String> {
    let mut cfg = ScenarioConfig::default();
    cfg.model.p_detection = p_detection;
    let model = cfg.model();
    let params = FilterParams::default();
    let ospa_params = OspaParams::default();
    let truth = generate_trajectories(&cfg).unwrap();
    let meas =
        generate_measurements(&truth, &model, &cfg.area, &mut stream_rng(cfg.seed, run + 1)).unwrap();

    let mut errs = Vec::new();
    let mut d = PmbmDensity::new(GaussianMixture::empty());
    for (k, z) in meas.steps.iter().enumerate() {
        let step = k + 1;
        let predicted = predict(&d, &model).unwrap();
        if predicted.tracks.len() != d.tracks.len() || predicted.globals.len() != d.globals.len() {
            errs.push(format!("step {step}: prediction changed the hypothesis structure"));
        }
        let out = update_unpruned(&predicted, z, &model, &params).unwrap();
        let tag = |stage: &str, m: String| format!("step {step} ({stage}): {m}");
        errs.extend(out.density.invariant_violations().into_iter().map(|m| tag("update", m)));
        errs.extend(
            out.density
                .partition_violations(predicted.time, &out.retained, Some(&out.clutter))
                .into_iter()
                .map(|m| tag("update", m)),
        );
        if !out.density.is_normalized(1e-9) {
            errs.push(tag("update", "weights not normalised".into()));
        }
        d = prune(&out.density, &params);
        errs.extend(d.invariant_violations().into_iter().map(|m| tag("prune", m)));
        if !d.is_normalized(1e-9) {
            errs.push(tag("prune", "weights not normalised".into()));
        }
        if d.globals.len() > params.max_globals {
            errs.push(tag("prune", format!("{} global hypotheses", d.globals.len())));
        }

        let truth_states = truth.states_at(step);
        for e in Estimator::ALL {
            let est = e.estimate(&d, params.estimator_threshold).unwrap().means();
            let a = ospa(&est, &truth_states, &ospa_params);
            let b = ospa(&truth_states, &est, &ospa_params);
            if a != b || !(0.0..=ospa_params.cutoff).contains(&a) {
                errs.push(tag("ospa", format!("estimator {e}: {a} vs {b}")));
            }
            if ospa(&est, &est, &ospa_params) != 0.0 {
                errs.push(tag("ospa", format!("estimator {e}: nonzero self distance")));
            }
            let mut reversed = est.clone();
            reversed.reverse();
            if (ospa(&reversed, &truth_states, &ospa_params) - a).abs() > 1e-9 {
                errs.push(tag("ospa", format!("estimator {e}: order dependent")));
            }
        }
    }
    errs
}
