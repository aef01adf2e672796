//! Browser bindings: Hecke limit sets, synthetic density traces, gauge verdicts.
//! Every entry point returns a JSON string.

use cuspidal::dichotomy::{predict_theorem1, synthetic_density_trace, ExcursionModel};
use cuspidal::gauge::{GaugeSpec, BASIS};
use cuspidal::group::{enumerate_orbit, estimate_delta, sample_limit_set, GroupSpec};
use cuspidal::real::Real;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const ORBIT_CAP: usize = 200_000;

#[derive(Serialize)]
pub struct LimitSetView {
    pub lambda: f64,
    pub t_max: f64,
    pub delta: f64,
    pub stderr: f64,
    pub orbit_points: usize,
    /// Ball coordinates of orbit points, thinned to at most `samples`.
    pub orbit: Vec<[f64; 2]>,
    pub limit: Vec<[f64; 2]>,
}

fn xy(c: &[f64]) -> [f64; 2] {
    [c[0], c[1]]
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn limit_set_view(lambda: f64, t_max: f64, samples: usize, seed: u64) -> Result<LimitSetView, String> {
    if !(2.0..=12.0).contains(&lambda) {
        return Err(format!("lambda = {lambda} outside [2, 12]"));
    }
    if !(4.0..=14.0).contains(&t_max) {
        return Err(format!("T = {t_max} outside [4, 14]"));
    }
    let g = GroupSpec::hecke(lambda);
    let orbit = enumerate_orbit(&g, t_max, ORBIT_CAP).map_err(err)?;
    let est = estimate_delta(&orbit, (0.5 * t_max, t_max)).map_err(err)?;
    let step = orbit.entries.len().div_ceil(samples.max(1));
    let pts = orbit.entries.iter().step_by(step.max(1)).map(|e| xy(&e.point.coords())).collect();
    let limit = sample_limit_set(&g, 14, samples, seed).map_err(err)?.iter().map(|p| xy(&p.coords())).collect();
    Ok(LimitSetView {
        lambda,
        t_max,
        delta: est.delta,
        stderr: est.stderr,
        orbit_points: orbit.len(),
        orbit: pts,
        limit,
    })
}

#[derive(Serialize)]
pub struct TraceView {
    pub t: Vec<f64>,
    pub log_density: Vec<f64>,
    pub hausdorff: String,
    pub packing: String,
    pub summand: Option<String>,
}

fn parse_real(s: &str) -> Result<Real, String> {
    s.parse().map_err(err)
}

fn gauge(delta: &str, coefficients: &str) -> Result<GaugeSpec, String> {
    let words: Vec<&str> = coefficients.split_whitespace().collect();
    if words.len() > BASIS {
        return Err(format!("at most {BASIS} coefficients"));
    }
    let mut c: [Real; BASIS] = Default::default();
    for (slot, w) in c.iter_mut().zip(&words) {
        *slot = parse_real(w)?;
    }
    GaugeSpec::new(parse_real(delta)?, c).map_err(err)
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Synthetic two-cusp trace under the gauge with coefficients
/// `c_lin c_log c_loglog c_logloglog c_log4 c_const` (missing ones are 0).
pub fn trace_view(delta: &str, coefficients: &str, kmin: &str, kmax: &str, duration: f64, seed: u64) -> Result<TraceView, String> {
    if !(1.0..=20_000.0).contains(&duration) {
        return Err(format!("duration {duration} outside [1, 20000]"));
    }
    let g = gauge(delta, coefficients)?;
    let (kmin, kmax) = (parse_real(kmin)?, parse_real(kmax)?);
    let model = ExcursionModel::two_cusp(g.delta, kmin, kmax, seed).map_err(err)?;
    let trace = synthetic_density_trace(&model, &g, duration).map_err(err)?;
    let v = predict_theorem1(&g, kmin, kmax).map_err(err)?;
    let (t, log_density) = trace.resolved().unzip();
    let summand = v.hausdorff_series.as_ref().or(v.packing_series.as_ref()).and_then(|s| s.trace.first().cloned());
    Ok(TraceView { t, log_density, hausdorff: label(&v.hausdorff), packing: label(&v.packing), summand })
}

pub fn verdict_json(delta: &str, coefficients: &str, kmin: &str, kmax: &str) -> Result<String, String> {
    let g = gauge(delta, coefficients)?;
    let v = predict_theorem1(&g, parse_real(kmin)?, parse_real(kmax)?).map_err(err)?;
    serde_json::to_string(&v).map_err(err)
}

fn js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(err)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn limit_set(lambda: f64, t_max: f64, samples: usize, seed: u64) -> Result<String, JsValue> {
    js(limit_set_view(lambda, t_max, samples, seed))
}

#[wasm_bindgen]
pub fn density_trace(delta: &str, coefficients: &str, kmin: &str, kmax: &str, duration: f64, seed: u64) -> Result<String, JsValue> {
    js(trace_view(delta, coefficients, kmin, kmax, duration, seed))
}

#[wasm_bindgen]
pub fn classify(delta: &str, coefficients: &str, kmin: &str, kmax: &str) -> Result<String, JsValue> {
    verdict_json(delta, coefficients, kmin, kmax).map_err(|e| JsValue::from_str(&e))
}
