//! Density traces, sandwich verdicts for Hausdorff and packing measures of
//! `mu`, the series predictor, and the Khinchin and synthetic-excursion labs.

mod khinchin;
mod synthetic;

pub use khinchin::*;
pub use synthetic::*;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{
    check_assumptions, classify_hausdorff_series, classify_packing_series, reduce_to_zero_slope, GaugeSpec,
    MeasureValue, SeriesClassification,
};
use crate::hyperbolic::BoundaryPoint;
use crate::measure::{ball_mass, AtomicMeasure};
use crate::real::Real;
use crate::trace::{DensityTrace, TraceSource};

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub hausdorff: MeasureValue,
    pub packing: MeasureValue,
    pub hausdorff_series: Option<SeriesClassification>,
    pub packing_series: Option<SeriesClassification>,
    /// `mu` is a multiple of `H^delta` (resp. `P^delta`) on the limit set.
    pub proportional_to_hausdorff_delta: bool,
    pub proportional_to_packing_delta: bool,
    /// Zero-slope form of the gauge and the slope moved into the exponent.
    pub reduced: GaugeSpec,
    pub slope_shift: Real,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn is_undecided(&self) -> bool {
        self.hausdorff == MeasureValue::Undecided || self.packing == MeasureValue::Undecided
    }
}

/// Series verdicts for `H^psi(mu)` and `P^psi(mu)`. The classifiers run on
/// the gauge as given: a nonzero slope `c_lin` shows up as a first-level
/// exponential factor in the series and decides it outright.
pub fn predict_theorem1(g: &GaugeSpec, kmin: Real, kmax: Real) -> Result<Verdict> {
    if kmin.compare(&kmax) == Some(Ordering::Greater) {
        return Err(Error::Domain(format!("kmin = {kmin} exceeds kmax = {kmax}")));
    }
    let report = check_assumptions(g);
    let (reduced, slope_shift) = reduce_to_zero_slope(g)?;
    let mut notes = Vec::new();
    if !slope_shift.is_zero() {
        notes.push(format!("lim Psi' = {slope_shift}: psi behaves like r^({})", reduced.delta));
    }
    notes.push(format!("Psi eventually {:?}", report.direction).to_lowercase());
    let d = g.delta;
    let below_max = d.compare(&kmax) == Some(Ordering::Less);
    let above_min = d.compare(&kmin) == Some(Ordering::Greater);
    let (hausdorff, hausdorff_series) = if below_max {
        let s = classify_hausdorff_series(g, kmax)?;
        (s.consequence, Some(s))
    } else {
        notes.push(format!("delta = {d} >= kmax = {kmax}: mu is proportional to H^delta"));
        (MeasureValue::NotApplicable, None)
    };
    let (packing, packing_series) = if above_min {
        let s = classify_packing_series(g, kmin)?;
        (s.consequence, Some(s))
    } else {
        notes.push(format!("delta = {d} <= kmin = {kmin}: mu is proportional to P^delta"));
        (MeasureValue::NotApplicable, None)
    };
    Ok(Verdict {
        hausdorff,
        packing,
        hausdorff_series,
        packing_series,
        proportional_to_hausdorff_delta: !below_max,
        proportional_to_packing_delta: !above_min,
        reduced,
        slope_shift,
        notes,
    })
}

/// `log(mu(B(eta, e^-t)) / psi(e^-t))` on `t_grid`. Entries below the
/// measure's resolution, and empty balls, are `None`.
pub fn density_trace(mu: &AtomicMeasure, g: &GaugeSpec, eta: &BoundaryPoint, t_grid: &[f64]) -> Result<DensityTrace> {
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t = {t} must be positive")));
        }
        let r = (-t).exp();
        if r < mu.resolution {
            values.push(None);
            continue;
        }
        let m = ball_mass(mu, eta, r);
        values.push(if m > 0.0 { Some(m.ln() - g.log_psi(r)?) } else { None });
    }
    DensityTrace::new(t_grid.to_vec(), values, TraceSource::Empirical)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RttMode {
    Hausdorff,
    Packing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichVerdict {
    Zero,
    Infinite,
    /// The density stays in a band, as it does for a measure comparable to `H^psi`.
    PositiveFinite,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Drift {
    Up,
    Down,
    Flat,
}

#[derive(Clone, Debug, Serialize)]
pub struct RttReport {
    pub mode: RttMode,
    pub verdict: SandwichVerdict,
    pub drifts: Vec<Drift>,
    /// Range over traces of `-log` of the density proxy, i.e. `log(1/D)`.
    pub log_inverse_density: (f64, f64),
}

/// Drift margin between the deepest window and the one before it.
pub const DRIFT_MARGIN: f64 = 2.0;

fn window_proxy(trace: &DensityTrace, mode: RttMode) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = trace.resolved().collect();
    if pts.len() < 4 {
        return None;
    }
    let (t0, t1) = (pts[0].0, pts[pts.len() - 1].0);
    let mid = 0.5 * (t0 + t1);
    let pick = |lo: f64, hi: f64| {
        let it = pts.iter().filter(move |p| p.0 >= lo && p.0 <= hi).map(|p| p.1);
        match mode {
            RttMode::Hausdorff => it.fold(f64::NEG_INFINITY, f64::max),
            RttMode::Packing => it.fold(f64::INFINITY, f64::min),
        }
    };
    let (early, deep) = (pick(t0, mid), pick(mid, t1));
    (early.is_finite() && deep.is_finite()).then_some((early, deep))
}

/// Hausdorff mode uses the max over the deepest half of each trace as the
/// `limsup` proxy, packing mode the min as the `liminf` proxy. A trace whose
/// proxy moves by more than `DRIFT_MARGIN` from the earlier half drifts.
pub fn rtt_verdict(traces: &[DensityTrace], mode: RttMode) -> Result<RttReport> {
    let proxies: Vec<(f64, f64)> = traces.iter().filter_map(|t| window_proxy(t, mode)).collect();
    if proxies.len() < 20 {
        return Err(Error::InsufficientData(format!("{} resolvable traces, need 20", proxies.len())));
    }
    let drifts: Vec<Drift> = proxies
        .iter()
        .map(|&(early, deep)| {
            if deep - early > DRIFT_MARGIN {
                Drift::Up
            } else if early - deep > DRIFT_MARGIN {
                Drift::Down
            } else {
                Drift::Flat
            }
        })
        .collect();
    let inv: Vec<f64> = proxies.iter().map(|p| -p.1).collect();
    let lo = inv.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = inv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let all = |d: Drift| drifts.iter().all(|&x| x == d);
    // D -> inf makes 1/D vanish on both sides of the sandwich
    let verdict = if all(Drift::Up) {
        SandwichVerdict::Zero
    } else if all(Drift::Down) {
        SandwichVerdict::Infinite
    } else if all(Drift::Flat) {
        SandwichVerdict::PositiveFinite
    } else {
        SandwichVerdict::Undecided
    };
    Ok(RttReport { mode, verdict, drifts, log_inverse_density: (lo, hi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::BASIS;
    use crate::measure::{Atom, Provenance};
    use std::f64::consts::TAU;

    fn uniform(n: usize) -> AtomicMeasure {
        let atoms = (0..n)
            .map(|i| Atom { point: BoundaryPoint::on_circle(TAU * (i as f64 + 0.5) / n as f64), weight: 1.0 / n as f64 })
            .collect();
        AtomicMeasure::new(atoms, Provenance { label: "uniform".into(), s: 0.0, t_max: 0.0 }, 10.0 / n as f64).unwrap()
    }

    #[test]
    fn stratmann_example_and_gates() {
        let d = Real::frac(3, 2);
        let v = predict_theorem1(&GaugeSpec::stratmann(d, Real::int(2)).unwrap(), Real::int(1), Real::int(2)).unwrap();
        assert_eq!(v.hausdorff, MeasureValue::Zero);
        assert_eq!(v.packing, MeasureValue::Infinite);
        let zero = GaugeSpec::power(Real::frac(5, 2)).unwrap();
        let v = predict_theorem1(&zero, Real::int(1), Real::int(2)).unwrap();
        assert_eq!(v.hausdorff, MeasureValue::NotApplicable);
        assert!(v.proportional_to_hausdorff_delta);
        assert_eq!(v.packing, MeasureValue::Infinite);
        let mut c: [Real; BASIS] = Default::default();
        c[1] = Real::int(1);
        let v = predict_theorem1(&GaugeSpec::new(d, c).unwrap(), Real::int(1), Real::int(2)).unwrap();
        assert_eq!((v.hausdorff, v.packing), (MeasureValue::Infinite, MeasureValue::Infinite));
    }

    #[test]
    fn slope_decides_at_first_level() {
        let mut c: [Real; BASIS] = Default::default();
        c[0] = Real::frac(1, 10);
        let g = GaugeSpec::new(Real::frac(3, 2), c).unwrap();
        let v = predict_theorem1(&g, Real::int(1), Real::int(2)).unwrap();
        assert_eq!(v.slope_shift, Real::frac(1, 10));
        assert_eq!(v.reduced.delta, Real::frac(7, 5));
        // psi ~ r^1.4 is much larger than r^1.5
        assert_eq!(v.hausdorff, MeasureValue::Infinite);
        assert_eq!(v.packing, MeasureValue::Infinite);
    }

    #[test]
    fn atom_and_uniform_traces() {
        let eta = BoundaryPoint::on_circle(0.3);
        let atom = AtomicMeasure::new(
            vec![Atom { point: eta, weight: 1.0 }],
            Provenance { label: "atom".into(), s: 0.0, t_max: 0.0 },
            1e-30,
        )
        .unwrap();
        let g = GaugeSpec::power(Real::frac(1, 2)).unwrap();
        let grid: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let tr = density_trace(&atom, &g, &eta, &grid).unwrap();
        for (t, v) in tr.resolved() {
            assert!((v - 0.5 * t).abs() < 1e-9);
        }
        let far = BoundaryPoint::on_circle(1.3);
        let tr = density_trace(&atom, &g, &far, &grid).unwrap();
        assert!(tr.values[5..].iter().all(|v| v.is_none()));

        let mu = uniform(1 << 20);
        let lin = GaugeSpec::power(Real::int(1)).unwrap();
        let grid: Vec<f64> = (0..=50).map(|i| 1.0 + 0.1 * i as f64).collect();
        let tr = density_trace(&mu, &lin, &eta, &grid).unwrap();
        let (lo, hi) = tr.range().unwrap();
        assert!(hi - lo < 0.1, "{lo} {hi}");
    }

    #[test]
    fn sandwich_cases() {
        let g = GaugeSpec::power(Real::frac(1, 2)).unwrap();
        let grid: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let mu = uniform(1 << 16);
        let lin = GaugeSpec::power(Real::int(1)).unwrap();
        let lgrid: Vec<f64> = (0..=40).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mut atoms = Vec::new();
        let mut flat = Vec::new();
        for i in 0..24 {
            let eta = BoundaryPoint::on_circle(0.25 * i as f64);
            let a = AtomicMeasure::new(
                vec![Atom { point: eta, weight: 2.0 }],
                Provenance { label: "atom".into(), s: 0.0, t_max: 0.0 },
                1e-30,
            )
            .unwrap();
            atoms.push(density_trace(&a, &g, &eta, &grid).unwrap());
            flat.push(density_trace(&mu, &lin, &eta, &lgrid).unwrap());
        }
        assert_eq!(rtt_verdict(&atoms, RttMode::Hausdorff).unwrap().verdict, SandwichVerdict::Zero);
        assert_eq!(rtt_verdict(&flat, RttMode::Hausdorff).unwrap().verdict, SandwichVerdict::PositiveFinite);
        assert_eq!(rtt_verdict(&flat, RttMode::Packing).unwrap().verdict, SandwichVerdict::PositiveFinite);
        assert!(matches!(rtt_verdict(&flat[..5], RttMode::Packing), Err(Error::InsufficientData(_))));
    }
}
