//! Synthetic cusp excursions. Along a simulated geodesic the log-density is
//! `(delta_psi - delta) t + b(t)(k - delta) - Psi(t)` where `b` is the tent
//! of the current excursion and `k` the rank of its cusp.
//!
//! Cycles are a unit gap followed by one excursion into cusp `p` (chosen by
//! weight) of peak depth `D ~ Exp(2 delta - k_p)`, so that the depth passes
//! `log 1/phi` with probability `phi^(2 delta - k_p)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use super::{RttMode, DRIFT_MARGIN};
use crate::error::{Error, Result};
use crate::gauge::{basis, GaugeSpec, MeasureValue, BASIS};
use crate::group::linear_fit;
use crate::real::Real;
use crate::trace::{DensityTrace, TraceSource};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspClass {
    pub rank: Real,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcursionModel {
    pub delta: Real,
    pub cusps: Vec<CuspClass>,
    pub gap: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Excursion {
    pub cusp: usize,
    pub start: f64,
    pub depth: f64,
}

impl Excursion {
    pub fn end(&self) -> f64 {
        self.start + 2.0 * self.depth
    }

    pub fn tent(&self, t: f64) -> f64 {
        (t - self.start).min(self.end() - t).max(0.0)
    }
}

impl ExcursionModel {
    pub fn new(delta: Real, cusps: Vec<CuspClass>, gap: f64, seed: u64) -> Result<Self> {
        if !(delta.value() > 0.0) {
            return Err(Error::Domain(format!("delta = {delta} must be positive")));
        }
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::Domain(format!("gap = {gap} must be positive")));
        }
        if cusps.is_empty() {
            return Err(Error::Configuration("at least one cusp class".into()));
        }
        for c in &cusps {
            if c.rank.value() < 1.0 {
                return Err(Error::Domain(format!("rank {} below 1", c.rank)));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::Domain(format!("weight {} must be positive", c.weight)));
            }
            let margin = delta.mul(Real::int(2)).sub(c.rank);
            if margin.is_zero() {
                return Err(Error::DegenerateRank(format!("2 delta = k = {}: boundary case", c.rank)));
            }
            if margin.value() < 0.0 {
                return Err(Error::Domain(format!("rank {} exceeds 2 delta", c.rank)));
            }
        }
        Ok(Self { delta, cusps, gap, seed })
    }

    /// Two cusp classes of ranks `kmin` and `kmax`, equal weights, unit gap.
    pub fn two_cusp(delta: Real, kmin: Real, kmax: Real, seed: u64) -> Result<Self> {
        Self::new(delta, vec![CuspClass { rank: kmin, weight: 0.5 }, CuspClass { rank: kmax, weight: 0.5 }], 1.0, seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn depth_rate(&self, cusp: usize) -> f64 {
        2.0 * self.delta.value() - self.cusps[cusp].rank.value()
    }

    pub fn excursions(&self) -> Excursions {
        let total: f64 = self.cusps.iter().map(|c| c.weight).sum();
        let mut acc = 0.0;
        let cumulative = self
            .cusps
            .iter()
            .map(|c| {
                acc += c.weight / total;
                acc
            })
            .collect();
        let laws = (0..self.cusps.len()).map(|p| Exp::new(self.depth_rate(p)).expect("positive rate")).collect();
        Excursions { rng: ChaCha8Rng::seed_from_u64(self.seed), cumulative, laws, gap: self.gap, clock: 0.0 }
    }

    fn ranks(&self) -> Vec<f64> {
        self.cusps.iter().map(|c| c.rank.value()).collect()
    }
}

pub struct Excursions {
    rng: ChaCha8Rng,
    cumulative: Vec<f64>,
    laws: Vec<Exp<f64>>,
    gap: f64,
    clock: f64,
}

impl Iterator for Excursions {
    type Item = Excursion;

    fn next(&mut self) -> Option<Excursion> {
        let u: f64 = self.rng.gen();
        let cusp = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1);
        let depth = self.laws[cusp].sample(&mut self.rng);
        let start = self.clock + self.gap;
        let e = Excursion { cusp, start, depth };
        self.clock = e.end();
        Some(e)
    }
}

struct Evaluator {
    psi: [f64; BASIS],
    drift: f64,
    excess: Vec<f64>,
}

impl Evaluator {
    fn new(delta: f64, ranks: &[f64], g: &GaugeSpec) -> Self {
        Self {
            psi: g.coefficients().map(|c| c.value()),
            drift: g.delta.value() - delta,
            excess: ranks.iter().map(|k| k - delta).collect(),
        }
    }

    fn at(&self, t: f64, active: Option<&Excursion>) -> f64 {
        let bump = active.map_or(0.0, |e| e.tent(t) * self.excess[e.cusp]);
        let psi: f64 = self.psi.iter().zip(basis(t)).map(|(c, b)| c * b).sum();
        self.drift * t + bump - psi
    }
}

/// Trace along an explicit history on `(0, t_end]`, sampled at unit times
/// and at the entry, peak and exit of every excursion. Overlapping
/// excursions are rejected.
pub fn trace_from_excursions(
    delta: Real,
    ranks: &[Real],
    g: &GaugeSpec,
    history: &[Excursion],
    t_end: f64,
) -> Result<DensityTrace> {
    if !(t_end > 0.0) {
        return Err(Error::Domain(format!("duration {t_end} must be positive")));
    }
    for (i, e) in history.iter().enumerate() {
        if e.cusp >= ranks.len() {
            return Err(Error::Domain(format!("excursion {i} names cusp {} of {}", e.cusp, ranks.len())));
        }
        if !(e.depth >= 0.0 && e.start >= 0.0) {
            return Err(Error::Domain(format!("excursion {i} has negative start or depth")));
        }
    }
    for (i, w) in history.windows(2).enumerate() {
        if w[1].start < w[0].end() {
            return Err(Error::InvariantViolation(format!("excursions {i} and {} overlap", i + 1)));
        }
    }
    let ranks: Vec<f64> = ranks.iter().map(|k| k.value()).collect();
    let ev = Evaluator::new(delta.value(), &ranks, g);
    let mut times: Vec<f64> = (1..=t_end.floor() as usize).map(|i| i as f64).collect();
    for e in history {
        times.extend([e.start, e.start + e.depth, e.end()].into_iter().filter(|&t| t <= t_end));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut cursor = 0;
    let (t, values): (Vec<f64>, Vec<Option<f64>>) = times
        .into_iter()
        .map(|t| {
            while cursor < history.len() && history[cursor].end() < t {
                cursor += 1;
            }
            let active = history.get(cursor).filter(|e| e.start <= t);
            (t, Some(ev.at(t, active)))
        })
        .unzip();
    DensityTrace::new(t, values, TraceSource::Synthetic)
}

/// Simulated trace up to time `duration`.
pub fn synthetic_density_trace(model: &ExcursionModel, g: &GaugeSpec, duration: f64) -> Result<DensityTrace> {
    let history: Vec<Excursion> = model.excursions().take_while(|e| e.start <= duration).collect();
    let ranks: Vec<Real> = model.cusps.iter().map(|c| c.rank).collect();
    trace_from_excursions(model.delta, &ranks, g, &history, duration)
}

#[derive(Clone, Debug, Serialize)]
pub struct SyntheticVerdict {
    pub mode: RttMode,
    /// `H^psi(mu)` or `P^psi(mu)` as read off the drift.
    pub measure: MeasureValue,
    /// Fitted change of the window extremes between the first and last window.
    pub drift: f64,
    /// `(log t at window end, extreme)` per dyadic window of events.
    pub windows: Vec<(f64, f64)>,
}

/// First dyadic window, in events.
pub const FIRST_WINDOW: usize = 64;

/// Streams `events` excursions and fits a line through the max (Hausdorff)
/// and the min (packing) of the trace over dyadic windows of events,
/// against `log t`. `H^psi = oo` needs the maxima to fall by more than
/// `DRIFT_MARGIN` and `P^psi = 0` needs the minima to rise by more than
/// it; anything else is read as the other side of the 0-oo law.
pub fn synthetic_drift_verdicts(model: &ExcursionModel, g: &GaugeSpec, events: usize) -> Result<[SyntheticVerdict; 2]> {
    if events < 4 * FIRST_WINDOW {
        return Err(Error::InsufficientData(format!("{events} events, need {}", 4 * FIRST_WINDOW)));
    }
    let ranks = model.ranks();
    let d = model.delta.value();
    let ev = Evaluator::new(d, &ranks, g);
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut next_edge = 2 * FIRST_WINDOW;
    for (i, e) in model.excursions().take(events).enumerate().skip(FIRST_WINDOW - 1) {
        for t in [e.start, e.start + e.depth, e.end()] {
            let v = ev.at(t, Some(&e));
            hi = hi.max(v);
            lo = lo.min(v);
        }
        if i + 1 == next_edge || i + 1 == events {
            let x = e.end().ln();
            maxima.push((x, hi));
            minima.push((x, lo));
            (hi, lo) = (f64::NEG_INFINITY, f64::INFINITY);
            next_edge *= 2;
        }
    }
    let verdict = |mode: RttMode, windows: Vec<(f64, f64)>| {
        let applies = ranks.iter().any(|&k| match mode {
            RttMode::Hausdorff => k > d,
            RttMode::Packing => k < d,
        });
        let drift = fitted_change(&windows);
        let measure = match mode {
            _ if !applies => MeasureValue::NotApplicable,
            RttMode::Hausdorff if drift < -DRIFT_MARGIN => MeasureValue::Infinite,
            RttMode::Hausdorff => MeasureValue::Zero,
            RttMode::Packing if drift > DRIFT_MARGIN => MeasureValue::Zero,
            RttMode::Packing => MeasureValue::Infinite,
        };
        SyntheticVerdict { mode, measure, drift, windows }
    };
    Ok([verdict(RttMode::Hausdorff, maxima), verdict(RttMode::Packing, minima)])
}

pub fn synthetic_drift_verdict(model: &ExcursionModel, g: &GaugeSpec, events: usize, mode: RttMode) -> Result<SyntheticVerdict> {
    let [h, p] = synthetic_drift_verdicts(model, g, events)?;
    Ok(match mode {
        RttMode::Hausdorff => h,
        RttMode::Packing => p,
    })
}

fn fitted_change(pts: &[(f64, f64)]) -> f64 {
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    if !(hi > lo) {
        return 0.0;
    }
    linear_fit(pts).slope * (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stratmann() -> GaugeSpec {
        GaugeSpec::stratmann(Real::frac(3, 2), Real::int(2)).unwrap()
    }

    #[test]
    fn no_excursions_is_minus_psi() {
        let g = stratmann();
        let tr = trace_from_excursions(Real::frac(3, 2), &[Real::int(2)], &g, &[], 50.0).unwrap();
        assert_eq!(tr.t.len(), 50);
        for (t, v) in tr.resolved() {
            assert_eq!(v, -g.big_psi(t));
        }
    }

    #[test]
    fn single_bump_is_a_tent() {
        let g = GaugeSpec::power(Real::frac(3, 2)).unwrap();
        let e = Excursion { cusp: 0, start: 3.5, depth: 4.0 };
        let tr = trace_from_excursions(Real::frac(3, 2), &[Real::int(2)], &g, &[e], 20.0).unwrap();
        for (t, v) in tr.resolved() {
            let expect = if (3.5..=11.5).contains(&t) { 0.5 * (t - 3.5).min(11.5 - t) } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "t={t}");
        }
        assert!(tr.resolved().any(|(t, v)| t == 7.5 && (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn ranks_at_delta_leave_minus_psi() {
        let g = stratmann();
        let m = ExcursionModel::new(Real::frac(3, 2), vec![CuspClass { rank: Real::frac(3, 2), weight: 1.0 }], 1.0, 9).unwrap();
        let tr = synthetic_density_trace(&m, &g, 200.0).unwrap();
        for (t, v) in tr.resolved() {
            assert_eq!(v, -g.big_psi(t));
        }
    }

    #[test]
    fn overlap_and_boundary_are_rejected() {
        let g = stratmann();
        let a = Excursion { cusp: 0, start: 1.0, depth: 2.0 };
        let b = Excursion { cusp: 0, start: 4.0, depth: 1.0 };
        let err = trace_from_excursions(Real::frac(3, 2), &[Real::int(2)], &g, &[a, b], 10.0).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
        assert!(matches!(ExcursionModel::two_cusp(Real::int(1), Real::int(1), Real::int(2), 0), Err(Error::DegenerateRank(_))));
    }

    #[test]
    fn depth_tail_matches_rate() {
        let m = ExcursionModel::two_cusp(Real::frac(3, 2), Real::int(1), Real::int(2), 4).unwrap();
        let xs: Vec<Excursion> = m.excursions().take(200_000).collect();
        for (p, rate) in [(0, 2.0), (1, 1.0)] {
            let ds: Vec<f64> = xs.iter().filter(|e| e.cusp == p).map(|e| e.depth).collect();
            let frac = ds.iter().filter(|&&d| d >= 2.0).count() as f64 / ds.len() as f64;
            assert!((frac / (-2.0f64 * rate).exp() - 1.0).abs() < 0.1, "cusp {p}: {frac}");
        }
        let again: Vec<Excursion> = m.excursions().take(10).collect();
        assert_eq!(&xs[..10], &again[..]);
    }

    #[test]
    fn strong_gauges_drift() {
        let m = ExcursionModel::two_cusp(Real::frac(3, 2), Real::int(1), Real::int(2), 1).unwrap();
        let mut c: [Real; BASIS] = Default::default();
        c[1] = Real::frac(3, 2);
        let big = GaugeSpec::new(Real::frac(3, 2), c).unwrap();
        let v = synthetic_drift_verdict(&m, &big, 100_000, RttMode::Hausdorff).unwrap();
        assert_eq!(v.measure, MeasureValue::Infinite, "{v:?}");
        c[1] = Real::frac(-3, 4);
        let small = GaugeSpec::new(Real::frac(3, 2), c).unwrap();
        let v = synthetic_drift_verdict(&m, &small, 100_000, RttMode::Packing).unwrap();
        assert_eq!(v.measure, MeasureValue::Zero, "{v:?}");
    }
}
