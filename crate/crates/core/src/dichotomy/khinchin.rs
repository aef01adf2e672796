//! Shrinking targets around a parabolic orbit: `|xi - eta| <= phi(r_xi) r_xi`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::{numeric_verdict, NumericVerdict, PartialSums, SeriesVerdict};
use crate::group::{parabolic_orbit, CuspPoint, GroupSpec, OrbitBall};
use crate::hyperbolic::BoundaryPoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hit {
    pub xi: usize,
    /// `log(1/r_xi)`.
    pub scale: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HitRecord {
    pub eta: usize,
    /// Sorted by scale.
    pub hits: Vec<Hit>,
}

impl HitRecord {
    pub fn deepest(&self) -> Option<f64> {
        self.hits.last().map(|h| h.scale)
    }

    /// Hit counts in unit bins of `log(1/r_xi)`, starting at bin 0.
    pub fn counts_by_scale(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for h in &self.hits {
            let b = h.scale.max(0.0).floor() as usize;
            if out.len() <= b {
                out.resize(b + 1, 0);
            }
            out[b] += 1;
        }
        out
    }
}

/// Directions of orbit points at distance at least `min_distance`, drawn
/// uniformly with a seeded generator. For a deep enough shell these
/// equidistribute to the Patterson-Sullivan measure.
pub fn sample_deep_points(orbit: &OrbitBall, min_distance: f64, count: usize, seed: u64) -> Result<Vec<BoundaryPoint>> {
    let deep: Vec<BoundaryPoint> =
        orbit.entries.iter().filter(|e| e.distance >= min_distance).filter_map(|e| e.point.direction()).collect();
    if deep.is_empty() {
        return Err(Error::InsufficientData(format!("no orbit points beyond distance {min_distance}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| deep[rng.gen_range(0..deep.len())]).collect())
}

pub fn khinchin_hits_on(cusp_points: &[CuspPoint], phi: &dyn Fn(f64) -> f64, etas: &[BoundaryPoint]) -> Vec<HitRecord> {
    let reach: Vec<f64> = cusp_points.iter().map(|c| phi(c.radius).max(0.0) * c.radius).collect();
    etas.iter()
        .enumerate()
        .map(|(i, eta)| {
            let mut hits: Vec<Hit> = cusp_points
                .iter()
                .zip(&reach)
                .enumerate()
                .filter_map(|(j, (c, &r))| {
                    let d = c.point.chord(eta);
                    (r > 0.0 && d <= r).then(|| Hit { xi: j, scale: -c.radius.ln(), distance: d })
                })
                .collect();
            hits.sort_by(|a, b| a.scale.total_cmp(&b.scale));
            HitRecord { eta: i, hits }
        })
        .collect()
}

pub fn simulate_khinchin_hits(
    spec: &GroupSpec,
    p_index: usize,
    phi: &dyn Fn(f64) -> f64,
    etas: &[BoundaryPoint],
    t_max: f64,
) -> Result<Vec<HitRecord>> {
    let cusp_points = parabolic_orbit(spec, p_index, t_max)?;
    Ok(khinchin_hits_on(&cusp_points, phi, etas))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Decreasing,
    High,
    Other,
}

#[derive(Clone, Debug, Serialize)]
pub struct KhinchinReport {
    /// `(threshold, fraction of eta with a hit at scale >= threshold)`.
    pub fractions: Vec<(f64, f64)>,
    pub trend: Trend,
    pub expected: SeriesVerdict,
    pub agrees: bool,
}

/// Fraction of sampled points that still get hit beyond each threshold.
/// Divergent series should keep it at least 0.9, convergent ones should
/// make it fall strictly as the threshold deepens.
pub fn khinchin_zero_one_estimate(records: &[HitRecord], verdict: SeriesVerdict, thresholds: &[f64]) -> Result<KhinchinReport> {
    if records.len() < 50 {
        return Err(Error::InsufficientData(format!("{} sampled points, need 50", records.len())));
    }
    let n = records.len() as f64;
    let fractions: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&s| (s, records.iter().filter(|r| r.deepest().is_some_and(|d| d >= s)).count() as f64 / n))
        .collect();
    let trend = if fractions.iter().all(|f| f.1 >= 0.9) {
        Trend::High
    } else if fractions.windows(2).all(|w| w[1].1 < w[0].1) {
        Trend::Decreasing
    } else {
        Trend::Other
    };
    let agrees = match verdict {
        SeriesVerdict::Diverges => trend == Trend::High,
        SeriesVerdict::Converges => trend == Trend::Decreasing,
        SeriesVerdict::Undecided => false,
    };
    Ok(KhinchinReport { fractions, trend, expected: verdict, agrees })
}

/// Numeric verdict for `sum_n phi(lambda^n)^exponent`. `log_phi` takes `log(1/r)`,
/// so deep scales do not underflow.
pub fn khinchin_series_verdict(
    log_phi: &dyn Fn(f64) -> Result<f64>,
    exponent: f64,
    lambda: f64,
    n: usize,
) -> Result<NumericVerdict> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0,1)")));
    }
    let step = -lambda.ln();
    let logs: Vec<f64> = (1..=n).map(|i| Ok(exponent * log_phi(step * i as f64)?)).collect::<Result<_>>()?;
    numeric_verdict(&PartialSums::from_log_terms(&logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::enumerate_orbit;

    #[test]
    fn empty_and_full_targets() {
        let g = GroupSpec::modular();
        let orbit = enumerate_orbit(&g, 8.0, 1_000_000).unwrap();
        let etas = sample_deep_points(&orbit, 7.0, 20, 3).unwrap();
        let cusp = crate::group::parabolic_orbit_from(&g, &orbit, 0).unwrap();
        let none = khinchin_hits_on(&cusp, &|_| 0.0, &etas);
        assert!(none.iter().all(|r| r.hits.is_empty()));
        let some = khinchin_hits_on(&cusp, &|_| 1.0, &etas);
        assert!(some.iter().all(|r| !r.hits.is_empty()));
        let counts = some[0].counts_by_scale();
        assert_eq!(counts.iter().sum::<usize>(), some[0].hits.len());
    }

    #[test]
    fn series_verdict_for_log_powers() {
        let conv = |s: f64| Ok(-4.0 * s.ln());
        for n in [1000, 100_000] {
            let v = khinchin_series_verdict(&conv, 0.5, 0.5, n).unwrap();
            assert_eq!(v.verdict, SeriesVerdict::Converges);
        }
        let v = khinchin_series_verdict(&|_| Ok(0.0), 0.5, 0.5, 1000).unwrap();
        assert_eq!(v.verdict, SeriesVerdict::Diverges);
    }
}
