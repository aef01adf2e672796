//! `psi_p`, `theta_p = r/psi_p` and `phi_{p,alpha}(r) = theta_p^{-1}(r/alpha)/r`
//! for a cusp of rank `k`, all evaluated in `u = log(1/r)`.

use std::cmp::Ordering;

use serde::Serialize;

use super::series::PartialSums;
use super::GaugeSpec;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Debug)]
pub struct DerivedGaugeFamily {
    gauge: GaugeSpec,
    pub k: Real,
    /// `2 delta - k`.
    pub delta_p: Real,
    /// `log theta_p` is strictly monotone in `u` on `[u0, inf)`.
    u0: f64,
    inv_gap: f64,
}

/// `log(1/r)` for `r` in `(0,1]`.
fn u_of(r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("r = {r} outside (0,1]")));
    }
    Ok(-r.ln())
}

pub fn derived_functions(g: &GaugeSpec, k: Real) -> Result<DerivedGaugeFamily> {
    if !g.c_lin.is_zero() {
        return Err(Error::Domain(format!("c_lin = {} must be 0; reduce_to_zero_slope first", g.c_lin)));
    }
    let gap = k.sub(g.delta);
    if !matches!(gap.compare(&Real::int(0)), Some(Ordering::Greater | Ordering::Less)) {
        return Err(Error::DegenerateRank(format!("rank {k} equals delta")));
    }
    let inv_gap = 1.0 / gap.value();
    let half = 0.5 * gap.value().abs();
    let mut u0 = 0.0;
    while g.slow_slope_bound(u0) > half {
        u0 = if u0 == 0.0 { 1.0 } else { 2.0 * u0 };
        if u0 > 1e15 {
            return Err(Error::Numeric("no region where theta_p is certified monotone".into()));
        }
    }
    Ok(DerivedGaugeFamily { gauge: g.clone(), k, delta_p: g.delta.mul(Real::int(2)).sub(k), u0, inv_gap })
}

impl DerivedGaugeFamily {
    pub fn gauge(&self) -> &GaugeSpec {
        &self.gauge
    }

    /// Largest `r` of the certified region `(0, r0]`.
    pub fn certified_radius(&self) -> f64 {
        (-self.u0).exp()
    }

    /// Largest `r` with `phi_{p,alpha}` defined through the certified inverse.
    pub fn phi_radius(&self, alpha: f64) -> f64 {
        (alpha.ln() - self.f(self.u0)).exp().min(1.0)
    }

    /// `Delta_p = 0` makes every Khinchin term 1.
    pub fn is_boundary_case(&self) -> bool {
        self.delta_p.is_zero()
    }

    fn log_psi_u(&self, u: f64) -> f64 {
        -self.gauge.big_psi(u) * self.inv_gap
    }

    /// `F(u) = -log theta_p(e^-u)`, increasing on `[u0, inf)` with slope in `[1/2, 3/2]`.
    fn f(&self, u: f64) -> f64 {
        u + self.log_psi_u(u)
    }

    fn f_prime(&self, u: f64) -> f64 {
        1.0 - self.gauge.big_psi_derivative(u) * self.inv_gap
    }

    pub fn log_psi_p(&self, r: f64) -> Result<f64> {
        Ok(self.log_psi_u(u_of(r)?))
    }

    pub fn psi_p(&self, r: f64) -> Result<f64> {
        self.log_psi_p(r).map(f64::exp)
    }

    pub fn log_theta(&self, r: f64) -> Result<f64> {
        Ok(-self.f(u_of(r)?))
    }

    pub fn theta(&self, r: f64) -> Result<f64> {
        self.log_theta(r).map(f64::exp)
    }

    /// Solves `F(u) = y_log` on the certified region, `y_log = log(1/y)`.
    pub fn theta_inverse_u(&self, y_log: f64) -> Result<f64> {
        let f0 = self.f(self.u0);
        if !y_log.is_finite() || y_log < f0 - 1e-12 * f0.abs().max(1.0) {
            return Err(Error::Numeric(format!(
                "theta_p^-1 of exp(-{y_log}) lies outside the certified region u >= {} (F = {f0})",
                self.u0
            )));
        }
        if y_log <= f0 {
            return Ok(self.u0);
        }
        let (mut lo, mut hi) = (self.u0, self.u0 + 2.0 * (y_log - f0) + 1.0);
        let mut u = self.u0 + (y_log - f0);
        for _ in 0..200 {
            let v = self.f(u) - y_log;
            if v.abs() <= 1e-13 * y_log.abs().max(1.0) {
                return Ok(u);
            }
            if v > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let step = u - v / self.f_prime(u);
            u = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                return Ok(u);
            }
        }
        Err(Error::Numeric(format!("theta_p^-1 did not converge for log(1/y) = {y_log}")))
    }

    pub fn theta_inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("y = {y} must be positive")));
        }
        self.theta_inverse_u(-y.ln()).map(|u| (-u).exp())
    }

    /// `log phi_{p,alpha}(r)`.
    pub fn log_phi(&self, alpha: f64, r: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
        }
        let u = u_of(r)?;
        Ok(u - self.theta_inverse_u(u + alpha.ln())?)
    }

    pub fn phi(&self, alpha: f64, r: f64) -> Result<f64> {
        self.log_phi(alpha, r).map(f64::exp)
    }

    /// `(1/alpha) psi_p(theta_p^-1(r/alpha))`, the other form of `phi_{p,alpha}`.
    pub fn log_phi_composed(&self, alpha: f64, r: f64) -> Result<f64> {
        let u = u_of(r)?;
        let w = self.theta_inverse_u(u + alpha.ln())?;
        Ok(self.log_psi_u(w) - alpha.ln())
    }

    /// Partial sums of `sum_n phi_{p,alpha}(lambda^n)^Delta_p`. Terms whose
    /// inverse leaves the certified region are left out and counted.
    pub fn sigma_p_alpha_partial(&self, alpha: f64, lambda: f64, n: usize) -> Result<(PartialSums, usize)> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain(format!("lambda = {lambda} outside (0,1)")));
        }
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
        }
        let step = -lambda.ln();
        let dp = self.delta_p.value();
        let f0 = self.f(self.u0);
        let mut skipped = 0;
        let mut logs = Vec::with_capacity(n);
        for i in 1..=n {
            let u = i as f64 * step;
            let y = u + alpha.ln();
            if y < f0 {
                skipped += 1;
                logs.push(f64::NEG_INFINITY);
                continue;
            }
            logs.push(dp * (u - self.theta_inverse_u(y)?));
        }
        Ok((PartialSums::from_log_terms(&logs), skipped))
    }
}

/// Log-spaced radii on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && points >= 2) {
            return Err(Error::Domain(format!("bad grid [{lo}, {hi}] with {points} points")));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn logs(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.points).map(|i| a + (b - a) * i as f64 / (self.points - 1) as f64).collect()
    }

    /// Twice the points, with the lower end pushed to `lo^2` (or `lo/hi`
    /// times `lo` when `lo >= 1`).
    pub fn refined(&self) -> Self {
        let lo = if self.lo < 1.0 { self.lo * self.lo } else { self.lo * self.lo / self.hi };
        Self { lo: lo.max(f64::MIN_POSITIVE), hi: self.hi, points: 2 * self.points }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingReport {
    pub is_doubling: bool,
    /// Sup estimate on the finest grid.
    pub c2: f64,
    /// Logs of the sup estimates on the base grid and two refinements.
    pub log_estimates: [f64; 3],
}

fn log_ratio_sup(log_phi: &dyn Fn(f64) -> Result<f64>, c1: f64, grid: &LogGrid) -> Result<f64> {
    let xs = grid.logs();
    let vals: Vec<f64> = xs.iter().map(|&x| log_phi(x.exp())).collect::<Result<_>>()?;
    let w = c1.ln();
    let mut sup = 0.0f64;
    let mut j0 = 0;
    for i in 0..xs.len() {
        while xs[i] - xs[j0] > w + 1e-12 {
            j0 += 1;
        }
        for j in j0..i {
            sup = sup.max((vals[i] - vals[j]).abs());
        }
    }
    Ok(sup)
}

/// Sup of `phi(y)/phi(x)` over grid pairs with `y/x` in `[1/C1, C1]`, taken
/// from `log phi`. Doubling when the sup is finite and moves by less than a
/// factor 1.1 over two refinements.
pub fn doubling_check(log_phi: &dyn Fn(f64) -> Result<f64>, c1: f64, grid: LogGrid) -> Result<DoublingReport> {
    if !(c1 > 1.0) {
        return Err(Error::Domain(format!("C1 = {c1} must exceed 1")));
    }
    let g1 = grid.refined();
    let g2 = g1.refined();
    let e = [log_ratio_sup(log_phi, c1, &grid)?, log_ratio_sup(log_phi, c1, &g1)?, log_ratio_sup(log_phi, c1, &g2)?];
    let tol = 1.1f64.ln();
    let stable = |a: f64, b: f64| a.is_finite() && b.is_finite() && (a - b).abs() <= tol;
    Ok(DoublingReport { is_doubling: stable(e[0], e[1]) && stable(e[1], e[2]), c2: e[2].exp(), log_estimates: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::BASIS;

    fn stratmann() -> GaugeSpec {
        GaugeSpec::stratmann(Real::frac(3, 2), Real::int(2)).unwrap()
    }

    #[test]
    fn zero_gauge_is_identity() {
        let g = GaugeSpec::power(Real::frac(3, 2)).unwrap();
        let f = derived_functions(&g, Real::int(2)).unwrap();
        for r in [0.5, 1e-3, 1e-40] {
            assert!((f.psi_p(r).unwrap() - 1.0).abs() < 1e-15);
            assert!((f.theta(r).unwrap() / r - 1.0).abs() < 1e-12);
            assert!((f.phi(2.0, r).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_slope_and_equal_rank() {
        let mut c: [Real; BASIS] = Default::default();
        c[0] = Real::frac(1, 10);
        let g = GaugeSpec::new(Real::int(1), c).unwrap();
        assert!(matches!(derived_functions(&g, Real::int(2)), Err(Error::Domain(_))));
        let g = GaugeSpec::power(Real::int(1)).unwrap();
        assert!(matches!(derived_functions(&g, Real::int(1)), Err(Error::DegenerateRank(_))));
    }

    #[test]
    fn inverse_round_trip_and_composition() {
        for k in [Real::int(2), Real::int(1)] {
            let f = derived_functions(&stratmann(), k).unwrap();
            for e in 2..=10 {
                let y = 10f64.powi(-e);
                let x = f.theta_inverse(y).unwrap();
                assert!((f.theta(x).unwrap() / y - 1.0).abs() < 1e-8, "k={k} y={y}");
            }
            for i in 0..50 {
                let r = 10f64.powf(-2.0 - 0.2 * i as f64);
                for alpha in [0.5, 1.0, 3.0] {
                    let a = f.log_phi(alpha, r).unwrap();
                    let b = f.log_phi_composed(alpha, r).unwrap();
                    assert!((a.exp() / b.exp() - 1.0).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn doubling_examples() {
        let grid = LogGrid::new(1e-6, 0.5, 200).unwrap();
        let flat = doubling_check(&|_| Ok(0.0), 2.0, grid).unwrap();
        assert!(flat.is_doubling && flat.c2 == 1.0);
        let log = doubling_check(&|r: f64| Ok((-r.ln()).ln()), 2.0, grid).unwrap();
        assert!(log.is_doubling && log.c2 > 1.0 && log.c2 < 3.0, "{log:?}");
        let exp = doubling_check(&|r: f64| Ok(1.0 / r), 2.0, grid).unwrap();
        assert!(!exp.is_doubling, "{exp:?}");
        assert!(exp.log_estimates[2] > 2.0 * exp.log_estimates[1] && exp.log_estimates[1] > 2.0 * exp.log_estimates[0]);
    }

    #[test]
    fn constant_gauge_sums_are_linear() {
        let g = GaugeSpec::power(Real::frac(3, 2)).unwrap();
        let f = derived_functions(&g, Real::int(2)).unwrap();
        let (s, skipped) = f.sigma_p_alpha_partial(2.0, 0.5, 1000).unwrap();
        assert_eq!(skipped, 0);
        let expect = 1000.0 * 2f64.powf(-1.0);
        assert!((s.log_at(1000) - expect.ln()).abs() < 1e-9);
    }
}
