//! Gauge functions `psi(r) = r^delta exp(Psi(log 1/r))` with `Psi` in a fixed
//! iterated-logarithm basis.

mod derived;
mod series;

pub use derived::*;
pub use series::*;

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Number of basis functions: `t, L1..L4, 1`.
pub const BASIS: usize = 6;

pub const COEFFICIENT_NAMES: [&str; BASIS] = ["c_lin", "c_log", "c_loglog", "c_logloglog", "c_log4", "c_const"];

pub const GAUGE_CATALOG: [&str; 5] = ["power", "stratmann", "log", "log-negative", "bertrand-negative"];

/// Basis values `[t, log(e+t), loglog(e^e+t), log(L2), log(1+L3), 1]`.
pub fn basis(t: f64) -> [f64; BASIS] {
    let l1 = (E + t).ln();
    let l2 = (E.exp() + t).ln().ln();
    let l3 = l2.ln();
    let l4 = l3.ln_1p();
    [t, l1, l2, l3, l4, 1.0]
}

/// Derivatives of the basis functions.
pub fn basis_derivative(t: f64) -> [f64; BASIS] {
    let ee = E.exp() + t;
    let l2 = ee.ln().ln();
    let l3 = l2.ln();
    let d1 = 1.0 / (E + t);
    let d2 = 1.0 / (ee * ee.ln());
    let d3 = d2 / l2;
    let d4 = d3 / (1.0 + l3);
    [1.0, d1, d2, d3, d4, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub delta: Real,
    pub c_lin: Real,
    pub c_log: Real,
    pub c_loglog: Real,
    pub c_logloglog: Real,
    pub c_log4: Real,
    pub c_const: Real,
}

impl GaugeSpec {
    pub fn new(delta: Real, coefficients: [Real; BASIS]) -> Result<Self> {
        if !(delta.value() > 0.0) {
            return Err(Error::Domain(format!("delta = {delta} must be positive")));
        }
        if coefficients.iter().any(|c| !c.value().is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        let [c_lin, c_log, c_loglog, c_logloglog, c_log4, c_const] = coefficients;
        Ok(Self { delta, c_lin, c_log, c_loglog, c_logloglog, c_log4, c_const })
    }

    /// `psi(r) = r^delta`.
    pub fn power(delta: Real) -> Result<Self> {
        Self::new(delta, Default::default())
    }

    /// `r^delta exp(c (loglog 1/r + loglogloglog 1/r))` with
    /// `c = (kmax - delta)/(2 delta - kmax)`.
    pub fn stratmann(delta: Real, kmax: Real) -> Result<Self> {
        let c = kmax.sub(delta).div(delta.mul(Real::int(2)).sub(kmax))?;
        let mut k: [Real; BASIS] = Default::default();
        k[1] = c;
        k[3] = c;
        Self::new(delta, k)
    }

    /// Named gauges at `delta = 3/2`, for cusp ranks 1 and 2.
    pub fn catalog(name: &str) -> Result<Self> {
        let d = Real::frac(3, 2);
        let mut c: [Real; BASIS] = Default::default();
        match name {
            "power" => {}
            "stratmann" => return Self::stratmann(d, Real::int(2)),
            "log" => c[1] = Real::int(1),
            "log-negative" => c[1] = Real::frac(-1, 2),
            "bertrand-negative" => {
                c[1] = Real::frac(-1, 4);
                c[3] = Real::frac(-1, 4);
            }
            _ => return Err(Error::Configuration(format!("unknown gauge {name:?}; known: {}", GAUGE_CATALOG.join(", ")))),
        }
        Self::new(d, c)
    }

    pub fn coefficients(&self) -> [Real; BASIS] {
        [self.c_lin, self.c_log, self.c_loglog, self.c_logloglog, self.c_log4, self.c_const]
    }

    pub fn with_coefficients(&self, c: [Real; BASIS]) -> Result<Self> {
        Self::new(self.delta, c)
    }

    fn float_coefficients(&self) -> [f64; BASIS] {
        self.coefficients().map(|c| c.value())
    }

    /// `Psi(t)`.
    pub fn big_psi(&self, t: f64) -> f64 {
        let b = basis(t);
        self.float_coefficients().iter().zip(b).map(|(c, v)| c * v).sum()
    }

    /// `Psi'(t)`.
    pub fn big_psi_derivative(&self, t: f64) -> f64 {
        let b = basis_derivative(t);
        self.float_coefficients().iter().zip(b).map(|(c, v)| c * v).sum()
    }

    /// Bound on `|Psi'(t) - c_lin|`, nonincreasing in `t`.
    pub fn slow_slope_bound(&self, t: f64) -> f64 {
        let b = basis_derivative(t);
        self.float_coefficients().iter().zip(b).skip(1).map(|(c, v)| c.abs() * v).sum()
    }

    /// `log psi(r)`.
    pub fn log_psi(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain(format!("r = {r} outside (0,1)")));
        }
        let u = -r.ln();
        Ok(-self.delta.value() * u + self.big_psi(u))
    }

    pub fn psi_of_r(&self, r: f64) -> Result<f64> {
        self.log_psi(r).map(f64::exp)
    }

    /// Whether `psi` is increasing on a log grid of `(r_min, r_max)`.
    pub fn increasing_on(&self, r_min: f64, r_max: f64, points: usize) -> Result<bool> {
        let (a, b) = (r_min.ln(), r_max.ln());
        let mut last = f64::NEG_INFINITY;
        for i in 0..points {
            let r = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            let v = self.log_psi(r)?;
            if v <= last {
                return Ok(false);
            }
            last = v;
        }
        Ok(true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub eventually_monotone: bool,
    pub direction: Monotonicity,
    /// `lim Psi'(t)`, which for this basis is `c_lin`.
    pub limit_derivative: Option<Real>,
}

/// Eventual monotonicity follows the sign of the fastest-growing nonzero
/// coefficient; every non-linear basis derivative tends to 0.
pub fn check_assumptions(g: &GaugeSpec) -> AssumptionReport {
    let c = g.coefficients();
    let direction = c[..BASIS - 1]
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| if x.value() > 0.0 { Monotonicity::Increasing } else { Monotonicity::Decreasing })
        .unwrap_or(Monotonicity::Constant);
    AssumptionReport { eventually_monotone: true, direction, limit_derivative: Some(g.c_lin) }
}

/// `(delta - c_lin, Psi - c_lin t)`: the same `psi`, with the linear part of
/// `Psi` moved into the exponent. Returns the reduced gauge and the shift.
pub fn reduce_to_zero_slope(g: &GaugeSpec) -> Result<(GaugeSpec, Real)> {
    let shift = g.c_lin;
    if shift.is_zero() {
        return Ok((g.clone(), shift));
    }
    let mut c = g.coefficients();
    c[0] = Real::int(0);
    let delta = g.delta.sub(shift);
    Ok((GaugeSpec::new(delta, c)?, shift))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    /// `(r, |log(psi(lambda r)/psi(r)) - delta log lambda|)`.
    pub deviations: Vec<(f64, f64)>,
    /// Limiting exponent of the ratio: `lambda^(delta - c_lin)`.
    pub limit_exponent: Real,
    /// `Some(c_lin)` when the zero-slope hypothesis fails.
    pub violation: Option<Real>,
}

pub fn scaling_limit_check(g: &GaugeSpec, lambda: f64, r_grid: &[f64]) -> Result<ScalingReport> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("lambda must be positive".into()));
    }
    let mut deviations = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let ratio = g.log_psi(lambda * r)? - g.log_psi(r)?;
        deviations.push((r, (ratio - g.delta.value() * lambda.ln()).abs()));
    }
    Ok(ScalingReport {
        deviations,
        limit_exponent: g.delta.sub(g.c_lin),
        violation: (!g.c_lin.is_zero()).then_some(g.c_lin),
    })
}
