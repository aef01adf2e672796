//! Convergence of `sum_t exp(-q Psi(t))` through the Bertrand hierarchy of
//! the coefficient basis.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::GaugeSpec;
#[cfg(test)]
use super::BASIS;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesVerdict {
    Diverges,
    Converges,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureValue {
    Zero,
    Infinite,
    NotApplicable,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesClassification {
    pub verdict: SeriesVerdict,
    pub consequence: MeasureValue,
    /// `q` in the summand `exp(-q Psi(t))`.
    pub multiplier: Real,
    /// Exponents `p_0..p_4` of `e^t, t, log t, log log t, log log log t`.
    pub exponents: [Real; 5],
    /// Summand up to a constant factor, e.g. `1/(t log log t)`.
    pub summand: String,
    pub trace: Vec<String>,
}

const FACTORS: [&str; 5] = ["e^t", "t", "log t", "log log t", "log log log t"];

fn pow_string(base: &str, p: &Real) -> String {
    let s = p.to_string();
    if s == "1" {
        base.to_string()
    } else if base == "e^t" {
        format!("e^({s} t)")
    } else if base.contains(' ') {
        format!("({base})^{s}")
    } else {
        format!("{base}^{s}")
    }
}

/// Renders `prod factor_k^(-p_k)` as a fraction.
pub fn summand_string(p: &[Real; 5]) -> String {
    let mut den = Vec::new();
    let mut num = Vec::new();
    for (k, e) in p.iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        if e.value() > 0.0 {
            den.push(pow_string(FACTORS[k], e));
        } else {
            num.push(pow_string(FACTORS[k], &e.neg()));
        }
    }
    let num = if num.is_empty() { "1".to_string() } else { num.join(" ") };
    match den.len() {
        0 => num,
        1 if !den[0].contains(' ') => format!("{num}/{}", den[0]),
        _ => format!("{num}/({})", den.join(" ")),
    }
}

/// Decides `sum_t exp(-q Psi(t))`.
pub fn classify_series(g: &GaugeSpec, q: Real) -> SeriesClassification {
    let c = g.coefficients();
    let exponents: [Real; 5] = std::array::from_fn(|k| q.mul(c[k]));
    let mut trace = vec![format!("summand exp(-({q}) Psi(t)) ~ {}", summand_string(&exponents))];
    let one = Real::int(1);
    let mut verdict = SeriesVerdict::Diverges;
    let mut decided = false;
    for (level, p) in exponents.iter().enumerate() {
        let threshold = if level == 0 { Real::int(0) } else { one };
        match p.compare(&threshold) {
            None => {
                trace.push(format!("level {level}: exponent {p} within tolerance of {threshold}; undecided"));
                verdict = SeriesVerdict::Undecided;
                decided = true;
            }
            Some(Ordering::Greater) => {
                trace.push(format!("level {level}: exponent {p} > {threshold}: converges"));
                verdict = SeriesVerdict::Converges;
                decided = true;
            }
            Some(Ordering::Less) => {
                trace.push(format!("level {level}: exponent {p} < {threshold}: diverges"));
                verdict = SeriesVerdict::Diverges;
                decided = true;
            }
            Some(Ordering::Equal) => {
                trace.push(format!("level {level}: exponent {p} = {threshold}: tie, next level"));
            }
        }
        if decided {
            break;
        }
    }
    if !decided {
        trace.push("all levels tie; the next iterated logarithm has exponent 0 < 1: diverges".into());
    }
    SeriesClassification {
        verdict,
        consequence: MeasureValue::Undecided,
        multiplier: q,
        summand: summand_string(&exponents),
        exponents,
        trace,
    }
}

/// Series `sum exp(-((2 delta - kmax)/(kmax - delta)) Psi(t))`: divergence
/// means the Hausdorff measure vanishes, convergence that it is infinite.
pub fn classify_hausdorff_series(g: &GaugeSpec, kmax: Real) -> Result<SeriesClassification> {
    let d = g.delta;
    if d.compare(&kmax) != Some(Ordering::Less) {
        return Err(Error::Domain(format!("needs delta < kmax, got delta = {d}, kmax = {kmax}")));
    }
    let q = d.mul(Real::int(2)).sub(kmax).div(kmax.sub(d))?;
    let mut out = classify_series(g, q);
    out.consequence = match out.verdict {
        SeriesVerdict::Diverges => MeasureValue::Zero,
        SeriesVerdict::Converges => MeasureValue::Infinite,
        SeriesVerdict::Undecided => MeasureValue::Undecided,
    };
    Ok(out)
}

/// Series `sum exp(((2 delta - kmin)/(delta - kmin)) Psi(t))`: convergence
/// means the packing measure vanishes, divergence that it is infinite.
pub fn classify_packing_series(g: &GaugeSpec, kmin: Real) -> Result<SeriesClassification> {
    let d = g.delta;
    if d.compare(&kmin) != Some(Ordering::Greater) {
        return Err(Error::Domain(format!("needs delta > kmin, got delta = {d}, kmin = {kmin}")));
    }
    let q = d.mul(Real::int(2)).sub(kmin).div(d.sub(kmin))?.neg();
    let mut out = classify_series(g, q);
    out.consequence = match out.verdict {
        SeriesVerdict::Converges => MeasureValue::Zero,
        SeriesVerdict::Diverges => MeasureValue::Infinite,
        SeriesVerdict::Undecided => MeasureValue::Undecided,
    };
    Ok(out)
}

/// `log exp(-q Psi(t))`.
pub fn log_term(g: &GaugeSpec, q: f64, t: f64) -> f64 {
    -q * g.big_psi(t)
}

/// Partial sums `S(1..=n)` of positive terms given in log space, scaled by
/// `exp(-shift)` where `shift` is the largest log term, to avoid overflow.
#[derive(Clone, Debug)]
pub struct PartialSums {
    pub scaled: Vec<f64>,
    pub shift: f64,
}

impl PartialSums {
    pub fn from_log_terms(logs: &[f64]) -> Self {
        let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        let mut acc = 0.0;
        let scaled = logs
            .iter()
            .map(|l| {
                acc += (l - shift).exp();
                acc
            })
            .collect();
        Self { scaled, shift }
    }

    /// `log S(n)` for `n >= 1`.
    pub fn log_at(&self, n: usize) -> f64 {
        self.scaled[n - 1].ln() + self.shift
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }
}

/// Partial sums of `sum_{t=1}^N exp(-(Delta/(k - delta)) Psi(t))` with
/// `Delta = 2 delta - k`.
pub fn sigma_p_partial(g: &GaugeSpec, k: Real, n: usize) -> Result<PartialSums> {
    let d = g.delta;
    let gap = k.sub(d);
    if gap.is_zero() {
        return Err(Error::DegenerateRank("cusp rank equals delta".into()));
    }
    let q = d.mul(Real::int(2)).sub(k).div(gap)?.value();
    let logs: Vec<f64> = (1..=n).map(|t| log_term(g, q, t as f64)).collect();
    Ok(PartialSums::from_log_terms(&logs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NumericVerdict {
    pub verdict: SeriesVerdict,
    /// Effective power-law exponent from condensed increments; `inf` when the
    /// increments vanish.
    pub exponent: f64,
    pub confident: bool,
}

/// Heuristic verdict from `S(N/4), S(N/2), S(N)`: increments over dyadic
/// blocks shrink by `2^(1-p)` for terms behaving like `n^-p`.
pub fn numeric_verdict(sums: &PartialSums) -> Result<NumericVerdict> {
    let n = sums.len();
    if n < 16 {
        return Err(Error::InsufficientData("need at least 16 partial sums".into()));
    }
    let s = |m: usize| sums.scaled[m - 1];
    let (a, b, c) = (s(n / 4), s(n / 2), s(n));
    let lower = b - a;
    let upper = c - b;
    let exponent = if upper <= 0.0 {
        f64::INFINITY
    } else if lower <= 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 - (upper / lower).log2()
    };
    let verdict = if exponent > 1.0 { SeriesVerdict::Converges } else { SeriesVerdict::Diverges };
    Ok(NumericVerdict { verdict, exponent, confident: (exponent - 1.0).abs() > 0.02 })
}
