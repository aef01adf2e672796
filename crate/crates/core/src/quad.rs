//! Adaptive Gauss-Kronrod (7/15) quadrature and the `int f = int f^-1`
//! check for decreasing homeomorphisms of `(0, inf)`.

use serde::Serialize;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let (v, err) = gk15(f, a, b);
    if !v.is_finite() {
        return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}]")));
    }
    if err <= tol || depth == 0 {
        return Ok(v);
    }
    let m = 0.5 * (a + b);
    Ok(adapt(f, a, m, 0.5 * tol, depth - 1)? + adapt(f, m, b, 0.5 * tol, depth - 1)?)
}

/// `int_a^b f` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("finite bounds required".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    adapt(f, a, b, tol, 40)
}

/// `int_0^inf f` for positive `f`, through `x = e^u` with both ends pushed
/// out until the added piece falls below `rel` of the total.
pub fn integrate_half_line(f: &dyn Fn(f64) -> f64, rel: f64) -> Result<f64> {
    let g = |u: f64| {
        let x = u.exp();
        let v = f(x) * x;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let (mut lo, mut hi) = (-4.0, 4.0);
    let mut total = integrate(&g, lo, hi, rel * 1e-3)?;
    for _ in 0..60 {
        let left = integrate(&g, 2.0 * lo, lo, rel * 1e-3 * total.abs().max(1e-300))?;
        let right = integrate(&g, hi, 2.0 * hi, rel * 1e-3 * total.abs().max(1e-300))?;
        total += left + right;
        lo *= 2.0;
        hi *= 2.0;
        if left.abs() + right.abs() <= rel * 1e-2 * total.abs() {
            return Ok(total);
        }
        if hi > 800.0 {
            break;
        }
    }
    Err(Error::Numeric("tail of the integral did not vanish".into()))
}

/// `x` with `f(x) = y` for a decreasing `f` on `(0, inf)`, by bisection in `log x`.
pub fn invert_decreasing(f: &dyn Fn(f64) -> f64, y: f64) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("y = {y} must be positive")));
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(lo.exp()) <= y {
        lo *= 2.0;
        if lo < -1400.0 {
            return Err(Error::Numeric(format!("no preimage of {y} near 0")));
        }
    }
    while f(hi.exp()) >= y {
        hi *= 2.0;
        if hi > 1400.0 {
            return Err(Error::Numeric(format!("no preimage of {y} near infinity")));
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m.exp()) > y {
            lo = m;
        } else {
            hi = m;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

fn check_decreasing(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<()> {
    let n = 600;
    let mut last = f64::INFINITY;
    for i in 0..=n {
        let x = (lo + (hi - lo) * i as f64 / n as f64).exp();
        let v = f(x);
        if !(v >= 0.0) || v > last || (v == last && v > 0.0) {
            return Err(Error::Domain(format!("samples not strictly decreasing at x = {x}")));
        }
        last = v;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InverseIntegralReport {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

fn report(lhs: f64, rhs: f64) -> InverseIntegralReport {
    let scale = lhs.abs().max(rhs.abs());
    let relative_gap = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    InverseIntegralReport { lhs, rhs, relative_gap }
}

/// `int_0^inf f` and `int_0^inf f^-1`.
pub fn inverse_integral_check(f: &dyn Fn(f64) -> f64, finv: &dyn Fn(f64) -> f64) -> Result<InverseIntegralReport> {
    check_decreasing(f, -30.0, 30.0)?;
    check_decreasing(finv, -30.0, 30.0)?;
    Ok(report(integrate_half_line(f, 1e-12)?, integrate_half_line(finv, 1e-12)?))
}

/// `int_eps^M f` and `int_eps^M f^-1`.
pub fn truncated_inverse_integral_check(
    f: &dyn Fn(f64) -> f64,
    finv: &dyn Fn(f64) -> f64,
    eps: f64,
    m: f64,
) -> Result<InverseIntegralReport> {
    if !(eps > 0.0 && m > eps) {
        return Err(Error::Domain(format!("need 0 < eps < M, got {eps}, {m}")));
    }
    check_decreasing(f, eps.ln(), m.ln())?;
    check_decreasing(finv, eps.ln(), m.ln())?;
    let g = |h: &dyn Fn(f64) -> f64| {
        let w = |u: f64| {
            let x = u.exp();
            h(x) * x
        };
        integrate(&w, eps.ln(), m.ln(), 1e-13)
    };
    Ok(report(g(f)?, g(finv)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_gaussian() {
        let v = integrate(&|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate_half_line(&|x: f64| (-x * x).exp(), 1e-12).unwrap();
        assert!((v - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn inverter_round_trip() {
        let f = |x: f64| (-x).exp() / x.sqrt();
        for y in [1e-8, 0.3, 5.0, 1e6] {
            let x = invert_decreasing(&f, y).unwrap();
            assert!((f(x) / y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn self_inverse_truncations_agree() {
        for f in [|x: f64| 1.0 / x, |x: f64| 2.0 / x] {
            let r = truncated_inverse_integral_check(&f, &f, 1e-3, 1e3).unwrap();
            assert_eq!(r.lhs, r.rhs);
        }
    }

    #[test]
    fn rejects_increasing() {
        assert!(inverse_integral_check(&|x| x, &|x| x).is_err());
    }
}
