//! Patterson measure approximations by weighted orbit sums, ball masses,
//! conformality defects and the global measure formula.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{overlapping_pairs, HoroballSystem, OrbitBall};
use crate::hyperbolic::{geodesic_point, BoundaryPoint, Horoball, Isometry};
use crate::trace::{DensityTrace, TraceSource};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub label: String,
    pub s: f64,
    pub t_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub point: BoundaryPoint,
    pub weight: f64,
}

/// Finite weighted sum of Dirac masses on the boundary sphere.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    total: f64,
    pub provenance: Provenance,
    /// Smallest Euclidean scale the measure resolves.
    pub resolution: f64,
    dim: usize,
    // d = 2 only: atom angles sorted, with prefix sums of weights
    angles: Vec<f64>,
    prefix: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>, provenance: Provenance, resolution: f64) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::DegenerateMeasure("no atoms".into()));
        };
        let dim = first.point.dim();
        if atoms.iter().any(|a| a.point.dim() != dim || !(a.weight > 0.0) || !a.weight.is_finite()) {
            return Err(Error::DegenerateMeasure("atoms need positive finite weights in one dimension".into()));
        }
        let total = atoms.iter().map(|a| a.weight).sum();
        let (angles, prefix) = if dim == 2 {
            let mut pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (a.point.angle(), a.weight)).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut prefix = Vec::with_capacity(pairs.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for p in &pairs {
                acc += p.1;
                prefix.push(acc);
            }
            (pairs.into_iter().map(|p| p.0).collect(), prefix)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self { atoms, total, provenance, resolution, dim, angles, prefix })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalized(&self) -> Self {
        let atoms = self.atoms.iter().map(|a| Atom { point: a.point, weight: a.weight / self.total }).collect();
        Self::new(atoms, self.provenance.clone(), self.resolution).expect("rescaling keeps weights positive")
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let atoms = self.atoms.iter().map(|a| Atom { point: a.point, weight: a.weight * c }).collect();
        Self::new(atoms, self.provenance.clone(), self.resolution)
    }

    /// Image measure `g_* mu`: atoms moved, weights kept.
    pub fn pushed_forward(&self, g: &Isometry) -> Result<Self> {
        let atoms = self.atoms.iter().map(|a| Atom { point: g.apply_boundary(&a.point), weight: a.weight }).collect();
        Self::new(atoms, self.provenance.clone(), self.resolution)
    }

    /// Mass of the counterclockwise arc from angle `a` spanning `len` radians.
    pub fn arc_mass(&self, a: f64, len: f64) -> f64 {
        assert_eq!(self.dim, 2, "arc_mass needs a circle measure");
        if len >= TAU {
            return self.total;
        }
        if len <= 0.0 {
            return 0.0;
        }
        let a = wrap_angle(a);
        let b = a + len;
        if b <= PI {
            self.angle_range(a, b)
        } else {
            self.angle_range(a, PI) + self.angle_range(-PI, b - TAU)
        }
    }

    // mass with angle in [a, b), a <= b inside [-pi, pi]
    fn angle_range(&self, a: f64, b: f64) -> f64 {
        let i = self.angles.partition_point(|x| *x < a);
        let j = self.angles.partition_point(|x| *x < b);
        if j <= i {
            0.0
        } else {
            self.prefix[j] - self.prefix[i]
        }
    }

    /// CSV with one `x,y[,z],weight` row per atom, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let p = &self.provenance;
        let _ = writeln!(s, "# label={} s={:.16e} t_max={:.16e} resolution={:.16e}", p.label, p.s, p.t_max, self.resolution);
        s.push_str(if self.dim == 2 { "x,y,weight\n" } else { "x,y,z,weight\n" });
        for a in &self.atoms {
            for c in a.point.coords() {
                let _ = write!(s, "{c:.16e},");
            }
            let _ = writeln!(s, "{:.16e}", a.weight);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let (n0, head) = lines.next().ok_or_else(|| parse_err(0, "empty file".into()))?;
        let fields: std::collections::HashMap<&str, &str> = head
            .trim_start_matches('#')
            .split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .collect();
        let num = |k: &str| -> Result<f64> {
            fields
                .get(k)
                .ok_or_else(|| parse_err(n0, format!("missing {k}")))?
                .parse()
                .map_err(|e| parse_err(n0, format!("{k}: {e}")))
        };
        let provenance = Provenance {
            label: fields.get("label").unwrap_or(&"").to_string(),
            s: num("s")?,
            t_max: num("t_max")?,
        };
        let resolution = num("resolution")?;
        let (n1, cols) = lines.next().ok_or_else(|| parse_err(1, "missing column header".into()))?;
        let width = cols.split(',').count();
        if width != 3 && width != 4 {
            return Err(parse_err(n1, format!("expected 3 or 4 columns, found {width}")));
        }
        let mut atoms = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(n, e.to_string()))?;
            if vals.len() != width {
                return Err(parse_err(n, format!("expected {width} fields")));
            }
            let point = BoundaryPoint::new(&vals[..width - 1]).map_err(|e| parse_err(n, e.to_string()))?;
            atoms.push(Atom { point, weight: vals[width - 1] });
        }
        Self::new(atoms, provenance, resolution)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Atoms at the radial projections of orbit points with weights `exp(-s dist)`.
/// The origin itself has no direction; its atom sits at the first axis.
pub fn patterson_measure(orbit: &OrbitBall, s: f64, normalize: bool) -> Result<AtomicMeasure> {
    if orbit.is_empty() {
        return Err(Error::DegenerateMeasure("empty orbit".into()));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("exponent {s} must be finite and nonnegative")));
    }
    let logs: Vec<f64> = orbit.entries.iter().map(|e| -s * e.distance).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top > -745.0) {
        return Err(Error::DegenerateMeasure("all weights underflow".into()));
    }
    let mut axis = [0.0; 3];
    axis[0] = 1.0;
    let reference = BoundaryPoint::new(&axis[..orbit.dim]).expect("unit axis");
    let atoms: Vec<Atom> = orbit
        .entries
        .iter()
        .zip(&logs)
        .filter(|(_, l)| l.exp() > 0.0)
        .map(|(e, l)| Atom { point: e.point.direction().unwrap_or(reference), weight: l.exp() })
        .collect();
    let provenance = Provenance { label: orbit.label.clone(), s, t_max: orbit.t_max };
    let mu = AtomicMeasure::new(atoms, provenance, 2.0 * (-orbit.t_max).exp())?;
    Ok(if normalize { mu.normalized() } else { mu })
}

/// Normalized orbit-counting measure (`s = 0`). Its mass sits in the outer
/// shell of the orbit ball, so at a fixed truncation it resolves balls of
/// radius well below `e^{-T/2}`, where the `s > delta` sums are still
/// dominated by a few shallow atoms.
pub fn counting_measure(orbit: &OrbitBall) -> Result<AtomicMeasure> {
    patterson_measure(orbit, 0.0, true)
}

/// Mass of atoms within Euclidean distance `r` of `eta`.
pub fn ball_mass(mu: &AtomicMeasure, eta: &BoundaryPoint, r: f64) -> f64 {
    if r >= 2.0 {
        return mu.total;
    }
    if r <= 0.0 {
        return 0.0;
    }
    if mu.dim == 2 {
        let half = 2.0 * (r / 2.0).asin();
        let a = eta.angle() - half;
        // chord < r is an open arc; boundary ties are measure-zero in practice
        mu.arc_mass(a, 2.0 * half)
    } else {
        mu.atoms.iter().filter(|a| a.point.chord(eta) < r).map(|a| a.weight).sum()
    }
}

/// Largest `|log mu(g A) - log \int_A |g'|^delta dmu|` over `cells` equal arcs.
pub fn conformality_defect(mu: &AtomicMeasure, g: &Isometry, delta: f64, cells: usize) -> Result<f64> {
    if cells < 2 {
        return Err(Error::Domain("partition needs at least two cells".into()));
    }
    let arcs: Vec<(f64, f64)> = (0..cells).map(|i| (-PI + TAU * i as f64 / cells as f64, TAU / cells as f64)).collect();
    conformality_defect_on(mu, g, delta, &arcs)
}

/// Defect over explicit counterclockwise arcs `(start angle, length)`.
pub fn conformality_defect_on(mu: &AtomicMeasure, g: &Isometry, delta: f64, arcs: &[(f64, f64)]) -> Result<f64> {
    if mu.dim != 2 || g.dim() != 2 {
        return Err(Error::Domain("arc partitions need d = 2".into()));
    }
    if arcs.iter().any(|(_, l)| !(*l > 0.0 && *l < TAU)) {
        return Err(Error::Domain("arc lengths must lie in (0, 2 pi)".into()));
    }
    let mut worst: f64 = 0.0;
    for &(a, len) in arcs {
        let start = g.apply_boundary(&BoundaryPoint::on_circle(a)).angle();
        let end = g.apply_boundary(&BoundaryPoint::on_circle(a + len)).angle();
        // orientation-preserving maps send the arc to the counterclockwise arc start..end
        let image_len = (end - start).rem_euclid(TAU);
        let pushed = mu.arc_mass(start, image_len);
        let weighted: f64 = arc_atoms(mu, a, len).map(|at| at.weight * g.conformal_derivative(&at.point).powf(delta)).sum();
        if pushed < 1e-6 * mu.total || weighted < 1e-6 * mu.total {
            continue;
        }
        worst = worst.max((pushed.ln() - weighted.ln()).abs());
    }
    Ok(worst)
}

fn arc_atoms(mu: &AtomicMeasure, a: f64, len: f64) -> impl Iterator<Item = &Atom> {
    let a = wrap_angle(a);
    mu.atoms.iter().filter(move |at| (at.point.angle() - a).rem_euclid(TAU) < len)
}

/// Horoball lookup for `k(x)` and `b(x)`.
#[derive(Clone, Debug)]
pub struct GmfContext {
    pub delta: f64,
    pub horoballs: Vec<(Horoball, usize)>,
}

impl GmfContext {
    pub fn new(delta: f64, horoballs: Vec<(Horoball, usize)>) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Domain("delta must be positive".into()));
        }
        let balls: Vec<Horoball> = horoballs.iter().map(|h| h.0).collect();
        if let Some((i, j)) = overlapping_pairs(&balls, 1).first() {
            return Err(Error::InvariantViolation(format!("horoballs {i} and {j} overlap")));
        }
        if let Some((h, k)) = horoballs.iter().find(|(h, k)| *k < 1 || *k >= h.base.dim()) {
            return Err(Error::Domain(format!("rank {k} invalid for horoball at {:?}", h.base.vec3())));
        }
        Ok(Self { delta, horoballs })
    }

    pub fn from_system(delta: f64, system: &HoroballSystem) -> Result<Self> {
        Self::new(delta, system.horoballs.iter().map(|h| (h.horoball, h.rank)).collect())
    }

    /// `(k, b)` at the point `eta_t`; `(0, 0)` outside every horoball.
    pub fn rank_and_depth(&self, eta: &BoundaryPoint, t: f64) -> Result<(usize, f64)> {
        let x = geodesic_point(eta, t)?;
        let mut hit: Option<(usize, f64)> = None;
        for (h, k) in &self.horoballs {
            let c = h.center();
            let slack = h.radius * (1.0 + 1e-9) + 1e-12;
            if (0..3).map(|i| (x.vec3()[i] - c[i]).powi(2)).sum::<f64>() > slack * slack {
                continue;
            }
            let b = h.depth(&x);
            if b > 0.0 {
                if hit.is_some() {
                    return Err(Error::InvariantViolation("point lies in two horoballs".into()));
                }
                hit = Some((*k, b));
            }
        }
        Ok(hit.unwrap_or((0, 0.0)))
    }

    /// Image context under an isometry.
    pub fn conjugated(&self, g: &Isometry) -> Result<Self> {
        Self::new(self.delta, self.horoballs.iter().map(|(h, k)| (h.transformed(g), *k)).collect())
    }
}

/// `log(e^{-delta t} e^{b(eta_t)(k(eta_t) - delta)})`.
pub fn gmf_predict(ctx: &GmfContext, eta: &BoundaryPoint, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain("t must be positive".into()));
    }
    let (k, b) = ctx.rank_and_depth(eta, t)?;
    Ok(-ctx.delta * t + b * (k as f64 - ctx.delta))
}

/// `log mu(B(eta, e^{-t})) - gmf_predict`; unresolved where the ball is
/// empty or below the measure's resolution.
pub fn gmf_residual_scan(mu: &AtomicMeasure, ctx: &GmfContext, eta: &BoundaryPoint, t_grid: &[f64]) -> Result<DensityTrace> {
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let r = (-t).exp();
        let m = ball_mass(mu, eta, r);
        if m <= 0.0 || r < mu.resolution {
            values.push(None);
        } else {
            values.push(Some(m.ln() - gmf_predict(ctx, eta, t)?));
        }
    }
    DensityTrace::new(t_grid.to_vec(), values, TraceSource::Empirical)
}
