//! Primitives of the Poincaré ball model in dimension 2 or 3.
//!
//! Points are stored as three-vectors; two-dimensional points live in the
//! plane `x[2] = 0`. Every interior point also carries its conformal gap
//! `1 - |x|^2`, which is tracked in closed form wherever possible so that
//! points exponentially close to the sphere keep full relative precision.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Minimum admissible value of `1 - |x|` for points built from raw coordinates.
pub const BOUNDARY_GUARD: f64 = 1e-12;

pub type Vec3 = [f64; 3];

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm2(a: &Vec3) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

pub(crate) fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    norm2(&sub(a, b))
}

fn embed(coords: &[f64]) -> Result<(Vec3, usize)> {
    match coords.len() {
        2 => Ok(([coords[0], coords[1], 0.0], 2)),
        3 => Ok(([coords[0], coords[1], coords[2]], 3)),
        n => domain(format!("dimension {n} unsupported (expected 2 or 3)")),
    }
}

/// An interior point of the ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelPoint {
    v: Vec3,
    gap: f64,
    dim: usize,
}

impl ModelPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let (v, dim) = embed(coords)?;
        if v.iter().any(|c| !c.is_finite()) {
            return domain("non-finite coordinate");
        }
        let n = norm2(&v).sqrt();
        if n >= 1.0 - BOUNDARY_GUARD {
            return domain(format!("point with norm {n} is not inside the unit ball"));
        }
        Ok(Self { v, gap: 1.0 - n * n, dim })
    }

    pub fn origin(dim: usize) -> Self {
        Self { v: [0.0; 3], gap: 1.0, dim }
    }

    /// Builds a point from coordinates together with a separately known gap.
    pub(crate) fn from_parts(v: Vec3, gap: f64, dim: usize) -> Self {
        Self { v, gap, dim }
    }

    pub fn coords(&self) -> Vec<f64> {
        self.v[..self.dim].to_vec()
    }

    pub fn vec3(&self) -> &Vec3 {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `1 - |x|^2`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.v).sqrt()
    }

    /// Hyperbolic distance from the origin, `log((1+|x|)^2 / (1-|x|^2))`.
    pub fn radius(&self) -> f64 {
        let n = self.norm();
        2.0 * (1.0 + n).ln() - self.gap.ln()
    }

    /// Radial projection to the sphere; `None` at the origin.
    pub fn direction(&self) -> Option<BoundaryPoint> {
        let n = self.norm();
        if n == 0.0 {
            return None;
        }
        Some(BoundaryPoint {
            v: [self.v[0] / n, self.v[1] / n, self.v[2] / n],
            dim: self.dim,
        })
    }
}

/// A point of the boundary sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    v: Vec3,
    dim: usize,
}

impl BoundaryPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let (v, dim) = embed(coords)?;
        let n = norm2(&v).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return domain(format!("boundary point has norm {n}, expected 1"));
        }
        Ok(Self { v, dim })
    }

    /// Normalizes an arbitrary nonzero direction.
    pub fn from_direction(coords: &[f64]) -> Result<Self> {
        let (v, dim) = embed(coords)?;
        let n = norm2(&v).sqrt();
        if n == 0.0 || !n.is_finite() {
            return domain("zero direction");
        }
        Ok(Self { v: [v[0] / n, v[1] / n, v[2] / n], dim })
    }

    pub(crate) fn from_vec3(v: Vec3, dim: usize) -> Self {
        let n = norm2(&v).sqrt();
        Self { v: [v[0] / n, v[1] / n, v[2] / n], dim }
    }

    /// The point at angle `theta` on the unit circle.
    pub fn on_circle(theta: f64) -> Self {
        Self { v: [theta.cos(), theta.sin(), 0.0], dim: 2 }
    }

    /// Image in the ball of the half-space boundary point `z`.
    pub fn from_half_space(z: C64, dim: usize) -> Self {
        homogeneous_to_sphere(z, C64::new(1.0, 0.0), dim)
    }

    /// Image in the ball of the point at infinity of the half-space.
    pub fn infinity(dim: usize) -> Self {
        homogeneous_to_sphere(C64::new(1.0, 0.0), C64::new(0.0, 0.0), dim)
    }

    pub fn coords(&self) -> Vec<f64> {
        self.v[..self.dim].to_vec()
    }

    pub fn vec3(&self) -> &Vec3 {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Euclidean chordal distance.
    pub fn chord(&self, other: &BoundaryPoint) -> f64 {
        dist2(&self.v, &other.v).sqrt()
    }

    /// Coordinate in the half-space boundary; `None` for the point at infinity.
    pub fn to_half_space(&self) -> Option<C64> {
        let (u, v) = sphere_to_homogeneous(self);
        if v.norm() < 1e-300 {
            None
        } else {
            Some(u / v)
        }
    }

    /// Angle in `(-pi, pi]` for two-dimensional points.
    pub fn angle(&self) -> f64 {
        self.v[1].atan2(self.v[0])
    }
}

// The ball and the upper half-space are related by inversion in the sphere of
// radius sqrt(2) about c = (0,0,-1), followed by swapping the last two axes so
// that the real half-plane lands on the equatorial disc x[2] = 0.

fn swap(v: &Vec3) -> Vec3 {
    [v[0], v[2], v[1]]
}

#[derive(Clone, Copy, Debug)]
struct HalfSpacePoint {
    z: C64,
    t: f64,
}

fn ball_to_half(p: &ModelPoint) -> HalfSpacePoint {
    let r = swap(&p.v);
    let n2 = r[0] * r[0] + r[1] * r[1] + (r[2] + 1.0) * (r[2] + 1.0);
    HalfSpacePoint { z: C64::new(2.0 * r[0] / n2, 2.0 * r[1] / n2), t: p.gap / n2 }
}

fn half_to_ball(h: &HalfSpacePoint, dim: usize) -> ModelPoint {
    let zz = h.z.norm_sqr();
    let m2 = zz + (h.t + 1.0) * (h.t + 1.0);
    let r = [2.0 * h.z.re / m2, 2.0 * h.z.im / m2, (1.0 - zz - h.t * h.t) / m2];
    let mut v = swap(&r);
    if dim == 2 {
        v[2] = 0.0;
    }
    ModelPoint { v, gap: 4.0 * h.t / m2, dim }
}

fn sphere_to_homogeneous(xi: &BoundaryPoint) -> (C64, C64) {
    let r = swap(&xi.v);
    if r[2] >= 0.0 {
        (C64::new(r[0], r[1]), C64::new(1.0 + r[2], 0.0))
    } else {
        (C64::new(1.0 - r[2], 0.0), C64::new(r[0], -r[1]))
    }
}

fn homogeneous_to_sphere(w1: C64, w2: C64, dim: usize) -> BoundaryPoint {
    let p = w1 * w2.conj();
    let s = w1.norm_sqr() + w2.norm_sqr();
    let r = [2.0 * p.re / s, 2.0 * p.im / s, (w2.norm_sqr() - w1.norm_sqr()) / s];
    let mut v = swap(&r);
    if dim == 2 {
        v[2] = 0.0;
    }
    BoundaryPoint::from_vec3(v, dim)
}

/// Orientation-preserving isometry given by a unit-determinant matrix acting
/// on the half-space and conjugated to the ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    m: [C64; 4],
    inv: [C64; 4],
    dim: usize,
}

impl Isometry {
    /// Real `SL(2,R)` matrix acting on the disc.
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::from_matrix([a, b, c, d].map(|x| C64::new(x, 0.0)), 2)
    }

    /// Complex `SL(2,C)` matrix acting on the three-ball.
    pub fn complex(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        Self::from_matrix([a, b, c, d], 3)
    }

    pub fn from_matrix(m: [C64; 4], dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Construction(format!("dimension {dim} unsupported")));
        }
        if m.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::Construction("non-finite matrix entry".into()));
        }
        if dim == 2 && m.iter().any(|x| x.im != 0.0) {
            return Err(Error::Construction("planar isometries need real entries".into()));
        }
        let det = m[0] * m[3] - m[1] * m[2];
        if (det - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Construction(format!("determinant {det} is not 1")));
        }
        Ok(Self::unchecked(m, dim))
    }

    fn unchecked(m: [C64; 4], dim: usize) -> Self {
        Self { m, inv: [m[3], -m[1], -m[2], m[0]], dim }
    }

    pub fn identity(dim: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::unchecked([one, zero, zero, one], dim)
    }

    pub fn matrix(&self) -> [C64; 4] {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inverse(&self) -> Self {
        Self { m: self.inv, inv: self.m, dim: self.dim }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Self {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = other.m;
        Self::unchecked([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], self.dim)
    }

    /// Equality as elements of `PSL(2)`, up to a relative tolerance.
    pub fn approx_eq(&self, other: &Isometry, tol: f64) -> bool {
        let scale = self.m.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let near = |s: f64| {
            self.m
                .iter()
                .zip(other.m.iter())
                .all(|(x, y)| (x - y * s).norm() <= tol * scale)
        };
        near(1.0) || near(-1.0)
    }

    pub fn apply(&self, x: &ModelPoint) -> ModelPoint {
        let h = ball_to_half(x);
        let [a, b, c, d] = self.m;
        let cz = c * h.z + d;
        let den = cz.norm_sqr() + c.norm_sqr() * h.t * h.t;
        let num = (a * h.z + b) * cz.conj() + a * c.conj() * h.t * h.t;
        let mut z = num / den;
        if self.dim == 2 {
            z.im = 0.0;
        }
        half_to_ball(&HalfSpacePoint { z, t: h.t / den }, self.dim)
    }

    /// `g(0)`, computed directly from the matrix.
    pub fn origin_image(&self) -> ModelPoint {
        let [a, b, c, d] = self.m;
        let n = c.norm_sqr() + d.norm_sqr();
        let mut z = (a * c.conj() + b * d.conj()) / n;
        if self.dim == 2 {
            z.im = 0.0;
        }
        half_to_ball(&HalfSpacePoint { z, t: 1.0 / n }, self.dim)
    }

    pub fn apply_boundary(&self, xi: &BoundaryPoint) -> BoundaryPoint {
        let (u, v) = sphere_to_homogeneous(xi);
        let [a, b, c, d] = self.m;
        homogeneous_to_sphere(a * u + b * v, c * u + d * v, self.dim)
    }

    /// Euclidean stretch factor `|g'(xi)|` of the boundary action.
    pub fn conformal_derivative(&self, xi: &BoundaryPoint) -> f64 {
        let pre = self.inverse().origin_image();
        pre.gap / dist2(&xi.v, &pre.v)
    }

    /// Hyperbolic displacement of the origin.
    pub fn displacement(&self) -> f64 {
        self.origin_image().radius()
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return domain(format!("dimension mismatch {a} vs {b}"));
    }
    Ok(())
}

/// Hyperbolic distance.
pub fn dist(x: &ModelPoint, y: &ModelPoint) -> f64 {
    let s = (dist2(&x.v, &y.v) / (x.gap * y.gap)).sqrt();
    2.0 * s.asinh()
}

/// Checked variant of [`dist`] for points of possibly different dimension.
pub fn try_dist(x: &ModelPoint, y: &ModelPoint) -> Result<f64> {
    check_dims(x.dim, y.dim)?;
    Ok(dist(x, y))
}

/// `B_xi(0, z)`: log of the Poisson kernel.
fn busemann_from_origin(xi: &BoundaryPoint, z: &ModelPoint) -> f64 {
    (z.gap / dist2(&xi.v, &z.v)).ln()
}

/// `B_xi(y, z) = lim_{x -> xi} [d(x,y) - d(x,z)]`.
pub fn busemann(xi: &BoundaryPoint, y: &ModelPoint, z: &ModelPoint) -> f64 {
    busemann_from_origin(xi, z) - busemann_from_origin(xi, y)
}

/// Gromov product of two boundary points based at the origin.
pub fn gromov_product(xi: &BoundaryPoint, eta: &BoundaryPoint) -> Result<f64> {
    let c = xi.chord(eta);
    if c == 0.0 {
        return domain("Gromov product of a point with itself is infinite");
    }
    Ok((2.0 / c).ln())
}

/// The point at distance `t` from the origin on the ray toward `eta`.
pub fn geodesic_point(eta: &BoundaryPoint, t: f64) -> Result<ModelPoint> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("geodesic parameter {t} must be finite and nonnegative"));
    }
    let e = (-t).exp();
    let s = (1.0 - e) / (1.0 + e);
    let v = eta.v.map(|c| c * s);
    Ok(ModelPoint::from_parts(v, 4.0 * e / ((1.0 + e) * (1.0 + e)), eta.dim))
}

/// The horoball `B((1-r) xi, r)` tangent to the sphere at `xi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horoball {
    pub base: BoundaryPoint,
    pub radius: f64,
}

impl Horoball {
    pub fn new(base: BoundaryPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return domain(format!("horoball radius {radius} outside (0,1)"));
        }
        Ok(Self { base, radius })
    }

    pub fn center(&self) -> Vec3 {
        self.base.v.map(|c| c * (1.0 - self.radius))
    }

    /// Signed hyperbolic distance to the horosphere, positive inside.
    pub fn depth(&self, x: &ModelPoint) -> f64 {
        busemann_from_origin(&self.base, x) - ((1.0 - self.radius) / self.radius).ln()
    }

    pub fn contains(&self, x: &ModelPoint) -> bool {
        dist2(&x.v, &self.center()) < self.radius * self.radius
    }

    /// Euclidean disjointness of the two open balls.
    pub fn disjoint(&self, other: &Horoball) -> bool {
        dist2(&self.center(), &other.center()).sqrt() >= self.radius + other.radius
    }

    /// Image under an isometry; the Euclidean radius transforms exactly.
    pub fn transformed(&self, g: &Isometry) -> Horoball {
        let stretch = g.conformal_derivative(&self.base);
        let r = self.radius;
        Horoball { base: g.apply_boundary(&self.base), radius: r * stretch / (1.0 - r + r * stretch) }
    }

    /// Whether the geodesic ray from the origin toward `eta` meets the ball.
    pub fn meets_ray(&self, eta: &BoundaryPoint) -> bool {
        let c = self.center();
        let along: f64 = (0..3).map(|i| c[i] * eta.v[i]).sum();
        let perp2 = norm2(&c) - along.max(0.0).powi(2);
        along > 0.0 && perp2 < self.radius * self.radius
            || norm2(&c) < self.radius * self.radius
    }
}

/// Tent-shaped approximation of horoball depth along a geodesic ray:
/// `min(t - log(1/r), 2 log(1/|xi - eta|) - log(1/r) - t)`.
pub fn excursion_profile(t: f64, dist_to_xi: f64, r_xi: f64) -> Result<f64> {
    if !(dist_to_xi > 0.0 && dist_to_xi < 2.0) {
        return domain(format!("|xi - eta| = {dist_to_xi} outside (0,2)"));
    }
    if !(r_xi > 0.0 && r_xi < 1.0) {
        return domain(format!("r_xi = {r_xi} outside (0,1)"));
    }
    let lr = (1.0 / r_xi).ln();
    let peak = (1.0 / dist_to_xi).ln();
    Ok((t - lr).min(2.0 * peak - lr - t))
}

/// Time of the tent peak, `log(1/|xi - eta|)`.
pub fn excursion_peak(dist_to_xi: f64) -> f64 {
    (1.0 / dist_to_xi).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> ModelPoint {
        ModelPoint::new(c).unwrap()
    }

    #[test]
    fn radial_distance() {
        let o = ModelPoint::origin(2);
        assert_eq!(dist(&o, &o), 0.0);
        assert!((dist(&o, &p(&[0.5, 0.0])) - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn outside_ball_rejected() {
        assert!(ModelPoint::new(&[1.0, 0.0]).is_err());
        assert!(ModelPoint::new(&[0.6, 0.9]).is_err());
        assert!(ModelPoint::new(&[0.1]).is_err());
    }

    #[test]
    fn bad_determinant_rejected() {
        assert!(Isometry::real(2.0, 0.0, 0.0, 1.0).is_err());
        assert!(Isometry::real(1.0, 3.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn identity_acts_trivially() {
        let id = Isometry::identity(2);
        let x = p(&[0.3, -0.2]);
        let y = id.apply(&x);
        assert!(dist2(x.vec3(), y.vec3()) < 1e-28);
        let xi = BoundaryPoint::on_circle(0.7);
        assert!((id.conformal_derivative(&xi) - 1.0).abs() < 1e-14);
        assert!(id.apply_boundary(&xi).chord(&xi) < 1e-15);
    }

    #[test]
    fn origin_image_matches_apply() {
        let g = Isometry::real(2.0, 1.0, 3.0, 2.0).unwrap();
        let a = g.origin_image();
        let b = g.apply(&ModelPoint::origin(2));
        assert!(dist(&a, &b) < 1e-12);
    }

    #[test]
    fn infinity_is_fixed_by_translations() {
        let t = Isometry::real(1.0, 3.0, 0.0, 1.0).unwrap();
        let inf = BoundaryPoint::infinity(2);
        assert!(t.apply_boundary(&inf).chord(&inf) < 1e-15);
        assert!((t.conformal_derivative(&inf) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn busemann_on_ray() {
        let xi = BoundaryPoint::new(&[1.0, 0.0]).unwrap();
        let o = ModelPoint::origin(2);
        assert_eq!(busemann(&xi, &o, &o), 0.0);
        assert!((busemann(&xi, &o, &p(&[0.5, 0.0])) - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gromov_antipodal() {
        let a = BoundaryPoint::on_circle(0.3);
        let b = BoundaryPoint::on_circle(0.3 + std::f64::consts::PI);
        assert!(gromov_product(&a, &b).unwrap().abs() < 1e-14);
        assert!(gromov_product(&a, &a).is_err());
    }

    #[test]
    fn geodesic_point_basics() {
        let eta = BoundaryPoint::new(&[1.0, 0.0]).unwrap();
        assert_eq!(geodesic_point(&eta, 0.0).unwrap().norm(), 0.0);
        let x = geodesic_point(&eta, 3f64.ln()).unwrap();
        assert!((x.coords()[0] - 0.5).abs() < 1e-15);
        assert!(geodesic_point(&eta, -1.0).is_err());
        for k in 1..=60 {
            let t = 0.5 * k as f64;
            let x = geodesic_point(&eta, t).unwrap();
            assert!((dist(&ModelPoint::origin(2), &x) - t).abs() < 1e-9 * t.max(1.0), "t={t}");
        }
    }

    #[test]
    fn horoball_membership() {
        let h = Horoball::new(BoundaryPoint::new(&[1.0, 0.0]).unwrap(), 0.5).unwrap();
        assert!(h.depth(&ModelPoint::origin(2)).abs() < 1e-15);
        let x = p(&[0.6, 0.0]);
        assert!(h.contains(&x));
        assert!(h.depth(&x) > 0.0);
        assert!(h.depth(&p(&[-0.2, 0.0])) < 0.0);
        assert!(Horoball::new(h.base, 1.0).is_err());
    }

    #[test]
    fn disjointness_rule() {
        let a = Horoball::new(BoundaryPoint::on_circle(0.0), 0.3).unwrap();
        let b = Horoball::new(BoundaryPoint::on_circle(std::f64::consts::PI), 0.3).unwrap();
        let c = Horoball::new(BoundaryPoint::on_circle(0.2), 0.3).unwrap();
        assert!(a.disjoint(&b));
        assert!(!a.disjoint(&c));
    }

    #[test]
    fn tent_profile_values() {
        let r = (-2f64).exp();
        let d = (-5f64).exp();
        assert!((excursion_profile(3.0, d, r).unwrap() - 1.0).abs() < 1e-12);
        assert!((excursion_profile(5.0, d, r).unwrap() - 3.0).abs() < 1e-12);
        assert!((excursion_profile(7.0, d, r).unwrap() - 1.0).abs() < 1e-12);
        assert!((excursion_peak(d) - 5.0).abs() < 1e-12);
        assert!(excursion_profile(1.0, 2.5, r).is_err());
        assert!(excursion_profile(1.0, d, 1.5).is_err());
    }

    #[test]
    fn three_dimensional_action() {
        let g = Isometry::complex(
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.5),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        )
        .unwrap();
        let x = p(&[0.1, 0.2, 0.3]);
        let y = p(&[-0.4, 0.1, 0.2]);
        assert!((dist(&x, &y) - dist(&g.apply(&x), &g.apply(&y))).abs() < 1e-10);
        let back = g.inverse().apply(&g.apply(&x));
        assert!(dist(&back, &x) < 1e-10);
    }
}
