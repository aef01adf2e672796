//! Finitely generated groups: orbit enumeration, critical exponent
//! estimation, limit-set sampling and cusp data.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{BoundaryPoint, Horoball, Isometry, ModelPoint, Vec3};

/// Declared parabolic fixed point with its rank, horoball radius and stabilizer.
#[derive(Clone, Debug)]
pub struct CuspDatum {
    pub point: BoundaryPoint,
    pub rank: usize,
    pub base_radius: f64,
    pub stabilizer: Vec<Isometry>,
}

impl CuspDatum {
    pub fn new(point: BoundaryPoint, rank: usize, base_radius: f64, stabilizer: Vec<Isometry>) -> Result<Self> {
        let dim = point.dim();
        if rank < 1 || rank > dim - 1 {
            return Err(Error::Configuration(format!("cusp rank {rank} outside [1, {}]", dim - 1)));
        }
        if !(base_radius > 0.0 && base_radius < 1.0) {
            return Err(Error::Configuration(format!("cusp radius {base_radius} outside (0,1)")));
        }
        for (i, s) in stabilizer.iter().enumerate() {
            if s.apply_boundary(&point).chord(&point) > 1e-9 {
                return Err(Error::Configuration(format!("stabilizer generator {i} does not fix the cusp")));
            }
        }
        Ok(Self { point, rank, base_radius, stabilizer })
    }

    /// Radius of the horoball at infinity `{height > h}` seen in the ball.
    pub fn radius_for_height(h: f64) -> f64 {
        1.0 / (1.0 + h)
    }
}

#[derive(Clone, Debug)]
pub struct GroupSpec {
    pub label: String,
    pub dim: usize,
    pub generators: Vec<Isometry>,
    pub cusps: Vec<CuspDatum>,
}

impl GroupSpec {
    pub fn new(label: impl Into<String>, generators: Vec<Isometry>, cusps: Vec<CuspDatum>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::Configuration("group needs at least one generator".into()));
        };
        let dim = first.dim();
        if generators.iter().any(|g| g.dim() != dim) || cusps.iter().any(|c| c.point.dim() != dim) {
            return Err(Error::Configuration("generators and cusps must share one dimension".into()));
        }
        for (i, c) in cusps.iter().enumerate() {
            if generators.iter().any(|g| g.apply_boundary(&c.point).chord(&c.point) < 1e-9)
                && c.stabilizer.is_empty()
            {
                return Err(Error::Configuration(format!("cusp {i} declares no stabilizer")));
            }
        }
        Ok(Self { label: label.into(), dim, generators, cusps })
    }

    /// Generators together with their inverses, involutions listed once.
    pub fn alphabet(&self) -> Vec<Isometry> {
        let mut out: Vec<Isometry> = Vec::new();
        for g in &self.generators {
            for h in [*g, g.inverse()] {
                if !out.iter().any(|o| o.approx_eq(&h, 1e-12)) {
                    out.push(h);
                }
            }
        }
        out
    }

    /// `<z -> z + step>` acting on the disc, with its cusp at infinity.
    pub fn cyclic_parabolic(step: f64) -> Self {
        let t = Isometry::real(1.0, step, 0.0, 1.0).expect("unit determinant");
        let cusp = CuspDatum::new(BoundaryPoint::infinity(2), 1, CuspDatum::radius_for_height(1.0), vec![t])
            .expect("valid cusp");
        Self::new(format!("cyclic-{step}"), vec![t], vec![cusp]).expect("valid group")
    }

    /// `<z -> z + lambda, z -> -1/z>`; `lambda = 1` is the modular group.
    pub fn hecke(lambda: f64) -> Self {
        let t = Isometry::real(1.0, lambda, 0.0, 1.0).expect("unit determinant");
        let s = Isometry::real(0.0, -1.0, 1.0, 0.0).expect("unit determinant");
        let cusp = CuspDatum::new(BoundaryPoint::infinity(2), 1, CuspDatum::radius_for_height(1.0), vec![t])
            .expect("valid cusp");
        let label = if lambda == 1.0 { "modular".to_string() } else { format!("hecke-{lambda}") };
        Self::new(label, vec![t, s], vec![cusp]).expect("valid group")
    }

    pub fn modular() -> Self {
        Self::hecke(1.0)
    }

    /// Shipped test groups by name.
    pub fn catalog(name: &str) -> Option<Self> {
        match name {
            "cyclic-3" => Some(Self::cyclic_parabolic(3.0)),
            "modular" => Some(Self::modular()),
            "hecke-2.5" => Some(Self::hecke(2.5)),
            "hecke-3" => Some(Self::hecke(3.0)),
            "hecke-4" => Some(Self::hecke(4.0)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrbitEntry {
    pub element: Isometry,
    pub point: ModelPoint,
    pub distance: f64,
    pub word_length: usize,
}

/// Orbit of the origin truncated at hyperbolic radius `t_max`.
#[derive(Clone, Debug)]
pub struct OrbitBall {
    pub label: String,
    pub dim: usize,
    pub t_max: f64,
    pub entries: Vec<OrbitEntry>,
    /// Elements fixing the origin (always contains the identity).
    pub origin_stabilizer: Vec<Isometry>,
    pub truncated: bool,
    sorted: Vec<f64>,
}

impl OrbitBall {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `#{entries with distance <= t}`.
    pub fn count_within(&self, t: f64) -> usize {
        self.sorted.partition_point(|d| *d <= t)
    }

    pub fn sorted_distances(&self) -> &[f64] {
        &self.sorted
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OrbitOptions {
    /// Elements up to `t_max + slack` are expanded so that orbit points
    /// reached through slightly longer intermediate words are not lost.
    pub slack: f64,
    pub cap: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { slack: 0.5, cap: 20_000_000 }
    }
}

/// Orbit points closer than this (hyperbolically) are treated as one point.
const POINT_TOL: f64 = 1e-2;
const BOUNDARY_CELL: f64 = 1e-9;

/// Cells in `x / (1 - |x|^2)`, where equal hyperbolic spacing near the
/// boundary stays roughly equal instead of collapsing.
fn orbit_cell(x: &ModelPoint) -> [i64; 3] {
    x.vec3().map(|c| (c / x.gap() / POINT_TOL).floor() as i64)
}

fn boundary_cell(v: &Vec3) -> [i64; 3] {
    v.map(|c| (c / BOUNDARY_CELL).floor() as i64)
}

fn neighbours(key: [i64; 3], dim: usize) -> impl Iterator<Item = [i64; 3]> {
    let zs: &'static [i64] = if dim == 2 { &[0] } else { &[-1, 0, 1] };
    (-1..=1).flat_map(move |a| {
        (-1..=1).flat_map(move |b| zs.iter().map(move |c| [key[0] + a, key[1] + b, key[2] + c]))
    })
}

struct PointIndex<T> {
    cells: HashMap<[i64; 3], Vec<T>>,
    dim: usize,
}

impl<T: Copy> PointIndex<T> {
    fn new(dim: usize) -> Self {
        Self { cells: HashMap::new(), dim }
    }

    fn near(&self, key: [i64; 3]) -> impl Iterator<Item = T> + '_ {
        neighbours(key, self.dim).flat_map(move |k| self.cells.get(&k).into_iter().flatten().copied())
    }

    fn insert(&mut self, key: [i64; 3], item: T) {
        self.cells.entry(key).or_default().push(item);
    }
}

/// Breadth-first enumeration of `{g(0) : dist(0, g(0)) <= t_max}`.
pub fn enumerate_orbit(spec: &GroupSpec, t_max: f64, cap: usize) -> Result<OrbitBall> {
    enumerate_orbit_with(spec, t_max, OrbitOptions { cap, ..OrbitOptions::default() })
}

pub fn enumerate_orbit_with(spec: &GroupSpec, t_max: f64, opts: OrbitOptions) -> Result<OrbitBall> {
    if !(t_max >= 0.0) || opts.cap == 0 {
        return Err(Error::Domain("orbit truncation must be nonnegative and cap positive".into()));
    }
    let alphabet = spec.alphabet();
    let bound = t_max + opts.slack;
    // (element, point, distance, word length)
    let mut elements: Vec<(Isometry, ModelPoint, f64, usize)> = Vec::new();
    let mut index: PointIndex<usize> = PointIndex::new(spec.dim);
    let mut entries: Vec<OrbitEntry> = Vec::new();
    let mut queue = VecDeque::new();
    let mut truncated = false;

    let id = Isometry::identity(spec.dim);
    let o = ModelPoint::origin(spec.dim);
    elements.push((id, o, 0.0, 0));
    index.insert(orbit_cell(&o), 0);
    entries.push(OrbitEntry { element: id, point: o, distance: 0.0, word_length: 0 });
    queue.push_back(0usize);

    while let Some(i) = queue.pop_front() {
        let (g, _, _, len) = elements[i];
        for a in &alphabet {
            let h = g.compose(a);
            let x = h.origin_image();
            let d = x.radius();
            if d > bound {
                continue;
            }
            let mut point_seen = false;
            let mut duplicate = false;
            let key = orbit_cell(&x);
            for j in index.near(key) {
                let (e, y, _, _) = &elements[j];
                if crate::hyperbolic::dist(&x, y) <= POINT_TOL {
                    point_seen = true;
                    if e.approx_eq(&h, 1e-9) {
                        duplicate = true;
                        break;
                    }
                }
            }
            if duplicate {
                continue;
            }
            if elements.len() >= opts.cap {
                truncated = true;
                break;
            }
            let k = elements.len();
            elements.push((h, x, d, len + 1));
            index.insert(key, k);
            queue.push_back(k);
            if !point_seen && d <= t_max {
                entries.push(OrbitEntry { element: h, point: x, distance: d, word_length: len + 1 });
            }
        }
        if truncated {
            break;
        }
    }

    let origin_stabilizer = elements
        .iter()
        .filter(|(_, _, d, _)| *d <= POINT_TOL)
        .map(|(e, _, _, _)| *e)
        .collect();
    let mut sorted: Vec<f64> = entries.iter().map(|e| e.distance).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(OrbitBall {
        label: spec.label.clone(),
        dim: spec.dim,
        t_max,
        entries,
        origin_stabilizer,
        truncated,
        sorted,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub stderr: f64,
    pub interval: (f64, f64),
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares slope of `log N(T)` against `T` over the window.
pub fn estimate_delta(orbit: &OrbitBall, window: (f64, f64)) -> Result<DeltaEstimate> {
    let (lo, hi) = window;
    if !(lo < hi) || hi > orbit.t_max + 1e-12 {
        return Err(Error::Domain(format!("window {window:?} not inside [0, {}]", orbit.t_max)));
    }
    let samples = orbit.count_within(hi) - orbit.count_within(lo);
    if samples < 10 {
        return Err(Error::InsufficientData(format!("only {samples} orbit points in window")));
    }
    let n = 64;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .map(|t| (t, (orbit.count_within(t).max(1) as f64).ln()))
        .collect();
    let fit = linear_fit(&pts);
    Ok(DeltaEstimate {
        delta: fit.slope,
        stderr: fit.stderr,
        interval: (fit.slope - 2.0 * fit.stderr, fit.slope + 2.0 * fit.stderr),
        residual: fit.rms,
        window,
        samples,
    })
}

pub(crate) struct LinearFit {
    pub slope: f64,
    pub stderr: f64,
    pub rms: f64,
}

pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> LinearFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = (n - 2.0).max(1.0);
    LinearFit { slope, stderr: (sse / dof / sxx).sqrt(), rms: (sse / n).sqrt() }
}

/// Radial projections of endpoints of seeded non-backtracking random words.
pub fn sample_limit_set(spec: &GroupSpec, depth: usize, count: usize, seed: u64) -> Result<Vec<BoundaryPoint>> {
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let alphabet = spec.alphabet();
    let inverse_of: Vec<usize> = alphabet
        .iter()
        .map(|a| {
            let ai = a.inverse();
            alphabet.iter().position(|b| b.approx_eq(&ai, 1e-12)).unwrap_or(usize::MAX)
        })
        .collect();
    let max_steps = 200_000;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut g = Isometry::identity(spec.dim);
        let mut last = usize::MAX;
        let mut steps = 0;
        loop {
            let x = g.origin_image();
            if steps >= depth && x.gap() / (1.0 + x.norm()) <= 1e-6 {
                out.push(x.direction().expect("deep point is not the origin"));
                break;
            }
            if steps >= max_steps {
                return Err(Error::InsufficientData(format!(
                    "random word did not reach the boundary within {max_steps} letters"
                )));
            }
            let allowed: Vec<usize> =
                (0..alphabet.len()).filter(|&k| last == usize::MAX || k != inverse_of[last]).collect();
            if allowed.is_empty() {
                return Err(Error::InsufficientData("group too small to extend words".into()));
            }
            let k = allowed[rng.gen_range(0..allowed.len())];
            g = g.compose(&alphabet[k]);
            last = k;
            steps += 1;
        }
    }
    Ok(out)
}

/// One point of a parabolic orbit `G(p)`.
#[derive(Clone, Copy, Debug)]
pub struct CuspPoint {
    pub point: BoundaryPoint,
    /// Euclidean radius of the image horoball.
    pub radius: f64,
    /// `|g'(p)|` for the representative, so that radii can be recomputed.
    pub stretch: f64,
    pub word_length: usize,
    pub representative: Isometry,
}

/// Exact Euclidean radius of `g(H(p, r))` given `|g'(p)|`.
pub fn pushed_radius(r: f64, stretch: f64) -> f64 {
    r * stretch / (1.0 - r + r * stretch)
}

pub fn parabolic_orbit(spec: &GroupSpec, p_index: usize, t_max: f64) -> Result<Vec<CuspPoint>> {
    let orbit = enumerate_orbit(spec, t_max, OrbitOptions::default().cap)?;
    parabolic_orbit_from(spec, &orbit, p_index)
}

/// Images of cusp `p_index` under every element of the truncated orbit,
/// deduplicated by base point with the shortest word kept.
pub fn parabolic_orbit_from(spec: &GroupSpec, orbit: &OrbitBall, p_index: usize) -> Result<Vec<CuspPoint>> {
    let cusp = spec
        .cusps
        .get(p_index)
        .ok_or_else(|| Error::Domain(format!("no cusp with index {p_index}")))?;
    let mut index: PointIndex<usize> = PointIndex::new(spec.dim);
    let mut out: Vec<CuspPoint> = Vec::new();
    let mut entries: Vec<&OrbitEntry> = orbit.entries.iter().collect();
    entries.sort_by_key(|e| e.word_length);
    for e in entries {
        for s in &orbit.origin_stabilizer {
            let g = e.element.compose(s);
            let xi = g.apply_boundary(&cusp.point);
            let key = boundary_cell(xi.vec3());
            let seen = index.near(key).any(|j: usize| out[j].point.chord(&xi) <= BOUNDARY_CELL);
            if seen {
                continue;
            }
            let stretch = g.conformal_derivative(&cusp.point);
            index.insert(key, out.len());
            out.push(CuspPoint {
                point: xi,
                radius: pushed_radius(cusp.base_radius, stretch),
                stretch,
                word_length: e.word_length,
                representative: g,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct SystemHoroball {
    pub horoball: Horoball,
    pub rank: usize,
    pub cusp: usize,
}

/// Finite part of a disjoint invariant horoball collection.
#[derive(Clone, Debug)]
pub struct HoroballSystem {
    pub horoballs: Vec<SystemHoroball>,
    /// Common factor applied to every declared base radius.
    pub shrink_factor: f64,
}

/// Index pairs of overlapping balls, found by a sweep along the first axis.
pub fn overlapping_pairs(balls: &[Horoball], limit: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..balls.len()).collect();
    let centers: Vec<Vec3> = balls.iter().map(|b| b.center()).collect();
    order.sort_by(|&a, &b| (centers[a][0] - balls[a].radius).total_cmp(&(centers[b][0] - balls[b].radius)));
    let mut active: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for &i in &order {
        let left = centers[i][0] - balls[i].radius;
        active.retain(|&j| centers[j][0] + balls[j].radius > left);
        for &j in &active {
            if !balls[i].disjoint(&balls[j]) {
                out.push((j.min(i), j.max(i)));
                if out.len() >= limit {
                    return out;
                }
            }
        }
        active.push(i);
    }
    out
}

pub fn invariant_horoball_system(spec: &GroupSpec, t_max: f64) -> Result<HoroballSystem> {
    let orbit = enumerate_orbit(spec, t_max, OrbitOptions::default().cap)?;
    invariant_horoball_system_from(spec, &orbit)
}

pub fn invariant_horoball_system_from(spec: &GroupSpec, orbit: &OrbitBall) -> Result<HoroballSystem> {
    if spec.cusps.is_empty() {
        return Err(Error::Configuration("no parabolic representatives declared".into()));
    }
    let orbits: Vec<Vec<CuspPoint>> =
        (0..spec.cusps.len()).map(|p| parabolic_orbit_from(spec, orbit, p)).collect::<Result<_>>()?;
    let mut factor = 1.0;
    for _ in 0..=40 {
        let mut system = Vec::new();
        for (p, pts) in orbits.iter().enumerate() {
            let r = spec.cusps[p].base_radius * factor;
            for c in pts {
                let horoball = Horoball { base: c.point, radius: pushed_radius(r, c.stretch) };
                system.push(SystemHoroball { horoball, rank: spec.cusps[p].rank, cusp: p });
            }
        }
        let balls: Vec<Horoball> = system.iter().map(|s| s.horoball).collect();
        if overlapping_pairs(&balls, 1).is_empty() {
            return Ok(HoroballSystem { horoballs: system, shrink_factor: factor });
        }
        factor *= 0.5;
    }
    Err(Error::Configuration("no shrink factor within 40 halvings makes the horoballs disjoint".into()))
}

/// Real interval between the isometric circles `|z| = 1` and `|z - lambda| = 1`,
/// which the limit set of the Hecke group misses when `lambda > 2`.
pub fn hecke_free_interval(lambda: f64) -> Option<(f64, f64)> {
    (lambda > 2.0).then_some((1.0, lambda - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn tiny_radius_gives_identity_only() {
        let g = GroupSpec::cyclic_parabolic(3.0);
        let orbit = enumerate_orbit(&g, 0.5, 1000).unwrap();
        assert_eq!(orbit.len(), 1);
        assert_eq!(orbit.entries[0].distance, 0.0);
    }

    #[test]
    fn cyclic_orbit_matches_closed_form() {
        let g = GroupSpec::cyclic_parabolic(3.0);
        let t = 10.0;
        let orbit = enumerate_orbit(&g, t, 100_000).unwrap();
        // dist(i, i + 3n) = acosh(1 + 9 n^2 / 2)
        let expected = 1 + 2 * (1..).take_while(|&n| (1.0 + 4.5 * (n * n) as f64).acosh() <= t).count();
        assert_eq!(orbit.len(), expected);
    }

    #[test]
    fn inverse_pairs_do_not_duplicate() {
        let g = GroupSpec::hecke(3.0);
        let orbit = enumerate_orbit(&g, 6.0, 1_000_000).unwrap();
        for (i, a) in orbit.entries.iter().enumerate() {
            for b in &orbit.entries[i + 1..] {
                assert!(crate::hyperbolic::dist(&a.point, &b.point) > 1e-6);
            }
        }
        assert_eq!(orbit.origin_stabilizer.len(), 2);
    }

    #[test]
    fn cap_sets_truncation_flag() {
        let orbit = enumerate_orbit(&GroupSpec::modular(), 8.0, 50).unwrap();
        assert!(orbit.truncated);
    }

    #[test]
    fn delta_window_errors() {
        let orbit = enumerate_orbit(&GroupSpec::cyclic_parabolic(3.0), 3.0, 1000).unwrap();
        assert!(matches!(estimate_delta(&orbit, (1.0, 3.0)), Err(Error::InsufficientData(_))));
        assert!(estimate_delta(&orbit, (1.0, 5.0)).is_err());
    }

    #[test]
    fn cyclic_limit_set_is_a_point() {
        let g = GroupSpec::cyclic_parabolic(3.0);
        let pts = sample_limit_set(&g, 1, 5, 7).unwrap();
        let inf = BoundaryPoint::infinity(2);
        for p in pts {
            assert!(p.chord(&inf) < 1e-2);
        }
        assert!(sample_limit_set(&g, 0, 1, 7).is_err());
    }

    #[test]
    fn identity_coset_gives_base_cusp() {
        let g = GroupSpec::hecke(3.0);
        let pts = parabolic_orbit(&g, 0, 4.0).unwrap();
        assert!(pts[0].point.chord(&g.cusps[0].point) < 1e-12);
        assert!((pts[0].radius - g.cusps[0].base_radius).abs() < 1e-12);
        assert!(parabolic_orbit(&g, 3, 4.0).is_err());
    }

    #[test]
    fn cusp_validation() {
        let t = Isometry::real(1.0, 3.0, 0.0, 1.0).unwrap();
        let zero = BoundaryPoint::from_half_space(C64::new(0.0, 0.0), 2);
        assert!(CuspDatum::new(zero, 1, 0.5, vec![t]).is_err());
        assert!(CuspDatum::new(BoundaryPoint::infinity(2), 2, 0.5, vec![t]).is_err());
        assert!(CuspDatum::new(BoundaryPoint::infinity(2), 1, 1.5, vec![t]).is_err());
    }

    #[test]
    fn elementary_system_is_one_horoball() {
        let sys = invariant_horoball_system(&GroupSpec::cyclic_parabolic(3.0), 8.0).unwrap();
        assert_eq!(sys.horoballs.len(), 1);
        assert_eq!(sys.shrink_factor, 1.0);
    }
}
