use std::path::PathBuf;

use cuspidal::config::{Config, Section};
use cuspidal::dichotomy::*;
use cuspidal::gauge::{GaugeSpec, MeasureValue, SeriesVerdict};
use cuspidal::group::*;
use cuspidal::hyperbolic::BoundaryPoint;
use cuspidal::measure::*;
use cuspidal::real::Real;
use cuspidal::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{opt, sha256_hex, Outputs};
use crate::{Cli, Command};

pub enum Status {
    Done,
    Undecided(String),
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: Config,
    empty: Section,
    hash: String,
    seed: u64,
}

/// Independent substream `i` of `seed`.
fn split_seed(seed: u64, i: u64) -> u64 {
    seed ^ (i + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn point_cells(p: &BoundaryPoint) -> String {
    p.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn coord_header(dim: usize) -> &'static str {
    if dim == 2 {
        "x,y"
    } else {
        "x,y,z"
    }
}

impl<'a> Ctx<'a> {
    fn new(cli: &'a Cli) -> Result<Self> {
        let path = cli.config.as_ref().ok_or_else(|| Error::Configuration("--config is required".into()))?;
        let bytes = std::fs::read(path).map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Configuration("config is not UTF-8".into()))?;
        let mut cfg = Config::parse(&text)?;
        cfg.base_dir = path.parent().map(|p| p.to_path_buf());
        let run = cfg.section("run").cloned().unwrap_or_default();
        let seed = match cli.seed {
            Some(s) => s,
            None => run.opt("seed")?.unwrap_or(0),
        };
        if let Some(t) = cli.t_max {
            if !(0.0..=40.0).contains(&t) {
                return Err(Error::Configuration(format!("--t-max {t} outside [0, 40]")));
            }
        }
        if let Some(n) = cli.samples {
            if n == 0 || n > 10_000_000 {
                return Err(Error::Configuration(format!("--samples {n} outside [1, 1e7]")));
            }
        }
        Ok(Self { cli, cfg, empty: Section::default(), hash: sha256_hex(&bytes), seed })
    }

    fn sec(&self, name: &str) -> &Section {
        self.cfg.section(name).unwrap_or(&self.empty)
    }

    fn t_max(&self, default: f64) -> Result<f64> {
        if let Some(t) = self.cli.t_max {
            return Ok(t);
        }
        Ok(self.sec("run").ranged("t_max", 0.0, 40.0)?.unwrap_or(default))
    }

    fn samples(&self, section: &str, default: usize) -> Result<usize> {
        if let Some(n) = self.cli.samples {
            return Ok(n);
        }
        Ok(self.sec(section).ranged("samples", 1.0, 1e7)?.map_or(default, |x| x as usize))
    }

    fn outputs(&self, command: &'static str) -> Result<Outputs> {
        let dir = match &self.cli.out {
            Some(d) => d.clone(),
            None => self.sec("run").entry("out").map_or(PathBuf::from("out"), |e| self.cfg.resolve(&e.value)),
        };
        Outputs::new(dir, self.hash.clone(), self.seed, command)
    }

    fn orbit(&self, default_t: f64) -> Result<(GroupSpec, OrbitBall)> {
        let g = self.cfg.group()?;
        let t = self.t_max(default_t)?;
        let cap = self.sec("orbit").ranged("cap", 1.0, 1e8)?.map_or(10_000_000, |x| x as usize);
        let orbit = enumerate_orbit(&g, t, cap)?;
        Ok((g, orbit))
    }

    fn ranks(&self) -> Result<(Real, Real)> {
        let s = self.cfg.require("gauge")?;
        Ok((s.get("kmin")?, s.get("kmax")?))
    }

    /// `[section] delta`, else the growth-rate estimate on the outer half.
    fn delta_for(&self, section: &str, orbit: &OrbitBall) -> Result<f64> {
        match self.sec(section).opt::<f64>("delta")? {
            Some(d) => Ok(d),
            None => Ok(estimate_delta(orbit, (0.5 * orbit.t_max, orbit.t_max))?.delta),
        }
    }

    fn t_grid(&self, section: &str, default: (f64, f64, f64)) -> Result<Vec<f64>> {
        let s = self.sec(section);
        let (a, b, h) = match s.list::<f64>("t_grid")? {
            None => default,
            Some(v) if v.len() == 3 && v[2] > 0.0 && v[0] > 0.0 && v[1] >= v[0] => (v[0], v[1], v[2]),
            Some(_) => {
                let line = s.entry("t_grid").map_or(0, |e| e.line);
                return Err(Error::Parse { line, message: "t_grid = start stop step, with 0 < start <= stop".into() });
            }
        };
        let n = ((b - a) / h + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| a + h * i as f64).collect())
    }

    fn etas(&self, section: &str, orbit: &OrbitBall, count: usize) -> Result<Vec<BoundaryPoint>> {
        let shell = self.sec(section).opt::<f64>("shell")?.unwrap_or(orbit.t_max - 1.0);
        sample_deep_points(orbit, shell, count, self.seed)
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    let ctx = Ctx::new(cli)?;
    match cli.command {
        Command::Orbit => orbit(&ctx),
        Command::Delta => delta(&ctx),
        Command::Limitset => limitset(&ctx),
        Command::GaugeClassify => gauge_classify(&ctx),
        Command::GmfCheck => gmf_check(&ctx),
        Command::Khinchin => khinchin(&ctx),
        Command::Dichotomy => dichotomy(&ctx),
    }
}

fn orbit(ctx: &Ctx) -> Result<Status> {
    let (g, orbit) = ctx.orbit(10.0)?;
    let out = ctx.outputs("orbit")?;
    let mut rows: Vec<&OrbitEntry> = orbit.entries.iter().collect();
    rows.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let cells = |e: &OrbitEntry| e.point.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
    out.csv(
        "orbit.csv",
        &format!("{},distance,word_length", coord_header(g.dim)),
        rows.iter().map(|e| format!("{},{},{}", cells(e), e.distance, e.word_length)),
    )?;
    println!("{} orbit points within {}", orbit.len(), orbit.t_max);
    Ok(Status::Done)
}

#[derive(Serialize)]
struct DeltaReport {
    group: String,
    t_max: f64,
    orbit_points: usize,
    truncated: bool,
    estimate: DeltaEstimate,
}

fn delta(ctx: &Ctx) -> Result<Status> {
    let (g, orbit) = ctx.orbit(10.0)?;
    let window = match ctx.sec("delta").list::<f64>("window")? {
        Some(w) if w.len() == 2 => (w[0], w[1]),
        Some(_) => {
            let line = ctx.sec("delta").entry("window").map_or(0, |e| e.line);
            return Err(Error::Parse { line, message: "window = lo hi".into() });
        }
        None => (0.5 * orbit.t_max, orbit.t_max),
    };
    let estimate = estimate_delta(&orbit, window)?;
    println!("delta = {:.6} on {:?}", estimate.delta, estimate.window);
    let rep = DeltaReport { group: g.label.clone(), t_max: orbit.t_max, orbit_points: orbit.len(), truncated: orbit.truncated, estimate };
    ctx.outputs("delta")?.json("delta.json", &rep)?;
    Ok(Status::Done)
}

fn limitset(ctx: &Ctx) -> Result<Status> {
    let g = ctx.cfg.group()?;
    let depth = ctx.sec("limitset").ranged("depth", 1.0, 200.0)?.map_or(12, |x| x as usize);
    let count = ctx.samples("limitset", 1000)?;
    let pts = sample_limit_set(&g, depth, count, ctx.seed)?;
    ctx.outputs("limitset")?.csv(
        "limitset.csv",
        &format!("{},angle", coord_header(g.dim)),
        pts.iter().map(|p| format!("{},{}", point_cells(p), p.angle())),
    )?;
    Ok(Status::Done)
}

fn gauge_classify(ctx: &Ctx) -> Result<Status> {
    let g = ctx.cfg.gauge()?;
    let (kmin, kmax) = ctx.ranks()?;
    let v = predict_theorem1(&g, kmin, kmax)?;
    println!("hausdorff: {:?}, packing: {:?}", v.hausdorff, v.packing);
    ctx.outputs("gauge-classify")?.json("verdict.json", &v)?;
    if v.is_undecided() {
        let trace: Vec<String> = v.hausdorff_series.iter().chain(&v.packing_series).flat_map(|s| s.trace.clone()).collect();
        return Ok(Status::Undecided(trace.join("; ")));
    }
    Ok(Status::Done)
}

#[derive(Serialize)]
struct GmfSummary {
    group: String,
    delta: f64,
    etas: usize,
    band: Option<(f64, f64)>,
    band_width: Option<f64>,
    unresolved: usize,
    per_eta: Vec<Option<(f64, f64)>>,
}

fn gmf_check(ctx: &Ctx) -> Result<Status> {
    let (g, orbit) = ctx.orbit(12.0)?;
    let delta = ctx.delta_for("gmf", &orbit)?;
    let mu = counting_measure(&orbit)?;
    let sys = invariant_horoball_system_from(&g, &orbit)?;
    let gmf = GmfContext::from_system(delta, &sys)?;
    let etas = ctx.etas("gmf", &orbit, ctx.samples("gmf", 20)?)?;
    let grid = ctx.t_grid("gmf", (1.0, 8.0, 0.25))?;
    let traces: Vec<_> = etas.par_iter().map(|eta| gmf_residual_scan(&mu, &gmf, eta, &grid)).collect::<Result<_>>()?;
    let ranges: Vec<Option<(f64, f64)>> = traces.iter().map(|t| t.range()).collect();
    let band = ranges.iter().flatten().fold(None, |acc: Option<(f64, f64)>, &(a, b)| match acc {
        None => Some((a, b)),
        Some((lo, hi)) => Some((lo.min(a), hi.max(b))),
    });
    let out = ctx.outputs("gmf-check")?;
    out.csv(
        "gmf_traces.csv",
        "eta,t,residual,unresolved",
        traces.iter().enumerate().flat_map(|(i, tr)| {
            tr.t.iter().zip(&tr.values).map(move |(t, v)| format!("{i},{t},{},{}", opt(*v), v.is_none() as u8))
        }),
    )?;
    let summary = GmfSummary {
        group: g.label.clone(),
        delta,
        etas: etas.len(),
        band,
        band_width: band.map(|(a, b)| b - a),
        unresolved: traces.iter().map(|t| t.unresolved_count()).sum(),
        per_eta: ranges,
    };
    if let Some(w) = summary.band_width {
        println!("residual band {w:.4} log-units, {} unresolved", summary.unresolved);
    }
    out.json("gmf_summary.json", &summary)?;
    Ok(Status::Done)
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Phi {
    Constant { c: f64 },
    /// `min(1, c log(1/r)^-p)`.
    LogPower { c: f64, p: f64 },
}

impl Phi {
    fn parse(s: &Section) -> Result<Self> {
        let Some(e) = s.entry("phi") else { return Ok(Phi::Constant { c: 1.0 }) };
        let w: Vec<&str> = e.value.split_whitespace().collect();
        let num = |i: usize| -> Result<f64> {
            w.get(i)
                .and_then(|x| x.parse::<f64>().ok())
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| Error::Parse { line: e.line, message: format!("phi: bad number in {:?}", e.value) })
        };
        match (w.first().copied(), w.len()) {
            (Some("constant"), 2) => Ok(Phi::Constant { c: num(1)? }),
            (Some("log-power"), 3) => Ok(Phi::LogPower { c: num(1)?, p: num(2)? }),
            _ => Err(Error::Parse { line: e.line, message: "phi = constant C | log-power C p".into() }),
        }
    }

    /// `log phi` at `r = exp(-s)`.
    fn log_at(&self, s: f64) -> f64 {
        match *self {
            Phi::Constant { c } => c.ln(),
            Phi::LogPower { c, p } => (c.ln() - p * s.ln()).min(0.0),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(*self, Phi::Constant { c } | Phi::LogPower { c, .. } if c == 0.0)
    }
}

#[derive(Serialize)]
struct KhinchinSummary {
    group: String,
    cusp: usize,
    rank: usize,
    delta: f64,
    exponent: f64,
    phi: Phi,
    series: SeriesVerdict,
    series_exponent: Option<f64>,
    total_hits: usize,
    report: KhinchinReport,
}

fn khinchin(ctx: &Ctx) -> Result<Status> {
    let (g, orbit) = ctx.orbit(14.0)?;
    let s = ctx.sec("khinchin");
    let cusp: usize = s.opt("cusp")?.unwrap_or(0);
    let datum = g.cusps.get(cusp).ok_or_else(|| Error::Configuration(format!("group has no cusp {cusp}")))?;
    let delta = ctx.delta_for("khinchin", &orbit)?;
    let exponent = 2.0 * delta - datum.rank as f64;
    let phi = Phi::parse(s)?;
    let thresholds = s.list::<f64>("thresholds")?.unwrap_or(vec![3.0, 5.0, 7.0]);
    let lambda = s.ranged("lambda", 1e-6, 1.0 - 1e-6)?.unwrap_or(0.5);
    let (series, series_exponent) = if phi.is_zero() {
        (SeriesVerdict::Converges, None)
    } else {
        let v = khinchin_series_verdict(&|r| Ok(phi.log_at(r)), exponent, lambda, 100_000)?;
        let verdict = if v.confident { v.verdict } else { SeriesVerdict::Undecided };
        (verdict, Some(v.exponent))
    };
    let points = parabolic_orbit_from(&g, &orbit, cusp)?;
    let etas = ctx.etas("khinchin", &orbit, ctx.samples("khinchin", 50)?)?;
    let eval = |r: f64| if phi.is_zero() { 0.0 } else { phi.log_at(-r.ln()).exp() };
    let chunks: Vec<Vec<HitRecord>> =
        etas.par_chunks(8).map(|c| khinchin_hits_on(&points, &eval, c)).collect();
    let records: Vec<HitRecord> = chunks
        .into_iter()
        .enumerate()
        .flat_map(|(k, c)| c.into_iter().map(move |r| HitRecord { eta: k * 8 + r.eta, ..r }))
        .collect();
    let report = khinchin_zero_one_estimate(&records, series, &thresholds)?;
    let out = ctx.outputs("khinchin")?;
    out.csv(
        "khinchin_hits.csv",
        "eta,xi,scale,distance",
        records.iter().flat_map(|r| r.hits.iter().map(move |h| format!("{},{},{},{}", r.eta, h.xi, h.scale, h.distance))),
    )?;
    let summary = KhinchinSummary {
        group: g.label.clone(),
        cusp,
        rank: datum.rank,
        delta,
        exponent,
        phi,
        series,
        series_exponent,
        total_hits: records.iter().map(|r| r.hits.len()).sum(),
        report,
    };
    println!("series {:?}; tail fractions {:?}; agrees {}", summary.series, summary.report.fractions, summary.report.agrees);
    out.json("khinchin_summary.json", &summary)?;
    if series == SeriesVerdict::Undecided {
        return Ok(Status::Undecided(format!("Khinchin series exponent {:?} too close to 1", summary.series_exponent)));
    }
    Ok(Status::Done)
}

#[derive(Serialize)]
struct SeedOutcome {
    seed: u64,
    hausdorff: MeasureValue,
    hausdorff_drift: f64,
    packing: MeasureValue,
    packing_drift: f64,
    agrees: bool,
}

#[derive(Serialize)]
struct SyntheticSummary {
    model: ExcursionModel,
    gauge: GaugeSpec,
    events: usize,
    prediction: Verdict,
    agreeing_seeds: usize,
    seeds: Vec<SeedOutcome>,
}

#[derive(Serialize)]
struct EmpiricalSummary {
    group: String,
    gauge: GaugeSpec,
    prediction: Verdict,
    hausdorff: RttReport,
    packing: RttReport,
}

fn dichotomy(ctx: &Ctx) -> Result<Status> {
    let g = ctx.cfg.gauge()?;
    if ctx.cfg.section("synthetic").is_some() {
        synthetic(ctx, g)
    } else {
        empirical(ctx, g)
    }
}

fn synthetic(ctx: &Ctx, g: GaugeSpec) -> Result<Status> {
    let s = ctx.sec("synthetic");
    let (kmin, kmax) = ctx.ranks()?;
    let delta: Real = s.opt("delta")?.unwrap_or(g.delta);
    let events = s.ranged("events", 256.0, 1e9)?.map_or(100_000, |x| x as usize);
    let runs = ctx.samples("synthetic", 10)?;
    let base = ExcursionModel::two_cusp(delta, kmin, kmax, ctx.seed)?;
    let prediction = predict_theorem1(&g, kmin, kmax)?;
    let per_seed: Vec<(u64, [SyntheticVerdict; 2])> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = split_seed(ctx.seed, i);
            synthetic_drift_verdicts(&base.with_seed(seed), &g, events).map(|v| (seed, v))
        })
        .collect::<Result<_>>()?;
    let out = ctx.outputs("dichotomy")?;
    out.csv(
        "dichotomy_windows.csv",
        "seed,mode,log_t,extreme",
        per_seed.iter().flat_map(|(seed, vs)| {
            vs.iter().flat_map(move |v| {
                let mode = if v.mode == RttMode::Hausdorff { "hausdorff" } else { "packing" };
                v.windows.iter().map(move |(x, y)| format!("{seed},{mode},{x},{y}"))
            })
        }),
    )?;
    let duration = s.ranged("trace_duration", 1.0, 1e6)?.unwrap_or(200.0);
    let trace = synthetic_density_trace(&base.with_seed(split_seed(ctx.seed, 0)), &g, duration)?;
    out.csv("dichotomy_trace.csv", "t,log_density", trace.resolved().map(|(t, v)| format!("{t},{v}")))?;
    let seeds: Vec<SeedOutcome> = per_seed
        .iter()
        .map(|(seed, [h, p])| SeedOutcome {
            seed: *seed,
            hausdorff: h.measure,
            hausdorff_drift: h.drift,
            packing: p.measure,
            packing_drift: p.drift,
            agrees: h.measure == prediction.hausdorff && p.measure == prediction.packing,
        })
        .collect();
    let agreeing_seeds = seeds.iter().filter(|s| s.agrees).count();
    println!(
        "predicted H {:?}, P {:?}; {agreeing_seeds}/{} seeds agree",
        prediction.hausdorff,
        prediction.packing,
        seeds.len()
    );
    let undecided = prediction.is_undecided();
    out.json("dichotomy_summary.json", &SyntheticSummary { model: base, gauge: g, events, prediction, agreeing_seeds, seeds })?;
    if undecided {
        return Ok(Status::Undecided("series prediction".into()));
    }
    Ok(Status::Done)
}

fn empirical(ctx: &Ctx, g: GaugeSpec) -> Result<Status> {
    let (group, orbit) = ctx.orbit(12.0)?;
    let ranks: Vec<usize> = group.cusps.iter().map(|c| c.rank).collect();
    let (kmin, kmax) = match (ranks.iter().min(), ranks.iter().max()) {
        (Some(&a), Some(&b)) => (Real::int(a as i64), Real::int(b as i64)),
        _ => ctx.ranks()?,
    };
    let prediction = predict_theorem1(&g, kmin, kmax)?;
    let mu = counting_measure(&orbit)?;
    let etas = ctx.etas("dichotomy", &orbit, ctx.samples("dichotomy", 40)?)?;
    let grid = ctx.t_grid("dichotomy", (1.0, 0.75 * orbit.t_max, 0.25))?;
    let traces: Vec<_> = etas.par_iter().map(|eta| density_trace(&mu, &g, eta, &grid)).collect::<Result<_>>()?;
    let hausdorff = rtt_verdict(&traces, RttMode::Hausdorff)?;
    let packing = rtt_verdict(&traces, RttMode::Packing)?;
    let out = ctx.outputs("dichotomy")?;
    out.csv(
        "dichotomy_traces.csv",
        "eta,t,log_density,unresolved",
        traces.iter().enumerate().flat_map(|(i, tr)| {
            tr.t.iter().zip(&tr.values).map(move |(t, v)| format!("{i},{t},{},{}", opt(*v), v.is_none() as u8))
        }),
    )?;
    println!("sandwich: H {:?}, P {:?}", hausdorff.verdict, packing.verdict);
    let undecided = hausdorff.verdict == SandwichVerdict::Undecided || packing.verdict == SandwichVerdict::Undecided;
    out.json("dichotomy_summary.json", &EmpiricalSummary { group: group.label.clone(), gauge: g, prediction, hausdorff, packing })?;
    if undecided {
        return Ok(Status::Undecided("density traces drift in different directions".into()));
    }
    Ok(Status::Done)
}
