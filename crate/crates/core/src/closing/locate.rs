//! Newton location of the periodic point shadowing a return pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::charts::build_charts;
use super::manifold::{invariance_error, local_manifolds, polyline_dist, splitting};
use super::pair::{find_return_pair, PairTally, ReturnThresholds};
use super::verify::{toy_boxes, verify_hyperbolic_map};
use crate::cocycle::cocycle_trace;
use crate::error::{Error, Result};
use crate::geometry::{Mat2, TorusPoint, Vec2};
use crate::maps::SurfaceMap;
use crate::pliss::good_indices;

/// Hyperbolic periodic point with its splitting and local manifolds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPoint {
    pub z: TorusPoint<f64>,
    pub period: usize,
    #[serde(rename = "Es")]
    pub es: Vec2<f64>,
    #[serde(rename = "Eu")]
    pub eu: Vec2<f64>,
    pub eig_s: f64,
    pub eig_u: f64,
    #[serde(rename = "Ws")]
    pub ws: Vec<TorusPoint<f64>>,
    #[serde(rename = "Wu")]
    pub wu: Vec<TorusPoint<f64>>,
    /// Angle between `Es` and `Eu`.
    pub alpha: f64,
    pub r: f64,
    pub lip_s: f64,
    pub lip_u: f64,
    /// `|f^period(z) - z|`.
    pub residual: f64,
}

impl HyperbolicPoint {
    /// Broken type invariants, empty when the point is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eig_s.abs() < 1.0 && 1.0 < self.eig_u.abs()) {
            out.push(format!("eigenvalues {} {} do not straddle 1", self.eig_s, self.eig_u));
        }
        if ((self.eig_s * self.eig_u).abs() - 1.0).abs() > 1e-6 {
            out.push(format!("eigenvalue product {}", self.eig_s * self.eig_u));
        }
        if !(self.lip_s < 0.01 && self.lip_u < 0.01) {
            out.push(format!("Lipschitz constants {} {}", self.lip_s, self.lip_u));
        }
        if self.es.line_angle(self.eu) < self.alpha - 1e-12 {
            out.push("splitting angle below alpha".into());
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.eig_s + self.eig_u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocateConfig {
    /// Manifold radius.
    pub r: f64,
    /// Half-width of the fallback seed grid in the chart at `i1`.
    pub box_radius: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LocateConfig {
    fn default() -> Self {
        Self { r: 1e-2, box_radius: 1e-3, max_iter: 50, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub point: HyperbolicPoint,
    /// Residual after each Newton iterate of the successful run.
    pub residuals: Vec<f64>,
    /// 0 for the chart origin, `1..=25` for the fallback grid.
    pub seed_index: usize,
    /// `d(f^{i2}(x), W^u(z))`.
    pub shadowing_distance: f64,
}

fn residual_vec(map: &SurfaceMap<f64>, z: TorusPoint<f64>, p: usize) -> Vec2<f64> {
    z.displacement_to(&map.iterate(z, p as i64))
}

enum Newton {
    Converged(TorusPoint<f64>, Vec<f64>),
    Singular(f64),
    Failed(f64),
}

/// Damped Newton on `f^p(z) - z`; keeps polishing a few steps past `tol`.
fn newton(map: &SurfaceMap<f64>, seed: TorusPoint<f64>, p: usize, cfg: &LocateConfig) -> Newton {
    let mut z = seed;
    let mut res = residual_vec(map, z, p);
    let mut hist = vec![res.norm()];
    let mut polish = 0;
    for _ in 0..cfg.max_iter {
        if res.norm() < cfg.tol {
            polish += 1;
            if polish > 3 || res.norm() == 0.0 {
                break;
            }
        }
        let j = map.derivative_iter(z, p);
        let jm = Mat2::new(j.a - 1.0, j.b, j.c, j.d - 1.0);
        let Some(inv) = jm.inverse().filter(|_| jm.det().abs() > 1e-14 * j.frobenius().max(1.0)) else {
            return Newton::Singular(j.trace());
        };
        let step = inv.mul_vec(res);
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = z.translate(step.scale(-lam));
            let r2 = residual_vec(map, cand, p);
            if r2.norm() < res.norm() {
                z = cand;
                res = r2;
                accepted = true;
                break;
            }
            lam /= 2.0;
        }
        if !accepted {
            break;
        }
        hist.push(res.norm());
    }
    if res.norm() < cfg.tol {
        Newton::Converged(z, hist)
    } else {
        Newton::Failed(res.norm())
    }
}

fn divisors(p: usize) -> impl Iterator<Item = usize> {
    (1..=p).filter(move |d| p.is_multiple_of(*d))
}

/// Builds the certified point at `z` of (not necessarily primitive) period `p`.
pub fn certify_periodic_point(map: &SurfaceMap<f64>, z: TorusPoint<f64>, p: usize, cfg: &LocateConfig) -> Result<HyperbolicPoint> {
    let period = divisors(p).find(|&d| z.dist(&map.iterate(z, d as i64)) < 1e-8).unwrap_or(p);
    let z = match newton(map, z, period, cfg) {
        Newton::Converged(z2, _) => z2,
        _ => z,
    };
    let m = map.derivative_iter(z, period);
    let det = map.derivative_iter_det(z, period);
    if (det.abs() - 1.0).abs() < 1e-6 && m.trace().abs() <= 2.0 + 1e-9 {
        return Err(Error::NotHyperbolic { trace: m.trace() });
    }
    let (eig_u, eig_s, eu, es) = splitting(&m, det).ok_or(Error::NotHyperbolic { trace: m.trace() })?;
    let man = local_manifolds(map, z, period, cfg.r)?;
    if !(man.lip_s < 0.01 && man.lip_u < 0.01) {
        return Err(Error::ManifoldBuildFailed(format!(
            "Lipschitz constants {:.3e}, {:.3e} not below 1/100 at r = {}",
            man.lip_s, man.lip_u, cfg.r
        )));
    }
    Ok(HyperbolicPoint {
        z,
        period,
        es,
        eu,
        eig_s,
        eig_u,
        alpha: es.line_angle(eu),
        r: cfg.r,
        lip_s: man.lip_s,
        lip_u: man.lip_u,
        residual: residual_vec(map, z, period).norm(),
        ws: man.ws,
        wu: man.wu,
    })
}

/// Newton from the orbit point `f^{i1}(x)`, then from a 5x5 grid around it
/// in the singular frame at `i1`.
pub fn locate_periodic_point(map: &SurfaceMap<f64>, x: TorusPoint<f64>, i1: usize, i2: usize, cfg: &LocateConfig) -> Result<Location> {
    if i2 <= i1 {
        return Err(Error::InvalidInput(format!("need i2 > i1, got ({i1}, {i2})")));
    }
    let p = i2 - i1;
    let origin = map.iterate(x, i1 as i64);
    let frame = cocycle_trace(map, x, i2)
        .map(|t| Mat2::from_cols(t.vu[i1], t.vs[i1]))
        .unwrap_or_else(|_| Mat2::identity());
    let mut seeds = vec![origin];
    let ticks = [-1.0, -0.5, 0.0, 0.5, 1.0];
    for v in ticks {
        for w in ticks {
            seeds.push(origin.translate(frame.mul_vec(Vec2::new(v, w).scale(cfg.box_radius))));
        }
    }
    let mut best = f64::INFINITY;
    for (k, s) in seeds.iter().enumerate() {
        match newton(map, *s, p, cfg) {
            Newton::Converged(z, residuals) => {
                let point = certify_periodic_point(map, z, p, cfg)?;
                let target = map.iterate(x, i2 as i64);
                let shadowing_distance = polyline_dist(target, &point.wu);
                return Ok(Location { point, residuals, seed_index: k, shadowing_distance });
            }
            Newton::Singular(trace) => {
                if trace.abs() <= 2.0 + 1e-9 {
                    return Err(Error::NotHyperbolic { trace });
                }
            }
            Newton::Failed(r) => best = best.min(r),
        }
    }
    Err(Error::NewtonDiverged { residual: best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestConfig {
    pub seeds: usize,
    pub q: usize,
    pub seed: u64,
    pub thresholds: ReturnThresholds,
    pub locate: LocateConfig,
    /// Run the sampled box/cone certificate on each accepted chart sequence.
    pub certify_charts: bool,
}

impl HarvestConfig {
    pub fn toy(seeds: usize, q: usize, seed: u64) -> Self {
        Self { seeds, q, seed, thresholds: ReturnThresholds::toy(q), locate: LocateConfig::default(), certify_charts: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub start: TorusPoint<f64>,
    pub pair: Option<(usize, usize)>,
    pub tally: PairTally,
    pub chart_certificate: Option<bool>,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harvest {
    /// Distinct points (up to 1e-6), in seed order.
    pub points: Vec<HyperbolicPoint>,
    pub attempts: Vec<Attempt>,
    pub invariance: Vec<(f64, f64)>,
}

impl Harvest {
    pub fn pairs_found(&self) -> usize {
        self.attempts.iter().filter(|a| a.pair.is_some()).count()
    }

    /// Number of distinct periodic orbits among the points.
    pub fn orbits(&self, map: &SurfaceMap<f64>) -> usize {
        let mut reps: Vec<&HyperbolicPoint> = Vec::new();
        for p in &self.points {
            let same = reps.iter().any(|q| {
                q.period == p.period && map.orbit(q.z, q.period).iter().any(|y| y.dist(&p.z) < 1e-6)
            });
            if !same {
                reps.push(p);
            }
        }
        reps.len()
    }
}

fn attempt(map: &SurfaceMap<f64>, x: TorusPoint<f64>, cfg: &HarvestConfig) -> (Attempt, Option<HyperbolicPoint>) {
    let mut a = Attempt { start: x, pair: None, tally: PairTally::default(), chart_certificate: None, outcome: String::new() };
    let trace = match cocycle_trace(map, x, cfg.q) {
        Ok(t) => t,
        Err(e) => {
            a.outcome = e.to_string();
            return (a, None);
        }
    };
    let good = good_indices(&trace.lam_e, cfg.thresholds.level);
    let search = find_return_pair(&trace, &good, &cfg.thresholds);
    a.tally = search.tally;
    a.pair = search.pair;
    let Some((i1, i2)) = search.pair else {
        a.outcome = "no return pair".into();
        return (a, None);
    };
    if cfg.certify_charts {
        a.chart_certificate = build_charts(map, &trace, i1, i2).ok().and_then(|ch| {
            let (boxes, cones) = toy_boxes(&ch, cfg.locate.box_radius, 0.1);
            let delta = map.norm_bounds().a.ln() / 100.0;
            verify_hyperbolic_map(&ch, &boxes, &cones, delta).ok().map(|r| r.holds)
        });
    }
    match locate_periodic_point(map, x, i1, i2, &cfg.locate) {
        Ok(loc) => {
            a.outcome = format!("period {} found from seed {}", loc.point.period, loc.seed_index);
            (a, Some(loc.point))
        }
        Err(e) => {
            a.outcome = e.to_string();
            (a, None)
        }
    }
}

/// Random starting points, return-pair search and Newton location for each.
pub fn harvest(map: &SurfaceMap<f64>, cfg: &HarvestConfig) -> Harvest {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<TorusPoint<f64>> = (0..cfg.seeds).map(|_| TorusPoint::new(rng.gen(), rng.gen())).collect();
    harvest_from(map, &starts, cfg)
}

/// [`harvest`] from given starting points; `cfg.seeds` and `cfg.seed` are unused.
pub fn harvest_from(map: &SurfaceMap<f64>, starts: &[TorusPoint<f64>], cfg: &HarvestConfig) -> Harvest {
    let results: Vec<(Attempt, Option<HyperbolicPoint>)> = starts.par_iter().map(|x| attempt(map, *x, cfg)).collect();
    let mut points: Vec<HyperbolicPoint> = Vec::new();
    let mut attempts = Vec::with_capacity(results.len());
    for (a, p) in results {
        attempts.push(a);
        if let Some(p) = p {
            if !points.iter().any(|q| q.z.dist(&p.z) < 1e-6) {
                points.push(p);
            }
        }
    }
    let invariance = points.iter().map(|p| {
        let man = super::manifold::LocalManifolds { ws: p.ws.clone(), wu: p.wu.clone(), lip_s: p.lip_s, lip_u: p.lip_u };
        invariance_error(map, p.z, p.period, &man, p.r)
    }).collect();
    Harvest { points, attempts, invariance }
}
