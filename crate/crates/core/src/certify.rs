//! The iterative decomposition of the torus and the two entropy pipelines
//! built on it.
//!
//! Every run is desk scale: the level cascade comes from a toy schedule, the
//! sets `G_k` are built from harvested points only, and their measures are
//! lower bounds. A verdict is positive only when hetero finds an explicit
//! mechanism; the counting arguments are reported as diagnostics.

use rayon::prelude::*;
use serde::Serialize;

use crate::bowen::{bowen_distance, complexity_slope, cover_series, recurrent_set, sparse_check, CoverConfig, RegionMask, SparseReport, TorusSystem};
use crate::closing::{harvest_from, HarvestConfig, HyperbolicPoint};
use crate::cocycle::log_norm_growth;
use crate::error::{Error, Result};
use crate::geometry::{TorusPoint, Vec2};
use crate::hetero::{grow, verdict, Diagnostics, EntropyVerdict, HeteroConfig};
use crate::maps::SurfaceMap;
use crate::schedule::{threshold_check, toy_threshold_check, LogTower, Schedule, ThresholdReport, ToySchedule};

/// Cascades longer than this many map evaluations per cell are refused.
const MAX_PLAIN_STEPS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScheduleSource {
    Toy(ToySchedule),
    Cascade(Schedule),
}

/// Plain-number levels `q_k, l_k, xi_k, lambda_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct Levels {
    q: Vec<usize>,
    l: Vec<usize>,
    eta: f64,
    xi: Vec<f64>,
    lambda: Vec<f64>,
}

impl Levels {
    fn new(src: &ScheduleSource) -> Result<Self> {
        match src {
            ScheduleSource::Toy(t) => {
                t.validate()?;
                Ok(Self {
                    q: t.q.iter().map(|&v| v as usize).collect(),
                    l: t.l.iter().map(|&v| v as usize).collect(),
                    eta: t.eta,
                    xi: (0..t.levels()).map(|k| t.xi_at(k)).collect(),
                    lambda: (0..t.levels()).map(|k| t.lambda_at(k)).collect(),
                })
            }
            ScheduleSource::Cascade(s) => {
                let refuse = || Error::ScheduleNotRepresentable("cascade levels exceed plain-real range; use a toy schedule".into());
                let (q, l) = s.to_plain().ok_or_else(refuse)?;
                if q.iter().zip(&l).any(|(a, b)| a * b > MAX_PLAIN_STEPS) {
                    return Err(refuse());
                }
                let neg = |v: &LogTower| v.to_f64().map(|x| (-x).exp()).ok_or_else(refuse);
                Ok(Self {
                    q: q.iter().map(|&v| v as usize).collect(),
                    l: l.iter().map(|&v| v as usize).collect(),
                    eta: s.eta,
                    xi: s.xi_neg_log.iter().map(neg).collect::<Result<_>>()?,
                    lambda: s.lambda_neg_log.iter().map(neg).collect::<Result<_>>()?,
                })
            }
        }
    }

    fn count(&self) -> usize {
        self.q.len()
    }

    /// Time scale of level `k`, with `q_{K+1} = q_K l_K` past the end.
    fn q_at(&self, k: usize) -> usize {
        if k < self.q.len() {
            self.q[k]
        } else {
            let last = self.q.len() - 1;
            self.q[last] * self.l[last]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecomposeConfig {
    /// Mask resolution `G`.
    pub grid: usize,
    pub seeds_per_level: usize,
    pub theta0: f64,
    pub harvest: HarvestConfig,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { grid: 64, seeds_per_level: 16, theta0: 0.99, harvest: HarvestConfig::toy(0, 400, 0) }
    }
}

/// Cells of `M_k` checked against `log ||Df^{q_k}|| <= q_k theta0^k log A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub k: usize,
    pub q: usize,
    pub log_bound: f64,
    pub checked: usize,
    pub violations: usize,
    /// Violating cells with no neighbor in `E_k`, so not explained by
    /// the cell resolution.
    pub interior_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub k: usize,
    pub q: usize,
    pub l: usize,
    pub xi: f64,
    pub lambda: f64,
    pub recurrent_measure: f64,
    /// Cells outside the recurrent set that break the next level's bound.
    pub candidate_cells: usize,
    pub seeds: usize,
    pub harvested: usize,
    /// Harvested points that are `lambda_k`-hyperbolic.
    pub qualifying: usize,
    /// Lower bound: only harvested points contribute.
    pub g_measure: f64,
    pub f_measure: f64,
    pub e_prev_measure: f64,
    pub e_measure: f64,
    /// `eta^-1 |E_k| + l_k |G_k|`.
    pub recursion_bound: f64,
    pub grid_error: f64,
    pub recursion_holds: bool,
    pub recursion_holds_strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub toy: bool,
    pub eta: f64,
    pub grid: usize,
    pub levels: Vec<LevelReport>,
    /// Checks on `M_0 .. M_{K+1}`.
    pub derivative_checks: Vec<DerivativeCheck>,
    #[serde(skip)]
    pub e: Vec<RegionMask>,
    #[serde(skip)]
    pub m: Vec<RegionMask>,
    #[serde(skip)]
    pub g: Vec<RegionMask>,
    /// Distinct harvested points over all levels.
    pub points: Vec<HyperbolicPoint>,
    pub notes: Vec<String>,
}

impl Decomposition {
    pub fn recursion_holds(&self) -> bool {
        self.levels.iter().all(|l| l.recursion_holds)
    }

    pub fn interior_violations(&self) -> usize {
        self.derivative_checks.iter().map(|c| c.interior_violations).sum()
    }
}

fn log_norm_at(map: &SurfaceMap<f64>, p: TorusPoint<f64>, q: usize) -> f64 {
    *log_norm_growth(map, p, q).last().expect("non-empty")
}

/// Slack for comparing equal logs, e.g. `||Df|| = A` on the cat map.
fn exceeds(v: f64, bound: f64) -> bool {
    v > bound + 1e-9 * bound.abs().max(1.0)
}

fn has_neighbor_in(mask: &RegionMask, idx: usize) -> bool {
    let g = mask.resolution as i64;
    let (i, j) = ((idx as i64) % g, (idx as i64) / g);
    (-1..=1).any(|dx| {
        (-1..=1).any(|dy| mask.bits[((j + dy).rem_euclid(g) * g + (i + dx).rem_euclid(g)) as usize])
    })
}

fn derivative_check(map: &SurfaceMap<f64>, m: &RegionMask, e: &RegionMask, k: usize, q: usize, log_bound: f64) -> DerivativeCheck {
    let cells: Vec<usize> = (0..m.bits.len()).filter(|&i| m.bits[i]).collect();
    let bad: Vec<usize> =
        cells.par_iter().copied().filter(|&i| exceeds(log_norm_at(map, m.cell_center(i), q), log_bound)).collect();
    let interior = bad.iter().filter(|&&i| !has_neighbor_in(e, i)).count();
    DerivativeCheck { k, q, log_bound, checked: cells.len(), violations: bad.len(), interior_violations: interior }
}

/// `W^u` of `p` cut to radius `rad` around the point.
fn clipped_unstable(p: &HyperbolicPoint, rad: f64) -> Vec<TorusPoint<f64>> {
    let mut out: Vec<TorusPoint<f64>> = p.wu.iter().copied().filter(|y| p.z.dist(y) <= rad).collect();
    if out.is_empty() {
        out.push(p.z);
    }
    out
}

fn neighborhood_mask(g: usize, pieces: &[Vec<TorusPoint<f64>>], xi: f64) -> RegionMask {
    let mut mask = RegionMask::empty(g);
    if pieces.is_empty() {
        return mask;
    }
    mask.bits = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let c = mask.cell_center(idx);
            pieces.iter().any(|line| crate::closing::polyline_dist(c, line) < xi)
        })
        .collect();
    mask
}

/// Whether `pt` is `(lambda^2, lambda^3)`-hyperbolic.
fn lambda_hyperbolic(pt: &HyperbolicPoint, lambda: f64) -> bool {
    pt.alpha >= lambda * lambda && pt.r >= lambda.powi(3) && pt.violations().is_empty()
}

/// Builds `E_0 = {}`, `E_{k+1} = R(E_k, eta, l_k, f^{q_k}) u F_k` on a grid.
pub fn decompose(map: &SurfaceMap<f64>, src: &ScheduleSource, cfg: &DecomposeConfig) -> Result<Decomposition> {
    let lv = Levels::new(src)?;
    if cfg.grid < 4 || !(cfg.theta0 > 0.5 && cfg.theta0 < 1.0) {
        return Err(Error::InvalidInput("decompose needs grid >= 4 and theta0 in (1/2, 1)".into()));
    }
    let g = cfg.grid;
    let log_a = map.norm_bounds().a.ln();
    let bound = |k: usize| lv.q_at(k) as f64 * cfg.theta0.powi(k as i32) * log_a;
    let mut notes = vec!["G_k uses harvested points only; its measures are lower bounds".to_string()];
    if matches!(src, ScheduleSource::Toy(_)) {
        notes.push("toy schedule: levels are not the cascade".into());
    }

    let mut e = vec![RegionMask::empty(g)];
    let mut m = vec![RegionMask::full(g)];
    let mut gs = Vec::new();
    let mut levels = Vec::new();
    let mut points: Vec<HyperbolicPoint> = Vec::new();
    let mut checks = vec![derivative_check(map, &m[0], &e[0], 0, lv.q_at(0), bound(0))];

    for k in 0..lv.count() {
        let (q, l) = (lv.q[k], lv.l[k]);
        let rec = recurrent_set(map, &e[k], lv.eta, l, q)?;
        let next_bound = bound(k + 1);
        let next_q = lv.q_at(k + 1);
        let candidates: Vec<usize> = (0..g * g)
            .into_par_iter()
            .filter(|&i| !rec.mask.bits[i] && exceeds(log_norm_at(map, rec.mask.cell_center(i), next_q), next_bound))
            .collect();
        let seeds: Vec<TorusPoint<f64>> = if candidates.is_empty() || cfg.seeds_per_level == 0 {
            Vec::new()
        } else {
            let stride = (candidates.len() as f64 / cfg.seeds_per_level as f64).max(1.0);
            (0..cfg.seeds_per_level.min(candidates.len()))
                .map(|j| rec.mask.cell_center(candidates[(j as f64 * stride) as usize]))
                .collect()
        };
        let found = if seeds.is_empty() { Vec::new() } else { harvest_from(map, &seeds, &cfg.harvest).points };
        let qualifying: Vec<&HyperbolicPoint> = found.iter().filter(|p| lambda_hyperbolic(p, lv.lambda[k])).collect();
        let pieces: Vec<Vec<TorusPoint<f64>>> =
            qualifying.iter().map(|p| clipped_unstable(p, lv.lambda[k].powi(3))).collect();
        let gk = neighborhood_mask(g, &pieces, lv.xi[k]);

        // F_k: cells whose f^{j q} image lands in G_k for some 1 <= j <= l
        let fk = RegionMask {
            resolution: g,
            bits: (0..g * g)
                .into_par_iter()
                .map(|i| {
                    if gk.is_empty() {
                        return false;
                    }
                    let mut p = gk.cell_center(i);
                    (1..=l).any(|_| {
                        p = map.iterate(p, q as i64);
                        gk.contains(p)
                    })
                })
                .collect(),
        };
        let ek1 = rec.mask.union(&fk);
        let lip = map.norm_bounds().a.powf((q * l) as f64);
        let f_error = if fk.is_empty() { 0.0 } else { 4.0 * l as f64 * lip / g as f64 };
        let grid_error = rec.grid_error + f_error;
        let recursion_bound = e[k].measure() / lv.eta + l as f64 * gk.measure();
        let e_measure = ek1.measure();
        let harvested = found.len();
        let qualifying = qualifying.len();

        for p in found {
            if !points.iter().any(|y| y.z.dist(&p.z) < 1e-6) {
                points.push(p);
            }
        }
        levels.push(LevelReport {
            k,
            q,
            l,
            xi: lv.xi[k],
            lambda: lv.lambda[k],
            recurrent_measure: rec.measure,
            candidate_cells: candidates.len(),
            seeds: seeds.len(),
            harvested,
            qualifying,
            g_measure: gk.measure(),
            f_measure: fk.measure(),
            e_prev_measure: e[k].measure(),
            e_measure,
            recursion_bound,
            grid_error,
            recursion_holds: e_measure <= recursion_bound + grid_error,
            recursion_holds_strict: e_measure <= recursion_bound,
        });
        let mk1 = ek1.complement();
        checks.push(derivative_check(map, &mk1, &ek1, k + 1, next_q, next_bound));
        e.push(ek1);
        m.push(mk1);
        gs.push(gk);
    }
    Ok(Decomposition { toy: matches!(src, ScheduleSource::Toy(_)), eta: lv.eta, grid: g, levels, derivative_checks: checks, e, m, g: gs, points, notes })
}

/// `mu_{x,n} = (1/n) sum_{m<n} delta_{f^m x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    pub x: TorusPoint<f64>,
    pub n: usize,
}

impl EmpiricalMeasure {
    pub fn new(x: TorusPoint<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("empirical measure needs n >= 1".into()));
        }
        Ok(Self { x, n })
    }

    /// `#{m < n : f^{m + l}(x) in B}`, i.e. `n mu(f^-l B)`.
    pub fn preimage_count(&self, map: &SurfaceMap<f64>, b: &RegionMask, l: usize) -> usize {
        let orbit = map.orbit(self.x, self.n + l - 1);
        orbit[l..].iter().filter(|p| b.contains(**p)).count()
    }

    pub fn measure(&self, map: &SurfaceMap<f64>, b: &RegionMask) -> f64 {
        self.preimage_count(map, b, 0) as f64 / self.n as f64
    }

    pub fn preimage_measure(&self, map: &SurfaceMap<f64>, b: &RegionMask, l: usize) -> f64 {
        self.preimage_count(map, b, l) as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigBallReport {
    /// The visit-frequency precondition `#{i : a_i > h q / 4} <= eta l`.
    pub applicable: bool,
    pub exceedances: usize,
    pub allowed: f64,
    /// `a_i = log ||Df^q(f^{iq} y)||`.
    pub a: Vec<f64>,
    /// Nested radii `delta_i = e^{-2nh/5 + i q h/24 + sum_{j<i} a_j} delta`.
    pub radii: Vec<f64>,
    pub radius: f64,
    /// Largest n-step Bowen distance from `y` over the sampled circle.
    pub max_distance: f64,
    pub holds: bool,
    /// `delta - max_distance`.
    pub margin: f64,
}

impl BigBallReport {
    pub fn passes(&self) -> bool {
        self.applicable && self.holds
    }
}

/// Checks `B(y, e^{-2nh/5} delta)` inside the Bowen ball `B_f(y, n, delta)`
/// on 256 boundary points.
#[allow(clippy::too_many_arguments)]
pub fn big_ball_check(
    map: &SurfaceMap<f64>,
    y: TorusPoint<f64>,
    n: usize,
    h: f64,
    delta: f64,
    q: usize,
    l: usize,
    eta: f64,
) -> Result<BigBallReport> {
    if n == 0 || q == 0 || l == 0 || !(h > 0.0) || !(delta > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidInput("big ball check needs n, q, l >= 1 and positive h, delta, eta".into()));
    }
    let a: Vec<f64> = (0..l).map(|i| log_norm_at(map, map.iterate(y, (i * q) as i64), q)).collect();
    let exceedances = a.iter().filter(|&&v| v > h * q as f64 / 4.0).count();
    let allowed = eta * l as f64;
    let base = -2.0 * n as f64 * h / 5.0;
    let mut sum = 0.0;
    let radii: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(i, ai)| {
            let r = (base + i as f64 * q as f64 * h / 24.0 + sum).exp() * delta;
            sum += ai;
            r
        })
        .collect();
    let radius = base.exp() * delta;
    let max_distance = (0..256)
        .into_par_iter()
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / 256.0;
            let p = y.translate(Vec2::new(t.cos(), t.sin()).scale(radius));
            bowen_distance(map, y, p, n)
        })
        .reduce(|| 0.0, f64::max);
    Ok(BigBallReport {
        applicable: exceedances as f64 <= allowed,
        exceedances,
        allowed,
        a,
        radii,
        radius,
        max_distance,
        holds: max_distance < delta,
        margin: delta - max_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub decompose: DecomposeConfig,
    pub samples: usize,
    pub seed: u64,
    pub hetero: HeteroConfig,
    /// Arclength per side of the manifolds handed to hetero.
    pub grow_length: f64,
    /// Block fraction `c` and radius of the sparse test.
    pub sparse_c: f64,
    pub sparse_delta: f64,
    pub sparse_trials: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            decompose: DecomposeConfig::default(),
            samples: 20_000,
            seed: 42,
            hetero: HeteroConfig::default(),
            grow_length: 1.5,
            sparse_c: 0.5,
            sparse_delta: 0.05,
            sparse_trials: 64,
        }
    }
}

fn threshold(src: &ScheduleSource, n: usize) -> ThresholdReport {
    match src {
        ScheduleSource::Toy(t) => toy_threshold_check(t, n as f64),
        ScheduleSource::Cascade(s) => threshold_check(s, LogTower::from_f64(n as f64)),
    }
}

fn gated(report: ThresholdReport, mut diag: Diagnostics, why: &str) -> EntropyVerdict {
    diag.note(why);
    EntropyVerdict { threshold_report: Some(report), ..EntropyVerdict::inconclusive(diag) }
}

fn record_decomposition(diag: &mut Diagnostics, dec: &Decomposition) {
    for lv in &dec.levels {
        let k = lv.k;
        diag.set(&format!("level{k}.recurrent_measure"), lv.recurrent_measure);
        diag.set(&format!("level{k}.g_measure_lower"), lv.g_measure);
        diag.set(&format!("level{k}.f_measure"), lv.f_measure);
        diag.set(&format!("level{k}.e_next_measure"), lv.e_measure);
        diag.set(&format!("level{k}.recursion_bound"), lv.recursion_bound);
        diag.set(&format!("level{k}.grid_error"), lv.grid_error);
        diag.set(&format!("level{k}.harvested"), lv.qualifying as f64);
    }
    for c in &dec.derivative_checks {
        diag.set(&format!("m{}.derivative_violations", c.k), c.violations as f64);
        diag.set(&format!("m{}.interior_violations", c.k), c.interior_violations as f64);
    }
    diag.set("decomposition.points", dec.points.len() as f64);
    diag.notes.extend(dec.notes.iter().cloned());
}

/// Hetero verdict on the harvested points with grown manifolds; its values
/// go under `hetero.`.
fn hetero_stage(map: &SurfaceMap<f64>, pts: &[HyperbolicPoint], cfg: &PipelineConfig, mut diag: Diagnostics, report: ThresholdReport) -> EntropyVerdict {
    let grown: Vec<HyperbolicPoint> = pts.iter().filter_map(|p| grow(map, p, cfg.grow_length).ok()).collect();
    if grown.len() < pts.len() {
        diag.note(format!("{} of {} points could not be grown", pts.len() - grown.len(), pts.len()));
    }
    let mut v = verdict(&grown, &cfg.hetero);
    for (k, val) in std::mem::take(&mut v.diagnostics.values) {
        diag.set(&format!("hetero.{k}"), val);
    }
    diag.notes.append(&mut v.diagnostics.notes);
    if v.mechanism.is_none() {
        diag.note("no explicit mechanism; paper criteria above are diagnostics only");
    }
    v.diagnostics = diag;
    v.threshold_report = Some(report);
    v
}

fn validate(h: f64, eps: f64, n: usize) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) || !(eps > 0.0 && eps < 1.0) || n == 0 {
        return Err(Error::InvalidInput("need h > 0, eps in (0, 1) and n >= 1".into()));
    }
    Ok(())
}

/// Complexity, decomposition and heteroclinic search for `N_f(n, delta, eps) > e^{nh}`.
pub fn theorem_a_pipeline(
    map: &SurfaceMap<f64>,
    h: f64,
    delta: f64,
    eps: f64,
    n: usize,
    src: &ScheduleSource,
    cfg: &PipelineConfig,
) -> Result<EntropyVerdict> {
    validate(h, eps, n)?;
    let log_a = map.norm_bounds().a.ln();
    let mut diag = Diagnostics::default();
    diag.set("log_a", log_a);
    diag.set("h", h);
    if h > log_a {
        diag.note("h exceeds log A, so the complexity hypothesis cannot hold");
    }
    let report = threshold(src, n);
    if !report.passes {
        return Ok(gated(report, diag, "time threshold not met"));
    }

    let cover = CoverConfig { delta, eps, samples: cfg.samples, seed: cfg.seed, separated: false };
    let ns: Vec<usize> = (1..=n).collect();
    let series = cover_series(&TorusSystem { map }, &ns, &cover)?;
    let upper = series.last().expect("n >= 1").upper;
    diag.set("cover_upper_at_n", upper as f64);
    diag.set("log_cover_upper_at_n", (upper as f64).ln());
    diag.set("nh", n as f64 * h);
    diag.set("complexity_hypothesis", f64::from(u8::from((upper as f64).ln() > n as f64 * h)));
    diag.note("complexity hypothesis compares a greedy upper bound, not N_f itself");
    let counts: Vec<(usize, f64)> = series.iter().map(|c| (c.n, c.upper as f64)).collect();
    if let Ok(s) = complexity_slope(&counts) {
        diag.set("complexity_slope", s);
    }

    let dec = decompose(map, src, &cfg.decompose)?;
    record_decomposition(&mut diag, &dec);
    let big_k = dec.levels.len() - 1;
    let eta = dec.eta;
    let eps_k1 = dec.levels[big_k].e_measure;
    diag.set("e_final_measure", eps_k1);
    diag.set("e_final_reaches_eps", f64::from(u8::from(eps_k1 >= eps)));
    let mut fired = false;
    for lv in &dec.levels {
        let need = eta.powi((big_k - lv.k) as i32) * eps / ((big_k + 1) as f64 * lv.l as f64);
        diag.set(&format!("level{}.g_size_needed", lv.k), need);
        fired |= lv.g_measure >= need;
    }
    diag.set("g_size_criterion_fired", f64::from(u8::from(fired)));
    Ok(hetero_stage(map, &dec.points, cfg, diag, report))
}

/// Growth, sparseness, decomposition and heteroclinic search along the orbit of `x`.
#[allow(clippy::too_many_arguments)]
pub fn theorem_b_pipeline(
    map: &SurfaceMap<f64>,
    x: TorusPoint<f64>,
    h: f64,
    eps: f64,
    n: usize,
    src: &ScheduleSource,
    cfg: &PipelineConfig,
) -> Result<EntropyVerdict> {
    validate(h, eps, n)?;
    let log_a = map.norm_bounds().a.ln();
    let mut diag = Diagnostics::default();
    diag.set("log_a", log_a);
    diag.set("h", h);
    let report = threshold(src, n);
    if !report.passes {
        return Ok(gated(report, diag, "time threshold not met"));
    }
    let growth = log_norm_at(map, x, n);
    diag.set("log_norm_df_n", growth);
    diag.set("nh", n as f64 * h);
    if !(growth > n as f64 * h) {
        return Ok(gated(report, diag, "derivative growth hypothesis fails"));
    }

    let sparse: SparseReport = sparse_check(map, x, n, cfg.sparse_c, cfg.sparse_delta, eps, cfg.sparse_trials, cfg.seed)?;
    diag.set("sparse", f64::from(u8::from(sparse.sparse)));
    diag.set("sparse_min_mass", sparse.min_mass);

    let dec = decompose(map, src, &cfg.decompose)?;
    record_decomposition(&mut diag, &dec);
    let big_k = dec.levels.len() - 1;
    let mu = EmpiricalMeasure::new(x, n)?;
    let mu_ek = mu.measure(map, &dec.e[big_k]);
    let prop_bound = h / (2.0 * log_a);
    diag.set("mu_e_k", mu_ek);
    diag.set("mu_e_k_bound", prop_bound);
    diag.set("mu_e_k_reaches_bound", f64::from(u8::from(mu_ek >= prop_bound)));
    let mut fired = false;
    for (i, gi) in dec.g.iter().enumerate().take(big_k) {
        diag.set(&format!("level{i}.mu_g"), mu.measure(map, gi));
        // B(G_i, rho) contains G_i, so this mass is a lower bound for every rho
        fired |= gi.measure() > eps;
    }
    diag.set("neighborhood_criterion_fired", f64::from(u8::from(fired)));
    Ok(hetero_stage(map, &dec.points, cfg, diag, report))
}
