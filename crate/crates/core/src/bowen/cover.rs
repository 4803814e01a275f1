//! Sample-based estimates of the Bowen-ball covering number.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::system::{cells_for_radius, BowenSystem, TorusSystem};
use crate::error::{Error, Result};
use crate::geometry::TorusPoint;
use crate::maps::SurfaceMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverEstimate<P> {
    pub n: usize,
    pub delta: f64,
    pub eps: f64,
    pub samples: usize,
    /// Size of the best cover found at this `n` (a cover found for a longer
    /// time is also a cover here, since Bowen balls shrink with `n`).
    pub upper: usize,
    /// Size of the greedy cover computed at this exact `n`.
    pub greedy_upper: usize,
    /// Greedy maximal `(n, 2 delta)`-separated subset of the covered samples;
    /// `None` when the config skips it.
    pub lower: Option<usize>,
    pub covered_mass: f64,
    /// Wilson 95% interval for the covered fraction of the true measure.
    pub mass_band: [f64; 2],
    /// The cover used on average fewer than ten samples per ball.
    pub saturated: bool,
    pub centers: Vec<P>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverConfig {
    pub delta: f64,
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    /// Compute the separated-set lower bound. Its cost grows with the square
    /// of the sample density, which dominates in higher dimensions.
    pub separated: bool,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { delta: 0.05, eps: 0.1, samples: 20_000, seed: 42, separated: true }
    }
}

impl CoverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {}", self.delta)));
        }
        let need = (10.0 / self.eps).ceil() as usize;
        if self.samples < need {
            return Err(Error::InsufficientSamples { got: self.samples, need });
        }
        Ok(())
    }
}

/// Orbits of all samples, time-major: `orbits[t][i] = f^t(x_i)`.
struct Orbits<P> {
    times: Vec<Vec<P>>,
}

impl<P: Copy + Send + Sync> Orbits<P> {
    fn compute<S: BowenSystem<Point = P>>(sys: &S, start: Vec<P>, len: usize) -> Self {
        let mut times = Vec::with_capacity(len);
        times.push(start);
        for t in 1..len {
            let next: Vec<P> = times[t - 1].par_iter().map(|p| sys.step(p)).collect();
            times.push(next);
        }
        Self { times }
    }

    fn bowen_dist_below<S: BowenSystem<Point = P>>(&self, sys: &S, i: usize, j: usize, n: usize, r: f64) -> bool {
        (0..n).all(|t| sys.dist(&self.times[t][i], &self.times[t][j]) < r)
    }
}

/// Sorted `(cell key, index)` table for radius queries.
struct Buckets {
    g: usize,
    table: Vec<(u64, u32)>,
    ranges: HashMap<u64, (usize, usize)>,
}

impl Buckets {
    fn new<S: BowenSystem>(sys: &S, pts: &[S::Point], r: f64) -> Self {
        let g = cells_for_radius(r);
        let mut table: Vec<(u64, u32)> = pts.iter().enumerate().map(|(i, p)| (sys.cell_key(p, g), i as u32)).collect();
        table.sort_unstable();
        let mut ranges = HashMap::new();
        let mut lo = 0;
        while lo < table.len() {
            let k = table[lo].0;
            let hi = lo + table[lo..].partition_point(|e| e.0 == k);
            ranges.insert(k, (lo, hi));
            lo = hi;
        }
        Self { g, table, ranges }
    }

    fn candidates<S: BowenSystem>(&self, sys: &S, p: &S::Point, keys: &mut Vec<u64>, out: &mut Vec<u32>) {
        keys.clear();
        sys.query_keys(p, self.g, keys);
        keys.sort_unstable();
        keys.dedup();
        for k in keys.iter() {
            if let Some(&(lo, hi)) = self.ranges.get(k) {
                out.extend(self.table[lo..hi].iter().map(|e| e.1));
            }
        }
    }
}

/// Symmetric neighbor lists at radius `r` at time zero, self excluded.
fn initial_neighbors<S: BowenSystem>(sys: &S, pts: &[S::Point], r: f64) -> Vec<Vec<u32>> {
    let buckets = Buckets::new(sys, pts, r);
    (0..pts.len())
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(keys, cand), i| {
                cand.clear();
                buckets.candidates(sys, &pts[i], keys, cand);
                cand.sort_unstable();
                cand.dedup();
                cand.iter().copied().filter(|&j| j as usize != i && sys.dist(&pts[i], &pts[j as usize]) < r).collect()
            },
        )
        .collect()
}

struct Cover {
    picks: Vec<u32>,
    covered: Vec<bool>,
    covered_count: usize,
}

/// Lazy greedy max-coverage until `target` samples are covered; ties go to
/// the lowest index.
fn greedy_cover(rows: &[Vec<u32>], target: usize) -> Cover {
    let n = rows.len();
    let mut covered = vec![false; n];
    let mut covered_count = 0;
    let mut heap: BinaryHeap<(u32, Reverse<u32>)> =
        (0..n).map(|j| (rows[j].len() as u32 + 1, Reverse(j as u32))).collect();
    let mut picks = Vec::new();
    while covered_count < target {
        let Some((g, Reverse(j))) = heap.pop() else { break };
        let ju = j as usize;
        let gain = (!covered[ju]) as u32 + rows[ju].iter().filter(|&&k| !covered[k as usize]).count() as u32;
        if gain != g {
            if gain > 0 {
                heap.push((gain, Reverse(j)));
            }
            continue;
        }
        picks.push(j);
        if !covered[ju] {
            covered[ju] = true;
            covered_count += 1;
        }
        for &k in &rows[ju] {
            if !covered[k as usize] {
                covered[k as usize] = true;
                covered_count += 1;
            }
        }
    }
    Cover { picks, covered, covered_count }
}

fn separated_subset<S: BowenSystem>(sys: &S, orbits: &Orbits<S::Point>, core: &[bool], n: usize, r: f64) -> usize {
    let g = cells_for_radius(r);
    let mut chosen: HashMap<u64, Vec<u32>> = HashMap::new();
    let mut keys = Vec::new();
    let mut count = 0;
    let start = &orbits.times[0];
    for i in 0..core.len() {
        if !core[i] {
            continue;
        }
        keys.clear();
        sys.query_keys(&start[i], g, &mut keys);
        keys.sort_unstable();
        keys.dedup();
        let close = keys.iter().any(|k| {
            chosen
                .get(k)
                .is_some_and(|v| v.iter().any(|&s| orbits.bowen_dist_below(sys, i, s as usize, n, r)))
        });
        if !close {
            chosen.entry(sys.cell_key(&start[i], g)).or_default().push(i as u32);
            count += 1;
        }
    }
    count
}

fn wilson(k: usize, n: usize) -> [f64; 2] {
    let z = 1.96f64;
    let nf = n as f64;
    let p = k as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt();
    [(center - half).max(0.0), (center + half).min(1.0)]
}

/// Covering estimates for several `n`, sharing one sample set and its orbits.
pub fn cover_series<S: BowenSystem>(sys: &S, ns: &[usize], cfg: &CoverConfig) -> Result<Vec<CoverEstimate<S::Point>>> {
    cfg.validate()?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::InvalidInput("times n must be positive".into()));
    }
    let mut order: Vec<usize> = ns.to_vec();
    order.sort_unstable();
    order.dedup();
    let n_max = *order.last().unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts = sys.sample(cfg.samples, &mut rng);
    let orbits = Orbits::compute(sys, pts, n_max);
    let mut rows = initial_neighbors(sys, &orbits.times[0], cfg.delta);
    let target = ((1.0 - cfg.eps) * cfg.samples as f64).ceil() as usize;

    let mut filtered = 1;
    let mut covers = Vec::with_capacity(order.len());
    for &n in &order {
        for t in filtered..n {
            let now = &orbits.times[t];
            rows.par_iter_mut().enumerate().for_each(|(i, row)| {
                row.retain(|&j| sys.dist(&now[i], &now[j as usize]) < cfg.delta);
            });
        }
        filtered = filtered.max(n);
        covers.push(greedy_cover(&rows, target));
    }

    // best[k]: index of the smallest cover among times >= order[k]
    let mut best = vec![0; order.len()];
    for k in (0..order.len()).rev() {
        best[k] = if k + 1 < order.len() && covers[best[k + 1]].picks.len() < covers[k].picks.len() { best[k + 1] } else { k };
    }

    let by_n: Vec<CoverEstimate<S::Point>> = order
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let c = &covers[best[k]];
            let lower = cfg.separated.then(|| separated_subset(sys, &orbits, &c.covered, n, 2.0 * cfg.delta));
            let upper = c.picks.len();
            CoverEstimate {
                n,
                delta: cfg.delta,
                eps: cfg.eps,
                samples: cfg.samples,
                upper,
                greedy_upper: covers[k].picks.len(),
                lower,
                covered_mass: c.covered_count as f64 / cfg.samples as f64,
                mass_band: wilson(c.covered_count, cfg.samples),
                saturated: upper * 10 > cfg.samples,
                centers: c.picks.iter().map(|&j| orbits.times[0][j as usize]).collect(),
            }
        })
        .collect();
    Ok(ns.iter().map(|n| by_n[order.binary_search(n).unwrap()].clone()).collect())
}

/// Covering estimate for a surface map at a single time `n`.
pub fn cover_count(
    map: &SurfaceMap<f64>,
    n: usize,
    delta: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverEstimate<TorusPoint<f64>>> {
    let cfg = CoverConfig { delta, eps, samples, seed, separated: true };
    Ok(cover_series(&TorusSystem { map }, &[n], &cfg)?.remove(0))
}

/// Least-squares slope of `log(count)` against `n`.
pub fn complexity_slope(counts: &[(usize, f64)]) -> Result<f64> {
    if counts.len() < 4 {
        return Err(Error::InsufficientData(format!("slope needs at least 4 points, got {}", counts.len())));
    }
    let m = counts.len() as f64;
    let xs: Vec<f64> = counts.iter().map(|c| c.0 as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|c| c.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("slope needs at least two distinct n".into()));
    }
    Ok(sxy / sxx)
}
