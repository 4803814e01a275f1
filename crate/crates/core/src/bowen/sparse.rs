//! One-sided search for witnesses against sparseness of an orbit.
//!
//! The orbit of `x` is sparse at `(n, c, delta, eps)` when every index set
//! `I` of more than `c n` times has a `delta`-neighborhood of mass above
//! `eps`. Searching all subsets is exponential, so only contiguous blocks and
//! random subsets are tried.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::TorusPoint;
use crate::maps::SurfaceMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseReport {
    /// No witness found (one-sided: not a proof of sparseness).
    pub sparse: bool,
    pub block_len: usize,
    pub witness: Option<Vec<usize>>,
    pub witness_mass: Option<f64>,
    /// Smallest neighborhood mass over all tested subsets.
    pub min_mass: f64,
    pub subsets_tested: usize,
    pub raster: usize,
}

/// Coverage raster: counts how many selected discs contain each cell.
///
/// Cells are counted when their center is within `delta + half diagonal`, so
/// the covered area over-estimates the true union: a mass at most `eps`
/// is a genuine witness.
struct Raster {
    g: usize,
    reach: f64,
    counts: Vec<u32>,
    covered: usize,
    stencil: Vec<(i64, i64)>,
}

impl Raster {
    fn new(delta: f64) -> Self {
        let g = ((4.0 / delta).ceil() as usize).clamp(256, 2048);
        let reach = delta + std::f64::consts::FRAC_1_SQRT_2 / g as f64;
        let rc = (reach * g as f64).ceil() as i64 + 1;
        let mut stencil = Vec::new();
        for dj in -rc..=rc {
            for di in -rc..=rc {
                stencil.push((di, dj));
            }
        }
        Self { g, reach, counts: vec![0; g * g], covered: 0, stencil }
    }

    fn cells(&self, p: TorusPoint<f64>) -> impl Iterator<Item = usize> + '_ {
        let gf = self.g as f64;
        let ci = (p.x * gf).floor() as i64;
        let cj = (p.y * gf).floor() as i64;
        let gi = self.g as i64;
        let r2 = self.reach * self.reach;
        self.stencil.iter().filter_map(move |&(di, dj)| {
            let cx = ((ci + di) as f64 + 0.5) / gf - p.x;
            let cy = ((cj + dj) as f64 + 0.5) / gf - p.y;
            if cx * cx + cy * cy <= r2 {
                Some(((cj + dj).rem_euclid(gi) * gi + (ci + di).rem_euclid(gi)) as usize)
            } else {
                None
            }
        })
    }

    fn add(&mut self, p: TorusPoint<f64>) {
        let cells: Vec<usize> = self.cells(p).collect();
        for c in cells {
            if self.counts[c] == 0 {
                self.covered += 1;
            }
            self.counts[c] += 1;
        }
    }

    fn remove(&mut self, p: TorusPoint<f64>) {
        let cells: Vec<usize> = self.cells(p).collect();
        for c in cells {
            self.counts[c] -= 1;
            if self.counts[c] == 0 {
                self.covered -= 1;
            }
        }
    }

    fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.covered = 0;
    }

    fn mass(&self) -> f64 {
        self.covered as f64 / (self.g * self.g) as f64
    }
}

#[allow(clippy::too_many_arguments)]
pub fn sparse_check(
    map: &SurfaceMap<f64>,
    x: TorusPoint<f64>,
    n: usize,
    c: f64,
    delta: f64,
    eps: f64,
    subset_trials: usize,
    seed: u64,
) -> Result<SparseReport> {
    if !(c > 0.0 && c <= 1.0) || n == 0 || !(delta > 0.0) {
        return Err(Error::InvalidInput("sparse check needs c in (0, 1], n >= 1, delta > 0".into()));
    }
    let orbit = map.orbit(x, n - 1);
    let m = ((c * n as f64).ceil() as usize).clamp(1, n);
    let disc_bound = |k: usize| k as f64 * std::f64::consts::PI * delta * delta;

    let mut raster = Raster::new(delta);
    let mut min_mass = f64::INFINITY;
    let mut witness: Option<(Vec<usize>, f64)> = None;
    let mut tested = 0;

    for &p in &orbit[..m] {
        raster.add(p);
    }
    for start in 0..=(n - m) {
        if start > 0 {
            raster.remove(orbit[start - 1]);
            raster.add(orbit[start + m - 1]);
        }
        tested += 1;
        let mass = raster.mass().min(disc_bound(m));
        if mass < min_mass {
            min_mass = mass;
        }
        if mass <= eps && witness.is_none() {
            witness = Some(((start..start + m).collect(), mass));
        }
    }

    if m < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..subset_trials {
            let mut idx = sample(&mut rng, n, m).into_vec();
            idx.sort_unstable();
            raster.clear();
            for &i in &idx {
                raster.add(orbit[i]);
            }
            tested += 1;
            let mass = raster.mass().min(disc_bound(m));
            min_mass = min_mass.min(mass);
            if mass <= eps && witness.is_none() {
                witness = Some((idx, mass));
            }
        }
    }

    Ok(SparseReport {
        sparse: witness.is_none(),
        block_len: m,
        witness_mass: witness.as_ref().map(|w| w.1),
        witness: witness.map(|w| w.0),
        min_mass,
        subsets_tested: tested,
        raster: raster.g,
    })
}
