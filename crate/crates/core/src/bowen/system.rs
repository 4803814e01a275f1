//! Abstraction over phase spaces the covering engine can run on.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::TorusPoint;
use crate::maps::SurfaceMap;

/// A map on a compact metric space with a probability measure that can be
/// sampled, plus a bucket grid for radius queries.
///
/// Bucket contract: with `g = cells_for_radius(r)`, every `q` with
/// `dist(p, q) < r` has `cell_key(q, g)` among the keys `query_keys(p, g)` emits.
pub trait BowenSystem: Sync {
    type Point: Copy + Send + Sync + std::fmt::Debug;

    fn step(&self, p: &Self::Point) -> Self::Point;

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// Stratified random sample of the invariant measure.
    fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Self::Point>;

    fn cell_key(&self, p: &Self::Point, g: usize) -> u64;

    fn query_keys(&self, p: &Self::Point, g: usize, out: &mut Vec<u64>);
}

/// Grid cells per unit length such that a cell is at least `r` wide.
pub fn cells_for_radius(r: f64) -> usize {
    ((1.0 / r).floor() as usize).max(1)
}

/// Cell index of a coordinate in `[0, 1)`.
pub fn cell_index(x: f64, g: usize) -> usize {
    ((x * g as f64) as usize).min(g - 1)
}

/// `c - 1, c, c + 1` modulo `g`, without duplicates.
pub fn periodic_window(c: usize, g: usize, reach: usize) -> Vec<usize> {
    if 2 * reach + 1 >= g {
        return (0..g).collect();
    }
    (0..=2 * reach).map(|k| (c + g + k - reach) % g).collect()
}

/// Stratified sample of the unit cube `[0,1)^D`: the largest full `m^D`
/// lattice of jittered strata, topped up with uniform points.
pub fn stratified_cube<const D: usize>(count: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; D]> {
    let mut m = (count as f64).powf(1.0 / D as f64).floor() as usize;
    while (m + 1).pow(D as u32) <= count {
        m += 1;
    }
    while m > 0 && m.pow(D as u32) > count {
        m -= 1;
    }
    let mut out = Vec::with_capacity(count);
    let total = m.pow(D as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut p = [0.0; D];
        for c in p.iter_mut() {
            let k = rem % m;
            rem /= m;
            *c = (k as f64 + rng.gen::<f64>()) / m as f64;
        }
        out.push(p);
    }
    while out.len() < count {
        let mut p = [0.0; D];
        for c in p.iter_mut() {
            *c = rng.gen::<f64>();
        }
        out.push(p);
    }
    out
}

/// A surface map acting on the torus with Lebesgue measure.
#[derive(Debug, Clone, Copy)]
pub struct TorusSystem<'a> {
    pub map: &'a SurfaceMap<f64>,
}

impl BowenSystem for TorusSystem<'_> {
    type Point = TorusPoint<f64>;

    fn step(&self, p: &Self::Point) -> Self::Point {
        self.map.apply(*p)
    }

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        a.dist(b)
    }

    fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Self::Point> {
        stratified_cube::<2>(count, rng).into_iter().map(|[x, y]| TorusPoint::new(x, y)).collect()
    }

    fn cell_key(&self, p: &Self::Point, g: usize) -> u64 {
        (cell_index(p.y, g) * g + cell_index(p.x, g)) as u64
    }

    fn query_keys(&self, p: &Self::Point, g: usize, out: &mut Vec<u64>) {
        let xs = periodic_window(cell_index(p.x, g), g, 1);
        let ys = periodic_window(cell_index(p.y, g), g, 1);
        for &j in &ys {
            for &i in &xs {
                out.push((j * g + i) as u64);
            }
        }
    }
}
