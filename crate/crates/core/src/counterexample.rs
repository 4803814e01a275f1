//! Skew product over a circle rotation with a suspension-flow fiber.
//!
//! The fiber is the unit-roof suspension of the cat map: a flow on a
//! 3-manifold with entropy `h0 = log((3 + sqrt 5) / 2)` for its time-one map.
//! The skew map is `f_alpha(theta, p) = (theta + alpha, g_{phi(theta)}(p))`
//! with a roof-like time function `phi` of zero mean.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bowen::{cell_index, cells_for_radius, complexity_slope, cover_series, periodic_window, stratified_cube};
use crate::bowen::{BowenSystem, CoverConfig, CoverEstimate};
use crate::error::{Error, Result};
use crate::geometry::{Mat2, TorusPoint};
use crate::scalar::Real;

/// Fiber entropy.
pub fn h0() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

/// Total variation of [`roof`].
pub const ROOF_VARIATION: f64 = 32.0 / 3.0;

/// `1` on `[0, 1/2]`, `1 - (16/3) sin^4(2 pi (theta - 1/2))` on `[1/2, 1]`.
pub fn roof(theta: f64) -> f64 {
    let t = theta.wrap_unit();
    if t <= 0.5 {
        1.0
    } else {
        let s = (TAU * (t - 0.5)).sin();
        1.0 - 16.0 / 3.0 * s.powi(4)
    }
}

pub fn roof_derivative(theta: f64) -> f64 {
    let t = theta.wrap_unit();
    if t <= 0.5 {
        0.0
    } else {
        let u = TAU * (t - 0.5);
        -16.0 / 3.0 * 4.0 * u.sin().powi(3) * u.cos() * TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SuspensionPoint {
    pub base: TorusPoint<f64>,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SkewPoint {
    pub theta: f64,
    pub fiber: SuspensionPoint,
}

fn cat_step(p: TorusPoint<f64>) -> TorusPoint<f64> {
    TorusPoint::new(2.0 * p.x + p.y, p.x + p.y)
}

fn cat_step_inverse(p: TorusPoint<f64>) -> TorusPoint<f64> {
    TorusPoint::new(p.x - p.y, 2.0 * p.y - p.x)
}

fn cat_iterate(mut p: TorusPoint<f64>, k: i64) -> TorusPoint<f64> {
    for _ in 0..k.unsigned_abs() {
        p = if k > 0 { cat_step(p) } else { cat_step_inverse(p) };
    }
    p
}

/// Flow for time `t`: the height moves at unit speed and the base is hit by
/// the cat map (or its inverse) at every crossing of the roof.
pub fn suspension_flow(p: SuspensionPoint, t: f64) -> SuspensionPoint {
    let s = p.height + t;
    let k = s.floor();
    let mut h = s - k;
    let mut k = k as i64;
    if h >= 1.0 {
        h -= 1.0;
        k += 1;
    }
    SuspensionPoint { base: cat_iterate(p.base, k), height: h }
}

pub fn skew_map(alpha: f64, p: SkewPoint) -> SkewPoint {
    SkewPoint { theta: (p.theta + alpha).wrap_unit(), fiber: suspension_flow(p.fiber, roof(p.theta)) }
}

/// Fiber time accumulated over `q` steps by iterating the rotation.
pub fn birkhoff_sum(alpha: f64, theta: f64, q: usize) -> f64 {
    let mut t = theta;
    let mut s = 0.0;
    for _ in 0..q {
        s += roof(t);
        t = (t + alpha).wrap_unit();
    }
    s
}

/// Jacobian of the skew map in the coordinates `(theta, x, y, height)`,
/// valid away from the roof crossings.
pub fn skew_jacobian(alpha: f64, p: SkewPoint) -> [[f64; 4]; 4] {
    let _ = alpha;
    let k = (p.fiber.height + roof(p.theta)).floor() as i64;
    let step = Mat2::new(2.0, 1.0, 1.0, 1.0);
    let mut m = Mat2::identity();
    let inv = step.inverse().unwrap();
    for _ in 0..k.unsigned_abs() {
        m = if k > 0 { step * m } else { inv * m };
    }
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, m.a, m.b, 0.0],
        [0.0, m.c, m.d, 0.0],
        [roof_derivative(p.theta), 0.0, 0.0, 1.0],
    ]
}

/// Determinant by cofactor expansion.
pub fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let minor = |r: usize, c: usize| -> f64 {
        let mut s = [[0.0; 3]; 3];
        let mut ri = 0;
        for (i, row) in m.iter().enumerate() {
            if i == r {
                continue;
            }
            let mut ci = 0;
            for (j, v) in row.iter().enumerate() {
                if j == c {
                    continue;
                }
                s[ri][ci] = *v;
                ci += 1;
            }
            ri += 1;
        }
        s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) - s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0])
            + s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0])
    };
    (0..4).map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[0][c] * minor(0, c)).sum()
}

/// Continued-fraction denominators `q_1, q_2, ...` of `alpha`.
pub fn convergents(alpha: f64, count: usize) -> Result<Vec<u64>> {
    let mut frac = alpha - alpha.floor();
    let (mut q_prev, mut q) = (0u64, 1u64);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if frac < 1e-9 {
            return Err(Error::RationalInput);
        }
        let x = 1.0 / frac;
        let a = x.floor();
        frac = x - a;
        let next = (a as u64).checked_mul(q).and_then(|v| v.checked_add(q_prev));
        let Some(next) = next else {
            return Err(Error::InvalidInput("continued fraction denominators overflow".into()));
        };
        q_prev = q;
        q = next;
        out.push(q);
    }
    Ok(out)
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub alpha: f64,
    pub q: usize,
    /// `max_theta |S_q phi(theta)|` over the grid.
    pub gap: f64,
    pub variation_bound: f64,
    pub within_bound: bool,
    /// `sup d(f^q(p), p)` over the sampled skew points.
    pub displacement_sup: f64,
}

/// Birkhoff-sum excursion over a `theta` grid, plus the displacement of `f^q`.
///
/// The grid size is rounded up to a multiple of 4 so that `theta = 3/4`,
/// where `|phi|` peaks, is a grid point.
pub fn denjoy_koksma_gap(alpha: f64, q: usize, grid: usize, samples: usize, rng: &mut ChaCha8Rng) -> GapReport {
    let grid = grid.max(4).div_ceil(4) * 4;
    let gap = (0..grid)
        .map(|j| {
            let theta = j as f64 / grid as f64;
            (0..q).map(|i| roof(theta + i as f64 * alpha)).sum::<f64>().abs()
        })
        .fold(0.0, f64::max);
    let sys = SkewSystem { alpha };
    let mut displacement_sup: f64 = 0.0;
    for _ in 0..samples {
        let p = sys.random_point(rng);
        let mut y = p;
        for _ in 0..q {
            y = skew_map(alpha, y);
        }
        displacement_sup = displacement_sup.max(sys.dist(&p, &y));
    }
    GapReport { alpha, q, gap, variation_bound: ROOF_VARIATION, within_bound: gap <= ROOF_VARIATION, displacement_sup }
}

/// Distance on the suspension: the better of the direct comparison and the
/// two comparisons across the roof identification `(p, 1) ~ (A p, 0)`.
pub fn suspension_dist(a: &SuspensionPoint, b: &SuspensionPoint) -> f64 {
    let direct = a.base.dist(&b.base).max((a.height - b.height).abs());
    let up = cat_step(a.base).dist(&b.base).max((a.height - 1.0 - b.height).abs());
    let down = a.base.dist(&cat_step(b.base)).max((b.height - 1.0 - a.height).abs());
    direct.min(up).min(down)
}

/// The skew map as a covering-engine system; product max metric.
#[derive(Debug, Clone, Copy)]
pub struct SkewSystem {
    pub alpha: f64,
}

impl SkewSystem {
    fn random_point(&self, rng: &mut ChaCha8Rng) -> SkewPoint {
        SkewPoint {
            theta: rng.gen(),
            fiber: SuspensionPoint { base: TorusPoint::new(rng.gen(), rng.gen()), height: rng.gen() },
        }
    }

    fn key(theta: usize, x: usize, y: usize, h: usize, g: usize) -> u64 {
        (((theta * g + x) * g + y) * g + h) as u64
    }

    fn push_keys(&self, theta: f64, base: TorusPoint<f64>, reach: usize, hs: &[usize], g: usize, out: &mut Vec<u64>) {
        let ts = periodic_window(cell_index(theta, g), g, 1);
        let xs = periodic_window(cell_index(base.x, g), g, reach);
        let ys = periodic_window(cell_index(base.y, g), g, reach);
        for &t in &ts {
            for &x in &xs {
                for &y in &ys {
                    for &h in hs {
                        out.push(Self::key(t, x, y, h, g));
                    }
                }
            }
        }
    }
}

impl BowenSystem for SkewSystem {
    type Point = SkewPoint;

    fn step(&self, p: &SkewPoint) -> SkewPoint {
        skew_map(self.alpha, *p)
    }

    fn dist(&self, a: &SkewPoint, b: &SkewPoint) -> f64 {
        let dt = (a.theta - b.theta).wrap_centered().abs();
        dt.max(suspension_dist(&a.fiber, &b.fiber))
    }

    fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<SkewPoint> {
        stratified_cube::<4>(count, rng)
            .into_iter()
            .map(|[t, x, y, h]| SkewPoint { theta: t, fiber: SuspensionPoint { base: TorusPoint::new(x, y), height: h } })
            .collect()
    }

    fn cell_key(&self, p: &SkewPoint, g: usize) -> u64 {
        Self::key(
            cell_index(p.theta, g),
            cell_index(p.fiber.base.x, g),
            cell_index(p.fiber.base.y, g),
            cell_index(p.fiber.height, g),
            g,
        )
    }

    fn query_keys(&self, p: &SkewPoint, g: usize, out: &mut Vec<u64>) {
        let hc = cell_index(p.fiber.height, g);
        let hs: Vec<usize> = (hc.saturating_sub(1)..=(hc + 1).min(g - 1)).collect();
        self.push_keys(p.theta, p.fiber.base, 1, &hs, g, out);
        if hc == g - 1 {
            // partners just above the roof sit near A p at the bottom
            self.push_keys(p.theta, cat_step(p.fiber.base), 1, &[0], g, out);
        }
        if hc == 0 {
            // partners q with A q near p: within ||A^-1|| r < 3 cells of A^-1 p
            self.push_keys(p.theta, cat_step_inverse(p.fiber.base), 3, &[g - 1], g, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub alpha: f64,
    pub h0: f64,
    pub target: f64,
    pub slope: f64,
    pub rows: Vec<CoverEstimate<SkewPoint>>,
}

/// Covering numbers of the skew map for `n = 1..=n_max` and their slope.
pub fn counterexample_complexity(alpha: f64, n_max: usize, cfg: &CoverConfig) -> Result<ComplexityReport> {
    if n_max < 4 {
        return Err(Error::InsufficientData(format!("slope needs n_max >= 4, got {n_max}")));
    }
    let ns: Vec<usize> = (1..=n_max).collect();
    let rows = cover_series(&SkewSystem { alpha }, &ns, cfg)?;
    let pts: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.upper as f64)).collect();
    let slope = complexity_slope(&pts)?;
    Ok(ComplexityReport { alpha, h0: h0(), target: h0() / 2.0, slope, rows })
}

/// The radius scale used by the bucket grid for a covering radius.
pub fn skew_cells(delta: f64) -> usize {
    cells_for_radius(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::SurfaceMap;
    use rand::SeedableRng;

    fn sp(x: f64, y: f64, h: f64) -> SuspensionPoint {
        SuspensionPoint { base: TorusPoint::new(x, y), height: h }
    }

    #[test]
    fn roof_invariants() {
        let n = 400_000;
        // midpoint rule; the integrand is smooth on each half
        let integral: f64 = (0..n).map(|i| roof((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!(integral.abs() < 1e-12, "{integral}");
        assert!((0..=500).all(|i| roof(i as f64 / 1000.0) == 1.0));
        let var: f64 = (0..n).map(|i| (roof((i + 1) as f64 / n as f64) - roof(i as f64 / n as f64)).abs()).sum();
        assert!((var - ROOF_VARIATION).abs() < 1e-9);
        assert!((roof(0.75) + 13.0 / 3.0).abs() < 1e-12);
        // C^3 matching at 1/2: the first derivatives agree on both sides
        assert!(roof_derivative(0.5 + 1e-6).abs() < 1e-9);
    }

    #[test]
    fn flow_examples() {
        let p = sp(0.0, 0.0, 0.3);
        assert_eq!(suspension_flow(p, 0.0), p);
        let q = suspension_flow(p, 0.7);
        assert_eq!(q, sp(0.0, 0.0, 0.0));
        let r = suspension_flow(sp(0.5, 0.5, 0.25), 1.0);
        assert_eq!(r.base, TorusPoint::new(0.5, 0.0));
        assert_eq!(r.height, 0.25);
    }

    #[test]
    fn flow_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let p = sp(rng.gen(), rng.gen(), rng.gen());
            let a = suspension_flow(suspension_flow(p, 0.5), 0.5);
            let b = suspension_flow(p, 1.0);
            assert!(suspension_dist(&a, &b) < 1e-10);
            let s: f64 = rng.gen_range(-3.0..3.0);
            let t: f64 = rng.gen_range(-3.0..3.0);
            let c = suspension_flow(suspension_flow(p, s), t);
            let d = suspension_flow(p, s + t);
            assert!(suspension_dist(&c, &d) < 1e-9);
        }
    }

    #[test]
    fn skew_examples() {
        let p = SkewPoint { theta: 0.25, fiber: sp(0.1, 0.2, 0.0) };
        let q = skew_map(0.0, p);
        assert_eq!(q.theta, 0.25);
        assert!(q.fiber.base.dist(&SurfaceMap::cat().apply(p.fiber.base)) < 1e-15);
        assert_eq!(q.fiber.height, 0.0);
        let mut r = p;
        for _ in 0..5 {
            r = skew_map(0.0, r);
        }
        assert!(r.fiber.base.dist(&SurfaceMap::cat().iterate(p.fiber.base, 5)) < 1e-12);
    }

    #[test]
    fn birkhoff_sums_match_direct_summation() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        for &theta in &[0.0, 0.3, 0.77] {
            for q in [1, 10, 100, 1000, 10_000] {
                let direct: f64 = (0..q).map(|i| roof(theta + i as f64 * alpha)).sum();
                assert!((birkhoff_sum(alpha, theta, q) - direct).abs() < 1e-9 * q as f64);
            }
        }
        // the fiber time carried by the skew orbit equals the Birkhoff sum
        let mut p = SkewPoint { theta: 0.3, fiber: sp(0.0, 0.0, 0.0) };
        let mut clock = 0.0;
        for _ in 0..100 {
            let before = p.fiber.height;
            let t = roof(p.theta);
            p = skew_map(alpha, p);
            let crossings = (before + t).floor();
            clock += crossings + p.fiber.height - before;
        }
        assert!((clock - birkhoff_sum(alpha, 0.3, 100)).abs() < 1e-9);
    }

    #[test]
    fn volume_preservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let sys = SkewSystem { alpha: 0.01 };
        for _ in 0..10_000 {
            let p = sys.random_point(&mut rng);
            assert!((det4(&skew_jacobian(0.01, p)) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let alpha = 0.01;
        let p = SkewPoint { theta: 0.7, fiber: sp(0.3, 0.6, 0.1) };
        let j = skew_jacobian(alpha, p);
        let base = skew_map(alpha, p);
        let h = 1e-7;
        let coords = |s: &SkewPoint| [s.theta, s.fiber.base.x, s.fiber.base.y, s.fiber.height];
        let b = coords(&base);
        for col in 0..4 {
            let mut c = coords(&p);
            c[col] += h;
            let q = skew_map(alpha, SkewPoint { theta: c[0], fiber: sp(c[1], c[2], c[3]) });
            let d = coords(&q);
            for row in 0..4 {
                let fd = (d[row] - b[row]).wrap_centered() / h;
                assert!((fd - j[row][col]).abs() < 1e-4, "({row},{col}) {fd} vs {}", j[row][col]);
            }
        }
    }

    #[test]
    fn convergent_examples() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert_eq!(convergents(golden, 6).unwrap(), vec![1, 2, 3, 5, 8, 13]);
        let inv_pi = 1.0 / std::f64::consts::PI;
        assert_eq!(convergents(inv_pi, 4).unwrap(), vec![3, 22, 333, 355]);
        assert_eq!(convergents(0.5, 3), Err(Error::RationalInput));
        for alpha in [golden, inv_pi, 2f64.sqrt() - 1.0, std::f64::consts::E - 2.0] {
            let q = convergents(alpha, 8).unwrap();
            for w in q.windows(2) {
                assert!(dist_to_int(w[0] as f64 * alpha) < 1.0 / w[1] as f64);
            }
        }
    }

    #[test]
    fn gap_examples() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for q in [13, 21, 34, 55] {
            let r = denjoy_koksma_gap(golden, q, 4000, 0, &mut rng);
            assert!(r.within_bound, "q = {q}: {}", r.gap);
        }
        let r = denjoy_koksma_gap(1e-4, 1, 1000, 0, &mut rng);
        assert!((r.gap - 13.0 / 3.0).abs() < 1e-12);
        // rational rotation by 1/4 over its full period: the orbit averages
        // sample phi at four points
        let r = denjoy_koksma_gap(0.25, 4, 400, 0, &mut rng);
        let direct = (0..400)
            .map(|j| (0..4).map(|i| roof(j as f64 / 400.0 + i as f64 * 0.25)).sum::<f64>().abs())
            .fold(0.0, f64::max);
        assert!((r.gap - direct).abs() < 1e-12);
    }

    #[test]
    fn displacement_at_convergents_is_controlled() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let r = denjoy_koksma_gap(golden, 13, 400, 200, &mut rng);
        // rotation part moves by ||13 alpha|| and the fiber by at most the gap
        assert!(r.displacement_sup <= 1.0);
        assert!(r.displacement_sup.is_finite());
    }

    #[test]
    fn bucket_contract_holds() {
        let sys = SkewSystem { alpha: 0.01 };
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let r = 0.05;
        let g = skew_cells(r);
        let pts = sys.sample(20_000, &mut rng);
        let mut keys = Vec::new();
        for i in 0..300 {
            keys.clear();
            sys.query_keys(&pts[i], g, &mut keys);
            for q in &pts {
                if sys.dist(&pts[i], q) < r {
                    assert!(keys.contains(&sys.cell_key(q, g)));
                }
            }
        }
        // also across the roof identification
        let a = SkewPoint { theta: 0.5, fiber: sp(0.3, 0.3, 0.99) };
        let b = SkewPoint { theta: 0.5, fiber: suspension_flow(a.fiber, 0.02) };
        assert!(sys.dist(&a, &b) < 0.03);
        keys.clear();
        sys.query_keys(&a, g, &mut keys);
        assert!(keys.contains(&sys.cell_key(&b, g)));
        keys.clear();
        sys.query_keys(&b, g, &mut keys);
        assert!(keys.contains(&sys.cell_key(&a, g)));
    }

    #[test]
    fn short_horizon_is_rejected() {
        let cfg = CoverConfig { delta: 0.1, eps: 0.2, samples: 1000, seed: 1, separated: false };
        assert!(matches!(counterexample_complexity(0.01, 1, &cfg), Err(Error::InsufficientData(_))));
    }
}
