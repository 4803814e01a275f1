//! Local stable and unstable curves of a hyperbolic periodic point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_dist, Mat2, TorusPoint, Vec2};
use crate::maps::SurfaceMap;

/// Linear offsets along the eigendirection are taken below this size before
/// being pushed out by the dynamics.
const SEED_SCALE: f64 = 1e-7;
const MAX_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalManifolds {
    pub ws: Vec<TorusPoint<f64>>,
    pub wu: Vec<TorusPoint<f64>>,
    pub lip_s: f64,
    pub lip_u: f64,
}

/// Eigen-data of `Df^p(z)`: `(eig_u, eig_s, Eu, Es)` with `|eig_u| > 1 > |eig_s|`.
pub(crate) fn splitting(m: &Mat2<f64>, det: f64) -> Option<(f64, f64, Vec2<f64>, Vec2<f64>)> {
    let (big, small) = m.real_eigenvalues_with_det(det)?;
    if !(big.abs() > 1.0 && small.abs() < 1.0) {
        return None;
    }
    Some((big, small, canonical(m.eigenvector(big)), canonical(m.eigenvector(small))))
}

fn canonical(v: Vec2<f64>) -> Vec2<f64> {
    if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
        -v
    } else {
        v
    }
}

/// One branch-free curve through `z`: `t -> F^k(z + (t / eig^k) e)`.
struct Curve<'a> {
    step: &'a dyn Fn(TorusPoint<f64>) -> TorusPoint<f64>,
    z: TorusPoint<f64>,
    e: Vec2<f64>,
    eig: f64,
    k: i32,
}

impl Curve<'_> {
    fn point(&self, t: f64) -> TorusPoint<f64> {
        if t == 0.0 {
            return self.z;
        }
        let mut p = self.z.translate(self.e.scale(t / self.eig.powi(self.k)));
        for _ in 0..self.k {
            p = (self.step)(p);
        }
        p
    }
}

#[derive(Clone, Copy)]
enum Stop {
    /// Out to distance `r` from `z`, last point placed on the sphere.
    Radius(f64),
    /// Until the branch has this arclength.
    Length(f64),
}

/// Lifted offsets from `z` along one side of the curve, with chord deviation
/// below `tol` and no segment longer than `cap`.
fn branch(c: &Curve, stop: Stop, tol: f64, cap: f64, sign: f64) -> Result<Vec<Vec2<f64>>> {
    let mut out = vec![Vec2::new(0.0, 0.0)];
    let mut t = 0.0;
    let mut h = cap / 2.0;
    let mut cur = c.z;
    let mut lifted = Vec2::new(0.0, 0.0);
    let mut arc = 0.0;
    loop {
        if out.len() > MAX_POINTS {
            return Err(Error::ManifoldBuildFailed("too many polyline points".into()));
        }
        let t_next = t + sign * h;
        let next = c.point(t_next);
        let d = cur.displacement_to(&next);
        let mid = cur.displacement_to(&c.point(t + sign * h / 2.0));
        let dev = point_segment_dist(mid, Vec2::new(0.0, 0.0), d);
        if dev >= tol || d.norm() > cap {
            h /= 2.0;
            if h < 1e-12 {
                return Err(Error::ManifoldBuildFailed(format!("step fell below 1e-12 at t = {t:e}")));
            }
            continue;
        }
        let lifted_next = lifted + d;
        match stop {
            Stop::Radius(r) if lifted_next.norm() > r => {
                // bisect for the point at distance exactly r
                let (mut lo, mut hi) = (t, t_next);
                for _ in 0..60 {
                    let m = 0.5 * (lo + hi);
                    if (lifted + cur.displacement_to(&c.point(m))).norm() > r {
                        hi = m;
                    } else {
                        lo = m;
                    }
                }
                out.push(lifted + cur.displacement_to(&c.point(lo)));
                return Ok(out);
            }
            Stop::Length(len) if arc + d.norm() >= len => {
                out.push(lifted_next);
                return Ok(out);
            }
            _ => {}
        }
        out.push(lifted_next);
        arc += d.norm();
        lifted = lifted_next;
        cur = next;
        t = t_next;
        if dev < tol / 4.0 {
            h *= 1.5;
        }
    }
}

fn polyline(c: &Curve, stop: Stop, tol: f64, cap: f64) -> Result<Vec<Vec2<f64>>> {
    let mut neg = branch(c, stop, tol, cap, -1.0)?;
    let pos = branch(c, stop, tol, cap, 1.0)?;
    neg.reverse();
    neg.pop();
    neg.extend(pos);
    Ok(neg)
}

/// Largest `|d across| / |d along|` between consecutive points, in the `(e, f)` frame.
fn max_slope(pts: &[Vec2<f64>], along: Vec2<f64>, across: Vec2<f64>) -> f64 {
    let inv = Mat2::from_cols(along, across).inverse().expect("hyperbolic splitting is transverse");
    pts.windows(2)
        .map(|w| {
            let d = inv.mul_vec(w[1] - w[0]);
            if d.x == 0.0 {
                f64::INFINITY
            } else {
                (d.y / d.x).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Number of periods to push seeds through. Seeds stay at or above
/// `SEED_SCALE` so that roundoff, amplified by `eig^k`, stays small.
fn depth(eig: f64, r: f64) -> i32 {
    ((4.0 * r / SEED_SCALE).ln() / eig.abs().ln()).floor().max(1.0) as i32
}

/// Polylines of radius `r` for the periodic point `z` of period `period`.
pub fn local_manifolds(map: &SurfaceMap<f64>, z: TorusPoint<f64>, period: usize, r: f64) -> Result<LocalManifolds> {
    if !(r > 0.0 && r < 0.25) || period == 0 {
        return Err(Error::InvalidInput(format!("need 0 < r < 1/4 and period >= 1, got r = {r}, period = {period}")));
    }
    let (eig_u, eig_s, eu, es) = eigen(map, z, period)?;
    let fwd = |p: TorusPoint<f64>| map.iterate(p, period as i64);
    let bwd = |p: TorusPoint<f64>| map.iterate(p, -(period as i64));
    let cu = Curve { step: &fwd, z, e: eu, eig: eig_u, k: depth(eig_u, r) };
    let cs = Curve { step: &bwd, z, e: es, eig: 1.0 / eig_s, k: depth(1.0 / eig_s, r) };
    let wu = polyline(&cu, Stop::Radius(r), r / 1000.0, r / 16.0)?;
    let ws = polyline(&cs, Stop::Radius(r), r / 1000.0, r / 16.0)?;
    Ok(LocalManifolds {
        lip_u: max_slope(&wu, eu, es),
        lip_s: max_slope(&ws, es, eu),
        wu: wu.iter().map(|d| z.translate(*d)).collect(),
        ws: ws.iter().map(|d| z.translate(*d)).collect(),
    })
}

fn eigen(map: &SurfaceMap<f64>, z: TorusPoint<f64>, period: usize) -> Result<(f64, f64, Vec2<f64>, Vec2<f64>)> {
    let m = map.derivative_iter(z, period);
    splitting(&m, map.derivative_iter_det(z, period)).ok_or_else(|| Error::ManifoldBuildFailed("periodic point is not hyperbolic".into()))
}

/// Longer pieces of the unstable (`unstable = true`) or stable curve through
/// `z`: each side has arclength `length`, segments are at most `1/20` long
/// and deviate from the curve by less than `1e-5`.
pub fn grow_manifold(
    map: &SurfaceMap<f64>,
    z: TorusPoint<f64>,
    period: usize,
    length: f64,
    unstable: bool,
) -> Result<Vec<TorusPoint<f64>>> {
    if !(length > 0.0 && length.is_finite()) || period == 0 {
        return Err(Error::InvalidInput(format!("need length > 0 and period >= 1, got {length}, {period}")));
    }
    let (eig_u, eig_s, eu, es) = eigen(map, z, period)?;
    let fwd = |p: TorusPoint<f64>| map.iterate(p, period as i64);
    let bwd = |p: TorusPoint<f64>| map.iterate(p, -(period as i64));
    let c = if unstable {
        Curve { step: &fwd, z, e: eu, eig: eig_u, k: depth(eig_u, length) }
    } else {
        Curve { step: &bwd, z, e: es, eig: 1.0 / eig_s, k: depth(1.0 / eig_s, length) }
    };
    let line = polyline(&c, Stop::Length(length), 1e-5, 0.05)?;
    Ok(line.iter().map(|d| z.translate(*d)).collect())
}

/// Distance from `p` to a polyline of torus points, each segment lifted next to `p`.
pub fn polyline_dist(p: TorusPoint<f64>, line: &[TorusPoint<f64>]) -> f64 {
    if line.len() == 1 {
        return p.dist(&line[0]);
    }
    line.windows(2)
        .map(|w| {
            let a = p.displacement_to(&w[0]);
            let b = a + w[0].displacement_to(&w[1]);
            point_segment_dist(Vec2::new(0.0, 0.0), a, b)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Parameter range of `a + t (b - a)`, `t` in `[0, 1]`, inside the ball of radius `rho`.
fn clip(a: Vec2<f64>, b: Vec2<f64>, rho: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let (qa, qb, qc) = (d.dot(d), 2.0 * a.dot(d), a.dot(a) - rho * rho);
    if qa == 0.0 {
        return (qc <= 0.0).then_some((0.0, 1.0));
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let lo = ((-qb - s) / (2.0 * qa)).max(0.0);
    let hi = ((-qb + s) / (2.0 * qa)).min(1.0);
    (lo < hi).then_some((lo, hi))
}

/// One-sided Hausdorff distance from `curve` to its image under `step`,
/// using the part of `curve` within `inner` of `z`, resampled finely.
fn cover_error(
    z: TorusPoint<f64>,
    curve: &[TorusPoint<f64>],
    inner: f64,
    step: impl Fn(TorusPoint<f64>) -> TorusPoint<f64>,
) -> f64 {
    const SAMPLES: usize = 2000;
    let offs: Vec<Vec2<f64>> = curve.iter().map(|p| z.displacement_to(p)).collect();
    let mut dense = Vec::new();
    for w in offs.windows(2) {
        if let Some((lo, hi)) = clip(w[0], w[1], inner) {
            for k in 0..=SAMPLES {
                let t = lo + (hi - lo) * k as f64 / SAMPLES as f64;
                dense.push(w[0] + (w[1] - w[0]).scale(t));
            }
        }
    }
    let image: Vec<TorusPoint<f64>> = dense.iter().map(|d| step(z.translate(*d))).collect();
    curve.iter().map(|p| polyline_dist(*p, &image)).fold(0.0, f64::max)
}

/// `f^p(W^u)` covers `W^u` and `f^-p(W^s)` covers `W^s`; returns the two
/// one-sided Hausdorff errors.
pub fn invariance_error(map: &SurfaceMap<f64>, z: TorusPoint<f64>, period: usize, man: &LocalManifolds, r: f64) -> (f64, f64) {
    let m = map.derivative_iter(z, period);
    let Some((eig_u, eig_s, _, _)) = splitting(&m, map.derivative_iter_det(z, period)) else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let fwd = |p| map.iterate(p, period as i64);
    let bwd = |p| map.iterate(p, -(period as i64));
    let eu = cover_error(z, &man.wu, 3.0 * r / eig_u.abs(), fwd);
    let es = cover_error(z, &man.ws, 3.0 * r * eig_s.abs(), bwd);
    (eu, es)
}
