//! Derivative cocycle along an orbit segment: singular frames and rates.
//!
//! The raw product `Df^q(x)` overflows quickly (`2.6^q`), so the forward pass
//! keeps a rescaled product and accumulates the scale in log form. The
//! smallest singular value is recovered from the accumulated log determinant,
//! never from the rescaled matrix itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat2, TorusPoint, Vec2};
use crate::maps::SurfaceMap;
use crate::scalar::Real;

/// Singular frames and one-step rates along `x_0, ..., x_q`.
///
/// `base`, `vs`, `vu` and `log_norms` have `q + 1` entries; the rates have `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleTrace<T> {
    pub base: Vec<TorusPoint<T>>,
    pub vs: Vec<Vec2<T>>,
    pub vu: Vec<Vec2<T>>,
    pub lam_s: Vec<T>,
    pub lam_u: Vec<T>,
    pub lam_e: Vec<T>,
    /// `log ||Df^i(x)||` for `i = 0..=q`.
    pub log_norms: Vec<T>,
    /// `log` of the two singular values of `Df^q(x)`.
    pub log_sigma_max: T,
    pub log_sigma_min: T,
}

impl<T: Real> CocycleTrace<T> {
    pub fn len(&self) -> usize {
        self.lam_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lam_u.is_empty()
    }
}

/// Rescaled running product with its log scale.
#[derive(Debug, Clone, Copy)]
struct ScaledProduct<T> {
    m: Mat2<T>,
    log_scale: T,
}

impl<T: Real> ScaledProduct<T> {
    fn identity() -> Self {
        Self { m: Mat2::identity(), log_scale: T::zero() }
    }

    fn push(&mut self, jac: Mat2<T>) {
        let p = jac * self.m;
        let s = p.frobenius();
        self.m = p.scale(T::one() / s);
        self.log_scale = self.log_scale + s.ln();
    }

    fn log_norm(&self) -> T {
        self.log_scale + self.m.op_norm().ln()
    }
}

/// `log ||Df^i(x)||` for `i = 0..=n`, without frames. Total for every input.
pub fn log_norm_growth<T: Real>(map: &SurfaceMap<T>, x: TorusPoint<T>, n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    let mut prod = ScaledProduct::identity();
    let mut p = x;
    out.push(T::zero());
    for _ in 0..n {
        prod.push(map.derivative(p));
        p = map.apply(p);
        out.push(prod.log_norm());
    }
    out
}

fn orient_positive_x<T: Real>(v: Vec2<T>) -> Vec2<T> {
    if v.x < T::zero() || (v.x == T::zero() && v.y < T::zero()) {
        -v
    } else {
        v
    }
}

/// Singular frames of `Df^q(x)` propagated along the orbit.
///
/// `v_u` is the top right singular vector (oriented with non-negative first
/// coordinate) and `v_s = perp(v_u)`. The unstable frames are pushed forward;
/// the stable frames are pulled back from the bottom left singular vector at
/// `x_q`, so both propagations run in their expanding direction.
pub fn cocycle_trace<T: Real>(map: &SurfaceMap<T>, x: TorusPoint<T>, q: usize) -> Result<CocycleTrace<T>> {
    if q == 0 {
        return Err(Error::InvalidInput("cocycle length q must be at least 1".into()));
    }
    let base = map.orbit(x, q);
    let jacs: Vec<Mat2<T>> = base[..q].iter().map(|&p| map.derivative(p)).collect();

    let mut prod = ScaledProduct::identity();
    let mut log_norms = Vec::with_capacity(q + 1);
    let mut log_det = T::zero();
    log_norms.push(T::zero());
    for j in &jacs {
        prod.push(*j);
        log_det = log_det + j.det().abs().ln();
        log_norms.push(prod.log_norm());
    }
    let log_sigma_max = prod.log_norm();
    let log_sigma_min = log_det - log_sigma_max;
    let gap = log_sigma_max - log_sigma_min;
    if !(gap >= T::lit(1e-12)) {
        return Err(Error::DegenerateCocycle { log_gap: gap.as_f64() });
    }

    let v_u = orient_positive_x(prod.m.top_right_singular());
    let v_s = v_u.perp();

    let mut vu = Vec::with_capacity(q + 1);
    let mut lam_u = Vec::with_capacity(q);
    let mut v = v_u;
    vu.push(v);
    for j in &jacs {
        let w = j.mul_vec(v);
        let n = w.norm();
        lam_u.push(n.ln());
        v = w.scale(T::one() / n);
        vu.push(v);
    }

    // Df^q v_s is parallel to the bottom left singular vector, which is
    // orthogonal to the image of v_u.
    let mut vs = vec![Vec2::default(); q + 1];
    let mut w = vu[q].perp();
    vs[q] = w;
    for i in (0..q).rev() {
        let inv = jacs[i].inverse().ok_or(Error::DegenerateCocycle { log_gap: 0.0 })?;
        w = inv.mul_vec(w).normalized();
        vs[i] = w;
    }
    // replace the pulled-back start by the exact perpendicular, fixing orientation
    let flip = if vs[0].dot(v_s) < T::zero() { -T::one() } else { T::one() };
    for s in vs.iter_mut() {
        *s = s.scale(flip);
    }
    vs[0] = v_s;

    let mut lam_s = Vec::with_capacity(q);
    for (i, j) in jacs.iter().enumerate() {
        lam_s.push(j.mul_vec(vs[i]).norm().ln());
    }
    let lam_e = lam_u.iter().zip(&lam_s).map(|(&u, &s)| u.min(-s)).collect();

    Ok(CocycleTrace { base, vs, vu, lam_s, lam_u, lam_e, log_norms, log_sigma_max, log_sigma_min })
}
