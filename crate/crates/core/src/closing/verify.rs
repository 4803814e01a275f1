//! Sampled box and cone checks for a chart sequence.

use serde::{Deserialize, Serialize};

use super::charts::ChartSeq;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

const GRID: usize = 64;
const BOUNDARY: usize = 256;
const DIRECTIONS: usize = 32;
const GRAPHS: usize = 5;
const MARGIN: f64 = 1e-9;

/// `{(v, w) : |v| <= r, |w| <= tau + kappa |v|}` in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub r: f64,
    pub tau: f64,
    pub kappa: f64,
}

impl ChartBox {
    pub fn new(r: f64, tau: f64, kappa: f64) -> Result<Self> {
        if !(r > 0.0 && tau > 0.0 && kappa > 0.0) || tau > r || kappa >= 1.0 {
            return Err(Error::InvalidInput(format!("box needs 0 < tau <= r and 0 < kappa < 1, got ({r}, {tau}, {kappa})")));
        }
        Ok(Self { r, tau, kappa })
    }

    pub fn height(&self, v: f64) -> f64 {
        self.tau + self.kappa * v.abs()
    }

    pub fn contains(&self, p: Vec2<f64>) -> bool {
        p.x.abs() <= self.r && p.y.abs() <= self.height(p.x)
    }

    fn grid(&self) -> impl Iterator<Item = Vec2<f64>> + '_ {
        let last = (GRID - 1) as f64;
        (0..GRID).flat_map(move |i| {
            let v = -self.r + 2.0 * self.r * i as f64 / last;
            let h = self.height(v);
            (0..GRID).map(move |j| Vec2::new(v, -h + 2.0 * h * j as f64 / last))
        })
    }

    /// Samples of the upper and lower boundary graphs.
    fn horizontal_boundary(&self) -> Vec<Vec2<f64>> {
        let m = BOUNDARY / 4;
        let mut out = Vec::with_capacity(BOUNDARY / 2);
        for k in 0..m {
            let v = -self.r + 2.0 * self.r * k as f64 / (m - 1) as f64;
            out.push(Vec2::new(v, self.height(v)));
            out.push(Vec2::new(v, -self.height(v)));
        }
        out
    }

    /// Samples of the left and right vertical segments.
    fn vertical_boundary(&self) -> Vec<Vec2<f64>> {
        let m = BOUNDARY / 4;
        let h = self.height(self.r);
        let mut out = Vec::with_capacity(BOUNDARY / 2);
        for k in 0..m {
            let w = -h + 2.0 * h * k as f64 / (m - 1) as f64;
            out.push(Vec2::new(self.r, w));
            out.push(Vec2::new(-self.r, w));
        }
        out
    }
}

/// Horizontal cone `|w| < kappa |v|` and vertical cone `|v| < kappa_tilde |w|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConePair {
    pub kappa: f64,
    pub kappa_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub n: usize,
    pub transversal: bool,
    pub boundary_disjoint: bool,
    pub cone_invariant: bool,
    pub expansion: bool,
    pub inverse_cone_invariant: bool,
    pub inverse_expansion: bool,
    /// Smallest `kappa_{n+1} |V| - |W|` over sampled images of unit-`v` vectors.
    pub cone_margin: f64,
    /// Smallest `|V| - e^{lam_u - delta}`.
    pub expansion_margin: f64,
    pub inverse_cone_margin: f64,
    pub inverse_expansion_margin: f64,
    /// Largest image slope over the source cone width.
    pub contraction: f64,
}

impl StepCheck {
    pub fn holds(&self) -> bool {
        self.transversal
            && self.boundary_disjoint
            && self.cone_invariant
            && self.expansion
            && self.inverse_cone_invariant
            && self.inverse_expansion
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub holds: bool,
    /// Always `"numerical"`: the checks sample, they do not enclose.
    pub label: String,
    pub delta: f64,
    pub steps: Vec<StepCheck>,
}

/// Full horizontal graphs `w = c tau` map to graphs crossing `next` with slope below its `kappa`.
fn transversal(ch: &ChartSeq, n: usize, from: &ChartBox, next: &ChartBox) -> bool {
    (0..GRAPHS).all(|k| {
        let c = -1.0 + 2.0 * k as f64 / (GRAPHS - 1) as f64;
        let img: Vec<Vec2<f64>> = (0..BOUNDARY)
            .map(|i| {
                let v = -from.r + 2.0 * from.r * i as f64 / (BOUNDARY - 1) as f64;
                ch.g(n, Vec2::new(v, c * from.tau))
            })
            .collect();
        let (lo, hi) = img.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
        if lo > -next.r || hi < next.r {
            return false;
        }
        let inside: Vec<&Vec2<f64>> = img.iter().filter(|p| p.x.abs() <= next.r).collect();
        let sign = (img[BOUNDARY - 1].x - img[0].x).signum();
        inside.iter().all(|p| p.y.abs() < next.height(p.x))
            && inside.windows(2).all(|w| {
                let dv = (w[1].x - w[0].x) * sign;
                dv > 0.0 && (w[1].y - w[0].y).abs() < next.kappa * dv
            })
    })
}

fn boundary_disjoint(ch: &ChartSeq, n: usize, from: &ChartBox, next: &ChartBox) -> bool {
    let horiz = from.horizontal_boundary().into_iter().map(|p| ch.g(n, p)).all(|q| {
        q.x.abs() > next.r || (q.y.abs() - next.height(q.x)).abs() > MARGIN
    });
    let vert = from.vertical_boundary().into_iter().map(|p| ch.g(n, p)).all(|q| {
        q.y.abs() > next.height(q.x) || (q.x.abs() - next.r).abs() > MARGIN
    });
    horiz && vert
}

fn step_check(ch: &ChartSeq, n: usize, boxes: &[ChartBox], cones: &[ConePair], delta: f64) -> StepCheck {
    let (from, next) = (&boxes[n], &boxes[n + 1]);
    let (c0, c1) = (&cones[n], &cones[n + 1]);
    let grow = (ch.lam_u[n] - delta).exp();
    let shrink = (-ch.lam_s[n] - delta).exp();
    let slopes: Vec<f64> =
        (0..DIRECTIONS).map(|k| -1.0 + (2 * k + 1) as f64 / DIRECTIONS as f64).collect();

    let mut cone_margin = f64::MAX;
    let mut expansion_margin = f64::MAX;
    let mut inv_cone_margin = f64::MAX;
    let mut inv_expansion_margin = f64::MAX;
    let mut contraction: f64 = 0.0;
    for p in from.grid() {
        let j = ch.dg(n, p);
        for s in &slopes {
            let img = j.mul_vec(Vec2::new(1.0, s * c0.kappa));
            cone_margin = cone_margin.min(c1.kappa * img.x.abs() - img.y.abs());
            expansion_margin = expansion_margin.min(img.x.abs() - grow);
            if img.x != 0.0 {
                contraction = contraction.max(img.y.abs() / img.x.abs() / c0.kappa);
            }
        }
        let image = ch.g(n, p);
        if next.contains(image) {
            let Some(ji) = j.inverse() else {
                inv_cone_margin = f64::MIN;
                continue;
            };
            for s in &slopes {
                let img = ji.mul_vec(Vec2::new(s * c1.kappa_tilde, 1.0));
                inv_cone_margin = inv_cone_margin.min(c0.kappa_tilde * img.y.abs() - img.x.abs());
                inv_expansion_margin = inv_expansion_margin.min(img.y.abs() - shrink);
            }
        }
    }
    StepCheck {
        n: ch.i1 + n,
        transversal: transversal(ch, n, from, next),
        boundary_disjoint: boundary_disjoint(ch, n, from, next),
        cone_invariant: cone_margin > MARGIN,
        expansion: expansion_margin > MARGIN,
        inverse_cone_invariant: inv_cone_margin > MARGIN,
        inverse_expansion: inv_expansion_margin > MARGIN,
        cone_margin,
        expansion_margin,
        inverse_cone_margin: inv_cone_margin,
        inverse_expansion_margin: inv_expansion_margin,
        contraction,
    }
}

/// Samples every box on a 64x64 grid plus 256 boundary points and 32 cone
/// directions per grid point; the certificate holds when every check passes
/// with margin above 1e-9. `boxes` and `cones` have one entry per chart index.
pub fn verify_hyperbolic_map(ch: &ChartSeq, boxes: &[ChartBox], cones: &[ConePair], delta: f64) -> Result<CertificateReport> {
    let m = ch.steps() + 1;
    if boxes.len() != m || cones.len() != m {
        return Err(Error::InvalidInput(format!("need {m} boxes and cones, got {} and {}", boxes.len(), cones.len())));
    }
    let steps: Vec<StepCheck> = (0..ch.steps()).map(|n| step_check(ch, n, boxes, cones, delta)).collect();
    Ok(CertificateReport { holds: steps.iter().all(StepCheck::holds), label: "numerical".into(), delta, steps })
}

/// Constant boxes `(r, r, kappa)` and cones `(kappa, kappa)` along the sequence.
pub fn toy_boxes(ch: &ChartSeq, r: f64, kappa: f64) -> (Vec<ChartBox>, Vec<ConePair>) {
    let m = ch.steps() + 1;
    (vec![ChartBox { r, tau: r, kappa }; m], vec![ConePair { kappa, kappa_tilde: kappa }; m])
}

/// Box radius `D1^(-3 Delta M)` and cone width `D1^(-Delta M)` with `M = 1000`;
/// both underflow to zero for any `D1 > 1` of interest.
pub fn paper_box_scale(d1: f64, big_delta: f64) -> (f64, f64) {
    let m = 1000.0;
    let l = d1.ln() * big_delta * m;
    ((-3.0 * l).exp(), (-l).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closing::charts::{build_charts, Frame};
    use crate::cocycle::cocycle_trace;
    use crate::geometry::{TorusPoint, Vec2};
    use crate::maps::SurfaceMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cat_eigenframe_certificate() {
        let cat = SurfaceMap::cat();
        let t = cocycle_trace(&cat, TorusPoint::new(0.1, 0.2), 20).unwrap();
        let ch = build_charts(&cat, &t, 2, 10).unwrap();
        let (boxes, cones) = toy_boxes(&ch, 1e-3, 0.1);
        let delta = cat.norm_bounds().a.ln() / 100.0;
        let rep = verify_hyperbolic_map(&ch, &boxes, &cones, delta).unwrap();
        assert!(rep.holds, "{:?}", rep.steps[0]);
        assert_eq!(rep.label, "numerical");
        // image slope shrinks by lambda^-2 in the diagonal frame
        let lam = (3.0 + 5f64.sqrt()) / 2.0;
        for s in &rep.steps {
            assert!(s.contraction < 0.5);
            assert!((s.contraction - (1.0 - 1.0 / 32.0) / (lam * lam)).abs() < 1e-6, "{}", s.contraction);
        }
    }

    #[test]
    fn identity_charts_fail_expansion() {
        let fr = Frame { vu: Vec2::new(1.0, 0.0), vs: Vec2::new(0.0, 1.0) };
        let x = TorusPoint::new(0.5, 0.5);
        let ch = ChartSeq::new(SurfaceMap::translation(0.0, 0.0), 0, vec![x; 3], vec![fr; 3], vec![0.5; 2], vec![-0.5; 2])
            .unwrap();
        let (boxes, cones) = toy_boxes(&ch, 1e-3, 0.1);
        let rep = verify_hyperbolic_map(&ch, &boxes, &cones, 0.1).unwrap();
        assert!(!rep.holds);
        assert!(rep.steps.iter().all(|s| !s.expansion));
    }

    #[test]
    fn box_invariants_are_enforced() {
        assert!(ChartBox::new(1e-3, 2e-3, 0.1).is_err());
        assert!(ChartBox::new(1e-3, 1e-3, 1.0).is_err());
        assert!(ChartBox::new(1e-3, 1e-3, 0.1).is_ok());
        assert_eq!(paper_box_scale(10.0, 5.0).0, 0.0);
    }

    #[test]
    fn certified_cones_transport_random_vectors() {
        let cat = SurfaceMap::cat();
        let t = cocycle_trace(&cat, TorusPoint::new(0.7, 0.35), 20).unwrap();
        let ch = build_charts(&cat, &t, 1, 9).unwrap();
        let (boxes, cones) = toy_boxes(&ch, 1e-3, 0.1);
        assert!(verify_hyperbolic_map(&ch, &boxes, &cones, 0.01).unwrap().holds);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..1000 {
            let mut v = Vec2::new(1.0, rng.gen_range(-0.0999..0.0999));
            let mut p = Vec2::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3));
            for n in 0..ch.steps() {
                v = ch.dg(n, p).mul_vec(v);
                p = ch.g(n, p);
            }
            assert!(v.y.abs() < cones.last().unwrap().kappa * v.x.abs());
        }
    }
}
