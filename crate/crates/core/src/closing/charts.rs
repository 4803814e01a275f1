//! Charts along an orbit segment in the singular frames of the cocycle.

use serde::{Deserialize, Serialize};

use crate::cocycle::CocycleTrace;
use crate::error::{Error, Result};
use crate::geometry::{Mat2, TorusPoint, Vec2};
use crate::maps::SurfaceMap;

/// The pair `(v^u_n, v^s_n)`; chart coordinates `(v, w)` mean `v v^u + w v^s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub vu: Vec2<f64>,
    pub vs: Vec2<f64>,
}

impl Frame {
    pub fn matrix(&self) -> Mat2<f64> {
        Mat2::from_cols(self.vu, self.vs)
    }

    pub fn angle(&self) -> f64 {
        self.vu.line_angle(self.vs)
    }
}

/// Charts `g_n = F_{n+1}^{-1} (f(x_n + F_n (v, w)) - x_{n+1})` for `n = i1..i2`,
/// indexed locally from 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartSeq {
    pub map: SurfaceMap<f64>,
    pub i1: usize,
    pub i2: usize,
    /// `x_{i1}, ..., x_{i2}`.
    pub base: Vec<TorusPoint<f64>>,
    pub frames: Vec<Frame>,
    /// Per-step rates copied from the trace.
    pub lam_u: Vec<f64>,
    pub lam_s: Vec<f64>,
    #[serde(skip)]
    inv: Vec<Mat2<f64>>,
}

impl ChartSeq {
    pub fn new(
        map: SurfaceMap<f64>,
        i1: usize,
        base: Vec<TorusPoint<f64>>,
        frames: Vec<Frame>,
        lam_u: Vec<f64>,
        lam_s: Vec<f64>,
    ) -> Result<Self> {
        let steps = base.len().saturating_sub(1);
        if steps == 0 || frames.len() != base.len() || lam_u.len() != steps || lam_s.len() != steps {
            return Err(Error::InvalidInput("chart sequence lengths disagree".into()));
        }
        let mut inv = Vec::with_capacity(frames.len());
        for (k, fr) in frames.iter().enumerate() {
            let angle = fr.angle();
            if angle < 1e-8 {
                return Err(Error::FrameDegenerate { step: i1 + k, angle });
            }
            inv.push(fr.matrix().inverse().ok_or(Error::FrameDegenerate { step: i1 + k, angle })?);
        }
        Ok(Self { map, i1, i2: i1 + steps, base, frames, lam_u, lam_s, inv })
    }

    pub fn steps(&self) -> usize {
        self.base.len() - 1
    }

    fn embed(&self, n: usize, p: Vec2<f64>) -> TorusPoint<f64> {
        self.base[n].translate(self.frames[n].matrix().mul_vec(p))
    }

    fn chart(&self, n: usize, y: TorusPoint<f64>) -> Vec2<f64> {
        self.inv[n].mul_vec(self.base[n].displacement_to(&y))
    }

    pub fn g(&self, n: usize, p: Vec2<f64>) -> Vec2<f64> {
        self.chart(n + 1, self.map.apply(self.embed(n, p)))
    }

    pub fn dg(&self, n: usize, p: Vec2<f64>) -> Mat2<f64> {
        self.inv[n + 1] * self.map.derivative(self.embed(n, p)) * self.frames[n].matrix()
    }

    pub fn g_inv(&self, n: usize, p: Vec2<f64>) -> Vec2<f64> {
        self.chart(n, self.map.apply_inverse(self.embed(n + 1, p)))
    }

    pub fn dg_inv(&self, n: usize, p: Vec2<f64>) -> Mat2<f64> {
        self.inv[n] * self.map.derivative_inverse(self.embed(n + 1, p)) * self.frames[n + 1].matrix()
    }

    /// `J(v, w) = F_{i1}^{-1} (x_{i2} + F_{i2} (v, w) - x_{i1})`.
    pub fn jump(&self, p: Vec2<f64>) -> Vec2<f64> {
        self.chart(0, self.embed(self.steps(), p))
    }

    /// Return map `G = J g_{i2-1} ... g_{i1}` in the chart at `i1`.
    pub fn composite(&self, p: Vec2<f64>) -> Vec2<f64> {
        let mut q = p;
        for n in 0..self.steps() {
            q = self.g(n, q);
        }
        self.jump(q)
    }

    /// `det(F_{n+1}) / det(F_n)`: multiplies `det Dg_n` back to `det Df`.
    pub fn volume_correction(&self, n: usize) -> f64 {
        self.frames[n + 1].matrix().det() / self.frames[n].matrix().det()
    }
}

/// Charts for the trace segment `i1..=i2`.
pub fn build_charts(map: &SurfaceMap<f64>, trace: &CocycleTrace<f64>, i1: usize, i2: usize) -> Result<ChartSeq> {
    if !(i1 < i2 && i2 <= trace.len()) {
        return Err(Error::InvalidInput(format!("need 0 <= i1 < i2 <= {}, got ({i1}, {i2})", trace.len())));
    }
    let frames = (i1..=i2).map(|n| Frame { vu: trace.vu[n], vs: trace.vs[n] }).collect();
    ChartSeq::new(
        map.clone(),
        i1,
        trace.base[i1..=i2].to_vec(),
        frames,
        trace.lam_u[i1..i2].to_vec(),
        trace.lam_s[i1..i2].to_vec(),
    )
}
