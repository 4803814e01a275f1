//! Tower-exponential parameter cascade.
//!
//! Every quantity that can leave `f64` range is a [`LogTower`]: a number written
//! as `exp(exp(...exp(top)))` with `depth` exponentials.

use std::cmp::Ordering;
use std::f64::consts::E;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// `exp^depth(top)` in normal form.
///
/// Normal form: depth 0 holds any value `<= e`; depth `k >= 1` has `top` in
/// `(1, e]`. The value ranges of distinct depths are disjoint and increasing,
/// so ordering is lexicographic on `(depth, top)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTower {
    pub depth: u32,
    pub top: f64,
}

impl LogTower {
    pub fn from_f64(v: f64) -> Self {
        Self { depth: 0, top: v }.normalize()
    }

    /// The number `e^l`.
    pub fn from_ln(l: f64) -> Self {
        Self { depth: 1, top: l }.normalize()
    }

    pub fn zero() -> Self {
        Self::from_f64(0.0)
    }

    pub fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn normalize(mut self) -> Self {
        loop {
            if self.top > E && self.top.is_finite() {
                self.top = self.top.ln();
                self.depth += 1;
            } else if self.depth > 0 && self.top <= 1.0 {
                self.top = self.top.exp();
                self.depth -= 1;
            } else {
                return self;
            }
        }
    }

    /// Plain value, when it is a finite `f64`.
    pub fn to_f64(&self) -> Option<f64> {
        let mut v = self.top;
        for _ in 0..self.depth {
            v = v.exp();
            if !v.is_finite() {
                return None;
            }
        }
        Some(v)
    }

    /// Natural log of the value as an `f64`, when finite. Non-positive values give `-inf`/NaN.
    pub fn ln_f64(&self) -> Option<f64> {
        if self.depth == 0 {
            return Some(self.top.ln());
        }
        let inner = Self { depth: self.depth - 1, top: self.top };
        inner.to_f64()
    }

    pub fn log10_f64(&self) -> Option<f64> {
        self.ln_f64().map(|l| l / std::f64::consts::LN_10)
    }

    /// `ln` of the value, as a tower.
    pub fn ln(&self) -> Self {
        if self.depth == 0 {
            Self::from_f64(self.top.ln())
        } else {
            Self { depth: self.depth - 1, top: self.top }.normalize()
        }
    }

    pub fn exp(&self) -> Self {
        Self { depth: self.depth + 1, top: self.top }.normalize()
    }

    /// Sum. A non-representable operand absorbs a representable one: the
    /// relative change is far below the precision of the tower's top.
    pub fn add(&self, o: &Self) -> Self {
        if let (Some(a), Some(b)) = (self.to_f64(), o.to_f64()) {
            let s = a + b;
            if s.is_finite() {
                return Self::from_f64(s);
            }
        }
        let (big, small) = if self >= o { (*self, *o) } else { (*o, *self) };
        match (big.ln_f64(), small.to_f64()) {
            (Some(lb), Some(s)) if s <= 0.0 => {
                // only reachable when `big` overflowed f64 on its own
                Self::from_ln(lb)
            }
            (Some(lb), _) => match small.ln_f64() {
                Some(ls) => Self::from_ln(lb + (ls - lb).exp().ln_1p()),
                None => big,
            },
            (None, _) => big,
        }
    }

    /// Product, with sign handling for depth-0 operands.
    pub fn mul(&self, o: &Self) -> Self {
        if let (Some(a), Some(b)) = (self.to_f64(), o.to_f64()) {
            let p = a * b;
            if p.is_finite() {
                return Self::from_f64(p);
            }
        }
        let neg = self.sign() * o.sign();
        if neg == 0.0 {
            return Self::zero();
        }
        let la = self.abs().ln();
        let lb = o.abs().ln();
        let mag = la.add(&lb).exp();
        if neg < 0.0 {
            // magnitude overflowed f64; only depth-0 values carry a sign
            Self::from_f64(f64::NEG_INFINITY)
        } else {
            mag
        }
    }

    /// Quotient of positive values.
    pub fn div(&self, o: &Self) -> Self {
        if let (Some(a), Some(b)) = (self.to_f64(), o.to_f64()) {
            let p = a / b;
            if p.is_finite() {
                return Self::from_f64(p);
            }
        }
        let la = self.ln();
        let lb = o.ln();
        match (la.to_f64(), lb.to_f64()) {
            (Some(x), Some(y)) => Self::from_ln(x - y),
            _ if la >= lb => *self,
            _ => Self::zero(),
        }
    }

    /// `self^e` for `self > 0`.
    pub fn pow(&self, e: &Self) -> Self {
        let lb = self.ln();
        let l = e.mul(&lb);
        l.exp()
    }

    pub fn ceil(&self) -> Self {
        match self.to_f64() {
            Some(v) if v.abs() < 9.007_199_254_740_992e15 => Self::from_f64(v.ceil()),
            _ => *self,
        }
    }

    fn sign(&self) -> f64 {
        if self.depth > 0 || self.top > 0.0 {
            1.0
        } else if self.top < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    fn abs(&self) -> Self {
        if self.depth == 0 {
            Self::from_f64(self.top.abs())
        } else {
            *self
        }
    }
}

impl Eq for LogTower {}

impl PartialOrd for LogTower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogTower {
    fn cmp(&self, other: &Self) -> Ordering {
        self.depth.cmp(&other.depth).then(self.top.total_cmp(&other.top))
    }
}

impl fmt::Display for LogTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_f64() {
            Some(v) if v.abs() < 1e300 => write!(f, "{v}"),
            _ => write!(f, "exp^{}({})", self.depth, self.top),
        }
    }
}

impl Serialize for LogTower {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LogTower", 4)?;
        st.serialize_field("depth", &self.depth)?;
        st.serialize_field("top", &self.top)?;
        st.serialize_field("ln", &self.ln_f64().filter(|v| v.is_finite()))?;
        st.serialize_field("value", &self.to_f64().filter(|v| v.abs() < 1e300))?;
        st.end()
    }
}

/// `Tower(R0, R1, K)`: `R0` for `K = 1`, else `R1^Tower(R0, R1, K - 1)`.
pub fn tower(r0: f64, r1: f64, k: u32) -> LogTower {
    tower_t(LogTower::from_f64(r0), LogTower::from_f64(r1), k)
}

/// [`tower`] with tower-valued bases.
pub fn tower_t(r0: LogTower, r1: LogTower, k: u32) -> LogTower {
    assert!(k >= 1, "tower height must be at least 1");
    let mut v = r0;
    for _ in 1..k {
        v = r1.pow(&v);
    }
    v
}

/// Unquantified absolute constants, exposed as dials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub theta0: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Cprime")]
    pub c_prime: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { theta0: 0.99, c: 1.0, c_prime: 1.0, c0: 1.0 }
    }
}

/// The full parameter cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    #[serde(rename = "A")]
    pub a: f64,
    /// Effective `D`, raised to `A` if the input was not above it.
    #[serde(rename = "D")]
    pub d: f64,
    pub d_raised: bool,
    pub h: f64,
    pub eps: f64,
    pub delta: Option<f64>,
    pub constants: Constants,
    #[serde(rename = "Delta")]
    pub big_delta: f64,
    #[serde(rename = "K")]
    pub k: u32,
    pub eta: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    /// `q_0 ..= q_K`.
    pub q: Vec<LogTower>,
    /// `l_0 .. l_{K-1}`, plus `l_K` when `n` was supplied.
    pub l: Vec<LogTower>,
    /// `-ln lambda_k` for `k = 0..=K`.
    pub lambda_neg_log: Vec<LogTower>,
    /// `-ln xi_k` for each `k` with a defined `l_k`.
    pub xi_neg_log: Vec<LogTower>,
    #[serde(rename = "Q0")]
    pub q0_big: LogTower,
    #[serde(rename = "Q1")]
    pub q1_big: LogTower,
    #[serde(rename = "P0")]
    pub p0: LogTower,
    #[serde(rename = "P1")]
    pub p1: LogTower,
    #[serde(rename = "K0")]
    pub k0: u32,
}

/// Inputs of [`build_schedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleInput {
    pub a: f64,
    pub d: f64,
    pub h: f64,
    pub eps: f64,
    /// Scale `delta` of the covering hypothesis; enters `P0` when present.
    pub delta: Option<f64>,
    pub n_hint: Option<LogTower>,
    pub constants: Constants,
}

pub fn build_schedule(inp: &ScheduleInput) -> Result<Schedule> {
    let ScheduleInput { a, d, h, eps, delta, n_hint, constants } = *inp;
    let Constants { theta0, c, c_prime, c0 } = constants;
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::InvalidRegime(format!("A must exceed 1, got {a}")));
    }
    let ln_a = a.ln();
    if !(h > 0.0) || h > ln_a * (1.0 + 1e-12) {
        return Err(Error::InvalidRegime(format!("h must lie in (0, log A = {ln_a}], got {h}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(theta0 > 0.5 && theta0 < 1.0) || !(c > 0.0) || !(c_prime > 0.0) || !(c0 > 0.0) {
        return Err(Error::InvalidInput("constants need theta0 in (1/2, 1) and C, C', C0 > 0".into()));
    }
    if let Some(dl) = delta {
        if !(dl > 0.0 && dl < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {dl}")));
        }
    }
    let d_raised = !(d > a);
    let d = if d_raised { a } else { d };
    let ln_d = d.ln();

    let big_delta = 16.0 * ln_a / h;
    let k = ((big_delta / 4.0).ln() / -theta0.ln()).ceil().max(2.0) as u32;
    let eta = 1.0 / (c * big_delta * big_delta);
    let big_h = c_prime * big_delta;

    let q0_plain = (c_prime * big_delta.ln().powi(2)).exp() / eps;
    let mut q = vec![LogTower::from_f64(q0_plain).ceil()];
    let mut l = Vec::new();
    for i in 0..k as usize {
        let expo = q[i].mul(&LogTower::from_f64(big_h * ln_d));
        let li = expo.exp().ceil();
        q.push(q[i].mul(&li));
        l.push(li);
    }
    if let Some(n) = n_hint {
        let lk = n.div(&q[k as usize]).ceil();
        l.push(if lk < LogTower::one() { LogTower::one() } else { lk });
    }

    let lambda_neg_log = q.iter().map(|qk| qk.mul(&LogTower::from_f64(c * big_delta * ln_d))).collect();

    let xi_neg_log = (0..l.len())
        .map(|i| {
            let coef = ln_a * theta0.powi(i as i32 + 1) / 2.0;
            let base = q[i].mul(&LogTower::from_f64(coef));
            if i == k as usize {
                // l_K = ceil(n / q_K) is not of the D^{q H} form
                let ratio = l[i].div(&q[i].mul(&LogTower::from_f64(c * big_delta * ln_d)).exp());
                return base.mul(&ratio);
            }
            // l_k / D^{C Delta q_k} = exp(q_k ln D (H - C Delta)) up to the ceiling
            let rate = ln_d * (big_h - c * big_delta);
            let e = q[i].mul(&LogTower::from_f64(rate.abs()));
            let factor = if rate >= 0.0 {
                e.exp()
            } else {
                match e.to_f64() {
                    Some(v) => LogTower::from_f64((-v).exp()),
                    None => LogTower::zero(),
                }
            };
            base.mul(&factor)
        })
        .collect();

    let q0_big = LogTower::from_f64(q0_plain);
    let q1_big = LogTower::from_ln(20.0 * c_prime * ln_d * ln_a / h);
    let ll = (ln_a / h).ln().max(0.0);
    let mut p0 = LogTower::from_ln(c0 * ll * ll + c0 - eps.ln());
    if let Some(dl) = delta {
        let alt = LogTower::from_f64(c0 / h * (1.0 / dl).ln());
        if alt > p0 {
            p0 = alt;
        }
    }
    let p1 = LogTower::from_ln(c0 / h * ln_d * ln_a);
    let k0 = (c0 * ll + c0).ceil().max(1.0) as u32;

    Ok(Schedule {
        a,
        d,
        d_raised,
        h,
        eps,
        delta,
        constants,
        big_delta,
        k,
        eta,
        big_h,
        q,
        l,
        lambda_neg_log,
        xi_neg_log,
        q0_big,
        q1_big,
        p0,
        p1,
        k0,
    })
}

impl Schedule {
    /// `ln A * theta0^(K+1)`, which must lie in `(h/16, h/4]`.
    pub fn top_level_log_rate(&self) -> f64 {
        self.a.ln() * self.constants.theta0.powi(self.k as i32 + 1)
    }

    /// Plain-real copy of the cascade, if every level fits in `f64`.
    pub fn to_plain(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let q: Option<Vec<f64>> = self.q.iter().map(|v| v.to_f64()).collect();
        let l: Option<Vec<f64>> = self.l.iter().map(|v| v.to_f64()).collect();
        Some((q?, l?))
    }
}

/// User-supplied desk-scale replacement for the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySchedule {
    pub q: Vec<u64>,
    pub l: Vec<u64>,
    pub eta: f64,
    /// Neighborhood radii `xi_k`; default 1 (the whole torus at desk scale).
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    /// Hyperbolicity levels `lambda_k`; default `1e-2`.
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    /// Forced time threshold; default `q_last * l_last`.
    #[serde(default)]
    pub required: Option<f64>,
}

impl ToySchedule {
    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() || self.q.len() != self.l.len() {
            return Err(Error::InvalidInput("toy schedule needs equally long, non-empty q and l".into()));
        }
        if self.q.iter().chain(&self.l).any(|&v| v == 0) {
            return Err(Error::InvalidInput("toy schedule entries must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidInput("toy eta must lie in (0, 1)".into()));
        }
        for (name, v) in [("xi", &self.xi), ("lambda", &self.lambda)] {
            if let Some(v) = v {
                if v.len() != self.q.len() {
                    return Err(Error::InvalidInput(format!("toy {name} must match q in length")));
                }
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.q.len()
    }

    pub fn xi_at(&self, k: usize) -> f64 {
        self.xi.as_ref().map_or(1.0, |v| v[k])
    }

    pub fn lambda_at(&self, k: usize) -> f64 {
        self.lambda.as_ref().map_or(1e-2, |v| v[k])
    }

    pub fn required(&self) -> f64 {
        self.required.unwrap_or_else(|| {
            let last = self.q.len() - 1;
            (self.q[last] * self.l[last]) as f64
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub passes: bool,
    pub n: LogTower,
    pub required: LogTower,
    /// `Tower(P0, P1, K0)`.
    pub stated_threshold: Option<LogTower>,
    /// `Tower(Q0, Q1, K + 3)`, the horizon the cascade itself needs.
    pub cascade_threshold: Option<LogTower>,
    pub toy: bool,
}

/// Compare `n` against the time threshold of the true cascade.
///
/// `required` is the larger of `Tower(P0, P1, K0)` and `Tower(Q0, Q1, K + 3)`:
/// with unit constants the former alone can be tiny while the decomposition
/// still needs the full cascade length.
pub fn threshold_check(s: &Schedule, n: LogTower) -> ThresholdReport {
    let stated = tower_t(s.p0, s.p1, s.k0);
    let cascade = tower_t(s.q0_big, s.q1_big, s.k + 3);
    let required = stated.max(cascade);
    ThresholdReport {
        passes: n >= required,
        n,
        required,
        stated_threshold: Some(stated),
        cascade_threshold: Some(cascade),
        toy: false,
    }
}

pub fn toy_threshold_check(t: &ToySchedule, n: f64) -> ThresholdReport {
    let required = LogTower::from_f64(t.required());
    let n = LogTower::from_f64(n);
    ThresholdReport { passes: n >= required, n, required, stated_threshold: None, cascade_threshold: None, toy: true }
}
