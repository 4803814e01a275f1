//! Area-preserving self-maps of the flat torus.
//!
//! Every map provides exact forward and inverse evaluation together with its
//! analytic Jacobian, so the cocycle and Newton machinery never differentiate
//! numerically.

use serde::{Deserialize, Serialize};

use crate::geometry::{Mat2, TorusPoint, Vec2};
use crate::scalar::Real;

/// The provided map families.
///
/// Standard map convention: `f(x, y) = (x + y', y')` with
/// `y' = y + (K / 2pi) sin(2pi x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapKind<T> {
    Cat,
    Standard {
        #[serde(rename = "K")]
        k: T,
    },
    Translation {
        a: T,
        b: T,
    },
    /// Applied in list order: the first entry acts first.
    Composite {
        maps: Vec<SurfaceMap<T>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMap<T> {
    #[serde(flatten)]
    pub kind: MapKind<T>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
}

/// Upper bounds `||Df|| <= a`, `||D^2 f|| <= d`, both clamped to at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds<T> {
    pub a: T,
    pub d: T,
}

impl<T: Real> SurfaceMap<T> {
    pub fn new(kind: MapKind<T>) -> Self {
        let name = match &kind {
            MapKind::Cat => "cat".to_string(),
            MapKind::Standard { k } => format!("standard(K={k})"),
            MapKind::Translation { a, b } => format!("translation({a},{b})"),
            MapKind::Composite { maps } => {
                let parts: Vec<_> = maps.iter().map(|m| m.name.clone()).collect();
                format!("composite[{}]", parts.join(","))
            }
        };
        Self { kind, name }
    }

    pub fn cat() -> Self {
        Self::new(MapKind::Cat)
    }

    pub fn standard(k: T) -> Self {
        Self::new(MapKind::Standard { k })
    }

    pub fn translation(a: T, b: T) -> Self {
        Self::new(MapKind::Translation { a, b })
    }

    pub fn composite(maps: Vec<SurfaceMap<T>>) -> Self {
        Self::new(MapKind::Composite { maps })
    }

    pub fn apply(&self, p: TorusPoint<T>) -> TorusPoint<T> {
        match &self.kind {
            MapKind::Cat => TorusPoint::new(p.x + p.x + p.y, p.x + p.y),
            MapKind::Standard { k } => {
                let y1 = p.y + *k / T::TAU() * (T::TAU() * p.x).sin();
                TorusPoint::new(p.x + y1, y1)
            }
            MapKind::Translation { a, b } => TorusPoint::new(p.x + *a, p.y + *b),
            MapKind::Composite { maps } => maps.iter().fold(p, |q, m| m.apply(q)),
        }
    }

    pub fn apply_inverse(&self, p: TorusPoint<T>) -> TorusPoint<T> {
        match &self.kind {
            MapKind::Cat => TorusPoint::new(p.x - p.y, p.y + p.y - p.x),
            MapKind::Standard { k } => {
                let x0 = (p.x - p.y).wrap_unit();
                TorusPoint::new(x0, p.y - *k / T::TAU() * (T::TAU() * x0).sin())
            }
            MapKind::Translation { a, b } => TorusPoint::new(p.x - *a, p.y - *b),
            MapKind::Composite { maps } => maps.iter().rev().fold(p, |q, m| m.apply_inverse(q)),
        }
    }

    /// `f^n(p)` for any signed `n`.
    pub fn iterate(&self, p: TorusPoint<T>, n: i64) -> TorusPoint<T> {
        let mut q = p;
        if n >= 0 {
            for _ in 0..n {
                q = self.apply(q);
            }
        } else {
            for _ in 0..(-n) {
                q = self.apply_inverse(q);
            }
        }
        q
    }

    /// Orbit `p, f(p), ..., f^len(p)` (length `len + 1`).
    pub fn orbit(&self, p: TorusPoint<T>, len: usize) -> Vec<TorusPoint<T>> {
        let mut out = Vec::with_capacity(len + 1);
        let mut q = p;
        out.push(q);
        for _ in 0..len {
            q = self.apply(q);
            out.push(q);
        }
        out
    }

    /// Analytic Jacobian `Df(p)`.
    pub fn derivative(&self, p: TorusPoint<T>) -> Mat2<T> {
        match &self.kind {
            MapKind::Cat => Mat2::new(T::lit(2.0), T::one(), T::one(), T::one()),
            MapKind::Standard { k } => {
                let kc = *k * (T::TAU() * p.x).cos();
                Mat2::new(T::one() + kc, T::one(), kc, T::one())
            }
            MapKind::Translation { .. } => Mat2::identity(),
            MapKind::Composite { maps } => {
                let mut q = p;
                let mut acc = Mat2::identity();
                for m in maps {
                    acc = m.derivative(q) * acc;
                    q = m.apply(q);
                }
                acc
            }
        }
    }

    /// `Df^n(p)` by direct multiplication; only sensible for short `n`.
    pub fn derivative_iter(&self, p: TorusPoint<T>, n: usize) -> Mat2<T> {
        let mut q = p;
        let mut acc = Mat2::identity();
        for _ in 0..n {
            acc = self.derivative(q) * acc;
            q = self.apply(q);
        }
        acc
    }

    /// `det Df^n(p)` as the product of the one-step determinants, which
    /// stays accurate where `det` of the product matrix cancels.
    pub fn derivative_iter_det(&self, p: TorusPoint<T>, n: usize) -> T {
        let mut q = p;
        let mut acc = T::one();
        for _ in 0..n {
            acc = acc * self.derivative(q).det();
            q = self.apply(q);
        }
        acc
    }

    /// Jacobian of the inverse map at `p`.
    pub fn derivative_inverse(&self, p: TorusPoint<T>) -> Mat2<T> {
        let pre = self.apply_inverse(p);
        self.derivative(pre).inverse().unwrap_or_else(Mat2::identity)
    }

    /// Second-derivative tensor applied to `(u, v)` at `p`.
    pub fn second_derivative(&self, p: TorusPoint<T>, u: Vec2<T>, v: Vec2<T>) -> Vec2<T> {
        match &self.kind {
            MapKind::Cat | MapKind::Translation { .. } => Vec2::default(),
            MapKind::Standard { k } => {
                let s = -*k * T::TAU() * (T::TAU() * p.x).sin() * u.x * v.x;
                Vec2::new(s, s)
            }
            MapKind::Composite { maps } => {
                // D^2(g o f)(u, v) = D^2 g(Df u, Df v) + Dg D^2 f(u, v)
                let mut q = p;
                let mut du = u;
                let mut dv = v;
                let mut acc = Vec2::default();
                for m in maps {
                    let jac = m.derivative(q);
                    acc = jac.mul_vec(acc) + m.second_derivative(q, du, dv);
                    du = jac.mul_vec(du);
                    dv = jac.mul_vec(dv);
                    q = m.apply(q);
                }
                acc
            }
        }
    }

    /// Upper bounds for `||Df||` and `||D^2 f||`.
    ///
    /// Closed forms where available; composites use a 1024x1024 grid supremum
    /// of `||Df||` with a 1.01 safety factor and the chain-rule bound for the
    /// second derivative.
    pub fn norm_bounds(&self) -> NormBounds<T> {
        let (a, d) = self.raw_bounds();
        NormBounds { a: a.max(T::one()), d: d.max(T::one()) }
    }

    fn raw_bounds(&self) -> (T, T) {
        match &self.kind {
            MapKind::Cat => ((T::lit(3.0) + T::lit(5.0).sqrt()) / T::lit(2.0), T::zero()),
            MapKind::Standard { k } => {
                // ||Df|| is convex in cos(2 pi x), so the sup sits at cos = +-1
                let hi = Mat2::new(T::one() + *k, T::one(), *k, T::one()).op_norm();
                let lo = Mat2::new(T::one() - *k, T::one(), -*k, T::one()).op_norm();
                (hi.max(lo), T::SQRT_2() * T::TAU() * k.abs())
            }
            MapKind::Translation { .. } => (T::one(), T::zero()),
            MapKind::Composite { maps } => {
                const GRID: usize = 1024;
                let step = T::one() / T::lit(GRID as f64);
                let mut sup = T::zero();
                for i in 0..GRID {
                    for j in 0..GRID {
                        let p = TorusPoint::new(T::lit(i as f64) * step, T::lit(j as f64) * step);
                        sup = sup.max(self.derivative(p).op_norm());
                    }
                }
                let a = sup * T::lit(1.01);
                let mut a_acc = T::one();
                let mut d_acc = T::zero();
                for m in maps {
                    let (am, dm) = m.raw_bounds();
                    d_acc = dm * a_acc * a_acc + am * d_acc;
                    a_acc = a_acc * am;
                }
                (a.min(a_acc), d_acc)
            }
        }
    }

    /// True when `Df` is the identity everywhere.
    pub fn is_isometry(&self) -> bool {
        match &self.kind {
            MapKind::Translation { .. } => true,
            MapKind::Composite { maps } => maps.iter().all(|m| m.is_isometry()),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64) -> TorusPoint<f64> {
        TorusPoint::new(x, y)
    }

    #[test]
    fn long_product_determinant_stays_unimodular() {
        let m = SurfaceMap::standard(6.0);
        let x = pt(0.137, 0.421);
        let prod = m.derivative_iter(x, 12);
        let det = m.derivative_iter_det(x, 12);
        assert!((det - 1.0).abs() < 1e-12);
        // the entries are large enough that ad - bc has lost the digits
        assert!(prod.a.abs().max(prod.d.abs()) > 1e5);
        let (big, small) = prod.real_eigenvalues_with_det(det).unwrap();
        assert!((big * small - 1.0).abs() < 1e-12);
        assert!((big + small - prod.trace()).abs() <= 1e-9 * prod.trace().abs());
    }

    #[test]
    fn cat_examples() {
        let cat = SurfaceMap::<f64>::cat();
        assert_eq!(cat.iterate(pt(0.0, 0.0), 5), pt(0.0, 0.0));
        assert_eq!(cat.iterate(pt(0.5, 0.5), 1), pt(0.5, 0.0));
        assert_eq!(cat.derivative(pt(0.3, 0.7)), Mat2::new(2.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn integrable_standard_map_keeps_momentum() {
        let m = SurfaceMap::standard(0.0);
        let q = m.iterate(pt(0.25, 0.5), 2);
        assert!(q.dist(&pt(0.25, 0.5)) < 1e-15);
    }

    #[test]
    fn standard_derivative_matches_formula() {
        let k = 6.0;
        let m = SurfaceMap::standard(k);
        for &(x, y) in &[(0.1, 0.2), (0.77, 0.3), (0.5, 0.9)] {
            let c = k * (std::f64::consts::TAU * x).cos();
            assert_eq!(m.derivative(pt(x, y)), Mat2::new(1.0 + c, 1.0, c, 1.0));
        }
    }

    #[test]
    fn standard_derivative_matches_finite_differences() {
        let m = SurfaceMap::standard(6.0);
        let p = pt(0.123, 0.456);
        let h = 1e-6;
        let j = m.derivative(p);
        let fx = p.displacement_to(&p).x; // 0, keeps the lift bookkeeping explicit
        let base = m.apply(p);
        let dx = base.displacement_to(&m.apply(pt(p.x + h, p.y))).scale(1.0 / h);
        let dy = base.displacement_to(&m.apply(pt(p.x, p.y + h))).scale(1.0 / h);
        assert_eq!(fx, 0.0);
        assert!((dx - j.col0()).norm() < 1e-3);
        assert!((dy - j.col1()).norm() < 1e-3);
    }

    #[test]
    fn translation_derivative_is_identity() {
        let m = SurfaceMap::translation(0.3, 0.1);
        assert_eq!(m.derivative(pt(0.4, 0.4)), Mat2::identity());
        assert!(m.is_isometry());
    }

    #[test]
    fn norm_bound_values() {
        let cat = SurfaceMap::<f64>::cat().norm_bounds();
        assert!((cat.a - 2.618034).abs() < 1e-6);
        assert_eq!(cat.d, 1.0);
        let tr = SurfaceMap::translation(0.2, 0.3).norm_bounds();
        assert_eq!((tr.a, tr.d), (1.0, 1.0));
        let st = SurfaceMap::standard(6.0).norm_bounds();
        assert!(st.d >= std::f64::consts::TAU * 6.0);
        // the analytic sup dominates a dense sample
        let m = SurfaceMap::standard(6.0);
        for i in 0..2000 {
            let p = pt(i as f64 / 2000.0, 0.0);
            assert!(m.derivative(p).op_norm() <= st.a + 1e-12);
        }
    }

    #[test]
    fn composite_bounds_cover_grid() {
        let m = SurfaceMap::composite(vec![SurfaceMap::standard(1.5), SurfaceMap::cat()]);
        let b = m.norm_bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = pt(rng.gen(), rng.gen());
            assert!(m.derivative(p).op_norm() <= b.a);
        }
        assert!(b.d > 1.0);
    }

    fn all_kinds() -> Vec<SurfaceMap<f64>> {
        vec![
            SurfaceMap::cat(),
            SurfaceMap::standard(6.0),
            SurfaceMap::standard(0.5),
            SurfaceMap::translation(0.1234, 0.777),
            SurfaceMap::composite(vec![SurfaceMap::standard(2.0), SurfaceMap::cat()]),
        ]
    }

    #[test]
    fn area_preservation_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in all_kinds() {
            for _ in 0..10_000 {
                let p = pt(rng.gen(), rng.gen());
                assert!((m.derivative(p).det() - 1.0).abs() < 1e-9, "{}", m.name);
            }
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for m in all_kinds() {
            for _ in 0..2000 {
                let p = pt(rng.gen(), rng.gen());
                assert!(m.apply_inverse(m.apply(p)).dist(&p) < 1e-9, "{}", m.name);
                assert!(m.apply(m.apply_inverse(p)).dist(&p) < 1e-9, "{}", m.name);
            }
        }
    }

    #[test]
    fn iterate_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for m in all_kinds() {
            for _ in 0..50 {
                let p = pt(rng.gen(), rng.gen());
                let a: i64 = rng.gen_range(-4..=4);
                let b: i64 = rng.gen_range(-4..=4);
                let lhs = m.iterate(m.iterate(p, a), b);
                let rhs = m.iterate(p, a + b);
                // chaotic maps amplify rounding by ||Df||^|a|, so compare against that scale
                let amp = m.norm_bounds().a.powi((a.abs() + b.abs()) as i32);
                assert!(lhs.dist(&rhs) < 1e-9 * (a.abs() + b.abs()).max(1) as f64 * amp, "{}", m.name);
            }
            let p = pt(0.3, 0.4);
            assert_eq!(m.iterate(p, 0), p);
        }
    }

    #[test]
    fn composite_second_derivative_matches_finite_difference() {
        let m = SurfaceMap::composite(vec![SurfaceMap::standard(1.3), SurfaceMap::standard(0.7)]);
        let p = pt(0.21, 0.63);
        let u = Vec2::new(1.0, 0.0);
        let h = 1e-5;
        let j0 = m.derivative(p);
        let j1 = m.derivative(pt(p.x + h, p.y));
        let fd = (j1.col0() - j0.col0()).scale(1.0 / h);
        let an = m.second_derivative(p, u, u);
        assert!((fd - an).norm() < 1e-3 * an.norm().max(1.0));
    }

    #[test]
    fn descriptor_round_trip() {
        let m: SurfaceMap<f64> = serde_json::from_str(r#"{"kind":"standard","K":6.0}"#).unwrap();
        assert_eq!(m.kind, MapKind::Standard { k: 6.0 });
        let s = serde_json::to_string(&SurfaceMap::<f64>::standard(6.0)).unwrap();
        assert!(s.contains(r#""kind":"standard""#) && s.contains(r#""K":6.0"#));
        let c: SurfaceMap<f64> = serde_json::from_str(
            r#"{"kind":"composite","maps":[{"kind":"cat"},{"kind":"translation","a":0.5,"b":0.25}]}"#,
        )
        .unwrap();
        assert!(matches!(c.kind, MapKind::Composite { ref maps } if maps.len() == 2));
    }
}
