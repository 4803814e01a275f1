//! Heteroclinic intersections between hyperbolic periodic points, found
//! either explicitly by crossing polylines or implied by counting.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::closing::{grow_manifold, HyperbolicPoint};
use crate::error::{Error, Result};
use crate::geometry::TorusPoint;
use crate::maps::SurfaceMap;
use crate::schedule::ThresholdReport;

/// Point sets up to this size are searched over every pair, not only the
/// pigeonhole candidates.
pub const ALL_PAIRS_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct HeteroConfig {
    pub alpha: f64,
    pub r: f64,
    /// Pairs closer than `2 r alpha / c1` are candidates.
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    /// Smallest crossing angle, in radians, accepted as transverse.
    pub transversality_floor: f64,
}

impl Default for HeteroConfig {
    fn default() -> Self {
        Self { alpha: 0.25, r: 0.125, c1: 100.0, c2: 1.0, transversality_floor: 1e-3 }
    }
}

impl HeteroConfig {
    /// `(lambda^2, lambda^3)` with the default dials.
    pub fn lambda(lambda: f64) -> Result<Self> {
        Self { alpha: lambda * lambda, r: lambda.powi(3), ..Self::default() }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.alpha > 0.0 && self.alpha < std::f64::consts::PI) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, pi), got {}", self.alpha)));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidInput(format!("r must lie in (0, 1), got {}", self.r)));
        }
        if !(self.transversality_floor > 0.0) || !(self.c1 > 0.0) || !(self.c2 > 0.0) {
            return Err(Error::InvalidInput("c1, C2 and the transversality floor must be positive".into()));
        }
        Ok(self)
    }

    /// Largest position gap of a candidate pair.
    pub fn pair_radius(&self) -> f64 {
        2.0 * self.r * self.alpha / self.c1
    }
}

/// `C2 r^-2 alpha^-4`.
pub fn count_threshold(cfg: &HeteroConfig) -> f64 {
    cfg.c2 / (cfg.r * cfg.r * cfg.alpha.powi(4))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub point: TorusPoint<f64>,
    /// Angle between the two crossing segments, in `[0, pi/2]`.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeteroCertificate {
    pub p: HyperbolicPoint,
    pub q: HyperbolicPoint,
    /// `W^s(p)` against `W^u(q)`.
    pub su_crossing: Crossing,
    /// `W^u(p)` against `W^s(q)`.
    pub us_crossing: Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Positive,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mechanism {
    HeteroclinicCertificate,
    CountExceeded,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub fn set(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyVerdict {
    pub verdict: Verdict,
    pub mechanism: Option<Mechanism>,
    pub certificate: Option<HeteroCertificate>,
    pub threshold_report: Option<ThresholdReport>,
    pub diagnostics: Diagnostics,
}

impl EntropyVerdict {
    pub fn inconclusive(diagnostics: Diagnostics) -> Self {
        Self { verdict: Verdict::Inconclusive, mechanism: None, certificate: None, threshold_report: None, diagnostics }
    }

    /// Positive exactly when a mechanism is attached.
    pub fn is_consistent(&self) -> bool {
        (self.verdict == Verdict::Positive) == self.mechanism.is_some()
            && (self.mechanism == Some(Mechanism::HeteroclinicCertificate)) == self.certificate.is_some()
    }
}

/// Whether `pt` is `(alpha, r)`-hyperbolic for `cfg`.
pub fn qualifies(pt: &HyperbolicPoint, cfg: &HeteroConfig) -> bool {
    pt.alpha >= cfg.alpha && pt.r >= cfg.r && pt.violations().is_empty()
}

fn close_directions(a: &HyperbolicPoint, b: &HyperbolicPoint, bound: f64) -> bool {
    a.es.line_angle(b.es) < bound && a.eu.line_angle(b.eu) < bound
}

/// Unordered index pairs `(i, j)`, `i < j`, closer than `2 r alpha / c1` with
/// both splittings within `alpha / 20`, nearest first.
pub fn pigeonhole_pairs(points: &[HyperbolicPoint], cfg: &HeteroConfig) -> Vec<(usize, usize)> {
    let rad = cfg.pair_radius();
    let ang = cfg.alpha / 20.0;
    let m = (1.0 / rad).floor().min(4096.0) as i64;
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    let mut test = |i: usize, j: usize| {
        let d = points[i].z.dist(&points[j].z);
        if d < rad && close_directions(&points[i], &points[j], ang) {
            out.push((d, i.min(j), i.max(j)));
        }
    };
    if m < 3 {
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                test(i, j);
            }
        }
    } else {
        let cell = |p: &TorusPoint<f64>| (((p.x * m as f64) as i64).rem_euclid(m), ((p.y * m as f64) as i64).rem_euclid(m));
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            grid.entry(cell(&p.z)).or_default().push(i);
        }
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = cell(&p.z);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let key = ((cx + dx).rem_euclid(m), (cy + dy).rem_euclid(m));
                    for &j in grid.get(&key).map(Vec::as_slice).unwrap_or(&[]) {
                        if j > i {
                            test(i, j);
                        }
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    out.dedup_by_key(|t| (t.1, t.2));
    out.into_iter().map(|(_, i, j)| (i, j)).collect()
}

/// Crossing of segments `a1 b1` and `a2 b2`, the second lifted next to the first.
fn segment_crossing(a1: TorusPoint<f64>, b1: TorusPoint<f64>, a2: TorusPoint<f64>, b2: TorusPoint<f64>) -> Option<Crossing> {
    let d1 = a1.displacement_to(&b1);
    let d2 = a2.displacement_to(&b2);
    let w = a1.displacement_to(&a2);
    if w.norm() > d1.norm() + d2.norm() {
        return None;
    }
    let denom = d1.cross(d2);
    if denom.abs() <= 1e-300 {
        return None;
    }
    let s = w.cross(d2) / denom;
    let u = w.cross(d1) / denom;
    if !((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u)) {
        return None;
    }
    Some(Crossing { point: a1.translate(d1.scale(s)), angle: d1.line_angle(d2) })
}

/// Most transverse crossing of two polylines with angle at least `floor`.
///
/// Segments of `b` are bucketed by start point on a grid no finer than the
/// longest segment, so only nearby pairs are tested.
fn best_crossing(a: &[TorusPoint<f64>], b: &[TorusPoint<f64>], floor: f64) -> Option<Crossing> {
    let seg_len = |w: &[TorusPoint<f64>]| w[0].displacement_to(&w[1]).norm();
    let longest = a.windows(2).chain(b.windows(2)).map(seg_len).fold(0.0, f64::max);
    let m = if longest > 0.0 { (1.0 / longest).floor().min(1024.0) as i64 } else { 1024 };
    let mut best: Option<Crossing> = None;
    let mut consider = |sa: &[TorusPoint<f64>], sb: &[TorusPoint<f64>]| {
        if let Some(c) = segment_crossing(sa[0], sa[1], sb[0], sb[1]) {
            if c.angle >= floor && best.is_none_or(|x| c.angle > x.angle) {
                best = Some(c);
            }
        }
    };
    if m < 5 {
        for sa in a.windows(2) {
            for sb in b.windows(2) {
                consider(sa, sb);
            }
        }
        return best;
    }
    let cell = |p: &TorusPoint<f64>| (((p.x * m as f64) as i64).rem_euclid(m), ((p.y * m as f64) as i64).rem_euclid(m));
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (j, sb) in b.windows(2).enumerate() {
        grid.entry(cell(&sb[0])).or_default().push(j);
    }
    let segs: Vec<&[TorusPoint<f64>]> = b.windows(2).collect();
    for sa in a.windows(2) {
        // start points of crossing segments are within two cell widths
        let (cx, cy) = cell(&sa[0]);
        let mut near: Vec<usize> = Vec::new();
        for dx in -2..=2 {
            for dy in -2..=2 {
                if let Some(v) = grid.get(&((cx + dx).rem_euclid(m), (cy + dy).rem_euclid(m))) {
                    near.extend(v);
                }
            }
        }
        near.sort_unstable();
        for j in near {
            consider(sa, segs[j]);
        }
    }
    best
}

/// Both crossings `W^s(p) x W^u(q)` and `W^u(p) x W^s(q)`, or none.
pub fn intersect_manifolds(p: &HyperbolicPoint, q: &HyperbolicPoint, floor: f64) -> Option<HeteroCertificate> {
    if p.z.dist(&q.z) <= 1e-6 {
        return None;
    }
    let su = best_crossing(&p.ws, &q.wu, floor)?;
    let us = best_crossing(&p.wu, &q.ws, floor)?;
    Some(HeteroCertificate { p: p.clone(), q: q.clone(), su_crossing: su, us_crossing: us })
}

/// `pt` with both manifolds replaced by pieces of arclength `length` per side.
pub fn grow(map: &SurfaceMap<f64>, pt: &HyperbolicPoint, length: f64) -> Result<HyperbolicPoint> {
    Ok(HyperbolicPoint {
        wu: grow_manifold(map, pt.z, pt.period, length, true)?,
        ws: grow_manifold(map, pt.z, pt.period, length, false)?,
        ..pt.clone()
    })
}

fn canonical_order(points: &[HyperbolicPoint]) -> Vec<HyperbolicPoint> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a.z.x.total_cmp(&b.z.x).then(a.z.y.total_cmp(&b.z.y)).then(a.period.cmp(&b.period)));
    v
}

/// Explicit crossings first, over candidate pairs and then, for small sets,
/// every remaining pair; otherwise the count of `(alpha, r)`-hyperbolic points
/// against the threshold.
pub fn verdict(points: &[HyperbolicPoint], cfg: &HeteroConfig) -> EntropyVerdict {
    let pts = canonical_order(points);
    let mut diag = Diagnostics::default();
    let threshold = count_threshold(cfg);
    let qualifying = pts.iter().filter(|p| qualifies(p, cfg)).count();
    diag.set("points", pts.len() as f64);
    diag.set("qualifying_points", qualifying as f64);
    diag.set("count_threshold", threshold);
    diag.set("pair_radius", cfg.pair_radius());

    let candidates = pigeonhole_pairs(&pts, cfg);
    diag.set("candidate_pairs", candidates.len() as f64);
    let mut order = candidates.clone();
    if pts.len() <= ALL_PAIRS_LIMIT {
        let mut rest: Vec<(f64, usize, usize)> = (0..pts.len())
            .flat_map(|i| (i + 1..pts.len()).map(move |j| (i, j)))
            .filter(|ij| !candidates.contains(ij))
            .map(|(i, j)| (pts[i].z.dist(&pts[j].z), i, j))
            .collect();
        rest.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        order.extend(rest.into_iter().map(|(_, i, j)| (i, j)));
    } else {
        diag.note(format!("{} points exceed {ALL_PAIRS_LIMIT}, only candidate pairs searched", pts.len()));
    }
    diag.set("pairs_searched", order.len() as f64);

    let found = order
        .par_iter()
        .find_map_first(|&(i, j)| intersect_manifolds(&pts[i], &pts[j], cfg.transversality_floor));
    if let Some(cert) = found {
        diag.set("su_angle", cert.su_crossing.angle);
        diag.set("us_angle", cert.us_crossing.angle);
        return EntropyVerdict {
            verdict: Verdict::Positive,
            mechanism: Some(Mechanism::HeteroclinicCertificate),
            certificate: Some(cert),
            threshold_report: None,
            diagnostics: diag,
        };
    }
    if qualifying as f64 > threshold {
        diag.note("no explicit crossing; positive by counting alone");
        return EntropyVerdict {
            verdict: Verdict::Positive,
            mechanism: Some(Mechanism::CountExceeded),
            certificate: None,
            threshold_report: None,
            diagnostics: diag,
        };
    }
    diag.note(format!("no transverse crossing and {qualifying} qualifying points <= {threshold}"));
    EntropyVerdict::inconclusive(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closing::{certify_periodic_point, polyline_dist, LocateConfig};
    use crate::geometry::Vec2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn cat_point(x: f64, y: f64, period: usize) -> HyperbolicPoint {
        certify_periodic_point(&SurfaceMap::cat(), TorusPoint::new(x, y), period, &LocateConfig::default()).unwrap()
    }

    fn fixture() -> Vec<HyperbolicPoint> {
        // A^3 - I = [[12, 8], [8, 4]], so (1/4, 1/4) has period 3
        let cat = SurfaceMap::cat();
        [cat_point(0.0, 0.0, 1), cat_point(0.25, 0.25, 3)].iter().map(|p| grow(&cat, p, 1.5).unwrap()).collect()
    }

    fn synthetic(z: TorusPoint<f64>, lambda: f64) -> HyperbolicPoint {
        HyperbolicPoint {
            z,
            period: 1,
            es: Vec2::new(0.0, 1.0),
            eu: Vec2::new(1.0, 0.0),
            eig_s: 0.5,
            eig_u: 2.0,
            ws: vec![z],
            wu: vec![z],
            alpha: FRAC_PI_2,
            r: lambda.powi(3),
            lip_s: 0.0,
            lip_u: 0.0,
            residual: 0.0,
        }
    }

    #[test]
    fn thresholds() {
        let c = |alpha, r| count_threshold(&HeteroConfig { alpha, r, ..HeteroConfig::default() });
        assert!((c(1.0, 0.1) - 100.0).abs() < 1e-9);
        assert!((c(0.5, 0.1) - 1600.0).abs() < 1e-9);
        assert!((count_threshold(&HeteroConfig::lambda(0.5).unwrap()) - 16384.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(HeteroConfig { alpha: 4.0, ..HeteroConfig::default() }.validated().is_err());
        assert!(HeteroConfig { r: 1.0, ..HeteroConfig::default() }.validated().is_err());
        assert!(HeteroConfig { transversality_floor: 0.0, ..HeteroConfig::default() }.validated().is_err());
    }

    #[test]
    fn pigeonhole_examples() {
        let cfg = HeteroConfig { alpha: 0.5, r: 0.1, ..HeteroConfig::default() };
        let a = synthetic(TorusPoint::new(0.3, 0.3), 0.5);
        let b = synthetic(TorusPoint::new(0.3 + 1e-4, 0.3), 0.5);
        assert_eq!(pigeonhole_pairs(&[a.clone(), b.clone()], &cfg), vec![(0, 1)]);
        let turned = HyperbolicPoint { es: Vec2::new(1.0, 0.0), eu: Vec2::new(0.0, 1.0), ..b };
        assert!(pigeonhole_pairs(&[a.clone(), turned], &cfg).is_empty());
        assert!(pigeonhole_pairs(&[a], &cfg).is_empty());
    }

    #[test]
    fn grid_search_matches_brute_force() {
        let cfg = HeteroConfig { alpha: 0.5, r: 0.5, c1: 10.0, ..HeteroConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // include points straddling the seams
        let pts: Vec<HyperbolicPoint> = (0..600)
            .map(|_| synthetic(TorusPoint::new(rng.gen::<f64>() * 0.1 - 0.05, rng.gen()), 0.5))
            .collect();
        let rad = cfg.pair_radius();
        let mut brute = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i].z.dist(&pts[j].z) < rad {
                    brute.push((i, j));
                }
            }
        }
        let mut got = pigeonhole_pairs(&pts, &cfg);
        got.sort();
        assert!(!brute.is_empty());
        assert_eq!(got, brute);
    }

    #[test]
    fn cat_fixture_crosses_at_right_angles() {
        let pts = fixture();
        let cert = intersect_manifolds(&pts[0], &pts[1], 1e-3).expect("certificate");
        for (c, a, b) in [(cert.su_crossing, &pts[0].ws, &pts[1].wu), (cert.us_crossing, &pts[0].wu, &pts[1].ws)] {
            assert!((c.angle - FRAC_PI_2).abs() < 1e-9, "{}", c.angle);
            assert!(polyline_dist(c.point, a) < 1e-9);
            assert!(polyline_dist(c.point, b) < 1e-9);
        }
        assert!(intersect_manifolds(&pts[0], &pts[0], 1e-3).is_none());
    }

    #[test]
    fn parallel_segments_do_not_cross() {
        let l = |y| vec![TorusPoint::new(0.1, y), TorusPoint::new(0.2, y)];
        assert!(best_crossing(&l(0.1), &l(0.2), 1e-3).is_none());
        assert!(best_crossing(&l(0.1), &l(0.1), 1e-3).is_none());
    }

    #[test]
    fn bucketed_crossings_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let walk = |rng: &mut ChaCha8Rng| {
            let mut p = TorusPoint::new(rng.gen(), rng.gen());
            let mut v = vec![p];
            for _ in 0..300 {
                p = p.translate(Vec2::new(rng.gen_range(-0.03..0.03), rng.gen_range(-0.03..0.03)));
                v.push(p);
            }
            v
        };
        for _ in 0..20 {
            let (a, b) = (walk(&mut rng), walk(&mut rng));
            let mut brute: Option<Crossing> = None;
            for sa in a.windows(2) {
                for sb in b.windows(2) {
                    if let Some(c) = segment_crossing(sa[0], sa[1], sb[0], sb[1]) {
                        if c.angle >= 1e-3 && brute.is_none_or(|x| c.angle > x.angle) {
                            brute = Some(c);
                        }
                    }
                }
            }
            assert_eq!(best_crossing(&a, &b, 1e-3).map(|c| c.angle), brute.map(|c| c.angle));
        }
    }

    #[test]
    fn crossing_across_the_seam() {
        let a = vec![TorusPoint::new(0.98, 0.5), TorusPoint::new(0.02, 0.5)];
        let b = vec![TorusPoint::new(0.0, 0.45), TorusPoint::new(0.0, 0.55)];
        let c = best_crossing(&a, &b, 1e-3).unwrap();
        assert!(c.point.dist(&TorusPoint::new(0.0, 0.5)) < 1e-12);
        assert!((c.angle - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn verdicts() {
        let cfg = HeteroConfig::default();
        let v = verdict(&fixture(), &cfg);
        assert_eq!(v.verdict, Verdict::Positive);
        assert_eq!(v.mechanism, Some(Mechanism::HeteroclinicCertificate));
        assert!(v.is_consistent());

        let mut rev = fixture();
        rev.reverse();
        let w = verdict(&rev, &cfg);
        assert_eq!(serde_json::to_string(&v).unwrap(), serde_json::to_string(&w).unwrap());

        let e = verdict(&[], &cfg);
        assert_eq!(e.verdict, Verdict::Inconclusive);
        assert!(e.is_consistent());
    }

    #[test]
    fn many_points_exceed_the_count() {
        let cfg = HeteroConfig::lambda(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<HyperbolicPoint> =
            (0..17_000).map(|_| synthetic(TorusPoint::new(rng.gen(), rng.gen()), 0.5)).collect();
        assert!(pts.iter().all(|p| qualifies(p, &cfg)));
        let v = verdict(&pts, &cfg);
        assert_eq!(v.mechanism, Some(Mechanism::CountExceeded));
        assert_eq!(v.verdict, Verdict::Positive);
        let few = verdict(&pts[..16_000], &cfg);
        assert_eq!(few.verdict, Verdict::Inconclusive);
    }
}
