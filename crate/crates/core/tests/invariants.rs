use horseshoe::bowen::{bowen_distance, cover_series, CoverConfig, RegionMask, TorusSystem};
use horseshoe::closing::{harvest, HarvestConfig};
use horseshoe::cocycle::{cocycle_trace, log_norm_growth};
use horseshoe::counterexample::{det4, skew_jacobian, SkewPoint, SuspensionPoint};
use horseshoe::hetero::{grow, verdict, HeteroConfig, Verdict};
use horseshoe::pliss::{good_indices, good_orbit_points};
use horseshoe::schedule::LogTower;
use horseshoe::{Map, Point};
use proptest::prelude::*;

fn maps() -> Vec<Map> {
    vec![
        Map::cat(),
        Map::standard(0.8),
        Map::standard(6.0),
        Map::translation(0.3, 0.7),
        Map::composite(vec![Map::cat(), Map::standard(2.0)]),
    ]
}

proptest! {
    #[test]
    fn inverse_undoes_every_map(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let p = Point::new(x, y);
        for m in maps() {
            prop_assert!(m.apply_inverse(m.apply(p)).dist(&p) < 1e-9);
            prop_assert!((m.derivative(p).det() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn log_tower_order_follows_the_reals(a in 1e-3..1e12f64, b in 1e-3..1e12f64) {
        let (la, lb) = (LogTower::from_f64(a), LogTower::from_f64(b));
        prop_assert_eq!(la.cmp(&lb), a.total_cmp(&b));
        let s = la.add(&lb).to_f64().unwrap();
        prop_assert!((s - (a + b)).abs() <= 1e-12 * (a + b));
    }

    #[test]
    fn mask_measures_are_additive(cx in 0.0..1.0f64, cy in 0.0..1.0f64, r in 0.05..0.45f64) {
        let c = Point::new(cx, cy);
        let a = RegionMask::from_fn(32, |p| p.dist(&c) < r);
        let b = RegionMask::from_fn(32, |p| p.x < 0.5);
        let sum = a.union(&b).measure() + a.intersection(&b).measure();
        prop_assert!((sum - a.measure() - b.measure()).abs() < 1e-12);
        prop_assert!((a.measure() + a.complement().measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skew_map_preserves_volume(t in 0.0..1.0f64, x in 0.0..1.0f64, y in 0.0..1.0f64, h in 0.0..1.0f64) {
        let p = SkewPoint { theta: t, fiber: SuspensionPoint { base: Point::new(x, y), height: h } };
        prop_assert!((det4(&skew_jacobian(0.00618, p)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bowen_distance_grows_with_time(x in 0.0..1.0f64, y in 0.0..1.0f64, dx in -0.01..0.01f64) {
        let cat = Map::cat();
        let p = Point::new(x, y);
        let q = Point::new(x + dx, y);
        let d: Vec<f64> = (1..8).map(|n| bowen_distance(&cat, p, q, n)).collect();
        prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn cover_counts_never_decrease_in_time() {
    let cfg = CoverConfig { samples: 3000, separated: false, ..CoverConfig::default() };
    for m in [Map::cat(), Map::standard(6.0)] {
        let rows = cover_series(&TorusSystem { map: &m }, &[1, 2, 3, 4, 5], &cfg).unwrap();
        assert!(rows.windows(2).all(|w| w[0].upper <= w[1].upper));
    }
}

#[test]
fn good_orbit_points_match_the_level_scan() {
    let m = Map::standard(6.0);
    let t = cocycle_trace(&m, Point::new(0.21, 0.63), 300).unwrap();
    let a = m.norm_bounds().a.ln();
    let level = (1.0 - 1e-3) * a / 0.99;
    assert_eq!(good_orbit_points(&t, a, 0.99), good_indices(&t.lam_e, level));
}

#[test]
fn exponents_of_the_cat_map() {
    let growth = log_norm_growth(&Map::cat(), Point::new(0.1, 0.2), 30);
    let rate = growth[30] / 30.0;
    assert!((rate - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 0.05);
}

#[test]
fn harvest_to_heteroclinic_verdict_on_the_standard_map() {
    let m = Map::standard(6.0);
    let h = harvest(&m, &HarvestConfig::toy(20, 400, 11));
    assert!(h.points.len() >= 2);
    for p in &h.points {
        assert!(m.iterate(p.z, p.period as i64).dist(&p.z) < 1e-8);
        assert!(p.violations().is_empty());
    }
    let grown: Vec<_> = h.points.iter().map(|p| grow(&m, p, 1.5).unwrap()).collect();
    let v = verdict(&grown, &HeteroConfig::default());
    assert!(v.is_consistent());
    assert_eq!(v.verdict, Verdict::Positive);
    let c = v.certificate.unwrap();
    assert!(c.su_crossing.angle > 1e-3 && c.us_crossing.angle > 1e-3);
}
