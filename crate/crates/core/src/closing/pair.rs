//! Search for an orbit segment that nearly closes up with matching frames.

use serde::{Deserialize, Serialize};

use crate::cocycle::CocycleTrace;
use crate::pliss::good_level;

/// Acceptance thresholds for a return pair `(i1, i2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnThresholds {
    pub min_gap: usize,
    /// Upper cap on `i2 - i1`. Single-shooting Newton on `f^p` loses about
    /// `log10 |eig_u|` digits per step, so toy runs keep periods short.
    pub max_gap: usize,
    /// Window-average level for the forward and backward sums of `lam_e`.
    pub level: f64,
    /// Bound on `log |cot angle(v^s_i, v^u_i)|` at both ends.
    pub log_cot_max: f64,
    pub position: f64,
    pub direction: f64,
}

impl ReturnThresholds {
    /// Thresholds from the closing-lemma constants. The closeness scale
    /// `D1^(-C1 Delta / 200)` is far below double precision for realistic inputs.
    pub fn paper(d1: f64, big_delta: f64, c1: f64, a: f64, theta0: f64, q: usize) -> Self {
        let ln_d1 = d1.ln();
        let min_gap = ((q as f64).ln() - big_delta * c1 * ln_d1).exp().ceil().max(1.0) as usize;
        let close = (-c1 * big_delta * ln_d1 / 200.0).exp();
        Self {
            min_gap,
            max_gap: q,
            level: good_level(a, theta0),
            log_cot_max: 3.0 * big_delta * a,
            position: close,
            direction: close,
        }
    }

    /// Exploration defaults.
    pub fn toy(q: usize) -> Self {
        Self { min_gap: 1, max_gap: q.min(12), level: 0.1, log_cot_max: 100f64.ln(), position: 0.05, direction: 0.1 }
    }
}

/// How many candidate pairs failed, by first failing condition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTally {
    pub separation: usize,
    pub forward: usize,
    pub backward: usize,
    pub angle: usize,
    pub position: usize,
    pub direction: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSearch {
    pub pair: Option<(usize, usize)>,
    pub tally: PairTally,
}

/// `fwd[i]`: largest `k` such that every window `lam[i..i+j]`, `j <= k`, sums above `j * level`.
fn forward_reach(lam: &[f64], level: f64) -> Vec<usize> {
    (0..lam.len())
        .map(|i| {
            let mut s = 0.0;
            lam[i..].iter().take_while(|&&v| {
                s += v - level;
                s > 0.0
            })
            .count()
        })
        .collect()
}

/// `bwd[n]` for `n = 0..=len`: the same for windows ending at `n`.
fn backward_reach(lam: &[f64], level: f64) -> Vec<usize> {
    (0..=lam.len())
        .map(|n| {
            let mut s = 0.0;
            lam[..n].iter().rev().take_while(|&&v| {
                s += v - level;
                s > 0.0
            })
            .count()
        })
        .collect()
}

fn log_cot(angle: f64) -> f64 {
    (angle.cos() / angle.sin()).abs().ln()
}

/// Scans pairs of good indices, longest admissible gap first and then by
/// `i1`, and returns the first pair meeting every condition.
///
/// Tameness compares the two frame vectors at the same index; the closeness
/// test compares positions and both frame directions at `i1` and `i2`.
pub fn find_return_pair(trace: &CocycleTrace<f64>, good: &[usize], th: &ReturnThresholds) -> ReturnSearch {
    let q = trace.len();
    let mut tally = PairTally::default();
    let mut is_good = vec![false; q + 1];
    for &i in good {
        if i <= q {
            is_good[i] = true;
        }
    }
    let count = good.iter().filter(|&&i| i <= q).count();
    let fwd = forward_reach(&trace.lam_e, th.level);
    let bwd = backward_reach(&trace.lam_e, th.level);
    let tame: Vec<bool> =
        (0..=q).map(|i| log_cot(trace.vs[i].line_angle(trace.vu[i])) <= th.log_cot_max).collect();

    let hi = th.max_gap.min(q);
    let lo = th.min_gap.max(1);
    let mut examined = 0;
    let mut found = None;
    'outer: for gap in (lo..=hi).rev() {
        for i1 in 0..=q - gap {
            let i2 = i1 + gap;
            if !(is_good[i1] && is_good[i2]) {
                continue;
            }
            examined += 1;
            if gap > fwd[i1] {
                tally.forward += 1;
            } else if gap > bwd[i2] {
                tally.backward += 1;
            } else if !(tame[i1] && tame[i2]) {
                tally.angle += 1;
            } else if trace.base[i1].dist(&trace.base[i2]) >= th.position {
                tally.position += 1;
            } else if trace.vs[i1].projective_dist(trace.vs[i2]) >= th.direction
                || trace.vu[i1].projective_dist(trace.vu[i2]) >= th.direction
            {
                tally.direction += 1;
            } else {
                found = Some((i1, i2));
                break 'outer;
            }
        }
    }
    if found.is_none() {
        tally.separation = (count * count.saturating_sub(1) / 2).saturating_sub(examined);
    }
    ReturnSearch { pair: found, tally }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::cocycle_trace;
    use crate::geometry::TorusPoint;
    use crate::maps::SurfaceMap;
    use crate::pliss::good_indices;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact(q: usize) -> ReturnThresholds {
        ReturnThresholds { min_gap: 1, max_gap: q, level: 0.1, log_cot_max: 100f64.ln(), position: 1e-9, direction: 1e-9 }
    }

    #[test]
    fn periodic_cat_orbit_returns_at_multiples_of_the_period() {
        // A^5 - I has determinant -121, so period-5 points have denominator 11
        let cat = SurfaceMap::<f64>::cat();
        let x = TorusPoint::new(1.0 / 11.0, 3.0 / 11.0);
        assert!(cat.iterate(x, 5).dist(&x) < 1e-12);
        assert!(cat.apply(x).dist(&x) > 1e-3);
        let t = cocycle_trace(&cat, x, 25).unwrap();
        let good = good_indices(&t.lam_e, 0.1);
        let s = find_return_pair(&t, &good, &exact(25));
        let (i1, i2) = s.pair.expect("pair");
        assert!([5, 10, 15, 20].contains(&(i2 - i1)), "{i1} {i2}");
    }

    #[test]
    fn empty_good_set_gives_none() {
        let t = cocycle_trace(&SurfaceMap::<f64>::cat(), TorusPoint::new(0.3, 0.1), 10).unwrap();
        let s = find_return_pair(&t, &[], &ReturnThresholds::toy(10));
        assert_eq!(s.pair, None);
        assert_eq!(s.tally, PairTally::default());
    }

    #[test]
    fn window_reaches_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let lam: Vec<f64> = (0..40).map(|_| rng.gen_range(-8..=24) as f64 / 16.0).collect();
            let level = 0.25;
            let f = forward_reach(&lam, level);
            let b = backward_reach(&lam, level);
            for i in 0..lam.len() {
                let brute = (1..=lam.len() - i)
                    .take_while(|&k| lam[i..i + k].iter().map(|v| v - level).sum::<f64>() > 0.0)
                    .count();
                assert_eq!(f[i], brute);
            }
            for n in 0..=lam.len() {
                let brute =
                    (1..=n).take_while(|&k| lam[n - k..n].iter().map(|v| v - level).sum::<f64>() > 0.0).count();
                assert_eq!(b[n], brute);
            }
        }
    }

    #[test]
    fn standard_map_relaxed_search_finds_pairs() {
        let m = SurfaceMap::standard(6.0);
        let th = ReturnThresholds { max_gap: 400, ..ReturnThresholds::toy(400) };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut hits = 0;
        for _ in 0..100 {
            let x = TorusPoint::new(rng.gen(), rng.gen());
            let t = cocycle_trace(&m, x, 400).unwrap();
            let good = good_indices(&t.lam_e, th.level);
            if let Some((i1, i2)) = find_return_pair(&t, &good, &th).pair {
                assert!(t.base[i1].dist(&t.base[i2]) < th.position);
                hits += 1;
            }
        }
        assert!(hits >= 50, "{hits}");
    }

    #[test]
    fn paper_thresholds_are_unreachable() {
        let th = ReturnThresholds::paper(1e6, 40.0, 10.0, 2.0, 0.99, 400);
        assert!(th.position < 1e-11);
        assert_eq!(th.min_gap, 1);
        assert!((th.log_cot_max - 240.0).abs() < 1e-12);
    }
}
