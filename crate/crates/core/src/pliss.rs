//! Selection of indices whose forward window sums all stay above a level.
//!
//! Everything here only needs ordered field arithmetic, so exact rationals
//! work as well as floats. Indices are 0-based.

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::cocycle::CocycleTrace;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissInput<T> {
    pub a: Vec<T>,
    #[serde(rename = "N")]
    pub n_cap: T,
    pub theta0: T,
    pub theta1: T,
    pub theta2: T,
    pub eta: T,
    pub l: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
}

impl Hypotheses {
    pub fn all(&self) -> bool {
        self.h1 && self.h2 && self.h3
    }
}

fn count<T: FromPrimitive>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

pub fn check_hypotheses<T>(inp: &PlissInput<T>) -> Hypotheses
where
    T: Num + PartialOrd + Copy + FromPrimitive,
{
    let n = inp.a.len();
    let cap = inp.n_cap * inp.l;
    let h1 = inp.a.iter().all(|&x| x <= cap);
    let sum = inp.a.iter().fold(T::zero(), |s, &x| s + x);
    let h2 = sum > count::<T>(n) * inp.theta1 * inp.l;
    let hi = inp.theta0 * inp.l;
    let exceed = inp.a.iter().filter(|&&x| x > hi).count();
    let h3 = count::<T>(exceed) < inp.eta * count::<T>(n);
    Hypotheses { h1, h2, h3 }
}

/// Indices `i` with `sum_{j=i}^{i+k-1} (a_j - level) > 0` for every window
/// that fits in the sequence.
///
/// Suffix scan: the smallest window sum starting at `i` is
/// `m_i = b_i + min(0, m_{i+1})`.
pub fn forward_good<T>(a: &[T], level: T) -> Vec<bool>
where
    T: Num + PartialOrd + Copy,
{
    let mut good = vec![false; a.len()];
    let mut m = T::zero();
    for i in (0..a.len()).rev() {
        let b = a[i] - level;
        m = if i + 1 == a.len() || m > T::zero() { b } else { b + m };
        good[i] = m > T::zero();
    }
    good
}

/// `ok[n]` for `n = 0..=len`: every window `a[n-k..n]`, `1 <= k <= n`, sums above `level`.
/// `ok[0]` is vacuously true.
fn backward_good<T>(a: &[T], level: T) -> Vec<bool>
where
    T: Num + PartialOrd + Copy,
{
    let mut ok = vec![true; a.len() + 1];
    let mut m = T::zero();
    for n in 1..=a.len() {
        let b = a[n - 1] - level;
        m = if n == 1 || m > T::zero() { b } else { b + m };
        ok[n] = m > T::zero();
    }
    ok
}

/// Indices selected by the window-sum condition at level `theta2 * l`.
pub fn pliss_indices<T>(inp: &PlissInput<T>) -> Vec<usize>
where
    T: Num + PartialOrd + Copy,
{
    let level = inp.theta2 * inp.l;
    forward_good(&inp.a, level)
        .into_iter()
        .enumerate()
        .filter_map(|(i, g)| g.then_some(i))
        .collect()
}

/// Guaranteed count `(theta1 - theta2) / (1 - theta2) * n`.
pub fn pliss_bound(n: usize, theta1: f64, theta2: f64) -> f64 {
    (theta1 - theta2) / (1.0 - theta2) * n as f64
}

/// The level `(1 - 1/1000) a / theta0` used for orbit points.
pub fn good_level<T: Real>(a: T, theta0: T) -> T {
    (T::one() - T::lit(1e-3)) * a / theta0
}

/// Indices `n` in `[1, q-1]` at which all forward windows `lam_e[n..n+k]` and all
/// backward windows `lam_e[n-k..n]` average above `level`.
pub fn good_indices<T>(lam_e: &[T], level: T) -> Vec<usize>
where
    T: Num + PartialOrd + Copy,
{
    let q = lam_e.len();
    if q < 2 {
        return Vec::new();
    }
    let fwd = forward_good(lam_e, level);
    let bwd = backward_good(lam_e, level);
    (1..q).filter(|&n| fwd[n] && bwd[n]).collect()
}

pub fn good_orbit_points<T: Real>(trace: &CocycleTrace<T>, a: T, theta0: T) -> Vec<usize> {
    good_indices(&trace.lam_e, good_level(a, theta0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::cocycle_trace;
    use crate::geometry::TorusPoint;
    use crate::maps::SurfaceMap;
    use num_rational::Ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_pliss<T: Num + PartialOrd + Copy>(a: &[T], level: T) -> Vec<usize> {
        let n = a.len();
        (0..n)
            .filter(|&i| {
                let mut s = T::zero();
                (i..n).all(|j| {
                    s = s + (a[j] - level);
                    s > T::zero()
                })
            })
            .collect()
    }

    fn brute_good(lam: &[f64], level: f64) -> Vec<usize> {
        let q = lam.len();
        (1..q)
            .filter(|&n| {
                let fwd = (1..=q - n).all(|k| lam[n..n + k].iter().sum::<f64>() / k as f64 > level);
                let bwd = (1..=n).all(|k| lam[n - k..n].iter().sum::<f64>() / k as f64 > level);
                fwd && bwd
            })
            .collect()
    }

    fn input(a: Vec<f64>, theta: (f64, f64, f64), eta: f64) -> PlissInput<f64> {
        PlissInput { a, n_cap: 1.0, theta0: theta.0, theta1: theta.1, theta2: theta.2, eta, l: 1.0 }
    }

    #[test]
    fn hypothesis_examples() {
        let inp = input(vec![0.6; 10], (0.75, 0.5, 0.25), 0.01);
        assert_eq!(check_hypotheses(&inp), Hypotheses { h1: true, h2: true, h3: true });
        let all_hi = input(vec![1.0; 10], (0.75, 0.5, 0.25), 0.99);
        assert!(!check_hypotheses(&all_hi).h3);
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        assert!(!check_hypotheses(&input(alt, (0.75, 0.6, 0.25), 0.01)).h2);
    }

    #[test]
    fn index_examples() {
        let inp = input(vec![0.6; 10], (0.75, 0.5, 0.25), 0.01);
        assert_eq!(pliss_indices(&inp), (0..10).collect::<Vec<_>>());
        let inp = input(vec![-1.0, 0.6, 0.6], (0.75, 0.5, 0.25), 0.01);
        // 1-based {2, 3}
        assert_eq!(pliss_indices(&inp), vec![1, 2]);
        assert!((pliss_bound(100, 0.5, 0.25) - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(pliss_bound(100, 0.3, 0.3), 0.0);
        assert!(pliss_indices(&input(vec![0.6; 10], (0.75, 0.5, 0.25), 0.01)).len() as f64 >= pliss_bound(10, 0.5, 0.25));
    }

    #[test]
    fn ties_are_excluded() {
        let inp = input(vec![0.25, 0.5], (0.75, 0.5, 0.25), 0.01);
        assert_eq!(pliss_indices(&inp), vec![1]);
    }

    #[test]
    fn exact_rationals() {
        let r = |n: i64, d: i64| Ratio::new(n, d);
        let inp = PlissInput {
            a: vec![r(1, 3), r(-1, 7), r(2, 3), r(1, 4), r(1, 4)],
            n_cap: r(1, 1),
            theta0: r(3, 4),
            theta1: r(1, 2),
            theta2: r(1, 4),
            eta: r(1, 10),
            l: r(1, 1),
        };
        assert_eq!(pliss_indices(&inp), brute_pliss(&inp.a, r(1, 4)));
        assert_eq!(pliss_indices(&inp), vec![2]);
        assert!(check_hypotheses(&inp).h1);
    }

    #[test]
    fn matches_brute_force_on_dyadic_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=200);
            // multiples of 1/64 keep every partial sum exact
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-64..=96) as f64 / 64.0).collect();
            let level = rng.gen_range(0..=32) as f64 / 64.0;
            let inp = PlissInput { a: a.clone(), n_cap: 2.0, theta0: 0.75, theta1: 0.5, theta2: level, eta: 0.1, l: 1.0 };
            assert_eq!(pliss_indices(&inp), brute_pliss(&a, level));
        }
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let n = rng.gen_range(1..=60);
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-16..=32) as f64 / 16.0).collect();
            let base = PlissInput { a: a.clone(), n_cap: 2.0, theta0: 0.75, theta1: 0.5, theta2: 0.25, eta: 0.1, l: 1.0 };
            let c = 4.0; // power of two: exact scaling
            let scaled = PlissInput { a: a.iter().map(|x| x * c).collect(), l: c, ..base.clone() };
            assert_eq!(pliss_indices(&base), pliss_indices(&scaled));
        }
    }

    #[test]
    fn guarantee_holds_under_hypotheses() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (t0, t1, t2) = (0.9, 0.6, 0.3);
        let n_cap = 1.5;
        let eta_max = 0.5 * ((1.0 - t0) / (n_cap - t0)) * ((t1 - t2) / (n_cap - t2));
        let mut accepted = 0;
        while accepted < 1000 {
            let n = rng.gen_range(10..=200);
            let a: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(0.01) { n_cap } else { rng.gen_range(0.35..0.9) })
                .collect();
            let inp = PlissInput { a, n_cap, theta0: t0, theta1: t1, theta2: t2, eta: eta_max * 0.999, l: 1.0 };
            if !check_hypotheses(&inp).all() {
                continue;
            }
            accepted += 1;
            assert!(pliss_indices(&inp).len() as f64 >= pliss_bound(n, t1, t2));
        }
    }

    #[test]
    fn good_points_of_cat_trace() {
        let t = cocycle_trace(&SurfaceMap::<f64>::cat(), TorusPoint::new(0.2, 0.3), 40).unwrap();
        assert_eq!(good_orbit_points(&t, 0.9, 0.99), (1..40).collect::<Vec<_>>());
        let max = t.lam_e.iter().cloned().fold(f64::MIN, f64::max);
        assert!(good_orbit_points(&t, 0.99 * max / 0.999 * 1.0001, 0.99).is_empty());
    }

    #[test]
    fn good_points_match_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..300 {
            let lam: Vec<f64> = (0..100).map(|_| rng.gen_range(-8..=24) as f64 / 16.0).collect();
            let level = rng.gen_range(0..=8) as f64 / 16.0;
            assert_eq!(good_indices(&lam, level), brute_good(&lam, level));
        }
        let m = SurfaceMap::standard(6.0);
        let t = cocycle_trace(&m, TorusPoint::new(0.37, 0.11), 100).unwrap();
        let level = good_level(1.0, 0.99);
        assert_eq!(good_indices(&t.lam_e, level), brute_good(&t.lam_e, level));
    }
}
