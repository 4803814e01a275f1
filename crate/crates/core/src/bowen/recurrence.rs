//! Recurrence sets: points visiting a region often along an orbit of `f^q`.

use rayon::prelude::*;
use serde::Serialize;

use super::mask::RegionMask;
use crate::error::{Error, Result};
use crate::maps::SurfaceMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recurrence {
    #[serde(skip)]
    pub mask: RegionMask,
    pub measure: f64,
    pub source_measure: f64,
    /// `4 l Lip(f^q) / G`, the allowance for testing cell centers only.
    pub grid_error: f64,
    /// `measure(Y) / eta + grid_error`.
    pub markov_bound: f64,
    pub markov_holds: bool,
}

/// Cells whose center visits `y` more than `eta * l` times among
/// `g^j(center)`, `0 <= j < l`, with `g = f^q`.
pub fn recurrent_set(map: &SurfaceMap<f64>, y: &RegionMask, eta: f64, l: usize, q: usize) -> Result<Recurrence> {
    if !(eta > 0.0 && eta < 1.0) || l == 0 || q == 0 {
        return Err(Error::InvalidInput("recurrence needs eta in (0, 1) and l, q >= 1".into()));
    }
    let g = y.resolution;
    let bits: Vec<bool> = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let mut p = y.cell_center(idx);
            let mut visits = 0usize;
            for j in 0..l {
                if j > 0 {
                    p = map.iterate(p, q as i64);
                }
                if y.contains(p) {
                    visits += 1;
                }
            }
            visits as f64 > eta * l as f64
        })
        .collect();
    let mask = RegionMask { resolution: g, bits };
    let lip = map.norm_bounds().a.powi(q as i32);
    let grid_error = 4.0 * l as f64 * lip / g as f64;
    let measure = mask.measure();
    let source_measure = y.measure();
    let markov_bound = source_measure / eta + grid_error;
    Ok(Recurrence { measure, source_measure, grid_error, markov_bound, markov_holds: measure <= markov_bound, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_sources() {
        let m = SurfaceMap::standard(3.0);
        let full = recurrent_set(&m, &RegionMask::full(64), 0.5, 4, 2).unwrap();
        assert_eq!(full.mask, RegionMask::full(64));
        let empty = recurrent_set(&m, &RegionMask::empty(64), 0.5, 4, 2).unwrap();
        assert!(empty.mask.is_empty());
    }

    #[test]
    fn markov_bound_on_a_strip() {
        let m = SurfaceMap::cat();
        let y = RegionMask::from_fn(256, |p| p.x < 0.1);
        let r = recurrent_set(&m, &y, 0.3, 5, 1).unwrap();
        assert!(r.markov_holds, "{} > {}", r.measure, r.markov_bound);
        // mixing: visit frequency ~ 0.1 for most points, so few exceed 0.3
        assert!(r.measure < 0.2);
    }

    #[test]
    fn translation_recurrence_follows_rotation() {
        let m = SurfaceMap::translation(0.5, 0.0);
        let y = RegionMask::from_fn(64, |p| p.x < 0.5);
        // every point alternates between the halves: frequency exactly 1/2
        let r = recurrent_set(&m, &y, 0.4, 4, 1).unwrap();
        assert_eq!(r.mask, RegionMask::full(64));
        let r = recurrent_set(&m, &y, 0.5, 4, 1).unwrap();
        assert!(r.mask.is_empty());
    }
}
