//! Bowen metric, covering numbers, recurrence and sparseness.

mod cover;
mod mask;
mod recurrence;
mod sparse;
mod system;

pub use cover::{complexity_slope, cover_count, cover_series, CoverConfig, CoverEstimate};
pub use mask::RegionMask;
pub use recurrence::{recurrent_set, Recurrence};
pub use sparse::{sparse_check, SparseReport};
pub use system::{cell_index, cells_for_radius, periodic_window, stratified_cube, BowenSystem, TorusSystem};

use crate::geometry::TorusPoint;
use crate::maps::SurfaceMap;

/// `max_{0 <= i < n} d(f^i x, f^i y)`.
pub fn bowen_distance(map: &SurfaceMap<f64>, x: TorusPoint<f64>, y: TorusPoint<f64>, n: usize) -> f64 {
    let (mut a, mut b) = (x, y);
    let mut d: f64 = 0.0;
    for i in 0..n {
        if i > 0 {
            a = map.apply(a);
            b = map.apply(b);
        }
        d = d.max(a.dist(&b));
    }
    d
}
