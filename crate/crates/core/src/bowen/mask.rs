//! Boolean cell grids standing in for measurable subsets of the torus.

use serde::{Deserialize, Serialize};

use crate::geometry::{TorusPoint, Vec2};

/// `G x G` grid of cells, row-major with `index = j * G + i` for the cell
/// `[i/G, (i+1)/G) x [j/G, (j+1)/G)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMask {
    pub resolution: usize,
    pub bits: Vec<bool>,
}

impl RegionMask {
    pub fn empty(g: usize) -> Self {
        Self { resolution: g, bits: vec![false; g * g] }
    }

    pub fn full(g: usize) -> Self {
        Self { resolution: g, bits: vec![true; g * g] }
    }

    pub fn from_fn(g: usize, mut f: impl FnMut(TorusPoint<f64>) -> bool) -> Self {
        let mut m = Self::empty(g);
        for idx in 0..g * g {
            m.bits[idx] = f(m.cell_center(idx));
        }
        m
    }

    pub fn cell_measure(&self) -> f64 {
        1.0 / (self.resolution * self.resolution) as f64
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.cell_measure()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn cell_center(&self, idx: usize) -> TorusPoint<f64> {
        let g = self.resolution;
        let (i, j) = (idx % g, idx / g);
        TorusPoint::new((i as f64 + 0.5) / g as f64, (j as f64 + 0.5) / g as f64)
    }

    pub fn cell_of(&self, p: TorusPoint<f64>) -> usize {
        let g = self.resolution;
        let i = ((p.x * g as f64) as usize).min(g - 1);
        let j = ((p.y * g as f64) as usize).min(g - 1);
        j * g + i
    }

    pub fn contains(&self, p: TorusPoint<f64>) -> bool {
        self.bits[self.cell_of(p)]
    }

    pub fn set(&mut self, p: TorusPoint<f64>) {
        let c = self.cell_of(p);
        self.bits[c] = true;
    }

    pub fn complement(&self) -> Self {
        Self { resolution: self.resolution, bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn union(&self, o: &Self) -> Self {
        assert_eq!(self.resolution, o.resolution);
        Self { resolution: self.resolution, bits: self.bits.iter().zip(&o.bits).map(|(a, b)| *a || *b).collect() }
    }

    pub fn intersection(&self, o: &Self) -> Self {
        assert_eq!(self.resolution, o.resolution);
        Self { resolution: self.resolution, bits: self.bits.iter().zip(&o.bits).map(|(a, b)| *a && *b).collect() }
    }

    /// Mark every cell whose center lies within `radius` of the segment `a -> a + d`.
    ///
    /// `a` is a point of the torus and `d` a lifted displacement.
    pub fn mark_segment(&mut self, a: TorusPoint<f64>, d: Vec2<f64>, radius: f64) {
        let g = self.resolution as f64;
        if radius >= std::f64::consts::FRAC_1_SQRT_2 {
            self.bits.iter_mut().for_each(|b| *b = true);
            return;
        }
        let (x0, y0) = (a.x, a.y);
        let (x1, y1) = (a.x + d.x, a.y + d.y);
        let lo_i = ((x0.min(x1) - radius) * g - 0.5).floor() as i64;
        let hi_i = ((x0.max(x1) + radius) * g - 0.5).ceil() as i64;
        let lo_j = ((y0.min(y1) - radius) * g - 0.5).floor() as i64;
        let hi_j = ((y0.max(y1) + radius) * g - 0.5).ceil() as i64;
        let gi = self.resolution as i64;
        let start = Vec2::new(x0, y0);
        let end = Vec2::new(x1, y1);
        for j in lo_j..=hi_j {
            for i in lo_i..=hi_i {
                let c = Vec2::new((i as f64 + 0.5) / g, (j as f64 + 0.5) / g);
                if crate::geometry::point_segment_dist(c, start, end) <= radius {
                    let (wi, wj) = (i.rem_euclid(gi) as usize, j.rem_euclid(gi) as usize);
                    self.bits[wj * self.resolution + wi] = true;
                }
            }
        }
    }

    /// Cells within `radius` of a polyline of torus points (consecutive points
    /// joined by their shortest lifted displacement).
    pub fn mark_polyline(&mut self, pts: &[TorusPoint<f64>], radius: f64) {
        match pts.len() {
            0 => {}
            1 => self.mark_segment(pts[0], Vec2::default(), radius),
            _ => {
                for w in pts.windows(2) {
                    self.mark_segment(w[0], w[0].displacement_to(&w[1]), radius);
                }
            }
        }
    }

    /// Cells whose centers lie within `radius` of some marked cell center.
    pub fn dilate(&self, radius: f64) -> Self {
        let mut out = Self::empty(self.resolution);
        for idx in 0..self.bits.len() {
            if self.bits[idx] {
                out.mark_segment(self.cell_center(idx), Vec2::default(), radius);
            }
        }
        out
    }
}
