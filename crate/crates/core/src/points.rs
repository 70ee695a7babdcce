use alloc::vec::Vec;

use crate::{Error, Result};

/// An ordered set of points in ℝ^d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("point dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: coords.len() % dim });
        }
        Ok(PointSet { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        PointSet { dim, coords: Vec::new() }
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Ok(PointSet { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: p.len() });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// Points at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet { dim: self.dim, coords }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    /// Smallest pairwise Euclidean distance, `None` with fewer than two points.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = distance(self.point(i), self.point(j));
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// Cell-centred `g × g` grid over `[x0, x1] × [y0, y1]`, rows along y, x varying fastest.
    pub fn grid_2d(bounds: [f64; 4], g: usize) -> PointSet {
        let [x0, x1, y0, y1] = bounds;
        let mut coords = Vec::with_capacity(2 * g * g);
        for row in 0..g {
            let y = y0 + (row as f64 + 0.5) * (y1 - y0) / g as f64;
            for col in 0..g {
                let x = x0 + (col as f64 + 0.5) * (x1 - x0) / g as f64;
                coords.push(x);
                coords.push(y);
            }
        }
        PointSet { dim: 2, coords }
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_of_one_is_centre() {
        let g = PointSet::grid_2d([0.0, 1.0, 0.0, 2.0], 1);
        assert_eq!(g.point(0), &[0.5, 1.0]);
    }

    #[test]
    fn grid_is_row_major_in_y() {
        let g = PointSet::grid_2d([0.0, 1.0, 0.0, 1.0], 2);
        assert_eq!(g.len(), 4);
        assert_eq!(g.point(1), &[0.75, 0.25]);
        assert_eq!(g.point(2), &[0.25, 0.75]);
    }

    #[test]
    fn ragged_coordinates_rejected() {
        assert!(PointSet::new(2, alloc::vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointSet::from_points(2, &[[1.0, 2.0, 3.0]]).is_err());
    }
}
