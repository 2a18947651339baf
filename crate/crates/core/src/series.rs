//! Row-major matrices of per-iteration vectors and point clouds.
//!
//! A [`SeriesMatrix`] holds K rows of d-dimensional observations: gradient
//! noise coordinates (one row per iteration), per-example loss vectors, or
//! generic trajectory samples. A [`PointCloud`] is the same storage viewed as
//! an unordered set of points in `R^d`.

use crate::error::{Error, Result};

/// What the rows of a [`SeriesMatrix`] represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Gradient-noise coordinates, one row per SGD iteration.
    Sgn,
    /// Per-example loss vectors, one row per logging step.
    LossVectors,
    Generic,
}

/// K×d matrix of per-iteration vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    kind: SeriesKind,
}

impl SeriesMatrix {
    /// Requires K ≥ 2, d ≥ 1 and finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, kind: SeriesKind) -> Result<Self> {
        if rows < 2 {
            return Err(Error::domain(format!("series needs at least 2 rows, got {rows}")));
        }
        if cols < 1 {
            return Err(Error::domain("series needs at least 1 column"));
        }
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("series entries must be finite"));
        }
        Ok(Self { rows, cols, data, kind })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies column j out of the row-major storage.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn with_kind(mut self, kind: SeriesKind) -> Self {
        self.kind = kind;
        self
    }

    /// Reinterprets the rows as an unordered point cloud.
    pub fn to_cloud(&self) -> PointCloud {
        PointCloud {
            n: self.rows,
            dim: self.cols,
            data: self.data.clone(),
        }
    }
}

/// Unordered set of n points in `R^d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    /// Requires n ≥ 1, d ≥ 1 and finite coordinates.
    pub fn new(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("point cloud needs at least 1 point"));
        }
        if dim < 1 {
            return Err(Error::domain("point cloud dimension must be at least 1"));
        }
        if data.len() != n * dim {
            return Err(Error::domain(format!(
                "data length {} does not match {n}x{dim}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("point coordinates must be finite"));
        }
        Ok(Self { n, dim, data })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("point cloud needs at least 1 point"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::domain("all points must share one dimension"));
        }
        let data = points.iter().flatten().copied().collect();
        Self::new(points.len(), dim, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Coordinate-wise minimum over all points.
    pub fn min_corner(&self) -> Vec<f64> {
        let mut min = self.point(0).to_vec();
        for p in self.iter().skip(1) {
            for (m, &x) in min.iter_mut().zip(p) {
                if x < *m {
                    *m = x;
                }
            }
        }
        min
    }

    /// Largest coordinate-wise extent (max - min over one axis).
    pub fn max_extent(&self) -> f64 {
        let mut min = self.point(0).to_vec();
        let mut max = self.point(0).to_vec();
        for p in self.iter().skip(1) {
            for j in 0..self.dim {
                if p[j] < min[j] {
                    min[j] = p[j];
                }
                if p[j] > max[j] {
                    max[j] = p[j];
                }
            }
        }
        min.iter()
            .zip(&max)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Squared Euclidean distance.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
