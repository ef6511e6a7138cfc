//! Dense row-major storage for small-dimensional point clouds.

use crate::error::{invalid, Error, Result};

/// A set of points in ℝᵈ stored row by row in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("point dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite coordinate {bad}")));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| invalid("point set must contain at least one point"))?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Returns the subset of rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        PointSet {
            dim: self.dim,
            data,
        }
    }

    /// Every row shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> PointSet {
        assert_eq!(offset.len(), self.dim);
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.dim) {
            for (c, o) in row.iter_mut().zip(offset) {
                *c += o;
            }
        }
        PointSet {
            dim: self.dim,
            data,
        }
    }

    /// Largest Euclidean distance between any two rows, computed as the
    /// diagonal of the bounding box (an upper bound within a factor √d).
    pub fn bbox_diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for row in self.rows() {
            for j in 0..self.dim {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        (lo, hi)
    }

    /// Indices of the first occurrence of each distinct row.
    pub fn distinct_indices(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.row(a)
                .iter()
                .zip(self.row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(a.cmp(&b))
        });
        let mut keep = Vec::with_capacity(self.len());
        for (pos, &i) in order.iter().enumerate() {
            if pos == 0 || self.row(order[pos - 1]) != self.row(i) {
                keep.push(i);
            }
        }
        keep.sort_unstable();
        keep
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
