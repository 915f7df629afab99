//! Dense helpers for stacked per-agent iterates.

use std::ops::{Index, IndexMut};

/// An `N × K` matrix stored row-major: row `i` is agent `i`'s local vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl AgentMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from a row-major buffer. Returns `None` on a length mismatch.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    /// Builds from per-agent rows. All rows must share a length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Option<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return None;
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Some(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Every agent holds a copy of `v`.
    pub fn broadcast(rows: usize, v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(rows * v.len());
        for _ in 0..rows {
            data.extend_from_slice(v);
        }
        Self {
            rows,
            cols: v.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero, and a zero-width matrix has no data anyway
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    /// Column means, i.e. the network average `x̄`.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for r in self.row_iter() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let n = self.rows as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `‖X − 1 x̄ᵀ‖²_F`.
    pub fn consensus_sq(&self) -> f64 {
        let m = self.mean_row();
        self.row_iter()
            .map(|r| r.iter().zip(&m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self ← self + s · other`.
    pub fn axpy(&mut self, s: f64, other: &AgentMatrix) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `s · self + t · other` as a new matrix.
    pub fn lin_comb(&self, s: f64, other: &AgentMatrix, t: f64) -> AgentMatrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| s * a + t * b).collect();
        AgentMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &AgentMatrix) -> AgentMatrix {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scaled(&self, s: f64) -> AgentMatrix {
        AgentMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| s * v).collect(),
        }
    }

    /// Left-multiplies by a sparse `N × N` operator given as per-row
    /// `(column, weight)` lists.
    pub fn left_mul_sparse(&self, op: &[Vec<(usize, f64)>]) -> AgentMatrix {
        debug_assert_eq!(op.len(), self.rows);
        let mut out = AgentMatrix::zeros(self.rows, self.cols);
        for (i, entries) in op.iter().enumerate() {
            let dst = &mut out.data[i * self.cols..(i + 1) * self.cols];
            for &(j, w) in entries {
                let src = &self.data[j * self.cols..(j + 1) * self.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for AgentMatrix {
    type Output = f64;
    fn index(&self, (i, k): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + k]
    }
}

impl IndexMut<(usize, usize)> for AgentMatrix {
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + k]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
