//! Uniform rectangular lattices in log-price space.
//!
//! Nodes are flattened lexicographically with the first axis varying slowest,
//! which is also the row order of every CSV this crate writes.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported number of assets for grid-based solvers.
pub const MAX_DIM: usize = 4;

#[derive(Clone, Debug, Serialize)]
pub struct Lattice {
    lo: Vec<f64>,
    hi: Vec<f64>,
    nx: Vec<usize>,
    h: Vec<f64>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    len: usize,
}

impl Lattice {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nx: Vec<usize>) -> Result<Self> {
        let n = lo.len();
        if n == 0 || hi.len() != n || nx.len() != n {
            return Err(Error::invalid(
                "lattice bounds and point counts must have the same positive length",
            ));
        }
        if n > MAX_DIM {
            return Err(Error::invalid(format!(
                "lattices support at most {MAX_DIM} dimensions, got {n}"
            )));
        }
        let mut h = Vec::with_capacity(n);
        for i in 0..n {
            if !(lo[i].is_finite() && hi[i].is_finite()) {
                return Err(Error::invalid(format!("lattice axis {i} has non-finite bounds")));
            }
            if nx[i] < 3 {
                return Err(Error::invalid(format!(
                    "lattice axis {i} needs at least 3 points, got {}",
                    nx[i]
                )));
            }
            let hi_ = (hi[i] - lo[i]) / (nx[i] - 1) as f64;
            if !(hi_ > 0.0) {
                return Err(Error::invalid(format!("lattice axis {i} has hi <= lo")));
            }
            h.push(hi_);
        }
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * nx[i + 1];
        }
        let len = nx.iter().product();
        Ok(Self {
            lo,
            hi,
            nx,
            h,
            strides,
            len,
        })
    }

    pub fn dim(&self) -> usize {
        self.nx.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn nx(&self) -> &[usize] {
        &self.nx
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (k, s) in self.strides.iter().enumerate() {
            idx[k] = flat / s;
            flat %= s;
        }
        idx
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.nx[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.h[axis]
        }
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.coord(k, i))
            .collect()
    }

    pub fn is_interior(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.nx).all(|(&i, &n)| i >= 1 && i + 1 < n)
    }

    pub fn is_interior_flat(&self, flat: usize) -> bool {
        let mut rem = flat;
        for (s, &n) in self.strides.iter().zip(&self.nx) {
            let i = rem / s;
            rem %= s;
            if i == 0 || i + 1 == n {
                return false;
            }
        }
        true
    }

    /// Whether `x` lies in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Whether every coordinate of `x` is at least `margin[i]` inside the box.
    pub fn is_deep_interior(&self, x: &[f64], margin: &[f64]) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo[i] + margin[i] && x[i] <= self.hi[i] - margin[i])
    }

    /// Nearest strictly interior node to `x` (coordinates clamped into the box).
    pub fn nearest_interior(&self, x: &[f64]) -> Vec<usize> {
        (0..self.dim())
            .map(|k| {
                let s = ((x[k] - self.lo[k]) / self.h[k]).round();
                let max = (self.nx[k] - 2) as f64;
                s.clamp(1.0, max) as usize
            })
            .collect()
    }

    /// Multilinear interpolation of nodal `values` at `x`; `None` outside the box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Option<f64> {
        let n = self.dim();
        let mut base = 0usize;
        let mut frac = [0.0f64; MAX_DIM];
        for k in 0..n {
            let s = (x[k] - self.lo[k]) / self.h[k];
            let top = (self.nx[k] - 1) as f64;
            if !(s >= 0.0 && s <= top) {
                return None;
            }
            let i = (s.floor() as usize).min(self.nx[k] - 2);
            frac[k] = s - i as f64;
            base += i * self.strides[k];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut off = 0;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    off += self.strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * values[base + off];
            }
        }
        Some(acc)
    }
}
