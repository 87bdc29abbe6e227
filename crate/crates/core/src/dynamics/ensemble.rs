use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Particle positions at one time index, stored row-major (`n x dim`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    positions: Vec<f64>,
    n: usize,
    dim: usize,
    pub t: f64,
    pub mu_t: f64,
    pub step_index: u64,
}

impl Ensemble {
    pub fn new(positions: Vec<f64>, dim: usize, mu_t: f64) -> Result<Self> {
        if dim == 0 || positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::invalid(
                "positions",
                format!("length {} is not a positive multiple of dim {dim}", positions.len()),
            ));
        }
        if let Some(&v) = positions.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "ensemble position", value: v });
        }
        let n = positions.len() / dim;
        Ok(Ensemble { positions, n, dim, t: 0.0, mu_t, step_index: 0 })
    }

    pub fn from_rows(rows: &[Vec<f64>], mu_t: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Self::new(rows.concat(), dim, mu_t)
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn particles(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.particles() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }

    /// `max_{i,j} |x^i - x^j|`.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            let a = self.particle(i);
            for j in (i + 1)..self.n {
                let b = self.particle(j);
                let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
                best = best.max(d2);
            }
        }
        best.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.positions.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
