use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MagweylError, Result};

/// Uniform cell-centred grid on [−L, L]^d with n points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

impl BoxGrid {
    pub fn new(d: usize, half_width: f64, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(MagweylError::InvalidGrid("d must be positive".into()));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(MagweylError::InvalidGrid(format!("n = {n} must be even and at least 4")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(MagweylError::InvalidGrid(format!("L = {half_width} must be positive")));
        }
        Ok(BoxGrid { d, half_width, n })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.d, self.half_width, self.n).map(|_| ())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Momentum spacing π/L of the dual grid.
    pub fn dual_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// n^d
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// h^d
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// x_k = −L + (k + ½)h
    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + (k as f64 + 0.5) * self.spacing()
    }

    /// ξ_l = (l − n/2)·π/L
    pub fn momentum_node(&self, l: usize) -> f64 {
        (l as f64 - (self.n / 2) as f64) * self.dual_spacing()
    }

    /// v_m = (m − n/2)·h, the separation grid used by kernels.
    pub fn separation_node(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    pub fn momentum_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|l| self.momentum_node(l)).collect()
    }

    /// Row-major multi-index of a flat index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).into_iter().map(|k| self.node(k)).collect()
    }

    pub fn momentum(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).into_iter().map(|l| self.momentum_node(l)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

/// Position grid together with its centred DFT dual in momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub position: BoxGrid,
}

impl PhaseSpaceGrid {
    pub fn new(position: BoxGrid) -> Self {
        PhaseSpaceGrid { position }
    }

    pub fn from_params(d: usize, half_width: f64, n: usize) -> Result<Self> {
        Ok(PhaseSpaceGrid { position: BoxGrid::new(d, half_width, n)? })
    }

    pub fn d(&self) -> usize {
        self.position.d
    }

    pub fn n(&self) -> usize {
        self.position.n
    }

    /// n^{2d}
    pub fn len(&self) -> usize {
        self.position.len() * self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Phase-space cell volume h^d (π/L)^d.
    pub fn cell_volume(&self) -> f64 {
        (self.position.spacing() * self.position.dual_spacing()).powi(self.d() as i32)
    }

    /// Split a flat phase-space index into (position flat, momentum flat).
    pub fn split(&self, flat: usize) -> (usize, usize) {
        let m = self.position.len();
        (flat / m, flat % m)
    }

    pub fn index(&self, pos: usize, mom: usize) -> usize {
        pos * self.position.len() + mom
    }

    /// Largest |ξ| component on the grid.
    pub fn momentum_extent(&self) -> f64 {
        (self.n() / 2) as f64 * self.position.dual_spacing()
    }
}

/// σ((y, η), (z, ζ)) = ⟨η, z⟩ − ⟨ζ, y⟩
pub fn symplectic_form(y: &[f64], eta: &[f64], z: &[f64], zeta: &[f64]) -> f64 {
    let a: f64 = eta.iter().zip(z).map(|(u, v)| u * v).sum();
    let b: f64 = zeta.iter().zip(y).map(|(u, v)| u * v).sum();
    a - b
}
