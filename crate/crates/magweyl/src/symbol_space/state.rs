use super::grid::BoxGrid;
use crate::error::{MagweylError, Result};
use crate::linalg::{CVec, C64};

/// Samples of an L² function on the position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: BoxGrid,
    values: Vec<C64>,
}

impl StateVector {
    pub fn new(grid: BoxGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(MagweylError::GridMismatch(format!(
                "state has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(StateVector { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> C64>(grid: BoxGrid, f: F) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        StateVector { grid, values }
    }

    /// exp(−|x − c|²/(2w²) + i⟨k, x⟩), not normalised.
    pub fn gaussian(grid: BoxGrid, center: &[f64], width: f64, momentum: &[f64]) -> Self {
        Self::from_fn(grid, |x| {
            let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            let ph: f64 = x.iter().zip(momentum).map(|(a, b)| a * b).sum();
            C64::from_polar((-r2 / (2.0 * width * width)).exp(), ph)
        })
    }

    pub fn from_cvec(grid: BoxGrid, v: &CVec) -> Result<Self> {
        Self::new(grid, v.iter().copied().collect())
    }

    pub fn to_cvec(&self) -> CVec {
        CVec::from_column_slice(&self.values)
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// ⟨f, g⟩ = h^d Σ conj(f) g
    pub fn inner(&self, other: &StateVector) -> C64 {
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        s * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        StateVector { grid: self.grid, values: self.values.iter().map(|v| v / n).collect() }
    }

    /// Pointwise modulus |f|.
    pub fn modulus(&self) -> Self {
        StateVector { grid: self.grid, values: self.values.iter().map(|v| C64::new(v.norm(), 0.0)).collect() }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |a, (u, v)| a.max((u - v).norm()))
    }

    /// Largest |f| over nodes within `margin` cells of the box edge.
    pub fn boundary_tail(&self, margin: usize) -> f64 {
        let n = self.grid.n;
        let mut worst: f64 = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            if self.grid.unflatten(k).iter().any(|&i| i < margin || i + margin >= n) {
                worst = worst.max(v.norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_product_properties() {
        let g = BoxGrid::new(2, 6.0, 24).unwrap();
        let f = StateVector::gaussian(g, &[0.5, -0.3], 1.0, &[1.0, 0.0]);
        let h = StateVector::gaussian(g, &[-0.2, 0.1], 1.3, &[0.0, -0.5]);
        assert!((f.inner(&h) - h.inner(&f).conj()).norm() < 1e-14);
        assert!(f.inner(&f).re > 0.0 && f.inner(&f).im.abs() < 1e-15);
        // ∫ e^{−|x|²} dx = π
        assert!((f.norm().powi(2) - std::f64::consts::PI).abs() < 1e-10);
        assert!(f.boundary_tail(1) < 1e-5 && f.boundary_tail(1) > 0.0);
    }
}
