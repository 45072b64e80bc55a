use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MagweylError, Result};
use crate::linalg::{matmul, CMat, C64};
use crate::symbol_space::{write_complex_bin, BoxGrid, StateVector};

/// Integral kernel K[x, y] on the position grid. As an operator it acts by
/// (Kf)(x) = h^d Σ_y K[x, y] f(y).
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    grid: BoxGrid,
    data: CMat,
    gauge_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSidecar {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub gauge_hash: String,
    pub layout: String,
}

impl KernelMatrix {
    pub fn new(grid: BoxGrid, data: CMat, gauge_hash: u64) -> Result<Self> {
        let m = grid.len();
        if data.nrows() != m || data.ncols() != m {
            return Err(MagweylError::GridMismatch(format!(
                "kernel is {}×{}, grid needs {m}×{m}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(KernelMatrix { grid, data, gauge_hash })
    }

    /// Kernel from row-major samples K[a, b] (a = row position, b = column position).
    pub(crate) fn from_row_major(grid: BoxGrid, rows: Vec<C64>, gauge_hash: u64) -> Self {
        let m = grid.len();
        let mut data = CMat::from_vec(m, m, rows);
        data.transpose_mut();
        KernelMatrix { grid, data, gauge_hash }
    }

    pub(crate) fn to_row_major(&self) -> Vec<C64> {
        let mut t = self.data.clone();
        t.transpose_mut();
        t.as_slice().to_vec()
    }

    /// Kernel of the operator matrix `m`, i.e. h^{−d} m.
    pub fn from_operator(grid: BoxGrid, m: CMat, gauge_hash: u64) -> Result<Self> {
        let c = C64::from(1.0 / grid.cell_volume());
        Self::new(grid, m * c, gauge_hash)
    }

    /// The identity operator, K = h^{−d}δ.
    pub fn identity(grid: BoxGrid, gauge_hash: u64) -> Self {
        let m = grid.len();
        let data = CMat::identity(m, m) * C64::from(1.0 / grid.cell_volume());
        KernelMatrix { grid, data, gauge_hash }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn data(&self) -> &CMat {
        &self.data
    }

    pub fn gauge_hash(&self) -> u64 {
        self.gauge_hash
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Operator matrix h^d K.
    pub fn operator(&self) -> CMat {
        &self.data * C64::from(self.grid.cell_volume())
    }

    pub fn into_operator(self) -> CMat {
        let c = C64::from(self.grid.cell_volume());
        let mut m = self.data;
        m.iter_mut().for_each(|v| *v *= c);
        m
    }

    pub fn apply(&self, f: &StateVector) -> Result<StateVector> {
        if f.grid() != &self.grid {
            return Err(MagweylError::GridMismatch("state and kernel grids differ".into()));
        }
        let v = &self.data * f.to_cvec() * C64::from(self.grid.cell_volume());
        StateVector::from_cvec(self.grid, &v)
    }

    /// Kernel of the product: h^d Σ_z K[x, z] L[z, y].
    pub fn compose(&self, other: &KernelMatrix) -> Result<KernelMatrix> {
        if other.grid != self.grid {
            return Err(MagweylError::GridMismatch("kernels live on different grids".into()));
        }
        let mut p = matmul(&self.data, &other.data);
        let c = C64::from(self.grid.cell_volume());
        p.iter_mut().for_each(|v| *v *= c);
        Ok(KernelMatrix { grid: self.grid, data: p, gauge_hash: self.gauge_hash })
    }

    pub fn adjoint(&self) -> KernelMatrix {
        KernelMatrix { grid: self.grid, data: self.data.adjoint(), gauge_hash: self.gauge_hash }
    }

    /// Writes `<stem>.bin` (row-major K) and `<stem>.json`.
    pub fn export(&self, stem: &Path) -> Result<()> {
        write_complex_bin(&stem.with_extension("bin"), &self.to_row_major())?;
        let side = KernelSidecar {
            n: self.grid.n,
            d: self.grid.d,
            half_width: self.grid.half_width,
            gauge_hash: format!("{:016x}", self.gauge_hash),
            layout: "row-major (x, y)".into(),
        };
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }
}
