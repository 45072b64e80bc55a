//! Weyl systems and the symbol → kernel → operator pipeline, with its inverse,
//! gauge conjugation, the Schur–Holmgren bound and the diamagnetic check.

mod kernel;
mod weyl_system;

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::{KernelMatrix, KernelSidecar};
pub use weyl_system::{magnetic_weyl_system, weyl_system};

use crate::error::{MagweylError, Result};
use crate::field_geometry::{FieldKind, MagneticField, ScalarFunction, VectorPotential};
use crate::linalg::{CMat, C64};
use crate::symbol_space::{
    momentum_to_separation, separation_to_momentum, upsilon_in_place, upsilon_inverse_in_place, BoxGrid,
    PhaseSpaceGrid, StateVector, Symbol,
};

/// Λ^A(x_a, x_b) for every pair of grid nodes, row-major.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    grid: BoxGrid,
    values: Vec<C64>,
    trivial: bool,
    gauge_hash: u64,
}

impl PhaseTable {
    pub fn new(grid: BoxGrid, a: &VectorPotential) -> Result<Self> {
        if a.dim() != grid.d {
            return Err(MagweylError::DimensionMismatch { expected: grid.d, found: a.dim() });
        }
        let gauge_hash = a.fingerprint();
        let trivial = a.field().kind() == FieldKind::Zero && *a.gauge() == Default::default();
        let m = grid.len();
        if trivial {
            return Ok(PhaseTable { grid, values: Vec::new(), trivial, gauge_hash });
        }
        let pts = grid.points();
        let mut values = vec![C64::new(0.0, 0.0); m * m];
        values.par_chunks_mut(m).enumerate().for_each(|(r, row)| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = C64::from_polar(1.0, -a.circulation_unchecked(&pts[r], &pts[c]));
            }
        });
        Ok(PhaseTable { grid, values, trivial, gauge_hash })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn gauge_hash(&self) -> u64 {
        self.gauge_hash
    }

    pub fn at(&self, a: usize, b: usize) -> C64 {
        if self.trivial {
            C64::new(1.0, 0.0)
        } else {
            self.values[a * self.grid.len() + b]
        }
    }

    fn multiply(&self, data: &mut [C64], conjugate: bool) {
        if self.trivial {
            return;
        }
        let m = self.grid.len();
        data.par_chunks_mut(m).zip(self.values.par_chunks(m)).for_each(|(row, ph)| {
            for (v, p) in row.iter_mut().zip(ph) {
                *v *= if conjugate { p.conj() } else { *p };
            }
        });
    }
}

/// Quantization for one grid and one vector potential; the phase table is built once.
#[derive(Debug, Clone)]
pub struct Quantizer {
    potential: VectorPotential,
    phases: Arc<PhaseTable>,
}

impl Quantizer {
    pub fn new(grid: BoxGrid, potential: VectorPotential) -> Result<Self> {
        let phases = Arc::new(PhaseTable::new(grid, &potential)?);
        Ok(Quantizer { potential, phases })
    }

    /// B = 0 in the transversal gauge.
    pub fn free(grid: BoxGrid) -> Self {
        Self::new(grid, VectorPotential::transversal(Arc::new(MagneticField::zero(grid.d))))
            .expect("dimensions agree")
    }

    pub fn grid(&self) -> &BoxGrid {
        self.phases.grid()
    }

    pub fn potential(&self) -> &VectorPotential {
        &self.potential
    }

    pub fn phases(&self) -> &PhaseTable {
        &self.phases
    }

    /// Same grid, gauge A + df.
    pub fn with_gauge_function(&self, f: ScalarFunction) -> Result<Self> {
        Self::new(*self.grid(), self.potential.with_gauge_function(f))
    }

    fn check(&self, grid: &PhaseSpaceGrid) -> Result<()> {
        if grid.position != *self.grid() {
            return Err(MagweylError::GridMismatch(format!(
                "symbol grid (d={}, L={}, n={}) differs from quantizer grid (d={}, L={}, n={})",
                grid.d(),
                grid.position.half_width,
                grid.n(),
                self.grid().d,
                self.grid().half_width,
                self.grid().n
            )));
        }
        Ok(())
    }

    /// 𝔎_F^A = Λ^A · Υ(1 ⊗ F_*)F.
    pub fn kernel(&self, f: &Symbol) -> Result<KernelMatrix> {
        self.check(f.grid())?;
        let grid = *self.grid();
        let mut data = f.values().to_vec();
        momentum_to_separation(&mut data, &grid);
        upsilon_in_place(&mut data, &grid);
        let c = (2.0 * PI).powf(-(grid.d as f64) / 2.0);
        data.par_iter_mut().for_each(|v| *v *= c);
        self.phases.multiply(&mut data, false);
        Ok(KernelMatrix::from_row_major(grid, data, self.phases.gauge_hash()))
    }

    /// Operator matrix h^d 𝔎_F^A.
    pub fn operator(&self, f: &Symbol) -> Result<CMat> {
        Ok(self.kernel(f)?.into_operator())
    }

    /// Inverse of [`Quantizer::kernel`]; `order` becomes the symbol's order metadata.
    pub fn symbol(&self, k: &KernelMatrix, order: f64) -> Result<Symbol> {
        if k.grid() != self.grid() {
            return Err(MagweylError::GridMismatch("kernel grid differs from quantizer grid".into()));
        }
        let grid = *self.grid();
        let mut data = k.to_row_major();
        self.phases.multiply(&mut data, true);
        upsilon_inverse_in_place(&mut data, &grid);
        let c = (2.0 * PI).powf(grid.d as f64 / 2.0);
        data.par_iter_mut().for_each(|v| *v *= c);
        separation_to_momentum(&mut data, &grid);
        Symbol::new(PhaseSpaceGrid::new(grid), data, order, "kernel")
    }

    pub fn symbol_of_operator(&self, m: &CMat, order: f64) -> Result<Symbol> {
        let k = KernelMatrix::from_operator(*self.grid(), m.clone(), self.phases.gauge_hash())?;
        self.symbol(&k, order)
    }
}

pub fn kernel_from_symbol(f: &Symbol, a: &VectorPotential) -> Result<KernelMatrix> {
    Quantizer::new(f.grid().position, a.clone())?.kernel(f)
}

pub fn symbol_from_kernel(k: &KernelMatrix, a: &VectorPotential) -> Result<Symbol> {
    Quantizer::new(*k.grid(), a.clone())?.symbol(k, 0.0)
}

/// Op^A(F) with matvec semantics; same data as [`kernel_from_symbol`].
pub fn assemble_operator(f: &Symbol, a: &VectorPotential) -> Result<KernelMatrix> {
    kernel_from_symbol(f, a)
}

/// e^{if(Q)} K e^{−if(Q)}.
pub fn gauge_conjugate(k: &KernelMatrix, f: &ScalarFunction) -> KernelMatrix {
    let g = *k.grid();
    let ph: Vec<C64> = g.points().iter().map(|x| C64::from_polar(1.0, f.value(x))).collect();
    let mut data = k.data().clone();
    for (j, mut col) in data.column_iter_mut().enumerate() {
        let cj = ph[j].conj();
        for (i, v) in col.iter_mut().enumerate() {
            *v *= ph[i] * cj;
        }
    }
    KernelMatrix::new(g, data, k.gauge_hash()).expect("same shape")
}

/// Row and column L¹ bounds h^d Σ|K|; `bound` is the larger of the two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurHolmgren {
    pub row: f64,
    pub col: f64,
    pub bound: f64,
}

pub fn schur_holmgren_bound(k: &KernelMatrix) -> SchurHolmgren {
    let w = k.grid().cell_volume();
    let data = k.data();
    let m = data.nrows();
    let col = (0..m)
        .into_par_iter()
        .map(|j| data.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .reduce(|| 0.0, f64::max)
        * w;
    let row = (0..m)
        .into_par_iter()
        .map(|i| data.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .reduce(|| 0.0, f64::max)
        * w;
    SchurHolmgren { row, col, bound: row.max(col) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiamagneticReport {
    /// max_x (|Op^A(F)φ|(x) − (Op⁰(F)|φ|)(x))⁺
    pub max_violation: f64,
    /// min over kernel entries of Re K⁰, relative to max |K⁰|
    pub kernel_min: f64,
    pub kernel_max_imag: f64,
}

/// Relative tolerance for the x-independence and positivity preconditions.
pub const DIAMAGNETIC_PRECONDITION_TOL: f64 = 1e-8;

/// Pointwise check of |Op^A(F)φ| ≤ Op⁰(F)|φ| for a ξ-only symbol whose kernel is a positive function.
pub fn diamagnetic_check(f: &Symbol, a: &VectorPotential, phi: &StateVector) -> Result<DiamagneticReport> {
    let grid = f.grid();
    let (m, n_mom) = (grid.position.len(), grid.position.len());
    let sup = f.sup_norm().max(f64::MIN_POSITIVE);
    for p in 1..m {
        for q in 0..n_mom {
            if (f.at(p, q) - f.at(0, q)).norm() > DIAMAGNETIC_PRECONDITION_TOL * sup {
                return Err(MagweylError::Positivity("symbol depends on x".into()));
            }
        }
    }
    let free = Quantizer::free(grid.position);
    let k0 = free.kernel(f)?;
    let kmax = k0.data().iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let kernel_min = k0.data().iter().fold(f64::INFINITY, |acc, z| acc.min(z.re)) / kmax;
    let kernel_max_imag = k0.data().iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs())) / kmax;
    if kernel_min < -DIAMAGNETIC_PRECONDITION_TOL || kernel_max_imag > DIAMAGNETIC_PRECONDITION_TOL {
        return Err(MagweylError::Positivity(format!(
            "kernel is not a positive function (min {kernel_min:e}, max imag {kernel_max_imag:e})"
        )));
    }
    let lhs = kernel_from_symbol(f, a)?.apply(phi)?;
    let rhs = k0.apply(&phi.modulus())?;
    let max_violation = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .fold(0.0_f64, |acc, (l, r)| acc.max(l.norm() - r.re));
    Ok(DiamagneticReport { max_violation, kernel_min, kernel_max_imag })
}
