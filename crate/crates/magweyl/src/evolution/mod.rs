//! The unitary group exp(−it Op^A(h)), its symbol, the Cauchy problem i∂_t w = h♯w,
//! the commutator expansion of a product and moment diagnostics for evolved states.
//!
//! Propagators come from one dense eigendecomposition per Hamiltonian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MagweylError, Result};
use crate::field_geometry::multi_indices;
use crate::linalg::{degenerate_clusters, hermitian_deviation, hermitian_eigen, hermitian_eigenvalues, identity, inverse, matmul, max_abs, CMat, CVec, C64};
use crate::moyal_product::Moyal;
use crate::quantization::{KernelMatrix, Quantizer};
use crate::symbol_space::{standard_symbol, PhaseSpaceGrid, StateVector, Symbol, SymbolSpec};

/// Relative Hermiticity tolerance for the assembled Op^A(h).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Default δt of [`Hamiltonian::cauchy_residual`].
pub const DEFAULT_DT: f64 = 1e-4;
/// Largest allowed |φ| near the box edge for the initial state, relative to max |φ|.
pub const TAIL_THRESHOLD: f64 = 1e-10;
/// Same bound for the evolved states W(t)φ. Momentum components with cyclotron
/// diameter comparable to L reach the edge within t ≤ 1, so this is looser.
pub const EVOLVED_TAIL_THRESHOLD: f64 = 1e-4;
/// Cells counted as "near the edge" by the tail check.
pub const TAIL_MARGIN: usize = 1;
/// c₀ = ENVELOPE_FACTOR × the t = 0 moment.
pub const ENVELOPE_FACTOR: f64 = 10.0;
/// Highest supported |α| + |β| in [`Hamiltonian::moment_diagnostics`].
pub const MAX_MOMENT_ORDER: usize = 4;

/// Op^A(h) with its cached eigendecomposition Op^A(h) = V diag(E) V†.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    quantizer: Quantizer,
    symbol: Symbol,
    operator: CMat,
    energies: Vec<f64>,
    vectors: CMat,
}

impl Hamiltonian {
    pub fn new(quantizer: Quantizer, symbol: Symbol) -> Result<Self> {
        let m = quantizer.operator(&symbol)?;
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(MagweylError::NonHermitian(dev));
        }
        // remove the rounding-level anti-Hermitian part before diagonalising
        let operator = (&m + m.adjoint()) * C64::from(0.5);
        let (energies, vectors) = hermitian_eigen(&operator);
        Ok(Hamiltonian { quantizer, symbol, operator, energies, vectors })
    }

    pub fn from_spec(quantizer: Quantizer, spec: &SymbolSpec) -> Result<Self> {
        let h = standard_symbol(spec, &PhaseSpaceGrid::new(*quantizer.grid()))?;
        Self::new(quantizer, h)
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn operator(&self) -> &CMat {
        &self.operator
    }

    /// Ascending eigenvalues of Op^A(h).
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Operator matrix of W(t) = V diag(e^{−itE}) V†.
    pub fn propagator_matrix(&self, t: f64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -t * self.energies[k]);
        }
        matmul(&scaled, &self.vectors.adjoint())
    }

    pub fn propagator(&self, t: f64) -> KernelMatrix {
        let grid = *self.quantizer.grid();
        KernelMatrix::from_operator(grid, self.propagator_matrix(t), self.quantizer.phases().gauge_hash())
            .expect("propagator has the grid's dimension")
    }

    /// W(t)φ, applied through the eigenbasis.
    pub fn evolve_state(&self, t: f64, phi: &StateVector) -> Result<StateVector> {
        self.check_state(phi)?;
        let mut c = self.vectors.ad_mul(&phi.to_cvec());
        for (k, v) in c.iter_mut().enumerate() {
            *v *= C64::from_polar(1.0, -t * self.energies[k]);
        }
        StateVector::from_cvec(*phi.grid(), &(&self.vectors * c))
    }

    /// Op^A(h)φ.
    pub fn apply(&self, phi: &StateVector) -> Result<StateVector> {
        self.check_state(phi)?;
        StateVector::from_cvec(*phi.grid(), &(&self.operator * phi.to_cvec()))
    }

    /// ⟨φ, Op^A(h)φ⟩.
    pub fn energy(&self, phi: &StateVector) -> Result<f64> {
        Ok(phi.inner(&self.apply(phi)?).re)
    }

    /// w(t) with W(t) = Op^A(w(t)).
    pub fn propagator_symbol(&self, t: f64) -> Result<Symbol> {
        Ok(self.quantizer.symbol(&self.propagator(t), 0.0)?.with_provenance(format!("w({t})")))
    }

    /// W(t) by `steps` Crank–Nicolson steps, for cross-checking the spectral propagator.
    pub fn crank_nicolson(&self, t: f64, steps: usize) -> Result<CMat> {
        if steps == 0 {
            return Err(MagweylError::InvalidArgument("Crank–Nicolson needs at least one step".into()));
        }
        let n = self.operator.nrows();
        let half = C64::new(0.0, 0.5 * t / steps as f64);
        let fwd = identity(n) - &self.operator * half;
        let back = identity(n) + &self.operator * half;
        let back_inv = inverse(&back).ok_or_else(|| MagweylError::InvalidArgument("singular Crank–Nicolson step".into()))?;
        let step = matmul(&back_inv, &fwd);
        let mut w = identity(n);
        for _ in 0..steps {
            w = matmul(&step, &w);
        }
        Ok(w)
    }

    /// sup |i(w(t+δt) − w(t−δt))/(2δt) − h♯w(t)|.
    pub fn cauchy_residual(&self, t: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(MagweylError::InvalidArgument(format!("δt must be positive, got {dt}")));
        }
        let plus = self.propagator_symbol(t + dt)?;
        let minus = self.propagator_symbol(t - dt)?;
        // h♯w(t) is the symbol of Op(h)·W(t)
        let hw = self.quantizer.symbol_of_operator(&matmul(&self.operator, &self.propagator_matrix(t)), 0.0)?;
        let c = C64::new(0.0, 1.0 / (2.0 * dt));
        Ok(plus
            .values()
            .iter()
            .zip(minus.values())
            .zip(hw.values())
            .fold(0.0, |acc, ((p, m), r)| acc.max(((p - m) * c - r).norm())))
    }

    /// Residuals at δt and δt/2; second order means a ratio near 4.
    pub fn cauchy_richardson(&self, t: f64, dt: f64) -> Result<CauchyReport> {
        let residual = self.cauchy_residual(t, dt)?;
        let residual_half = self.cauchy_residual(t, 0.5 * dt)?;
        let ratio = residual / residual_half;
        let constant = (residual - residual_half) / (0.75 * dt * dt);
        let bound = constant.abs() * dt * dt + 1e-5;
        Ok(CauchyReport {
            t,
            dt,
            residual,
            residual_half,
            ratio,
            constant,
            within_bound: residual <= bound,
            ratio_ok: (3.5..=4.5).contains(&ratio),
        })
    }

    /// ‖Q^α Π^β ψ‖ for every |α| + |β| ≤ `max_order` at each time, without the tail check.
    pub fn moment_table(&self, phi: &StateVector, times: &[f64], max_order: usize) -> Result<MomentTable> {
        self.check_state(phi)?;
        let d = phi.grid().d;
        let pi = self.momentum_operators()?;
        let xs: Vec<Vec<f64>> = (0..d).map(|j| phi.grid().points().iter().map(|p| p[j]).collect()).collect();
        let indices = moment_indices(2 * d, max_order);
        let h_d = phi.grid().cell_volume();
        let per_time: Vec<Result<Vec<MomentRow>>> = times
            .par_iter()
            .map(|&t| {
                let psi = self.evolve_state(t, phi)?.to_cvec();
                Ok(indices
                    .iter()
                    .map(|idx| {
                        let (alpha, beta) = idx.split_at(d);
                        let v = apply_moment(&psi, alpha, beta, &xs, &pi);
                        MomentRow { t, alpha: alpha.to_vec(), beta: beta.to_vec(), norm: (v.norm_squared() * h_d).sqrt() }
                    })
                    .collect())
            })
            .collect();
        let mut rows = Vec::new();
        for r in per_time {
            rows.extend(r?);
        }
        Ok(MomentTable { max_order, order: self.symbol.order(), rows })
    }

    /// Moment table over `times` with the growth envelope c₀(1 + |t|)^{m·p}, refusing
    /// states that reach the box edge.
    pub fn moment_diagnostics(&self, phi: &StateVector, times: &[f64], max_order: usize) -> Result<MomentReport> {
        if max_order > MAX_MOMENT_ORDER {
            return Err(MagweylError::InvalidArgument(format!(
                "moment order {max_order} exceeds {MAX_MOMENT_ORDER}"
            )));
        }
        let scale = phi.values().iter().fold(0.0f64, |a, v| a.max(v.norm()));
        let initial_tail = phi.boundary_tail(TAIL_MARGIN) / scale;
        if initial_tail > TAIL_THRESHOLD {
            return Err(MagweylError::BoundaryTails { tail: initial_tail, threshold: TAIL_THRESHOLD });
        }
        let mut worst_tail = initial_tail;
        for &t in times {
            worst_tail = worst_tail.max(self.evolve_state(t, phi)?.boundary_tail(TAIL_MARGIN) / scale);
        }
        if worst_tail > EVOLVED_TAIL_THRESHOLD {
            return Err(MagweylError::BoundaryTails { tail: worst_tail, threshold: EVOLVED_TAIL_THRESHOLD });
        }
        let table = self.moment_table(phi, times, max_order)?;
        let exponent = max_order as f64 * self.symbol.order();
        let baseline = self.moment_table(phi, &[0.0], max_order)?;
        let mut checks = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let c0 = ENVELOPE_FACTOR
                * baseline
                    .rows
                    .iter()
                    .find(|b| b.alpha == row.alpha && b.beta == row.beta)
                    .map(|b| b.norm)
                    .expect("baseline covers every index");
            let envelope = c0 * (1.0 + row.t.abs()).powf(exponent);
            checks.push(row.norm.is_finite() && row.norm <= envelope);
        }
        let passed = checks.iter().all(|&c| c);
        Ok(MomentReport { table, exponent, worst_tail, within_envelope: checks, passed })
    }

    /// Π_j = Op^A(ξ_j) as operator matrices.
    pub fn momentum_operators(&self) -> Result<Vec<CMat>> {
        let grid = PhaseSpaceGrid::new(*self.quantizer.grid());
        (0..grid.d())
            .map(|j| self.quantizer.operator(&standard_symbol(&SymbolSpec::Momentum { j }, &grid)?))
            .collect()
    }

    /// Position expectation ⟨Q_j⟩ and kinetic momentum ⟨Π_j⟩ of a (not necessarily normalised) state.
    pub fn expectations(&self, psi: &StateVector) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = psi.grid().d;
        let norm2 = psi.norm().powi(2);
        let mut x = vec![0.0; d];
        for (k, p) in psi.grid().points().iter().enumerate() {
            let w = psi.values()[k].norm_sqr();
            for j in 0..d {
                x[j] += p[j] * w;
            }
        }
        let h_d = psi.grid().cell_volume();
        let x = x.into_iter().map(|v| v * h_d / norm2).collect();
        let v = psi.to_cvec();
        let p = self
            .momentum_operators()?
            .iter()
            .map(|m| (v.dotc(&(m * &v)) * C64::from(h_d)).re / norm2)
            .collect();
        Ok((x, p))
    }

    fn check_state(&self, phi: &StateVector) -> Result<()> {
        if phi.grid() != self.quantizer.grid() {
            return Err(MagweylError::GridMismatch("state grid differs from the Hamiltonian's".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CauchyReport {
    pub t: f64,
    pub dt: f64,
    pub residual: f64,
    pub residual_half: f64,
    pub ratio: f64,
    /// C in residual ≈ C·δt², from the two residuals
    pub constant: f64,
    pub within_bound: bool,
    pub ratio_ok: bool,
}

/// Q^α Π^β ψ: Π factors first, then the diagonal Q factors.
fn apply_moment(psi: &CVec, alpha: &[usize], beta: &[usize], xs: &[Vec<f64>], pi: &[CMat]) -> CVec {
    let mut v = psi.clone();
    // Π^β = Π₁^{β₁}⋯Π_d^{β_d} acting on ψ: the last factor goes first
    for j in (0..beta.len()).rev() {
        for _ in 0..beta[j] {
            v = &pi[j] * v;
        }
    }
    for (j, &a) in alpha.iter().enumerate() {
        for (k, val) in v.iter_mut().enumerate() {
            *val *= xs[j][k].powi(a as i32);
        }
    }
    v
}

/// All multi-indices of length `len` with total order ≤ `max_order`, graded then lexicographic.
pub fn moment_indices(len: usize, max_order: usize) -> Vec<Vec<usize>> {
    (0..=max_order).flat_map(|m| multi_indices(len, m)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    pub max_order: usize,
    /// order p of h
    pub order: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    pub fn norm(&self, t: f64, alpha: &[usize], beta: &[usize]) -> Option<f64> {
        self.rows.iter().find(|r| r.t == t && r.alpha == alpha && r.beta == beta).map(|r| r.norm)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentReport {
    pub table: MomentTable,
    /// m·p
    pub exponent: f64,
    pub worst_tail: f64,
    pub within_envelope: Vec<bool>,
    pub passed: bool,
}

/// Max-norm residual of [F₁⋯F_N, G] = Σ_{∅≠S} [F_{j₁},[…,[F_{j_k},G]…]] · Π_{l∉S} F_l,
/// with S = {j₁ < … < j_k} and the remaining factors in their original order.
pub fn commutator_expansion_check(fs: &[CMat], g: &CMat) -> Result<f64> {
    if fs.is_empty() {
        return Err(MagweylError::InvalidArgument("need at least one factor".into()));
    }
    let n = g.nrows();
    for m in fs.iter().chain(std::iter::once(g)) {
        if m.nrows() != n || m.ncols() != n {
            return Err(MagweylError::DimensionMismatch { expected: n, found: if m.nrows() != n { m.nrows() } else { m.ncols() } });
        }
    }
    if fs.len() > 20 {
        return Err(MagweylError::InvalidArgument(format!("{} factors is too many subsets", fs.len())));
    }
    let comm = |a: &CMat, b: &CMat| matmul(a, b) - matmul(b, a);
    let product = fs.iter().skip(1).fold(fs[0].clone(), |acc, f| matmul(&acc, f));
    let lhs = comm(&product, g);
    let mut rhs = CMat::zeros(n, n);
    for mask in 1u32..(1 << fs.len()) {
        let mut nested = g.clone();
        for j in (0..fs.len()).rev().filter(|j| mask & (1 << j) != 0) {
            nested = comm(&fs[j], &nested);
        }
        for (_, f) in fs.iter().enumerate().filter(|(l, _)| mask & (1 << l) == 0) {
            nested = matmul(&nested, f);
        }
        rhs += nested;
    }
    Ok(max_abs(&(lhs - rhs)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandauSpectrum {
    /// lowest eigenvalues, ascending
    pub lowest: Vec<f64>,
    /// (mean, size) of the degenerate clusters, ascending
    pub clusters: Vec<(f64, usize)>,
    /// differences of consecutive cluster means
    pub gaps: Vec<f64>,
}

/// Clusters of an ascending spectrum (relative width `rtol`, at least `min_size` members).
pub fn landau_spectrum(energies: &[f64], rtol: f64, min_size: usize, keep: usize) -> LandauSpectrum {
    let clusters = degenerate_clusters(energies, rtol, min_size);
    let gaps = clusters.windows(2).map(|w| w[1].0 - w[0].0).collect();
    LandauSpectrum { lowest: energies.iter().take(keep).copied().collect(), clusters, gaps }
}

/// Ascending eigenvalues of Op^A(h) without eigenvectors, for spectra too large to diagonalise fully.
pub fn operator_spectrum(q: &Quantizer, h: &Symbol) -> Result<Vec<f64>> {
    let m = q.operator(h)?;
    let dev = hermitian_deviation(&m);
    if dev > HERMITIAN_TOL * max_abs(&m).max(1.0) {
        return Err(MagweylError::NonHermitian(dev));
    }
    Ok(hermitian_eigenvalues(&((&m + m.adjoint()) * C64::from(0.5))))
}

/// Symbol-level unitarity defect sup |w(t)♯conj(w(t)) − 1|.
pub fn symbol_unitarity(h: &Hamiltonian, t: f64) -> Result<f64> {
    let w = h.propagator_symbol(t)?;
    let moyal = Moyal::from_quantizer(h.quantizer().clone());
    let p = moyal.product(&w, &w.conj())?;
    Ok(p.values().iter().fold(0.0, |a, v| a.max((v - C64::new(1.0, 0.0)).norm())))
}

#[cfg(test)]
mod tests;
