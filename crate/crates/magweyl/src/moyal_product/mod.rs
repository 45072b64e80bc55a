//! The magnetic Moyal product: the kernel route used in production, the direct
//! oscillatory-integral route used as an oracle, trace and cyclic identities,
//! commutators and the first-order remainder.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MagweylError, Result};
use crate::field_geometry::{omega_phase, MagneticField, VectorPotential};
use crate::linalg::C64;
use crate::quantization::{KernelMatrix, Quantizer};
use crate::symbol_space::{nu, standard_symbol, BoxGrid, PhaseSpaceGrid, StateVector, Symbol, SymbolSpec};

/// Largest number of (Y, Z) terms [`moyal_direct`] will accept.
pub const DIRECT_COST_LIMIT: u128 = 1_000_000_000;

/// F ♯^B G through Op^A(F)Op^A(G) = Op^A(F ♯^B G), with one cached quantizer.
#[derive(Debug, Clone)]
pub struct Moyal {
    q: Quantizer,
}

impl Moyal {
    /// Transversal gauge of `b`.
    pub fn new(grid: BoxGrid, b: Arc<MagneticField>) -> Result<Self> {
        Self::with_potential(grid, VectorPotential::transversal(b))
    }

    pub fn with_potential(grid: BoxGrid, a: VectorPotential) -> Result<Self> {
        Ok(Moyal { q: Quantizer::new(grid, a)? })
    }

    pub fn from_quantizer(q: Quantizer) -> Self {
        Moyal { q }
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.q
    }

    pub fn grid(&self) -> &BoxGrid {
        self.q.grid()
    }

    pub fn kernel(&self, f: &Symbol) -> Result<KernelMatrix> {
        self.q.kernel(f)
    }

    pub fn product(&self, f: &Symbol, g: &Symbol) -> Result<Symbol> {
        check_pair(f, g)?;
        let k = self.q.kernel(f)?.compose(&self.q.kernel(g)?)?;
        Ok(self.q.symbol(&k, f.order() + g.order())?.with_provenance("moyal"))
    }

    /// F ♯ G − G ♯ F.
    pub fn commutator(&self, f: &Symbol, g: &Symbol) -> Result<Symbol> {
        check_pair(f, g)?;
        let kf = self.q.kernel(f)?;
        let kg = self.q.kernel(g)?;
        let ab = kf.compose(&kg)?;
        let ba = kg.compose(&kf)?;
        let k = KernelMatrix::new(*self.grid(), ab.data() - ba.data(), kf.gauge_hash())?;
        Ok(self.q.symbol(&k, f.order() + g.order() - 1.0)?.with_provenance("commutator"))
    }

    /// R = F ♯ G − FG with ν^{p₁+p₂−1}_{0,0}(R).
    pub fn remainder(&self, f: &Symbol, g: &Symbol) -> Result<Remainder> {
        let order = f.order() + g.order() - 1.0;
        let prod = self.product(f, g)?;
        let symbol = (&prod - &(f * g)).with_order(order).with_provenance("remainder");
        let seminorm = nu(&symbol, order, 0, 0)?;
        Ok(Remainder { symbol, order, seminorm })
    }

    pub fn trace_identity_check(&self, phi: &Symbol, psi: &Symbol) -> Result<TraceCheck> {
        let lhs = self.product(phi, psi)?.integral();
        let rhs = (phi * psi).integral();
        Ok(TraceCheck { lhs, rhs, error: (lhs - rhs).norm() })
    }

    pub fn cyclic_identity_check(&self, phi: &Symbol, psi: &Symbol, chi: &Symbol) -> Result<CyclicCheck> {
        let values = [
            (&self.product(phi, psi)? * chi).integral(),
            (phi * &self.product(psi, chi)?).integral(),
            (psi * &self.product(chi, phi)?).integral(),
        ];
        let mut max_error: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                max_error = max_error.max((values[i] - values[j]).norm());
            }
        }
        let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
        Ok(CyclicCheck { values, max_error, relative_error: rel(max_error, scale) })
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

fn check_pair(f: &Symbol, g: &Symbol) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(MagweylError::GridMismatch("Moyal factors live on different grids".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Remainder {
    pub symbol: Symbol,
    pub order: f64,
    pub seminorm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub error: f64,
}

impl TraceCheck {
    pub fn relative_error(&self) -> f64 {
        rel(self.error, self.rhs.norm())
    }
}

/// ∫(φ♯ψ)χ, ∫φ(ψ♯χ), ∫ψ(χ♯φ) and their largest pairwise gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicCheck {
    pub values: [C64; 3],
    pub max_error: f64,
    pub relative_error: f64,
}

/// ξ₁ ♯ ξ₂ − ξ₂ ♯ ξ₁ for a constant 2-D field, compared with the constant symbol s·i·b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCheck {
    pub b: f64,
    /// sign read off ⟨φ, C φ⟩ = s·i·b‖φ‖²
    pub sign: f64,
    /// ⟨φ, C φ⟩ / ‖φ‖²
    pub expectation: C64,
    /// sup over the whole grid of |C − s·i·b|
    pub symbol_error: f64,
    /// ‖C φ − s·i·b φ‖ / ‖φ‖
    pub operator_residual: f64,
}

pub fn magnetic_commutator_check(grid: BoxGrid, b: f64, phi: &StateVector) -> Result<CommutatorCheck> {
    if grid.d != 2 {
        return Err(MagweylError::DimensionMismatch { expected: 2, found: grid.d });
    }
    if phi.grid() != &grid {
        return Err(MagweylError::GridMismatch("state grid differs from symbol grid".into()));
    }
    let pg = PhaseSpaceGrid::new(grid);
    let p1 = standard_symbol(&SymbolSpec::Momentum { j: 0 }, &pg)?;
    let p2 = standard_symbol(&SymbolSpec::Momentum { j: 1 }, &pg)?;
    let mo = Moyal::new(grid, Arc::new(MagneticField::constant_2d(b)))?;
    let c = mo.commutator(&p1, &p2)?;
    let cphi = mo.kernel(&c)?.apply(phi)?;
    let nn = phi.norm().powi(2);
    let expectation = phi.inner(&cphi) / nn;
    let sign = if b == 0.0 { 1.0 } else { (expectation.im / b).signum() };
    let target = C64::new(0.0, sign * b);
    let symbol_error = c.values().iter().fold(0.0_f64, |m, v| m.max((v - target).norm()));
    let operator_residual =
        cphi.values().iter().zip(phi.values()).map(|(a, v)| (a - target * v).norm_sqr()).sum::<f64>().sqrt()
            / nn.sqrt();
    Ok(CommutatorCheck { b, sign, expectation, symbol_error, operator_residual })
}

/// F ♯^B G in the transversal gauge of `b`.
pub fn moyal_via_kernel(f: &Symbol, g: &Symbol, b: &MagneticField) -> Result<Symbol> {
    Moyal::new(f.grid().position, Arc::new(b.clone()))?.product(f, g)
}

pub fn remainder(f: &Symbol, g: &Symbol, b: &MagneticField) -> Result<Remainder> {
    Moyal::new(f.grid().position, Arc::new(b.clone()))?.remainder(f, g)
}

pub fn trace_identity_check(phi: &Symbol, psi: &Symbol, b: &MagneticField) -> Result<TraceCheck> {
    Moyal::new(phi.grid().position, Arc::new(b.clone()))?.trace_identity_check(phi, psi)
}

pub fn cyclic_identity_check(phi: &Symbol, psi: &Symbol, chi: &Symbol, b: &MagneticField) -> Result<CyclicCheck> {
    Moyal::new(phi.grid().position, Arc::new(b.clone()))?.cyclic_identity_check(phi, psi, chi)
}

/// Lattice refinement used by [`moyal_direct`]. The phase e^{−2iσ} pairs position and
/// momentum steps with a factor 2, so the symbol's own lattice under-resolves it.
pub const DIRECT_REFINEMENT: usize = 2;

// Trigonometric interpolation along one axis of length n: samples at t0 + kΔ to t0' + jΔ/r.
fn interpolation_matrix(n: usize, r: usize, offset: f64) -> Vec<C64> {
    // offset = (t0' − t0)/Δ in units of the coarse step
    let nr = n * r;
    let mut out = vec![C64::new(0.0, 0.0); nr * n];
    let half = n / 2;
    for j in 0..nr {
        let t = offset + j as f64 / r as f64;
        for k in 0..n {
            let u = t - k as f64;
            let mut acc = C64::new(0.0, 0.0);
            for q in 0..n {
                let freq = q as f64 - half as f64;
                let w = if q == 0 && n.is_multiple_of(2) {
                    // Nyquist: cosine split keeps real data real
                    C64::new((2.0 * PI * freq * u / n as f64).cos(), 0.0)
                } else {
                    C64::from_polar(1.0, 2.0 * PI * freq * u / n as f64)
                };
                acc += w;
            }
            out[j * n + k] = acc / n as f64;
        }
    }
    out
}

// Values of `f` on the r-times finer (position, momentum) lattice, row-major in 2d axes.
fn refine(f: &Symbol, r: usize) -> Vec<C64> {
    let g = f.grid().position;
    let (n, d) = (g.n, g.d);
    let pos = interpolation_matrix(n, r, (1.0 / r as f64 - 1.0) / 2.0);
    let mom = interpolation_matrix(n, r, 0.0);
    let mut data = f.values().to_vec();
    let mut shape = vec![n; 2 * d];
    for axis in 0..2 * d {
        let m = if axis < d { &pos } else { &mom };
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut next = vec![C64::new(0.0, 0.0); outer * n * r * inner];
        for o in 0..outer {
            for j in 0..n * r {
                for k in 0..n {
                    let w = m[j * n + k];
                    let src = (o * n + k) * inner;
                    let dst = (o * n * r + j) * inner;
                    for i in 0..inner {
                        next[dst + i] += w * data[src + i];
                    }
                }
            }
        }
        shape[axis] = n * r;
        data = next;
    }
    data
}

/// (F ♯^B G)(X) by direct quadrature of
/// π^{−2d} ∫∫ e^{−2iσ(Y,Z)} ω_x^B(y, z) F(X − Y) G(X − Z) dY dZ.
///
/// X − Y and X − Z run over the symbol lattice refined [`DIRECT_REFINEMENT`] times
/// (trigonometric interpolation). The ξ sums factor out, so the evaluated terms number
/// 2N³ + N² for N refined nodes per phase-space half; that count is what the cost guard limits.
pub fn moyal_direct(f: &Symbol, g: &Symbol, b: &MagneticField, x: &[f64], xi: &[f64]) -> Result<C64> {
    check_pair(f, g)?;
    let coarse = f.grid().position;
    let d = coarse.d;
    if x.len() != d || xi.len() != d || b.dim() != d {
        return Err(MagweylError::DimensionMismatch { expected: d, found: x.len().max(xi.len()) });
    }
    let r = DIRECT_REFINEMENT;
    let fine = BoxGrid::new(d, coarse.half_width, coarse.n * r)?;
    let m = fine.len();
    let terms = 2 * (m as u128).pow(3) + (m as u128).pow(2);
    if terms > DIRECT_COST_LIMIT {
        return Err(MagweylError::CostGuard { terms, limit: DIRECT_COST_LIMIT });
    }
    let fv = refine(f, r);
    let gv = refine(g, r);
    let dxi = coarse.dual_spacing() / r as f64;
    let moms: Vec<Vec<f64>> = (0..m)
        .map(|k| fine.unflatten(k).iter().map(|&l| (l as f64 - (coarse.n * r / 2) as f64) * dxi).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    // Y = X − (y', η'), Z = X − (z', ζ'):
    // σ(Y, Z) = ⟨ξ − η', x − z'⟩ − ⟨ξ − ζ', x − y'⟩
    // fa[y'][z'] = Σ_η' e^{−2i⟨ξ−η', x−z'⟩} F(y', η'),  gb[z'][y'] = Σ_ζ' e^{2i⟨ξ−ζ', x−y'⟩} G(z', ζ')
    let shifted: Vec<Vec<f64>> =
        fine.points().iter().map(|p| p.iter().zip(x).map(|(a, b)| b - a).collect()).collect();
    let dmom: Vec<Vec<f64>> = moms.iter().map(|p| p.iter().zip(xi).map(|(a, b)| b - a).collect()).collect();
    let partial = |vals: &[C64], sign: f64| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); m * m];
        for c in 0..m {
            let ph: Vec<C64> = dmom.iter().map(|dm| C64::from_polar(1.0, sign * 2.0 * dot(dm, &shifted[c]))).collect();
            for a in 0..m {
                let row = &vals[a * m..(a + 1) * m];
                out[a * m + c] = row.iter().zip(&ph).map(|(v, p)| v * p).sum();
            }
        }
        out
    };
    let fa = partial(&fv, -1.0);
    let gb = partial(&gv, 1.0);
    let mut total = C64::new(0.0, 0.0);
    for yp in 0..m {
        for zp in 0..m {
            let w = omega_phase(b, x, &shifted[yp], &shifted[zp])?;
            total += w * fa[yp * m + zp] * gb[zp * m + yp];
        }
    }
    let cell = (fine.spacing() * dxi).powi(d as i32);
    Ok(total * cell * cell * PI.powi(-2 * d as i32))
}

#[cfg(test)]
mod tests;
