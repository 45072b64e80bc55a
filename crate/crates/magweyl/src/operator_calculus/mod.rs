//! Square-root recursion and the semiboundedness certificate, operator-norm bounds
//! for order-zero symbols, resolvents by Neumann series and magnetic Sobolev norms.
//!
//! Symbol norms are operator norms of the quantizations, estimated by power iteration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MagweylError, Result};
use crate::field_geometry::{field_weight, VectorPotential};
use crate::linalg::{hermitian_deviation, ls_slope, hermitian_eigen, hermitian_eigenvalues, identity, inverse, matmul, op_norm, CMat, C64};
use crate::moyal_product::Moyal;
use crate::quantization::Quantizer;
use crate::symbol_space::{
    ellipticity_margin, nu, standard_symbol, write_symbol, BoxGrid, PhaseSpaceGrid, StateVector, Symbol, SymbolSpec,
};

/// Relative tolerance for "the symbol is real".
pub const REAL_TOL: f64 = 1e-10;
/// Upper limit of the shift search in [`resolvent`].
pub const MAX_DOUBLINGS: usize = 60;
/// Upper limit of Neumann terms in [`resolvent_at`].
pub const MAX_NEUMANN_TERMS: usize = 400;
/// δ = DELTA_FRACTION · M_F in the norm bound of [`cv_norm_property`].
pub const DELTA_FRACTION: f64 = 1e-6;
/// Largest tolerated growth of the norm/bound ratio between grids.
pub const CV_GROWTH_LIMIT: f64 = 1.25;

/// n_p = [p] + 1.
pub fn n_p(p: f64) -> usize {
    p.max(0.0).floor() as usize + 1
}

fn check_real(f: &Symbol) -> Result<()> {
    let im = f.max_imag();
    if im > REAL_TOL * f.sup_norm().max(1.0) {
        return Err(MagweylError::InvalidArgument(format!("symbol is not real (max imaginary part {im:e})")));
    }
    Ok(())
}

fn check_elliptic(f: &Symbol) -> Result<()> {
    let p = f.order();
    if p > 0.0 {
        let r = 0.5 * f.grid().momentum_extent();
        let margin = ellipticity_margin(f, p, r)?;
        if margin <= 0.0 || !margin.is_finite() {
            return Err(MagweylError::NotElliptic { margin });
        }
    }
    Ok(())
}

/// F = (ΣG_j) ♯ (ΣG_j) + X with G₀ = √F and G_k = ½G₀⁻¹X_k.
#[derive(Debug, Clone)]
pub struct SqrtDecomposition {
    /// G₀, …, G_{n_p}
    pub factors: Vec<Symbol>,
    /// X_1, …, X_{n_p+1}; X_k = F − (Σ_{j<k}G_j)♯(Σ_{j<k}G_j)
    pub remainders: Vec<Symbol>,
    /// ‖Op(X_k)‖
    pub remainder_norms: Vec<f64>,
    /// ν^{p−k}_{0,0}(X_k)
    pub remainder_seminorms: Vec<f64>,
    pub n_p: usize,
    pub a_f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqrtSummary {
    pub n_p: usize,
    pub a_f: f64,
    pub factor_orders: Vec<f64>,
    pub remainder_norms: Vec<f64>,
    pub remainder_seminorms: Vec<f64>,
}

impl SqrtDecomposition {
    /// The final remainder X.
    pub fn remainder(&self) -> &Symbol {
        self.remainders.last().expect("at least one remainder")
    }

    pub fn remainder_norm(&self) -> f64 {
        *self.remainder_norms.last().expect("at least one remainder")
    }

    /// G = Σ G_j.
    pub fn root(&self) -> Symbol {
        let mut g = self.factors[0].clone();
        for f in &self.factors[1..] {
            g = &g + f;
        }
        g.with_order(self.factors[0].order())
    }

    pub fn summary(&self) -> SqrtSummary {
        SqrtSummary {
            n_p: self.n_p,
            a_f: self.a_f,
            factor_orders: self.factors.iter().map(|f| f.order()).collect(),
            remainder_norms: self.remainder_norms.clone(),
            remainder_seminorms: self.remainder_seminorms.clone(),
        }
    }

    /// `<dir>/sqrt.json` plus `G_k` and `X_k` symbol files.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("sqrt.json"), serde_json::to_string_pretty(&self.summary())?)?;
        for (k, g) in self.factors.iter().enumerate() {
            write_symbol(&dir.join(format!("G_{k}")), g)?;
        }
        for (k, x) in self.remainders.iter().enumerate() {
            write_symbol(&dir.join(format!("X_{}", k + 1)), x)?;
        }
        Ok(())
    }
}

pub fn sqrt_recursion(q: &Quantizer, f: &Symbol, n_p: usize, a_f: f64) -> Result<SqrtDecomposition> {
    check_real(f)?;
    let min = f.min_real();
    if a_f <= 0.0 || min < a_f {
        return Err(MagweylError::NotBoundedBelow { bound: a_f, min });
    }
    check_elliptic(f)?;
    let p = f.order();
    let mo = Moyal::from_quantizer(q.clone());
    let g0 = f.map(|z| C64::new(z.re.sqrt(), 0.0)).with_order(p / 2.0).with_provenance("sqrt G_0");
    let g0_inv = g0.map(|z| z.inv()).with_order(-p / 2.0);
    let mut sum = g0.clone();
    let mut factors = vec![g0];
    let (mut remainders, mut remainder_norms, mut remainder_seminorms) = (Vec::new(), Vec::new(), Vec::new());
    for k in 1..=n_p + 1 {
        let order = p - k as f64;
        let x = (f - &mo.product(&sum, &sum)?).with_order(order).with_provenance(format!("sqrt X_{k}"));
        remainder_norms.push(op_norm(&q.operator(&x)?));
        remainder_seminorms.push(nu(&x, order, 0, 0)?);
        if k <= n_p {
            let g = (&g0_inv * &x).scale(C64::new(0.5, 0.0)).with_order(p / 2.0 - k as f64);
            sum = &sum + &g;
            factors.push(g.with_provenance(format!("sqrt G_{k}")));
        }
        remainders.push(x);
    }
    Ok(SqrtDecomposition { factors, remainders, remainder_norms, remainder_seminorms, n_p, a_f })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiboundCertificate {
    /// ℓ = −‖Op(X_{n_p})‖
    pub lower_bound: f64,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub consistent: bool,
}

/// ℓ = −‖Op(X)‖ from the square-root recursion with n_p = [p] + 1, checked against
/// the smallest eigenvalue of the dense Hermitian Op^A(F).
pub fn semibound_certificate(q: &Quantizer, f: &Symbol, a_f: f64) -> Result<SemiboundCertificate> {
    let dec = sqrt_recursion(q, f, n_p(f.order()), a_f)?;
    let m = q.operator(f)?;
    let min_eigenvalue = hermitian_eigenvalues(&m)[0];
    let lower_bound = -dec.remainder_norm();
    let tolerance = 1e-8 * min_eigenvalue.abs().max(1.0);
    Ok(SemiboundCertificate { lower_bound, min_eigenvalue, tolerance, consistent: min_eigenvalue >= lower_bound - tolerance })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvEntry {
    pub label: String,
    pub n: usize,
    pub norm: f64,
    /// M_F = sup |F|
    pub sup: f64,
    pub seminorm: f64,
    pub weight: f64,
    /// √((M_F + δ)² + weight · seminorm²)
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub entries: Vec<CvEntry>,
    pub max_ratio: f64,
    /// largest ratio(n_{i+1}) / ratio(n_i) over family members
    pub max_growth: f64,
    pub passed: bool,
}

/// max over |a| ≤ 1, |α| ≤ 1 of ν^{−|α|}_{a,α}(F).
fn order_zero_seminorm(f: &Symbol) -> Result<f64> {
    let mut s: f64 = 0.0;
    for m1 in 0..=1 {
        for m2 in 0..=1 {
            s = s.max(nu(f, -(m2 as f64), m1, m2)?);
        }
    }
    Ok(s)
}

/// 𝔴_{2d̃}(B)·𝔴_{2d̃+2}(B) with d̃ = ⌈d/2⌉.
fn cv_weight(a: &VectorPotential) -> Result<f64> {
    let field = a.field();
    let dt = field.dim().div_ceil(2);
    let top = (2 * dt + 2).min(field.max_derivative_order());
    let lo = (2 * dt).min(top);
    Ok(field_weight(field, lo)?.weight * field_weight(field, top)?.weight)
}

/// ‖Op^A(F_λ)‖ against the order-zero bound for every family member on every grid.
pub fn cv_norm_property(family: &[SymbolSpec], a: &VectorPotential, grids: &[BoxGrid]) -> Result<CvReport> {
    let weight = cv_weight(a)?;
    let mut entries = Vec::new();
    for g in grids {
        let q = Quantizer::new(*g, a.clone())?;
        for spec in family {
            let f = standard_symbol(spec, &PhaseSpaceGrid::new(*g))?;
            let norm = op_norm(&q.operator(&f)?);
            let sup = f.sup_norm();
            let seminorm = order_zero_seminorm(&f)?;
            let delta = DELTA_FRACTION * sup;
            let bound = ((sup + delta).powi(2) + weight * seminorm * seminorm).sqrt();
            let ratio = if bound > 0.0 { norm / bound } else { 0.0 };
            entries.push(CvEntry { label: format!("{spec:?}"), n: g.n, norm, sup, seminorm, weight, bound, ratio });
        }
    }
    let k = family.len();
    let mut max_growth: f64 = 0.0;
    for i in 0..k {
        for w in entries.iter().skip(i).step_by(k.max(1)).collect::<Vec<_>>().windows(2) {
            if w[0].ratio > 0.0 {
                max_growth = max_growth.max(w[1].ratio / w[0].ratio);
            }
        }
    }
    let max_ratio = entries.iter().fold(0.0_f64, |m, e| m.max(e.ratio));
    let passed = max_ratio.is_finite() && max_growth <= CV_GROWTH_LIMIT;
    Ok(CvReport { entries, max_ratio, max_growth, passed })
}

/// Operator of the pointwise inverse (F + a)⁻¹ and the defect R = Op(F + a)Op((F + a)⁻¹) − 1.
struct Shifted {
    fa: CMat,
    inv: CMat,
    defect: CMat,
}

fn shifted(q: &Quantizer, m: &CMat, f: &Symbol, a: f64) -> Result<Shifted> {
    let dim = m.nrows();
    let fa = m + identity(dim) * C64::new(a, 0.0);
    let inv = q.operator(&f.map(|z| (z + a).inv()))?;
    let defect = matmul(&fa, &inv) - identity(dim);
    Ok(Shifted { fa, inv, defect })
}

/// ‖Op(F_a ♯ F_a⁻¹ − 1)‖ at one shift.
pub fn shift_defect(q: &Quantizer, f: &Symbol, a: f64) -> Result<f64> {
    let m = q.operator(f)?;
    Ok(op_norm(&shifted(q, &m, f, a)?.defect))
}

#[derive(Debug, Clone)]
pub struct ResolventResult {
    pub shift: f64,
    /// shifts visited by the doubling search and their defect norms
    pub shifts_tried: Vec<f64>,
    pub shift_defects: Vec<f64>,
    /// r̃ = F_a ♯ F_a⁻¹ − 1
    pub defect: Symbol,
    pub defect_norm: f64,
    /// 𝔷 = 1 + Σ (−r̃)^{♯n}
    pub neumann: Symbol,
    /// 𝔯 = F_a⁻¹ ♯ 𝔷
    pub inverse: Symbol,
    /// ‖Op((F + a) ♯ 𝔯_N − 1)‖ = ‖Op(r̃)^{N+1}‖ after N terms
    pub iteration_norms: Vec<f64>,
    pub terms: usize,
    pub right_residual: f64,
    pub left_residual: f64,
    /// ‖Op(𝔯) − (Op(F) + a)⁻¹‖ against a dense inverse
    pub dense_inverse_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventSummary {
    pub shift: f64,
    pub shifts_tried: Vec<f64>,
    pub shift_defects: Vec<f64>,
    pub defect_norm: f64,
    pub iteration_norms: Vec<f64>,
    pub terms: usize,
    pub right_residual: f64,
    pub left_residual: f64,
    pub dense_inverse_error: f64,
}

impl ResolventResult {
    pub fn summary(&self) -> ResolventSummary {
        ResolventSummary {
            shift: self.shift,
            shifts_tried: self.shifts_tried.clone(),
            shift_defects: self.shift_defects.clone(),
            defect_norm: self.defect_norm,
            iteration_norms: self.iteration_norms.clone(),
            terms: self.terms,
            right_residual: self.right_residual,
            left_residual: self.left_residual,
            dense_inverse_error: self.dense_inverse_error,
        }
    }

    /// `<dir>/resolvent.json` plus the defect, Neumann and inverse symbols.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("resolvent.json"), serde_json::to_string_pretty(&self.summary())?)?;
        write_symbol(&dir.join("defect"), &self.defect)?;
        write_symbol(&dir.join("neumann"), &self.neumann)?;
        write_symbol(&dir.join("inverse"), &self.inverse)?;
        Ok(())
    }
}

fn check_resolvent_input(f: &Symbol) -> Result<()> {
    check_real(f)?;
    check_elliptic(f)
}

/// Shift search from a₀ = 2(1 + |min F|), doubling until ‖Op(r̃)‖ ≤ 1/2, then [`resolvent_at`].
pub fn resolvent(q: &Quantizer, f: &Symbol, tol: f64) -> Result<ResolventResult> {
    check_resolvent_input(f)?;
    let m = q.operator(f)?;
    let mut a = 2.0 * (1.0 + f.min_real().abs());
    let (mut tried, mut defects) = (Vec::new(), Vec::new());
    for _ in 0..=MAX_DOUBLINGS {
        let d = op_norm(&shifted(q, &m, f, a)?.defect);
        tried.push(a);
        defects.push(d);
        if d <= 0.5 {
            let mut r = resolvent_with(q, &m, f, a, tol)?;
            r.shifts_tried = tried;
            r.shift_defects = defects;
            return Ok(r);
        }
        a *= 2.0;
    }
    Err(MagweylError::ShiftSearchExhausted { doublings: MAX_DOUBLINGS, defect: *defects.last().unwrap() })
}

/// Neumann construction at a fixed shift a; rejects shifts with ‖Op(r̃)‖ > 1/2.
pub fn resolvent_at(q: &Quantizer, f: &Symbol, a: f64, tol: f64) -> Result<ResolventResult> {
    check_resolvent_input(f)?;
    let m = q.operator(f)?;
    resolvent_with(q, &m, f, a, tol)
}

fn resolvent_with(q: &Quantizer, m: &CMat, f: &Symbol, a: f64, tol: f64) -> Result<ResolventResult> {
    if tol <= 0.0 {
        return Err(MagweylError::InvalidArgument("tolerance must be positive".into()));
    }
    if f.min_real() + a <= 0.0 {
        return Err(MagweylError::NotBoundedBelow { bound: -a, min: f.min_real() });
    }
    let s = shifted(q, m, f, a)?;
    let d = op_norm(&s.defect);
    if d > 0.5 {
        return Err(MagweylError::ShiftRejected { shift: a, defect: d });
    }
    let dim = m.nrows();
    let neg = -&s.defect;
    let mut z = identity(dim);
    let mut power = identity(dim);
    let mut iteration_norms = vec![d];
    let mut terms = 0;
    while terms < MAX_NEUMANN_TERMS {
        let tail = d.powi(terms as i32 + 1) / (1.0 - d);
        if tail < tol || d == 0.0 {
            let r = matmul(&s.inv, &z);
            let left = op_norm(&(matmul(&r, &s.fa) - identity(dim)));
            if (*iteration_norms.last().unwrap() <= tol && left <= tol) || d == 0.0 {
                break;
            }
        }
        power = matmul(&power, &neg);
        z += &power;
        terms += 1;
        iteration_norms.push(op_norm(&matmul(&power, &neg)));
    }
    let r = matmul(&s.inv, &z);
    let left_residual = op_norm(&(matmul(&r, &s.fa) - identity(dim)));
    let right_residual = op_norm(&(matmul(&s.fa, &r) - identity(dim)));
    let dense = inverse(&s.fa).ok_or_else(|| MagweylError::InvalidArgument("Op(F) + a is singular".into()))?;
    let dense_inverse_error = op_norm(&(&r - dense));
    let p = f.order();
    Ok(ResolventResult {
        shift: a,
        shifts_tried: vec![a],
        shift_defects: vec![d],
        defect: q.symbol_of_operator(&s.defect, 0.0)?.with_provenance("resolvent defect"),
        defect_norm: d,
        neumann: q.symbol_of_operator(&z, 0.0)?.with_provenance("neumann series"),
        inverse: q.symbol_of_operator(&r, -p)?.with_provenance("resolvent"),
        iteration_norms,
        terms,
        right_residual,
        left_residual,
        dense_inverse_error,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectScaling {
    pub shifts: Vec<f64>,
    pub defects: Vec<f64>,
    /// least-squares slope of log defect against log a; `None` when every defect is at rounding level
    pub slope: Option<f64>,
    pub q: f64,
    /// −q/2
    pub threshold: f64,
    pub passed: bool,
}

/// Defect level below which the slope fit is skipped.
pub const DEFECT_FLOOR: f64 = 1e-12;

pub fn defect_scaling(q: &Quantizer, f: &Symbol, shifts: &[f64]) -> Result<DefectScaling> {
    if shifts.len() < 3 {
        return Err(MagweylError::TooFewSamples { needed: 3, got: shifts.len() });
    }
    check_resolvent_input(f)?;
    let m = q.operator(f)?;
    let defects = shifts
        .iter()
        .map(|&a| Ok(op_norm(&shifted(q, &m, f, a)?.defect)))
        .collect::<Result<Vec<f64>>>()?;
    let qexp = if f.order() > 0.0 { 1.0f64.min(1.0 / f.order()) } else { 1.0 };
    let threshold = -qexp / 2.0;
    let slope = if defects.iter().all(|&v| v < DEFECT_FLOOR) {
        None
    } else {
        let xs: Vec<f64> = shifts.iter().map(|a| a.ln()).collect();
        let ys: Vec<f64> = defects.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
        Some(ls_slope(&xs, &ys))
    };
    let passed = slope.is_none_or(|s| s <= threshold);
    Ok(DefectScaling { shifts: shifts.to_vec(), defects, slope, q: qexp, threshold, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventIdentity {
    /// ‖𝔯(z₁) − 𝔯(z₂) − (z₂ − z₁) 𝔯(z₁)♯𝔯(z₂)‖
    pub residual: f64,
    /// same with the product order swapped
    pub residual_swapped: f64,
}

pub fn resolvent_identity_check(q: &Quantizer, f: &Symbol, z1: f64, z2: f64, tol: f64) -> Result<ResolventIdentity> {
    let r1 = q.operator(&resolvent_at(q, f, z1, tol)?.inverse)?;
    let r2 = q.operator(&resolvent_at(q, f, z2, tol)?.inverse)?;
    let c = C64::new(z2 - z1, 0.0);
    let diff = &r1 - &r2;
    let residual = op_norm(&(&diff - matmul(&r1, &r2) * c));
    let residual_swapped = op_norm(&(&diff - matmul(&r2, &r1) * c));
    Ok(ResolventIdentity { residual, residual_swapped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfAdjointness {
    /// max |M − M†| entrywise
    pub hermitian_deviation: f64,
    /// max |Im ⟨v, M v⟩| over the eigenvectors of the Hermitian part
    pub max_imag_eigenvalue: f64,
}

/// Hermiticity of Op^A(F) for a real symbol and reality of its spectrum.
pub fn self_adjointness(q: &Quantizer, f: &Symbol) -> Result<SelfAdjointness> {
    let m = q.operator(f)?;
    let dev = hermitian_deviation(&m);
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let (_, v) = hermitian_eigen(&herm);
    let mv = matmul(&m, &v);
    let mut worst: f64 = 0.0;
    for j in 0..v.ncols() {
        worst = worst.max(v.column(j).dotc(&mv.column(j)).im.abs());
    }
    Ok(SelfAdjointness { hermitian_deviation: dev, max_imag_eigenvalue: worst })
}

/// √(‖f‖² + ‖Op^A(𝔭_s) f‖²).
pub fn sobolev_norm(f: &StateVector, s: f64, a: &VectorPotential) -> Result<f64> {
    sobolev_norm_with(&Quantizer::new(*f.grid(), a.clone())?, f, s)
}

pub fn sobolev_norm_with(q: &Quantizer, f: &StateVector, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(MagweylError::InvalidArgument(format!("Sobolev order must be nonnegative, got {s}")));
    }
    let ps = standard_symbol(&SymbolSpec::Ps { s }, &PhaseSpaceGrid::new(*q.grid()))?;
    let g = q.kernel(&ps)?.apply(f)?;
    Ok((f.norm().powi(2) + g.norm().powi(2)).sqrt())
}

#[cfg(test)]
mod tests;
