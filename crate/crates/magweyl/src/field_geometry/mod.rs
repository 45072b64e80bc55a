//! Magnetic fields, vector potentials, invariant line and triangle integrals,
//! the phase factors Λ^A and ω^B with their derivatives, and field weights.

mod field;
mod functions;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use field::{
    FieldConfig, FieldKind, FieldSpec, GaugeSpec, MagneticField, VectorPotential, ANALYTIC_MAX_ORDER,
    DEFAULT_LINE_ORDER, SMOOTH_MAX_ORDER,
};
pub use functions::{japanese, multi_indices, Monomial, Polynomial, ScalarFunction};

use crate::error::{MagweylError, Result};
use crate::linalg::ls_slope;
use crate::quadrature::SimplexRule;

pub const DEFAULT_TRIANGLE_ORDER: usize = 8;
/// Sample points per axis for μ_m estimation.
pub const WEIGHT_SAMPLES: usize = 33;
pub const WEIGHT_HALF_WIDTH: f64 = 8.0;

fn check_dim(d: usize, pts: &[&[f64]]) -> Result<()> {
    for p in pts {
        if p.len() != d {
            return Err(MagweylError::DimensionMismatch { expected: d, found: p.len() });
        }
    }
    Ok(())
}

/// A(x) in the transversal gauge of `b`.
pub fn transversal_gauge(b: &MagneticField, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(b.dim(), &[x])?;
    Ok(VectorPotential::transversal(Arc::new(b.clone())).transversal_part(x))
}

/// Γ^A(x, y), the integral of A along the segment from x to y.
pub fn circulation(a: &VectorPotential, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(a.dim(), &[x, y])?;
    Ok(a.circulation_unchecked(x, y))
}

/// Λ^A(x, y) = e^{−iΓ^A(x, y)}.
pub fn phase_lambda(a: &VectorPotential, x: &[f64], y: &[f64]) -> Result<Complex64> {
    let g = circulation(a, x, y)?;
    Ok(Complex64::from_polar(1.0, -g))
}

// Σ_{j,k} B_jk(p) u_j v_k
fn contract(bm: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let d = u.len();
    let mut acc = 0.0;
    for j in 0..d {
        for k in 0..d {
            acc += bm[j * d + k] * u[j] * v[k];
        }
    }
    acc
}

/// Φ^B(x, y, z), the flux of B through the oriented triangle ⟨x, y, z⟩.
pub fn flux_triangle(b: &MagneticField, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    check_dim(b.dim(), &[x, y, z])?;
    let d = b.dim();
    let u: Vec<f64> = (0..d).map(|i| y[i] - x[i]).collect();
    let v: Vec<f64> = (0..d).map(|i| z[i] - x[i]).collect();
    if let Some(c) = b.constant_components() {
        if c.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        return Ok(0.5 * contract(&b.matrix(x), &u, &v));
    }
    let rule = SimplexRule::new(DEFAULT_TRIANGLE_ORDER);
    let mut p = vec![0.0; d];
    let mut acc = 0.0;
    for (&(s, t), &w) in rule.points.iter().zip(&rule.weights) {
        for i in 0..d {
            p[i] = x[i] + s * u[i] + t * v[i];
        }
        acc += w * contract(&b.matrix(&p), &u, &v);
    }
    Ok(acc)
}

/// Which argument of ω_x(y, z) a derivative acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

// 4 Σ_{j≠k} ∫∫ g(p(s,t), s, t) over the simplex, p = x + (2s−1)y + (2t−1)z.
fn simplex_sum<G>(d: usize, x: &[f64], y: &[f64], z: &[f64], mut g: G) -> Result<f64>
where
    G: FnMut(&[f64], f64, f64) -> Result<f64>,
{
    let rule = SimplexRule::new(DEFAULT_TRIANGLE_ORDER);
    let mut p = vec![0.0; d];
    let mut acc = 0.0;
    for (&(s, t), &w) in rule.points.iter().zip(&rule.weights) {
        for i in 0..d {
            p[i] = x[i] + (2.0 * s - 1.0) * y[i] + (2.0 * t - 1.0) * z[i];
        }
        acc += w * g(&p, s, t)?;
    }
    Ok(4.0 * acc)
}

/// F_x^B(y, z), the flux of B through the triangle with vertices x−y−z, x+y−z, x−y+z.
pub fn flux_function(b: &MagneticField, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    check_dim(b.dim(), &[x, y, z])?;
    if let Some(c) = b.constant_components() {
        if c.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        return Ok(2.0 * contract(&b.matrix(x), y, z));
    }
    simplex_sum(b.dim(), x, y, z, |p, _, _| Ok(contract(&b.matrix(p), y, z)))
}

/// ω_x^B(y, z) = e^{−i F_x^B(y, z)}.
pub fn omega_phase(b: &MagneticField, x: &[f64], y: &[f64], z: &[f64]) -> Result<Complex64> {
    Ok(Complex64::from_polar(1.0, -flux_function(b, x, y, z)?))
}

/// ∂^γ of F_x^B(y, z) in the chosen argument.
pub fn flux_derivative(
    b: &MagneticField,
    axis: Axis,
    gamma: &[usize],
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> Result<f64> {
    let d = b.dim();
    check_dim(d, &[x, y, z])?;
    if gamma.len() != d {
        return Err(MagweylError::DimensionMismatch { expected: d, found: gamma.len() });
    }
    let order: usize = gamma.iter().sum();
    if order > b.max_derivative_order() {
        return Err(MagweylError::DerivativeOrder { requested: order, max: b.max_derivative_order() });
    }
    if order == 0 {
        return flux_function(b, x, y, z);
    }
    if b.kind() == FieldKind::Zero {
        return Ok(0.0);
    }
    match axis {
        Axis::X => {
            if b.kind() == FieldKind::Constant {
                return Ok(0.0);
            }
            simplex_sum(d, x, y, z, |p, _, _| Ok(contract(&b.derivative_matrix(gamma, p)?, y, z)))
        }
        Axis::Y | Axis::Z => {
            let m = order as i32;
            let lower: Vec<(usize, Vec<usize>)> = (0..d)
                .filter(|&j| gamma[j] > 0)
                .map(|j| {
                    let mut g = gamma.to_vec();
                    g[j] -= 1;
                    (j, g)
                })
                .collect();
            simplex_sum(d, x, y, z, |p, s, t| {
                let r = if axis == Axis::Y { 2.0 * s - 1.0 } else { 2.0 * t - 1.0 };
                let mut acc = contract(&b.derivative_matrix(gamma, p)?, y, z) * r.powi(m);
                // Leibniz terms from the linear prefactor y_j (or z_k)
                for (j, g) in &lower {
                    let bm = b.derivative_matrix(g, p)?;
                    let c = gamma[*j] as f64 * r.powi(m - 1);
                    let mut lin = 0.0;
                    for k in 0..d {
                        lin += if axis == Axis::Y { bm[*j * d + k] * z[k] } else { bm[k * d + *j] * y[k] };
                    }
                    acc += c * lin;
                }
                Ok(acc)
            })
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn sub_indices(alpha: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &a in alpha {
        let mut next = Vec::with_capacity(out.len() * (a + 1));
        for prefix in &out {
            for k in 0..=a {
                let mut p = prefix.clone();
                p.push(k);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// ∂^α ω_x^B(y, z) in the chosen argument via Faà di Bruno over ordered compositions of α.
pub fn omega_derivative(
    b: &MagneticField,
    axis: Axis,
    alpha: &[usize],
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> Result<Complex64> {
    let d = b.dim();
    check_dim(d, &[x, y, z])?;
    if alpha.len() != d {
        return Err(MagweylError::DimensionMismatch { expected: d, found: alpha.len() });
    }
    let order: usize = alpha.iter().sum();
    if order > b.max_derivative_order() {
        return Err(MagweylError::DerivativeOrder { requested: order, max: b.max_derivative_order() });
    }
    let omega = omega_phase(b, x, y, z)?;
    if order == 0 {
        return Ok(omega);
    }
    // g = −iF; table of ∂^γ g / γ! for 0 ≠ γ ≤ α
    let mut table: Vec<(Vec<usize>, Complex64)> = Vec::new();
    for g in sub_indices(alpha) {
        if g.iter().all(|&v| v == 0) {
            continue;
        }
        let df = flux_derivative(b, axis, &g, x, y, z)?;
        let gf: f64 = g.iter().map(|&v| factorial(v)).product();
        table.push((g, Complex64::new(0.0, -df / gf)));
    }
    // Σ_l (1/l!) Σ_{γ¹+…+γ^l = α} ∏ table[γ^s]
    fn rec(rest: &[usize], depth: usize, acc: Complex64, table: &[(Vec<usize>, Complex64)], out: &mut Complex64) {
        if rest.iter().all(|&v| v == 0) {
            *out += acc / factorial(depth);
            return;
        }
        for (g, v) in table {
            if g.iter().zip(rest).all(|(a, b)| a <= b) {
                let r: Vec<usize> = rest.iter().zip(g).map(|(a, b)| a - b).collect();
                rec(&r, depth + 1, acc * v, table, out);
            }
        }
    }
    let mut sum = Complex64::new(0.0, 0.0);
    rec(alpha, 0, Complex64::new(1.0, 0.0), &table, &mut sum);
    let af: f64 = alpha.iter().map(|&v| factorial(v)).product();
    Ok(omega * sum * af)
}

/// Growth estimates μ_m, ρ_m and the weight 𝔴_M of a magnetic field on a sample box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldWeightReport {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
    pub weight: f64,
    pub order: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

pub fn field_weight(b: &MagneticField, m: usize) -> Result<FieldWeightReport> {
    field_weight_on(b, m, WEIGHT_HALF_WIDTH, WEIGHT_SAMPLES)
}

pub fn field_weight_on(
    b: &MagneticField,
    m: usize,
    half_width: f64,
    points_per_axis: usize,
) -> Result<FieldWeightReport> {
    if points_per_axis == 0 {
        return Err(MagweylError::EmptySampleGrid);
    }
    if m > b.max_derivative_order() {
        return Err(MagweylError::DerivativeOrder { requested: m, max: b.max_derivative_order() });
    }
    let d = b.dim();
    let axis: Vec<f64> = if points_per_axis == 1 {
        vec![0.0]
    } else {
        (0..points_per_axis)
            .map(|k| -half_width + 2.0 * half_width * k as f64 / (points_per_axis - 1) as f64)
            .collect()
    };
    let total = points_per_axis.pow(d as u32);
    let mut mu = vec![0.0f64; m + 1];
    let constant = b.constant_components();
    for (order, slot) in mu.iter_mut().enumerate() {
        if let Some(c) = &constant {
            *slot = if order == 0 { c.iter().fold(0.0, |a, v| a.max(v.abs())) } else { 0.0 };
            continue;
        }
        let alphas = multi_indices(d, order);
        let mut x = vec![0.0; d];
        for flat in 0..total {
            let mut r = flat;
            for xi in x.iter_mut().rev() {
                *xi = axis[r % points_per_axis];
                r /= points_per_axis;
            }
            for a in &alphas {
                let dm = b.derivative_matrix(a, &x)?;
                *slot = dm.iter().fold(*slot, |acc, v| acc.max(v.abs()));
            }
        }
    }
    let rho: Vec<f64> = mu
        .iter()
        .scan(0.0f64, |s, &v| {
            *s = s.max(v);
            Some(*s)
        })
        .collect();
    let weight = weight_from_mu(&mu);
    Ok(FieldWeightReport { mu, rho, weight, order: m, half_width, points_per_axis })
}

/// max{μ₀, max over m ≤ M and compositions p₁+…+p_l = m of ∏(μ_{p_s} + μ_{p_s−1})}.
pub fn weight_from_mu(mu: &[f64]) -> f64 {
    let m = mu.len().saturating_sub(1);
    // best[k] = max over compositions of k of the product
    let mut best = vec![f64::NEG_INFINITY; m + 1];
    best[0] = 1.0;
    for k in 1..=m {
        for p in 1..=k {
            let v = best[k - p] * (mu[p] + mu[p - 1]);
            if v > best[k] {
                best[k] = v;
            }
        }
    }
    let mut w = mu.first().copied().unwrap_or(0.0);
    for &v in &best[1..] {
        w = w.max(v);
    }
    w
}

/// Exponents and derivative orders of the weighted sup in the Θ-weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaWeightSpec {
    pub n: f64,
    pub q1: f64,
    pub q2: f64,
    pub m: usize,
    pub m1: usize,
    pub m2: usize,
}

const THETA_POINTS: usize = 5;
const THETA_RADIUS: f64 = 4.0;
const THETA_GROWTH: f64 = 1.5;
const THETA_STEP: f64 = 1e-3;

fn theta_sup<T>(theta: &T, d: usize, spec: &ThetaWeightSpec, radius: f64) -> f64
where
    T: Fn(&[f64], &[f64], &[f64]) -> Complex64,
{
    let axis: Vec<f64> = (0..THETA_POINTS)
        .map(|k| -radius + 2.0 * radius * k as f64 / (THETA_POINTS - 1) as f64)
        .collect();
    let dim = 3 * d;
    let total = THETA_POINTS.pow(dim as u32);
    let mut orders: Vec<Vec<usize>> = Vec::new();
    for a in 0..=spec.m {
        for b in 0..=spec.m1 {
            for c in 0..=spec.m2 {
                for ia in multi_indices(d, a) {
                    for ib in multi_indices(d, b) {
                        for ic in multi_indices(d, c) {
                            orders.push([ia.clone(), ib.clone(), ic].concat());
                        }
                    }
                }
            }
        }
    }
    let eval = |w: &[f64]| theta(&w[..d], &w[d..2 * d], &w[2 * d..]);
    let mut best: f64 = 0.0;
    let mut w = vec![0.0; dim];
    for flat in 0..total {
        let mut r = flat;
        for wi in w.iter_mut().rev() {
            *wi = axis[r % THETA_POINTS];
            r /= THETA_POINTS;
        }
        let weight = japanese(&w[..d]).powf(-spec.n)
            * japanese(&w[d..2 * d]).powf(-spec.q1)
            * japanese(&w[2 * d..]).powf(-spec.q2);
        let mut local: f64 = 0.0;
        for o in &orders {
            let mut pt = w.clone();
            let mut o = o.clone();
            local = local.max(central_difference(&eval, &mut o, &mut pt, THETA_STEP).norm());
        }
        best = best.max(weight * local);
    }
    best
}

// nested second-order central differences
fn central_difference<E>(f: &E, order: &mut [usize], pt: &mut [f64], h: f64) -> Complex64
where
    E: Fn(&[f64]) -> Complex64,
{
    match order.iter().position(|&o| o > 0) {
        None => f(pt),
        Some(i) => {
            order[i] -= 1;
            let x0 = pt[i];
            pt[i] = x0 + h;
            let up = central_difference(f, order, pt, h);
            pt[i] = x0 - h;
            let down = central_difference(f, order, pt, h);
            pt[i] = x0;
            order[i] += 1;
            (up - down) / (2.0 * h)
        }
    }
}

/// Weighted sup of Θ(x, y, z) and its derivatives over a sample grid, or +∞ when
/// doubling the grid radius grows the sup by more than half.
pub fn theta_weight<T>(theta: T, d: usize, spec: ThetaWeightSpec) -> f64
where
    T: Fn(&[f64], &[f64], &[f64]) -> Complex64,
{
    let near = theta_sup(&theta, d, &spec, THETA_RADIUS);
    let far = theta_sup(&theta, d, &spec, 2.0 * THETA_RADIUS);
    if far > THETA_GROWTH * near.max(f64::MIN_POSITIVE) {
        f64::INFINITY
    } else {
        near.max(far)
    }
}

/// Sample points per coordinate in [`omega_scaling_degree`].
pub const SCALING_SAMPLES: usize = 5;
/// Allowed excess of the fitted degree over |α|.
pub const SCALING_SLACK: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDegree {
    pub lambdas: Vec<f64>,
    pub sups: Vec<f64>,
    /// fitted log-log slope
    pub slope: f64,
    pub order: usize,
    pub passed: bool,
}

/// Log-log slope of λ ↦ sup_{y,z ∈ [−r, r]^d} |∂^α ω_x^{λB}(y, z)| for the constant field
/// with upper components `components`; the derivative bounds predict degree ≤ |α|.
pub fn omega_scaling_degree(
    d: usize,
    components: &[f64],
    axis: Axis,
    alpha: &[usize],
    x: &[f64],
    radius: f64,
    lambdas: &[f64],
) -> Result<ScalingDegree> {
    if lambdas.len() < 2 {
        return Err(MagweylError::TooFewSamples { needed: 2, got: lambdas.len() });
    }
    if lambdas.iter().any(|&l| l <= 0.0) {
        return Err(MagweylError::InvalidArgument("scaling factors must be positive".into()));
    }
    let nodes: Vec<f64> =
        (0..SCALING_SAMPLES).map(|k| -radius + 2.0 * radius * k as f64 / (SCALING_SAMPLES - 1) as f64).collect();
    let mut points = vec![vec![]];
    for _ in 0..d {
        points = points.iter().flat_map(|p: &Vec<f64>| nodes.iter().map(move |&v| [p.as_slice(), &[v]].concat())).collect();
    }
    let mut sups = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let b = MagneticField::constant(d, components.iter().map(|c| c * lam).collect())?;
        let mut sup: f64 = 0.0;
        for y in &points {
            for z in &points {
                sup = sup.max(omega_derivative(&b, axis, alpha, x, y, z)?.norm());
            }
        }
        sups.push(sup);
    }
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = sups.iter().map(|s| s.max(f64::MIN_POSITIVE).ln()).collect();
    let slope = ls_slope(&xs, &ys);
    let order = alpha.iter().sum();
    Ok(ScalingDegree { lambdas: lambdas.to_vec(), sups, slope, order, passed: slope <= order as f64 + SCALING_SLACK })
}
