use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functions::{japanese, Polynomial, ScalarFunction};
use crate::error::{MagweylError, Result};
use crate::quadrature::GaussLegendre;

/// Derivative budget for fields whose derivatives are exact.
pub const ANALYTIC_MAX_ORDER: usize = 12;
/// Derivative budget for fields differentiated by nested finite differences.
pub const SMOOTH_MAX_ORDER: usize = 3;
pub const DEFAULT_LINE_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Zero,
    Constant,
    Polynomial,
    SmoothBoundedClosure,
}

/// JSON description of a magnetic field. Components are listed over index pairs
/// j < k in lexicographic order: (1,2), (1,3), …, (2,3), ….
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero { d: usize },
    Constant { d: usize, components: Vec<f64> },
    Polynomial { d: usize, components: Vec<Polynomial> },
    /// d = 2 only: B₁₂(x) = b0 + amplitude · exp(−|x − center|² / (2 width²)).
    Bump { b0: f64, amplitude: f64, center: Vec<f64>, width: f64 },
}

type SmoothEval = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Zero,
    Constant(Vec<f64>),
    Polynomial(Vec<Polynomial>),
    Smooth(SmoothEval),
}

/// A closed 2-form on ℝ^d stored by its upper-triangular components B_jk, j < k.
#[derive(Clone)]
pub struct MagneticField {
    d: usize,
    kind: FieldKind,
    repr: Repr,
    spec: Option<FieldSpec>,
}

impl fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MagneticField")
            .field("d", &self.d)
            .field("kind", &self.kind)
            .field("spec", &self.spec)
            .finish()
    }
}

fn pair_count(d: usize) -> usize {
    d * (d - 1) / 2
}

fn pair_index(d: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < d);
    // pairs (0,1),(0,2),…,(0,d−1),(1,2),…
    j * (2 * d - j - 1) / 2 + (k - j - 1)
}

impl MagneticField {
    pub fn zero(d: usize) -> Self {
        assert!(d >= 2, "magnetic fields need d >= 2");
        MagneticField { d, kind: FieldKind::Zero, repr: Repr::Zero, spec: Some(FieldSpec::Zero { d }) }
    }

    /// Constant field in d = 2 with B₁₂ = b.
    pub fn constant_2d(b: f64) -> Self {
        Self::constant(2, vec![b]).expect("one component for d = 2")
    }

    pub fn constant(d: usize, components: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(MagweylError::InvalidArgument("magnetic fields need d >= 2".into()));
        }
        if components.len() != pair_count(d) {
            return Err(MagweylError::DimensionMismatch { expected: pair_count(d), found: components.len() });
        }
        let spec = FieldSpec::Constant { d, components: components.clone() };
        if components.iter().all(|&b| b == 0.0) {
            return Ok(MagneticField { d, kind: FieldKind::Zero, repr: Repr::Zero, spec: Some(spec) });
        }
        Ok(MagneticField { d, kind: FieldKind::Constant, repr: Repr::Constant(components), spec: Some(spec) })
    }

    pub fn polynomial(d: usize, components: Vec<Polynomial>) -> Result<Self> {
        if d < 2 {
            return Err(MagweylError::InvalidArgument("magnetic fields need d >= 2".into()));
        }
        if components.len() != pair_count(d) {
            return Err(MagweylError::DimensionMismatch { expected: pair_count(d), found: components.len() });
        }
        for p in &components {
            if let Some(pd) = p.dim() {
                if pd != d {
                    return Err(MagweylError::DimensionMismatch { expected: d, found: pd });
                }
            }
        }
        let spec = FieldSpec::Polynomial { d, components: components.clone() };
        Ok(MagneticField { d, kind: FieldKind::Polynomial, repr: Repr::Polynomial(components), spec: Some(spec) })
    }

    /// Smooth bounded field from a closure writing the upper-triangular components.
    pub fn smooth<F>(d: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(d >= 2, "magnetic fields need d >= 2");
        MagneticField { d, kind: FieldKind::SmoothBoundedClosure, repr: Repr::Smooth(Arc::new(f)), spec: None }
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        match spec {
            FieldSpec::Zero { d } => {
                if *d < 2 {
                    return Err(MagweylError::InvalidArgument("magnetic fields need d >= 2".into()));
                }
                Ok(Self::zero(*d))
            }
            FieldSpec::Constant { d, components } => Self::constant(*d, components.clone()),
            FieldSpec::Polynomial { d, components } => Self::polynomial(*d, components.clone()),
            FieldSpec::Bump { b0, amplitude, center, width } => {
                if center.len() != 2 {
                    return Err(MagweylError::DimensionMismatch { expected: 2, found: center.len() });
                }
                if *width <= 0.0 {
                    return Err(MagweylError::InvalidArgument("bump width must be positive".into()));
                }
                let (b0, amp, c, w2) = (*b0, *amplitude, center.clone(), 2.0 * width * width);
                let mut field = Self::smooth(2, move |x, out| {
                    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                    out[0] = b0 + amp * (-r2 / w2).exp();
                });
                field.spec = Some(spec.clone());
                Ok(field)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn spec(&self) -> Option<&FieldSpec> {
        self.spec.as_ref()
    }

    pub fn max_derivative_order(&self) -> usize {
        match self.kind {
            FieldKind::SmoothBoundedClosure => SMOOTH_MAX_ORDER,
            _ => ANALYTIC_MAX_ORDER,
        }
    }

    /// Constant components, if the field is zero or constant.
    pub fn constant_components(&self) -> Option<Vec<f64>> {
        match &self.repr {
            Repr::Zero => Some(vec![0.0; pair_count(self.d)]),
            Repr::Constant(c) => Some(c.clone()),
            _ => None,
        }
    }

    fn upper(&self, x: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            Repr::Constant(c) => out.copy_from_slice(c),
            Repr::Polynomial(ps) => {
                for (o, p) in out.iter_mut().zip(ps) {
                    *o = p.eval(x);
                }
            }
            Repr::Smooth(f) => f(x, out),
        }
    }

    /// B_jk(x) with the antisymmetric extension to all index pairs.
    pub fn component(&self, j: usize, k: usize, x: &[f64]) -> f64 {
        self.matrix(x)[j * self.d + k]
    }

    /// Row-major antisymmetric d×d matrix B(x).
    pub fn matrix(&self, x: &[f64]) -> Vec<f64> {
        let mut up = vec![0.0; pair_count(self.d)];
        self.upper(x, &mut up);
        self.expand(&up)
    }

    fn expand(&self, up: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut m = vec![0.0; d * d];
        for j in 0..d {
            for k in (j + 1)..d {
                let v = up[pair_index(d, j, k)];
                m[j * d + k] = v;
                m[k * d + j] = -v;
            }
        }
        m
    }

    /// Row-major antisymmetric matrix of ∂^α B_jk(x).
    pub fn derivative_matrix(&self, alpha: &[usize], x: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.d || x.len() != self.d {
            return Err(MagweylError::DimensionMismatch { expected: self.d, found: alpha.len().min(x.len()) });
        }
        let order: usize = alpha.iter().sum();
        if order > self.max_derivative_order() {
            return Err(MagweylError::DerivativeOrder { requested: order, max: self.max_derivative_order() });
        }
        if order == 0 {
            return Ok(self.matrix(x));
        }
        let np = pair_count(self.d);
        let up = match &self.repr {
            Repr::Zero | Repr::Constant(_) => vec![0.0; np],
            Repr::Polynomial(ps) => ps.iter().map(|p| p.derivative(alpha).eval(x)).collect(),
            Repr::Smooth(f) => {
                let mut out = vec![0.0; np];
                let step = 1e-3 * japanese(x);
                let mut alpha = alpha.to_vec();
                let mut buf = vec![0.0; np];
                let mut pt = x.to_vec();
                fd_derivative(f.as_ref(), &mut alpha, &mut pt, step, 1.0, &mut out, &mut buf);
                out
            }
        };
        Ok(self.expand(&up))
    }

    pub fn derivative(&self, j: usize, k: usize, alpha: &[usize], x: &[f64]) -> Result<f64> {
        Ok(self.derivative_matrix(alpha, x)?[j * self.d + k])
    }

    /// max over sample points of the cyclic sum ∂_i B_jk + ∂_j B_ki + ∂_k B_ij.
    pub fn closedness_residual(&self, points: &[Vec<f64>]) -> Result<f64> {
        let d = self.d;
        let mut worst: f64 = 0.0;
        if d < 3 {
            return Ok(0.0);
        }
        for x in points {
            let grads: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    let mut a = vec![0; d];
                    a[i] = 1;
                    self.derivative_matrix(&a, x)
                })
                .collect::<Result<_>>()?;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let s = grads[i][j * d + k] + grads[j][k * d + i] + grads[k][i * d + j];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        match &self.spec {
            Some(s) => serde_json::to_string(s).unwrap_or_default().hash(&mut h),
            None => {
                // closure fields: hash samples at a few fixed points
                let mut up = vec![0.0; pair_count(self.d)];
                for k in 0..7 {
                    let x: Vec<f64> = (0..self.d).map(|i| (k as f64 * 1.37 + i as f64 * 0.61).sin() * 3.0).collect();
                    self.upper(&x, &mut up);
                    for v in &up {
                        v.to_bits().hash(&mut h);
                    }
                }
            }
        }
        h.finish()
    }
}

// 4th-order central differences, applied one axis at a time.
fn fd_derivative(
    f: &(dyn Fn(&[f64], &mut [f64]) + Send + Sync),
    alpha: &mut [usize],
    pt: &mut [f64],
    step: f64,
    weight: f64,
    out: &mut [f64],
    buf: &mut [f64],
) {
    match alpha.iter().position(|&a| a > 0) {
        None => {
            f(pt, buf);
            for (o, b) in out.iter_mut().zip(buf.iter()) {
                *o += weight * b;
            }
        }
        Some(i) => {
            alpha[i] -= 1;
            let x0 = pt[i];
            for (off, c) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
                pt[i] = x0 + off * step;
                fd_derivative(f, alpha, pt, step, weight * c / (12.0 * step), out, buf);
            }
            pt[i] = x0;
            alpha[i] += 1;
        }
    }
}

/// Gauge choice: the transversal potential, optionally shifted by df.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "gauge", rename_all = "snake_case")]
pub enum GaugeSpec {
    #[default]
    Transversal,
    TransversalPlusDf { f: ScalarFunction },
}

/// Field plus gauge, the JSON object accepted by configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    #[serde(flatten)]
    pub field: FieldSpec,
    #[serde(default)]
    pub gauge: Option<ScalarFunction>,
}

impl FieldConfig {
    pub fn gauge_spec(&self) -> GaugeSpec {
        match &self.gauge {
            None | Some(ScalarFunction::Zero) => GaugeSpec::Transversal,
            Some(f) => GaugeSpec::TransversalPlusDf { f: f.clone() },
        }
    }

    pub fn build(&self) -> Result<VectorPotential> {
        let field = Arc::new(MagneticField::from_spec(&self.field)?);
        Ok(VectorPotential::new(field, self.gauge_spec()))
    }
}

/// A 1-form A with dA = B: the transversal gauge of `field`, plus df when requested.
#[derive(Debug, Clone)]
pub struct VectorPotential {
    field: Arc<MagneticField>,
    gauge: GaugeSpec,
    line: GaussLegendre,
}

impl VectorPotential {
    pub fn new(field: Arc<MagneticField>, gauge: GaugeSpec) -> Self {
        VectorPotential { field, gauge, line: GaussLegendre::new(DEFAULT_LINE_ORDER) }
    }

    pub fn transversal(field: Arc<MagneticField>) -> Self {
        Self::new(field, GaugeSpec::Transversal)
    }

    /// The same field in the gauge A + df.
    pub fn with_gauge_function(&self, f: ScalarFunction) -> Self {
        let gauge = match (&self.gauge, f) {
            (_, ScalarFunction::Zero) => self.gauge.clone(),
            (GaugeSpec::Transversal, f) => GaugeSpec::TransversalPlusDf { f },
            (GaugeSpec::TransversalPlusDf { f: g }, f) => {
                GaugeSpec::TransversalPlusDf { f: sum_scalar(g.clone(), f) }
            }
        };
        VectorPotential { field: self.field.clone(), gauge, line: self.line.clone() }
    }

    pub fn field(&self) -> &Arc<MagneticField> {
        &self.field
    }

    pub fn gauge(&self) -> &GaugeSpec {
        &self.gauge
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.field.fingerprint().hash(&mut h);
        serde_json::to_string(&self.gauge).unwrap_or_default().hash(&mut h);
        h.finish()
    }

    /// Transversal part: A_j(x) = −Σ_k ∫₀¹ B_jk(sx) s x_k ds.
    pub fn transversal_part(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut a = vec![0.0; d];
        match self.field.kind() {
            FieldKind::Zero => {}
            FieldKind::Constant => {
                let b = self.field.matrix(x);
                for j in 0..d {
                    a[j] = -0.5 * (0..d).map(|k| b[j * d + k] * x[k]).sum::<f64>();
                }
            }
            _ => {
                let mut sx = vec![0.0; d];
                for (&s, &w) in self.line.nodes.iter().zip(&self.line.weights) {
                    for (o, xi) in sx.iter_mut().zip(x) {
                        *o = s * xi;
                    }
                    let b = self.field.matrix(&sx);
                    for j in 0..d {
                        let bx: f64 = (0..d).map(|k| b[j * d + k] * x[k]).sum();
                        a[j] -= w * s * bx;
                    }
                }
            }
        }
        a
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut a = self.transversal_part(x);
        if let GaugeSpec::TransversalPlusDf { f } = &self.gauge {
            for (ai, gi) in a.iter_mut().zip(f.gradient(x)) {
                *ai += gi;
            }
        }
        a
    }

    /// Row-major Jacobian J[i][j] = ∂_i A_j(x).
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut jac = vec![0.0; d * d];
        if self.field.kind() != FieldKind::Zero {
            let mut sx = vec![0.0; d];
            for (&s, &w) in self.line.nodes.iter().zip(&self.line.weights) {
                for (o, xi) in sx.iter_mut().zip(x) {
                    *o = s * xi;
                }
                let b = self.field.matrix(&sx);
                for i in 0..d {
                    let mut e = vec![0; d];
                    e[i] = 1;
                    let db = self.field.derivative_matrix(&e, &sx)?;
                    for j in 0..d {
                        let dbx: f64 = (0..d).map(|k| db[j * d + k] * x[k]).sum();
                        jac[i * d + j] -= w * (s * s * dbx + s * b[j * d + i]);
                    }
                }
            }
        }
        if let GaugeSpec::TransversalPlusDf { f } = &self.gauge {
            for (j, h) in jac.iter_mut().zip(f.hessian(x)) {
                *j += h;
            }
        }
        Ok(jac)
    }

    /// Γ^A(x, y) along the straight segment, no argument checks. The transversal part
    /// uses the midpoint rule for constant fields (exact) and Gauss–Legendre otherwise;
    /// the df part contributes f(y) − f(x).
    pub fn circulation_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let dir: Vec<f64> = (0..d).map(|i| y[i] - x[i]).collect();
        let transversal = match self.field.kind() {
            FieldKind::Zero => 0.0,
            FieldKind::Constant => {
                let mid: Vec<f64> = (0..d).map(|i| 0.5 * (x[i] + y[i])).collect();
                let a = self.transversal_part(&mid);
                a.iter().zip(&dir).map(|(ai, di)| ai * di).sum()
            }
            _ => {
                let mut p = vec![0.0; d];
                let mut acc = 0.0;
                for (&t, &w) in self.line.nodes.iter().zip(&self.line.weights) {
                    for i in 0..d {
                        p[i] = x[i] + t * dir[i];
                    }
                    let a = self.transversal_part(&p);
                    acc += w * a.iter().zip(&dir).map(|(ai, di)| ai * di).sum::<f64>();
                }
                acc
            }
        };
        match &self.gauge {
            GaugeSpec::Transversal => transversal,
            GaugeSpec::TransversalPlusDf { f } => transversal + f.value(y) - f.value(x),
        }
    }

    /// Γ^A(x, y) by Gauss–Legendre applied to the full potential A (including ∇f).
    pub fn circulation_quadrature(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let dir: Vec<f64> = (0..d).map(|i| y[i] - x[i]).collect();
        let mut p = vec![0.0; d];
        let mut acc = 0.0;
        for (&t, &w) in self.line.nodes.iter().zip(&self.line.weights) {
            for i in 0..d {
                p[i] = x[i] + t * dir[i];
            }
            let a = self.eval(&p);
            acc += w * a.iter().zip(&dir).map(|(ai, di)| ai * di).sum::<f64>();
        }
        acc
    }
}

fn sum_scalar(a: ScalarFunction, b: ScalarFunction) -> ScalarFunction {
    match (a, b) {
        (ScalarFunction::Zero, f) | (f, ScalarFunction::Zero) => f,
        (ScalarFunction::Sum { mut terms }, f) => {
            terms.push(f);
            ScalarFunction::Sum { terms }
        }
        (a, b) => ScalarFunction::Sum { terms: vec![a, b] },
    }
}
