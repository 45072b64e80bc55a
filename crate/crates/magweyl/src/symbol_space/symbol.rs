use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::PhaseSpaceGrid;
use crate::error::{MagweylError, Result};
use crate::field_geometry::japanese;
use crate::linalg::C64;

/// Complex values on the phase-space grid, laid out position-major:
/// index = pos_flat · n^d + mom_flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    grid: PhaseSpaceGrid,
    values: Vec<C64>,
    order: f64,
    provenance: String,
}

impl Symbol {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<C64>, order: f64, provenance: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(MagweylError::GridMismatch(format!(
                "symbol has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Symbol { grid, values, order, provenance: provenance.into() })
    }

    /// Evaluate `f(x, ξ)` at every phase-space node.
    pub fn from_fn<F>(grid: PhaseSpaceGrid, order: f64, provenance: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> C64 + Sync,
    {
        let pg = grid.position;
        let m = pg.len();
        let points = pg.points();
        let momenta: Vec<Vec<f64>> = (0..m).map(|k| pg.momentum(k)).collect();
        let mut values = vec![C64::new(0.0, 0.0); grid.len()];
        values.par_chunks_mut(m).enumerate().for_each(|(p, row)| {
            for (q, v) in row.iter_mut().enumerate() {
                *v = f(&points[p], &momenta[q]);
            }
        });
        Symbol { grid, values, order, provenance: provenance.into() }
    }

    pub fn constant(grid: PhaseSpaceGrid, c: C64) -> Self {
        Symbol { grid, values: vec![c; grid.len()], order: 0.0, provenance: "constant".into() }
    }

    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        Self::constant(grid, C64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    pub fn at(&self, pos: usize, mom: usize) -> C64 {
        self.values[self.grid.index(pos, mom)]
    }

    fn check_same_grid(&self, other: &Symbol) {
        assert_eq!(self.grid, other.grid, "symbols live on different grids");
    }

    pub fn map<F: Fn(C64) -> C64 + Sync>(&self, f: F) -> Symbol {
        Symbol {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
            order: self.order,
            provenance: "computed".into(),
        }
    }

    pub fn conj(&self) -> Symbol {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: C64) -> Symbol {
        self.map(|v| v * c)
    }

    /// Adds c to every value.
    pub fn shift(&self, c: C64) -> Symbol {
        self.map(|v| v + c)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Symbol) -> f64 {
        self.check_same_grid(other);
        self.values.iter().zip(&other.values).fold(0.0, |a, (u, v)| a.max((u - v).norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.im.abs()))
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, v| a.min(v.re))
    }

    /// Σ F · h_Ξ with h_Ξ the phase-space cell volume.
    pub fn integral(&self) -> C64 {
        let s: C64 = self.values.iter().sum();
        s * self.grid.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn zip_with<F: Fn(C64, C64) -> C64 + Sync>(&self, other: &Symbol, order: f64, f: F) -> Symbol {
        self.check_same_grid(other);
        Symbol {
            grid: self.grid,
            values: self.values.par_iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            order,
            provenance: "computed".into(),
        }
    }
}

impl Add for &Symbol {
    type Output = Symbol;
    fn add(self, rhs: &Symbol) -> Symbol {
        self.zip_with(rhs, self.order.max(rhs.order), |a, b| a + b)
    }
}

impl Sub for &Symbol {
    type Output = Symbol;
    fn sub(self, rhs: &Symbol) -> Symbol {
        self.zip_with(rhs, self.order.max(rhs.order), |a, b| a - b)
    }
}

/// Pointwise product (not the Moyal product).
impl Mul for &Symbol {
    type Output = Symbol;
    fn mul(self, rhs: &Symbol) -> Symbol {
        self.zip_with(rhs, self.order + rhs.order, |a, b| a * b)
    }
}

/// Analytic symbol families, evaluable at arbitrary phase-space points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    /// ⟨ξ⟩^s
    Ps { s: f64 },
    /// ⟨x⟩^s
    Qs { s: f64 },
    /// x_j (0-based j)
    Coord { j: usize },
    /// ξ_j (0-based j)
    Momentum { j: usize },
    /// exp(−½ Σ ((w − c)/σ)²) over the 2d phase-space coordinates (x, ξ)
    Gaussian { center: Vec<f64>, widths: Vec<f64> },
    Constant { c: f64 },
    /// sin(k x_j)
    SinX { j: usize, k: f64 },
    /// exp(−|ξ|² / (2 width²))
    XiGaussian { width: f64 },
    Sum { terms: Vec<SymbolSpec> },
    Scale { c: f64, inner: Box<SymbolSpec> },
    Product { factors: Vec<SymbolSpec> },
    /// inner(x / λ, ξ)
    Dilate { lambda: f64, inner: Box<SymbolSpec> },
}

impl SymbolSpec {
    /// Parse a JSON value, reporting an unrecognised `kind` as [`MagweylError::UnknownKind`].
    pub fn from_value(v: &serde_json::Value) -> Result<Self> {
        const KNOWN: [&str; 12] = [
            "ps", "qs", "coord", "momentum", "gaussian", "constant", "sin_x", "xi_gaussian", "sum", "scale",
            "product", "dilate",
        ];
        if let Some(kind) = v.get("kind").and_then(|k| k.as_str()) {
            if !KNOWN.contains(&kind) {
                return Err(MagweylError::UnknownKind(kind.to_string()));
            }
        }
        Ok(serde_json::from_value(v.clone())?)
    }

    /// Claimed Hörmander order.
    pub fn order(&self) -> f64 {
        match self {
            SymbolSpec::Ps { s } => *s,
            SymbolSpec::Momentum { .. } => 1.0,
            SymbolSpec::Qs { .. }
            | SymbolSpec::Coord { .. }
            | SymbolSpec::Gaussian { .. }
            | SymbolSpec::Constant { .. }
            | SymbolSpec::SinX { .. }
            | SymbolSpec::XiGaussian { .. } => 0.0,
            SymbolSpec::Sum { terms } => terms.iter().map(|t| t.order()).fold(f64::NEG_INFINITY, f64::max),
            SymbolSpec::Scale { inner, .. } | SymbolSpec::Dilate { inner, .. } => inner.order(),
            SymbolSpec::Product { factors } => factors.iter().map(|t| t.order()).sum(),
        }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        match self {
            SymbolSpec::Ps { s } => japanese(xi).powf(*s),
            SymbolSpec::Qs { s } => japanese(x).powf(*s),
            SymbolSpec::Coord { j } => x[*j],
            SymbolSpec::Momentum { j } => xi[*j],
            SymbolSpec::Gaussian { center, widths } => {
                let d = x.len();
                let mut e = 0.0;
                for i in 0..d {
                    e += ((x[i] - center[i]) / widths[i]).powi(2);
                    e += ((xi[i] - center[d + i]) / widths[d + i]).powi(2);
                }
                (-0.5 * e).exp()
            }
            SymbolSpec::Constant { c } => *c,
            SymbolSpec::SinX { j, k } => (k * x[*j]).sin(),
            SymbolSpec::XiGaussian { width } => {
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            SymbolSpec::Sum { terms } => terms.iter().map(|t| t.eval(x, xi)).sum(),
            SymbolSpec::Scale { c, inner } => c * inner.eval(x, xi),
            SymbolSpec::Product { factors } => factors.iter().map(|t| t.eval(x, xi)).product(),
            SymbolSpec::Dilate { lambda, inner } => {
                let xs: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                inner.eval(&xs, xi)
            }
        }
    }

    /// Dimension constraints of the spec against `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        let bad = |found| Err(MagweylError::DimensionMismatch { expected: d, found });
        match self {
            SymbolSpec::Coord { j } | SymbolSpec::Momentum { j } | SymbolSpec::SinX { j, .. } if *j >= d => bad(*j + 1),
            SymbolSpec::Gaussian { center, widths } => {
                if center.len() != 2 * d {
                    return bad(center.len());
                }
                if widths.len() != 2 * d {
                    return bad(widths.len());
                }
                if widths.iter().any(|w| *w <= 0.0) {
                    return Err(MagweylError::InvalidArgument("gaussian widths must be positive".into()));
                }
                Ok(())
            }
            SymbolSpec::Sum { terms: v } | SymbolSpec::Product { factors: v } => v.iter().try_for_each(|t| t.check_dim(d)),
            SymbolSpec::Scale { inner, .. } | SymbolSpec::Dilate { inner, .. } => inner.check_dim(d),
            _ => Ok(()),
        }
    }

    fn label(&self) -> String {
        match self {
            SymbolSpec::Ps { s } => format!("p_{s}"),
            SymbolSpec::Qs { s } => format!("q_{s}"),
            SymbolSpec::Coord { j } => format!("x_{j}"),
            SymbolSpec::Momentum { j } => format!("xi_{j}"),
            SymbolSpec::Gaussian { .. } => "gaussian".into(),
            SymbolSpec::Constant { c } => format!("const {c}"),
            SymbolSpec::SinX { j, k } => format!("sin({k} x_{j})"),
            SymbolSpec::XiGaussian { width } => format!("xi-gaussian {width}"),
            SymbolSpec::Sum { .. } => "sum".into(),
            SymbolSpec::Scale { .. } => "scale".into(),
            SymbolSpec::Product { .. } => "product".into(),
            SymbolSpec::Dilate { lambda, .. } => format!("dilate {lambda}"),
        }
    }
}

/// Sample a named symbol family on the grid.
pub fn standard_symbol(spec: &SymbolSpec, grid: &PhaseSpaceGrid) -> Result<Symbol> {
    spec.check_dim(grid.d())?;
    Ok(Symbol::from_fn(*grid, spec.order(), spec.label(), |x, xi| C64::new(spec.eval(x, xi), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol_space::BoxGrid;

    fn grid() -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(BoxGrid::new(2, 4.0, 8).unwrap())
    }

    #[test]
    fn standard_examples() {
        let p0 = standard_symbol(&SymbolSpec::Ps { s: 0.0 }, &grid()).unwrap();
        assert!(p0.values().iter().all(|v| *v == C64::new(1.0, 0.0)));
        let p2 = SymbolSpec::Ps { s: 2.0 };
        assert!((p2.eval(&[0.0, 0.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((p2.eval(&[0.0, 0.0], &[1.0, 0.0]) - 2.0).abs() < 1e-14);
        assert_eq!(SymbolSpec::Momentum { j: 0 }.eval(&[3.0, 4.0], &[5.0, 6.0]), 5.0);
        assert_eq!(p2.order(), 2.0);
        assert_eq!(SymbolSpec::Momentum { j: 1 }.order(), 1.0);
    }

    #[test]
    fn unknown_kind_is_reported() {
        let v = serde_json::json!({"kind": "banana"});
        assert!(matches!(SymbolSpec::from_value(&v), Err(MagweylError::UnknownKind(k)) if k == "banana"));
        let v = serde_json::json!({"kind": "ps", "s": 1.5});
        assert_eq!(SymbolSpec::from_value(&v).unwrap(), SymbolSpec::Ps { s: 1.5 });
    }

    #[test]
    fn layout_is_position_major() {
        let g = grid();
        let s = standard_symbol(&SymbolSpec::Coord { j: 1 }, &g).unwrap();
        let t = standard_symbol(&SymbolSpec::Momentum { j: 0 }, &g).unwrap();
        let (pos, mom) = (g.position.flatten(&[2, 5]), g.position.flatten(&[7, 1]));
        assert_eq!(s.at(pos, mom).re, g.position.node(5));
        assert_eq!(t.at(pos, mom).re, g.position.momentum_node(7));
        let prod = &s * &t;
        assert_eq!(prod.order(), 1.0);
    }
}
