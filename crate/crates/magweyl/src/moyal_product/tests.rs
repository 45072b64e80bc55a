use std::f64::consts::PI;

use super::*;
use crate::field_geometry::{Monomial, Polynomial, ScalarFunction};
use crate::linalg::max_abs;
use crate::symbol_space::{standard_symbol, PhaseSpaceGrid, StateVector, SymbolSpec};

fn field(b: f64) -> Arc<MagneticField> {
    Arc::new(MagneticField::constant_2d(b))
}

fn sym(spec: &SymbolSpec, g: &BoxGrid) -> Symbol {
    standard_symbol(spec, &PhaseSpaceGrid::new(*g)).unwrap()
}

fn gauss(c: [f64; 4], w: [f64; 4]) -> SymbolSpec {
    SymbolSpec::Gaussian { center: c.to_vec(), widths: w.to_vec() }
}

fn balanced(n: usize) -> BoxGrid {
    BoxGrid::new(2, (n as f64 * PI / 2.0).sqrt(), n).unwrap()
}

fn pair(g: &BoxGrid) -> (Symbol, Symbol) {
    (
        sym(&gauss([0.2, -0.1, 0.3, 0.0], [0.9, 1.0, 1.1, 1.0]), g),
        sym(&gauss([-0.3, 0.2, 0.0, -0.2], [1.0, 0.8, 1.0, 1.2]), g),
    )
}

#[test]
fn unit_is_neutral() {
    let g = BoxGrid::new(2, 4.0, 12).unwrap();
    let mo = Moyal::new(g, field(1.0)).unwrap();
    let (f, _) = pair(&g);
    let one = Symbol::constant(PhaseSpaceGrid::new(g), C64::new(1.0, 0.0));
    assert!(mo.product(&f, &one).unwrap().max_abs_diff(&f) < 1e-9);
    assert!(mo.product(&one, &f).unwrap().max_abs_diff(&f) < 1e-9);
}

#[test]
fn x_only_symbols_multiply_pointwise() {
    let g = BoxGrid::new(2, 4.0, 12).unwrap();
    let mo = Moyal::new(g, field(1.0)).unwrap();
    let f = sym(&SymbolSpec::SinX { j: 0, k: 0.6 }, &g);
    let h = sym(&SymbolSpec::Qs { s: 1.0 }, &g);
    let r = mo.remainder(&f, &h).unwrap();
    assert!(r.symbol.sup_norm() < 1e-8);
}

#[test]
fn xi_only_symbols_commute_without_field() {
    let g = BoxGrid::new(2, 4.0, 12).unwrap();
    let mo = Moyal::new(g, field(0.0)).unwrap();
    let p1 = sym(&SymbolSpec::Ps { s: 1.0 }, &g);
    let r = mo.remainder(&p1, &p1).unwrap();
    assert!(r.symbol.sup_norm() < 1e-8);
}

#[test]
fn direct_route_matches_kernel_route() {
    let g = balanced(8);
    let (f, h) = pair(&g);
    let samples = [(0usize, 4usize), (27, 36), (36, 27), (18, 45), (45, 45)];
    for b in [0.0, 1.0] {
        let mo = Moyal::new(g, field(b)).unwrap();
        let kern = mo.product(&f, &h).unwrap();
        let scale = kern.sup_norm();
        for &(p, q) in &samples {
            let x = g.point(p);
            let xi = g.momentum(q);
            let direct = moyal_direct(&f, &h, &field(b), &x, &xi).unwrap();
            let err = (direct - kern.at(p, q)).norm();
            assert!(err < 5e-2 * scale, "b = {b}, point ({p}, {q}): {direct} vs {}", kern.at(p, q));
        }
    }
}

#[test]
fn direct_route_with_unit_factor_returns_other_factor() {
    let g = balanced(8);
    let (f, _) = pair(&g);
    let one = Symbol::constant(PhaseSpaceGrid::new(g), C64::new(1.0, 0.0));
    let (p, q) = (27, 36);
    let v = moyal_direct(&one, &f, &field(0.0), &g.point(p), &g.momentum(q)).unwrap();
    assert!((v - f.at(p, q)).norm() < 1e-10);
}

#[test]
fn direct_route_error_decreases_with_refinement() {
    let err = |n: usize| {
        let g = balanced(n);
        let (f, h) = pair(&g);
        let kern = Moyal::new(g, field(1.0)).unwrap().product(&f, &h).unwrap();
        let mut worst: f64 = 0.0;
        for p in 0..g.len() {
            for q in 0..g.len() {
                let (x, xi) = (g.point(p), g.momentum(q));
                if x.iter().chain(&xi).all(|v| v.abs() <= 1.0) {
                    let d = moyal_direct(&f, &h, &field(1.0), &x, &xi).unwrap();
                    worst = worst.max((d - kern.at(p, q)).norm());
                }
            }
        }
        worst / kern.sup_norm()
    };
    let (e4, e8) = (err(4), err(8));
    assert!(e8 < e4, "{e4} vs {e8}");
    assert!(e8 < 5e-2);
}

#[test]
fn cost_guard_rejects_large_grids() {
    let g = BoxGrid::new(2, 4.0, 16).unwrap();
    let (f, h) = pair(&g);
    let err = moyal_direct(&f, &h, &field(1.0), &[0.0, 0.0], &[0.0, 0.0]).unwrap_err();
    assert!(matches!(err, MagweylError::CostGuard { .. }));
}

#[test]
fn trace_and_cyclic_identities() {
    let g = BoxGrid::new(2, 5.0, 16).unwrap();
    let (f, h) = pair(&g);
    let chi = sym(&gauss([0.0, 0.4, -0.3, 0.1], [1.2, 1.0, 0.9, 1.0]), &g);
    for b in [0.0, 1.0, 2.0] {
        let mo = Moyal::new(g, field(b)).unwrap();
        let t = mo.trace_identity_check(&f, &h).unwrap();
        assert!(t.relative_error() < 1e-8, "b = {b}: {t:?}");
        let c = mo.cyclic_identity_check(&f, &h, &chi).unwrap();
        assert!(c.relative_error < 1e-8, "b = {b}: {c:?}");
    }
    let mo = Moyal::new(g, field(1.0)).unwrap();
    let zero = Symbol::zeros(PhaseSpaceGrid::new(g));
    let t = mo.trace_identity_check(&f, &zero).unwrap();
    assert_eq!(t.error, 0.0);
    let swapped = mo.cyclic_identity_check(&h, &chi, &f).unwrap();
    let orig = mo.cyclic_identity_check(&f, &h, &chi).unwrap();
    assert!((swapped.values[0] - orig.values[1]).norm() < 1e-12 * orig.values[1].norm());
}

#[test]
fn algebraic_invariants() {
    let g = BoxGrid::new(2, 4.0, 12).unwrap();
    let (f, h) = pair(&g);
    let k = sym(&gauss([0.1, 0.1, -0.2, 0.3], [1.1, 0.9, 1.0, 1.0]), &g);
    let mo = Moyal::new(g, field(1.0)).unwrap();
    let fh = mo.product(&f, &h).unwrap();

    let left = mo.product(&fh, &k).unwrap();
    let right = mo.product(&f, &mo.product(&h, &k).unwrap()).unwrap();
    assert!(left.max_abs_diff(&right) < 1e-8);

    let fc = f.map(|z| z * C64::new(0.6, 0.8));
    let lhs = mo.product(&fc, &h).unwrap().conj();
    let rhs = mo.product(&h.conj(), &fc.conj()).unwrap();
    assert!(lhs.max_abs_diff(&rhs) < 1e-9);

    let gauge = ScalarFunction::Polynomial { terms: Polynomial::new(vec![Monomial(0.3, vec![1, 1])]) };
    let other = Moyal::from_quantizer(mo.quantizer().with_gauge_function(gauge).unwrap());
    let fh2 = other.product(&f, &h).unwrap();
    assert!(fh2.max_abs_diff(&fh) < 1e-9 * fh.sup_norm());

    let composed = mo.kernel(&f).unwrap().compose(&mo.kernel(&h).unwrap()).unwrap();
    let closure = mo.kernel(&fh).unwrap();
    assert!(max_abs(&(composed.data() - closure.data())) * g.cell_volume() < 1e-9);
}

#[test]
fn remainder_seminorm_is_grid_stable() {
    let est = |n: usize| {
        let g = BoxGrid::new(2, 8.0, n).unwrap();
        let mo = Moyal::new(g, field(1.0)).unwrap();
        let p2 = sym(&SymbolSpec::Ps { s: 2.0 }, &g);
        let gs = sym(&gauss([0.0, 0.0, 0.0, 0.0], [1.5, 1.5, 1.5, 1.5]), &g);
        mo.remainder(&p2, &gs).unwrap().seminorm
    };
    let (a, b) = (est(16), est(32));
    assert!(a.is_finite() && b.is_finite());
    assert!((b - a).abs() < 0.3 * a, "{a} vs {b}");
}

#[test]
fn commutator_sign_matches_golden_and_is_linear_in_b() {
    let golden: serde_json::Value =
        serde_json::from_str(include_str!("../../tests/golden/commutator_sign.json")).unwrap();
    let s = golden["s"].as_f64().unwrap();
    let g = BoxGrid::new(2, 8.0, 32).unwrap();
    let phi = StateVector::gaussian(g, &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    let a = magnetic_commutator_check(g, 0.5, &phi).unwrap();
    let b = magnetic_commutator_check(g, 1.0, &phi).unwrap();
    for c in [&a, &b] {
        assert_eq!(c.sign, s);
        assert!((c.expectation - C64::new(0.0, s * c.b)).norm() < 1e-6, "{c:?}");
    }
    assert!(a.operator_residual < 1e-5 && b.operator_residual < 1e-4);
    assert!((a.expectation / a.b - b.expectation / b.b).norm() < 1e-6);
    // a finite-dimensional commutator is traceless, so the symbol cannot be constant
    assert!(b.symbol_error > 1.0);
}
