use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::field_geometry::MagneticField;
use crate::linalg::degenerate_clusters;

fn quantizer(n: usize, l: f64, b: f64) -> Quantizer {
    let g = BoxGrid::new(2, l, n).unwrap();
    Quantizer::new(g, VectorPotential::transversal(Arc::new(MagneticField::constant_2d(b)))).unwrap()
}

fn sym(q: &Quantizer, spec: &SymbolSpec) -> Symbol {
    standard_symbol(spec, &PhaseSpaceGrid::new(*q.grid())).unwrap()
}

fn p2(q: &Quantizer) -> Symbol {
    sym(q, &SymbolSpec::Ps { s: 2.0 })
}

fn constant(q: &Quantizer, c: f64) -> Symbol {
    sym(q, &SymbolSpec::Constant { c })
}

#[test]
fn n_p_is_integer_part_plus_one() {
    assert_eq!(n_p(0.0), 1);
    assert_eq!(n_p(1.0), 2);
    assert_eq!(n_p(1.5), 2);
    assert_eq!(n_p(2.0), 3);
}

#[test]
fn sqrt_of_xi_only_symbol_without_field() {
    let q = quantizer(16, 6.0, 0.0);
    let f = p2(&q);
    let dec = sqrt_recursion(&q, &f, 1, 1.0).unwrap();
    let japanese = sym(&q, &SymbolSpec::Ps { s: 1.0 });
    assert!(dec.factors[0].max_abs_diff(&japanese) < 1e-12);
    assert!(dec.remainders[0].sup_norm() < 1e-9, "{}", dec.remainders[0].sup_norm());
    assert_eq!(dec.factors[0].order(), 1.0);
    assert_eq!(dec.factors[1].order(), 0.0);
}

#[test]
fn sqrt_of_constant() {
    let q = quantizer(8, 4.0, 1.0);
    let f = constant(&q, 2.5);
    let dec = sqrt_recursion(&q, &f, n_p(0.0), 2.5).unwrap();
    assert!(dec.factors[0].values().iter().all(|v| (v.re - 2.5f64.sqrt()).abs() < 1e-15 && v.im == 0.0));
    assert!(dec.remainders[0].sup_norm() < 1e-12);
}

#[test]
fn sqrt_preconditions() {
    let q = quantizer(8, 4.0, 1.0);
    let f = constant(&q, 0.5);
    assert!(matches!(sqrt_recursion(&q, &f, 1, 1.0), Err(MagweylError::NotBoundedBelow { .. })));
    let c = f.map(|z| z * C64::new(0.0, 1.0));
    assert!(matches!(sqrt_recursion(&q, &c, 1, 0.1), Err(MagweylError::InvalidArgument(_))));
}

#[test]
fn sqrt_recursion_with_field_telescopes() {
    let q = quantizer(16, 8.0, 1.0);
    let f = p2(&q);
    let dec = sqrt_recursion(&q, &f, 3, 1.0).unwrap();
    assert_eq!(dec.factors.len(), 4);
    assert_eq!(dec.remainders.len(), 4);
    // recompute every X_k from operator matrices
    let mf = q.operator(&f).unwrap();
    for k in 1..=4 {
        let mut s = q.operator(&dec.factors[0]).unwrap();
        for g in &dec.factors[1..k] {
            s += q.operator(g).unwrap();
        }
        let x = q.symbol_of_operator(&(&mf - matmul(&s, &s)), 0.0).unwrap();
        let err = x.max_abs_diff(&dec.remainders[k - 1]);
        assert!(err < 1e-9 * f.sup_norm(), "k = {k}: {err}");
    }
    let norms = &dec.remainder_norms;
    assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
    assert!(dec.remainder_seminorms.iter().all(|v| v.is_finite()));
    for (k, g) in dec.factors.iter().enumerate() {
        assert_eq!(g.order(), 1.0 - k as f64);
    }
}

#[test]
fn semibound_examples() {
    let q = quantizer(16, 6.0, 1.0);
    let c = constant(&q, 3.0);
    let cert = semibound_certificate(&q, &c, 3.0).unwrap();
    assert!(cert.lower_bound.abs() < 1e-12, "{cert:?}");
    assert!((cert.min_eigenvalue - 3.0).abs() < 1e-12);

    let q = quantizer(32, 8.0, 1.0);
    let f = p2(&q);
    let cert = semibound_certificate(&q, &f, 1.0).unwrap();
    assert!(cert.consistent, "{cert:?}");
    let ev = hermitian_eigenvalues(&q.operator(&f).unwrap());
    let lowest = degenerate_clusters(&ev, 1e-4, 3)[0].0;
    assert!((lowest - 2.0).abs() < 1e-3, "{lowest}");
}

#[test]
fn constant_shift_moves_spectrum() {
    let q = quantizer(16, 6.0, 0.5);
    let f = p2(&q);
    let g = f.shift(C64::new(5.0, 0.0));
    let a = hermitian_eigenvalues(&q.operator(&f).unwrap());
    let b = hermitian_eigenvalues(&q.operator(&g).unwrap());
    assert!((b[0] - a[0] - 5.0).abs() < 1e-9);
    let cert = semibound_certificate(&q, &g, 6.0).unwrap();
    assert!(cert.consistent);
}

#[test]
fn cv_norm_examples() {
    let b1 = VectorPotential::transversal(Arc::new(MagneticField::constant_2d(1.0)));
    let grids = [BoxGrid::new(2, 8.0, 16).unwrap(), BoxGrid::new(2, 8.0, 32).unwrap()];
    let one = cv_norm_property(&[SymbolSpec::Constant { c: 1.0 }], &b1, &grids[..1]).unwrap();
    assert!((one.entries[0].norm - 1.0).abs() < 1e-9);

    let sin = cv_norm_property(&[SymbolSpec::SinX { j: 0, k: 1.0 }], &b1, &grids[..1]).unwrap();
    assert!(sin.entries[0].norm <= 1.1, "{:?}", sin.entries[0]);

    let chi = SymbolSpec::Gaussian { center: vec![0.0; 4], widths: vec![1.0; 4] };
    let family: Vec<SymbolSpec> =
        [1.0, 2.0, 4.0].iter().map(|&lambda| SymbolSpec::Dilate { lambda, inner: Box::new(chi.clone()) }).collect();
    let rep = cv_norm_property(&family, &b1, &grids).unwrap();
    assert_eq!(rep.entries.len(), 6);
    assert!(rep.passed, "{rep:?}");
    let ratios: Vec<f64> = rep.entries.iter().map(|e| e.ratio).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(hi / lo < 1.5, "{ratios:?}");
}

#[test]
fn resolvent_without_field_is_pointwise() {
    let q = quantizer(16, 6.0, 0.0);
    let f = p2(&q);
    let r = resolvent(&q, &f, 1e-10).unwrap();
    assert_eq!(r.shifts_tried.len(), 1);
    assert!(r.defect_norm < 1e-9);
    let a = r.shift;
    let want = f.map(|z| (z + a).inv());
    assert!(r.inverse.max_abs_diff(&want) < 1e-10);
}

#[test]
fn resolvent_of_constant() {
    let q = quantizer(8, 4.0, 1.0);
    let f = constant(&q, 1.5);
    let r = resolvent_at(&q, &f, 2.0, 1e-12).unwrap();
    assert!(r.inverse.values().iter().all(|v| (v - C64::new(1.0 / 3.5, 0.0)).norm() < 1e-13));
}

#[test]
fn resolvent_with_field() {
    let q = quantizer(16, 6.0, 1.0);
    let f = p2(&q);
    let r = resolvent(&q, &f, 1e-6).unwrap();
    assert!(r.defect_norm <= 0.5);
    assert!(r.right_residual <= 1e-6 && r.left_residual <= 1e-6, "{:?}", r.summary());
    assert!(r.dense_inverse_error <= 1e-5, "{}", r.dense_inverse_error);
    let first = r.iteration_norms[0];
    for (k, v) in r.iteration_norms.iter().enumerate() {
        assert!(*v <= 1.5 * 0.5f64.powi(k as i32) * first, "k = {k}: {v}");
    }
    assert!(nu(&r.inverse, -2.0, 0, 0).unwrap().is_finite());
}

#[test]
fn shift_rejected_when_defect_too_large() {
    let q = quantizer(16, 6.0, 4.0);
    let f = p2(&q);
    match resolvent_at(&q, &f, 1e-3, 1e-6) {
        Err(MagweylError::ShiftRejected { defect, .. }) => assert!(defect > 0.5),
        other => panic!("expected rejection, got {:?}", other.map(|r| r.defect_norm)),
    }
}

#[test]
fn defect_scaling_examples() {
    let q = quantizer(16, 6.0, 1.0);
    let s = defect_scaling(&q, &p2(&q), &[4.0, 8.0, 16.0, 32.0]).unwrap();
    assert!(s.passed && s.slope.unwrap() <= -0.25, "{s:?}");

    let q0 = quantizer(16, 6.0, 0.0);
    let s0 = defect_scaling(&q0, &p2(&q0), &[4.0, 8.0, 16.0]).unwrap();
    assert!(s0.slope.is_none() && s0.passed);

    let qh = quantizer(16, 6.0, 0.5);
    let p1 = sym(&qh, &SymbolSpec::Ps { s: 1.0 });
    let s1 = defect_scaling(&qh, &p1, &[4.0, 8.0, 16.0, 32.0]).unwrap();
    assert!(s1.slope.unwrap() <= -0.25, "{s1:?}");

    assert!(matches!(defect_scaling(&q, &p2(&q), &[4.0, 8.0]), Err(MagweylError::TooFewSamples { .. })));
}

#[test]
fn resolvent_identity() {
    let q = quantizer(16, 6.0, 1.0);
    let f = p2(&q);
    let a = resolvent(&q, &f, 1e-8).unwrap().shift;
    let same = resolvent_identity_check(&q, &f, a, a, 1e-8).unwrap();
    assert_eq!(same.residual, 0.0);
    let id = resolvent_identity_check(&q, &f, a, 2.0 * a, 1e-8).unwrap();
    assert!(id.residual <= 1e-6 && id.residual_swapped <= 1e-6, "{id:?}");

    // B = 0: 1/(F+z₁) − 1/(F+z₂) = (z₂−z₁)/((F+z₁)(F+z₂)) pointwise
    let q0 = quantizer(16, 6.0, 0.0);
    let f0 = p2(&q0);
    let r1 = resolvent_at(&q0, &f0, 3.0, 1e-12).unwrap().inverse;
    let r2 = resolvent_at(&q0, &f0, 7.0, 1e-12).unwrap().inverse;
    for (k, v) in f0.values().iter().enumerate() {
        let (u, w) = (r1.values()[k], r2.values()[k]);
        let want = 4.0 / ((v.re + 3.0) * (v.re + 7.0));
        assert!(((u - w).re - want).abs() < 1e-9);
    }
    let id0 = resolvent_identity_check(&q0, &f0, 3.0, 7.0, 1e-12).unwrap();
    assert!(id0.residual < 1e-9);
}

#[test]
fn resolvent_symbol_is_grid_stable() {
    let est = |n: usize| {
        let q = quantizer(n, 8.0, 1.0);
        let r = resolvent(&q, &p2(&q), 1e-8).unwrap();
        nu(&r.inverse, -2.0, 0, 0).unwrap()
    };
    let (a, b) = (est(16), est(32));
    assert!(a.is_finite() && b.is_finite());
    // the exact B = 0 value sup ⟨ξ⟩²/(⟨ξ⟩² + a) itself drifts with the momentum range
    assert!(a.max(b) / a.min(b) < 1.5, "{a} vs {b}");
}

#[test]
fn real_elliptic_symbols_are_self_adjoint() {
    let q = quantizer(16, 6.0, 1.0);
    let sa = self_adjointness(&q, &p2(&q)).unwrap();
    assert!(sa.hermitian_deviation < 1e-10 * 100.0, "{sa:?}");
    assert!(sa.max_imag_eigenvalue < 1e-8, "{sa:?}");
}

#[test]
fn sobolev_norm_examples() {
    let g = BoxGrid::new(2, 8.0, 32).unwrap();
    let zero = VectorPotential::transversal(Arc::new(MagneticField::zero(2)));
    let f = StateVector::gaussian(g, &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    let s0 = sobolev_norm(&f, 0.0, &zero).unwrap();
    assert!((s0 - 2f64.sqrt() * f.norm()).abs() < 1e-12 * f.norm());

    // e^{−|x|²/2}: ‖f‖² = π and ‖(1 + |ξ|²) f̂‖² = 5π
    let want = (6.0 * PI).sqrt();
    let s2 = sobolev_norm(&f, 2.0, &zero).unwrap();
    assert!((s2 - want).abs() < 1e-6 * want, "{s2} vs {want}");

    let b1 = VectorPotential::transversal(Arc::new(MagneticField::constant_2d(1.0)));
    let q = Quantizer::new(g, b1).unwrap();
    let mut last = 0.0;
    for s in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let v = sobolev_norm_with(&q, &f, s).unwrap();
        assert!(v >= last - 1e-12);
        last = v;
    }
}
