use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::field_geometry::{MagneticField, ScalarFunction, VectorPotential};
use crate::symbol_space::BoxGrid;

fn quantizer(n: usize, l: f64, b: f64) -> Quantizer {
    let g = BoxGrid::new(2, l, n).unwrap();
    Quantizer::new(g, VectorPotential::transversal(Arc::new(MagneticField::constant_2d(b)))).unwrap()
}

fn landau(n: usize, l: f64, b: f64) -> Hamiltonian {
    Hamiltonian::from_spec(quantizer(n, l, b), &SymbolSpec::Ps { s: 2.0 }).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

#[test]
fn propagator_at_zero_is_identity() {
    let h = landau(8, 4.0, 1.0);
    let w = h.propagator_matrix(0.0);
    assert!(max_abs(&(w - identity(64))) < 1e-12);
}

#[test]
fn unitarity_and_group_law() {
    let h = landau(16, 8.0, 1.0);
    let n = 256;
    for &t in &[0.3, -1.1, 2.5] {
        let w = h.propagator_matrix(t);
        let drift = max_abs(&(matmul(&w.adjoint(), &w) - identity(n)));
        assert!(drift < 1e-10, "t = {t}: {drift:e}");
    }
    for &(t, s) in &[(0.2, 0.5), (1.0, -0.4), (0.7, 0.7)] {
        let lhs = matmul(&h.propagator_matrix(t), &h.propagator_matrix(s));
        let err = max_abs(&(lhs - h.propagator_matrix(t + s)));
        assert!(err < 1e-9, "({t}, {s}): {err:e}");
    }
}

#[test]
fn constant_hamiltonian_is_a_phase() {
    let c = 0.7;
    let h = Hamiltonian::from_spec(quantizer(8, 4.0, 1.0), &SymbolSpec::Constant { c }).unwrap();
    let t = 1.3;
    let phase = C64::from_polar(1.0, -t * c);
    let w = h.propagator_matrix(t);
    assert!(max_abs(&(w - identity(64) * phase)) < 1e-12);
    let sym = h.propagator_symbol(t).unwrap();
    assert!(sym.values().iter().all(|v| (v - phase).norm() < 1e-10));
}

#[test]
fn non_hermitian_assembly_is_rejected() {
    let q = quantizer(8, 4.0, 1.0);
    let f = standard_symbol(&SymbolSpec::Ps { s: 2.0 }, &PhaseSpaceGrid::new(*q.grid())).unwrap();
    let bad = f.map(|z| z * C64::new(1.0, 0.5));
    assert!(matches!(Hamiltonian::new(q, bad), Err(MagweylError::NonHermitian(_))));
}

#[test]
fn state_evolution_preserves_norm_energy_and_commutes() {
    let h = landau(16, 8.0, 1.0);
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.5, -0.5], 1.2, &[0.8, 0.3]);
    let e0 = h.energy(&phi).unwrap();
    assert!(h.evolve_state(0.0, &phi).unwrap().max_abs_diff(&phi) < 1e-12);
    for &t in &[0.25, 1.0, 3.0] {
        let psi = h.evolve_state(t, &phi).unwrap();
        assert!((psi.norm() - phi.norm()).abs() < 1e-10 * phi.norm());
        let e = h.energy(&psi).unwrap();
        assert!((e - e0).abs() < 1e-9 * e0.abs(), "t = {t}: {e} vs {e0}");
        let a = h.apply(&psi).unwrap();
        let b = h.evolve_state(t, &h.apply(&phi).unwrap()).unwrap();
        let diff = StateVector::from_cvec(*phi.grid(), &(a.to_cvec() - b.to_cvec())).unwrap();
        assert!(diff.norm() <= 1e-8 * phi.norm(), "{:e}", diff.norm());
    }
}

#[test]
fn kernel_propagator_agrees_with_eigenbasis_evolution() {
    let h = landau(8, 4.0, 2.0);
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    let via_kernel = h.propagator(0.6).apply(&phi).unwrap();
    assert!(via_kernel.max_abs_diff(&h.evolve_state(0.6, &phi).unwrap()) < 1e-12);
}

#[test]
fn free_gaussian_spreads_like_the_analytic_solution() {
    let h = landau(32, 8.0, 0.0);
    let s = 1.0;
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], s, &[0.0, 0.0]);
    for k in 0..=5 {
        let t = 0.1 * k as f64;
        let psi = h.evolve_state(t, &phi).unwrap();
        let mut var = 0.0;
        let mut mass = 0.0;
        for (i, p) in psi.grid().points().iter().enumerate() {
            let w = psi.values()[i].norm_sqr();
            var += p[0] * p[0] * w;
            mass += w;
        }
        var /= mass;
        let expected = s * s / 2.0 + 2.0 * t * t / (s * s);
        assert!((var - expected).abs() < 0.01 * expected, "t = {t}: {var} vs {expected}");
    }
}

fn rk4_landau(y0: [f64; 4], b: f64, t: f64, steps: usize) -> [f64; 4] {
    // (x₁, x₂, Π₁, Π₂) under H = Π² with [Π₁, Π₂] = ib
    let rhs = |y: [f64; 4]| [2.0 * y[2], 2.0 * y[3], 2.0 * b * y[3], -2.0 * b * y[2]];
    let dt = t / steps as f64;
    let mut y = y0;
    let axpy = |y: [f64; 4], k: [f64; 4], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2], y[3] + c * k[3]];
    for _ in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs(axpy(y, k1, dt / 2.0));
        let k3 = rhs(axpy(y, k2, dt / 2.0));
        let k4 = rhs(axpy(y, k3, dt));
        for i in 0..4 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn coherent_state_center_follows_the_cyclotron_orbit() {
    let b = 1.0;
    let h = landau(32, 8.0, b);
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], 1.0, &[1.0, 0.0]);
    let (x0, p0) = h.expectations(&phi).unwrap();
    let radius = (p0[0].hypot(p0[1])) / b;
    assert!((radius - 1.0).abs() < 0.05, "radius {radius}");
    let period = 2.0 * PI / (2.0 * b);
    for k in 1..=8 {
        let t = period * k as f64 / 8.0;
        let (x, _) = h.expectations(&h.evolve_state(t, &phi).unwrap()).unwrap();
        let y = rk4_landau([x0[0], x0[1], p0[0], p0[1]], b, t, 4000);
        let err = (x[0] - y[0]).hypot(x[1] - y[1]);
        assert!(err < 0.02 * radius, "t = {t}: {x:?} vs {y:?}");
    }
    let (back, _) = h.expectations(&h.evolve_state(period, &phi).unwrap()).unwrap();
    assert!((back[0] - x0[0]).hypot(back[1] - x0[1]) < 0.02 * radius);
}

#[test]
fn dynamics_are_gauge_covariant() {
    let q = quantizer(16, 8.0, 1.0);
    let f = ScalarFunction::Wave { amplitude: 0.4, k: vec![0.5, 0.3], phase: 0.1 };
    let h = Hamiltonian::from_spec(q.clone(), &SymbolSpec::Ps { s: 2.0 }).unwrap();
    let hg = Hamiltonian::from_spec(q.with_gauge_function(f.clone()).unwrap(), &SymbolSpec::Ps { s: 2.0 }).unwrap();
    let phi = StateVector::gaussian(*q.grid(), &[0.3, 0.0], 1.0, &[0.5, -0.5]);
    let phi_g = StateVector::from_fn(*q.grid(), |x| {
        let k = q.grid().points().iter().position(|p| p.as_slice() == x).unwrap();
        phi.values()[k] * C64::from_polar(1.0, f.value(x))
    });
    let a = h.evolve_state(0.7, &phi).unwrap();
    let b = hg.evolve_state(0.7, &phi_g).unwrap();
    let worst = a.values().iter().zip(b.values()).fold(0.0f64, |m, (u, v)| m.max((u.norm_sqr() - v.norm_sqr()).abs()));
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn propagator_symbol_reflection_and_unitarity() {
    let h = landau(16, 8.0, 1.0);
    let w0 = h.propagator_symbol(0.0).unwrap();
    assert!(w0.values().iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-10));
    let t = 0.4;
    let fwd = h.propagator_symbol(t).unwrap();
    let back = h.propagator_symbol(-t).unwrap();
    assert!(back.max_abs_diff(&fwd.conj()) < 1e-8);
    let defect = symbol_unitarity(&h, t).unwrap();
    assert!(defect < 1e-7, "{defect:e}");
}

#[test]
fn cauchy_residual_exact_for_constants() {
    let h = Hamiltonian::from_spec(quantizer(8, 4.0, 1.0), &SymbolSpec::Constant { c: 0.5 }).unwrap();
    let r = h.cauchy_residual(0.3, DEFAULT_DT).unwrap();
    assert!(r < 1e-9, "{r:e}");
    assert!(h.cauchy_residual(0.3, 0.0).is_err());
}

#[test]
fn cauchy_residual_is_second_order() {
    for b in [0.0, 1.0] {
        let h = landau(16, 8.0, b);
        let rep = h.cauchy_richardson(0.3, DEFAULT_DT).unwrap();
        assert!(rep.ratio_ok, "b = {b}: {rep:?}");
        assert!(rep.within_bound, "b = {b}: {rep:?}");
    }
}

#[test]
fn crank_nicolson_converges_to_the_spectral_propagator() {
    let h = landau(8, 4.0, 1.0);
    let exact = h.propagator_matrix(0.2);
    let e1 = max_abs(&(h.crank_nicolson(0.2, 100).unwrap() - &exact));
    let e2 = max_abs(&(h.crank_nicolson(0.2, 200).unwrap() - &exact));
    assert!(e2 < 1e-3, "{e2:e}");
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
    assert!(h.crank_nicolson(0.2, 0).is_err());
}

#[test]
fn commutator_expansion_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_matrix(&mut rng, 8);
    let f1 = random_matrix(&mut rng, 8);
    assert_eq!(commutator_expansion_check(std::slice::from_ref(&f1), &g).unwrap(), 0.0);
    let f2 = random_matrix(&mut rng, 8);
    assert!(commutator_expansion_check(&[f1, f2], &g).unwrap() < 1e-12);
    let fs: Vec<CMat> = (0..3).map(|_| random_matrix(&mut rng, 6)).collect();
    let g6 = random_matrix(&mut rng, 6);
    assert!(commutator_expansion_check(&fs, &g6).unwrap() < 1e-12);
}

#[test]
fn commutator_expansion_rejects_bad_input() {
    let g = CMat::zeros(4, 4);
    assert!(commutator_expansion_check(&[], &g).is_err());
    assert!(matches!(
        commutator_expansion_check(&[CMat::zeros(3, 3)], &g),
        Err(MagweylError::DimensionMismatch { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn commutator_expansion_holds_for_random_matrices(seed in any::<u64>(), n in 2usize..7, count in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs: Vec<CMat> = (0..count).map(|_| random_matrix(&mut rng, n)).collect();
        let g = random_matrix(&mut rng, n);
        prop_assert!(commutator_expansion_check(&fs, &g).unwrap() < 1e-12);
    }
}

#[test]
fn multi_index_enumeration() {
    let idx = moment_indices(4, 3);
    assert_eq!(idx.len(), 35);
    assert_eq!(idx[0], vec![0, 0, 0, 0]);
    assert!(idx.iter().all(|i| i.iter().sum::<usize>() <= 3));
    let mut sorted = idx.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 35);
}

#[test]
fn unit_gaussian_moments() {
    let h = landau(32, 8.0, 1.0);
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    let table = h.moment_table(&phi, &[0.0], 2).unwrap();
    let q1 = table.norm(0.0, &[1, 0], &[0, 0]).unwrap();
    let n0 = table.norm(0.0, &[0, 0], &[0, 0]).unwrap();
    assert!((n0 - phi.norm()).abs() < 1e-12);
    assert!((q1 - phi.norm() / 2f64.sqrt()).abs() < 1e-6, "{q1} vs {}", phi.norm() / 2f64.sqrt());
}

#[test]
fn magnetic_moments_stay_within_envelope() {
    let h = landau(32, 8.0, 1.0);
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    let times: Vec<f64> = (0..=4).map(|k| 0.25 * k as f64).collect();
    let rep = h.moment_diagnostics(&phi, &times, 2).unwrap();
    assert!(rep.passed, "{:?}", rep.table.rows.iter().zip(&rep.within_envelope).filter(|(_, ok)| !**ok).collect::<Vec<_>>());
    assert_eq!(rep.table.rows.len(), times.len() * 15);
    assert_eq!(rep.exponent, 4.0);
}

#[test]
fn wide_states_trip_the_tail_check() {
    let h = landau(16, 8.0, 1.0);
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], 3.0, &[0.0, 0.0]);
    assert!(matches!(h.moment_diagnostics(&phi, &[0.0, 0.5], 2), Err(MagweylError::BoundaryTails { .. })));
    assert!(h.moment_diagnostics(&phi, &[0.0], 5).is_err());
    // a well-localised state on a grid too coarse to keep it away from the edge
    let narrow = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    assert!(h.moment_diagnostics(&narrow, &[0.0], 2).is_ok());
    assert!(matches!(
        h.moment_diagnostics(&narrow, &[0.0, 1.0], 2),
        Err(MagweylError::BoundaryTails { threshold, .. }) if threshold == EVOLVED_TAIL_THRESHOLD
    ));
}

#[test]
fn free_momenta_are_conserved() {
    let h = landau(16, 8.0, 0.0);
    let phi = StateVector::gaussian(*h.quantizer().grid(), &[0.0, 0.0], 1.0, &[0.5, 0.0]);
    let times = [0.0, 0.5, 1.0];
    let table = h.moment_table(&phi, &times, 2).unwrap();
    for beta in [[1, 0], [0, 1], [2, 0], [1, 1]] {
        let n0 = table.norm(0.0, &[0, 0], &beta).unwrap();
        for &t in &times[1..] {
            let nt = table.norm(t, &[0, 0], &beta).unwrap();
            assert!((nt - n0).abs() < 1e-8 * n0.max(1.0), "{beta:?} at {t}: {nt} vs {n0}");
        }
    }
}

#[test]
fn landau_levels_on_a_moderate_grid() {
    let h = landau(32, 8.0, 1.0);
    let spec = landau_spectrum(h.energies(), 1e-4, 3, 10);
    assert!(spec.clusters.len() >= 4, "{:?}", spec.clusters);
    assert!(spec.clusters[0].1 >= 3);
    assert!((spec.clusters[0].0 - 2.0).abs() < 0.04, "{:?}", spec.clusters);
    for g in &spec.gaps[..3] {
        assert!((g - 2.0).abs() < 0.04 * 2.0, "{:?}", spec.gaps);
    }
    let values_only = operator_spectrum(h.quantizer(), h.symbol()).unwrap();
    let worst = values_only.iter().zip(h.energies()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(worst < 1e-9, "{worst}");
}

