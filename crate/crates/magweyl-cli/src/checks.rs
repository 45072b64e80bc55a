//! Check builders shared by the `validate` scenario and the acceptance suite. Each
//! returns named [`Check`]s; the thresholds are supplied by the caller.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magweyl::evolution::{commutator_expansion_check, landau_spectrum, Hamiltonian, MomentReport};
use magweyl::field_geometry::{
    flux_triangle, multi_indices, omega_derivative, omega_phase, omega_scaling_degree, phase_lambda, Axis, MagneticField,
    Monomial, Polynomial, ScalarFunction, VectorPotential,
};
use magweyl::linalg::{frobenius, hermitian_deviation, identity, matmul, max_abs, CMat, C64};
use magweyl::moyal_product::{magnetic_commutator_check, moyal_direct, CommutatorCheck, Moyal};
use magweyl::operator_calculus::{
    defect_scaling, n_p, resolvent, resolvent_identity_check, semibound_certificate, sqrt_recursion, DefectScaling,
    ResolventResult, SqrtDecomposition,
};
use magweyl::quantization::{diamagnetic_check, gauge_conjugate, Quantizer};
use magweyl::symbol_space::{standard_symbol, BoxGrid, PhaseSpaceGrid, StateVector, Symbol, SymbolSpec};

use crate::report::{Check, Threshold};
use crate::CliError;

pub type Checks = Result<Vec<Check>, CliError>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn symbol(spec: &SymbolSpec, g: &BoxGrid) -> Result<Symbol, CliError> {
    Ok(standard_symbol(spec, &PhaseSpaceGrid::new(*g))?)
}

pub fn gaussian_spec(c: [f64; 4], w: [f64; 4]) -> SymbolSpec {
    SymbolSpec::Gaussian { center: c.to_vec(), widths: w.to_vec() }
}

/// Two phase-space Gaussians and a third for cyclic checks.
pub fn gaussian_triple() -> [SymbolSpec; 3] {
    [
        gaussian_spec([0.2, -0.1, 0.3, 0.0], [0.9, 1.0, 1.1, 1.0]),
        gaussian_spec([-0.3, 0.2, 0.0, -0.2], [1.0, 0.8, 1.0, 1.2]),
        gaussian_spec([0.0, 0.4, -0.3, 0.1], [1.2, 1.0, 0.9, 1.0]),
    ]
}

/// Symbols for the gauge-covariance check: localised, elliptic and mixed.
pub fn gauge_symbols() -> [SymbolSpec; 3] {
    [
        gaussian_spec([0.3, -0.2, 0.5, 0.1], [1.0, 1.2, 0.9, 1.1]),
        SymbolSpec::Ps { s: 2.0 },
        SymbolSpec::Product { factors: vec![SymbolSpec::SinX { j: 0, k: 0.7 }, SymbolSpec::XiGaussian { width: 1.0 }] },
    ]
}

pub fn gauge_functions() -> [ScalarFunction; 3] {
    [
        ScalarFunction::Polynomial { terms: Polynomial::new(vec![Monomial(0.3, vec![1, 1])]) },
        ScalarFunction::Wave { amplitude: 0.7, k: vec![0.4, -0.3], phase: 0.2 },
        ScalarFunction::Sum {
            terms: vec![
                ScalarFunction::Constant { c: 1.5 },
                ScalarFunction::Polynomial {
                    terms: Polynomial::new(vec![Monomial(0.05, vec![2, 0]), Monomial(-0.1, vec![0, 1])]),
                },
            ],
        },
    ]
}

/// B₁₂ = 1 + 0.3x₁ − 0.2x₂² + 0.05x₁x₂.
pub fn polynomial_field() -> MagneticField {
    MagneticField::polynomial(
        2,
        vec![Polynomial::new(vec![
            Monomial(1.0, vec![0, 0]),
            Monomial(0.3, vec![1, 0]),
            Monomial(-0.2, vec![0, 2]),
            Monomial(0.05, vec![1, 1]),
        ])],
    )
    .expect("valid polynomial field")
}

/// Op⁰(ξ_j) against −i∂_j of a Gaussian: −i∂_j φ = (k_j + i(x_j − c_j)/w²)φ.
pub fn convention_pin(grid: BoxGrid, tol: f64) -> Checks {
    let (c, w, k) = ([0.5, -0.3], 1.0, [0.8, -0.4]);
    let phi = StateVector::gaussian(grid, &c, w, &k);
    let q = Quantizer::free(grid);
    let mut out = Vec::new();
    for j in 0..grid.d {
        let op = q.kernel(&symbol(&SymbolSpec::Momentum { j }, &grid)?)?;
        let got = op.apply(&phi)?;
        let mut err: f64 = 0.0;
        for (i, v) in got.values().iter().enumerate() {
            let x = grid.point(i);
            let want = C64::new(k[j], (x[j] - c[j]) / (w * w)) * phi.values()[i];
            err = err.max((v - want).norm());
        }
        out.push(Check::at_most(format!("convention_pin_p{}", j + 1), err, tol));
    }
    Ok(out)
}

pub fn hermiticity(q: &Quantizer, symbols: &[Symbol], tol: f64) -> Checks {
    let mut worst: f64 = 0.0;
    for f in symbols {
        if f.max_imag() > 0.0 {
            continue;
        }
        let k = q.kernel(f)?;
        worst = worst.max(hermitian_deviation(k.data()) / max_abs(k.data()).max(f64::MIN_POSITIVE));
    }
    Ok(vec![Check::at_most("hermitian_real_symbols", worst, tol)])
}

/// Worst relative Frobenius gap between Op^{A+df}(F) and e^{if}Op^A(F)e^{−if}.
pub fn gauge_covariance(q: &Quantizer, symbols: &[Symbol], gauges: &[ScalarFunction]) -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for g in gauges {
        let qg = q.with_gauge_function(g.clone())?;
        for f in symbols {
            let k = q.kernel(f)?;
            let direct = qg.kernel(f)?;
            let conj = gauge_conjugate(&k, g);
            worst = worst.max(frobenius(&(direct.data() - conj.data())) / frobenius(k.data()));
        }
    }
    Ok(worst)
}

/// Stokes (circulation loop = flux), the Λ-phase product and the flux cocycle over
/// `count` random triples/quadruples in [−r, r]^d.
pub fn stokes_cocycle(a: &VectorPotential, count: usize, r: f64, seed: u64, tol: f64) -> Checks {
    let mut rng = rng(seed);
    let d = a.dim();
    let b = a.field();
    let mut pt = || -> Vec<f64> { (0..d).map(|_| rng.random_range(-r..r)).collect() };
    let (mut stokes, mut phase, mut cocycle): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..count {
        let (x, y, z, w) = (pt(), pt(), pt(), pt());
        let flux = flux_triangle(b, &x, &y, &z)?;
        let loop_ = a.circulation_unchecked(&x, &y) + a.circulation_unchecked(&y, &z) + a.circulation_unchecked(&z, &x);
        stokes = stokes.max((loop_ - flux).abs());
        let lam = phase_lambda(a, &x, &y)? * phase_lambda(a, &y, &z)? * phase_lambda(a, &z, &x)?;
        phase = phase.max((lam - C64::from_polar(1.0, -flux)).norm());
        let cyc = flux_triangle(b, &x, &y, &w)? + flux_triangle(b, &y, &z, &w)? + flux_triangle(b, &z, &x, &w)?;
        cocycle = cocycle.max((cyc - flux).abs());
    }
    Ok(vec![
        Check::at_most("stokes_circulation", stokes, tol),
        Check::at_most("stokes_phase_product", phase, tol),
        Check::at_most("flux_cocycle", cocycle, tol),
    ])
}

/// Grid with L = √(nπ/2), so position and momentum boxes have equal extent.
pub fn balanced_grid(n: usize) -> Result<BoxGrid, CliError> {
    Ok(BoxGrid::new(2, (n as f64 * PI / 2.0).sqrt(), n)?)
}

/// Largest |direct − kernel| over the central nodes |x|, |ξ| ≤ 1, relative to sup |kernel product|.
pub fn moyal_cross_error(field: &Arc<MagneticField>, n: usize) -> Result<f64, CliError> {
    let g = balanced_grid(n)?;
    let [a, b, _] = gaussian_triple();
    let (f, h) = (symbol(&a, &g)?, symbol(&b, &g)?);
    let kern = Moyal::new(g, field.clone())?.product(&f, &h)?;
    let mut worst: f64 = 0.0;
    for p in 0..g.len() {
        let x = g.point(p);
        if x.iter().any(|v| v.abs() > 1.0) {
            continue;
        }
        for q in 0..g.len() {
            let xi = g.momentum(q);
            if xi.iter().all(|v| v.abs() <= 1.0) {
                let d = moyal_direct(&f, &h, field, &x, &xi)?;
                worst = worst.max((d - kern.at(p, q)).norm());
            }
        }
    }
    Ok(worst / kern.sup_norm())
}

pub fn trace_cyclic(mo: &Moyal, tol: f64) -> Checks {
    let g = *mo.grid();
    let [a, b, c] = gaussian_triple();
    let (f, h, k) = (symbol(&a, &g)?, symbol(&b, &g)?, symbol(&c, &g)?);
    let t = mo.trace_identity_check(&f, &h)?;
    let cy = mo.cyclic_identity_check(&f, &h, &k)?;
    Ok(vec![Check::at_most("trace_identity", t.relative_error(), tol), Check::at_most("cyclic_identity", cy.relative_error, tol)])
}

pub fn associativity(mo: &Moyal, tol: f64) -> Checks {
    let g = *mo.grid();
    let [a, b, c] = gaussian_triple();
    let (f, h, k) = (symbol(&a, &g)?, symbol(&b, &g)?, symbol(&c, &g)?);
    let left = mo.product(&mo.product(&f, &h)?, &k)?;
    let right = mo.product(&f, &mo.product(&h, &k)?)?;
    Ok(vec![Check::at_most("moyal_associativity", left.max_abs_diff(&right) / left.sup_norm(), tol)])
}

/// Width of the ξ-Gaussian used for the diamagnetic check: 1, narrowed so the Gaussian
/// is below e^{−18} at the momentum box edge (truncation would make the kernel negative).
pub fn diamagnetic_width(grid: &BoxGrid) -> f64 {
    let xi_max = grid.n as f64 * PI / (2.0 * grid.half_width);
    (xi_max / 6.0).min(1.0)
}

/// Worst pointwise violation of |Op^A(F)φ| ≤ Op⁰(F)|φ| for F = e^{−|ξ|²/(2w²)} over two test states.
pub fn diamagnetic(a: &VectorPotential, grid: BoxGrid) -> Result<f64, CliError> {
    let f = symbol(&SymbolSpec::XiGaussian { width: diamagnetic_width(&grid) }, &grid)?;
    let plain = StateVector::gaussian(grid, &[0.3, -0.4], 1.1, &[0.0, 0.0]);
    let wavy = StateVector::from_fn(grid, |x| {
        C64::from_polar((-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp() * (1.0 + 0.3 * x[0].sin()), 0.7 * x[1] - 0.2 * x[0] * x[0])
    });
    let mut worst = f64::NEG_INFINITY;
    for phi in [&plain, &wavy] {
        worst = worst.max(diamagnetic_check(&f, a, phi)?.max_violation);
    }
    Ok(worst)
}

/// ξ₁♯ξ₂ − ξ₂♯ξ₁ for each constant field strength, probed with a centred unit Gaussian.
pub fn commutator_data(grid: BoxGrid, bs: &[f64]) -> Result<Vec<CommutatorCheck>, CliError> {
    let phi = StateVector::gaussian(grid, &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    bs.iter().map(|&b| Ok(magnetic_commutator_check(grid, b, &phi)?)).collect()
}

/// Sign, expectation and linearity checks (operator level) plus the symbol-level error
/// with the given threshold.
pub fn commutator_checks(data: &[CommutatorCheck], s: f64, tol: f64, symbol_threshold: Threshold) -> Vec<Check> {
    let mut out = Vec::new();
    for c in data {
        out.push(Check::flag(format!("commutator_sign_b{}", c.b), c.sign == s));
        out.push(Check::at_most(format!("commutator_expectation_b{}", c.b), (c.expectation - C64::new(0.0, s * c.b)).norm(), tol));
        out.push(Check::new(format!("commutator_symbol_b{}", c.b), c.symbol_error, symbol_threshold));
    }
    if let Some(first) = data.first() {
        let base = first.expectation / first.b;
        let lin = data.iter().fold(0.0f64, |m, c| m.max((c.expectation / c.b - base).norm()));
        out.push(Check::at_most("commutator_linearity", lin, tol));
    }
    out
}

/// Central second derivatives of ω by nested differences, the finite-difference oracle.
fn fd_omega(b: &MagneticField, axis: Axis, alpha: &[usize], x: &[f64], y: &[f64], z: &[f64], h: f64) -> Result<C64, CliError> {
    let Some(i) = alpha.iter().position(|&a| a > 0) else {
        return Ok(omega_phase(b, x, y, z)?);
    };
    let mut lower = alpha.to_vec();
    lower[i] -= 1;
    let shift = |s: f64| {
        let (mut xs, mut ys, mut zs) = (x.to_vec(), y.to_vec(), z.to_vec());
        match axis {
            Axis::X => xs[i] += s,
            Axis::Y => ys[i] += s,
            Axis::Z => zs[i] += s,
        }
        fd_omega(b, axis, &lower, &xs, &ys, &zs, h)
    };
    Ok((shift(h)? - shift(-h)?) / (2.0 * h))
}

/// Faà di Bruno derivatives of ω against finite differences (|α| ≤ 2, all three
/// argument blocks), vanishing x-derivatives for a constant field, and the λ-scaling
/// degree of y/z-derivatives.
pub fn omega_derivative_checks(constant_b: f64, seed: u64, tol: f64) -> Checks {
    let mut rng = rng(seed);
    let b = polynomial_field();
    let mut fd_err: f64 = 0.0;
    for _ in 0..6 {
        let mut pt = || -> Vec<f64> { (0..2).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (x, y, z) = (pt(), pt(), pt());
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for ord in 1..=2 {
                for alpha in multi_indices(2, ord) {
                    let exact = omega_derivative(&b, axis, &alpha, &x, &y, &z)?;
                    let h = if ord == 1 { 1e-4 } else { 1e-3 };
                    let fd = fd_omega(&b, axis, &alpha, &x, &y, &z, h)?;
                    fd_err = fd_err.max((exact - fd).norm() / exact.norm().max(1e-3));
                }
            }
        }
    }
    let cb = MagneticField::constant_2d(constant_b);
    let mut x_deriv: f64 = 0.0;
    for alpha in [vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]] {
        x_deriv = x_deriv.max(omega_derivative(&cb, Axis::X, &alpha, &[0.3, 0.1], &[1.0, -2.0], &[0.5, 0.4])?.norm());
    }
    let mut excess = f64::NEG_INFINITY;
    for axis in [Axis::Y, Axis::Z] {
        for ord in 1..=2 {
            for alpha in multi_indices(2, ord) {
                let r = omega_scaling_degree(2, &[1.0], axis, &alpha, &[0.2, -0.1], 1.0, &[1.0, 2.0, 4.0, 8.0])?;
                excess = excess.max(r.slope - r.order as f64);
            }
        }
    }
    Ok(vec![
        Check::at_most("faa_di_bruno_vs_fd", fd_err, tol),
        Check::at_most("omega_x_derivative_constant_field", x_deriv, 0.0),
        Check::at_most("omega_scaling_degree_excess", excess, magweyl::field_geometry::SCALING_SLACK),
    ])
}

/// Remainder norms ‖Op(X_k)‖ strictly decreasing over the first three steps and the
/// semiboundedness certificate.
pub fn sqrt_checks(q: &Quantizer, f: &Symbol, a_f: f64) -> Result<(Vec<Check>, SqrtDecomposition), CliError> {
    let dec = sqrt_recursion(q, f, n_p(f.order()), a_f)?;
    let norms = &dec.remainder_norms;
    let k = norms.len().min(3);
    let decreasing = norms[..k].windows(2).all(|w| w[1] < w[0]);
    let cert = semibound_certificate(q, f, a_f)?;
    let mut out = vec![Check::flag("sqrt_remainders_strictly_decreasing", decreasing)];
    for (i, v) in norms.iter().enumerate() {
        out.push(Check::report(format!("sqrt_remainder_norm_X{}", i + 1), *v));
    }
    out.push(Check::flag("semibound_consistent", cert.consistent));
    out.push(Check::report("semibound_lower_bound", cert.lower_bound));
    out.push(Check::report("semibound_min_eigenvalue", cert.min_eigenvalue));
    Ok((out, dec))
}

/// First remainder of the recursion without a field.
pub fn sqrt_free_remainder(grid: BoxGrid, f: &SymbolSpec, a_f: f64) -> Result<f64, CliError> {
    let q = Quantizer::free(grid);
    let s = symbol(f, &grid)?;
    let dec = sqrt_recursion(&q, &s, n_p(s.order()), a_f)?;
    Ok(dec.remainder_norms[0])
}

pub struct ResolventTolerances {
    pub residual: f64,
    pub dense: f64,
    pub identity: f64,
}

/// Accepted-shift defect, both residuals, dense-inverse agreement, resolvent identity and
/// the defect-vs-shift slope.
pub fn resolvent_checks(
    q: &Quantizer,
    f: &Symbol,
    shifts: &[f64],
    z: (f64, f64),
    tol: &ResolventTolerances,
) -> Result<(Vec<Check>, ResolventResult, DefectScaling), CliError> {
    let r = resolvent(q, f, tol.residual)?;
    let shifts: Vec<f64> =
        if shifts.is_empty() { (0..5).map(|k| r.shift * 2f64.powi(k)).collect() } else { shifts.to_vec() };
    let scaling = defect_scaling(q, f, &shifts)?;
    let id = resolvent_identity_check(q, f, z.0, z.1, tol.residual)?;
    let slope = scaling.slope.unwrap_or(f64::NEG_INFINITY);
    let out = vec![
        Check::report("resolvent_shift", r.shift),
        Check::at_most("resolvent_defect_at_shift", r.defect_norm, 0.5),
        Check::at_most("resolvent_right_residual", r.right_residual, tol.residual),
        Check::at_most("resolvent_left_residual", r.left_residual, tol.residual),
        Check::at_most("resolvent_dense_inverse", r.dense_inverse_error, tol.dense),
        Check::at_most("resolvent_identity", id.residual.max(id.residual_swapped), tol.identity),
        Check::at_most("defect_slope", slope, scaling.threshold),
    ];
    Ok((out, r, scaling))
}

pub struct EvolutionTolerances {
    pub unitarity: f64,
    pub group_law: f64,
    pub expansion: f64,
    pub energy: f64,
}

pub struct EvolutionInput<'a> {
    pub phi: &'a StateVector,
    pub times: &'a [f64],
    pub max_order: usize,
    pub cauchy_t: f64,
    pub cauchy_dt: f64,
    pub seed: u64,
}

/// Unitarity, group law, energy, commutation with H, Cauchy Richardson ratio and the
/// commutator expansion for N ≤ 3.
pub fn evolution_checks(
    h: &Hamiltonian,
    input: &EvolutionInput<'_>,
    tol: &EvolutionTolerances,
) -> Checks {
    let dim = h.operator().nrows();
    let mut drift: f64 = 0.0;
    for t in [0.3, 1.0, -2.0] {
        let w = h.propagator_matrix(t);
        drift = drift.max(max_abs(&(matmul(&w.adjoint(), &w) - identity(dim))));
    }
    let mut group: f64 = 0.0;
    for (t, s) in [(0.2, 0.5), (1.0, -0.4)] {
        let lhs = matmul(&h.propagator_matrix(t), &h.propagator_matrix(s));
        group = group.max(max_abs(&(lhs - h.propagator_matrix(t + s))));
    }
    let phi = input.phi;
    let e0 = h.energy(phi)?;
    let (mut energy, mut commute): (f64, f64) = (0.0, 0.0);
    for &t in input.times {
        let psi = h.evolve_state(t, phi)?;
        energy = energy.max((h.energy(&psi)? - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        let a = h.apply(&psi)?.to_cvec();
        let b = h.evolve_state(t, &h.apply(phi)?)?.to_cvec();
        commute = commute.max((a - b).norm() * phi.grid().cell_volume().sqrt() / phi.norm());
    }
    let cauchy = h.cauchy_richardson(input.cauchy_t, input.cauchy_dt)?;
    let mut rng = rng(input.seed);
    let mut random = |n: usize| CMat::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut expansion: f64 = 0.0;
    for (count, n) in [(1, 8), (2, 8), (3, 6)] {
        let fs: Vec<CMat> = (0..count).map(|_| random(n)).collect();
        expansion = expansion.max(commutator_expansion_check(&fs, &random(n))?);
    }
    Ok(vec![
        Check::at_most("unitarity_drift", drift, tol.unitarity),
        Check::at_most("group_law", group, tol.group_law),
        Check::at_most("energy_conservation", energy, tol.energy),
        Check::at_most("commutes_with_hamiltonian", commute, 1e-8),
        Check::new("cauchy_richardson_ratio", cauchy.ratio, Threshold::Within(3.5, 4.5)),
        Check::flag("cauchy_residual_within_bound", cauchy.within_bound),
        Check::at_most("commutator_expansion", expansion, tol.expansion),
    ])
}

/// Moment table of W(t)φ and the envelope verdict.
pub fn moment_checks(h: &Hamiltonian, input: &EvolutionInput<'_>) -> Result<(Vec<Check>, MomentReport), CliError> {
    let rep = h.moment_diagnostics(input.phi, input.times, input.max_order)?;
    let out = vec![
        Check::flag("moments_within_envelope", rep.passed),
        Check::report("moment_envelope_exponent", rep.exponent),
        Check::report("moment_worst_tail", rep.worst_tail),
    ];
    Ok((out, rep))
}

/// Lowest three cluster gaps of an ascending Landau spectrum equal 2b within `tol` (relative),
/// lowest cluster at least threefold degenerate.
pub fn landau_checks(energies: &[f64], b: f64, tol: f64) -> Vec<Check> {
    let spec = landau_spectrum(energies, 1e-4, 3, 16);
    let mut out = vec![Check::new("landau_clusters", spec.clusters.len() as f64, Threshold::AtLeast(4.0))];
    let gap_err = if spec.gaps.len() >= 3 {
        spec.gaps[..3].iter().fold(0.0f64, |m, g| m.max((g - 2.0 * b).abs() / (2.0 * b)))
    } else {
        f64::INFINITY
    };
    out.push(Check::at_most("landau_gap_error", gap_err, tol));
    out.push(Check::new("landau_lowest_degeneracy", spec.clusters.first().map_or(0.0, |c| c.1 as f64), Threshold::AtLeast(3.0)));
    out
}
