//! The thirteen acceptance criteria with their grids and tolerances pinned.
//!
//! Each criterion returns gated checks (asserted by the acceptance target) and
//! informational ones. Criterion 7 carries its symbol-level identity as informational:
//! the commutator of two finite matrices is traceless, so the constant symbol i·b is
//! out of reach on any grid, while the operator-level statements hold.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use magweyl::evolution::{operator_spectrum, Hamiltonian};
use magweyl::field_geometry::{MagneticField, VectorPotential};
use magweyl::moyal_product::Moyal;
use magweyl::quantization::Quantizer;
use magweyl::symbol_space::{BoxGrid, StateVector, SymbolSpec};

use crate::checks::{self, EvolutionInput, EvolutionTolerances, ResolventTolerances};
use crate::config::{GridConfig, Scenario, ScenarioConfig};
use crate::report::{Check, Threshold};
use crate::scenarios::run_scenario;
use crate::CliError;

pub const L: f64 = 8.0;
pub const SEED: u64 = 20240531;

pub const CONVENTION_N: usize = 64;
pub const CONVENTION_TOL: f64 = 1e-6;
pub const GAUGE_N: usize = 32;
pub const GAUGE_BS: [f64; 3] = [0.5, 1.0, 4.0];
pub const GAUGE_TOL: f64 = 1e-9;
pub const STOKES_SAMPLES: usize = 100;
pub const STOKES_RADIUS: f64 = 3.0;
pub const STOKES_TOL: f64 = 1e-8;
pub const MOYAL_NS: [usize; 3] = [4, 6, 8];
pub const MOYAL_TOL: f64 = 5e-2;
pub const TRACE_N: usize = 32;
pub const TRACE_BS: [f64; 3] = [0.0, 1.0, 2.0];
pub const TRACE_TOL: f64 = 1e-8;
pub const DIAMAGNETIC_N: usize = 32;
pub const DIAMAGNETIC_BS: [f64; 2] = [1.0, 4.0];
pub const DIAMAGNETIC_TOL: f64 = 1e-8;
pub const COMMUTATOR_N: usize = 32;
pub const COMMUTATOR_BS: [f64; 3] = [0.5, 1.0, 2.0];
pub const COMMUTATOR_TOL: f64 = 1e-6;
pub const SQRT_N: usize = 16;
pub const SQRT_FREE_TOL: f64 = 1e-9;
pub const RESOLVENT_N: usize = 16;
pub const RESOLVENT_TOL: f64 = 1e-6;
pub const DENSE_INVERSE_TOL: f64 = 1e-5;
pub const RESOLVENT_IDENTITY_TOL: f64 = 1e-6;
pub const RESOLVENT_Z: (f64, f64) = (20.0, 35.0);
pub const LANDAU_N: usize = 64;
pub const LANDAU_TOL: f64 = 2e-2;
pub const EVOLUTION_N: usize = 32;
pub const EVOLUTION_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const MOMENT_ORDER: usize = 3;
pub const CAUCHY_T: f64 = 0.3;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const GROUP_LAW_TOL: f64 = 1e-9;
pub const EXPANSION_TOL: f64 = 1e-12;
pub const ENERGY_TOL: f64 = 1e-9;
pub const FAA_DI_BRUNO_TOL: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    /// asserted
    pub gated: Vec<Check>,
    /// printed, not asserted
    pub informational: Vec<Check>,
}

impl Criterion {
    fn new(id: u8, title: &'static str, gated: Vec<Check>) -> Self {
        Criterion { id, title, gated, informational: Vec::new() }
    }

    /// Every check, gated or not, passes.
    pub fn passed(&self) -> bool {
        self.gated.iter().chain(&self.informational).all(|c| c.passed)
    }

    pub fn gate_passed(&self) -> bool {
        self.gated.iter().all(|c| c.passed)
    }

    /// The first failing check, else the first gated one.
    fn headline(&self) -> Option<&Check> {
        self.gated.iter().chain(&self.informational).find(|c| !c.passed).or_else(|| self.gated.first())
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {tag}: {}", self.id, self.title)?;
        if let Some(c) = self.headline() {
            write!(f, " | {} = {:e} ({})", c.name, c.value, c.threshold)?;
        }
        if !self.passed() && self.gate_passed() {
            f.write_str(" | gated checks pass")?;
        }
        Ok(())
    }
}

fn grid(n: usize) -> Result<BoxGrid, CliError> {
    Ok(BoxGrid::new(2, L, n)?)
}

fn constant(b: f64) -> Arc<MagneticField> {
    Arc::new(MagneticField::constant_2d(b))
}

fn quantizer(n: usize, b: f64) -> Result<Quantizer, CliError> {
    Ok(Quantizer::new(grid(n)?, VectorPotential::transversal(constant(b)))?)
}

pub fn convention_pin() -> Result<Criterion, CliError> {
    Ok(Criterion::new(1, "convention pin Op0(p_j) = -i d_j", checks::convention_pin(grid(CONVENTION_N)?, CONVENTION_TOL)?))
}

pub fn gauge_covariance() -> Result<Criterion, CliError> {
    let g = grid(GAUGE_N)?;
    let symbols = checks::gauge_symbols().iter().map(|s| checks::symbol(s, &g)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for b in GAUGE_BS {
        let e = checks::gauge_covariance(&quantizer(GAUGE_N, b)?, &symbols, &checks::gauge_functions())?;
        out.push(Check::at_most(format!("gauge_covariance_b{b}"), e, GAUGE_TOL));
    }
    Ok(Criterion::new(2, "gauge covariance", out))
}

/// A constant field and a polynomial one, the latter in a non-transversal gauge.
pub fn stokes_cocycle() -> Result<Criterion, CliError> {
    let [gauge, ..] = checks::gauge_functions();
    let potentials = [
        VectorPotential::transversal(constant(1.0)),
        VectorPotential::transversal(Arc::new(checks::polynomial_field())).with_gauge_function(gauge),
    ];
    let mut out = Vec::new();
    for (i, a) in potentials.iter().enumerate() {
        for mut c in checks::stokes_cocycle(a, STOKES_SAMPLES, STOKES_RADIUS, SEED + i as u64, STOKES_TOL)? {
            c.name = format!("{}_{}", c.name, ["constant", "polynomial"][i]);
            out.push(c);
        }
    }
    Ok(Criterion::new(3, "Stokes and flux cocycle identities", out))
}

pub fn moyal_cross_route() -> Result<Criterion, CliError> {
    let field = constant(1.0);
    let errors = MOYAL_NS.iter().map(|&n| checks::moyal_cross_error(&field, n)).collect::<Result<Vec<_>, _>>()?;
    let mut c = Criterion::new(
        4,
        "Moyal product, direct quadrature vs kernel route",
        vec![
            Check::at_most("moyal_cross_error_n8", errors[MOYAL_NS.len() - 1], MOYAL_TOL),
            Check::flag("moyal_cross_error_decreasing", errors.windows(2).all(|w| w[1] < w[0])),
        ],
    );
    c.informational = MOYAL_NS.iter().zip(&errors).map(|(n, e)| Check::report(format!("moyal_cross_error_n{n}"), *e)).collect();
    Ok(c)
}

pub fn trace_cyclic() -> Result<Criterion, CliError> {
    let mut out = Vec::new();
    for b in TRACE_BS {
        let mo = Moyal::from_quantizer(quantizer(TRACE_N, b)?);
        for mut c in checks::trace_cyclic(&mo, TRACE_TOL)? {
            c.name = format!("{}_b{b}", c.name);
            out.push(c);
        }
    }
    Ok(Criterion::new(5, "trace and cyclic identities", out))
}

pub fn diamagnetic() -> Result<Criterion, CliError> {
    let mut out = Vec::new();
    for b in DIAMAGNETIC_BS {
        let v = checks::diamagnetic(&VectorPotential::transversal(constant(b)), grid(DIAMAGNETIC_N)?)?;
        out.push(Check::at_most(format!("diamagnetic_violation_b{b}"), v, DIAMAGNETIC_TOL));
    }
    Ok(Criterion::new(6, "diamagnetic inequality", out))
}

#[derive(serde::Deserialize)]
struct SignFile {
    s: f64,
}

/// `golden` holds the recorded sign s.
pub fn magnetic_commutator(golden: &Path) -> Result<Criterion, CliError> {
    let text = std::fs::read_to_string(golden)?;
    let s = serde_json::from_str::<SignFile>(&text)?.s;
    let data = checks::commutator_data(grid(COMMUTATOR_N)?, &COMMUTATOR_BS)?;
    let all = checks::commutator_checks(&data, s, COMMUTATOR_TOL, Threshold::AtMost(COMMUTATOR_TOL));
    let (informational, gated): (Vec<Check>, Vec<Check>) = all.into_iter().partition(|c| c.name.starts_with("commutator_symbol"));
    let mut c = Criterion::new(7, "magnetic commutator p1#p2 - p2#p1 = s i b", gated);
    c.informational = informational;
    c.informational
        .extend(data.iter().map(|d| Check::report(format!("commutator_operator_residual_b{}", d.b), d.operator_residual)));
    Ok(c)
}

pub fn square_root() -> Result<Criterion, CliError> {
    let spec = SymbolSpec::Ps { s: 2.0 };
    let g = grid(SQRT_N)?;
    let f = checks::symbol(&spec, &g)?;
    let (mut out, _) = checks::sqrt_checks(&quantizer(SQRT_N, 1.0)?, &f, 1.0)?;
    out.push(Check::at_most("sqrt_free_remainder", checks::sqrt_free_remainder(g, &spec, 1.0)?, SQRT_FREE_TOL));
    Ok(Criterion::new(8, "square-root recursion", out))
}

pub fn resolvent() -> Result<Criterion, CliError> {
    let f = checks::symbol(&SymbolSpec::Ps { s: 2.0 }, &grid(RESOLVENT_N)?)?;
    let tol = ResolventTolerances { residual: RESOLVENT_TOL, dense: DENSE_INVERSE_TOL, identity: RESOLVENT_IDENTITY_TOL };
    let (out, _, _) = checks::resolvent_checks(&quantizer(RESOLVENT_N, 1.0)?, &f, &[], RESOLVENT_Z, &tol)?;
    Ok(Criterion::new(9, "resolvent", out))
}

pub fn landau() -> Result<Criterion, CliError> {
    let q = quantizer(LANDAU_N, 1.0)?;
    let h = checks::symbol(&SymbolSpec::Ps { s: 2.0 }, q.grid())?;
    let energies = operator_spectrum(&q, &h)?;
    Ok(Criterion::new(10, "Landau spectrum", checks::landau_checks(&energies, 1.0, LANDAU_TOL)))
}

pub fn evolution() -> Result<Criterion, CliError> {
    let g = grid(EVOLUTION_N)?;
    let h = Hamiltonian::from_spec(quantizer(EVOLUTION_N, 1.0)?, &SymbolSpec::Ps { s: 2.0 })?;
    let phi = StateVector::gaussian(g, &[0.0, 0.0], 1.0, &[0.0, 0.0]);
    let input = EvolutionInput {
        phi: &phi,
        times: &EVOLUTION_TIMES,
        max_order: MOMENT_ORDER,
        cauchy_t: CAUCHY_T,
        cauchy_dt: magweyl::evolution::DEFAULT_DT,
        seed: SEED,
    };
    let tol = EvolutionTolerances { unitarity: UNITARITY_TOL, group_law: GROUP_LAW_TOL, expansion: EXPANSION_TOL, energy: ENERGY_TOL };
    let mut out = checks::evolution_checks(&h, &input, &tol)?;
    let (moments, _) = checks::moment_checks(&h, &input)?;
    out.extend(moments);
    Ok(Criterion::new(11, "evolution group", out))
}

pub fn flux_phase() -> Result<Criterion, CliError> {
    Ok(Criterion::new(12, "flux phase derivatives", checks::omega_derivative_checks(1.0, SEED, FAA_DI_BRUNO_TOL)?))
}

/// Small-grid configurations whose CSV outputs are compared byte for byte.
pub fn determinism_configs() -> Vec<(Scenario, ScenarioConfig)> {
    let mut sweep = ScenarioConfig::minimal(GridConfig { d: 2, half_width: L, n: 8 });
    sweep.sweep.ns = vec![4, 6];
    let small = ScenarioConfig::minimal(GridConfig { d: 2, half_width: L, n: 16 });
    let mut spectrum = small.clone();
    spectrum.evolve.times.clear();
    vec![(Scenario::Sweep, sweep), (Scenario::Sqrt, small.clone()), (Scenario::Resolvent, small), (Scenario::Evolve, spectrum)]
}

/// Every CSV under `dir`, sorted by name, with its bytes.
pub fn csv_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.push((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), std::fs::read(&p)?));
        }
    }
    out.sort();
    Ok(out)
}

/// Runs every determinism configuration twice on each thread count and compares CSV bytes.
pub fn determinism(work: &Path, threads: [usize; 2]) -> Result<Criterion, CliError> {
    let mut reference: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    let mut identical = true;
    let mut files = 0usize;
    for (k, t) in threads.into_iter().enumerate() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().map_err(|e| CliError::Config(e.to_string()))?;
        for run in 0..2 {
            for (i, (sc, cfg)) in determinism_configs().into_iter().enumerate() {
                let dir = work.join(format!("{sc}_t{t}_r{run}"));
                pool.install(|| run_scenario(&cfg, sc, &dir))?;
                let bytes = csv_bytes(&dir)?;
                if k == 0 && run == 0 {
                    files += bytes.len();
                    reference.push(bytes);
                } else {
                    identical &= reference[i] == bytes;
                }
            }
        }
    }
    let mut c = Criterion::new(
        13,
        "determinism across runs and thread counts",
        vec![Check::flag("csv_bytes_identical", identical), Check::new("csv_files_compared", files as f64, Threshold::AtLeast(4.0))],
    );
    c.informational.push(Check::report("threads_a", threads[0] as f64));
    c.informational.push(Check::report("threads_b", threads[1] as f64));
    Ok(c)
}
