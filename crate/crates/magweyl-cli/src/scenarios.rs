//! Scenario dispatch. Each scenario appends checks to a [`RunReport`] and writes its
//! datasets as CSV with a plot script beside each figure-worthy one.

use std::path::{Path, PathBuf};
use std::time::Instant;

use magweyl::evolution::{moment_indices, Hamiltonian, MomentTable};
use magweyl::field_geometry::{MagneticField, VectorPotential};
use magweyl::linalg::max_abs;
use magweyl::moyal_product::Moyal;
use magweyl::quantization::Quantizer;
use magweyl::symbol_space::{write_symbol, BoxGrid, StateVector, Symbol, SymbolSpec};

use crate::checks::{self, EvolutionInput, EvolutionTolerances, ResolventTolerances};
use crate::config::{Scenario, ScenarioConfig};
use crate::plot::{emit_plot_script, PlotKind};
use crate::report::{Check, RunReport, Threshold};
use crate::CliError;

/// Sign s in [Π₁, Π₂] = s·i·b, fixed once for this library.
pub const COMMUTATOR_SIGN: f64 = 1.0;

/// Grid of the convention pin, independent of the configured grid.
pub const PIN_N: usize = 64;
pub const PIN_L: f64 = 8.0;

const STOKES_SAMPLES: usize = 100;
const STOKES_RADIUS: f64 = 3.0;

/// Validates `cfg`, runs `scenario` and writes `report.json` plus datasets into `out`.
///
/// Invalid configurations come back as `Err(CliError::Config)` before anything is written.
/// Failures while running are recorded in the report, which is still written.
pub fn run_scenario(cfg: &ScenarioConfig, scenario: Scenario, out: &Path) -> Result<RunReport, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut report = RunReport::new(scenario.name());
    let ctx = Context::new(cfg, out)?;
    let result = match scenario {
        Scenario::Validate => validate(&ctx, &mut report),
        Scenario::Compose => compose(&ctx, &mut report),
        Scenario::Sqrt => sqrt(&ctx, &mut report),
        Scenario::Resolvent => resolvent(&ctx, &mut report),
        Scenario::Evolve => evolve(&ctx, &mut report),
        Scenario::Sweep => sweep(&ctx, &mut report),
    };
    match result {
        Ok(()) => {}
        Err(e @ CliError::Config(_)) => return Err(e),
        Err(e) => report.fail_with(e.to_string()),
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    let path = out.join("report.json");
    report.outputs.push(path.clone());
    report.outputs.sort();
    report.write(out)?;
    Ok(report)
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    out: &'a Path,
    grid: BoxGrid,
    potential: VectorPotential,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ScenarioConfig, out: &'a Path) -> Result<Self, CliError> {
        let grid = cfg.grid.build()?;
        let potential = cfg.field.build().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Context { cfg, out, grid, potential })
    }

    fn quantizer(&self) -> Result<Quantizer, CliError> {
        Ok(Quantizer::new(self.grid, self.potential.clone())?)
    }

    fn field(&self) -> &MagneticField {
        self.potential.field()
    }

    /// b₁₂ when the field is constant.
    fn constant_b(&self) -> Option<f64> {
        self.field().constant_components().and_then(|c| c.first().copied())
    }

    fn specs_or(&self, default: &[SymbolSpec]) -> Result<Vec<SymbolSpec>, CliError> {
        let specs = self.cfg.symbol_specs()?;
        Ok(if specs.is_empty() { default.to_vec() } else { specs })
    }

    fn symbols(&self, specs: &[SymbolSpec]) -> Result<Vec<Symbol>, CliError> {
        specs.iter().map(|s| checks::symbol(s, &self.grid)).collect()
    }
}

/// Writes a CSV with the given header; floats use the shortest round-trip form.
fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn dataset(
    report: &mut RunReport,
    path: PathBuf,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    plot: Option<PlotKind>,
) -> Result<(), CliError> {
    write_csv(&path, header, rows)?;
    if let Some(kind) = plot {
        report.outputs.push(emit_plot_script(&path, kind)?);
    }
    report.outputs.push(path);
    Ok(())
}

fn join_index(a: &[usize]) -> String {
    a.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

pub fn moment_rows(table: &MomentTable) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .map(|r| vec![r.t.to_string(), join_index(&r.alpha), join_index(&r.beta), r.norm.to_string()])
        .collect()
}

fn validate(ctx: &Context<'_>, report: &mut RunReport) -> Result<(), CliError> {
    let tol = &ctx.cfg.tolerances;
    let seed = ctx.cfg.seed;
    report.extend(checks::convention_pin(BoxGrid::new(2, PIN_L, PIN_N)?, tol.convention)?);

    let q = ctx.quantizer()?;
    let symbols = ctx.symbols(&ctx.specs_or(&checks::gauge_symbols())?)?;
    report.extend(checks::hermiticity(&q, &symbols, tol.hermitian)?);
    let gauge = checks::gauge_covariance(&q, &symbols, &checks::gauge_functions())?;
    report.push(Check::at_most("gauge_covariance", gauge, tol.gauge));
    report.extend(checks::stokes_cocycle(&ctx.potential, STOKES_SAMPLES, STOKES_RADIUS, seed, tol.stokes)?);

    let mo = Moyal::from_quantizer(q);
    report.extend(checks::trace_cyclic(&mo, tol.trace)?);
    report.extend(checks::associativity(&mo, tol.associativity)?);
    let dia = checks::diamagnetic(&ctx.potential, ctx.grid)?;
    report.push(Check::at_most("diamagnetic_violation", dia, tol.diamagnetic));

    match ctx.constant_b() {
        Some(b) if b != 0.0 => {
            let data = checks::commutator_data(ctx.grid, &[b])?;
            report.extend(checks::commutator_checks(&data, COMMUTATOR_SIGN, tol.commutator, Threshold::Report));
            report.push(Check::report(format!("commutator_operator_residual_b{b}"), data[0].operator_residual));
        }
        _ => {}
    }
    report.extend(checks::omega_derivative_checks(ctx.constant_b().unwrap_or(1.0), seed, tol.faa_di_bruno)?);
    Ok(())
}

fn compose(ctx: &Context<'_>, report: &mut RunReport) -> Result<(), CliError> {
    let tol = &ctx.cfg.tolerances;
    let specs = ctx.specs_or(&checks::gaussian_triple())?;
    if specs.len() < 2 {
        return Err(CliError::Config("compose needs at least two symbols".into()));
    }
    let symbols = ctx.symbols(&specs)?;
    let q = ctx.quantizer()?;
    let (f, g) = (&symbols[0], &symbols[1]);
    let mo = Moyal::from_quantizer(q.clone());
    let fg = mo.product(f, g)?;
    let direct = q.kernel(&fg)?;
    let prod = q.kernel(f)?.compose(&q.kernel(g)?)?;
    let closure = max_abs(&(direct.data() - prod.data())) / max_abs(prod.data()).max(f64::MIN_POSITIVE);
    report.push(Check::at_most("closure_op_of_product", closure, tol.associativity));
    let rem = mo.remainder(f, g)?;
    report.push(Check::report("remainder_seminorm", rem.seminorm));
    let tr = mo.trace_identity_check(f, g)?;
    report.push(Check::at_most("trace_identity", tr.relative_error(), tol.trace));
    if let Some(h) = symbols.get(2) {
        let left = mo.product(&fg, h)?;
        let right = mo.product(f, &mo.product(g, h)?)?;
        report.push(Check::at_most("moyal_associativity", left.max_abs_diff(&right) / left.sup_norm(), tol.associativity));
        let cy = mo.cyclic_identity_check(f, g, h)?;
        report.push(Check::at_most("cyclic_identity", cy.relative_error, tol.trace));
    }
    let stem = ctx.out.join("product");
    write_symbol(&stem, &fg)?;
    report.outputs.push(stem.with_extension("bin"));
    report.outputs.push(stem.with_extension("json"));
    Ok(())
}

fn first_or_kinetic(ctx: &Context<'_>) -> Result<SymbolSpec, CliError> {
    Ok(ctx.specs_or(&[SymbolSpec::Ps { s: 2.0 }])?.remove(0))
}

fn sqrt(ctx: &Context<'_>, report: &mut RunReport) -> Result<(), CliError> {
    let spec = first_or_kinetic(ctx)?;
    let f = checks::symbol(&spec, &ctx.grid)?;
    let a_f = f.min_real();
    if !(a_f > 0.0) {
        return Err(CliError::Config(format!("sqrt needs a positive symbol, minimum is {a_f}")));
    }
    let (cs, dec) = checks::sqrt_checks(&ctx.quantizer()?, &f, a_f)?;
    report.extend(cs);
    if matches!(spec, SymbolSpec::Ps { .. } | SymbolSpec::XiGaussian { .. }) {
        let free = checks::sqrt_free_remainder(ctx.grid, &spec, a_f)?;
        report.push(Check::at_most("sqrt_free_remainder", free, ctx.cfg.tolerances.sqrt_free));
    }
    let rows = dec
        .remainder_norms
        .iter()
        .zip(&dec.remainder_seminorms)
        .enumerate()
        .map(|(k, (n, s))| vec![(k + 1).to_string(), n.to_string(), s.to_string()]);
    dataset(report, ctx.out.join("remainders.csv"), &["k", "norm", "seminorm"], rows, Some(PlotKind::Convergence))?;
    let dir = ctx.out.join("sqrt");
    dec.export(&dir)?;
    report.outputs.push(dir);
    Ok(())
}

fn resolvent(ctx: &Context<'_>, report: &mut RunReport) -> Result<(), CliError> {
    let tol = &ctx.cfg.tolerances;
    let rc = &ctx.cfg.resolvent;
    let f = checks::symbol(&first_or_kinetic(ctx)?, &ctx.grid)?;
    let rt = ResolventTolerances { residual: tol.resolvent, dense: tol.dense_inverse, identity: tol.resolvent_identity };
    let (cs, r, scaling) = checks::resolvent_checks(&ctx.quantizer()?, &f, &rc.shifts, (rc.z1, rc.z2), &rt)?;
    report.extend(cs);
    let rows = scaling.shifts.iter().zip(&scaling.defects).map(|(a, d)| vec![a.to_string(), d.to_string()]);
    dataset(report, ctx.out.join("defect.csv"), &["shift", "defect"], rows, Some(PlotKind::Defect))?;
    let dir = ctx.out.join("resolvent");
    r.export(&dir)?;
    report.outputs.push(dir);
    Ok(())
}

fn evolve(ctx: &Context<'_>, report: &mut RunReport) -> Result<(), CliError> {
    let tol = &ctx.cfg.tolerances;
    let ec = &ctx.cfg.evolve;
    let h = Hamiltonian::from_spec(ctx.quantizer()?, &first_or_kinetic(ctx)?)?;
    let phi = StateVector::gaussian(ctx.grid, &ec.state.center, ec.state.width, &ec.state.momentum);
    let input = EvolutionInput {
        phi: &phi,
        times: &ec.times,
        max_order: ec.max_order,
        cauchy_t: ec.cauchy_t,
        cauchy_dt: ec.cauchy_dt,
        seed: ctx.cfg.seed,
    };
    let et = EvolutionTolerances { unitarity: tol.unitarity, group_law: tol.group_law, expansion: tol.expansion, energy: tol.energy };
    let spectrum = h.energies().iter().enumerate().map(|(i, e)| vec![i.to_string(), e.to_string()]);
    dataset(report, ctx.out.join("spectrum.csv"), &["index", "value"], spectrum, Some(PlotKind::Spectra))?;
    report.extend(checks::evolution_checks(&h, &input, &et)?);
    if ec.landau {
        let b = ctx.constant_b().ok_or_else(|| CliError::Config("landau check needs a constant field".into()))?;
        report.extend(checks::landau_checks(h.energies(), b, tol.landau));
    }
    if !ec.times.is_empty() {
        let (cs, m) = checks::moment_checks(&h, &input)?;
        report.extend(cs);
        report.push(Check::report("moment_entries", moment_indices(2 * ctx.grid.d, ec.max_order).len() as f64));
        let rows = moment_rows(&m.table);
        dataset(report, ctx.out.join("moments.csv"), &["t", "alpha", "beta", "norm"], rows, Some(PlotKind::Moments))?;
    }
    Ok(())
}

fn sweep(ctx: &Context<'_>, report: &mut RunReport) -> Result<(), CliError> {
    let tol = &ctx.cfg.tolerances;
    let field = ctx.potential.field().clone();
    let mut errors = Vec::new();
    for &n in &ctx.cfg.sweep.ns {
        let e = checks::moyal_cross_error(&field, n)?;
        report.push(Check::report(format!("moyal_cross_error_n{n}"), e));
        errors.push((n, e));
    }
    let decreasing = errors.windows(2).all(|w| w[1].1 < w[0].1);
    report.push(Check::flag("moyal_cross_error_decreasing", decreasing));
    if let Some(&(n, e)) = errors.last() {
        report.push(Check::at_most(format!("moyal_cross_error_finest_n{n}"), e, tol.moyal_cross));
    }
    let rows = errors.iter().map(|(n, e)| vec![n.to_string(), e.to_string()]);
    dataset(report, ctx.out.join("convergence.csv"), &["n", "error"], rows, Some(PlotKind::Convergence))?;
    Ok(())
}
