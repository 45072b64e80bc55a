use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use magweyl::field_geometry::{FieldConfig, FieldSpec};
use magweyl::symbol_space::{BoxGrid, SymbolSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Validate,
    Compose,
    Sqrt,
    Resolvent,
    Evolve,
    Sweep,
}

impl Scenario {
    pub const ALL: [Scenario; 6] =
        [Scenario::Validate, Scenario::Compose, Scenario::Sqrt, Scenario::Resolvent, Scenario::Evolve, Scenario::Sweep];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Validate => "validate",
            Scenario::Compose => "compose",
            Scenario::Sqrt => "sqrt",
            Scenario::Resolvent => "resolvent",
            Scenario::Evolve => "evolve",
            Scenario::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

fn default_d() -> usize {
    2
}

impl GridConfig {
    pub fn build(&self) -> Result<BoxGrid, CliError> {
        BoxGrid::new(self.d, self.half_width, self.n).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies `n=32,L=8` style overrides.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), CliError> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| CliError::Config(format!("grid override `{part}` is not key=value")))?;
            let bad = || CliError::Config(format!("grid override `{part}` has a bad value"));
            match key.trim() {
                "n" => self.n = value.trim().parse().map_err(|_| bad())?,
                "L" => self.half_width = value.trim().parse().map_err(|_| bad())?,
                "d" => self.d = value.trim().parse().map_err(|_| bad())?,
                other => return Err(CliError::Config(format!("unknown grid key `{other}`"))),
            }
        }
        Ok(())
    }
}

/// Per-check thresholds; every value must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub hermitian: f64,
    pub convention: f64,
    pub gauge: f64,
    pub stokes: f64,
    pub moyal_cross: f64,
    pub trace: f64,
    pub diamagnetic: f64,
    pub commutator: f64,
    pub associativity: f64,
    pub sqrt_free: f64,
    pub resolvent: f64,
    pub dense_inverse: f64,
    pub resolvent_identity: f64,
    pub unitarity: f64,
    pub group_law: f64,
    pub expansion: f64,
    pub energy: f64,
    pub faa_di_bruno: f64,
    pub landau: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            convention: 1e-6,
            gauge: 1e-9,
            stokes: 1e-8,
            moyal_cross: 5e-2,
            trace: 1e-8,
            diamagnetic: 1e-8,
            commutator: 1e-6,
            associativity: 1e-8,
            sqrt_free: 1e-9,
            resolvent: 1e-6,
            dense_inverse: 1e-5,
            resolvent_identity: 1e-6,
            unitarity: 1e-10,
            group_law: 1e-9,
            expansion: 1e-12,
            energy: 1e-9,
            faa_di_bruno: 1e-5,
            landau: 2e-2,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<(), CliError> {
        let v = serde_json::to_value(self).map_err(|e| CliError::Config(e.to_string()))?;
        for (k, x) in v.as_object().into_iter().flatten() {
            let x = x.as_f64().unwrap_or(f64::NAN);
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::Config(format!("tolerance `{k}` must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

/// Initial state exp(−|x − c|²/(2w²) + i⟨k, x⟩).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub center: Vec<f64>,
    pub width: f64,
    pub momentum: Vec<f64>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig { center: vec![0.0, 0.0], width: 1.0, momentum: vec![0.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub times: Vec<f64>,
    pub max_order: usize,
    pub state: StateConfig,
    /// Cauchy-residual time and step
    pub cauchy_t: f64,
    pub cauchy_dt: f64,
    /// also check the lowest Landau gaps (constant field, h = ⟨ξ⟩²)
    pub landau: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            max_order: 2,
            state: StateConfig::default(),
            cauchy_t: 0.3,
            cauchy_dt: magweyl::evolution::DEFAULT_DT,
            landau: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { ns: vec![4, 6, 8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventConfig {
    /// shifts for the defect-vs-shift fit; empty means 5 doublings from the accepted shift
    pub shifts: Vec<f64>,
    pub z1: f64,
    pub z2: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        ResolventConfig { shifts: Vec::new(), z1: 20.0, z2: 35.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    pub grid: GridConfig,
    #[serde(default = "default_field")]
    pub field: FieldConfig,
    /// raw symbol specs; parsed by [`ScenarioConfig::symbol_specs`]
    #[serde(default)]
    pub symbols: Vec<serde_json::Value>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub resolvent: ResolventConfig,
}

fn default_field() -> FieldConfig {
    FieldConfig { field: FieldSpec::Constant { d: 2, components: vec![1.0] }, gauge: None }
}

impl ScenarioConfig {
    pub fn minimal(grid: GridConfig) -> Self {
        ScenarioConfig {
            scenario: None,
            grid,
            field: default_field(),
            symbols: Vec::new(),
            tolerances: Tolerances::default(),
            out: None,
            seed: 0,
            evolve: EvolveConfig::default(),
            sweep: SweepConfig::default(),
            resolvent: ResolventConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn symbol_specs(&self) -> Result<Vec<SymbolSpec>, CliError> {
        self.symbols.iter().map(|v| SymbolSpec::from_value(v).map_err(|e| CliError::Config(e.to_string()))).collect()
    }

    /// Checks everything that can be checked without running the scenario.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid.n == 0 || !self.grid.n.is_multiple_of(2) {
            return Err(CliError::Config(format!("grid n must be even and positive, got {}", self.grid.n)));
        }
        if self.grid.d != 2 {
            return Err(CliError::Config(format!("only d = 2 grids are supported, got d = {}", self.grid.d)));
        }
        self.grid.build()?;
        let a = self.field.build().map_err(|e| CliError::Config(format!("unsupported field: {e}")))?;
        if a.dim() != self.grid.d {
            return Err(CliError::Config(format!("field has d = {}, grid has d = {}", a.dim(), self.grid.d)));
        }
        self.tolerances.validate()?;
        for spec in self.symbol_specs()? {
            spec.check_dim(self.grid.d).map_err(|e| CliError::Config(e.to_string()))?;
        }
        let ev = &self.evolve;
        if ev.max_order > magweyl::evolution::MAX_MOMENT_ORDER {
            return Err(CliError::Config(format!("evolve.max_order must be ≤ {}", magweyl::evolution::MAX_MOMENT_ORDER)));
        }
        if !(ev.cauchy_dt > 0.0) || !(ev.state.width > 0.0) {
            return Err(CliError::Config("evolve.cauchy_dt and evolve.state.width must be positive".into()));
        }
        if ev.state.center.len() != self.grid.d || ev.state.momentum.len() != self.grid.d {
            return Err(CliError::Config("evolve.state center/momentum must have length d".into()));
        }
        if ev.times.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("evolve.times must be finite".into()));
        }
        if self.sweep.ns.len() < 2 || self.sweep.ns.iter().any(|&n| n == 0 || n % 2 != 0) {
            return Err(CliError::Config("sweep.ns needs at least two even sizes".into()));
        }
        if self.resolvent.shifts.iter().any(|&a| !(a > 0.0)) {
            return Err(CliError::Config("resolvent.shifts must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"grid": {"L": 8, "n": 16}}"#).unwrap();
        assert_eq!(cfg.grid.d, 2);
        assert_eq!(cfg.tolerances, Tolerances::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let odd = ScenarioConfig::from_json(r#"{"grid": {"L": 8, "n": 15}}"#).unwrap();
        assert!(odd.validate().is_err());
        assert!(ScenarioConfig::from_json(r#"{"grid": {"L": 8, "n": 16}, "bogus": 1}"#).is_err());
        let neg = ScenarioConfig::from_json(r#"{"grid": {"L": 8, "n": 16}, "tolerances": {"gauge": -1}}"#).unwrap();
        assert!(neg.validate().is_err());
        let sym = ScenarioConfig::from_json(r#"{"grid": {"L": 8, "n": 16}, "symbols": [{"kind": "nope"}]}"#).unwrap();
        assert!(sym.validate().is_err());
        let field = r#"{"grid": {"L": 8, "n": 16}, "field": {"kind": "weird"}}"#;
        assert!(ScenarioConfig::from_json(field).is_err());
    }

    #[test]
    fn grid_override() {
        let mut g = GridConfig { d: 2, half_width: 4.0, n: 8 };
        g.apply_override("n=32,L=8").unwrap();
        assert_eq!((g.n, g.half_width), (32, 8.0));
        assert!(g.apply_override("m=3").is_err());
        assert!(g.apply_override("n=x").is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("nope".parse::<Scenario>().is_err());
    }
}
