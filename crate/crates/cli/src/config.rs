//! Run configuration: TOML file plus `key=value` overrides, with defaults for
//! every field and unknown keys rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vibro::orbits::ContinuationParam;
use vibro::Params;

use crate::error::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub forcing: f64,
    pub omega: f64,
    pub friction: f64,
    pub left: f64,
    pub right: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = Params::baseline();
        Self { forcing: p.forcing, omega: p.omega, friction: p.friction, left: p.left, right: p.right }
    }
}

impl ParamsConfig {
    pub fn to_params(&self) -> Result<Params, Failure> {
        Params::new(self.forcing, self.omega, self.friction, self.left, self.right).map_err(Failure::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub x0: f64,
    pub v0: f64,
    pub t_span: f64,
    pub sample_dt: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { x0: 0.1002798898, v0: 0.5419433068, t_span: 2.0 * std::f64::consts::PI, sample_dt: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixpointConfig {
    pub seed: [f64; 2],
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        Self { seed: [0.1, 0.54], tol: 1e-11, max_iters: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchParam {
    Forcing,
    Friction,
    Omega,
    Gap,
}

impl From<BranchParam> for ContinuationParam {
    fn from(b: BranchParam) -> Self {
        match b {
            BranchParam::Forcing => ContinuationParam::Forcing,
            BranchParam::Friction => ContinuationParam::Friction,
            BranchParam::Omega => ContinuationParam::Omega,
            BranchParam::Gap => ContinuationParam::Gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchConfig {
    pub param: BranchParam,
    pub end: f64,
    pub step: f64,
    pub seed: [f64; 2],
}

impl Default for BranchConfig {
    fn default() -> Self {
        Self { param: BranchParam::Friction, end: 0.55, step: 0.005, seed: [0.1, 0.54] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionMapConfig {
    pub f_range: [f64; 2],
    pub r_range: [f64; 2],
    pub analytic_grid: [usize; 2],
    pub verify_frictions: Vec<f64>,
    pub verify_gaps: Vec<f64>,
}

impl Default for RegionMapConfig {
    fn default() -> Self {
        Self {
            f_range: [0.01, 0.65],
            r_range: [0.2, 4.5],
            analytic_grid: [220, 220],
            verify_frictions: vec![0.15, 0.35, 0.55],
            verify_gaps: vec![1.0, 2.0, 3.0],
        }
    }
}

/// Grid centred on a fixed point (found by Newton from `seed`) with the given
/// half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaliMapConfig {
    pub seed: [f64; 2],
    pub half_width: [f64; 2],
    pub nx: usize,
    pub nv: usize,
    pub iterations: usize,
}

impl Default for SaliMapConfig {
    fn default() -> Self {
        Self { seed: [0.1, 0.54], half_width: [0.07, 0.05], nx: 22, nv: 22, iterations: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinConfig {
    pub seed: [f64; 2],
    pub half_width: [f64; 2],
    pub nx: usize,
    pub nv: usize,
    pub iterations: usize,
    pub box_size: usize,
}

impl Default for BasinConfig {
    fn default() -> Self {
        Self { seed: [0.1, 0.54], half_width: [0.10, 0.07], nx: 60, nv: 60, iterations: 25, box_size: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: [f64; 2],
    pub radius: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: [0.1, 0.54], radius: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MelnikovConfig {
    pub mu: f64,
    pub omega0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha_m: f64,
}

impl Default for MelnikovConfig {
    fn default() -> Self {
        Self { mu: 1e-3, omega0: 1.0, alpha0: 1.0, beta0: 1.0, alpha_m: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiparticleConfig {
    pub masses: Vec<f64>,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t_span: f64,
    pub sample_dt: f64,
    pub jacobian: bool,
}

impl Default for MultiparticleConfig {
    fn default() -> Self {
        Self {
            masses: vec![1.0, 1.0],
            x0: vec![-0.5, 0.5],
            v0: vec![1.5, 1.2],
            t_span: 2.0 * std::f64::consts::PI,
            sample_dt: 0.01,
            jacobian: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetricBranchConfig {
    pub frictions: Vec<f64>,
}

impl Default for SymmetricBranchConfig {
    fn default() -> Self {
        Self { frictions: (0..=12).map(|i| 0.05 * i as f64).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbedConfig {
    pub epsilon: f64,
    pub mu_v: f64,
    pub seed: [f64; 2],
}

impl Default for PerturbedConfig {
    fn default() -> Self {
        Self { epsilon: 1e-4, mu_v: 1e-4, seed: [0.1002798898, 0.5419433068] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for every random choice; always written to outputs.
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub params: ParamsConfig,
    pub simulate: SimulateConfig,
    pub fixpoint: FixpointConfig,
    pub branch: BranchConfig,
    pub region_map: RegionMapConfig,
    pub sali_map: SaliMapConfig,
    pub basin: BasinConfig,
    pub verify: VerifyConfig,
    pub melnikov: MelnikovConfig,
    pub multiparticle: MultiparticleConfig,
    pub symmetric_branch: SymmetricBranchConfig,
    pub perturbed: PerturbedConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            format: Format::Csv,
            out: None,
            threads: None,
            params: ParamsConfig::default(),
            simulate: SimulateConfig::default(),
            fixpoint: FixpointConfig::default(),
            branch: BranchConfig::default(),
            region_map: RegionMapConfig::default(),
            sali_map: SaliMapConfig::default(),
            basin: BasinConfig::default(),
            verify: VerifyConfig::default(),
            melnikov: MelnikovConfig::default(),
            multiparticle: MultiparticleConfig::default(),
            symmetric_branch: SymmetricBranchConfig::default(),
            perturbed: PerturbedConfig::default(),
        }
    }
}

/// Parses TOML text, applies `key=value` overrides (dotted keys, TOML values;
/// bare words are taken as strings) and validates the result.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, Failure> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Failure::Parse(e.to_string()))?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Failure::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical TOML form of a configuration.
pub fn to_canonical(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration serializes")
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<(), Failure> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Failure::Parse(format!("--set {ov}: expected key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Failure::Parse(format!("--set {ov}: empty key")));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key present"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Failure::Parse(format!("--set {ov}: `{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        self.params.to_params()?;
        let invalid = |msg: String| Err(Failure::Validation(msg));
        let positive = [
            ("simulate.t_span", self.simulate.t_span),
            ("fixpoint.tol", self.fixpoint.tol),
            ("branch.step", self.branch.step),
            ("verify.radius", self.verify.radius),
            ("sali_map.half_width[0]", self.sali_map.half_width[0]),
            ("sali_map.half_width[1]", self.sali_map.half_width[1]),
            ("basin.half_width[0]", self.basin.half_width[0]),
            ("basin.half_width[1]", self.basin.half_width[1]),
            ("multiparticle.t_span", self.multiparticle.t_span),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} = {v} must be positive"));
            }
        }
        let counts = [
            ("fixpoint.max_iters", self.fixpoint.max_iters),
            ("region_map.analytic_grid[0]", self.region_map.analytic_grid[0]),
            ("region_map.analytic_grid[1]", self.region_map.analytic_grid[1]),
            ("sali_map.nx", self.sali_map.nx),
            ("sali_map.nv", self.sali_map.nv),
            ("sali_map.iterations", self.sali_map.iterations),
            ("basin.nx", self.basin.nx),
            ("basin.nv", self.basin.nv),
            ("basin.iterations", self.basin.iterations),
            ("basin.box_size", self.basin.box_size),
        ];
        for (name, n) in counts {
            if n == 0 {
                return invalid(format!("{name} must be at least 1"));
            }
        }
        if self.simulate.sample_dt < 0.0 || self.multiparticle.sample_dt < 0.0 {
            return invalid("sample_dt must be non-negative".into());
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1".into());
        }
        let mp = &self.multiparticle;
        if mp.masses.is_empty() || mp.x0.len() != mp.masses.len() || mp.v0.len() != mp.masses.len() {
            return invalid("multiparticle.masses, x0 and v0 must be nonempty and of equal length".into());
        }
        if let Some(m) = mp.masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return invalid(format!("multiparticle mass {m} must be positive"));
        }
        if self.symmetric_branch.frictions.iter().any(|f| !(*f >= 0.0)) {
            return invalid("symmetric_branch.frictions must be non-negative".into());
        }
        if self.perturbed.epsilon < 0.0 || self.perturbed.epsilon >= 1.0 || self.perturbed.mu_v < 0.0 {
            return invalid("perturbed.epsilon must lie in [0, 1) and mu_v must be non-negative".into());
        }
        vibro::melnikov::SlowCoeffs::new(
            self.melnikov.omega0,
            self.melnikov.alpha0,
            self.melnikov.beta0,
            self.melnikov.alpha_m,
            self.melnikov.mu,
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_baseline() {
        let cfg = parse_config("", &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.params.to_params().unwrap(), Params::baseline());
    }

    #[test]
    fn overrides_are_typed() {
        let cfg = parse_config("", &["params.friction=0.3".into(), "format=json".into()]).unwrap();
        assert_eq!(cfg.params.friction, 0.3);
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn negative_friction_is_a_validation_error() {
        let err = parse_config("[params]\nfriction = -1.0\n", &[]).unwrap_err();
        assert!(matches!(err, Failure::Validation(_)), "{err:?}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse_config("[params]\nfrction = 0.3\n", &[]), Err(Failure::Parse(_))));
        assert!(matches!(parse_config("bogus = 1\n", &[]), Err(Failure::Parse(_))));
    }

    #[test]
    fn parse_errors_carry_a_location() {
        let Err(Failure::Parse(msg)) = parse_config("[params]\nforcing = \n", &[]) else { panic!() };
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let cfg = parse_config("seed = 7\n[params]\nforcing = 1.5\n", &[]).unwrap();
        let once = to_canonical(&cfg);
        let twice = to_canonical(&parse_config(&once, &[]).unwrap());
        assert_eq!(once, twice);
    }
}
