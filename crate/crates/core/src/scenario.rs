//! TOML scenario files: parameters, initial state, time grid and output
//! options for one simulation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{TRUNCATION_TOL, DEFAULT_FULL_CUTOFFS};
use crate::gaussian::{RateSource, ReducedModel};
use crate::model::{
    EffectiveParams, InitialOccupations, PhysicalParams, ReducedRates,
    SubsystemPhysical,
};
use crate::ode::TimeGrid;
use crate::regime::RegimeThresholds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Closed-form adiabatic solutions.
    Analytic,
    /// Moment equations of the reduced two-mode model.
    Adiabatic,
    /// Moment equations of the full four-mode cascade.
    Full,
    /// Truncated Fock-space master equation.
    Fock,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Analytic, Engine::Adiabatic, Engine::Full, Engine::Fock];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Adiabatic => "adiabatic",
            Engine::Full => "full",
            Engine::Fock => "fock",
        }
    }

    /// Engines that resolve the cavity modes.
    pub fn has_cavities(self) -> bool {
        matches!(self, Engine::Full | Engine::Fock)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown engine {s:?}; expected analytic, adiabatic, full or fock"
                ))
            })
    }
}

/// A scalar or a list in the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Values::One(v) => vec![*v],
            Values::Many(v) => v.clone(),
        }
    }
}

/// Constant reduced rates Γ₁ and Γ₂ = λΓ₁, one curve per (λ, ε) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedBlock {
    pub gamma1: f64,
    pub lambda: Values,
    pub epsilon: Values,
    /// φ₁ − φ₂
    #[serde(default)]
    pub phase_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalBlock {
    pub epsilon: f64,
    #[serde(default)]
    pub phi1: f64,
    #[serde(default)]
    pub phi2: f64,
    pub subsystem1: SubsystemPhysical,
    pub subsystem2: SubsystemPhysical,
}

impl PhysicalBlock {
    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            subsystem1: self.subsystem1.clone(),
            subsystem2: self.subsystem2.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    /// Defaults to 0.01 over the fastest rate of the chosen engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    VarMinus,
    VarPlus,
    VarPSum,
    VarPDiff,
    N1,
    N2,
    /// Cavity occupations, full and Fock engines only.
    Na1,
    Na2,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::VarMinus => "var_minus",
            Column::VarPlus => "var_plus",
            Column::VarPSum => "var_p_sum",
            Column::VarPDiff => "var_p_diff",
            Column::N1 => "n1",
            Column::N2 => "n2",
            Column::Na1 => "na1",
            Column::Na2 => "na2",
        }
    }

    pub fn needs_cavities(self) -> bool {
        matches!(self, Column::Na1 | Column::Na2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TimeAxis {
    #[default]
    #[serde(rename = "t")]
    T,
    /// Γ₁·t; needs a constant Γ₁.
    #[serde(rename = "gamma1_t")]
    Gamma1T,
}

impl TimeAxis {
    pub fn header(self) -> &'static str {
        match self {
            TimeAxis::T => "t",
            TimeAxis::Gamma1T => "Gamma1_t",
        }
    }
}

fn default_columns() -> Vec<Column> {
    vec![Column::VarMinus, Column::VarPlus, Column::N1, Column::N2]
}

fn default_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default = "default_columns")]
    pub columns: Vec<Column>,
    /// Keep every n-th grid point.
    #[serde(default = "default_every")]
    pub every: usize,
    #[serde(default)]
    pub time_axis: TimeAxis,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            path: None,
            columns: default_columns(),
            every: 1,
            time_axis: TimeAxis::T,
        }
    }
}

fn default_truncation_tol() -> f64 {
    TRUNCATION_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockBlock {
    /// (a₁, a₂, b₁, b₂)
    pub cutoffs: Vec<usize>,
    #[serde(default = "default_truncation_tol")]
    pub truncation_tol: f64,
}

impl Default for FockBlock {
    fn default() -> Self {
        FockBlock {
            cutoffs: DEFAULT_FULL_CUTOFFS.to_vec(),
            truncation_tol: TRUNCATION_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeBlock {
    /// Largest mean phonon number the experiment will reach.
    pub nbar_max: f64,
    #[serde(default)]
    pub thresholds: RegimeThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub engine: Engine,
    pub grid: GridBlock,
    #[serde(default)]
    pub initial: InitialOccupations,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedBlock>,
    /// Takes precedence over `physical` for the dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<FockBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeBlock>,
}

/// One set of reduced-model parameters, labelled by λ when the scenario
/// lists several.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCurve {
    pub label: Option<String>,
    pub model: ReducedModel,
}

pub fn format_value(v: f64) -> String {
    format!("{v}")
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_toml_str(&text)
            .map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Effective parameters for the dynamics, from `[effective]` or derived
    /// from `[physical]`.
    pub fn effective_params(&self) -> Result<Option<EffectiveParams>> {
        if let Some(p) = &self.effective {
            p.validate()?;
            return Ok(Some(p.clone()));
        }
        match &self.physical {
            Some(b) => Ok(Some(b.params().to_effective(b.epsilon, b.phi1, b.phi2)?)),
            None => Ok(None),
        }
    }

    /// Reduced-model curves for the analytic and adiabatic engines.
    pub fn reduced_curves(&self) -> Result<Vec<ReducedCurve>> {
        if let Some(r) = &self.reduced {
            let lambdas = r.lambda.to_vec();
            let epsilons = r.epsilon.to_vec();
            if lambdas.is_empty() || epsilons.is_empty() {
                return Err(Error::config("[reduced] lambda and epsilon lists must be non-empty"));
            }
            if !(r.gamma1 > 0.0 && r.gamma1.is_finite()) {
                return Err(Error::domain("[reduced] gamma1 must be positive"));
            }
            let mut curves = Vec::with_capacity(lambdas.len() * epsilons.len());
            for &l in &lambdas {
                if !(l > 0.0 && l.is_finite()) {
                    return Err(Error::domain(format!("lambda must be positive, got {l}")));
                }
                for &eps in &epsilons {
                    if !(0.0..=1.0).contains(&eps) {
                        return Err(Error::domain(format!("epsilon must lie in [0, 1], got {eps}")));
                    }
                    let mut parts = Vec::new();
                    if lambdas.len() > 1 {
                        parts.push(format!("lambda={}", format_value(l)));
                    }
                    if epsilons.len() > 1 {
                        parts.push(format!("epsilon={}", format_value(eps)));
                    }
                    curves.push(ReducedCurve {
                        label: (!parts.is_empty()).then(|| parts.join(";")),
                        model: ReducedModel {
                            source: RateSource::Constant(ReducedRates::new(r.gamma1, l * r.gamma1)),
                            epsilon: eps,
                            phase_difference: r.phase_difference,
                        },
                    });
                }
            }
            return Ok(curves);
        }
        match self.effective_params()? {
            Some(p) => Ok(vec![ReducedCurve {
                label: None,
                model: ReducedModel::from_effective(&p),
            }]),
            None => Err(Error::config(
                "no parameters: give [reduced], [effective] or [physical]",
            )),
        }
    }

    /// The time grid with the default step filled in for `engine`.
    pub fn time_grid(&self, engine: Engine) -> Result<TimeGrid> {
        let g = self.grid;
        let step = match g.step {
            Some(h) => h,
            None => {
                let rate = self.max_rate(engine)?;
                0.01 / if rate > 0.0 { rate } else { 1.0 }
            }
        };
        TimeGrid::new(g.t_start, g.t_end, step)
    }

    fn max_rate(&self, engine: Engine) -> Result<f64> {
        Ok(match engine {
            Engine::Analytic | Engine::Adiabatic => self
                .reduced_curves()?
                .iter()
                .map(|c| {
                    let (g1, g2, cross) = c.model.coefficients(0.0);
                    match &c.model.source {
                        RateSource::Constant(_) => g1.max(g2).max(cross),
                        RateSource::Couplings(p) => {
                            let g1 = p.omega1.max_abs().powi(2) / p.kappa1;
                            let g2 = p.omega2.max_abs().powi(2) / p.kappa2;
                            g1.max(g2)
                        }
                    }
                })
                .fold(0.0, f64::max),
            Engine::Full | Engine::Fock => self
                .effective_params()?
                .map(|p| p.max_rate())
                .unwrap_or(0.0),
        })
    }

    pub fn fock_block(&self) -> FockBlock {
        self.fock.clone().unwrap_or_default()
    }

    /// Checks that `engine` can run this scenario, naming what is missing.
    pub fn validate_for(&self, engine: Engine) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("scenario name is empty"));
        }
        self.initial.validate()?;
        if self.output.every == 0 {
            return Err(Error::config("[output] every must be at least 1"));
        }
        if self.output.columns.is_empty() {
            return Err(Error::config("[output] columns is empty"));
        }
        if let Some(b) = &self.physical {
            b.params().validate()?;
        }
        if !engine.has_cavities() {
            if let Some(c) = self.output.columns.iter().find(|c| c.needs_cavities()) {
                return Err(Error::config(format!(
                    "column {} needs the cavity modes; engine {engine} eliminates them",
                    c.name()
                )));
            }
        }
        match engine {
            Engine::Analytic => {
                if !self.initial.is_vacuum() {
                    return Err(Error::config(
                        "engine analytic assumes motional ground states; use adiabatic for thermal starts",
                    ));
                }
                for c in self.reduced_curves()? {
                    if let RateSource::Couplings(p) = &c.model.source {
                        if p.constant_rates().is_none() {
                            return Err(Error::config(
                                "engine analytic needs constant couplings; use adiabatic for schedules",
                            ));
                        }
                    }
                    if c.model.phase_difference != 0.0 {
                        return Err(Error::config(
                            "engine analytic assumes φ₁ = φ₂; use adiabatic for other phases",
                        ));
                    }
                }
            }
            Engine::Adiabatic => {
                self.reduced_curves()?;
            }
            Engine::Full | Engine::Fock => {
                if self.effective_params()?.is_none() {
                    return Err(Error::config(format!(
                        "engine {engine} needs [effective] or [physical] parameters{}",
                        if self.reduced.is_some() { "; [reduced] rates are not enough" } else { "" }
                    )));
                }
            }
        }
        if engine == Engine::Fock {
            let f = self.fock_block();
            if f.cutoffs.len() != 4 {
                return Err(Error::config(format!(
                    "[fock] cutoffs needs four entries (a1, a2, b1, b2), got {}",
                    f.cutoffs.len()
                )));
            }
            if !(f.truncation_tol > 0.0) {
                return Err(Error::config("[fock] truncation_tol must be positive"));
            }
        }
        if self.output.time_axis == TimeAxis::Gamma1T {
            self.constant_gamma1(engine)?;
        }
        let grid = self.time_grid(engine)?;
        if engine != Engine::Analytic {
            grid.check_guard(self.max_rate(engine)?)?;
        }
        Ok(())
    }

    /// Γ₁ shared by all curves, needed for the Γ₁t axis.
    pub fn constant_gamma1(&self, engine: Engine) -> Result<f64> {
        let gammas: Vec<f64> = match engine {
            Engine::Analytic | Engine::Adiabatic => self
                .reduced_curves()?
                .iter()
                .map(|c| match &c.model.source {
                    RateSource::Constant(r) => Some(r.gamma1),
                    RateSource::Couplings(p) => p.constant_rates().map(|r| r.gamma1),
                })
                .collect::<Option<Vec<_>>>()
                .unwrap_or_default(),
            Engine::Full | Engine::Fock => self
                .effective_params()?
                .and_then(|p| p.constant_rates())
                .map(|r| vec![r.gamma1])
                .unwrap_or_default(),
        };
        match gammas.first() {
            Some(&g) if g > 0.0 && gammas.iter().all(|&x| x == g) => Ok(g),
            _ => Err(Error::config(
                "time_axis gamma1_t needs one constant, positive Γ₁ for every curve",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
name = "full"
engine = "full"

[grid]
t_end = 5.0
step = 0.025

[effective]
kappa1 = 1.0
kappa2 = 1.0
epsilon = 1.0
omega1 = { kind = "constant", value = 0.1 }
omega2 = { kind = "constant", value = 0.1 }

[output]
columns = ["var_minus", "n1", "na2"]
"#;

    #[test]
    fn parses_and_validates() {
        let s = Scenario::from_toml_str(FULL).unwrap();
        assert_eq!(s.engine, Engine::Full);
        s.validate_for(Engine::Full).unwrap();
        assert!(s.validate_for(Engine::Adiabatic).is_err());
        assert_eq!(s.time_grid(Engine::Full).unwrap().steps(), 200);
    }

    #[test]
    fn round_trip() {
        let s = Scenario::from_toml_str(FULL).unwrap();
        let text = s.to_toml_string().unwrap();
        assert_eq!(Scenario::from_toml_str(&text).unwrap(), s);
    }

    #[test]
    fn unknown_field_is_a_parse_error_with_location() {
        let err = Scenario::from_toml_str(&FULL.replace("kappa2", "kapa2")).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse(_)));
        assert!(msg.contains("kapa2") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn empty_grid_rejected() {
        let s = Scenario::from_toml_str(&FULL.replace("t_end = 5.0", "t_end = 0.0")).unwrap();
        assert!(matches!(s.validate_for(Engine::Full), Err(Error::Config(_))));
    }

    #[test]
    fn reduced_curves_are_labelled() {
        let text = r#"
name = "curves"
engine = "analytic"
[grid]
t_end = 3.0
[reduced]
gamma1 = 1.0
lambda = [0.5, 2.0]
epsilon = 1.0
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        let curves = s.reduced_curves().unwrap();
        assert_eq!(curves[1].label.as_deref(), Some("lambda=2"));
        assert!(s.validate_for(Engine::Full).unwrap_err().to_string().contains("[reduced]"));
    }

    #[test]
    fn engine_names() {
        for e in Engine::ALL {
            assert_eq!(e.name().parse::<Engine>().unwrap(), e);
        }
        assert!("exact".parse::<Engine>().is_err());
    }
}
