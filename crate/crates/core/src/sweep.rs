//! Parameter sweeps: one scenario run per value, reduced to a few numbers.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CouplingSchedule;
use crate::runner::{self, format_number, format_optional};
use crate::scenario::{Engine, Scenario, Values};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Γ₂/Γ₁. With `[effective]` Ω₂ is rescaled to reach it.
    Lambda,
    Epsilon,
    /// Ω₁; Ω₂ keeps its ratio to Ω₁.
    Omega,
    /// Ramp time of a sine-ramp Ω₁.
    Tau,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::Omega => "omega",
            SweepParameter::Tau => "tau",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    MinVarMinus,
    TMin,
    N1AtMin,
    N2AtMin,
    /// First time var_minus reaches the threshold.
    TAtThreshold,
    /// n₁ at that time.
    N1AtThreshold,
}

impl Reduction {
    pub fn name(self) -> &'static str {
        match self {
            Reduction::MinVarMinus => "min_var_minus",
            Reduction::TMin => "t_min",
            Reduction::N1AtMin => "n1_at_min",
            Reduction::N2AtMin => "n2_at_min",
            Reduction::TAtThreshold => "t_at_threshold",
            Reduction::N1AtThreshold => "n1_at_threshold",
        }
    }

    fn needs_threshold(self) -> bool {
        matches!(self, Reduction::TAtThreshold | Reduction::N1AtThreshold)
    }
}

/// Inclusive range `start, start + step, ..., end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>> {
        let Range { start, end, step } = *self;
        if !(start.is_finite() && end.is_finite() && step > 0.0 && step.is_finite()) {
            return Err(Error::config("range needs finite start and end and a positive step"));
        }
        if end < start {
            return Err(Error::config(format!("range end {end} is below start {start}")));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    }
}

fn default_reductions() -> Vec<Reduction> {
    vec![Reduction::MinVarMinus, Reduction::TMin]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Values>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
    #[serde(default = "default_reductions")]
    pub reductions: Vec<Reduction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Overrides the base scenario's engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<Scenario>>,
    /// Base scenario file, relative to the sweep file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_file: Option<String>,
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads the sweep and resolves `base_file` into `base`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut spec = SweepSpec::from_toml_str(&text)
            .map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
                other => other,
            })?;
        if spec.base.is_none() {
            if let Some(file) = &spec.base_file {
                let dir = path.parent().unwrap_or(Path::new("."));
                spec.base = Some(Box::new(Scenario::from_path(&dir.join(file))?));
            }
        }
        Ok(spec)
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match (&self.values, &self.range) {
            (Some(v), None) => v.to_vec(),
            (None, Some(r)) => r.values()?,
            _ => return Err(Error::config("sweep needs exactly one of values or range")),
        };
        if v.is_empty() {
            return Err(Error::config("sweep has no values"));
        }
        Ok(v)
    }

    pub fn base(&self) -> Result<&Scenario> {
        match (&self.base, &self.base_file) {
            (Some(b), _) => Ok(b),
            (None, Some(f)) => Err(Error::config(format!(
                "base_file {f:?} is only resolved when the sweep is read from a file"
            ))),
            (None, None) => Err(Error::config("sweep needs [base] or base_file")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("sweep name is empty"));
        }
        if self.reductions.is_empty() {
            return Err(Error::config("sweep reductions list is empty"));
        }
        if self.reductions.iter().any(|r| r.needs_threshold()) && self.threshold.is_none() {
            return Err(Error::config("threshold reductions need a threshold"));
        }
        let base = self.base()?;
        for v in self.values()? {
            apply_parameter(base, self.parameter, v)?;
        }
        Ok(())
    }
}

/// Base scenario with `parameter` set to `value`.
pub fn apply_parameter(base: &Scenario, parameter: SweepParameter, value: f64) -> Result<Scenario> {
    if !value.is_finite() {
        return Err(Error::domain(format!("{} must be finite", parameter.name())));
    }
    let mut s = base.clone();
    match parameter {
        SweepParameter::Lambda => {
            if let Some(r) = &mut s.reduced {
                r.lambda = Values::One(value);
            } else if let Some(p) = &mut s.effective {
                if !(value > 0.0) {
                    return Err(Error::domain(format!("lambda must be positive, got {value}")));
                }
                let (Some(o1), Some(_)) = (p.omega1.as_constant(), p.omega2.as_constant()) else {
                    return Err(Error::config("lambda sweeps with [effective] need constant couplings"));
                };
                let o2 = (value * o1 * o1 * p.kappa2 / p.kappa1).sqrt();
                p.omega2 = CouplingSchedule::constant(o2);
            } else {
                return Err(Error::config("lambda sweeps need [reduced] or [effective]"));
            }
        }
        SweepParameter::Epsilon => {
            let mut set = false;
            if let Some(r) = &mut s.reduced {
                r.epsilon = Values::One(value);
                set = true;
            }
            if let Some(p) = &mut s.effective {
                p.epsilon = value;
                set = true;
            }
            if let Some(p) = &mut s.physical {
                p.epsilon = value;
                set = true;
            }
            if !set {
                return Err(Error::config("epsilon sweeps need a parameter block"));
            }
        }
        SweepParameter::Omega => {
            let p = s
                .effective
                .as_mut()
                .ok_or_else(|| Error::config("omega sweeps need [effective]"))?;
            let current = p.omega1.max_abs();
            if current == 0.0 {
                return Err(Error::config("omega sweeps need a nonzero base omega1"));
            }
            let factor = value / current;
            p.omega1 = p.omega1.scaled(factor);
            p.omega2 = p.omega2.scaled(factor);
        }
        SweepParameter::Tau => {
            let p = s
                .effective
                .as_mut()
                .ok_or_else(|| Error::config("tau sweeps need [effective]"))?;
            match &mut p.omega1 {
                CouplingSchedule::SineRamp { tau, .. } => *tau = value,
                _ => return Err(Error::config("tau sweeps need a sine_ramp omega1")),
            }
        }
    }
    Ok(s)
}

/// One row per swept value; `None` where a reduction is undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub reductions: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub name: String,
    pub parameter: SweepParameter,
    pub engine: Engine,
    pub reductions: Vec<Reduction>,
    pub rows: Vec<SweepRow>,
}

pub fn run_sweep(spec: &SweepSpec, engine_override: Option<Engine>) -> Result<SweepOutput> {
    spec.validate()?;
    let base = spec.base()?;
    let engine = engine_override.or(spec.engine).unwrap_or(base.engine);
    let rows = spec
        .values()?
        .into_par_iter()
        .map(|value| {
            let s = apply_parameter(base, spec.parameter, value)?;
            let out = runner::run_scenario(&s, engine)?;
            let curve = &out.curves[0];
            let summary = curve.summary(out.time_axis)?;
            let crossing = spec.threshold.and_then(|th| curve.crossing(th, out.time_axis));
            let reductions = spec
                .reductions
                .iter()
                .map(|r| match r {
                    Reduction::MinVarMinus => summary.min_var_minus,
                    Reduction::TMin => summary.t_min,
                    Reduction::N1AtMin => summary.n1_at_min,
                    Reduction::N2AtMin => summary.n2_at_min,
                    Reduction::TAtThreshold => crossing.map(|c| c.0),
                    Reduction::N1AtThreshold => crossing.map(|c| c.1),
                })
                .collect();
            Ok(SweepRow { value, reductions })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput {
        name: spec.name.clone(),
        parameter: spec.parameter,
        engine,
        reductions: spec.reductions.clone(),
        rows,
    })
}

pub fn write_sweep_csv<W: Write + ?Sized>(out: &SweepOutput, comments: &[String], w: &mut W) -> Result<()> {
    for line in comments {
        writeln!(w, "{line}")?;
    }
    let mut header = vec![out.parameter.name()];
    header.extend(out.reductions.iter().map(|r| r.name()));
    writeln!(w, "{}", header.join(","))?;
    for row in &out.rows {
        let mut cells = vec![format_number(row.value)];
        cells.extend(row.reductions.iter().map(|&v| format_optional(v)));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;

    const SWEEP: &str = r#"
name = "lambda sweep"
parameter = "lambda"
range = { start = 0.2, end = 3.0, step = 0.2 }
reductions = ["min_var_minus", "t_min", "n1_at_threshold"]
threshold = 1.0

[base]
name = "base"
engine = "analytic"
[base.grid]
t_end = 6.0
step = 0.001
[base.reduced]
gamma1 = 1.0
lambda = 1.0
epsilon = 1.0
"#;

    #[test]
    fn range_is_inclusive() {
        let r = Range { start: 0.3, end: 5.0, step: 0.01 };
        let v = r.values().unwrap();
        assert_eq!(v.len(), 471);
        assert!((v[470] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_sweep_matches_closed_forms_in_order() {
        let spec = SweepSpec::from_toml_str(SWEEP).unwrap();
        let out = run_sweep(&spec, None).unwrap();
        assert_eq!(out.rows.len(), 15);
        for row in &out.rows {
            let exact = analytic::min_variance(row.value, 1.0).unwrap();
            assert_eq!(row.reductions[0], exact.variance());
        }
        assert_eq!(out.rows[0].reductions[0], None);
        assert_eq!(out.rows[0].reductions[2], None);
        let n1 = out.rows[4].reductions[2].unwrap();
        assert!(n1 > 0.0);
        let mut buf = Vec::new();
        write_sweep_csv(&out, &[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,min_var_minus,t_min,n1_at_threshold\n"));
        assert!(text.lines().nth(1).unwrap().ends_with("none,none,none"));
    }

    #[test]
    fn missing_threshold_rejected() {
        let spec = SweepSpec::from_toml_str(&SWEEP.replace("threshold = 1.0", "")).unwrap();
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn omega_keeps_ratio() {
        let text = r#"
name = "b"
engine = "full"
[grid]
t_end = 1.0
[effective]
kappa1 = 1.0
kappa2 = 1.0
epsilon = 1.0
omega1 = { kind = "constant", value = 0.1 }
omega2 = { kind = "constant", value = 0.2 }
"#;
        let base = Scenario::from_toml_str(text).unwrap();
        let s = apply_parameter(&base, SweepParameter::Omega, 0.5).unwrap();
        let p = s.effective.unwrap();
        assert_eq!(p.omega1.as_constant(), Some(0.5));
        assert!((p.omega2.as_constant().unwrap() - 1.0).abs() < 1e-15);
        let s = apply_parameter(&base, SweepParameter::Lambda, 2.0).unwrap();
        let r = s.effective.unwrap().constant_rates().unwrap();
        assert!((r.lambda().unwrap() - 2.0).abs() < 1e-12);
        assert!(apply_parameter(&base, SweepParameter::Tau, 20.0).is_err());
    }
}
