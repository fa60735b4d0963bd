//! Validity conditions for the approximations behind the model, expressed as
//! margins against configurable thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PhysicalParams, Subsystem, SubsystemPhysical};

/// Standard deviations of the phonon distribution kept inside the
/// Lamb-Dicke condition.
pub const DEFAULT_SPREAD_MULTIPLIER: f64 = 3.0;

/// Largest mean phonon number compatible with the Lamb-Dicke condition
/// ½η²(1 + n̄ + aσ) ≪ 1, taking the thermal spread σ ≈ n̄ + ½. For a = 3
/// this is 1/(2η²) − 5/8.
pub fn lamb_dicke_bound(eta: f64, a: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::domain("spread multiplier must be nonnegative"));
    }
    Ok((2.0 / (eta * eta) - 1.0 - 0.5 * a) / (1.0 + a))
}

/// ½η²(1 + n̄ + aσ) for a measured spread σ; the condition asks for this
/// to be small compared with one.
pub fn lamb_dicke_parameter(eta: f64, nbar: f64, sigma: f64, a: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(nbar >= 0.0 && sigma >= 0.0 && a >= 0.0) {
        return Err(Error::domain("n̄, σ and a must be nonnegative"));
    }
    Ok(0.5 * eta * eta * (1.0 + nbar + a * sigma))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) {
        return Err(Error::domain("Lamb-Dicke parameter must be positive"));
    }
    if eta >= 1.0 {
        return Err(Error::domain(format!(
            "Lamb-Dicke regime impossible for η = {eta} ≥ 1"
        )));
    }
    Ok(())
}

/// 10 g₀²/(κγ), to be compared with one.
pub fn strong_coupling_figure(g0: f64, kappa: f64, gamma: f64) -> Result<f64> {
    if !(kappa > 0.0 && gamma > 0.0) {
        return Err(Error::domain("κ and γ must be positive"));
    }
    Ok(10.0 * g0 * g0 / (kappa * gamma))
}

/// (ν/Ω_max, ν/κ). A vanishing coupling gives an infinite first margin.
pub fn rwa_margins(nu: f64, omega_max: f64, kappa: f64) -> Result<(f64, f64)> {
    if !(nu > 0.0 && kappa > 0.0) {
        return Err(Error::domain("ν and κ must be positive"));
    }
    let omega = omega_max.abs();
    let coupling = if omega == 0.0 { f64::INFINITY } else { nu / omega };
    Ok((coupling, nu / kappa))
}

/// Laser frequency difference ω_L1 − ω_L2 that puts both cavities on the
/// same frequency.
pub fn laser_offset(nu1: f64, nu2: f64) -> Result<f64> {
    if !(nu1 > 0.0 && nu2 > 0.0) {
        return Err(Error::domain("trap frequencies must be positive"));
    }
    Ok(nu1 + nu2)
}

/// Thresholds standing in for each "≫".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeThresholds {
    /// ν/Ω and ν/κ
    pub rwa: f64,
    /// 10 g₀²/(κγ)
    pub strong_coupling: f64,
    /// Lamb-Dicke bound over the planned n̄
    pub lamb_dicke: f64,
    /// κ/Ω for eliminating the cavity mode
    pub adiabatic: f64,
    pub spread_multiplier: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            rwa: 10.0,
            strong_coupling: 10.0,
            lamb_dicke: 5.0,
            adiabatic: 10.0,
            spread_multiplier: DEFAULT_SPREAD_MULTIPLIER,
        }
    }
}

impl RegimeThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rwa", self.rwa),
            ("strong_coupling", self.strong_coupling),
            ("lamb_dicke", self.lamb_dicke),
            ("adiabatic", self.adiabatic),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("threshold {name} must be positive")));
            }
        }
        if !(self.spread_multiplier >= 0.0) {
            return Err(Error::config("spread multiplier must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// value / threshold
    pub margin: f64,
    pub pass: bool,
}

impl Condition {
    /// Passes when the value reaches the threshold, i.e. margin ≥ 1.
    pub fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        let margin = value / threshold;
        Condition {
            name: name.into(),
            value,
            threshold,
            margin,
            pass: margin >= 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// max_t |Ω_j(t)|
    pub omega1: f64,
    pub omega2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Γ₂/Γ₁; absent when Γ₁ = 0
    pub lambda: Option<f64>,
    pub laser_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub conditions: Vec<Condition>,
    pub derived: DerivedQuantities,
    pub thresholds: RegimeThresholds,
    pub nbar_max: f64,
    pub all_pass: bool,
}

impl RegimeReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn named<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::domain(format!("{name}: {e}")))
}

fn subsystem_conditions(
    s: &SubsystemPhysical,
    label: u8,
    omega_max: f64,
    nbar_max: f64,
    th: &RegimeThresholds,
    out: &mut Vec<Condition>,
) -> Result<()> {
    let name = |base: &str| format!("{base}_{label}");

    let n = name("rwa_coupling");
    let (coupling, decay) = named(&n, rwa_margins(s.trap_frequency, omega_max, s.cavity_decay))?;
    out.push(Condition::new(n, coupling, th.rwa));
    out.push(Condition::new(name("rwa_decay"), decay, th.rwa));

    let n = name("lamb_dicke");
    let bound = named(&n, lamb_dicke_bound(s.lamb_dicke, th.spread_multiplier))?;
    let value = if nbar_max > 0.0 { bound / nbar_max } else { f64::INFINITY };
    out.push(Condition::new(n, value, th.lamb_dicke));

    let n = name("strong_coupling");
    let figure = named(
        &n,
        strong_coupling_figure(s.atom_cavity_coupling, s.cavity_decay, s.atomic_linewidth),
    )?;
    out.push(Condition::new(n, figure, th.strong_coupling));

    let ratio = if omega_max == 0.0 { f64::INFINITY } else { s.cavity_decay / omega_max };
    out.push(Condition::new(name("adiabatic"), ratio, th.adiabatic));
    Ok(())
}

/// Evaluates every condition for a hardware parameter set and a planned
/// largest mean phonon number.
pub fn full_report(
    p: &PhysicalParams,
    nbar_max: f64,
    thresholds: &RegimeThresholds,
) -> Result<RegimeReport> {
    p.validate()?;
    thresholds.validate()?;
    if !(nbar_max >= 0.0 && nbar_max.is_finite()) {
        return Err(Error::domain("planned n̄ must be nonnegative"));
    }
    let omega = |j| -> Result<f64> {
        let s = p.subsystem(j);
        Ok(s.coupling_schedule()?.max_abs())
    };
    let (omega1, omega2) = (omega(Subsystem::One)?, omega(Subsystem::Two)?);
    let gamma1 = omega1 * omega1 / p.subsystem1.cavity_decay;
    let gamma2 = omega2 * omega2 / p.subsystem2.cavity_decay;

    let mut conditions = Vec::new();
    subsystem_conditions(&p.subsystem1, 1, omega1, nbar_max, thresholds, &mut conditions)?;
    subsystem_conditions(&p.subsystem2, 2, omega2, nbar_max, thresholds, &mut conditions)?;
    let offset = named(
        "laser_offset",
        laser_offset(p.subsystem1.trap_frequency, p.subsystem2.trap_frequency),
    )?;
    let all_pass = conditions.iter().all(|c| c.pass);
    Ok(RegimeReport {
        conditions,
        derived: DerivedQuantities {
            omega1,
            omega2,
            gamma1,
            gamma2,
            lambda: (gamma1 > 0.0).then(|| gamma2 / gamma1),
            laser_offset: offset,
        },
        thresholds: *thresholds,
        nbar_max,
        all_pass,
    })
}
