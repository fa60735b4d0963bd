//! Parameters, unit conventions and coupling schedules shared by every engine.
//!
//! Units: ħ = 1. Rates and frequencies are angular frequencies, usually in
//! units of κ₁, and times are in units of 1/κ₁. Reduced-model outputs are
//! often plotted against the dimensionless Γ₁t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-dependent effective coupling Ω(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSchedule {
    Constant { value: f64 },
    /// Ω(t) = max·sin(t/τ), held at `max` once t ≥ πτ/2.
    SineRamp { max: f64, tau: f64 },
    /// Linear interpolation between `(t, Ω)` samples; endpoint values are
    /// held outside the sampled range.
    Tabulated { points: Vec<(f64, f64)> },
}

impl CouplingSchedule {
    pub fn constant(value: f64) -> Self {
        CouplingSchedule::Constant { value }
    }

    pub fn sine_ramp(max: f64, tau: f64) -> Self {
        CouplingSchedule::SineRamp { max, tau }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CouplingSchedule::Constant { value } if !value.is_finite() => {
                Err(Error::domain("constant coupling must be finite"))
            }
            CouplingSchedule::SineRamp { max, tau } => {
                if !max.is_finite() {
                    return Err(Error::domain("sine ramp amplitude must be finite"));
                }
                if !(*tau > 0.0 && tau.is_finite()) {
                    return Err(Error::domain("sine ramp time constant must be positive"));
                }
                Ok(())
            }
            CouplingSchedule::Tabulated { points } => {
                if points.is_empty() {
                    return Err(Error::domain("tabulated schedule needs at least one sample"));
                }
                if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err(Error::domain("tabulated schedule samples must be finite"));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::domain(
                        "tabulated schedule times must be strictly increasing",
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            CouplingSchedule::Constant { value } => *value,
            CouplingSchedule::SineRamp { max, tau } => {
                let phase = t / tau;
                if phase >= std::f64::consts::FRAC_PI_2 {
                    *max
                } else if phase <= 0.0 {
                    0.0
                } else {
                    max * phase.sin()
                }
            }
            CouplingSchedule::Tabulated { points } => interpolate(points, t),
        }
    }

    /// Upper bound on |Ω(t)| over all t; used by the step-size guard.
    pub fn max_abs(&self) -> f64 {
        match self {
            CouplingSchedule::Constant { value } => value.abs(),
            CouplingSchedule::SineRamp { max, .. } => max.abs(),
            CouplingSchedule::Tabulated { points } => {
                points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CouplingSchedule::Constant { value } => Some(*value),
            _ => None,
        }
    }

    /// The same time profile multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            CouplingSchedule::Constant { value } => CouplingSchedule::Constant {
                value: value * factor,
            },
            CouplingSchedule::SineRamp { max, tau } => CouplingSchedule::SineRamp {
                max: max * factor,
                tau: *tau,
            },
            CouplingSchedule::Tabulated { points } => CouplingSchedule::Tabulated {
                points: points.iter().map(|&(t, v)| (t, v * factor)).collect(),
            },
        }
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let upper = points.partition_point(|p| p.0 <= t);
    let (t0, v0) = points[upper - 1];
    let (t1, v1) = points[upper];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    One,
    Two,
}

/// Hardware-level parameters of one atom-cavity subsystem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemPhysical {
    pub lamb_dicke: f64,
    pub atom_cavity_coupling: f64,
    /// Laser amplitude envelope E(t).
    pub laser_amplitude: CouplingSchedule,
    pub atom_laser_detuning: f64,
    pub trap_frequency: f64,
    pub atomic_linewidth: f64,
    pub cavity_decay: f64,
}

impl SubsystemPhysical {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lamb_dicke", self.lamb_dicke),
            ("atom_cavity_coupling", self.atom_cavity_coupling),
            ("trap_frequency", self.trap_frequency),
            ("atomic_linewidth", self.atomic_linewidth),
            ("cavity_decay", self.cavity_decay),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.atom_laser_detuning == 0.0 || !self.atom_laser_detuning.is_finite() {
            return Err(Error::domain("atom_laser_detuning must be finite and nonzero"));
        }
        self.laser_amplitude.validate()
    }

    /// Ω(t) = −η g₀ E(t) / Δ.
    pub fn effective_coupling(&self, t: f64) -> Result<f64> {
        if self.atom_laser_detuning == 0.0 {
            return Err(Error::domain("zero atom-laser detuning"));
        }
        Ok(-self.lamb_dicke * self.atom_cavity_coupling * self.laser_amplitude.value(t)
            / self.atom_laser_detuning)
    }

    /// The Ω(t) schedule implied by the laser envelope.
    pub fn coupling_schedule(&self) -> Result<CouplingSchedule> {
        if self.atom_laser_detuning == 0.0 {
            return Err(Error::domain("zero atom-laser detuning"));
        }
        let factor = -self.lamb_dicke * self.atom_cavity_coupling / self.atom_laser_detuning;
        Ok(self.laser_amplitude.scaled(factor))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub subsystem1: SubsystemPhysical,
    pub subsystem2: SubsystemPhysical,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        self.subsystem1
            .validate()
            .map_err(|e| Error::domain(format!("subsystem 1: {e}")))?;
        self.subsystem2
            .validate()
            .map_err(|e| Error::domain(format!("subsystem 2: {e}")))
    }

    pub fn subsystem(&self, j: Subsystem) -> &SubsystemPhysical {
        match j {
            Subsystem::One => &self.subsystem1,
            Subsystem::Two => &self.subsystem2,
        }
    }

    /// Effective coupling strengths as schedules, paired with the cavity
    /// decay rates, ready for the engines.
    pub fn to_effective(&self, epsilon: f64, phi1: f64, phi2: f64) -> Result<EffectiveParams> {
        self.validate()?;
        let p = EffectiveParams {
            kappa1: self.subsystem1.cavity_decay,
            kappa2: self.subsystem2.cavity_decay,
            phi1,
            phi2,
            epsilon,
            omega1: self.subsystem1.coupling_schedule()?,
            omega2: self.subsystem2.coupling_schedule()?,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Ω_j(t) = −η_j g0_j E_j(t) / Δ_j for subsystem `j`.
pub fn effective_coupling(p: &PhysicalParams, j: Subsystem, t: f64) -> Result<f64> {
    p.subsystem(j).effective_coupling(t)
}

/// Parameters of the cascaded model in effective (interaction-picture) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveParams {
    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(default)]
    pub phi1: f64,
    #[serde(default)]
    pub phi2: f64,
    pub epsilon: f64,
    pub omega1: CouplingSchedule,
    pub omega2: CouplingSchedule,
}

impl EffectiveParams {
    /// Constant couplings, zero phases.
    pub fn constant(kappa1: f64, kappa2: f64, epsilon: f64, omega1: f64, omega2: f64) -> Self {
        EffectiveParams {
            kappa1,
            kappa2,
            phi1: 0.0,
            phi2: 0.0,
            epsilon,
            omega1: CouplingSchedule::constant(omega1),
            omega2: CouplingSchedule::constant(omega2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa1 > 0.0 && self.kappa1.is_finite()) {
            return Err(Error::domain("kappa1 must be positive"));
        }
        if !(self.kappa2 > 0.0 && self.kappa2.is_finite()) {
            return Err(Error::domain("kappa2 must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::domain(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !self.phi1.is_finite() || !self.phi2.is_finite() {
            return Err(Error::domain("phases must be finite"));
        }
        self.omega1.validate()?;
        self.omega2.validate()
    }

    /// Cascade coupling coefficient 2√(εκ₁κ₂).
    pub fn cascade_strength(&self) -> f64 {
        2.0 * (self.epsilon * self.kappa1 * self.kappa2).sqrt()
    }

    /// Largest rate appearing in the full model, for the step guard.
    pub fn max_rate(&self) -> f64 {
        self.kappa1
            .max(self.kappa2)
            .max(self.omega1.max_abs())
            .max(self.omega2.max_abs())
    }

    /// Reduced rates at time `t`.
    pub fn rates_at(&self, t: f64) -> ReducedRates {
        ReducedRates::new(
            self.omega1.value(t).powi(2) / self.kappa1,
            self.omega2.value(t).powi(2) / self.kappa2,
        )
    }

    /// Reduced rates when both couplings are constant.
    pub fn constant_rates(&self) -> Option<ReducedRates> {
        let o1 = self.omega1.as_constant()?;
        let o2 = self.omega2.as_constant()?;
        reduced_rates(o1, o2, self.kappa1, self.kappa2).ok()
    }
}

/// Thermal initial phonon occupations n̄₁⁰, n̄₂⁰ (ground state by default).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialOccupations {
    #[serde(default)]
    pub nbar1: f64,
    #[serde(default)]
    pub nbar2: f64,
}

impl InitialOccupations {
    pub fn validate(&self) -> Result<()> {
        if !(self.nbar1 >= 0.0 && self.nbar2 >= 0.0) {
            return Err(Error::domain("initial occupations must be nonnegative"));
        }
        Ok(())
    }

    pub fn is_vacuum(&self) -> bool {
        self.nbar1 == 0.0 && self.nbar2 == 0.0
    }
}

/// Effective growth (Γ₁) and decay (Γ₂) rates of the motional modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedRates {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl ReducedRates {
    pub fn new(gamma1: f64, gamma2: f64) -> Self {
        ReducedRates { gamma1, gamma2 }
    }

    /// λ = Γ₂/Γ₁, absent when Γ₁ = 0.
    pub fn lambda(&self) -> Option<f64> {
        (self.gamma1 > 0.0).then(|| self.gamma2 / self.gamma1)
    }
}

/// Γ₁ = Ω₁²/κ₁, Γ₂ = Ω₂²/κ₂.
pub fn reduced_rates(omega1: f64, omega2: f64, kappa1: f64, kappa2: f64) -> Result<ReducedRates> {
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        return Err(Error::domain("cavity decay rates must be positive"));
    }
    Ok(ReducedRates::new(omega1 * omega1 / kappa1, omega2 * omega2 / kappa2))
}
