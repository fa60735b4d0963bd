//! Exact moment-equation engines. The Hamiltonians are quadratic and every
//! dissipator is linear in the mode operators, so first and second moments
//! form a closed linear system; we integrate those rather than states.

pub mod generator;
pub mod moments;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use generator::{
    assemble_full_generator, assemble_reduced_generator, assemble_single_generator, LinearOp,
    MomentGenerator,
};
pub use moments::{variances, EprVariances, Mode, ModeLayout, MomentState};

use crate::analytic::VarianceReport;
use crate::error::{Error, Result};
use crate::model::{CouplingSchedule, EffectiveParams, InitialOccupations, ReducedRates};
use crate::ode::{integrate, TimeGrid};

/// Moment snapshots on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    layout: ModeLayout,
    times: Vec<f64>,
    states: Vec<MomentState>,
}

impl Trajectory {
    pub fn new(layout: ModeLayout) -> Self {
        Trajectory {
            layout,
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, state: MomentState) -> Result<()> {
        if state.layout() != self.layout {
            return Err(Error::config("snapshot layout does not match trajectory"));
        }
        if self.times.last().is_some_and(|&last| t <= last) {
            return Err(Error::config("trajectory times must be strictly increasing"));
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[MomentState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&MomentState> {
        self.states.last()
    }

    pub fn series(&self, f: impl Fn(&MomentState) -> f64) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }

    pub fn occupation(&self, mode: Mode) -> Option<Vec<f64>> {
        self.layout.index(mode)?;
        Some(self.series(|s| s.occupation(mode).unwrap_or(f64::NAN)))
    }

    pub fn epr_variances(&self) -> Option<Vec<EprVariances>> {
        self.states.iter().map(variances).collect()
    }

    /// ⟨(X₁−X₂)²⟩ series.
    pub fn var_minus(&self) -> Option<Vec<f64>> {
        Some(self.epr_variances()?.iter().map(|v| v.x_diff).collect())
    }

    pub fn var_plus(&self) -> Option<Vec<f64>> {
        Some(self.epr_variances()?.iter().map(|v| v.x_sum).collect())
    }

    /// Derived series; requires both motional modes.
    pub fn report(&self) -> Result<VarianceReport> {
        let v = self
            .epr_variances()
            .ok_or_else(|| Error::config("trajectory does not carry both motional modes"))?;
        let n1 = self.occupation(Mode::B1).unwrap_or_default();
        let n2 = self.occupation(Mode::B2).unwrap_or_default();
        let cavity = self
            .occupation(Mode::A1)
            .zip(self.occupation(Mode::A2));
        Ok(VarianceReport::new(
            self.times.clone(),
            v.iter().map(|v| v.x_diff).collect(),
            v.iter().map(|v| v.x_sum).collect(),
            v.iter().map(|v| v.p_sum).collect(),
            v.iter().map(|v| v.p_diff).collect(),
            n1,
            n2,
            cavity,
        ))
    }

    /// Smallest σ + iJ eigenvalue over all snapshots.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(MomentState::uncertainty_min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Initial moments for a layout: cavities in vacuum, motional modes thermal.
pub fn initial_state(layout: ModeLayout, occ: &InitialOccupations) -> Result<MomentState> {
    occ.validate()?;
    let mut list = vec![(Mode::B1, occ.nbar1)];
    if layout.index(Mode::B2).is_some() {
        list.push((Mode::B2, occ.nbar2));
    }
    MomentState::thermal(layout, &list)
}

fn run_engine(
    initial: &MomentState,
    grid: &TimeGrid,
    generator: impl Fn(f64) -> MomentGenerator,
) -> Result<Trajectory> {
    let layout = initial.layout();
    let mut y = initial.pack();
    let mut rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        let state = MomentState::unpack(layout, y);
        out.copy_from_slice(&generator(t).apply(&state).pack());
    };
    let mut traj = Trajectory::new(layout);
    integrate(&mut rhs, grid, &mut y, |t, y| {
        traj.push(t, MomentState::unpack(layout, y))
    })?;
    Ok(traj)
}

fn expect_layout(initial: &MomentState, layout: ModeLayout) -> Result<()> {
    if initial.layout() != layout {
        return Err(Error::config(format!(
            "initial state has layout {:?}, engine expects {layout:?}",
            initial.layout()
        )));
    }
    Ok(())
}

/// Full four-mode cascaded dynamics.
pub fn integrate_full(
    p: &EffectiveParams,
    initial: &MomentState,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    p.validate()?;
    expect_layout(initial, ModeLayout::Full)?;
    grid.validate()?;
    grid.check_guard(p.max_rate())?;
    run_engine(initial, grid, |t| assemble_full_generator(p, t))
}

/// How the reduced model obtains Γ₁(t), Γ₂(t) and the signed cross coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateSource {
    Constant(ReducedRates),
    /// Γ_j(t) = Ω_j(t)²/κ_j from the effective couplings.
    Couplings(EffectiveParams),
}

/// Adiabatic two-mode model after eliminating the cavities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub source: RateSource,
    pub epsilon: f64,
    /// φ₁ − φ₂
    pub phase_difference: f64,
}

impl ReducedModel {
    pub fn constant(rates: ReducedRates, epsilon: f64) -> Self {
        ReducedModel {
            source: RateSource::Constant(rates),
            epsilon,
            phase_difference: 0.0,
        }
    }

    pub fn from_effective(p: &EffectiveParams) -> Self {
        ReducedModel {
            source: RateSource::Couplings(p.clone()),
            epsilon: p.epsilon,
            phase_difference: p.phi1 - p.phi2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::domain("epsilon must lie in [0, 1]"));
        }
        match &self.source {
            RateSource::Constant(r) if !(r.gamma1 >= 0.0 && r.gamma2 >= 0.0) => {
                Err(Error::domain("reduced rates must be nonnegative"))
            }
            RateSource::Couplings(p) => p.validate(),
            _ => Ok(()),
        }
    }

    /// (Γ₁, Γ₂, signed cross coupling) at time `t`.
    pub fn coefficients(&self, t: f64) -> (f64, f64, f64) {
        match &self.source {
            RateSource::Constant(r) => (
                r.gamma1,
                r.gamma2,
                2.0 * (self.epsilon * r.gamma1 * r.gamma2).sqrt(),
            ),
            RateSource::Couplings(p) => {
                let (o1, o2) = (p.omega1.value(t), p.omega2.value(t));
                (
                    o1 * o1 / p.kappa1,
                    o2 * o2 / p.kappa2,
                    2.0 * self.epsilon.sqrt() * o1 * o2 / (p.kappa1 * p.kappa2).sqrt(),
                )
            }
        }
    }

    fn max_rate(&self) -> f64 {
        match &self.source {
            RateSource::Constant(r) => {
                let c = 2.0 * (self.epsilon * r.gamma1 * r.gamma2).sqrt();
                r.gamma1.max(r.gamma2).max(c)
            }
            RateSource::Couplings(p) => {
                let g1 = p.omega1.max_abs().powi(2) / p.kappa1;
                let g2 = p.omega2.max_abs().powi(2) / p.kappa2;
                g1.max(g2).max(2.0 * (self.epsilon * g1 * g2).sqrt())
            }
        }
    }
}

/// Reduced motional dynamics with the cavities adiabatically eliminated.
pub fn integrate_adiabatic(
    model: &ReducedModel,
    initial: &MomentState,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    model.validate()?;
    expect_layout(initial, ModeLayout::Reduced)?;
    grid.validate()?;
    grid.check_guard(model.max_rate())?;
    run_engine(initial, grid, |t| {
        let (g1, g2, cross) = model.coefficients(t);
        assemble_reduced_generator(g1, g2, cross, model.phase_difference)
    })
}

/// One atom-cavity subsystem with the parametric coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSystem {
    pub kappa: f64,
    pub omega: CouplingSchedule,
    #[serde(default)]
    pub phi: f64,
    pub trap_frequency: f64,
}

impl SingleSystem {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::domain("kappa must be nonnegative"));
        }
        if !(self.trap_frequency > 0.0) {
            return Err(Error::domain("trap frequency must be positive"));
        }
        self.omega.validate()
    }

    /// Fastest rate present, counting the 2ν oscillation when requested.
    pub fn max_rate(&self, counter_rotating: bool) -> f64 {
        let base = self.kappa.max(self.omega.max_abs());
        if counter_rotating {
            base.max(2.0 * self.trap_frequency)
        } else {
            base
        }
    }
}

/// Single-subsystem dynamics, with or without the counter-rotating terms.
pub fn integrate_single(
    sys: &SingleSystem,
    counter_rotating: bool,
    initial: &MomentState,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    sys.validate()?;
    expect_layout(initial, ModeLayout::Single)?;
    grid.validate()?;
    grid.check_guard(sys.max_rate(counter_rotating))?;
    run_engine(initial, grid, |t| {
        let cr = counter_rotating.then_some((sys.trap_frequency, t));
        assemble_single_generator(sys.kappa, sys.omega.value(t), sys.phi, cr)
    })
}
