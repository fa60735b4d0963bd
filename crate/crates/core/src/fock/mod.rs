//! Truncated Fock-space Lindblad integration: an independent check on the
//! moment engines, the counter-rotating terms and two-time correlations.

pub mod density;
pub mod space;

use num_complex::Complex64;
use rayon::prelude::*;

pub use density::DensityMatrix;
pub use space::{build_ladder, FockSpace, Ladder, SparseOp};

use crate::analytic::CavityCorrelation;
use crate::compare::relative_gap;
use crate::error::{Error, Result};
use crate::gaussian::{Mode, ModeLayout, MomentState, SingleSystem, Trajectory};
use crate::model::{EffectiveParams, InitialOccupations};
use crate::ode::{integrate, TimeGrid};

/// Cutoffs (a₁, a₂, b₁, b₂) for full-model runs at Ω/κ ≈ 0.1, t ≤ 5. The
/// second cavity carries roughly four times the photons of the first, so
/// it needs one more level to keep its top population below 10⁻⁶.
pub const DEFAULT_FULL_CUTOFFS: [usize; 4] = [5, 6, 7, 7];
/// Cutoffs (a, b) for single-subsystem runs.
pub const DEFAULT_SINGLE_CUTOFFS: [usize; 2] = [12, 12];
/// Largest population tolerated in any mode's top level.
pub const TRUNCATION_TOL: f64 = 1e-6;

type Drive = Box<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// dρ/dt = Gρ + ρG† + Σ LρR†, with G = G₀ + Σ fₖ(t) Opₖ.
pub struct Liouvillian {
    dim: usize,
    static_part: SparseOp,
    driven: Vec<(Drive, SparseOp)>,
    jumps: Vec<(SparseOp, SparseOp)>,
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes dρ/dt into `out`. With `hermitian` set, ρG† is obtained as
    /// (Gρ)†, which is only valid for Hermitian ρ.
    pub fn apply(
        &self,
        t: f64,
        rho: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut [Complex64],
        hermitian: bool,
    ) {
        let n = self.dim;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        if hermitian {
            scratch.fill(zero);
            self.static_part.left_mul_acc(one, rho, scratch);
            for (f, op) in &self.driven {
                let s = f(t);
                if s != zero {
                    op.left_mul_acc(s, rho, scratch);
                }
            }
            let m: &[Complex64] = scratch;
            out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, o) in row.iter_mut().enumerate() {
                    *o = m[i * n + j] + m[j * n + i].conj();
                }
            });
        } else {
            out.fill(zero);
            self.static_part.left_mul_acc(one, rho, out);
            self.static_part.right_mul_adjoint_acc(one, rho, out);
            for (f, op) in &self.driven {
                let s = f(t);
                if s != zero {
                    op.left_mul_acc(s, rho, out);
                    op.right_mul_adjoint_acc(s.conj(), rho, out);
                }
            }
        }
        for (l, r) in &self.jumps {
            scratch.fill(zero);
            l.left_mul_acc(one, rho, scratch);
            r.right_mul_adjoint_acc(one, scratch, out);
        }
    }
}

fn minus_i() -> Complex64 {
    Complex64::new(0.0, -1.0)
}

/// Cascaded master equation on modes (a₁, a₂[, b₁, b₂]) of `ladder`.
fn cascade_liouvillian(ladder: &Ladder, p: &EffectiveParams) -> Result<Liouvillian> {
    let space = &ladder.space;
    let dim = space.dim();
    let (a1, a2) = (ladder.a(0), ladder.a(1));
    let c = Complex64::new(p.cascade_strength(), 0.0);
    let a2d_a1 = ladder.a_dag(1).mul(a1);
    let static_part = SparseOp::linear_combination(
        dim,
        &[
            ((-p.kappa1).into(), &space.number(0)),
            ((-p.kappa2).into(), &space.number(1)),
            (-c, &a2d_a1),
        ],
    );
    let jumps = vec![
        (
            SparseOp::linear_combination(dim, &[((2.0 * p.kappa1).into(), a1), (c, a2)]),
            a1.clone(),
        ),
        (
            SparseOp::linear_combination(dim, &[((2.0 * p.kappa2).into(), a2), (c, a1)]),
            a2.clone(),
        ),
    ];

    let mut driven: Vec<(Drive, SparseOp)> = Vec::new();
    if space.n_modes() == 4 {
        let (b1, b2) = (ladder.a(2), ladder.a(3));
        let e1 = Complex64::from_polar(1.0, p.phi1);
        let e2 = Complex64::from_polar(1.0, p.phi2);
        let o1 = p.omega1.clone();
        let o1b = p.omega1.clone();
        let o2 = p.omega2.clone();
        let o2b = p.omega2.clone();
        driven.push((Box::new(move |t| minus_i() * e1 * o1.value(t)), a1.mul(b1)));
        driven.push((
            Box::new(move |t| minus_i() * e1.conj() * o1b.value(t)),
            ladder.a_dag(0).mul(&ladder.a_dag(2)),
        ));
        driven.push((
            Box::new(move |t| minus_i() * e2.conj() * o2.value(t)),
            ladder.a_dag(1).mul(b2),
        ));
        driven.push((
            Box::new(move |t| minus_i() * e2 * o2b.value(t)),
            ladder.a_dag(3).mul(a2),
        ));
    } else if p.omega1.max_abs() != 0.0 || p.omega2.max_abs() != 0.0 {
        return Err(Error::config("driven cascade needs the motional modes"));
    }
    Ok(Liouvillian {
        dim,
        static_part,
        driven,
        jumps,
    })
}

/// One subsystem on modes (a, b), optionally with counter-rotating terms.
fn single_liouvillian(ladder: &Ladder, sys: &SingleSystem, counter_rotating: bool) -> Liouvillian {
    let space = &ladder.space;
    let (a, b) = (ladder.a(0), ladder.a(1));
    let (ad, bd) = (ladder.a_dag(0), ladder.a_dag(1));
    let e = Complex64::from_polar(1.0, sys.phi);
    let mut driven: Vec<(Drive, SparseOp)> = Vec::new();
    let om = sys.omega.clone();
    driven.push((Box::new(move |t| minus_i() * e * om.value(t)), a.mul(b)));
    let om = sys.omega.clone();
    driven.push((Box::new(move |t| minus_i() * e.conj() * om.value(t)), ad.mul(&bd)));
    if counter_rotating {
        let (nu, phi) = (sys.trap_frequency, sys.phi);
        let om = sys.omega.clone();
        driven.push((
            Box::new(move |t| minus_i() * Complex64::from_polar(1.0, -(2.0 * nu * t + phi)) * om.value(t)),
            ad.mul(b),
        ));
        let om = sys.omega.clone();
        driven.push((
            Box::new(move |t| minus_i() * Complex64::from_polar(1.0, 2.0 * nu * t + phi) * om.value(t)),
            a.mul(&bd),
        ));
    }
    Liouvillian {
        dim: space.dim(),
        static_part: space.number(0).scaled((-sys.kappa).into()),
        driven,
        jumps: vec![(a.scaled((2.0 * sys.kappa).into()), a.clone())],
    }
}

/// dρ/dt of the cascaded master equation for ρ on modes (a₁, a₂, b₁, b₂).
pub fn lindblad_rhs(rho: &DensityMatrix, p: &EffectiveParams, t: f64) -> Result<DensityMatrix> {
    p.validate()?;
    if rho.space().n_modes() != 4 {
        return Err(Error::config("cascade state must have four modes"));
    }
    let ladder = build_ladder(rho.space().cutoffs())?;
    let l = cascade_liouvillian(&ladder, p)?;
    let n = rho.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    let mut scratch = out.clone();
    l.apply(t, rho.data(), &mut out, &mut scratch, false);
    DensityMatrix::from_raw(rho.space().clone(), out)
}

/// Initial state: cavities in vacuum, motional modes thermal.
pub fn initial_density(
    layout: ModeLayout,
    cutoffs: &[usize],
    occ: &InitialOccupations,
) -> Result<DensityMatrix> {
    occ.validate()?;
    if cutoffs.len() != layout.len() || layout == ModeLayout::Reduced {
        return Err(Error::config(format!(
            "Fock runs need one cutoff per mode of the full or single layout, got {cutoffs:?}"
        )));
    }
    let space = FockSpace::new(cutoffs)?;
    let nbar: Vec<f64> = layout
        .modes()
        .iter()
        .map(|m| match m {
            Mode::B1 => occ.nbar1,
            Mode::B2 => occ.nbar2,
            _ => 0.0,
        })
        .collect();
    DensityMatrix::thermal(space, &nbar)
}

/// Run-time controls for the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockOptions {
    pub truncation_tol: f64,
    /// Check the smallest eigenvalue every this many snapshots; 0 checks
    /// only the final state.
    pub positivity_every: usize,
}

impl Default for FockOptions {
    fn default() -> Self {
        FockOptions {
            truncation_tol: TRUNCATION_TOL,
            positivity_every: 0,
        }
    }
}

/// Validity measurements taken at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotCheck {
    pub time: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Largest top-level population over all modes.
    pub top_population: f64,
}

#[derive(Debug, Clone)]
pub struct FockRun {
    pub trajectory: Trajectory,
    pub checks: Vec<SnapshotCheck>,
    /// (time, smallest eigenvalue) at the snapshots where it was computed.
    pub eigenvalue_checks: Vec<(f64, f64)>,
    /// Third cumulant |κ(b₁,b₁,b₂)|, which vanishes for Gaussian states.
    pub third_cumulant: Vec<f64>,
    pub final_state: DensityMatrix,
}

impl FockRun {
    pub fn max_trace_error(&self) -> f64 {
        self.checks.iter().map(|c| c.trace_error).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.checks.iter().map(|c| c.hermiticity_error).fold(0.0, f64::max)
    }

    pub fn max_top_population(&self) -> f64 {
        self.checks.iter().map(|c| c.top_population).fold(0.0, f64::max)
    }

    /// NaN if any check failed to converge.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalue_checks
            .iter()
            .map(|c| c.1)
            .fold(f64::INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) })
    }

    pub fn max_third_cumulant(&self) -> f64 {
        self.third_cumulant.iter().copied().fold(0.0, f64::max)
    }
}

struct MomentObservables {
    layout: ModeLayout,
    means: Vec<SparseOp>,
    normal: Vec<(usize, usize, SparseOp)>,
    anomalous: Vec<(usize, usize, SparseOp)>,
    b1b1b2: Option<SparseOp>,
    b1b2: Option<SparseOp>,
}

impl MomentObservables {
    fn new(layout: ModeLayout, ladder: &Ladder) -> Self {
        let n = layout.len();
        let mut normal = Vec::new();
        let mut anomalous = Vec::new();
        for i in 0..n {
            for j in i..n {
                normal.push((i, j, ladder.a_dag(i).mul(ladder.a(j))));
                anomalous.push((i, j, ladder.a(i).mul(ladder.a(j))));
            }
        }
        let pair = layout.index(Mode::B1).zip(layout.index(Mode::B2));
        MomentObservables {
            layout,
            means: ladder.annihilators.clone(),
            normal,
            anomalous,
            b1b1b2: pair.map(|(i, j)| ladder.a(i).mul(ladder.a(i)).mul(ladder.a(j))),
            b1b2: pair.map(|(i, j)| ladder.a(i).mul(ladder.a(j))),
        }
    }

    fn extract(&self, rho: &DensityMatrix) -> MomentState {
        let mut s = MomentState::vacuum(self.layout);
        for (i, op) in self.means.iter().enumerate() {
            s.set_mean(i, rho.expectation(op));
        }
        for (i, j, op) in &self.normal {
            s.set_normal(*i, *j, rho.expectation(op));
        }
        for (i, j, op) in &self.anomalous {
            s.set_anomalous(*i, *j, rho.expectation(op));
        }
        s
    }

    fn third_cumulant(&self, rho: &DensityMatrix, s: &MomentState) -> Option<f64> {
        let (i, j) = self.layout.index(Mode::B1).zip(self.layout.index(Mode::B2))?;
        let m3 = rho.expectation(self.b1b1b2.as_ref()?);
        let m12 = rho.expectation(self.b1b2.as_ref()?);
        let (x, y) = (s.mean(i), s.mean(j));
        let m11 = s.anomalous(i, i);
        Some((m3 - 2.0 * x * m12 - y * m11 + 2.0 * x * x * y).norm())
    }
}

fn run_density(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    layout: ModeLayout,
    grid: &TimeGrid,
    opts: &FockOptions,
) -> Result<FockRun> {
    let ladder = build_ladder(rho0.space().cutoffs())?;
    let obs = MomentObservables::new(layout, &ladder);
    let n = rho0.dim();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        l.apply(t, y, out, &mut scratch, true)
    };

    let mut snapshot = rho0.clone();
    let mut y = rho0.data().to_vec();
    let mut trajectory = Trajectory::new(layout);
    let mut checks = Vec::new();
    let mut eigenvalue_checks = Vec::new();
    let mut third_cumulant = Vec::new();
    let last_index = grid.steps();
    let mut index = 0usize;
    integrate(&mut rhs, grid, &mut y, |t, y| {
        snapshot.data_mut().copy_from_slice(y);
        let tops = snapshot.top_populations();
        let (worst, &top) = tops
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one mode");
        if top >= opts.truncation_tol {
            return Err(Error::Truncation {
                time: t,
                mode: layout.modes()[worst].name().to_string(),
                population: top,
            });
        }
        checks.push(SnapshotCheck {
            time: t,
            trace_error: (snapshot.trace() - 1.0).norm(),
            hermiticity_error: snapshot.hermiticity_error(),
            top_population: top,
        });
        let every = opts.positivity_every;
        if (every > 0 && index % every == 0) || index == last_index {
            eigenvalue_checks.push((t, snapshot.min_eigenvalue()));
        }
        let state = obs.extract(&snapshot);
        if let Some(k3) = obs.third_cumulant(&snapshot, &state) {
            third_cumulant.push(k3);
        }
        trajectory.push(t, state)?;
        index += 1;
        Ok(())
    })?;
    Ok(FockRun {
        trajectory,
        checks,
        eigenvalue_checks,
        third_cumulant,
        final_state: snapshot,
    })
}

/// Integrates the cascaded master equation from `rho0` on modes
/// (a₁, a₂, b₁, b₂), extracting the same moments as the Gaussian engine.
pub fn evolve(
    rho0: &DensityMatrix,
    p: &EffectiveParams,
    grid: &TimeGrid,
    opts: &FockOptions,
) -> Result<FockRun> {
    p.validate()?;
    grid.validate()?;
    grid.check_guard(p.max_rate())?;
    if rho0.space().n_modes() != 4 {
        return Err(Error::config("cascade state must have four modes"));
    }
    let ladder = build_ladder(rho0.space().cutoffs())?;
    let l = cascade_liouvillian(&ladder, p)?;
    run_density(rho0, &l, ModeLayout::Full, grid, opts)
}

/// Integrates one subsystem on modes (a, b).
pub fn evolve_single(
    rho0: &DensityMatrix,
    sys: &SingleSystem,
    counter_rotating: bool,
    grid: &TimeGrid,
    opts: &FockOptions,
) -> Result<FockRun> {
    sys.validate()?;
    grid.validate()?;
    grid.check_guard(sys.max_rate(counter_rotating))?;
    if rho0.space().n_modes() != 2 {
        return Err(Error::config("single-subsystem state must have two modes"));
    }
    let ladder = build_ladder(rho0.space().cutoffs())?;
    let l = single_liouvillian(&ladder, sys, counter_rotating);
    run_density(rho0, &l, ModeLayout::Single, grid, opts)
}

/// Paired runs with and without the counter-rotating terms.
#[derive(Debug, Clone)]
pub struct RwaComparison {
    pub rwa: FockRun,
    pub counter_rotating: FockRun,
    /// sup |Δn₁| / sup n₁ of the rotating-wave run.
    pub deviation: f64,
}

pub fn rwa_check(
    sys: &SingleSystem,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    opts: &FockOptions,
) -> Result<RwaComparison> {
    let counter_rotating = evolve_single(rho0, sys, true, grid, opts)?;
    let rwa = evolve_single(rho0, sys, false, grid, opts)?;
    let n_rwa = rwa.trajectory.occupation(Mode::B1).unwrap_or_default();
    let n_cr = counter_rotating.trajectory.occupation(Mode::B1).unwrap_or_default();
    Ok(RwaComparison {
        deviation: relative_gap(&n_rwa, &n_cr),
        rwa,
        counter_rotating,
    })
}

/// ⟨A(τ)B(0)⟩ in the undriven cavity steady state (vacuum) via the quantum
/// regression theorem: Bρ evolves under the same generator and is traced
/// against A.
pub fn regression_two_time(
    p: &EffectiveParams,
    which: CavityCorrelation,
    tau_grid: &TimeGrid,
) -> Result<Vec<(f64, Complex64)>> {
    p.validate()?;
    if p.omega1.max_abs() != 0.0 || p.omega2.max_abs() != 0.0 {
        return Err(Error::domain("two-time correlations need undriven cavities (Ω = 0)"));
    }
    if !(p.kappa1 > 0.0 && p.kappa2 > 0.0) {
        return Err(Error::domain("cavity decay rates must be positive"));
    }
    tau_grid.validate()?;
    tau_grid.check_guard(p.kappa1.max(p.kappa2).max(p.cascade_strength()))?;
    // one excitation at most, so three levels per cavity are exact
    let ladder = build_ladder(&[3, 3])?;
    let l = cascade_liouvillian(&ladder, p)?;
    let (a_mode, b_mode) = match which {
        CavityCorrelation::A1A1 => (0, 0),
        CavityCorrelation::A2A2 => (1, 1),
        CavityCorrelation::A2A1 => (1, 0),
    };
    let a = ladder.a(a_mode).clone();
    let b = ladder.a_dag(b_mode);
    let vacuum = DensityMatrix::vacuum(ladder.space.clone());
    let n = ladder.space.dim();
    let mut y = vec![Complex64::new(0.0, 0.0); n * n];
    b.left_mul_acc(1.0.into(), vacuum.data(), &mut y);

    let mut scratch = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        l.apply(t, y, out, &mut scratch, false)
    };
    let mut series = Vec::with_capacity(tau_grid.steps() + 1);
    integrate(&mut rhs, tau_grid, &mut y, |tau, y| {
        series.push((tau, a.trace_product(y)));
        Ok(())
    })?;
    Ok(series)
}
