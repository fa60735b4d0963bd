//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 2 3`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cascade_epr::analytic::{self, CavityCorrelation, EprSign, MinimumTime};
use cascade_epr::compare::{max_gap, moment_gaps, relative_gap};
use cascade_epr::fock::{self, FockOptions, FockRun};
use cascade_epr::gaussian::{self, Mode, ModeLayout, MomentState, ReducedModel, SingleSystem};
use cascade_epr::model::{CouplingSchedule, EffectiveParams, InitialOccupations, ReducedRates};
use cascade_epr::ode::TimeGrid;
use cascade_epr::runner;
use cascade_epr::scenario::{Engine, Scenario};
use cascade_epr::sweep::{self, Reduction, SweepOutput, SweepSpec};

type Check = Result<String, String>;

const SECOND: Duration = Duration::from_secs(1);
const MINUTE: Duration = Duration::from_secs(60);
/// Budget for runs the criteria allow "minutes" for.
const MINUTES: Duration = Duration::from_secs(600);

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn load(name: &str) -> Result<Scenario, String> {
    Scenario::from_path(&scenario_path(name)).map_err(|e| e.to_string())
}

fn run_sweep_file(name: &str) -> Result<SweepOutput, String> {
    let spec = SweepSpec::from_path(&scenario_path(name)).map_err(|e| e.to_string())?;
    sweep::run_sweep(&spec, None).map_err(|e| e.to_string())
}

fn column(out: &SweepOutput, r: Reduction) -> Result<Vec<Option<f64>>, String> {
    let i = out
        .reductions
        .iter()
        .position(|&x| x == r)
        .ok_or_else(|| format!("sweep lacks reduction {}", r.name()))?;
    Ok(out.rows.iter().map(|row| row.reductions[i]).collect())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn e<T>(r: cascade_epr::Result<T>) -> Result<T, String> {
    r.map_err(|err| err.to_string())
}

/// λ sweeps over [0.3, 5]: global minima of the minimum variance.
fn sweep_minima() -> Check {
    let mut details = Vec::new();
    for (file, eps, v_ref, l_ref) in [
        ("lambda_sweep_eps0p9.toml", 0.9, 0.30, 1.46),
        ("lambda_sweep_eps0p8.toml", 0.8, 0.54, 1.95),
    ] {
        let out = run_sweep_file(file)?;
        let lambdas: Vec<f64> = out.rows.iter().map(|r| r.value).collect();
        ensure(
            lambdas.len() >= 471 && lambdas[0] <= 0.3 + 1e-12 && *lambdas.last().unwrap() >= 5.0 - 1e-9,
            || format!("{file}: sweep does not cover [0.3, 5] at step 0.01"),
        )?;
        let mins = column(&out, Reduction::MinVarMinus)?;
        let (i, v) = mins
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or("no sub-vacuum minimum")?;
        let l = lambdas[i];
        ensure((v - v_ref).abs() <= 0.01 && (l - l_ref).abs() <= 0.02, || {
            format!("eps={eps}: minimum {v:.4} at lambda={l:.2}, expected {v_ref} at {l_ref}")
        })?;
        details.push(format!("eps={eps}: {v:.4} at lambda={l:.2}"));
    }
    Ok(details.join("; "))
}

/// λ = 2, ε = 0.8 spot value and the matching scenario curve.
fn spot_value() -> Check {
    let m = e(analytic::min_variance(2.0, 0.8))?;
    let (v, x) = (m.variance().ok_or("no minimum")?, m.gamma1_t_min().ok_or("no minimum")?);
    let reduction = 1.0 - v / 2.0;
    ensure((v - 0.54).abs() <= 0.01 && (x - 0.8).abs() <= 0.02, || {
        format!("min {v:.4} at Gamma1 t = {x:.4}")
    })?;
    ensure((reduction - 0.73).abs() <= 0.01, || format!("reduction {reduction:.3}"))?;
    let out = e(runner::run_scenario(&load("epsilon_family_lambda2.toml")?, Engine::Analytic))?;
    let s = e(out.summaries())?;
    let curve = s
        .iter()
        .find(|c| c.label.as_deref() == Some("epsilon=0.8"))
        .ok_or("epsilon family scenario lacks the epsilon=0.8 curve")?;
    ensure(curve.min_var_minus == Some(v), || "scenario summary differs from min_variance".into())?;
    Ok(format!(
        "min {v:.4} at Gamma1 t = {x:.4}, {:.1}% below vacuum",
        100.0 * reduction
    ))
}

/// Equal rates, ideal coupling: closed form and adiabatic engine against 2e^{−2Γ₁t}.
fn equal_rate_exactness() -> Check {
    let grid = e(TimeGrid::new(0.0, 3.0, 3.0 / 999.0))?;
    let times = grid.times();
    ensure(times.len() == 1000, || format!("grid has {} points", times.len()))?;
    let mut closed = 0.0f64;
    for &t in &times {
        let v = e(analytic::epr_variance(1.0, 1.0, 1.0, t, EprSign::Minus))?;
        closed = closed.max((v - 2.0 * (-2.0 * t).exp()).abs());
    }
    let model = ReducedModel::constant(ReducedRates::new(1.0, 1.0), 1.0);
    let traj = e(gaussian::integrate_adiabatic(
        &model,
        &MomentState::vacuum(ModeLayout::Reduced),
        &grid,
    ))?;
    let var = traj.var_minus().ok_or("no var_minus")?;
    let ode = times
        .iter()
        .zip(&var)
        .map(|(&t, v)| {
            let exact = 2.0 * (-2.0 * t).exp();
            ((v - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    ensure(closed < 1e-12, || format!("closed form error {closed:.2e}"))?;
    ensure(ode < 1e-8, || format!("adiabatic engine relative error {ode:.2e}"))?;
    Ok(format!("closed form {closed:.1e} abs, adiabatic engine {ode:.1e} rel"))
}

/// n₁(Γ₁t = 1) = e² − 1 from the adiabatic engine.
fn occupation_law() -> Check {
    let grid = e(TimeGrid::new(0.0, 1.0, 0.001))?;
    let model = ReducedModel::constant(ReducedRates::new(1.0, 2.0), 0.8);
    let traj = e(gaussian::integrate_adiabatic(
        &model,
        &MomentState::vacuum(ModeLayout::Reduced),
        &grid,
    ))?;
    let n1 = *traj.occupation(Mode::B1).ok_or("no n1")?.last().unwrap();
    let exact = 1f64.exp().powi(2) - 1.0;
    ensure((n1 - exact).abs() < 1e-6, || format!("n1 = {n1:.9}, expected {exact:.9}"))?;
    Ok(format!("n1 = {n1:.9} (|error| {:.1e})", (n1 - exact).abs()))
}

static ORACLE: OnceLock<Result<(FockRun, f64, Vec<usize>), String>> = OnceLock::new();

/// Fock-space run of the oracle scenario and its moment gap to the full engine.
fn oracle_run() -> &'static Result<(FockRun, f64, Vec<usize>), String> {
    ORACLE.get_or_init(|| {
        let s = load("oracle_full_vs_fock.toml")?;
        let p = e(s.effective_params())?.ok_or("oracle scenario lacks parameters")?;
        let grid = e(s.time_grid(Engine::Fock))?;
        let block = s.fock_block();
        let gauss = e(gaussian::integrate_full(
            &p,
            &MomentState::vacuum(ModeLayout::Full),
            &grid,
        ))?;
        let rho0 = e(fock::initial_density(ModeLayout::Full, &block.cutoffs, &s.initial))?;
        let opts = FockOptions {
            truncation_tol: block.truncation_tol,
            positivity_every: 50,
        };
        let run = e(fock::evolve(&rho0, &p, &grid, &opts))?;
        let gap = max_gap(&e(moment_gaps(&gauss, &run.trajectory))?);
        Ok((run, gap, block.cutoffs))
    })
}

/// Full moment engine against the Fock-space master equation.
fn oracle_equivalence() -> Check {
    let (run, gap, cutoffs) = oracle_run().as_ref().map_err(Clone::clone)?;
    let top = run.max_top_population();
    ensure(*gap < 1e-3, || format!("moment gap {gap:.2e}"))?;
    ensure(top < fock::TRUNCATION_TOL, || format!("top-level population {top:.2e}"))?;
    Ok(format!(
        "cutoffs {cutoffs:?}: moment gap {gap:.2e}, max top-level population {top:.2e}"
    ))
}

/// Full-engine minima degrade with Ω/κ relative to the adiabatic prediction.
fn adiabatic_degradation() -> Check {
    let out = run_sweep_file("full_lambda2_omega_sweep.toml")?;
    let omegas: Vec<f64> = out.rows.iter().map(|r| r.value).collect();
    ensure(omegas == [0.1, 0.2, 0.5], || format!("swept omegas {omegas:?}"))?;
    let mins: Vec<f64> = column(&out, Reduction::MinVarMinus)?
        .into_iter()
        .collect::<Option<_>>()
        .ok_or("a run never dropped below vacuum")?;
    let adiabatic = e(analytic::min_variance(2.0, 1.0))?.variance().ok_or("no minimum")?;
    let gaps: Vec<f64> = mins.iter().map(|m| m - adiabatic).collect();
    ensure(mins.windows(2).all(|w| w[1] > w[0]), || format!("minima not increasing: {mins:?}"))?;
    ensure(gaps[0] > 0.0 && gaps[2] > 5.0 * gaps[0], || format!("gaps {gaps:?}"))?;
    Ok(format!(
        "minima {:.4}, {:.4}, {:.4} vs adiabatic {adiabatic:.4}; gap ratio {:.1}",
        mins[0],
        mins[1],
        mins[2],
        gaps[2] / gaps[0]
    ))
}

/// Ramped Ω₁ reaches Var = 0.2 at lower phonon numbers than constant coupling.
fn ramped_coupling() -> Check {
    let out = run_sweep_file("ramp_tau_sweep.toml")?;
    let n1 = column(&out, Reduction::N1AtThreshold)?;
    let mut parts = Vec::new();
    for (row, n) in out.rows.iter().zip(&n1) {
        let n = n.ok_or_else(|| format!("tau={} never reaches 0.2", row.value))?;
        ensure((2.0..=3.5).contains(&n), || format!("tau={}: n1 = {n:.3}", row.value))?;
        parts.push(format!("tau={}: n1 = {n:.2}", row.value));
    }
    let s = load("constant_kappa10.toml")?;
    let run = e(runner::run_scenario(&s, Engine::Full))?;
    let (_, n_const) = run.curves[0]
        .crossing(0.2, run.time_axis)
        .ok_or("constant coupling never reaches 0.2")?;
    ensure(n_const > 10.0, || format!("constant coupling n1 = {n_const:.3}"))?;
    parts.push(format!("constant: n1 = {n_const:.2}"));
    Ok(parts.join("; "))
}

/// Regression-theorem correlations against the closed forms.
fn two_time_correlations() -> Check {
    let grid = e(TimeGrid::new(0.0, 4.0, 0.002))?;
    let mut worst = 0.0f64;
    for (k1, k2) in [(1.0, 2.0), (1.0, 1.0 + 1e-6), (1.0, 1.0 - 1e-6)] {
        for eps in [1.0, 0.64] {
            let p = EffectiveParams::constant(k1, k2, eps, 0.0, 0.0);
            for which in [CavityCorrelation::A1A1, CavityCorrelation::A2A2, CavityCorrelation::A2A1] {
                for (tau, c) in e(fock::regression_two_time(&p, which, &grid))? {
                    let exact = e(analytic::cavity_two_time(k1, k2, eps, tau, which))?;
                    worst = worst.max((c.re - exact).abs()).max(c.im.abs());
                }
            }
        }
    }
    ensure(worst < 1e-8, || format!("max deviation {worst:.2e}"))?;
    // approach to −2√ε κτ e^{−κτ} as κ₂ → κ₁
    let limit = |tau: f64| -2.0 * tau * (-tau).exp();
    let mut dist = Vec::new();
    for delta in [1e-2, 1e-4, 1e-6] {
        let d = (0..=400)
            .map(|i| {
                let tau = 0.01 * i as f64;
                let v = analytic::cavity_two_time(1.0, 1.0 + delta, 1.0, tau, CavityCorrelation::A2A1)
                    .unwrap();
                (v - limit(tau)).abs()
            })
            .fold(0.0, f64::max);
        dist.push(d);
    }
    ensure(dist.windows(2).all(|w| w[1] < w[0]) && dist[2] < 1e-6, || {
        format!("no convergence to the degenerate limit: {dist:?}")
    })?;
    Ok(format!(
        "max deviation {worst:.1e}; distance to degenerate limit {:.1e}, {:.1e}, {:.1e}",
        dist[0], dist[1], dist[2]
    ))
}

/// Counter-rotating terms: deviation from the RWA run in n₁ over Γ₁t ≤ 0.5.
fn rwa_validity() -> Check {
    let (kappa, omega) = (1.0, 0.1);
    let t_end = 0.5 * kappa / (omega * omega);
    let vacuum = MomentState::vacuum(ModeLayout::Single);
    let system = |nu: f64| SingleSystem {
        kappa,
        omega: CouplingSchedule::constant(omega),
        phi: 0.0,
        trap_frequency: nu,
    };
    let mut devs = Vec::new();
    for nu in [10.0, 30.0, 100.0] {
        let sys = system(nu);
        let grid = e(TimeGrid::new(0.0, t_end, 0.02 / sys.max_rate(true)))?;
        let rwa = e(gaussian::integrate_single(&sys, false, &vacuum, &grid))?;
        let cr = e(gaussian::integrate_single(&sys, true, &vacuum, &grid))?;
        devs.push(relative_gap(
            &rwa.occupation(Mode::B1).unwrap(),
            &cr.occupation(Mode::B1).unwrap(),
        ));
    }
    ensure(devs[0] < 0.03, || format!("deviation at nu = 10 kappa: {:.2e}", devs[0]))?;
    ensure(devs.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {devs:?}"))?;

    // Fock-space cross-check of the counter-rotating moment equations.
    let sys = system(10.0);
    let grid = e(TimeGrid::new(0.0, t_end / 2.0, 0.02 / sys.max_rate(true)))?;
    let cr = e(gaussian::integrate_single(&sys, true, &vacuum, &grid))?;
    let rho0 = e(fock::initial_density(ModeLayout::Single, &[5, 20], &InitialOccupations::default()))?;
    let check = e(fock::rwa_check(&sys, &rho0, &grid, &FockOptions::default()))?;
    let fock_gap = relative_gap(
        &cr.occupation(Mode::B1).unwrap(),
        &check.counter_rotating.trajectory.occupation(Mode::B1).unwrap(),
    );
    ensure(fock_gap < 1e-5, || format!("Fock cross-check gap {fock_gap:.2e}"))?;
    Ok(format!(
        "deviation {:.2e}, {:.2e}, {:.2e} at nu = 10, 30, 100 kappa; Fock cross-check gap {fock_gap:.1e}",
        devs[0], devs[1], devs[2]
    ))
}

/// Physicality and structural invariants.
fn invariants() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_2024);
    let mut min_eig = f64::INFINITY;
    let mut min_var_plus = f64::INFINITY;
    let mut zero_set = 0.0f64;
    for _ in 0..20 {
        let k1 = rng.gen_range(0.5..2.0);
        let k2 = rng.gen_range(0.5..2.0);
        let p = EffectiveParams::constant(
            k1,
            k2,
            rng.gen_range(0.5..=1.0),
            rng.gen_range(0.02..0.3) * k1,
            rng.gen_range(0.02..0.3) * k2,
        );
        let grid = e(TimeGrid::with_default_step(0.0, 20.0, p.max_rate()))?;
        let traj = e(gaussian::integrate_full(&p, &MomentState::vacuum(ModeLayout::Full), &grid))?;
        min_eig = min_eig.min(traj.min_uncertainty_eigenvalue());
        for v in traj.var_plus().unwrap() {
            min_var_plus = min_var_plus.min(v);
        }
        for s in traj.states() {
            for (a, b, anomalous) in [
                (Mode::B1, Mode::B1, true),
                (Mode::B2, Mode::B2, true),
                (Mode::B1, Mode::B2, false),
            ] {
                let v = if anomalous { s.mode_anomalous(a, b) } else { s.mode_normal(a, b) };
                zero_set = zero_set.max(v.unwrap().norm());
            }
        }
    }
    ensure(min_eig > -1e-9, || format!("sigma + iJ eigenvalue {min_eig:.2e}"))?;
    ensure(min_var_plus >= 2.0 - 1e-12, || format!("var_plus {min_var_plus}"))?;
    ensure(zero_set == 0.0, || format!("zero-set moment reached {zero_set:.2e}"))?;

    let mut grid_points = 0;
    for _ in 0..200 {
        let lambda = rng.gen_range(0.05..5.0);
        let eps = rng.gen_range(0.05..=1.0);
        let positive = match e(analytic::gamma1_t_min(lambda, eps))? {
            MinimumTime::Finite(x) => x > 0.0,
            MinimumTime::Infinite => true,
            MinimumTime::NoMinimum => false,
        };
        ensure(positive == (lambda > 0.25 / eps), || {
            format!("t_min sign wrong at lambda={lambda}, eps={eps}")
        })?;
        for x in [0.1, 0.5, 1.0, 2.0] {
            let v = e(analytic::epr_variance(1.0, lambda, eps, x, EprSign::Plus))?;
            ensure(v >= 2.0, || format!("closed-form var_plus {v} at lambda={lambda}"))?;
        }
        grid_points += 1;
    }

    let (run, _, _) = oracle_run().as_ref().map_err(Clone::clone)?;
    let (tr, herm, eig) = (
        run.max_trace_error(),
        run.max_hermiticity_error(),
        run.min_eigenvalue(),
    );
    ensure(tr < 1e-10 && herm < 1e-10 && eig > -1e-9, || {
        format!("Fock state: trace {tr:.1e}, hermiticity {herm:.1e}, eigenvalue {eig:.1e}")
    })?;
    Ok(format!(
        "min eig(sigma + iJ) {min_eig:.1e}; min var_plus {min_var_plus:.6}; zero set exact; \
         t_min rule on {grid_points} points; Fock trace {tr:.1e}, hermiticity {herm:.1e}, min eigenvalue {eig:.1e}"
    ))
}

struct Criterion {
    number: u32,
    title: &'static str,
    budget: Duration,
    check: fn() -> Check,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { number: 1, title: "minimum-variance lambda sweeps", budget: SECOND, check: sweep_minima },
    Criterion { number: 2, title: "lambda=2, eps=0.8 spot value", budget: SECOND, check: spot_value },
    Criterion { number: 3, title: "equal-rate exactness", budget: SECOND, check: equal_rate_exactness },
    Criterion { number: 4, title: "occupation law", budget: SECOND, check: occupation_law },
    Criterion { number: 5, title: "Fock oracle equivalence", budget: MINUTES, check: oracle_equivalence },
    Criterion { number: 6, title: "adiabatic degradation", budget: MINUTE, check: adiabatic_degradation },
    Criterion { number: 7, title: "ramped coupling threshold", budget: MINUTE, check: ramped_coupling },
    Criterion { number: 8, title: "two-time correlations", budget: MINUTE, check: two_time_correlations },
    Criterion { number: 9, title: "rotating-wave validity", budget: MINUTES, check: rwa_validity },
    Criterion { number: 10, title: "invariant suites", budget: MINUTE, check: invariants },
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for c in CRITERIA.iter().filter(|c| selected.is_empty() || selected.contains(&c.number)) {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= c.budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; over the {:?} budget", c.budget))
            }
        });
        let (status, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{status} criterion {:>2} {}: {detail} [{:.2} s]",
            c.number,
            c.title,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
