//! Runs scenarios through the engines and formats the results.

use std::io::Write;

use serde::Serialize;

use crate::analytic::{self, VarianceMinimum, VarianceReport};
use crate::compare::{relative_gap, SeriesGap};
use crate::error::{Error, Result};
use crate::fock::{self, FockOptions};
use crate::gaussian::{self, ModeLayout, RateSource};
use crate::ode::TimeGrid;
use crate::scenario::{Column, Engine, Scenario, TimeAxis};

/// Variance level of two uncorrelated vacuum modes.
pub const VACUUM_LEVEL: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: Option<String>,
    /// Constant Γ₁, when there is one.
    pub gamma1: Option<f64>,
    pub report: VarianceReport,
    /// Exact minimum over all times, for the analytic engine.
    pub exact_minimum: Option<ExactMinimum>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMinimum {
    pub minimum: VarianceMinimum,
    pub gamma1: f64,
    pub gamma2: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub scenario: String,
    pub engine: Engine,
    pub time_axis: TimeAxis,
    pub curves: Vec<Curve>,
    /// Free-form validity notes from the engine.
    pub diagnostics: Vec<String>,
}

/// Minimum of ⟨(X₁−X₂)²⟩ below the vacuum level and where it occurs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub label: Option<String>,
    pub min_var_minus: Option<f64>,
    /// In the units of the scenario's time axis.
    pub t_min: Option<f64>,
    pub n1_at_min: Option<f64>,
    pub n2_at_min: Option<f64>,
}

impl Curve {
    fn axis_scale(&self, axis: TimeAxis) -> f64 {
        match axis {
            TimeAxis::T => 1.0,
            TimeAxis::Gamma1T => self.gamma1.unwrap_or(f64::NAN),
        }
    }

    pub fn summary(&self, axis: TimeAxis) -> Result<CurveSummary> {
        let none = CurveSummary {
            label: self.label.clone(),
            min_var_minus: None,
            t_min: None,
            n1_at_min: None,
            n2_at_min: None,
        };
        if let Some(exact) = &self.exact_minimum {
            let VarianceMinimum::Below {
                variance,
                gamma1_t_min: x,
                ..
            } = exact.minimum
            else {
                return Ok(none);
            };
            let t = x / exact.gamma1;
            let (n1, n2) = if x.is_finite() {
                (
                    analytic::occupation_mode1(exact.gamma1, t)?,
                    analytic::occupation_mode2(exact.gamma1, exact.gamma2, exact.epsilon, t)?,
                )
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            return Ok(CurveSummary {
                t_min: Some(match axis {
                    TimeAxis::T => t,
                    TimeAxis::Gamma1T => x,
                }),
                min_var_minus: Some(variance),
                n1_at_min: Some(n1),
                n2_at_min: Some(n2),
                ..none
            });
        }
        let r = &self.report;
        if r.is_empty() || !(r.min_var_minus < VACUUM_LEVEL) {
            return Ok(none);
        }
        let i = r.min_index();
        Ok(CurveSummary {
            min_var_minus: Some(r.min_var_minus),
            t_min: Some(r.t_min * self.axis_scale(axis)),
            n1_at_min: Some(r.n1[i]),
            n2_at_min: Some(r.n2[i]),
            ..none
        })
    }

    /// First time ⟨(X₁−X₂)²⟩ reaches `threshold` and n₁ there.
    pub fn crossing(&self, threshold: f64, axis: TimeAxis) -> Option<(f64, f64)> {
        self.report
            .first_crossing(threshold)
            .map(|(t, n1)| (t * self.axis_scale(axis), n1))
    }

    fn column(&self, c: Column) -> Option<&[f64]> {
        let r = &self.report;
        Some(match c {
            Column::VarMinus => &r.var_minus,
            Column::VarPlus => &r.var_plus,
            Column::VarPSum => &r.var_p_sum,
            Column::VarPDiff => &r.var_p_diff,
            Column::N1 => &r.n1,
            Column::N2 => &r.n2,
            Column::Na1 => r.cavity1.as_deref()?,
            Column::Na2 => r.cavity2.as_deref()?,
        })
    }
}

impl RunOutput {
    pub fn summaries(&self) -> Result<Vec<CurveSummary>> {
        self.curves.iter().map(|c| c.summary(self.time_axis)).collect()
    }
}

/// Runs `scenario` with `engine` on the scenario's own grid.
pub fn run_scenario(scenario: &Scenario, engine: Engine) -> Result<RunOutput> {
    scenario.validate_for(engine)?;
    let grid = scenario.time_grid(engine)?;
    run_on_grid(scenario, engine, &grid)
}

fn run_on_grid(scenario: &Scenario, engine: Engine, grid: &TimeGrid) -> Result<RunOutput> {
    let mut diagnostics = Vec::new();
    let curves = match engine {
        Engine::Analytic => {
            let times = grid.times();
            scenario
                .reduced_curves()?
                .into_iter()
                .map(|c| {
                    let rates = match &c.model.source {
                        RateSource::Constant(r) => *r,
                        RateSource::Couplings(p) => p.constant_rates().ok_or_else(|| {
                            Error::config("engine analytic needs constant couplings")
                        })?,
                    };
                    let eps = c.model.epsilon;
                    let minimum = match rates.lambda() {
                        Some(l) => Some(ExactMinimum {
                            minimum: analytic::min_variance(l, eps)?,
                            gamma1: rates.gamma1,
                            gamma2: rates.gamma2,
                            epsilon: eps,
                        }),
                        None => None,
                    };
                    Ok(Curve {
                        label: c.label,
                        gamma1: Some(rates.gamma1),
                        report: analytic::variance_report(rates, eps, &times)?,
                        exact_minimum: minimum,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Engine::Adiabatic => {
            let initial = gaussian::initial_state(ModeLayout::Reduced, &scenario.initial)?;
            scenario
                .reduced_curves()?
                .into_iter()
                .map(|c| {
                    let traj = gaussian::integrate_adiabatic(&c.model, &initial, grid)?;
                    let gamma1 = match &c.model.source {
                        RateSource::Constant(r) => Some(r.gamma1),
                        RateSource::Couplings(p) => p.constant_rates().map(|r| r.gamma1),
                    };
                    Ok(Curve {
                        label: c.label,
                        gamma1,
                        report: traj.report()?,
                        exact_minimum: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Engine::Full => {
            let p = scenario
                .effective_params()?
                .ok_or_else(|| Error::config("engine full needs [effective] or [physical]"))?;
            let initial = gaussian::initial_state(ModeLayout::Full, &scenario.initial)?;
            let traj = gaussian::integrate_full(&p, &initial, grid)?;
            let min_eig = traj.min_uncertainty_eigenvalue();
            diagnostics.push(format!("min eigenvalue of sigma + iJ: {min_eig:.3e}"));
            vec![Curve {
                label: None,
                gamma1: p.constant_rates().map(|r| r.gamma1),
                report: traj.report()?,
                exact_minimum: None,
            }]
        }
        Engine::Fock => {
            let p = scenario
                .effective_params()?
                .ok_or_else(|| Error::config("engine fock needs [effective] or [physical]"))?;
            let block = scenario.fock_block();
            let rho = fock::initial_density(ModeLayout::Full, &block.cutoffs, &scenario.initial)?;
            let opts = FockOptions {
                truncation_tol: block.truncation_tol,
                ..FockOptions::default()
            };
            let run = fock::evolve(&rho, &p, grid, &opts)?;
            diagnostics.push(format!(
                "max top-level population {:.3e}; max trace error {:.3e}; max hermiticity error {:.3e}; final min eigenvalue {:.3e}",
                run.max_top_population(),
                run.max_trace_error(),
                run.max_hermiticity_error(),
                run.min_eigenvalue()
            ));
            vec![Curve {
                label: None,
                gamma1: p.constant_rates().map(|r| r.gamma1),
                report: run.trajectory.report()?,
                exact_minimum: None,
            }]
        }
    };
    Ok(RunOutput {
        scenario: scenario.name.clone(),
        engine,
        time_axis: scenario.output.time_axis,
        curves,
        diagnostics,
    })
}

/// Twelve significant digits; non-finite values spelled out.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

/// Marker written where a reduction has no value.
pub const NONE_MARKER: &str = "none";

pub fn format_optional(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_else(|| NONE_MARKER.into())
}

/// Leading `#` lines of every CSV file.
pub fn header_comments(title: &str, reproducible: bool) -> Vec<String> {
    let mut lines = vec![format!(
        "# {} {}: {title}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    )];
    if !reproducible {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        lines.push(format!("# generated at unix time {secs}"));
    }
    lines
}

fn column_header(name: &str, label: &Option<String>) -> String {
    match label {
        Some(l) => format!("{name}[{l}]"),
        None => name.to_string(),
    }
}

/// Writes a run as CSV: the time column, then each requested series per
/// curve, every `every`-th grid point.
pub fn write_run_csv<W: Write + ?Sized>(
    out: &RunOutput,
    columns: &[Column],
    every: usize,
    comments: &[String],
    w: &mut W,
) -> Result<()> {
    let first = out
        .curves
        .first()
        .ok_or_else(|| Error::config("run produced no curves"))?;
    let mut header = vec![out.time_axis.header().to_string()];
    let mut series: Vec<&[f64]> = Vec::new();
    for curve in &out.curves {
        for &c in columns {
            let s = curve.column(c).ok_or_else(|| {
                Error::config(format!("engine {} does not produce column {}", out.engine, c.name()))
            })?;
            header.push(column_header(c.name(), &curve.label));
            series.push(s);
        }
    }
    let scale = first.axis_scale(out.time_axis);
    for line in comments {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    for (i, &t) in first.report.times.iter().enumerate().step_by(every.max(1)) {
        let mut row = vec![format_number(t * scale)];
        row.extend(series.iter().map(|s| format_number(s[i])));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn summary_lines(out: &RunOutput) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for s in out.summaries()? {
        let prefix = s.label.map(|l| format!("[{l}] ")).unwrap_or_default();
        lines.push(match s.min_var_minus {
            Some(v) => format!(
                "{prefix}min var_minus = {} at {} = {}, n1 = {}, n2 = {}",
                format_number(v),
                out.time_axis.header(),
                format_optional(s.t_min),
                format_optional(s.n1_at_min),
                format_optional(s.n2_at_min)
            ),
            None => format!("{prefix}var_minus never falls below the vacuum level"),
        });
    }
    lines.extend(out.diagnostics.iter().map(|d| format!("{}: {d}", out.engine)));
    Ok(lines)
}

/// Sup-norm gaps of one engine against the reference engine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairGap {
    pub reference: Engine,
    pub other: Engine,
    pub gaps: Vec<SeriesGap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RunOutput>,
    pub gaps: Vec<PairGap>,
}

/// Runs every engine on a common grid (the finest default among them) and
/// measures each against the first.
pub fn compare_engines(scenario: &Scenario, engines: &[Engine]) -> Result<Comparison> {
    if engines.len() < 2 {
        return Err(Error::config("compare needs at least two engines"));
    }
    let mut grid: Option<TimeGrid> = None;
    for &e in engines {
        scenario.validate_for(e).map_err(|err| match err {
            Error::Config(m) | Error::Domain(m) => {
                Error::Config(format!("engine {e} cannot run this scenario: {m}"))
            }
            other => other,
        })?;
        let g = scenario.time_grid(e)?;
        if grid.is_none_or(|best| g.effective_step() < best.effective_step()) {
            grid = Some(g);
        }
    }
    let grid = grid.expect("at least two engines");
    let runs: Vec<RunOutput> = engines
        .iter()
        .map(|&e| run_on_grid(scenario, e, &grid))
        .collect::<Result<_>>()?;
    if runs.iter().any(|r| r.curves.len() != 1) {
        return Err(Error::config("compare needs a single curve; list one lambda value"));
    }
    let reference = &runs[0];
    let gaps = runs[1..]
        .iter()
        .map(|other| PairGap {
            reference: reference.engine,
            other: other.engine,
            gaps: scenario
                .output
                .columns
                .iter()
                .filter_map(|&c| {
                    let a = reference.curves[0].column(c)?;
                    let b = other.curves[0].column(c)?;
                    Some(SeriesGap {
                        name: c.name().to_string(),
                        gap: relative_gap(a, b),
                    })
                })
                .collect(),
        })
        .collect();
    Ok(Comparison { runs, gaps })
}

/// Per-engine columns side by side.
pub fn write_comparison_csv<W: Write + ?Sized>(
    cmp: &Comparison,
    columns: &[Column],
    every: usize,
    comments: &[String],
    w: &mut W,
) -> Result<()> {
    let first = &cmp.runs[0];
    let axis = first.time_axis;
    let mut header = vec![axis.header().to_string()];
    let mut series: Vec<&[f64]> = Vec::new();
    for run in &cmp.runs {
        for &c in columns {
            if let Some(s) = run.curves[0].column(c) {
                header.push(format!("{}_{}", c.name(), run.engine));
                series.push(s);
            }
        }
    }
    let scale = first.curves[0].axis_scale(axis);
    for line in comments {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    for (i, &t) in first.curves[0].report.times.iter().enumerate().step_by(every.max(1)) {
        let mut row = vec![format_number(t * scale)];
        row.extend(series.iter().map(|s| format_number(s[i])));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_toml_str(text).unwrap()
    }

    const REDUCED: &str = r#"
name = "equal rates"
engine = "analytic"
[grid]
t_end = 3.0
step = 0.001
[reduced]
gamma1 = 1.0
lambda = 1.0
epsilon = 1.0
[output]
time_axis = "gamma1_t"
"#;

    #[test]
    fn analytic_and_adiabatic_agree() {
        let s = scenario(REDUCED);
        let cmp = compare_engines(&s, &[Engine::Analytic, Engine::Adiabatic]).unwrap();
        for g in &cmp.gaps[0].gaps {
            assert!(g.gap < 1e-8, "{} {}", g.name, g.gap);
        }
    }

    #[test]
    fn csv_is_deterministic_and_formatted() {
        let s = scenario(REDUCED);
        let out = run_scenario(&s, Engine::Analytic).unwrap();
        let write = || {
            let mut buf = Vec::new();
            let comments = header_comments(&s.name, true);
            write_run_csv(&out, &s.output.columns, 500, &comments, &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let text = write();
        assert_eq!(text, write());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# cascade-epr"));
        assert_eq!(lines[1], "Gamma1_t,var_minus,var_plus,n1,n2");
        assert_eq!(lines[2], "0.00000000000e0,2.00000000000e0,2.00000000000e0,0.00000000000e0,0.00000000000e0");
        assert_eq!(lines.len(), 2 + 7);
    }

    #[test]
    fn exact_summary_for_analytic_engine() {
        let text = REDUCED.replace("lambda = 1.0", "lambda = 2.0").replace("epsilon = 1.0", "epsilon = 0.8");
        let out = run_scenario(&scenario(&text), Engine::Analytic).unwrap();
        let s = &out.summaries().unwrap()[0];
        let exact = analytic::min_variance(2.0, 0.8).unwrap();
        assert_eq!(s.min_var_minus, exact.variance());
        assert_eq!(s.t_min, exact.gamma1_t_min());
        let grid_min = out.curves[0].report.min_var_minus;
        assert!(grid_min >= s.min_var_minus.unwrap() && grid_min - s.min_var_minus.unwrap() < 1e-5);
    }

    #[test]
    fn no_minimum_below_threshold() {
        let text = REDUCED.replace("lambda = 1.0", "lambda = 0.2");
        let out = run_scenario(&scenario(&text), Engine::Adiabatic).unwrap();
        assert_eq!(out.summaries().unwrap()[0].min_var_minus, None);
    }

    #[test]
    fn cavity_columns_rejected_for_reduced_engines() {
        let text = REDUCED.replace("time_axis = \"gamma1_t\"", "columns = [\"na1\"]");
        assert!(run_scenario(&scenario(&text), Engine::Adiabatic).is_err());
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(6.38905609893065), "6.38905609893e0");
        assert_eq!(format_number(-1.5e-7), "-1.50000000000e-7");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_optional(None), "none");
    }
}
