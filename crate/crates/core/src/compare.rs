//! Sup-norm comparison of series produced by different engines.

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::VarianceReport;
use crate::error::{Error, Result};
use crate::gaussian::Trajectory;

/// Reference magnitudes below this are treated as this, so that series
/// which vanish identically compare on an absolute scale.
pub const GAP_FLOOR: f64 = 1e-6;

/// Largest allowed difference between matched sample times.
const TIME_MATCH_TOL: f64 = 1e-9;

/// sup|other − reference| / max(sup|reference|, [`GAP_FLOOR`]).
pub fn relative_gap(reference: &[f64], other: &[f64]) -> f64 {
    assert_eq!(reference.len(), other.len(), "series lengths differ");
    let scale = reference.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(GAP_FLOOR);
    let diff = reference
        .iter()
        .zip(other)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}

/// Complex analogue of [`relative_gap`].
pub fn relative_gap_complex(reference: &[Complex64], other: &[Complex64]) -> f64 {
    assert_eq!(reference.len(), other.len(), "series lengths differ");
    let scale = reference.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(GAP_FLOOR);
    let diff = reference
        .iter()
        .zip(other)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    diff / scale
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesGap {
    pub name: String,
    pub gap: f64,
}

fn check_times(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > TIME_MATCH_TOL) {
        return Err(Error::config("series are sampled on different time grids"));
    }
    Ok(())
}

/// Per-moment gaps between two trajectories of the same layout.
pub fn moment_gaps(reference: &Trajectory, other: &Trajectory) -> Result<Vec<SeriesGap>> {
    if reference.layout() != other.layout() {
        return Err(Error::config("trajectories have different mode layouts"));
    }
    check_times(reference.times(), other.times())?;
    let Some(first) = reference.states().first() else {
        return Ok(Vec::new());
    };
    let names: Vec<String> = first.labelled_moments().into_iter().map(|(n, _)| n).collect();
    let column = |traj: &Trajectory, k: usize| -> Vec<Complex64> {
        traj.states().iter().map(|s| s.labelled_moments()[k].1).collect()
    };
    Ok(names
        .into_iter()
        .enumerate()
        .map(|(k, name)| SeriesGap {
            gap: relative_gap_complex(&column(reference, k), &column(other, k)),
            name,
        })
        .collect())
}

pub fn max_gap(gaps: &[SeriesGap]) -> f64 {
    gaps.iter().map(|g| g.gap).fold(0.0, f64::max)
}

/// Gaps between the variance and occupation series of two reports.
pub fn report_gaps(reference: &VarianceReport, other: &VarianceReport) -> Result<Vec<SeriesGap>> {
    check_times(&reference.times, &other.times)?;
    let pairs: [(&str, &[f64], &[f64]); 6] = [
        ("var_minus", &reference.var_minus, &other.var_minus),
        ("var_plus", &reference.var_plus, &other.var_plus),
        ("var_p_sum", &reference.var_p_sum, &other.var_p_sum),
        ("var_p_diff", &reference.var_p_diff, &other.var_p_diff),
        ("n1", &reference.n1, &other.n1),
        ("n2", &reference.n2, &other.n2),
    ];
    Ok(pairs
        .iter()
        .map(|(name, a, b)| SeriesGap {
            name: name.to_string(),
            gap: relative_gap(a, b),
        })
        .collect())
}
