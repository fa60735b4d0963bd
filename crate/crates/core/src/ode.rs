//! Uniform time grids and the classical fixed-step RK4 integrator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest h·(fastest rate) accepted by the engines.
pub const STEP_GUARD: f64 = 0.05;

/// Uniform grid `start, start + h, …, end`. The step is adjusted so that an
/// integer number of steps lands exactly on `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        let grid = TimeGrid { start, end, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::config("time grid bounds must be finite"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("time step must be positive"));
        }
        if !(self.start >= 0.0) {
            return Err(Error::config("time grid must start at t >= 0"));
        }
        if self.steps() == 0 {
            return Err(Error::config(format!(
                "empty time grid [{}, {}] with step {}",
                self.start, self.end, self.step
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        let span = self.end - self.start;
        if !(span > 0.0) {
            return 0;
        }
        (span / self.step).round().max(1.0) as usize
    }

    /// The step actually taken.
    pub fn effective_step(&self) -> f64 {
        (self.end - self.start) / self.steps() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.steps();
        let h = self.effective_step();
        (0..=n)
            .map(|k| if k == n { self.end } else { self.start + k as f64 * h })
            .collect()
    }

    /// Checks h·rate ≤ [`STEP_GUARD`].
    pub fn check_guard(&self, max_rate: f64) -> Result<()> {
        let h = self.effective_step();
        if h * max_rate > STEP_GUARD {
            return Err(Error::config(format!(
                "step {h} too large for fastest rate {max_rate}: h·rate = {} > {STEP_GUARD}",
                h * max_rate
            )));
        }
        Ok(())
    }

    /// Default grid with h = 0.01/max_rate.
    pub fn with_default_step(start: f64, end: f64, max_rate: f64) -> Result<Self> {
        let rate = if max_rate > 0.0 { max_rate } else { 1.0 };
        TimeGrid::new(start, end, 0.01 / rate)
    }
}

/// Right-hand side of dy/dt = f(t, y), writing into `out`.
pub trait Derivative {
    fn eval(&mut self, t: f64, y: &[Complex64], out: &mut [Complex64]);
}

impl<F> Derivative for F
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    fn eval(&mut self, t: f64, y: &[Complex64], out: &mut [Complex64]) {
        self(t, y, out)
    }
}

/// Classical RK4 with preallocated stage buffers.
pub struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step<D: Derivative>(&mut self, f: &mut D, t: f64, h: f64, y: &mut [Complex64]) {
        let half = 0.5 * h;
        f.eval(t, y, &mut self.k1);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = y + k * half;
        }
        f.eval(t + half, &self.tmp, &mut self.k2);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = y + k * half;
        }
        f.eval(t + half, &self.tmp, &mut self.k3);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = y + k * h;
        }
        f.eval(t + h, &self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for (i, y) in y.iter_mut().enumerate() {
            *y += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Integrates over `grid`, calling `observe(t, y)` at every grid point
/// (including the start). Non-finite values abort with the offending time.
pub fn integrate<D, O>(f: &mut D, grid: &TimeGrid, y: &mut [Complex64], mut observe: O) -> Result<()>
where
    D: Derivative,
    O: FnMut(f64, &[Complex64]) -> Result<()>,
{
    let times = grid.times();
    let mut rk = Rk4::new(y.len());
    observe(times[0], y)?;
    for w in times.windows(2) {
        rk.step(f, w[0], w[1] - w[0], y);
        if y.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Integration {
                time: w[1],
                reason: "non-finite state".into(),
            });
        }
        observe(w[1], y)?;
    }
    Ok(())
}
