use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Named bosonic modes of the cascaded system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    A1,
    A2,
    B1,
    B2,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::A1 => "a1",
            Mode::A2 => "a2",
            Mode::B1 => "b1",
            Mode::B2 => "b2",
        }
    }
}

/// Which modes a model carries, and in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeLayout {
    /// (a1, a2, b1, b2): the full cascaded model.
    Full,
    /// (b1, b2): cavities adiabatically eliminated.
    Reduced,
    /// (a1, b1): one atom-cavity subsystem.
    Single,
}

impl ModeLayout {
    pub fn modes(self) -> &'static [Mode] {
        match self {
            ModeLayout::Full => &[Mode::A1, Mode::A2, Mode::B1, Mode::B2],
            ModeLayout::Reduced => &[Mode::B1, Mode::B2],
            ModeLayout::Single => &[Mode::A1, Mode::B1],
        }
    }

    pub fn len(self) -> usize {
        self.modes().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn index(self, mode: Mode) -> Option<usize> {
        self.modes().iter().position(|&m| m == mode)
    }
}

/// Upper-triangle index of (i, j), i ≤ j, in an n-mode packing.
fn tri(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// First and second moments of the mode annihilation operators.
///
/// Stores ⟨m_i⟩, ⟨m_i† m_j⟩ (Hermitian, upper triangle) and ⟨m_i m_j⟩
/// (symmetric, upper triangle). All other orderings follow from these and
/// the commutators.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    layout: ModeLayout,
    mean: Vec<Complex64>,
    normal: Vec<Complex64>,
    anomalous: Vec<Complex64>,
}

impl MomentState {
    pub fn vacuum(layout: ModeLayout) -> Self {
        let n = layout.len();
        let pairs = n * (n + 1) / 2;
        MomentState {
            layout,
            mean: vec![ZERO; n],
            normal: vec![ZERO; pairs],
            anomalous: vec![ZERO; pairs],
        }
    }

    /// Independent thermal states: ⟨m†m⟩ = n̄ for the listed modes, every
    /// other moment zero.
    pub fn thermal(layout: ModeLayout, occupations: &[(Mode, f64)]) -> Result<Self> {
        let mut s = Self::vacuum(layout);
        for &(mode, nbar) in occupations {
            if !(nbar >= 0.0 && nbar.is_finite()) {
                return Err(Error::domain("thermal occupation must be nonnegative"));
            }
            let i = layout
                .index(mode)
                .ok_or_else(|| Error::config(format!("mode {} not in layout", mode.name())))?;
            s.set_normal(i, i, Complex64::new(nbar, 0.0));
        }
        Ok(s)
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self, i: usize) -> Complex64 {
        self.mean[i]
    }

    pub fn set_mean(&mut self, i: usize, v: Complex64) {
        self.mean[i] = v;
    }

    /// ⟨m_i† m_j⟩
    pub fn normal(&self, i: usize, j: usize) -> Complex64 {
        let n = self.n_modes();
        if i <= j {
            self.normal[tri(n, i, j)]
        } else {
            self.normal[tri(n, j, i)].conj()
        }
    }

    pub fn set_normal(&mut self, i: usize, j: usize, v: Complex64) {
        let n = self.n_modes();
        if i <= j {
            self.normal[tri(n, i, j)] = v;
        } else {
            self.normal[tri(n, j, i)] = v.conj();
        }
    }

    /// ⟨m_i m_j⟩
    pub fn anomalous(&self, i: usize, j: usize) -> Complex64 {
        let n = self.n_modes();
        self.anomalous[tri(n, i.min(j), i.max(j))]
    }

    pub fn set_anomalous(&mut self, i: usize, j: usize, v: Complex64) {
        let n = self.n_modes();
        self.anomalous[tri(n, i.min(j), i.max(j))] = v;
    }

    pub fn mode_mean(&self, mode: Mode) -> Option<Complex64> {
        self.layout.index(mode).map(|i| self.mean(i))
    }

    /// ⟨m†m⟩ for a named mode.
    pub fn occupation(&self, mode: Mode) -> Option<f64> {
        self.layout.index(mode).map(|i| self.normal(i, i).re)
    }

    pub fn mode_normal(&self, a: Mode, b: Mode) -> Option<Complex64> {
        Some(self.normal(self.layout.index(a)?, self.layout.index(b)?))
    }

    pub fn mode_anomalous(&self, a: Mode, b: Mode) -> Option<Complex64> {
        Some(self.anomalous(self.layout.index(a)?, self.layout.index(b)?))
    }

    /// Length of the packed representation.
    pub fn packed_len(layout: ModeLayout) -> usize {
        let n = layout.len();
        n + n * (n + 1)
    }

    pub fn pack(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(Self::packed_len(self.layout));
        out.extend_from_slice(&self.mean);
        out.extend_from_slice(&self.normal);
        out.extend_from_slice(&self.anomalous);
        out
    }

    pub fn unpack(layout: ModeLayout, packed: &[Complex64]) -> Self {
        let n = layout.len();
        let pairs = n * (n + 1) / 2;
        assert_eq!(packed.len(), n + 2 * pairs);
        MomentState {
            layout,
            mean: packed[..n].to_vec(),
            normal: packed[n..n + pairs].to_vec(),
            anomalous: packed[n + pairs..].to_vec(),
        }
    }

    /// Every packed moment, with a label, for element-wise comparisons.
    pub fn labelled_moments(&self) -> Vec<(String, Complex64)> {
        let modes = self.layout.modes();
        let n = modes.len();
        let mut out = Vec::new();
        for (i, m) in modes.iter().enumerate() {
            out.push((format!("<{}>", m.name()), self.mean(i)));
        }
        for i in 0..n {
            for j in i..n {
                out.push((
                    format!("<{}+ {}>", modes[i].name(), modes[j].name()),
                    self.normal(i, j),
                ));
            }
        }
        for i in 0..n {
            for j in i..n {
                out.push((
                    format!("<{} {}>", modes[i].name(), modes[j].name()),
                    self.anomalous(i, j),
                ));
            }
        }
        out
    }

    /// Centered second moments ⟨Δv_i Δv_j⟩ for v = (m_1…m_n, m_1†…m_n†).
    pub fn centered_second_moments(&self) -> DMatrix<Complex64> {
        let n = self.n_modes();
        let mut s = second_moment_matrix(self);
        let v: Vec<Complex64> = self
            .mean
            .iter()
            .copied()
            .chain(self.mean.iter().map(|z| z.conj()))
            .collect();
        for i in 0..2 * n {
            for j in 0..2 * n {
                s[(i, j)] -= v[i] * v[j];
            }
        }
        s
    }

    /// Symmetrized quadrature covariance σ for R = (X₁, P₁, X₂, P₂, …) with
    /// X = m + m†, P = −i(m − m†); the vacuum has σ = 𝟙.
    pub fn quadrature_covariance(&self) -> DMatrix<f64> {
        let g = self.quadrature_gram();
        DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| 0.5 * (g[(i, j)].re + g[(j, i)].re))
    }

    /// ⟨ΔR_i ΔR_j⟩, which equals σ + iJ for a physical state.
    fn quadrature_gram(&self) -> DMatrix<Complex64> {
        let n = self.n_modes();
        let s = self.centered_second_moments();
        let i = Complex64::i();
        let mut t = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        for k in 0..n {
            t[(2 * k, k)] = 1.0.into();
            t[(2 * k, n + k)] = 1.0.into();
            t[(2 * k + 1, k)] = -i;
            t[(2 * k + 1, n + k)] = i;
        }
        &t * s * t.transpose()
    }

    /// Smallest eigenvalue of σ + iJ. Nonnegative for physical states.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let sigma = self.quadrature_covariance();
        let m = sigma.nrows();
        let h = DMatrix::from_fn(m, m, |r, c| {
            let j = if r / 2 == c / 2 {
                match (r % 2, c % 2) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                }
            } else {
                0.0
            };
            Complex64::new(sigma[(r, c)], j)
        });
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.uncertainty_min_eigenvalue() >= -tol
    }
}

/// Full ⟨v_i v_j⟩ matrix for v = (m, m†).
pub(crate) fn second_moment_matrix(s: &MomentState) -> DMatrix<Complex64> {
    let n = s.n_modes();
    let mut out = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            out[(i, j)] = s.anomalous(i, j);
            out[(i, n + j)] = s.normal(j, i) + delta;
            out[(n + i, j)] = s.normal(i, j);
            out[(n + i, n + j)] = s.anomalous(i, j).conj();
        }
    }
    out
}

/// The four joint quadrature variances of modes b₁, b₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EprVariances {
    /// ⟨(X₁−X₂)²⟩
    pub x_diff: f64,
    /// ⟨(X₁+X₂)²⟩
    pub x_sum: f64,
    /// ⟨(P₁+P₂)²⟩
    pub p_sum: f64,
    /// ⟨(P₁−P₂)²⟩
    pub p_diff: f64,
}

/// Centered EPR variances of the motional modes; `None` when the layout
/// does not carry both b₁ and b₂.
pub fn variances(m: &MomentState) -> Option<EprVariances> {
    let i1 = m.layout().index(Mode::B1)?;
    let i2 = m.layout().index(Mode::B2)?;
    let sigma = m.quadrature_covariance();
    let (x1, p1, x2, p2) = (2 * i1, 2 * i1 + 1, 2 * i2, 2 * i2 + 1);
    let comb = |a: usize, b: usize, sign: f64| {
        sigma[(a, a)] + sigma[(b, b)] + 2.0 * sign * sigma[(a, b)]
    };
    Some(EprVariances {
        x_diff: comb(x1, x2, -1.0),
        x_sum: comb(x1, x2, 1.0),
        p_sum: comb(p1, p2, 1.0),
        p_diff: comb(p1, p2, -1.0),
    })
}
