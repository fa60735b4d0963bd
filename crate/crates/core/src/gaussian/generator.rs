//! Linear moment generators for quadratic Hamiltonians with dissipators
//! linear in the mode operators.
//!
//! With v = (m₁…m_n, m₁†…m_n†), first moments obey d⟨v⟩/dt = A⟨v⟩ and the
//! second-moment matrix S_ij = ⟨v_i v_j⟩ obeys dS/dt = AS + SAᵀ + D.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::moments::{second_moment_matrix, MomentState};
use crate::model::EffectiveParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A linear combination Σ c_k v_k of creation/annihilation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOp(Vec<Complex64>);

impl LinearOp {
    pub fn annihilation(n: usize, mode: usize) -> Self {
        let mut c = vec![ZERO; 2 * n];
        c[mode] = 1.0.into();
        LinearOp(c)
    }

    pub fn creation(n: usize, mode: usize) -> Self {
        let mut c = vec![ZERO; 2 * n];
        c[n + mode] = 1.0.into();
        LinearOp(c)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for c in &mut self.0 {
            *c *= factor;
        }
        self
    }

    /// Coefficients of the adjoint operator.
    pub fn adjoint(&self) -> Self {
        let n = self.0.len() / 2;
        let mut c = vec![ZERO; 2 * n];
        for k in 0..n {
            c[k] = self.0[n + k].conj();
            c[n + k] = self.0[k].conj();
        }
        LinearOp(c)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.0
    }
}

/// Drift `A` and diffusion `D` of the moment equations.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGenerator {
    pub drift: DMatrix<Complex64>,
    pub diffusion: DMatrix<Complex64>,
}

impl MomentGenerator {
    pub fn n_modes(&self) -> usize {
        self.drift.nrows() / 2
    }

    /// Time derivative of the packed moments of `state`.
    pub fn apply(&self, state: &MomentState) -> MomentState {
        let n = self.n_modes();
        let a = &self.drift;
        let s = second_moment_matrix(state);
        let ds = a * &s + &s * a.transpose() + &self.diffusion;

        let v: Vec<Complex64> = (0..n)
            .map(|i| state.mean(i))
            .chain((0..n).map(|i| state.mean(i).conj()))
            .collect();
        let mut out = MomentState::vacuum(state.layout());
        for i in 0..n {
            let dv: Complex64 = (0..2 * n).map(|k| a[(i, k)] * v[k]).sum();
            out.set_mean(i, dv);
            for j in i..n {
                out.set_anomalous(i, j, ds[(i, j)]);
                out.set_normal(i, j, ds[(n + i, j)]);
            }
        }
        out
    }
}

/// Accumulates Hamiltonian and dissipative contributions into a generator.
pub struct GeneratorBuilder {
    n: usize,
    /// H = ½ vᵀ h v
    hamiltonian: DMatrix<Complex64>,
    dissipative_drift: DMatrix<Complex64>,
    diffusion: DMatrix<Complex64>,
}

impl GeneratorBuilder {
    pub fn new(n_modes: usize) -> Self {
        let m = 2 * n_modes;
        GeneratorBuilder {
            n: n_modes,
            hamiltonian: DMatrix::zeros(m, m),
            dissipative_drift: DMatrix::zeros(m, m),
            diffusion: DMatrix::zeros(m, m),
        }
    }

    pub fn ann(&self, mode: usize) -> LinearOp {
        LinearOp::annihilation(self.n, mode)
    }

    pub fn cre(&self, mode: usize) -> LinearOp {
        LinearOp::creation(self.n, mode)
    }

    /// [v_i, v_j]
    fn commutator(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        if i < n && j == i + n {
            1.0
        } else if i >= n && j + n == i {
            -1.0
        } else {
            0.0
        }
    }

    /// (J x)_i = [v_i, X]
    fn commutator_with(&self, x: &LinearOp) -> Vec<Complex64> {
        let m = 2 * self.n;
        (0..m)
            .map(|i| (0..m).map(|k| x.0[k] * self.commutator(i, k)).sum())
            .collect()
    }

    /// Adds `coeff · X Y` to the Hamiltonian, dropping c-number reordering
    /// constants.
    pub fn hamiltonian_product(&mut self, coeff: Complex64, x: &LinearOp, y: &LinearOp) {
        let m = 2 * self.n;
        for k in 0..m {
            for l in 0..m {
                let c = coeff * x.0[k] * y.0[l];
                if c != ZERO {
                    self.hamiltonian[(k, l)] += c;
                    self.hamiltonian[(l, k)] += c;
                }
            }
        }
    }

    /// Adds `rate · (XρY† − ½{Y†X, ρ})`.
    pub fn dissipator(&mut self, rate: f64, x: &LinearOp, y: &LinearOp) {
        let m = 2 * self.n;
        let y_dag = y.adjoint();
        let p = self.commutator_with(x);
        let q = self.commutator_with(&y_dag);
        for i in 0..m {
            for k in 0..m {
                self.dissipative_drift[(i, k)] +=
                    (p[i] * y_dag.0[k] - q[i] * x.0[k]) * (0.5 * rate);
                self.diffusion[(i, k)] -= q[i] * p[k] * rate;
            }
        }
    }

    /// Adds the unidirectional coupling −c([X₂†, X₁ρ] + [ρX₁†, X₂]), written
    /// as c(D[X₁,X₂] + D[X₂,X₁]) − i[H, ρ] with H = (ic/2)(X₁†X₂ − X₂†X₁).
    pub fn cascade(&mut self, c: f64, x1: &LinearOp, x2: &LinearOp) {
        self.dissipator(c, x1, x2);
        self.dissipator(c, x2, x1);
        let half_ic = Complex64::new(0.0, 0.5 * c);
        self.hamiltonian_product(half_ic, &x1.adjoint(), x2);
        self.hamiltonian_product(-half_ic, &x2.adjoint(), x1);
    }

    pub fn build(self) -> MomentGenerator {
        let m = 2 * self.n;
        // Hamiltonian part of the drift: −i J h
        let j = DMatrix::from_fn(m, m, |r, c| Complex64::new(self.commutator(r, c), 0.0));
        let drift = self.dissipative_drift - (j * &self.hamiltonian) * Complex64::i();
        MomentGenerator {
            drift,
            diffusion: self.diffusion,
        }
    }
}

/// Generator of the full cascaded model at time `t`, modes (a₁, a₂, b₁, b₂).
pub fn assemble_full_generator(p: &EffectiveParams, t: f64) -> MomentGenerator {
    let (a1, a2, b1, b2) = (0, 1, 2, 3);
    let mut g = GeneratorBuilder::new(4);
    let om1 = p.omega1.value(t);
    let om2 = p.omega2.value(t);
    let e1 = Complex64::from_polar(1.0, p.phi1);
    let e2 = Complex64::from_polar(1.0, p.phi2);

    // parametric a₁b₁ pair creation
    g.hamiltonian_product(e1 * om1, &g.ann(a1), &g.ann(b1));
    g.hamiltonian_product(e1.conj() * om1, &g.cre(a1), &g.cre(b1));
    // beam-splitter exchange a₂ ↔ b₂
    g.hamiltonian_product(e2.conj() * om2, &g.cre(a2), &g.ann(b2));
    g.hamiltonian_product(e2 * om2, &g.cre(b2), &g.ann(a2));

    g.dissipator(2.0 * p.kappa1, &g.ann(a1), &g.ann(a1));
    g.dissipator(2.0 * p.kappa2, &g.ann(a2), &g.ann(a2));
    let (x1, x2) = (g.ann(a1), g.ann(a2));
    g.cascade(p.cascade_strength(), &x1, &x2);
    g.build()
}

/// Generator of the reduced two-mode model (b₁, b₂).
///
/// `cross` is the signed coupling whose magnitude is 2√(εΓ₁Γ₂);
/// `phase_difference` is φ₁ − φ₂.
pub fn assemble_reduced_generator(
    gamma1: f64,
    gamma2: f64,
    cross: f64,
    phase_difference: f64,
) -> MomentGenerator {
    let (b1, b2) = (0, 1);
    let mut g = GeneratorBuilder::new(2);
    g.dissipator(2.0 * gamma1, &g.cre(b1), &g.cre(b1));
    g.dissipator(2.0 * gamma2, &g.ann(b2), &g.ann(b2));
    // mode 1 acts on mode 2 through −e^{−i(φ₁−φ₂)} b₁†
    let source = g
        .cre(b1)
        .scaled(-Complex64::from_polar(1.0, -phase_difference));
    let target = g.ann(b2);
    g.cascade(cross, &source, &target);
    g.build()
}

/// Generator of one atom-cavity subsystem (a₁, b₁) with the parametric
/// coupling and, optionally, the e^{±2iνt} counter-rotating terms.
pub fn assemble_single_generator(
    kappa: f64,
    omega: f64,
    phi: f64,
    counter_rotating: Option<(f64, f64)>,
) -> MomentGenerator {
    let (a, b) = (0, 1);
    let mut g = GeneratorBuilder::new(2);
    let e = Complex64::from_polar(1.0, phi);
    g.hamiltonian_product(e * omega, &g.ann(a), &g.ann(b));
    g.hamiltonian_product(e.conj() * omega, &g.cre(a), &g.cre(b));
    if let Some((nu, t)) = counter_rotating {
        let rot = Complex64::from_polar(1.0, 2.0 * nu * t + phi);
        g.hamiltonian_product(rot.conj() * omega, &g.cre(a), &g.ann(b));
        g.hamiltonian_product(rot * omega, &g.ann(a), &g.cre(b));
    }
    g.dissipator(2.0 * kappa, &g.ann(a), &g.ann(a));
    g.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::moments::{Mode, ModeLayout};

    #[test]
    fn vacuum_stationary_without_drive() {
        let p = EffectiveParams::constant(1.0, 2.0, 0.7, 0.0, 0.0);
        let d = assemble_full_generator(&p, 0.0).apply(&MomentState::vacuum(ModeLayout::Full));
        assert!(d.pack().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn pure_cavity_decay() {
        let p = EffectiveParams::constant(1.3, 2.0, 1.0, 0.0, 0.0);
        let mut s = MomentState::vacuum(ModeLayout::Full);
        s.set_mean(0, 1.0.into());
        s.set_normal(0, 0, 1.0.into());
        s.set_anomalous(0, 0, 1.0.into());
        let d = assemble_full_generator(&p, 0.0).apply(&s);
        assert!((d.mean(0) + 1.3).norm() < 1e-15);
        // fed into cavity 2 by the cascade: −2√(εκ₁κ₂)⟨a₁⟩
        assert!((d.mean(1) + 2.0 * (1.3f64 * 2.0).sqrt()).norm() < 1e-14);
    }

    #[test]
    fn reduced_generator_reproduces_moment_equations() {
        // d⟨b₁†b₁⟩ = 2Γ₁(1+n₁); d⟨b₁b₂⟩ = (Γ₁−Γ₂)⟨b₁b₂⟩ + 2√(εΓ₁Γ₂)(n₁+1);
        // d⟨b₂†b₂⟩ = −2Γ₂n₂ + 2√(εΓ₁Γ₂)(⟨b₁†b₂†⟩ + ⟨b₁b₂⟩)
        let (g1, g2, eps) = (0.3, 0.7, 0.8);
        let c = 2.0 * (eps * g1 * g2 as f64).sqrt();
        let gen = assemble_reduced_generator(g1, g2, c, 0.0);
        let mut s = MomentState::vacuum(ModeLayout::Reduced);
        s.set_normal(0, 0, 0.4.into());
        s.set_normal(1, 1, 0.2.into());
        s.set_anomalous(0, 1, Complex64::new(0.25, 0.05));
        let d = gen.apply(&s);
        let m12 = s.anomalous(0, 1);
        assert!((d.normal(0, 0) - 2.0 * g1 * 1.4).norm() < 1e-14);
        assert!((d.anomalous(0, 1) - ((g1 - g2) * m12 + c * 1.4)).norm() < 1e-14);
        assert!((d.normal(1, 1) - (-2.0 * g2 * 0.2 + c * (m12.conj() + m12))).norm() < 1e-14);
        assert!(d.anomalous(0, 0).norm() < 1e-15 && d.normal(0, 1).norm() < 1e-15);
    }

    #[test]
    fn parametric_pair_from_vacuum() {
        // d⟨a†a⟩/dt = 0 at the vacuum, d⟨ab⟩/dt = −iΩe^{−iφ}
        let gen = assemble_single_generator(0.0, 0.4, 0.3, None);
        let d = gen.apply(&MomentState::vacuum(ModeLayout::Single));
        let i = Complex64::i();
        assert!(d.normal(0, 0).norm() < 1e-15);
        let expected = -i * 0.4 * Complex64::from_polar(1.0, -0.3);
        let got = d.mode_anomalous(Mode::A1, Mode::B1).unwrap();
        assert!((got - expected).norm() < 1e-15);
    }
}
