//! Dense density operators on a truncated Fock space.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::space::{FockSpace, SparseOp};
use crate::error::{Error, Result};

/// Row-major dense ρ over a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: FockSpace,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn vacuum(space: FockSpace) -> Self {
        let n = space.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        data[0] = Complex64::new(1.0, 0.0);
        DensityMatrix { space, data }
    }

    /// Product of thermal states, `nbar[m]` per mode, renormalised inside
    /// the truncation.
    pub fn thermal(space: FockSpace, nbar: &[f64]) -> Result<Self> {
        if nbar.len() != space.n_modes() {
            return Err(Error::config("one occupation per mode is required"));
        }
        if nbar.iter().any(|&n| !(n >= 0.0 && n.is_finite())) {
            return Err(Error::domain("thermal occupation must be nonnegative"));
        }
        let n = space.dim();
        let mut diag: Vec<f64> = (0..n)
            .map(|i| {
                nbar.iter()
                    .enumerate()
                    .map(|(m, &nb)| {
                        let k = space.level(i, m) as i32;
                        if nb == 0.0 {
                            if k == 0 { 1.0 } else { 0.0 }
                        } else {
                            (nb / (1.0 + nb)).powi(k) / (1.0 + nb)
                        }
                    })
                    .product()
            })
            .collect();
        let total: f64 = diag.iter().sum();
        diag.iter_mut().for_each(|p| *p /= total);
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, p) in diag.into_iter().enumerate() {
            data[i * n + i] = Complex64::new(p, 0.0);
        }
        Ok(DensityMatrix { space, data })
    }

    /// |ψ⟩⟨ψ| for a normalised ket.
    pub fn pure(space: FockSpace, ket: &[Complex64]) -> Result<Self> {
        let n = space.dim();
        if ket.len() != n {
            return Err(Error::config("ket dimension does not match the space"));
        }
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain("ket is not normalised"));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = ket[i] * ket[j].conj();
            }
        }
        Ok(DensityMatrix { space, data })
    }

    /// Wraps raw row-major data without checking physicality; used for the
    /// non-Hermitian operators that appear in two-time correlations.
    pub fn from_raw(space: FockSpace, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != space.dim() * space.dim() {
            return Err(Error::config("matrix size does not match the space"));
        }
        Ok(DensityMatrix { space, data })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> Complex64 {
        let n = self.dim();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    /// Tr(Oρ).
    pub fn expectation(&self, op: &SparseOp) -> Complex64 {
        op.trace_product(&self.data)
    }

    /// max |ρᵢⱼ − ρⱼᵢ*|.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Population of each mode's highest retained level.
    pub fn top_populations(&self) -> Vec<f64> {
        let n = self.dim();
        let cutoffs = self.space.cutoffs();
        let mut pops = vec![0.0; cutoffs.len()];
        for i in 0..n {
            let p = self.data[i * n + i].re;
            for (m, pop) in pops.iter_mut().enumerate() {
                if self.space.level(i, m) + 1 == cutoffs[m] {
                    *pop += p;
                }
            }
        }
        pops
    }

    fn hermitian_part(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj()))
    }

    /// Smallest eigenvalue of the Hermitian part of ρ; NaN if the
    /// eigensolver does not converge.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = self.hermitian_part();
        let n = h.nrows();
        let zero = Complex64::new(0.0, 0.0);
        // Exactly-zero rows carry exact zero eigenvalues; left in, they
        // make the QR iteration return spurious values (0 or −∞).
        let support: Vec<usize> = (0..n).filter(|&i| h.row(i).iter().any(|z| *z != zero)).collect();
        let floor = if support.len() < n { 0.0 } else { f64::INFINITY };
        if support.is_empty() {
            return floor;
        }
        let block = h.select_rows(&support).select_columns(&support);
        SymmetricEigen::try_new(block, EIGEN_TOL, EIGEN_MAX_ITER).map_or(f64::NAN, |e| {
            e.eigenvalues.iter().copied().fold(floor, f64::min)
        })
    }
}

const EIGEN_TOL: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 100_000;
