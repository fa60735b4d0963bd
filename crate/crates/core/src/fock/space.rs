//! Truncated tensor-product Fock spaces and sparse operators on them.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest basis dimension accepted; ρ then occupies about 1 GiB.
pub const MAX_DIMENSION: usize = 8192;

/// Tensor product of truncated modes. A cutoff `N` keeps levels `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl FockSpace {
    pub fn new(cutoffs: &[usize]) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::config("at least one mode is required"));
        }
        if let Some(c) = cutoffs.iter().find(|&&c| c < 2) {
            return Err(Error::config(format!("Fock cutoff {c} is below 2")));
        }
        let mut dim = 1usize;
        for &c in cutoffs {
            dim = dim
                .checked_mul(c)
                .filter(|&d| d <= MAX_DIMENSION)
                .ok_or_else(|| {
                    Error::config(format!(
                        "Fock cutoffs {cutoffs:?} exceed the dimension limit {MAX_DIMENSION}"
                    ))
                })?;
        }
        // last mode varies fastest
        let mut strides = vec![1; cutoffs.len()];
        for m in (0..cutoffs.len() - 1).rev() {
            strides[m] = strides[m + 1] * cutoffs[m + 1];
        }
        Ok(FockSpace {
            cutoffs: cutoffs.to_vec(),
            strides,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    /// Occupation of `mode` in basis state `index`.
    pub fn level(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.cutoffs[mode]
    }

    pub fn levels(&self, index: usize) -> Vec<usize> {
        (0..self.n_modes()).map(|m| self.level(index, m)).collect()
    }

    pub fn index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.n_modes() {
            return Err(Error::config("wrong number of mode levels"));
        }
        let mut idx = 0;
        for (m, (&n, &c)) in levels.iter().zip(&self.cutoffs).enumerate() {
            if n >= c {
                return Err(Error::config(format!("level {n} outside cutoff {c} of mode {m}")));
            }
            idx += n * self.strides[m];
        }
        Ok(idx)
    }

    /// Annihilation operator of `mode`, ⟨n|a|n+1⟩ = √(n+1).
    pub fn annihilation(&self, mode: usize) -> SparseOp {
        let stride = self.strides[mode];
        let triplets = (0..self.dim)
            .filter_map(|col| {
                let n = self.level(col, mode);
                (n > 0).then(|| (col - stride, col, Complex64::new((n as f64).sqrt(), 0.0)))
            })
            .collect();
        SparseOp::from_triplets(self.dim, triplets)
    }

    pub fn number(&self, mode: usize) -> SparseOp {
        let triplets = (0..self.dim)
            .map(|i| (i, i, Complex64::new(self.level(i, mode) as f64, 0.0)))
            .collect();
        SparseOp::from_triplets(self.dim, triplets)
    }

    pub fn identity(&self) -> SparseOp {
        SparseOp::identity(self.dim)
    }
}

/// Annihilation operators for every mode of a truncated space.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub space: FockSpace,
    pub annihilators: Vec<SparseOp>,
}

impl Ladder {
    pub fn a(&self, mode: usize) -> &SparseOp {
        &self.annihilators[mode]
    }

    pub fn a_dag(&self, mode: usize) -> SparseOp {
        self.annihilators[mode].adjoint()
    }
}

pub fn build_ladder(cutoffs: &[usize]) -> Result<Ladder> {
    let space = FockSpace::new(cutoffs)?;
    let annihilators = (0..space.n_modes()).map(|m| space.annihilation(m)).collect();
    Ok(Ladder {
        space,
        annihilators,
    })
}

/// Square complex matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOp {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != Complex64::new(0.0, 0.0));
        let mut row_ptr = vec![0; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOp {
            dim,
            row_ptr,
            cols: merged.iter().map(|t| t.1).collect(),
            vals: merged.iter().map(|t| t.2).collect(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseOp::from_triplets(dim, (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        SparseOp::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Σ sₖ Opₖ.
    pub fn linear_combination(dim: usize, terms: &[(Complex64, &SparseOp)]) -> Self {
        let triplets = terms
            .iter()
            .flat_map(|(s, op)| {
                assert_eq!(op.dim, dim, "operator dimension mismatch");
                op.triplets().map(move |(r, c, v)| (r, c, s * v))
            })
            .collect();
        SparseOp::from_triplets(dim, triplets)
    }

    /// Sparse product `self · rhs`.
    pub fn mul(&self, rhs: &SparseOp) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let mut triplets = Vec::new();
        for (r, k, v) in self.triplets() {
            for idx in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                triplets.push((r, rhs.cols[idx], v * rhs.vals[idx]));
            }
        }
        SparseOp::from_triplets(self.dim, triplets)
    }

    pub fn commutator(&self, rhs: &SparseOp) -> Self {
        let ab = self.mul(rhs);
        let ba = rhs.mul(self);
        SparseOp::linear_combination(self.dim, &[(1.0.into(), &ab), ((-1.0).into(), &ba)])
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    /// Tr(self · ρ) for row-major dense ρ.
    pub fn trace_product(&self, rho: &[Complex64]) -> Complex64 {
        let n = self.dim;
        self.triplets().map(|(r, c, v)| v * rho[c * n + r]).sum()
    }

    /// out += s · self · ρ, all dense row-major.
    pub fn left_mul_acc(&self, s: Complex64, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = s * self.vals[k];
                let src = &rho[self.cols[k] * n..(self.cols[k] + 1) * n];
                for (o, r) in row.iter_mut().zip(src) {
                    *o += v * r;
                }
            }
        });
    }

    /// out += s · ρ · self†, all dense row-major.
    pub fn right_mul_adjoint_acc(&self, s: Complex64, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let src = &rho[i * n..(i + 1) * n];
            for (j, o) in row.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                    acc += src[self.cols[k]] * self.vals[k].conj();
                }
                *o += s * acc;
            }
        });
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            out[r * self.dim + c] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cutoff_two_lowers_one_to_zero() {
        let l = build_ladder(&[2]).unwrap();
        assert_eq!(l.a(0).apply(&[c(0.0), c(1.0)]), vec![c(1.0), c(0.0)]);
    }

    #[test]
    fn cutoff_below_two_rejected() {
        assert!(matches!(build_ladder(&[3, 1]), Err(Error::Config(_))));
        assert!(build_ladder(&[]).is_err());
    }

    #[test]
    fn number_operator_diagonal() {
        let l = build_ladder(&[5]).unwrap();
        let n = l.a_dag(0).mul(l.a(0));
        for i in 0..5 {
            assert!((n.get(i, i) - c(i as f64)).norm() < 1e-14);
        }
        let diff = SparseOp::linear_combination(5, &[(c(1.0), &n), (c(-1.0), &l.space.number(0))]);
        assert!(diff.triplets().all(|(_, _, v)| v.norm() < 1e-14));
    }

    #[test]
    fn commutator_defect_at_top_corner() {
        for cutoff in [2, 4, 7] {
            let l = build_ladder(&[cutoff]).unwrap();
            let comm = l.a(0).commutator(&l.a_dag(0));
            for i in 0..cutoff {
                let expected = if i + 1 == cutoff { 1.0 - cutoff as f64 } else { 1.0 };
                assert!((comm.get(i, i) - c(expected)).norm() < 1e-12);
            }
            // identity minus the corner entry: defect of magnitude `cutoff`
            assert!(((comm.get(cutoff - 1, cutoff - 1) - c(1.0)).norm() - cutoff as f64).abs() < 1e-12);
            assert_eq!(comm.nnz(), cutoff);
        }
    }

    #[test]
    fn tensor_embedding_commutes_across_modes() {
        let l = build_ladder(&[3, 4]).unwrap();
        let comm = l.a(0).commutator(&l.a_dag(1));
        assert_eq!(comm.nnz(), 0);
        let idx = l.space.index(&[1, 2]).unwrap();
        assert_eq!(l.space.levels(idx), vec![1, 2]);
        assert!(l.space.index(&[3, 0]).is_err());
    }

    #[test]
    fn dense_products_match_sparse() {
        let l = build_ladder(&[3, 3]).unwrap();
        let n = l.space.dim();
        let rho: Vec<Complex64> = (0..n * n)
            .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let op = l.a(0).mul(&l.a_dag(1)).scaled(Complex64::new(0.3, -0.2));
        let dense = op.to_dense();
        let mut left = vec![Complex64::new(0.0, 0.0); n * n];
        let mut right = left.clone();
        op.left_mul_acc(c(1.0), &rho, &mut left);
        op.right_mul_adjoint_acc(c(1.0), &rho, &mut right);
        for i in 0..n {
            for j in 0..n {
                let l_ref: Complex64 = (0..n).map(|k| dense[i * n + k] * rho[k * n + j]).sum();
                let r_ref: Complex64 = (0..n).map(|k| rho[i * n + k] * dense[j * n + k].conj()).sum();
                assert!((left[i * n + j] - l_ref).norm() < 1e-12);
                assert!((right[i * n + j] - r_ref).norm() < 1e-12);
            }
        }
        let tr: Complex64 = (0..n).map(|i| left[i * n + i]).sum();
        assert!((op.trace_product(&rho) - tr).norm() < 1e-12);
    }

    #[test]
    fn dimension_limit() {
        assert!(FockSpace::new(&[100, 100]).is_err());
    }
}
