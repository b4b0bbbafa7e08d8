//! Symmetric block-diagonal matrices.
//!
//! The covariance of the paired temperature differences is block diagonal
//! with one dense block per lineage (at most 6 wide), so its inverse and
//! Cholesky factor are obtained block by block. The same type doubles as the
//! GLS weight matrix `W = Σ⁻¹` and as plain diagonal or identity weights.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiag {
    blocks: Vec<DMatrix<f64>>,
    /// Row offset of each block in the assembled matrix.
    offsets: Vec<usize>,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockDiagError {
    #[error("block {0} is not symmetric positive definite")]
    NotPositiveDefinite(usize),
    #[error("block {block} is {rows}x{cols}, expected square")]
    NotSquare { block: usize, rows: usize, cols: usize },
}

impl BlockDiag {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self, BlockDiagError> {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() {
                return Err(BlockDiagError::NotSquare {
                    block: i,
                    rows: b.nrows(),
                    cols: b.ncols(),
                });
            }
            offsets.push(dim);
            dim += b.nrows();
        }
        Ok(Self { blocks, offsets, dim })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let blocks = d.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect();
        Self::new(blocks).expect("1x1 blocks are square")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    /// Main diagonal of the assembled matrix.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.dim);
        for b in &self.blocks {
            for i in 0..b.nrows() {
                d.push(b[(i, i)]);
            }
        }
        d
    }

    /// Dense assembly; intended for small systems and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            m.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        }
        m
    }

    /// Block-wise inverse. Each block is inverted through its Cholesky
    /// factorization, so every block must be symmetric positive definite.
    pub fn inverse(&self) -> Result<Self, BlockDiagError> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let chol = b
                .clone()
                .cholesky()
                .ok_or(BlockDiagError::NotPositiveDefinite(i))?;
            blocks.push(chol.inverse());
        }
        Ok(Self {
            blocks,
            offsets: self.offsets.clone(),
            dim: self.dim,
        })
    }

    /// Block-wise lower Cholesky factors.
    pub fn cholesky(&self) -> Result<Self, BlockDiagError> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let chol = b
                .clone()
                .cholesky()
                .ok_or(BlockDiagError::NotPositiveDefinite(i))?;
            blocks.push(chol.l());
        }
        Ok(Self {
            blocks,
            offsets: self.offsets.clone(),
            dim: self.dim,
        })
    }

    /// `self * v`.
    pub fn mul_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = DVector::zeros(self.dim);
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            let n = b.nrows();
            let seg = v.rows(off, n);
            out.rows_mut(off, n).copy_from(&(b * seg));
        }
        out
    }

    /// `self * m` for a dense right factor with matching row count.
    pub fn mul_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(m.nrows(), self.dim);
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            let n = b.nrows();
            let rows = m.rows(off, n);
            out.rows_mut(off, n).copy_from(&(b * rows));
        }
        out
    }

    /// Quadratic form `vᵀ * self * v`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.mul_vector(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample() -> BlockDiag {
        BlockDiag::new(vec![
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.5]),
            DMatrix::from_element(1, 1, 3.0),
            DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.2, 1.0, 3.0, 0.4, 0.2, 0.4, 2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn inverse_matches_dense() {
        let b = sample();
        let inv = b.inverse().unwrap();
        let dense_inv = b.to_dense().try_inverse().unwrap();
        let diff = (inv.to_dense() - dense_inv).abs().max();
        assert!(diff < 1e-12, "diff = {diff}");
    }

    #[test]
    fn mul_matches_dense() {
        let b = sample();
        let v = DVector::from_fn(b.dim(), |i, _| (i as f64) - 2.0);
        let dense = b.to_dense() * &v;
        let fast = b.mul_vector(&v);
        assert_abs_diff_eq!((dense - fast).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cholesky_reconstructs() {
        let b = sample();
        let l = b.cholesky().unwrap().to_dense();
        let diff = (&l * l.transpose() - b.to_dense()).abs().max();
        assert!(diff < 1e-12);
    }

    #[test]
    fn non_pd_block_is_reported() {
        let b = BlockDiag::new(vec![DMatrix::from_element(1, 1, -1.0)]).unwrap();
        assert_eq!(b.inverse(), Err(BlockDiagError::NotPositiveDefinite(0)));
    }
}
