//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::model::HessianBlocks;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) struct ComplexBlocks {
    pub qq: CMatrix,
    pub qp: CMatrix,
    pub pq: CMatrix,
    pub pp: CMatrix,
}

pub(crate) fn complex_blocks(h: &HessianBlocks) -> ComplexBlocks {
    ComplexBlocks {
        qq: to_complex(&h.qq),
        qp: to_complex(&h.qp),
        pq: to_complex(&h.pq),
        pp: to_complex(&h.pp),
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.im)
}

/// 2-norm condition number; infinite for singular matrices.
pub fn condition_number(m: &CMatrix) -> f64 {
    if m.nrows() == 1 {
        return if m[(0, 0)].norm() > 0.0 { 1.0 } else { f64::INFINITY };
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `B A⁻¹` via an LU solve of `Aᵀ Xᵀ = Bᵀ`.
pub fn right_divide(b: &CMatrix, a: &CMatrix) -> Option<CMatrix> {
    let lu = a.transpose().lu();
    lu.solve(&b.transpose()).map(|x| x.transpose())
}

/// Eigen-decomposition based function of a real symmetric matrix.
pub fn symmetric_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(f);
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Smallest eigenvalue of the symmetric part of a real matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Hermitian part of `A B*`, used for products known to be real symmetric.
pub fn gram(a: &CMatrix) -> CMatrix {
    a * a.adjoint()
}
