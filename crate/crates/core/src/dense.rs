//! SVD and Hermitian eigendecomposition, delegated to faer.

use faer::Mat;

use crate::numeric::CMat;

fn to_faer(m: &CMat) -> Mat<faer::c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full SVD `m = u·diag(sigma)·v*`, singular values in nonincreasing order.
/// `u` is `rows × rows` and `v` is `cols × cols`.
pub(crate) struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

// Inputs are checked finite before they reach here; the iterative solvers
// converge on every finite matrix at the sizes this crate handles.
pub(crate) fn svd(m: &CMat) -> Svd {
    let s = to_faer(m).svd().expect("SVD of a finite matrix");
    let k = s.S().dim();
    Svd {
        u: from_faer(s.U()),
        sigma: (0..k).map(|i| s.S()[i].re).collect(),
        v: from_faer(s.V()),
    }
}

pub(crate) fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    to_faer(m)
        .singular_values()
        .expect("singular values of a finite matrix")
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub(crate) fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let e = to_faer(h)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigendecomposition of a finite Hermitian matrix");
    let n = e.S().dim();
    ((0..n).map(|i| e.S()[i].re).collect(), from_faer(e.U()))
}
