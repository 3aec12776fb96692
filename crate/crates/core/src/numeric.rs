//! Complex linear-algebra substrate: orthonormal frames, rank decisions and
//! subspace operations.
//!
//! Every rank decision in the crate goes through [`RankCut`]: a singular value
//! `σ` counts toward rank iff `σ > rank_rel · max(σ_max, floor)`. The floor is
//! zero for the public [`rank_revealing_frame`] (a purely relative cutoff) and
//! is set by internal callers to the scale of the operands that produced the
//! matrix, so that matrices which are zero up to rounding are not promoted to
//! full rank by a relative test.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix; the carrier of ring elements.
pub type CMat = DMatrix<C64>;

/// Tolerance for subspace equality, scaled by the ambient dimension.
pub const SUBSPACE_EQ_TOL: f64 = 1e-10;

/// Thresholds governing all floating-point decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_rel: f64,
    /// Relative residual acceptance.
    pub res_rel: f64,
    /// Extra subspace-iteration steps allowed beyond the dimension.
    pub max_iter_slack: usize,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            rank_rel: 1e-10,
            res_rel: 1e-8,
            max_iter_slack: 1,
        }
    }
}

impl ToleranceProfile {
    pub fn new(rank_rel: f64, res_rel: f64, max_iter_slack: usize) -> Result<Self> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(rank_rel) || !in_unit(res_rel) {
            return Err(Error::Input(format!(
                "tolerances must lie in (0, 1): rank_rel={rank_rel}, res_rel={res_rel}"
            )));
        }
        Ok(Self {
            rank_rel,
            res_rel,
            max_iter_slack,
        })
    }

    /// The profile used for the single retry after a consistency failure.
    pub fn tightened(&self) -> Self {
        Self {
            rank_rel: self.rank_rel / 100.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct RankCut {
    rel: f64,
    floor: f64,
}

impl RankCut {
    fn threshold(&self, sigma_max: f64) -> f64 {
        self.rel * sigma_max.max(self.floor)
    }
}

/// Orthonormal basis of a subspace of `C^dim`, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    basis: CMat,
}

impl Frame {
    /// The zero subspace.
    pub fn empty(dim: usize) -> Self {
        Self {
            basis: CMat::zeros(dim, 0),
        }
    }

    /// The whole space, with the standard basis.
    pub fn full(dim: usize) -> Self {
        Self {
            basis: CMat::identity(dim, dim),
        }
    }

    /// Wraps columns the caller guarantees to be orthonormal.
    pub(crate) fn from_orthonormal(basis: CMat) -> Self {
        debug_assert!(gram_defect(&basis) <= 1e-9);
        Self { basis }
    }

    /// Orthonormal basis for the span of arbitrary columns.
    pub fn span_of(columns: &CMat, tol: &ToleranceProfile) -> Result<Self> {
        check_finite(columns)?;
        Ok(range_frame(columns, 0.0, tol))
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace dimension `k`.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn into_basis(self) -> CMat {
        self.basis
    }

    /// Orthogonal projector `F·F*` onto the span.
    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// Basis of the orthogonal complement.
    pub fn complement(&self, tol: &ToleranceProfile) -> Frame {
        if self.rank() == 0 {
            return Frame::full(self.dim());
        }
        kernel_frame(&self.basis.adjoint(), 1.0, tol)
    }

    /// Frobenius distance between the two orthogonal projectors.
    pub fn distance(&self, other: &Frame) -> f64 {
        (self.projector() - other.projector()).norm()
    }

    /// Subspace equality: `‖P − Q‖_F ≤ 1e-10 · dim`.
    pub fn same_subspace(&self, other: &Frame) -> bool {
        self.dim() == other.dim()
            && self.distance(other) <= SUBSPACE_EQ_TOL * self.dim().max(1) as f64
    }

    /// Deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        gram_defect(&self.basis)
    }
}

fn gram_defect(basis: &CMat) -> f64 {
    let k = basis.ncols();
    (basis.adjoint() * basis - CMat::identity(k, k)).norm()
}

/// Rejects matrices with NaN or infinite entries.
pub fn check_finite(m: &CMat) -> Result<()> {
    match m.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        None => Ok(()),
        Some(pos) => {
            let (row, col) = (pos % m.nrows(), pos / m.nrows());
            Err(Error::Input(format!("non-finite entry at ({row}, {col})")))
        }
    }
}

/// Rejects non-square or non-finite matrices.
pub fn check_square_finite(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Input(format!(
            "matrix is not square ({}x{})",
            m.nrows(),
            m.ncols()
        )));
    }
    check_finite(m)
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    dense::singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Commutator `ab − ba`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Column space of `m` with the cutoff `rank_rel · max(σ_max, floor)`.
pub(crate) fn range_frame(m: &CMat, floor: f64, tol: &ToleranceProfile) -> Frame {
    let dim = m.nrows();
    if m.ncols() == 0 || dim == 0 {
        return Frame::empty(dim);
    }
    let cut = RankCut {
        rel: tol.rank_rel,
        floor,
    };
    let svd = dense::svd(m);
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let threshold = cut.threshold(sigma_max);
    let keep: Vec<usize> = svd
        .sigma
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(i, _)| i)
        .collect();
    Frame::from_orthonormal(svd.u.select_columns(keep.iter()))
}

/// Null space of `m` (any shape) with the cutoff `rank_rel · max(σ_max, floor)`.
pub(crate) fn kernel_frame(m: &CMat, floor: f64, tol: &ToleranceProfile) -> Frame {
    let n = m.ncols();
    if n == 0 {
        return Frame::empty(0);
    }
    if m.nrows() == 0 {
        return Frame::full(n);
    }
    let cut = RankCut {
        rel: tol.rank_rel,
        floor,
    };
    let svd = dense::svd(m);
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let threshold = cut.threshold(sigma_max);
    // Columns of `v` past the singular values span part of the kernel outright.
    let keep: Vec<usize> = (0..n)
        .filter(|&i| svd.sigma.get(i).is_none_or(|&s| s <= threshold))
        .collect();
    Frame::from_orthonormal(svd.v.select_columns(keep.iter()))
}

/// Numerical rank with the cutoff `rank_rel · max(σ_max, floor)`.
pub(crate) fn rank_with_floor(m: &CMat, floor: f64, tol: &ToleranceProfile) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cut = RankCut {
        rel: tol.rank_rel,
        floor,
    };
    let sv = dense::singular_values(m);
    let threshold = cut.threshold(sv.iter().cloned().fold(0.0, f64::max));
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Frame of the range of a (nearly) Hermitian idempotent: eigenvectors of
/// `(P + P*)/2` whose eigenvalue exceeds 1/2.
pub(crate) fn hermitian_frame(p: &CMat) -> Frame {
    let dim = p.nrows();
    if dim == 0 {
        return Frame::empty(0);
    }
    let h = (p + p.adjoint()).scale(0.5);
    let (values, vectors) = dense::hermitian_eigen(&h);
    let keep: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.5)
        .map(|(i, _)| i)
        .collect();
    Frame::from_orthonormal(vectors.select_columns(keep.iter()))
}

/// Orthonormal basis of the column space of `m`; a singular value counts
/// toward rank iff it exceeds `rank_rel · σ_max`.
pub fn rank_revealing_frame(m: &CMat, tol: &ToleranceProfile) -> Result<Frame> {
    check_finite(m)?;
    Ok(range_frame(m, 0.0, tol))
}

/// Intersection of the spans of `frames`, decided on the stacked complement
/// projectors `I − P_i`.
pub fn subspace_intersection(frames: &[Frame], tol: &ToleranceProfile) -> Result<Frame> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Input("intersection of an empty list of frames".into()))?;
    let dim = first.dim();
    for f in frames {
        check_dim(dim, f.dim())?;
    }
    if frames.len() == 1 {
        return Ok(first.clone());
    }
    let mut stacked = CMat::zeros(dim * frames.len(), dim);
    for (i, f) in frames.iter().enumerate() {
        let comp = CMat::identity(dim, dim) - f.projector();
        stacked.view_mut((i * dim, 0), (dim, dim)).copy_from(&comp);
    }
    Ok(kernel_frame(&stacked, 1.0, tol))
}

/// `{v : a·v ∈ span f}`, the kernel of `(I − P_f)·a`.
pub fn preimage_subspace(a: &CMat, f: &Frame, tol: &ToleranceProfile) -> Result<Frame> {
    check_square_finite(a)?;
    check_dim(a.nrows(), f.dim())?;
    let dim = a.nrows();
    let leak = (CMat::identity(dim, dim) - f.projector()) * a;
    Ok(kernel_frame(&leak, a.norm(), tol))
}
