//! The Baer *-ring layer over `M_n(C)`: left and right projections, the
//! projection lattice, commutant tests and corner compression.

use crate::error::{Error, Result};
use crate::numeric::{
    check_dim, check_square_finite, commutator, hermitian_frame, range_frame, spectral_norm,
    CMat, Frame, ToleranceProfile, SUBSPACE_EQ_TOL,
};

/// Orthogonal projection, carried by an orthonormal frame of its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    frame: Frame,
    matrix: CMat,
}

impl Projection {
    pub fn from_frame(frame: Frame) -> Self {
        let matrix = frame.projector();
        Self { frame, matrix }
    }

    /// Canonicalizes an approximate projection matrix: the range is re-extracted
    /// from `(P + P*)/2` with eigenvalue threshold 1/2.
    pub fn from_matrix(p: &CMat) -> Result<Self> {
        check_square_finite(p)?;
        Ok(Self::from_frame(hermitian_frame(p)))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_frame(Frame::empty(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_frame(Frame::full(dim))
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `1 − p`.
    pub fn complement(&self, tol: &ToleranceProfile) -> Projection {
        Projection::from_frame(self.frame.complement(tol))
    }

    /// `‖p·p − p‖_F + ‖p* − p‖_F`.
    pub fn projection_residual(&self) -> f64 {
        let p = &self.matrix;
        (p * p - p).norm() + (p.adjoint() - p).norm()
    }

    /// `‖q·p − p‖_F`, which vanishes iff `p ≤ q`.
    pub fn order_residual(&self, above: &Projection) -> f64 {
        (&above.matrix * &self.matrix - &self.matrix).norm()
    }

    /// `p ≤ q` up to the subspace-equality tolerance.
    pub fn is_below(&self, above: &Projection) -> bool {
        self.order_residual(above) <= SUBSPACE_EQ_TOL * self.dim().max(1) as f64
    }

    /// `‖p − q‖_F`.
    pub fn distance(&self, other: &Projection) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn same_as(&self, other: &Projection) -> bool {
        self.frame.same_subspace(&other.frame)
    }

    /// Product of commuting projections, canonicalized.
    pub fn product(&self, other: &Projection) -> Projection {
        let m = &self.matrix * &other.matrix;
        Projection::from_frame(hermitian_frame(&m))
    }

    /// Embeds a projection of the corner `pRp` back into the ambient space.
    pub fn embed_from_corner(&self, corner: &Projection) -> Projection {
        let basis = self.frame.basis() * corner.frame.basis();
        Projection::from_frame(Frame::from_orthonormal(basis))
    }
}

/// A finite tuple of matrices of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleInstance {
    elements: Vec<CMat>,
    labels: Option<Vec<String>>,
}

impl TupleInstance {
    pub fn new(elements: Vec<CMat>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::Input("tuple must have at least one entry".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::Input("matrices must have dimension >= 1".into()));
        }
        for m in &elements {
            check_square_finite(m)?;
            check_dim(dim, m.nrows())?;
        }
        Ok(Self {
            elements,
            labels: None,
        })
    }

    pub fn single(x: CMat) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn pair(x: CMat, y: CMat) -> Result<Self> {
        Self::new(vec![x, y])
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.elements.len() {
            return Err(Error::Input(format!(
                "{} labels for {} tuple entries",
                labels.len(),
                self.elements.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Tuple of corner matrices; the dimension may be zero.
    pub(crate) fn corner_unchecked(elements: Vec<CMat>) -> Self {
        Self {
            elements,
            labels: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn get(&self, i: usize) -> &CMat {
        &self.elements[i]
    }

    /// `max_j ‖x_j‖_F`.
    pub fn max_norm(&self) -> f64 {
        self.elements.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// The tuple compressed to the corner of `p`, in frame coordinates.
    pub fn compress(&self, p: &Projection) -> TupleInstance {
        let f = p.frame().basis();
        TupleInstance::corner_unchecked(
            self.elements
                .iter()
                .map(|x| f.adjoint() * x * f)
                .collect(),
        )
    }

    /// Largest commutation residual of `p` against the entries.
    pub fn max_commutation_residual(&self, p: &Projection) -> f64 {
        self.elements
            .iter()
            .map(|x| commutation_residual(p.matrix(), x))
            .fold(0.0, f64::max)
    }

    /// Whether `p` commutes with every entry within
    /// `res_rel · (1 + ‖p‖_F)(1 + ‖x_j‖_F)`.
    pub fn commutes_with(&self, p: &Projection, tol: &ToleranceProfile) -> bool {
        self.elements.iter().all(|x| commutes(p.matrix(), x, tol))
    }
}

/// `[x]`: the orthogonal projection onto the column space of `x`.
pub fn left_projection(x: &CMat, tol: &ToleranceProfile) -> Result<Projection> {
    check_square_finite(x)?;
    Ok(Projection::from_frame(range_frame(x, 0.0, tol)))
}

/// `[x*]`: the orthogonal projection onto the row space of `x`.
pub fn right_projection(x: &CMat, tol: &ToleranceProfile) -> Result<Projection> {
    left_projection(&x.adjoint(), tol)
}

/// Supremum in the projection lattice; `sup(∅) = 0`.
pub fn proj_sup(dim: usize, ps: &[Projection], tol: &ToleranceProfile) -> Result<Projection> {
    for p in ps {
        check_dim(dim, p.dim())?;
    }
    let total: usize = ps.iter().map(Projection::rank).sum();
    if total == 0 {
        return Ok(Projection::zero(dim));
    }
    let mut stacked = CMat::zeros(dim, total);
    let mut col = 0;
    for p in ps {
        let k = p.rank();
        stacked
            .view_mut((0, col), (dim, k))
            .copy_from(p.frame().basis());
        col += k;
    }
    Ok(Projection::from_frame(range_frame(&stacked, 1.0, tol)))
}

/// Infimum in the projection lattice; `inf(∅) = 1`.
///
/// Computed as the complement of the supremum of complements and checked
/// against a direct subspace intersection.
pub fn proj_inf(dim: usize, ps: &[Projection], tol: &ToleranceProfile) -> Result<Projection> {
    for p in ps {
        check_dim(dim, p.dim())?;
    }
    if ps.is_empty() {
        return Ok(Projection::identity(dim));
    }
    let complements: Vec<Projection> = ps.iter().map(|p| p.complement(tol)).collect();
    let via_sup = proj_sup(dim, &complements, tol)?.complement(tol);
    let frames: Vec<Frame> = ps.iter().map(|p| p.frame().clone()).collect();
    let direct = crate::numeric::subspace_intersection(&frames, tol)?;
    if !via_sup.frame().same_subspace(&direct) {
        return Err(Error::InternalConsistency(format!(
            "infimum routes disagree: ranks {} vs {}, distance {:.3e}",
            via_sup.rank(),
            direct.rank(),
            via_sup.frame().distance(&direct)
        )));
    }
    Ok(via_sup)
}

/// `‖ab − ba‖_F`.
pub fn commutation_residual(a: &CMat, b: &CMat) -> f64 {
    commutator(a, b).norm()
}

/// `‖ab − ba‖_F ≤ res_rel · (1 + ‖a‖_F)(1 + ‖b‖_F)`.
pub fn commutes(a: &CMat, b: &CMat, tol: &ToleranceProfile) -> bool {
    commutation_residual(a, b) <= commutation_threshold(a, b, tol)
}

pub(crate) fn commutation_threshold(a: &CMat, b: &CMat, tol: &ToleranceProfile) -> f64 {
    tol.res_rel * (1.0 + a.norm()) * (1.0 + b.norm())
}

/// `p·x·p` expressed in the frame coordinates of `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compression {
    pub matrix: CMat,
    /// False when `p` does not commute with `x`; the compression is then not
    /// a ring homomorphism.
    pub multiplicative: bool,
}

/// Compresses `x` to the corner `pRp`, whose unit is the identity of size `rank(p)`.
pub fn corner_compress(x: &CMat, p: &Projection, tol: &ToleranceProfile) -> Result<Compression> {
    check_square_finite(x)?;
    check_dim(p.dim(), x.nrows())?;
    let f = p.frame().basis();
    Ok(Compression {
        matrix: f.adjoint() * x * f,
        multiplicative: commutes(p.matrix(), x, tol),
    })
}

/// Embeds a corner matrix back into the ambient space: `F·c·F*`.
pub fn corner_embed(c: &CMat, p: &Projection) -> CMat {
    let f = p.frame().basis();
    f * c * f.adjoint()
}

/// `[x^m]`. Ranges of powers stabilize by index `dim`, so `m` is capped there;
/// `m = 0` gives the identity.
pub fn power_range_projection(x: &CMat, m: usize, tol: &ToleranceProfile) -> Result<Projection> {
    check_square_finite(x)?;
    Ok(power_range_unchecked(x, m, spectral_norm(x), tol))
}

pub(crate) fn power_range_unchecked(
    x: &CMat,
    m: usize,
    norm2: f64,
    tol: &ToleranceProfile,
) -> Projection {
    let dim = x.nrows();
    if m == 0 {
        return Projection::identity(dim);
    }
    let m = m.min(dim.max(1));
    let power = matrix_power(x, m);
    // Rounding in x^m scales like ‖x‖₂^m; a nilpotent power must not be
    // judged against its own noise.
    Projection::from_frame(range_frame(&power, norm2.powi(m as i32), tol))
}

pub fn matrix_power(x: &CMat, m: usize) -> CMat {
    let n = x.nrows();
    let mut acc = CMat::identity(n, n);
    for _ in 0..m {
        acc = &acc * x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::C64;

    fn real(n: usize, data: &[f64]) -> CMat {
        CMat::from_row_iterator(n, n, data.iter().map(|&v| C64::new(v, 0.0)))
    }

    fn diag(d: &[f64]) -> CMat {
        let n = d.len();
        let mut m = CMat::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    fn proj(m: &CMat) -> Projection {
        Projection::from_matrix(m).unwrap()
    }

    const T: f64 = 1e-12;

    #[test]
    fn left_projection_examples() {
        let tol = ToleranceProfile::default();
        let e21 = real(2, &[0.0, 0.0, 1.0, 0.0]);
        let l = left_projection(&e21, &tol).unwrap();
        assert!((l.matrix() - diag(&[0.0, 1.0])).norm() < T);
        assert!((l.matrix() - &e21 * e21.adjoint()).norm() < T);

        let p = real(2, &[0.5, 0.5, 0.5, 0.5]);
        assert!((left_projection(&p, &tol).unwrap().matrix() - &p).norm() < T);

        let ones = real(2, &[1.0, 1.0, 1.0, 1.0]);
        assert!((left_projection(&ones, &tol).unwrap().matrix() - ones.scale(0.5)).norm() < T);
    }

    #[test]
    fn right_projection_examples() {
        let tol = ToleranceProfile::default();
        let e21 = real(2, &[0.0, 0.0, 1.0, 0.0]);
        assert!((right_projection(&e21, &tol).unwrap().matrix() - diag(&[1.0, 0.0])).norm() < T);
        let inv = real(2, &[2.0, 1.0, 0.0, 3.0]);
        assert_eq!(right_projection(&inv, &tol).unwrap().rank(), 2);
        assert_eq!(
            right_projection(&CMat::zeros(3, 3), &tol).unwrap().rank(),
            0
        );
    }

    #[test]
    fn sup_examples() {
        let tol = ToleranceProfile::default();
        let s = proj_sup(2, &[proj(&diag(&[1.0, 0.0])), proj(&diag(&[0.0, 1.0]))], &tol).unwrap();
        assert_eq!(s.rank(), 2);
        let p = proj(&diag(&[1.0, 0.0, 1.0]));
        assert!(proj_sup(3, &[p.clone()], &tol).unwrap().same_as(&p));
        assert_eq!(proj_sup(3, &[], &tol).unwrap().rank(), 0);

        let line = real(3, &[0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let s = proj_sup(3, &[proj(&diag(&[1.0, 0.0, 0.0])), proj(&line)], &tol).unwrap();
        assert!((s.matrix() - diag(&[1.0, 1.0, 0.0])).norm() < T);
    }

    #[test]
    fn inf_examples() {
        let tol = ToleranceProfile::default();
        let p = proj(&diag(&[1.0, 0.0, 1.0]));
        assert_eq!(
            proj_inf(3, &[p.clone(), p.complement(&tol)], &tol)
                .unwrap()
                .rank(),
            0
        );
        assert!(proj_inf(3, &[Projection::identity(3), p.clone()], &tol)
            .unwrap()
            .same_as(&p));
        let i = proj_inf(
            3,
            &[proj(&diag(&[1.0, 1.0, 0.0])), proj(&diag(&[0.0, 1.0, 1.0]))],
            &tol,
        )
        .unwrap();
        assert!((i.matrix() - diag(&[0.0, 1.0, 0.0])).norm() < T);
        assert_eq!(proj_inf(4, &[], &tol).unwrap().rank(), 4);
        assert!(proj_inf(4, &[p], &tol).is_err());
    }

    #[test]
    fn commutation_residual_examples() {
        let a = diag(&[1.0, 0.0]);
        let b = real(2, &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(commutation_residual(&a, &a), 0.0);
        assert_eq!(commutation_residual(&a, &diag(&[3.0, 4.0])), 0.0);
        assert!((commutation_residual(&a, &b) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn corner_examples() {
        let tol = ToleranceProfile::default();
        let x = real(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0]);
        let c = corner_compress(&x, &Projection::identity(3), &tol).unwrap();
        assert!((c.matrix - &x).norm() < T);
        assert!(c.multiplicative);

        let d = diag(&[1.0, 2.0, 3.0]);
        let c = corner_compress(&d, &proj(&diag(&[1.0, 0.0, 1.0])), &tol).unwrap();
        assert!((c.matrix - diag(&[1.0, 3.0])).norm() < T);

        let c = corner_compress(&x, &Projection::zero(3), &tol).unwrap();
        assert_eq!(c.matrix.shape(), (0, 0));

        let c = corner_compress(&x, &proj(&diag(&[1.0, 0.0, 0.0])), &tol).unwrap();
        assert!(!c.multiplicative);
    }

    #[test]
    fn power_range_examples() {
        let tol = ToleranceProfile::default();
        let shift = real(3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let p2 = power_range_projection(&shift, 2, &tol).unwrap();
        assert!((p2.matrix() - diag(&[0.0, 0.0, 1.0])).norm() < T);
        assert_eq!(power_range_projection(&shift, 3, &tol).unwrap().rank(), 0);
        assert_eq!(power_range_projection(&shift, 50, &tol).unwrap().rank(), 0);

        let swap = real(2, &[0.0, 1.0, 1.0, 0.0]);
        for m in 1..5 {
            assert_eq!(power_range_projection(&swap, m, &tol).unwrap().rank(), 2);
        }
    }

    #[test]
    fn embed_inverts_compress_on_commuting_corner() {
        let tol = ToleranceProfile::default();
        let d = diag(&[1.0, 2.0, 3.0]);
        let p = proj(&diag(&[1.0, 0.0, 1.0]));
        let c = corner_compress(&d, &p, &tol).unwrap();
        assert!((corner_embed(&c.matrix, &p) - p.matrix() * &d).norm() < T);
    }
}
