//! The decomposition engine.
//!
//! For a tuple `t` and property functionals `F_i`, the maximal projection `p`
//! commuting with `t` and satisfying `p·F_i(t) = 0` is the projection onto the
//! largest subspace that reduces every `x_j` (invariant under `x_j` and `x_j*`)
//! and lies in `S = ∩_i ker F_i(t)*`. It is found by the decreasing iteration
//!
//! ```text
//! V_0 = S,   V_{k+1} = { v ∈ V_k : x_j v ∈ V_k and x_j* v ∈ V_k for all j }
//! ```
//!
//! which stabilizes after at most `dim` strict decreases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{kernel_frame, CMat, Frame, ToleranceProfile};
use crate::properties::{eval_raw, PropertySpec};
use crate::ring::{commutation_residual, commutation_threshold, Projection, TupleInstance};

/// Bound on `‖p_a·p_b − p_{a∪b}‖_F` for the product law.
pub const PRODUCT_LAW_TOL: f64 = 1e-6;

/// Result of re-running the engine on the complementary corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditResult {
    /// Rank of the property projection found in the `1 − p` corner (0 when `p` is maximal).
    pub rank: usize,
    /// Largest functional residual of that corner projection.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub property: String,
    pub projection: Projection,
    /// `‖F_i(p·t)‖_F` evaluated in the corner of `p`.
    pub residuals: Vec<f64>,
    /// `(1 + max_j ‖x_j‖_F)^{degree(F_i)}`.
    pub scales: Vec<f64>,
    /// `‖p·x_j − x_j·p‖_F`.
    pub commutation_residuals: Vec<f64>,
    pub iterations: usize,
    /// Subspace dimension after each step, starting with the constraint subspace.
    pub dimension_trace: Vec<usize>,
    pub constraint_rank: usize,
    pub complement_audit: Option<AuditResult>,
    /// Tolerances actually used (tightened after a retry).
    pub tolerance: ToleranceProfile,
    pub retried: bool,
}

impl DecompositionReport {
    pub fn max_residual_ratio(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.scales)
            .map(|(r, s)| r / s)
            .fold(0.0, f64::max)
    }
}

struct FixedPoint {
    frame: Frame,
    constraint_rank: usize,
    trace: Vec<usize>,
    iterations: usize,
}

/// Largest subspace inside `∩ ker values_i*` reducing every generator.
fn reducing_fixed_point(
    elements: &[CMat],
    values: &[CMat],
    scales: &[f64],
    tol: &ToleranceProfile,
) -> Result<FixedPoint> {
    let dim = elements.first().map_or(0, |m| m.nrows());
    if dim == 0 {
        return Ok(FixedPoint {
            frame: Frame::empty(0),
            constraint_rank: 0,
            trace: vec![0],
            iterations: 0,
        });
    }

    let mut stacked = CMat::zeros(dim * values.len(), dim);
    for (i, (v, s)) in values.iter().zip(scales).enumerate() {
        stacked
            .view_mut((i * dim, 0), (dim, dim))
            .copy_from(&v.adjoint().unscale(*s));
    }
    let constraint = kernel_frame(&stacked, 1.0, tol);
    let constraint_rank = constraint.rank();
    let mut trace = vec![constraint_rank];

    // A one-dimensional subspace always reduces a 1x1 tuple.
    if dim == 1 {
        return Ok(FixedPoint {
            frame: constraint,
            constraint_rank,
            trace,
            iterations: 0,
        });
    }

    // Invariant subspaces do not change under scaling; normalizing keeps the
    // stacked leak blocks on a common scale.
    let generators: Vec<CMat> = elements
        .iter()
        .filter_map(|x| {
            let n = x.norm();
            (n > 0.0).then(|| x.unscale(n))
        })
        .flat_map(|x| {
            let adj = x.adjoint();
            [x, adj]
        })
        .collect();

    let max_steps = dim + tol.max_iter_slack;
    let mut current = constraint;
    let mut iterations = 0;
    loop {
        let d = current.rank();
        if d == 0 || generators.is_empty() {
            break;
        }
        if iterations >= max_steps {
            return Err(Error::NumericalInstability { trace });
        }
        iterations += 1;
        let basis = current.basis();
        let outside = CMat::identity(dim, dim) - current.projector();
        let mut leak = CMat::zeros(dim * generators.len(), d);
        for (j, g) in generators.iter().enumerate() {
            leak.view_mut((j * dim, 0), (dim, d))
                .copy_from(&(&outside * g * basis));
        }
        let keep = kernel_frame(&leak, 1.0, tol);
        trace.push(keep.rank());
        if keep.rank() == d {
            break;
        }
        current = Frame::from_orthonormal(basis * keep.basis());
    }
    Ok(FixedPoint {
        frame: current,
        constraint_rank,
        trace,
        iterations,
    })
}

fn check_arity(spec: &PropertySpec, t: &TupleInstance) -> Result<()> {
    if spec.arity() != t.len() {
        return Err(Error::ArityMismatch {
            property: spec.name().to_string(),
            expected: spec.arity(),
            found: t.len(),
        });
    }
    Ok(())
}

fn corner_residuals(
    spec: &PropertySpec,
    t: &TupleInstance,
    p: &Projection,
    tol: &ToleranceProfile,
) -> Vec<f64> {
    let corner = t.compress(p);
    let k = p.rank();
    eval_raw(spec, corner.elements(), &CMat::identity(k, k), tol)
        .iter()
        .map(|v| v.norm())
        .collect()
}

fn attempt(
    t: &TupleInstance,
    spec: &PropertySpec,
    tol: &ToleranceProfile,
    audit: bool,
) -> Result<DecompositionReport> {
    let dim = t.dim();
    let identity = CMat::identity(dim, dim);
    let values = eval_raw(spec, t.elements(), &identity, tol);
    let scales: Vec<f64> = (0..values.len()).map(|i| spec.scale(i, t)).collect();
    let fp = reducing_fixed_point(t.elements(), &values, &scales, tol)?;
    let projection = Projection::from_frame(fp.frame);

    let commutation_residuals: Vec<f64> = t
        .elements()
        .iter()
        .map(|x| commutation_residual(projection.matrix(), x))
        .collect();
    for (j, (r, x)) in commutation_residuals.iter().zip(t.elements()).enumerate() {
        if *r > commutation_threshold(projection.matrix(), x, tol) {
            return Err(Error::InternalConsistency(format!(
                "projection for `{}` fails to commute with entry {j}: residual {r:.3e}",
                spec.name()
            )));
        }
    }
    let residuals = corner_residuals(spec, t, &projection, tol);
    for (i, (r, s)) in residuals.iter().zip(&scales).enumerate() {
        if *r > tol.res_rel * s {
            return Err(Error::InternalConsistency(format!(
                "functional {i} of `{}` does not vanish on the corner: residual {r:.3e}",
                spec.name()
            )));
        }
    }
    let complement_audit = if audit {
        let a = audit_inner(t, spec, &projection, tol)?;
        if a.rank > 0 {
            return Err(Error::InternalConsistency(format!(
                "complement corner of `{}` still carries a property projection of rank {}",
                spec.name(),
                a.rank
            )));
        }
        Some(a)
    } else {
        None
    };
    Ok(DecompositionReport {
        property: spec.name().to_string(),
        projection,
        residuals,
        scales,
        commutation_residuals,
        iterations: fp.iterations,
        dimension_trace: fp.trace,
        constraint_rank: fp.constraint_rank,
        complement_audit,
        tolerance: *tol,
        retried: false,
    })
}

/// Runs `f`, and once more with `rank_rel / 100` if it reports an internal
/// consistency failure.
fn with_retry<T>(
    tol: &ToleranceProfile,
    f: impl Fn(&ToleranceProfile) -> Result<T>,
) -> Result<(T, bool)> {
    match f(tol) {
        Err(Error::InternalConsistency(_)) => f(&tol.tightened()).map(|v| (v, true)),
        other => other.map(|v| (v, false)),
    }
}

/// The unique maximal projection `p` commuting with `t` such that `p·t` has
/// the property and `(1 − p)·t` completely lacks it.
pub fn max_property_projection(
    t: &TupleInstance,
    spec: &PropertySpec,
    tol: &ToleranceProfile,
) -> Result<DecompositionReport> {
    check_arity(spec, t)?;
    let (mut report, retried) = with_retry(tol, |tol| attempt(t, spec, tol, true))?;
    report.retried = retried;
    Ok(report)
}

fn audit_inner(
    t: &TupleInstance,
    spec: &PropertySpec,
    p: &Projection,
    tol: &ToleranceProfile,
) -> Result<AuditResult> {
    let rest = p.complement(tol);
    if rest.rank() == 0 {
        return Ok(AuditResult {
            rank: 0,
            residual: 0.0,
        });
    }
    let corner = t.compress(&rest);
    let inner = attempt(&corner, spec, tol, false)?;
    let residual = inner
        .residuals
        .iter()
        .zip(&inner.scales)
        .map(|(r, s)| r / s)
        .fold(0.0, f64::max);
    Ok(AuditResult {
        rank: inner.projection.rank(),
        residual,
    })
}

/// Reruns the engine on the `1 − p` corner; a nonzero rank means `p` was not
/// maximal.
pub fn audit_complete_absence(
    t: &TupleInstance,
    spec: &PropertySpec,
    p: &Projection,
    tol: &ToleranceProfile,
) -> Result<AuditResult> {
    check_arity(spec, t)?;
    crate::numeric::check_dim(t.dim(), p.dim())?;
    audit_inner(t, spec, p, tol)
}

/// One cell of a cell decomposition: `Π_k p_k^{(ε_k)}` with `p^{(1)} = p`,
/// `p^{(0)} = 1 − p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub bits: Vec<bool>,
    pub projection: Projection,
}

impl Cell {
    /// Bit label, first property first, e.g. `"10"`.
    pub fn label(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellDecomposition {
    pub properties: Vec<String>,
    pub reports: Vec<DecompositionReport>,
    /// Ordered from all-ones down to all-zeros.
    pub cells: Vec<Cell>,
    /// `(a, b, ‖p_a p_b − p_b p_a‖_F)`.
    pub commutation_residuals: Vec<(usize, usize, f64)>,
    /// `(a, b, ‖p_a p_b − p_{a∪b}‖_F)` with `p_{a∪b}` computed from the
    /// concatenated functional list.
    pub product_law_residuals: Vec<(usize, usize, f64)>,
    /// `‖Σ cells − 1‖_F`.
    pub partition_residual: f64,
    /// Largest `‖c_a c_b‖_F` over distinct cells.
    pub orthogonality_residual: f64,
    pub retried: bool,
}

impl CellDecomposition {
    pub fn cell(&self, label: &str) -> Option<&Projection> {
        self.cells
            .iter()
            .find(|c| c.label() == label)
            .map(|c| &c.projection)
    }
}

fn partition_checks(cells: &[Projection], dim: usize) -> (f64, f64) {
    let mut sum = CMat::zeros(dim, dim);
    let mut ortho: f64 = 0.0;
    for (a, ca) in cells.iter().enumerate() {
        sum += ca.matrix();
        for cb in &cells[a + 1..] {
            ortho = ortho.max((ca.matrix() * cb.matrix()).norm());
        }
    }
    ((sum - CMat::identity(dim, dim)).norm(), ortho)
}

fn combine_once(
    t: &TupleInstance,
    specs: &[PropertySpec],
    tol: &ToleranceProfile,
) -> Result<CellDecomposition> {
    let dim = t.dim();
    let reports = specs
        .iter()
        .map(|s| attempt(t, s, tol, true))
        .collect::<Result<Vec<_>>>()?;

    let mut commutation_residuals = Vec::new();
    let mut product_law_residuals = Vec::new();
    for a in 0..specs.len() {
        for b in a + 1..specs.len() {
            let pa = reports[a].projection.matrix();
            let pb = reports[b].projection.matrix();
            let r = commutation_residual(pa, pb);
            if r > commutation_threshold(pa, pb, tol) {
                return Err(Error::InternalConsistency(format!(
                    "projections for `{}` and `{}` do not commute: {r:.3e}",
                    specs[a].name(),
                    specs[b].name()
                )));
            }
            commutation_residuals.push((a, b, r));
            let joint = attempt(t, &specs[a].union(&specs[b])?, tol, false)?;
            let law = (pa * pb - joint.projection.matrix()).norm();
            if law > PRODUCT_LAW_TOL {
                return Err(Error::InternalConsistency(format!(
                    "product law fails for `{}` and `{}`: {law:.3e}",
                    specs[a].name(),
                    specs[b].name()
                )));
            }
            product_law_residuals.push((a, b, law));
        }
    }

    let k = specs.len();
    let identity = CMat::identity(dim, dim);
    let mut cells = Vec::with_capacity(1 << k);
    for mask in (0..1usize << k).rev() {
        let bits: Vec<bool> = (0..k).map(|i| mask & (1 << (k - 1 - i)) != 0).collect();
        let mut m = identity.clone();
        for (bit, r) in bits.iter().zip(&reports) {
            let p = r.projection.matrix();
            m = if *bit { m * p } else { m * (&identity - p) };
        }
        cells.push(Cell {
            bits,
            projection: Projection::from_matrix(&m)?,
        });
    }
    let projections: Vec<Projection> = cells.iter().map(|c| c.projection.clone()).collect();
    let (partition_residual, orthogonality_residual) = partition_checks(&projections, dim);
    if partition_residual > tol.res_rel * dim as f64 || orthogonality_residual > tol.res_rel {
        return Err(Error::InternalConsistency(format!(
            "cells do not partition the identity: sum residual {partition_residual:.3e}, \
             orthogonality {orthogonality_residual:.3e}"
        )));
    }
    for c in &cells {
        if !t.commutes_with(&c.projection, tol) {
            return Err(Error::InternalConsistency(format!(
                "cell {} does not commute with the tuple",
                c.label()
            )));
        }
    }
    Ok(CellDecomposition {
        properties: specs.iter().map(|s| s.name().to_string()).collect(),
        reports,
        cells,
        commutation_residuals,
        product_law_residuals,
        partition_residual,
        orthogonality_residual,
        retried: false,
    })
}

/// Maximal projections for several properties and the `2^k` cells they cut
/// the identity into.
pub fn combine_properties(
    t: &TupleInstance,
    specs: &[PropertySpec],
    tol: &ToleranceProfile,
) -> Result<CellDecomposition> {
    if specs.is_empty() {
        return Err(Error::Input("combine needs at least one property".into()));
    }
    for s in specs {
        check_arity(s, t)?;
    }
    let (mut d, retried) = with_retry(tol, |tol| combine_once(t, specs, tol))?;
    d.retried = retried;
    Ok(d)
}

/// Split `p + (q − p) + (1 − q) = 1` of a pair into the doubly commuting part,
/// the compatible but completely non doubly commuting part and the completely
/// non compatible part.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleDecomposition {
    pub doubly_commuting: DecompositionReport,
    pub compatible: DecompositionReport,
    /// `p`, `q − p`, `1 − q`.
    pub summands: [Projection; 3],
    /// `‖q·p − p‖_F`.
    pub order_residual: f64,
}

pub fn triple_decompose(x: &CMat, y: &CMat, tol: &ToleranceProfile) -> Result<TripleDecomposition> {
    let t = TupleInstance::pair(x.clone(), y.clone())?;
    let dim = t.dim();
    let dc = crate::properties::builtin_property("doubly_commuting", dim)?;
    let compat = crate::properties::builtin_property("compatible", dim)?;
    let ((p, q), _) = with_retry(tol, |tol| {
        let p = attempt(&t, &dc, tol, true)?;
        let q = attempt(&t, &compat, tol, true)?;
        let order = p.projection.order_residual(&q.projection);
        if order > tol.res_rel * dim as f64 {
            return Err(Error::InternalConsistency(format!(
                "doubly commuting part is not below the compatible part: {order:.3e}"
            )));
        }
        Ok((p, q))
    })?;
    let identity = CMat::identity(dim, dim);
    let middle = Projection::from_matrix(&(q.projection.matrix() - p.projection.matrix()))?;
    let last = Projection::from_matrix(&(&identity - q.projection.matrix()))?;
    let order_residual = p.projection.order_residual(&q.projection);
    Ok(TripleDecomposition {
        summands: [p.projection.clone(), middle, last],
        doubly_commuting: p,
        compatible: q,
        order_residual,
    })
}

/// Outcome of the canonical-decomposition test for a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalVerdict {
    pub exists: bool,
    /// Maximal projections over `{x}′` and `{y}′` alone.
    pub p_x: Projection,
    pub p_y: Projection,
    /// Maximal projections over `{x, y}′` for the lifted functionals.
    pub q_x: Projection,
    pub q_y: Projection,
    /// `‖p_x x − x p_x‖, ‖p_x y − y p_x‖, ‖p_y x − x p_y‖, ‖p_y y − y p_y‖`.
    pub commutation_residuals: [f64; 4],
    /// `‖p_x q_x − q_x‖_F`, `‖p_y q_y − q_y‖_F`.
    pub order_residuals: [f64; 2],
    /// `p_11, p_10, p_01, p_00` when the decomposition exists.
    pub cells: Option<[Projection; 4]>,
}

fn canonical_once(
    x: &CMat,
    y: &CMat,
    spec: &PropertySpec,
    tol: &ToleranceProfile,
) -> Result<CanonicalVerdict> {
    let tx = TupleInstance::single(x.clone())?;
    let ty = TupleInstance::single(y.clone())?;
    let txy = TupleInstance::pair(x.clone(), y.clone())?;
    let dim = txy.dim();
    let p_x = attempt(&tx, spec, tol, true)?.projection;
    let p_y = attempt(&ty, spec, tol, true)?.projection;
    let q_x = attempt(&txy, &spec.lift_to_pair(0)?, tol, true)?.projection;
    let q_y = attempt(&txy, &spec.lift_to_pair(1)?, tol, true)?.projection;

    let order_residuals = [q_x.order_residual(&p_x), q_y.order_residual(&p_y)];
    if order_residuals.iter().any(|&r| r > tol.res_rel * dim as f64) {
        return Err(Error::InternalConsistency(format!(
            "joint projections are not below the individual ones: {order_residuals:?}"
        )));
    }
    let pairs = [(&p_x, x), (&p_x, y), (&p_y, x), (&p_y, y)];
    let commutation_residuals = pairs.map(|(p, m)| commutation_residual(p.matrix(), m));
    let commute_ok = pairs
        .iter()
        .zip(&commutation_residuals)
        .all(|((p, m), r)| *r <= commutation_threshold(p.matrix(), m, tol));
    let equal_ok = p_x.same_as(&q_x) && p_y.same_as(&q_y);
    if commute_ok != equal_ok {
        return Err(Error::InternalConsistency(format!(
            "canonical criteria disagree: commutation {commute_ok}, equality {equal_ok}"
        )));
    }
    let cells = if commute_ok {
        let identity = CMat::identity(dim, dim);
        let (a, b) = (p_x.matrix(), p_y.matrix());
        let na = &identity - a;
        let nb = &identity - b;
        Some([
            Projection::from_matrix(&(a * b))?,
            Projection::from_matrix(&(a * &nb))?,
            Projection::from_matrix(&(&na * b))?,
            Projection::from_matrix(&(&na * &nb))?,
        ])
    } else {
        None
    };
    Ok(CanonicalVerdict {
        exists: commute_ok,
        p_x,
        p_y,
        q_x,
        q_y,
        commutation_residuals,
        order_residuals,
        cells,
    })
}

/// Tests whether `(x, y)` admits a canonical decomposition with respect to a
/// single-element property.
pub fn canonical_decompose(
    x: &CMat,
    y: &CMat,
    spec: &PropertySpec,
    tol: &ToleranceProfile,
) -> Result<CanonicalVerdict> {
    if spec.arity() != 1 {
        return Err(Error::ArityMismatch {
            property: spec.name().to_string(),
            expected: 1,
            found: spec.arity(),
        });
    }
    with_retry(tol, |tol| canonical_once(x, y, spec, tol)).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::C64;
    use crate::properties::builtin_property;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn real(n: usize, data: &[f64]) -> CMat {
        CMat::from_row_iterator(n, n, data.iter().map(|&v| re(v)))
    }

    fn diag(d: &[C64]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_row_slice(d))
    }

    fn rdiag(d: &[f64]) -> CMat {
        diag(&d.iter().map(|&v| re(v)).collect::<Vec<_>>())
    }

    fn run(name: &str, elems: Vec<CMat>) -> DecompositionReport {
        let dim = elems[0].nrows();
        let t = TupleInstance::new(elems).unwrap();
        max_property_projection(&t, &builtin_property(name, dim).unwrap(), &Default::default())
            .unwrap()
    }

    const T: f64 = 1e-10;

    #[test]
    fn normal_diagonal_is_identity() {
        let r = run("normal", vec![rdiag(&[1.0, 2.0])]);
        assert_eq!(r.projection.rank(), 2);
        assert_eq!(r.complement_audit.unwrap().rank, 0);
    }

    #[test]
    fn jordan_cell_is_completely_non_normal() {
        let r = run("normal", vec![real(2, &[0.0, 1.0, 0.0, 0.0])]);
        assert_eq!(r.projection.rank(), 0);
    }

    #[test]
    fn partial_isometry_part() {
        let r = run("partial_isometry", vec![rdiag(&[1.0, 0.5])]);
        assert!((r.projection.matrix() - rdiag(&[1.0, 0.0])).norm() < T);
        assert_eq!(r.constraint_rank, 1);
    }

    #[test]
    fn isometry_in_finite_dimension_is_unitary() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rot = CMat::from_row_slice(
            2,
            2,
            &[re(s), C64::new(0.0, s), C64::new(0.0, s), re(s)],
        );
        let r = run("unitary", vec![rot]);
        assert_eq!(r.projection.rank(), 2);
    }

    #[test]
    fn non_commuting_projections_are_completely_incompatible() {
        let r = run(
            "compatible",
            vec![rdiag(&[1.0, 0.0]), real(2, &[0.5, 0.5, 0.5, 0.5])],
        );
        assert_eq!(r.projection.rank(), 0);
        assert_eq!(r.constraint_rank, 0);
    }

    #[test]
    fn one_by_one_short_circuit() {
        assert_eq!(run("unitary", vec![rdiag(&[0.5])]).projection.rank(), 0);
        assert_eq!(
            run("unitary", vec![diag(&[C64::new(0.0, 1.0)])]).projection.rank(),
            1
        );
        assert_eq!(run("normal", vec![rdiag(&[0.0])]).projection.rank(), 1);
    }

    #[test]
    fn zero_entries_are_legal() {
        let r = run("commuting", vec![CMat::zeros(3, 3), real(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])]);
        assert_eq!(r.projection.rank(), 3);
    }

    #[test]
    fn normal_unitary_cells() {
        let x = diag(&[re(1.0), re(0.5), C64::new(0.0, 1.0)]);
        let t = TupleInstance::single(x).unwrap();
        let specs = [
            builtin_property("normal", 3).unwrap(),
            builtin_property("unitary", 3).unwrap(),
        ];
        let d = combine_properties(&t, &specs, &Default::default()).unwrap();
        assert_eq!(d.reports[0].projection.rank(), 3);
        assert!((d.reports[1].projection.matrix() - rdiag(&[1.0, 0.0, 1.0])).norm() < T);
        assert!((d.cell("11").unwrap().matrix() - rdiag(&[1.0, 0.0, 1.0])).norm() < T);
        assert!((d.cell("10").unwrap().matrix() - rdiag(&[0.0, 1.0, 0.0])).norm() < T);
        assert_eq!(d.cell("01").unwrap().rank(), 0);
        assert_eq!(d.cell("00").unwrap().rank(), 0);
        let labels: Vec<String> = d.cells.iter().map(Cell::label).collect();
        assert_eq!(labels, ["11", "10", "01", "00"]);
    }

    #[test]
    fn single_spec_gives_two_cells() {
        let t = TupleInstance::single(real(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0])).unwrap();
        let d = combine_properties(&t, &[builtin_property("normal", 3).unwrap()], &Default::default())
            .unwrap();
        assert_eq!(d.cells.len(), 2);
        assert!(d.partition_residual < 1e-12);
        assert_eq!(d.cell("1").unwrap().rank(), 1);
    }

    #[test]
    fn triple_examples() {
        let tol = ToleranceProfile::default();
        let tr = triple_decompose(&rdiag(&[1.0, 2.0]), &rdiag(&[3.0, 4.0]), &tol).unwrap();
        assert_eq!(tr.summands[0].rank(), 2);
        assert_eq!(tr.compatible.projection.rank(), 2);

        let j = real(2, &[0.0, 1.0, 0.0, 0.0]);
        let tr = triple_decompose(&j, &j, &tol).unwrap();
        assert_eq!(tr.doubly_commuting.projection.rank(), 0);
        assert_eq!(tr.compatible.projection.rank(), 2);
        assert_eq!(tr.summands[1].rank(), 2);
    }

    fn block(a: &CMat, b: &CMat) -> CMat {
        let (n, m) = (a.nrows(), b.nrows());
        let mut out = CMat::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(a);
        out.view_mut((n, n), (m, m)).copy_from(b);
        out
    }

    #[test]
    fn canonical_block_example_exists() {
        let j = real(2, &[0.0, 1.0, 0.0, 0.0]);
        let x = block(&rdiag(&[1.0, 2.0]), &j);
        let y = block(&j, &rdiag(&[3.0, 4.0]));
        let v = canonical_decompose(&x, &y, &builtin_property("normal", 4).unwrap(), &Default::default())
            .unwrap();
        assert!(v.exists);
        let cells = v.cells.unwrap();
        assert_eq!(cells[0].rank(), 0);
        assert!((cells[1].matrix() - rdiag(&[1.0, 1.0, 0.0, 0.0])).norm() < 1e-6);
        assert!((cells[2].matrix() - rdiag(&[0.0, 0.0, 1.0, 1.0])).norm() < 1e-6);
        assert_eq!(cells[3].rank(), 0);
    }

    #[test]
    fn canonical_swap_counterexample() {
        let x = real(3, &[5.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let y = real(3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let v = canonical_decompose(&x, &y, &builtin_property("normal", 3).unwrap(), &Default::default())
            .unwrap();
        assert!(!v.exists);
        assert!((v.p_x.matrix() - rdiag(&[1.0, 0.0, 0.0])).norm() < T);
        assert!(v.q_x.is_below(&v.p_x));
        assert!(v.cells.is_none());
    }

    #[test]
    fn canonical_symmetric_case() {
        let x = real(3, &[1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0]);
        for name in ["normal", "unitary", "partial_isometry"] {
            let v = canonical_decompose(&x, &x, &builtin_property(name, 3).unwrap(), &Default::default())
                .unwrap();
            assert!(v.exists, "{name}");
            assert!(v.p_x.same_as(&v.p_y) && v.p_x.same_as(&v.q_x) && v.q_x.same_as(&v.q_y));
        }
    }

    #[test]
    fn audit_detects_shrunk_projection() {
        let tol = ToleranceProfile::default();
        let j = real(2, &[0.0, 1.0, 0.0, 0.0]);
        let x = block(&rdiag(&[1.0, 2.0]), &j);
        let t = TupleInstance::single(x).unwrap();
        let spec = builtin_property("normal", 4).unwrap();
        let full = max_property_projection(&t, &spec, &tol).unwrap();
        assert_eq!(full.projection.rank(), 2);
        let shrunk = Projection::from_matrix(&rdiag(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(audit_complete_absence(&t, &spec, &shrunk, &tol).unwrap().rank, 1);
        let all = Projection::identity(4);
        assert_eq!(audit_complete_absence(&t, &spec, &all, &tol).unwrap().rank, 0);
    }

    #[test]
    fn arity_mismatch() {
        let t = TupleInstance::single(CMat::identity(2, 2)).unwrap();
        let r = max_property_projection(&t, &builtin_property("commuting", 2).unwrap(), &Default::default());
        assert!(matches!(r, Err(Error::ArityMismatch { .. })));
    }
}
