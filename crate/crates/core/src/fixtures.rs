//! Deterministic instance generators: the nine-dimensional compatible pair,
//! planted decompositions with known answers, and power partial isometries.
//!
//! Haar unitaries are drawn as the `Q` factor of a seeded standard complex
//! Gaussian matrix, with the columns rephased so that `diag(R)` is positive.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::engine::max_property_projection;
use crate::error::{Error, Result};
use crate::numeric::{CMat, ToleranceProfile, C64};
use crate::properties::{builtin_property, has_property, PropertySpec};
use crate::ring::{Projection, TupleInstance};
use crate::structure::ShiftProfile;

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian(rng: &mut FixtureRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn gaussian_matrix(n: usize, rng: &mut FixtureRng) -> CMat {
    CMat::from_fn(n, n, |_, _| gaussian(rng))
}

/// Haar-distributed unitary of size `n`.
pub fn haar_unitary(n: usize, rng: &mut FixtureRng) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let qr = gaussian_matrix(n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).scale_mut_complex(phase);
    }
    q
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, c: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleComplex
    for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_complex(&mut self, c: C64) {
        self.iter_mut().for_each(|z| *z *= c);
    }
}

/// Unit-modulus complex number with uniform angle.
pub(crate) fn random_phase(rng: &mut FixtureRng) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

pub(crate) fn block_diag(blocks: &[&CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((at, at), (k, k)).copy_from(b);
        at += k;
    }
    out
}

pub(crate) fn conjugate(u: &CMat, x: &CMat) -> CMat {
    u * x * u.adjoint()
}

pub(crate) fn diag_c(d: &[C64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_row_slice(d))
}

/// Which second entry of the nine-dimensional example to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperVariant {
    Y,
    YPrime,
}

/// The compatible, non-commuting pair on `C^9 = span{e_(i,j) : i, j ∈ {1,2,3}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperExample {
    pub tuple: TupleInstance,
    /// Identity when no seed was given.
    pub conjugator: CMat,
}

impl PaperExample {
    /// Basis index of `e_(i,j)`, `i, j ∈ {1, 2, 3}`.
    pub fn index(i: usize, j: usize) -> usize {
        (i - 1) * 3 + (j - 1)
    }

    /// `p_(i,j)`, the rank-one projection onto `e_(i,j)` (conjugated along with the pair).
    pub fn coordinate_projection(&self, i: usize, j: usize) -> Projection {
        let k = Self::index(i, j);
        let col = self.conjugator.column(k).into_owned();
        Projection::from_frame(crate::numeric::Frame::from_orthonormal(CMat::from_columns(&[col])))
    }

    pub fn x(&self) -> &CMat {
        self.tuple.get(0)
    }

    pub fn y(&self) -> &CMat {
        self.tuple.get(1)
    }
}

/// Builds `x = Σ E_{(i+1,j),(i,j)}` and `y = Σ E_{(i,j+1),(i,j)}` over
/// `i, j ∈ {1, 2}`. The `YPrime` variant multiplies the `(2,1) → (2,2)`
/// summand of `y` by `phase`, a unit-modulus number other than 1. A seed
/// conjugates both entries by a Haar unitary.
pub fn gen_paper_example(variant: PaperVariant, phase: C64, seed: Option<u64>) -> Result<PaperExample> {
    if (phase.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("phase {phase} does not have modulus 1")));
    }
    if variant == PaperVariant::YPrime && (phase - 1.0).norm() <= 1e-12 {
        return Err(Error::Input("the y_prime variant needs a phase different from 1".into()));
    }
    let idx = PaperExample::index;
    let one = C64::new(1.0, 0.0);
    let mut x = CMat::zeros(9, 9);
    let mut y = CMat::zeros(9, 9);
    for i in 1..=2 {
        for j in 1..=2 {
            x[(idx(i + 1, j), idx(i, j))] = one;
            let w = if variant == PaperVariant::YPrime && (i, j) == (2, 1) {
                phase
            } else {
                one
            };
            y[(idx(i, j + 1), idx(i, j))] = w;
        }
    }
    let conjugator = match seed {
        Some(s) => haar_unitary(9, &mut rng(s)),
        None => CMat::identity(9, 9),
    };
    let (x, y) = (conjugate(&conjugator, &x), conjugate(&conjugator, &y));
    let tuple = TupleInstance::pair(x, y)?.with_labels(vec!["x".into(), "y".into()])?;
    Ok(PaperExample { tuple, conjugator })
}

/// A tuple with a known maximal property projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub tuple: TupleInstance,
    pub expected_projection: Projection,
    pub conjugator: CMat,
    pub seed: u64,
    pub description: String,
}

/// One diagonal block of a planted instance: a tuple that either has the
/// property or completely lacks it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedBlock {
    pub tuple: Vec<CMat>,
    pub has_property: bool,
}

/// Direct sum of the blocks, conjugated by a seeded Haar unitary. Each block
/// is audited first: blocks claiming the property must satisfy every
/// functional, the others must have engine projection 0.
pub fn gen_planted(
    spec: &PropertySpec,
    blocks: &[PlantedBlock],
    seed: u64,
    tol: &ToleranceProfile,
) -> Result<PlantedInstance> {
    if blocks.is_empty() {
        return Err(Error::Input("planted instance needs at least one block".into()));
    }
    let arity = spec.arity();
    for (b, block) in blocks.iter().enumerate() {
        if block.tuple.len() != arity {
            return Err(Error::ArityMismatch {
                property: spec.name().to_string(),
                expected: arity,
                found: block.tuple.len(),
            });
        }
        let t = TupleInstance::new(block.tuple.clone())?;
        if block.has_property {
            if !has_property(spec, &t, tol)? {
                return Err(Error::Generator(format!(
                    "block {b} was declared to have `{}` but does not",
                    spec.name()
                )));
            }
        } else {
            let r = max_property_projection(&t, spec, tol)?;
            if r.projection.rank() != 0 {
                return Err(Error::Generator(format!(
                    "block {b} is not completely without `{}`: engine rank {}",
                    spec.name(),
                    r.projection.rank()
                )));
            }
        }
    }
    let dim: usize = blocks.iter().map(|b| b.tuple[0].nrows()).sum();
    let u = haar_unitary(dim, &mut rng(seed));
    let tuple = (0..arity)
        .map(|slot| {
            let parts: Vec<&CMat> = blocks.iter().map(|b| &b.tuple[slot]).collect();
            conjugate(&u, &block_diag(&parts))
        })
        .collect();
    let mut indicator = Vec::with_capacity(dim);
    for b in blocks {
        let v = if b.has_property { 1.0 } else { 0.0 };
        indicator.extend(std::iter::repeat_n(C64::new(v, 0.0), b.tuple[0].nrows()));
    }
    let expected = conjugate(&u, &diag_c(&indicator));
    let sizes: Vec<String> = blocks
        .iter()
        .map(|b| format!("{}{}", b.tuple[0].nrows(), if b.has_property { "+" } else { "-" }))
        .collect();
    Ok(PlantedInstance {
        tuple: TupleInstance::new(tuple)?,
        expected_projection: Projection::from_matrix(&expected)?,
        conjugator: u,
        seed,
        description: format!("{} planted blocks [{}]", spec.name(), sizes.join(" ")),
    })
}

/// Smallest block that can completely lack the property.
fn min_without_size(property: &str) -> usize {
    match property {
        "normal" | "commuting" | "doubly_commuting" | "compatible" => 2,
        _ => 1,
    }
}

pub(crate) fn modulus_in(rng: &mut FixtureRng, lo: f64, hi: f64) -> C64 {
    random_phase(rng) * rng.random_range(lo..hi)
}

/// A block of size `n` with the property.
fn with_block(property: &str, n: usize, rng: &mut FixtureRng) -> Result<Vec<CMat>> {
    let w = haar_unitary(n, rng);
    let spectral = |rng: &mut FixtureRng, zero_prob: f64| -> CMat {
        let d: Vec<C64> = (0..n)
            .map(|_| {
                if rng.random_bool(zero_prob) {
                    C64::new(0.0, 0.0)
                } else {
                    modulus_in(rng, 0.6, 1.4)
                }
            })
            .collect();
        conjugate(&w, &diag_c(&d))
    };
    Ok(match property {
        "normal" => vec![spectral(rng, 0.0)],
        "partial_isometry" => {
            let v = haar_unitary(n, rng);
            let rank = rng.random_range(0..=n);
            let d: Vec<C64> = (0..n)
                .map(|i| C64::new(if i < rank { 1.0 } else { 0.0 }, 0.0))
                .collect();
            vec![&w * diag_c(&d) * v.adjoint()]
        }
        "unitary" | "isometry" | "coisometry" => vec![w],
        "commuting" => {
            let a = gaussian_matrix(n, rng).unscale((n as f64).sqrt());
            let (c0, c1, c2) = (gaussian(rng), gaussian(rng), gaussian(rng));
            let b = CMat::identity(n, n) * c0 + &a * c1 + &a * &a * c2;
            vec![a, b]
        }
        "doubly_commuting" => vec![spectral(rng, 0.0), spectral(rng, 0.0)],
        "compatible" => vec![spectral(rng, 0.3), spectral(rng, 0.3)],
        other => return Err(Error::UnknownProperty(other.to_string())),
    })
}

/// A block of size `n` completely without the property.
fn without_block(property: &str, n: usize, rng: &mut FixtureRng) -> Result<Vec<CMat>> {
    let generic = |rng: &mut FixtureRng| gaussian_matrix(n, rng).unscale((n as f64).sqrt());
    Ok(match property {
        "normal" | "partial_isometry" => vec![generic(rng)],
        "unitary" | "isometry" | "coisometry" => {
            if n == 1 {
                vec![CMat::from_element(1, 1, modulus_in(rng, 0.2, 0.7))]
            } else {
                vec![generic(rng)]
            }
        }
        "commuting" | "doubly_commuting" => vec![generic(rng), generic(rng)],
        "compatible" => {
            // Normal entries with one-dimensional kernels in general position:
            // the range projections are two non-commuting hyperplanes.
            let hyperplane = |rng: &mut FixtureRng| {
                let w = haar_unitary(n, rng);
                let d: Vec<C64> = (0..n)
                    .map(|i| if i == 0 { C64::new(0.0, 0.0) } else { modulus_in(rng, 0.6, 1.4) })
                    .collect();
                conjugate(&w, &diag_c(&d))
            };
            vec![hyperplane(rng), hyperplane(rng)]
        }
        other => return Err(Error::UnknownProperty(other.to_string())),
    })
}

/// Random planted instance of dimension `dim` for a built-in property: one
/// block with the property and one completely without it (either may be empty).
pub fn planted_for_property(
    property: &str,
    dim: usize,
    seed: u64,
    tol: &ToleranceProfile,
) -> Result<PlantedInstance> {
    let property = property.replace('-', "_");
    let spec = builtin_property(&property, dim)?;
    if dim == 0 {
        return Err(Error::Input("dimension must be positive".into()));
    }
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let bmin = min_without_size(&property);
    let mut sizes: Vec<usize> = vec![0];
    sizes.extend(bmin..=dim);
    let without = sizes[r.random_range(0..sizes.len())];
    let with = dim - without;
    let mut blocks = Vec::new();
    if with > 0 {
        blocks.push(PlantedBlock {
            tuple: with_block(&property, with, &mut r)?,
            has_property: true,
        });
    }
    if without > 0 {
        blocks.push(PlantedBlock {
            tuple: without_block(&property, without, &mut r)?,
            has_property: false,
        });
    }
    let mut inst = gen_planted(&spec, &blocks, seed, tol)?;
    inst.description = format!("{} (dim {dim}, seed {seed})", inst.description);
    Ok(inst)
}

/// Truncated shift of length `k`: ones on the subdiagonal. Length 1 is `[0]`.
pub fn truncated_shift(k: usize) -> CMat {
    let mut m = CMat::zeros(k, k);
    for i in 1..k {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    m
}

/// A random unitary of size `unitary_dim` plus `m_k` truncated shifts of each
/// length `k`, conjugated by a Haar unitary, with its ground-truth profile.
pub fn gen_power_partial_isometry(
    multiplicities: &BTreeMap<usize, usize>,
    unitary_dim: usize,
    seed: u64,
) -> Result<(CMat, ShiftProfile)> {
    if multiplicities.contains_key(&0) {
        return Err(Error::Input("truncated shifts have length >= 1".into()));
    }
    let shift_dim: usize = multiplicities.iter().map(|(k, m)| k * m).sum();
    let dim = unitary_dim + shift_dim;
    if dim == 0 {
        return Err(Error::Input("power partial isometry of dimension 0".into()));
    }
    let mut r = rng(seed);
    let unitary = haar_unitary(unitary_dim, &mut r);
    let shifts: Vec<CMat> = multiplicities
        .iter()
        .flat_map(|(&k, &m)| std::iter::repeat_n(truncated_shift(k), m))
        .collect();
    let mut parts: Vec<&CMat> = vec![&unitary];
    parts.extend(shifts.iter());
    let u = haar_unitary(dim, &mut r);
    let x = conjugate(&u, &block_diag(&parts));
    let indicator: Vec<C64> = (0..dim)
        .map(|i| C64::new(if i < unitary_dim { 1.0 } else { 0.0 }, 0.0))
        .collect();
    let profile = ShiftProfile {
        dim,
        unitary_projection: Projection::from_matrix(&conjugate(&u, &diag_c(&indicator)))?,
        multiplicities: multiplicities
            .iter()
            .filter(|(_, &m)| m > 0)
            .map(|(&k, &m)| (k, m))
            .collect(),
        pure_isometry_rank: 0,
        pure_coisometry_rank: 0,
    };
    Ok((x, profile))
}

/// A commuting pair of Haar unitaries (common eigenbasis, independent phases).
pub fn commuting_unitaries(n: usize, rng: &mut FixtureRng) -> (CMat, CMat) {
    let w = haar_unitary(n, rng);
    let a: Vec<C64> = (0..n).map(|_| random_phase(rng)).collect();
    let b: Vec<C64> = (0..n).map(|_| random_phase(rng)).collect();
    (conjugate(&w, &diag_c(&a)), conjugate(&w, &diag_c(&b)))
}
