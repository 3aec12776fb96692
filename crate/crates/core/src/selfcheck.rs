//! Seeded invariant suites over generated instances. Each suite returns a
//! pass/fail outcome with its worst observed ratio against the bound.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::engine::{canonical_decompose, combine_properties, max_property_projection};
use crate::error::{Error, Result};
use crate::fixtures::{
    block_diag, conjugate, diag_c, gaussian_matrix, gen_paper_example, gen_power_partial_isometry,
    haar_unitary, modulus_in, planted_for_property, rng, truncated_shift, FixtureRng, PaperExample,
    PaperVariant,
};
use crate::numeric::{CMat, ToleranceProfile, C64};
use crate::properties::builtin_property;
use crate::ring::{
    commutation_residual, commutation_threshold, left_projection, power_range_projection, Projection,
    TupleInstance,
};
use crate::structure::{defect_projection, halmos_wallen, wold, HalmosWallen};

pub const SUITE_NAMES: [&str; 9] = [
    "planted recovery",
    "postconditions",
    "product law",
    "quaternary partition",
    "range projections of commuting data",
    "nine-dimensional example",
    "truncated shifts",
    "isometries",
    "canonical decomposition",
];

pub const PLANTED_PROPERTIES: [&str; 6] = [
    "normal",
    "partial_isometry",
    "unitary",
    "doubly_commuting",
    "commuting",
    "compatible",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Largest `residual / bound` seen; at most 1 when every case passed.
    pub worst_ratio: f64,
    pub detail: String,
    pub elapsed_secs: f64,
}

impl SuiteOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] suite {} {}: {}/{} cases, worst ratio {:.2e}, {:.2}s{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.cases - self.failures,
            self.cases,
            self.worst_ratio,
            self.elapsed_secs,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
    first_failure: Option<String>,
}

impl Tally {
    fn case(&mut self) {
        self.cases += 1;
    }

    fn fail(&mut self, msg: String) {
        self.failures += 1;
        self.first_failure.get_or_insert(msg);
    }

    /// Records `value ≤ bound`; returns whether it held.
    fn bound(&mut self, what: &str, value: f64, bound: f64) -> bool {
        let ratio = if bound > 0.0 { value / bound } else if value == 0.0 { 0.0 } else { f64::INFINITY };
        self.worst = self.worst.max(ratio);
        if !(value <= bound) {
            self.fail(format!("{what}: {value:.3e} > {bound:.3e}"));
            return false;
        }
        true
    }

    fn equal<T: PartialEq + std::fmt::Debug>(&mut self, what: &str, found: T, expected: T) -> bool {
        if found != expected {
            self.fail(format!("{what}: found {found:?}, expected {expected:?}"));
            return false;
        }
        true
    }

    fn error(&mut self, what: &str, e: Error) {
        self.fail(format!("{what}: {e}"));
    }

    /// Counts a case as failed when any check inside it failed.
    fn run(&mut self, label: &str, f: impl FnOnce(&mut Tally) -> Result<()>) {
        self.case();
        let before = self.failures;
        let mut inner = Tally::default();
        if let Err(e) = f(&mut inner) {
            inner.error(label, e);
        }
        self.worst = self.worst.max(inner.worst);
        if inner.failures > 0 {
            self.failures = before + 1;
            if let Some(m) = inner.first_failure {
                self.first_failure.get_or_insert(format!("{label}: {m}"));
            }
        }
    }

    fn finish(self, id: usize, start: Instant) -> SuiteOutcome {
        SuiteOutcome {
            id,
            name: SUITE_NAMES[id - 1].to_string(),
            passed: self.failures == 0 && self.cases > 0,
            cases: self.cases,
            failures: self.failures,
            worst_ratio: self.worst,
            detail: self.first_failure.unwrap_or_default(),
            elapsed_secs: start.elapsed().as_secs_f64(),
        }
    }
}

/// Runs suite `id` (1 to 9) from `seed`.
pub fn run_suite(id: usize, seed: u64) -> Result<SuiteOutcome> {
    let tol = ToleranceProfile::default();
    let start = Instant::now();
    let tally = match id {
        1 => planted_recovery(seed, &tol),
        2 => postconditions(seed, &tol),
        3 => product_law(seed, &tol),
        4 => quaternary_partition(seed, &tol),
        5 => commuting_ranges(seed, &tol),
        6 => paper_example(seed, &tol),
        7 => truncated_shifts(seed, &tol),
        8 => isometries(seed, &tol),
        9 => canonical(&tol),
        _ => return Err(Error::Input(format!("no suite {id}; suites are numbered 1 to 9"))),
    };
    Ok(tally.finish(id, start))
}

pub fn run_all(seed: u64) -> Vec<SuiteOutcome> {
    (1..=9)
        .map(|id| run_suite(id, seed).expect("suite ids are in range"))
        .collect()
}

fn mix(seed: u64, salt: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d)
        .wrapping_add(salt << 32)
        .wrapping_add(k as u64)
}

fn planted_recovery(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    for (pi, property) in PLANTED_PROPERTIES.iter().enumerate() {
        for k in 0..200 {
            let dim = 2 + k % 11;
            let s = mix(seed, 1 + pi as u64, k);
            t.run(&format!("{property} dim {dim} seed {s}"), |t| {
                let inst = planted_for_property(property, dim, s, tol)?;
                let spec = builtin_property(property, dim)?;
                let r = max_property_projection(&inst.tuple, &spec, tol)?;
                t.equal("rank", r.projection.rank(), inst.expected_projection.rank());
                t.bound("distance to planted projection", r.projection.distance(&inst.expected_projection), 1e-6);
                Ok(())
            });
        }
    }
    t
}

/// Unstructured matrices from a few families: dense Gaussian, low rank,
/// sparse 0/1 and sparse Gaussian.
fn random_matrix(n: usize, rng: &mut FixtureRng) -> CMat {
    match rng.random_range(0..4) {
        0 => gaussian_matrix(n, rng),
        1 => {
            let r = rng.random_range(0..=n);
            let a = CMat::from_fn(n, r, |_, _| crate::fixtures::gaussian(rng));
            let b = CMat::from_fn(r, n, |_, _| crate::fixtures::gaussian(rng));
            a * b
        }
        2 => CMat::from_fn(n, n, |_, _| {
            C64::new(if rng.random_bool(0.2) { 1.0 } else { 0.0 }, 0.0)
        }),
        _ => CMat::from_fn(n, n, |_, _| {
            if rng.random_bool(0.25) {
                crate::fixtures::gaussian(rng)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    }
}

fn postconditions(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let names = crate::properties::BUILTIN_NAMES;
    let mut r = rng(mix(seed, 20, 0));
    for k in 0..200 {
        let property = names[k % names.len()];
        let dim = r.random_range(1..=8);
        t.run(&format!("{property} dim {dim} case {k}"), |t| {
            let spec = builtin_property(property, dim)?;
            let elements = (0..spec.arity()).map(|_| random_matrix(dim, &mut r)).collect();
            let tuple = TupleInstance::new(elements)?;
            let rep = max_property_projection(&tuple, &spec, tol)?;
            let p = &rep.projection;
            t.bound("projection residual", p.projection_residual(), 1e-10 * dim as f64);
            for x in tuple.elements() {
                t.bound(
                    "commutation residual",
                    commutation_residual(p.matrix(), x),
                    commutation_threshold(p.matrix(), x, tol),
                );
            }
            for (res, scale) in rep.residuals.iter().zip(&rep.scales) {
                t.bound("functional residual", *res, 1e-8 * scale);
            }
            let audit = crate::engine::audit_complete_absence(&tuple, &spec, p, tol)?;
            t.equal("audit rank", audit.rank, 0);
            Ok(())
        });
    }
    t
}

/// Direct sum of the given blocks under a Haar unitary.
fn conjugated_sum(blocks: &[Vec<CMat>], rng: &mut FixtureRng) -> Vec<CMat> {
    let arity = blocks[0].len();
    let dim: usize = blocks.iter().map(|b| b[0].nrows()).sum();
    let u = haar_unitary(dim, rng);
    (0..arity)
        .map(|slot| {
            let parts: Vec<&CMat> = blocks.iter().map(|b| &b[slot]).collect();
            conjugate(&u, &block_diag(&parts))
        })
        .collect()
}

fn normal_unitary_instance(rng: &mut FixtureRng) -> Vec<CMat> {
    let mut blocks = Vec::new();
    let a = rng.random_range(0..=3);
    if a > 0 {
        blocks.push(vec![haar_unitary(a, rng)]);
    }
    let b = rng.random_range(0..=3);
    if b > 0 {
        let w = haar_unitary(b, rng);
        let d: Vec<C64> = (0..b).map(|_| modulus_in(rng, 0.1, 0.8)).collect();
        blocks.push(vec![conjugate(&w, &diag_c(&d))]);
    }
    let c = rng.random_range(if blocks.is_empty() { 2 } else { 0 }..=3);
    if c > 0 {
        blocks.push(vec![gaussian_matrix(c, rng)]);
    }
    conjugated_sum(&blocks, rng)
}

/// `diag(a, b) ⊕ ...` against a nilpotent `E_12`: compatible, not commuting.
fn compatible_noncommuting_block(rng: &mut FixtureRng) -> Vec<CMat> {
    let a = modulus_in(rng, 0.5, 1.5);
    let b = a + modulus_in(rng, 0.5, 1.0);
    let mut e = CMat::zeros(2, 2);
    e[(0, 1)] = C64::new(1.0, 0.0);
    vec![diag_c(&[a, b]), e]
}

fn commuting_compatible_instance(rng: &mut FixtureRng) -> Vec<CMat> {
    let mut blocks = Vec::new();
    let a = rng.random_range(0..=3);
    if a > 0 {
        let x = gaussian_matrix(a, rng);
        let (c0, c1) = (crate::fixtures::gaussian(rng), crate::fixtures::gaussian(rng));
        let y = CMat::identity(a, a) * c0 + &x * c1;
        blocks.push(vec![x, y]);
    }
    if rng.random_bool(0.6) {
        blocks.push(compatible_noncommuting_block(rng));
    }
    let c = rng.random_range(if blocks.is_empty() { 2 } else { 0 }..=3);
    if c >= 2 {
        blocks.push(vec![gaussian_matrix(c, rng), gaussian_matrix(c, rng)]);
    }
    if blocks.is_empty() {
        blocks.push(compatible_noncommuting_block(rng));
    }
    conjugated_sum(&blocks, rng)
}

fn product_law(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let mut r = rng(mix(seed, 30, 0));
    for k in 0..100 {
        for (names, build) in [
            (["normal", "unitary"], normal_unitary_instance as fn(&mut FixtureRng) -> Vec<CMat>),
            (["commuting", "compatible"], commuting_compatible_instance),
        ] {
            let elements = build(&mut r);
            t.run(&format!("{{{}, {}}} case {k}", names[0], names[1]), |t| {
                let tuple = TupleInstance::new(elements)?;
                let dim = tuple.dim();
                let specs = [builtin_property(names[0], dim)?, builtin_property(names[1], dim)?];
                let d = combine_properties(&tuple, &specs, tol)?;
                for &(_, _, c) in &d.commutation_residuals {
                    t.bound("‖p1 p2 − p2 p1‖", c, 1e-8);
                }
                for &(_, _, c) in &d.product_law_residuals {
                    t.bound("‖p1 p2 − p12‖", c, 1e-6);
                }
                Ok(())
            });
        }
    }
    t
}

fn quaternary_partition(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let mut r = rng(mix(seed, 40, 0));
    for k in 0..100 {
        let elements = commuting_compatible_instance(&mut r);
        t.run(&format!("pair {k}"), |t| {
            let tuple = TupleInstance::new(elements)?;
            let dim = tuple.dim();
            let specs = [builtin_property("commuting", dim)?, builtin_property("compatible", dim)?];
            let d = combine_properties(&tuple, &specs, tol)?;
            t.equal("cell count", d.cells.len(), 4);
            for (i, a) in d.cells.iter().enumerate() {
                for b in &d.cells[i + 1..] {
                    let prod = (a.projection.matrix() * b.projection.matrix()).norm();
                    t.bound("cell product", prod, 1e-8);
                }
            }
            let sum = d
                .cells
                .iter()
                .fold(CMat::zeros(dim, dim), |acc, c| acc + c.projection.matrix());
            t.bound("Σ cells − 1", (sum - CMat::identity(dim, dim)).norm(), 1e-8 * dim as f64);
            Ok(())
        });
    }
    t
}

/// A matrix of rank `r ∈ [min_rank, n − 1]`: `G · diag(1, …, 1, 0, …) · H`.
fn rank_deficient(n: usize, min_rank: usize, rng: &mut FixtureRng) -> CMat {
    let r = rng.random_range(min_rank.min(n - 1)..n);
    let d: Vec<C64> = (0..n).map(|i| C64::new(if i < r { 1.0 } else { 0.0 }, 0.0)).collect();
    gaussian_matrix(n, rng) * diag_c(&d) * gaussian_matrix(n, rng)
}

/// Doubly commuting pair: `A ⊗ 1` and `1 ⊗ B`, plus a block of commuting
/// normals, under a Haar unitary.
fn doubly_commuting_pair(rng: &mut FixtureRng) -> Vec<CMat> {
    let (na, nb) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let a = rank_deficient(na, 0, rng);
    let b = rank_deficient(nb, 0, rng);
    let x = a.kronecker(&CMat::identity(nb, nb));
    let y = CMat::identity(na, na).kronecker(&b);
    let mut blocks = vec![vec![x, y]];
    let c = rng.random_range(0..=3);
    if c > 0 {
        let w = haar_unitary(c, rng);
        let d1: Vec<C64> = (0..c)
            .map(|_| if rng.random_bool(0.3) { C64::new(0.0, 0.0) } else { modulus_in(rng, 0.5, 1.5) })
            .collect();
        let d2: Vec<C64> = (0..c).map(|_| modulus_in(rng, 0.0, 1.5)).collect();
        blocks.push(vec![conjugate(&w, &diag_c(&d1)), conjugate(&w, &diag_c(&d2))]);
    }
    conjugated_sum(&blocks, rng)
}

fn commuting_ranges(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let mut r = rng(mix(seed, 50, 0));
    for k in 0..100 {
        let pair = doubly_commuting_pair(&mut r);
        t.run(&format!("doubly commuting pair {k}"), |t| {
            let (x, y) = (&pair[0], &pair[1]);
            t.bound("xy − yx", commutation_residual(x, y), 1e-10);
            t.bound("xy* − y*x", commutation_residual(x, &y.adjoint()), 1e-10);
            let px = left_projection(x, tol)?;
            let py = left_projection(y, tol)?;
            let pm = px.matrix();
            t.bound("[x]y − y[x]", commutation_residual(pm, y), commutation_threshold(pm, y, tol));
            let ys = y.adjoint();
            t.bound("[x]y* − y*[x]", commutation_residual(pm, &ys), commutation_threshold(pm, &ys, tol));
            t.bound(
                "[x][y] − [y][x]",
                commutation_residual(pm, py.matrix()),
                commutation_threshold(pm, py.matrix(), tol),
            );
            Ok(())
        });

        // A reducing projection and an element it commutes with.
        // `p·x` must not be zero: the left projection of pure roundoff is
        // noise at the relative cut.
        let n1 = r.random_range(2..=4);
        let n2 = r.random_range(1..=4);
        let a = rank_deficient(n1, 1, &mut r);
        let b = rank_deficient(n2, 0, &mut r);
        let u = haar_unitary(n1 + n2, &mut r);
        let x = conjugate(&u, &block_diag(&[&a, &b]));
        let ind: Vec<C64> = (0..n1 + n2)
            .map(|i| C64::new(if i < n1 { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let p = conjugate(&u, &diag_c(&ind));
        t.run(&format!("reducing projection {k}"), |t| {
            let p = Projection::from_matrix(&p)?;
            let lhs = left_projection(&(p.matrix() * &x), tol)?;
            let rhs = p.matrix() * left_projection(&x, tol)?.matrix();
            t.bound("[px] − p[x]", (lhs.matrix() - rhs).norm(), tol.res_rel * (1.0 + x.norm()));
            Ok(())
        });
    }
    t
}

fn paper_example(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let one = C64::new(1.0, 0.0);
    t.run("y variant", |t| {
        let ex = gen_paper_example(PaperVariant::Y, one, None)?;
        let spec = builtin_property("compatible", 9)?;
        let rep = max_property_projection(&ex.tuple, &spec, tol)?;
        t.bound(
            "compatibility projection − 1",
            rep.projection.distance(&Projection::identity(9)),
            1e-10,
        );
        let x2 = power_range_projection(ex.x(), 2, tol)?;
        let expected = ex.coordinate_projection(3, 1).matrix() + ex.coordinate_projection(3, 2).matrix();
        t.bound("[x²] − p31 − p32", (x2.matrix() - expected).norm(), 1e-10);
        let x3 = ex.x() * ex.x() * ex.x();
        t.equal("x³ exactly zero", x3.iter().all(|z| *z == C64::new(0.0, 0.0)), true);
        let comm = (ex.x() * ex.y() - ex.y() * ex.x()).norm();
        t.bound("| ‖xy − yx‖ − √2 |", (comm - 2f64.sqrt()).abs(), 1e-10);
        Ok(())
    });
    t.run("y' variant, phase i", |t| {
        let ex = gen_paper_example(PaperVariant::Y, one, None)?;
        let exp = gen_paper_example(PaperVariant::YPrime, C64::new(0.0, 1.0), None)?;
        for n in 1..=9 {
            let a = power_range_projection(ex.y(), n, tol)?;
            let b = power_range_projection(exp.y(), n, tol)?;
            t.bound(&format!("[y'^{n}] − [y^{n}]"), a.distance(&b), 1e-10);
        }
        let spec = builtin_property("compatible", 9)?;
        let rep = max_property_projection(&exp.tuple, &spec, tol)?;
        t.equal("y' pair compatibility rank", rep.projection.rank(), 9);
        Ok(())
    });
    for k in 0..5 {
        let s = mix(seed, 60, k);
        t.run(&format!("conjugated example seed {s}"), |t| {
            let ex: PaperExample = gen_paper_example(PaperVariant::Y, one, Some(s))?;
            let spec = builtin_property("compatible", 9)?;
            let rep = max_property_projection(&ex.tuple, &spec, tol)?;
            t.bound("compatibility projection − 1", rep.projection.distance(&Projection::identity(9)), 1e-8);
            Ok(())
        });
    }
    t
}

fn random_profile(rng: &mut FixtureRng) -> (BTreeMap<usize, usize>, usize) {
    loop {
        let unitary_dim = rng.random_range(0..=5);
        let mut mults = BTreeMap::new();
        let mut total = unitary_dim;
        for _ in 0..rng.random_range(0..=4) {
            let k = rng.random_range(1..=6);
            if total + k <= 16 {
                *mults.entry(k).or_insert(0) += 1;
                total += k;
            }
        }
        if total > 0 {
            return (mults, unitary_dim);
        }
    }
}

fn truncated_shifts(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let mut r = rng(mix(seed, 70, 0));
    for k in 0..100 {
        let (mults, unitary_dim) = random_profile(&mut r);
        let s = mix(seed, 71, k);
        t.run(&format!("profile {mults:?} + unitary {unitary_dim}, seed {s}"), |t| {
            let (x, truth) = gen_power_partial_isometry(&mults, unitary_dim, s)?;
            match halmos_wallen(&x, tol)? {
                HalmosWallen::Profile(p) => {
                    t.equal("multiplicities", &p.multiplicities, &truth.multiplicities);
                    t.equal("rank p_u", p.unitary_projection.rank(), truth.unitary_projection.rank());
                    t.bound("p_u − truth", p.unitary_projection.distance(&truth.unitary_projection), 1e-6);
                }
                HalmosWallen::NotPowerPartialIsometry { power, residual } => {
                    t.fail(format!("rejected at power {power} (residual {residual:.3e})"));
                }
            }
            let dim = x.nrows();
            let defects = (0..dim)
                .map(|m| defect_projection(&x, m, tol))
                .collect::<Result<Vec<_>>>()?;
            for (i, a) in defects.iter().enumerate() {
                for b in &defects[i + 1..] {
                    t.bound("defect product", (a.matrix() * b.matrix()).norm(), 1e-8);
                }
            }
            Ok(())
        });
    }
    // A plain truncated shift is its own ground truth without conjugation.
    t.run("uncoupled shift of length 4", |t| {
        match halmos_wallen(&truncated_shift(4), tol)? {
            HalmosWallen::Profile(p) => {
                t.equal("multiplicities", p.multiplicities, BTreeMap::from([(4, 1)]));
            }
            other => t.fail(format!("unexpected verdict {other:?}")),
        }
        Ok(())
    });
    t
}

fn isometries(seed: u64, tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let mut r = rng(mix(seed, 80, 0));
    for k in 0..50 {
        let n = r.random_range(1..=10);
        let u = haar_unitary(n, &mut r);
        t.run(&format!("unitary {k} of size {n}"), |t| {
            let w = wold(&u, tol)?;
            t.bound("‖p_u − 1‖", w.unitary_projection.distance(&Projection::identity(n)), 1e-8);
            t.equal("shift rank", w.shift_rank, 0);
            Ok(())
        });
        let scaled = u.clone() * C64::new(r.random_range(1.1..2.0), 0.0);
        let generic = gaussian_matrix(n, &mut r);
        for (what, m) in [("scaled unitary", scaled), ("gaussian", generic)] {
            t.run(&format!("{what} {k} rejected"), |t| {
                match wold(&m, tol) {
                    Err(Error::Precondition { .. }) => {}
                    other => t.fail(format!("expected a precondition error, got {other:?}")),
                }
                Ok(())
            });
        }
    }
    t
}

fn canonical(tol: &ToleranceProfile) -> Tally {
    let mut t = Tally::default();
    let re = |v: f64| C64::new(v, 0.0);
    let mut jordan = CMat::zeros(2, 2);
    jordan[(0, 1)] = re(1.0);
    t.run("block-diagonal pair", |t| {
        let x = block_diag(&[&diag_c(&[re(1.0), re(2.0)]), &jordan]);
        let y = block_diag(&[&jordan, &diag_c(&[re(3.0), re(4.0)])]);
        let normal = builtin_property("normal", x.nrows())?;
        let v = canonical_decompose(&x, &y, &normal, tol)?;
        t.equal("verdict", v.exists, true);
        if let Some(cells) = &v.cells {
            let expected = [
                [0.0, 0.0, 0.0, 0.0],
                [1.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 1.0],
                [0.0, 0.0, 0.0, 0.0],
            ];
            for (c, e) in cells.iter().zip(expected) {
                let d = diag_c(&e.map(re));
                t.bound("cell distance", (c.matrix() - d).norm(), 1e-6);
            }
        }
        Ok(())
    });
    t.run("swap counterexample", |t| {
        let x = block_diag(&[&diag_c(&[re(5.0)]), &jordan]);
        let mut y = CMat::identity(3, 3);
        y[(0, 0)] = re(0.0);
        y[(1, 1)] = re(0.0);
        y[(0, 1)] = re(1.0);
        y[(1, 0)] = re(1.0);
        let normal = builtin_property("normal", x.nrows())?;
        let v = canonical_decompose(&x, &y, &normal, tol)?;
        t.equal("verdict", v.exists, false);
        t.bound("p_x − diag(1,0,0)", (v.p_x.matrix() - diag_c(&[re(1.0), re(0.0), re(0.0)])).norm(), 1e-8);
        t.bound("‖p_x q_x − q_x‖", v.order_residuals[0], 1e-8);
        Ok(())
    });
    t
}
