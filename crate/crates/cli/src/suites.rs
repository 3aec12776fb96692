//! The core invariant suites plus the file-format round trip.

use std::time::Instant;

use baerdec::fixtures::rng;
use baerdec::selfcheck::{run_suite, SuiteOutcome};
use baerdec::{CMat, C64};
use rand::Rng;

use crate::app::Failure;
use crate::matfile::{parse_matrix_file, serialize_matrix_file, MatrixFile};

pub const SUITE_COUNT: usize = 10;
pub const ROUND_TRIP_CASES: usize = 1000;

pub fn run(id: usize, seed: u64) -> Result<SuiteOutcome, Failure> {
    match id {
        10 => Ok(round_trip(seed)),
        _ => run_suite(id, seed).map_err(Failure::from),
    }
}

/// Finite doubles spread over the whole exponent range, with some exact
/// zeros, negative zeros and subnormals.
fn random_double(r: &mut impl Rng) -> f64 {
    match r.random_range(0..10) {
        0 => 0.0,
        1 => -0.0,
        2 => f64::from_bits(r.random_range(1..(1u64 << 52))) * if r.random_bool(0.5) { -1.0 } else { 1.0 },
        3 | 4 => loop {
            let v = f64::from_bits(r.random());
            if v.is_finite() {
                break v;
            }
        },
        _ => r.random_range(-1.0..1.0) * 10f64.powi(r.random_range(-20..=20)),
    }
}

pub fn random_matrix(n: usize, r: &mut impl Rng) -> CMat {
    CMat::from_fn(n, n, |_, _| C64::new(random_double(r), random_double(r)))
}

/// `serialize ∘ parse` reproduces every bit of `ROUND_TRIP_CASES` random matrices.
pub fn round_trip(seed: u64) -> SuiteOutcome {
    let start = Instant::now();
    let mut r = rng(seed ^ 0x5eed_f11e);
    let mut failures = 0;
    let mut detail = String::new();
    for k in 0..ROUND_TRIP_CASES {
        let n = r.random_range(1..=6);
        let m = random_matrix(n, &mut r);
        let mut f = MatrixFile::new();
        f.push("m", m.clone()).expect("valid block");
        let text = serialize_matrix_file(&f);
        let ok = match parse_matrix_file(&text) {
            Ok(back) => back.get("m").is_some_and(|g| {
                g.iter()
                    .zip(m.iter())
                    .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
            }),
            Err(e) => {
                if detail.is_empty() {
                    detail = format!("case {k}: {e}");
                }
                false
            }
        };
        if !ok {
            failures += 1;
            if detail.is_empty() {
                detail = format!("case {k}: bits changed");
            }
        }
    }
    SuiteOutcome {
        id: 10,
        name: "matrix file round trip".into(),
        passed: failures == 0,
        cases: ROUND_TRIP_CASES,
        failures,
        worst_ratio: if failures == 0 { 0.0 } else { f64::INFINITY },
        detail,
        elapsed_secs: start.elapsed().as_secs_f64(),
    }
}
