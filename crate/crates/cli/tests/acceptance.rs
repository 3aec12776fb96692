//! One pass/fail line per acceptance criterion, written straight to stderr so
//! the lines show up in a plain `cargo test` run.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use baerdec::engine::{canonical_decompose, max_property_projection};
use baerdec::fixtures::{gen_paper_example, planted_for_property, PaperVariant};
use baerdec::ring::{power_range_projection, Projection};
use baerdec::selfcheck::{run_suite, PLANTED_PROPERTIES};
use baerdec::structure::wold;
use baerdec::{builtin_property, CMat, Error, ToleranceProfile, C64};
use baerdec_cli::suites::{round_trip, ROUND_TRIP_CASES};

const PLANTED_PER_PROPERTY: usize = 200;
const PLANTED_DISTANCE: f64 = 1e-6;
const PLANTED_SECONDS: f64 = 30.0;
const EXAMPLE_TOL: f64 = 1e-10;
const WOLD_TOL: f64 = 1e-8;
const CANONICAL_CELL_TOL: f64 = 1e-6;
const SELFCHECK_SECONDS: f64 = 60.0;

struct Line {
    id: usize,
    passed: bool,
    summary: String,
}

fn report(lines: &[Line]) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err);
    for l in lines {
        let _ = writeln!(
            err,
            "acceptance criterion {:>2}: {} {}",
            l.id,
            if l.passed { "PASS" } else { "FAIL" },
            l.summary
        );
    }
}

fn re(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn diag(d: &[f64]) -> CMat {
    let mut m = CMat::zeros(d.len(), d.len());
    for (i, &v) in d.iter().enumerate() {
        m[(i, i)] = re(v);
    }
    m
}

fn block(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows() + b.nrows();
    let mut m = CMat::zeros(n, n);
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut(a.shape(), b.shape()).copy_from(b);
    m
}

fn jordan() -> CMat {
    let mut j = CMat::zeros(2, 2);
    j[(0, 1)] = re(1.0);
    j
}

fn criterion_1() -> Line {
    let tol = ToleranceProfile::default();
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for property in PLANTED_PROPERTIES {
        for k in 0..PLANTED_PER_PROPERTY {
            let dim = 2 + k % 11;
            let seed = 1_000_003 * (k as u64 + 1);
            let outcome = planted_for_property(property, dim, seed, &tol).and_then(|inst| {
                let spec = builtin_property(property, dim)?;
                let r = max_property_projection(&inst.tuple, &spec, &tol)?;
                Ok((r.projection, inst.expected_projection))
            });
            match outcome {
                Ok((p, expected)) => {
                    let d = p.distance(&expected);
                    worst = worst.max(d);
                    if p.rank() != expected.rank() || d > PLANTED_DISTANCE {
                        failures.push(format!("{property} dim {dim} seed {seed}: rank {} vs {}, distance {d:.2e}", p.rank(), expected.rank()));
                    }
                }
                Err(e) => failures.push(format!("{property} dim {dim} seed {seed}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let total = PLANTED_PROPERTIES.len() * PLANTED_PER_PROPERTY;
    Line {
        id: 1,
        passed: failures.is_empty() && secs < PLANTED_SECONDS,
        summary: format!(
            "planted recovery: {}/{total} exact, max distance {worst:.2e} (≤ {PLANTED_DISTANCE:e}), {secs:.1}s (< {PLANTED_SECONDS}s){}",
            total - failures.len(),
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    }
}

fn from_suite(id: usize, what: &str) -> Line {
    match run_suite(id, 0) {
        Ok(o) => Line {
            id,
            passed: o.passed,
            summary: format!(
                "{what}: {}/{} cases, worst residual/bound {:.2e}{}",
                o.cases - o.failures,
                o.cases,
                o.worst_ratio,
                if o.detail.is_empty() { String::new() } else { format!("; {}", o.detail) }
            ),
        },
        Err(e) => Line {
            id,
            passed: false,
            summary: format!("{what}: {e}"),
        },
    }
}

fn criterion_6() -> Line {
    let tol = ToleranceProfile::default();
    let run = || -> baerdec::Result<Vec<(String, bool)>> {
        let ex = gen_paper_example(PaperVariant::Y, re(1.0), None)?;
        let mut checks = Vec::new();
        let q = max_property_projection(&ex.tuple, &builtin_property("compatible", 9)?, &tol)?.projection;
        let d = q.distance(&Projection::identity(9));
        checks.push((format!("compatibility projection = 1 ({d:.1e})"), q.rank() == 9 && d <= EXAMPLE_TOL));
        let x2 = power_range_projection(ex.x(), 2, &tol)?;
        let expected = ex.coordinate_projection(3, 1).matrix() + ex.coordinate_projection(3, 2).matrix();
        let r = (x2.matrix() - expected).norm();
        checks.push((format!("[x²] = p31 + p32 ({r:.1e})"), r <= EXAMPLE_TOL));
        let x3 = ex.x() * ex.x() * ex.x();
        checks.push(("x³ = 0 exactly".into(), x3.iter().all(|z| *z == re(0.0))));
        let c = (ex.x() * ex.y() - ex.y() * ex.x()).norm();
        checks.push((format!("‖xy − yx‖ = √2 ({:.1e})", (c - 2f64.sqrt()).abs()), (c - 2f64.sqrt()).abs() <= EXAMPLE_TOL));
        let yp = gen_paper_example(PaperVariant::YPrime, C64::new(0.0, 1.0), None)?;
        let mut worst = 0.0f64;
        for n in 1..=9 {
            let a = power_range_projection(ex.y(), n, &tol)?;
            let b = power_range_projection(yp.y(), n, &tol)?;
            worst = worst.max(a.distance(&b));
        }
        checks.push((format!("[y'^n] = [y^n], n ≤ 9 ({worst:.1e})"), worst <= EXAMPLE_TOL));
        Ok(checks)
    };
    match run() {
        Ok(checks) => Line {
            id: 6,
            passed: checks.iter().all(|c| c.1),
            summary: format!(
                "nine-dimensional example: {}",
                checks
                    .iter()
                    .map(|(s, ok)| format!("{}{s}", if *ok { "" } else { "FAILED " }))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        },
        Err(e) => Line {
            id: 6,
            passed: false,
            summary: format!("nine-dimensional example: {e}"),
        },
    }
}

fn criterion_8() -> Line {
    use rand::Rng;
    let tol = ToleranceProfile::default();
    let mut r = baerdec::fixtures::rng(8);
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = r.random_range(1..=10);
        let u = baerdec::fixtures::haar_unitary(n, &mut r);
        match wold(&u, &tol) {
            Ok(w) => {
                let d = w.unitary_projection.distance(&Projection::identity(n));
                worst = worst.max(d);
                if d > WOLD_TOL || w.shift_rank != 0 {
                    bad.push(format!("unitary {k}: distance {d:.2e}, shift rank {}", w.shift_rank));
                }
            }
            Err(e) => bad.push(format!("unitary {k}: {e}")),
        }
        let not_isometry = u * re(1.5);
        if !matches!(wold(&not_isometry, &tol), Err(Error::Precondition { .. })) {
            bad.push(format!("scaled unitary {k} was not rejected"));
        }
    }
    Line {
        id: 8,
        passed: bad.is_empty(),
        summary: format!(
            "Wold collapse: 50 unitaries, max ‖p_u − 1‖ {worst:.2e} (≤ {WOLD_TOL:e}), 50 non-isometries rejected with a precondition error{}",
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).expect("write temp file");
    p
}

fn baerdec(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_baerdec"))
        .args(args)
        .env_remove("BAERDEC_SEED")
        .output()
        .expect("run baerdec");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn criterion_9() -> Line {
    let tol = ToleranceProfile::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let normal = builtin_property("normal", 4).expect("builtin");
    let x = block(&diag(&[1.0, 2.0]), &jordan());
    let y = block(&jordan(), &diag(&[3.0, 4.0]));
    match canonical_decompose(&x, &y, &normal, &tol) {
        Ok(v) if v.exists => {
            let expected = [
                diag(&[0.0, 0.0, 0.0, 0.0]),
                diag(&[1.0, 1.0, 0.0, 0.0]),
                diag(&[0.0, 0.0, 1.0, 1.0]),
                diag(&[0.0, 0.0, 0.0, 0.0]),
            ];
            let cells = v.cells.expect("cells on EXISTS");
            let worst = cells
                .iter()
                .zip(&expected)
                .map(|(c, e)| (c.matrix() - e).norm())
                .fold(0.0, f64::max);
            ok &= worst <= CANONICAL_CELL_TOL;
            notes.push(format!("block pair EXISTS, cell error {worst:.1e}"));
        }
        other => {
            ok = false;
            notes.push(format!("block pair: unexpected {:?}", other.map(|v| v.exists)));
        }
    }

    let x3 = block(&diag(&[5.0]), &jordan());
    let mut swap = CMat::identity(3, 3);
    swap[(0, 0)] = re(0.0);
    swap[(1, 1)] = re(0.0);
    swap[(0, 1)] = re(1.0);
    swap[(1, 0)] = re(1.0);
    let normal3 = builtin_property("normal", 3).expect("builtin");
    match canonical_decompose(&x3, &swap, &normal3, &tol) {
        Ok(v) if !v.exists => {
            let below = v.q_x.order_residual(&v.p_x);
            ok &= below <= WOLD_TOL;
            notes.push(format!("swap NO, ‖p_x q_x − q_x‖ {below:.1e}"));
        }
        other => {
            ok = false;
            notes.push(format!("swap: unexpected {:?}", other.map(|v| v.exists)));
        }
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let mut file = baerdec_cli::matfile::MatrixFile::new();
    file.push("x", x).expect("block");
    file.push("y", y).expect("block");
    let exists = write_file(dir.path(), "exists.mat", &baerdec_cli::matfile::serialize_matrix_file(&file));
    let mut file = baerdec_cli::matfile::MatrixFile::new();
    file.push("x", x3).expect("block");
    file.push("y", swap).expect("block");
    let no = write_file(dir.path(), "swap.mat", &baerdec_cli::matfile::serialize_matrix_file(&file));
    let (c1, o1) = baerdec(&["canonical", "--property", "normal", "--in", exists.to_str().unwrap(), "--names", "x,y"]);
    let (c2, o2) = baerdec(&["canonical", "--property", "normal", "--in", no.to_str().unwrap(), "--names", "x,y"]);
    let cli_ok = c1 == 0 && o1.contains("verdict: EXISTS") && c2 == 1 && o2.contains("verdict: NO");
    ok &= cli_ok;
    notes.push(format!("CLI exit codes {c1} (EXISTS) and {c2} (NO)"));
    Line {
        id: 9,
        passed: ok,
        summary: format!("canonical decomposition: {}", notes.join(", ")),
    }
}

fn criterion_10() -> Line {
    let rt = round_trip(10);
    let start = Instant::now();
    let (code, out) = baerdec(&["selfcheck"]);
    let secs = start.elapsed().as_secs_f64();
    let suites_passed = out.lines().filter(|l| l.starts_with("[PASS] suite")).count();
    let selfcheck_ok = code == 0 && suites_passed >= 9 && secs < SELFCHECK_SECONDS;
    Line {
        id: 10,
        passed: rt.passed && rt.cases == ROUND_TRIP_CASES && selfcheck_ok,
        summary: format!(
            "CLI round trip: {}/{} matrices bit-exact at 17 significant digits; `baerdec selfcheck` exit {code}, {suites_passed} suites passed in {secs:.1}s (< {SELFCHECK_SECONDS}s)",
            rt.cases - rt.failures,
            rt.cases
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let lines = vec![
        criterion_1(),
        from_suite(2, "postconditions on 200 unstructured tuples"),
        from_suite(3, "product law on 100 pairs × {normal, unitary}, {commuting, compatible}"),
        from_suite(4, "quaternary partition on 100 pairs"),
        from_suite(5, "range projections of 100 doubly commuting pairs and reducing projections"),
        criterion_6(),
        from_suite(7, "Halmos–Wallen on 100 power partial isometries"),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    report(&lines);
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
