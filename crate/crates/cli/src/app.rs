use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use baerdec::engine::{
    canonical_decompose, combine_properties, max_property_projection, triple_decompose,
    CellDecomposition, DecompositionReport,
};
use baerdec::fixtures::{gen_paper_example, gen_power_partial_isometry, planted_for_property, PaperVariant};
use baerdec::ring::{left_projection, proj_inf, proj_sup, right_projection};
use baerdec::structure::{defect_identity_residual, defect_projection, halmos_wallen, wold, wold_slocinski, HalmosWallen};
use baerdec::{builtin_property, CMat, Error, Projection, PropertySpec, ToleranceProfile, TupleInstance, C64};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::matfile::{self, parse_matrix_file, serialize_matrix_file, MatrixFile};
use crate::report::{projection_json, Output};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "baerdec",
    version,
    about = "Maximal property projections and cell decompositions of complex matrix tuples"
)]
pub struct Cli {
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true, value_name = "REL")]
    pub tol_rank: Option<f64>,
    /// Relative residual acceptance.
    #[arg(long, global = true, value_name = "REL")]
    pub tol_res: Option<f64>,
    #[arg(long, global = true, env = "BAERDEC_SEED")]
    pub seed: Option<u64>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Matrices to bind to the tuple slots, in order (default: every block in the file).
    #[arg(long, global = true, value_delimiter = ',', value_name = "NAME,...")]
    pub names: Vec<String>,
    /// User-defined functional over the bound names; repeat for several.
    #[arg(long = "functional", global = true, value_name = "EXPR")]
    pub functionals: Vec<String>,
    /// Matrix file to read (default: standard input).
    #[arg(long = "in", global = true, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Matrix file to write: generated instances for `gen`, result projections otherwise (default: standard output for `gen`).
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximal projection for one property.
    Decompose {
        #[arg(long)]
        property: Option<String>,
    },
    /// Cells of several properties (the --functional list counts as one more).
    Combine {
        #[arg(long, value_delimiter = ',')]
        property: Vec<String>,
    },
    /// Doubly commuting / compatible / completely incompatible split of a pair.
    Triple,
    /// Commuting × compatible cells of a pair.
    Quad,
    /// Canonical decomposition test for a pair and a single-element property.
    Canonical {
        #[arg(long)]
        property: Option<String>,
    },
    /// Wold decomposition of an isometry.
    Wold,
    /// Unitary part and truncated-shift multiplicities of a power partial isometry.
    HalmosWallen,
    /// Defect projections [x^m(1-[x])].
    Defect {
        /// Only this power (default: every m < dim).
        #[arg(long)]
        power: Option<usize>,
    },
    /// Four-cell split of a doubly commuting pair of isometries.
    WoldSlocinski,
    /// Left projection [x], or the right projection [x*].
    Leftproj {
        #[arg(long)]
        right: bool,
    },
    /// Supremum or infimum of projections.
    Lattice {
        #[command(subcommand)]
        op: LatticeOp,
    },
    /// Generate instances.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run the invariant suites.
    Selfcheck {
        /// Suites to run (default: all).
        #[arg(long, value_delimiter = ',')]
        suite: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum LatticeOp {
    Sup,
    Inf,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// The nine-dimensional compatible, non-commuting pair.
    PaperExample {
        /// `y` or `y-prime`.
        #[arg(long, default_value = "y")]
        variant: String,
        /// Unit-modulus phase for `y-prime`, e.g. `0+1j`.
        #[arg(long)]
        phase: Option<String>,
    },
    /// Tuple with a known maximal projection (written as `p_expected`).
    Planted {
        #[arg(long)]
        property: String,
        #[arg(long)]
        dim: usize,
    },
    /// Power partial isometry with a known profile.
    Ppi {
        /// Shift lengths and counts, e.g. `3:2,1:1` for two blocks of length 3 and one of length 1.
        #[arg(long, default_value = "")]
        blocks: String,
        #[arg(long, default_value_t = 0)]
        unitary_dim: usize,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InternalConsistency(_) | Error::NumericalInstability { .. } | Error::Generator(_) => {
                EXIT_INTERNAL
            }
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

type Outcome = std::result::Result<Output, Failure>;

struct Ctx<'a> {
    cli: &'a Cli,
    tol: ToleranceProfile,
}

impl Ctx<'_> {
    fn load(&self) -> std::result::Result<MatrixFile, Failure> {
        let (text, source) = match &self.cli.input {
            Some(path) => (
                std::fs::read_to_string(path)
                    .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?,
                path.display().to_string(),
            ),
            None => {
                let mut s = String::new();
                std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
                    .map_err(|e| input_error(format!("cannot read standard input: {e}")))?;
                (s, "<stdin>".to_string())
            }
        };
        parse_matrix_file(&text).map_err(|e| input_error(format!("{source}: {e}")))
    }

    /// The bound matrices and their names.
    fn bind(&self) -> std::result::Result<(Vec<String>, Vec<CMat>), Failure> {
        let file = self.load()?;
        let names = if self.cli.names.is_empty() {
            file.names()
        } else {
            self.cli.names.clone()
        };
        if names.is_empty() {
            return Err(input_error("no matrices to bind"));
        }
        let mats = names
            .iter()
            .map(|n| {
                file.get(n)
                    .cloned()
                    .ok_or_else(|| input_error(format!("no matrix named `{n}` in the input")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok((names, mats))
    }

    fn tuple(&self) -> std::result::Result<(Vec<String>, TupleInstance), Failure> {
        let (names, mats) = self.bind()?;
        let t = TupleInstance::new(mats)?.with_labels(names.clone())?;
        Ok((names, t))
    }

    fn pair(&self) -> std::result::Result<(CMat, CMat), Failure> {
        let (names, mats) = self.bind()?;
        match <[CMat; 2]>::try_from(mats) {
            Ok([x, y]) => Ok((x, y)),
            Err(_) => Err(input_error(format!("this command needs two matrices, got {}", names.len()))),
        }
    }

    fn single(&self) -> std::result::Result<CMat, Failure> {
        let (names, mats) = self.bind()?;
        match <[CMat; 1]>::try_from(mats) {
            Ok([x]) => Ok(x),
            Err(_) => Err(input_error(format!("this command needs one matrix, got {}", names.len()))),
        }
    }

    fn custom_spec(&self, symbols: &[String]) -> std::result::Result<Option<PropertySpec>, Failure> {
        if self.cli.functionals.is_empty() {
            return Ok(None);
        }
        let exprs: Vec<&str> = self.cli.functionals.iter().map(String::as_str).collect();
        Ok(Some(PropertySpec::from_expressions("custom", symbols, &exprs)?))
    }

    /// `--property` or the `--functional` list, exactly one of them.
    fn spec(&self, property: &Option<String>, symbols: &[String], dim: usize) -> std::result::Result<PropertySpec, Failure> {
        match (property, self.custom_spec(symbols)?) {
            (Some(_), Some(_)) => Err(input_error("give either --property or --functional, not both")),
            (Some(p), None) => Ok(builtin_property(p, dim)?),
            (None, Some(s)) => Ok(s),
            (None, None) => Err(input_error("a property is required: --property NAME or --functional EXPR")),
        }
    }

    fn base(&self, verdict: &str) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("tolerance".into(), serde_json::to_value(self.tol).expect("tolerance serializes"));
        m.insert("projection".into(), Value::Null);
        m.insert("residuals".into(), Value::Null);
        m.insert("iterations".into(), Value::Null);
        m.insert("audit".into(), Value::Null);
        m.insert("verdict".into(), json!(verdict));
        m.insert("seed".into(), json!(self.cli.seed));
        m
    }

    fn tol_line(&self) -> String {
        format!(
            "tolerance: rank_rel {:e}, res_rel {:e}",
            self.tol.rank_rel, self.tol.res_rel
        )
    }
}

fn e3(v: f64) -> String {
    format!("{v:.3e}")
}

fn matrix_block(name: &str, m: &CMat) -> String {
    let mut f = MatrixFile::new();
    f.push(name, m.clone()).expect("valid block name");
    serialize_matrix_file(&f)
}

fn projection_block(name: &str, p: &Projection) -> String {
    if p.dim() == 0 {
        return String::new();
    }
    matrix_block(name, p.matrix())
}

fn report_verdict(r: &DecompositionReport) -> &'static str {
    let rank = r.projection.rank();
    if rank == r.projection.dim() {
        "holds"
    } else if rank == 0 {
        "absent"
    } else {
        "split"
    }
}

fn report_json(r: &DecompositionReport, spec: &PropertySpec) -> Value {
    json!({
        "property": r.property,
        "projection": projection_json(&r.projection),
        "residuals": residuals_json(r, spec),
        "iterations": r.iterations,
        "dimension_trace": r.dimension_trace,
        "constraint_rank": r.constraint_rank,
        "commutation_residuals": r.commutation_residuals,
        "audit": r.complement_audit,
        "retried": r.retried,
        "verdict": report_verdict(r),
    })
}

fn residuals_json(r: &DecompositionReport, spec: &PropertySpec) -> Value {
    Value::Array(
        spec.functionals()
            .iter()
            .zip(r.residuals.iter().zip(&r.scales))
            .map(|(f, (res, scale))| json!({"functional": f.label, "residual": res, "scale": scale}))
            .collect(),
    )
}

fn report_text(out: &mut String, blocks: &mut String, r: &DecompositionReport, spec: &PropertySpec, name: &str) {
    let dim = r.projection.dim();
    let _ = writeln!(out, "property: {} ({})", r.property, report_verdict(r));
    let _ = writeln!(out, "rank: {} of {dim}", r.projection.rank());
    let trace: Vec<String> = r.dimension_trace.iter().map(usize::to_string).collect();
    let _ = writeln!(
        out,
        "iterations: {} (constraint rank {}, dimensions {})",
        r.iterations,
        r.constraint_rank,
        trace.join(" -> ")
    );
    for (f, (res, scale)) in spec.functionals().iter().zip(r.residuals.iter().zip(&r.scales)) {
        let _ = writeln!(out, "residual {}: {} (scale {})", f.label, e3(*res), e3(*scale));
    }
    let comm = r.commutation_residuals.iter().cloned().fold(0.0, f64::max);
    let _ = writeln!(out, "commutation residual: {}", e3(comm));
    if let Some(a) = r.complement_audit {
        let _ = writeln!(out, "audit: complement rank {}, residual {}", a.rank, e3(a.residual));
    }
    if r.retried {
        let _ = writeln!(out, "retried with rank_rel {:e}", r.tolerance.rank_rel);
    }
    blocks.push_str(&projection_block(name, &r.projection));
}

fn decompose(ctx: &Ctx, property: &Option<String>) -> Outcome {
    let (names, t) = ctx.tuple()?;
    let spec = ctx.spec(property, &names, t.dim())?;
    let r = max_property_projection(&t, &spec, &ctx.tol)?;
    let mut json = ctx.base(report_verdict(&r));
    json.insert("projection".into(), projection_json(&r.projection));
    json.insert("residuals".into(), residuals_json(&r, &spec));
    json.insert("iterations".into(), json!(r.iterations));
    json.insert("audit".into(), json!(r.complement_audit));
    let mut text = String::new();
    let mut blocks = String::new();
    report_text(&mut text, &mut blocks, &r, &spec, "p");
    let _ = writeln!(text, "{}", ctx.tol_line());
    Ok(Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks))
}

fn cells_output(ctx: &Ctx, d: &CellDecomposition, specs: &[PropertySpec]) -> Output {
    let cells: BTreeMap<String, Value> = d
        .cells
        .iter()
        .map(|c| (c.label(), projection_json(&c.projection)))
        .collect();
    let mut json = ctx.base("partitioned");
    json.insert(
        "residuals".into(),
        json!({
            "commutation": d.commutation_residuals,
            "product_law": d.product_law_residuals,
            "partition": d.partition_residual,
            "orthogonality": d.orthogonality_residual,
        }),
    );
    json.insert("iterations".into(), json!(d.reports.iter().map(|r| r.iterations).collect::<Vec<_>>()));
    json.insert(
        "audit".into(),
        json!(d.reports.iter().map(|r| r.complement_audit).collect::<Vec<_>>()),
    );
    json.insert("properties".into(), json!(d.properties));
    json.insert(
        "reports".into(),
        Value::Array(d.reports.iter().zip(specs).map(|(r, s)| report_json(r, s)).collect()),
    );
    json.insert("cells".into(), json!(cells));

    let mut text = String::new();
    let mut blocks = String::new();
    let _ = writeln!(text, "properties: {}", d.properties.join(", "));
    for (i, (r, name)) in d.reports.iter().zip(&d.properties).enumerate() {
        let _ = writeln!(
            text,
            "p{} ({name}): rank {}, {}",
            i + 1,
            r.projection.rank(),
            report_verdict(r)
        );
    }
    for c in &d.cells {
        let _ = writeln!(text, "cell {}: rank {}", c.label(), c.projection.rank());
    }
    for &(a, b, r) in &d.commutation_residuals {
        let _ = writeln!(text, "commutation p{} p{}: {}", a + 1, b + 1, e3(r));
    }
    for &(a, b, r) in &d.product_law_residuals {
        let _ = writeln!(text, "product law p{} p{}: {}", a + 1, b + 1, e3(r));
    }
    let _ = writeln!(text, "partition residual: {}", e3(d.partition_residual));
    let _ = writeln!(text, "orthogonality residual: {}", e3(d.orthogonality_residual));
    for c in &d.cells {
        blocks.push_str(&projection_block(&format!("cell_{}", c.label()), &c.projection));
    }
    let _ = writeln!(text, "{}", ctx.tol_line());
    Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks)
}

fn combine(ctx: &Ctx, properties: &[String]) -> Outcome {
    let (names, t) = ctx.tuple()?;
    let mut specs = properties
        .iter()
        .map(|p| builtin_property(p, t.dim()))
        .collect::<baerdec::Result<Vec<_>>>()?;
    if let Some(s) = ctx.custom_spec(&names)? {
        specs.push(s);
    }
    if specs.is_empty() {
        return Err(input_error("combine needs --property NAME,... or --functional EXPR"));
    }
    let d = combine_properties(&t, &specs, &ctx.tol)?;
    Ok(cells_output(ctx, &d, &specs))
}

fn quad(ctx: &Ctx) -> Outcome {
    let (x, y) = ctx.pair()?;
    let t = TupleInstance::pair(x, y)?;
    let specs = [
        builtin_property("commuting", t.dim())?,
        builtin_property("compatible", t.dim())?,
    ];
    let d = combine_properties(&t, &specs, &ctx.tol)?;
    Ok(cells_output(ctx, &d, &specs))
}

fn triple(ctx: &Ctx) -> Outcome {
    let (x, y) = ctx.pair()?;
    let d = triple_decompose(&x, &y, &ctx.tol)?;
    let dim = x.nrows();
    let labels = ["doubly_commuting", "compatible_only", "incompatible"];
    let mut json = ctx.base("partitioned");
    json.insert("projection".into(), projection_json(&d.compatible.projection));
    json.insert("residuals".into(), json!({"order": d.order_residual}));
    json.insert(
        "iterations".into(),
        json!([d.doubly_commuting.iterations, d.compatible.iterations]),
    );
    json.insert(
        "audit".into(),
        json!([d.doubly_commuting.complement_audit, d.compatible.complement_audit]),
    );
    let summands: BTreeMap<&str, Value> = labels
        .iter()
        .zip(&d.summands)
        .map(|(l, p)| (*l, projection_json(p)))
        .collect();
    json.insert("summands".into(), json!(summands));

    let mut text = String::new();
    let mut blocks = String::new();
    let _ = writeln!(text, "doubly commuting part p: rank {} of {dim}", d.summands[0].rank());
    let _ = writeln!(text, "compatible part q: rank {} of {dim}", d.compatible.projection.rank());
    let _ = writeln!(text, "summands p, q - p, 1 - q: ranks {}, {}, {}", d.summands[0].rank(), d.summands[1].rank(), d.summands[2].rank());
    let _ = writeln!(text, "order residual ‖qp - p‖: {}", e3(d.order_residual));
    for (l, p) in labels.iter().zip(&d.summands) {
        blocks.push_str(&projection_block(l, p));
    }
    let _ = writeln!(text, "{}", ctx.tol_line());
    Ok(Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks))
}

fn canonical(ctx: &Ctx, property: &Option<String>) -> Outcome {
    let (names, mats) = ctx.bind()?;
    let [x, y] = <[CMat; 2]>::try_from(mats)
        .map_err(|_| input_error(format!("canonical needs two matrices, got {}", names.len())))?;
    // The spec is over a single element, named after the first bound matrix.
    let spec = ctx.spec(property, &names[..1], x.nrows())?;
    let v = canonical_decompose(&x, &y, &spec, &ctx.tol)?;
    let verdict = if v.exists { "EXISTS" } else { "NO" };
    let mut json = ctx.base(verdict);
    json.insert("projection".into(), projection_json(&v.p_x));
    json.insert(
        "residuals".into(),
        json!({"commutation": v.commutation_residuals, "order": v.order_residuals}),
    );
    json.insert(
        "projections".into(),
        json!({
            "p_x": projection_json(&v.p_x),
            "p_y": projection_json(&v.p_y),
            "q_x": projection_json(&v.q_x),
            "q_y": projection_json(&v.q_y),
        }),
    );
    let cell_labels = ["11", "10", "01", "00"];
    json.insert(
        "cells".into(),
        match &v.cells {
            Some(cells) => json!(cell_labels
                .iter()
                .zip(cells)
                .map(|(l, p)| (l.to_string(), projection_json(p)))
                .collect::<BTreeMap<_, _>>()),
            None => Value::Null,
        },
    );
    let mut text = String::new();
    let mut blocks = String::new();
    let _ = writeln!(text, "verdict: {verdict}");
    let _ = writeln!(
        text,
        "ranks: p_x {}, p_y {}, q_x {}, q_y {}",
        v.p_x.rank(),
        v.p_y.rank(),
        v.q_x.rank(),
        v.q_y.rank()
    );
    let comm: Vec<String> = v.commutation_residuals.iter().map(|r| e3(*r)).collect();
    let _ = writeln!(text, "commutation residuals (p_x x, p_x y, p_y x, p_y y): {}", comm.join(", "));
    let _ = writeln!(
        text,
        "order residuals ‖p_x q_x - q_x‖, ‖p_y q_y - q_y‖: {}, {}",
        e3(v.order_residuals[0]),
        e3(v.order_residuals[1])
    );
    if let Some(cells) = &v.cells {
        for (l, p) in cell_labels.iter().zip(cells) {
            let _ = writeln!(text, "cell {l}: rank {}", p.rank());
        }
        for (l, p) in cell_labels.iter().zip(cells) {
            blocks.push_str(&projection_block(&format!("p_{l}"), p));
        }
    }
    let _ = writeln!(text, "{}", ctx.tol_line());
    let code = if v.exists { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(Output::new(code, Value::Object(json), text).with_matrices(blocks))
}

fn wold_cmd(ctx: &Ctx) -> Outcome {
    let x = ctx.single()?;
    let w = wold(&x, &ctx.tol)?;
    let mut json = ctx.base("unitary");
    json.insert("projection".into(), projection_json(&w.unitary_projection));
    json.insert("residuals".into(), json!({"isometry_defect": w.isometry_defect}));
    json.insert("shift_rank".into(), json!(w.shift_rank));
    let mut text = String::new();
    let mut blocks = String::new();
    let _ = writeln!(text, "unitary part: rank {} of {}", w.unitary_projection.rank(), x.nrows());
    let _ = writeln!(text, "shift rank: {}", w.shift_rank);
    let _ = writeln!(text, "isometry defect ‖x*x - 1‖: {}", e3(w.isometry_defect));
    blocks.push_str(&projection_block("p_u", &w.unitary_projection));
    let _ = writeln!(text, "{}", ctx.tol_line());
    Ok(Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks))
}

fn halmos_wallen_cmd(ctx: &Ctx) -> Outcome {
    let x = ctx.single()?;
    match halmos_wallen(&x, &ctx.tol)? {
        HalmosWallen::Profile(p) => {
            let mut json = ctx.base("power_partial_isometry");
            json.insert("projection".into(), projection_json(&p.unitary_projection));
            let mults: BTreeMap<String, usize> =
                p.multiplicities.iter().map(|(k, m)| (k.to_string(), *m)).collect();
            json.insert("multiplicities".into(), json!(mults));
            let mut text = String::new();
            let mut blocks = String::new();
            let _ = writeln!(text, "unitary part: rank {} of {}", p.unitary_projection.rank(), p.dim);
            if p.multiplicities.is_empty() {
                let _ = writeln!(text, "truncated shifts: none");
            }
            for (k, m) in &p.multiplicities {
                let _ = writeln!(text, "truncated shifts of length {k}: {m}");
            }
            blocks.push_str(&projection_block("p_u", &p.unitary_projection));
            let _ = writeln!(text, "{}", ctx.tol_line());
            Ok(Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks))
        }
        HalmosWallen::NotPowerPartialIsometry { power, residual } => {
            let mut json = ctx.base("not_power_partial_isometry");
            json.insert("residuals".into(), json!({"power": power, "residual": residual}));
            let text = format!(
                "not a power partial isometry: x^{power} is not a partial isometry (residual {})\n",
                e3(residual)
            );
            Ok(Output::new(EXIT_NEGATIVE, Value::Object(json), text))
        }
    }
}

fn defect_cmd(ctx: &Ctx, power: Option<usize>) -> Outcome {
    let x = ctx.single()?;
    let powers: Vec<usize> = match power {
        Some(m) => vec![m],
        None => (0..x.nrows()).collect(),
    };
    let mut json = ctx.base("computed");
    let mut entries = Vec::new();
    let mut text = String::new();
    let mut blocks = String::new();
    for &m in &powers {
        let p = defect_projection(&x, m, &ctx.tol)?;
        let r = defect_identity_residual(&x, m, &ctx.tol)?;
        let _ = writeln!(text, "[x^{m}(1-[x])]: rank {}, ‖· - ([x^{m}] - [x^{}])‖ = {}", p.rank(), m + 1, e3(r));
        blocks.push_str(&projection_block(&format!("d_{m}"), &p));
        entries.push(json!({"power": m, "projection": projection_json(&p), "identity_residual": r}));
    }
    if let [single] = entries.as_slice() {
        json.insert("projection".into(), single["projection"].clone());
    }
    json.insert(
        "residuals".into(),
        json!(entries.iter().map(|e| e["identity_residual"].clone()).collect::<Vec<_>>()),
    );
    json.insert("defects".into(), Value::Array(entries));
    let _ = writeln!(text, "{}", ctx.tol_line());
    Ok(Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks))
}

fn wold_slocinski_cmd(ctx: &Ctx) -> Outcome {
    let (x, y) = ctx.pair()?;
    let ws = wold_slocinski(&x, &y, &ctx.tol)?;
    let passed = ws.all_passed();
    let mut json = ctx.base(if passed { "identities_hold" } else { "identity_failed" });
    let cells = [("uu", ws.p_uu()), ("us", ws.p_us()), ("su", ws.p_su()), ("ss", ws.p_ss())];
    json.insert(
        "cells".into(),
        json!(cells
            .iter()
            .map(|(l, p)| (l.to_string(), projection_json(p)))
            .collect::<BTreeMap<_, _>>()),
    );
    json.insert("residuals".into(), json!(ws.identities));
    let mut text = String::new();
    let mut blocks = String::new();
    for (l, p) in &cells {
        let _ = writeln!(text, "p_{l}: rank {}", p.rank());
    }
    for c in &ws.identities {
        let _ = writeln!(
            text,
            "{} {}: {} (threshold {}){}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            e3(c.residual),
            e3(c.threshold),
            if c.extended { " [extended]" } else { "" }
        );
    }
    for (l, p) in &cells {
        blocks.push_str(&projection_block(&format!("p_{l}"), p));
    }
    let _ = writeln!(text, "{}", ctx.tol_line());
    let code = if passed { EXIT_OK } else { EXIT_INTERNAL };
    Ok(Output::new(code, Value::Object(json), text).with_matrices(blocks))
}

fn leftproj(ctx: &Ctx, right: bool) -> Outcome {
    let x = ctx.single()?;
    let p = if right {
        right_projection(&x, &ctx.tol)?
    } else {
        left_projection(&x, &ctx.tol)?
    };
    let residual = if right { (&x * p.matrix() - &x).norm() } else { (p.matrix() * &x - &x).norm() };
    let mut json = ctx.base("computed");
    json.insert("projection".into(), projection_json(&p));
    json.insert("residuals".into(), json!({"annihilation": residual}));
    let name = if right { "right" } else { "left" };
    let text = format!(
        "{name} projection: rank {} of {}\nresidual {}: {}\n",
        p.rank(),
        x.nrows(),
        if right { "‖x[x*] - x‖" } else { "‖[x]x - x‖" },
        e3(residual)
    );
    let mut blocks = String::new();
    blocks.push_str(&projection_block(name, &p));
    Ok(Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks))
}

fn lattice(ctx: &Ctx, op: LatticeOp) -> Outcome {
    let (names, mats) = ctx.bind()?;
    let dim = mats[0].nrows();
    let mut ps = Vec::with_capacity(mats.len());
    for (name, m) in names.iter().zip(&mats) {
        if m.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: m.nrows() }.into());
        }
        let defect = (m * m - m).norm() + (m.adjoint() - m).norm();
        if defect > ctx.tol.res_rel * (1.0 + m.norm()) * dim as f64 {
            return Err(Error::Precondition {
                what: format!("`{name}` is not a projection"),
                residual: defect,
            }
            .into());
        }
        ps.push(Projection::from_matrix(m)?);
    }
    let (p, label) = match op {
        LatticeOp::Sup => (proj_sup(dim, &ps, &ctx.tol)?, "sup"),
        LatticeOp::Inf => (proj_inf(dim, &ps, &ctx.tol)?, "inf"),
    };
    let mut json = ctx.base("computed");
    json.insert("projection".into(), projection_json(&p));
    let text = format!("{label} of {}: rank {} of {dim}\n", names.join(", "), p.rank());
    let mut blocks = String::new();
    blocks.push_str(&projection_block(label, &p));
    Ok(Output::new(EXIT_OK, Value::Object(json), text).with_matrices(blocks))
}

fn parse_phase(text: &str) -> std::result::Result<C64, Failure> {
    matfile::parse_entry(text.trim())
        .map_err(|(col, msg)| input_error(format!("--phase, column {}: {msg}", col + 1)))
}

fn parse_blocks(text: &str) -> std::result::Result<BTreeMap<usize, usize>, Failure> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, m) = part
            .split_once(':')
            .ok_or_else(|| input_error(format!("--blocks entry `{part}` is not LENGTH:COUNT")))?;
        let k: usize = k.trim().parse().map_err(|_| input_error(format!("bad block length in `{part}`")))?;
        let m: usize = m.trim().parse().map_err(|_| input_error(format!("bad block count in `{part}`")))?;
        *out.entry(k).or_insert(0) += m;
    }
    Ok(out)
}

fn slot_names(ctx: &Ctx, defaults: &[&str]) -> std::result::Result<Vec<String>, Failure> {
    if ctx.cli.names.is_empty() {
        return Ok(defaults.iter().map(|s| s.to_string()).collect());
    }
    if ctx.cli.names.len() != defaults.len() {
        return Err(input_error(format!(
            "--names must list {} name(s) for this generator",
            defaults.len()
        )));
    }
    Ok(ctx.cli.names.clone())
}

fn emit(ctx: &Ctx, file: MatrixFile, mut json: serde_json::Map<String, Value>, summary: String) -> Outcome {
    let text = serialize_matrix_file(&file);
    match &ctx.cli.out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
            json.insert("file".into(), json!(path.display().to_string()));
            json.insert("names".into(), json!(file.names()));
            Ok(Output::new(EXIT_OK, Value::Object(json), format!("{summary}wrote {}\n", path.display())))
        }
        None => {
            json.insert("names".into(), json!(file.names()));
            json.insert("matrices".into(), json!(text));
            Ok(Output::new(EXIT_OK, Value::Object(json), format!("# {}\n{text}", summary.trim_end())))
        }
    }
}

fn gen(ctx: &Ctx, what: &GenCommand) -> Outcome {
    match what {
        GenCommand::PaperExample { variant, phase } => {
            let variant = match variant.replace('_', "-").as_str() {
                "y" => PaperVariant::Y,
                "y-prime" => PaperVariant::YPrime,
                other => return Err(input_error(format!("unknown variant `{other}`; use y or y-prime"))),
            };
            let phase = match phase {
                Some(p) => parse_phase(p)?,
                None if variant == PaperVariant::YPrime => C64::new(0.0, 1.0),
                None => C64::new(1.0, 0.0),
            };
            let ex = gen_paper_example(variant, phase, ctx.cli.seed)?;
            let names = slot_names(ctx, &["x", "y"])?;
            let mut file = MatrixFile::new();
            for (n, m) in names.iter().zip(ex.tuple.elements()) {
                file.push(n, m.clone()).map_err(input_error)?;
            }
            let json = ctx.base("generated");
            Ok(emit(ctx, file, json, format!("nine-dimensional example, phase {phase}\n"))?)
        }
        GenCommand::Planted { property, dim } => {
            let seed = ctx.cli.seed.unwrap_or(0);
            let inst = planted_for_property(property, *dim, seed, &ctx.tol)?;
            let defaults: &[&str] = if inst.tuple.len() == 1 { &["x"] } else { &["x", "y"] };
            let names = slot_names(ctx, defaults)?;
            let mut file = MatrixFile::new();
            for (n, m) in names.iter().zip(inst.tuple.elements()) {
                file.push(n, m.clone()).map_err(input_error)?;
            }
            file.push("p_expected", inst.expected_projection.matrix().clone())
                .map_err(input_error)?;
            let mut json = ctx.base("generated");
            json.insert("seed".into(), json!(seed));
            json.insert("projection".into(), projection_json(&inst.expected_projection));
            Ok(emit(ctx, file, json, format!("{}, expected rank {}\n", inst.description, inst.expected_projection.rank()))?)
        }
        GenCommand::Ppi { blocks, unitary_dim } => {
            let seed = ctx.cli.seed.unwrap_or(0);
            let mults = parse_blocks(blocks)?;
            let (x, profile) = gen_power_partial_isometry(&mults, *unitary_dim, seed)?;
            let names = slot_names(ctx, &["x"])?;
            let mut file = MatrixFile::new();
            file.push(&names[0], x).map_err(input_error)?;
            file.push("p_u", profile.unitary_projection.matrix().clone())
                .map_err(input_error)?;
            let mut json = ctx.base("generated");
            json.insert("seed".into(), json!(seed));
            json.insert("projection".into(), projection_json(&profile.unitary_projection));
            let m: BTreeMap<String, usize> =
                profile.multiplicities.iter().map(|(k, m)| (k.to_string(), *m)).collect();
            json.insert("multiplicities".into(), json!(m));
            Ok(emit(ctx, file, json, format!("power partial isometry of dimension {}\n", profile.dim))?)
        }
    }
}

fn selfcheck(ctx: &Ctx, suites: &[usize]) -> Outcome {
    let seed = ctx.cli.seed.unwrap_or(0);
    let ids: Vec<usize> = if suites.is_empty() { (1..=crate::suites::SUITE_COUNT).collect() } else { suites.to_vec() };
    let mut outcomes = Vec::with_capacity(ids.len());
    for id in ids {
        outcomes.push(crate::suites::run(id, seed)?);
    }
    let all = outcomes.iter().all(|o| o.passed);
    let mut json = ctx.base(if all { "pass" } else { "fail" });
    json.insert("seed".into(), json!(seed));
    json.insert("suites".into(), json!(outcomes));
    let mut text = String::new();
    for o in &outcomes {
        let _ = writeln!(text, "{}", o.line());
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(text, "{passed}/{} suites passed (seed {seed})", outcomes.len());
    Ok(Output::new(if all { EXIT_OK } else { EXIT_INTERNAL }, Value::Object(json), text))
}

fn tolerance(cli: &Cli) -> std::result::Result<ToleranceProfile, Failure> {
    let d = ToleranceProfile::default();
    Ok(ToleranceProfile::new(
        cli.tol_rank.unwrap_or(d.rank_rel),
        cli.tol_res.unwrap_or(d.res_rel),
        d.max_iter_slack,
    )?)
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Outcome {
    let ctx = Ctx {
        cli,
        tol: tolerance(cli)?,
    };
    let mut out = match &cli.command {
        Command::Gen { what } => return gen(&ctx, what),
        Command::Selfcheck { suite } => return selfcheck(&ctx, suite),
        Command::Decompose { property } => decompose(&ctx, property),
        Command::Combine { property } => combine(&ctx, property),
        Command::Triple => triple(&ctx),
        Command::Quad => quad(&ctx),
        Command::Canonical { property } => canonical(&ctx, property),
        Command::Wold => wold_cmd(&ctx),
        Command::HalmosWallen => halmos_wallen_cmd(&ctx),
        Command::Defect { power } => defect_cmd(&ctx, *power),
        Command::WoldSlocinski => wold_slocinski_cmd(&ctx),
        Command::Leftproj { right } => leftproj(&ctx, *right),
        Command::Lattice { op } => lattice(&ctx, *op),
    }?;
    if let Some(path) = &cli.out {
        std::fs::write(path, &out.matrices)
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
        let _ = writeln!(out.text, "wrote {}", path.display());
        if let Value::Object(m) = &mut out.json {
            m.insert("file".into(), json!(path.display().to_string()));
        }
    }
    Ok(out)
}
