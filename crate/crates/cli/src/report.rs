use baerdec::Projection;
use serde_json::{json, Value};

/// What a command produced: its exit code and both renderings.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub code: i32,
    pub json: Value,
    pub text: String,
    /// Result projections as matrix-file blocks, written when `--out` is given.
    pub matrices: String,
}

impl Output {
    pub fn new(code: i32, json: Value, text: String) -> Self {
        Self {
            code,
            json,
            text,
            matrices: String::new(),
        }
    }

    pub fn with_matrices(mut self, matrices: String) -> Self {
        self.matrices = matrices;
        self
    }

    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            let mut s = serde_json::to_string_pretty(&self.json).expect("report serializes");
            s.push('\n');
            s
        } else {
            self.text.clone()
        }
    }
}

/// `{"rank": k, "frame": [[[re, im], ...], ...]}`: the orthonormal frame as
/// `dim` complex row vectors of length `k`.
pub fn projection_json(p: &Projection) -> Value {
    let basis = p.frame().basis();
    let rows: Vec<Vec<[f64; 2]>> = (0..basis.nrows())
        .map(|i| (0..basis.ncols()).map(|j| [basis[(i, j)].re, basis[(i, j)].im]).collect())
        .collect();
    json!({ "rank": p.rank(), "frame": rows })
}
