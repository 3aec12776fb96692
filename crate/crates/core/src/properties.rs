//! Property specifications: named families of compression-equivariant
//! functionals whose common zero set defines the property.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::functional::{parse_functional, Factor, Functional};
use crate::numeric::{spectral_norm, CMat, ToleranceProfile, C64};
use crate::ring::{corner_embed, power_range_unchecked, Projection, TupleInstance};

/// Names accepted by [`builtin_property`].
pub const BUILTIN_NAMES: [&str; 8] = [
    "normal",
    "partial_isometry",
    "isometry",
    "unitary",
    "coisometry",
    "commuting",
    "doubly_commuting",
    "compatible",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFunctional {
    pub label: String,
    pub functional: Functional,
}

/// A property `P_I`: an element (tuple) has it iff every functional vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertySpec {
    name: String,
    symbols: Vec<String>,
    functionals: Vec<LabeledFunctional>,
}

impl PropertySpec {
    /// Builds a spec from expressions in the functional text syntax.
    pub fn from_expressions(name: &str, symbols: &[String], exprs: &[&str]) -> Result<Self> {
        let functionals = exprs
            .iter()
            .map(|e| {
                Ok(LabeledFunctional {
                    label: e.trim().to_string(),
                    functional: parse_functional(e, symbols)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, symbols.to_vec(), functionals)
    }

    pub fn new(name: &str, symbols: Vec<String>, functionals: Vec<LabeledFunctional>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::Input(format!("property `{name}` has no functionals")));
        }
        if symbols.is_empty() {
            return Err(Error::Input(format!("property `{name}` has no tuple symbols")));
        }
        let needed = functionals
            .iter()
            .map(|f| f.functional.arity())
            .max()
            .unwrap_or(0);
        if needed > symbols.len() {
            return Err(Error::Input(format!(
                "property `{name}` references slot {} but declares {} symbols",
                needed,
                symbols.len()
            )));
        }
        Ok(Self {
            name: name.to_string(),
            symbols,
            functionals,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Number of tuple slots consumed.
    pub fn arity(&self) -> usize {
        self.symbols.len()
    }

    pub fn functionals(&self) -> &[LabeledFunctional] {
        &self.functionals
    }

    pub fn uses_unit(&self) -> bool {
        self.functionals.iter().any(|f| f.functional.uses_unit())
    }

    /// Spec whose functional list is the concatenation of both lists.
    pub fn union(&self, other: &PropertySpec) -> Result<PropertySpec> {
        if self.arity() != other.arity() {
            return Err(Error::Input(format!(
                "cannot combine `{}` (arity {}) with `{}` (arity {})",
                self.name,
                self.arity(),
                other.name,
                other.arity()
            )));
        }
        let mut functionals = self.functionals.clone();
        functionals.extend(other.functionals.iter().cloned());
        PropertySpec::new(
            &format!("{}+{}", self.name, other.name),
            self.symbols.clone(),
            functionals,
        )
    }

    /// Lifts an arity-1 spec to a pair acting on slot `slot`:
    /// `F_{i,slot}(x_0, x_1) := F_i(x_slot)`.
    pub fn lift_to_pair(&self, slot: usize) -> Result<PropertySpec> {
        if self.arity() != 1 || slot > 1 {
            return Err(Error::Input(format!(
                "lifting needs an arity-1 spec and slot 0 or 1 (got arity {}, slot {slot})",
                self.arity()
            )));
        }
        let functionals = self
            .functionals
            .iter()
            .map(|f| LabeledFunctional {
                label: format!("{}@{}", f.label, slot),
                functional: f.functional.remap_slots(|_| slot),
            })
            .collect();
        PropertySpec::new(
            &format!("{}[{}]", self.name, slot),
            vec!["x".into(), "y".into()],
            functionals,
        )
    }

    /// Residual scale `(1 + max_j ‖x_j‖_F)^degree` for functional `i`.
    pub fn scale(&self, i: usize, t: &TupleInstance) -> f64 {
        (1.0 + t.max_norm()).powi(self.functionals[i].functional.degree() as i32)
    }

    fn check_arity(&self, t: &TupleInstance) -> Result<()> {
        if t.len() != self.arity() {
            return Err(Error::ArityMismatch {
                property: self.name.clone(),
                expected: self.arity(),
                found: t.len(),
            });
        }
        Ok(())
    }
}

fn single(label: &str, f: Functional) -> LabeledFunctional {
    LabeledFunctional {
        label: label.to_string(),
        functional: f,
    }
}

fn word(coeff: f64, factors: &[Factor]) -> crate::functional::Term {
    crate::functional::Term {
        coeff: C64::new(coeff, 0.0),
        word: factors.to_vec(),
    }
}

fn binomial(a: &[Factor], b: &[Factor]) -> Functional {
    Functional::new(vec![word(1.0, a), word(-1.0, b)]).expect("nonempty words")
}

/// Instantiates a built-in property for ambient dimension `dim`.
///
/// `compatible` expands to the `dim²` functionals
/// `F_{m,n}(x, y) = [x^m][y^n] − [y^n][x^m]`, `1 ≤ m, n ≤ dim`.
pub fn builtin_property(name: &str, dim: usize) -> Result<PropertySpec> {
    use Factor::{Adj, RangePower, Unit, Var};
    let canonical = name.replace('-', "_");
    let x = || vec!["x".to_string()];
    let xy = || vec!["x".to_string(), "y".to_string()];
    let spec = match canonical.as_str() {
        "normal" => PropertySpec::new(
            "normal",
            x(),
            vec![single("x*x' - x'*x", binomial(&[Var(0), Adj(0)], &[Adj(0), Var(0)]))],
        ),
        "partial_isometry" => PropertySpec::new(
            "partial_isometry",
            x(),
            vec![single(
                "x - x*x'*x",
                binomial(&[Var(0)], &[Var(0), Adj(0), Var(0)]),
            )],
        ),
        "isometry" => PropertySpec::new(
            "isometry",
            x(),
            vec![single("1 - x'*x", binomial(&[Unit], &[Adj(0), Var(0)]))],
        ),
        "coisometry" => PropertySpec::new(
            "coisometry",
            x(),
            vec![single("1 - x*x'", binomial(&[Unit], &[Var(0), Adj(0)]))],
        ),
        "unitary" => PropertySpec::new(
            "unitary",
            x(),
            vec![
                single("1 - x'*x", binomial(&[Unit], &[Adj(0), Var(0)])),
                single("1 - x*x'", binomial(&[Unit], &[Var(0), Adj(0)])),
            ],
        ),
        "commuting" => PropertySpec::new(
            "commuting",
            xy(),
            vec![single("x*y - y*x", binomial(&[Var(0), Var(1)], &[Var(1), Var(0)]))],
        ),
        "doubly_commuting" => PropertySpec::new(
            "doubly_commuting",
            xy(),
            vec![
                single("x*y - y*x", binomial(&[Var(0), Var(1)], &[Var(1), Var(0)])),
                single("x*y' - y'*x", binomial(&[Var(0), Adj(1)], &[Adj(1), Var(0)])),
            ],
        ),
        "compatible" => {
            if dim == 0 {
                return Err(Error::Input("compatible needs dim >= 1".into()));
            }
            let mut fs = Vec::with_capacity(dim * dim);
            for m in 1..=dim {
                for n in 1..=dim {
                    let xm = RangePower { slot: 0, power: m };
                    let yn = RangePower { slot: 1, power: n };
                    fs.push(single(
                        &format!("[x^{m}]*[y^{n}] - [y^{n}]*[x^{m}]"),
                        binomial(&[xm, yn], &[yn, xm]),
                    ));
                }
            }
            PropertySpec::new("compatible", xy(), fs)
        }
        _ => return Err(Error::UnknownProperty(name.to_string())),
    }?;
    Ok(spec)
}

/// Evaluates every functional on raw matrices with the unit symbol bound to
/// `unit`. Range tokens `[x_j^m]` are computed from `unit·x_j`.
pub(crate) fn eval_raw(
    spec: &PropertySpec,
    elements: &[CMat],
    unit: &CMat,
    tol: &ToleranceProfile,
) -> Vec<CMat> {
    let dim = unit.nrows();
    let mut ranges: HashMap<(usize, usize), CMat> = HashMap::new();
    let mut norms: HashMap<usize, f64> = HashMap::new();
    let mut range_power = |slot: usize, power: usize| -> CMat {
        ranges
            .entry((slot, power.min(dim.max(1))))
            .or_insert_with(|| {
                let base = unit * &elements[slot];
                let n2 = *norms.entry(slot).or_insert_with(|| spectral_norm(&base));
                power_range_unchecked(&base, power, n2, tol).matrix().clone()
            })
            .clone()
    };
    spec.functionals
        .iter()
        .map(|lf| {
            let mut acc = CMat::zeros(dim, dim);
            for term in lf.functional.terms() {
                let mut prod: Option<CMat> = None;
                for f in &term.word {
                    let m = match *f {
                        Factor::Var(s) => elements[s].clone(),
                        Factor::Adj(s) => elements[s].adjoint(),
                        Factor::Unit => unit.clone(),
                        Factor::RangePower { slot, power } => range_power(slot, power),
                    };
                    prod = Some(match prod {
                        None => m,
                        Some(p) => p * m,
                    });
                }
                if let Some(p) = prod {
                    acc += p * term.coeff;
                }
            }
            acc
        })
        .collect()
}

/// Values `F_i(t)` with the unit symbol bound to `unit`.
pub fn evaluate(
    spec: &PropertySpec,
    t: &TupleInstance,
    unit: &Projection,
    tol: &ToleranceProfile,
) -> Result<Vec<CMat>> {
    spec.check_arity(t)?;
    crate::numeric::check_dim(t.dim(), unit.dim())?;
    Ok(eval_raw(spec, t.elements(), unit.matrix(), tol))
}

/// Values of the functionals on the corner tuple `p·t`, computed in frame
/// coordinates with the corner unit.
pub fn evaluate_in_corner(
    spec: &PropertySpec,
    t: &TupleInstance,
    p: &Projection,
    tol: &ToleranceProfile,
) -> Result<Vec<CMat>> {
    spec.check_arity(t)?;
    let corner = t.compress(p);
    let k = p.rank();
    Ok(eval_raw(spec, corner.elements(), &CMat::identity(k, k), tol))
}

/// `max_i ‖F_i(p·t, unit := p) − p·F_i(t, unit := 1)‖_F`, the left side computed
/// in the corner of `p` and embedded back.
pub fn equivariance_check(
    spec: &PropertySpec,
    t: &TupleInstance,
    p: &Projection,
    tol: &ToleranceProfile,
) -> Result<f64> {
    spec.check_arity(t)?;
    crate::numeric::check_dim(t.dim(), p.dim())?;
    if !t.commutes_with(p, tol) {
        return Err(Error::Precondition {
            what: "projection does not commute with the tuple".into(),
            residual: t.max_commutation_residual(p),
        });
    }
    let corner_values = evaluate_in_corner(spec, t, p, tol)?;
    let full_values = evaluate(spec, t, &Projection::identity(t.dim()), tol)?;
    Ok(corner_values
        .iter()
        .zip(&full_values)
        .map(|(c, f)| (corner_embed(c, p) - p.matrix() * f).norm())
        .fold(0.0, f64::max))
}

/// Whether every functional vanishes on `t` within `res_rel · scale_i`.
pub fn has_property(spec: &PropertySpec, t: &TupleInstance, tol: &ToleranceProfile) -> Result<bool> {
    let values = evaluate(spec, t, &Projection::identity(t.dim()), tol)?;
    Ok(values
        .iter()
        .enumerate()
        .all(|(i, v)| v.norm() <= tol.res_rel * spec.scale(i, t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[C64]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_row_slice(d))
    }

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn real(n: usize, data: &[f64]) -> CMat {
        CMat::from_row_iterator(n, n, data.iter().map(|&v| re(v)))
    }

    #[test]
    fn builtin_shapes() {
        let n = builtin_property("normal", 4).unwrap();
        assert_eq!((n.functionals().len(), n.arity()), (1, 1));
        let c = builtin_property("compatible", 3).unwrap();
        assert_eq!((c.functionals().len(), c.arity()), (9, 2));
        let u = builtin_property("unitary", 2).unwrap();
        assert_eq!(u.functionals().len(), 2);
        assert!(u.uses_unit());
        assert!(!n.uses_unit());
        assert!(builtin_property("partial-isometry", 2).is_ok());
        assert_eq!(
            builtin_property("hyponormal", 2),
            Err(Error::UnknownProperty("hyponormal".into()))
        );
    }

    #[test]
    fn builtins_match_their_text_form() {
        for name in BUILTIN_NAMES {
            let spec = builtin_property(name, 3).unwrap();
            for lf in spec.functionals() {
                let parsed = parse_functional(&lf.label, spec.symbols()).unwrap();
                assert_eq!(parsed, lf.functional, "{name}: {}", lf.label);
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        let tol = ToleranceProfile::default();
        let normal = builtin_property("normal", 2).unwrap();
        let t = TupleInstance::single(diag(&[re(1.0), C64::new(0.0, 1.0)])).unwrap();
        let v = evaluate(&normal, &t, &Projection::identity(2), &tol).unwrap();
        assert!(v[0].norm() < 1e-15);

        let pi = builtin_property("partial_isometry", 2).unwrap();
        let t = TupleInstance::single(diag(&[re(1.0), re(0.5)])).unwrap();
        let v = evaluate(&pi, &t, &Projection::identity(2), &tol).unwrap();
        assert!((&v[0] - diag(&[re(0.0), re(0.375)])).norm() < 1e-15);

        let compat = builtin_property("compatible", 2).unwrap();
        let t = TupleInstance::pair(
            diag(&[re(1.0), re(0.0)]),
            real(2, &[0.5, 0.5, 0.5, 0.5]),
        )
        .unwrap();
        let v = evaluate(&compat, &t, &Projection::identity(2), &tol).unwrap();
        let expected = real(2, &[0.0, 0.5, -0.5, 0.0]);
        assert!((&v[0] - expected).norm() < 1e-12);
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let tol = ToleranceProfile::default();
        let spec = builtin_property("commuting", 2).unwrap();
        let t = TupleInstance::single(CMat::identity(2, 2)).unwrap();
        assert!(matches!(
            evaluate(&spec, &t, &Projection::identity(2), &tol),
            Err(Error::ArityMismatch { expected: 2, found: 1, .. })
        ));
    }

    #[test]
    fn equivariance_trivial_projections() {
        let tol = ToleranceProfile::default();
        let x = real(3, &[1.0, 2.0, 0.0, 0.0, 1.0, 3.0, 4.0, 0.0, 1.0]);
        let t = TupleInstance::single(x).unwrap();
        for name in ["normal", "partial_isometry", "unitary", "isometry"] {
            let spec = builtin_property(name, 3).unwrap();
            assert!(equivariance_check(&spec, &t, &Projection::identity(3), &tol).unwrap() < 1e-12);
            assert_eq!(
                equivariance_check(&spec, &t, &Projection::zero(3), &tol).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn equivariance_requires_commuting_projection() {
        let tol = ToleranceProfile::default();
        let spec = builtin_property("normal", 2).unwrap();
        let t = TupleInstance::single(real(2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        let p = Projection::from_matrix(&diag(&[re(1.0), re(0.0)])).unwrap();
        assert!(matches!(
            equivariance_check(&spec, &t, &p, &tol),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn compatible_block_equivariance() {
        // x = J ⊕ diag(2), y = diag(1,0) ⊕ diag(3); p = block projection onto the J block
        let tol = ToleranceProfile::default();
        let x = real(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let y = real(3, &[1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 3.0]);
        let t = TupleInstance::pair(x, y).unwrap();
        let p = Projection::from_matrix(&diag(&[re(1.0), re(1.0), re(0.0)])).unwrap();
        let spec = builtin_property("compatible", 3).unwrap();
        assert!(equivariance_check(&spec, &t, &p, &tol).unwrap() <= 1e-10);
    }

    #[test]
    fn user_spec_and_lifting() {
        let syms = vec!["x".to_string(), "y".to_string()];
        let spec = PropertySpec::from_expressions("comm", &syms, &["x*y - y*x"]).unwrap();
        assert_eq!(spec.arity(), 2);
        let normal = builtin_property("normal", 2).unwrap();
        let lifted = normal.lift_to_pair(1).unwrap();
        assert_eq!(lifted.arity(), 2);
        assert_eq!(lifted.functionals()[0].functional.arity(), 2);
        assert!(spec.union(&normal).is_err());
        assert_eq!(spec.union(&lifted).unwrap().functionals().len(), 2);
    }
}
