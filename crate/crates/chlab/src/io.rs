//! JSON forms of functions, ψ weights and quadrature settings, plus the
//! built-in function names.

use std::fmt;

use chlab_core::bounds::{BlowupFit, SweepRecord};
use chlab_core::functions::{indicator, make_f0, make_f_delta_theta, make_g_plus, power_log};
use chlab_core::norms::natural_psi_with;
use chlab_core::{FunctionSpec, OperatorParams, Piece, PsiFunction, QuadratureSpec};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::table::{json_float, Cell, Table};

/// A real that may be written as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                match v {
                    "inf" | "+inf" | "Infinity" | "infinity" => Ok(Real(f64::INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn one() -> f64 {
    1.0
}

/// `c·x^a·|ln x|^theta` on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceJson {
    pub lo: Real,
    pub hi: Real,
    pub a: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "one")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionJson {
    pub pieces: Vec<PieceJson>,
    /// Optional cross-check of the power of the piece touching 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infinity_exponent: Option<f64>,
}

impl FunctionJson {
    pub fn to_spec(&self) -> Result<FunctionSpec, CliError> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.lo.0, p.hi.0, p.a, p.theta, p.c))
            .collect();
        let f = FunctionSpec::new(pieces)?;
        check_declared("0", self.zero_exponent, f.declared_zero_exponent())?;
        check_declared("infinity", self.infinity_exponent, f.declared_infinity_exponent())?;
        Ok(f)
    }

    pub fn from_spec(f: &FunctionSpec) -> Self {
        FunctionJson {
            pieces: f
                .pieces()
                .iter()
                .map(|p| PieceJson {
                    lo: Real(p.lo),
                    hi: Real(p.hi),
                    a: p.power,
                    theta: p.log_power,
                    c: p.scale,
                })
                .collect(),
            zero_exponent: f.declared_zero_exponent(),
            infinity_exponent: f.declared_infinity_exponent(),
        }
    }
}

fn check_declared(at: &str, declared: Option<f64>, actual: Option<f64>) -> Result<(), CliError> {
    match declared {
        Some(d) if Some(d) != actual => Err(CliError::Compute(chlab_core::Error::Domain(format!(
            "declared exponent {d} at {at} disagrees with the pieces ({actual:?})"
        )))),
        _ => Ok(()),
    }
}

/// A function given by built-in name or as a JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionRef {
    Name(String),
    Spec(FunctionJson),
}

impl FunctionRef {
    pub fn resolve(&self, params: &OperatorParams) -> Result<FunctionSpec, CliError> {
        match self {
            FunctionRef::Name(n) => builtin_function(n, params),
            FunctionRef::Spec(j) => j.to_spec(),
        }
    }
}

fn num_arg(name: &str, s: &str) -> Result<f64, CliError> {
    s.parse()
        .map_err(|_| CliError::Config(format!("function {name}: '{s}' is not a number")))
}

/// `f0`, `fdeltatheta[:theta]`, `gplus`, `indicator[:lo:hi]`, `power:a`,
/// `powerlog:a:theta`. The power families live on all of `(0, ∞)`.
pub fn builtin_function(name: &str, params: &OperatorParams) -> Result<FunctionSpec, CliError> {
    let parts: Vec<&str> = name.split(':').collect();
    let f = match parts.as_slice() {
        ["f0"] => make_f0(params),
        ["gplus"] => make_g_plus(params),
        ["fdeltatheta"] => make_f_delta_theta(params, 0.0)?,
        ["fdeltatheta", t] => make_f_delta_theta(params, num_arg(name, t)?)?,
        ["indicator"] => indicator(0.0, 1.0)?,
        ["indicator", lo, hi] => indicator(num_arg(name, lo)?, parse_bound(name, hi)?)?,
        ["power", a] => power_log(num_arg(name, a)?, 0.0)?,
        ["powerlog", a, t] => power_log(num_arg(name, a)?, num_arg(name, t)?)?,
        _ => {
            return Err(CliError::Config(format!(
                "unknown function '{name}'; expected f0, fdeltatheta[:theta], gplus, \
                 indicator[:lo:hi], power:a or powerlog:a:theta"
            )))
        }
    };
    Ok(f)
}

fn parse_bound(name: &str, s: &str) -> Result<f64, CliError> {
    if s == "inf" {
        Ok(f64::INFINITY)
    } else {
        num_arg(name, s)
    }
}

/// JSON form of a ψ weight on `(A, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PsiJson {
    Constant {
        support: [Real; 2],
        #[serde(default = "one")]
        value: f64,
    },
    /// `c·p^exponent`.
    Power {
        support: [Real; 2],
        #[serde(default = "one")]
        c: f64,
        exponent: f64,
    },
    /// `ψ_f(p) = |f|_p`; `f` defaults to the run's function.
    Natural {
        support: [Real; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        function: Option<FunctionRef>,
    },
}

impl PsiJson {
    pub fn to_psi(
        &self,
        params: &OperatorParams,
        run_function: Option<&FunctionSpec>,
        spec: &QuadratureSpec,
    ) -> Result<PsiFunction, CliError> {
        let psi = match self {
            PsiJson::Constant { support, value } => PsiFunction::constant(support[0].0, support[1].0, *value)?,
            PsiJson::Power { support, c, exponent } => {
                PsiFunction::power(support[0].0, support[1].0, *c, *exponent)?
            }
            PsiJson::Natural { support, function } => {
                let f = match function {
                    Some(r) => r.resolve(params)?,
                    None => run_function
                        .cloned()
                        .ok_or_else(|| CliError::Config("a natural ψ needs a function".into()))?,
                };
                natural_psi_with(&f, support[0].0, support[1].0, spec)?
            }
        };
        Ok(psi)
    }
}

/// Optional overrides of [`QuadratureSpec`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_cut: Option<f64>,
}

impl QuadJson {
    pub fn to_spec(&self) -> Result<QuadratureSpec, CliError> {
        let d = QuadratureSpec::default();
        Ok(QuadratureSpec::new(
            self.rel_tol.unwrap_or(d.rel_tol),
            self.abs_tol.unwrap_or(d.abs_tol),
            self.max_nodes.unwrap_or(d.max_nodes),
            self.tail_cut.unwrap_or(d.tail_cut),
        )?)
    }
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "p",
    "q",
    "f_norm",
    "image_norm",
    "ratio",
    "upper_bound",
    "error_estimate",
    "error",
];

/// Sweep results in input order; a failed point keeps its `p` and carries
/// the error text.
pub fn sweep_table(p_list: &[f64], records: &[chlab_core::Result<SweepRecord>]) -> Table {
    let mut t = Table::new(&SWEEP_COLUMNS);
    for (p, r) in p_list.iter().zip(records) {
        t.push(match r {
            Ok(r) => vec![
                r.p.into(),
                r.q.into(),
                r.f_norm.into(),
                r.image_norm.into(),
                r.ratio.into(),
                r.upper_bound.into(),
                r.error_estimate.into(),
                Cell::Empty,
            ],
            Err(e) => {
                let mut row = vec![Cell::Num(*p)];
                row.extend(std::iter::repeat_n(Cell::Empty, 6));
                row.push(e.to_string().into());
                row
            }
        });
    }
    t
}

/// Successful records of a sweep CSV, in file order.
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRecord>, CliError> {
    use crate::table::parse_float;
    let bad = |e: csv::Error| CliError::Config(format!("sweep CSV: {e}"));
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rd.headers().map_err(bad)?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(ip), Some(ir)) = (col("p"), col("ratio")) else {
        return Err(CliError::Config("sweep CSV needs at least the columns p and ratio".into()));
    };
    let ie = col("error");
    let mut out = Vec::new();
    for (n, row) in rd.records().enumerate() {
        let row = row.map_err(bad)?;
        if ie.and_then(|i| row.get(i)).is_some_and(|s| !s.is_empty()) {
            continue;
        }
        let get = |i: Option<usize>| i.and_then(|i| row.get(i)).and_then(parse_float).unwrap_or(f64::NAN);
        let p = get(Some(ip));
        if !p.is_finite() {
            return Err(CliError::Config(format!("sweep CSV row {}: bad p", n + 2)));
        }
        out.push(SweepRecord {
            p,
            q: get(col("q")),
            f_norm: get(col("f_norm")),
            image_norm: get(col("image_norm")),
            ratio: get(Some(ir)),
            upper_bound: get(col("upper_bound")),
            error_estimate: get(col("error_estimate")),
        });
    }
    Ok(out)
}

pub fn fit_json(fit: &BlowupFit, endpoint: f64, expected: f64) -> Value {
    json!({
        "fitted_exponent": json_float(fit.fitted_exponent),
        "fitted_constant": json_float(fit.fitted_constant),
        "residual": json_float(fit.residual),
        "endpoint": json_float(endpoint),
        "expected_exponent": json_float(expected),
        "p_points": fit.p_points.iter().map(|p| json_float(*p)).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> OperatorParams {
        OperatorParams::new(0.3, 0.2, 0.2).unwrap()
    }

    #[test]
    fn function_json_round_trip() {
        let text = r#"{"pieces":[{"lo":0,"hi":1,"a":-0.3},{"lo":1,"hi":"inf","a":-0.9,"c":2}]}"#;
        let j: FunctionJson = serde_json::from_str(text).unwrap();
        let f = j.to_spec().unwrap();
        assert_eq!(f.pieces().len(), 2);
        assert_eq!(f.declared_infinity_exponent(), Some(-0.9));
        let back = serde_json::to_string(&FunctionJson::from_spec(&f)).unwrap();
        assert!(back.contains("\"hi\":\"inf\""), "{back}");
        let again: FunctionJson = serde_json::from_str(&back).unwrap();
        assert_eq!(again.to_spec().unwrap(), f);
    }

    #[test]
    fn declared_exponents_are_checked() {
        let bad = r#"{"pieces":[{"lo":1,"hi":"inf","a":-0.9}],"infinity_exponent":-0.5}"#;
        let j: FunctionJson = serde_json::from_str(bad).unwrap();
        assert!(j.to_spec().is_err());
        let unknown = r#"{"pieces":[{"lo":1,"hi":2,"a":0,"power":1}]}"#;
        assert!(serde_json::from_str::<FunctionJson>(unknown).is_err());
    }

    #[test]
    fn builtin_names() {
        let p = params();
        assert_eq!(builtin_function("f0", &p).unwrap(), make_f0(&p));
        assert_eq!(builtin_function("indicator:0:inf", &p).unwrap().pieces()[0].hi, f64::INFINITY);
        assert_eq!(builtin_function("powerlog:0.5:1", &p).unwrap().pieces().len(), 2);
        assert!(builtin_function("fdeltatheta:-0.8", &p).is_err());
        assert!(matches!(builtin_function("nope", &p), Err(CliError::Config(_))));
        assert!(matches!(builtin_function("power:x", &p), Err(CliError::Config(_))));
    }

    #[test]
    fn psi_json_forms() {
        let p = params();
        let spec = QuadratureSpec::default();
        let c: PsiJson = serde_json::from_str(r#"{"kind":"constant","support":[1.5,3],"value":2}"#).unwrap();
        assert_eq!(c.to_psi(&p, None, &spec).unwrap().eval(2.0).unwrap(), 2.0);
        let pw: PsiJson = serde_json::from_str(r#"{"kind":"power","support":[1.5,"inf"],"exponent":0.5}"#).unwrap();
        assert_eq!(pw.to_psi(&p, None, &spec).unwrap().support().1, f64::INFINITY);
        let nat: PsiJson = serde_json::from_str(r#"{"kind":"natural","support":[1.5,3]}"#).unwrap();
        assert!(matches!(nat.to_psi(&p, None, &spec), Err(CliError::Config(_))));
        let f = indicator(0.0, 1.0).unwrap();
        assert!((nat.to_psi(&p, Some(&f), &spec).unwrap().eval(2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_csv_round_trip() {
        let recs = vec![
            Ok(SweepRecord {
                p: 1.6,
                q: 3.2,
                f_norm: 1.0,
                image_norm: 2.5,
                ratio: 2.5,
                upper_bound: 3.0,
                error_estimate: 1e-9,
            }),
            Err(chlab_core::Error::Domain("bad, really".into())),
        ];
        let csv = sweep_table(&[1.6, 1.0], &recs).to_csv();
        let back = read_sweep_csv(&csv).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], *recs[0].as_ref().unwrap());
    }
}
