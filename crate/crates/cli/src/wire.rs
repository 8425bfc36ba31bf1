//! JSON file schemas and their conversion into core model types.
//!
//! Model files: `{ "n": int, "kind": "independent" | "thls" | "frailty-exp"
//! | "set-dependent", <kind-specific body> }`. THLS rates and set-dependent
//! curves are keyed by the failed set written as sorted 1-based indices
//! joined by commas, with the empty string for the empty set. System files:
//! `{ "n": int, "paths": [[1,2],[1,2,3]] }`.

use std::collections::BTreeMap;

use serde::Deserialize;

use mchr_lab::hazard::HazardCurve;
use mchr_lab::law::LifetimeLaw;
use mchr_lab::model::{FrailtyMixing, ModelSpec, PairTable};
use mchr_lab::reliability::PathSetSystem;
use mchr_lab::subset::{SubsetMask, VariableIndex, MAX_VARIABLES};
use mchr_lab::{Model, Violation};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub kind: String,
    #[serde(default)]
    laws: Option<Vec<LawSpec>>,
    #[serde(default)]
    rates: Option<BTreeMap<String, BTreeMap<String, f64>>>,
    #[serde(default)]
    c: Option<Vec<f64>>,
    #[serde(default)]
    theta: Option<ThetaSpec>,
    #[serde(default)]
    curves: Option<BTreeMap<String, BTreeMap<String, CurveSpec>>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum LawSpec {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Uniform { a: f64, b: f64 },
    Dirac { c: f64 },
    Mixture { weights: Vec<f64>, components: Vec<LawSpec> },
    Piecewise { knots: Vec<f64>, rates: Vec<f64>, tail_rate: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum CurveSpec {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Piecewise { knots: Vec<f64>, rates: Vec<f64>, tail_rate: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum ThetaSpec {
    Gamma { shape: f64, rate: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub paths: Vec<Vec<usize>>,
}

/// Outcome of reading a model file: either a constructible model (whose
/// semantic invariants may still be violated) or the wire-level problems
/// that prevented construction.
pub struct ParsedModel {
    pub model: Option<Model>,
    pub violations: Vec<Violation>,
}

fn law_of(spec: &LawSpec) -> LifetimeLaw<f64> {
    match spec {
        LawSpec::Exponential { rate } => LifetimeLaw::Hazard(HazardCurve::Constant { rate: *rate }),
        LawSpec::Weibull { shape, scale } => {
            LifetimeLaw::Hazard(HazardCurve::Weibull { shape: *shape, scale: *scale })
        }
        LawSpec::Uniform { a, b } => LifetimeLaw::Uniform { a: *a, b: *b },
        LawSpec::Dirac { c } => LifetimeLaw::Dirac { c: *c },
        LawSpec::Mixture { weights, components } => LifetimeLaw::Mixture {
            weights: weights.clone(),
            components: components.iter().map(law_of).collect(),
        },
        LawSpec::Piecewise { knots, rates, tail_rate } => LifetimeLaw::Hazard(HazardCurve::Piecewise {
            knots: knots.clone(),
            rates: rates.clone(),
            tail_rate: *tail_rate,
        }),
    }
}

fn curve_of(spec: &CurveSpec) -> HazardCurve<f64> {
    match spec {
        CurveSpec::Exponential { rate } => HazardCurve::Constant { rate: *rate },
        CurveSpec::Weibull { shape, scale } => HazardCurve::Weibull { shape: *shape, scale: *scale },
        CurveSpec::Piecewise { knots, rates, tail_rate } => HazardCurve::Piecewise {
            knots: knots.clone(),
            rates: rates.clone(),
            tail_rate: *tail_rate,
        },
    }
}

/// Parses a failed-set key: sorted 1-based indices joined by commas, empty
/// string for the empty set.
fn parse_set_key(key: &str, n: usize) -> Result<SubsetMask, String> {
    if key.is_empty() {
        return Ok(SubsetMask::EMPTY);
    }
    let mut indices = Vec::new();
    for part in key.split(',') {
        let idx: usize = part
            .trim()
            .parse()
            .map_err(|_| format!("failed-set key '{key}' is not a comma-joined index list"))?;
        indices.push(idx);
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("failed-set key '{key}' must list strictly increasing indices"));
    }
    SubsetMask::from_indices(indices, n).map_err(|e| format!("failed-set key '{key}': {e}"))
}

fn build_table<T, U>(
    raw: &BTreeMap<String, BTreeMap<String, T>>,
    n: usize,
    section: &str,
    convert: impl Fn(&T) -> U,
    violations: &mut Vec<Violation>,
) -> PairTable<U> {
    let mut table = PairTable::new();
    for (set_key, row) in raw {
        let mask = match parse_set_key(set_key, n) {
            Ok(m) => m,
            Err(msg) => {
                violations.push(Violation { path: format!("{section}[\"{set_key}\"]"), message: msg });
                continue;
            }
        };
        for (j_key, value) in row {
            let j = match j_key.trim().parse::<usize>().ok().and_then(|v| VariableIndex::new(v, n).ok()) {
                Some(j) => j,
                None => {
                    violations.push(Violation {
                        path: format!("{section}[\"{set_key}\"][\"{j_key}\"]"),
                        message: format!("'{j_key}' is not a variable index in 1..={n}"),
                    });
                    continue;
                }
            };
            table.insert(mask, j, convert(value));
        }
    }
    table
}

impl ModelFile {
    /// Builds the in-memory model, collecting wire-level violations. When
    /// any are present the model is withheld: the file does not denote a
    /// well-formed specification.
    pub fn build(&self) -> ParsedModel {
        let mut violations = Vec::new();
        let n = self.n;
        if n == 0 || n > MAX_VARIABLES {
            violations.push(Violation {
                path: "n".into(),
                message: format!("variable count must lie in 1..={MAX_VARIABLES}"),
            });
            return ParsedModel { model: None, violations };
        }
        let require = |field: Option<bool>, name: &str, violations: &mut Vec<Violation>| -> bool {
            match field {
                Some(true) => true,
                _ => {
                    violations.push(Violation {
                        path: name.into(),
                        message: format!("kind '{}' requires the '{name}' section", self.kind),
                    });
                    false
                }
            }
        };
        let model = match self.kind.as_str() {
            "independent" => {
                if !require(self.laws.as_ref().map(|_| true), "laws", &mut violations) {
                    None
                } else {
                    let laws: Vec<_> = self.laws.as_ref().unwrap().iter().map(law_of).collect();
                    if laws.len() != n {
                        violations.push(Violation {
                            path: "laws".into(),
                            message: format!("expected {n} laws, found {}", laws.len()),
                        });
                        None
                    } else {
                        Some(ModelSpec::Independent { laws })
                    }
                }
            }
            "thls" => {
                if !require(self.rates.as_ref().map(|_| true), "rates", &mut violations) {
                    None
                } else {
                    let table =
                        build_table(self.rates.as_ref().unwrap(), n, "rates", |r| *r, &mut violations);
                    Some(ModelSpec::Thls { n, rates: table })
                }
            }
            "frailty-exp" => {
                let ok_c = require(self.c.as_ref().map(|_| true), "c", &mut violations);
                let ok_t = require(self.theta.as_ref().map(|_| true), "theta", &mut violations);
                if !(ok_c && ok_t) {
                    None
                } else {
                    let c = self.c.clone().unwrap();
                    if c.len() != n {
                        violations.push(Violation {
                            path: "c".into(),
                            message: format!("expected {n} weights, found {}", c.len()),
                        });
                        None
                    } else {
                        let mixing = match self.theta.as_ref().unwrap() {
                            ThetaSpec::Gamma { shape, rate } =>
                                FrailtyMixing::Gamma { shape: *shape, rate: *rate },
                            ThetaSpec::Discrete { values, probs } =>
                                FrailtyMixing::Discrete { values: values.clone(), probs: probs.clone() },
                        };
                        Some(ModelSpec::FrailtyExp { c, mixing })
                    }
                }
            }
            "set-dependent" => {
                if !require(self.curves.as_ref().map(|_| true), "curves", &mut violations) {
                    None
                } else {
                    let table =
                        build_table(self.curves.as_ref().unwrap(), n, "curves", curve_of, &mut violations);
                    Some(ModelSpec::SetDependent { n, curves: table })
                }
            }
            other => {
                violations.push(Violation {
                    path: "kind".into(),
                    message: format!(
                        "unknown kind '{other}'; expected independent, thls, frailty-exp or set-dependent"
                    ),
                });
                None
            }
        };
        if violations.is_empty() {
            ParsedModel { model, violations }
        } else {
            ParsedModel { model: None, violations }
        }
    }
}

impl SystemFile {
    pub fn build(&self) -> Result<(PathSetSystem, Vec<String>), String> {
        if self.n == 0 || self.n > MAX_VARIABLES {
            return Err(format!("system component count must lie in 1..={MAX_VARIABLES}"));
        }
        let mut paths = Vec::with_capacity(self.paths.len());
        for (k, raw) in self.paths.iter().enumerate() {
            let mask = SubsetMask::from_indices(raw.iter().copied(), self.n)
                .map_err(|e| format!("paths[{}]: {e}", k + 1))?;
            paths.push(mask);
        }
        PathSetSystem::new(self.n, paths).map_err(|e| e.to_string())
    }
}
