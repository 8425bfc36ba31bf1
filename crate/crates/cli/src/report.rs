//! Machine-readable report assembly.
//!
//! Every document carries `"schema": "mchr-lab/1"` and numbers rounded to 12
//! significant digits, so identical inputs produce byte-identical reports.

use serde_json::{Map, Value};

use mchr_lab::kernel::Method;
use mchr_lab::precedence::ClassificationReport;
use mchr_lab::subset::SubsetMask;

pub const SCHEMA: &str = "mchr-lab/1";

/// A float as a JSON number rounded to 12 significant digits; non-finite
/// values become strings, which JSON cannot carry as numbers.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(format!("{x}"));
    }
    if x == 0.0 {
        return Value::from(0.0);
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("round-trip of rounded float");
    Value::from(rounded)
}

/// The literal digits used for CSV cells, matching the JSON rounding.
pub fn num_str(x: f64) -> String {
    match num(x) {
        Value::String(s) => s,
        v => v.to_string(),
    }
}

pub fn mask_value(mask: SubsetMask) -> Value {
    Value::Array(mask.indices().into_iter().map(Value::from).collect())
}

pub fn method_value(method: Method) -> Value {
    Value::String(method.as_str().to_string())
}

/// `{ "schema": .., "command": .., <body> }`.
pub fn document(command: &str, body: Map<String, Value>) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), Value::String(SCHEMA.into()));
    map.insert("command".into(), Value::String(command.into()));
    map.extend(body);
    Value::Object(map)
}

/// Map keyed by 1-based variable index.
pub fn indexed_map(values: impl IntoIterator<Item = (usize, Value)>) -> Value {
    let mut map = Map::new();
    for (idx, v) in values {
        map.insert(idx.to_string(), v);
    }
    Value::Object(map)
}

pub fn classification_value(report: &ClassificationReport<f64>) -> Value {
    let mut map = Map::new();
    map.insert(
        "alphas".into(),
        indexed_map(report.alphas.iter().enumerate().map(|(p, a)| (p + 1, num(*a)))),
    );
    map.insert("weakly_small".into(), Value::Array(report.weakly_small.iter().map(|b| Value::from(*b)).collect()));
    map.insert("small".into(), Value::Array(report.small.iter().map(|b| Value::from(*b)).collect()));
    map.insert(
        "pair_determined".into(),
        match &report.pair_determined {
            Some(flags) => Value::Array(flags.iter().map(|b| Value::from(*b)).collect()),
            None => Value::Null,
        },
    );
    map.insert(
        "ordered_by_pairs".into(),
        match report.ordered_by_pairs {
            Some(b) => Value::from(b),
            None => Value::Null,
        },
    );
    map.insert(
        "v_sets".into(),
        indexed_map(report.v_sets.iter().enumerate().map(|(p, s)| (p + 1, mask_value(*s)))),
    );
    map.insert("partial".into(), Value::from(report.partial));
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_significant_digits() {
        assert_eq!(num(1.0 / 6.0).to_string(), "0.166666666667");
        assert_eq!(num(2.0 / 3.0).to_string(), "0.666666666667");
        assert_eq!(num(0.5).to_string(), "0.5");
        assert_eq!(num(0.0).to_string(), "0.0");
        assert_eq!(num(1.23456789012345e-7).to_string(), "1.23456789012e-7");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
    }

    #[test]
    fn documents_carry_the_schema_tag() {
        let doc = document("validate", Map::new());
        assert_eq!(doc["schema"], "mchr-lab/1");
        assert_eq!(doc["command"], "validate");
    }
}
