//! Channel spec file format: a TOML document with the keys
//!
//! ```toml
//! input_alphabet = ["0", "1", "2"]   # symbol labels, order defines indices
//! energy_alphabet = [0, 2]           # integer energy values
//! battery_capacity = 2               # integer capacity
//!
//! [cost]                             # label -> integer energy cost
//! "0" = 0
//! "1" = 1
//! "2" = 2
//! ```

use std::collections::BTreeMap;

use chargecap::channel::{ChannelSpec, SpecError};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("spec file is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cost table has an entry {0:?} that is not in input_alphabet")]
    UnknownCostLabel(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    input_alphabet: Vec<String>,
    energy_alphabet: Vec<i64>,
    battery_capacity: i64,
    cost: BTreeMap<String, i64>,
}

/// Parses and validates a spec document.
pub fn parse_spec_str(text: &str) -> Result<ChannelSpec, SpecFileError> {
    let raw: RawSpec = toml::from_str(text)?;
    for label in raw.cost.keys() {
        if !raw.input_alphabet.contains(label) {
            return Err(SpecFileError::UnknownCostLabel(label.clone()));
        }
    }
    let costs: Vec<i64> = raw
        .input_alphabet
        .iter()
        .map(|label| {
            raw.cost
                .get(label)
                .copied()
                .ok_or_else(|| SpecError::MissingCost(label.clone()))
        })
        .collect::<Result<_, _>>()?;
    Ok(ChannelSpec::new(
        raw.input_alphabet,
        costs,
        raw.energy_alphabet,
        raw.battery_capacity,
    )?)
}

/// Canonical TOML rendering; `parse_spec_str` of the output reproduces the
/// spec exactly.
pub fn spec_to_toml(spec: &ChannelSpec) -> String {
    let labels: Vec<String> = spec
        .labels()
        .iter()
        .map(|l| format!("{:?}", l))
        .collect();
    let energies: Vec<String> = spec.energies().iter().map(|e| e.to_string()).collect();
    let mut out = format!(
        "input_alphabet = [{}]\nenergy_alphabet = [{}]\nbattery_capacity = {}\n\n[cost]\n",
        labels.join(", "),
        energies.join(", "),
        spec.capacity()
    );
    for (label, &cost) in spec.labels().iter().zip(spec.costs()) {
        out.push_str(&format!("{:?} = {}\n", label, cost));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chargecap::channel::ternary_spec;

    const TERNARY: &str = r#"
input_alphabet = ["0", "1", "2"]
energy_alphabet = [0, 2]
battery_capacity = 2

[cost]
"0" = 0
"1" = 1
"2" = 2
"#;

    #[test]
    fn parses_the_ternary_example() {
        let spec = parse_spec_str(TERNARY).unwrap();
        assert_eq!(spec, ternary_spec());
    }

    #[test]
    fn round_trips_exactly() {
        let spec = ternary_spec();
        let rendered = spec_to_toml(&spec);
        assert_eq!(parse_spec_str(&rendered).unwrap(), spec);
    }

    #[test]
    fn rejects_missing_cost() {
        let text = r#"
input_alphabet = ["0", "1"]
energy_alphabet = [0, 1]
battery_capacity = 1
[cost]
"0" = 0
"#;
        let err = parse_spec_str(text).unwrap_err();
        assert!(matches!(
            err,
            SpecFileError::Spec(SpecError::MissingCost(ref l)) if l == "1"
        ));
    }

    #[test]
    fn rejects_unknown_cost_label() {
        let text = r#"
input_alphabet = ["0"]
energy_alphabet = [0, 1]
battery_capacity = 1
[cost]
"0" = 0
"x" = 3
"#;
        assert!(matches!(
            parse_spec_str(text).unwrap_err(),
            SpecFileError::UnknownCostLabel(ref l) if l == "x"
        ));
    }

    #[test]
    fn rejects_model_violations_with_spec_errors() {
        let text = r#"
input_alphabet = ["1"]
energy_alphabet = [1]
battery_capacity = 1
[cost]
"1" = 1
"#;
        assert!(matches!(
            parse_spec_str(text).unwrap_err(),
            SpecFileError::Spec(SpecError::NoZeroSymbol)
        ));
    }

    #[test]
    fn garbage_is_a_toml_error() {
        assert!(matches!(
            parse_spec_str("not = [valid").unwrap_err(),
            SpecFileError::Toml(_)
        ));
    }
}
