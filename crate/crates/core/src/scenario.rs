//! Scenario files: one analysis request with its inputs and parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::sequence::{PermutationSequence, UnitarySequence};
use crate::tolerance::Tolerances;
use crate::words::WordPolynomial;

pub const SCHEMA_VERSION: u32 = 1;

/// A finite-level unitary given either as a matrix at a level or as a word
/// polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitarySpec {
    Matrix { n: usize, level: usize, matrix: ComplexMatrix },
    Word { word: WordPolynomial },
}

impl UnitarySpec {
    pub fn to_word(&self) -> Result<WordPolynomial> {
        match self {
            UnitarySpec::Matrix { n, level, matrix } => {
                WordPolynomial::from_matrix(*n, *level, matrix)
            }
            UnitarySpec::Word { word } => Ok(word.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    UhfProduct {
        sequence: UnitarySequence,
    },
    DiagonalProduct {
        sequence: PermutationSequence,
    },
    /// `λ_v` against `α_u`.
    Verify {
        sequence: UnitarySequence,
        v: UnitarySpec,
    },
    /// Peels `v_K ⊗ r` (the telescoped unitary, optionally followed by a
    /// planted residual `r`) against the sequence.
    Peel {
        sequence: UnitarySequence,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        residual: Option<UnitarySpec>,
    },
    /// `λ_{uφ(u*)}` against `Ad(u)`.
    Inner {
        u: UnitarySpec,
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::UhfProduct { .. } => "uhf_product",
            ScenarioKind::DiagonalProduct { .. } => "diagonal_product",
            ScenarioKind::Verify { .. } => "verify",
            ScenarioKind::Peel { .. } => "peel",
            ScenarioKind::Inner { .. } => "inner",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Telescope depth `K` (peel: truncation depth of the built unitary).
    pub depth: usize,
    /// Highest matrix-unit level checked by verification (peel: last step).
    pub k_max: usize,
    pub tolerances: Tolerances,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            depth: 12,
            k_max: 3,
            tolerances: Tolerances::default(),
        }
    }
}

/// Recorded outcome for regression runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub innerness: Option<String>,
}

/// Read with [`parse_scenario`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

impl Scenario {
    pub fn new(name: &str, kind: ScenarioKind, params: Params) -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            kind,
            params,
            expected: None,
        }
    }

    pub fn expecting(mut self, verdict: &str, innerness: Option<&str>) -> Self {
        self.expected = Some(Expected {
            verdict: verdict.to_string(),
            innerness: innerness.map(str::to_string),
        });
        self
    }
}

/// Deserializes JSON, reporting the path of the offending field. Invalid
/// matrices and permutations surface as validation errors.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        if message.starts_with("validation error") {
            Error::Validation(format!("at {path}: {message}"))
        } else {
            Error::Parse { path, message }
        }
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    name: String,
    kind: String,
    payload: serde_json::Value,
    #[serde(default)]
    params: Params,
    #[serde(default)]
    expected: Option<Expected>,
}

/// Drops serde_json's location suffix, which refers to re-serialized text.
fn strip_location(m: String) -> String {
    match m.rfind(" at line ") {
        Some(i) => m[..i].to_string(),
        None => m,
    }
}

/// Parses a scenario in two stages so that errors inside the payload keep
/// their full path.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario = parse_json(text)?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse {
            path: "schema_version".into(),
            message: format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                raw.schema_version
            ),
        });
    }
    let tagged = serde_json::json!({ "kind": raw.kind, "payload": raw.payload });
    // The wrapped document has the same shape as the file, so paths carry
    // over unchanged.
    let kind: ScenarioKind = parse_json(&tagged.to_string()).map_err(|e| match e {
        Error::Parse { path, message } => Error::Parse {
            path: if path == "." { "kind".into() } else { path },
            message: strip_location(message),
        },
        Error::Validation(m) => Error::Validation(strip_location(m)),
        e => e,
    })?;
    Ok(Scenario {
        schema_version: raw.schema_version,
        name: raw.name,
        kind,
        params: raw.params,
        expected: raw.expected,
    })
}

pub fn to_json(s: &Scenario) -> Result<String> {
    serde_json::to_string_pretty(s)
        .map_err(|e| Error::InternalConsistency(format!("scenario serialization failed: {e}")))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let text = r#"{
            "schema_version": 1,
            "name": "id",
            "kind": "uhf_product",
            "payload": {"sequence": {"n": 2, "tail": {"kind": "constant",
                "payload": [[[1,0],[0,0]],[[0,0],[1,0]]]}}}
        }"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.params, Params::default());
        assert_eq!(s.kind.name(), "uhf_product");
    }

    #[test]
    fn non_unitary_entry_is_named() {
        let text = r#"{
            "schema_version": 1,
            "name": "bad",
            "kind": "uhf_product",
            "payload": {"sequence": {"n": 2, "prefix": [[[[2,0],[0,0]],[[0,0],[1,0]]]],
                "tail": {"kind": "constant", "payload": [[[1,0],[0,0]],[[0,0],[1,0]]]}}}
        }"#;
        match parse_scenario(text) {
            Err(Error::Validation(m)) => assert!(m.contains("prefix[0]"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_kind_is_a_parse_error() {
        let text = r#"{"schema_version": 1, "name": "x", "kind": "nope", "payload": {}}"#;
        assert!(matches!(parse_scenario(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_payload_field_is_rejected() {
        let text = r#"{"schema_version": 1, "name": "x", "kind": "inner",
            "payload": {"u": {"word": {"n": 2, "terms": []}}, "extra": 1}}"#;
        assert!(matches!(parse_scenario(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn catalog_round_trips() {
        for s in crate::catalog::witness_catalog() {
            let text = to_json(&s).unwrap();
            assert_eq!(parse_scenario(&text).unwrap(), s);
        }
    }

    #[test]
    fn wrong_schema_version() {
        let text = r#"{"schema_version": 7, "name": "x", "kind": "inner",
            "payload": {"u": {"word": {"n": 2, "terms": []}}}}"#;
        match parse_scenario(text) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "schema_version"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
