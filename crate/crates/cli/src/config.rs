//! JSON run configuration: parsing, defaults and validation.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Deserialize;
use symtest_core::group::DEFAULT_CLOSURE_TOL;
use symtest_core::numerics::ComplexMatrix;
use symtest_core::symcore::DEFAULT_SERIES_ORDER;
use symtest_core::{build_nmr_hamiltonian, Complex64, Gate, GateSpec, HamiltonianSpec};
use thiserror::Error;

pub const DEFAULT_MAX_ORDER: usize = 256;
pub const DEFAULT_SHOTS: u64 = 100_000;
pub const DEFAULT_TROTTER_STEPS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Trace,
    Choi,
    Series,
    Circuit,
    Shots,
    Variational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawHamiltonian {
    Nmr { omega1: f64, omega2: f64, j: f64 },
    Pauli { qubits: usize, terms: Vec<String> },
    Matrix { entries: Vec<[f64; 2]> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGenerator {
    Named { gate: String, qubits: Vec<usize> },
    Matrix { matrix: Vec<[f64; 2]> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    generators: Vec<RawGenerator>,
    #[serde(default)]
    max_order: Option<usize>,
    #[serde(default)]
    tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTimes {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawVariational {
    layers: Option<usize>,
    restarts: Option<usize>,
    max_iters: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrotter {
    steps: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    hamiltonian: RawHamiltonian,
    group: RawGroup,
    times: Option<RawTimes>,
    methods: Vec<Method>,
    shots: Option<u64>,
    seed: Option<u64>,
    series_order: Option<usize>,
    variational: Option<RawVariational>,
    output: Option<RawOutput>,
    trotter: Option<RawTrotter>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariationalSettings {
    pub layers: usize,
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for VariationalSettings {
    fn default() -> Self {
        Self { layers: 3, restarts: 20, max_iters: 500 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub hamiltonian: HamiltonianSpec,
    /// Realized and unitarity-checked; the group itself is closed at run time.
    pub generators: Vec<GateSpec>,
    pub max_order: usize,
    pub closure_tol: f64,
    pub times: Vec<f64>,
    /// Sorted, without duplicates.
    pub methods: Vec<Method>,
    pub shots: u64,
    pub seed: u64,
    pub series_order: usize,
    pub variational: VariationalSettings,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<Format>,
    pub trotter_steps: Vec<usize>,
}

impl RunConfig {
    pub fn has(&self, m: Method) -> bool {
        self.methods.binary_search(&m).is_ok()
    }
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    validate(raw)
}

// serde_json appends " at line L column C"; the position is carried separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn complex_entries(entries: &[[f64; 2]], what: &str) -> Result<ComplexMatrix, ConfigError> {
    let values: Vec<Complex64> = entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    ComplexMatrix::from_flat(&values).map_err(|e| invalid(format!("{what}: {e}")))
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let hamiltonian = match raw.hamiltonian {
        RawHamiltonian::Nmr { omega1, omega2, j } => {
            if ![omega1, omega2, j].iter().all(|x| x.is_finite()) {
                return Err(invalid("hamiltonian: NMR parameters must be finite"));
            }
            build_nmr_hamiltonian(omega1, omega2, j)
        }
        RawHamiltonian::Pauli { qubits, terms } => HamiltonianSpec::parse_terms(qubits, &terms, "pauli")
            .map_err(|e| invalid(format!("hamiltonian: {e}")))?,
        RawHamiltonian::Matrix { entries } => {
            let m = complex_entries(&entries, "hamiltonian")?;
            HamiltonianSpec::from_matrix(m, "matrix").map_err(|e| invalid(format!("hamiltonian: {e}")))?
        }
    };
    let dim = hamiltonian.dim();

    if raw.group.generators.is_empty() {
        return Err(invalid("group: at least one generator is required"));
    }
    let mut generators = Vec::new();
    for (i, g) in raw.group.generators.iter().enumerate() {
        let spec = match g {
            RawGenerator::Named { gate, qubits } => GateSpec::Named(
                Gate::from_name(gate, qubits).map_err(|e| invalid(format!("group generator {i}: {e}")))?,
            ),
            RawGenerator::Matrix { matrix } => {
                GateSpec::Matrix(complex_entries(matrix, &format!("group generator {i}"))?)
            }
        };
        spec.realize(dim)
            .map_err(|e| invalid(format!("group generator {i}: {e}")))?;
        generators.push(spec);
    }
    let max_order = raw.group.max_order.unwrap_or(DEFAULT_MAX_ORDER);
    if max_order == 0 {
        return Err(invalid("group: max_order must be at least 1"));
    }
    let closure_tol = raw.group.tol.unwrap_or(DEFAULT_CLOSURE_TOL);
    if !(closure_tol.is_finite() && closure_tol > 0.0) {
        return Err(invalid("group: tol must be positive"));
    }

    let times = match raw.times {
        None => Vec::new(),
        Some(RawTimes::List(ts)) if ts.is_empty() => {
            return Err(invalid("times: the list must not be empty"))
        }
        Some(RawTimes::List(ts)) => ts,
        Some(RawTimes::Range { start, stop, count }) => match count {
            0 => return Err(invalid("times: count must be at least 1")),
            1 => vec![start],
            n => (0..n)
                .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                .collect(),
        },
    };
    if times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("times: every time must be finite"));
    }

    let mut methods = raw.methods;
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(invalid("methods: at least one method is required"));
    }

    let shots = raw.shots.unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }

    let v = raw.variational.unwrap_or_default();
    let defaults = VariationalSettings::default();
    let variational = VariationalSettings {
        layers: v.layers.unwrap_or(defaults.layers),
        restarts: v.restarts.unwrap_or(defaults.restarts),
        max_iters: v.max_iters.unwrap_or(defaults.max_iters),
    };
    if variational.layers == 0 || variational.restarts == 0 {
        return Err(invalid("variational: layers and restarts must be at least 1"));
    }

    let trotter_steps = match raw.trotter {
        Some(t) => t.steps,
        None => DEFAULT_TROTTER_STEPS.to_vec(),
    };
    if trotter_steps.is_empty() || trotter_steps.contains(&0) {
        return Err(invalid("trotter: steps must be a non-empty list of positive integers"));
    }

    let output = raw.output.unwrap_or_default();
    Ok(RunConfig {
        hamiltonian,
        generators,
        max_order,
        closure_tol,
        times,
        methods,
        shots,
        seed: raw.seed.unwrap_or(0),
        series_order: raw.series_order.unwrap_or(DEFAULT_SERIES_ORDER),
        variational,
        output_path: output.path,
        output_format: output.format,
        trotter_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "hamiltonian": {"type": "nmr", "omega1": 1.0, "omega2": 2.0, "j": 0.1},
        "group": {"generators": [{"gate": "CNOT", "qubits": [0, 1]}, {"gate": "SWAP", "qubits": [0, 1]}]},
        "times": {"start": 0.0, "stop": 6.28, "count": 50},
        "methods": ["trace"]
    }"#;

    #[test]
    #[allow(clippy::approx_constant)]
    fn minimal_config() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.times.len(), 50);
        assert_eq!(c.times[49], 6.28);
        assert_eq!(c.generators.len(), 2);
        assert_eq!(c.methods, vec![Method::Trace]);
        assert_eq!(c.series_order, 12);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn empty_methods_rejected() {
        let text = MINIMAL.replace(r#"["trace"]"#, "[]");
        assert!(matches!(parse_config(&text), Err(ConfigError::Validation(m)) if m.contains("methods")));
    }

    #[test]
    fn non_unitary_generator_rejected() {
        let text = MINIMAL.replace(
            r#"{"gate": "SWAP", "qubits": [0, 1]}"#,
            r#"{"matrix": [[1.001,0],[0,0],[0,0],[0,0], [0,0],[1,0],[0,0],[0,0], [0,0],[0,0],[1,0],[0,0], [0,0],[0,0],[0,0],[1,0]]}"#,
        );
        match parse_config(&text) {
            Err(ConfigError::Validation(m)) => assert!(m.contains("unitary"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let text = "{\n  \"hamiltonian\": {\"type\": \"nmr\",\n  oops\n}";
        match parse_config(text) {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_a_parse_error() {
        let text = MINIMAL.replace(r#""methods""#, r#""bogus": 1, "methods""#);
        match parse_config(&text) {
            Err(ConfigError::Parse { message, .. }) => assert!(message.contains("bogus")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn qubit_out_of_range_rejected() {
        let text = MINIMAL.replace(r#""qubits": [0, 1]}, {"gate": "SWAP""#, r#""qubits": [0, 2]}, {"gate": "SWAP""#);
        assert!(matches!(parse_config(&text), Err(ConfigError::Validation(_))));
    }

    #[test]
    fn pauli_and_matrix_hamiltonians() {
        let pauli = MINIMAL.replace(
            r#"{"type": "nmr", "omega1": 1.0, "omega2": 2.0, "j": 0.1}"#,
            r#"{"type": "pauli", "qubits": 2, "terms": ["1 * XI", "0.5 * ZZ"]}"#,
        );
        assert_eq!(parse_config(&pauli).unwrap().hamiltonian.qubits, 2);
        let matrix = MINIMAL.replace(
            r#"{"type": "nmr", "omega1": 1.0, "omega2": 2.0, "j": 0.1}"#,
            r#"{"type": "matrix", "entries": [[1,0],[0,0],[0,0],[0,0], [0,0],[2,0],[0,0],[0,0], [0,0],[0,0],[3,0],[0,0], [0,0],[0,0],[0,0],[4,0]]}"#,
        );
        assert_eq!(parse_config(&matrix).unwrap().hamiltonian.dim(), 4);
        let bad = matrix.replace("[2,0]", "[2,1]");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Validation(m)) if m.contains("ermitian")));
    }

    #[test]
    fn explicit_time_list_and_zero_count() {
        let list = MINIMAL.replace(r#"{"start": 0.0, "stop": 6.28, "count": 50}"#, "[0.5, 1.5]");
        assert_eq!(parse_config(&list).unwrap().times, vec![0.5, 1.5]);
        let zero = MINIMAL.replace("\"count\": 50", "\"count\": 0");
        assert!(matches!(parse_config(&zero), Err(ConfigError::Validation(_))));
    }
}
