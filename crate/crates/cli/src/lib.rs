//! Command implementations behind the `fockstate` binary.
//!
//! Every command reads its inputs as raw bytes, so the input digest and the
//! report depend only on those bytes and the flags. Nothing here draws random
//! numbers.

use std::path::{Path, PathBuf};

use fockstate::algebra::{parse_expression, AlgebraError};
use fockstate::density::{classify, decompose, is_decreasing, is_positive, Classification, DensityError, Tolerances};
use fockstate::fock::FockContext;
use fockstate::formats::{trace_profile_csv, FormatError, MeasureJson, SequenceJson, StateJson};
use fockstate::product_states::{extend, SequenceError};
use fockstate::{StateHandle, C64};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Values below this magnitude print as `0`.
pub const PRINT_SNAP: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("invalid input: {0}")]
    Format(#[from] FormatError),

    #[error("invalid expression: {0}")]
    Expression(#[from] AlgebraError),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{0}")]
    Horizon(String),

    #[error("{0}")]
    Undetermined(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Horizon(_) => 3,
            CliError::Undetermined(_) => 4,
            _ => 2,
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::DegreeExceedsDepth { .. } => CliError::Horizon(e.to_string()),
            DensityError::Undetermined { .. } => CliError::Undetermined(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::Density(d) => d.into(),
            SequenceError::HorizonTooSmall { .. } => CliError::Horizon(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

/// Outcome of a command: what the process should exit with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Undetermined,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Undetermined => 4,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub options: Value,
    /// SHA-256 over the input bytes, each prefixed by its label and length.
    pub inputs_digest: String,
    pub results: Value,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite") + "\n"
    }
}

/// An input file or argument that goes into the digest.
pub struct Input {
    pub label: &'static str,
    pub bytes: Vec<u8>,
}

impl Input {
    pub fn read(label: &'static str, path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Read { path: path.to_owned(), source })?;
        Ok(Self { label, bytes })
    }

    pub fn text(label: &'static str, text: &str) -> Self {
        Self { label, bytes: text.as_bytes().to_vec() }
    }

    fn as_str(&self) -> Result<&str, CliError> {
        std::str::from_utf8(&self.bytes).map_err(|e| CliError::Invalid(format!("{}: {e}", self.label)))
    }
}

pub fn digest(inputs: &[&Input]) -> String {
    let mut h = Sha256::new();
    for input in inputs {
        h.update(input.label.as_bytes());
        h.update([0]);
        h.update((input.bytes.len() as u64).to_le_bytes());
        h.update(&input.bytes);
    }
    hex::encode(h.finalize())
}

/// Formats like C's `%.15g`, with values below [`PRINT_SNAP`] printed as `0`.
pub fn format_real(x: f64) -> String {
    if x.abs() < PRINT_SNAP {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `"re im"`.
pub fn format_complex(z: C64) -> String {
    format!("{} {}", format_real(z.re), format_real(z.im))
}

fn load_state(input: &Input) -> Result<StateHandle, CliError> {
    Ok(StateJson::parse(input.as_str()?)?)
}

fn state_json(state: &StateHandle, classification: Classification) -> String {
    serde_json::to_string(&StateJson::from_state(state, classification)).expect("finite entries") + "\n"
}

fn horizon_warnings(state: &StateHandle) -> Vec<String> {
    if state.exact_horizon() < state.depth() {
        vec![format!(
            "exact horizon is level {} of {}; higher levels are truncation artifacts",
            state.exact_horizon(),
            state.depth()
        )]
    } else {
        Vec::new()
    }
}

/// `ρ(x)` for the expression `expr`.
pub fn cmd_eval(state: &Input, expr: &str) -> Result<(C64, Report), CliError> {
    let handle = load_state(state)?;
    let x = parse_expression(expr, handle.ctx().n())?;
    if x.degree() > handle.exact_horizon() {
        return Err(CliError::Horizon(format!(
            "expression of degree {} exceeds the exact horizon {} of the state",
            x.degree(),
            handle.exact_horizon()
        )));
    }
    let value = handle.eval(&x)?;
    let expr_input = Input::text("expression", expr);
    let report = Report {
        command: "eval".into(),
        options: json!({ "expression": expr }),
        inputs_digest: digest(&[state, &expr_input]),
        results: json!({ "value": [value.re, value.im], "printed": format_complex(value) }),
        warnings: horizon_warnings(&handle),
    };
    Ok((value, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CheckKind {
    Positivity,
    Decreasing,
    Essential,
    Singular,
}

impl CheckKind {
    fn name(self) -> &'static str {
        match self {
            CheckKind::Positivity => "positivity",
            CheckKind::Decreasing => "decreasing",
            CheckKind::Essential => "essential",
            CheckKind::Singular => "singular",
        }
    }
}

pub fn cmd_check(state: &Input, what: CheckKind, tol: &Tolerances) -> Result<(Verdict, Report), CliError> {
    let handle = load_state(state)?;
    let (verdict, certificate) = match what {
        CheckKind::Positivity => {
            let cert = is_positive(handle.omega(), tol);
            (if cert.passed { Verdict::Pass } else { Verdict::Fail }, serde_json::to_value(cert))
        }
        CheckKind::Decreasing => {
            let cert = is_decreasing(handle.omega(), tol)?;
            (if cert.passed { Verdict::Pass } else { Verdict::Fail }, serde_json::to_value(cert))
        }
        CheckKind::Essential | CheckKind::Singular => {
            let report = classify(&handle, tol);
            let target = if what == CheckKind::Essential { Classification::Essential } else { Classification::Singular };
            let verdict = match report.classification {
                c if c == target => Verdict::Pass,
                Classification::Undetermined => Verdict::Undetermined,
                _ => Verdict::Fail,
            };
            (verdict, serde_json::to_value(report))
        }
    };
    let certificate = certificate.map_err(|e| CliError::Invalid(e.to_string()))?;
    let report = Report {
        command: "check".into(),
        options: json!({ "what": what.name(), "psd_factor": tol.psd_factor }),
        inputs_digest: digest(&[state]),
        results: json!({ "verdict": verdict.as_str(), "certificate": certificate }),
        warnings: horizon_warnings(&handle),
    };
    Ok((verdict, report))
}

/// Returns the extension as state JSON plus the report.
pub fn cmd_extend(sequence: &Input, measure: &Input, depth: usize, tol: &Tolerances) -> Result<(String, Report), CliError> {
    let seq_json: SequenceJson = serde_json::from_slice(&sequence.bytes).map_err(FormatError::from)?;
    let measure_json: MeasureJson = serde_json::from_slice(&measure.bytes).map_err(FormatError::from)?;
    let seq = seq_json.to_sequence()?;
    let sigma = measure_json.to_measure()?;
    let ctx = FockContext::new(seq.n(), depth).map_err(|e| CliError::Invalid(e.to_string()))?;
    let ext = extend(&seq, &sigma, ctx)?;
    let class = classify(&ext.state, tol);
    let mut warnings = vec![format!("exact horizon is level {depth}; the extension is not represented above it")];
    if ext.is_unique_extension {
        warnings.push("sequence is aperiodic: the product state has a unique extension, the measure is ignored".into());
    }
    let report = Report {
        command: "extend".into(),
        options: json!({ "depth": depth }),
        inputs_digest: digest(&[sequence, measure]),
        results: json!({
            "period": ext.phased.as_ref().map(|p| p.period()),
            "unique_extension": ext.is_unique_extension,
            "classification": class.classification,
            "trace_profile": class.trace_profile,
        }),
        warnings,
    };
    Ok((state_json(&ext.state, class.classification), report))
}

pub struct DecomposeOutput {
    pub singular: String,
    pub essential: String,
    pub profile_csv: String,
    pub report: Report,
}

pub fn cmd_decompose(state: &Input, tol: &Tolerances) -> Result<DecomposeOutput, CliError> {
    let handle = load_state(state)?;
    let parts = decompose(&handle, tol)?;
    let singular_class = classify(&parts.singular, tol).classification;
    let essential_class = classify(&parts.essential, tol).classification;
    let mut warnings = horizon_warnings(&handle);
    if parts.horizon < handle.depth() {
        warnings.push(format!(
            "the parts are determined by the data on levels 0..={}; above that the essential part is copied from the input",
            parts.horizon
        ));
    }
    let report = Report {
        command: "decompose".into(),
        options: json!({ "psd_factor": tol.psd_factor }),
        inputs_digest: digest(&[state]),
        results: json!({
            "stabilized_at": parts.stabilized_at,
            "horizon": parts.horizon,
            "telescoping_error": parts.telescoping_error,
            "phi_error": parts.phi_error,
            "singular": { "classification": singular_class, "trace_profile": parts.singular.trace_profile() },
            "essential": { "classification": essential_class, "trace_profile": parts.essential.trace_profile() },
        }),
        warnings,
    };
    Ok(DecomposeOutput {
        singular: state_json(&parts.singular, singular_class),
        essential: state_json(&parts.essential, essential_class),
        profile_csv: trace_profile_csv(handle.trace_profile()),
        report,
    })
}

/// The vacuum state on `n` letters at depth `depth`.
pub fn cmd_vacuum(n: usize, depth: usize) -> Result<String, CliError> {
    let ctx = FockContext::new(n, depth).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(state_json(&StateHandle::vacuum(ctx), Classification::Singular))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write { path: path.to_owned(), source })
}
