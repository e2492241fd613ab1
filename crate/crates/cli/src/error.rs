use phasemix::ValidationReport;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("model is inadmissible: {}", summary(.0))]
    Inadmissible(ValidationReport),

    #[error(transparent)]
    Core(#[from] phasemix::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn summary(report: &ValidationReport) -> String {
    let all: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
    all.join("; ")
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        use phasemix::Error::*;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Inadmissible(_) => "inadmissible_model",
            CliError::Core(e) => match e {
                NotSquare { .. } => "not_square",
                DimensionMismatch(_) => "dimension_mismatch",
                NonFinite(_) => "non_finite",
                Singular { .. } => "singular",
                NoConvergence => "no_convergence",
                UnsupportedSpectrum(_) => "unsupported_spectrum",
                InvalidModel(_) => "invalid_model",
                StructureMismatch(_) => "structure_mismatch",
                ImpossibleObservation => "impossible_observation",
                InvalidTime(_) => "invalid_time",
                InvalidPath(_) => "invalid_path",
                UnsupportedScenario(_) => "unsupported_scenario",
                InfeasibleConditioning { .. } => "infeasible_conditioning",
                InvalidInput(_) => "invalid_input",
            },
        }
    }

    /// What goes to stderr.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Inadmissible(report) = self {
            body["violations"] = json!(report.violations);
        }
        json!({ "error": body })
    }
}
