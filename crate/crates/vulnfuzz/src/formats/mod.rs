//! On-disk formats. Everything is UTF-8 JSON except the corpus (one JSON
//! record per line) and the campaign time series (CSV).

mod acfg;
mod checkpoint;
mod corpus;
mod report;
mod svs;
mod truth;

pub use acfg::{acfg_from_json, acfg_to_json, FunctionDoc};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use corpus::{read_corpus, write_corpus};
pub use report::{report_csv, report_from_json, report_to_json, ReportDoc, ReportMeta};
pub use svs::{svs_from_json, svs_to_json};
pub use truth::{truth_from_json, truth_to_json, TruthBug};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl FormatError {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        FormatError::Invalid(message.into())
    }

    /// Shifts a single-line position onto `line` of a larger document.
    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            FormatError::Syntax { column, message, .. } => FormatError::Syntax { line, column, message },
            FormatError::Invalid(message) => FormatError::Syntax { line, column: 1, message },
        }
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; the position is kept separately.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        FormatError::Syntax { line: e.line(), column: e.column(), message }
    }
}

/// Compact JSON plus a trailing newline, for documents dominated by numbers.
pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("in-memory documents serialize");
    s.push('\n');
    s
}

pub(crate) fn to_json_pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory documents serialize");
    s.push('\n');
    s
}
