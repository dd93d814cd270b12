use std::fmt;
use std::io;
use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in an input a problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: Option<String>,
    pub line: u64,
}

impl Location {
    pub fn new(file: Option<&str>, line: u64) -> Self {
        Location {
            file: file.map(str::to_owned),
            line,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{file}:{}", self.line),
            None => write!(f, "line {}", self.line),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{location}: malformed csv: {message}")]
    MalformedCsv { location: Location, message: String },

    #[error("{location}: ticker {ticker}: {message}")]
    InvalidRow {
        location: Location,
        ticker: String,
        message: String,
    },

    #[error("{location}: ticker {ticker} has conflicting closes on {date} ({first} vs {second})")]
    ConflictingDuplicate {
        location: Location,
        ticker: String,
        date: NaiveDate,
        first: f64,
        second: f64,
    },

    #[error("missing required column '{column}'{}", source_suffix(.file))]
    MissingColumn {
        column: String,
        file: Option<String>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("series for {ticker} has a missing value on {date}")]
    Gap { ticker: String, date: NaiveDate },

    #[error("unknown ticker '{ticker}'{}", suggestion_suffix(.suggestions))]
    UnknownTicker {
        ticker: String,
        suggestions: Vec<String>,
    },

    #[error("singular design matrix for window {window}; try a smaller window")]
    Singular { window: usize },

    #[error("more than {cap} maximal cliques; raise the threshold or the clique cap")]
    CliqueCapExceeded { cap: usize },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

fn source_suffix(source: &Option<String>) -> String {
    source
        .as_ref()
        .map(|s| format!(" in {s}"))
        .unwrap_or_default()
}

fn suggestion_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!("; did you mean: {}", suggestions.join(", "))
    }
}

/// Stable error taxonomy. The discriminants double as process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Usage = 2,
    Parse = 3,
    Data = 4,
    UnknownTicker = 5,
    Io = 6,
    Internal = 70,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Usage => "usage",
            ErrorCode::Parse => "parse",
            ErrorCode::Data => "data",
            ErrorCode::UnknownTicker => "unknown-ticker",
            ErrorCode::Io => "io",
            ErrorCode::Internal => "internal",
        }
    }

    pub fn exit_code(self) -> i32 {
        self as i32
    }
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::MalformedCsv { .. }
            | Error::InvalidRow { .. }
            | Error::ConflictingDuplicate { .. }
            | Error::MissingColumn { .. } => ErrorCode::Parse,
            Error::InvalidArgument(_) => ErrorCode::Usage,
            Error::EmptyResult(_)
            | Error::InsufficientData(_)
            | Error::ZeroVariance(_)
            | Error::Gap { .. }
            | Error::Singular { .. }
            | Error::CliqueCapExceeded { .. } => ErrorCode::Data,
            Error::UnknownTicker { .. } => ErrorCode::UnknownTicker,
            Error::Io { .. } => ErrorCode::Io,
            Error::Internal(_) => ErrorCode::Internal,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(err: csv::Error, file: Option<&str>) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: file.unwrap_or("<stream>").into(),
                source: io::Error::other(err.to_string()),
            },
            _ => Error::MalformedCsv {
                location: Location::new(file, line),
                message: err.to_string(),
            },
        }
    }
}

/// Up to three symbols closest to `query` by edit distance.
pub fn nearest_symbols<'a, I>(candidates: I, query: &str) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let query_upper = query.to_uppercase();
    let mut scored: Vec<(usize, &str)> = candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(&c.to_uppercase(), &query_upper), c))
        .collect();
    scored.sort();
    scored
        .into_iter()
        .take(3)
        .map(|(_, c)| c.to_owned())
        .collect()
}
