use std::fmt;
use std::path::PathBuf;

/// Failure of one CLI invocation, grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag combination or value (exit 2).
    Usage(String),
    /// Unreadable input or unwritable output (exit 3).
    Io { path: PathBuf, source: std::io::Error },
    /// Malformed JSON or schema violation (exit 4).
    Parse(String),
    /// Well-formed input that breaks a system invariant (exit 5).
    Validation(String),
    /// Degenerate crossing or pencil (exit 6).
    Degenerate(String),
    /// Any other numerical failure (exit 7).
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse(_) => 4,
            CliError::Validation(_) => 5,
            CliError::Degenerate(_) => 6,
            CliError::Numerical(_) => 7,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tdstab::Error> for CliError {
    fn from(e: tdstab::Error) -> Self {
        use tdstab::Error as E;
        match e {
            E::DimensionMismatch(_) | E::InvalidInput(_) | E::StepTooLarge { .. } => CliError::Validation(e.to_string()),
            E::DegenerateCrossing { omegas } => {
                let list: Vec<String> = omegas.iter().map(|w| format!("{w:.6}")).collect();
                CliError::Degenerate(format!(
                    "degenerate crossing at ω = {}; rerun without --no-decompose or run `tdstab decompose`",
                    list.join(", ")
                ))
            }
            E::DegeneratePencil => CliError::Degenerate(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
