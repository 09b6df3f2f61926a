//! Exit-code discipline: 0 success, 2 configuration problems, 3 data
//! problems, 4 internal invariant violations.

use std::fmt;

use edclust_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// The request itself is unusable: bad flags, bad config file, bad
    /// parameter combinations.
    Config(String),
    /// The request is fine but the data on disk is not.
    Data(String),
    /// A library guarantee failed mid-run; outputs cannot be trusted.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        use CoreError::*;
        let msg = err.to_string();
        match err {
            // the user asked for something the inputs cannot satisfy
            InvalidK { .. } | Edges { .. } | Partition { .. } | ZoneOutOfRange { .. }
            | MeasureMismatch { .. } | SingleCluster | Synthetic { .. } | EmptyReference => {
                CliError::Config(msg)
            }
            // the files on disk are malformed or inconsistent
            Io { .. } | Manifest { .. } | PayloadSize { .. } | BadValue { .. }
            | DatesNotIncreasing { .. } | Geometry { .. } | GeometryMismatch { .. }
            | DateMismatch { .. } | Csv { .. } | MatrixFile { .. } => CliError::Data(msg),
            // mismatches between values this process itself produced
            BinCountMismatch { .. } | ZeroBin { .. } | ZoneCountMismatch { .. }
            | AssignmentLength { .. } | EmptyCluster { .. } => CliError::Internal(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
