use std::fmt;

use deepfake_ballistics::ballistics::{DatasetError, OperatorError, PropertyError};
use deepfake_ballistics::classifiers::ClassifierError;
use deepfake_ballistics::features::FeatureError;
use deepfake_ballistics::imaging::ImagingError;
use deepfake_ballistics::similarity::SimilarityError;
use deepfake_ballistics::store::StoreError;

/// Bad arguments or missing required inputs.
pub const EXIT_USAGE: u8 = 2;
/// Files that cannot be read or written, external engines that fail.
pub const EXIT_IO: u8 = 3;
/// Inputs that are readable but invalid.
pub const EXIT_VALIDATION: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Self::io(e.to_string())
        } else {
            Self::invalid(e.to_string())
        }
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::NotFound(_) | ImagingError::Io { .. } | ImagingError::Encode { .. } => {
                Self::io(e.to_string())
            }
            _ => Self::invalid(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Imaging(inner) => inner.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io(inner) => inner.into(),
            StoreError::Csv(ref inner) if inner.is_io_error() => Self::io(e.to_string()),
            StoreError::Feature(inner) => inner.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<SimilarityError> for CliError {
    fn from(e: SimilarityError) -> Self {
        match e {
            SimilarityError::Imaging(inner) => inner.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::Imaging(inner) => inner.into(),
            OperatorError::EmptyTemplate | OperatorError::MissingPlaceholder(_) => {
                Self::usage(e.to_string())
            }
            OperatorError::EmptyInput | OperatorError::OutputSize { .. } => {
                Self::invalid(e.to_string())
            }
            _ => Self::io(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Imaging(inner) => inner.into(),
            DatasetError::Operator { .. } => {
                let message = e.to_string();
                let DatasetError::Operator { error, .. } = e else {
                    unreachable!()
                };
                Self {
                    code: Self::from(error).code,
                    message,
                }
            }
            DatasetError::Io { .. } => Self::io(e.to_string()),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<PropertyError> for CliError {
    fn from(e: PropertyError) -> Self {
        match e {
            PropertyError::Imaging(inner) => inner.into(),
            PropertyError::Operator(inner) => inner.into(),
            PropertyError::Similarity(inner) => inner.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}
