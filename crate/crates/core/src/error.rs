use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// PLY header/body problems; `field` names the offending property or element.
    #[error("ply format error in `{field}`: {reason}")]
    PlyFormat { field: String, reason: String },

    #[error("camera rig error: {0}")]
    Camera(String),

    #[error("compact encode error: {0}")]
    Encode(String),

    /// Compact stream failed to parse at `offset`.
    #[error("compact parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },

    #[error("non-finite value in attribute `{0}`")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("png error: {0}")]
    Png(String),

    /// A pipeline stage failed; `stage` is the stage name.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn ply(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::PlyFormat {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(offset: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            reason: reason.into(),
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::PlyFormat { .. } => "ply_format",
            Error::Camera(_) => "camera",
            Error::Encode(_) => "encode",
            Error::Parse { .. } => "parse",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidInput(_) => "invalid_input",
            Error::Config(_) => "config",
            Error::Png(_) => "png",
            Error::Stage { source, .. } => source.kind(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
