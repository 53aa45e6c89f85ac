use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MBR ({xmin}, {ymin}, {xmax}, {ymax}): {reason}")]
    InvalidMbr {
        xmin: f32,
        ymin: f32,
        xmax: f32,
        ymax: f32,
        reason: &'static str,
    },

    #[error("MBRs do not intersect; reference point is undefined")]
    Disjoint,

    #[error("cannot build an R-tree from an empty dataset")]
    EmptyInput,

    #[error("invalid node size {0}: must be at least 4")]
    InvalidNodeSize(usize),

    #[error("malformed tree file at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("line {line}: duplicate object id {id}")]
    DuplicateId { line: u64, id: u32 },

    #[error("object {id} lies outside the grid region")]
    RegionMismatch { id: u32 },

    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),

    #[error("invalid tree {0}")]
    InvalidTree(String),

    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("config error: {0}")]
    ConfigSchema(String),

    /// An internal consistency check failed (engines disagree, counter
    /// out of order, ...). Never caused by user input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
