use thiserror::Error;

use crate::graph::{Label, SlotId};

pub type Result<T> = std::result::Result<T, IndexError>;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("label {0} is already live in the index")]
    DuplicateLabel(Label),

    #[error("capacity of {capacity} points exhausted and no deleted slot is available")]
    CapacityExhausted { capacity: usize },

    #[error("label {0} not found")]
    LabelNotFound(Label),

    #[error("label {0} is already marked deleted")]
    AlreadyDeleted(Label),

    #[error("index holds no live points")]
    EmptyIndex,

    #[error("slot {0} is not marked deleted")]
    SlotNotDeleted(SlotId),

    #[error("slot {0} does not exist")]
    UnknownSlot(SlotId),

    #[error("search entry set is empty")]
    EmptyEntrySet,

    #[error("snapshot format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
