use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt data: {0}")]
    CorruptData(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("label {label} out of range for {count} centroids")]
    LabelOutOfRange { label: usize, count: usize },

    #[error("palette has {available} colors but {needed} are required")]
    PaletteTooSmall { needed: usize, available: usize },

    #[error("image is {width}x{height}; at least 3x3 is required")]
    ImageTooSmall { width: usize, height: usize },

    #[error("seed set is empty")]
    EmptySeedSet,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid k: {0}")]
    InvalidK(String),

    #[error("segment index {index} out of range for {count} segments")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("directory {} contains no supported images", .0.display())]
    EmptyDirectory(PathBuf),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
