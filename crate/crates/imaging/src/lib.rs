//! Image container, PNG I/O, cropping/augmentation and quality metrics.

pub mod image;
pub mod metrics;
pub mod ops;
pub mod png_io;

pub use image::Image;
pub use metrics::{psnr, ssim, PSNR_CAP_DB};
pub use ops::{crop_subimages, downscale};
pub use png_io::{load_png, save_png};

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("png decode error: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ImagingError>;
