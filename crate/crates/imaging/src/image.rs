//! Planar RGB image with samples in [0, 1].

use crate::{ImagingError, Result};

/// RGB image stored planar (`data[c*h*w + y*w + x]`), f32 samples in [0, 1].
/// The planar layout matches the NCHW tensors the networks consume.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

pub const CHANNELS: usize = 3;

impl Image {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 8 || height < 8 {
            return Err(ImagingError::InvalidArgument(format!(
                "image {width}x{height} below minimum 8x8"
            )));
        }
        Ok(Image {
            width,
            height,
            data: vec![0.0; CHANNELS * width * height],
        })
    }

    pub fn from_planar(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != CHANNELS * width * height {
            return Err(ImagingError::DimMismatch(format!(
                "{} samples for {width}x{height}x{CHANNELS}",
                data.len()
            )));
        }
        if width < 8 || height < 8 {
            return Err(ImagingError::InvalidArgument(format!(
                "image {width}x{height} below minimum 8x8"
            )));
        }
        let mut img = Image {
            width,
            height,
            data,
        };
        img.clamp();
        Ok(img)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f32] {
        &self.data[c * self.width * self.height..(c + 1) * self.width * self.height]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let wh = self.width * self.height;
        &mut self.data[c * wh..(c + 1) * wh]
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Clamps every sample into [0, 1].
    pub fn clamp(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// BT.601 luminance plane.
    pub fn luminance(&self) -> Vec<f32> {
        let wh = self.width * self.height;
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        let mut y = Vec::with_capacity(wh);
        for i in 0..wh {
            y.push(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
        }
        y
    }

    /// Exact byte hash of sample bit patterns (determinism assertions).
    pub fn bits_hash(&self) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for v in &self.data {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
        h
    }
}
