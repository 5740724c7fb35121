//! Grayscale and binary rasters: thresholding, cluster centroids,
//! projected area and PGM I/O.
//!
//! Pixel `(x, y)` is column `x`, row `y`, with pixel centers at integer
//! coordinates and rows growing downward.

mod cluster;
mod pgm;

pub use cluster::{cluster_centroids, label_clusters, Cluster};
pub use pgm::{read_pgm, write_pgm, write_pgm_ascii, PgmError};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("sample buffer has {got} entries, expected {width}×{height}")]
    Size { width: usize, height: usize, got: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    Range { value: u16, maxval: u16 },
    #[error("maxval must be in 1..=65535")]
    MaxVal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    maxval: u16,
    samples: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, samples: Vec<u16>) -> Result<Self, ImageError> {
        if maxval == 0 {
            return Err(ImageError::MaxVal);
        }
        if samples.len() != width * height {
            return Err(ImageError::Size { width, height, got: samples.len() });
        }
        if let Some(&value) = samples.iter().find(|&&s| s > maxval) {
            return Err(ImageError::Range { value, maxval });
        }
        Ok(Self { width, height, maxval, samples })
    }

    pub fn filled(width: usize, height: usize, maxval: u16, value: u16) -> Result<Self, ImageError> {
        Self::new(width, height, maxval, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }

    /// Sets a sample, clamping to `maxval`.
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.samples[y * self.width + x] = v.min(self.maxval);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImageError> {
        if bits.len() != width * height {
            return Err(ImageError::Size { width, height, got: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Foreground where `sample >= level`.
pub fn threshold(img: &GrayImage, level: u16) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        bits: img.samples.iter().map(|&s| s >= level).collect(),
    }
}

/// Foreground pixel count times the pixel footprint (m²).
pub fn projected_area(img: &BinaryImage, pixel_scale: f64) -> f64 {
    img.count() as f64 * pixel_scale * pixel_scale
}
