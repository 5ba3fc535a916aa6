//! Mask, image and label ingestion.

mod catalog;

use std::fmt;
use std::path::Path;

use image::{DynamicImage, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use catalog::raster_files;
pub use catalog::{load_catalog, CatalogSummary, ClassCounts, DatasetCatalog, Sample, SkippedEntry};

/// Default binarization cut: a pixel is foreground iff its intensity is above this.
pub const DEFAULT_THRESHOLD: u8 = 127;

/// Row-major raster of foreground flags.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// All-background mask.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::from_bits(width, height, vec![false; width * height])
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if bits.len() != width * height {
            return Err(Error::shape(
                format!("{} pixels", width * height),
                format!("{} pixels", bits.len()),
            ));
        }
        Ok(Self { width, height, bits })
    }

    /// Builds a mask by evaluating `f(row, col)` at every pixel.
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Self { width, height, bits }
    }

    /// Mask of the given size with foreground exactly at `pixels` (row, col).
    ///
    /// Panics if a pixel lies outside the raster.
    pub fn from_pixels(width: usize, height: usize, pixels: &[(usize, usize)]) -> Self {
        let mut mask = Self::from_fn(width, height, |_, _| false);
        for &(r, c) in pixels {
            mask.set(r, c, true);
        }
        mask
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

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    /// Like [`get`](Self::get) but treats out-of-raster coordinates as background.
    #[inline]
    pub fn get_signed(&self, row: i64, col: i64) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.get(row as usize, col as usize)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / width, i % width))
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{} [", self.width, self.height)?;
        for row in 0..self.height.min(64) {
            let line: String = (0..self.width.min(128))
                .map(|c| if self.get(row, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::shape(
                format!("{} pixels", width * height),
                format!("{} pixels", data.len()),
            ));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    /// Binarizes with the `> threshold` rule used for masks.
    pub fn threshold(&self, threshold: u8) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.data.iter().map(|&v| v > threshold).collect(),
        }
    }
}

/// Binary malignancy label. Malignant is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Benign,
    Malignant,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Benign, ClassLabel::Malignant];

    /// 0 for benign, 1 for malignant.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Benign => 0,
            ClassLabel::Malignant => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            ClassLabel::Benign
        } else {
            ClassLabel::Malignant
        }
    }

    pub fn is_malignant(self) -> bool {
        self == ClassLabel::Malignant
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Benign => "benign",
            ClassLabel::Malignant => "malignant",
        })
    }
}

/// Maps a TI-RADS category to the binary label: 1-3 benign, 4-5 malignant.
///
/// Subcategories such as `4a`/`4B` map by their leading digit.
pub fn map_tirads(category: &str) -> Result<ClassLabel> {
    let trimmed = category.trim();
    let mut chars = trimmed.chars();
    let digit = chars.next().and_then(|c| c.to_digit(10));
    let rest: Vec<char> = chars.collect();
    let suffix_ok = match rest.as_slice() {
        [] => true,
        [c] => c.is_ascii_alphabetic(),
        _ => false,
    };
    match digit {
        Some(1..=3) if suffix_ok => Ok(ClassLabel::Benign),
        Some(4..=5) if suffix_ok => Ok(ClassLabel::Malignant),
        _ => Err(Error::Label(category.to_string())),
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::Format(format!("{} has zero width or height", path.display())));
    }
    Ok(img)
}

/// First channel of an 8-bit-reduced raster.
fn channel0(img: DynamicImage) -> (usize, usize, Vec<u8>) {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        other => other.to_rgba8().pixels().map(|p| p.0[0]).collect(),
    };
    (w, h, data)
}

/// Reads a grayscale raster; multi-channel inputs keep channel 0.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let (w, h, data) = channel0(decode(path)?);
    GrayImage::new(w, h, data)
}

/// Reads a mask raster; a pixel is foreground iff its channel-0 value exceeds `threshold`.
pub fn load_mask(path: &Path, threshold: u8) -> Result<BinaryMask> {
    Ok(load_gray(path)?.threshold(threshold))
}

/// Writes the mask as an 8-bit PNG with foreground 255 and background 0.
pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let data = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    save_gray(&GrayImage::new(mask.width, mask.height, data)?, path)
}

/// Writes an 8-bit grayscale PNG (or PGM, by extension).
pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.data.clone())
        .expect("buffer length matches dimensions");
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Raster file extensions accepted for masks and images.
pub(crate) fn is_raster_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm" | "pnm" | "ppm"))
        .unwrap_or(false)
}
