//! Region-of-interest preprocessing for downstream image classifiers.
//!
//! A nodule ROI is the tight box around the mask's largest component, grown
//! by a fixed padding and clamped to the image, cropped from the grayscale
//! image, resized bilinearly (corner-aligned) to a square, replicated to
//! three channels and normalized with ImageNet statistics.

mod tensor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskio::{BinaryMask, GrayImage};
use crate::morphology::largest_component;

pub use tensor::{export_tensor, import_tensor, read_tensor, write_tensor, TensorHeader, HEADER_BYTES};

pub const IMAGENET_MEAN: [f64; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f64; 3] = [0.229, 0.224, 0.225];
pub const DEFAULT_PADDING: usize = 10;
pub const DEFAULT_SIZE: usize = 224;

/// Inclusive pixel box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub row_min: usize,
    pub col_min: usize,
    pub row_max: usize,
    pub col_max: usize,
}

impl BoundingBox {
    pub fn new(row_min: usize, col_min: usize, row_max: usize, col_max: usize) -> Self {
        debug_assert!(row_min <= row_max && col_min <= col_max);
        Self {
            row_min,
            col_min,
            row_max,
            col_max,
        }
    }

    pub fn width(&self) -> usize {
        self.col_max - self.col_min + 1
    }

    pub fn height(&self) -> usize {
        self.row_max - self.row_min + 1
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row_min..=self.row_max).contains(&row) && (self.col_min..=self.col_max).contains(&col)
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        self.contains(other.row_min, other.col_min) && self.contains(other.row_max, other.col_max)
    }
}

/// Tight box around the largest component.
pub fn bounding_box(mask: &BinaryMask) -> Result<BoundingBox> {
    let (r0, c0, r1, c1) = largest_component(mask)?.bounds();
    Ok(BoundingBox::new(r0, c0, r1, c1))
}

/// Moves every side outward by `padding`, then clamps to the image.
pub fn expand_and_clamp(b: BoundingBox, padding: usize, image_w: usize, image_h: usize) -> BoundingBox {
    BoundingBox::new(
        b.row_min.saturating_sub(padding),
        b.col_min.saturating_sub(padding),
        (b.row_max + padding).min(image_h - 1),
        (b.col_max + padding).min(image_w - 1),
    )
}

/// Grows the shorter side so the box is square, keeping it centered and
/// inside the image; if the image is too small the side is clamped.
pub fn make_square(b: BoundingBox, image_w: usize, image_h: usize) -> BoundingBox {
    let (rows, cols) = grow_to((b.row_min, b.row_max), (b.col_min, b.col_max), image_h, image_w);
    BoundingBox::new(rows.0, cols.0, rows.1, cols.1)
}

fn grow_to(
    rows: (usize, usize),
    cols: (usize, usize),
    image_h: usize,
    image_w: usize,
) -> ((usize, usize), (usize, usize)) {
    let side = (rows.1 - rows.0 + 1).max(cols.1 - cols.0 + 1);
    let grow = |(lo, hi): (usize, usize), limit: usize| -> (usize, usize) {
        let len = side.min(limit);
        let extra = len - (hi - lo + 1);
        let mut start = lo.saturating_sub(extra / 2);
        if start + len > limit {
            start = limit - len;
        }
        (start, start + len - 1)
    };
    (grow(rows, image_h), grow(cols, image_w))
}

/// Single-channel float raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Raster {
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }
}

/// Source coordinate for output index `i` under corner-aligned sampling.
fn source_coord(i: usize, in_len: usize, out_len: usize) -> f64 {
    if out_len <= 1 || in_len <= 1 {
        0.0
    } else {
        (i * (in_len - 1)) as f64 / (out_len - 1) as f64
    }
}

/// Bilinear, corner-aligned resize of the boxed region to `size` x `size`.
/// Output values stay within the range of the input.
pub fn crop_resize(image: &GrayImage, b: &BoundingBox, size: usize) -> Raster {
    let (in_w, in_h) = (b.width(), b.height());
    let px = |r: usize, c: usize| image.get(b.row_min + r, b.col_min + c) as f64;
    let mut data = Vec::with_capacity(size * size);
    for i in 0..size {
        let sy = source_coord(i, in_h, size);
        let y0 = (sy.floor() as usize).min(in_h - 1);
        let y1 = (y0 + 1).min(in_h - 1);
        let fy = sy - y0 as f64;
        for j in 0..size {
            let sx = source_coord(j, in_w, size);
            let x0 = (sx.floor() as usize).min(in_w - 1);
            let x1 = (x0 + 1).min(in_w - 1);
            let fx = sx - x0 as f64;
            let (a, bb, c, d) = (px(y0, x0), px(y0, x1), px(y1, x0), px(y1, x1));
            let top = a + fx * (bb - a);
            let bottom = c + fx * (d - c);
            let v = top + fy * (bottom - top);
            let lo = a.min(bb).min(c).min(d);
            let hi = a.max(bb).max(c).max(d);
            data.push(v.clamp(lo, hi) as f32);
        }
    }
    Raster {
        width: size,
        height: size,
        data,
    }
}

/// Normalized 3-channel tensor in channel-row-col order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiTensor {
    pub sample_id: String,
    pub source_box: BoundingBox,
    /// [channels, rows, cols].
    pub shape: [usize; 3],
    pub data: Vec<f32>,
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl RoiTensor {
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[(channel * self.shape[1] + row) * self.shape[2] + col]
    }

    /// Recovers the gray value in [0, 255] from channel `c`.
    pub fn gray_at(&self, channel: usize, row: usize, col: usize) -> f64 {
        (self.get(channel, row, col) as f64 * self.std[channel] + self.mean[channel]) * 255.0
    }
}

/// Replicates gray to three channels: out_c = (gray/255 - mean_c) / std_c.
pub fn normalize(gray: &Raster, sample_id: &str, source_box: BoundingBox) -> RoiTensor {
    let mut data = Vec::with_capacity(3 * gray.data.len());
    for c in 0..3 {
        data.extend(
            gray.data
                .iter()
                .map(|&v| ((v as f64 / 255.0 - IMAGENET_MEAN[c]) / IMAGENET_STD[c]) as f32),
        );
    }
    RoiTensor {
        sample_id: sample_id.to_string(),
        source_box,
        shape: [3, gray.height, gray.width],
        data,
        mean: IMAGENET_MEAN,
        std: IMAGENET_STD,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiOptions {
    pub padding: usize,
    pub size: usize,
    /// Grow the padded box to a square before resizing.
    pub square: bool,
}

impl Default for RoiOptions {
    fn default() -> Self {
        Self {
            padding: DEFAULT_PADDING,
            size: DEFAULT_SIZE,
            square: false,
        }
    }
}

/// Full transform for one image/mask pair.
pub fn extract_roi(image: &GrayImage, mask: &BinaryMask, sample_id: &str, opts: &RoiOptions) -> Result<RoiTensor> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(Error::shape(
            format!("{}x{} image", mask.width(), mask.height()),
            format!("{}x{} image", image.width(), image.height()),
        ));
    }
    let (w, h) = (image.width(), image.height());
    let mut b = expand_and_clamp(bounding_box(mask)?, opts.padding, w, h);
    if opts.square {
        b = make_square(b, w, h);
    }
    Ok(normalize(&crop_resize(image, &b, opts.size), sample_id, b))
}
