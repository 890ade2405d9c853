//! Page normalisation: grayscale, fixed working width, white padding and
//! overlapping 64-row strips.

use std::io::Cursor;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Height of one strip handed to a band scorer.
pub const STRIP_HEIGHT: u32 = 64;
/// Distance between consecutive strip origins.
pub const STRIP_STRIDE: u32 = 32;
/// Offset of the scored inner window inside a strip.
pub const STRIP_INNER_OFFSET: u32 = 16;
/// Rows covered by one band flag.
pub const BAND_HEIGHT: u32 = 8;
/// Bands per strip inner window.
pub const BANDS_PER_STRIP: usize = 4;

/// Round-half-up, used for every pixel coordinate computation.
pub fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// 8-bit single channel raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Degenerate(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InputFormat(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Image with every pixel set to `value`. Zero dimensions are bumped to 1.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        let (width, height) = (width.max(1), height.max(1));
        Self {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut img = Self::filled(width, height, 255);
        for y in 0..img.height {
            for x in 0..img.width {
                img.pixels[(y * img.width + x) as usize] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y as usize) * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.pixels[(y as usize) * w + x as usize] = v;
    }

    /// Fills the inclusive rectangle, clipped to the image.
    pub fn fill_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, v: u8) {
        let xa = x0.max(0);
        let ya = y0.max(0);
        let xb = x1.min(self.width as i64 - 1);
        let yb = y1.min(self.height as i64 - 1);
        for y in ya..=yb {
            for x in xa..=xb {
                self.set(x as u32, y as u32, v);
            }
        }
    }

    /// Copies a sub-rectangle; the requested area is clipped to the image.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> GrayImage {
        let x = x.min(self.width - 1);
        let y = y.min(self.height - 1);
        let w = w.clamp(1, self.width - x);
        let h = h.clamp(1, self.height - y);
        let mut pixels = Vec::with_capacity(w as usize * h as usize);
        for row in y..y + h {
            let start = (row * self.width + x) as usize;
            pixels.extend_from_slice(&self.pixels[start..start + w as usize]);
        }
        GrayImage {
            width: w,
            height: h,
            pixels,
        }
    }

    /// Rotates 90° counter-clockwise: the top row becomes the left column.
    pub fn rotate_ccw(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |nx, ny| self.get(w - 1 - ny, nx))
    }

    /// Fraction of pixels strictly darker than `threshold`.
    pub fn ink_fraction(&self, threshold: u8) -> f64 {
        let ink = self.pixels.iter().filter(|&&p| p < threshold).count();
        ink as f64 / self.pixels.len() as f64
    }

    /// Bounding box `(x0, y0, x1, y1)` (inclusive) of pixels darker than
    /// `threshold`, or `None` for a blank image.
    pub fn ink_bbox(&self, threshold: u8) -> Option<(u32, u32, u32, u32)> {
        let mut bbox: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) < threshold {
                    bbox = Some(match bbox {
                        None => (x, y, x, y),
                        Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                    });
                }
            }
        }
        bbox
    }

    /// Decodes a PNG or JPEG file and converts it to grayscale.
    pub fn load(path: impl AsRef<Path>) -> Result<GrayImage> {
        let bytes = std::fs::read(path.as_ref())?;
        Self::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<GrayImage> {
        let dynamic = image::load_from_memory(bytes)?;
        match dynamic {
            image::DynamicImage::ImageLuma8(buf) => {
                let (w, h) = buf.dimensions();
                GrayImage::new(w, h, buf.into_raw())
            }
            other => {
                let rgba = other.to_rgba8();
                let (w, h) = rgba.dimensions();
                to_grayscale(w, h, 4, rgba.as_raw())
            }
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let buf = image::GrayImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel count matches dimensions");
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }
}

/// Converts an interleaved 1/3/4 channel raster to grayscale with BT.601
/// weights (alpha ignored). Single-channel input passes through unchanged.
pub fn to_grayscale(width: u32, height: u32, channels: usize, data: &[u8]) -> Result<GrayImage> {
    if !matches!(channels, 1 | 3 | 4) {
        return Err(Error::InputFormat(format!(
            "unsupported channel count {channels}; expected 1, 3 or 4"
        )));
    }
    let n = width as usize * height as usize;
    if data.len() != n * channels {
        return Err(Error::InputFormat(format!(
            "expected {} bytes for {width}x{height}x{channels}, got {}",
            n * channels,
            data.len()
        )));
    }
    if channels == 1 {
        return GrayImage::new(width, height, data.to_vec());
    }
    let pixels = data
        .chunks_exact(channels)
        .map(|px| {
            // integer form of 0.299 R + 0.587 G + 0.114 B, rounded half up
            let v = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
            ((v + 500) / 1000) as u8
        })
        .collect();
    GrayImage::new(width, height, pixels)
}

/// Maps between original-image and working-image coordinates.
///
/// `scale_*` are original/working ratios; `pad_top` rows were inserted above
/// the resized content.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMap {
    pub scale_x: f64,
    pub scale_y: f64,
    pub pad_top: u32,
    pub pad_bottom: u32,
}

impl Default for ScaleMap {
    fn default() -> Self {
        Self::identity()
    }
}

impl ScaleMap {
    pub fn identity() -> Self {
        Self {
            scale_x: 1.0,
            scale_y: 1.0,
            pad_top: 0,
            pad_bottom: 0,
        }
    }

    pub fn uniform(scale: f64) -> Self {
        Self {
            scale_x: scale,
            scale_y: scale,
            ..Self::identity()
        }
    }

    /// Original → working, exact.
    pub fn to_working(&self, x: f64, y: f64) -> (f64, f64) {
        (x / self.scale_x, y / self.scale_y + self.pad_top as f64)
    }

    /// Working → original, exact.
    pub fn to_original(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale_x, (y - self.pad_top as f64) * self.scale_y)
    }

    pub fn to_working_px(&self, x: i64, y: i64) -> (i64, i64) {
        let (wx, wy) = self.to_working(x as f64, y as f64);
        (round_half_up(wx), round_half_up(wy))
    }

    pub fn to_original_px(&self, x: i64, y: i64) -> (i64, i64) {
        let (ox, oy) = self.to_original(x as f64, y as f64);
        (round_half_up(ox), round_half_up(oy))
    }
}

fn resample_line(src: &[f32], n_out: usize) -> Vec<f32> {
    let n_in = src.len();
    if n_in == n_out {
        return src.to_vec();
    }
    let ratio = n_in as f64 / n_out as f64;
    let mut out = Vec::with_capacity(n_out);
    if n_out < n_in {
        // area average over [i*ratio, (i+1)*ratio)
        for i in 0..n_out {
            let a = i as f64 * ratio;
            let b = (i + 1) as f64 * ratio;
            let mut acc = 0.0f64;
            let mut j = a.floor() as usize;
            while (j as f64) < b && j < n_in {
                let lo = a.max(j as f64);
                let hi = b.min((j + 1) as f64);
                acc += src[j] as f64 * (hi - lo);
                j += 1;
            }
            out.push((acc / ratio) as f32);
        }
    } else {
        // bilinear with pixel-centre alignment
        for i in 0..n_out {
            let s = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (n_in - 1) as f64);
            let j = s.floor() as usize;
            let t = s - j as f64;
            let k = (j + 1).min(n_in - 1);
            out.push((src[j] as f64 * (1.0 - t) + src[k] as f64 * t) as f32);
        }
    }
    out
}

/// Separable resample: area averaging when shrinking an axis, bilinear when
/// enlarging it.
pub fn resample(img: &GrayImage, new_w: u32, new_h: u32) -> GrayImage {
    let (new_w, new_h) = (new_w.max(1), new_h.max(1));
    if new_w == img.width && new_h == img.height {
        return img.clone();
    }
    let (w, h) = (img.width as usize, img.height as usize);
    let mut horiz = vec![0f32; new_w as usize * h];
    let mut row = vec![0f32; w];
    for y in 0..h {
        for (x, v) in row.iter_mut().enumerate() {
            *v = img.pixels[y * w + x] as f32;
        }
        let out = resample_line(&row, new_w as usize);
        horiz[y * new_w as usize..(y + 1) * new_w as usize].copy_from_slice(&out);
    }
    let mut pixels = vec![0u8; new_w as usize * new_h as usize];
    let mut col = vec![0f32; h];
    for x in 0..new_w as usize {
        for (y, v) in col.iter_mut().enumerate() {
            *v = horiz[y * new_w as usize + x];
        }
        let out = resample_line(&col, new_h as usize);
        for (y, v) in out.into_iter().enumerate() {
            pixels[y * new_w as usize + x] = round_half_up(v as f64).clamp(0, 255) as u8;
        }
    }
    GrayImage {
        width: new_w,
        height: new_h,
        pixels,
    }
}

/// Resizes to `target_width`, scaling height proportionally (round half up,
/// at least 1 row). Images already at the target width pass through.
pub fn resize_to_width(img: &GrayImage, target_width: u32) -> (GrayImage, ScaleMap) {
    let target_width = target_width.max(1);
    if img.width == target_width {
        return (img.clone(), ScaleMap::identity());
    }
    let new_h = round_half_up(img.height as f64 * target_width as f64 / img.width as f64).max(1) as u32;
    let out = resample(img, target_width, new_h);
    let map = ScaleMap {
        scale_x: img.width as f64 / target_width as f64,
        scale_y: img.height as f64 / new_h as f64,
        pad_top: 0,
        pad_bottom: 0,
    };
    (out, map)
}

/// Adds `pad` white rows above and below and records them in the scale map.
pub fn pad_vertical(img: &GrayImage, pad: u32, scale: ScaleMap) -> (GrayImage, ScaleMap) {
    let mut map = scale;
    map.pad_top += pad;
    map.pad_bottom += pad;
    if pad == 0 {
        return (img.clone(), map);
    }
    let w = img.width as usize;
    let mut pixels = vec![255u8; w * (img.height + 2 * pad) as usize];
    let off = pad as usize * w;
    pixels[off..off + img.pixels.len()].copy_from_slice(&img.pixels);
    (
        GrayImage {
            width: img.width,
            height: img.height + 2 * pad,
            pixels,
        },
        map,
    )
}

/// One 64-row slice of the padded working page.
#[derive(Debug, Clone)]
pub struct Strip {
    pub origin_y: u32,
    pub pixels: GrayImage,
}

impl Strip {
    /// Rows of the padded page this strip reports on.
    pub fn inner_window(&self) -> Range<u32> {
        self.origin_y + STRIP_INNER_OFFSET..self.origin_y + STRIP_INNER_OFFSET + BANDS_PER_STRIP as u32 * BAND_HEIGHT
    }
}

/// Height the page is white-extended to so that strips of 64 rows at stride
/// 32 fit exactly.
pub fn strip_extended_height(height: u32) -> u32 {
    if height <= STRIP_HEIGHT {
        return STRIP_HEIGHT;
    }
    let extra = height - STRIP_HEIGHT;
    STRIP_HEIGHT + extra.div_ceil(STRIP_STRIDE) * STRIP_STRIDE
}

/// White-extends `img` at the bottom to `height` rows.
pub fn extend_bottom(img: &GrayImage, height: u32) -> GrayImage {
    if height <= img.height {
        return img.clone();
    }
    let mut pixels = img.pixels.clone();
    pixels.resize(img.width as usize * height as usize, 255);
    GrayImage {
        width: img.width,
        height,
        pixels,
    }
}

/// Slices an already padded page into overlapping strips at origins 0, 32,
/// 64, … after white-extending the bottom so the last strip fits.
pub fn slice_strips(img: &GrayImage) -> Vec<Strip> {
    let ext = extend_bottom(img, strip_extended_height(img.height));
    let count = (ext.height - STRIP_HEIGHT) / STRIP_STRIDE + 1;
    (0..count)
        .map(|i| {
            let origin_y = i * STRIP_STRIDE;
            Strip {
                origin_y,
                pixels: ext.crop(0, origin_y, ext.width, STRIP_HEIGHT),
            }
        })
        .collect()
}
