//! Minimal RGB raster with the deterministic kernels the pair pipeline
//! needs: bilinear crop/resize, grayscale, mirror, additive noise,
//! separable Gaussian blur, and rotation about the raster center.
//!
//! Coordinates are continuous with the origin at the top-left corner of
//! the image; pixel `(col, row)` covers the unit square with center
//! `(col + 0.5, row + 0.5)`. All kernels accumulate in f64 and round once,
//! so identical inputs produce identical bytes on every platform.

use crate::error::{Error, Result};
use crate::geometry::BBox;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Interleaved 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if width == 0 || height == 0 {
            return Err(Error::config("raster dimensions must be positive"));
        }
        if data.len() != expected {
            return Err(Error::config(format!(
                "raster data length {} does not match {width}x{height}x3",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, col: u32, row: u32) -> [u8; 3] {
        let i = (row as usize * self.width as usize + col as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn pixel_f64(&self, col: i64, row: i64) -> Option<[f64; 3]> {
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return None;
        }
        let p = self.pixel(col as u32, row as u32);
        Some([p[0] as f64, p[1] as f64, p[2] as f64])
    }

    /// Bilinear sample at a continuous point; `fill` outside the image.
    fn sample(&self, x: f64, y: f64, fill: [f64; 3]) -> [f64; 3] {
        let u = x - 0.5;
        let v = y - 0.5;
        let x0 = u.floor();
        let y0 = v.floor();
        let fx = u - x0;
        let fy = v - y0;
        let (x0, y0) = (x0 as i64, y0 as i64);

        let mut out = [0.0; 3];
        for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
            for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                let px = self.pixel_f64(x0 + dx, y0 + dy).unwrap_or(fill);
                let w = wx * wy;
                for c in 0..3 {
                    out[c] += w * px[c];
                }
            }
        }
        out
    }

    /// Mean channel values over the pixels inside `rect` (continuous
    /// coordinates), or None when the rect misses the image entirely.
    pub fn region_means(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Option<[f64; 3]> {
        let c0 = x0.floor().max(0.0) as u32;
        let r0 = y0.floor().max(0.0) as u32;
        let c1 = (x1.ceil() as i64).clamp(0, self.width as i64) as u32;
        let r1 = (y1.ceil() as i64).clamp(0, self.height as i64) as u32;
        if c0 >= c1 || r0 >= r1 {
            return None;
        }
        let mut sums = [0.0f64; 3];
        for row in r0..r1 {
            for col in c0..c1 {
                let p = self.pixel(col, row);
                for c in 0..3 {
                    sums[c] += p[c] as f64;
                }
            }
        }
        let n = ((c1 - c0) as f64) * ((r1 - r0) as f64);
        Some([sums[0] / n, sums[1] / n, sums[2] / n])
    }

    /// Resample the square crop `[x0, x0+side) x [y0, y0+side)` to an
    /// `out_size` raster, filling out-of-image samples with `fill`.
    pub fn crop_resize(&self, x0: f64, y0: f64, side: f64, out_size: u32, fill: [f64; 3]) -> Raster {
        let mut data = Vec::with_capacity(out_size as usize * out_size as usize * 3);
        let step = side / out_size as f64;
        for row in 0..out_size {
            let sy = y0 + (row as f64 + 0.5) * step;
            for col in 0..out_size {
                let sx = x0 + (col as f64 + 0.5) * step;
                let px = self.sample(sx, sy, fill);
                data.extend(px.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
            }
        }
        Raster {
            width: out_size,
            height: out_size,
            data,
        }
    }

    /// BT.601 luma written back to all three channels.
    pub fn grayscale(&self) -> Raster {
        let mut data = Vec::with_capacity(self.data.len());
        for px in self.data.chunks_exact(3) {
            let luma = (0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64)
                .round()
                .clamp(0.0, 255.0) as u8;
            data.extend_from_slice(&[luma, luma, luma]);
        }
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn hflip(&self) -> Raster {
        let mut data = Vec::with_capacity(self.data.len());
        for row in 0..self.height {
            for col in (0..self.width).rev() {
                data.extend_from_slice(&self.pixel(col, row));
            }
        }
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Additive per-channel Gaussian noise with `sigma` in [0, 1] units of
    /// full scale. Draws row-major, channel order, one normal per channel.
    pub fn add_noise(&self, sigma: f64, rng: &mut ChaCha8Rng) -> Raster {
        let normal = Normal::new(0.0, sigma * 255.0).expect("validated sigma");
        let data = self
            .data
            .iter()
            .map(|&v| (v as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8)
            .collect();
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Separable Gaussian blur with an explicit odd kernel size,
    /// clamp-to-edge sampling, f64 accumulation.
    pub fn gaussian_blur(&self, kernel: usize, sigma: f64) -> Raster {
        debug_assert!(kernel % 2 == 1 && kernel >= 1);
        let half = (kernel / 2) as i64;
        let weights: Vec<f64> = (-half..=half)
            .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.into_iter().map(|w| w / norm).collect();

        let (w, h) = (self.width as i64, self.height as i64);
        let idx = |col: i64, row: i64, c: usize| -> usize {
            (row as usize * self.width as usize + col as usize) * 3 + c
        };

        // horizontal pass into f64
        let mut horizontal = vec![0.0f64; self.data.len()];
        for row in 0..h {
            for col in 0..w {
                for c in 0..3 {
                    let mut acc = 0.0;
                    for (k, &wt) in weights.iter().enumerate() {
                        let src = (col + k as i64 - half).clamp(0, w - 1);
                        acc += wt * self.data[idx(src, row, c)] as f64;
                    }
                    horizontal[idx(col, row, c)] = acc;
                }
            }
        }
        // vertical pass, rounding once
        let mut data = vec![0u8; self.data.len()];
        for row in 0..h {
            for col in 0..w {
                for c in 0..3 {
                    let mut acc = 0.0;
                    for (k, &wt) in weights.iter().enumerate() {
                        let src = (row + k as i64 - half).clamp(0, h - 1);
                        acc += wt * horizontal[idx(col, src, c)];
                    }
                    data[idx(col, row, c)] = acc.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Rotate counterclockwise by `angle_deg` about the raster center,
    /// filling uncovered pixels with the raster's channel means. Returns
    /// the rotated raster; use [`rotate_box_hull`] for the matching box.
    pub fn rotate(&self, angle_deg: f64) -> Raster {
        let fill = self
            .region_means(0.0, 0.0, self.width as f64, self.height as f64)
            .expect("raster is non-empty");
        let theta = angle_deg.to_radians();
        let (sin, cos) = theta.sin_cos();
        let cx = self.width as f64 / 2.0;
        let cy = self.height as f64 / 2.0;

        let mut data = Vec::with_capacity(self.data.len());
        for row in 0..self.height {
            let y = row as f64 + 0.5;
            for col in 0..self.width {
                let x = col as f64 + 0.5;
                // inverse map: rotate the output point by -theta
                let dx = x - cx;
                let dy = y - cy;
                let sx = cx + cos * dx + sin * dy;
                let sy = cy - sin * dx + cos * dy;
                let px = self.sample(sx, sy, fill);
                data.extend(px.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
            }
        }
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Axis-aligned hull of a box rotated with [`Raster::rotate`]'s forward
/// transform, clamped to the raster bounds.
pub fn rotate_box_hull(bbox: &BBox, angle_deg: f64, width: u32, height: u32) -> BBox {
    let theta = angle_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;

    let corners = [
        (bbox.x, bbox.y),
        (bbox.right(), bbox.y),
        (bbox.x, bbox.bottom()),
        (bbox.right(), bbox.bottom()),
    ];
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for (x, y) in corners {
        let dx = x - cx;
        let dy = y - cy;
        // forward map matching the raster rotation
        let ox = cx + cos * dx - sin * dy;
        let oy = cy + sin * dx + cos * dy;
        min_x = min_x.min(ox);
        min_y = min_y.min(oy);
        max_x = max_x.max(ox);
        max_y = max_y.max(oy);
    }
    let min_x = min_x.clamp(0.0, width as f64);
    let min_y = min_y.clamp(0.0, height as f64);
    let max_x = max_x.clamp(0.0, width as f64);
    let max_y = max_y.clamp(0.0, height as f64);
    BBox::new(min_x, min_y, max_x - min_x, max_y - min_y)
}

mod io {
    use super::Raster;
    use crate::error::{Error, Result};
    use std::path::Path;

    impl Raster {
        pub fn from_rgb_image(img: image::RgbImage) -> Result<Self> {
            let (width, height) = img.dimensions();
            Raster::new(width, height, img.into_raw())
        }

        pub fn to_rgb_image(&self) -> image::RgbImage {
            image::RgbImage::from_raw(self.width(), self.height(), self.data().to_vec())
                .expect("raster data length is consistent")
        }

        pub fn load(path: impl AsRef<Path>) -> Result<Self> {
            let img = image::open(path.as_ref())
                .map_err(|e| {
                    Error::config(format!("cannot load {}: {e}", path.as_ref().display()))
                })?
                .into_rgb8();
            Self::from_rgb_image(img)
        }

        pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
            self.to_rgb_image()
                .save_with_format(path.as_ref(), image::ImageFormat::Png)
                .map_err(|e| {
                    Error::config(format!("cannot save {}: {e}", path.as_ref().display()))
                })
        }
    }
}
