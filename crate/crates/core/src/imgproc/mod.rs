//! Pixel-level primitives.
//!
//! Every operation is a pure function from immutable [`Raster`] values to new
//! rasters, so images can be shared freely between threads.

mod canny;
mod color;
mod histogram;
mod morph;
pub mod pnm;
mod resample;
mod threshold;

pub use canny::{canny_edges, gradient_magnitude, hysteresis, non_maximum_suppression, Gradient};
pub use color::{rgb_to_ycbcr, ycbcr_to_rgb};
pub use histogram::equalize_histogram;
pub use morph::{dilate, erode, morph, MorphMode, StructuringElement};
pub use resample::normalize_scale;
pub use threshold::{binarize, otsu_threshold, Binarized, Polarity, ThresholdMethod};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// What the planes of a [`Raster`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Semantics {
    Rgb,
    YCbCr,
    Gray,
    /// Foreground mask with values in {0, 255}.
    Binary,
    /// Edge mask with values in {0, 255}.
    Edge,
}

impl Semantics {
    pub fn planes(self) -> usize {
        match self {
            Semantics::Rgb | Semantics::YCbCr => 3,
            Semantics::Gray | Semantics::Binary | Semantics::Edge => 1,
        }
    }

    fn is_mask(self) -> bool {
        matches!(self, Semantics::Binary | Semantics::Edge)
    }
}

/// An 8-bit image stored plane after plane, each plane row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    semantics: Semantics,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, semantics: Semantics, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("raster dimensions {width}x{height} must be positive")));
        }
        let expected = width * height * semantics.planes();
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "raster data has {} samples, expected {expected}",
                data.len()
            )));
        }
        if semantics.is_mask() && data.iter().any(|&v| v != 0 && v != 255) {
            return Err(Error::invalid("mask rasters may only contain 0 and 255"));
        }
        Ok(Raster { width, height, semantics, data })
    }

    pub fn filled(width: usize, height: usize, semantics: Semantics, value: u8) -> Result<Self> {
        Raster::new(width, height, semantics, vec![value; width * height * semantics.planes()])
    }

    /// Builds a single-plane raster from a per-pixel function.
    pub fn from_fn(
        width: usize,
        height: usize,
        semantics: Semantics,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        if semantics.planes() != 1 {
            return Err(Error::invalid("from_fn builds single-plane rasters only"));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster::new(width, height, semantics, data)
    }

    /// Builds a mask raster from booleans (`true` becomes 255).
    pub fn from_mask(width: usize, height: usize, semantics: Semantics, mask: &[bool]) -> Result<Self> {
        let data = mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
        Raster::new(width, height, semantics, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn planes(&self) -> usize {
        self.semantics.planes()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn plane_data(&self, plane: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.data[plane * n..(plane + 1) * n]
    }

    /// Copies one plane out as a gray raster.
    pub fn plane(&self, plane: usize) -> Result<Raster> {
        if plane >= self.planes() {
            return Err(Error::invalid(format!("plane {plane} out of range")));
        }
        Raster::new(self.width, self.height, Semantics::Gray, self.plane_data(plane).to_vec())
    }

    /// Sample of plane 0 at `(x, y)`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_plane(&self, plane: usize, x: usize, y: usize) -> u8 {
        self.data[plane * self.width * self.height + y * self.width + x]
    }

    /// Reinterprets a single-plane raster with different semantics.
    pub fn with_semantics(self, semantics: Semantics) -> Result<Raster> {
        Raster::new(self.width, self.height, semantics, self.data)
    }

    pub fn full_roi(&self) -> RegionOfInterest {
        RegionOfInterest { x0: 0, y0: 0, x1: self.width - 1, y1: self.height - 1 }
    }

    /// Set pixels of a mask as `(x, y)` coordinates, row-major.
    pub fn set_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) != 0 {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub(crate) fn expect_planes(&self, planes: usize, op: &str) -> Result<()> {
        if self.planes() != planes {
            return Err(Error::invalid(format!(
                "{op} expects {planes} plane(s), got {:?} with {}",
                self.semantics,
                self.planes()
            )));
        }
        Ok(())
    }
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl RegionOfInterest {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 > x1 || y0 > y1 {
            return Err(Error::invalid(format!("empty region ({x0},{y0})-({x1},{y1})")));
        }
        Ok(RegionOfInterest { x0, y0, x1, y1 })
    }

    /// Checks the region against raster bounds.
    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        if self.x0 > self.x1 || self.y0 > self.y1 || self.x1 >= width || self.y1 >= height {
            return Err(Error::invalid(format!(
                "region {self:?} does not fit a {width}x{height} raster"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x0 as f64 && x <= self.x1 as f64 && y >= self.y0 as f64 && y <= self.y1 as f64
    }

    /// Builds a region from real-valued bounds, rounding outward and clamping
    /// to `bounds`. Returns `None` when nothing of it survives the clamp.
    pub fn from_bounds(x0: f64, y0: f64, x1: f64, y1: f64, bounds: &RegionOfInterest) -> Option<Self> {
        let cx0 = x0.floor().max(bounds.x0 as f64);
        let cy0 = y0.floor().max(bounds.y0 as f64);
        let cx1 = x1.ceil().min(bounds.x1 as f64);
        let cy1 = y1.ceil().min(bounds.y1 as f64);
        if cx0 > cx1 || cy0 > cy1 {
            return None;
        }
        Some(RegionOfInterest { x0: cx0 as usize, y0: cy0 as usize, x1: cx1 as usize, y1: cy1 as usize })
    }
}
