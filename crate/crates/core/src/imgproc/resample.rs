use super::{Raster, RegionOfInterest};
use crate::{Error, Result};

/// Bilinearly resamples `img` so that `roi` becomes `target_roi_height` rows
/// tall. Returns the new raster and the applied scale factor.
///
/// Output pixel centres map back to `(x + 0.5) / s - 0.5` in the source, so a
/// factor of one is an exact copy and a factor of one half averages 2x2 blocks.
pub fn normalize_scale(img: &Raster, target_roi_height: usize, roi: &RegionOfInterest) -> Result<(Raster, f64)> {
    if target_roi_height < 8 {
        return Err(Error::invalid(format!("target ROI height {target_roi_height} is below 8")));
    }
    roi.validate_for(img.width(), img.height())?;
    let scale = target_roi_height as f64 / roi.height() as f64;
    if scale == 1.0 {
        return Ok((img.clone(), 1.0));
    }
    let w = ((img.width() as f64 * scale).round() as usize).max(1);
    let h = ((img.height() as f64 * scale).round() as usize).max(1);
    let (sw, sh) = (img.width(), img.height());
    let mut data = vec![0u8; w * h * img.planes()];
    for plane in 0..img.planes() {
        let src = img.plane_data(plane);
        let dst = &mut data[plane * w * h..(plane + 1) * w * h];
        for y in 0..h {
            let fy = ((y as f64 + 0.5) / scale - 0.5).clamp(0.0, (sh - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(sh - 1);
            let ty = fy - y0 as f64;
            for x in 0..w {
                let fx = ((x as f64 + 0.5) / scale - 0.5).clamp(0.0, (sw - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(sw - 1);
                let tx = fx - x0 as f64;
                let p = |xx: usize, yy: usize| src[yy * sw + xx] as f64;
                let top = p(x0, y0) * (1.0 - tx) + p(x1, y0) * tx;
                let bottom = p(x0, y1) * (1.0 - tx) + p(x1, y1) * tx;
                dst[y * w + x] = (top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok((Raster::new(w, h, img.semantics(), data)?, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::Semantics;

    #[test]
    fn identity_when_already_at_target() {
        let img = Raster::from_fn(10, 12, Semantics::Gray, |x, y| (x * 7 + y * 3) as u8).unwrap();
        let roi = RegionOfInterest::new(0, 2, 9, 11).unwrap();
        let (out, s) = normalize_scale(&img, 10, &roi).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(out, img);
    }

    #[test]
    fn halving_averages_blocks() {
        let img = Raster::from_fn(16, 16, Semantics::Gray, |x, y| if (x + y) % 2 == 0 { 200 } else { 40 }).unwrap();
        let (out, s) = normalize_scale(&img, 8, &img.full_roi()).unwrap();
        assert_eq!(s, 0.5);
        assert_eq!((out.width(), out.height()), (8, 8));
        // (200 + 40 + 40 + 200) / 4 = 120.
        assert!(out.data().iter().all(|&v| v == 120));

        let img = Raster::from_fn(16, 16, Semantics::Gray, |x, y| (x * 3 + y * 11) as u8).unwrap();
        let (out, _) = normalize_scale(&img, 8, &img.full_roi()).unwrap();
        for by in 0..8 {
            for bx in 0..8 {
                let mut sum = 0.0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        sum += img.get(2 * bx + dx, 2 * by + dy) as f64;
                    }
                }
                assert_eq!(out.get(bx, by), (sum / 4.0).round() as u8);
            }
        }
    }

    #[test]
    fn ratio_and_errors() {
        let img = Raster::filled(20, 200, Semantics::Gray, 9).unwrap();
        let roi = RegionOfInterest::new(0, 50, 19, 149).unwrap();
        let (_, s) = normalize_scale(&img, 50, &roi).unwrap();
        assert_eq!(s, 0.5);
        assert!(normalize_scale(&img, 4, &roi).is_err());
    }
}
