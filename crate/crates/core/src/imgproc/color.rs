use super::{Raster, Semantics};
use crate::{Error, Result};

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Full-range BT.601 conversion.
pub fn rgb_to_ycbcr(img: &Raster) -> Result<Raster> {
    if img.semantics() != Semantics::Rgb {
        return Err(Error::invalid(format!("rgb_to_ycbcr expects RGB, got {:?}", img.semantics())));
    }
    let (r, g, b) = (img.plane_data(0), img.plane_data(1), img.plane_data(2));
    let n = r.len();
    let mut data = vec![0u8; 3 * n];
    for i in 0..n {
        let (r, g, b) = (r[i] as f64, g[i] as f64, b[i] as f64);
        data[i] = to_u8(0.299 * r + 0.587 * g + 0.114 * b);
        data[n + i] = to_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
        data[2 * n + i] = to_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
    }
    Raster::new(img.width(), img.height(), Semantics::YCbCr, data)
}

/// Inverse of [`rgb_to_ycbcr`] up to rounding.
pub fn ycbcr_to_rgb(img: &Raster) -> Result<Raster> {
    if img.semantics() != Semantics::YCbCr {
        return Err(Error::invalid(format!("ycbcr_to_rgb expects YCbCr, got {:?}", img.semantics())));
    }
    let (yp, cb, cr) = (img.plane_data(0), img.plane_data(1), img.plane_data(2));
    let n = yp.len();
    let mut data = vec![0u8; 3 * n];
    for i in 0..n {
        let y = yp[i] as f64;
        let cb = cb[i] as f64 - 128.0;
        let cr = cr[i] as f64 - 128.0;
        data[i] = to_u8(y + 1.402 * cr);
        data[n + i] = to_u8(y - 0.344136 * cb - 0.714136 * cr);
        data[2 * n + i] = to_u8(y + 1.772 * cb);
    }
    Raster::new(img.width(), img.height(), Semantics::Rgb, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pixel(r: u8, g: u8, b: u8) -> Raster {
        Raster::new(1, 1, Semantics::Rgb, vec![r, g, b]).unwrap()
    }

    #[test]
    fn reference_colours() {
        assert_eq!(rgb_to_ycbcr(&pixel(128, 128, 128)).unwrap().data(), &[128, 128, 128]);
        assert_eq!(rgb_to_ycbcr(&pixel(0, 0, 0)).unwrap().data(), &[0, 128, 128]);
        // Y = 76.245, Cb = 84.97, Cr = 255.5 (clamped).
        assert_eq!(rgb_to_ycbcr(&pixel(255, 0, 0)).unwrap().data(), &[76, 85, 255]);
    }

    #[test]
    fn rejects_non_rgb() {
        let gray = Raster::filled(1, 1, Semantics::Gray, 0).unwrap();
        assert!(matches!(rgb_to_ycbcr(&gray), Err(Error::InvalidInput(_))));
    }

    proptest! {
        #[test]
        fn inverse_recovers_rgb_within_rounding(r in any::<u8>(), g in any::<u8>(), b in any::<u8>()) {
            let back = ycbcr_to_rgb(&rgb_to_ycbcr(&pixel(r, g, b)).unwrap()).unwrap();
            for (orig, rec) in [r, g, b].iter().zip(back.data()) {
                prop_assert!((*orig as i32 - *rec as i32).abs() <= 2, "{:?} -> {:?}", (r, g, b), back.data());
            }
        }
    }
}
