use super::Raster;
use crate::Result;

/// Classic CDF remapping: `out(v) = round(255 (cdf(v) - cdf_min) / (N - cdf_min))`.
///
/// A constant image has `cdf_min = N` and is returned unchanged.
pub fn equalize_histogram(img: &Raster) -> Result<Raster> {
    img.expect_planes(1, "equalize_histogram")?;
    let mut hist = [0usize; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let n = img.data().len();
    let mut cdf = [0usize; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist.iter()) {
        acc += h;
        *c = acc;
    }
    let cdf_min = cdf[hist.iter().position(|&h| h > 0).unwrap_or(0)];
    if n == cdf_min {
        return Ok(img.clone());
    }
    let denom = (n - cdf_min) as f64;
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| (255.0 * c.saturating_sub(cdf_min) as f64 / denom).round() as u8)
        .collect();
    let data = img.data().iter().map(|&v| lut[v as usize]).collect();
    Raster::new(img.width(), img.height(), img.semantics(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::Semantics;
    use proptest::prelude::*;

    fn row(values: &[u8]) -> Raster {
        Raster::new(values.len(), 1, Semantics::Gray, values.to_vec()).unwrap()
    }

    #[test]
    fn constant_image_is_unchanged() {
        let img = Raster::filled(4, 3, Semantics::Gray, 77).unwrap();
        assert_eq!(equalize_histogram(&img).unwrap(), img);
    }

    #[test]
    fn two_level_images() {
        assert_eq!(equalize_histogram(&row(&[0, 255])).unwrap().data(), &[0, 255]);
        // cdf(10) = 2 = cdf_min, cdf(20) = 4 = N.
        assert_eq!(equalize_histogram(&row(&[10, 10, 20, 20])).unwrap().data(), &[0, 0, 255, 255]);
    }

    fn linf_to_ramp(data: &[u8]) -> f64 {
        let n = data.len() as f64;
        let mut hist = [0usize; 256];
        for &v in data {
            hist[v as usize] += 1;
        }
        let mut acc = 0usize;
        let mut worst: f64 = 0.0;
        for (v, h) in hist.iter().enumerate() {
            acc += h;
            worst = worst.max((acc as f64 / n - (v as f64 + 1.0) / 256.0).abs());
        }
        worst
    }

    proptest! {
        #[test]
        fn mapping_is_monotone(data in proptest::collection::vec(any::<u8>(), 1..200)) {
            let img = row(&data);
            let out = equalize_histogram(&img).unwrap();
            for i in 0..data.len() {
                for j in 0..data.len() {
                    if data[i] <= data[j] {
                        prop_assert!(out.data()[i] <= out.data()[j]);
                    }
                }
            }
        }

        #[test]
        fn cdf_moves_toward_the_ramp(data in proptest::collection::vec(0u8..120, 20..300)) {
            let out = equalize_histogram(&row(&data)).unwrap();
            prop_assert!(linf_to_ramp(out.data()) <= linf_to_ramp(&data) + 1e-12);
        }
    }
}
