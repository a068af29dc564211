use serde::{Deserialize, Serialize};

use super::{Raster, Semantics};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ThresholdMethod {
    Otsu,
    Fixed(u8),
}

/// Which side of the threshold is foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// `intensity >= t` is foreground.
    #[default]
    BrightForeground,
    /// `intensity < t` is foreground.
    DarkForeground,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binarized {
    pub mask: Raster,
    pub threshold: u8,
    /// Set when Otsu found no class separation (constant input); the mask is empty.
    pub degenerate: bool,
}

/// Otsu's threshold: the smallest `t` maximising the between-class variance of
/// the classes `< t` and `>= t`. `None` for a constant histogram.
pub fn otsu_threshold(img: &Raster) -> Result<Option<u8>> {
    img.expect_planes(1, "otsu_threshold")?;
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total = img.data().len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &h)| v as f64 * h as f64).sum();
    let mut best: Option<(u8, f64)> = None;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for t in 0..=255usize {
        if t > 0 {
            w0 += hist[t - 1] as f64;
            sum0 += (t - 1) as f64 * hist[t - 1] as f64;
        }
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if best.is_none_or(|(_, b)| var > b * (1.0 + 1e-9)) {
            best = Some((t as u8, var));
        }
    }
    Ok(best.map(|(t, _)| t))
}

pub fn binarize(img: &Raster, method: ThresholdMethod, polarity: Polarity) -> Result<Binarized> {
    img.expect_planes(1, "binarize")?;
    let (threshold, degenerate) = match method {
        ThresholdMethod::Fixed(t) => (t, false),
        ThresholdMethod::Otsu => match otsu_threshold(img)? {
            Some(t) => (t, false),
            None => {
                let mask = Raster::filled(img.width(), img.height(), Semantics::Binary, 0)?;
                return Ok(Binarized { mask, threshold: 0, degenerate: true });
            }
        },
    };
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let fg = match polarity {
                Polarity::BrightForeground => v >= threshold,
                Polarity::DarkForeground => v < threshold,
            };
            if fg { 255 } else { 0 }
        })
        .collect();
    Ok(Binarized { mask: Raster::new(img.width(), img.height(), Semantics::Binary, data)?, threshold, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force between-class variance with the classes recomputed from
    /// scratch for each candidate threshold.
    fn brute_force_otsu(data: &[u8]) -> Option<u8> {
        let mut best: Option<(u8, f64)> = None;
        for t in 0..=255u16 {
            let lo: Vec<f64> = data.iter().filter(|&&v| (v as u16) < t).map(|&v| v as f64).collect();
            let hi: Vec<f64> = data.iter().filter(|&&v| (v as u16) >= t).map(|&v| v as f64).collect();
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let var = lo.len() as f64 * hi.len() as f64 * (m0 - m1).powi(2);
            match best {
                Some((_, b)) if var <= b * (1.0 + 1e-9) => {}
                _ => best = Some((t as u8, var)),
            }
        }
        best.map(|(t, _)| t)
    }

    #[test]
    fn bimodal_image_splits_between_modes() {
        let mut data = vec![40u8; 50];
        data.extend(vec![200u8; 50]);
        let img = Raster::new(10, 10, Semantics::Gray, data).unwrap();
        let b = binarize(&img, ThresholdMethod::Otsu, Polarity::BrightForeground).unwrap();
        assert!(b.threshold > 40 && b.threshold < 200);
        assert_eq!(b.mask.data().iter().filter(|&&v| v == 255).count(), 50);
        assert!(!b.degenerate);
    }

    #[test]
    fn fixed_threshold_and_polarity() {
        let img = Raster::new(2, 1, Semantics::Gray, vec![0, 255]).unwrap();
        let b = binarize(&img, ThresholdMethod::Fixed(128), Polarity::BrightForeground).unwrap();
        assert_eq!(b.mask.data(), &[0, 255]);
        let d = binarize(&img, ThresholdMethod::Fixed(128), Polarity::DarkForeground).unwrap();
        assert_eq!(d.mask.data(), &[255, 0]);
    }

    #[test]
    fn constant_image_flags_degenerate() {
        let img = Raster::filled(5, 5, Semantics::Gray, 90).unwrap();
        let b = binarize(&img, ThresholdMethod::Otsu, Polarity::BrightForeground).unwrap();
        assert!(b.degenerate);
        assert!(b.mask.data().iter().all(|&v| v == 0));
    }

    proptest! {
        #[test]
        fn otsu_matches_brute_force(data in proptest::collection::vec(any::<u8>(), 2..120)) {
            let img = Raster::new(data.len(), 1, Semantics::Gray, data.clone()).unwrap();
            prop_assert_eq!(otsu_threshold(&img).unwrap(), brute_force_otsu(&data));
        }
    }
}
