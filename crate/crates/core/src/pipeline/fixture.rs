//! Seeded synthetic frontal/profile pairs with known 3D landmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::template::{template_landmarks, TemplateLandmark};
use crate::depth::{Landmark3D, Side};
use crate::imgproc::{Raster, Semantics};
use crate::{Error, Result};

pub const FRONTAL_SIZE: (usize, usize) = (240, 288);
pub const PROFILE_WIDTH: usize = 160;
pub const BACKGROUND: u8 = 30;
const STAMP_SIGMA2: f64 = 1.4 * 1.4;
/// Minimum Chebyshev distance between visible stamps in the profile.
const PROFILE_SEPARATION: i64 = 8;

/// Intensity of a landmark stamp at squared distance `r2` from its centre,
/// `None` outside the stamp.
pub fn stamp_value(r2: i64) -> Option<u8> {
    (r2 <= 9).then(|| 40 + (200.0 * (-(r2 as f64) / (2.0 * STAMP_SIGMA2)).exp()).round() as u8)
}

/// Face placement drawn from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceParams {
    /// Frontal column and row of the pupil-row midline point.
    pub origin: [i64; 2],
    /// Profile column of the pupils.
    pub origin_z: i64,
    pub x_scale: f64,
    pub z_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub seed: u64,
    pub noise: f64,
    pub params: FaceParams,
    pub frontal: Raster,
    pub profile: Raster,
    /// Frontal column, row and profile column of each landmark, sorted by id.
    pub truth: Vec<Landmark3D>,
}

fn draw_params(rng: &mut ChaCha8Rng, lms: &[TemplateLandmark]) -> (FaceParams, Vec<i64>) {
    loop {
        let params = FaceParams {
            origin: [120 + rng.random_range(-6..=6), 90 + rng.random_range(-6..=6)],
            origin_z: 24 + rng.random_range(-6..=6),
            x_scale: rng.random_range(1.0..1.08),
            z_scale: rng.random_range(0.9..1.2),
        };
        // Depth jitter is shared by mirror pairs so the face stays symmetric.
        let mut dz = vec![0i64; lms.len()];
        for l in lms.iter().filter(|l| l.side != Side::Hidden) {
            let base = (params.z_scale * l.offset[2]).round() as i64;
            dz[l.id] = if base == 0 { 0 } else { (base + rng.random_range(-2..=2)).max(2) };
        }
        for l in lms {
            if let Some(v) = l.mirror_of {
                dz[l.id] = dz[v];
            }
        }
        let visible: Vec<&TemplateLandmark> = lms.iter().filter(|l| l.side != Side::Hidden).collect();
        let separated = visible.iter().enumerate().all(|(i, a)| {
            visible[i + 1..].iter().all(|b| {
                let dy = (a.offset[1] - b.offset[1]).abs() as i64;
                (dz[a.id] - dz[b.id]).abs().max(dy) >= PROFILE_SEPARATION
            })
        });
        if separated {
            return (params, dz);
        }
    }
}

fn render(width: usize, height: usize, centres: &[[i64; 2]]) -> Result<Raster> {
    let mut data = vec![BACKGROUND; width * height];
    for &[cx, cy] in centres {
        for dy in -3..=3i64 {
            for dx in -3..=3i64 {
                let Some(v) = stamp_value(dx * dx + dy * dy) else { continue };
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
                    return Err(Error::invalid(format!("stamp at ({cx}, {cy}) leaves the {width}x{height} image")));
                }
                let px = &mut data[y as usize * width + x as usize];
                *px = (*px).max(v);
            }
        }
    }
    Raster::new(width, height, Semantics::Gray, data)
}

/// Renders a frontal/profile pair. Every landmark becomes a small bright
/// stamp; the profile shows only the landmarks on the camera side. `noise`
/// shifts each rendered stamp by up to that many pixels per axis, rounded to
/// whole pixels, independently in each view. The ground truth is unshifted.
pub fn synth_fixture(seed: u64, noise: f64) -> Result<SyntheticPair> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise must be a non-negative number, got {noise}")));
    }
    let lms = template_landmarks();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, dz) = draw_params(&mut rng, &lms);
    let [ox, oy] = params.origin;

    let mut truth = Vec::with_capacity(lms.len());
    for l in &lms {
        let half = (params.x_scale * l.offset[0].abs()).round() as i64;
        let x = ox + half * l.offset[0].signum() as i64;
        let y = oy + l.offset[1] as i64;
        let z = params.origin_z + dz[l.id];
        truth.push(Landmark3D::new(l.id, x as f64, y as f64, z as f64, l.side));
    }

    let jitter = |rng: &mut ChaCha8Rng| -> i64 {
        if noise == 0.0 {
            0
        } else {
            rng.random_range(-noise..=noise).round() as i64
        }
    };
    let mut frontal_centres = Vec::with_capacity(truth.len());
    for t in &truth {
        frontal_centres.push([t.x as i64 + jitter(&mut rng), t.y as i64 + jitter(&mut rng)]);
    }
    let mut profile_centres = Vec::new();
    for t in truth.iter().filter(|t| t.side != Side::Hidden) {
        profile_centres.push([t.z as i64 + jitter(&mut rng), t.y as i64 + jitter(&mut rng)]);
    }
    let (w, h) = FRONTAL_SIZE;
    Ok(SyntheticPair {
        seed,
        noise,
        params,
        frontal: render(w, h, &frontal_centres)?,
        profile: render(PROFILE_WIDTH, h, &profile_centres)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamp_levels() {
        let levels: Vec<u8> = [0, 1, 2, 4, 5, 8, 9].iter().map(|&r| stamp_value(r).unwrap()).collect();
        assert_eq!(levels, vec![240, 195, 160, 112, 96, 66, 60]);
        assert_eq!(stamp_value(10), None);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_fixture(3, 0.0).unwrap();
        assert_eq!(a, synth_fixture(3, 0.0).unwrap());
        assert_ne!(a.frontal, synth_fixture(4, 0.0).unwrap().frontal);
    }

    #[test]
    fn truth_is_symmetric_about_the_pupil_midpoint() {
        let lms = template_landmarks();
        for seed in 0..20 {
            let f = synth_fixture(seed, 0.0).unwrap();
            let t = &f.truth;
            let table = crate::pipeline::default_side_table();
            let [l, r] = table.eye_center_ids;
            let o = [0.5 * (t[l].x + t[r].x), 0.5 * (t[l].y + t[r].y), t[r].z];
            for lm in &lms {
                if let Some(v) = lm.mirror_of {
                    let d = |p: &Landmark3D| ((p.x - o[0]).powi(2) + (p.y - o[1]).powi(2) + (p.z - o[2]).powi(2)).sqrt();
                    assert!((d(&t[lm.id]) - d(&t[v])).abs() < 1e-9, "seed {seed} id {}", lm.id);
                }
            }
        }
    }

    #[test]
    fn noiseless_stamps_sit_on_the_truth() {
        let f = synth_fixture(1, 0.0).unwrap();
        for t in &f.truth {
            assert_eq!(f.frontal.get(t.x as usize, t.y as usize), 240);
        }
        let peaks = f.profile.data().iter().filter(|&&v| v == 240).count();
        assert_eq!(peaks, 31);
        for t in &f.truth {
            if t.side != Side::Hidden {
                assert_eq!(f.profile.get(t.z as usize, t.y as usize), 240, "id {}", t.id);
            }
        }
    }

    #[test]
    fn noise_moves_stamps_but_not_truth() {
        let a = synth_fixture(9, 0.0).unwrap();
        let b = synth_fixture(9, 1.5).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_ne!(a.frontal, b.frontal);
        assert!(synth_fixture(0, -1.0).is_err());
    }
}
