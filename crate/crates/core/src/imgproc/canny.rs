use std::collections::VecDeque;

use super::{Raster, Semantics};
use crate::{Error, Result};

const SIGMA: f64 = 1.0;
const RADIUS: usize = 2;

/// Sobel response of the Gaussian-smoothed image, divided by 4 so that a full
/// 0-to-255 step has magnitude 255.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

fn gaussian_kernel() -> [f64; 2 * RADIUS + 1] {
    let mut k = [0.0; 2 * RADIUS + 1];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - RADIUS as f64;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// 5x5 separable Gaussian, replicated borders.
fn smooth(img: &Raster) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let k = gaussian_kernel();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * img.get(clamp_idx(x as isize + i as isize - RADIUS as isize, w), y) as f64)
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[clamp_idx(y as isize + i as isize - RADIUS as isize, h) * w + x])
                .sum();
        }
    }
    out
}

pub fn gradient_magnitude(img: &Raster) -> Result<Gradient> {
    img.expect_planes(1, "gradient_magnitude")?;
    let (w, h) = (img.width(), img.height());
    let s = smooth(img);
    let at = |x: isize, y: isize| s[clamp_idx(y, h) * w + clamp_idx(x, w)];
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut magnitude = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let dy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            gx[i] = dx / 4.0;
            gy[i] = dy / 4.0;
            magnitude[i] = gx[i].hypot(gy[i]);
        }
    }
    Ok(Gradient { width: w, height: h, gx, gy, magnitude })
}

/// Thins the magnitude field to ridge pixels along the gradient direction,
/// quantized to 0, 45, 90 and 135 degrees. A pixel survives when it is
/// strictly greater than its backward neighbour and at least its forward one,
/// so two-pixel plateaus keep exactly one pixel.
pub fn non_maximum_suppression(g: &Gradient) -> Vec<f64> {
    let (w, h) = (g.width, g.height);
    let mag = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            g.magnitude[y as usize * w + x as usize]
        }
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = g.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let mut angle = g.gy[i].atan2(g.gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let back = mag(xi - dx, yi - dy);
            let fwd = mag(xi + dx, yi + dy);
            if m > back && m >= fwd {
                out[i] = m;
            }
        }
    }
    out
}

/// Double-threshold linking: keeps every pixel `>= high` and every pixel
/// `>= low` that is 8-connected to one through pixels `>= low`.
pub fn hysteresis(strength: &[f64], width: usize, height: usize, low: f64, high: f64) -> Vec<bool> {
    let mut keep = vec![false; width * height];
    let mut queue = VecDeque::new();
    for (i, &s) in strength.iter().enumerate() {
        if s >= high && s > 0.0 {
            keep[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % width) as isize, (i / width) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if !keep[j] && strength[j] >= low && strength[j] > 0.0 {
                    keep[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    keep
}

/// Gaussian smoothing (sigma 1, 5x5), Sobel gradients, non-maximum
/// suppression and hysteresis edge linking.
pub fn canny_edges(img: &Raster, low: f64, high: f64) -> Result<Raster> {
    if !(0.0 <= low && low < high && high <= 255.0) {
        return Err(Error::invalid(format!("canny thresholds need 0 <= low < high <= 255, got {low}, {high}")));
    }
    let g = gradient_magnitude(img)?;
    let thin = non_maximum_suppression(&g);
    let keep = hysteresis(&thin, g.width, g.height, low, high);
    Raster::from_mask(g.width, g.height, Semantics::Edge, &keep)
}
