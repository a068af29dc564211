//! Least-squares similarity alignment of corresponding 3D point sets.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `p ↦ scale · rotation · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    /// Row-major.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        SimilarityTransform::identity()
    }
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform { scale: 1.0, rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], translation: [0.0; 3] }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.rotation[r][c])
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.scale * (self.rotation_matrix() * Vector3::from(p)) + Vector3::from(self.translation);
        [v.x, v.y, v.z]
    }
}

pub fn apply_transform(t: &SimilarityTransform, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    points.iter().map(|&p| t.apply(p)).collect()
}

fn centroid(points: &[[f64; 3]]) -> Vector3<f64> {
    points.iter().fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p)) / points.len() as f64
}

/// Mean squared distance between paired points.
pub fn mean_squared_distance(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (Vector3::from(*p) - Vector3::from(*q)).norm_squared()).sum::<f64>() / a.len() as f64
}

/// Similarity transform mapping `source` onto `target` in the least-squares
/// sense, reflections excluded. Returns it with the mean squared residual.
pub fn procrustes_align(source: &[[f64; 3]], target: &[[f64; 3]]) -> Result<(SimilarityTransform, f64)> {
    if source.len() != target.len() {
        return Err(Error::invalid(format!("{} source points but {} targets", source.len(), target.len())));
    }
    if source.len() < 3 {
        return Err(Error::invalid("procrustes alignment needs at least 3 point pairs"));
    }
    let n = source.len() as f64;
    let (mx, my) = (centroid(source), centroid(target));
    let mut cov = Matrix3::zeros();
    let mut src_scatter = Matrix3::zeros();
    let mut var_x = 0.0;
    for (p, q) in source.iter().zip(target) {
        let (x, y) = (Vector3::from(*p) - mx, Vector3::from(*q) - my);
        cov += y * x.transpose();
        src_scatter += x * x.transpose();
        var_x += x.norm_squared();
    }
    cov /= n;
    var_x /= n;
    let sv = src_scatter.symmetric_eigenvalues();
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0] {
        return Err(Error::IllConditioned("source points are coincident or collinear".into()));
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = svd.singular_values;
    // Order singular values descending so the correction hits the smallest.
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let mut s = Vector3::new(1.0, 1.0, 1.0);
    if (u.determinant() * v_t.determinant()) < 0.0 {
        s[idx[2]] = -1.0;
    }
    let rot = u * Matrix3::from_diagonal(&s) * v_t;
    let scale = (0..3).map(|i| d[i] * s[i]).sum::<f64>() / var_x;
    let t = my - scale * rot * mx;
    let transform = SimilarityTransform {
        scale,
        rotation: [
            [rot[(0, 0)], rot[(0, 1)], rot[(0, 2)]],
            [rot[(1, 0)], rot[(1, 1)], rot[(1, 2)]],
            [rot[(2, 0)], rot[(2, 1)], rot[(2, 2)]],
        ],
        translation: [t.x, t.y, t.z],
    };
    let residual = mean_squared_distance(&apply_transform(&transform, source), target);
    Ok((transform, residual))
}
