//! Generic model, triangulation, alignment, deformation and mesh export.

mod deform;
mod delaunay;
mod model;
mod obj;
mod procrustes;

pub use deform::{deform_vertices, DeformField};
pub use delaunay::delaunay_triangulate;
pub use model::{build_generic_model, degenerate_faces, GenericModel, MODEL_FACES, MODEL_VERTICES};
pub use obj::{export_obj, parse_obj};
pub use procrustes::{apply_transform, mean_squared_distance, procrustes_align, SimilarityTransform};

use crate::depth::Landmark3D;
use crate::{Error, Result};

/// Deforms every model vertex so each control vertex reaches the target with
/// the same landmark id. The model should already be aligned to the targets.
pub fn dffd_deform(model: &GenericModel, targets: &[Landmark3D]) -> Result<Vec<[f64; 3]>> {
    let mut controls = Vec::with_capacity(model.control_map.len());
    let mut missing = Vec::new();
    for (&id, &v) in &model.control_map {
        match targets.iter().find(|t| t.id == id) {
            Some(t) => controls.push((v, t.position())),
            None => missing.push(id),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingDepth(missing));
    }
    deform_vertices(&model.vertices, &controls)
}

/// Mean squared distance between paired points divided by the squared
/// normalization length.
pub fn fit_mse(deformed: &[[f64; 3]], targets: &[[f64; 3]], normalization: f64) -> Result<f64> {
    if deformed.len() != targets.len() || deformed.is_empty() {
        return Err(Error::invalid(format!("cannot compare {} points with {}", deformed.len(), targets.len())));
    }
    if !(normalization > 0.0 && normalization.is_finite()) {
        return Err(Error::invalid(format!("normalization must be positive, got {normalization}")));
    }
    Ok(mean_squared_distance(deformed, targets) / (normalization * normalization))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::Side;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fit_mse_examples() {
        let a = [[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]];
        assert_eq!(fit_mse(&a, &a, 2.0).unwrap(), 0.0);
        assert_eq!(fit_mse(&[[0.0; 3]], &[[0.0, 0.0, 7.0]], 7.0).unwrap(), 1.0);
        assert!(fit_mse(&a, &a, 0.0).is_err());
        assert!(fit_mse(&a, &a[..1], 1.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(1..50);
            let p: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-9.0..9.0))).collect();
            let q: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-9.0..9.0))).collect();
            let norm = rng.random_range(0.5..3.0);
            let mut acc = 0.0;
            for i in 0..n {
                for c in 0..3 {
                    acc += (p[i][c] - q[i][c]) * (p[i][c] - q[i][c]);
                }
            }
            let want = acc / n as f64 / (norm * norm);
            assert!((fit_mse(&p, &q, norm).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn generic_model_deformation_keeps_topology() {
        let m = build_generic_model();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let targets: Vec<Landmark3D> = m
            .control_vertices()
            .into_iter()
            .map(|(id, p)| Landmark3D::new(id, p[0] + rng.random_range(-0.03..0.03), p[1] + rng.random_range(-0.03..0.03), p[2] + rng.random_range(-0.03..0.03), Side::Visible))
            .collect();
        let out = dffd_deform(&m, &targets).unwrap();
        assert_eq!(out.len(), 140);
        for t in &targets {
            let v = out[m.control_map[&t.id]];
            assert!((0..3).all(|c| (v[c] - t.position()[c]).abs() < 1e-8));
        }
        assert!(degenerate_faces(&out, &m.faces).is_empty());
        assert!(matches!(dffd_deform(&m, &targets[1..]), Err(Error::MissingDepth(_))));
    }
}
