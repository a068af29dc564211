//! The generic head model shipped with the crate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::delaunay::delaunay_triangulate;
use crate::{Error, Result};

pub const MODEL_VERTICES: usize = 140;
pub const MODEL_FACES: usize = 264;

const ASSET: &str = include_str!("../../assets/generic_model.json");

/// Vertices in model units: origin between the eye centres, y up, z toward
/// the viewer, one unit per interocular distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericModel {
    pub version: u32,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    /// Landmark id → vertex index.
    pub control_map: BTreeMap<usize, usize>,
}

pub(crate) fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

/// Squared diagonal of the axis-aligned bounding box.
pub(crate) fn bbox_diag2(vertices: &[[f64; 3]]) -> f64 {
    (0..3)
        .map(|c| {
            let lo = vertices.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
            let hi = vertices.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
            (hi - lo).powi(2)
        })
        .sum()
}

/// Faces whose area is at most `1e-9` of the squared bounding-box diagonal.
pub fn degenerate_faces(vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> Vec<usize> {
    let floor = 1e-9 * bbox_diag2(vertices);
    faces
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || triangle_area(vertices[f[0]], vertices[f[1]], vertices[f[2]]) <= floor
        })
        .map(|(i, _)| i)
        .collect()
}

impl GenericModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: GenericModel = serde_json::from_str(text).map_err(|e| Error::Format(format!("generic model: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() != MODEL_VERTICES || self.faces.len() != MODEL_FACES {
            return Err(Error::Format(format!(
                "model has {} vertices and {} faces, expected {MODEL_VERTICES} and {MODEL_FACES}",
                self.vertices.len(),
                self.faces.len()
            )));
        }
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= MODEL_VERTICES)) {
            return Err(Error::Format(format!("face {f:?} has an index out of range")));
        }
        if let Some(&i) = degenerate_faces(&self.vertices, &self.faces).first() {
            return Err(Error::Format(format!("face {i} is degenerate")));
        }
        let targets: BTreeSet<usize> = self.control_map.values().copied().collect();
        if targets.len() != self.control_map.len() || targets.iter().any(|&v| v >= MODEL_VERTICES) {
            return Err(Error::Format("control map must be injective into the vertex list".into()));
        }
        Ok(())
    }

    /// Frontal `(x, y)` projection of the vertices.
    pub fn frontal_projection(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| [v[0], v[1]]).collect()
    }

    /// Builds a model from vertices, triangulating their frontal projection.
    pub fn triangulated(vertices: Vec<[f64; 3]>, control_map: BTreeMap<usize, usize>) -> Result<Self> {
        let proj: Vec<[f64; 2]> = vertices.iter().map(|v| [v[0], v[1]]).collect();
        let faces = delaunay_triangulate(&proj)?;
        let m = GenericModel { version: 1, vertices, faces, control_map };
        m.validate()?;
        Ok(m)
    }

    pub fn control_vertices(&self) -> Vec<(usize, [f64; 3])> {
        self.control_map.iter().map(|(&id, &v)| (id, self.vertices[v])).collect()
    }
}

/// The shipped 140-vertex, 264-face model.
pub fn build_generic_model() -> GenericModel {
    GenericModel::from_json(ASSET).expect("embedded generic model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_model_counts_and_map() {
        let m = build_generic_model();
        assert_eq!(m.vertices.len(), 140);
        assert_eq!(m.faces.len(), 264);
        assert_eq!(m.control_map.len(), 60);
        assert!(m.control_map.keys().all(|&id| id < 60));
    }

    #[test]
    fn faces_are_the_delaunay_triangulation_of_the_projection() {
        let m = build_generic_model();
        assert_eq!(delaunay_triangulate(&m.frontal_projection()).unwrap(), m.faces);
    }

    #[test]
    fn validation_rejects_broken_models() {
        let m = build_generic_model();
        let mut bad = m.clone();
        bad.faces[0] = [0, 0, 1];
        assert!(bad.validate().is_err());
        let mut bad = m.clone();
        bad.faces.pop();
        assert!(bad.validate().is_err());
        let mut bad = m.clone();
        let first = *bad.control_map.values().next().unwrap();
        *bad.control_map.values_mut().last().unwrap() = first;
        assert!(bad.validate().is_err());
        assert_eq!(GenericModel::from_json(&m.to_json()).unwrap(), m);
    }
}
