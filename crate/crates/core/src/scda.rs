//! Sequential cluster detection over foreground micro features and the
//! assignment of eye, nose and mouth windows from the detected clusters.

use std::collections::{HashMap, VecDeque};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::imgproc::{Raster, RegionOfInterest};
use crate::{Error, Result};

/// A single foreground pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MicroFeature {
    pub x: i64,
    pub y: i64,
}

impl MicroFeature {
    pub fn new(x: i64, y: i64) -> Self {
        MicroFeature { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScdaParams {
    /// Radius of the closed Euclidean neighbourhood disk.
    pub radius: f64,
    /// Minimum neighbourhood population (the point itself included).
    pub alpha: usize,
}

impl ScdaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("SCDA radius must be positive, got {}", self.radius)));
        }
        if self.alpha < 1 {
            return Err(Error::invalid("SCDA alpha must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCluster {
    pub members: Vec<MicroFeature>,
    pub centroid: [f64; 2],
    pub bbox: RegionOfInterest,
    /// Within-cluster scatter, row-major `[[sxx, sxy], [sxy, syy]]`.
    pub scatter: [[f64; 2]; 2],
}

impl PointCluster {
    pub fn scatter_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.scatter[0][0], self.scatter[0][1], self.scatter[1][0], self.scatter[1][1])
    }
}

/// Clusters plus the points that never joined one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub clusters: Vec<PointCluster>,
    pub noise: Vec<MicroFeature>,
}

/// Uniform grid over the points with cell size equal to the radius.
struct Grid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[MicroFeature], cell: f64) -> Grid {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Grid { cell, cells }
    }

    fn key(p: &MicroFeature, cell: f64) -> (i64, i64) {
        ((p.x as f64 / cell).floor() as i64, (p.y as f64 / cell).floor() as i64)
    }

    fn neighbours(&self, points: &[MicroFeature], i: usize, r2: f64) -> Vec<usize> {
        let (cx, cy) = Self::key(&points[i], self.cell);
        let p = points[i];
        let mut out = Vec::new();
        for gy in cy - 1..=cy + 1 {
            for gx in cx - 1..=cx + 1 {
                if let Some(idx) = self.cells.get(&(gx, gy)) {
                    for &j in idx {
                        let (dx, dy) = ((points[j].x - p.x) as f64, (points[j].y - p.y) as f64);
                        if dx * dx + dy * dy <= r2 {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Sequential cluster detection.
///
/// Points are deduplicated and scanned in lexicographic order. A point whose
/// neighbourhood (itself included) holds at least `alpha` points seeds a
/// cluster, which then absorbs everything reachable through chains of such
/// dense points; sparse points join the first cluster that reaches them but do
/// not extend chains. Points no cluster reaches are reported as noise.
pub fn scda_cluster(points: &[MicroFeature], params: &ScdaParams) -> Result<Clustering> {
    params.validate()?;
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let n = pts.len();
    let grid = Grid::new(&pts, params.radius);
    let r2 = params.radius * params.radius;
    let neighbours: Vec<Vec<usize>> = (0..n).map(|i| grid.neighbours(&pts, i, r2)).collect();
    let dense: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= params.alpha).collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if label[seed].is_some() || !dense[seed] {
            continue;
        }
        let id = groups.len();
        let mut members = vec![seed];
        label[seed] = Some(id);
        let mut queue = VecDeque::from([seed]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbours[p] {
                if label[q].is_none() {
                    label[q] = Some(id);
                    members.push(q);
                    if dense[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    let clusters = groups
        .iter()
        .map(|g| scatter_stats(&g.iter().map(|&i| pts[i]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let noise = (0..n).filter(|&i| label[i].is_none()).map(|i| pts[i]).collect();
    Ok(Clustering { clusters, noise })
}

/// Centroid, tight bounding box and within-cluster scatter of a point set.
pub fn scatter_stats(members: &[MicroFeature]) -> Result<PointCluster> {
    if members.is_empty() {
        return Err(Error::invalid("scatter_stats needs at least one point"));
    }
    let n = members.len() as f64;
    let mx = members.iter().map(|p| p.x as f64).sum::<f64>() / n;
    let my = members.iter().map(|p| p.y as f64).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in members {
        let (dx, dy) = (p.x as f64 - mx, p.y as f64 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let x0 = members.iter().map(|p| p.x).min().unwrap();
    let x1 = members.iter().map(|p| p.x).max().unwrap();
    let y0 = members.iter().map(|p| p.y).min().unwrap();
    let y1 = members.iter().map(|p| p.y).max().unwrap();
    if x0 < 0 || y0 < 0 {
        return Err(Error::invalid("micro features must have non-negative pixel coordinates"));
    }
    Ok(PointCluster {
        members: members.to_vec(),
        centroid: [mx, my],
        bbox: RegionOfInterest { x0: x0 as usize, y0: y0 as usize, x1: x1 as usize, y1: y1 as usize },
        scatter: [[sxx, sxy], [sxy, syy]],
    })
}

/// Foreground pixels of a mask as micro features.
pub fn micro_features(mask: &Raster) -> Vec<MicroFeature> {
    mask.set_pixels().into_iter().map(|(x, y)| MicroFeature::new(x as i64, y as i64)).collect()
}

/// Geometry constants of the window-assignment rules. All fractions of `H`
/// refer to the face ROI height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowRules {
    /// Eye candidates have their centroid within this top fraction of the ROI.
    pub eye_band: f64,
    /// How many of the largest candidates compete for the left eye.
    pub top_candidates: usize,
    /// Maximum row difference between the eyes, as a fraction of `H`.
    pub eye_row_tolerance: f64,
    pub nose_top: f64,
    pub nose_bottom: f64,
    pub mouth_bottom: f64,
    /// Padding as a fraction of the interocular distance.
    pub padding: f64,
}

impl Default for WindowRules {
    fn default() -> Self {
        WindowRules {
            eye_band: 0.55,
            top_candidates: 2,
            eye_row_tolerance: 0.12,
            nose_top: 0.13,
            nose_bottom: 0.40,
            mouth_bottom: 0.64,
            padding: 0.10,
        }
    }
}

impl WindowRules {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(self.eye_band) && in_unit(self.eye_row_tolerance) && in_unit(self.padding)) {
            return Err(Error::invalid("window fractions must lie in [0, 1]"));
        }
        if !(0.0 <= self.nose_top && self.nose_top < self.nose_bottom && self.nose_bottom < self.mouth_bottom) {
            return Err(Error::invalid("window rows need 0 <= nose_top < nose_bottom < mouth_bottom"));
        }
        if self.top_candidates < 1 {
            return Err(Error::invalid("top_candidates must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureWindows {
    pub left_eye: RegionOfInterest,
    pub right_eye: RegionOfInterest,
    pub nose: RegionOfInterest,
    pub mouth: RegionOfInterest,
}

fn mean_in(plane: &Raster, roi: &RegionOfInterest) -> f64 {
    let mut sum = 0.0;
    for y in roi.y0..=roi.y1 {
        for x in roi.x0..=roi.x1 {
            sum += plane.get(x, y) as f64;
        }
    }
    sum / (roi.width() * roi.height()) as f64
}

/// Places the four feature windows from the detected clusters.
///
/// The left eye is the leftmost of the largest clusters in the upper band of
/// the face. The right eye is the cluster to its right, on nearly the same
/// row, whose mean `cb` intensity over its bounding box is closest to the left
/// eye's. Nose and mouth windows span the interocular interval horizontally
/// and fixed fractions of the face height below the eye row.
pub fn assign_feature_windows(
    clusters: &[PointCluster],
    face_roi: &RegionOfInterest,
    cb_plane: &Raster,
    rules: &WindowRules,
) -> Result<FeatureWindows> {
    rules.validate()?;
    cb_plane.expect_planes(1, "assign_feature_windows")?;
    face_roi.validate_for(cb_plane.width(), cb_plane.height())?;
    let h = face_roi.height() as f64;
    let band_limit = face_roi.y0 as f64 + rules.eye_band * h;

    let mut candidates: Vec<&PointCluster> = clusters
        .iter()
        .filter(|c| face_roi.contains_point(c.centroid[0], c.centroid[1]) && c.centroid[1] <= band_limit)
        .collect();
    let fail = |reason: String| Error::Localization { reason, clusters: clusters.to_vec() };
    if candidates.len() < 2 {
        return Err(fail(format!("{} eye candidate(s) in the upper face band, need 2", candidates.len())));
    }
    candidates.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then(a.centroid[0].total_cmp(&b.centroid[0]))
            .then(a.centroid[1].total_cmp(&b.centroid[1]))
    });
    let top = &candidates[..rules.top_candidates.min(candidates.len())];
    let left = *top
        .iter()
        .min_by(|a, b| a.centroid[0].total_cmp(&b.centroid[0]))
        .expect("at least one top candidate");
    let left_cb = mean_in(cb_plane, &left.bbox);
    let row_tol = rules.eye_row_tolerance * h;
    let right = candidates
        .iter()
        .filter(|c| !std::ptr::eq(**c, left))
        .filter(|c| c.centroid[0] > left.centroid[0] && (c.centroid[1] - left.centroid[1]).abs() < row_tol)
        .min_by(|a, b| {
            let da = (mean_in(cb_plane, &a.bbox) - left_cb).abs();
            let db = (mean_in(cb_plane, &b.bbox) - left_cb).abs();
            da.total_cmp(&db)
                .then(b.members.len().cmp(&a.members.len()))
                .then(a.centroid[0].total_cmp(&b.centroid[0]))
        })
        .copied()
        .ok_or_else(|| fail("no right-eye candidate on the left eye's row".into()))?;

    let iod = right.centroid[0] - left.centroid[0];
    let pad = rules.padding * iod;
    let eye_row = 0.5 * (left.centroid[1] + right.centroid[1]);
    let nose_top = eye_row + rules.nose_top * h;
    let nose_bottom = eye_row + rules.nose_bottom * h;
    let mouth_bottom = eye_row + rules.mouth_bottom * h;
    let (span0, span1) = (left.centroid[0] - pad, right.centroid[0] + pad);

    let eye_window = |c: &PointCluster| {
        let b = c.bbox;
        let bottom = (b.y1 as f64 + pad).min(nose_top.ceil() - 1.0);
        RegionOfInterest::from_bounds(b.x0 as f64 - pad, b.y0 as f64 - pad, b.x1 as f64 + pad, bottom, face_roi)
    };
    let band = |top: f64, bottom: f64| {
        // Rows [top, bottom) so that adjacent bands do not share a row.
        RegionOfInterest::from_bounds(span0, top.ceil(), span1, bottom.ceil() - 1.0, face_roi)
    };
    let missing = |what: &str| fail(format!("{what} window falls outside the face region"));
    Ok(FeatureWindows {
        left_eye: eye_window(left).ok_or_else(|| missing("left eye"))?,
        right_eye: eye_window(right).ok_or_else(|| missing("right eye"))?,
        nose: band(nose_top, nose_bottom).ok_or_else(|| missing("nose"))?,
        mouth: band(nose_bottom, mouth_bottom).ok_or_else(|| missing("mouth"))?,
    })
}
