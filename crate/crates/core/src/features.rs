//! Frontal landmark extraction: average-linkage agglomerative clustering of
//! edge pixels inside each feature window, and convex hull outlines.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::imgproc::{Raster, RegionOfInterest};
use crate::scda::FeatureWindows;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WindowKind {
    LeftEye,
    RightEye,
    Nose,
    Mouth,
    Outline,
}

impl WindowKind {
    /// Id assignment order.
    pub const ALL: [WindowKind; 5] =
        [WindowKind::LeftEye, WindowKind::RightEye, WindowKind::Nose, WindowKind::Mouth, WindowKind::Outline];
}

/// A labelled 2D feature point. In the frontal view `(x, y)` are `(X, Y)`;
/// in the profile view they are `(Z, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark2D {
    pub id: usize,
    pub window: WindowKind,
    pub x: f64,
    pub y: f64,
}

pub const FRONTAL_LANDMARKS: usize = 60;

/// Landmarks per window; always sums to [`FRONTAL_LANDMARKS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QuotaCounts", into = "QuotaCounts")]
pub struct LandmarkQuota {
    counts: QuotaCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotaCounts {
    pub left_eye: usize,
    pub right_eye: usize,
    pub nose: usize,
    pub mouth: usize,
    pub outline: usize,
}

impl TryFrom<QuotaCounts> for LandmarkQuota {
    type Error = Error;
    fn try_from(c: QuotaCounts) -> Result<Self> {
        LandmarkQuota::new(c)
    }
}

impl From<LandmarkQuota> for QuotaCounts {
    fn from(q: LandmarkQuota) -> Self {
        q.counts
    }
}

impl Default for LandmarkQuota {
    fn default() -> Self {
        LandmarkQuota { counts: QuotaCounts { left_eye: 10, right_eye: 10, nose: 12, mouth: 14, outline: 14 } }
    }
}

impl LandmarkQuota {
    pub fn new(counts: QuotaCounts) -> Result<Self> {
        let all = [counts.left_eye, counts.right_eye, counts.nose, counts.mouth, counts.outline];
        if all.contains(&0) {
            return Err(Error::invalid("every window needs at least one landmark"));
        }
        let sum: usize = all.iter().sum();
        if sum != FRONTAL_LANDMARKS {
            return Err(Error::invalid(format!("landmark quota sums to {sum}, expected {FRONTAL_LANDMARKS}")));
        }
        Ok(LandmarkQuota { counts })
    }

    pub fn get(&self, w: WindowKind) -> usize {
        match w {
            WindowKind::LeftEye => self.counts.left_eye,
            WindowKind::RightEye => self.counts.right_eye,
            WindowKind::Nose => self.counts.nose,
            WindowKind::Mouth => self.counts.mouth,
            WindowKind::Outline => self.counts.outline,
        }
    }

    /// First id of each window's block.
    pub fn offset(&self, w: WindowKind) -> usize {
        WindowKind::ALL.iter().take_while(|&&k| k != w).map(|&k| self.get(k)).sum()
    }
}

/// Relative tolerance under which two merge distances count as equal.
const TIE_EPS: f64 = 1e-9;

fn cmp_merge(a: (f64, (usize, usize)), b: (f64, (usize, usize)), key: &[(i64, i64)]) -> Ordering {
    let scale = a.0.abs().max(b.0.abs()).max(1.0);
    if (a.0 - b.0).abs() > TIE_EPS * scale {
        return a.0.total_cmp(&b.0);
    }
    let pair = |(i, j): (usize, usize)| {
        let (ki, kj) = (key[i], key[j]);
        if ki <= kj { (ki, kj) } else { (kj, ki) }
    };
    pair(a.1).cmp(&pair(b.1))
}

/// Average-linkage agglomerative clustering of integer points down to `k`
/// clusters. Equal merge distances are broken by the lexicographically
/// smallest pair of cluster keys, a cluster's key being its smallest member.
/// Returns member index lists ordered by key.
pub fn average_linkage(points: &[(i64, i64)], k: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    // sum[i][j]: total pairwise distance between clusters i and j
    let mut sum = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = ((points[i].0 - points[j].0) as f64, (points[i].1 - points[j].1) as f64);
            let d = (dx * dx + dy * dy).sqrt();
            sum[i * n + j] = d;
            sum[j * n + i] = d;
        }
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut key: Vec<(i64, i64)> = points.to_vec();
    let mut alive: Vec<bool> = vec![true; n];
    let avg = |sum: &[f64], members: &[Vec<usize>], i: usize, j: usize| {
        sum[i * n + j] / (members[i].len() * members[j].len()) as f64
    };
    // best partner cache per cluster, over partners with larger index
    let mut best: Vec<Option<(f64, (usize, usize))>> = vec![None; n];
    let row_best = |i: usize, sum: &[f64], members: &[Vec<usize>], alive: &[bool], key: &[(i64, i64)]| {
        let mut b: Option<(f64, (usize, usize))> = None;
        for j in i + 1..n {
            if alive[j] {
                let cand = (avg(sum, members, i, j), (i, j));
                if b.is_none_or(|cur| cmp_merge(cand, cur, key) == Ordering::Less) {
                    b = Some(cand);
                }
            }
        }
        b
    };
    for i in 0..n {
        best[i] = row_best(i, &sum, &members, &alive, &key);
    }
    let mut count = n;
    while count > k {
        let (_, (a, b)) = best
            .iter()
            .enumerate()
            .filter(|(i, _)| alive[*i])
            .filter_map(|(_, b)| *b)
            .min_by(|x, y| cmp_merge(*x, *y, &key))
            .expect("more than k live clusters");
        // merge b into a (a < b)
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        key[a] = key[a].min(key[b]);
        alive[b] = false;
        best[b] = None;
        for c in 0..n {
            if alive[c] && c != a {
                let s = sum[a * n + c] + sum[b * n + c];
                sum[a * n + c] = s;
                sum[c * n + a] = s;
            }
        }
        count -= 1;
        // Distances to a changed and b vanished; keys of a changed. Refresh the
        // rows that could be affected.
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let stale = match best[i] {
                None => i < a || i < b,
                Some((_, (_, j))) => i <= a || j == a || j == b || i < b,
            };
            if stale {
                best[i] = row_best(i, &sum, &members, &alive, &key);
            }
        }
    }
    let mut out: Vec<(usize, Vec<usize>)> =
        (0..n).filter(|&i| alive[i]).map(|i| (i, std::mem::take(&mut members[i]))).collect();
    out.sort_by_key(|(i, _)| key[*i]);
    Ok(out.into_iter().map(|(_, m)| m).collect())
}

/// Orders points clockwise on screen (image rows grow downward) around their
/// centroid, starting from the leftmost point (topmost among ties).
pub fn clockwise_from_leftmost(points: &[[f64; 2]]) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let start = (0..points.len())
        .min_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(points[a][1].total_cmp(&points[b][1])))
        .unwrap();
    let theta0 = (points[start][1] - cy).atan2(points[start][0] - cx);
    let sweep = |i: usize| {
        if i == start {
            return 0.0;
        }
        let t = (points[i][1] - cy).atan2(points[i][0] - cx) - theta0;
        t.rem_euclid(TAU)
    };
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        sweep(a).total_cmp(&sweep(b)).then_with(|| {
            let da = (points[a][0] - cx).hypot(points[a][1] - cy);
            let db = (points[b][0] - cx).hypot(points[b][1] - cy);
            da.total_cmp(&db)
        })
    });
    idx
}

/// Clusters `pixels` into `k` groups and returns their centroids as landmarks
/// with ids `first_id..first_id + k`, clockwise from the leftmost.
pub fn landmarks_from_pixels(pixels: &[(i64, i64)], k: usize, window: WindowKind, first_id: usize) -> Result<Vec<Landmark2D>> {
    if pixels.len() < k {
        return Err(Error::Extraction {
            window,
            reason: format!("{} edge pixels for {k} landmarks", pixels.len()),
        });
    }
    let groups = average_linkage(pixels, k)?;
    let centroids: Vec<[f64; 2]> = groups
        .iter()
        .map(|g| {
            let m = g.len() as f64;
            [
                g.iter().map(|&i| pixels[i].0 as f64).sum::<f64>() / m,
                g.iter().map(|&i| pixels[i].1 as f64).sum::<f64>() / m,
            ]
        })
        .collect();
    Ok(clockwise_from_leftmost(&centroids)
        .into_iter()
        .enumerate()
        .map(|(rank, i)| Landmark2D { id: first_id + rank, window, x: centroids[i][0], y: centroids[i][1] })
        .collect())
}

fn edge_pixels_in(edges: &Raster, window: &RegionOfInterest, exclude: &[RegionOfInterest]) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for y in window.y0..=window.y1 {
        for x in window.x0..=window.x1 {
            if edges.get(x, y) != 0 && !exclude.iter().any(|r| r.contains(x, y)) {
                out.push((x as i64, y as i64));
            }
        }
    }
    out
}

/// Landmarks of one window: centroids of `k` average-linkage clusters of the
/// window's edge pixels. Ids start at zero.
pub fn extract_landmarks(edges: &Raster, window: &RegionOfInterest, k: usize, kind: WindowKind) -> Result<Vec<Landmark2D>> {
    edges.expect_planes(1, "extract_landmarks")?;
    window.validate_for(edges.width(), edges.height())?;
    landmarks_from_pixels(&edge_pixels_in(edges, window, &[]), k, kind, 0)
}

/// The full frontal set. Outline landmarks come from the edge pixels of the
/// face region that fall outside all four feature windows.
pub fn assemble_frontal_set(
    windows: &FeatureWindows,
    edges: &Raster,
    quota: &LandmarkQuota,
    face_roi: &RegionOfInterest,
) -> Result<Vec<Landmark2D>> {
    edges.expect_planes(1, "assemble_frontal_set")?;
    face_roi.validate_for(edges.width(), edges.height())?;
    let feature_windows = [windows.left_eye, windows.right_eye, windows.nose, windows.mouth];
    let mut out = Vec::with_capacity(FRONTAL_LANDMARKS);
    for kind in WindowKind::ALL {
        let pixels = match kind {
            WindowKind::LeftEye => edge_pixels_in(edges, &windows.left_eye, &[]),
            WindowKind::RightEye => edge_pixels_in(edges, &windows.right_eye, &[]),
            WindowKind::Nose => edge_pixels_in(edges, &windows.nose, &[]),
            WindowKind::Mouth => edge_pixels_in(edges, &windows.mouth, &[]),
            WindowKind::Outline => edge_pixels_in(edges, face_roi, &feature_windows),
        };
        out.extend(landmarks_from_pixels(&pixels, quota.get(kind), kind, quota.offset(kind))?);
    }
    Ok(out)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by the monotone chain. Returns input indices in
/// counterclockwise order (y axis up), starting at the lowest point (leftmost
/// among ties); collinear boundary points are dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Result<Vec<usize>> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("convex hull needs at least 3 points, got {}", points.len())));
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(points[a][1].total_cmp(&points[b][1])));
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &i in iter {
            while hull.len() >= start + 2
                && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        let (a, b) = (idx[0], idx[idx.len() - 1]);
        return Err(Error::DegenerateHull(points[a], points[b]));
    }
    let first = (0..hull.len())
        .min_by(|&a, &b| {
            let (pa, pb) = (points[hull[a]], points[hull[b]]);
            pa[1].total_cmp(&pb[1]).then(pa[0].total_cmp(&pb[0]))
        })
        .unwrap();
    hull.rotate_left(first);
    Ok(hull)
}

/// Hull vertices of a landmark set, in hull order.
pub fn landmark_hull(landmarks: &[Landmark2D]) -> Result<Vec<Landmark2D>> {
    let pts: Vec<[f64; 2]> = landmarks.iter().map(|l| [l.x, l.y]).collect();
    Ok(convex_hull(&pts)?.into_iter().map(|i| landmarks[i]).collect())
}

fn window_name(w: WindowKind) -> &'static str {
    match w {
        WindowKind::LeftEye => "LeftEye",
        WindowKind::RightEye => "RightEye",
        WindowKind::Nose => "Nose",
        WindowKind::Mouth => "Mouth",
        WindowKind::Outline => "Outline",
    }
}

/// JSON array of `{id, window, x, y}` with six fractional digits.
pub fn landmarks_to_json(landmarks: &[Landmark2D]) -> String {
    let mut s = String::from("[\n");
    for (i, l) in landmarks.iter().enumerate() {
        s.push_str(&format!(
            "  {{\"id\": {}, \"window\": \"{}\", \"x\": {:.6}, \"y\": {:.6}}}",
            l.id,
            window_name(l.window),
            l.x,
            l.y
        ));
        s.push_str(if i + 1 < landmarks.len() { ",\n" } else { "\n" });
    }
    s.push_str("]\n");
    s
}

pub fn landmarks_from_json(text: &str) -> Result<Vec<Landmark2D>> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("landmark JSON: {e}")))
}
