//! Depth recovery. Visible landmarks get Z from patch matching in the profile
//! view; hidden ones get Z from facial symmetry about the inter-eye origin.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::features::Landmark2D;
use crate::imgproc::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Visible,
    Hidden,
    Midline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark3D {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub side: Side,
    /// Set when the symmetry radicand was negative and clamped to zero.
    #[serde(default)]
    pub clamped: bool,
}

impl Landmark3D {
    pub fn new(id: usize, x: f64, y: f64, z: f64, side: Side) -> Self {
        Landmark3D { id, x, y, z, side, clamped: false }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Patch-matching parameters. The kernel is always 3×3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoicParams {
    pub d_init: usize,
    pub d_step: usize,
    pub d_max: usize,
    /// Inclusive profile column interval; `None` searches every column.
    pub search_z_range: Option<[usize; 2]>,
}

impl Default for SoicParams {
    fn default() -> Self {
        SoicParams { d_init: 0, d_step: 1, d_max: 6, search_z_range: None }
    }
}

impl SoicParams {
    pub fn validate(&self) -> Result<()> {
        if self.d_step == 0 {
            return Err(Error::invalid("SOIC d_step must be at least 1"));
        }
        if self.d_init > self.d_max {
            return Err(Error::invalid(format!("SOIC d_init {} exceeds d_max {}", self.d_init, self.d_max)));
        }
        if let Some([a, b]) = self.search_z_range {
            if a > b {
                return Err(Error::invalid(format!("empty SOIC search range [{a}, {b}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoicMatch {
    pub id: usize,
    pub z: usize,
    /// Profile row of the winning patch.
    pub row: usize,
    pub cost: u64,
    /// Final band half-width.
    pub margin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoicFailure {
    pub id: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SoicOutcome {
    pub matches: Vec<SoicMatch>,
    pub failures: Vec<SoicFailure>,
}

impl SoicOutcome {
    pub fn depths(&self) -> BTreeMap<usize, f64> {
        self.matches.iter().map(|m| (m.id, m.z as f64)).collect()
    }
}

fn patch(img: &Raster, cx: usize, cy: usize) -> [i32; 9] {
    let mut p = [0; 9];
    for dy in 0..3 {
        for dx in 0..3 {
            p[dy * 3 + dx] = img.get(cx + dx - 1, cy + dy - 1) as i32;
        }
    }
    p
}

fn ssd(a: &[i32; 9], b: &[i32; 9]) -> u64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) * (x - y)) as u64).sum()
}

/// Best `(cost, |y'-Y|, z, y')` over the band `[Y-d, Y+d]` clipped to valid rows.
pub(crate) fn band_minimum(
    template: &[i32; 9],
    profile: &Raster,
    y: usize,
    d: usize,
    zs: (usize, usize),
) -> Option<(u64, usize, usize, usize)> {
    let lo = y.saturating_sub(d).max(1);
    let hi = (y + d).min(profile.height().checked_sub(2)?);
    let mut best: Option<(u64, usize, usize, usize)> = None;
    for row in lo..=hi {
        for z in zs.0..=zs.1 {
            let key = (ssd(template, &patch(profile, z, row)), row.abs_diff(y), z, row);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    best
}

fn column_range(profile: &Raster, params: &SoicParams) -> Result<(usize, usize)> {
    let (w, h) = (profile.width(), profile.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!("profile image {w}x{h} is smaller than the 3x3 kernel")));
    }
    let (a, b) = match params.search_z_range {
        Some([a, b]) => (a.max(1), b.min(w - 2)),
        None => (1, w - 2),
    };
    if a > b {
        return Err(Error::invalid("SOIC search range does not overlap the profile interior"));
    }
    Ok((a, b))
}

/// Depth of each landmark by minimum-SSD 3×3 patch matching in the profile.
///
/// For a landmark at `(X, Y)` the profile is searched over the row band
/// `[Y-d, Y+d]`. Starting at `d = d_init`, the band widens by `d_step` while
/// the minimizer sits on its edge and `d < d_max`. Ties prefer the smaller
/// row offset, then the smaller column.
pub fn soic_match(frontal: &Raster, profile: &Raster, landmarks: &[Landmark2D], params: &SoicParams) -> Result<SoicOutcome> {
    frontal.expect_planes(1, "soic_match")?;
    profile.expect_planes(1, "soic_match")?;
    params.validate()?;
    let zs = column_range(profile, params)?;
    let mut out = SoicOutcome::default();
    for lm in landmarks {
        let (cx, cy) = (lm.x.round(), lm.y.round());
        let inside = |c: f64, n: usize| c >= 1.0 && c + 2.0 <= n as f64;
        if !inside(cx, frontal.width()) || !inside(cy, frontal.height()) {
            out.failures.push(SoicFailure { id: lm.id, reason: format!("frontal patch at ({cx}, {cy}) leaves the image") });
            continue;
        }
        let (cx, cy) = (cx as usize, cy as usize);
        if cy + 2 > profile.height() {
            out.failures.push(SoicFailure { id: lm.id, reason: format!("row {cy} is outside the profile image") });
            continue;
        }
        let template = patch(frontal, cx, cy);
        let mut d = params.d_init;
        loop {
            let Some((cost, off, z, row)) = band_minimum(&template, profile, cy, d, zs) else {
                out.failures.push(SoicFailure { id: lm.id, reason: "empty search band".into() });
                break;
            };
            if off == d && d < params.d_max {
                d = (d + params.d_step).min(params.d_max);
                continue;
            }
            out.matches.push(SoicMatch { id: lm.id, z, row, cost, margin: d });
            break;
        }
    }
    Ok(out)
}

/// Midpoint of the two eye centres.
pub fn estimate_origin(left_eye: &Landmark3D, right_eye: &Landmark3D) -> Landmark3D {
    Landmark3D {
        id: left_eye.id.min(right_eye.id),
        x: 0.5 * (left_eye.x + right_eye.x),
        y: 0.5 * (left_eye.y + right_eye.y),
        z: 0.5 * (left_eye.z + right_eye.z),
        side: Side::Midline,
        clamped: false,
    }
}

pub fn pair_distance(visible: &Landmark3D, origin: &Landmark3D) -> f64 {
    let (dx, dy, dz) = (visible.x - origin.x, visible.y - origin.y, visible.z - origin.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryFrame {
    pub origin: Landmark3D,
    pub d_or: f64,
}

impl SymmetryFrame {
    pub fn new(origin: Landmark3D, visible: &Landmark3D) -> Self {
        SymmetryFrame { origin, d_or: pair_distance(visible, &origin) }
    }
}

/// Depth of a hidden landmark at `(xl, yl)` lying on the sphere of radius
/// `d_or` about the origin, on the front side. A negative radicand is clamped
/// to zero and reported through the flag; rounding-level negatives (within
/// `1e-9 d_or²`) count as zero without the flag.
pub fn hidden_depth(xl: f64, yl: f64, frame: &SymmetryFrame) -> (f64, bool) {
    let o = &frame.origin;
    let d2 = frame.d_or * frame.d_or;
    let r = d2 - (xl - o.x).powi(2) - (yl - o.y).powi(2);
    if r < 0.0 && r >= -1e-9 * d2 {
        (o.z, false)
    } else if r < 0.0 {
        (o.z, true)
    } else {
        (r.sqrt() + o.z, false)
    }
}

/// Which frontal ids the profile camera sees, which of those lie on the
/// midline, and the hidden → visible mirror pairing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideTable {
    pub visible_ids: Vec<usize>,
    pub midline_ids: Vec<usize>,
    /// `[hidden, visible]` pairs.
    pub mirror: Vec<[usize; 2]>,
    /// `[left, right]` eye-centre ids; exactly one must be visible.
    pub eye_center_ids: [usize; 2],
}

impl SideTable {
    pub fn validate(&self, total: usize) -> Result<()> {
        let visible: BTreeSet<usize> = self.visible_ids.iter().copied().collect();
        if visible.len() != self.visible_ids.len() {
            return Err(Error::invalid("duplicate visible id"));
        }
        if let Some(&bad) = self.midline_ids.iter().find(|i| !visible.contains(i)) {
            return Err(Error::invalid(format!("midline id {bad} is not visible")));
        }
        let mut seen = visible.clone();
        for &[h, v] in &self.mirror {
            if !visible.contains(&v) || self.midline_ids.contains(&v) {
                return Err(Error::invalid(format!("mirror partner {v} of {h} is not a visible side id")));
            }
            if !seen.insert(h) {
                return Err(Error::invalid(format!("id {h} is assigned twice")));
            }
        }
        if seen.len() != total || seen.iter().any(|&i| i >= total) {
            return Err(Error::invalid(format!("side table covers {} ids, expected 0..{total}", seen.len())));
        }
        let [l, r] = self.eye_center_ids;
        let vis_eyes = [l, r].iter().filter(|i| visible.contains(i) && !self.midline_ids.contains(i)).count();
        let mirrored = self.mirror.iter().any(|&[h, v]| (h == l && v == r) || (h == r && v == l));
        if vis_eyes != 1 || !mirrored {
            return Err(Error::invalid("eye centres must be a hidden/visible mirror pair"));
        }
        Ok(())
    }

    pub fn side_of(&self, id: usize) -> Side {
        if self.midline_ids.contains(&id) {
            Side::Midline
        } else if self.visible_ids.contains(&id) {
            Side::Visible
        } else {
            Side::Hidden
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Sorted by id.
    pub landmarks: Vec<Landmark3D>,
    pub origin: Landmark3D,
}

impl Reconstruction {
    pub fn clamped_ids(&self) -> Vec<usize> {
        self.landmarks.iter().filter(|l| l.clamped).map(|l| l.id).collect()
    }
}

/// Full 3D set. Visible and midline landmarks take their matched depth. The
/// origin is the midpoint of the eye centres in X and Y and sits at the
/// visible eye centre's depth; hidden landmarks then follow from symmetry with
/// their mirror partner.
pub fn build_3d_set(frontal: &[Landmark2D], depths: &BTreeMap<usize, f64>, table: &SideTable) -> Result<Reconstruction> {
    table.validate(frontal.len())?;
    let by_id: BTreeMap<usize, &Landmark2D> = frontal.iter().map(|l| (l.id, l)).collect();
    if by_id.len() != frontal.len() {
        return Err(Error::invalid("duplicate frontal landmark id"));
    }
    let missing: Vec<usize> = table.visible_ids.iter().copied().filter(|i| !depths.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingDepth(missing));
    }
    let lm = |id: usize| -> Result<&Landmark2D> {
        by_id.get(&id).copied().ok_or_else(|| Error::invalid(format!("no frontal landmark with id {id}")))
    };
    let [l, r] = table.eye_center_ids;
    let (le, re) = (lm(l)?, lm(r)?);
    let eye_z = if depths.contains_key(&l) && table.side_of(l) == Side::Visible { depths[&l] } else { depths[&r] };
    let origin = Landmark3D::new(l.min(r), 0.5 * (le.x + re.x), 0.5 * (le.y + re.y), eye_z, Side::Midline);

    let mut out = Vec::with_capacity(frontal.len());
    for &id in &table.visible_ids {
        let p = lm(id)?;
        out.push(Landmark3D::new(id, p.x, p.y, depths[&id], table.side_of(id)));
    }
    for &[h, v] in &table.mirror {
        let (ph, pv) = (lm(h)?, lm(v)?);
        let frame = SymmetryFrame::new(origin, &Landmark3D::new(v, pv.x, pv.y, depths[&v], Side::Visible));
        let (z, clamped) = hidden_depth(ph.x, ph.y, &frame);
        out.push(Landmark3D { id: h, x: ph.x, y: ph.y, z, side: Side::Hidden, clamped });
    }
    out.sort_by_key(|l| l.id);
    Ok(Reconstruction { landmarks: out, origin })
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Visible => "Visible",
        Side::Hidden => "Hidden",
        Side::Midline => "Midline",
    }
}

/// JSON array of `{id, x, y, z, side, clamped}` with six fractional digits.
pub fn landmarks3d_to_json(landmarks: &[Landmark3D]) -> String {
    let mut s = String::from("[\n");
    for (i, l) in landmarks.iter().enumerate() {
        let _ = write!(
            s,
            "  {{\"id\": {}, \"x\": {:.6}, \"y\": {:.6}, \"z\": {:.6}, \"side\": \"{}\", \"clamped\": {}}}",
            l.id,
            l.x,
            l.y,
            l.z,
            side_name(l.side),
            l.clamped
        );
        s.push_str(if i + 1 < landmarks.len() { ",\n" } else { "\n" });
    }
    s.push_str("]\n");
    s
}

pub fn landmarks3d_from_json(text: &str) -> Result<Vec<Landmark3D>> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("3D landmark JSON: {e}")))
}
