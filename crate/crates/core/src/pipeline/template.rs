//! The reference face: landmark layout, canonical ids, side table and the
//! authoring of the generic model.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::depth::{Side, SideTable};
use crate::features::{clockwise_from_leftmost, convex_hull, LandmarkQuota, WindowKind, FRONTAL_LANDMARKS};
use crate::mesh::GenericModel;
use crate::Result;

/// Interocular distance of the template in pixels.
pub const TEMPLATE_IOD: f64 = 76.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Eye,
    Nose,
    Mouth,
    Outline,
}

// Visible half: (name, part, dx from the midline, dy from the pupil row, depth
// in front of the pupils). A zero dx is a midline point; every other row has
// a hidden mirror at -dx.
const VISIBLE: [(&str, Part, i32, i32, i32); 31] = [
    ("pupil", Part::Eye, 38, 1, 0),
    ("inner_corner", Part::Eye, 22, 2, 24),
    ("outer_corner", Part::Eye, 54, 0, 14),
    ("upper_lid_inner", Part::Eye, 30, -8, 34),
    ("upper_lid_outer", Part::Eye, 46, -9, 24),
    ("lower_lid_inner", Part::Eye, 29, 11, 34),
    ("lower_lid_outer", Part::Eye, 48, 12, 24),
    ("brow_inner", Part::Eye, 27, -20, 35),
    ("brow_mid", Part::Eye, 39, -23, 25),
    ("brow_outer", Part::Eye, 51, -19, 15),
    ("nose_bridge", Part::Nose, 0, 38, 32),
    ("nose_upper", Part::Nose, 9, 49, 40),
    ("nose_mid", Part::Nose, 14, 61, 42),
    ("nose_wing", Part::Nose, 25, 72, 32),
    ("nose_tip", Part::Nose, 0, 76, 67),
    ("nostril", Part::Nose, 12, 86, 50),
    ("nose_base", Part::Nose, 29, 84, 32),
    ("lip_top", Part::Mouth, 6, 101, 45),
    ("lip_upper", Part::Mouth, 17, 104, 35),
    ("lip_upper_outer", Part::Mouth, 29, 110, 25),
    ("mouth_corner", Part::Mouth, 38, 122, 27),
    ("lip_lower_outer", Part::Mouth, 29, 134, 32),
    ("lip_lower", Part::Mouth, 17, 140, 42),
    ("lip_bottom", Part::Mouth, 6, 143, 52),
    ("forehead", Part::Outline, 24, -62, 19),
    ("temple_upper", Part::Outline, 54, -50, 19),
    ("temple", Part::Outline, 74, -36, 19),
    ("cheekbone", Part::Outline, 80, 14, 14),
    ("cheek", Part::Outline, 76, 60, 19),
    ("jaw", Part::Outline, 64, 108, 15),
    ("chin", Part::Outline, 38, 162, 22),
];

/// One template landmark. `offset` is `(dx, dy, dz)` in template pixels
/// relative to the pupil row on the midline, image axes (y down).
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateLandmark {
    pub id: usize,
    pub name: String,
    pub window: WindowKind,
    pub offset: [f64; 3],
    pub side: Side,
    /// Visible partner of a hidden landmark.
    pub mirror_of: Option<usize>,
}

struct Draft {
    name: String,
    window: WindowKind,
    offset: [f64; 3],
    side: Side,
    partner: Option<usize>,
}

fn drafts() -> Vec<Draft> {
    let mut out = Vec::new();
    for (i, &(name, part, dx, dy, dz)) in VISIBLE.iter().enumerate() {
        let window = |hidden: bool| match part {
            Part::Eye if hidden => WindowKind::LeftEye,
            Part::Eye => WindowKind::RightEye,
            Part::Nose => WindowKind::Nose,
            Part::Mouth => WindowKind::Mouth,
            Part::Outline => WindowKind::Outline,
        };
        let off = [dx as f64, dy as f64, dz as f64];
        if dx == 0 {
            out.push(Draft { name: name.into(), window: window(false), offset: off, side: Side::Midline, partner: None });
            continue;
        }
        out.push(Draft { name: format!("{name}.r"), window: window(false), offset: off, side: Side::Visible, partner: None });
        out.push(Draft {
            name: format!("{name}.l"),
            window: window(true),
            offset: [-off[0], off[1], off[2]],
            side: Side::Hidden,
            partner: Some(i),
        });
    }
    out
}

/// All 60 template landmarks sorted by id. Ids follow the extraction order:
/// window by window, clockwise from the leftmost point inside each window.
pub fn template_landmarks() -> Vec<TemplateLandmark> {
    let drafts = drafts();
    let quota = LandmarkQuota::default();
    let mut id_of = vec![usize::MAX; drafts.len()];
    for kind in WindowKind::ALL {
        let members: Vec<usize> = (0..drafts.len()).filter(|&i| drafts[i].window == kind).collect();
        assert_eq!(members.len(), quota.get(kind), "template quota for {kind:?}");
        let pts: Vec<[f64; 2]> = members.iter().map(|&i| [drafts[i].offset[0], drafts[i].offset[1]]).collect();
        for (rank, k) in clockwise_from_leftmost(&pts).into_iter().enumerate() {
            id_of[members[k]] = quota.offset(kind) + rank;
        }
    }
    // Draft index of each visible row's own entry.
    let visible_draft: BTreeMap<usize, usize> = {
        let mut m = BTreeMap::new();
        let mut row = 0;
        for (i, d) in drafts.iter().enumerate() {
            if d.side != Side::Hidden {
                m.insert(row, i);
                row += 1;
            }
        }
        m
    };
    let mut out: Vec<TemplateLandmark> = drafts
        .iter()
        .enumerate()
        .map(|(i, d)| TemplateLandmark {
            id: id_of[i],
            name: d.name.clone(),
            window: d.window,
            offset: d.offset,
            side: d.side,
            mirror_of: d.partner.map(|row| id_of[visible_draft[&row]]),
        })
        .collect();
    out.sort_by_key(|l| l.id);
    debug_assert_eq!(out.len(), FRONTAL_LANDMARKS);
    out
}

/// Visibility and mirror pairing of the template ids.
pub fn default_side_table() -> SideTable {
    let lms = template_landmarks();
    let pupil = |suffix: &str| lms.iter().find(|l| l.name == format!("pupil.{suffix}")).expect("pupil").id;
    SideTable {
        visible_ids: lms.iter().filter(|l| l.side != Side::Hidden).map(|l| l.id).collect(),
        midline_ids: lms.iter().filter(|l| l.side == Side::Midline).map(|l| l.id).collect(),
        mirror: lms.iter().filter_map(|l| l.mirror_of.map(|v| [l.id, v])).collect(),
        eye_center_ids: [pupil("l"), pupil("r")],
    }
}

/// Template offset → model units: origin between the pupils, y up, one unit
/// per interocular distance.
pub fn template_to_model(offset: [f64; 3]) -> [f64; 3] {
    [offset[0] / TEMPLATE_IOD, -(offset[1] - 1.0) / TEMPLATE_IOD, offset[2] / TEMPLATE_IOD]
}

const INTERIOR_VERTICES: usize = 80;
const MODEL_SEED: u64 = 0x6f72_7468;

/// Builds the generic model from the template: the 60 landmarks as control
/// vertices (vertex index = landmark id) plus seeded interior vertices inside
/// the outline, with depth interpolated from the landmarks.
pub fn author_generic_model() -> Result<GenericModel> {
    let lms = template_landmarks();
    let pts: Vec<[f64; 2]> = lms.iter().map(|l| [l.offset[0], l.offset[1]]).collect();
    let hull = convex_hull(&pts)?;
    let poly: Vec<[f64; 2]> = hull.iter().map(|&i| pts[i]).collect();
    // Signed distance to the hull boundary, positive inside.
    let inside = |p: [f64; 2]| {
        let mut best = f64::INFINITY;
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let cross = ex * (p[1] - a[1]) - ey * (p[0] - a[0]);
            best = best.min(cross / ex.hypot(ey));
        }
        best
    };
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])));
    let (ymin, ymax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));

    let mut rng = ChaCha8Rng::seed_from_u64(MODEL_SEED);
    let mut placed = pts.clone();
    let mut spacing = 9.0;
    let mut attempts = 0;
    while placed.len() < FRONTAL_LANDMARKS + INTERIOR_VERTICES {
        attempts += 1;
        if attempts % 20_000 == 0 {
            spacing *= 0.9;
        }
        let p = [(rng.random_range(xmin..xmax) * 4.0).round() / 4.0, (rng.random_range(ymin..ymax) * 4.0).round() / 4.0];
        if inside(p) < 4.0 {
            continue;
        }
        if placed.iter().any(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < spacing) {
            continue;
        }
        placed.push(p);
    }

    let mut vertices: Vec<[f64; 3]> = lms.iter().map(|l| template_to_model(l.offset)).collect();
    for p in &placed[FRONTAL_LANDMARKS..] {
        let (mut wsum, mut zsum) = (0.0, 0.0);
        for l in &lms {
            let w = 1.0 / ((l.offset[0] - p[0]).powi(2) + (l.offset[1] - p[1]).powi(2));
            wsum += w;
            zsum += w * l.offset[2];
        }
        vertices.push(template_to_model([p[0], p[1], zsum / wsum]));
    }
    let control_map = (0..FRONTAL_LANDMARKS).map(|i| (i, i)).collect();
    GenericModel::triangulated(vertices, control_map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_generic_model;

    #[test]
    fn ids_are_a_permutation_grouped_by_window() {
        let lms = template_landmarks();
        assert!(lms.iter().enumerate().all(|(i, l)| l.id == i));
        let quota = LandmarkQuota::default();
        for l in &lms {
            let lo = quota.offset(l.window);
            assert!(l.id >= lo && l.id < lo + quota.get(l.window), "{} in {:?}", l.name, l.window);
        }
    }

    #[test]
    fn side_table_is_consistent() {
        let t = default_side_table();
        t.validate(FRONTAL_LANDMARKS).unwrap();
        assert_eq!(t.visible_ids.len(), 31);
        assert_eq!(t.midline_ids.len(), 2);
        assert_eq!(t.mirror.len(), 29);
        let lms = template_landmarks();
        for &[h, v] in &t.mirror {
            let (a, b) = (lms[h].offset, lms[v].offset);
            assert_eq!([a[0], a[1], a[2]], [-b[0], b[1], b[2]]);
        }
        let [l, r] = t.eye_center_ids;
        assert_eq!(lms[l].window, WindowKind::LeftEye);
        assert_eq!(lms[r].window, WindowKind::RightEye);
    }

    #[test]
    fn shipped_asset_matches_authoring() {
        assert_eq!(author_generic_model().unwrap(), build_generic_model());
    }

    #[test]
    #[ignore = "rewrites assets/generic_model.json"]
    fn regenerate_generic_model_asset() {
        let m = author_generic_model().unwrap();
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/generic_model.json");
        std::fs::write(path, m.to_json() + "\n").unwrap();
    }
}
