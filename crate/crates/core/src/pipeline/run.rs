//! The staged reconstruction run.

use serde::Serialize;

use super::clock::Stopwatch;
use super::config::{FitMethod, PipelineConfig};
use crate::depth::{build_3d_set, soic_match, Landmark3D, Reconstruction, SoicFailure};
use crate::features::{assemble_frontal_set, Landmark2D};
use crate::imgproc::{
    binarize, canny_edges, equalize_histogram, morph, normalize_scale, rgb_to_ycbcr, MorphMode, Raster, RegionOfInterest,
    Semantics,
};
use crate::mesh::{
    apply_transform, build_generic_model, deform_vertices, degenerate_faces, fit_mse, procrustes_align, GenericModel,
    SimilarityTransform,
};
use crate::scda::{assign_feature_windows, micro_features, scda_cluster, Clustering, FeatureWindows};
use crate::{Error, Result};

/// A failed stage with its cause.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub config_hash: String,
    pub method: FitMethod,
    pub stages: Vec<StageTiming>,
    pub total_ms: f64,
    pub threshold: u8,
    pub scale: f64,
    pub clusters: usize,
    pub frontal_landmarks: usize,
    pub depth_matches: usize,
    pub soic_failures: Vec<SoicFailure>,
    pub landmarks_3d: usize,
    pub clamped_ids: Vec<usize>,
    pub interocular_px: f64,
    pub alignment_scale: f64,
    /// Normalized MSE at the control vertices after the similarity alignment.
    pub normalized_mse_aligned: f64,
    /// Normalized MSE at the control vertices of the output mesh.
    pub normalized_mse: f64,
    pub degenerate_faces: usize,
}

/// Working images of the frontal view after preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontalPlanes {
    /// Luma: edges and patch matching.
    pub luma: Raster,
    /// Red-difference chroma: thresholded for skin features.
    pub cr: Raster,
    /// Blue-difference chroma: compared between eye candidates.
    pub cb: Raster,
}

/// Output of the feature-localization stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    pub planes: FrontalPlanes,
    pub scale: f64,
    pub threshold: u8,
    pub mask: Raster,
    pub clustering: Clustering,
    pub face_roi: RegionOfInterest,
    pub windows: FeatureWindows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub localization: Localization,
    pub profile: Raster,
    pub edges: Raster,
    pub frontal_landmarks: Vec<Landmark2D>,
    /// Image coordinates: frontal column and row, profile column.
    pub reconstruction: Reconstruction,
    /// The reconstruction in model units.
    pub targets: Vec<Landmark3D>,
    pub transform: SimilarityTransform,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub report: FitReport,
}

struct Stages {
    start: Stopwatch,
    timings: Vec<StageTiming>,
}

impl Stages {
    fn new() -> Self {
        Stages { start: Stopwatch::start(), timings: Vec::new() }
    }

    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T, StageError> {
        let t = Stopwatch::start();
        let out = f().map_err(|source| StageError { stage, source });
        self.timings.push(StageTiming { stage, ms: t.ms() });
        out
    }
}

fn split_planes(img: &Raster) -> Result<FrontalPlanes> {
    match img.semantics() {
        Semantics::Gray => Ok(FrontalPlanes { luma: img.clone(), cr: img.clone(), cb: img.clone() }),
        Semantics::Rgb => split_planes(&rgb_to_ycbcr(img)?),
        Semantics::YCbCr => Ok(FrontalPlanes { luma: img.plane(0)?, cb: img.plane(1)?, cr: img.plane(2)? }),
        s => Err(Error::invalid(format!("cannot process a {s:?} raster as a face image"))),
    }
}

fn luma(img: &Raster) -> Result<Raster> {
    Ok(split_planes(img)?.luma)
}

fn rescale(img: &Raster, scale: f64) -> Result<Raster> {
    let target = ((img.height() as f64 * scale).round() as usize).max(1);
    Ok(normalize_scale(img, target, &img.full_roi())?.0)
}

/// Equalization and optional rescaling of both views.
fn preprocess(frontal: &Raster, profile: &Raster, cfg: &PipelineConfig) -> Result<(FrontalPlanes, Raster, f64)> {
    let mut planes = split_planes(frontal)?;
    let mut profile = luma(profile)?;
    if cfg.preprocess.equalize {
        let gray = frontal.semantics() == Semantics::Gray;
        planes.luma = equalize_histogram(&planes.luma)?;
        if gray {
            planes.cr = planes.luma.clone();
            planes.cb = planes.luma.clone();
        } else {
            planes.cr = equalize_histogram(&planes.cr)?;
            planes.cb = equalize_histogram(&planes.cb)?;
        }
        profile = equalize_histogram(&profile)?;
    }
    let mut scale = 1.0;
    if let Some(h) = cfg.preprocess.target_height {
        scale = h as f64 / frontal.height() as f64;
        planes.luma = rescale(&planes.luma, scale)?;
        planes.cr = rescale(&planes.cr, scale)?;
        planes.cb = rescale(&planes.cb, scale)?;
        profile = rescale(&profile, scale)?;
    }
    Ok((planes, profile, scale))
}

fn localize_stages(stages: &mut Stages, frontal: &Raster, profile: &Raster, cfg: &PipelineConfig) -> Result<(Localization, Raster), StageError> {
    let (planes, profile, scale) = stages.run("preprocess", || preprocess(frontal, profile, cfg))?;
    let bin = stages.run("threshold", || binarize(&planes.cr, cfg.threshold.method, cfg.threshold.polarity))?;
    let mask = stages.run("morphology", || {
        let se = cfg.morphology.structuring_element()?;
        let mut m = bin.mask.clone();
        if cfg.morphology.open {
            m = morph(&m, &se, MorphMode::Open)?;
        }
        if cfg.morphology.close {
            m = morph(&m, &se, MorphMode::Close)?;
        }
        Ok(m)
    })?;
    let (clustering, face_roi) = stages.run("clustering", || {
        let clustering = scda_cluster(&micro_features(&mask), &cfg.clustering.params())?;
        let roi = face_region(&clustering, cfg.clustering.face_margin, &mask)?;
        Ok((clustering, roi))
    })?;
    let windows = stages.run("windows", || assign_feature_windows(&clustering.clusters, &face_roi, &planes.cb, &cfg.windows))?;
    Ok((Localization { planes, scale, threshold: bin.threshold, mask, clustering, face_roi, windows }, profile))
}

/// Bounding box of all clustered pixels grown by `margin`, clipped to the image.
fn face_region(clustering: &Clustering, margin: usize, img: &Raster) -> Result<RegionOfInterest> {
    let mut it = clustering.clusters.iter().map(|c| c.bbox);
    let first = it.next().ok_or_else(|| Error::Localization {
        reason: "no foreground clusters".into(),
        clusters: Vec::new(),
    })?;
    let b = it.fold(first, |a, b| RegionOfInterest {
        x0: a.x0.min(b.x0),
        y0: a.y0.min(b.y0),
        x1: a.x1.max(b.x1),
        y1: a.y1.max(b.y1),
    });
    Ok(RegionOfInterest {
        x0: b.x0.saturating_sub(margin),
        y0: b.y0.saturating_sub(margin),
        x1: (b.x1 + margin).min(img.width() - 1),
        y1: (b.y1 + margin).min(img.height() - 1),
    })
}

/// Preprocessing through window assignment on a frontal image alone.
pub fn localize(frontal: &Raster, cfg: &PipelineConfig) -> Result<Localization, StageError> {
    let mut stages = Stages::new();
    Ok(localize_stages(&mut stages, frontal, frontal, cfg)?.0)
}

/// Image coordinates → model units: origin at the reconstruction origin, y
/// up, one unit per interocular distance.
pub fn to_model_frame(rec: &Reconstruction, iod: f64) -> Vec<Landmark3D> {
    let o = rec.origin;
    rec.landmarks
        .iter()
        .map(|l| Landmark3D { x: (l.x - o.x) / iod, y: -(l.y - o.y) / iod, z: (l.z - o.z) / iod, ..*l })
        .collect()
}

/// Aligns the generic model to the targets and, for DFFD, deforms it so the
/// listed control ids land on their targets. Returns the transform, the
/// aligned control positions and the output vertices.
pub fn adapt_model(
    model: &GenericModel,
    targets: &[Landmark3D],
    ids: &[usize],
    method: FitMethod,
) -> Result<(SimilarityTransform, Vec<[f64; 3]>, Vec<[f64; 3]>)> {
    let mut vidx = Vec::with_capacity(ids.len());
    let mut goal = Vec::with_capacity(ids.len());
    let mut missing = Vec::new();
    for &id in ids {
        match (model.control_map.get(&id), targets.iter().find(|t| t.id == id)) {
            (Some(&v), Some(t)) => {
                vidx.push(v);
                goal.push(t.position());
            }
            _ => missing.push(id),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingDepth(missing));
    }
    let source: Vec<[f64; 3]> = vidx.iter().map(|&v| model.vertices[v]).collect();
    let (t, _) = procrustes_align(&source, &goal)?;
    let aligned = apply_transform(&t, &model.vertices);
    let vertices = match method {
        FitMethod::Procrustes => aligned,
        FitMethod::Dffd => {
            let controls: Vec<(usize, [f64; 3])> = vidx.iter().copied().zip(goal.iter().copied()).collect();
            deform_vertices(&aligned, &controls)?
        }
    };
    let fitted = vidx.iter().map(|&v| vertices[v]).collect();
    Ok((t, fitted, vertices))
}

/// Runs every stage on a frontal/profile pair.
pub fn run_pipeline(frontal: &Raster, profile: &Raster, cfg: &PipelineConfig) -> Result<RunOutput, StageError> {
    let mut stages = Stages::new();
    stages.run("config", || cfg.validate())?;
    let (loc, profile) = localize_stages(&mut stages, frontal, profile, cfg)?;
    let edges = stages.run("edges", || canny_edges(&loc.planes.luma, cfg.canny.low, cfg.canny.high))?;
    let frontal_landmarks =
        stages.run("landmarks", || assemble_frontal_set(&loc.windows, &edges, &cfg.quota, &loc.face_roi))?;
    let visible: Vec<Landmark2D> =
        frontal_landmarks.iter().filter(|l| cfg.sides.visible_ids.contains(&l.id)).copied().collect();
    let soic = stages.run("depth", || soic_match(&loc.planes.luma, &profile, &visible, &cfg.soic))?;
    let reconstruction = stages.run("reconstruct", || build_3d_set(&frontal_landmarks, &soic.depths(), &cfg.sides))?;

    let [l, r] = cfg.sides.eye_center_ids;
    let (le, re) = (&reconstruction.landmarks[l], &reconstruction.landmarks[r]);
    let iod = (re.x - le.x).hypot(re.y - le.y);
    let targets = stages.run("pretransform", || {
        if !(iod > 0.0) {
            return Err(Error::Degenerate("eye centres coincide".into()));
        }
        Ok(to_model_frame(&reconstruction, iod))
    })?;

    let model = stages.run("model", || Ok(build_generic_model()))?;
    let ids: Vec<usize> = model.control_map.keys().copied().collect();
    let goal: Vec<[f64; 3]> = ids.iter().map(|&id| targets[id].position()).collect();
    let (transform, aligned_fit, aligned) =
        stages.run("align", || adapt_model(&model, &targets, &ids, FitMethod::Procrustes))?;
    let (vertices, fitted) = match cfg.fit.method {
        FitMethod::Procrustes => (aligned, aligned_fit.clone()),
        FitMethod::Dffd => stages.run("deform", || {
            let controls: Vec<(usize, [f64; 3])> =
                ids.iter().map(|id| model.control_map[id]).zip(goal.iter().copied()).collect();
            let v = deform_vertices(&aligned, &controls)?;
            let fitted = controls.iter().map(|&(i, _)| v[i]).collect();
            Ok((v, fitted))
        })?,
    };
    let (mse_aligned, mse, degenerate) = stages.run("evaluate", || {
        Ok((fit_mse(&aligned_fit, &goal, 1.0)?, fit_mse(&fitted, &goal, 1.0)?, degenerate_faces(&vertices, &model.faces).len()))
    })?;

    let total_ms = stages.start.ms();
    let report = FitReport {
        config_hash: cfg.hash(),
        method: cfg.fit.method,
        stages: stages.timings,
        total_ms,
        threshold: loc.threshold,
        scale: loc.scale,
        clusters: loc.clustering.clusters.len(),
        frontal_landmarks: frontal_landmarks.len(),
        depth_matches: soic.matches.len(),
        soic_failures: soic.failures.clone(),
        landmarks_3d: reconstruction.landmarks.len(),
        clamped_ids: reconstruction.clamped_ids(),
        interocular_px: iod,
        alignment_scale: transform.scale,
        normalized_mse_aligned: mse_aligned,
        normalized_mse: mse,
        degenerate_faces: degenerate,
    };
    Ok(RunOutput {
        localization: loc,
        profile,
        edges,
        frontal_landmarks,
        reconstruction,
        targets,
        transform,
        vertices,
        faces: model.faces,
        report,
    })
}
