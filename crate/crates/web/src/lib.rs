//! Browser bindings: render a synthetic pair, preview edges, reconstruct.

use orthoface::features::landmarks_to_json;
use orthoface::imgproc::{canny_edges, equalize_histogram, Raster};
use orthoface::mesh::export_obj;
use orthoface::pipeline::{run_pipeline, synth_fixture, FitMethod, PipelineConfig, RunOutput, SyntheticPair};
use wasm_bindgen::prelude::*;

/// Gray raster to RGBA bytes for an `ImageData`.
fn rgba(img: &Raster) -> Vec<u8> {
    img.plane_data(0).iter().flat_map(|&v| [v, v, v, 255]).collect()
}

fn summary(run: &RunOutput) -> String {
    let pts: Vec<String> = run
        .reconstruction
        .landmarks
        .iter()
        .map(|l| format!("[{:.3},{:.3},{:.3}]", l.x, l.y, l.z))
        .collect();
    format!(
        "{{\"mse\":{:e},\"mse_aligned\":{:e},\"clamped\":{:?},\"points\":[{}]}}",
        run.report.normalized_mse,
        run.report.normalized_mse_aligned,
        run.report.clamped_ids,
        pts.join(",")
    )
}

#[wasm_bindgen]
pub struct Demo {
    pair: SyntheticPair,
    last: Option<RunOutput>,
}

impl Demo {
    pub fn create(seed: u32, noise: f64) -> Result<Demo, String> {
        let pair = synth_fixture(seed as u64, noise).map_err(|e| e.to_string())?;
        Ok(Demo { pair, last: None })
    }

    pub fn edges(&self, low: f64, high: f64) -> Result<Vec<u8>, String> {
        if !(0.0 <= low && low < high) {
            return Err(format!("need 0 <= low < high, got {low} and {high}"));
        }
        let eq = equalize_histogram(&self.pair.frontal).map_err(|e| e.to_string())?;
        canny_edges(&eq, low, high).map(|e| rgba(&e)).map_err(|e| e.to_string())
    }

    pub fn run(&mut self, method: &str) -> Result<String, String> {
        let mut cfg = PipelineConfig::default();
        cfg.fit.method = match method {
            "procrustes" => FitMethod::Procrustes,
            "dffd" => FitMethod::Dffd,
            other => return Err(format!("unknown method `{other}`")),
        };
        let run = run_pipeline(&self.pair.frontal, &self.pair.profile, &cfg).map_err(|e| e.to_string())?;
        let s = summary(&run);
        self.last = Some(run);
        Ok(s)
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, noise: f64) -> Result<Demo, JsError> {
        Demo::create(seed, noise).map_err(|e| JsError::new(&e))
    }

    pub fn frontal_width(&self) -> usize {
        self.pair.frontal.width()
    }

    pub fn profile_width(&self) -> usize {
        self.pair.profile.width()
    }

    pub fn height(&self) -> usize {
        self.pair.frontal.height()
    }

    pub fn frontal_rgba(&self) -> Vec<u8> {
        rgba(&self.pair.frontal)
    }

    pub fn profile_rgba(&self) -> Vec<u8> {
        rgba(&self.pair.profile)
    }

    /// Edge map of the equalized frontal view.
    pub fn edges_rgba(&self, low: f64, high: f64) -> Result<Vec<u8>, JsError> {
        self.edges(low, high).map_err(|e| JsError::new(&e))
    }

    /// Runs the pipeline; returns JSON with the fit error and 3D points.
    pub fn reconstruct(&mut self, method: &str) -> Result<String, JsError> {
        self.run(method).map_err(|e| JsError::new(&e))
    }

    pub fn landmarks_json(&self) -> Option<String> {
        self.last.as_ref().map(|r| landmarks_to_json(&r.frontal_landmarks))
    }

    pub fn model_obj(&self) -> Option<String> {
        self.last.as_ref().map(|r| export_obj(&r.vertices, &r.faces))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_round_trip() {
        let mut d = Demo::create(2, 0.0).unwrap();
        assert_eq!(d.frontal_rgba().len(), d.frontal_width() * d.height() * 4);
        assert_eq!(d.profile_rgba().len(), d.profile_width() * d.height() * 4);
        let edges = d.edges(20.0, 40.0).unwrap();
        assert!(edges.chunks(4).any(|p| p[0] == 255));
        assert!(d.edges(5.0, 1.0).is_err());
        assert!(d.model_obj().is_none());
        let s = d.run("dffd").unwrap();
        assert!(s.starts_with("{\"mse\":"));
        assert_eq!(d.model_obj().unwrap().lines().filter(|l| l.starts_with("f ")).count(), 264);
        assert!(d.run("affine").is_err());
    }
}
