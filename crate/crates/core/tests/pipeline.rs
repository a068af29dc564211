use orthoface::depth::landmarks3d_to_json;
use orthoface::features::landmarks_to_json;
use orthoface::mesh::{export_obj, parse_obj};
use orthoface::pipeline::{
    bench_csv, matched_errors, run_bench, run_pipeline, synth_fixture, BenchOptions, FitMethod, PipelineConfig,
};

fn mean_matched_error(seed: u64, noise: f64) -> f64 {
    let f = synth_fixture(seed, noise).unwrap();
    let out = run_pipeline(&f.frontal, &f.profile, &PipelineConfig::default()).unwrap();
    let est: Vec<[f64; 3]> = out.reconstruction.landmarks.iter().map(|l| l.position()).collect();
    let truth: Vec<[f64; 3]> = f.truth.iter().map(|l| l.position()).collect();
    let e = matched_errors(&est, &truth).unwrap();
    e.iter().sum::<f64>() / e.len() as f64
}

#[test]
fn error_grows_with_noise() {
    let clean: f64 = (0..10).map(|s| mean_matched_error(s, 0.0)).sum::<f64>() / 10.0;
    let noisy: f64 = (0..10).map(|s| mean_matched_error(s, 2.0)).sum::<f64>() / 10.0;
    assert!(noisy >= clean, "noise 2: {noisy}, noise 0: {clean}");
    assert!(clean < 1e-9);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let f = synth_fixture(12, 1.0).unwrap();
    let cfg = PipelineConfig::default();
    let a = run_pipeline(&f.frontal, &f.profile, &cfg).unwrap();
    let b = run_pipeline(&f.frontal, &f.profile, &cfg).unwrap();
    assert_eq!(export_obj(&a.vertices, &a.faces), export_obj(&b.vertices, &b.faces));
    assert_eq!(landmarks_to_json(&a.frontal_landmarks), landmarks_to_json(&b.frontal_landmarks));
    assert_eq!(landmarks3d_to_json(&a.reconstruction.landmarks), landmarks3d_to_json(&b.reconstruction.landmarks));
}

#[test]
fn stage_times_cover_the_total() {
    let f = synth_fixture(3, 0.0).unwrap();
    let out = run_pipeline(&f.frontal, &f.profile, &PipelineConfig::default()).unwrap();
    let r = &out.report;
    let sum: f64 = r.stages.iter().map(|s| s.ms).sum();
    assert!(r.stages.iter().all(|s| s.ms >= 0.0));
    assert!(sum <= r.total_ms && sum >= 0.9 * r.total_ms, "stages {sum} ms of {} ms", r.total_ms);
    assert_eq!(r.frontal_landmarks, 60);
    assert_eq!(r.depth_matches, 31);
    assert_eq!(r.config_hash, PipelineConfig::default().hash());
}

#[test]
fn procrustes_only_leaves_a_residual() {
    let f = synth_fixture(6, 0.0).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.fit.method = FitMethod::Procrustes;
    let out = run_pipeline(&f.frontal, &f.profile, &cfg).unwrap();
    assert!(out.report.normalized_mse > 1e-6);
    assert_eq!(out.report.normalized_mse, out.report.normalized_mse_aligned);
    let (v, faces) = parse_obj(&export_obj(&out.vertices, &out.faces)).unwrap();
    assert_eq!((v.len(), faces.len()), (140, 264));
}

#[test]
fn doubling_the_ensemble_keeps_the_mean_within_three_standard_errors() {
    let cfg = PipelineConfig::default();
    let small = BenchOptions { timing: false, ..BenchOptions::default() };
    let large = BenchOptions { seeds: (0..20).collect(), ..small.clone() };
    let a = run_bench(&cfg, &small).unwrap();
    let b = run_bench(&cfg, &large).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.count, x.method), (y.count, y.method));
        if x.method == FitMethod::Procrustes {
            let se = x.mse_std / (x.samples as f64).sqrt();
            assert!((x.mse_mean - y.mse_mean).abs() < 3.0 * se, "{x:?} vs {y:?}");
        } else {
            assert!(x.mse_mean <= 1e-8 && y.mse_mean <= 1e-8);
        }
    }
    assert!(bench_csv(&a).starts_with("count,method,mse_mean,mse_std,time_ms_mean\n"));
}

#[test]
fn invalid_config_is_reported_by_the_config_stage() {
    let f = synth_fixture(0, 0.0).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.clustering.alpha = 0;
    let err = run_pipeline(&f.frontal, &f.profile, &cfg).unwrap_err();
    assert_eq!(err.stage, "config");
}
