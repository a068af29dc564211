//! Fit quality and adaptation time against the number of control points.

use std::fmt::Write;

use super::clock::Stopwatch;
use super::config::{FitMethod, PipelineConfig};
use super::fixture::synth_fixture;
use super::run::{adapt_model, run_pipeline};
use crate::features::FRONTAL_LANDMARKS;
use crate::mesh::{build_generic_model, fit_mse};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub seeds: Vec<u64>,
    pub counts: Vec<usize>,
    pub methods: Vec<FitMethod>,
    pub noise: f64,
    /// When off, the time column is written as zero so the table is
    /// byte-stable.
    pub timing: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            seeds: (0..10).collect(),
            counts: vec![29, 45, 60],
            methods: vec![FitMethod::Procrustes, FitMethod::Dffd],
            noise: 0.0,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub count: usize,
    pub method: FitMethod,
    pub mse_mean: f64,
    /// Sample standard deviation over the seeds.
    pub mse_std: f64,
    pub time_ms_mean: f64,
    pub samples: usize,
}

/// `count` landmark ids spread evenly over `0..60`.
pub fn control_subset(count: usize) -> Result<Vec<usize>> {
    if !(4..=FRONTAL_LANDMARKS).contains(&count) {
        return Err(Error::invalid(format!("control count {count} outside [4, {FRONTAL_LANDMARKS}]")));
    }
    Ok((0..count).map(|i| i * FRONTAL_LANDMARKS / count).collect())
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Reconstructs every seed's fixture once, then fits the generic model with
/// each control subset and method. MSE is taken at the controls used.
pub fn run_bench(cfg: &PipelineConfig, opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    if opts.seeds.is_empty() || opts.counts.is_empty() || opts.methods.is_empty() {
        return Err(Error::invalid("bench needs at least one seed, count and method"));
    }
    let subsets = opts.counts.iter().map(|&c| control_subset(c)).collect::<Result<Vec<_>>>()?;
    let model = build_generic_model();
    let mut targets = Vec::with_capacity(opts.seeds.len());
    for &seed in &opts.seeds {
        let f = synth_fixture(seed, opts.noise)?;
        let out = run_pipeline(&f.frontal, &f.profile, cfg)
            .map_err(|e| Error::invalid(format!("seed {seed}: {e}")))?;
        targets.push(out.targets);
    }
    let mut rows = Vec::new();
    for (&count, ids) in opts.counts.iter().zip(&subsets) {
        for &method in &opts.methods {
            let mut mses = Vec::with_capacity(targets.len());
            let mut times = Vec::with_capacity(targets.len());
            for t in &targets {
                let start = Stopwatch::start();
                let (_, fitted, _) = adapt_model(&model, t, ids, method)?;
                times.push(start.ms());
                let goal: Vec<[f64; 3]> = ids.iter().map(|&id| t[id].position()).collect();
                mses.push(fit_mse(&fitted, &goal, 1.0)?);
            }
            let (mse_mean, mse_std) = mean_std(&mses);
            let time_ms_mean = if opts.timing { mean_std(&times).0 } else { 0.0 };
            rows.push(BenchRow { count, method, mse_mean, mse_std, time_ms_mean, samples: mses.len() });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("count,method,mse_mean,mse_std,time_ms_mean\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6e},{:.6e},{:.3}", r.count, r.method.name(), r.mse_mean, r.mse_std, r.time_ms_mean);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_spread_and_bounded() {
        assert_eq!(control_subset(60).unwrap(), (0..60).collect::<Vec<_>>());
        let s = control_subset(29).unwrap();
        assert_eq!(s.len(), 29);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(control_subset(61).is_err());
        assert!(control_subset(3).is_err());
    }

    #[test]
    fn mean_and_sample_std() {
        assert_eq!(mean_std(&[2.0, 4.0]), (3.0, 2f64.sqrt()));
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }

    #[test]
    fn csv_layout() {
        let rows = [BenchRow { count: 29, method: FitMethod::Dffd, mse_mean: 0.0, mse_std: 1.5e-3, time_ms_mean: 0.25, samples: 3 }];
        assert_eq!(bench_csv(&rows), "count,method,mse_mean,mse_std,time_ms_mean\n29,dffd,0.000000e0,1.500000e-3,0.250\n");
    }

    #[test]
    fn rejects_oversized_counts() {
        let opts = BenchOptions { counts: vec![61], seeds: vec![0], ..BenchOptions::default() };
        assert!(matches!(run_bench(&PipelineConfig::default(), &opts), Err(Error::InvalidInput(_))));
    }
}
