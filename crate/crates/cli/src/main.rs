use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orthoface::depth::landmarks3d_to_json;
use orthoface::features::landmarks_to_json;
use orthoface::imgproc::{pnm, Raster, Semantics};
use orthoface::mesh::export_obj;
use orthoface::pipeline::{bench_csv, localize, run_bench, run_pipeline, synth_fixture, BenchOptions, FitMethod, PipelineConfig};

/// Reconstructs 3D facial landmarks from a frontal/profile image pair and fits
/// a generic head model to them.
#[derive(Parser, Debug)]
#[command(name = "orthoface", version)]
struct Cli {
    /// TOML pipeline configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for every output file; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic frontal/profile pair with known landmarks.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-axis stamp displacement in pixels.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Run the full reconstruction on a PGM/PPM pair.
    Run {
        #[command(flatten)]
        inputs: Inputs,
        /// Also write the intermediate images, clusters and windows.
        #[arg(long)]
        dump: bool,
    },
    /// Fit quality and adaptation time against the number of control points.
    Bench {
        /// Number of fixture seeds, starting at --first-seed.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [29, 45, 60])]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Write zero in the time column so the CSV is reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Write the detected clusters and feature windows of a frontal image.
    DumpClusters {
        #[arg(long)]
        frontal: PathBuf,
    },
    /// Convert between PNG and PGM/PPM, chosen by file extension.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Inputs {
    #[arg(long)]
    frontal: PathBuf,
    #[arg(long)]
    profile: PathBuf,
}

enum Failure {
    Config(String),
    Io(String),
    Stage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Io(_) => 2,
            Failure::Stage(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Stage(m) => m,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn load_config(path: Option<&Path>) -> CliResult<PipelineConfig> {
    let Some(path) = path else { return Ok(PipelineConfig::default()) };
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    PipelineConfig::from_toml_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn read_image(path: &Path) -> CliResult<Raster> {
    pnm::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_image(dir: &Path, name: &str, img: &Raster) -> CliResult<()> {
    write_file(dir, name, pnm::encode(img))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn check_noise(noise: f64) -> CliResult<()> {
    if noise >= 0.0 && noise.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!("--noise must be a non-negative number, got {noise}")))
    }
}

fn convert(input: &Path, output: &Path) -> CliResult<()> {
    let ext = |p: &Path| p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).unwrap_or_default();
    let img = match ext(input).as_str() {
        "png" => {
            let dynimg = image::open(input).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
            if ext(output) == "pgm" {
                let g = dynimg.to_luma8();
                Raster::new(g.width() as usize, g.height() as usize, Semantics::Gray, g.into_raw())
            } else {
                let rgb = dynimg.to_rgb8();
                let (w, h) = (rgb.width() as usize, rgb.height() as usize);
                let raw = rgb.into_raw();
                let n = w * h;
                let mut planar = vec![0u8; 3 * n];
                for i in 0..n {
                    for c in 0..3 {
                        planar[c * n + i] = raw[3 * i + c];
                    }
                }
                Raster::new(w, h, Semantics::Rgb, planar)
            }
            .map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?
        }
        "pgm" | "ppm" => read_image(input)?,
        other => return Err(Failure::Config(format!("unsupported input extension `{other}`"))),
    };
    match ext(output).as_str() {
        "pgm" | "ppm" => {
            let img = if ext(output) == "pgm" && img.planes() == 3 {
                orthoface::imgproc::rgb_to_ycbcr(&img).and_then(|y| y.plane(0)).map_err(|e| Failure::Stage(e.to_string()))?
            } else {
                img
            };
            pnm::write(output, &img).map_err(|e| Failure::Io(format!("{}: {e}", output.display())))
        }
        "png" => {
            let (w, h) = (img.width() as u32, img.height() as u32);
            let result = if img.planes() == 1 {
                image::GrayImage::from_raw(w, h, img.data().to_vec()).expect("sized buffer").save(output)
            } else {
                let n = img.width() * img.height();
                let mut raw = Vec::with_capacity(3 * n);
                for i in 0..n {
                    for c in 0..3 {
                        raw.push(img.data()[c * n + i]);
                    }
                }
                image::RgbImage::from_raw(w, h, raw).expect("sized buffer").save(output)
            };
            result.map_err(|e| Failure::Io(format!("{}: {e}", output.display())))
        }
        other => Err(Failure::Config(format!("unsupported output extension `{other}`"))),
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let out = cli.out_dir.as_path();
    fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    match cli.command {
        Command::Synth { seed, noise } => {
            check_noise(noise)?;
            let f = synth_fixture(seed, noise).map_err(|e| Failure::Stage(e.to_string()))?;
            write_image(out, "frontal.pgm", &f.frontal)?;
            write_image(out, "profile.pgm", &f.profile)?;
            write_file(out, "truth.json", landmarks3d_to_json(&f.truth))?;
            println!("wrote frontal.pgm, profile.pgm and truth.json to {}", out.display());
        }
        Command::Run { inputs, dump } => {
            let frontal = read_image(&inputs.frontal)?;
            let profile = read_image(&inputs.profile)?;
            let run = run_pipeline(&frontal, &profile, &cfg).map_err(|e| Failure::Stage(e.to_string()))?;
            write_file(out, "model.obj", export_obj(&run.vertices, &run.faces))?;
            write_file(out, "landmarks_2d.json", landmarks_to_json(&run.frontal_landmarks))?;
            write_file(out, "landmarks_3d.json", landmarks3d_to_json(&run.reconstruction.landmarks))?;
            write_file(out, "report.json", json(&run.report))?;
            if dump {
                let loc = &run.localization;
                write_image(out, "frontal_luma.pgm", &loc.planes.luma)?;
                write_image(out, "frontal_cr.pgm", &loc.planes.cr)?;
                write_image(out, "profile_luma.pgm", &run.profile)?;
                write_image(out, "mask.pgm", &loc.mask)?;
                write_image(out, "edges.pgm", &run.edges)?;
                write_file(out, "clusters.json", json(&loc.clustering))?;
                write_file(out, "windows.json", json(&(loc.face_roi, loc.windows)))?;
            }
            println!(
                "{} landmarks, normalized MSE {:.3e}, {:.1} ms",
                run.report.landmarks_3d, run.report.normalized_mse, run.report.total_ms
            );
        }
        Command::Bench { seeds, first_seed, counts, noise, no_timing } => {
            check_noise(noise)?;
            if seeds == 0 {
                return Err(Failure::Config("--seeds must be at least 1".into()));
            }
            if let Some(&c) = counts.iter().find(|&&c| !(4..=60).contains(&c)) {
                return Err(Failure::Config(format!("control count {c} outside [4, 60]")));
            }
            let opts = BenchOptions {
                seeds: (first_seed..first_seed + seeds).collect(),
                counts,
                methods: vec![FitMethod::Procrustes, FitMethod::Dffd],
                noise,
                timing: !no_timing,
            };
            let rows = run_bench(&cfg, &opts).map_err(|e| Failure::Stage(e.to_string()))?;
            let csv = bench_csv(&rows);
            write_file(out, "bench.csv", &csv)?;
            print!("{csv}");
        }
        Command::DumpClusters { frontal } => {
            let img = read_image(&frontal)?;
            let loc = localize(&img, &cfg).map_err(|e| Failure::Stage(e.to_string()))?;
            write_image(out, "mask.pgm", &loc.mask)?;
            write_file(out, "clusters.json", json(&loc.clustering))?;
            write_file(out, "windows.json", json(&(loc.face_roi, loc.windows)))?;
            println!("{} clusters, threshold {}", loc.clustering.clusters.len(), loc.threshold);
        }
        Command::Convert { input, output } => {
            let output = if output.is_absolute() { output } else { out.join(output) };
            convert(&input, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
