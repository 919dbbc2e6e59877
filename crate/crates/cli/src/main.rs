use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use voroseg::metrics::{evaluate, segmentation_from_labels};
use voroseg::pipeline::{run_batch, write_artifacts, Emit, METRICS_HEADER};
use voroseg::raster_io::load_label_map;
use voroseg::{load_image, segment_image, MetricsReport, PipelineConfig, SegmentMode};

#[derive(Parser)]
#[command(name = "voroseg", version, about = "Voronoi-region adaptive color segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image.
    Segment {
        input: PathBuf,
        #[command(flatten)]
        opts: SegmentOpts,
    },
    /// Segment every PNG/PPM in a directory and write report.csv.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        opts: SegmentOpts,
    },
    /// Score an existing label map (16-bit grayscale PNG or CSV).
    Eval {
        image: PathBuf,
        label_map: PathBuf,
        #[arg(long, default_value = "cluster")]
        metrics_mode: String,
    },
}

#[derive(Args)]
struct SegmentOpts {
    /// Manhattan merge threshold.
    #[arg(long, default_value_t = voroseg::pipeline::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    max_corners: Option<usize>,
    #[arg(long)]
    min_distance: Option<usize>,
    /// cluster or cc
    #[arg(long, default_value = "cluster")]
    metrics_mode: String,
    /// Comma-separated: centroid-image,false-color,label-map,metrics,merge-log,timing
    #[arg(long)]
    emit: Option<String>,
    /// Also write the merge log (same as adding merge-log to --emit).
    #[arg(long)]
    dump_merges: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Invalid user configuration; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn parse_mode(s: &str) -> anyhow::Result<SegmentMode> {
    s.parse().map_err(|e: voroseg::Error| UsageError(e.to_string()).into())
}

impl SegmentOpts {
    fn config(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default().with_epsilon(self.epsilon);
        if let Some(n) = self.max_corners {
            cfg.seed_config.max_corners = n;
        }
        if let Some(d) = self.min_distance {
            cfg.seed_config.min_distance = d;
        }
        cfg.metrics_mode = parse_mode(&self.metrics_mode)?;
        if let Some(list) = &self.emit {
            cfg.emit = Emit::parse_list(list).map_err(|e| UsageError(e.to_string()))?;
        }
        if self.dump_merges {
            cfg.emit.insert(Emit::MergeLog);
        }
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }
}

fn print_metrics(m: &MetricsReport) {
    println!("{}", METRICS_HEADER.join(","));
    let values = [m.mse, m.f, m.f_prime, m.q, m.d_intra, m.d_inter, m.f_rc];
    let mut row = vec![m.k.to_string(), m.segments.to_string()];
    row.extend(values.iter().map(f64::to_string));
    println!("{}", row.join(","));
}

fn segment(input: &Path, opts: &SegmentOpts) -> anyhow::Result<ExitCode> {
    let cfg = opts.config()?;
    let image = load_image(input).with_context(|| format!("loading {}", input.display()))?;
    let output = segment_image(&image, &cfg)?;
    std::fs::create_dir_all(&opts.out)?;
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let written = write_artifacts(&image, &output, &stem, &opts.out, &cfg.emit)?;
    let r = &output.record;
    log::info!(
        "{}: {} seeds, {} region clusters, k={} in {:.3}s",
        input.display(),
        r.seeds,
        r.pre_merge_clusters,
        r.k,
        r.timings.total
    );
    for p in written {
        log::info!("wrote {}", p.display());
    }
    print_metrics(&r.metrics);
    Ok(ExitCode::SUCCESS)
}

fn batch(dir: &Path, opts: &SegmentOpts) -> anyhow::Result<ExitCode> {
    let cfg = opts.config()?;
    let report = match run_batch(dir, &opts.out, &cfg) {
        Err(e @ voroseg::Error::EmptyDirectory(_)) => return Err(UsageError(e.to_string()).into()),
        other => other?,
    };
    println!("{}", report.report_path.display());
    if report.failures() > 0 {
        eprintln!("{} of {} images failed", report.failures(), report.rows.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn eval(image: &Path, labels: &Path, mode: &str) -> anyhow::Result<ExitCode> {
    let mode = parse_mode(mode)?;
    let image = load_image(image).with_context(|| format!("loading {}", image.display()))?;
    let map = load_label_map(labels).with_context(|| format!("loading {}", labels.display()))?;
    if (map.width, map.height) != (image.width(), image.height()) {
        bail!(
            "label map is {}x{} but image is {}x{}",
            map.width,
            map.height,
            image.width(),
            image.height()
        );
    }
    let seg = segmentation_from_labels(&image, &map.labels)?;
    print_metrics(&evaluate(&image, &seg, mode)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Segment { input, opts } => segment(input, opts),
        Command::Batch { dir, opts } => batch(dir, opts),
        Command::Eval { image, label_map, metrics_mode } => eval(image, label_map, metrics_mode),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
