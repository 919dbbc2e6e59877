//! End-to-end segmentation, artifact output and batch runs.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::kmeans::kmeans_features;
use crate::merge::merge_proximal_clusters;
use crate::metrics::evaluate;
use crate::raster_io::{render_centroid_image, render_false_color, save_label_map, LabelMap};
use crate::rsm::process_region;
use crate::seeding::{detect_corners, fallback_grid_seeds, to_grayscale};
use crate::tessellation::assign_voronoi;
use crate::{
    load_image, save_image, Cluster, Error, Feature, Image, ImageFormat, KmeansConfig, MergeRecord,
    MetricsReport, Palette, Result, RsmConfig, SeedConfig, SeedSet, SegmentMode, Segmentation,
};

/// Default Manhattan merge threshold.
pub const DEFAULT_EPSILON: f64 = 71.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emit {
    CentroidImage,
    FalseColor,
    LabelMap,
    Metrics,
    MergeLog,
    Timing,
}

impl Emit {
    pub const ALL: [Emit; 6] = [
        Emit::CentroidImage,
        Emit::FalseColor,
        Emit::LabelMap,
        Emit::Metrics,
        Emit::MergeLog,
        Emit::Timing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emit::CentroidImage => "centroid-image",
            Emit::FalseColor => "false-color",
            Emit::LabelMap => "label-map",
            Emit::Metrics => "metrics",
            Emit::MergeLog => "merge-log",
            Emit::Timing => "timing",
        }
    }

    /// Parses a comma-separated list such as `label-map,metrics`.
    pub fn parse_list(s: &str) -> Result<BTreeSet<Emit>> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl FromStr for Emit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emit::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown emit target {s:?}")))
    }
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Merge threshold for both the within-region and the global stage.
    /// Overrides `rsm_config.epsilon`.
    pub epsilon: f64,
    pub seed_config: SeedConfig,
    pub rsm_config: RsmConfig,
    pub kmeans_config: KmeansConfig,
    pub metrics_mode: SegmentMode,
    pub emit: BTreeSet<Emit>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            epsilon: DEFAULT_EPSILON,
            seed_config: SeedConfig::default(),
            rsm_config: RsmConfig::default(),
            kmeans_config: KmeansConfig::default(),
            metrics_mode: SegmentMode::Cluster,
            emit: [Emit::CentroidImage, Emit::FalseColor, Emit::LabelMap, Emit::Metrics]
                .into_iter()
                .collect(),
        }
    }
}

impl PipelineConfig {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    fn rsm(&self) -> RsmConfig {
        RsmConfig { epsilon: self.epsilon, ..self.rsm_config.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        self.seed_config.validate()?;
        self.rsm().validate()?;
        self.kmeans_config.validate()
    }
}

/// Wall-clock seconds per stage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub seed: f64,
    pub voronoi: f64,
    pub rsm: f64,
    pub merge: f64,
    pub kmeans: f64,
    pub metrics: f64,
    pub total: f64,
}

impl StageTimings {
    fn as_array(&self) -> [f64; 7] {
        [self.seed, self.voronoi, self.rsm, self.merge, self.kmeans, self.metrics, self.total]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub file: String,
    pub width: usize,
    pub height: usize,
    /// Number of seeds, after any grid fallback.
    pub seeds: usize,
    pub regions: usize,
    /// Clusters pooled from all regions before the global merge.
    pub pre_merge_clusters: usize,
    pub k: usize,
    pub metrics: MetricsReport,
    pub timings: StageTimings,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub segmentation: Segmentation,
    pub record: RunRecord,
    pub seeds: SeedSet,
    /// Centroids handed to K-means.
    pub merged_centroids: Vec<Feature>,
    pub merge_log: Vec<MergeRecord>,
}

/// Runs the full pipeline on one image.
///
/// Seeds come from Harris corners, or from a grid when fewer than two
/// corners are found. Each Voronoi region is split and merged on its own
/// (in parallel, results kept in region order), the pooled clusters are
/// merged globally, and K-means refines the merged centroids.
pub fn segment_image(image: &Image, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    if image.width() < 3 || image.height() < 3 {
        return Err(Error::ImageTooSmall { width: image.width(), height: image.height() });
    }
    let (w, h) = (image.width(), image.height());
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let mut seeds = detect_corners(&to_grayscale(image), &config.seed_config)?;
    if seeds.len() < 2 {
        seeds = fallback_grid_seeds(w, h, config.seed_config.grid_fallback_n);
    }
    timings.seed = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let vmap = assign_voronoi(w, h, &seeds)?;
    timings.voronoi = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let features = image.features();
    let rsm = config.rsm();
    let per_region: Vec<Vec<Cluster>> = vmap
        .members()
        .par_iter()
        .filter(|m| !m.is_empty())
        .map(|m| process_region(&features, m, &rsm))
        .collect::<Result<_>>()?;
    let pooled: Vec<Cluster> = per_region.into_iter().flatten().collect();
    let pre_merge_clusters = pooled.len();
    timings.rsm = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let merged = merge_proximal_clusters(pooled, config.epsilon)?;
    timings.merge = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let segmentation =
        kmeans_features(&features, w, h, merged.k, &merged.centroids, &config.kmeans_config)?;
    timings.kmeans = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let metrics = evaluate(image, &segmentation, config.metrics_mode)?;
    timings.metrics = t.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    let record = RunRecord {
        file: String::new(),
        width: w,
        height: h,
        seeds: seeds.len(),
        regions: vmap.region_count,
        pre_merge_clusters,
        k: segmentation.k(),
        metrics,
        timings,
    };
    Ok(PipelineOutput {
        segmentation,
        record,
        seeds,
        merged_centroids: merged.centroids,
        merge_log: merged.merge_log,
    })
}

pub const METRICS_HEADER: [&str; 9] = ["k", "segments", "mse", "f", "f_prime", "q", "d_intra", "d_inter", "f_rc"];

pub const REPORT_HEADER: [&str; 22] = [
    "file",
    "status",
    "width",
    "height",
    "seeds",
    "regions",
    "pre_merge_clusters",
    "k",
    "mse",
    "f",
    "f_prime",
    "q",
    "d_intra",
    "d_inter",
    "f_rc",
    "t_seed",
    "t_voronoi",
    "t_rsm",
    "t_merge",
    "t_kmeans",
    "t_metrics",
    "t_total",
];

/// Index of the first timing column in [`REPORT_HEADER`].
pub const REPORT_TIMING_START: usize = 15;

fn metric_values(m: &MetricsReport) -> [f64; 7] {
    [m.mse, m.f, m.f_prime, m.q, m.d_intra, m.d_inter, m.f_rc]
}

fn report_row(r: &RunRecord) -> Vec<String> {
    let mut row = vec![
        r.file.clone(),
        "ok".to_string(),
        r.width.to_string(),
        r.height.to_string(),
        r.seeds.to_string(),
        r.regions.to_string(),
        r.pre_merge_clusters.to_string(),
        r.k.to_string(),
    ];
    row.extend(metric_values(&r.metrics).iter().map(f64::to_string));
    row.extend(r.timings.as_array().iter().map(f64::to_string));
    row
}

fn error_row(file: &str) -> Vec<String> {
    let mut row = vec![file.to_string(), "error".to_string()];
    row.resize(REPORT_HEADER.len(), String::new());
    row
}

/// Writes the artifacts selected in `emit` for one segmented image, named
/// `<stem>_<kind>.<ext>` inside `out_dir`. Returns the written paths.
pub fn write_artifacts(
    image: &Image,
    output: &PipelineOutput,
    stem: &str,
    out_dir: &Path,
    emit: &BTreeSet<Emit>,
) -> Result<Vec<PathBuf>> {
    let seg = &output.segmentation;
    let mut written = Vec::new();
    for &e in emit {
        let path = match e {
            Emit::CentroidImage => {
                let p = out_dir.join(format!("{stem}_centroid.png"));
                save_image(&render_centroid_image(image, seg)?, &p, ImageFormat::Png)?;
                p
            }
            Emit::FalseColor => {
                let p = out_dir.join(format!("{stem}_false.png"));
                let palette = Palette::distinct(seg.k().max(Palette::DEFAULT_LEN));
                save_image(&render_false_color(seg, &palette)?, &p, ImageFormat::Png)?;
                p
            }
            Emit::LabelMap => {
                let p = out_dir.join(format!("{stem}_labels.png"));
                let map = LabelMap { width: seg.width, height: seg.height, labels: seg.label_of.clone() };
                save_label_map(&map, &p)?;
                p
            }
            Emit::Metrics => {
                let p = out_dir.join(format!("{stem}_metrics.csv"));
                let m = &output.record.metrics;
                let mut w = csv::Writer::from_path(&p)?;
                w.write_record(METRICS_HEADER)?;
                let mut row = vec![m.k.to_string(), m.segments.to_string()];
                row.extend(metric_values(m).iter().map(f64::to_string));
                w.write_record(&row)?;
                w.flush()?;
                p
            }
            Emit::MergeLog => {
                let p = out_dir.join(format!("{stem}_merges.csv"));
                write_merge_log(&output.merge_log, &p)?;
                p
            }
            Emit::Timing => {
                let p = out_dir.join(format!("{stem}_timing.csv"));
                let mut w = csv::Writer::from_path(&p)?;
                w.write_record(["stage", "seconds"])?;
                let names = ["seed", "voronoi", "rsm", "merge", "kmeans", "metrics", "total"];
                for (name, v) in names.iter().zip(output.record.timings.as_array()) {
                    w.write_record([name.to_string(), v.to_string()])?;
                }
                w.flush()?;
                p
            }
        };
        written.push(path);
    }
    Ok(written)
}

/// CSV with columns `step,index_a,index_b,distance`, steps counted from 1.
pub fn write_merge_log(log: &[MergeRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "index_a", "index_b", "distance"])?;
    for (step, r) in log.iter().enumerate() {
        w.write_record([
            (step + 1).to_string(),
            r.index_a.to_string(),
            r.index_b.to_string(),
            r.distance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn is_supported_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .is_some_and(|e| matches!(e.as_str(), "png" | "ppm" | "pnm"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum BatchRow {
    Ok(RunRecord),
    Failed { file: String, error: String },
}

#[derive(Clone, Debug)]
pub struct BatchReport {
    pub rows: Vec<BatchRow>,
    pub report_path: PathBuf,
}

impl BatchReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r, BatchRow::Failed { .. })).count()
    }
}

fn process_one(path: &Path, output_dir: &Path, config: &PipelineConfig) -> Result<RunRecord> {
    let image = load_image(path)?;
    let mut output = segment_image(&image, config)?;
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    output.record.file = file;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    write_artifacts(&image, &output, &stem, output_dir, &config.emit)?;
    Ok(output.record)
}

/// Segments every supported image in `input_dir` (sorted by file name) and
/// writes `report.csv` plus the requested artifacts to `output_dir`.
///
/// A failing image produces a row with status `error` and does not stop
/// the batch. The last row holds the mean stage timings of successful rows.
pub fn run_batch(input_dir: &Path, output_dir: &Path, config: &PipelineConfig) -> Result<BatchReport> {
    config.validate()?;
    let mut inputs: Vec<PathBuf> = fs::read_dir(input_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_image(p))
        .collect();
    inputs.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if inputs.is_empty() {
        return Err(Error::EmptyDirectory(input_dir.to_path_buf()));
    }
    fs::create_dir_all(output_dir)?;

    let mut rows = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        match process_one(path, output_dir, config) {
            Ok(record) => {
                info!("{file}: k={} in {:.3}s", record.k, record.timings.total);
                rows.push(BatchRow::Ok(record));
            }
            Err(e) => {
                warn!("{file}: {e}");
                rows.push(BatchRow::Failed { file, error: e.to_string() });
            }
        }
    }

    let report_path = output_dir.join("report.csv");
    let mut w = csv::Writer::from_path(&report_path)?;
    w.write_record(REPORT_HEADER)?;
    let mut sums = [0.0; 7];
    let mut ok = 0usize;
    for row in &rows {
        match row {
            BatchRow::Ok(r) => {
                w.write_record(report_row(r))?;
                for (s, v) in sums.iter_mut().zip(r.timings.as_array()) {
                    *s += v;
                }
                ok += 1;
            }
            BatchRow::Failed { file, .. } => w.write_record(error_row(file))?,
        }
    }
    let mut summary = vec!["mean".to_string(), "summary".to_string()];
    summary.resize(REPORT_TIMING_START, String::new());
    summary.extend(sums.iter().map(|s| if ok > 0 { (s / ok as f64).to_string() } else { String::new() }));
    w.write_record(&summary)?;
    w.flush()?;

    Ok(BatchReport { rows, report_path })
}
