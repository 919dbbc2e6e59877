//! Lloyd's K-means over all pixel features, seeded with given centroids.

use rayon::prelude::*;

use crate::{Error, Feature, Image, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansConfig {
    pub max_iterations: usize,
    /// Converged once no centroid moves this far (Manhattan) in one iteration.
    pub tolerance: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig { max_iterations: 100, tolerance: 1e-3 }
    }
}

impl KmeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::Config(format!("tolerance {} must be >= 0", self.tolerance)));
        }
        Ok(())
    }
}

/// Per-pixel cluster labels with the cluster centroids.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub width: usize,
    pub height: usize,
    pub label_of: Vec<usize>,
    pub centroids: Vec<Feature>,
    pub iterations_used: usize,
    /// Sum of squared distances from each pixel to its centroid.
    pub final_sse: f64,
    /// SSE after each iteration's update step.
    pub sse_history: Vec<f64>,
}

impl Segmentation {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// Index of the nearest centroid by squared Euclidean distance; ties go to
/// the lowest index.
pub fn nearest(p: Feature, centroids: &[Feature]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = p.dist_sq(*c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

pub fn assign(features: &[Feature], centroids: &[Feature]) -> Vec<usize> {
    features.par_iter().map(|&p| nearest(p, centroids)).collect()
}

/// SSE of `labels` against `centroids`, summed in pixel order.
pub fn sse(features: &[Feature], labels: &[usize], centroids: &[Feature]) -> f64 {
    features
        .iter()
        .zip(labels)
        .map(|(&p, &l)| p.dist_sq(centroids[l]))
        .sum()
}

/// SSE of assigning every pixel to its nearest centroid.
pub fn assignment_sse(features: &[Feature], centroids: &[Feature]) -> f64 {
    sse(features, &assign(features, centroids), centroids)
}

pub fn kmeans(
    image: &Image,
    k: usize,
    init_centroids: &[Feature],
    config: &KmeansConfig,
) -> Result<Segmentation> {
    kmeans_features(&image.features(), image.width(), image.height(), k, init_centroids, config)
}

/// Lloyd iterations on precomputed features.
///
/// Each iteration assigns pixels to their nearest centroid, drops clusters
/// that received no pixels (compacting the labels), and moves each centroid
/// to its members' mean. Iteration stops when every centroid moved less than
/// `tolerance`, when nothing moved at all, or after `max_iterations`. The
/// returned labels are those of the last assignment, so every centroid is
/// the mean of its pixels.
pub fn kmeans_features(
    features: &[Feature],
    width: usize,
    height: usize,
    k: usize,
    init_centroids: &[Feature],
    config: &KmeansConfig,
) -> Result<Segmentation> {
    if k < 1 {
        return Err(Error::InvalidK("k must be at least 1".into()));
    }
    if k != init_centroids.len() {
        return Err(Error::InvalidK(format!(
            "k = {k} but {} initial centroids",
            init_centroids.len()
        )));
    }
    if features.is_empty() || features.len() != width * height {
        return Err(Error::InvalidImage(format!(
            "{} features for a {width}x{height} image",
            features.len()
        )));
    }
    config.validate()?;

    let mut centroids = init_centroids.to_vec();
    let mut labels = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        labels = assign(features, &centroids);

        let mut sums = vec![[0.0f64; 3]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (p, &l) in features.iter().zip(&labels) {
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            sums[l][2] += p[2];
            counts[l] += 1;
        }

        let mut remap = vec![usize::MAX; centroids.len()];
        let mut next = Vec::with_capacity(centroids.len());
        let mut movement = 0.0f64;
        for (i, (s, &n)) in sums.iter().zip(&counts).enumerate() {
            if n == 0 {
                continue;
            }
            remap[i] = next.len();
            let n = n as f64;
            let c = Feature([s[0] / n, s[1] / n, s[2] / n]);
            movement = movement.max(c.manhattan(centroids[i]));
            next.push(c);
        }
        if next.len() < centroids.len() {
            labels.iter_mut().for_each(|l| *l = remap[*l]);
        }
        centroids = next;
        history.push(sse(features, &labels, &centroids));

        if movement < config.tolerance || movement == 0.0 {
            break;
        }
    }

    Ok(Segmentation {
        width,
        height,
        label_of: labels,
        centroids,
        iterations_used: iterations,
        final_sse: *history.last().expect("at least one iteration"),
        sse_history: history,
    })
}
