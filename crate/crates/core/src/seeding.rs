//! Generating points for the spatial tessellation.
//!
//! Seeds are the strongest Harris corners of the grayscale image. Uniform
//! images have no corners; the pipeline then falls back to a regular grid.

use crate::{Error, Image, Result};

/// Real-valued single-channel raster, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} values for a {width}x{height} field",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite field value".into()));
        }
        Ok(ScalarField { width, height, values })
    }

    /// Value at `(x, y)` with coordinates clamped to the border.
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.values[y * self.width + x]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed {
    pub x: usize,
    pub y: usize,
}

impl Seed {
    pub fn new(x: usize, y: usize) -> Self {
        Seed { x, y }
    }

    pub fn dist_sq(self, other: Seed) -> u64 {
        let dx = self.x.abs_diff(other.x) as u64;
        let dy = self.y.abs_diff(other.y) as u64;
        dx * dx + dy * dy
    }
}

/// Ordered generating points. Order is significant: region `i` of the
/// tessellation belongs to `seeds[i]`.
pub type SeedSet = Vec<Seed>;

#[derive(Clone, Debug, PartialEq)]
pub struct SeedConfig {
    pub max_corners: usize,
    /// Candidates need a response of at least this fraction of the maximum.
    pub quality_ratio: f64,
    pub min_distance: usize,
    pub grid_fallback_n: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            max_corners: 50,
            quality_ratio: 0.01,
            min_distance: 10,
            grid_fallback_n: 16,
        }
    }
}

impl SeedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_corners < 1 {
            return Err(Error::Config("max_corners must be at least 1".into()));
        }
        if self.min_distance < 1 {
            return Err(Error::Config("min_distance must be at least 1".into()));
        }
        if !(self.quality_ratio > 0.0 && self.quality_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "quality_ratio {} not in (0, 1]",
                self.quality_ratio
            )));
        }
        if self.grid_fallback_n < 1 {
            return Err(Error::Config("grid_fallback_n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Luma with Rec. 601 weights, not rounded.
pub fn to_grayscale(image: &Image) -> ScalarField {
    let values = image
        .pixels()
        .iter()
        .map(|&[r, g, b]| 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .collect();
    ScalarField { width: image.width(), height: image.height(), values }
}

const HARRIS_K: f64 = 0.04;

/// Harris response `det(M) - k trace(M)^2` per pixel, where `M` is the
/// structure tensor of 3x3 Sobel gradients summed over a 3x3 window. Borders
/// replicate the edge pixel.
pub fn harris_response(field: &ScalarField) -> Vec<f64> {
    let (w, h) = (field.width, field.height);
    let mut gxx = vec![0.0; w * h];
    let mut gyy = vec![0.0; w * h];
    let mut gxy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| field.clamped(x + dx, y + dy);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            gxx[i] = gx * gx;
            gyy[i] = gy * gy;
            gxy[i] = gx * gy;
        }
    }

    let window_sum = |m: &[f64], x: usize, y: usize| {
        let mut s = 0.0;
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                s += m[yy * w + xx];
            }
        }
        s
    };

    let mut response = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let a = window_sum(&gxx, x, y);
            let b = window_sum(&gyy, x, y);
            let c = window_sum(&gxy, x, y);
            let trace = a + b;
            response[y * w + x] = a * b - c * c - HARRIS_K * trace * trace;
        }
    }
    response
}

/// Strongest Harris corners, separated by at least `min_distance` pixels.
///
/// Candidates are positive responses of at least `quality_ratio` times the
/// maximum. They are visited by descending response (ties in row-major
/// order) and accepted when no already accepted corner lies closer than
/// `min_distance`, until `max_corners` are found.
pub fn detect_corners(field: &ScalarField, config: &SeedConfig) -> Result<SeedSet> {
    if field.width < 3 || field.height < 3 {
        return Err(Error::ImageTooSmall { width: field.width, height: field.height });
    }
    let response = harris_response(field);
    let max = response.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(Vec::new());
    }
    let threshold = config.quality_ratio * max;
    let mut candidates: Vec<usize> = (0..response.len())
        .filter(|&i| response[i] > 0.0 && response[i] >= threshold)
        .collect();
    candidates.sort_by(|&a, &b| response[b].total_cmp(&response[a]).then(a.cmp(&b)));

    let min_d2 = (config.min_distance as u64).pow(2);
    let mut seeds: SeedSet = Vec::new();
    for i in candidates {
        if seeds.len() >= config.max_corners {
            break;
        }
        let s = Seed::new(i % field.width, i / field.width);
        if seeds.iter().all(|&t| t.dist_sq(s) >= min_d2) {
            seeds.push(s);
        }
    }
    Ok(seeds)
}

/// Seeds at the cell centers of a `ceil(sqrt n)` square grid, row-major,
/// truncated to `n`. On rasters narrower than the grid, coinciding centers
/// are emitted once.
pub fn fallback_grid_seeds(width: usize, height: usize, n: usize) -> SeedSet {
    let mut g = 1usize;
    while g * g < n {
        g += 1;
    }
    let center = |i: usize, extent: usize| (2 * i + 1) * extent / (2 * g);
    let mut seeds = Vec::with_capacity(n);
    'outer: for j in 0..g {
        for i in 0..g {
            if seeds.len() == n {
                break 'outer;
            }
            let s = Seed::new(center(i, width), center(j, height));
            if !seeds.contains(&s) {
                seeds.push(s);
            }
        }
    }
    seeds
}
