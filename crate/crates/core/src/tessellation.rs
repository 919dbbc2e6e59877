//! Spatial Voronoi tessellation of the pixel grid.

use rayon::prelude::*;

use crate::{Error, Result, Seed};

/// Region index per pixel; region `i` is the Voronoi cell of seed `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoronoiMap {
    pub width: usize,
    pub height: usize,
    pub region_of: Vec<usize>,
    pub region_count: usize,
}

impl VoronoiMap {
    /// Pixel indices of every region, each list in row-major order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.region_count];
        for (p, &r) in self.region_of.iter().enumerate() {
            out[r].push(p);
        }
        out
    }
}

/// Assigns every pixel to its nearest seed by exact integer squared distance.
/// Equidistant pixels go to the lowest seed index.
pub fn assign_voronoi(width: usize, height: usize, seeds: &[Seed]) -> Result<VoronoiMap> {
    if seeds.is_empty() {
        return Err(Error::EmptySeedSet);
    }
    if let Some(s) = seeds.iter().find(|s| s.x >= width || s.y >= height) {
        return Err(Error::Config(format!(
            "seed ({}, {}) outside {width}x{height} raster",
            s.x, s.y
        )));
    }
    let mut region_of = vec![0usize; width * height];
    region_of
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, slot) in row.iter_mut().enumerate() {
                let p = Seed::new(x, y);
                let mut best = 0;
                let mut best_d = u64::MAX;
                for (i, s) in seeds.iter().enumerate() {
                    let d = s.dist_sq(p);
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                *slot = best;
            }
        });
    Ok(VoronoiMap { width, height, region_of, region_count: seeds.len() })
}
