//! RGB feature vectors and the clusters built from them.

use std::ops::{Add, Index, Mul, Sub};

/// A real-valued RGB feature vector. Every pixel maps to one of these.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Feature(pub [f64; 3]);

impl Feature {
    pub const ZERO: Feature = Feature([0.0; 3]);

    pub fn new(r: f64, g: f64, b: f64) -> Self {
        Feature([r, g, b])
    }

    pub fn from_rgb(px: [u8; 3]) -> Self {
        Feature([px[0] as f64, px[1] as f64, px[2] as f64])
    }

    /// L1 distance between two feature vectors.
    pub fn manhattan(self, other: Feature) -> f64 {
        (self.0[0] - other.0[0]).abs()
            + (self.0[1] - other.0[1]).abs()
            + (self.0[2] - other.0[2]).abs()
    }

    pub fn dist_sq(self, other: Feature) -> f64 {
        let d = self - other;
        d.0[0] * d.0[0] + d.0[1] * d.0[1] + d.0[2] * d.0[2]
    }

    pub fn euclidean(self, other: Feature) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// Arithmetic mean of a non-empty sequence, summed in iteration order.
    pub fn mean<I: IntoIterator<Item = Feature>>(items: I) -> Option<Feature> {
        let mut sum = [0.0; 3];
        let mut n = 0usize;
        for f in items {
            sum[0] += f.0[0];
            sum[1] += f.0[1];
            sum[2] += f.0[2];
            n += 1;
        }
        (n > 0).then(|| {
            let n = n as f64;
            Feature([sum[0] / n, sum[1] / n, sum[2] / n])
        })
    }
}

impl Index<usize> for Feature {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Feature {
    type Output = Feature;

    fn add(self, o: Feature) -> Feature {
        Feature([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Feature {
    type Output = Feature;

    fn sub(self, o: Feature) -> Feature {
        Feature([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Feature {
    type Output = Feature;

    fn mul(self, s: f64) -> Feature {
        Feature([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// A set of pixels summarized by its centroid in feature space.
///
/// `members` holds pixel indices into the source image. `centroid` is kept
/// equal to the mean of the members' features; every constructor and merge
/// in this crate maintains that.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub centroid: Feature,
    pub members: Vec<usize>,
}

impl Cluster {
    /// Builds a cluster from member indices, computing the centroid from
    /// `features`. Returns `None` for an empty member list.
    pub fn from_members(features: &[Feature], members: Vec<usize>) -> Option<Cluster> {
        let centroid = Feature::mean(members.iter().map(|&i| features[i]))?;
        Some(Cluster { centroid, members })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}
