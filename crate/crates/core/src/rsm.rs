//! Region splitting and merging.
//!
//! Inside one Voronoi region, each color channel's histogram is smoothed
//! with a moving average and cut at the valleys between its significant
//! peaks. The per-channel intervals form a grid of color cells; every
//! occupied cell becomes a cluster. Cells whose centroids are closer than
//! `epsilon` (Manhattan) are then merged.

use std::collections::BTreeMap;

use crate::merge::merge_proximal_clusters;
use crate::{Cluster, Error, Feature, Result};

pub const BINS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    R = 0,
    G = 1,
    B = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub bins: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.bins.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RsmConfig {
    /// Moving-average window, odd.
    pub span: usize,
    /// Peaks lower than this fraction of the tallest smoothed bin are ignored.
    pub peak_min_ratio: f64,
    /// Regions with fewer pixels become a single cluster.
    pub min_region_pixels: usize,
    pub epsilon: f64,
}

impl Default for RsmConfig {
    fn default() -> Self {
        RsmConfig { span: 5, peak_min_ratio: 0.05, min_region_pixels: 16, epsilon: 71.0 }
    }
}

impl RsmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.span == 0 || self.span % 2 == 0 {
            return Err(Error::Config(format!("span {} must be odd and >= 1", self.span)));
        }
        if !(self.peak_min_ratio > 0.0 && self.peak_min_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "peak_min_ratio {} not in (0, 1]",
                self.peak_min_ratio
            )));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        Ok(())
    }
}

fn bin_of(v: f64) -> usize {
    v.round().clamp(0.0, 255.0) as usize
}

pub fn channel_histogram(pixels: &[Feature], channel: Channel) -> Result<Histogram> {
    if pixels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut bins = vec![0.0; BINS];
    for p in pixels {
        bins[bin_of(p[channel as usize])] += 1.0;
    }
    Ok(Histogram { bins })
}

/// Centered moving average; the window shrinks at the ends of the range.
pub fn smooth_histogram(h: &Histogram, span: usize) -> Histogram {
    let half = span / 2;
    let n = h.bins.len();
    let bins = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            h.bins[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    Histogram { bins }
}

/// Interior turning points of the histogram.
///
/// Bin `i` is a peak when the difference into it is positive and the next
/// nonzero difference after it is negative. A flat top is attributed to its
/// leftmost bin. Peaks below `peak_min_ratio` times the tallest bin are
/// dropped. Bins at either end of the range are never reported here; see
/// [`edge_modes`].
pub fn find_peaks(h: &Histogram, config: &RsmConfig) -> Vec<usize> {
    let b = &h.bins;
    let floor = config.peak_min_ratio * h.max();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < b.len() {
        if b[i] > b[i - 1] {
            let mut j = i;
            while j + 1 < b.len() && b[j + 1] == b[i] {
                j += 1;
            }
            if j + 1 < b.len() && b[j + 1] < b[i] {
                if b[i] >= floor && b[i] > 0.0 {
                    peaks.push(i);
                }
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Modes sitting on the ends of the channel range: bin 0 when the histogram
/// falls away from it, bin 255 when the histogram rises into it. Subject to
/// the same significance floor as [`find_peaks`].
pub fn edge_modes(h: &Histogram, config: &RsmConfig) -> (bool, bool) {
    let b = &h.bins;
    let floor = config.peak_min_ratio * h.max();
    let significant = |v: f64| v > 0.0 && v >= floor;
    let first_change = b.iter().position(|&v| v != b[0]);
    let low = significant(b[0]) && first_change.is_some_and(|j| b[j] < b[0]);
    let last = b.len() - 1;
    let last_change = b.iter().rposition(|&v| v != b[last]);
    let high = significant(b[last]) && last_change.is_some_and(|j| b[j] < b[last]);
    (low, high)
}

/// Index of the lowest bin strictly between each pair of adjacent peaks.
/// Ties resolve to the lowest index.
pub fn find_valleys(h: &Histogram, peaks: &[usize]) -> Vec<usize> {
    peaks
        .windows(2)
        .filter(|w| w[1] > w[0] + 1)
        .map(|w| {
            let mut best = w[0] + 1;
            for i in w[0] + 1..w[1] {
                if h.bins[i] < h.bins[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Valleys that cut one channel of `pixels` into intervals.
fn channel_cuts(pixels: &[Feature], channel: Channel, config: &RsmConfig) -> Result<Vec<usize>> {
    let smoothed = smooth_histogram(&channel_histogram(pixels, channel)?, config.span);
    let mut peaks = find_peaks(&smoothed, config);
    let (low, high) = edge_modes(&smoothed, config);
    if low {
        peaks.insert(0, 0);
    }
    if high {
        peaks.push(BINS - 1);
    }
    Ok(find_valleys(&smoothed, &peaks))
}

/// Interval index of a channel value. A valley bin opens the interval above it.
fn interval_of(cuts: &[usize], v: f64) -> usize {
    let bin = bin_of(v);
    cuts.partition_point(|&c| c <= bin)
}

/// Splits a region into color-cell clusters.
///
/// `features` is indexed by pixel; `members` lists the region's pixels.
/// Clusters are ordered by their (R, G, B) interval indices and their member
/// lists keep the order of `members`.
pub fn split_region(features: &[Feature], members: &[usize], config: &RsmConfig) -> Result<Vec<Cluster>> {
    if members.is_empty() {
        return Err(Error::EmptyInput);
    }
    if members.len() < config.min_region_pixels {
        let c = Cluster::from_members(features, members.to_vec()).expect("non-empty");
        return Ok(vec![c]);
    }
    let pixels: Vec<Feature> = members.iter().map(|&i| features[i]).collect();
    let cuts = [
        channel_cuts(&pixels, Channel::R, config)?,
        channel_cuts(&pixels, Channel::G, config)?,
        channel_cuts(&pixels, Channel::B, config)?,
    ];

    let mut cells: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
    for (&m, p) in members.iter().zip(&pixels) {
        let key = [
            interval_of(&cuts[0], p[0]),
            interval_of(&cuts[1], p[1]),
            interval_of(&cuts[2], p[2]),
        ];
        cells.entry(key).or_default().push(m);
    }
    Ok(cells
        .into_values()
        .map(|m| Cluster::from_members(features, m).expect("occupied cell"))
        .collect())
}

/// Merges proximal cells inside one region, with the same rule as the
/// global stage.
pub fn merge_within_region(clusters: Vec<Cluster>, epsilon: f64) -> Result<Vec<Cluster>> {
    if clusters.is_empty() {
        return Ok(clusters);
    }
    Ok(merge_proximal_clusters(clusters, epsilon)?.clusters)
}

/// Split then merge one region.
pub fn process_region(features: &[Feature], members: &[usize], config: &RsmConfig) -> Result<Vec<Cluster>> {
    merge_within_region(split_region(features, members, config)?, config.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::merge_pair;
    use proptest::prelude::*;

    fn hist(f: impl Fn(usize) -> f64) -> Histogram {
        Histogram { bins: (0..BINS).map(f).collect() }
    }

    fn feats(colors: &[[f64; 3]]) -> Vec<Feature> {
        colors.iter().map(|&c| Feature(c)).collect()
    }

    #[test]
    fn histogram_counts() {
        let px = feats(&[[100.0, 0.0, 0.0]; 3]);
        let h = channel_histogram(&px, Channel::R).unwrap();
        assert_eq!(h.bins[100], 3.0);
        assert_eq!(h.total(), 3.0);

        let px = feats(&[[0.0, 0.0, 0.0], [255.0, 0.0, 0.0]]);
        let h = channel_histogram(&px, Channel::R).unwrap();
        assert_eq!((h.bins[0], h.bins[255], h.total()), (1.0, 1.0, 2.0));

        assert!(matches!(channel_histogram(&[], Channel::G), Err(Error::EmptyInput)));
    }

    #[test]
    fn smoothing_examples() {
        let flat = hist(|_| 4.0);
        assert_eq!(smooth_histogram(&flat, 5), flat);

        let impulse = hist(|i| if i == 128 { 5.0 } else { 0.0 });
        let s = smooth_histogram(&impulse, 5);
        for i in 0..BINS {
            let want = if (126..=130).contains(&i) { 1.0 } else { 0.0 };
            assert_eq!(s.bins[i], want, "bin {i}");
        }

        let edge = hist(|i| if i == 0 { 3.0 } else { 0.0 });
        let s = smooth_histogram(&edge, 5);
        assert_eq!(s.bins[0], 1.0);
        assert_eq!(s.bins[1], 0.75);
        assert_eq!(s.bins[2], 0.6);
        assert_eq!(s.bins[3], 0.0);

        assert_eq!(smooth_histogram(&edge, 1), edge);
    }

    /// Exhaustive local-maximum scan: a plateau that is strictly higher than
    /// its neighbours on both sides, reported at its left end.
    fn local_max_oracle(b: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 1..b.len() - 1 {
            if b[i - 1] >= b[i] {
                continue;
            }
            let mut j = i;
            while j + 1 < b.len() && b[j + 1] == b[i] {
                j += 1;
            }
            if j + 1 < b.len() && b[j + 1] < b[i] {
                out.push(i);
            }
        }
        out.dedup();
        out
    }

    #[test]
    fn peak_examples() {
        let cfg = RsmConfig::default();
        let rising = hist(|i| i as f64);
        assert!(find_peaks(&rising, &cfg).is_empty());

        let tri = hist(|i| (20.0 - (i as f64 - 100.0).abs()).max(0.0));
        assert_eq!(find_peaks(&tri, &cfg), vec![100]);
        assert_eq!(find_peaks(&tri, &cfg), local_max_oracle(&tri.bins));

        // second bump 100x taller; first is 1% of it, below the 5% floor
        let two = hist(|i| {
            (10.0 - (i as f64 - 50.0).abs()).max(0.0) + 100.0 * (10.0 - (i as f64 - 200.0).abs()).max(0.0)
        });
        assert_eq!(find_peaks(&two, &cfg), vec![200]);
        let loose = RsmConfig { peak_min_ratio: 0.005, ..cfg.clone() };
        assert_eq!(find_peaks(&two, &loose), vec![50, 200]);

        let plateau = hist(|i| if (10..=12).contains(&i) { 3.0 } else { 0.0 });
        assert_eq!(find_peaks(&plateau, &cfg), vec![10]);
        // a shelf on a rising slope is not a peak
        let shelf = hist(|i| match i {
            10 | 11 => 2.0,
            12 => 5.0,
            _ => 0.0,
        });
        assert_eq!(find_peaks(&shelf, &cfg), vec![12]);
    }

    #[test]
    fn edge_mode_detection() {
        let cfg = RsmConfig::default();
        let s = smooth_histogram(&hist(|i| if i == 0 { 10.0 } else { 0.0 }), 5);
        assert_eq!(edge_modes(&s, &cfg), (true, false));
        let rising = hist(|i| i as f64);
        assert_eq!(edge_modes(&rising, &cfg), (false, true));
        assert_eq!(edge_modes(&hist(|_| 1.0), &cfg), (false, false));
    }

    #[test]
    fn valley_examples() {
        let h = hist(|i| if i == 120 { 0.0 } else { 1.0 + (i as f64 - 125.0).abs() });
        assert_eq!(find_valleys(&h, &[50, 200]), vec![120]);
        assert!(find_valleys(&h, &[100]).is_empty());
        let flat = hist(|i| if (14..=16).contains(&i) { 1.0 } else { 5.0 });
        assert_eq!(find_valleys(&flat, &[10, 20]), vec![14]);
    }

    #[test]
    fn split_uniform_region() {
        let f = feats(&[[10.0, 20.0, 30.0]; 40]);
        let members: Vec<usize> = (0..40).collect();
        let c = split_region(&f, &members, &RsmConfig::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].centroid, Feature::new(10.0, 20.0, 30.0));
        assert_eq!(c[0].size(), 40);
    }

    #[test]
    fn split_two_modes() {
        let mut colors = vec![[0.0; 3]; 10];
        colors.extend(vec![[200.0; 3]; 10]);
        let f = feats(&colors);
        let members: Vec<usize> = (0..20).collect();
        let c = split_region(&f, &members, &RsmConfig::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].centroid, Feature::new(0.0, 0.0, 0.0));
        assert_eq!(c[0].members, (0..10).collect::<Vec<_>>());
        assert_eq!(c[1].centroid, Feature::new(200.0, 200.0, 200.0));
    }

    #[test]
    fn split_small_region_fallback() {
        let f = feats(&[[0.0; 3], [255.0; 3], [10.0, 200.0, 30.0], [90.0; 3], [4.0; 3]]);
        let c = split_region(&f, &[0, 1, 2, 3, 4], &RsmConfig::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].size(), 5);
        assert!(matches!(split_region(&f, &[], &RsmConfig::default()), Err(Error::EmptyInput)));
    }

    #[test]
    fn within_region_merge() {
        let a = Cluster { centroid: Feature::new(0.0, 0.0, 0.0), members: vec![0] };
        let b = Cluster { centroid: Feature::new(60.0, 0.0, 0.0), members: vec![1] };
        assert_eq!(merge_within_region(vec![a.clone(), b.clone()], 71.0).unwrap().len(), 1);

        let far = Cluster { centroid: Feature::new(200.0, 0.0, 0.0), members: vec![2] };
        let out = merge_within_region(vec![a.clone(), far.clone()], 71.0).unwrap();
        assert_eq!(out, vec![a.clone(), far]);

        // mutual distances 50, 60, 100
        let x = Cluster { centroid: Feature::new(0.0, 0.0, 0.0), members: vec![0] };
        let y = Cluster { centroid: Feature::new(50.0, 0.0, 0.0), members: vec![1] };
        let z = Cluster { centroid: Feature::new(45.0, 55.0, 0.0), members: vec![2] };
        assert_eq!(x.centroid.manhattan(y.centroid), 50.0);
        assert_eq!(y.centroid.manhattan(z.centroid), 60.0);
        assert_eq!(x.centroid.manhattan(z.centroid), 100.0);
        // by hand: x+y at 50 gives (25,0,0); its distance to z is 20+55 = 75 >= 71
        let out = merge_within_region(vec![x.clone(), y.clone(), z.clone()], 71.0).unwrap();
        assert_eq!(out, vec![merge_pair(x, y), z]);
    }

    #[test]
    fn config_validation() {
        assert!(RsmConfig { span: 4, ..RsmConfig::default() }.validate().is_err());
        assert!(RsmConfig { peak_min_ratio: 0.0, ..RsmConfig::default() }.validate().is_err());
        assert!(RsmConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn split_covers_and_is_disjoint(
            colors in proptest::collection::vec((0u8..=255, 0u8..=255, 0u8..=255), 1..300),
        ) {
            let f: Vec<Feature> = colors.iter().map(|&(r, g, b)| Feature::from_rgb([r, g, b])).collect();
            let members: Vec<usize> = (0..f.len()).collect();
            let clusters = split_region(&f, &members, &RsmConfig::default()).unwrap();
            let mut seen = vec![false; f.len()];
            for c in &clusters {
                let mean = Feature::mean(c.members.iter().map(|&i| f[i])).unwrap();
                for ch in 0..3 {
                    prop_assert!((mean[ch] - c.centroid[ch]).abs() <= 1e-9);
                }
                for &m in &c.members {
                    prop_assert!(!seen[m]);
                    seen[m] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
            prop_assert_eq!(split_region(&f, &members, &RsmConfig::default()).unwrap(), clusters);
        }

        #[test]
        fn smoothing_is_linear(
            a in proptest::collection::vec(0u16..1000, BINS),
            b in proptest::collection::vec(0u16..1000, BINS),
            span in (0usize..5).prop_map(|s| 2 * s + 1),
        ) {
            let ha = Histogram { bins: a.iter().map(|&v| v as f64).collect() };
            let hb = Histogram { bins: b.iter().map(|&v| v as f64).collect() };
            let sum = Histogram { bins: ha.bins.iter().zip(&hb.bins).map(|(x, y)| x + y).collect() };
            let (sa, sb, ss) = (smooth_histogram(&ha, span), smooth_histogram(&hb, span), smooth_histogram(&sum, span));
            for i in 0..BINS {
                prop_assert!((sa.bins[i] + sb.bins[i] - ss.bins[i]).abs() <= 1e-9 * (1.0 + ss.bins[i]));
            }
            let id = smooth_histogram(&ha, 1);
            prop_assert!((id.total() - ha.total()).abs() <= 1e-6 * ha.total().max(1.0));
        }
    }
}
