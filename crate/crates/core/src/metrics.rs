//! Unsupervised segmentation quality measures.
//!
//! Color error of a segment, `e_j^2`, is the sum over its pixels of the
//! squared Euclidean distance between the pixel's original color and the
//! segment's mean original color. `N` is the pixel count, `M` the segment
//! count, `N_j` the area of segment `j` and `S(a)` the number of segments
//! with area exactly `a`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::{Error, Feature, Image, Result, Segmentation};

/// Gray levels per channel, the normalizer of inter-region disparity.
pub const GRAY_LEVELS: f64 = 255.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SegmentMode {
    /// One segment per cluster label.
    #[default]
    Cluster,
    /// One segment per 4-connected run of equal labels.
    ConnectedComponent,
}

impl FromStr for SegmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster" => Ok(SegmentMode::Cluster),
            "cc" | "connected-component" => Ok(SegmentMode::ConnectedComponent),
            other => Err(Error::Config(format!("unknown metrics mode {other:?}"))),
        }
    }
}

impl fmt::Display for SegmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentMode::Cluster => "cluster",
            SegmentMode::ConnectedComponent => "cc",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub members: Vec<usize>,
    /// Mean original color of the members.
    pub mean: Feature,
}

impl Segment {
    pub fn area(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentView {
    pub segments: Vec<Segment>,
    pub mode: SegmentMode,
    /// Total pixel count.
    pub n: usize,
}

impl SegmentView {
    pub fn m(&self) -> usize {
        self.segments.len()
    }

    /// `S(a)` for every area present.
    pub fn area_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.segments {
            *counts.entry(s.area()).or_insert(0) += 1;
        }
        counts
    }
}

fn check_labels(image: &Image, seg: &Segmentation) -> Result<()> {
    if seg.label_of.len() != image.len() {
        return Err(Error::InvalidImage(format!(
            "{} labels for {} pixels",
            seg.label_of.len(),
            image.len()
        )));
    }
    if let Some(&label) = seg.label_of.iter().find(|&&l| l >= seg.centroids.len()) {
        return Err(Error::LabelOutOfRange { label, count: seg.centroids.len() });
    }
    Ok(())
}

fn connected_components(labels: &[usize], width: usize, height: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; labels.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(p) = queue.pop_front() {
            members.push(p);
            let (x, y) = (p % width, p / width);
            let mut visit = |q: usize| {
                if !seen[q] && labels[q] == labels[start] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

pub fn build_segment_view(image: &Image, seg: &Segmentation, mode: SegmentMode) -> Result<SegmentView> {
    check_labels(image, seg)?;
    let groups = match mode {
        SegmentMode::Cluster => {
            let mut groups = vec![Vec::new(); seg.centroids.len()];
            for (p, &l) in seg.label_of.iter().enumerate() {
                groups[l].push(p);
            }
            groups.retain(|g| !g.is_empty());
            groups
        }
        SegmentMode::ConnectedComponent => connected_components(&seg.label_of, image.width(), image.height()),
    };
    let px = image.pixels();
    let segments = groups
        .into_iter()
        .map(|members| {
            let mean = Feature::mean(members.iter().map(|&i| Feature::from_rgb(px[i]))).expect("non-empty");
            Segment { members, mean }
        })
        .collect();
    Ok(SegmentView { segments, mode, n: image.len() })
}

/// Mean squared distance of each pixel to its cluster centroid.
pub fn mse(image: &Image, seg: &Segmentation) -> Result<f64> {
    check_labels(image, seg)?;
    let total: f64 = image
        .pixels()
        .iter()
        .zip(&seg.label_of)
        .map(|(&p, &l)| Feature::from_rgb(p).dist_sq(seg.centroids[l]))
        .sum();
    Ok(total / image.len() as f64)
}

/// `e_j^2` for segment `j`.
pub fn color_error_sq(view: &SegmentView, j: usize, image: &Image) -> Result<f64> {
    let s = view
        .segments
        .get(j)
        .ok_or(Error::IndexOutOfRange { index: j, count: view.m() })?;
    Ok(segment_error_sq(s, image))
}

fn segment_error_sq(s: &Segment, image: &Image) -> f64 {
    let px = image.pixels();
    s.members.iter().map(|&i| Feature::from_rgb(px[i]).dist_sq(s.mean)).sum()
}

/// `sum_j e_j^2 / sqrt(N_j)`, shared by F and F'.
fn weighted_error(image: &Image, view: &SegmentView) -> f64 {
    view.segments
        .iter()
        .map(|s| segment_error_sq(s, image) / (s.area() as f64).sqrt())
        .sum()
}

/// Liu-Yang `F = sqrt(M) / (1000 N) * sum_j e_j^2 / sqrt(N_j)`.
pub fn liu_yang_f(image: &Image, view: &SegmentView) -> f64 {
    (view.m() as f64).sqrt() / (1000.0 * view.n as f64) * weighted_error(image, view)
}

/// Borsotti `F'`: F with `sqrt(M)` replaced by `sqrt(sum_a S(a)^(1 + 1/a))`.
pub fn borsotti_f_prime(image: &Image, view: &SegmentView) -> f64 {
    let penalty: f64 = view
        .area_counts()
        .into_iter()
        .map(|(a, s)| (s as f64).powf(1.0 + 1.0 / a as f64))
        .sum();
    penalty.sqrt() / (1000.0 * view.n as f64) * weighted_error(image, view)
}

/// Borsotti `Q = sqrt(M) / (1000 N) * sum_j [e_j^2 / (1 + ln N_j) + (S(N_j) / N_j)^2]`.
pub fn borsotti_q(image: &Image, view: &SegmentView) -> f64 {
    let counts = view.area_counts();
    let sum: f64 = view
        .segments
        .iter()
        .map(|s| {
            let a = s.area() as f64;
            let same = counts[&s.area()] as f64;
            segment_error_sq(s, image) / (1.0 + a.ln()) + (same / a).powi(2)
        })
        .sum();
    (view.m() as f64).sqrt() / (1000.0 * view.n as f64) * sum
}

/// Rosenberger-Chehdi intra-region uniformity: area-weighted mean squared
/// color error per region, averaged over regions.
pub fn intra_uniformity(image: &Image, view: &SegmentView) -> f64 {
    let n = view.n as f64;
    let sum: f64 = view
        .segments
        .iter()
        .map(|s| {
            let a = s.area() as f64;
            (a / n) * (segment_error_sq(s, image) / a)
        })
        .sum();
    sum / view.m() as f64
}

/// Rosenberger-Chehdi inter-region disparity. The disparity of two regions
/// is the Euclidean distance of their mean colors over [`GRAY_LEVELS`]; each
/// region scores the mean disparity to all others.
pub fn inter_disparity(_image: &Image, view: &SegmentView) -> f64 {
    let m = view.m();
    if m < 2 {
        return 0.0;
    }
    let n = view.n as f64;
    let per_region: Vec<f64> = view
        .segments
        .par_iter()
        .enumerate()
        .map(|(j, sj)| {
            let total: f64 = view
                .segments
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, si)| sj.mean.euclidean(si.mean) / GRAY_LEVELS)
                .sum();
            (sj.area() as f64 / n) * (total / (m - 1) as f64)
        })
        .collect();
    per_region.iter().sum::<f64>() / m as f64
}

/// `(inter - intra) / 2`; higher is better.
pub fn f_rc(image: &Image, view: &SegmentView) -> f64 {
    (inter_disparity(image, view) - intra_uniformity(image, view)) / 2.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub f: f64,
    pub f_prime: f64,
    pub q: f64,
    pub d_intra: f64,
    pub d_inter: f64,
    pub f_rc: f64,
    /// Cluster count of the segmentation.
    pub k: usize,
    /// Segment count under `mode`.
    pub segments: usize,
    pub mode: SegmentMode,
}

pub fn evaluate(image: &Image, seg: &Segmentation, mode: SegmentMode) -> Result<MetricsReport> {
    let view = build_segment_view(image, seg, mode)?;
    let d_intra = intra_uniformity(image, &view);
    let d_inter = inter_disparity(image, &view);
    Ok(MetricsReport {
        mse: mse(image, seg)?,
        f: liu_yang_f(image, &view),
        f_prime: borsotti_f_prime(image, &view),
        q: borsotti_q(image, &view),
        d_intra,
        d_inter,
        f_rc: (d_inter - d_intra) / 2.0,
        k: seg.k(),
        segments: view.m(),
        mode,
    })
}

/// A segmentation of `image` from raw labels, with each label's centroid set
/// to the mean color of its pixels. Unused labels are compacted away in
/// ascending order.
pub fn segmentation_from_labels(image: &Image, labels: &[usize]) -> Result<Segmentation> {
    if labels.len() != image.len() {
        return Err(Error::InvalidImage(format!(
            "{} labels for {} pixels",
            labels.len(),
            image.len()
        )));
    }
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let compact: Vec<usize> = labels
        .iter()
        .map(|l| ids.binary_search(l).expect("present"))
        .collect();
    let mut sums = vec![[0.0f64; 3]; ids.len()];
    let mut counts = vec![0usize; ids.len()];
    for (&p, &l) in image.pixels().iter().zip(&compact) {
        for c in 0..3 {
            sums[l][c] += p[c] as f64;
        }
        counts[l] += 1;
    }
    let centroids = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| Feature([s[0] / n as f64, s[1] / n as f64, s[2] / n as f64]))
        .collect();
    let mut seg = Segmentation {
        width: image.width(),
        height: image.height(),
        label_of: compact,
        centroids,
        iterations_used: 0,
        final_sse: 0.0,
        sse_history: Vec::new(),
    };
    seg.final_sse = mse(image, &seg)? * image.len() as f64;
    Ok(seg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg_of(image: &Image, labels: Vec<usize>) -> Segmentation {
        segmentation_from_labels(image, &labels).unwrap()
    }

    #[test]
    fn view_modes() {
        let img = Image::new(4, 1, vec![[0, 0, 0], [9, 9, 9], [0, 0, 0], [9, 9, 9]]).unwrap();
        let s = seg_of(&img, vec![0, 1, 0, 1]);
        assert_eq!(build_segment_view(&img, &s, SegmentMode::Cluster).unwrap().m(), 2);
        assert_eq!(build_segment_view(&img, &s, SegmentMode::ConnectedComponent).unwrap().m(), 4);

        let one = seg_of(&img, vec![0; 4]);
        for mode in [SegmentMode::Cluster, SegmentMode::ConnectedComponent] {
            let v = build_segment_view(&img, &one, mode).unwrap();
            assert_eq!((v.m(), v.segments[0].area()), (1, 4));
        }
    }

    #[test]
    fn mse_examples() {
        let img = Image::new(2, 1, vec![[0, 0, 0], [2, 0, 0]]).unwrap();
        let s = seg_of(&img, vec![0, 0]);
        assert_eq!(s.centroids[0], Feature::new(1.0, 0.0, 0.0));
        assert_eq!(mse(&img, &s).unwrap(), 1.0);

        let exact = Image::new(2, 1, vec![[5, 5, 5], [7, 7, 7]]).unwrap();
        assert_eq!(mse(&exact, &seg_of(&exact, vec![0, 1])).unwrap(), 0.0);

        // doubling every deviation quadruples the MSE
        let wide = Image::new(2, 1, vec![[0, 0, 0], [4, 0, 0]]).unwrap();
        assert_eq!(mse(&wide, &seg_of(&wide, vec![0, 0])).unwrap(), 4.0);
    }

    #[test]
    fn color_error_examples() {
        let img = Image::new(2, 1, vec![[0, 0, 0], [2, 0, 0]]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0, 0]), SegmentMode::Cluster).unwrap();
        assert_eq!(color_error_sq(&v, 0, &img).unwrap(), 2.0);
        assert!(matches!(color_error_sq(&v, 1, &img), Err(Error::IndexOutOfRange { .. })));

        let shifted = Image::new(2, 1, vec![[100, 50, 20], [102, 50, 20]]).unwrap();
        let v = build_segment_view(&shifted, &seg_of(&shifted, vec![0, 0]), SegmentMode::Cluster).unwrap();
        assert_eq!(color_error_sq(&v, 0, &shifted).unwrap(), 2.0);
    }

    #[test]
    fn liu_yang_example() {
        // N = 4, M = 1, e^2 = 2 -> (1 / 4000) * (2 / 2)
        let img = Image::new(4, 1, vec![[0, 0, 0], [2, 0, 0], [1, 0, 0], [1, 0, 0]]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0; 4]), SegmentMode::Cluster).unwrap();
        assert_eq!(color_error_sq(&v, 0, &img).unwrap(), 2.0);
        assert!((liu_yang_f(&img, &v) - 2.5e-4).abs() < 1e-18);
    }

    #[test]
    fn liu_yang_split_two_tone() {
        let img = Image::new(4, 1, vec![[0, 0, 0], [0, 0, 0], [10, 0, 0], [10, 0, 0]]).unwrap();
        let whole = build_segment_view(&img, &seg_of(&img, vec![0; 4]), SegmentMode::Cluster).unwrap();
        let split = build_segment_view(&img, &seg_of(&img, vec![0, 0, 1, 1]), SegmentMode::Cluster).unwrap();
        // one segment: mean 5, e^2 = 4 * 25 = 100 -> 100 / 2 / 4000
        assert!((liu_yang_f(&img, &whole) - 0.0125).abs() < 1e-15);
        assert_eq!(liu_yang_f(&img, &split), 0.0);
    }

    #[test]
    fn f_prime_examples() {
        // distinct areas 1, 2, 3: F' == F
        let img = Image::new(6, 1, vec![[0, 0, 0], [9, 0, 0], [8, 0, 0], [1, 2, 3], [2, 2, 2], [3, 3, 3]]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0, 1, 1, 2, 2, 2]), SegmentMode::Cluster).unwrap();
        assert!((borsotti_f_prime(&img, &v) - liu_yang_f(&img, &v)).abs() <= 1e-15 * liu_yang_f(&img, &v));

        // two segments of area 3: root factor sqrt(2^(4/3))
        let img = Image::new(6, 1, vec![[0, 0, 0], [3, 0, 0], [6, 0, 0], [0, 9, 0], [0, 9, 3], [0, 9, 6]]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0, 0, 0, 1, 1, 1]), SegmentMode::Cluster).unwrap();
        let e = 18.0 / 3f64.sqrt() * 2.0;
        let want = 2f64.powf(4.0 / 3.0).sqrt() / 6000.0 * e;
        assert!((borsotti_f_prime(&img, &v) - want).abs() <= 1e-15 * want);

        let flat = Image::filled(3, 3, [4, 4, 4]).unwrap();
        let v = build_segment_view(&flat, &seg_of(&flat, vec![0; 9]), SegmentMode::Cluster).unwrap();
        assert_eq!(borsotti_f_prime(&flat, &v), 0.0);
    }

    #[test]
    fn q_examples() {
        let img = Image::filled(4, 1, [7, 7, 7]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0; 4]), SegmentMode::Cluster).unwrap();
        assert!((borsotti_q(&img, &v) - 1.5625e-5).abs() < 1e-20);

        // area-1 segments: 1 + ln 1 = 1, no singularity
        let img = Image::new(2, 1, vec![[0, 0, 0], [1, 1, 1]]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0, 1]), SegmentMode::Cluster).unwrap();
        // M = 2, N = 2, each term (2/1)^2 = 4
        let want = 2f64.sqrt() / 2000.0 * 8.0;
        assert!((borsotti_q(&img, &v) - want).abs() < 1e-18);
    }

    #[test]
    fn rosenberger_chehdi_examples() {
        let img = Image::new(2, 1, vec![[0, 0, 0], [2, 0, 0]]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0, 0]), SegmentMode::Cluster).unwrap();
        assert_eq!(intra_uniformity(&img, &v), 1.0);
        assert_eq!(inter_disparity(&img, &v), 0.0);

        let two = Image::new(2, 2, vec![[0, 0, 0], [255, 0, 0], [0, 0, 0], [255, 0, 0]]).unwrap();
        let v = build_segment_view(&two, &seg_of(&two, vec![0, 1, 0, 1]), SegmentMode::Cluster).unwrap();
        assert_eq!(inter_disparity(&two, &v), 0.5);
        assert_eq!(intra_uniformity(&two, &v), 0.0);
        assert_eq!(f_rc(&two, &v), 0.25);

        let flat = Image::filled(3, 3, [1, 2, 3]).unwrap();
        let v = build_segment_view(&flat, &seg_of(&flat, vec![0; 9]), SegmentMode::Cluster).unwrap();
        assert_eq!(f_rc(&flat, &v), 0.0);

        // same mean color in two regions -> no disparity
        let same = Image::filled(2, 1, [40, 40, 40]).unwrap();
        let v = build_segment_view(&same, &seg_of(&same, vec![0, 1]), SegmentMode::Cluster).unwrap();
        assert_eq!(inter_disparity(&same, &v), 0.0);
    }

    #[test]
    fn f_rc_can_be_negative() {
        // one noisy segment: intra > 0, inter = 0
        let img = Image::new(2, 1, vec![[0, 0, 0], [200, 0, 0]]).unwrap();
        let v = build_segment_view(&img, &seg_of(&img, vec![0, 0]), SegmentMode::Cluster).unwrap();
        assert!(f_rc(&img, &v) < 0.0);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("cc".parse::<SegmentMode>().unwrap(), SegmentMode::ConnectedComponent);
        assert_eq!("cluster".parse::<SegmentMode>().unwrap(), SegmentMode::Cluster);
        assert!("x".parse::<SegmentMode>().is_err());
    }

    #[test]
    fn labels_are_compacted() {
        let img = Image::new(3, 1, vec![[0, 0, 0], [1, 1, 1], [2, 2, 2]]).unwrap();
        let s = seg_of(&img, vec![7, 3, 7]);
        assert_eq!(s.label_of, vec![1, 0, 1]);
        assert_eq!(s.centroids[0], Feature::new(1.0, 1.0, 1.0));
    }
}
