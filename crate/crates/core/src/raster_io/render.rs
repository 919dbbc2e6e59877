use super::Image;
use crate::{Error, Feature, Result, Segmentation};

/// Ordered list of pairwise-distinct colors for false-color rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette(Vec<[u8; 3]>);

impl Palette {
    pub const DEFAULT_LEN: usize = 64;

    pub fn new(colors: Vec<[u8; 3]>) -> Result<Self> {
        for (i, a) in colors.iter().enumerate() {
            if colors[..i].contains(a) {
                return Err(Error::Config(format!("duplicate palette color {a:?}")));
            }
        }
        Ok(Palette(colors))
    }

    /// `n` colors spread over the RGB cube.
    ///
    /// Candidates are the lattice `L x L x L` with `L = max(2, ceil(cbrt n))`
    /// levels evenly spaced over 0..=255. Starting from black, each next color
    /// is the candidate whose minimum Euclidean distance to the colors already
    /// chosen is largest; ties go to the candidate earliest in R-major lattice
    /// order. The first `n` picks form the palette.
    pub fn distinct(n: usize) -> Palette {
        let mut levels = 2usize;
        while levels.pow(3) < n {
            levels += 1;
        }
        let step = |i: usize| ((i * 255) as f64 / (levels - 1) as f64).round() as u8;
        let mut candidates: Vec<[u8; 3]> = Vec::with_capacity(levels.pow(3));
        for r in 0..levels {
            for g in 0..levels {
                for b in 0..levels {
                    candidates.push([step(r), step(g), step(b)]);
                }
            }
        }
        let dist = |a: [u8; 3], b: [u8; 3]| Feature::from_rgb(a).dist_sq(Feature::from_rgb(b));

        let mut chosen = Vec::with_capacity(n);
        let mut min_dist = vec![f64::INFINITY; candidates.len()];
        let mut taken = vec![false; candidates.len()];
        let mut next = 0;
        while chosen.len() < n {
            taken[next] = true;
            let c = candidates[next];
            chosen.push(c);
            for (i, &cand) in candidates.iter().enumerate() {
                min_dist[i] = min_dist[i].min(dist(c, cand));
            }
            let mut best: Option<usize> = None;
            for i in (0..candidates.len()).filter(|&i| !taken[i]) {
                if best.is_none_or(|b| min_dist[i] > min_dist[b]) {
                    best = Some(i);
                }
            }
            match best {
                Some(b) => next = b,
                None => break,
            }
        }
        Palette(chosen)
    }

    pub fn colors(&self) -> &[[u8; 3]] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Palette {
    fn default() -> Self {
        Palette::distinct(Self::DEFAULT_LEN)
    }
}

/// Rounds half up and clamps to a displayable channel value.
fn to_channel(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn check_seg(seg: &Segmentation, width: usize, height: usize) -> Result<()> {
    if seg.label_of.len() != width * height {
        return Err(Error::InvalidImage(format!(
            "{} labels for a {width}x{height} image",
            seg.label_of.len()
        )));
    }
    if let Some(&label) = seg.label_of.iter().find(|&&l| l >= seg.centroids.len()) {
        return Err(Error::LabelOutOfRange { label, count: seg.centroids.len() });
    }
    Ok(())
}

/// Paints each pixel with its cluster's centroid color.
pub fn render_centroid_image(image: &Image, seg: &Segmentation) -> Result<Image> {
    check_seg(seg, image.width(), image.height())?;
    let colors: Vec<[u8; 3]> = seg
        .centroids
        .iter()
        .map(|c| [to_channel(c[0]), to_channel(c[1]), to_channel(c[2])])
        .collect();
    Image::new(
        image.width(),
        image.height(),
        seg.label_of.iter().map(|&l| colors[l]).collect(),
    )
}

/// Paints each pixel with `palette[label]`.
pub fn render_false_color(seg: &Segmentation, palette: &Palette) -> Result<Image> {
    check_seg(seg, seg.width, seg.height)?;
    if seg.centroids.len() > palette.len() {
        return Err(Error::PaletteTooSmall {
            needed: seg.centroids.len(),
            available: palette.len(),
        });
    }
    Image::new(
        seg.width,
        seg.height,
        seg.label_of.iter().map(|&l| palette.0[l]).collect(),
    )
}
