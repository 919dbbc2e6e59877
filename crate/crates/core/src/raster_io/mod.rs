//! Image decoding, encoding and rendering of segmentation results.
//!
//! Supported inputs are PPM (P3/P6, maxval 255) and 8-bit PNG. Label maps
//! are written as 16-bit grayscale PNG and can be read back from PNG or CSV.

mod png_codec;
mod ppm;
mod render;

use std::fs;
use std::path::Path;

use crate::{Error, Feature, Result};

pub use render::{render_centroid_image, render_false_color, Palette};

/// An 8-bit RGB raster stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero dimension {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Image { width, height, pixels })
    }

    /// An image filled with a single color.
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        Image::new(width, height, vec![color; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Image::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn features(&self) -> Vec<Feature> {
        self.pixels.iter().map(|&p| Feature::from_rgb(p)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    PpmP6,
    Png,
}

impl ImageFormat {
    /// Guesses the output format from a file extension; PNG unless the
    /// extension is `ppm` or `pnm`.
    pub fn from_path(path: &Path) -> ImageFormat {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(e) if e == "ppm" || e == "pnm" => ImageFormat::PpmP6,
            _ => ImageFormat::Png,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Decodes an in-memory PPM or PNG file, sniffing the format from its magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if png_codec::is_png(bytes) {
        png_codec::decode(bytes)
    } else if ppm::is_ppm(bytes) {
        ppm::decode(bytes)
    } else {
        Err(Error::UnsupportedFormat("unrecognized magic bytes".into()))
    }
}

pub fn encode_image(image: &Image, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::PpmP6 => Ok(ppm::encode_p6(image)),
        ImageFormat::Png => png_codec::encode_rgb(image),
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    decode_image(&read_file(path.as_ref())?)
}

pub fn save_image(image: &Image, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(image, format)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Row-major per-pixel labels with their raster dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<usize>,
}

/// Writes labels as a 16-bit grayscale PNG where the sample value is the label.
pub fn save_label_map(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let values = map
        .labels
        .iter()
        .map(|&l| u16::try_from(l).map_err(|_| Error::LabelOutOfRange { label: l, count: 1 << 16 }))
        .collect::<Result<Vec<u16>>>()?;
    let bytes = png_codec::encode_gray16(map.width, map.height, &values)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a label map from a grayscale PNG or from CSV (one row of
/// comma-separated integer labels per image row).
pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let bytes = read_file(path.as_ref())?;
    if png_codec::is_png(&bytes) {
        let (width, height, values) = png_codec::decode_gray(&bytes)?;
        return Ok(LabelMap { width, height, labels: values.into_iter().map(usize::from).collect() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut labels = Vec::new();
    let mut width = None;
    let mut height = 0;
    for record in reader.records() {
        let record = record?;
        if width.is_some_and(|w| w != record.len()) {
            return Err(Error::CorruptData(format!("ragged label CSV at row {height}")));
        }
        width = Some(record.len());
        for field in record.iter() {
            labels.push(
                field
                    .parse::<usize>()
                    .map_err(|_| Error::CorruptData(format!("bad label {field:?}")))?,
            );
        }
        height += 1;
    }
    match width {
        Some(width) if width > 0 => Ok(LabelMap { width, height, labels }),
        _ => Err(Error::CorruptData("empty label CSV".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_invariants() {
        assert!(Image::new(2, 2, vec![[0; 3]; 3]).is_err());
        assert!(Image::new(0, 2, vec![]).is_err());
        assert_eq!(Image::filled(3, 2, [1, 2, 3]).unwrap().len(), 6);
    }

    #[test]
    fn unknown_magic() {
        assert!(matches!(decode_image(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_image("/nonexistent/x.ppm"), Err(Error::FileNotFound(_))));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(ImageFormat::from_path(Path::new("a.PPM")), ImageFormat::PpmP6);
        assert_eq!(ImageFormat::from_path(Path::new("a.png")), ImageFormat::Png);
    }
}
