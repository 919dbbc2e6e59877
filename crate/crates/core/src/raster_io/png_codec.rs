use std::io::Cursor;

use png::{BitDepth, ColorType, Transformations};

use super::Image;
use crate::{Error, Result};

const SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

pub(crate) fn is_png(bytes: &[u8]) -> bool {
    bytes.starts_with(SIGNATURE)
}

fn decode_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::CorruptData("truncated PNG".into())
        }
        png::DecodingError::IoError(e) => Error::Io(e),
        other => Error::CorruptData(other.to_string()),
    }
}

fn encode_error(e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(e) => Error::Io(e),
        other => Error::InvalidImage(other.to_string()),
    }
}

struct Raw {
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    data: Vec<u8>,
}

fn read_raw(bytes: &[u8], transform: Transformations) -> Result<Raw> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(transform);
    let mut reader = decoder.read_info().map_err(decode_error)?;
    let len = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptData("PNG too large".into()))?;
    let mut data = vec![0; len];
    let info = reader.next_frame(&mut data).map_err(decode_error)?;
    data.truncate(info.buffer_size());
    Ok(Raw {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

/// Decodes an 8-bit PNG into RGB. Alpha is discarded and grayscale is
/// replicated across channels.
pub(crate) fn decode(bytes: &[u8]) -> Result<Image> {
    let raw = read_raw(bytes, Transformations::EXPAND)?;
    if raw.depth != BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG bit depth {}, only 8 is supported",
            raw.depth as u8
        )));
    }
    let pixels: Vec<[u8; 3]> = match raw.color {
        ColorType::Rgb => raw.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        ColorType::Rgba => raw.data.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect(),
        ColorType::Grayscale => raw.data.iter().map(|&v| [v, v, v]).collect(),
        ColorType::GrayscaleAlpha => raw.data.chunks_exact(2).map(|c| [c[0], c[0], c[0]]).collect(),
        ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("unexpanded indexed PNG".into()));
        }
    };
    Image::new(raw.width, raw.height, pixels)
}

pub(crate) fn encode_rgb(image: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        enc.set_color(ColorType::Rgb);
        enc.set_depth(BitDepth::Eight);
        let mut writer = enc.write_header().map_err(encode_error)?;
        writer
            .write_image_data(image.pixels().as_flattened())
            .map_err(encode_error)?;
        writer.finish().map_err(encode_error)?;
    }
    Ok(out)
}

/// Encodes labels as a 16-bit grayscale PNG (big-endian samples).
pub(crate) fn encode_gray16(width: usize, height: usize, values: &[u16]) -> Result<Vec<u8>> {
    let data: Vec<u8> = values.iter().flat_map(|v| v.to_be_bytes()).collect();
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(ColorType::Grayscale);
        enc.set_depth(BitDepth::Sixteen);
        let mut writer = enc.write_header().map_err(encode_error)?;
        writer.write_image_data(&data).map_err(encode_error)?;
        writer.finish().map_err(encode_error)?;
    }
    Ok(out)
}

/// Decodes a grayscale PNG (8 or 16 bit) into raw sample values.
pub(crate) fn decode_gray(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let raw = read_raw(bytes, Transformations::IDENTITY)?;
    if raw.color != ColorType::Grayscale {
        return Err(Error::UnsupportedFormat(format!(
            "label map must be grayscale, got {:?}",
            raw.color
        )));
    }
    let values = match raw.depth {
        BitDepth::Sixteen => raw
            .data
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
        BitDepth::Eight => raw.data.iter().map(|&v| v as u16).collect(),
        d => {
            return Err(Error::UnsupportedFormat(format!(
                "label map bit depth {}",
                d as u8
            )))
        }
    };
    Ok((raw.width, raw.height, values))
}
