//! Netpbm P3 (ASCII) and P6 (binary) pixmaps with maxval 255.

use super::Image;
use crate::{Error, Result};

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    /// Offset of the first payload byte.
    data_start: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                Error::CorruptData(format!("truncated PPM: missing {what}"))
            } else {
                Error::CorruptData(format!("expected integer for {what}"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptData(format!("{what} out of range")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let binary = match bytes.get(..2) {
        Some(b"P6") => true,
        Some(b"P3") => false,
        _ => return Err(Error::UnsupportedFormat("not a P3/P6 pixmap".into())),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.next_uint("width")?;
    let height = cur.next_uint("height")?;
    let maxval = cur.next_uint("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval}, only 255 is supported")));
    }
    if width == 0 || height == 0 {
        return Err(Error::CorruptData(format!("zero dimension {width}x{height}")));
    }
    // Exactly one whitespace byte separates maxval from a binary payload.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(Error::CorruptData("missing whitespace after maxval".into())),
        None if binary => return Err(Error::CorruptData("truncated PPM: no payload".into())),
        None => {}
    }
    Ok(Header { binary, width, height, data_start: cur.pos })
}

pub(crate) fn is_ppm(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == b'P' && (b'1'..=b'7').contains(&bytes[1])
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Image> {
    let header = parse_header(bytes)?;
    let count = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| Error::CorruptData("dimensions overflow".into()))?;
    let mut pixels = Vec::with_capacity(count);
    if header.binary {
        let payload = &bytes[header.data_start..];
        if payload.len() < count * 3 {
            return Err(Error::CorruptData(format!(
                "truncated P6 payload: {} of {} bytes",
                payload.len(),
                count * 3
            )));
        }
        pixels.extend(payload[..count * 3].chunks_exact(3).map(|c| [c[0], c[1], c[2]]));
    } else {
        let mut cur = Cursor { bytes, pos: header.data_start };
        for _ in 0..count {
            let mut px = [0u8; 3];
            for ch in px.iter_mut() {
                let v = cur.next_uint("sample")?;
                *ch = u8::try_from(v)
                    .map_err(|_| Error::CorruptData(format!("sample {v} exceeds maxval")))?;
            }
            pixels.push(px);
        }
    }
    Image::new(header.width, header.height, pixels)
}

pub(crate) fn encode_p6(image: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.reserve(image.pixels().len() * 3);
    for px in image.pixels() {
        out.extend_from_slice(px);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p3_minimal() {
        let img = decode(b"P3\n2 1\n255\n0 0 0 255 255 255\n").unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.pixels(), &[[0, 0, 0], [255, 255, 255]]);
    }

    #[test]
    fn p6_matches_p3() {
        let p3 = decode(b"P3 2 1 255 0 0 0 255 255 255").unwrap();
        let mut p6 = b"P6\n2 1\n255\n".to_vec();
        p6.extend_from_slice(&[0, 0, 0, 255, 255, 255]);
        assert_eq!(decode(&p6).unwrap(), p3);
    }

    #[test]
    fn comments_in_header() {
        let img = decode(b"P3\n# made by hand\n1 1 # trailing\n255\n1 2 3").unwrap();
        assert_eq!(img.pixels(), &[[1, 2, 3]]);
    }

    #[test]
    fn p6_payload_starting_with_whitespace_byte() {
        let mut p6 = b"P6 1 1 255\n".to_vec();
        p6.extend_from_slice(&[b'\n', b' ', 9]);
        assert_eq!(decode(&p6).unwrap().pixels(), &[[10, 32, 9]]);
    }

    #[test]
    fn encode_layout() {
        let img = Image::new(1, 1, vec![[7, 8, 9]]).unwrap();
        assert_eq!(encode_p6(&img), b"P6\n1 1\n255\n\x07\x08\x09");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decode(b"P5\n1 1\n255\n\0"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode(b"P6\n1 1\n65535\n"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode(b"P6\n2 2\n255\n\x01\x02"), Err(Error::CorruptData(_))));
        assert!(matches!(decode(b"P3\n2 1\n255\n0 0 0 1"), Err(Error::CorruptData(_))));
        assert!(matches!(decode(b"P3\n1 1\n255\n0 0 256"), Err(Error::CorruptData(_))));
        assert!(matches!(decode(b"P6\n1"), Err(Error::CorruptData(_))));
    }
}
