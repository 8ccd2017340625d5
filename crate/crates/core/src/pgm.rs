//! Netpbm graymaps, plain (P2) and raw (P5), up to 16 bits per sample.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::noise::GrayField;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    width: usize,
    height: usize,
    max_val: u16,
    pixels: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    Plain,
    Raw,
}

impl PgmImage {
    pub fn new(width: usize, height: usize, max_val: u16, pixels: Vec<u16>) -> Result<Self> {
        if max_val == 0 {
            return Err(Error::Image("maxval must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Image(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > max_val) {
            return Err(Error::Image(format!("pixel value {p} exceeds maxval {max_val}")));
        }
        Ok(Self { width, height, max_val, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_val(&self) -> u16 {
        self.max_val
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    /// Maps gray level `g` to `g / maxval`. The image must be square.
    pub fn to_field(&self) -> Result<GrayField> {
        if self.width != self.height {
            return Err(Error::Image(format!(
                "image must be square, got {}x{}",
                self.width, self.height
            )));
        }
        let scale = f64::from(self.max_val);
        GrayField::new(self.width, self.pixels.iter().map(|&g| f64::from(g) / scale).collect())
    }

    /// Quantises `value * max_val` with clamping to `[0, max_val]`.
    pub fn from_field(field: &GrayField, max_val: u16) -> Result<Self> {
        let m = f64::from(max_val);
        let pixels = field.values().iter().map(|v| (v * m).round().clamp(0.0, m) as u16).collect();
        Self::new(field.side(), field.side(), max_val, pixels)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let raw = match magic.as_slice() {
            b"P2" => false,
            b"P5" => true,
            other => {
                return Err(Error::Image(format!(
                    "unsupported magic {:?}",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let width = cur.number()?;
        let height = cur.number()?;
        let max_val = cur.number()?;
        if max_val == 0 || max_val > 65_535 {
            return Err(Error::Image(format!("maxval {max_val} outside 1..=65535")));
        }
        let count = width
            .checked_mul(height)
            .ok_or_else(|| Error::Image("image dimensions overflow".into()))?;
        let pixels = if raw {
            // exactly one whitespace byte separates the header from the raster
            cur.pos += 1;
            let wide = max_val > 255;
            let need = count * if wide { 2 } else { 1 };
            let data = bytes
                .get(cur.pos..cur.pos + need)
                .ok_or_else(|| Error::Image("truncated raster".into()))?;
            if wide {
                data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            } else {
                data.iter().map(|&b| u16::from(b)).collect()
            }
        } else {
            (0..count).map(|_| cur.number().map(|v| v as u16)).collect::<Result<Vec<_>>>()?
        };
        Self::new(width, height, max_val as u16, pixels)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::parse(&bytes)
    }

    pub fn encode(&self, encoding: PgmEncoding) -> Vec<u8> {
        let mut out = Vec::new();
        match encoding {
            PgmEncoding::Plain => {
                let _ = writeln!(out, "P2\n{} {}\n{}", self.width, self.height, self.max_val);
                for row in self.pixels.chunks(self.width.max(1)) {
                    let line: Vec<String> = row.iter().map(u16::to_string).collect();
                    let _ = writeln!(out, "{}", line.join(" "));
                }
            }
            PgmEncoding::Raw => {
                let _ = write!(out, "P5\n{} {}\n{}\n", self.width, self.height, self.max_val);
                if self.max_val > 255 {
                    for p in &self.pixels {
                        out.extend_from_slice(&p.to_be_bytes());
                    }
                } else {
                    out.extend(self.pixels.iter().map(|&p| p as u8));
                }
            }
        }
        out
    }

    pub fn write(&self, path: &Path, encoding: PgmEncoding) -> Result<()> {
        std::fs::write(path, self.encode(encoding))?;
        Ok(())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
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

    fn token(&mut self) -> Result<Vec<u8>> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Image("unexpected end of header".into()));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("bad number {:?}", String::from_utf8_lossy(&tok))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_with_comments() {
        let img = PgmImage::parse(b"P2\n# made by hand\n2 2\n# max\n10\n0 5\n10 3\n").unwrap();
        assert_eq!(img.pixels(), &[0, 5, 10, 3]);
        let f = img.to_field().unwrap();
        assert_eq!(f.values(), &[0.0, 0.5, 1.0, 0.3]);
    }

    #[test]
    fn raw_round_trips() {
        for max_val in [255u16, 4095] {
            let px: Vec<u16> = (0..12).map(|i| (i * 97) % (max_val + 1)).collect();
            let img = PgmImage::new(4, 3, max_val, px).unwrap();
            for enc in [PgmEncoding::Plain, PgmEncoding::Raw] {
                assert_eq!(PgmImage::parse(&img.encode(enc)).unwrap(), img);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PgmImage::parse(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(PgmImage::parse(b"P5\n4 4\n255\n\0\0").is_err());
        assert!(PgmImage::parse(b"P2\n2 1\n3\n1 9\n").is_err());
        let img = PgmImage::parse(b"P2\n2 1\n3\n1 2\n").unwrap();
        assert!(img.to_field().is_err());
    }
}
