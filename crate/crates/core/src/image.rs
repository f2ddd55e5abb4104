//! 8-bit grayscale images and binary PGM (P5) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, FormatError, Result};

/// Nominal scan resolution of fingerprint images.
pub const DEFAULT_PPI: u16 = 500;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    ppi: u16,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::BadImageDimensions { width, height, pixels: pixels.len() });
        }
        Ok(Self { width, height, pixels, ppi: DEFAULT_PPI })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn with_ppi(mut self, ppi: u16) -> Self {
        self.ppi = ppi;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ppi(&self) -> u16 {
        self.ppi
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Applies `f` to every pixel value.
    pub fn map(&self, f: impl Fn(u8) -> u8) -> Self {
        Self { pixels: self.pixels.iter().map(|&p| f(p)).collect(), ..self.clone() }
    }

    pub fn negative(&self) -> Self {
        self.map(|p| 255 - p)
    }

    pub fn rotate180(&self) -> Self {
        let mut pixels = self.pixels.clone();
        pixels.reverse();
        Self { pixels, ..self.clone() }
    }

    /// Exact quarter turn: pixel `(x, y)` moves to `(height - 1 - y, x)`.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.height, self.width);
        let mut pixels = vec![0u8; w * h];
        for y in 0..self.height {
            for x in 0..self.width {
                let nx = self.height - 1 - y;
                let ny = x;
                pixels[ny * w + nx] = self.get(x, y);
            }
        }
        Self { width: w, height: h, pixels, ppi: self.ppi }
    }

    /// Decodes a binary PGM (P5) with maxval <= 255.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = next_token(bytes, &mut pos)?;
        if magic != b"P5" {
            return Err(FormatError::Pgm(format!("expected P5, found {:?}", String::from_utf8_lossy(magic))).into());
        }
        let width = parse_uint(next_token(bytes, &mut pos)?)?;
        let height = parse_uint(next_token(bytes, &mut pos)?)?;
        let maxval = parse_uint(next_token(bytes, &mut pos)?)?;
        if maxval == 0 || maxval > 255 {
            return Err(FormatError::Pgm(format!("unsupported maxval {maxval}")).into());
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let needed = width * height;
        let raster = bytes.get(pos..).unwrap_or(&[]);
        if raster.len() < needed {
            return Err(FormatError::Truncated { needed, available: raster.len() }.into());
        }
        let pixels = if maxval == 255 {
            raster[..needed].to_vec()
        } else {
            raster[..needed].iter().map(|&p| ((p as u32 * 255 + maxval as u32 / 2) / maxval as u32) as u8).collect()
        };
        Self::new(width, height, pixels)
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pgm(&fs::read(path)?)
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_pgm())?;
        Ok(())
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(FormatError::Pgm("unexpected end of header".into()).into()),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn parse_uint(tok: &[u8]) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FormatError::Pgm(format!("bad header number {:?}", String::from_utf8_lossy(tok))).into())
}
