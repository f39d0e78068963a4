//! Raster containers and binary Netpbm I/O.
//!
//! Color images are read and written as binary PPM (`P6`), masks as binary
//! PGM (`P5`). Both formats use a maxval of 255. Header comments starting
//! with `#` are accepted on load.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// An 8-bit RGB pixel.
pub type Rgb = [u8; 3];

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{path}: unsupported maxval {maxval} (only 255 is accepted)")]
    UnsupportedMaxval { path: PathBuf, maxval: u32 },
    #[error("{path}: truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("buffer holds {actual} elements but {width}x{height} requires {expected}")]
    LengthMismatch {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("dimension mismatch: image is {image:?}, mask is {mask:?}")]
    DimensionMismatch {
        image: (usize, usize),
        mask: (usize, usize),
    },
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::EmptyImage { width, height });
    }
    let expected = width
        .checked_mul(height)
        .ok_or(ImageError::EmptyImage { width, height })?;
    if expected != len {
        return Err(ImageError::LengthMismatch {
            width,
            height,
            expected,
            actual: len,
        });
    }
    Ok(())
}

/// Row-major 8-bit RGB raster. Always at least 1x1.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self, ImageError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// An image where every pixel is `color`.
    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self, ImageError> {
        Self::new(width, height, vec![color; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    /// # Panics
    ///
    /// Panics if `(x, y)` is out of bounds.
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        assert!(
            x < self.width && y < self.height,
            "pixel ({x}, {y}) out of bounds"
        );
        self.pixels[y * self.width + x]
    }

    /// # Panics
    ///
    /// Panics if `(x, y)` is out of bounds.
    pub fn set(&mut self, x: usize, y: usize, color: Rgb) {
        assert!(
            x < self.width && y < self.height,
            "pixel ({x}, {y}) out of bounds"
        );
        self.pixels[y * self.width + x] = color;
    }

    /// Paints the axis-aligned rectangle at `(x, y)` of size `w`x`h`, clipped
    /// to the image bounds.
    pub fn fill_rect(&mut self, x: usize, y: usize, w: usize, h: usize, color: Rgb) {
        for row in y..(y + h).min(self.height) {
            for col in x..(x + w).min(self.width) {
                self.pixels[row * self.width + col] = color;
            }
        }
    }
}

impl fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// Per-pixel boolean raster; `true` marks a candidate skin pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImageError> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    /// Builds a mask from rows of equal length.
    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self, ImageError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut bits = Vec::with_capacity(width * height);
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(ImageError::LengthMismatch {
                    width,
                    height,
                    expected: width * height,
                    actual: bits.len() + row.len(),
                });
            }
            bits.extend_from_slice(row);
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        assert!(
            x < self.width && y < self.height,
            "bit ({x}, {y}) out of bounds"
        );
        self.bits[y * self.width + x]
    }

    /// Bounds-tolerant lookup; anything outside the raster reads as `false`.
    pub fn get_or_false(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return false;
        }
        self.bits[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        assert!(
            x < self.width && y < self.height,
            "bit ({x}, {y}) out of bounds"
        );
        self.bits[y * self.width + x] = value;
    }

    /// Number of `true` bits.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.width, self.height)?;
        for row in self.bits.chunks(self.width) {
            let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Keeps `image` where `mask` is set and paints everything else black.
pub fn overlay(image: &ImageBuffer, mask: &BinaryMask) -> Result<ImageBuffer, ImageError> {
    if image.dimensions() != mask.dimensions() {
        return Err(ImageError::DimensionMismatch {
            image: image.dimensions(),
            mask: mask.dimensions(),
        });
    }
    let pixels = image
        .pixels
        .iter()
        .zip(&mask.bits)
        .map(|(&p, &keep)| if keep { p } else { [0, 0, 0] })
        .collect();
    ImageBuffer::new(image.width, image.height, pixels)
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header, ImageError> {
    let malformed = |reason: &str| ImageError::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 {
        return Err(malformed("file too short for a magic number"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        if i == 0 && pos == 2 {
            return Err(malformed("missing whitespace after magic number"));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("expected a decimal number"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text.parse().map_err(|_| malformed("number out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed("missing whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(malformed("zero width or height"));
    }
    if maxval != 255 {
        return Err(ImageError::UnsupportedMaxval {
            path: path.to_path_buf(),
            maxval,
        });
    }
    Ok(Header {
        magic,
        width: width as usize,
        height: height as usize,
        data_offset: pos,
    })
}

fn raster<'a>(
    bytes: &'a [u8],
    header: &Header,
    channels: usize,
    path: &Path,
) -> Result<&'a [u8], ImageError> {
    let expected = header.width * header.height * channels;
    let data = &bytes[header.data_offset..];
    if data.len() < expected {
        return Err(ImageError::Truncated {
            path: path.to_path_buf(),
            expected,
            found: data.len(),
        });
    }
    Ok(&data[..expected])
}

/// Decodes an in-memory binary PPM. `path` is only used in error messages.
pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<ImageBuffer, ImageError> {
    let header = parse_header(bytes, path)?;
    if &header.magic != b"P6" {
        return Err(ImageError::MalformedHeader {
            path: path.to_path_buf(),
            reason: "expected magic number P6".into(),
        });
    }
    let data = raster(bytes, &header, 3, path)?;
    let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    ImageBuffer::new(header.width, header.height, pixels)
}

/// Decodes an in-memory binary PGM as a mask; any nonzero sample is `true`.
pub fn decode_pgm_mask(bytes: &[u8], path: &Path) -> Result<BinaryMask, ImageError> {
    let header = parse_header(bytes, path)?;
    if &header.magic != b"P5" {
        return Err(ImageError::MalformedHeader {
            path: path.to_path_buf(),
            reason: "expected magic number P5".into(),
        });
    }
    let data = raster(bytes, &header, 1, path)?;
    BinaryMask::new(
        header.width,
        header.height,
        data.iter().map(|&v| v != 0).collect(),
    )
}

pub fn encode_ppm(image: &ImageBuffer) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.reserve(image.pixels.len() * 3);
    for p in &image.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn encode_pgm_mask(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

fn read(path: &Path) -> Result<Vec<u8>, ImageError> {
    fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ImageError> {
    fs::write(path, bytes).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a binary PPM (`P6`, maxval 255).
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer, ImageError> {
    let path = path.as_ref();
    decode_ppm(&read(path)?, path)
}

pub fn save_image(image: &ImageBuffer, path: impl AsRef<Path>) -> Result<(), ImageError> {
    write(path.as_ref(), &encode_ppm(image))
}

/// Loads a binary PGM (`P5`, maxval 255) as a mask.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask, ImageError> {
    let path = path.as_ref();
    decode_pgm_mask(&read(path)?, path)
}

/// Writes `mask` as a binary PGM with `true` as 255 and `false` as 0.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<(), ImageError> {
    write(path.as_ref(), &encode_pgm_mask(mask))
}
