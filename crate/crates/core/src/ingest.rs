//! Grayscale image loading and labeled dataset discovery.
//!
//! Datasets are laid out as one directory per class:
//!
//! ```text
//! <root>/<class_name>/*.{pgm,png}
//! ```
//!
//! PGM (ASCII `P2` and binary `P5`, maxval up to 255) is decoded here; PNG is
//! decoded through the `image` crate and accepted at 8 bits per channel only.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest accepted image side, one JPEG block.
pub const MIN_SIDE: usize = 8;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported format ({reason})")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("{path}: only 8-bit samples are supported")]
    BitDepthUnsupported { path: PathBuf },
    #[error("{path}: image is {width}x{height}, both sides must be at least {MIN_SIDE}")]
    TooSmall {
        path: PathBuf,
        width: usize,
        height: usize,
    },
    #[error("no class directory under {0} contains a supported image")]
    EmptyDataset(PathBuf),
    #[error("directory {0:?} is not listed in the label order")]
    UnknownLabelDirectory(String),
    #[error("label directory {0:?} is missing or holds no supported image")]
    MissingLabelDirectory(String),
}

/// 8-bit single-channel raster in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    source_path: String,
}

impl GrayImage {
    /// Builds an image from raw luminance values. Returns `None` when the
    /// buffer length does not match the dimensions or a side is below 8.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        if width < MIN_SIDE || height < MIN_SIDE || pixels.len() != width * height {
            return None;
        }
        Some(Self {
            width,
            height,
            pixels,
            source_path: String::new(),
        })
    }

    pub fn with_source(mut self, path: impl Into<String>) -> Self {
        self.source_path = path.into();
        self
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Option<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    /// Pixel at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Rec.601 luma, rounded to nearest.
pub fn rec601_luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Loads a PGM or PNG file as a grayscale image.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    let (width, height, pixels) = if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|e| e.at(path))?
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(&bytes).map_err(|e| e.at(path))?
    } else {
        return Err(IngestError::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "not a PGM (P2/P5) or PNG file".into(),
        });
    };
    GrayImage::new(width, height, pixels)
        .map(|img| img.with_source(path.to_string_lossy()))
        .ok_or_else(|| IngestError::TooSmall {
            path: path.to_path_buf(),
            width,
            height,
        })
}

enum DecodeError {
    Format(String),
    BitDepth,
}

impl DecodeError {
    fn at(self, path: &Path) -> IngestError {
        match self {
            DecodeError::Format(reason) => IngestError::UnsupportedFormat {
                path: path.to_path_buf(),
                reason,
            },
            DecodeError::BitDepth => IngestError::BitDepthUnsupported {
                path: path.to_path_buf(),
            },
        }
    }
}

type Raster = (usize, usize, Vec<u8>);

/// Header tokenizer that skips whitespace and `#` comments.
struct PgmTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmTokens<'a> {
    fn next_token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn next_usize(&mut self, what: &str) -> Result<usize, DecodeError> {
        let tok = self
            .next_token()
            .ok_or_else(|| DecodeError::Format(format!("truncated PGM: missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DecodeError::Format(format!("bad PGM {what}")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Raster, DecodeError> {
    let binary = bytes[1] == b'5';
    let mut tokens = PgmTokens { bytes, pos: 2 };
    let width = tokens.next_usize("width")?;
    let height = tokens.next_usize("height")?;
    let maxval = tokens.next_usize("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(DecodeError::Format(format!("maxval {maxval} out of range")));
    }
    if maxval > 255 {
        return Err(DecodeError::BitDepth);
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| DecodeError::Format("dimensions overflow".into()))?;

    let pixels = if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = tokens.pos + 1;
        let data = bytes
            .get(start..start + n)
            .ok_or_else(|| DecodeError::Format("truncated P5 raster".into()))?;
        data.to_vec()
    } else {
        let mut pixels = Vec::with_capacity(n);
        for _ in 0..n {
            let v = tokens.next_usize("sample")?;
            if v > maxval {
                return Err(DecodeError::Format(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            pixels.push(v as u8);
        }
        pixels
    };
    if pixels.iter().any(|&p| usize::from(p) > maxval) {
        return Err(DecodeError::Format("sample exceeds maxval".into()));
    }
    Ok((width, height, pixels))
}

fn decode_png(bytes: &[u8]) -> Result<Raster, DecodeError> {
    use image::{DynamicImage, ImageFormat};

    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| DecodeError::Format(e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| rec601_luma(p.0[0], p.0[1], p.0[2]))
            .collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| rec601_luma(p.0[0], p.0[1], p.0[2]))
            .collect(),
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => return Err(DecodeError::BitDepth),
        other => {
            return Err(DecodeError::Format(format!(
                "unsupported PNG color type {:?}",
                other.color()
            )))
        }
    };
    Ok((width, height, pixels))
}

/// Image paths paired with contiguous class labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledImageSet {
    pub entries: Vec<(PathBuf, usize)>,
    pub label_names: Vec<String>,
}

impl LabeledImageSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Entry count per label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_names.len()];
        for (_, label) in &self.entries {
            counts[*label] += 1;
        }
        counts
    }
}

fn is_supported_image(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let read = fs::read_dir(dir).map_err(|source| IngestError::UnreadableFile {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in read {
        let entry = entry.map_err(|source| IngestError::UnreadableFile {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if is_supported_image(&path) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Enumerates `<root>/<class>/*.{pgm,png}`.
///
/// With `label_order`, labels follow that list and every non-hidden
/// subdirectory must appear in it. Without it, subdirectories holding at least
/// one image are labeled in lexicographic order. Entries are sorted by
/// `(label, filename)`.
pub fn scan_dataset(
    root: impl AsRef<Path>,
    label_order: Option<&[String]>,
) -> Result<LabeledImageSet, IngestError> {
    let root = root.as_ref();
    let read = fs::read_dir(root).map_err(|source| IngestError::UnreadableFile {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs = Vec::new();
    for entry in read {
        let entry = entry.map_err(|source| IngestError::UnreadableFile {
            path: root.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_dir() && !name.starts_with('.') {
            dirs.push(name);
        }
    }
    dirs.sort();

    let mut classes: Vec<(String, Vec<PathBuf>)> = Vec::new();
    match label_order {
        Some(order) => {
            if let Some(extra) = dirs.iter().find(|d| !order.contains(d)) {
                return Err(IngestError::UnknownLabelDirectory(extra.clone()));
            }
            for name in order {
                if !dirs.contains(name) {
                    return Err(IngestError::MissingLabelDirectory(name.clone()));
                }
                let files = list_images(&root.join(name))?;
                if files.is_empty() {
                    return Err(IngestError::MissingLabelDirectory(name.clone()));
                }
                classes.push((name.clone(), files));
            }
        }
        None => {
            for name in dirs {
                let files = list_images(&root.join(&name))?;
                if !files.is_empty() {
                    classes.push((name, files));
                }
            }
        }
    }
    if classes.is_empty() {
        return Err(IngestError::EmptyDataset(root.to_path_buf()));
    }

    let mut set = LabeledImageSet {
        entries: Vec::new(),
        label_names: Vec::with_capacity(classes.len()),
    };
    for (label, (name, files)) in classes.into_iter().enumerate() {
        set.label_names.push(name);
        set.entries.extend(files.into_iter().map(|f| (f, label)));
    }
    Ok(set)
}

/// Writes an image as binary PGM (`P5`).
pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    fs::write(path, out)
}
