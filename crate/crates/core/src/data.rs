//! MNIST ingestion: IDX decoding, 0/1 filtering, 28×28 → 8×8 area
//! downsampling and pixel-to-angle scaling.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{QdnnError, Result};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const GRID_SIDE: usize = 8;
pub const FEATURES: usize = GRID_SIDE * GRID_SIDE;

pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const IMAGES_MAGIC: u32 = 0x0000_0803;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

#[derive(Clone, PartialEq, Eq)]
pub struct RawImage {
    pixels: Box<[u8; IMAGE_PIXELS]>,
    label: u8,
}

impl fmt::Debug for RawImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RawImage").field("label", &self.label).finish_non_exhaustive()
    }
}

impl RawImage {
    pub fn new(pixels: &[u8], label: u8) -> Result<Self> {
        let pixels: Box<[u8; IMAGE_PIXELS]> = pixels.to_vec().into_boxed_slice().try_into().map_err(|v: Box<[u8]>| {
            QdnnError::Usage(format!("image has {} pixels, expected {IMAGE_PIXELS}", v.len()))
        })?;
        if label >= 10 {
            return Err(QdnnError::Usage(format!("label {label} is not a digit")));
        }
        Ok(Self { pixels, label })
    }

    pub fn pixels(&self) -> &[u8; IMAGE_PIXELS] {
        &self.pixels
    }

    pub fn label(&self) -> u8 {
        self.label
    }
}

/// A classifier input: 64 angles in `[0, π]` and a binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
}

/// Decoded contents of one IDX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxRecords {
    Labels(Vec<u8>),
    /// `rows × cols` images, pixels concatenated row-major.
    Images {
        rows: usize,
        cols: usize,
        pixels: Vec<u8>,
    },
}

impl IdxRecords {
    pub fn len(&self) -> usize {
        match self {
            IdxRecords::Labels(l) => l.len(),
            IdxRecords::Images { rows, cols, pixels } => pixels.len() / (rows * cols).max(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn parse_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(QdnnError::Parse {
        offset,
        message: message.into(),
    })
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    match bytes.get(offset..offset + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => parse_err(
            offset,
            format!("header truncated: need {} bytes, file has {}", offset + 4, bytes.len()),
        ),
    }
}

/// Decodes an IDX label (`0x801`) or image (`0x803`) file.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxRecords> {
    let magic = read_u32(bytes, 0)?;
    let (header_len, record_len) = match magic {
        LABELS_MAGIC => (8, 1),
        IMAGES_MAGIC => {
            let rows = read_u32(bytes, 8)? as usize;
            let cols = read_u32(bytes, 12)? as usize;
            (16, rows * cols)
        }
        other => return parse_err(0, format!("bad magic number {other:#010x}")),
    };
    let count = read_u32(bytes, 4)? as usize;
    let expected = header_len + count * record_len;
    if bytes.len() != expected {
        return parse_err(
            bytes.len().min(expected),
            format!(
                "payload length mismatch: header declares {expected} bytes, file has {}",
                bytes.len()
            ),
        );
    }
    let payload = bytes[header_len..].to_vec();
    Ok(match magic {
        LABELS_MAGIC => IdxRecords::Labels(payload),
        _ => IdxRecords::Images {
            rows: read_u32(bytes, 8)? as usize,
            cols: read_u32(bytes, 12)? as usize,
            pixels: payload,
        },
    })
}

/// Encodes records back into IDX bytes.
pub fn encode_idx(records: &IdxRecords) -> Vec<u8> {
    let mut out = Vec::new();
    match records {
        IdxRecords::Labels(labels) => {
            out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
            out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
            out.extend_from_slice(labels);
        }
        IdxRecords::Images { rows, cols, pixels } => {
            out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
            out.extend_from_slice(&(records.len() as u32).to_be_bytes());
            out.extend_from_slice(&(*rows as u32).to_be_bytes());
            out.extend_from_slice(&(*cols as u32).to_be_bytes());
            out.extend_from_slice(pixels);
        }
    }
    out
}

/// Pairs an image file with a label file into 28×28 digit images.
pub fn pair_images_labels(images: IdxRecords, labels: IdxRecords) -> Result<Vec<RawImage>> {
    let (rows, cols, pixels) = match images {
        IdxRecords::Images { rows, cols, pixels } => (rows, cols, pixels),
        IdxRecords::Labels(_) => return Err(QdnnError::Usage("expected an image file, got labels".into())),
    };
    let labels = match labels {
        IdxRecords::Labels(l) => l,
        IdxRecords::Images { .. } => return Err(QdnnError::Usage("expected a label file, got images".into())),
    };
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(QdnnError::Usage(format!(
            "images are {rows}x{cols}, expected {IMAGE_SIDE}x{IMAGE_SIDE}"
        )));
    }
    let n_images = pixels.len() / IMAGE_PIXELS;
    if n_images != labels.len() {
        return Err(QdnnError::Usage(format!(
            "{n_images} images but {} labels",
            labels.len()
        )));
    }
    pixels
        .chunks_exact(IMAGE_PIXELS)
        .zip(labels)
        .map(|(p, l)| RawImage::new(p, l))
        .collect()
}

/// Overlap of source pixel `[p, p+1)` with output cell `[c·s, (c+1)·s)`,
/// `s = 28/8 = 3.5`.
fn overlap(cell: usize, pixel: usize) -> f64 {
    let scale = IMAGE_SIDE as f64 / GRID_SIDE as f64;
    let lo = (cell as f64 * scale).max(pixel as f64);
    let hi = ((cell + 1) as f64 * scale).min((pixel + 1) as f64);
    (hi - lo).max(0.0)
}

/// Area-weighted 28×28 → 8×8 averaging, scaled into `[0, 1]`. Row-major.
pub fn downsample(img: &RawImage) -> [f64; FEATURES] {
    let scale = IMAGE_SIDE as f64 / GRID_SIDE as f64;
    let cell_area = scale * scale;
    let weights: Vec<[f64; IMAGE_SIDE]> = (0..GRID_SIDE)
        .map(|c| std::array::from_fn(|p| overlap(c, p)))
        .collect();
    let mut grid = [0.0; FEATURES];
    for (r, wr) in weights.iter().enumerate() {
        for (c, wc) in weights.iter().enumerate() {
            let mut acc = 0.0;
            for (pr, &a) in wr.iter().enumerate().filter(|(_, w)| **w > 0.0) {
                let row = &img.pixels[pr * IMAGE_SIDE..(pr + 1) * IMAGE_SIDE];
                for (pc, &b) in wc.iter().enumerate().filter(|(_, w)| **w > 0.0) {
                    acc += a * b * f64::from(row[pc]);
                }
            }
            grid[r * GRID_SIDE + c] = acc / cell_area / 255.0;
        }
    }
    grid
}

/// Radians per unit intensity, in `(0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleScale(f64);

impl AngleScale {
    pub const DEFAULT: AngleScale = AngleScale(FRAC_PI_2);

    pub fn new(radians: f64) -> Result<Self> {
        if !(radians > 0.0 && radians <= PI) {
            return Err(QdnnError::Config(format!(
                "angle scale {radians} must lie in (0, pi]"
            )));
        }
        Ok(Self(radians))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

impl Default for AngleScale {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Scales `[0,1]` intensities to angles `scale·v`.
pub fn to_sample(grid: &[f64; FEATURES], label: u8, scale: AngleScale) -> Sample {
    Sample {
        features: grid.iter().map(|v| scale.0 * v).collect(),
        label,
    }
}

/// Keeps digits 0 and 1 and converts them to samples, preserving file order.
pub fn binary_samples(images: &[RawImage], scale: AngleScale) -> Vec<Sample> {
    images
        .iter()
        .filter(|img| img.label <= 1)
        .map(|img| to_sample(&downsample(img), img.label, scale))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: QdnnError },
    #[error("{images} / {labels}: {source}")]
    Pairing {
        images: PathBuf,
        labels: PathBuf,
        source: QdnnError,
    },
}

pub fn read_idx_file(path: &Path) -> std::result::Result<IdxRecords, LoadError> {
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_idx(&bytes).map_err(|source| LoadError::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_split(images: &Path, labels: &Path, scale: AngleScale) -> std::result::Result<Vec<Sample>, LoadError> {
    let raw = pair_images_labels(read_idx_file(images)?, read_idx_file(labels)?).map_err(|source| {
        LoadError::Pairing {
            images: images.to_path_buf(),
            labels: labels.to_path_buf(),
            source,
        }
    })?;
    let samples = binary_samples(&raw, scale);
    if samples.is_empty() {
        log::warn!("{} contains no digits 0 or 1", labels.display());
    }
    Ok(samples)
}

/// Train and test sets restricted to digits 0 and 1.
pub fn load_binary_mnist(
    train_images: &Path,
    train_labels: &Path,
    test_images: &Path,
    test_labels: &Path,
    scale: AngleScale,
) -> std::result::Result<(Vec<Sample>, Vec<Sample>), LoadError> {
    Ok((
        load_split(train_images, train_labels, scale)?,
        load_split(test_images, test_labels, scale)?,
    ))
}

/// [`load_binary_mnist`] with the standard file names inside `dir`.
pub fn load_binary_mnist_dir(dir: &Path, scale: AngleScale) -> std::result::Result<(Vec<Sample>, Vec<Sample>), LoadError> {
    load_binary_mnist(
        &dir.join(TRAIN_IMAGES),
        &dir.join(TRAIN_LABELS),
        &dir.join(TEST_IMAGES),
        &dir.join(TEST_LABELS),
        scale,
    )
}
