//! MNIST IDX ingestion, binarization and splitting.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::sbn::BinaryVector;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";

/// Pixel intensities in `[0, 1]`, one row per image.
#[derive(Clone, Debug, PartialEq)]
pub struct RawImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Array2<f64>,
}

impl RawImages {
    pub fn count(&self) -> usize {
        self.pixels.nrows()
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::IdxLength {
            expected: 16,
            found: bytes.len(),
        })
}

/// Parses an IDX image file: magic `0x00000803`, then count, rows and cols
/// (big-endian), then `count·rows·cols` unsigned bytes.
pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::IdxMagic {
            found: magic,
            expected: IDX_IMAGES_MAGIC,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(Error::IdxLength {
            expected,
            found: bytes.len(),
        });
    }
    let pixels = Array2::from_shape_fn((count, rows * cols), |(i, j)| {
        bytes[16 + i * rows * cols + j] as f64 / 255.0
    });
    Ok(RawImages { rows, cols, pixels })
}

/// Which split a dataset came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// Strictly binary examples stored as bytes, one row per example.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDataset {
    pub split: Split,
    data: Array2<u8>,
}

impl BinaryDataset {
    pub fn new(split: Split, data: Array2<u8>) -> Result<Self> {
        if data.iter().any(|&v| v > 1) {
            return Err(Error::domain("dataset entries must be 0 or 1"));
        }
        Ok(Self { split, data })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.data.row(i)
    }

    pub fn example(&self, i: usize) -> BinaryVector {
        BinaryVector::from_array_unchecked(self.data.row(i).mapv(f64::from))
    }

    pub fn data(&self) -> &Array2<u8> {
        &self.data
    }

    /// Per-dimension mean over all examples.
    pub fn pixel_means(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::domain("empty dataset"));
        }
        let n = self.len() as f64;
        Ok((0..self.dim())
            .map(|j| self.data.column(j).iter().map(|&v| v as f64).sum::<f64>() / n)
            .collect())
    }

    /// First `n` examples (all of them if `n ≥ len`).
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            split: self.split,
            data: self.data.slice(ndarray::s![..n, ..]).to_owned(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Binarization {
    /// `pixel > level`.
    Threshold(f64),
    /// `Bernoulli(pixel)` with the given seed.
    Stochastic(u64),
}

impl Default for Binarization {
    fn default() -> Self {
        Binarization::Threshold(0.5)
    }
}

impl std::fmt::Display for Binarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Binarization::Threshold(l) => write!(f, "threshold:{l}"),
            Binarization::Stochastic(s) => write!(f, "stochastic:{s}"),
        }
    }
}

impl std::str::FromStr for Binarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("bad binarization `{s}`"));
        match s.split_once(':') {
            None if s == "threshold" => Ok(Binarization::default()),
            Some(("threshold", v)) => v.parse().map(Binarization::Threshold).map_err(|_| bad()),
            Some(("stochastic", v)) => v.parse().map(Binarization::Stochastic).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

pub fn binarize(raw: &RawImages, mode: Binarization, split: Split) -> BinaryDataset {
    let data = match mode {
        Binarization::Threshold(level) => raw.pixels.mapv(|p| (p > level) as u8),
        Binarization::Stochastic(seed) => {
            let mut rng = RngState::new(seed);
            raw.pixels.mapv(|p| rng.bernoulli(p) as u8)
        }
    };
    BinaryDataset { split, data }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub valid: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train: 50_000,
            valid: 10_000,
        }
    }
}

/// Train/valid from the training file (in order), test from the test file.
/// `subset` keeps only the first `N` examples of each split.
pub fn split(
    training: &BinaryDataset,
    test: &BinaryDataset,
    sizes: SplitSizes,
    subset: Option<usize>,
) -> Result<(BinaryDataset, BinaryDataset, BinaryDataset)> {
    if sizes.train + sizes.valid > training.len() {
        return Err(Error::domain(format!(
            "split sizes {} + {} exceed {} training examples",
            sizes.train,
            sizes.valid,
            training.len()
        )));
    }
    let rows = |a: usize, b: usize, split| BinaryDataset {
        split,
        data: training.data.slice(ndarray::s![a..b, ..]).to_owned(),
    };
    let mut tr = rows(0, sizes.train, Split::Train);
    let mut va = rows(training.len() - sizes.valid, training.len(), Split::Valid);
    let mut te = BinaryDataset {
        split: Split::Test,
        data: test.data.clone(),
    };
    if let Some(n) = subset {
        tr = tr.head(n);
        va = va.head(n);
        te = te.head(n);
    }
    Ok((tr, va, te))
}

/// Reads `name` or `name.gz` from `dir`.
pub fn read_maybe_gz(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let plain = dir.join(name);
    if plain.is_file() {
        return Ok(fs::read(plain)?);
    }
    let gz: PathBuf = dir.join(format!("{name}.gz"));
    if gz.is_file() {
        let mut out = Vec::new();
        GzDecoder::new(fs::File::open(gz)?).read_to_end(&mut out)?;
        return Ok(out);
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("neither {name} nor {name}.gz in {}", dir.display()),
    )))
}

/// The three binarized MNIST splits.
#[derive(Clone, Debug)]
pub struct Mnist {
    pub train: BinaryDataset,
    pub valid: BinaryDataset,
    pub test: BinaryDataset,
}

pub fn load_mnist(dir: &Path, mode: Binarization, subset: Option<usize>) -> Result<Mnist> {
    let tr = parse_idx_images(&read_maybe_gz(dir, TRAIN_IMAGES)?)?;
    let te = parse_idx_images(&read_maybe_gz(dir, TEST_IMAGES)?)?;
    // The stochastic stream of the test file is distinct from the training file's.
    let te_mode = match mode {
        Binarization::Stochastic(s) => Binarization::Stochastic(s ^ 0x7465_7374),
        m => m,
    };
    let (train, valid, test) = split(
        &binarize(&tr, mode, Split::Train),
        &binarize(&te, te_mode, Split::Test),
        SplitSizes::default(),
        subset,
    )?;
    Ok(Mnist { train, valid, test })
}
