//! File formats: CSV tables, flat binary images with JSON sidecars, dense
//! covariance files, and the corpus manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trustfit::datagen::{GeneratedImage, Gaussian2dParams};
use trustfit::linalg::Matrix;
use trustfit::Dataset;

/// Sidecar describing one binary image; lives next to the `.bin` file with
/// the same stem and a `.json` extension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub schema: String,
    /// `[side, side]` row-major grid shape.
    pub grid: [usize; 2],
    /// Truth parameters in model order.
    pub truth: [f64; 7],
    /// Master seed the corpus was generated from.
    pub seed: u64,
    /// ChaCha stream index of this image.
    pub stream: u64,
    pub noise_sigma: f64,
    /// Dataset length this image's grid was chosen to approximate.
    pub length_target: usize,
}

pub const IMAGE_SCHEMA: &str = "trustfit-image/1";
pub const MANIFEST_SCHEMA: &str = "trustfit-manifest/1";

/// Corpus manifest written at the root of a generated dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub seed: u64,
    pub noise_sigma: f64,
    pub per_length: usize,
    pub lengths: Vec<ManifestLength>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestLength {
    pub target: usize,
    pub side: usize,
    /// Directory (relative to the manifest) holding this length's images.
    pub dir: String,
    /// Image file names (`.bin`) inside `dir`, index order.
    pub images: Vec<String>,
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `pixels` as flat little-endian float64 plus the JSON sidecar.
pub fn write_image(
    bin: &Path,
    image: &GeneratedImage,
    seed: u64,
    noise_sigma: f64,
    length_target: usize,
) -> Result<()> {
    let mut bytes = Vec::with_capacity(image.pixels.len() * 8);
    for v in &image.pixels {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(bin, bytes).with_context(|| format!("writing {}", bin.display()))?;

    let sidecar = ImageSidecar {
        schema: IMAGE_SCHEMA.to_string(),
        grid: [image.side, image.side],
        truth: image.truth.to_array(),
        seed,
        stream: image.stream,
        noise_sigma,
        length_target,
    };
    let json = serde_json::to_string_pretty(&sidecar)?;
    let path = sidecar_path(bin);
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a `.bin` image and its sidecar back into a dataset.
pub fn read_image(bin: &Path) -> Result<(Dataset, ImageSidecar)> {
    let side_path = sidecar_path(bin);
    let sidecar: ImageSidecar = serde_json::from_str(
        &fs::read_to_string(&side_path)
            .with_context(|| format!("reading sidecar {}", side_path.display()))?,
    )
    .with_context(|| format!("parsing sidecar {}", side_path.display()))?;
    if sidecar.schema != IMAGE_SCHEMA {
        bail!(
            "sidecar {} has schema `{}`, expected `{IMAGE_SCHEMA}`",
            side_path.display(),
            sidecar.schema
        );
    }
    let [rows, cols] = sidecar.grid;
    if rows != cols {
        bail!("sidecar {} declares a non-square grid", side_path.display());
    }

    let bytes = fs::read(bin).with_context(|| format!("reading {}", bin.display()))?;
    if bytes.len() != rows * cols * 8 {
        bail!(
            "{}: expected {} bytes for a {rows}x{cols} float64 grid, found {}",
            bin.display(),
            rows * cols * 8,
            bytes.len()
        );
    }
    let pixels: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = Dataset::from_image(rows, pixels)?;
    Ok((data, sidecar))
}

/// Truth parameters from a sidecar as a typed struct.
pub fn sidecar_truth(sidecar: &ImageSidecar) -> Gaussian2dParams {
    Gaussian2dParams::from_array(sidecar.truth)
}

/// Loaded CSV table: dataset plus the optional sigma column.
pub struct CsvTable {
    pub data: Dataset,
    pub sigmas: Option<Vec<f64>>,
}

/// Loads a CSV with a required header row. All columns except the optional
/// sigma column are data; of those, the last is the observed value and the
/// rest are point coordinates. Parse failures carry line and column names.
pub fn load_csv(path: &Path, sigma_col: Option<&str>) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;

    let headers: Vec<String> = reader
        .headers()
        .context("reading CSV header")?
        .iter()
        .map(str::to_string)
        .collect();

    let sigma_idx = match sigma_col {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .with_context(|| format!("CSV has no column named `{name}`"))?,
        ),
        None => None,
    };
    let data_cols: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != sigma_idx)
        .collect();
    if data_cols.len() < 2 {
        bail!("CSV needs at least one coordinate column and one value column");
    }
    let (y_cols, z_col) = data_cols.split_at(data_cols.len() - 1);
    let z_col = z_col[0];

    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut sigmas = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading CSV record {}", row_idx + 2))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(row_idx as u64 + 2);
        let field = |col: usize| -> Result<f64> {
            let raw = record.get(col).with_context(|| {
                format!("line {line}: missing column `{}`", headers[col])
            })?;
            raw.parse::<f64>().with_context(|| {
                format!("line {line}: column `{}`: invalid number `{raw}`", headers[col])
            })
        };
        for &c in y_cols {
            y.push(field(c)?);
        }
        z.push(field(z_col)?);
        if let Some(sc) = sigma_idx {
            sigmas.push(field(sc)?);
        }
    }

    let data = Dataset::with_dim(y_cols.len(), y, z)?;
    Ok(CsvTable {
        data,
        sigmas: sigma_idx.map(|_| sigmas),
    })
}

#[derive(Debug, Deserialize)]
struct CovarianceShape {
    rows: usize,
    cols: usize,
}

/// Loads a dense covariance: flat little-endian float64, row-major, with a
/// `.json` sidecar holding `{"rows": n, "cols": n}`.
pub fn load_covariance(path: &Path) -> Result<Matrix> {
    let side_path = sidecar_path(path);
    let shape: CovarianceShape = serde_json::from_str(
        &fs::read_to_string(&side_path)
            .with_context(|| format!("reading covariance sidecar {}", side_path.display()))?,
    )
    .with_context(|| format!("parsing covariance sidecar {}", side_path.display()))?;
    if shape.rows != shape.cols {
        bail!("covariance must be square, sidecar says {}x{}", shape.rows, shape.cols);
    }
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() != shape.rows * shape.cols * 8 {
        bail!(
            "{}: expected {} bytes for a {}x{} float64 matrix, found {}",
            path.display(),
            shape.rows * shape.cols * 8,
            shape.rows,
            shape.cols,
            bytes.len()
        );
    }
    let entries: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Matrix::from_vec(shape.rows, shape.cols, entries)?)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
    )
    .with_context(|| format!("parsing {}", path.display()))?;
    if manifest.schema != MANIFEST_SCHEMA {
        bail!(
            "{} has schema `{}`, expected `{MANIFEST_SCHEMA}`",
            path.display(),
            manifest.schema
        );
    }
    Ok(manifest)
}
