//! CSV matrices and traces, the synthetic hyperspectral phantom, PGM export
//! of factor images, and classifier files.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classify::LinearClassifier;
use crate::error::{NmfError, Result};
use crate::model::{DataMatrix, Labels};
use crate::objective::CostBreakdown;
use crate::solver::{FitTrace, TraceRecord};
use crate::tv::PixelGrid;

fn parse_value(field: &str, row: u64, col: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| NmfError::Parse(format!("row {row}, column {}: cannot parse '{field}'", col + 1)))?;
    if !v.is_finite() {
        return Err(NmfError::Parse(format!(
            "row {row}, column {}: non-finite value {v}",
            col + 1
        )));
    }
    Ok(v)
}

/// Parses comma-separated rows of decimals. Row numbers in errors are the
/// 1-based line numbers of the input.
pub fn parse_matrix<R: Read>(reader: R, has_header: bool) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let width = *cols.get_or_insert(record.len());
        if record.len() != width {
            return Err(NmfError::Parse(format!(
                "row {line}: expected {width} columns, found {}",
                record.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            values.push(parse_value(field, line, c)?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| NmfError::Parse("no data rows".into()))?;
    Array2::from_shape_vec((rows, cols), values).map_err(|e| NmfError::Parse(e.to_string()))
}

fn check_non_negative(m: &Array2<f64>, has_header: bool) -> Result<()> {
    if let Some(((i, j), v)) = m.indexed_iter().find(|(_, v)| **v < 0.0) {
        let line = i + 1 + usize::from(has_header);
        return Err(NmfError::Invalid(format!(
            "negative entry {v} at row {line}, column {}",
            j + 1
        )));
    }
    Ok(())
}

/// Reads a non-negative matrix from a CSV file without header (or with one
/// header line to skip when `has_header` is set).
pub fn read_matrix(path: impl AsRef<Path>, has_header: bool) -> Result<DataMatrix> {
    let m = parse_matrix(fs::File::open(path.as_ref())?, has_header)?;
    check_non_negative(&m, has_header)?;
    DataMatrix::new(m)
}

/// Reads a single-column CSV file as a vector.
pub fn read_vector(path: impl AsRef<Path>, has_header: bool) -> Result<Array1<f64>> {
    let m = parse_matrix(fs::File::open(path.as_ref())?, has_header)?;
    if m.ncols() != 1 {
        return Err(NmfError::Parse(format!(
            "expected a single column, found {}",
            m.ncols()
        )));
    }
    Ok(m.column(0).to_owned())
}

/// Reads binary class labels from a single-column CSV file.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Labels> {
    Labels::new(read_vector(path, false)?)
}

fn write_rows<I>(path: &Path, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = BufWriter::new(fs::File::create(path)?);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a matrix as CSV, one row per line, with shortest round-trip
/// decimal formatting.
pub fn write_matrix(m: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        m.rows().into_iter().map(|r| r.iter().map(f64::to_string).collect()),
    )
}

/// Writes a vector as a single-column CSV.
pub fn write_vector(v: &Array1<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_rows(path.as_ref(), v.iter().map(|x| vec![x.to_string()]))
}

pub const TRACE_HEADER: [&str; 13] = [
    "iter",
    "total",
    "discrepancy",
    "l1_x",
    "l2_k",
    "l2_x",
    "l1_k",
    "tv_k",
    "orth_k1",
    "orth_k2",
    "orth_x1",
    "orth_x2",
    "regression",
];

/// Writes one header line and one line per trace record.
pub fn write_trace(trace: &FitTrace, path: impl AsRef<Path>) -> Result<()> {
    write_trace_records(&trace.records, path)
}

pub fn write_trace_records(records: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    let header = std::iter::once(TRACE_HEADER.iter().map(|s| s.to_string()).collect());
    let body = records.iter().map(|r| {
        std::iter::once(r.iter.to_string())
            .chain(r.cost.values().iter().map(f64::to_string))
            .collect()
    });
    write_rows(path.as_ref(), header.chain(body))
}

/// Parses a trace file written by [`write_trace`].
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let m = parse_matrix(fs::File::open(path.as_ref())?, true)?;
    if m.ncols() != TRACE_HEADER.len() {
        return Err(NmfError::Parse(format!(
            "trace has {} columns, expected {}",
            m.ncols(),
            TRACE_HEADER.len()
        )));
    }
    Ok(m.rows()
        .into_iter()
        .map(|r| {
            let mut v = [0.0; 12];
            v.copy_from_slice(&r.as_slice().expect("rows of an owned matrix are contiguous")[1..]);
            TraceRecord {
                iter: r[0] as usize,
                cost: CostBreakdown::from_values(v),
            }
        })
        .collect())
}

/// Parameters of the synthetic phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub rank: usize,
    /// Number of spectral channels `m`.
    pub channels: usize,
    pub noise_level: f64,
    pub seed: u64,
    /// Let each spatial block spill half a block into the next one at
    /// half intensity.
    pub overlap: bool,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            width: 16,
            height: 16,
            rank: 3,
            channels: 64,
            noise_level: 0.0,
            seed: 0,
            overlap: false,
        }
    }
}

/// Ground truth and data of a phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub y: DataMatrix,
    pub k_true: Array2<f64>,
    pub x_true: Array2<f64>,
    /// 1 for pixels in the first spatial block, 0 elsewhere.
    pub labels: Labels,
}

const PEAKS_PER_SPECTRUM: usize = 3;
const SPECTRAL_BASELINE: f64 = 0.01;

/// Generates a hyperspectral stand-in dataset: `K_true` holds `rank`
/// horizontal bands of the image (row-major chunks), `X_true` holds spectra
/// with three Gaussian peaks each on a small baseline, and
/// `Y = K_true X_true + noise·|N(0,1)|`.
pub fn make_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    let n = spec.width * spec.height;
    let (p, m) = (spec.rank, spec.channels);
    if p == 0 || m == 0 || n == 0 {
        return Err(NmfError::Invalid(
            "phantom needs positive grid, rank and channel count".into(),
        ));
    }
    if n < p {
        return Err(NmfError::Invalid(format!("grid has {n} pixels, fewer than rank {p}")));
    }
    if !(spec.noise_level >= 0.0) {
        return Err(NmfError::Invalid(format!(
            "noise level must be non-negative, got {}",
            spec.noise_level
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let bounds: Vec<usize> = (0..=p).map(|c| c * n / p).collect();
    let mut k_true = Array2::zeros((n, p));
    for c in 0..p {
        for i in bounds[c]..bounds[c + 1] {
            k_true[[i, c]] = 1.0;
        }
        if spec.overlap {
            let spill = (bounds[c + 1] - bounds[c]) / 2;
            for i in bounds[c + 1]..(bounds[c + 1] + spill).min(n) {
                k_true[[i, c]] = 0.5;
            }
        }
    }

    let peaks = (PEAKS_PER_SPECTRUM * p).min(m);
    let centers = sample(&mut rng, m, peaks).into_vec();
    let width = (m as f64 / 40.0).max(0.8);
    let mut x_true = Array2::from_elem((p, m), SPECTRAL_BASELINE);
    for (idx, &center) in centers.iter().enumerate() {
        let k = idx % p;
        let amp: f64 = rng.gen_range(0.5..1.5);
        for j in 0..m {
            let d = (j as f64 - center as f64) / width;
            x_true[[k, j]] += amp * (-0.5 * d * d).exp();
        }
    }

    let mut y = k_true.dot(&x_true);
    if spec.noise_level > 0.0 {
        y.mapv_inplace(|v| {
            let z: f64 = rng.sample(StandardNormal);
            (v + spec.noise_level * z.abs()).max(0.0)
        });
    }
    let labels = Labels::new(k_true.column(0).mapv(|v| if v == 1.0 { 1.0 } else { 0.0 }))?;
    Ok(Phantom {
        y: DataMatrix::new(y)?,
        k_true,
        x_true,
        labels,
    })
}

/// Binary PGM (P5, maxval 255) of one column reshaped row-major to
/// `width x height`, min-max normalized; a constant column is all zeros.
pub fn pgm_bytes(column: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if column.len() != width * height {
        return Err(NmfError::Shape(format!(
            "column has {} entries, grid is {width}x{height}",
            column.len()
        )));
    }
    let min = column.iter().copied().fold(f64::INFINITY, f64::min);
    let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(column.iter().map(|&v| {
        if max > min {
            (255.0 * (v - min) / (max - min)).round() as u8
        } else {
            0
        }
    }));
    Ok(out)
}

/// Writes `channel_<k>.pgm` for every column `k` of `K` into `out_dir`.
pub fn export_channel_images(k: &Array2<f64>, grid: &PixelGrid, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if k.nrows() != grid.len() {
        return Err(NmfError::Shape(format!(
            "K has {} rows but the grid has {} pixels",
            k.nrows(),
            grid.len()
        )));
    }
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(k.ncols());
    for (c, col) in k.columns().into_iter().enumerate() {
        let bytes = pgm_bytes(&col.to_vec(), grid.width(), grid.height())?;
        let path = dir.join(format!("channel_{c}.pgm"));
        fs::write(&path, bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes a classifier as `threshold=<s>` and `x_star=<comma list>` lines.
pub fn write_classifier(clf: &LinearClassifier, path: impl AsRef<Path>) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path.as_ref())?);
    writeln!(f, "threshold={}", clf.threshold)?;
    let xs: Vec<String> = clf.x_star.iter().map(f64::to_string).collect();
    writeln!(f, "x_star={}", xs.join(","))?;
    f.flush()?;
    Ok(())
}

pub fn read_classifier(path: impl AsRef<Path>) -> Result<LinearClassifier> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut threshold = None;
    let mut x_star = None;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| NmfError::Parse(format!("line {}: expected key=value", no + 1)))?;
        match key.trim() {
            "threshold" => threshold = Some(parse_value(value, no as u64 + 1, 0)?),
            "x_star" => {
                let v = value
                    .split(',')
                    .enumerate()
                    .map(|(c, f)| parse_value(f, no as u64 + 1, c))
                    .collect::<Result<Vec<f64>>>()?;
                x_star = Some(Array1::from(v));
            }
            other => return Err(NmfError::Parse(format!("line {}: unknown key '{other}'", no + 1))),
        }
    }
    Ok(LinearClassifier {
        x_star: x_star.ok_or_else(|| NmfError::Parse("classifier file lacks x_star".into()))?,
        threshold: threshold.ok_or_else(|| NmfError::Parse("classifier file lacks threshold".into()))?,
    })
}
