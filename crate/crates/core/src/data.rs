//! Dataset representation, file I/O, preprocessing, and the synthetic
//! two-domain generator.
//!
//! Samples are stored column-wise: a dataset is a `D x n` matrix of `n`
//! samples in `D` dimensions, optionally paired with one class label per
//! column. Labels are positive integers `1..=C`.
//!
//! All randomized operations take an explicit seed and draw from a
//! `ChaCha8` stream, so results reproduce across platforms and runs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Axis, ShapeBuilder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Magic bytes opening every binary dataset file.
const RAWMATRIX_MAGIC: &[u8; 4] = b"JGSA";
const RAWMATRIX_VERSION: u32 = 1;

/// A column-major collection of samples with optional class labels.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Option<Vec<u32>>,
    name: String,
}

impl Dataset {
    /// Builds a dataset, validating finiteness and label range.
    pub fn new(
        features: Array2<f64>,
        labels: Option<Vec<u32>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::InvalidData(
                "dataset must have at least one dimension and one sample".into(),
            ));
        }
        if let Some(bad) = features.iter().position(|v| !v.is_finite()) {
            let col = bad % features.ncols();
            return Err(Error::InvalidData(format!(
                "non-finite feature value in column {col}"
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != features.ncols() {
                return Err(Error::InvalidData(format!(
                    "label count {} does not match sample count {}",
                    l.len(),
                    features.ncols()
                )));
            }
            if let Some(j) = l.iter().position(|&y| y == 0) {
                return Err(Error::InvalidData(format!(
                    "label of sample {j} is 0; labels are 1-based class ids"
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
        })
    }

    /// Number of feature dimensions `D`.
    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    /// Number of samples `n`.
    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.features.ncols() == 0
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Largest class id present, when labeled.
    pub fn num_classes(&self) -> Option<u32> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().unwrap_or(0))
    }
}

/// On-disk dataset encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    /// Header line, one sample per row, optional trailing `label` column.
    Csv,
    /// Little-endian binary: magic, version, shape, column-major doubles.
    RawMatrix,
}

/// Reads a dataset from `path` under the declared format.
pub fn load_dataset(path: impl AsRef<Path>, format: FileFormat) -> Result<Dataset> {
    let path = path.as_ref();
    match format {
        FileFormat::Csv => load_csv(path),
        FileFormat::RawMatrix => load_rawmatrix(path),
    }
}

/// Writes a dataset to `path` under the declared format.
pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        FileFormat::Csv => save_csv(d, path),
        FileFormat::RawMatrix => save_rawmatrix(d, path),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file, expected header line".into()))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_labels = fields.last() == Some(&"label");
    let d = if has_labels {
        fields.len() - 1
    } else {
        fields.len()
    };
    if d == 0 {
        return Err(parse_err(1, "header declares no feature columns".into()));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut n = 0usize;
    for (idx, row) in lines {
        let lineno = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        let expected = d + usize::from(has_labels);
        if cells.len() != expected {
            return Err(parse_err(
                lineno,
                format!("expected {expected} fields, found {}", cells.len()),
            ));
        }
        for cell in &cells[..d] {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(lineno, format!("non-numeric cell `{cell}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite cell `{cell}`")));
            }
            values.push(v);
        }
        if has_labels {
            let cell = cells[d];
            let y: u32 = cell
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid label `{cell}`")))?;
            if y == 0 {
                return Err(parse_err(lineno, "label must be a positive class id".into()));
            }
            labels.push(y);
        }
        n += 1;
    }
    if n == 0 {
        return Err(parse_err(2, "no data rows".into()));
    }
    // Rows arrive sample-major; transpose into the column-per-sample layout.
    let rows = Array2::from_shape_vec((n, d), values)
        .map_err(|e| parse_err(1, format!("shape error: {e}")))?;
    let features = rows.t().as_standard_layout().to_owned();
    let name = path.file_stem().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    Dataset::new(features, has_labels.then_some(labels), name)
}

fn save_csv(d: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut header: Vec<String> = (1..=d.dim()).map(|i| format!("f{i}")).collect();
    if d.labels().is_some() {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(",")).map_err(io_err(path))?;
    for j in 0..d.len() {
        let mut row: Vec<String> = d.features().column(j).iter().map(f64::to_string).collect();
        if let Some(labels) = d.labels() {
            row.push(labels[j].to_string());
        }
        writeln!(w, "{}", row.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn load_rawmatrix(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = BufReader::new(file);
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| parse_err("truncated header".into()))?;
    if &magic != RAWMATRIX_MAGIC {
        return Err(parse_err("bad magic, not a rawmatrix file".into()));
    }
    let mut u32_buf = [0u8; 4];
    let mut read_u32 = |r: &mut BufReader<File>, what: &str| -> Result<u32> {
        r.read_exact(&mut u32_buf)
            .map_err(|_| parse_err(format!("truncated {what}")))?;
        Ok(u32::from_le_bytes(u32_buf))
    };
    let version = read_u32(&mut r, "version")?;
    if version != RAWMATRIX_VERSION {
        return Err(parse_err(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r, "dimension count")? as usize;
    let n = read_u32(&mut r, "sample count")? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)
        .map_err(|_| parse_err("truncated label flag".into()))?;
    let has_labels = match flag[0] {
        0 => false,
        1 => true,
        other => return Err(parse_err(format!("bad label flag {other}"))),
    };

    let mut values = vec![0.0f64; dim * n];
    let mut f64_buf = [0u8; 8];
    for v in values.iter_mut() {
        r.read_exact(&mut f64_buf)
            .map_err(|_| parse_err("truncated feature block".into()))?;
        *v = f64::from_le_bytes(f64_buf);
    }
    let labels = if has_labels {
        let mut labels = vec![0u32; n];
        for y in labels.iter_mut() {
            r.read_exact(&mut u32_buf)
                .map_err(|_| parse_err("truncated label block".into()))?;
            *y = u32::from_le_bytes(u32_buf);
        }
        Some(labels)
    } else {
        None
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io_err(path))? != 0 {
        return Err(parse_err("trailing bytes after payload".into()));
    }

    // Stored column-major; rebuild and convert to the standard layout.
    let features = Array2::from_shape_vec((dim, n).f(), values)
        .map_err(|e| parse_err(format!("shape error: {e}")))?
        .as_standard_layout()
        .to_owned();
    let name = path.file_stem().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    Dataset::new(features, labels, name)
}

fn save_rawmatrix(d: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(RAWMATRIX_MAGIC).map_err(io_err(path))?;
    w.write_all(&RAWMATRIX_VERSION.to_le_bytes())
        .map_err(io_err(path))?;
    w.write_all(&(d.dim() as u32).to_le_bytes())
        .map_err(io_err(path))?;
    w.write_all(&(d.len() as u32).to_le_bytes())
        .map_err(io_err(path))?;
    w.write_all(&[u8::from(d.labels().is_some())])
        .map_err(io_err(path))?;
    for col in d.features().axis_iter(Axis(1)) {
        for &v in col.iter() {
            w.write_all(&v.to_le_bytes()).map_err(io_err(path))?;
        }
    }
    if let Some(labels) = d.labels() {
        for &y in labels {
            w.write_all(&y.to_le_bytes()).map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Rescales every column to unit Euclidean norm. Labels pass through.
pub fn normalize_unit_columns(d: &Dataset) -> Result<Dataset> {
    let mut features = d.features().clone();
    for (j, mut col) in features.axis_iter_mut(Axis(1)).enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidData(format!(
                "cannot normalize zero-norm column {j}"
            )));
        }
        col.mapv_inplace(|v| v / norm);
    }
    Dataset::new(features, d.labels().map(<[u32]>::to_vec), d.name())
}

/// Draws `count` samples without replacement, preserving relative order.
///
/// The selection is a pure function of `seed` (ChaCha8 stream).
pub fn subsample(d: &Dataset, count: usize, seed: u64) -> Result<Dataset> {
    if count == 0 || count > d.len() {
        return Err(Error::InvalidParam(format!(
            "subsample count {count} out of range 1..={}",
            d.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, d.len(), count).into_vec();
    idx.sort_unstable();
    let features = d.features().select(Axis(1), &idx);
    let labels = d
        .labels()
        .map(|l| idx.iter().map(|&i| l[i]).collect::<Vec<_>>());
    Dataset::new(features, labels, d.name())
}

/// Parameters of the two-domain, three-class Gaussian-mixture generator.
///
/// Each class is an isotropic Gaussian in three dimensions; the per-class
/// scale is the standard deviation along every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub source_means: [[f64; 3]; 3],
    pub target_means: [[f64; 3]; 3],
    pub source_scales: [f64; 3],
    pub target_scales: [f64; 3],
    pub samples_per_class: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The pinned benchmark configuration: three collinear source classes,
    /// a global (3, 3, 0) shift between domains, and an extra (1.5, 0, 0)
    /// shift of the third target class.
    pub fn shifted_default(seed: u64) -> Self {
        let source_means = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [4.0, 0.0, 0.0]];
        let shift = [3.0, 3.0, 0.0];
        let mut target_means = source_means;
        for (c, mean) in target_means.iter_mut().enumerate() {
            for (axis, m) in mean.iter_mut().enumerate() {
                *m += shift[axis];
            }
            if c == 2 {
                mean[0] += 1.5;
            }
        }
        SyntheticSpec {
            source_means,
            target_means,
            source_scales: [0.45; 3],
            target_scales: [0.45; 3],
            samples_per_class: 100,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |m: &[[f64; 3]; 3]| m.iter().flatten().all(|v| v.is_finite());
        if !finite(&self.source_means) || !finite(&self.target_means) {
            return Err(Error::InvalidParam("non-finite class mean".into()));
        }
        for &s in self.source_scales.iter().chain(&self.target_scales) {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "covariance scale {s} must be positive"
                )));
            }
        }
        if self.samples_per_class < 2 {
            return Err(Error::InvalidParam(
                "samples_per_class must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Draws labeled source and target datasets from the mixture description.
///
/// Sample order is class-major (all of class 1, then 2, then 3); the whole
/// draw consumes one ChaCha8 stream, source domain first.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let m = spec.samples_per_class;

    let mut draw = |means: &[[f64; 3]; 3], scales: &[f64; 3], name: &str| -> Result<Dataset> {
        let mut features = Array2::zeros((3, 3 * m));
        let mut labels = Vec::with_capacity(3 * m);
        for class in 0..3 {
            for i in 0..m {
                let j = class * m + i;
                for axis in 0..3 {
                    features[(axis, j)] =
                        means[class][axis] + scales[class] * normal.sample(&mut rng);
                }
                labels.push(class as u32 + 1);
            }
        }
        Dataset::new(features, Some(labels), name)
    };

    let source = draw(&spec.source_means, &spec.source_scales, "synthetic-source")?;
    let target = draw(&spec.target_means, &spec.target_scales, "synthetic-target")?;
    Ok((source, target))
}
