//! Per-image divergence features and the CSV interchange format.
//!
//! Each image yields one divergence per quality factor: the image is
//! quantized at that quality, its AC first-digit distribution is compared
//! against the generalized-Benford model for the same quality, and the
//! chi-square divergence is multiplied by a fixed scale (100 by default, so
//! probabilities count as percentage points).

use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benford::{
    chi_square_divergence, digit_distribution, generalized_benford, BenfordError, GblParams,
    ParamTable,
};
use crate::ingest::{load_image, GrayImage, IngestError, LabeledImageSet};
use crate::jpeg::{extract_coefficients, JpegError};

/// Quality factors of the default feature vector, ascending.
pub const DEFAULT_QFS: [u32; 6] = [50, 60, 70, 80, 90, 100];

/// Multiplier applied to the probability-based chi-square divergence.
pub const DEFAULT_CHI_SCALE: f64 = 100.0;

pub const LABEL_COLUMN: &str = "Class Label";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no model parameters for quality factor {0}")]
    MissingParams(u32),
    #[error("quality factors must be ascending, unique and within 1..=100: {0:?}")]
    BadQfOrder(Vec<u32>),
    #[error("{source_path}: no nonzero AC coefficients at QF {qf}")]
    DegenerateImage { source_path: String, qf: u32 },
    #[error("every image in the set is degenerate ({} rejected)", .0.len())]
    AllImagesDegenerate(Vec<Rejection>),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Jpeg(#[from] JpegError),
    #[error(transparent)]
    Benford(#[from] BenfordError),
}

/// Extraction settings shared by every image of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub qfs: Vec<u32>,
    pub params: ParamTable,
    pub chi_scale: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            qfs: DEFAULT_QFS.to_vec(),
            params: crate::benford::default_param_table(),
            chi_scale: DEFAULT_CHI_SCALE,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        validate_qfs(&self.qfs)?;
        for qf in &self.qfs {
            let p = self
                .params
                .get(qf)
                .ok_or(FeatureError::MissingParams(*qf))?;
            generalized_benford(p)?;
        }
        Ok(())
    }

    fn model_for(&self, qf: u32) -> Result<GblParams, FeatureError> {
        self.params
            .get(&qf)
            .copied()
            .ok_or(FeatureError::MissingParams(qf))
    }
}

pub fn validate_qfs(qfs: &[u32]) -> Result<(), FeatureError> {
    let ok = !qfs.is_empty()
        && qfs.iter().all(|q| (1..=100).contains(q))
        && qfs.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(FeatureError::BadQfOrder(qfs.to_vec()))
    }
}

/// Divergences in ascending-QF order plus the class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub d: Vec<f64>,
    pub label: usize,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<FeatureVector>,
    pub label_names: Vec<String>,
    pub qf_order: Vec<u32>,
}

impl Dataset {
    pub fn new(qf_order: Vec<u32>, label_names: Vec<String>) -> Self {
        Self {
            rows: Vec::new(),
            label_names,
            qf_order,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.qf_order.len()
    }

    /// Class count: the larger of the named classes and `max label + 1`.
    pub fn num_classes(&self) -> usize {
        let from_rows = self.rows.iter().map(|r| r.label + 1).max().unwrap_or(0);
        from_rows.max(self.label_names.len())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for r in &self.rows {
            counts[r.label] += 1;
        }
        counts
    }

    /// Same metadata, selected rows.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            label_names: self.label_names.clone(),
            qf_order: self.qf_order.clone(),
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn header(&self) -> String {
        let mut cols: Vec<String> = self.qf_order.iter().map(|q| format!("QF-{q}")).collect();
        cols.push(LABEL_COLUMN.to_string());
        cols.join(",")
    }
}

/// Divergence of one image at one quality factor.
pub fn image_divergence(
    image: &GrayImage,
    qf: u32,
    params: &GblParams,
    chi_scale: f64,
) -> Result<f64, FeatureError> {
    let stream = extract_coefficients(image, qf)?;
    let (_, actual) = digit_distribution(&stream).map_err(|e| match e {
        BenfordError::EmptyStream => FeatureError::DegenerateImage {
            source_path: image.source_path().to_string(),
            qf,
        },
        other => other.into(),
    })?;
    let model = generalized_benford(params)?;
    Ok(chi_scale * chi_square_divergence(&actual, &model)?)
}

/// One divergence per configured quality factor.
pub fn image_feature_vector(
    image: &GrayImage,
    label: usize,
    config: &FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    let d = config
        .qfs
        .iter()
        .map(|&qf| image_divergence(image, qf, &config.model_for(qf)?, config.chi_scale))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureVector {
        d,
        label,
        source: image.source_path().to_string(),
    })
}

/// An image left out of the dataset, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub source: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub dataset: Dataset,
    pub rejected: Vec<Rejection>,
}

/// Extracts features for every image in the set, in parallel. Degenerate
/// images are rejected rather than imputed; unreadable files abort the build.
pub fn build_dataset(
    set: &LabeledImageSet,
    config: &FeatureConfig,
) -> Result<BuildOutcome, FeatureError> {
    config.validate()?;
    let results: Vec<Result<FeatureVector, FeatureError>> = set
        .entries
        .par_iter()
        .map(|(path, label)| {
            let image = load_image(path)?;
            image_feature_vector(&image, *label, config)
        })
        .collect();

    let mut dataset = Dataset::new(config.qfs.clone(), set.label_names.clone());
    let mut rejected = Vec::new();
    for ((path, _), result) in set.entries.iter().zip(results) {
        match result {
            Ok(row) => dataset.rows.push(row),
            Err(FeatureError::DegenerateImage { qf, .. }) => rejected.push(Rejection {
                source: path.to_string_lossy().into_owned(),
                reason: format!("no nonzero AC coefficients at QF {qf}"),
            }),
            Err(e) => return Err(e),
        }
    }
    if dataset.is_empty() {
        return Err(FeatureError::AllImagesDegenerate(rejected));
    }
    Ok(BuildOutcome { dataset, rejected })
}

/// Fixed-point rendering with six significant digits.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() {
            "0.00000".into()
        } else {
            v.to_string()
        };
    }
    // {:e} rounds first, so the exponent already accounts for carries
    // such as 9.999996 -> 1.00000e1.
    let sci = format!("{:.5e}", v);
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let rounded: f64 = sci.parse().unwrap_or(v);
    let decimals = (5 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line 1: header {found:?} is not `QF-<n>,...,Class Label`")]
    HeaderMismatch { found: String },
    #[error("line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },
    #[error("empty input, header missing")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes the dataset as CSV; returns the byte count.
pub fn write_csv<W: Write>(ds: &Dataset, mut sink: W) -> io::Result<usize> {
    let mut written = 0;
    let header = ds.header();
    sink.write_all(header.as_bytes())?;
    sink.write_all(b"\n")?;
    written += header.len() + 1;
    for row in &ds.rows {
        let mut line: Vec<String> = row.d.iter().map(|&v| format_sig6(v)).collect();
        line.push(row.label.to_string());
        let line = line.join(",");
        sink.write_all(line.as_bytes())?;
        sink.write_all(b"\n")?;
        written += line.len() + 1;
    }
    sink.flush()?;
    Ok(written)
}

fn parse_header(line: &str) -> Option<Vec<u32>> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    let (label, qf_cols) = cols.split_last()?;
    if *label != LABEL_COLUMN || qf_cols.is_empty() {
        return None;
    }
    let qfs = qf_cols
        .iter()
        .map(|c| c.strip_prefix("QF-")?.parse::<u32>().ok())
        .collect::<Option<Vec<_>>>()?;
    validate_qfs(&qfs).ok()?;
    Some(qfs)
}

/// Parses the CSV written by [`write_csv`]. Class names are not stored in
/// the file and come back as `class<k>`.
pub fn read_csv<R: BufRead>(source: R) -> Result<Dataset, CsvError> {
    let mut lines = source.lines();
    let header = lines.next().ok_or(CsvError::MissingHeader)??;
    let header = header.trim_start_matches('\u{feff}').trim_end_matches('\r');
    let qfs = parse_header(header).ok_or_else(|| CsvError::HeaderMismatch {
        found: header.to_string(),
    })?;
    let width = qfs.len() + 1;

    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(CsvError::MalformedRow {
                line: line_no,
                msg: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let mut d = Vec::with_capacity(qfs.len());
        for f in &fields[..qfs.len()] {
            let v: f64 = f.parse().map_err(|_| CsvError::MalformedRow {
                line: line_no,
                msg: format!("non-numeric feature {f:?}"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(CsvError::MalformedRow {
                    line: line_no,
                    msg: format!("feature {f:?} must be finite and nonnegative"),
                });
            }
            d.push(v);
        }
        let label: usize = fields[qfs.len()]
            .parse()
            .map_err(|_| CsvError::MalformedRow {
                line: line_no,
                msg: format!(
                    "class label {:?} is not a nonnegative integer",
                    fields[qfs.len()]
                ),
            })?;
        rows.push(FeatureVector {
            d,
            label,
            source: String::new(),
        });
    }
    let n_classes = rows.iter().map(|r| r.label + 1).max().unwrap_or(0);
    Ok(Dataset {
        rows,
        label_names: (0..n_classes).map(|k| format!("class{k}")).collect(),
        qf_order: qfs,
    })
}
