//! Comma-separated text files with a mandatory header line.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which parses
//! back to the identical `f64`. Labels are zero-based integers.
//!
//! | file | header |
//! |------|--------|
//! | dataset | `label,f0,…,f{d-1}` |
//! | probabilities | `label,p0,…,p{K-1}` |
//! | distance / smooth-label matrix | `classes,<name0>,…` then `name,v,…` per class |
//! | word or embedding vectors | `token,v0,…,v{m-1}` |
//! | reliability | `bin_lo,bin_hi,count,confidence,likelihood` |
//! | confidence histogram | `bin_lo,bin_hi,count` |
//! | sweep | `param,value,seed,hist_pred,hist_out,kde_pred,kde_out,acc,nll` |
//! | calibration report | `estimator,variant,ece,n_effective,empty_neighborhoods,bandwidth` |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::data::{rows_to_array, EmbeddingTable, FeatureMatrix, LabelVector, ProbMatrix, DEFAULT_ROW_TOLERANCE};
use crate::error::{Error, Result};
use crate::metrics::{BinStats, CalibrationReport, ConfidenceHistogram};
use crate::trainer::{Activation, Arch, Dense, SoftModel};

pub const SWEEP_HEADER: &str = "param,value,seed,hist_pred,hist_out,kde_pred,kde_out,acc,nll";
pub const RELIABILITY_HEADER: &str = "bin_lo,bin_hi,count,confidence,likelihood";
pub const CONFIDENCE_HEADER: &str = "bin_lo,bin_hi,count";
pub const REPORT_HEADER: &str = "estimator,variant,ece,n_effective,empty_neighborhoods,bandwidth";
pub const MODEL_MAGIC: &str = "simcal-model v1";

/// 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Parsed table: header fields and data rows, each with its 1-based line.
pub struct Table {
    pub source: String,
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        let text = fs::read_to_string(path)?;
        Table::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Table> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| Error::Parse {
            source_name: source.to_string(),
            line: 1,
            message: "missing header".into(),
        })?;
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if fields.len() != header.len() {
                return Err(Error::Parse {
                    source_name: source.to_string(),
                    line: i + 1,
                    message: format!("{} fields, header has {}", fields.len(), header.len()),
                });
            }
            rows.push((i + 1, fields));
        }
        Ok(Table {
            source: source.to_string(),
            header,
            rows,
        })
    }

    pub fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.source.clone(),
            line,
            message: message.into(),
        }
    }

    /// Checks that the header is `first,<prefix>0,<prefix>1,…`.
    pub fn expect_indexed(&self, first: &str, prefix: &str) -> Result<usize> {
        if self.header.first().map(String::as_str) != Some(first) {
            return Err(self.error(1, format!("header must start with '{first}'")));
        }
        for (j, h) in self.header.iter().skip(1).enumerate() {
            if *h != format!("{prefix}{j}") {
                return Err(self.error(1, format!("expected column '{prefix}{j}', found '{h}'")));
            }
        }
        Ok(self.header.len() - 1)
    }

    pub fn expect_header(&self, header: &str) -> Result<()> {
        if self.header.join(",") != header {
            return Err(self.error(1, format!("expected header '{header}'")));
        }
        Ok(())
    }

    pub fn real(&self, line: usize, field: &str) -> Result<f64> {
        field
            .parse::<f64>()
            .map_err(|_| self.error(line, format!("'{field}' is not a number")))
    }

    pub fn integer(&self, line: usize, field: &str) -> Result<usize> {
        field
            .parse::<usize>()
            .map_err(|_| self.error(line, format!("'{field}' is not a non-negative integer")))
    }

    fn labelled_reals(&self) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
        let mut labels = Vec::with_capacity(self.rows.len());
        let mut values = Vec::with_capacity(self.rows.len());
        for (line, fields) in &self.rows {
            labels.push(self.integer(*line, &fields[0])?);
            values.push(fields[1..].iter().map(|f| self.real(*line, f)).collect::<Result<Vec<_>>>()?);
        }
        Ok((labels, values))
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.contains([',', '\n', '\r']) || name.trim() != name || name.is_empty() {
        return Err(Error::InvalidArgument(format!("name '{name}' cannot be written to a table")));
    }
    Ok(())
}

fn labelled_text(first: &str, prefix: &str, labels: &[usize], values: ndarray::ArrayView2<'_, f64>) -> String {
    let mut out = String::from(first);
    for j in 0..values.ncols() {
        let _ = write!(out, ",{prefix}{j}");
    }
    out.push('\n');
    for (row, &y) in values.rows().into_iter().zip(labels) {
        let _ = write!(out, "{y}");
        for v in row {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push('\n');
    }
    out
}

fn label_vector(labels: Vec<usize>, classes: Option<usize>) -> Result<LabelVector> {
    let k = classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    LabelVector::new(labels, k)
}

pub fn write_dataset(path: &Path, x: &FeatureMatrix, y: &LabelVector) -> Result<()> {
    write_text(path, &labelled_text("label", "f", y.as_slice(), x.view()))
}

/// Reads a dataset; the class count defaults to `max label + 1`.
pub fn read_dataset(path: &Path, classes: Option<usize>) -> Result<(FeatureMatrix, LabelVector)> {
    let t = Table::read(path)?;
    t.expect_indexed("label", "f")?;
    let (labels, rows) = t.labelled_reals()?;
    let x = FeatureMatrix::new(rows_to_array(&rows)?)?;
    Ok((x, label_vector(labels, classes)?))
}

pub fn write_probs(path: &Path, p: &ProbMatrix, y: &LabelVector) -> Result<()> {
    write_text(path, &labelled_text("label", "p", y.as_slice(), p.view()))
}

/// Reads a probability file; the class count is the number of columns.
pub fn read_probs(path: &Path) -> Result<(ProbMatrix, LabelVector)> {
    let t = Table::read(path)?;
    let k = t.expect_indexed("label", "p")?;
    let (labels, rows) = t.labelled_reals()?;
    let p = ProbMatrix::validate(rows_to_array(&rows)?, DEFAULT_ROW_TOLERANCE)?;
    Ok((p, LabelVector::new(labels, k)?))
}

/// Square class matrix (distances or smooth labels) with named rows.
pub fn write_class_matrix(path: &Path, names: &[String], values: ndarray::ArrayView2<'_, f64>) -> Result<()> {
    if names.len() != values.nrows() || values.nrows() != values.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} names for a {:?} matrix",
            names.len(),
            values.dim()
        )));
    }
    names.iter().try_for_each(|n| check_name(n))?;
    let mut out = String::from("classes");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (n, row) in names.iter().zip(values.rows()) {
        out.push_str(n);
        for v in row {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_class_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let t = Table::read(path)?;
    if t.header.first().map(String::as_str) != Some("classes") {
        return Err(t.error(1, "header must start with 'classes'"));
    }
    let names: Vec<String> = t.header[1..].to_vec();
    if t.rows.len() != names.len() {
        return Err(t.error(1, format!("{} classes but {} rows", names.len(), t.rows.len())));
    }
    let mut rows = Vec::with_capacity(names.len());
    for ((line, fields), name) in t.rows.iter().zip(&names) {
        if &fields[0] != name {
            return Err(t.error(*line, format!("row '{}' out of order, expected '{name}'", fields[0])));
        }
        rows.push(fields[1..].iter().map(|f| t.real(*line, f)).collect::<Result<Vec<_>>>()?);
    }
    Ok((names, rows_to_array(&rows)?))
}

pub fn write_embedding_table(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut out = String::from("token");
    for j in 0..table.dim() {
        let _ = write!(out, ",v{j}");
    }
    out.push('\n');
    for (key, row) in table.keys().iter().zip(table.vectors().rows()) {
        check_name(key)?;
        out.push_str(key);
        for v in row {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_embedding_table(path: &Path) -> Result<EmbeddingTable> {
    let t = Table::read(path)?;
    t.expect_indexed("token", "v")?;
    let mut keys = Vec::with_capacity(t.rows.len());
    let mut rows = Vec::with_capacity(t.rows.len());
    for (line, fields) in &t.rows {
        keys.push(fields[0].clone());
        rows.push(fields[1..].iter().map(|f| t.real(*line, f)).collect::<Result<Vec<_>>>()?);
    }
    let dim = t.header.len() - 1;
    let vectors = if rows.is_empty() { Array2::zeros((0, dim)) } else { rows_to_array(&rows)? };
    EmbeddingTable::new(keys, vectors)
}

pub fn reliability_text(bins: &[BinStats]) -> String {
    let mut out = format!("{RELIABILITY_HEADER}\n");
    for b in bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_real(b.lower),
            fmt_real(b.upper),
            b.count,
            fmt_real(b.confidence),
            fmt_real(b.likelihood)
        );
    }
    out
}

pub fn write_reliability(path: &Path, bins: &[BinStats]) -> Result<()> {
    write_text(path, &reliability_text(bins))
}

pub fn read_reliability(path: &Path) -> Result<Vec<BinStats>> {
    let t = Table::read(path)?;
    t.expect_header(RELIABILITY_HEADER)?;
    t.rows
        .iter()
        .map(|(line, f)| {
            Ok(BinStats {
                lower: t.real(*line, &f[0])?,
                upper: t.real(*line, &f[1])?,
                count: t.integer(*line, &f[2])?,
                confidence: t.real(*line, &f[3])?,
                likelihood: t.real(*line, &f[4])?,
            })
        })
        .collect()
}

pub fn write_confidence_histogram(path: &Path, hist: &ConfidenceHistogram) -> Result<()> {
    let mut out = format!("{CONFIDENCE_HEADER}\n");
    for (b, c) in hist.counts.iter().enumerate() {
        let (lo, hi) = hist.edges(b);
        let _ = writeln!(out, "{},{},{c}", fmt_real(lo), fmt_real(hi));
    }
    write_text(path, &out)
}

pub fn read_confidence_histogram(path: &Path) -> Result<ConfidenceHistogram> {
    let t = Table::read(path)?;
    t.expect_header(CONFIDENCE_HEADER)?;
    if t.rows.is_empty() {
        return Err(t.error(1, "no bins"));
    }
    let mut counts = Vec::with_capacity(t.rows.len());
    for (line, f) in &t.rows {
        counts.push(t.integer(*line, &f[2])?);
    }
    let (first, last) = (&t.rows[0], &t.rows[t.rows.len() - 1]);
    Ok(ConfidenceHistogram {
        lower: t.real(first.0, &first.1[0])?,
        upper: t.real(last.0, &last.1[1])?,
        counts,
    })
}

pub fn write_reports(path: &Path, reports: &[CalibrationReport]) -> Result<()> {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in reports {
        let bw = r.bandwidth.map(fmt_real).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{bw}",
            r.estimator,
            r.variant,
            fmt_real(r.ece),
            r.n_effective,
            r.empty_neighborhoods
        );
    }
    write_text(path, &out)
}

/// Reads report rows back (bins are not part of this file).
pub fn read_reports(path: &Path) -> Result<Vec<CalibrationReport>> {
    let t = Table::read(path)?;
    t.expect_header(REPORT_HEADER)?;
    t.rows
        .iter()
        .map(|(line, f)| {
            Ok(CalibrationReport {
                estimator: f[0].parse()?,
                variant: f[1].parse()?,
                ece: t.real(*line, &f[2])?,
                bins: Vec::new(),
                n_effective: t.integer(*line, &f[3])?,
                empty_neighborhoods: t.integer(*line, &f[4])?,
                bandwidth: if f[5].is_empty() { None } else { Some(t.real(*line, &f[5])?) },
            })
        })
        .collect()
}

/// Flat text model format:
///
/// ```text
/// simcal-model v1
/// arch mlp1
/// activation relu
/// input_dim 2
/// hidden_dim 32
/// classes 8
/// layer 0 weights <in*out reals, row-major>
/// layer 0 bias <out reals>
/// ...
/// ```
pub fn model_text(model: &SoftModel) -> String {
    let mut out = format!(
        "{MODEL_MAGIC}\narch {}\nactivation {}\ninput_dim {}\nhidden_dim {}\nclasses {}\n",
        model.arch(),
        model.activation(),
        model.input_dim(),
        model.hidden_dim(),
        model.classes()
    );
    for (i, layer) in model.layers().iter().enumerate() {
        let _ = write!(out, "layer {i} weights");
        for v in layer.weights.iter() {
            let _ = write!(out, " {}", fmt_real(*v));
        }
        let _ = write!(out, "\nlayer {i} bias");
        for v in layer.bias.iter() {
            let _ = write!(out, " {}", fmt_real(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_model(path: &Path, model: &SoftModel) -> Result<()> {
    write_text(path, &model_text(model))
}

pub fn parse_model(text: &str, source: &str) -> Result<SoftModel> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source.to_string(),
        line,
        message,
    };
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) != Some(MODEL_MAGIC) {
        return Err(err(1, format!("expected '{MODEL_MAGIC}'")));
    }
    let field = |idx: usize, key: &str| -> Result<&str> {
        let line = lines.get(idx).ok_or_else(|| err(idx + 1, format!("missing '{key}'")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::trim)
            .ok_or_else(|| err(idx + 1, format!("expected '{key} <value>'")))
    };
    let int = |idx: usize, key: &str| -> Result<usize> {
        field(idx, key)?.parse().map_err(|_| err(idx + 1, format!("bad {key}")))
    };
    let arch: Arch = field(1, "arch")?.parse()?;
    let activation: Activation = field(2, "activation")?.parse()?;
    let (input_dim, hidden_dim, classes) = (int(3, "input_dim")?, int(4, "hidden_dim")?, int(5, "classes")?);
    let template = SoftModel::zeros(arch, input_dim, hidden_dim, classes, activation)?;
    let mut layers = Vec::new();
    for (i, shape) in template.layers().iter().map(|l| l.weights.dim()).enumerate() {
        let reals = |idx: usize, key: &str, want: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = field(idx, key)?
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| err(idx + 1, format!("'{s}' is not a number"))))
                .collect::<Result<_>>()?;
            if vals.len() != want {
                return Err(err(idx + 1, format!("{} values, expected {want}", vals.len())));
            }
            Ok(vals)
        };
        let w = reals(6 + 2 * i, &format!("layer {i} weights"), shape.0 * shape.1)?;
        let b = reals(7 + 2 * i, &format!("layer {i} bias"), shape.1)?;
        layers.push(Dense {
            weights: Array2::from_shape_vec(shape, w).map_err(|e| err(7 + 2 * i, e.to_string()))?,
            bias: Array1::from(b),
        });
    }
    let model = template.with_layers(layers)?;
    if !model.is_finite() {
        return Err(err(1, "non-finite parameter".into()));
    }
    Ok(model)
}

pub fn read_model(path: &Path) -> Result<SoftModel> {
    parse_model(&fs::read_to_string(path)?, &path.display().to_string())
}
