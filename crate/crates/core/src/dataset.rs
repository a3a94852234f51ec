//! Subject-grouped segment tables: envelopes, ingestion and stitching.

use std::fs::File;
use std::path::Path;

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binary class of a subject; `1` marks a patient, `0` a healthy control.
pub type Label = u8;

/// One subject's bundle of segments (rows) × features (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    subject_id: String,
    label: Label,
    segments: Array2<f64>,
}

impl Envelope {
    pub fn new(subject_id: impl Into<String>, label: Label, segments: Array2<f64>) -> Result<Self> {
        let subject_id = subject_id.into();
        if label > 1 {
            return Err(Error::InvalidLabel {
                line: 0,
                value: label.to_string(),
            });
        }
        if segments.nrows() == 0 || segments.ncols() == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some(bad) = segments.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonNumeric {
                line: bad / segments.ncols(),
                column: bad % segments.ncols(),
                value: segments.iter().nth(bad).unwrap().to_string(),
            });
        }
        Ok(Envelope {
            subject_id,
            label,
            segments,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn segments(&self) -> ArrayView2<'_, f64> {
        self.segments.view()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.nrows()
    }

    pub fn dim(&self) -> usize {
        self.segments.ncols()
    }

    /// Same subject and label with a replacement segment matrix.
    pub fn with_segments(&self, segments: Array2<f64>) -> Result<Self> {
        Envelope::new(self.subject_id.clone(), self.label, segments)
    }
}

/// Features × segments view of an envelope: `out[i][j] = segments[j][i]`.
pub fn transpose_envelope(env: &Envelope) -> Array2<f64> {
    env.segments.t().to_owned()
}

/// An ordered collection of envelopes sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    envelopes: Vec<Envelope>,
    dim: usize,
}

impl Dataset {
    pub fn new(envelopes: Vec<Envelope>) -> Result<Self> {
        let first = envelopes.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        let mut seen = std::collections::HashSet::new();
        for env in &envelopes {
            if env.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: env.dim(),
                });
            }
            if !seen.insert(env.subject_id.as_str()) {
                return Err(Error::DuplicateSubject(env.subject_id.clone()));
            }
        }
        Ok(Dataset { envelopes, dim })
    }

    pub fn envelopes(&self) -> &[Envelope] {
        &self.envelopes
    }

    pub fn len(&self) -> usize {
        self.envelopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envelopes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Vec<Label> {
        self.envelopes.iter().map(|e| e.label).collect()
    }

    pub fn subject_ids(&self) -> Vec<&str> {
        self.envelopes.iter().map(|e| e.subject_id.as_str()).collect()
    }

    /// The common segment count, or `RaggedEnvelopes` if counts differ.
    pub fn segment_count(&self) -> Result<usize> {
        let (min, max) = self.segment_range();
        if min != max {
            return Err(Error::RaggedEnvelopes { min, max });
        }
        Ok(min)
    }

    pub fn segment_range(&self) -> (usize, usize) {
        let counts = self.envelopes.iter().map(Envelope::segment_count);
        let min = counts.clone().min().unwrap_or(0);
        let max = counts.max().unwrap_or(0);
        (min, max)
    }

    pub fn has_both_classes(&self) -> bool {
        let ones = self.envelopes.iter().filter(|e| e.label == 1).count();
        ones > 0 && ones < self.envelopes.len()
    }

    /// Keeps the first `min` segments of every envelope, where `min` is the
    /// smallest segment count in the dataset.
    pub fn trim_to_min(&self) -> Dataset {
        let (min, _) = self.segment_range();
        let envelopes = self
            .envelopes
            .iter()
            .map(|e| Envelope {
                subject_id: e.subject_id.clone(),
                label: e.label,
                segments: e.segments.slice(s![..min, ..]).to_owned(),
            })
            .collect();
        Dataset {
            envelopes,
            dim: self.dim,
        }
    }

    /// Subset of envelopes at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.envelopes[i].clone()).collect())
    }

    pub fn map_envelopes<F>(&self, f: F) -> Result<Dataset>
    where
        F: FnMut(&Envelope) -> Result<Envelope>,
    {
        Dataset::new(self.envelopes.iter().map(f).collect::<Result<Vec<_>>>()?)
    }
}

/// One row per subject: the concatenation of its segments in stored order.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedDataset {
    pub rows: Array2<f64>,
    pub labels: Vec<Label>,
    pub segments_per_subject: usize,
    pub dim: usize,
}

impl StitchedDataset {
    /// Columns restricted to `indices` (in the given order).
    pub fn restrict(&self, indices: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows.nrows(), indices.len()));
        for (c, &j) in indices.iter().enumerate() {
            out.column_mut(c).assign(&self.rows.column(j));
        }
        out
    }
}

pub fn stitch(ds: &Dataset) -> Result<StitchedDataset> {
    let m = ds.segment_count()?;
    let d = ds.dim;
    let mut rows = Array2::zeros((ds.len(), m * d));
    for (l, env) in ds.envelopes.iter().enumerate() {
        let mut row = rows.row_mut(l);
        for (seg, src) in env.segments.rows().into_iter().enumerate() {
            row.slice_mut(s![seg * d..(seg + 1) * d]).assign(&src);
        }
    }
    Ok(StitchedDataset {
        rows,
        labels: ds.labels(),
        segments_per_subject: m,
        dim: d,
    })
}

/// Splits a stitched row back into a segment matrix.
pub fn unstitch_row(stitched: &StitchedDataset, row: usize) -> Array2<f64> {
    let (m, d) = (stitched.segments_per_subject, stitched.dim);
    let src = stitched.rows.row(row);
    Array2::from_shape_fn((m, d), |(i, j)| src[i * d + j])
}

/// Ingestion layout of a table file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schema {
    /// Header `subject_id,label,f1,...,fd`; one row per segment.
    CanonicalCsv,
    /// Subject id first, class last, features in between. `drop_trailing`
    /// non-feature columns immediately before the class column are ignored.
    UciSakarLike { drop_trailing: usize, header: bool },
}

impl Schema {
    pub fn id(&self) -> &'static str {
        match self {
            Schema::CanonicalCsv => "canonical-csv",
            Schema::UciSakarLike { .. } => "uci-sakar-like",
        }
    }
}

fn parse_label(raw: &str, line: usize) -> Result<Label> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(Error::InvalidLabel {
            line,
            value: raw.to_string(),
        }),
    }
}

fn parse_cell(raw: &str, line: usize, column: usize) -> Result<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric {
            line,
            column,
            value: raw.to_string(),
        }),
    }
}

/// Loads a subject-grouped table. Subjects appear in first-appearance order and
/// segments in row order.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let skip_header = match schema {
        Schema::CanonicalCsv => true,
        Schema::UciSakarLike { header, .. } => *header,
    };

    // (subject id, label, rows)
    let mut groups: Vec<(String, Label, Vec<Vec<f64>>)> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = Default::default();
    let mut width: Option<usize> = None;

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 1;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if i == 0 && skip_header {
            if *schema == Schema::CanonicalCsv {
                let ok = record.len() >= 3
                    && record.get(0) == Some("subject_id")
                    && record.get(1) == Some("label");
                if !ok {
                    return Err(Error::BadHeader(format!(
                        "expected `subject_id,label,f1,...`, found `{}`",
                        record.iter().collect::<Vec<_>>().join(",")
                    )));
                }
            }
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRows {
                line,
                expected,
                found: record.len(),
            });
        }
        let (id, label, features): (&str, Label, Vec<f64>) = match schema {
            Schema::CanonicalCsv => {
                let label = parse_label(&record[1], line)?;
                let feats = (2..record.len())
                    .map(|c| parse_cell(&record[c], line, c + 1))
                    .collect::<Result<Vec<_>>>()?;
                (&record[0], label, feats)
            }
            Schema::UciSakarLike { drop_trailing, .. } => {
                let last = record.len() - 1;
                if last < 1 + drop_trailing + 1 {
                    return Err(Error::BadHeader(format!(
                        "line {line}: {} columns leave no features after dropping {drop_trailing}",
                        record.len()
                    )));
                }
                let label = parse_label(&record[last], line)?;
                let feats = (1..last - drop_trailing)
                    .map(|c| parse_cell(&record[c], line, c + 1))
                    .collect::<Result<Vec<_>>>()?;
                (&record[0], label, feats)
            }
        };
        match index.get(id) {
            Some(&g) => {
                if groups[g].1 != label {
                    return Err(Error::ConflictingLabels(id.to_string()));
                }
                groups[g].2.push(features);
            }
            None => {
                index.insert(id.to_string(), groups.len());
                groups.push((id.to_string(), label, vec![features]));
            }
        }
    }

    if groups.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let envelopes = groups
        .into_iter()
        .map(|(id, label, rows)| {
            let d = rows[0].len();
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            let m = flat.len() / d;
            let segments = Array2::from_shape_vec((m, d), flat).expect("row widths checked");
            Envelope::new(id, label, segments)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(envelopes)
}

/// Writes the canonical CSV layout. Values use Rust's shortest round-trip
/// float formatting, so reloading reproduces them bit for bit.
pub fn write_canonical_csv<W: std::io::Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subject_id".to_string(), "label".to_string()];
    header.extend((1..=ds.dim).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for env in &ds.envelopes {
        for seg in env.segments.rows() {
            let mut rec = vec![env.subject_id.clone(), env.label.to_string()];
            rec.extend(seg.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn env(id: &str, label: Label, seg: Array2<f64>) -> Envelope {
        Envelope::new(id, label, seg).unwrap()
    }

    #[test]
    fn transpose_small() {
        let e = env("a", 0, array![[1., 2., 3.], [4., 5., 6.]]);
        assert_eq!(transpose_envelope(&e), array![[1., 4.], [2., 5.], [3., 6.]]);
        let one = env("b", 1, array![[7.]]);
        assert_eq!(transpose_envelope(&one), array![[7.]]);
    }

    #[test]
    fn canonical_single_row() {
        let f = write_tmp("subject_id,label,f1,f2\ns1,1,0.5,2\n");
        let ds = load_dataset(f.path(), &Schema::CanonicalCsv).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.segment_count().unwrap(), 1);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.envelopes()[0].label(), 1);
    }

    #[test]
    fn conflicting_labels_rejected() {
        let f = write_tmp("subject_id,label,f1\ns1,0,1\ns1,1,2\n");
        let err = load_dataset(f.path(), &Schema::CanonicalCsv).unwrap_err();
        assert!(err.to_string().starts_with("conflicting labels"), "{err}");
    }

    #[test]
    fn load_errors() {
        let missing = load_dataset(Path::new("/nonexistent/x.csv"), &Schema::CanonicalCsv);
        assert!(matches!(missing, Err(Error::MissingFile(_))));

        let ragged = write_tmp("subject_id,label,f1,f2\ns1,0,1,2\ns1,0,1\n");
        assert!(matches!(
            load_dataset(ragged.path(), &Schema::CanonicalCsv),
            Err(Error::RaggedRows { line: 3, .. })
        ));

        let text = write_tmp("subject_id,label,f1\ns1,0,abc\n");
        assert!(matches!(
            load_dataset(text.path(), &Schema::CanonicalCsv),
            Err(Error::NonNumeric { .. })
        ));

        let nan = write_tmp("subject_id,label,f1\ns1,0,NaN\n");
        assert!(matches!(
            load_dataset(nan.path(), &Schema::CanonicalCsv),
            Err(Error::NonNumeric { .. })
        ));

        let empty = write_tmp("subject_id,label,f1\n");
        assert!(matches!(
            load_dataset(empty.path(), &Schema::CanonicalCsv),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn uci_layout_groups_by_subject() {
        // id, f1, f2, score, class
        let f = write_tmp("7,1.0,2.0,33,1\n7,1.5,2.5,33,1\n9,0.1,0.2,0,0\n9,0.3,0.4,0,0\n");
        let schema = Schema::UciSakarLike {
            drop_trailing: 1,
            header: false,
        };
        let ds = load_dataset(f.path(), &schema).unwrap();
        assert_eq!(ds.subject_ids(), vec!["7", "9"]);
        assert_eq!(ds.labels(), vec![1, 0]);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.envelopes()[0].segments(), array![[1.0, 2.0], [1.5, 2.5]]);
    }

    #[test]
    fn stitch_concatenates_segments() {
        let ds = Dataset::new(vec![
            env("a", 0, array![[1., 2.], [3., 4.]]),
            env("b", 1, array![[5., 6.], [7., 8.]]),
        ])
        .unwrap();
        let st = stitch(&ds).unwrap();
        assert_eq!(st.rows, array![[1., 2., 3., 4.], [5., 6., 7., 8.]]);
        assert_eq!(st.labels, vec![0, 1]);
        assert_eq!(unstitch_row(&st, 1), array![[5., 6.], [7., 8.]]);
    }

    #[test]
    fn stitch_rejects_ragged() {
        let ds = Dataset::new(vec![
            env("a", 0, Array2::zeros((3, 2))),
            env("b", 1, Array2::zeros((2, 2))),
        ])
        .unwrap();
        let err = stitch(&ds).unwrap_err();
        assert!(err.to_string().starts_with("ragged envelopes"));
        assert_eq!(ds.trim_to_min().segment_count().unwrap(), 2);
    }

    #[test]
    fn duplicate_subjects_rejected() {
        let a = env("a", 0, array![[1.]]);
        assert!(matches!(
            Dataset::new(vec![a.clone(), a]),
            Err(Error::DuplicateSubject(_))
        ));
    }
}
