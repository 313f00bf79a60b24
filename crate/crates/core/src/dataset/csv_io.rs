use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Provenance, SoftDataset, SoftSample};
use crate::error::{Error, Result};

pub const SOFT_LABEL_COLUMN: &str = "soft_label";
pub const TRUE_LABEL_COLUMN: &str = "true_label";

/// Which CSV columns hold features, the soft label and the optional truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub feature_columns: Vec<String>,
    #[serde(default = "default_soft_column")]
    pub soft_label_column: String,
    #[serde(default)]
    pub true_label_column: Option<String>,
}

fn default_soft_column() -> String {
    SOFT_LABEL_COLUMN.to_string()
}

impl CsvSchema {
    /// Schema of files written by [`write_csv`]: every column other than
    /// `soft_label` / `true_label` is a feature.
    pub fn infer(header: &[String]) -> Self {
        let feature_columns = header
            .iter()
            .filter(|h| *h != SOFT_LABEL_COLUMN && *h != TRUE_LABEL_COLUMN)
            .cloned()
            .collect();
        let true_label_column = header
            .iter()
            .any(|h| h == TRUE_LABEL_COLUMN)
            .then(|| TRUE_LABEL_COLUMN.to_string());
        Self {
            feature_columns,
            soft_label_column: SOFT_LABEL_COLUMN.to_string(),
            true_label_column,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: Option<&CsvSchema>) -> Result<SoftDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

/// Parses a headed CSV. Lines starting with `#` are comments; a
/// `# provenance: <tag>` comment restores the dataset's provenance.
/// Without a schema the layout of [`write_csv`] is assumed.
pub fn read_csv<R: Read>(mut reader: R, schema: Option<&CsvSchema>) -> Result<SoftDataset> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let provenance = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().strip_prefix("provenance:"))
        .find_map(|tag| Provenance::parse(tag.trim()))
        .unwrap_or(Provenance::Loaded);

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::CsvHeader(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::CsvHeader("missing header row".into()));
    }
    let inferred;
    let schema = match schema {
        Some(s) => s,
        None => {
            inferred = CsvSchema::infer(&header);
            &inferred
        }
    };

    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::CsvHeader(format!("column '{name}' not found")))
    };
    let feature_idx: Vec<usize> = schema
        .feature_columns
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    let soft_idx = col(&schema.soft_label_column)?;
    let truth_idx = schema.true_label_column.as_deref().map(col).transpose()?;

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Csv {
                row,
                column: String::new(),
                message: format!("{} fields, header has {}", record.len(), header.len()),
            });
        }
        let cell = |idx: usize| -> Result<f64> {
            let raw = &record[idx];
            if raw.is_empty() {
                return Err(Error::Csv {
                    row,
                    column: header[idx].clone(),
                    message: "missing value".into(),
                });
            }
            raw.parse::<f64>().map_err(|_| Error::Csv {
                row,
                column: header[idx].clone(),
                message: format!("'{raw}' is not a number"),
            })
        };
        let features = feature_idx.iter().map(|&j| cell(j)).collect::<Result<Vec<_>>>()?;
        let soft_label = cell(soft_idx)?;
        if !(0.0..=1.0).contains(&soft_label) {
            return Err(Error::Csv {
                row,
                column: header[soft_idx].clone(),
                message: format!("soft label {soft_label} outside [0, 1]"),
            });
        }
        let true_label = match truth_idx {
            Some(j) => {
                let v = cell(j)?;
                if v == 0.0 {
                    Some(false)
                } else if v == 1.0 {
                    Some(true)
                } else {
                    return Err(Error::Csv {
                        row,
                        column: header[j].clone(),
                        message: format!("true label {v} is not 0 or 1"),
                    });
                }
            }
            None => None,
        };
        samples.push(SoftSample {
            features,
            soft_label,
            true_label,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    SoftDataset::new(samples, schema.feature_columns.clone(), provenance)
}

/// Writes `# provenance: <tag>`, a header (features, `soft_label`, and
/// `true_label` when every sample has one), then one row per sample.
/// Reals use the shortest representation that parses back exactly.
pub fn write_csv<W: Write>(ds: &SoftDataset, mut out: W) -> Result<()> {
    writeln!(out, "# provenance: {}", ds.provenance())?;
    let with_truth = ds.has_true_labels();
    let mut header = ds.feature_names().join(",");
    header.push(',');
    header.push_str(SOFT_LABEL_COLUMN);
    if with_truth {
        header.push(',');
        header.push_str(TRUE_LABEL_COLUMN);
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for s in ds.samples() {
        line.clear();
        for x in &s.features {
            line.push_str(&x.to_string());
            line.push(',');
        }
        line.push_str(&s.soft_label.to_string());
        if with_truth {
            line.push_str(if s.true_label == Some(true) { ",1" } else { ",0" });
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> CsvSchema {
        CsvSchema {
            feature_columns: vec!["a".into(), "b".into()],
            soft_label_column: "s".into(),
            true_label_column: Some("y".into()),
        }
    }

    #[test]
    fn three_rows_round_trip() {
        let text = "a,b,s,y\n1,2,1.0,1\n3,4,0.0,0\n5,6,0.5,1\n";
        let ds = read_csv(text.as_bytes(), Some(&schema())).unwrap();
        assert_eq!(ds.soft_labels(), vec![1.0, 0.0, 0.5]);
        assert_eq!(ds.true_labels().unwrap(), vec![true, false, true]);
        assert_eq!(ds.samples()[2].features, vec![5.0, 6.0]);
        assert_eq!(ds.provenance(), Provenance::Loaded);
    }

    #[test]
    fn out_of_range_names_row() {
        let text = "a,b,s,y\n1,2,1.0,1\n3,4,1.2,0\n";
        match read_csv(text.as_bytes(), Some(&schema())) {
            Err(Error::Csv { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "s");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let err = read_csv("a,b,s,y\n".as_bytes(), Some(&schema())).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn non_numeric_and_ragged_rows() {
        let err = read_csv("a,b,s,y\n1,x,0.5,1\n".as_bytes(), Some(&schema())).unwrap_err();
        assert!(matches!(err, Error::Csv { row: 1, ref column, .. } if column == "b"));
        let err = read_csv("a,b,s,y\n1,2,0.5,1\n1,2,0.5\n".as_bytes(), Some(&schema())).unwrap_err();
        assert!(matches!(err, Error::Csv { row: 2, .. }));
        let err = read_csv("a,b,s,y\n1,,0.5,1\n".as_bytes(), Some(&schema())).unwrap_err();
        assert!(err.to_string().contains("missing value"));
    }

    #[test]
    fn missing_file_is_reported() {
        let err = load_csv("/definitely/not/here.csv", None).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn written_file_reads_back_exactly() {
        let samples = vec![
            SoftSample::new(vec![0.1 + 0.2, -1e-300], 1.0 / 3.0, Some(true)),
            SoftSample::new(vec![std::f64::consts::PI, 2.0], 0.0, Some(false)),
        ];
        let ds = SoftDataset::new(samples, vec!["u".into(), "v".into()], Provenance::Gscar).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# provenance: gscar\n"));
        let back = read_csv(text.as_bytes(), None).unwrap();
        assert_eq!(back, ds);
    }
}
