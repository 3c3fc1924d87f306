//! CSV datasets (`label,x1,...,xd` per row) and JSON report files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

pub fn read_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Parses dataset text; `origin` only labels error messages.
pub fn parse_csv(text: &str, origin: impl AsRef<Path>) -> Result<LabeledDataset> {
    let origin = origin.as_ref();
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut fields = record.iter();
        let raw_label = fields.next().unwrap_or("");
        let label = match raw_label.parse::<f64>() {
            Ok(v) if v == 1.0 => Label::Positive,
            Ok(v) if v == -1.0 => Label::Negative,
            _ => return Err(err(line, format!("label must be +1 or -1, got {raw_label:?}"))),
        };
        let x = fields
            .enumerate()
            .map(|(k, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line, format!("field {} is not a finite number: {f:?}", k + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None if x.is_empty() => return Err(err(line, "row has no coordinates".into())),
            None => dim = Some(x.len()),
            Some(d) if d != x.len() => {
                return Err(err(
                    line,
                    format!("ragged row: expected {d} coordinates, found {}", x.len()),
                ))
            }
            Some(_) => {}
        }
        points.push(x);
        labels.push(label);
    }
    let dim = dim.ok_or_else(|| err(0, "no data rows".into()))?;
    LabeledDataset::with_dim(dim, points, labels).map_err(|e| err(0, e.to_string()))
}

pub fn to_csv_string(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    for (x, y) in ds.iter() {
        out.push_str(&y.to_string());
        for v in x {
            // `{}` on f64 prints the shortest representation that round-trips
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

/// Point sets without labels share the dataset format; labels are ignored.
pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    Ok(read_csv(path)?.points().to_vec())
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Alias kept for the report-writing call sites.
pub fn write_report<T: Serialize + ?Sized>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_rows() {
        let ds = parse_csv("1,0.5,0.5\n-1,-0.5,-0.5", "mem").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.label(1), Label::Negative);
    }

    #[test]
    fn accepts_all_label_spellings() {
        let ds = parse_csv("+1,1\n-1,2\n1,3\n1.0,4\n", "mem").unwrap();
        assert_eq!(ds.len(), 4);
    }

    #[test]
    fn ragged_row_reports_line_two() {
        let err = parse_csv("1,0.5\n-1,0.1,0.2", "mem").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("ragged"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_and_bad_labels() {
        assert!(matches!(
            parse_csv("1,0.5\n1,abc\n", "mem"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv("1,0.5\n0,1\n", "mem"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_csv("", "mem"), Err(Error::Parse { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = LabeledDataset::new(
            vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-17, 7.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        write_csv(&ds, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), ds);
    }
}
