use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{EmpiricalSample, LabeledSample};

/// Column holding class labels: a header name or a zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

impl DatasetFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        DatasetFile {
            path: path.into(),
            has_header: false,
            label_column: None,
        }
    }

    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }

    pub fn with_labels(mut self, column: Option<LabelColumn>) -> Self {
        self.label_column = column;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Unlabeled(EmpiricalSample),
    Labeled(LabeledSample),
}

impl Dataset {
    pub fn sample(&self) -> &EmpiricalSample {
        match self {
            Dataset::Unlabeled(s) => s,
            Dataset::Labeled(l) => l.sample(),
        }
    }

    pub fn labeled(&self) -> Option<&LabeledSample> {
        match self {
            Dataset::Labeled(l) => Some(l),
            Dataset::Unlabeled(_) => None,
        }
    }
}

/// Reads a comma-separated file. Row order is preserved; labels become dense
/// ids `0..K` in order of first appearance, with the original strings kept
/// as class names.
pub fn load_dataset(file: &DatasetFile) -> Result<Dataset> {
    let path = &file.path;
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.clone(),
        line,
        msg,
    };
    let handle = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(file.has_header)
        .trim(csv::Trim::All)
        .from_reader(handle);

    let label_idx = match &file.label_column {
        None => None,
        Some(LabelColumn::Index(i)) => Some(*i),
        Some(LabelColumn::Name(name)) => {
            if !file.has_header {
                return Err(Error::Config(format!(
                    "label column {name:?} given by name but the file has no header"
                )));
            }
            let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
            Some(
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| parse_err(1, format!("no column named {name:?}")))?,
            )
        }
    };

    let mut dim = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if let Some(li) = label_idx {
            if li >= record.len() {
                return Err(parse_err(
                    line,
                    format!("label column {li} out of range ({} fields)", record.len()),
                ));
            }
        }
        let mut width = 0;
        for (k, field) in record.iter().enumerate() {
            if Some(k) == label_idx {
                let next = names.len();
                let id = *ids.entry(field.to_string()).or_insert_with(|| {
                    names.push(field.to_string());
                    next
                });
                labels.push(id);
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("column {k}: cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {k}: non-finite value {field:?}")));
            }
            data.push(v);
            width += 1;
        }
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(parse_err(line, format!("expected {d} numeric columns, found {width}")));
            }
            _ => {}
        }
    }

    let dim = dim.ok_or_else(|| parse_err(0, "file contains no data rows".into()))?;
    if dim == 0 {
        return Err(parse_err(0, "no numeric columns".into()));
    }
    let sample = EmpiricalSample::from_flat(dim, data)?;
    Ok(match label_idx {
        None => Dataset::Unlabeled(sample),
        Some(_) => Dataset::Labeled(LabeledSample::new(sample, labels, names)?),
    })
}

/// Writes a sample as headerless CSV with shortest round-trip formatting.
/// With `labels`, the class name is appended as the last column.
pub fn write_sample_csv(path: &Path, sample: &EmpiricalSample, labels: Option<&LabeledSample>) -> Result<()> {
    let mut out = String::new();
    for (i, row) in sample.iter().enumerate() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&fields.join(","));
        if let Some(l) = labels {
            out.push(',');
            out.push_str(&l.class_names()[l.labels()[i]]);
        }
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(out.as_bytes())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn headerless_unlabeled() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "1,2\n3,4\n5,6\n");
        let d = load_dataset(&DatasetFile::new(p)).unwrap();
        let s = d.sample();
        assert_eq!((s.len(), s.dim()), (3, 2));
        assert_eq!(s.point(2), &[5.0, 6.0]);
    }

    #[test]
    fn labels_by_name_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "l.csv", "x,y,cls\n0,0,b\n1,1,a\n2,2,b\n");
        let f = DatasetFile::new(&p)
            .with_header(true)
            .with_labels(Some(LabelColumn::Name("cls".into())));
        let d = load_dataset(&f).unwrap();
        let l = d.labeled().unwrap();
        assert_eq!(l.num_classes(), 2);
        assert_eq!(l.labels(), &[0, 1, 0]);
        assert_eq!(l.class_names(), &["b".to_string(), "a".to_string()]);
        assert_eq!(l.sample().dim(), 2);

        let f = DatasetFile::new(&p)
            .with_header(true)
            .with_labels(Some(LabelColumn::Index(2)));
        assert_eq!(load_dataset(&f).unwrap().labeled().unwrap().labels(), &[0, 1, 0]);
    }

    #[test]
    fn nan_row_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "n.csv", "1,2\n3,NaN\n");
        let err = load_dataset(&DatasetFile::new(p)).unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("non-finite"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(&dir, "e.csv", "");
        assert!(load_dataset(&DatasetFile::new(empty)).is_err());
        let ragged = write(&dir, "r.csv", "1,2\n3\n");
        assert!(load_dataset(&DatasetFile::new(ragged)).is_err());
        let text = write(&dir, "t.csv", "1,2\n3,abc\n");
        assert!(matches!(
            load_dataset(&DatasetFile::new(text)),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(load_dataset(&DatasetFile::new(dir.path().join("missing.csv"))).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn write_then_load_is_identity(
            rows in prop::collection::vec(prop::collection::vec(-1e12f64..1e12, 3), 1..20)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("s.csv");
            let s = EmpiricalSample::new(rows).unwrap();
            write_sample_csv(&p, &s, None).unwrap();
            let back = load_dataset(&DatasetFile::new(&p)).unwrap();
            prop_assert_eq!(back.sample(), &s);
        }
    }
}
