//! CSV/JSON result tables and ARFF dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::MLDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::Unknown { kind: "format", name: other.to_string() }),
        }
    }
}

/// A row with a fixed column order for CSV output.
pub trait TableRow {
    fn header() -> Vec<&'static str>;
    fn fields(&self) -> Vec<String>;
}

/// Six-decimal rendering used for every float in CSV output.
pub fn fmt6(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        let s = format!("{v:.6}");
        if s == "-0.000000" {
            "0.000000".to_string()
        } else {
            s
        }
    }
}

/// Writes `rows` to `path`. JSON is an array of objects at full precision.
pub fn export_table<T: TableRow + Serialize>(rows: &[T], format: TableFormat, path: &Path) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(T::header())?;
            for r in rows {
                w.write_record(r.fields())?;
            }
            w.flush()?;
        }
        TableFormat::Json => {
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut w, rows)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn read_json_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn quote(name: &str) -> String {
    if name.chars().any(|c| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '\'' | '"' | '%')) {
        format!("'{}'", name.replace('\'', ""))
    } else {
        name.to_string()
    }
}

/// Dense ARFF with the labels first, announced MEKA-style in the relation.
pub fn write_arff(ds: &MLDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "@relation '{}: -C {}'", ds.name.replace('\'', ""), ds.label_count())?;
    writeln!(w)?;
    for name in &ds.label_names {
        writeln!(w, "@attribute {} {{0,1}}", quote(name))?;
    }
    for name in &ds.feature_names {
        writeln!(w, "@attribute {} numeric", quote(name))?;
    }
    writeln!(w)?;
    writeln!(w, "@data")?;
    for (x, y) in ds.features.iter().zip(&ds.labelsets) {
        let mut fields: Vec<String> = y.to_vec().iter().map(|b| b.to_string()).collect();
        fields.extend(x.iter().map(|v| format!("{v:e}")));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_arff_file, LabelSpec};
    use crate::labelset::Labelset;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    struct Row {
        name: String,
        value: f64,
    }

    impl TableRow for Row {
        fn header() -> Vec<&'static str> {
            vec!["name", "value"]
        }
        fn fields(&self) -> Vec<String> {
            vec![self.name.clone(), fmt6(self.value)]
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        export_table::<Row>(&[], TableFormat::Csv, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "name,value\n");
    }

    #[test]
    fn csv_uses_six_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![Row { name: "a,b".into(), value: 1.0 / 3.0 }];
        export_table(&rows, TableFormat::Csv, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "name,value\n\"a,b\",0.333333\n");
        assert_eq!(fmt6(-1e-9), "0.000000");
        assert_eq!(fmt6(f64::NAN), "NA");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        let rows = vec![Row { name: "x".into(), value: 0.1 + 0.2 }, Row { name: "y".into(), value: -1e-300 }];
        export_table(&rows, TableFormat::Json, &p).unwrap();
        let back: Vec<Row> = read_json_table(&p).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn arff_dump_round_trips() {
        let ds = MLDataset::new(
            "dump test",
            vec![vec![0.1, -2.5], vec![1e-7, 3.0]],
            vec![Labelset::from_slice(&[1, 0]).unwrap(), Labelset::from_slice(&[0, 1]).unwrap()],
            vec!["l one".into(), "l2".into()],
            vec!["f1".into(), "f2".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.arff");
        write_arff(&ds, &p).unwrap();
        let back = parse_arff_file(&p, &LabelSpec::Meka).unwrap();
        assert_eq!(back, ds);
    }
}
