//! Canonical CSV form of a [`LabeledDataset`].
//!
//! UTF-8, comma separated, `\n` terminated, header
//! `record_id,<features...>,persona_id,label`. Missing cells are empty fields,
//! labels are written as tokens and numbers use at most six significant digits,
//! switching to exponent form only outside `[1e-3, 1e6)`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::choice::PrivacyChoice;
use super::record::{LabeledDataset, PrivacyRecord, Value};
use super::schema::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let ax = x.abs();
    if (1e-3..1e6).contains(&ax) {
        let magnitude = ax.log10().floor() as i32;
        let decimals = (5 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = trim_fraction(&s);
        if s == "-0" {
            "0".to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Cat(t) => t.clone(),
        Value::Num(x) => format_number(*x),
        Value::Missing => String::new(),
    }
}

pub fn write_dataset<W: Write>(ds: &LabeledDataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(ds.schema.header())?;
    let mut row = Vec::with_capacity(ds.schema.len() + 3);
    for r in &ds.records {
        row.clear();
        row.push(r.record_id.to_string());
        row.extend(r.values.iter().map(cell));
        row.push(r.persona_id.map(|p| p.to_string()).unwrap_or_default());
        row.push(r.label.map(|l| l.token().to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn to_csv_bytes(ds: &LabeledDataset) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf)?;
    Ok(buf)
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_csv_bytes(ds)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_dataset<R: Read>(
    input: R,
    schema: &FeatureSchema,
    provenance: &str,
) -> Result<LabeledDataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = rdr.records();
    let expected = schema.header();
    let header = match rows.next() {
        Some(h) => h?,
        None => {
            return Err(Error::SchemaMismatch {
                row: 1,
                column: "*".into(),
                message: "missing header".into(),
            })
        }
    };
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        let column = expected
            .iter()
            .enumerate()
            .find(|(i, e)| got.get(*i) != Some(&e.as_str()))
            .map(|(_, e)| e.clone())
            .unwrap_or_else(|| "*".into());
        return Err(Error::SchemaMismatch {
            row: 1,
            column,
            message: format!("header {got:?} does not match {expected:?}"),
        });
    }

    let mut records = Vec::new();
    for (i, row) in rows.enumerate() {
        let line = i + 2;
        let row = row?;
        if row.len() != expected.len() {
            return Err(Error::SchemaMismatch {
                row: line,
                column: "*".into(),
                message: format!("{} fields, expected {}", row.len(), expected.len()),
            });
        }
        let parse_err = |column: &str, message: String| Error::Parse {
            row: line,
            column: column.to_string(),
            message,
        };
        let record_id: u64 = row[0]
            .trim()
            .parse()
            .map_err(|e| parse_err("record_id", format!("{:?}: {e}", &row[0])))?;
        let mut values = Vec::with_capacity(schema.len());
        for (j, feature) in schema.features.iter().enumerate() {
            let raw = &row[j + 1];
            let v = if raw.is_empty() {
                Value::Missing
            } else {
                match &feature.kind {
                    FeatureKind::Categorical { domain } => {
                        if !domain.iter().any(|t| t == raw) {
                            return Err(Error::SchemaMismatch {
                                row: line,
                                column: feature.name.clone(),
                                message: format!("token `{raw}` not in domain"),
                            });
                        }
                        Value::Cat(raw.to_string())
                    }
                    FeatureKind::Numeric { min, max, .. } => {
                        let x: f64 = raw
                            .trim()
                            .parse()
                            .map_err(|e| parse_err(&feature.name, format!("{raw:?}: {e}")))?;
                        if !(x.is_finite() && x >= *min && x <= *max) {
                            return Err(Error::SchemaMismatch {
                                row: line,
                                column: feature.name.clone(),
                                message: format!("{x} outside [{min}, {max}]"),
                            });
                        }
                        Value::Num(x)
                    }
                }
            };
            values.push(v);
        }
        let persona_raw = &row[schema.len() + 1];
        let persona_id = if persona_raw.is_empty() {
            None
        } else {
            Some(
                persona_raw
                    .trim()
                    .parse()
                    .map_err(|e| parse_err("persona_id", format!("{persona_raw:?}: {e}")))?,
            )
        };
        let label_raw = &row[schema.len() + 2];
        let label = if label_raw.is_empty() {
            None
        } else {
            Some(PrivacyChoice::parse_canonical(label_raw).map_err(|_| Error::SchemaMismatch {
                row: line,
                column: "label".into(),
                message: format!("unknown choice `{label_raw}`"),
            })?)
        };
        records.push(PrivacyRecord {
            record_id,
            values,
            label,
            persona_id,
        });
    }
    LabeledDataset::new(schema.clone(), records, provenance)
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, schema, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(12.0), "12");
        assert_eq!(format_number(3.5), "3.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333");
        assert_eq!(format_number(123456.7), "123457");
        assert_eq!(format_number(0.001), "0.001");
        assert_eq!(format_number(0.0001234), "1.234e-4");
        assert_eq!(format_number(2.5e7), "2.5e7");
        assert_eq!(format_number(-7.25), "-7.25");
        assert_eq!(format_number(999999.0), "999999");
    }

    #[test]
    fn formatted_numbers_parse_back_to_six_digits() {
        for &x in &[0.00123456789, 1.23456789, 98765.4321, 5.5e-9, 7.7e12] {
            let y: f64 = format_number(x).parse().unwrap();
            assert!(((x - y) / x).abs() < 5e-6, "{x} -> {y}");
        }
    }

    const FIXTURE: &str = "record_id,context,permission,hour_of_day,prior_denials,persona_id,label\n\
        1,social,camera,13,0,2,Allow\n\
        2,finance,,7.5,3,,Deny\n\
        3,health,location,,12,4,Ask\n";

    #[test]
    fn reads_in_order_and_round_trips() {
        let schema = FeatureSchema::default_privacy();
        let ds = read_dataset(FIXTURE.as_bytes(), &schema, "fixture").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(
            ds.records.iter().map(|r| r.record_id).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert!(ds.records[1].values[1].is_missing());
        assert!(ds.records[2].values[2].is_missing());
        assert_eq!(ds.records[1].persona_id, None);
        assert_eq!(ds.records[2].label, Some(PrivacyChoice::Ask));
        assert_eq!(String::from_utf8(to_csv_bytes(&ds).unwrap()).unwrap(), FIXTURE);
    }

    #[test]
    fn header_without_label_is_rejected() {
        let schema = FeatureSchema::default_privacy();
        let text = "record_id,context,permission,hour_of_day,prior_denials,persona_id\n1,social,camera,1,0,1\n";
        assert!(matches!(
            read_dataset(text.as_bytes(), &schema, "x"),
            Err(Error::SchemaMismatch { row: 1, .. })
        ));
    }

    #[test]
    fn located_cell_errors() {
        let schema = FeatureSchema::default_privacy();
        let bad_num = "record_id,context,permission,hour_of_day,prior_denials,persona_id,label\n\
            1,social,camera,abc,0,,Allow\n";
        match read_dataset(bad_num.as_bytes(), &schema, "x") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!((row, column.as_str()), (2, "hour_of_day"))
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_token = "record_id,context,permission,hour_of_day,prior_denials,persona_id,label\n\
            1,social,camera,1,0,,Allow\n\
            2,gaming,camera,1,0,,Allow\n";
        match read_dataset(bad_token.as_bytes(), &schema, "x") {
            Err(Error::SchemaMismatch { row, column, .. }) => {
                assert_eq!((row, column.as_str()), (3, "context"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let ds = LabeledDataset::new(FeatureSchema::default_privacy(), vec![], "e").unwrap();
        assert_eq!(
            String::from_utf8(to_csv_bytes(&ds).unwrap()).unwrap(),
            "record_id,context,permission,hour_of_day,prior_denials,persona_id,label\n"
        );
    }

    #[test]
    fn missing_numeric_is_empty_not_nan() {
        let schema = FeatureSchema::default_privacy();
        let ds = LabeledDataset::new(
            schema,
            vec![PrivacyRecord::new(
                9,
                vec![Value::cat("social"), Value::cat("camera"), Value::Missing, Value::Num(2.0)],
                Some(PrivacyChoice::Allow),
            )],
            "m",
        )
        .unwrap();
        let text = String::from_utf8(to_csv_bytes(&ds).unwrap()).unwrap();
        assert!(text.ends_with("9,social,camera,,2,,Allow\n"));
        assert!(!text.contains("NaN"));
    }
}
