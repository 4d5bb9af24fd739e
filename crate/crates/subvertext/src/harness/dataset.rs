//! Dataset ingestion: JSONL and CSV, classification or NLI pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(DatasetFormat::Jsonl),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown dataset format '{other}' (expected jsonl or csv)"
            ))),
        }
    }
}

/// Which half of an NLI pair gets perturbed. The other half still reaches
/// the target on every query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairField {
    Premise,
    Hypothesis,
}

impl std::str::FromStr for PairField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "premise" => Ok(PairField::Premise),
            "hypothesis" => Ok(PairField::Hypothesis),
            other => Err(Error::InvalidConfig(format!(
                "unknown attack field '{other}' (expected premise or hypothesis)"
            ))),
        }
    }
}

/// Column/field names, with the conventional defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub text_field: String,
    pub premise_field: String,
    pub hypothesis_field: String,
    pub label_field: String,
    pub id_field: String,
    /// Field perturbed when a row is a premise/hypothesis pair.
    pub attack_field: PairField,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        DatasetSchema {
            text_field: "text".into(),
            premise_field: "premise".into(),
            hypothesis_field: "hypothesis".into(),
            label_field: "label".into(),
            id_field: "id".into(),
            attack_field: PairField::Hypothesis,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplePayload {
    Text(String),
    Pair {
        premise: String,
        hypothesis: String,
        attacked: PairField,
    },
}

impl SamplePayload {
    pub fn attacked_text(&self) -> &str {
        match self {
            SamplePayload::Text(text) => text,
            SamplePayload::Pair {
                premise,
                hypothesis,
                attacked,
            } => match attacked {
                PairField::Premise => premise,
                PairField::Hypothesis => hypothesis,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub payload: SamplePayload,
    pub label: Label,
}

fn bad_row(line: usize, message: impl Into<String>) -> Error {
    Error::Dataset {
        line,
        message: message.into(),
    }
}

fn parse_label(raw: &serde_json::Value, line: usize) -> Result<Label> {
    match raw {
        serde_json::Value::Number(n) => n
            .as_u64()
            .map(|id| Label::new(id as usize))
            .ok_or_else(|| bad_row(line, format!("label {n} is not a non-negative integer"))),
        serde_json::Value::String(s) => s
            .trim()
            .parse::<usize>()
            .map(Label::new)
            .map_err(|_| bad_row(line, format!("label '{s}' is not an integer class index"))),
        other => Err(bad_row(line, format!("label has unsupported type: {other}"))),
    }
}

fn record_from_object(
    object: &serde_json::Map<String, serde_json::Value>,
    schema: &DatasetSchema,
    line: usize,
) -> Result<DatasetRecord> {
    let label_value = object
        .get(&schema.label_field)
        .ok_or_else(|| bad_row(line, format!("missing label field '{}'", schema.label_field)))?;
    let label = parse_label(label_value, line)?;
    let id = match object.get(&schema.id_field) {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Number(n)) => n.to_string(),
        _ => format!("line-{line}"),
    };
    let as_text = |value: &serde_json::Value| -> Option<String> {
        value.as_str().map(|s| s.to_string())
    };

    let premise = object.get(&schema.premise_field).and_then(as_text);
    let hypothesis = object.get(&schema.hypothesis_field).and_then(as_text);
    let payload = match (premise, hypothesis) {
        (Some(premise), Some(hypothesis)) => SamplePayload::Pair {
            premise,
            hypothesis,
            attacked: schema.attack_field,
        },
        _ => {
            let text = object
                .get(&schema.text_field)
                .and_then(as_text)
                .ok_or_else(|| {
                    bad_row(
                        line,
                        format!(
                            "missing text field '{}' (or premise/hypothesis pair)",
                            schema.text_field
                        ),
                    )
                })?;
            SamplePayload::Text(text)
        }
    };
    if payload.attacked_text().trim().is_empty() {
        return Err(bad_row(line, "attacked field is empty"));
    }
    Ok(DatasetRecord { id, payload, label })
}

/// Load and validate a dataset. With `lenient`, malformed rows are
/// reported (with their line numbers) in the returned warning list and
/// skipped; otherwise the first malformed row is fatal.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    schema: &DatasetSchema,
    lenient: bool,
) -> Result<(Vec<DatasetRecord>, Vec<String>)> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut push = |result: Result<DatasetRecord>| -> Result<()> {
        match result {
            Ok(record) => records.push(record),
            Err(e) if lenient => warnings.push(e.to_string()),
            Err(e) => return Err(e),
        }
        Ok(())
    };
    match format {
        DatasetFormat::Jsonl => {
            let content = std::fs::read_to_string(path)?;
            for (index, raw_line) in content.lines().enumerate() {
                let line = index + 1;
                if raw_line.trim().is_empty() {
                    continue;
                }
                let parsed: Result<DatasetRecord> = serde_json::from_str::<serde_json::Value>(raw_line)
                    .map_err(|e| bad_row(line, format!("invalid JSON: {e}")))
                    .and_then(|value| {
                        value
                            .as_object()
                            .ok_or_else(|| bad_row(line, "row is not a JSON object"))
                            .and_then(|object| record_from_object(object, schema, line))
                    });
                push(parsed)?;
            }
        }
        DatasetFormat::Csv => {
            let mut reader = csv::Reader::from_path(path)?;
            let headers = reader.headers().map_err(|e| bad_row(1, e.to_string()))?.clone();
            for (index, row) in reader.records().enumerate() {
                let line = index + 2; // header is line 1
                let parsed: Result<DatasetRecord> = row
                    .map_err(|e| bad_row(line, e.to_string()))
                    .and_then(|record| {
                        let mut object = serde_json::Map::new();
                        for (header, value) in headers.iter().zip(record.iter()) {
                            if !value.is_empty() {
                                object.insert(
                                    header.to_string(),
                                    serde_json::Value::String(value.to_string()),
                                );
                            }
                        }
                        record_from_object(&object, schema, line)
                    });
                push(parsed)?;
            }
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "dataset {} contains no usable records",
            path.display()
        )));
    }
    Ok((records, warnings))
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Dataset {
            line: 0,
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "subvertext-dataset-{}-{name}",
            std::process::id()
        ));
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn jsonl_classification_row() {
        let path = write_temp(
            "cls.jsonl",
            "{\"text\": \"nice place\", \"label\": 1}\n{\"text\": \"bad food\", \"label\": 0}\n",
        );
        let (records, warnings) =
            load_dataset(&path, DatasetFormat::Jsonl, &DatasetSchema::default(), false).unwrap();
        assert_eq!(records.len(), 2);
        assert!(warnings.is_empty());
        assert_eq!(records[0].payload, SamplePayload::Text("nice place".into()));
        assert_eq!(records[0].label, Label::new(1));
        assert_eq!(records[0].id, "line-1");
    }

    #[test]
    fn jsonl_pair_row_attacks_premise_when_asked() {
        let path = write_temp(
            "nli.jsonl",
            "{\"premise\": \"p text\", \"hypothesis\": \"h text\", \"label\": 2}\n",
        );
        let schema = DatasetSchema {
            attack_field: PairField::Premise,
            ..DatasetSchema::default()
        };
        let (records, _) = load_dataset(&path, DatasetFormat::Jsonl, &schema, false).unwrap();
        assert_eq!(records[0].payload.attacked_text(), "p text");
        match &records[0].payload {
            SamplePayload::Pair { attacked, .. } => assert_eq!(*attacked, PairField::Premise),
            other => panic!("expected pair, got {other:?}"),
        }
    }

    #[test]
    fn missing_label_is_a_line_numbered_error() {
        let path = write_temp(
            "broken.jsonl",
            "{\"text\": \"ok\", \"label\": 1}\n{\"text\": \"no label\"}\n",
        );
        let err = load_dataset(&path, DatasetFormat::Jsonl, &DatasetSchema::default(), false)
            .unwrap_err();
        assert!(err.to_string().contains("line 2"), "got: {err}");
    }

    #[test]
    fn lenient_mode_skips_and_reports() {
        let path = write_temp(
            "lenient.jsonl",
            "{\"text\": \"ok\", \"label\": 1}\nnot json\n{\"text\": \"\", \"label\": 0}\n",
        );
        let (records, warnings) =
            load_dataset(&path, DatasetFormat::Jsonl, &DatasetSchema::default(), true).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].contains("line 2"));
        assert!(warnings[1].contains("line 3"));
    }

    #[test]
    fn csv_rows_parse_with_header_line_offset() {
        let path = write_temp("data.csv", "text,label,id\nnice spot,1,a7\n,0,b2\n");
        let (records, warnings) =
            load_dataset(&path, DatasetFormat::Csv, &DatasetSchema::default(), true).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].id, "a7");
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("line 3"), "got: {}", warnings[0]);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let path = write_temp("empty.jsonl", "\n");
        assert!(
            load_dataset(&path, DatasetFormat::Jsonl, &DatasetSchema::default(), false).is_err()
        );
    }
}
