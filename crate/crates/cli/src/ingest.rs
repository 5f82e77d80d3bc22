//! File ingestion and export. Measurements travel as CSV or JSONL
//! (chosen by extension), model metadata as CSV, instance logs as JSONL.
//! A field map file renames external headers onto the canonical schema so
//! foreign logs load without rewriting.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::store::{InstanceRecord, Measurement, ModelMeta, StoreBuilder};

pub const MEASUREMENT_FIELDS: &[&str] =
    &["model_id", "step", "benchmark", "subtask", "metric", "value"];
pub const MODEL_FIELDS: &[&str] =
    &["model_id", "group", "params", "tokens", "flops", "seed", "data_order_seed"];
pub const INSTANCE_FIELDS: &[&str] = &[
    "model_id",
    "step",
    "benchmark",
    "subtask",
    "instance_id",
    "primary_score",
    "nll_nats",
    "num_bytes",
];

/// Header renames, canonical name -> external name. Loaded from lines of
/// `canonical=external`; blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default)]
pub struct FieldMap {
    renames: BTreeMap<String, String>,
}

impl FieldMap {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let mut renames = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (canonical, external) = line.split_once('=').ok_or_else(|| {
                DataError::Malformed {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: "expected canonical=external".into(),
                }
            })?;
            let canonical = canonical.trim().to_string();
            let external = external.trim().to_string();
            let known = MEASUREMENT_FIELDS.contains(&canonical.as_str())
                || MODEL_FIELDS.contains(&canonical.as_str())
                || INSTANCE_FIELDS.contains(&canonical.as_str());
            if !known {
                return Err(DataError::Malformed {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: format!("unknown canonical field {canonical:?}"),
                });
            }
            if external.is_empty() {
                return Err(DataError::Malformed {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: "external name must be nonempty".into(),
                });
            }
            if renames.insert(canonical.clone(), external).is_some() {
                return Err(DataError::Malformed {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: format!("field {canonical:?} mapped twice"),
                });
            }
        }
        Ok(FieldMap { renames })
    }

    fn is_empty(&self) -> bool {
        self.renames.is_empty()
    }

    /// external header -> canonical header, for rewriting on read.
    fn inverse(&self) -> BTreeMap<&str, &str> {
        self.renames.iter().map(|(c, e)| (e.as_str(), c.as_str())).collect()
    }
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> DataError {
    DataError::Malformed { path: path.display().to_string(), line, message: message.into() }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    raw: &str,
) -> Result<T, DataError> {
    raw.trim()
        .parse()
        .map_err(|_| malformed(path, line, format!("bad {field}: {raw:?}")))
}

fn optional_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    raw: Option<&str>,
) -> Result<Option<T>, DataError> {
    match raw {
        None => Ok(None),
        Some(s) if s.trim().is_empty() => Ok(None),
        Some(s) => parse_field(path, line, field, s).map(Some),
    }
}

/// Reads a CSV header, applies the field map, and indexes columns by
/// canonical name. Unmapped extra columns are an error without a field
/// map (typos must not silently drop data) and ignored with one, since a
/// foreign log may carry columns we never modeled.
fn index_header(
    path: &Path,
    headers: &csv::StringRecord,
    fields: &[&str],
    required: &[&str],
    map: &FieldMap,
) -> Result<BTreeMap<String, usize>, DataError> {
    let inverse = map.inverse();
    let mut index = BTreeMap::new();
    for (col, raw) in headers.iter().enumerate() {
        let name = inverse.get(raw).copied().unwrap_or(raw);
        if !fields.contains(&name) {
            if map.is_empty() {
                return Err(malformed(path, 1, format!("unknown column {raw:?}")));
            }
            continue;
        }
        if index.insert(name.to_string(), col).is_some() {
            return Err(malformed(path, 1, format!("column {name:?} appears twice")));
        }
    }
    for &req in required {
        if !index.contains_key(req) {
            return Err(malformed(path, 1, format!("missing column {req:?}")));
        }
    }
    Ok(index)
}

fn cell<'a>(record: &'a csv::StringRecord, index: &BTreeMap<String, usize>, field: &str) -> Option<&'a str> {
    index.get(field).and_then(|&col| record.get(col))
}

pub fn read_models_csv(path: &Path, map: &FieldMap) -> Result<Vec<ModelMeta>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| malformed(path, 1, e.to_string()))?.clone();
    let index = index_header(
        path,
        &headers,
        MODEL_FIELDS,
        &["model_id", "group", "params", "tokens"],
        map,
    )?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| malformed(path, line, e.to_string()))?;
        let model_id = cell(&record, &index, "model_id").unwrap_or("").trim().to_string();
        let group = cell(&record, &index, "group").unwrap_or("").trim().to_string();
        let params = parse_field(path, line, "params", cell(&record, &index, "params").unwrap_or(""))?;
        let tokens = parse_field(path, line, "tokens", cell(&record, &index, "tokens").unwrap_or(""))?;
        let flops = optional_field(path, line, "flops", cell(&record, &index, "flops"))?;
        let seed = optional_field(path, line, "seed", cell(&record, &index, "seed"))?;
        let data_order_seed =
            optional_field(path, line, "data_order_seed", cell(&record, &index, "data_order_seed"))?;
        let meta = ModelMeta::new(model_id, group, params, tokens, flops, seed, data_order_seed)
            .map_err(|e| malformed(path, line, e.to_string()))?;
        out.push(meta);
    }
    Ok(out)
}

fn read_measurements_csv(path: &Path, map: &FieldMap) -> Result<Vec<Measurement>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| malformed(path, 1, e.to_string()))?.clone();
    let index = index_header(
        path,
        &headers,
        MEASUREMENT_FIELDS,
        &["model_id", "step", "benchmark", "metric", "value"],
        map,
    )?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| malformed(path, line, e.to_string()))?;
        out.push(Measurement {
            model_id: cell(&record, &index, "model_id").unwrap_or("").trim().to_string(),
            step: parse_field(path, line, "step", cell(&record, &index, "step").unwrap_or(""))?,
            benchmark: cell(&record, &index, "benchmark").unwrap_or("").trim().to_string(),
            subtask: cell(&record, &index, "subtask")
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from),
            metric: cell(&record, &index, "metric").unwrap_or("").trim().to_string(),
            value: parse_field(path, line, "value", cell(&record, &index, "value").unwrap_or(""))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize, Serialize)]
struct RawMeasurement {
    model_id: String,
    step: u64,
    benchmark: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subtask: Option<String>,
    metric: String,
    value: f64,
}

/// JSONL lines are parsed into a generic map first so a field map can
/// rename keys before schema checking.
fn read_measurements_jsonl(path: &Path, map: &FieldMap) -> Result<Vec<Measurement>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let inverse = map.inverse();
    let mut out = Vec::new();
    for (idx, raw) in BufReader::new(file).lines().enumerate() {
        let line = idx + 1;
        let raw = raw.map_err(|e| DataError::io(path, e))?;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&raw)
            .map_err(|e| malformed(path, line, e.to_string()))?;
        let mut renamed = serde_json::Map::new();
        for (key, val) in value {
            let canonical = inverse.get(key.as_str()).copied().unwrap_or(key.as_str());
            if !MEASUREMENT_FIELDS.contains(&canonical) {
                if map.is_empty() {
                    return Err(malformed(path, line, format!("unknown field {key:?}")));
                }
                continue;
            }
            if renamed.insert(canonical.to_string(), val).is_some() {
                return Err(malformed(path, line, format!("field {canonical:?} appears twice")));
            }
        }
        let raw: RawMeasurement = serde_json::from_value(serde_json::Value::Object(renamed))
            .map_err(|e| malformed(path, line, e.to_string()))?;
        out.push(Measurement {
            model_id: raw.model_id,
            step: raw.step,
            benchmark: raw.benchmark,
            subtask: raw.subtask.filter(|s| !s.is_empty()),
            metric: raw.metric,
            value: raw.value,
        });
    }
    Ok(out)
}

pub fn read_measurements(path: &Path, map: &FieldMap) -> Result<Vec<Measurement>, DataError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_measurements_csv(path, map),
        Some("jsonl") => read_measurements_jsonl(path, map),
        other => Err(DataError::Invalid(format!(
            "unsupported measurement format {:?} for {}; expected .csv or .jsonl",
            other.unwrap_or(""),
            path.display()
        ))),
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct RawInstance {
    model_id: String,
    step: u64,
    benchmark: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subtask: Option<String>,
    instance_id: String,
    primary_score: f64,
    nll_nats: f64,
    num_bytes: u64,
}

pub fn read_instances_jsonl(path: &Path, map: &FieldMap) -> Result<Vec<InstanceRecord>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let inverse = map.inverse();
    let mut out = Vec::new();
    for (idx, raw) in BufReader::new(file).lines().enumerate() {
        let line = idx + 1;
        let raw = raw.map_err(|e| DataError::io(path, e))?;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&raw)
            .map_err(|e| malformed(path, line, e.to_string()))?;
        let mut renamed = serde_json::Map::new();
        for (key, val) in value {
            let canonical = inverse.get(key.as_str()).copied().unwrap_or(key.as_str());
            if !INSTANCE_FIELDS.contains(&canonical) {
                if map.is_empty() {
                    return Err(malformed(path, line, format!("unknown field {key:?}")));
                }
                continue;
            }
            if renamed.insert(canonical.to_string(), val).is_some() {
                return Err(malformed(path, line, format!("field {canonical:?} appears twice")));
            }
        }
        let raw: RawInstance = serde_json::from_value(serde_json::Value::Object(renamed))
            .map_err(|e| malformed(path, line, e.to_string()))?;
        out.push(InstanceRecord {
            model_id: raw.model_id,
            step: raw.step,
            benchmark: raw.benchmark,
            subtask: raw.subtask.filter(|s| !s.is_empty()),
            instance_id: raw.instance_id,
            primary_score: raw.primary_score,
            nll_nats: raw.nll_nats,
            num_bytes: raw.num_bytes,
        });
    }
    Ok(out)
}

/// Loads models plus optional measurement and instance files into a store.
pub fn load_store(
    models_path: &Path,
    measurement_paths: &[&Path],
    instance_paths: &[&Path],
    map: &FieldMap,
) -> Result<crate::store::EvalStore, DataError> {
    let mut builder = StoreBuilder::new();
    for meta in read_models_csv(models_path, map)? {
        builder.add_model(meta)?;
    }
    for path in measurement_paths {
        for m in read_measurements(path, map)? {
            builder.add_measurement(m)?;
        }
    }
    for path in instance_paths {
        for r in read_instances_jsonl(path, map)? {
            builder.add_instance(r)?;
        }
    }
    Ok(builder.build())
}

fn fmt_f64(v: f64) -> String {
    // Display gives the shortest string that round-trips the exact bits.
    format!("{v}")
}

pub fn write_measurements_csv(measurements: &[Measurement]) -> String {
    let mut out = String::from("model_id,step,benchmark,subtask,metric,value\n");
    for m in measurements {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.model_id,
            m.step,
            m.benchmark,
            m.subtask.as_deref().unwrap_or(""),
            m.metric,
            fmt_f64(m.value)
        ));
    }
    out
}

pub fn write_measurements_jsonl(measurements: &[Measurement]) -> String {
    let mut out = String::new();
    for m in measurements {
        let raw = RawMeasurement {
            model_id: m.model_id.clone(),
            step: m.step,
            benchmark: m.benchmark.clone(),
            subtask: m.subtask.clone(),
            metric: m.metric.clone(),
            value: m.value,
        };
        out.push_str(&serde_json::to_string(&raw).expect("measurement serializes"));
        out.push('\n');
    }
    out
}

pub fn write_models_csv(models: &[&ModelMeta]) -> String {
    let mut out = String::from("model_id,group,params,tokens,flops,seed,data_order_seed\n");
    for m in models {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m.model_id,
            m.group,
            m.params,
            m.tokens,
            fmt_f64(m.flops),
            m.seed.map(|s| s.to_string()).unwrap_or_default(),
            m.data_order_seed.map(|s| s.to_string()).unwrap_or_default(),
        ));
    }
    out
}

pub fn write_instances_jsonl(instances: &[InstanceRecord]) -> String {
    let mut out = String::new();
    for r in instances {
        let raw = RawInstance {
            model_id: r.model_id.clone(),
            step: r.step,
            benchmark: r.benchmark.clone(),
            subtask: r.subtask.clone(),
            instance_id: r.instance_id.clone(),
            primary_score: r.primary_score,
            nll_nats: r.nll_nats,
            num_bytes: r.num_bytes,
        };
        out.push_str(&serde_json::to_string(&raw).expect("instance serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn csv_measurements_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv = "model_id,step,benchmark,subtask,metric,value\n\
                   m0,10,bench,s1,primary,0.5\n\
                   m0,20,bench,,primary,0.625\n";
        let path = tmp_file(&dir, "m.csv", csv);
        let rows = read_measurements(&path, &FieldMap::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].subtask.as_deref(), Some("s1"));
        assert_eq!(rows[1].subtask, None);
        assert_eq!(write_measurements_csv(&rows), csv);
    }

    #[test]
    fn jsonl_measurements_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let jsonl = "{\"model_id\":\"m0\",\"step\":10,\"benchmark\":\"bench\",\
                     \"subtask\":\"s1\",\"metric\":\"primary\",\"value\":0.5}\n\
                     {\"model_id\":\"m0\",\"step\":20,\"benchmark\":\"bench\",\
                     \"metric\":\"primary\",\"value\":0.625}\n";
        let path = tmp_file(&dir, "m.jsonl", jsonl);
        let rows = read_measurements(&path, &FieldMap::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].subtask, None);
        assert_eq!(write_measurements_jsonl(&rows), jsonl);
    }

    #[test]
    fn unknown_column_is_rejected_without_field_map() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_file(
            &dir,
            "m.csv",
            "model_id,step,benchmark,metric,value,surprise\nm0,1,b,primary,0.5,x\n",
        );
        let err = read_measurements(&path, &FieldMap::default()).unwrap_err();
        assert!(err.to_string().contains("surprise"), "{err}");
    }

    #[test]
    fn field_map_renames_and_ignores_extras() {
        let dir = tempfile::tempdir().unwrap();
        let map_path = tmp_file(&dir, "map.txt", "# renames\nmodel_id=run\nvalue=score\n");
        let map = FieldMap::load(&map_path).unwrap();
        let path = tmp_file(
            &dir,
            "m.csv",
            "run,step,benchmark,metric,score,surprise\nm0,1,b,primary,0.5,x\n",
        );
        let rows = read_measurements(&path, &map).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].model_id, "m0");
        assert_eq!(rows[0].value, 0.5);
    }

    #[test]
    fn field_map_rejects_unknown_canonical_name() {
        let dir = tempfile::tempdir().unwrap();
        let map_path = tmp_file(&dir, "map.txt", "not_a_field=x\n");
        let err = FieldMap::load(&map_path).unwrap_err();
        assert!(err.to_string().contains("not_a_field"), "{err}");
    }

    #[test]
    fn malformed_rows_name_path_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_file(
            &dir,
            "m.csv",
            "model_id,step,benchmark,metric,value\nm0,ten,b,primary,0.5\n",
        );
        let err = read_measurements(&path, &FieldMap::default()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("m.csv:2"), "{text}");
        assert!(text.contains("step"), "{text}");
    }

    #[test]
    fn jsonl_bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_file(
            &dir,
            "m.jsonl",
            "{\"model_id\":\"m0\",\"step\":1,\"benchmark\":\"b\",\"metric\":\"p\",\"value\":0.5}\nnot json\n",
        );
        let err = read_measurements(&path, &FieldMap::default()).unwrap_err();
        assert!(err.to_string().contains("m.jsonl:2"), "{err}");
    }

    #[test]
    fn models_csv_optional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_file(
            &dir,
            "models.csv",
            "model_id,group,params,tokens,flops,seed,data_order_seed\n\
             m0,g0,1000,2000,,7,\n\
             m1,g1,1000,2000,5e9,,3\n",
        );
        let models = read_models_csv(&path, &FieldMap::default()).unwrap();
        assert_eq!(models[0].flops, 6.0 * 1000.0 * 2000.0);
        assert_eq!(models[0].seed, Some(7));
        assert_eq!(models[0].data_order_seed, None);
        assert_eq!(models[1].flops, 5e9);
        assert_eq!(models[1].data_order_seed, Some(3));
    }

    #[test]
    fn models_csv_minimal_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path =
            tmp_file(&dir, "models.csv", "model_id,group,params,tokens\nm0,g0,1000,2000\n");
        let models = read_models_csv(&path, &FieldMap::default()).unwrap();
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].seed, None);
    }

    #[test]
    fn instances_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let jsonl = "{\"model_id\":\"m0\",\"step\":1,\"benchmark\":\"b\",\
                     \"instance_id\":\"q1\",\"primary_score\":1.0,\
                     \"nll_nats\":0.6931471805599453,\"num_bytes\":12}\n";
        let path = tmp_file(&dir, "i.jsonl", jsonl);
        let rows = read_instances_jsonl(&path, &FieldMap::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].num_bytes, 12);
        assert_eq!(write_instances_jsonl(&rows), jsonl);
    }

    #[test]
    fn load_store_wires_everything() {
        let dir = tempfile::tempdir().unwrap();
        let models = tmp_file(&dir, "models.csv", "model_id,group,params,tokens\nm0,g0,10,10\n");
        let meas = tmp_file(
            &dir,
            "meas.csv",
            "model_id,step,benchmark,subtask,metric,value\nm0,1,b,,primary,0.5\n",
        );
        let inst = tmp_file(
            &dir,
            "inst.jsonl",
            "{\"model_id\":\"m0\",\"step\":1,\"benchmark\":\"b\",\"instance_id\":\"q1\",\
             \"primary_score\":1.0,\"nll_nats\":0.5,\"num_bytes\":4}\n",
        );
        let store =
            load_store(&models, &[meas.as_path()], &[inst.as_path()], &FieldMap::default())
                .unwrap();
        assert_eq!(store.n_models(), 1);
        assert_eq!(store.n_measurements(), 1);
        assert_eq!(store.n_instances(), 1);
    }
}
