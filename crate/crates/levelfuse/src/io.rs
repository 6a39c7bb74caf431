//! File formats: RFC-4180 CSV data with a JSON schema sidecar, coefficient
//! documents, and the two-column segment input.
//!
//! The sidecar names each CSV column's role (`categorical`, `continuous`,
//! or `response`) and the task. Missing values are an error. Coefficient
//! files are JSON documents keyed by predictor and level label so they
//! survive level re-ordering.

use crate::coefficients::Coefficients;
use crate::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::schema::{CategoricalSchema, SchemaBuilder};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Categorical,
    Continuous,
    Response,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
}

/// The schema sidecar: per-column roles plus the task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSpec {
    pub task: Task,
    pub columns: Vec<ColumnSpec>,
}

impl DataSpec {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: DataSpec =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("schema file: {e}")))?;
        let responses = spec
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Response)
            .count();
        if responses != 1 {
            return Err(Error::InvalidData(format!(
                "schema must name exactly one response column, found {responses}"
            )));
        }
        Ok(spec)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).map_err(io_err)?)?;
        Ok(())
    }
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

struct RawTable {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(RawTable { headers, rows })
}

fn column_plan(spec: &DataSpec, headers: &[String]) -> Result<Vec<(usize, ColumnRole)>> {
    spec.columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| *h == c.name)
                .map(|idx| (idx, c.role))
                .ok_or_else(|| {
                    Error::InvalidData(format!("column {:?} not found in the CSV header", c.name))
                })
        })
        .collect()
}

fn parse_number(field: &str, col: &str, row: usize) -> Result<f64> {
    if field.trim().is_empty() {
        return Err(Error::InvalidData(format!(
            "missing value in column {col:?}, row {}",
            row + 2
        )));
    }
    field.trim().parse().map_err(|_| {
        Error::InvalidData(format!(
            "non-numeric value {field:?} in column {col:?}, row {}",
            row + 2
        ))
    })
}

/// Loads a dataset, building the categorical schema from the data in
/// first-appearance order.
pub fn load_dataset(data_path: &Path, spec: &DataSpec) -> Result<Dataset> {
    let table = read_table(data_path)?;
    let plan = column_plan(spec, &table.headers)?;
    let cat_names: Vec<String> = spec
        .columns
        .iter()
        .filter(|c| c.role == ColumnRole::Categorical)
        .map(|c| c.name.clone())
        .collect();
    let mut builder = SchemaBuilder::new(cat_names);
    let mut cat_codes: Vec<Vec<u32>> = vec![Vec::new(); spec.columns.len()];
    let mut cont: Vec<Vec<f64>> = Vec::new();
    let mut cont_names = Vec::new();
    let mut y = Vec::new();

    for (row_idx, row) in table.rows.iter().enumerate() {
        let mut cat_j = 0usize;
        let mut cont_j = 0usize;
        for (ci, &(col_idx, role)) in plan.iter().enumerate() {
            let field = row.get(col_idx).ok_or_else(|| {
                Error::InvalidData(format!("row {} is short", row_idx + 2))
            })?;
            let name = &spec.columns[ci].name;
            match role {
                ColumnRole::Categorical => {
                    if field.trim().is_empty() {
                        return Err(Error::InvalidData(format!(
                            "missing value in column {name:?}, row {}",
                            row_idx + 2
                        )));
                    }
                    let code = builder.observe(cat_j, field.trim());
                    cat_codes[cat_j].push(code);
                    cat_j += 1;
                }
                ColumnRole::Continuous => {
                    if row_idx == 0 {
                        cont.push(Vec::new());
                        cont_names.push(name.clone());
                    }
                    cont[cont_j].push(parse_number(field, name, row_idx)?);
                    cont_j += 1;
                }
                ColumnRole::Response => {
                    y.push(parse_number(field, name, row_idx)?);
                }
            }
        }
    }
    let q = spec
        .columns
        .iter()
        .filter(|c| c.role == ColumnRole::Categorical)
        .count();
    cat_codes.truncate(q);
    let schema = builder.finish()?;
    Dataset::new(schema, cat_codes, cont, cont_names, y, spec.task)
}

/// Loads a dataset against an existing schema (the one a model was fitted
/// on); labels unseen in that schema get code 0, which predicts as a plain
/// intercept effect.
pub fn load_dataset_with_schema(
    data_path: &Path,
    spec: &DataSpec,
    schema: &CategoricalSchema,
) -> Result<Dataset> {
    let table = read_table(data_path)?;
    let plan = column_plan(spec, &table.headers)?;
    let q = schema.n_predictors();
    let mut cat_codes: Vec<Vec<u32>> = vec![Vec::new(); q];
    let mut cont: Vec<Vec<f64>> = Vec::new();
    let mut cont_names = Vec::new();
    let mut y = Vec::new();
    for (row_idx, row) in table.rows.iter().enumerate() {
        let mut cat_j = 0usize;
        let mut cont_j = 0usize;
        for (ci, &(col_idx, role)) in plan.iter().enumerate() {
            let field = row.get(col_idx).ok_or_else(|| {
                Error::InvalidData(format!("row {} is short", row_idx + 2))
            })?;
            let name = &spec.columns[ci].name;
            match role {
                ColumnRole::Categorical => {
                    if cat_j >= q {
                        return Err(Error::DimensionMismatch(
                            "more categorical columns than the schema has predictors".into(),
                        ));
                    }
                    let code = schema.level_code(cat_j, field.trim()).unwrap_or(0);
                    cat_codes[cat_j].push(code);
                    cat_j += 1;
                }
                ColumnRole::Continuous => {
                    if row_idx == 0 {
                        cont.push(Vec::new());
                        cont_names.push(name.clone());
                    }
                    cont[cont_j].push(parse_number(field, name, row_idx)?);
                    cont_j += 1;
                }
                ColumnRole::Response => y.push(parse_number(field, name, row_idx)?),
            }
        }
    }
    Dataset::new(schema.clone(), cat_codes, cont, cont_names, y, spec.task)
}

/// Writes a dataset back out as CSV (categorical labels, continuous values,
/// response), in schema column order followed by the response.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ds
        .schema()
        .predictors()
        .iter()
        .map(|p| p.name.clone())
        .collect();
    header.extend(ds.cont_names().iter().cloned());
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for j in 0..ds.q() {
            let code = ds.codes(j)[i];
            let label = &ds.schema().predictor(j).levels[code as usize - 1];
            row.push(label.clone());
        }
        for jc in 0..ds.n_cont() {
            row.push(format!("{}", ds.cont_col(jc)[i]));
        }
        row.push(format!("{}", ds.y()[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The matching sidecar for [`write_dataset_csv`] output.
pub fn spec_for_dataset(ds: &Dataset) -> DataSpec {
    let mut columns: Vec<ColumnSpec> = ds
        .schema()
        .predictors()
        .iter()
        .map(|p| ColumnSpec {
            name: p.name.clone(),
            role: ColumnRole::Categorical,
        })
        .collect();
    columns.extend(ds.cont_names().iter().map(|n| ColumnSpec {
        name: n.clone(),
        role: ColumnRole::Continuous,
    }));
    columns.push(ColumnSpec {
        name: "y".into(),
        role: ColumnRole::Response,
    });
    DataSpec {
        task: ds.task(),
        columns,
    }
}

/// Serializes coefficients keyed by predictor and level label.
pub fn coefficients_to_json(
    schema: &CategoricalSchema,
    cont_names: &[String],
    coef: &Coefficients,
) -> Value {
    let mut categorical = Map::new();
    for (j, pred) in schema.predictors().iter().enumerate() {
        let mut levels = Map::new();
        for (k, label) in pred.levels.iter().enumerate() {
            levels.insert(label.clone(), json!(coef.theta_cat[j][k]));
        }
        categorical.insert(pred.name.clone(), Value::Object(levels));
    }
    let mut continuous = Map::new();
    for (name, &v) in cont_names.iter().zip(&coef.theta_cont) {
        continuous.insert(name.clone(), json!(v));
    }
    json!({
        "alpha": coef.alpha,
        "categorical": categorical,
        "continuous": continuous,
    })
}

pub fn write_coefficients(
    path: &Path,
    schema: &CategoricalSchema,
    cont_names: &[String],
    coef: &Coefficients,
) -> Result<()> {
    let value = coefficients_to_json(schema, cont_names, coef);
    std::fs::write(path, serde_json::to_string_pretty(&value).map_err(io_err)?)?;
    Ok(())
}

/// Reads a coefficient document and also reconstructs the schema it implies
/// (predictors and levels in the stored order, which is sorted by name).
pub fn read_coefficients(path: &Path) -> Result<(CategoricalSchema, Vec<String>, Coefficients)> {
    let text = std::fs::read_to_string(path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("coefficients: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("coefficients file is not an object".into()))?;
    let alpha = obj
        .get("alpha")
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse("missing numeric alpha".into()))?;
    let cats = obj
        .get("categorical")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Parse("missing categorical map".into()))?;
    let mut predictors = Vec::new();
    let mut theta_cat = Vec::new();
    for (name, levels) in cats {
        let levels = levels
            .as_object()
            .ok_or_else(|| Error::Parse(format!("predictor {name:?} is not a map")))?;
        let mut label_list = Vec::with_capacity(levels.len());
        let mut values = Vec::with_capacity(levels.len());
        for (label, v) in levels {
            label_list.push(label.clone());
            values.push(v.as_f64().ok_or_else(|| {
                Error::Parse(format!("non-numeric coefficient for {name:?}/{label:?}"))
            })?);
        }
        predictors.push(crate::schema::Predictor {
            name: name.clone(),
            levels: label_list,
        });
        theta_cat.push(values);
    }
    let cont = obj
        .get("continuous")
        .and_then(Value::as_object)
        .cloned()
        .unwrap_or_default();
    let mut cont_names = Vec::new();
    let mut theta_cont = Vec::new();
    for (name, v) in &cont {
        cont_names.push(name.clone());
        theta_cont.push(
            v.as_f64()
                .ok_or_else(|| Error::Parse(format!("non-numeric coefficient for {name:?}")))?,
        );
    }
    let schema = CategoricalSchema::new(predictors)?;
    Ok((
        schema,
        cont_names,
        Coefficients {
            alpha,
            theta_cat,
            theta_cont,
        },
    ))
}

/// Aligns coefficients read from a file onto a target schema, matching
/// predictors by name and levels by label; levels absent from the file get
/// zero coefficients.
pub fn align_coefficients(
    file_schema: &CategoricalSchema,
    file_cont: &[String],
    coef: &Coefficients,
    target_schema: &CategoricalSchema,
    target_cont: &[String],
) -> Result<Coefficients> {
    let mut out = Coefficients::zeros(target_schema, target_cont.len());
    out.alpha = coef.alpha;
    for (tj, pred) in target_schema.predictors().iter().enumerate() {
        let fj = file_schema
            .predictors()
            .iter()
            .position(|p| p.name == pred.name)
            .ok_or_else(|| {
                Error::InvalidData(format!("coefficients missing predictor {:?}", pred.name))
            })?;
        for (tk, label) in pred.levels.iter().enumerate() {
            if let Some(code) = file_schema.level_code(fj, label) {
                out.theta_cat[tj][tk] = coef.theta_cat[fj][code as usize - 1];
            }
        }
    }
    for (tc, name) in target_cont.iter().enumerate() {
        if let Some(fc) = file_cont.iter().position(|n| n == name) {
            out.theta_cont[tc] = coef.theta_cont[fc];
        }
    }
    Ok(out)
}

/// Reads the two-column segment input: a `value,weight` CSV with a header.
pub fn read_segment_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let table = read_table(path)?;
    if table.headers.len() < 2 {
        return Err(Error::InvalidData(
            "segment input needs two columns: value, weight".into(),
        ));
    }
    let mut values = Vec::with_capacity(table.rows.len());
    let mut weights = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        values.push(parse_number(row.get(0).unwrap_or(""), &table.headers[0], i)?);
        weights.push(parse_number(row.get(1).unwrap_or(""), &table.headers[1], i)?);
    }
    Ok((values, weights))
}

/// Writes the fitted step function as `index,beta`.
pub fn write_segment_csv(path: &Path, beta: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "beta"])?;
    for (i, b) in beta.iter().enumerate() {
        w.write_record([format!("{}", i + 1), format!("{b}")])?;
    }
    w.flush()?;
    Ok(())
}
