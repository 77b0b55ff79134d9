use std::collections::HashMap;

use ndarray::Array2;

use super::{ColumnKind, Dataset, RawTable, Value};
use crate::{Error, Result};

/// Fills missing cells: categorical with the column mode, numeric with the
/// column mean. Both statistics are taken over the full table. Mode ties go
/// to the category that appeared first.
pub fn impute(table: &RawTable) -> RawTable {
    let mut out = table.clone();
    for (j, col) in table.schema.iter().enumerate() {
        let observed = table.rows.iter().filter_map(|r| r[j]);
        let fill = match col.kind {
            ColumnKind::Numeric => {
                let (sum, n) = observed.fold((0.0, 0usize), |(s, n), v| match v {
                    Value::Num(x) => (s + x, n + 1),
                    Value::Cat(_) => (s, n),
                });
                if n == 0 {
                    continue;
                }
                Value::Num(sum / n as f64)
            }
            ColumnKind::Categorical => {
                let mut counts = vec![0usize; col.categories.len()];
                for v in observed {
                    if let Value::Cat(c) = v {
                        counts[c] += 1;
                    }
                }
                // max_by_key keeps the last maximum, so scan in reverse
                match counts.iter().enumerate().rev().max_by_key(|(_, &c)| c) {
                    Some((c, _)) => Value::Cat(c),
                    None => continue,
                }
            }
        };
        for row in &mut out.rows {
            if row[j].is_none() {
                row[j] = Some(fill);
            }
        }
    }
    out
}

/// Encodes a complete table, z-scoring every numeric column not marked
/// `scale_exempt` in the schema.
pub fn encode(table: &RawTable, id: &str) -> Result<Dataset> {
    let zscore: Vec<bool> = table.schema.iter().map(|c| !c.scale_exempt).collect();
    encode_with_scaling(table, id, &zscore)
}

/// Encodes a complete table with an explicit per-column z-score switch.
///
/// Constant numeric columns are mapped to zeros when z-scored. Population
/// standard deviation is used.
pub fn encode_with_scaling(table: &RawTable, id: &str, zscore: &[bool]) -> Result<Dataset> {
    if zscore.len() != table.schema.len() {
        return Err(Error::InvalidArgument(format!(
            "{} z-score flags for {} columns",
            zscore.len(),
            table.schema.len()
        )));
    }
    if table.has_missing() {
        return Err(Error::InvalidDataset("table still has missing cells; impute first".into()));
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut class_of: HashMap<&str, usize> = HashMap::new();
    let y: Vec<usize> = table
        .targets
        .iter()
        .map(|t| {
            let next = class_of.len();
            *class_of.entry(t.as_str()).or_insert_with(|| {
                class_names.push(t.clone());
                next
            })
        })
        .collect();
    if class_names.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 classes, found {}",
            class_names.len()
        )));
    }

    let mut groups = Vec::with_capacity(table.schema.len());
    let mut names = Vec::new();
    for col in &table.schema {
        let start = names.len();
        match col.kind {
            ColumnKind::Numeric => names.push(col.name.clone()),
            ColumnKind::Categorical => {
                if col.categories.is_empty() {
                    return Err(Error::InvalidDataset(format!(
                        "categorical column {:?} has no categories",
                        col.name
                    )));
                }
                names.extend(col.categories.iter().map(|c| format!("{}={}", col.name, c)));
            }
        }
        groups.push(start..names.len());
    }

    let n = table.n_rows();
    let mut x = Array2::<f64>::zeros((n, names.len()));
    for (j, col) in table.schema.iter().enumerate() {
        let start = groups[j].start;
        match col.kind {
            ColumnKind::Numeric => {
                let mut values: Vec<f64> = table
                    .rows
                    .iter()
                    .map(|r| match r[j] {
                        Some(Value::Num(v)) => v,
                        _ => unreachable!("numeric column holds a category"),
                    })
                    .collect();
                if zscore[j] {
                    zscore_in_place(&mut values);
                }
                for (i, v) in values.into_iter().enumerate() {
                    x[[i, start]] = v;
                }
            }
            ColumnKind::Categorical => {
                for (i, row) in table.rows.iter().enumerate() {
                    if let Some(Value::Cat(c)) = row[j] {
                        x[[i, start + c]] = 1.0;
                    }
                }
            }
        }
    }

    let ds = Dataset {
        id: id.to_string(),
        x,
        y,
        n_classes: class_names.len(),
        feature_names: names,
        feature_groups: groups,
        class_names,
    };
    ds.validate()?;
    Ok(ds)
}

fn zscore_in_place(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || std < 1e-12 * mean.abs() {
        values.iter_mut().for_each(|v| *v = 0.0);
    } else {
        values.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
}
