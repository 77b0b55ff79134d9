use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnSchema, RawTable, Value};
use crate::{Error, Result};

/// JSON manifest describing a CSV file's columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub target: String,
    pub columns: Vec<ManifestColumn>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestColumn {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub scale_exempt: bool,
}

impl Manifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_reader(file)?;
        let mut seen = std::collections::HashSet::new();
        for col in &manifest.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Manifest(format!("duplicate column {:?}", col.name)));
            }
        }
        Ok(manifest)
    }
}

/// Parses a headered UTF-8 CSV according to its manifest.
///
/// Empty cells are missing values. Feature columns whose every cell is
/// missing are dropped and noted in [`RawTable::warnings`].
pub fn load_csv(path: &Path, manifest_path: &Path) -> Result<RawTable> {
    let manifest = Manifest::from_path(manifest_path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let declared: HashMap<&str, &ManifestColumn> =
        manifest.columns.iter().map(|c| (c.name.as_str(), c)).collect();

    let target_pos = headers
        .iter()
        .position(|h| *h == manifest.target)
        .ok_or_else(|| Error::Manifest(format!("target column {:?} not in CSV header", manifest.target)))?;

    // (csv position, schema) for every feature column
    let mut features: Vec<(usize, ColumnSchema)> = Vec::new();
    for (pos, name) in headers.iter().enumerate() {
        if pos == target_pos {
            continue;
        }
        let col = declared
            .get(name.as_str())
            .ok_or_else(|| Error::Manifest(format!("CSV column {name:?} is not declared")))?;
        features.push((
            pos,
            ColumnSchema {
                name: name.clone(),
                kind: col.kind,
                categories: Vec::new(),
                scale_exempt: col.scale_exempt,
            },
        ));
    }
    for col in &manifest.columns {
        if col.name != manifest.target && !headers.contains(&col.name) {
            return Err(Error::Manifest(format!("declared column {:?} missing from CSV", col.name)));
        }
    }

    let mut category_index: Vec<HashMap<String, usize>> = vec![HashMap::new(); features.len()];
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::Arity {
                line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let target = record[target_pos].trim();
        if target.is_empty() {
            return Err(Error::MissingTarget { line });
        }
        targets.push(target.to_string());

        let mut row = Vec::with_capacity(features.len());
        for (j, (pos, schema)) in features.iter_mut().enumerate() {
            let cell = record[*pos].trim();
            if cell.is_empty() {
                row.push(None);
                continue;
            }
            let value = match schema.kind {
                ColumnKind::Numeric => {
                    let v: f64 = cell.parse().map_err(|_| Error::Parse {
                        line,
                        column: schema.name.clone(),
                        value: cell.to_string(),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            line,
                            column: schema.name.clone(),
                            value: cell.to_string(),
                        });
                    }
                    Value::Num(v)
                }
                ColumnKind::Categorical => {
                    let next = schema.categories.len();
                    let idx = *category_index[j].entry(cell.to_string()).or_insert_with(|| {
                        schema.categories.push(cell.to_string());
                        next
                    });
                    Value::Cat(idx)
                }
            };
            row.push(Some(value));
        }
        rows.push(row);
    }

    let mut table = RawTable {
        schema: features.into_iter().map(|(_, s)| s).collect(),
        rows,
        target_column: manifest.target,
        targets,
        warnings: Vec::new(),
    };
    drop_all_missing(&mut table);
    Ok(table)
}

fn drop_all_missing(table: &mut RawTable) {
    if table.rows.is_empty() {
        return;
    }
    let keep: Vec<bool> = (0..table.schema.len())
        .map(|j| table.rows.iter().any(|r| r[j].is_some()))
        .collect();
    if keep.iter().all(|&k| k) {
        return;
    }
    for (j, col) in table.schema.iter().enumerate() {
        if !keep[j] {
            let msg = format!("column {:?} is always missing; dropped", col.name);
            log::warn!("{msg}");
            table.warnings.push(msg);
        }
    }
    let mut j = 0;
    table.schema.retain(|_| {
        j += 1;
        keep[j - 1]
    });
    for row in &mut table.rows {
        let mut j = 0;
        row.retain(|_| {
            j += 1;
            keep[j - 1]
        });
    }
}
