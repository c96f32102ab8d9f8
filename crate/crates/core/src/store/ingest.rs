use std::collections::HashMap;
use std::path::Path;

use super::{Column, ColumnKind, Schema, Store, TableData, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Reject foreign-key values that match no row. When false, such
    /// values become missing links.
    pub strict: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { strict: true }
    }
}

pub fn ingest(schema: &Schema, data_dir: impl AsRef<Path>) -> Result<Store> {
    ingest_with(schema, data_dir, IngestOptions::default())
}

pub fn ingest_with(schema: &Schema, data_dir: impl AsRef<Path>, options: IngestOptions) -> Result<Store> {
    let data_dir = data_dir.as_ref();
    let mut records = Vec::with_capacity(schema.tables.len());
    for t in &schema.tables {
        let path = data_dir.join(&t.file);
        let err = |reason: String| Error::Ingest {
            table: t.name.clone(),
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&path)
            .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| err(format!("bad header in {}: {e}", path.display())))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();

        // Map declared column order onto file order.
        let mut order = Vec::with_capacity(t.columns.len());
        for c in &t.columns {
            match header.iter().position(|h| *h == c.name) {
                Some(i) => order.push(i),
                None => return Err(err(format!("header of {} lacks column `{}`", path.display(), c.name))),
            }
        }
        if header.len() != t.columns.len() {
            let extra: Vec<_> = header
                .iter()
                .filter(|h| t.column_index(h).is_none())
                .cloned()
                .collect();
            return Err(err(format!(
                "header of {} has undeclared columns {extra:?}",
                path.display()
            )));
        }

        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| err(format!("row {i}: {e}")))?;
            if rec.len() != header.len() {
                return Err(err(format!("row {i}: expected {} fields, found {}", header.len(), rec.len())));
            }
            rows.push(order.iter().map(|&j| rec[j].to_string()).collect());
        }
        records.push(rows);
    }
    Store::from_records(schema.clone(), records, options)
}

impl Store {
    /// Build a store from string records, one `Vec` per table, each record
    /// in declared column order. Empty strings are missing values.
    pub fn from_records(schema: Schema, records: Vec<Vec<Vec<String>>>, options: IngestOptions) -> Result<Store> {
        if records.len() != schema.tables.len() {
            return Err(Error::Ingest {
                table: "*".into(),
                reason: format!("expected {} tables, got {}", schema.tables.len(), records.len()),
            });
        }

        let mut tables = Vec::with_capacity(records.len());
        for (def, rows) in schema.tables.iter().zip(&records) {
            let err = |reason: String| Error::Ingest {
                table: def.name.clone(),
                reason,
            };
            let mut columns = Vec::with_capacity(def.columns.len());
            for (ci, c) in def.columns.iter().enumerate() {
                let col = match c.kind {
                    ColumnKind::Numeric => {
                        let mut v = Vec::with_capacity(rows.len());
                        for (ri, row) in rows.iter().enumerate() {
                            let cell = row[ci].trim();
                            if cell.is_empty() {
                                v.push(None);
                                continue;
                            }
                            match cell.parse::<f64>() {
                                Ok(x) if x.is_finite() => v.push(Some(x)),
                                _ => {
                                    return Err(err(format!(
                                        "row {ri}: column `{}` holds non-numeric value `{cell}`",
                                        c.name
                                    )))
                                }
                            }
                        }
                        Column::Numeric(v)
                    }
                    ColumnKind::Categorical => {
                        let mut dictionary: Vec<String> = rows
                            .iter()
                            .map(|r| r[ci].trim())
                            .filter(|s| !s.is_empty())
                            .map(str::to_string)
                            .collect();
                        dictionary.sort();
                        dictionary.dedup();
                        let values = rows
                            .iter()
                            .map(|r| {
                                let s = r[ci].trim();
                                (!s.is_empty()).then(|| dictionary.binary_search_by(|d| d.as_str().cmp(s)).unwrap() as u32)
                            })
                            .collect();
                        Column::Categorical { dictionary, values }
                    }
                };
                columns.push(col);
            }

            let pk = def.column_index(&def.primary_key).unwrap();
            let primary_keys: Vec<String> = rows.iter().map(|r| r[pk].trim().to_string()).collect();
            let mut seen = HashMap::with_capacity(primary_keys.len());
            for (ri, k) in primary_keys.iter().enumerate() {
                if k.is_empty() {
                    return Err(err(format!("row {ri}: empty primary key `{}`", def.primary_key)));
                }
                if let Some(prev) = seen.insert(k.as_str(), ri) {
                    return Err(err(format!("rows {prev} and {ri} share primary key `{k}`")));
                }
            }
            tables.push(TableData {
                rows: rows.len(),
                columns,
                primary_keys,
            });
        }

        let mut fk_forward = Vec::with_capacity(schema.relations.len());
        for rel in &schema.relations {
            let from = schema.table_index(&rel.from_table).unwrap();
            let to = schema.table_index(&rel.to_table).unwrap();
            let from_col = schema.tables[from].column_index(&rel.from_column).unwrap();
            let to_col = schema.tables[to].column_index(&rel.to_column).unwrap();
            let err = |reason: String| Error::Ingest {
                table: rel.from_table.clone(),
                reason,
            };

            let mut index: HashMap<&str, u32> = HashMap::with_capacity(records[to].len());
            for (ri, row) in records[to].iter().enumerate() {
                let k = row[to_col].trim();
                if k.is_empty() {
                    continue;
                }
                if index.insert(k, ri as u32).is_some() {
                    return Err(Error::Ingest {
                        table: rel.to_table.clone(),
                        reason: format!("referenced column `{}` is not unique (value `{k}`)", rel.to_column),
                    });
                }
            }

            let mut links = Vec::with_capacity(records[from].len());
            for (ri, row) in records[from].iter().enumerate() {
                let k = row[from_col].trim();
                if k.is_empty() {
                    links.push(None);
                    continue;
                }
                match index.get(k) {
                    Some(&j) => links.push(Some(j)),
                    None if options.strict => {
                        return Err(err(format!(
                            "row {ri}: relation {} ({}.{} -> {}.{}) references missing key `{k}`",
                            rel.relation_id, rel.from_table, rel.from_column, rel.to_table, rel.to_column
                        )))
                    }
                    None => links.push(None),
                }
            }
            fk_forward.push(links);
        }

        let store = Store::assemble(schema, tables, fk_forward);
        if store.schema.target.task == Task::BinaryClassification {
            let t = store.schema.target_table();
            for r in 0..store.tables[t].rows {
                if let Some(v) = store.target_value(r) {
                    if v != 0.0 && v != 1.0 {
                        return Err(Error::Ingest {
                            table: store.schema.target.table.clone(),
                            reason: format!("row {r}: classification target must be 0 or 1, found {v}"),
                        });
                    }
                }
            }
        }
        Ok(store)
    }
}
