//! Schema documents: which tables exist, how they link, and what to predict.
//!
//! The on-disk format is JSON with three top-level keys:
//!
//! ```json
//! {
//!   "tables": [
//!     { "name": "flights", "file": "flights.csv", "primary_key": "flight_id",
//!       "columns": [ { "name": "flight_id", "kind": "categorical" },
//!                    { "name": "airline_id", "kind": "categorical" },
//!                    { "name": "delay", "kind": "numeric" } ] },
//!     { "name": "airlines", "file": "airlines.csv", "primary_key": "airline_id",
//!       "columns": [ { "name": "airline_id", "kind": "categorical" } ] }
//!   ],
//!   "relations": [
//!     { "from_table": "flights", "from_column": "airline_id",
//!       "to_table": "airlines", "to_column": "airline_id" }
//!   ],
//!   "target": { "table": "flights", "column": "delay", "task": "regression" }
//! }
//! ```
//!
//! Relation ids are assigned in declaration order. A relation may carry an
//! explicit `relation_id`, in which case it must equal its position.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    BinaryClassification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub file: String,
    pub primary_key: String,
    pub columns: Vec<ColumnDef>,
}

impl TableDef {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub from_table: String,
    pub from_column: String,
    pub to_table: String,
    pub to_column: String,
    pub relation_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetDef {
    pub table: String,
    pub column: String,
    pub task: Task,
}

/// A validated schema. Construct through [`Schema::from_json`],
/// [`load_schema`] or [`Schema::new`]; all three run the same checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub tables: Vec<TableDef>,
    pub relations: Vec<RelationDef>,
    pub target: TargetDef,
}

// Raw document shapes: strings for the enum-valued fields so that bad
// values can be reported with the element that carries them.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    tables: Vec<RawTable>,
    #[serde(default)]
    relations: Vec<RawRelation>,
    target: RawTarget,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    name: String,
    file: String,
    primary_key: String,
    columns: Vec<RawColumn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawColumn {
    name: String,
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelation {
    from_table: String,
    from_column: String,
    to_table: String,
    to_column: String,
    #[serde(default)]
    relation_id: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    table: String,
    column: String,
    task: String,
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Schema::from_json(&text)
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Schema> {
        let raw: RawSchema = serde_json::from_str(text)
            .map_err(|e| Error::SchemaInvalid(format!("malformed schema document: {e}")))?;

        let mut tables = Vec::with_capacity(raw.tables.len());
        for t in raw.tables {
            let mut columns = Vec::with_capacity(t.columns.len());
            for c in t.columns {
                let kind = match c.kind.as_str() {
                    "numeric" => ColumnKind::Numeric,
                    "categorical" => ColumnKind::Categorical,
                    other => {
                        return Err(Error::SchemaInvalid(format!(
                            "column `{}.{}` has unknown kind `{other}`",
                            t.name, c.name
                        )))
                    }
                };
                columns.push(ColumnDef { name: c.name, kind });
            }
            tables.push(TableDef {
                name: t.name,
                file: t.file,
                primary_key: t.primary_key,
                columns,
            });
        }

        let mut relations = Vec::with_capacity(raw.relations.len());
        for (i, r) in raw.relations.into_iter().enumerate() {
            if let Some(id) = r.relation_id {
                if id as usize != i {
                    return Err(Error::SchemaInvalid(format!(
                        "relation `{}.{}` declares relation_id {id} but is declared at position {i}",
                        r.from_table, r.from_column
                    )));
                }
            }
            relations.push(RelationDef {
                from_table: r.from_table,
                from_column: r.from_column,
                to_table: r.to_table,
                to_column: r.to_column,
                relation_id: i as u32,
            });
        }

        let task = match raw.target.task.as_str() {
            "regression" => Task::Regression,
            "binary_classification" => Task::BinaryClassification,
            other => {
                return Err(Error::SchemaInvalid(format!(
                    "target task `{other}` is not one of regression, binary_classification"
                )))
            }
        };

        Schema::new(
            tables,
            relations,
            TargetDef {
                table: raw.target.table,
                column: raw.target.column,
                task,
            },
        )
    }

    pub fn new(tables: Vec<TableDef>, relations: Vec<RelationDef>, target: TargetDef) -> Result<Schema> {
        let schema = Schema {
            tables,
            relations,
            target,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.tables.is_empty() {
            return Err(Error::SchemaInvalid("schema declares no tables".into()));
        }
        let mut names = HashSet::new();
        for t in &self.tables {
            if !names.insert(t.name.as_str()) {
                return Err(Error::SchemaInvalid(format!("duplicate table `{}`", t.name)));
            }
            let mut cols = HashSet::new();
            for c in &t.columns {
                if !cols.insert(c.name.as_str()) {
                    return Err(Error::SchemaInvalid(format!(
                        "duplicate column `{}.{}`",
                        t.name, c.name
                    )));
                }
            }
            if t.column_index(&t.primary_key).is_none() {
                return Err(Error::SchemaInvalid(format!(
                    "primary key `{}.{}` is not a declared column",
                    t.name, t.primary_key
                )));
            }
        }

        for (i, r) in self.relations.iter().enumerate() {
            if r.relation_id as usize != i {
                return Err(Error::SchemaInvalid(format!(
                    "relation ids must be 0..R-1 in order; `{}.{}` has id {}",
                    r.from_table, r.from_column, r.relation_id
                )));
            }
            self.check_column(&r.from_table, &r.from_column)?;
            self.check_column(&r.to_table, &r.to_column)?;
        }

        self.check_column(&self.target.table, &self.target.column)?;
        let t = &self.tables[self.table_index(&self.target.table).unwrap()];
        let c = &t.columns[t.column_index(&self.target.column).unwrap()];
        if c.kind != ColumnKind::Numeric {
            return Err(Error::SchemaInvalid(format!(
                "target column `{}.{}` must be numeric",
                t.name, c.name
            )));
        }
        if self.is_key_column(self.target_table(), &self.target.column) {
            return Err(Error::SchemaInvalid(format!(
                "target column `{}.{}` is a key column",
                t.name, c.name
            )));
        }
        Ok(())
    }

    fn check_column(&self, table: &str, column: &str) -> Result<()> {
        let Some(ti) = self.table_index(table) else {
            return Err(Error::SchemaInvalid(format!("unknown table `{table}`")));
        };
        if self.tables[ti].column_index(column).is_none() {
            return Err(Error::SchemaInvalid(format!("unknown column `{table}.{column}`")));
        }
        Ok(())
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    pub fn target_table(&self) -> usize {
        self.table_index(&self.target.table).expect("validated")
    }

    pub fn target_column(&self) -> usize {
        self.tables[self.target_table()]
            .column_index(&self.target.column)
            .expect("validated")
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Primary-key and foreign-key columns carry identity, not features.
    pub fn is_key_column(&self, table: usize, column: &str) -> bool {
        let t = &self.tables[table];
        if t.primary_key == column {
            return true;
        }
        self.relations.iter().any(|r| {
            (r.from_table == t.name && r.from_column == column)
                || (r.to_table == t.name && r.to_column == column)
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }
}
