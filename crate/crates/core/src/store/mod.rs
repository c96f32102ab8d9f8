//! The relational store: validated schema, columnar table data and both
//! directions of every foreign-key index.

mod features;
mod ingest;
mod schema;
mod split;

use serde::{Deserialize, Serialize};

pub use features::{compute_feature_stats, encode_features, FeatureStats, FeatureVector, NumericStats, TableStats};
pub use ingest::{ingest, ingest_with, IngestOptions};
pub use schema::{load_schema, ColumnDef, ColumnKind, RelationDef, Schema, TableDef, TargetDef, Task};
pub use split::{split_targets, Split, SplitRatios};

/// A tuple, identified by table and row. The derived ordering is the global
/// tuple order used wherever a canonical sequence is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TupleRef {
    pub table: u32,
    pub row: u32,
}

impl TupleRef {
    pub fn new(table: usize, row: usize) -> Self {
        TupleRef {
            table: table as u32,
            row: row as u32,
        }
    }
}

impl std::fmt::Display for TupleRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.table, self.row)
    }
}

/// Direction of a link relative to the tuple it is seen from: `Forward`
/// means this tuple holds the foreign key, `Reverse` means the other does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Reverse => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub tuple: TupleRef,
    pub relation: u32,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    /// `dictionary` holds the distinct values in sorted order; `values`
    /// index into it.
    Categorical {
        dictionary: Vec<String>,
        values: Vec<Option<u32>>,
    },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn numeric(&self, row: usize) -> Option<f64> {
        match self {
            Column::Numeric(v) => v[row],
            Column::Categorical { .. } => None,
        }
    }

    pub fn category(&self, row: usize) -> Option<&str> {
        match self {
            Column::Categorical { dictionary, values } => values[row].map(|i| dictionary[i as usize].as_str()),
            Column::Numeric(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableData {
    pub rows: usize,
    pub columns: Vec<Column>,
    pub primary_keys: Vec<String>,
}

/// An ingested database. Immutable once built.
#[derive(Debug, Clone)]
pub struct Store {
    pub schema: Schema,
    pub tables: Vec<TableData>,
    /// `fk_forward[r][i]`: the row of `to_table` referenced by row `i` of
    /// `from_table` over relation `r`.
    pub fk_forward: Vec<Vec<Option<u32>>>,
    /// `fk_reverse[r][j]`: sorted rows of `from_table` referencing row `j`.
    pub fk_reverse: Vec<Vec<Vec<u32>>>,
    relation_tables: Vec<(u32, u32)>,
}

impl Store {
    pub(crate) fn assemble(
        schema: Schema,
        tables: Vec<TableData>,
        fk_forward: Vec<Vec<Option<u32>>>,
    ) -> Store {
        let relation_tables: Vec<(u32, u32)> = schema
            .relations
            .iter()
            .map(|r| {
                (
                    schema.table_index(&r.from_table).unwrap() as u32,
                    schema.table_index(&r.to_table).unwrap() as u32,
                )
            })
            .collect();
        let fk_reverse = fk_forward
            .iter()
            .zip(&relation_tables)
            .map(|(fwd, &(_, to))| {
                let mut rev = vec![Vec::new(); tables[to as usize].rows];
                for (i, target) in fwd.iter().enumerate() {
                    if let Some(j) = target {
                        rev[*j as usize].push(i as u32);
                    }
                }
                rev
            })
            .collect();
        Store {
            schema,
            tables,
            fk_forward,
            fk_reverse,
            relation_tables,
        }
    }

    pub fn num_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_tables.len()
    }

    pub fn row_count(&self, table: usize) -> usize {
        self.tables[table].rows
    }

    pub fn row_counts(&self) -> Vec<usize> {
        self.tables.iter().map(|t| t.rows).collect()
    }

    pub fn total_rows(&self) -> usize {
        self.tables.iter().map(|t| t.rows).sum()
    }

    /// `(from_table, to_table)` of a relation.
    pub fn relation_tables(&self, relation: usize) -> (usize, usize) {
        let (a, b) = self.relation_tables[relation];
        (a as usize, b as usize)
    }

    pub fn contains(&self, t: TupleRef) -> bool {
        (t.table as usize) < self.tables.len() && (t.row as usize) < self.tables[t.table as usize].rows
    }

    /// Every tuple linked to `t`: forward links in relation order, then
    /// reverse links sorted by `(relation, row)`. A row that references
    /// itself is not its own neighbor.
    pub fn neighbors(&self, t: TupleRef) -> Vec<Link> {
        let mut out = Vec::new();
        self.forward_links(t, |l| out.push(l));
        for r in 0..self.num_relations() {
            for l in self.reverse_links(t, r) {
                out.push(l);
            }
        }
        out
    }

    pub(crate) fn forward_links(&self, t: TupleRef, mut f: impl FnMut(Link)) {
        for (r, &(from, to)) in self.relation_tables.iter().enumerate() {
            if from != t.table {
                continue;
            }
            if let Some(j) = self.fk_forward[r][t.row as usize] {
                let other = TupleRef { table: to, row: j };
                if other != t {
                    f(Link {
                        tuple: other,
                        relation: r as u32,
                        direction: Direction::Forward,
                    });
                }
            }
        }
    }

    /// Reverse links of `t` over one relation, in row order.
    pub(crate) fn reverse_links(&self, t: TupleRef, relation: usize) -> impl Iterator<Item = Link> + '_ {
        let (from, to) = self.relation_tables[relation];
        let rows: &[u32] = if to == t.table {
            &self.fk_reverse[relation][t.row as usize]
        } else {
            &[]
        };
        rows.iter()
            .map(move |&i| TupleRef { table: from, row: i })
            .filter(move |&other| other != t)
            .map(move |other| Link {
                tuple: other,
                relation: relation as u32,
                direction: Direction::Reverse,
            })
    }

    /// Value of the target attribute for a row of the target table.
    pub fn target_value(&self, row: usize) -> Option<f64> {
        let t = self.schema.target_table();
        self.tables[t].columns[self.schema.target_column()].numeric(row)
    }

    /// All target-table tuples with a non-missing target value, in row order.
    pub fn targets(&self) -> Vec<TupleRef> {
        let t = self.schema.target_table();
        (0..self.tables[t].rows)
            .filter(|&r| self.target_value(r).is_some())
            .map(|r| TupleRef::new(t, r))
            .collect()
    }

    pub fn describe(&self, t: TupleRef) -> String {
        let def = &self.schema.tables[t.table as usize];
        format!("{}[{}]", def.name, self.tables[t.table as usize].primary_keys[t.row as usize])
    }
}
