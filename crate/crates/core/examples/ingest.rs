//! Load a schema and its CSV files, then print what was read.
//!
//!     cargo run --example ingest -- --schema data/schema.json --data data
//!
//! Without arguments a small synthetic dataset is written to a temporary
//! directory and read back.

use std::path::PathBuf;

use clap::Parser;
use spare::store::{ingest_with, load_schema, IngestOptions};
use spare::synth::{generate, Family, SyntheticSpec};

#[derive(Parser)]
struct Args {
    #[arg(long, requires = "data")]
    schema: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Dangling foreign keys become missing links.
    #[arg(long)]
    lenient: bool,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let tmp = tempfile::tempdir()?;
    let (schema_path, data) = match (args.schema, args.data) {
        (Some(s), Some(d)) => (s, d),
        _ => {
            let spec = SyntheticSpec::new(Family::SumRegression).with_targets(300);
            generate(&spec, 1)?.write(tmp.path())?;
            (tmp.path().join("schema.json"), tmp.path().to_path_buf())
        }
    };
    let schema = load_schema(&schema_path)?;
    let store = ingest_with(&schema, &data, IngestOptions { strict: !args.lenient })?;
    for (t, rows) in store.schema.tables.iter().zip(store.row_counts()) {
        let cols: Vec<_> = t.columns.iter().map(|c| format!("{}:{:?}", c.name, c.kind)).collect();
        println!("{:<12} {rows:>6} rows  {}", t.name, cols.join(" "));
    }
    for r in &store.schema.relations {
        println!("relation {}: {}.{} -> {}.{}", r.relation_id, r.from_table, r.from_column, r.to_table, r.to_column);
    }
    let tgt = &store.schema.target;
    println!("target {}.{} ({:?}), {} labelled rows", tgt.table, tgt.column, tgt.task, store.targets().len());
    Ok(())
}
