//! Build the depth-2 tuple graph of one flight and turn it into its DAG.
//!
//!     cargo run --example tuple_graph

use spare::fixtures::fig1_graph;
use spare::graph::{build_undirected, to_dag, validate_dag, GraphConfig};

fn main() {
    let (store, f) = fig1_graph();
    let g = build_undirected(&store, f.f1, &GraphConfig::default());
    println!("{} tuples, {} links around {}", g.num_vertices(), g.num_edges(), store.describe(f.f1));
    for v in &g.vertices {
        println!("  depth {}  {}", v.depth, store.describe(v.tuple));
    }
    let dag = to_dag(&g);
    print!("{}", dag.to_text());
    println!("{:?}", validate_dag(&dag));
}
