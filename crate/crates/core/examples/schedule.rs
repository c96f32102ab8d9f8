//! Level schedule for a batch of two DAGs that share an airline.
//!
//!     cargo run --example schedule

use spare::fixtures::fig1_pair;
use spare::graph::{build_dag, GraphConfig};
use spare::schedule::{build_schedule, sequential_depth};

fn main() -> anyhow::Result<()> {
    let (store, f) = fig1_pair();
    let cfg = GraphConfig::default();
    let dags = [build_dag(&store, f.f1, &cfg), build_dag(&store, f.f5, &cfg)];
    let s = build_schedule(&dags)?;
    println!("{} slots in {} levels {:?}", s.num_slots(), sequential_depth(&s), s.level_sizes());
    s.replay(|slot, children, labels| {
        let kids: Vec<String> = children
            .iter()
            .zip(labels)
            .map(|(&c, l)| format!("{}(r{}{})", s.slots[c as usize].tuple, l.relation, if l.same_depth { "=" } else { "" }))
            .collect();
        println!("dag {} {:<5} <- {}", slot.dag, slot.tuple.to_string(), kids.join(" "));
    });
    println!("roots at slots {:?}", s.roots);
    Ok(())
}
