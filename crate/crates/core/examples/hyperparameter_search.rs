//! Random search over a shrunken space, with rank correlations against validation Top-1.
//!
//! cargo run --release --example hyperparameter_search -- [trials] [epochs]

use passgraph::pipeline::{load_states, Workspace};
use passgraph::train::{random_search, SearchSpace};
use passgraph::{Aggregator, RunConfig};

fn main() -> passgraph::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut args = std::env::args().skip(1);
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = 3000;
    let space = SearchSpace {
        hidden_dim: vec![16, 32, 64],
        num_layers: vec![1, 2, 3],
        learning_rate: [3e-4, 1e-2],
        batch_size: vec![32, 64, 128],
        aggregator: vec![Aggregator::Mean, Aggregator::Max, Aggregator::Add],
        trials: args.next().map_or(6, |a| a.parse().expect("trials")),
        epochs: args.next().map_or(4, |a| a.parse().expect("epochs")),
        ..SearchSpace::default()
    };
    let ws = Workspace::new(&cfg, load_states(&cfg)?)?;
    let rep = random_search(
        &space,
        &cfg.model,
        &cfg.training,
        &ws.graphs_of(&ws.train),
        &ws.graphs_of(&ws.val),
    )?;
    println!("val_top1  val_loss  hidden layers  dropout  lr        wd        batch  agg");
    for t in &rep.trials {
        println!(
            "{:.4}    {:.4}    {:>6} {:>6}  {:.3}    {:.2e}  {:.2e}  {:>5}  {}",
            t.val_top1,
            t.val_loss,
            t.model.hidden_dim,
            t.model.num_layers,
            t.model.dropout,
            t.training.learning_rate,
            t.training.weight_decay,
            t.training.batch_size,
            t.model.aggregator.as_str()
        );
    }
    println!("\nspearman correlation with val Top-1:");
    for (name, rho) in &rep.correlations {
        match rho {
            Some(r) => println!("  {name:<14} {r:+.3}"),
            None => println!("  {name:<14} n/a"),
        }
    }
    Ok(())
}
