//! Nearest-teammate heuristic against the logistic-regression ranker.

use passgraph::baselines::{candidate_features, logreg_train, LOGREG_FEATURES};
use passgraph::metrics::summarize;
use passgraph::metrics::write_metrics_table;
use passgraph::pipeline::{load_states, Workspace};
use passgraph::RunConfig;

const NAMES: [&str; LOGREG_FEATURES] = [
    "cand x",
    "cand y",
    "cand vx",
    "cand vy",
    "cand ax",
    "cand ay",
    "cand pressure",
    "distance",
    "angle",
    "lane traffic",
    "passer x",
    "passer y",
    "passer vx",
    "passer vy",
    "passer ax",
    "passer ay",
    "passer pressure",
];

fn main() -> passgraph::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = std::env::args()
        .nth(1)
        .map_or(10_000, |a| a.parse().expect("n_passes"));
    let ws = Workspace::new(&cfg, load_states(&cfg)?)?;
    let train = ws.graphs_of(&ws.train);
    let (lr, fit) = logreg_train(&train, &cfg.logreg)?;
    println!(
        "logreg: {} iterations, loss {:.4}, converged {}",
        fit.iterations, fit.final_loss, fit.converged
    );

    let g = &train[0];
    let x = candidate_features(g, g.candidates()[0]);
    println!("\nweight  feature          (first training candidate value)");
    for (i, name) in NAMES.iter().enumerate() {
        println!("{:+7.3}  {name:<16} {:7.3}", lr.weights[i], x[i]);
    }
    println!("{:+7.3}  bias\n", lr.bias);

    let rows = vec![
        (
            "logreg".to_string(),
            summarize(&ws.records(&lr, &ws.test)?)?,
        ),
        (
            "nearest".to_string(),
            summarize(&ws.records(&ws.nearest(&cfg), &ws.test)?)?,
        ),
    ];
    write_metrics_table(std::io::stdout(), &rows).map_err(|e| passgraph::Error::io("stdout", e))?;
    Ok(())
}
