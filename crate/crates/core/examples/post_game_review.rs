//! Flags failed passes where the model saw a clearly better option and
//! renders each as an SVG pitch review inside one HTML page.
//!
//! cargo run --release --example post_game_review -- [out_dir]

use std::collections::HashSet;

use passgraph::pipeline::{load_states, Workspace};
use passgraph::report::{post_game_report, write_post_game};
use passgraph::train::train;
use passgraph::RunConfig;

fn main() -> passgraph::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("passgraph-review"), Into::into);
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = 4000;
    cfg.training.max_epochs = 15;
    cfg.training.learning_rate = 3e-3;
    cfg.model.hidden_dim = 32;
    cfg.model.num_layers = 2;

    let ws = Workspace::new(&cfg, load_states(&cfg)?)?;
    let (model, _) = train(
        &cfg.model,
        &cfg.training,
        &ws.graphs_of(&ws.train),
        &ws.graphs_of(&ws.val),
    )?;

    // any pass the model never trained on; failed passes are always held out
    let seen: HashSet<usize> = ws.train.iter().chain(&ws.val).copied().collect();
    let match_passes: Vec<usize> = ws
        .labeled()
        .into_iter()
        .filter(|i| !seen.contains(i))
        .take(400)
        .collect();
    let records = ws.records(&model, &match_passes)?;
    let report = post_game_report(
        &records,
        &ws.states,
        &cfg.pitch,
        cfg.report.gap_threshold,
        cfg.report.top_k,
    );
    write_post_game(&report, &out).map_err(|e| passgraph::Error::io("writing report", e))?;

    println!(
        "{} passes reviewed, {} flagged",
        records.len(),
        report.flags.len()
    );
    for f in report.flags.iter().take(5) {
        println!(
            "  pass {:>6}: played to {} (p {:.3}), model preferred {} (p {:.3}), gap {:.3}",
            f.pass_id, f.chosen_id, f.p_chosen, f.top1_id, f.p_top1, f.gap
        );
    }
    println!("open {}", out.join("report.html").display());
    Ok(())
}
