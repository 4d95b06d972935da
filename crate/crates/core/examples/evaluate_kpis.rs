//! Per-player decision KPIs and their role distributions from a quickly trained model.
//!
//! cargo run --release --example evaluate_kpis -- [n_passes] [max_epochs]

use passgraph::kpi::{kpi_profiles, role_distributions, write_role_table};
use passgraph::pipeline::{load_states, Workspace};
use passgraph::train::train;
use passgraph::RunConfig;

fn main() -> passgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = args.next().map_or(6000, |a| a.parse().expect("n_passes"));
    cfg.training.max_epochs = args.next().map_or(15, |a| a.parse().expect("max_epochs"));
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

    // every labeled pass, completed or not, counts towards a player's profile
    let records = ws.records(&model, &ws.labeled())?;
    let profiles = kpi_profiles(&records, cfg.report.min_passes);
    let mut top: Vec<_> = profiles.iter().filter(|p| p.qualified).collect();
    top.sort_by(|a, b| b.creativity_ratio.total_cmp(&a.creativity_ratio));
    println!("most creative qualified passers:");
    println!("player  role        passes  best   good   creative  completion");
    for p in top.iter().take(8) {
        println!(
            "{:>6}  {:<10} {:>6}  {:.3}  {:.3}  {:.3}     {:.3}",
            p.player_id,
            p.role.as_str(),
            p.pass_count,
            p.best_pass_score,
            p.good_pass_score,
            p.creativity_ratio,
            p.completion_rate
        );
    }
    println!();
    write_role_table(std::io::stdout(), &role_distributions(&profiles))
        .map_err(|e| passgraph::Error::io("stdout", e))?;
    Ok(())
}
