//! Scouting table: players whose creativity or best-pass rate stands out within their role.
//!
//! cargo run --release --example scouting_report -- [out_dir]

use passgraph::kpi::{kpi_profiles, role_distributions};
use passgraph::pipeline::{load_states, Workspace};
use passgraph::report::scouting_report;
use passgraph::train::train;
use passgraph::RunConfig;

fn main() -> passgraph::Result<()> {
    let out = std::env::args().nth(1).map_or_else(
        || std::env::temp_dir().join("passgraph-scouting"),
        Into::into,
    );
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = 8000;
    cfg.generator.n_teams = 8;
    cfg.training.max_epochs = 12;
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
    let records = ws.records(&model, &ws.labeled())?;
    let profiles = kpi_profiles(&records, cfg.report.min_passes);
    let rep = scouting_report(
        &profiles,
        &role_distributions(&profiles),
        cfg.report.z_threshold,
    );

    println!("{} qualified players", rep.rows.len());
    for r in rep.rows.iter().filter(|r| r.outlier) {
        println!(
            "  {} {:<10} creativity {:.3} (z {:+.2})  best pass {:.3} (z {:+.2})",
            r.profile.player_id,
            r.profile.role.as_str(),
            r.profile.creativity_ratio,
            r.z_creativity.unwrap_or(0.0),
            r.profile.best_pass_score,
            r.z_best_pass.unwrap_or(0.0)
        );
    }
    std::fs::create_dir_all(&out).map_err(|e| passgraph::Error::io("creating output dir", e))?;
    let path = out.join("scouting.html");
    std::fs::write(&path, &rep.html).map_err(|e| passgraph::Error::io("writing report", e))?;
    println!("open {}", path.display());
    Ok(())
}
