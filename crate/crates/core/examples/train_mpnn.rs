//! Trains the MPNN on synthetic passes, saves it and checks the reload.
//!
//! cargo run --release --example train_mpnn -- [n_passes] [max_epochs] [out_dir]

use passgraph::metrics::write_metrics_table;
use passgraph::model_io::{load_model, save_model, FeatureContext};
use passgraph::optim::Parameters;
use passgraph::pipeline::{evaluate, train_all, Workspace};
use passgraph::RunConfig;

fn main() -> passgraph::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = args.next().map_or(4000, |a| a.parse().expect("n_passes"));
    cfg.training.max_epochs = args.next().map_or(20, |a| a.parse().expect("max_epochs"));
    cfg.training.learning_rate = 3e-3;
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("passgraph-train"), Into::into);
    std::fs::create_dir_all(&out).map_err(|e| passgraph::Error::io("creating output dir", e))?;

    let ws = Workspace::new(&cfg, passgraph::pipeline::load_states(&cfg)?)?;
    let trained = train_all(&cfg, &ws)?;
    let r = &trained.report;
    println!(
        "{} epochs in {:.1}s, best epoch {} (val loss {:.4}, initial {:.4})",
        r.epochs.len(),
        r.total_seconds,
        r.best_epoch,
        r.best_val_loss,
        r.initial_loss
    );

    let path = out.join("model.bin");
    let ctx = FeatureContext {
        geometry: cfg.geometry,
        pitch: cfg.pitch,
    };
    save_model(&trained.mpnn, &ctx, &path)?;
    let (back, _) = load_model(&path)?;
    let same = back
        .params
        .flatten()
        .iter()
        .zip(trained.mpnn.params.flatten())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!(
        "saved {} ({} parameters, reload bit-exact: {same})",
        path.display(),
        back.params.num_params()
    );

    let ev = evaluate(&cfg, &ws, &trained.mpnn, Some(&trained.logreg))?;
    write_metrics_table(std::io::stdout(), &ev.rows)
        .map_err(|e| passgraph::Error::io("stdout", e))?;
    Ok(())
}
