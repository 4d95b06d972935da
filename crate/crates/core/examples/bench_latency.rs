//! Sequential per-pass latency: graph crafting plus a single forward pass,
//! measured at the default architecture against the 25 Hz frame budget.

use passgraph::bench::{bench_inference, write_bench_summary};
use passgraph::config::BenchConfig;
use passgraph::synth::generate_dataset;
use passgraph::{MpnnModel, RunConfig};

fn main() -> passgraph::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = 2000;
    // latency does not depend on the weights, so an untrained model suffices
    let model = MpnnModel::new(cfg.model.clone())?;
    let states = generate_dataset(&cfg.generator, &cfg.geometry, &cfg.pitch)?.states;
    let report = bench_inference(
        &model,
        &states,
        &cfg.geometry,
        &cfg.pitch,
        &BenchConfig::default(),
        0,
    )?;
    write_bench_summary(std::io::stdout(), &report)
        .map_err(|e| passgraph::Error::io("stdout", e))?;
    let worst = report.total_seconds.iter().copied().fold(0.0, f64::max);
    println!(
        "worst pass {:.5} s; {:.0} passes per frame budget at the mean",
        worst,
        report.budget_seconds / report.total.mean
    );
    Ok(())
}
