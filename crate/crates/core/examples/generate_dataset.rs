//! Generates a synthetic season, writes it as a snapshot file and reads it back.
//!
//! cargo run --release --example generate_dataset -- [n_passes] [out_dir]

use passgraph::snapshot::{ingest, write_snapshot_file};
use passgraph::synth::{generate_dataset, GeneratorConfig};
use passgraph::{GeometryConfig, PassLabel, PitchSpec};

fn main() -> passgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_passes = args.next().map_or(5000, |a| a.parse().expect("n_passes"));
    let out = args.next().map_or_else(
        || std::env::temp_dir().join("passgraph-generate"),
        Into::into,
    );
    std::fs::create_dir_all(&out).map_err(|e| passgraph::Error::io("creating output dir", e))?;

    let cfg = GeneratorConfig {
        n_passes,
        ..Default::default()
    };
    let (geometry, pitch) = (GeometryConfig::default(), PitchSpec::default());
    let ds = generate_dataset(&cfg, &geometry, &pitch)?;
    let m = &ds.manifest;
    println!("config hash {}", m.config_hash);
    println!(
        "{} passes, {} completed ({:.1}%)",
        m.n_passes,
        m.successful,
        100.0 * m.successful as f64 / m.n_passes as f64
    );
    for label in [PassLabel::Short, PassLabel::Medium, PassLabel::Long] {
        println!(
            "  {:<6} {:>6.1}%",
            label.as_str(),
            100.0 * m.label_fraction(label)
        );
    }

    let path = out.join("snapshots.jsonl");
    write_snapshot_file(&path, &ds.states, &pitch)
        .map_err(|e| passgraph::Error::io("writing snapshots", e))?;
    let back = ingest(&path, &pitch)?;
    assert_eq!(back.states, ds.states);
    println!(
        "wrote and re-read {} states from {}",
        back.states.len(),
        path.display()
    );
    Ok(())
}
