//! Command-line surface. Each command writes into its own run directory
//! `<out>/<command>-<timestamp>-<config hash>` that starts with the resolved config.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bench::{bench_inference, write_bench_samples, write_bench_summary};
use crate::config::{ConfigError, RunConfig};
use crate::kpi::{kpi_profiles, role_distributions, write_kpi_table, write_role_table};
use crate::metrics::write_metrics_table;
use crate::model_io::{load_logreg, load_model_expecting, save_logreg, save_model, FeatureContext};
use crate::mpnn::MpnnModel;
use crate::pipeline::{evaluate, load_states, train_all, Workspace};
use crate::report::{post_game_report, scouting_report, write_post_game};
use crate::snapshot::write_snapshot_file;
use crate::synth::generate_dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic snapshot file and its manifest.
    Generate,
    /// Train the MPNN and the logistic baseline.
    Train,
    /// Test-split metrics and per-player KPIs for a trained model.
    Eval,
    /// Per-pass latency of feature crafting and inference.
    Bench,
    /// Post-game review and scouting HTML reports.
    Report,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Bench => "bench",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "passgraph",
    version,
    about = "Pass receiver prediction on passer-centric star graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Single worker thread, for bitwise-reproducible reruns.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Parent directory for run directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
}

impl Cli {
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let cfg = match self.seed {
            Some(s) => cfg.with_seed(s),
            None => cfg,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Process exit code for an error category.
pub fn exit_code(err: &Error) -> i32 {
    match err.category() {
        "config" => 2,
        "data" => 3,
        "model" => 4,
        "evaluation" => 5,
        _ => 6,
    }
}

/// Runs one command and returns its run directory.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let cfg = cli.resolve_config()?;
    if cli.strict {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("single-thread pool");
        pool.install(|| dispatch(cli.command, &cfg, &cli.out))
    } else {
        dispatch(cli.command, &cfg, &cli.out)
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    // fail on missing inputs before creating anything
    if matches!(cmd, Command::Eval | Command::Bench | Command::Report) {
        model_path(cfg)?;
    }
    let dir = create_run_dir(out, cmd.as_str(), &cfg.hash())?;
    write_text(&dir.join("config.toml"), &cfg.to_toml_string())?;
    log::info!("{} -> {}", cmd.as_str(), dir.display());
    match cmd {
        Command::Generate => cmd_generate(cfg, &dir)?,
        Command::Train => cmd_train(cfg, &dir)?,
        Command::Eval => cmd_eval(cfg, &dir)?,
        Command::Bench => cmd_bench(cfg, &dir)?,
        Command::Report => cmd_report(cfg, &dir)?,
    }
    Ok(dir)
}

fn create_run_dir(out: &Path, cmd: &str, hash: &str) -> Result<PathBuf> {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    let base = format!("{cmd}-{stamp}-{hash}");
    fs::create_dir_all(out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    for k in 0.. {
        let name = if k == 0 {
            base.clone()
        } else {
            format!("{base}-{k}")
        };
        let dir = out.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(format!("creating {}", dir.display()), e)),
        }
    }
    unreachable!()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let ctx = || format!("writing {}", path.display());
    let file = File::create(path).map_err(|e| Error::io(ctx(), e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(ctx(), e))
}

fn model_path(cfg: &RunConfig) -> Result<&Path> {
    let p = cfg
        .paths
        .model
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid {
            key: "paths.model".into(),
            reason: "this command needs a trained model file".into(),
        })?;
    if !p.exists() {
        return Err(ConfigError::Invalid {
            key: "paths.model".into(),
            reason: format!("model file {} does not exist", p.display()),
        }
        .into());
    }
    Ok(p)
}

fn load_mpnn(cfg: &RunConfig) -> Result<MpnnModel> {
    let (model, features) = load_model_expecting(model_path(cfg)?, &cfg.model)?;
    if features.geometry != cfg.geometry || features.pitch != cfg.pitch {
        log::warn!(
            "model was trained with different geometry or pitch settings than the current config"
        );
    }
    Ok(model)
}

fn features(cfg: &RunConfig) -> FeatureContext {
    FeatureContext {
        geometry: cfg.geometry,
        pitch: cfg.pitch,
    }
}

fn cmd_generate(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let ds = generate_dataset(&cfg.generator, &cfg.geometry, &cfg.pitch)?;
    let path = dir.join("snapshots.jsonl");
    write_snapshot_file(&path, &ds.states, &cfg.pitch)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    let manifest = serde_json::to_string_pretty(&ds.manifest).expect("manifest serializes");
    write_text(&dir.join("manifest.json"), &manifest)?;
    log::info!(
        "{} passes, {} completed",
        ds.manifest.n_passes,
        ds.manifest.successful
    );
    Ok(())
}

fn cmd_train(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let ws = Workspace::new(cfg, load_states(cfg)?)?;
    log::info!(
        "split: {} train / {} val / {} test graphs",
        ws.train.len(),
        ws.val.len(),
        ws.test.len()
    );
    let t = train_all(cfg, &ws)?;
    save_model(&t.mpnn, &features(cfg), &dir.join("model.bin"))?;
    save_logreg(&t.logreg, &features(cfg), &dir.join("logreg.bin"))?;
    write_text(&dir.join("train_report.jsonl"), &t.report.to_jsonl())?;
    write_text(
        &dir.join("logreg_fit.json"),
        &serde_json::to_string_pretty(&t.logreg_fit).expect("fit serializes"),
    )?;
    let ev = evaluate(cfg, &ws, &t.mpnn, Some(&t.logreg))?;
    write_with(&dir.join("metrics.tsv"), |w| {
        write_metrics_table(w, &ev.rows)
    })?;
    for (name, m) in &ev.rows {
        log::info!(
            "{name}: top1 {:.4} top3 {:.4} auroc {:.4} brier {:.4}",
            m.top1,
            m.top3,
            m.auroc,
            m.brier
        );
    }
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let model = load_mpnn(cfg)?;
    let logreg = match &cfg.paths.logreg_model {
        Some(p) => Some(load_logreg(p)?.0),
        None => None,
    };
    let ws = Workspace::new(cfg, load_states(cfg)?)?;
    let ev = evaluate(cfg, &ws, &model, logreg.as_ref())?;
    write_with(&dir.join("metrics.tsv"), |w| {
        write_metrics_table(w, &ev.rows)
    })?;
    let by_label: Vec<_> = ev
        .by_label
        .iter()
        .map(|(l, m)| (format!("mpnn/{}", l.as_str()), *m))
        .collect();
    write_with(&dir.join("metrics_by_label.tsv"), |w| {
        write_metrics_table(w, &by_label)
    })?;
    write_with(&dir.join("predictions.jsonl"), |w| {
        for r in &ev.mpnn_records {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        Ok(())
    })?;

    let records = ws.records(&model, &ws.labeled())?;
    let profiles = kpi_profiles(&records, cfg.report.min_passes);
    write_with(&dir.join("kpi_players.tsv"), |w| {
        write_kpi_table(w, &profiles)
    })?;
    write_with(&dir.join("kpi_roles.tsv"), |w| {
        write_role_table(w, &role_distributions(&profiles))
    })?;
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let model = load_mpnn(cfg)?;
    let states = load_states(cfg)?;
    let report = bench_inference(
        &model,
        &states,
        &cfg.geometry,
        &cfg.pitch,
        &cfg.bench,
        cfg.training.seed,
    )?;
    write_with(&dir.join("bench.tsv"), |w| write_bench_summary(w, &report))?;
    write_with(&dir.join("bench_samples.tsv"), |w| {
        write_bench_samples(w, &report)
    })?;
    log::info!(
        "total {:.5} ± {:.5} s per pass (budget {:.3} s)",
        report.total.mean,
        report.total.std,
        report.budget_seconds
    );
    Ok(())
}

fn cmd_report(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let model = load_mpnn(cfg)?;
    let ws = Workspace::new(cfg, load_states(cfg)?)?;
    let idx = ws.labeled();
    let records = ws.records(&model, &idx)?;
    let report = post_game_report(
        &records,
        &ws.states,
        &cfg.pitch,
        cfg.report.gap_threshold,
        cfg.report.top_k,
    );
    let post = dir.join("post_game");
    write_post_game(&report, &post)
        .map_err(|e| Error::io(format!("writing {}", post.display()), e))?;
    let profiles = kpi_profiles(&records, cfg.report.min_passes);
    let scouting = scouting_report(
        &profiles,
        &role_distributions(&profiles),
        cfg.report.z_threshold,
    );
    write_text(&dir.join("scouting.html"), &scouting.html)?;
    log::info!(
        "{} flagged passes, {} scouting outliers",
        report.flags.len(),
        scouting.rows.iter().filter(|r| r.outlier).count()
    );
    Ok(())
}
