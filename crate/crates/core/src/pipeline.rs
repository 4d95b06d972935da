//! Glue shared by the CLI and the examples: load snapshots, build graphs,
//! split, train, evaluate.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::baselines::{logreg_train, LogRegFit, LogRegModel, NearestPlayer};
use crate::config::RunConfig;
use crate::graph::{build_graph, FeatureScaler, PassGraph};
use crate::metrics::{predict_records, summarize, MetricSummary, PredictionRecord, Predictor};
use crate::mpnn::MpnnModel;
use crate::snapshot::ingest;
use crate::state::{GameState, PassLabel};
use crate::synth::generate_dataset;
use crate::train::{split_indices, train, TrainReport};
use crate::Result;

/// Snapshots from `paths.snapshots` when set, otherwise a fresh synthetic dataset.
pub fn load_states(cfg: &RunConfig) -> Result<Vec<GameState>> {
    match &cfg.paths.snapshots {
        Some(path) => {
            let ing = ingest(path, &cfg.pitch)?;
            for w in &ing.warnings {
                log::warn!("{}: {w}", path.display());
            }
            if !ing.errors.is_empty() {
                log::warn!(
                    "{}: skipped {} of {} lines (first: line {} {})",
                    path.display(),
                    ing.errors.len(),
                    ing.data_lines,
                    ing.errors[0].line,
                    ing.errors[0].reason
                );
            }
            Ok(ing.states)
        }
        None => Ok(generate_dataset(&cfg.generator, &cfg.geometry, &cfg.pitch)?.states),
    }
}

/// Scaled graphs plus the train/val/test partition used by every command.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub states: Vec<GameState>,
    pub graphs: Vec<PassGraph>,
    pub scaler: FeatureScaler,
    /// Indices into `states`; only labeled passes, and only completed ones
    /// when `training.successful_only` is set.
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Workspace {
    pub fn new(cfg: &RunConfig, states: Vec<GameState>) -> Result<Self> {
        let scaler = FeatureScaler::for_pitch(&cfg.pitch);
        let graphs = states
            .par_iter()
            .map(|s| {
                let mut g = build_graph(s, &cfg.geometry, &cfg.pitch)?;
                scaler.apply_in_place(&mut g);
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()?;
        let labeled: Vec<usize> = (0..states.len())
            .filter(|&i| graphs[i].label_index.is_some())
            .collect();
        let split = split_indices(labeled.len(), cfg.training.split_ratio, cfg.training.seed)?;
        let keep = |ix: Vec<usize>| -> Vec<usize> {
            ix.into_iter()
                .map(|k| labeled[k])
                .filter(|&i| {
                    !cfg.training.successful_only || states[i].pass_successful != Some(false)
                })
                .collect()
        };
        Ok(Self {
            train: keep(split.train),
            val: keep(split.val),
            test: keep(split.test),
            states,
            graphs,
            scaler,
        })
    }

    pub fn graphs_of(&self, idx: &[usize]) -> Vec<PassGraph> {
        idx.iter().map(|&i| self.graphs[i].clone()).collect()
    }

    pub fn states_of(&self, idx: &[usize]) -> Vec<GameState> {
        idx.iter().map(|&i| self.states[i].clone()).collect()
    }

    /// Every labeled pass, completed or not, for KPIs and reports.
    pub fn labeled(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| self.graphs[i].label_index.is_some())
            .collect()
    }

    pub fn records<P: Predictor + ?Sized>(
        &self,
        predictor: &P,
        idx: &[usize],
    ) -> Result<Vec<PredictionRecord>> {
        predict_records(predictor, &self.states_of(idx), &self.graphs_of(idx))
    }

    pub fn nearest(&self, cfg: &RunConfig) -> NearestPlayer {
        NearestPlayer::new(cfg.nearest.tau, self.scaler.meters_per_distance_unit())
    }
}

pub struct Trained {
    pub mpnn: MpnnModel,
    pub report: TrainReport,
    pub logreg: LogRegModel,
    pub logreg_fit: LogRegFit,
}

pub fn train_all(cfg: &RunConfig, ws: &Workspace) -> Result<Trained> {
    let tr = ws.graphs_of(&ws.train);
    let va = ws.graphs_of(&ws.val);
    let (mpnn, report) = train(&cfg.model, &cfg.training, &tr, &va)?;
    let (logreg, logreg_fit) = logreg_train(&tr, &cfg.logreg)?;
    Ok(Trained {
        mpnn,
        report,
        logreg,
        logreg_fit,
    })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rows: Vec<(String, MetricSummary)>,
    /// MPNN metrics per pass-length category.
    pub by_label: Vec<(PassLabel, MetricSummary)>,
    pub mpnn_records: Vec<PredictionRecord>,
}

/// Test-split metrics for the MPNN, an optional logistic baseline and the
/// nearest-teammate heuristic.
pub fn evaluate(
    cfg: &RunConfig,
    ws: &Workspace,
    mpnn: &MpnnModel,
    logreg: Option<&LogRegModel>,
) -> Result<Evaluation> {
    let mpnn_records = ws.records(mpnn, &ws.test)?;
    let mut rows = vec![("mpnn".to_string(), summarize(&mpnn_records)?)];
    if let Some(lr) = logreg {
        rows.push(("logreg".into(), summarize(&ws.records(lr, &ws.test)?)?));
    }
    rows.push((
        "nearest".into(),
        summarize(&ws.records(&ws.nearest(cfg), &ws.test)?)?,
    ));

    let mut groups: BTreeMap<PassLabel, Vec<PredictionRecord>> = BTreeMap::new();
    for (r, &i) in mpnn_records.iter().zip(&ws.test) {
        if let Some(label) = ws.states[i].pass_label {
            groups.entry(label).or_default().push(r.clone());
        }
    }
    let by_label = groups
        .into_iter()
        .filter_map(|(l, rs)| summarize(&rs).ok().map(|m| (l, m)))
        .collect();
    Ok(Evaluation {
        rows,
        by_label,
        mpnn_records,
    })
}
