//! Per-pass latency of feature crafting and inference, processed one pass at a time.

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::BenchConfig;
use crate::geometry::GeometryConfig;
use crate::graph::{build_graph, FeatureScaler};
use crate::mpnn::MpnnModel;
use crate::pitch::PitchSpec;
use crate::state::GameState;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("benchmark needs {needed} states, only {available} available")]
    InsufficientSamples { needed: usize, available: usize },
    #[error("pass {index}: {source}")]
    Pipeline {
        index: usize,
        #[source]
        source: Box<crate::Error>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
}

impl MeanStd {
    /// Welford accumulation, stable for long runs of near-equal timings.
    pub fn of(xs: &[f64]) -> Self {
        let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for &x in xs {
            n += 1.0;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
        }
        let std = if n > 1.0 {
            (m2 / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub samples: usize,
    pub warmup: usize,
    /// Indices into the input slice, in processing order.
    pub state_indices: Vec<usize>,
    pub crafting_seconds: Vec<f64>,
    pub inference_seconds: Vec<f64>,
    pub total_seconds: Vec<f64>,
    pub crafting: MeanStd,
    pub inference: MeanStd,
    pub total: MeanStd,
    pub budget_seconds: f64,
    pub within_budget: bool,
    pub hardware: String,
}

/// Best-effort description of the machine the numbers came from.
pub fn hardware_note() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpu}; {threads} hardware threads; {}-{}; single-threaded sequential timing",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Times `cfg.samples` passes drawn without replacement (seeded), after
/// `cfg.warmup` untimed passes. Each pass is crafted and scored alone.
pub fn bench_inference(
    model: &MpnnModel,
    states: &[GameState],
    geometry: &GeometryConfig,
    pitch: &PitchSpec,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<BenchReport, BenchError> {
    if states.len() < cfg.samples {
        return Err(BenchError::InsufficientSamples {
            needed: cfg.samples,
            available: states.len(),
        });
    }
    let scaler = FeatureScaler::for_pitch(pitch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, states.len(), cfg.samples).into_vec();
    let fail = |index: usize, e: crate::Error| BenchError::Pipeline {
        index,
        source: Box::new(e),
    };

    for k in 0..cfg.warmup {
        let i = picked[k % picked.len()];
        let mut g = build_graph(&states[i], geometry, pitch).map_err(|e| fail(i, e.into()))?;
        scaler.apply_in_place(&mut g);
        black_box(model.forward(&g).map_err(|e| fail(i, e.into()))?);
    }

    let mut crafting = Vec::with_capacity(picked.len());
    let mut inference = Vec::with_capacity(picked.len());
    for &i in &picked {
        let t0 = Instant::now();
        let mut g =
            build_graph(black_box(&states[i]), geometry, pitch).map_err(|e| fail(i, e.into()))?;
        scaler.apply_in_place(&mut g);
        let t1 = Instant::now();
        let out = model
            .forward(black_box(&g))
            .map_err(|e| fail(i, e.into()))?;
        black_box(&out.0);
        let t2 = Instant::now();
        crafting.push((t1 - t0).as_secs_f64());
        inference.push((t2 - t1).as_secs_f64());
    }
    let total: Vec<f64> = crafting
        .iter()
        .zip(&inference)
        .map(|(a, b)| a + b)
        .collect();
    let total_stat = MeanStd::of(&total);
    Ok(BenchReport {
        samples: picked.len(),
        warmup: cfg.warmup,
        state_indices: picked,
        crafting: MeanStd::of(&crafting),
        inference: MeanStd::of(&inference),
        total: total_stat,
        crafting_seconds: crafting,
        inference_seconds: inference,
        total_seconds: total,
        budget_seconds: cfg.budget_seconds,
        within_budget: total_stat.mean < cfg.budget_seconds,
        hardware: hardware_note(),
    })
}

pub fn write_bench_summary<W: Write>(mut w: W, r: &BenchReport) -> std::io::Result<()> {
    writeln!(w, "stage\tmean_s\tstd_s")?;
    for (name, s) in [
        ("feature_crafting", r.crafting),
        ("inference", r.inference),
        ("total", r.total),
    ] {
        writeln!(w, "{name}\t{:.7}\t{:.7}", s.mean, s.std)?;
    }
    writeln!(w, "# samples={} warmup={}", r.samples, r.warmup)?;
    writeln!(
        w,
        "# budget={:.3}s within_budget={}",
        r.budget_seconds, r.within_budget
    )?;
    writeln!(w, "# hardware: {}", r.hardware)
}

pub fn write_bench_samples<W: Write>(mut w: W, r: &BenchReport) -> std::io::Result<()> {
    writeln!(w, "state_index\tcrafting_s\tinference_s\ttotal_s")?;
    for k in 0..r.samples {
        writeln!(
            w,
            "{}\t{:e}\t{:e}\t{:e}",
            r.state_indices[k], r.crafting_seconds[k], r.inference_seconds[k], r.total_seconds[k]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpnn::MpnnConfig;
    use crate::synth::{generate_labeled, GeneratorConfig};
    use proptest::prelude::*;

    fn two_pass_std(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    fn states(n: usize) -> Vec<GameState> {
        let cfg = GeneratorConfig::default();
        (0..n)
            .map(|i| generate_labeled(&cfg, &GeometryConfig::default(), &PitchSpec::default(), i))
            .collect()
    }

    #[test]
    fn too_few_states() {
        let m = MpnnModel::new(MpnnConfig {
            hidden_dim: 4,
            num_layers: 1,
            ..Default::default()
        })
        .unwrap();
        let e = bench_inference(
            &m,
            &states(3),
            &Default::default(),
            &Default::default(),
            &BenchConfig::default(),
            0,
        )
        .unwrap_err();
        assert!(matches!(
            e,
            BenchError::InsufficientSamples {
                needed: 1000,
                available: 3
            }
        ));
    }

    #[test]
    fn totals_are_additive() {
        let m = MpnnModel::new(MpnnConfig {
            hidden_dim: 8,
            num_layers: 2,
            ..Default::default()
        })
        .unwrap();
        let cfg = BenchConfig {
            samples: 40,
            warmup: 5,
            ..Default::default()
        };
        let r = bench_inference(
            &m,
            &states(60),
            &Default::default(),
            &Default::default(),
            &cfg,
            1,
        )
        .unwrap();
        assert_eq!(r.samples, 40);
        let mut seen = r.state_indices.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 40);
        for k in 0..r.samples {
            assert!(
                (r.total_seconds[k] - r.crafting_seconds[k] - r.inference_seconds[k]).abs() < 1e-9
            );
        }
        assert!((r.total.mean - r.crafting.mean - r.inference.mean).abs() < 1e-9);
        assert!((r.total.std - two_pass_std(&r.total_seconds)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn welford_matches_two_pass(xs in prop::collection::vec(1e-4f64..5e-2, 2..500)) {
            let s = MeanStd::of(&xs);
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((s.mean - mean).abs() < 1e-12);
            prop_assert!((s.std - two_pass_std(&xs)).abs() < 1e-9);
        }
    }
}
