//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero when a
//! criterion fails that is not listed in `DOCUMENTED_DEVIATIONS`.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command as Proc;
use std::time::Instant;

use passgraph::bench::bench_inference;
use passgraph::cli::{run, Cli, Command};
use passgraph::config::BenchConfig;
use passgraph::geometry::{occludes, signed_angle};
use passgraph::kpi::kpi_profiles;
use passgraph::metrics::{brier_score, global_auroc, topk_accuracy, PredictionRecord};
use passgraph::model_io::{load_model, mpnn_from_bytes, mpnn_to_bytes, FeatureContext};
use passgraph::optim::Parameters;
use passgraph::pipeline::{evaluate, train_all, Workspace};
use passgraph::snapshot::ingest;
use passgraph::synth::generate_dataset;
use passgraph::{
    Aggregator, GeometryConfig, MpnnConfig, MpnnModel, PassGraph, PitchSpec, PlayerId, Role,
    RunConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_state, scaled_graph, softmax_contract};

/// Criterion 7 asks for a creativity ratio of 3/5 on a ledger whose
/// successful passes have ranks {1, 1, 2, 4, 5}. Two of those five fall
/// outside the Top-3, so the defined ratio is 2/5; 3/5 would also break the
/// criterion's own identity (creativity + in-Top-3 share = 1). The line is
/// evaluated against the literal value and reported as it comes out.
const DOCUMENTED_DEVIATIONS: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

#[derive(Default)]
struct Contract {
    checked: usize,
    n10: usize,
    violations: Vec<String>,
}

impl Contract {
    fn check(&mut self, g: &PassGraph, probs: &[f64]) {
        self.checked += 1;
        if g.num_nodes() == 10 {
            self.n10 += 1;
        }
        if let Err(e) = softmax_contract(g, probs) {
            self.violations.push(format!("frame {}: {e}", g.frame_id));
        }
    }
}

/// State carried from the benchmark criterion into latency and determinism.
#[derive(Default)]
struct Shared {
    contract: Contract,
    desk_model: Option<MpnnModel>,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

fn c1_gradients(sh: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    let mut checked = 0usize;
    for i in 0..20 {
        let n = [3, 7, 11][i % 3];
        let g = scaled_graph(&{
            let nd = rng.random_range(1..=11);
            random_state(&mut rng, n, nd)
        });
        let agg = [Aggregator::Max, Aggregator::Mean, Aggregator::Add][(i / 3) % 3];
        let mut model = MpnnModel::new(MpnnConfig {
            hidden_dim: 8,
            num_layers: 2,
            aggregator: agg,
            dropout: 0.0,
            seed: 1000 + i as u64,
            ..Default::default()
        })
        .unwrap();
        let graphs = [g];
        let (_, grad) = model.loss_and_gradients(&graphs).unwrap();
        sh.contract
            .check(&graphs[0], &model.forward(&graphs[0]).unwrap().0);
        let analytic = grad.flatten();
        let mut k = 0;
        for t in 0..model.params.slices().len() {
            let len = model.params.slices()[t].len();
            for j in 0..len {
                let orig = model.params.slices()[t][j];
                model.params.slices_mut()[t][j] = orig + eps;
                let up = model.loss_and_gradients(&graphs).unwrap().0;
                model.params.slices_mut()[t][j] = orig - eps;
                let down = model.loss_and_gradients(&graphs).unwrap().0;
                model.params.slices_mut()[t][j] = orig;
                let fd = (up - down) / (2.0 * eps);
                let e = rel_err(analytic[k], fd);
                if e > worst {
                    worst = e;
                    where_ = format!("graph {i} (N={n}, {}), param {k}", agg.as_str());
                }
                k += 1;
                checked += 1;
            }
        }
    }
    outcome(
        worst < 1e-5,
        format!("{checked} partials on 20 graphs, max rel err {worst:.2e} at {where_} (tol 1e-5)"),
    )
}

fn c2_permutation(sh: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut max_dev = [0.0f64; 3];
    let mut exact_max = true;
    for i in 0..100 {
        let n = rng.random_range(2..=11);
        let state = {
            let nd = rng.random_range(1..=11);
            random_state(&mut rng, n, nd)
        };
        let mut perm = state.clone();
        perm.attackers.shuffle(&mut rng);
        let a = i % 3;
        let model = MpnnModel::new(MpnnConfig {
            hidden_dim: 16,
            num_layers: 3,
            aggregator: [Aggregator::Max, Aggregator::Mean, Aggregator::Add][a],
            seed: i as u64,
            ..Default::default()
        })
        .unwrap();
        let (g0, g1) = (scaled_graph(&state), scaled_graph(&perm));
        let (p0, p1) = (model.forward(&g0).unwrap().0, model.forward(&g1).unwrap().0);
        sh.contract.check(&g0, &p0);
        sh.contract.check(&g1, &p1);
        for (k, id) in g0.node_ids.iter().enumerate() {
            let k1 = g1.node_ids.iter().position(|x| x == id).unwrap();
            let d = (p0[k] - p1[k1]).abs();
            max_dev[a] = max_dev[a].max(d);
            if a == 0 && p0[k].to_bits() != p1[k1].to_bits() {
                exact_max = false;
            }
        }
    }
    outcome(
        exact_max && max_dev[1] <= 1e-9 && max_dev[2] <= 1e-9,
        format!(
            "100 pairs; max |Δp| max {:.1e} (bit-exact {exact_max}), mean {:.1e}, add {:.1e} (tol 1e-9)",
            max_dev[0], max_dev[1], max_dev[2]
        ),
    )
}

fn c3_softmax(sh: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for n in 2..=11 {
        let reps = if n == 10 { 200 } else { 40 };
        for r in 0..reps {
            let state = {
                let nd = rng.random_range(1..=11);
                random_state(&mut rng, n, nd)
            };
            let g = scaled_graph(&state);
            let model = MpnnModel::new(MpnnConfig {
                hidden_dim: 8,
                num_layers: 2,
                aggregator: [Aggregator::Max, Aggregator::Mean, Aggregator::Add][r % 3],
                seed: r as u64,
                ..Default::default()
            })
            .unwrap();
            sh.contract.check(&g, &model.forward(&g).unwrap().0);
        }
    }
    let c = &sh.contract;
    outcome(
        c.violations.is_empty() && c.n10 > 0,
        format!(
            "{} forward calls ({} with N=10), {} violations{}",
            c.checked,
            c.n10,
            c.violations.len(),
            c.violations
                .first()
                .map(|v| format!(", first: {v}"))
                .unwrap_or_default()
        ),
    )
}

/// Disc-sampling oracle for one (lane, defender) decision.
fn occlusion_oracle(
    passer: [f64; 2],
    target: [f64; 2],
    center: [f64; 2],
    alpha: f64,
    r_p: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let w = [target[0] - passer[0], target[1] - passer[1]];
    let wn = w[0].hypot(w[1]);
    let dir = w[1].atan2(w[0]);
    let covers_passer = (center[0] - passer[0]).hypot(center[1] - passer[1]) <= r_p;
    let mut in_cone = false;
    let mut in_reach = false;
    let mut test = |p: [f64; 2]| {
        let d = [p[0] - passer[0], p[1] - passer[1]];
        let mut off = d[1].atan2(d[0]) - dir;
        while off > std::f64::consts::PI {
            off -= std::f64::consts::TAU;
        }
        while off < -std::f64::consts::PI {
            off += std::f64::consts::TAU;
        }
        in_cone |= off.abs() <= 0.5 * alpha;
        in_reach |= d[0].hypot(d[1]) <= wn;
    };
    for k in 0..4096 {
        let a = std::f64::consts::TAU * k as f64 / 4096.0;
        test([center[0] + r_p * a.cos(), center[1] + r_p * a.sin()]);
    }
    for _ in 0..2000 {
        let r = r_p * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        test([center[0] + r * a.cos(), center[1] + r * a.sin()]);
    }
    test(center);
    covers_passer || (in_cone && in_reach)
}

/// Angular distance of the disc edge from the cone edge (rad).
fn boundary_margin(
    passer: [f64; 2],
    target: [f64; 2],
    center: [f64; 2],
    alpha: f64,
    r_p: f64,
) -> f64 {
    let w = [target[0] - passer[0], target[1] - passer[1]];
    let t = [center[0] - passer[0], center[1] - passer[1]];
    let tn = t[0].hypot(t[1]);
    let ang = ((w[0] * t[0] + w[1] * t[1]) / (w[0].hypot(w[1]) * tn))
        .clamp(-1.0, 1.0)
        .acos();
    (ang - (r_p / tn).min(1.0).asin() - 0.5 * alpha).abs()
}

fn c4_geometry(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let cfg = GeometryConfig::default();
    let (mut total, mut agree, mut worst_margin) = (0usize, 0usize, 0.0f64);
    for _ in 0..200 {
        let state = random_state(&mut rng, 11, 11);
        let passer = state.passer().pos;
        for target in state.attackers.iter().filter(|a| a.id != state.passer_id) {
            for d in &state.defenders {
                total += 1;
                let got = occludes(
                    passer,
                    target.pos,
                    d.pos,
                    cfg.cone_width,
                    cfg.occlusion_radius,
                );
                let want = occlusion_oracle(
                    passer,
                    target.pos,
                    d.pos,
                    cfg.cone_width,
                    cfg.occlusion_radius,
                    &mut rng,
                );
                if got == want {
                    agree += 1;
                } else {
                    worst_margin = worst_margin.max(boundary_margin(
                        passer,
                        target.pos,
                        d.pos,
                        cfg.cone_width,
                        cfg.occlusion_radius,
                    ));
                }
            }
        }
    }
    let rate = agree as f64 / total as f64;

    // signed angle against atan2 differences; mirror on a dyadic grid so W − y is exact
    let q = |v: f64| (v * 1024.0).round() / 1024.0;
    let mut max_angle_err = 0.0f64;
    let mut mirror_exact = true;
    let pitch = PitchSpec::default();
    for _ in 0..5000 {
        let p = [
            q(rng.random_range(1.0..104.0)),
            q(rng.random_range(1.0..67.0)),
        ];
        let b = [
            q(p[0] + rng.random_range(-1.0..1.0)),
            q(p[1] + rng.random_range(-1.0..1.0)),
        ];
        let t = [
            q(rng.random_range(1.0..104.0)),
            q(rng.random_range(1.0..67.0)),
        ];
        let (Ok(theta), true) = (signed_angle(p, b, t), p != b) else {
            continue;
        };
        let mut direct = (t[1] - p[1]).atan2(t[0] - p[0]) - (p[1] - b[1]).atan2(p[0] - b[0]);
        while direct > std::f64::consts::PI {
            direct -= std::f64::consts::TAU;
        }
        while direct <= -std::f64::consts::PI {
            direct += std::f64::consts::TAU;
        }
        max_angle_err = max_angle_err.max((theta - direct).abs());
        let m = |v: [f64; 2]| [v[0], pitch.width - v[1]];
        let mirrored = signed_angle(m(p), m(b), m(t)).unwrap();
        if theta.abs() < std::f64::consts::PI && mirrored != -theta {
            mirror_exact = false;
        }
    }
    outcome(
        rate >= 0.999 && worst_margin <= 1e-3 && max_angle_err <= 1e-12 && mirror_exact,
        format!(
            "lane oracle agreement {agree}/{total} ({:.4}%), worst disagreement margin {worst_margin:.1e} rad; \
             signed_angle vs atan2 max err {max_angle_err:.1e}; mirror negates exactly: {mirror_exact}",
            100.0 * rate
        ),
    )
}

fn c5_benchmark(sh: &mut Shared) -> Outcome {
    let t0 = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.model = MpnnConfig {
        hidden_dim: 64,
        num_layers: 3,
        aggregator: Aggregator::Max,
        ..cfg.model
    };
    let ok_setup = cfg.generator.n_passes == 20_000
        && cfg.generator.epsilon == 0.1
        && cfg.generator.beta == 6.0
        && cfg.training.split_ratio == [0.7, 0.15, 0.15];
    let ws = Workspace::new(
        &cfg,
        generate_dataset(&cfg.generator, &cfg.geometry, &cfg.pitch)
            .unwrap()
            .states,
    )
    .unwrap();
    let trained = train_all(&cfg, &ws).unwrap();
    let ev = evaluate(&cfg, &ws, &trained.mpnn, Some(&trained.logreg)).unwrap();
    for &i in ws.test.iter().take(500) {
        let g = &ws.graphs[i];
        sh.contract.check(g, &trained.mpnn.forward(g).unwrap().0);
    }
    let get = |name: &str| ev.rows.iter().find(|r| r.0 == name).unwrap().1;
    let (m, l, n) = (get("mpnn"), get("logreg"), get("nearest"));
    let secs = t0.elapsed().as_secs_f64();
    sh.desk_model = Some(trained.mpnn);
    outcome(
        ok_setup && m.top1 >= 0.70 && m.top3 >= 0.93 && n.top1 <= 0.45 && n.top1 < l.top1 && l.top1 < m.top1 && secs < 1800.0,
        format!(
            "{} test passes; mpnn top1 {:.4} top3 {:.4} auroc {:.4} brier {:.4}; logreg top1 {:.4}; nearest top1 {:.4}; {:.0}s ({} epochs)",
            m.passes, m.top1, m.top3, m.auroc, m.brier, l.top1, n.top1, secs, trained.report.epochs.len()
        ),
    )
}

fn record(probs: &[f64], truth: usize, success: bool) -> PredictionRecord {
    PredictionRecord {
        pass_id: 0,
        candidates: (0..probs.len() as u32).map(PlayerId).collect(),
        probabilities: probs.to_vec(),
        truth,
        chosen: truth,
        pass_successful: success,
        passer_id: PlayerId(1),
        passer_role: Role::Midfielder,
    }
}

fn c6_metrics(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let records: Vec<PredictionRecord> = (0..30)
        .map(|_| {
            let n = rng.random_range(2..=10);
            // coarse values so ties appear both within and across passes
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1..=8) as f64).collect();
            let s: f64 = raw.iter().sum();
            record(
                &raw.iter().map(|v| v / s).collect::<Vec<_>>(),
                rng.random_range(0..n),
                true,
            )
        })
        .collect();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for r in &records {
        for (i, &p) in r.probabilities.iter().enumerate() {
            if i == r.truth {
                pos.push(p)
            } else {
                neg.push(p)
            }
        }
    }
    let mut wins = 0.0;
    for &a in &pos {
        for &b in &neg {
            wins += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    let brute = wins / (pos.len() * neg.len()) as f64;
    let auroc_err = (global_auroc(&records).unwrap() - brute).abs();

    let uniform = record(&[0.1; 10], 3, true);
    let b_uniform = brier_score(std::slice::from_ref(&uniform)).unwrap();
    // [0.7, 0.2, 0.1] with truth 1: (0.49 + 0.64 + 0.01) / 3
    let b_hand = brier_score(&[record(&[0.7, 0.2, 0.1], 1, true)]).unwrap();
    let brier_ok = (b_uniform - 0.09).abs() < 1e-12 && (b_hand - 1.14 / 3.0).abs() < 1e-12;

    let sims: Vec<PredictionRecord> = (0..10_000)
        .map(|_| record(&[0.1; 10], rng.random_range(0..10), true))
        .collect();
    let mut topk_dev = 0.0f64;
    for k in [1, 3, 5] {
        topk_dev = topk_dev.max((topk_accuracy(&sims, k).unwrap() - k as f64 / 10.0).abs());
    }
    outcome(
        auroc_err <= 1e-12 && brier_ok && topk_dev <= 0.02,
        format!(
            "auroc vs pair enumeration |Δ| {auroc_err:.1e}; brier uniform-10 {b_uniform:.12}, hand case {b_hand:.12}; top-k max |acc − k/10| {topk_dev:.4}"
        ),
    )
}

fn c7_kpis(sh: &mut Shared) -> Outcome {
    let ranked = |rank: usize, success: bool| {
        let raw: Vec<f64> = (0..10).map(|i| (10 - i) as f64).collect();
        let s: f64 = raw.iter().sum();
        record(
            &raw.iter().map(|v| v / s).collect::<Vec<_>>(),
            rank - 1,
            success,
        )
    };
    let ledger: Vec<_> = [
        (1, true),
        (1, true),
        (2, true),
        (4, true),
        (4, false),
        (5, true),
    ]
    .into_iter()
    .map(|(r, s)| ranked(r, s))
    .collect();
    let p = &kpi_profiles(&ledger, 1)[0];
    let expected = (2.0 / 6.0, 3.0 / 6.0, 3.0 / 5.0);
    let ledger_ok = p.best_pass_score == expected.0
        && p.good_pass_score == expected.1
        && p.creativity_ratio == expected.2;

    // identities on an evaluated dataset: every labeled pass of a small run
    let mut identity_fail = 0;
    let mut players = 0;
    if let Some(model) = &sh.desk_model {
        let mut cfg = RunConfig::default();
        cfg.generator.n_passes = 4000;
        cfg.generator.seed = 71;
        let ws = Workspace::new(
            &cfg,
            generate_dataset(&cfg.generator, &cfg.geometry, &cfg.pitch)
                .unwrap()
                .states,
        )
        .unwrap();
        let records = ws.records(model, &ws.labeled()).unwrap();
        for prof in kpi_profiles(&records, 1) {
            players += 1;
            let mine: Vec<_> = records
                .iter()
                .filter(|r| r.passer_id == prof.player_id)
                .collect();
            let succ: Vec<_> = mine.iter().filter(|r| r.pass_successful).collect();
            let inside = succ.iter().filter(|r| r.rank_of(r.chosen) <= 3).count() as f64;
            let ok_order = prof.good_pass_score >= prof.best_pass_score;
            let ok_sum = succ.is_empty()
                || (prof.creativity_ratio + inside / succ.len() as f64 - 1.0).abs() <= 1e-12;
            if !(ok_order && ok_sum) {
                identity_fail += 1;
            }
        }
    }
    outcome(
        ledger_ok && identity_fail == 0 && players > 0,
        format!(
            "identities hold for {}/{players} players; ledger gives ({:.4}, {:.4}, {:.4}), expected (2/6, 3/6, 3/5) = ({:.4}, {:.4}, {:.4})",
            players - identity_fail,
            p.best_pass_score,
            p.good_pass_score,
            p.creativity_ratio,
            expected.0,
            expected.1,
            expected.2
        ),
    )
}

fn c8_latency(sh: &mut Shared) -> Outcome {
    let Some(model) = &sh.desk_model else {
        return outcome(false, "no desk model (criterion 5 did not finish)");
    };
    let mut cfg = RunConfig::default();
    cfg.generator.n_passes = 1500;
    cfg.generator.seed = 88;
    let states = generate_dataset(&cfg.generator, &cfg.geometry, &cfg.pitch)
        .unwrap()
        .states;
    let r = bench_inference(
        model,
        &states,
        &cfg.geometry,
        &cfg.pitch,
        &BenchConfig::default(),
        8,
    )
    .unwrap();
    outcome(
        r.samples == 1000 && r.total.mean < 0.040 && r.crafting.mean < 0.005,
        format!(
            "{} passes: crafting {:.6} ± {:.6} s, inference {:.6} ± {:.6} s, total {:.6} ± {:.6} s (budget 0.040, crafting < 0.005)",
            r.samples, r.crafting.mean, r.crafting.std, r.inference.mean, r.inference.std, r.total.mean, r.total.std
        ),
    )
}

fn strict_run(cmd: Command, config: &Path, out: &Path) -> PathBuf {
    run(&Cli {
        command: cmd,
        config: Some(config.to_path_buf()),
        seed: Some(11),
        strict: true,
        out: out.to_path_buf(),
    })
    .unwrap()
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn c9_determinism(sh: &mut Shared) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let base = "[generator]\nn_passes = 1200\n[model]\nhidden_dim = 16\nnum_layers = 2\ndropout = 0.2\n[training]\nmax_epochs = 4\n";
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, base).unwrap();
    let g1 = strict_run(Command::Generate, &cfg_path, &out);
    let g2 = strict_run(Command::Generate, &cfg_path, &out);
    let gen_same = read(g1.join("snapshots.jsonl")) == read(g2.join("snapshots.jsonl"));

    let with_data = format!(
        "{base}[paths]\nsnapshots = {:?}\n",
        g1.join("snapshots.jsonl")
    );
    std::fs::write(&cfg_path, &with_data).unwrap();
    let t1 = strict_run(Command::Train, &cfg_path, &out);
    let t2 = strict_run(Command::Train, &cfg_path, &out);
    let train_same = read(t1.join("metrics.tsv")) == read(t2.join("metrics.tsv"))
        && read(t1.join("model.bin")) == read(t2.join("model.bin"));

    std::fs::write(
        &cfg_path,
        format!("{with_data}model = {:?}\n", t1.join("model.bin")),
    )
    .unwrap();
    let e1 = strict_run(Command::Eval, &cfg_path, &out);
    let e2 = strict_run(Command::Eval, &cfg_path, &out);
    let eval_same = read(e1.join("metrics.tsv")) == read(e2.join("metrics.tsv"))
        && read(e1.join("kpi_players.tsv")) == read(e2.join("kpi_players.tsv"));

    let roundtrip = match &sh.desk_model {
        Some(m) => {
            let (back, _) = mpnn_from_bytes(&mpnn_to_bytes(m, &FeatureContext::default())).unwrap();
            back.params
                .flatten()
                .iter()
                .zip(m.params.flatten())
                .all(|(a, b)| a.to_bits() == b.to_bits())
                && back.params.num_params() == m.params.num_params()
        }
        None => false,
    };
    outcome(
        gen_same && train_same && eval_same && roundtrip,
        format!(
            "strict reruns identical: generate {gen_same}, train {train_same}, eval {eval_same}; desk model save/load bit-exact {roundtrip}"
        ),
    )
}

fn cli(args: &[&str], config: &Path, out: &Path) -> (bool, PathBuf, String) {
    let o = Proc::new(env!("CARGO_BIN_EXE_passgraph"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn passgraph");
    let dir = PathBuf::from(String::from_utf8_lossy(&o.stdout).trim());
    (
        o.status.success(),
        dir,
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn c10_pipeline(_: &mut Shared) -> Outcome {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let cfg_path = dir.path().join("run.toml");
    let base =
        "[generator]\nn_passes = 2000\nseed = 23\n[model]\nhidden_dim = 32\nnum_layers = 2\n\
                [training]\nmax_epochs = 30\nlearning_rate = 0.003\n";
    std::fs::write(&cfg_path, base).unwrap();
    let mut steps = Vec::new();
    let (ok, gen, err) = cli(&["generate"], &cfg_path, &out);
    steps.push(("generate", ok, err));
    let snapshots = gen.join("snapshots.jsonl");
    let with_data = format!("{base}[paths]\nsnapshots = {snapshots:?}\n");
    std::fs::write(&cfg_path, &with_data).unwrap();
    let (ok, train, err) = cli(&["train"], &cfg_path, &out);
    steps.push(("train", ok, err));
    let model_path = train.join("model.bin");
    std::fs::write(
        &cfg_path,
        format!(
            "{with_data}model = {model_path:?}\nlogreg_model = {:?}\n",
            train.join("logreg.bin")
        ),
    )
    .unwrap();
    let mut dirs = HashMap::new();
    for cmd in ["eval", "report", "bench"] {
        let (ok, d, err) = cli(&[cmd], &cfg_path, &out);
        steps.push((cmd, ok, err));
        dirs.insert(cmd, d);
    }
    let failed: Vec<String> = steps
        .iter()
        .filter(|s| !s.1)
        .map(|s| format!("{}: {}", s.0, s.2.trim()))
        .collect();
    if !failed.is_empty() {
        return outcome(false, format!("failed steps: {}", failed.join("; ")));
    }

    // brute-force flag filter straight from the model and the snapshot file
    let pitch = PitchSpec::default();
    let states = ingest(&snapshots, &pitch).unwrap().states;
    let (model, _) = load_model(&model_path).unwrap();
    let mut expected = BTreeSet::new();
    for s in states.iter().filter(|s| s.pass_successful == Some(false)) {
        let g = scaled_graph(s);
        let probs = model.forward(&g).unwrap().0;
        let best = g
            .candidates()
            .iter()
            .map(|&c| probs[c])
            .fold(f64::MIN, f64::max);
        let chosen = probs[g.label_index.unwrap()];
        if best - chosen >= 0.25 {
            expected.insert(s.frame_id);
        }
    }
    let report_dir = dirs["report"].join("post_game");
    let flags_tsv = std::fs::read_to_string(report_dir.join("flags.tsv")).unwrap();
    let got: BTreeSet<u64> = flags_tsv
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();

    let by_frame: HashMap<u64, _> = states.iter().map(|s| (s.frame_id, s)).collect();
    let mut svg_checked = 0;
    let mut svg_bad = Vec::new();
    for id in &got {
        let text =
            std::fs::read_to_string(report_dir.join("reviews").join(format!("pass_{id}.svg")))
                .unwrap();
        let s = by_frame[id];
        match roxmltree::Document::parse(&text) {
            Ok(doc) => {
                let pitch_groups = doc
                    .descendants()
                    .filter(|n| n.has_tag_name("g") && n.attribute("id") == Some("pitch"))
                    .count();
                let glyphs = doc
                    .descendants()
                    .filter(|n| {
                        n.attribute("class")
                            .is_some_and(|c| c.split(' ').any(|t| t == "player"))
                    })
                    .count();
                if pitch_groups != 1 || glyphs != s.attackers.len() + s.defenders.len() {
                    svg_bad.push(*id);
                }
            }
            Err(_) => svg_bad.push(*id),
        }
        svg_checked += 1;
    }
    let metrics_ok = std::fs::read_to_string(dirs["eval"].join("metrics.tsv"))
        .unwrap()
        .lines()
        .count()
        == 4;
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        got == expected && !got.is_empty() && svg_bad.is_empty() && metrics_ok && secs < 300.0,
        format!(
            "5 commands exit 0; {} flags vs {} by brute force (equal: {}); {svg_checked} SVG reviews, {} malformed; {secs:.0}s",
            got.len(),
            expected.len(),
            got == expected,
            svg_bad.len()
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn(&mut Shared) -> Outcome); 10] = [
        (1, "gradient exactness", c1_gradients),
        (2, "permutation equivariance", c2_permutation),
        (3, "masked-softmax contract", c3_softmax),
        (4, "geometry oracle agreement", c4_geometry),
        (5, "synthetic benchmark", c5_benchmark),
        (6, "metric oracles", c6_metrics),
        (7, "KPI identities", c7_kpis),
        (8, "latency budget", c8_latency),
        (9, "determinism", c9_determinism),
        (10, "end-to-end pipeline", c10_pipeline),
    ];
    let mut shared = Shared::default();
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, f) in criteria {
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(|| f(&mut shared))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && DOCUMENTED_DEVIATIONS.contains(&id) {
            " [documented deviation]"
        } else {
            ""
        };
        println!(
            "{tag} {id:>2} {name}: {} ({:.1}s){note}",
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        if o.pass {
            passed += 1;
        } else if !DOCUMENTED_DEVIATIONS.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/10 pass");
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
