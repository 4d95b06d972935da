//! Decision-quality KPIs per passer and their role-level distributions.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::metrics::PredictionRecord;
use crate::state::{PlayerId, Role};

pub const DEFAULT_MIN_PASSES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiProfile {
    pub player_id: PlayerId,
    pub role: Role,
    pub pass_count: usize,
    pub successful: usize,
    /// Share of passes played to the model's Top-1.
    pub best_pass_score: f64,
    /// Share of passes played into the model's Top-3.
    pub good_pass_score: f64,
    /// Share of completed passes whose receiver was outside the Top-3.
    pub creativity_ratio: f64,
    pub completion_rate: f64,
    /// `pass_count ≥ min_passes`; only these enter role aggregates.
    pub qualified: bool,
}

#[derive(Default)]
struct Tally {
    role: Role,
    passes: usize,
    successful: usize,
    top1: usize,
    top3: usize,
    creative: usize,
}

pub fn kpi_profiles(records: &[PredictionRecord], min_passes: usize) -> Vec<KpiProfile> {
    let mut by_player: BTreeMap<PlayerId, Tally> = BTreeMap::new();
    for r in records {
        let t = by_player.entry(r.passer_id).or_default();
        t.role = r.passer_role;
        let rank = r.rank_of(r.chosen);
        t.passes += 1;
        t.top1 += usize::from(rank == 1);
        t.top3 += usize::from(rank <= 3);
        if r.pass_successful {
            t.successful += 1;
            t.creative += usize::from(rank > 3);
        }
    }
    by_player
        .into_iter()
        .map(|(id, t)| {
            let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            KpiProfile {
                player_id: id,
                role: t.role,
                pass_count: t.passes,
                successful: t.successful,
                best_pass_score: frac(t.top1, t.passes),
                good_pass_score: frac(t.top3, t.passes),
                creativity_ratio: frac(t.creative, t.successful),
                completion_rate: frac(t.successful, t.passes),
                qualified: t.passes >= min_passes,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
        })
    }
}

/// Linear interpolation between order statistics of sorted `v`.
fn quantile(v: &[f64], q: f64) -> f64 {
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSummary {
    pub role: Role,
    pub players: usize,
    pub best_pass_score: Distribution,
    pub good_pass_score: Distribution,
    pub creativity_ratio: Distribution,
    pub completion_rate: Distribution,
}

/// Per-role KPI distributions over qualified profiles, in role order.
pub fn role_distributions(profiles: &[KpiProfile]) -> Vec<RoleSummary> {
    let mut groups: BTreeMap<Role, Vec<&KpiProfile>> = BTreeMap::new();
    for p in profiles.iter().filter(|p| p.qualified) {
        groups.entry(p.role).or_default().push(p);
    }
    groups
        .into_iter()
        .map(|(role, ps)| {
            let dist = |f: fn(&KpiProfile) -> f64| {
                Distribution::of(&ps.iter().map(|p| f(p)).collect::<Vec<_>>()).unwrap()
            };
            RoleSummary {
                role,
                players: ps.len(),
                best_pass_score: dist(|p| p.best_pass_score),
                good_pass_score: dist(|p| p.good_pass_score),
                creativity_ratio: dist(|p| p.creativity_ratio),
                completion_rate: dist(|p| p.completion_rate),
            }
        })
        .collect()
}

pub const KPI_HEADER: &str =
    "player_id\trole\tpass_count\tsuccessful\tbest_pass_score\tgood_pass_score\tcreativity_ratio\tcompletion_rate\tqualified";

pub fn write_kpi_table<W: Write>(mut w: W, profiles: &[KpiProfile]) -> std::io::Result<()> {
    writeln!(w, "{KPI_HEADER}")?;
    for p in profiles {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
            p.player_id.0,
            p.role.as_str(),
            p.pass_count,
            p.successful,
            p.best_pass_score,
            p.good_pass_score,
            p.creativity_ratio,
            p.completion_rate,
            p.qualified
        )?;
    }
    Ok(())
}

pub const ROLE_HEADER: &str = "role\tplayers\tkpi\tmean\tq1\tmedian\tq3";

pub fn write_role_table<W: Write>(mut w: W, summaries: &[RoleSummary]) -> std::io::Result<()> {
    writeln!(w, "{ROLE_HEADER}")?;
    for s in summaries {
        for (name, d) in [
            ("best_pass_score", s.best_pass_score),
            ("good_pass_score", s.good_pass_score),
            ("creativity_ratio", s.creativity_ratio),
            ("completion_rate", s.completion_rate),
        ] {
            writeln!(
                w,
                "{}\t{}\t{name}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                s.role.as_str(),
                s.players,
                d.mean,
                d.q1,
                d.median,
                d.q3
            )?;
        }
    }
    Ok(())
}
