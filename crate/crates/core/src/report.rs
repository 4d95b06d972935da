//! Static analyst artifacts: SVG pass reviews, the post-game HTML report and
//! the scouting table.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kpi::{KpiProfile, RoleSummary};
use crate::metrics::PredictionRecord;
use crate::pitch::{PitchSpec, Vec2};
use crate::state::{GameState, PlayerId, Role};

const SCALE: f64 = 7.0;
const MARGIN: f64 = 20.0;
const TABLE_WIDTH: f64 = 230.0;

const STYLE: &str = "\
.turf{fill:#3a7d44}.line{fill:none;stroke:#fff;stroke-width:1.5}\
.attacker circle{fill:#1f5fbf;stroke:#fff;stroke-width:1}\
.passer circle{fill:#f2c230;stroke:#000;stroke-width:2}\
.defender rect{fill:#d8342c;stroke:#000;stroke-width:1}\
.prob{font:bold 11px sans-serif;fill:#fff}.ball{fill:#fff;stroke:#000}\
.arrow{stroke-width:2.5}.actual{stroke:#fff}.top1{stroke:#f2c230;stroke-dasharray:6 4}\
.topk text{font:12px monospace;fill:#222}";

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

struct Canvas {
    pitch: PitchSpec,
}

impl Canvas {
    /// Pitch meters to SVG pixels, y pointing up the page.
    fn px(&self, p: Vec2) -> (f64, f64) {
        (
            MARGIN + p[0] * SCALE,
            MARGIN + (self.pitch.width - p[1]) * SCALE,
        )
    }

    fn rect(&self, svg: &mut String, x0: f64, y0: f64, x1: f64, y1: f64) {
        let (ax, ay) = self.px([x0, y1]);
        let (bx, by) = self.px([x1, y0]);
        let _ = write!(
            svg,
            r#"<rect class="line" x="{ax:.1}" y="{ay:.1}" width="{:.1}" height="{:.1}"/>"#,
            bx - ax,
            by - ay
        );
    }

    fn markings(&self, svg: &mut String) {
        let (l, w) = (self.pitch.length, self.pitch.width);
        let (x0, y0) = self.px([0.0, w]);
        let _ = write!(
            svg,
            r#"<rect class="turf" x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}"/>"#,
            l * SCALE,
            w * SCALE
        );
        self.rect(svg, 0.0, 0.0, l, w);
        let (hx, hy0) = self.px([l / 2.0, 0.0]);
        let (_, hy1) = self.px([l / 2.0, w]);
        let _ = write!(
            svg,
            r#"<line class="line" x1="{hx:.1}" y1="{hy0:.1}" x2="{hx:.1}" y2="{hy1:.1}"/>"#
        );
        let (cx, cy) = self.px(self.pitch.center());
        let _ = write!(
            svg,
            r#"<circle class="line" cx="{cx:.1}" cy="{cy:.1}" r="{:.1}"/>"#,
            9.15 * SCALE
        );
        let mid = w / 2.0;
        for (depth, half) in [(16.5, 20.16), (5.5, 9.16)] {
            self.rect(svg, 0.0, mid - half, depth, mid + half);
            self.rect(svg, l - depth, mid - half, l, mid + half);
        }
    }
}

/// Renders one pass: players, the played pass, the model's Top-1 and a
/// Top-`top_k` side table. Probabilities come straight from `record`.
pub fn render_pass_review(
    state: &GameState,
    record: &PredictionRecord,
    pitch: &PitchSpec,
    top_k: usize,
) -> String {
    let c = Canvas { pitch: *pitch };
    let width = 2.0 * MARGIN + pitch.length * SCALE + TABLE_WIDTH;
    let height = 2.0 * MARGIN + pitch.width * SCALE;
    let prob: HashMap<PlayerId, f64> = record
        .candidates
        .iter()
        .copied()
        .zip(record.probabilities.iter().copied())
        .collect();
    let mut svg = String::with_capacity(8192);
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" data-pass-id="{}">"#,
        record.pass_id
    );
    let _ = write!(
        svg,
        "<defs><style>{STYLE}</style>\
<marker id=\"head-actual\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0L10,5L0,10z\" fill=\"#fff\"/></marker>\
<marker id=\"head-top1\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0L10,5L0,10z\" fill=\"#f2c230\"/></marker></defs>"
    );
    let _ = write!(
        svg,
        "<title>pass {} frame {} t={:.2}s</title>",
        record.pass_id, state.frame_id, state.timestamp
    );
    svg.push_str(r#"<g id="pitch">"#);
    c.markings(&mut svg);

    let passer = state.passer();
    let (px, py) = c.px(passer.pos);
    let arrow = |svg: &mut String, class: &str, id: PlayerId| {
        if let Some(t) = state.attacker(id) {
            let (tx, ty) = c.px(t.pos);
            let _ = write!(
                svg,
                r#"<line class="arrow {class}" data-target="{id}" x1="{px:.1}" y1="{py:.1}" x2="{tx:.1}" y2="{ty:.1}" marker-end="url(#head-{class})"/>"#
            );
        }
    };
    arrow(&mut svg, "actual", record.candidates[record.chosen]);
    arrow(&mut svg, "top1", record.candidates[record.top1()]);

    for d in &state.defenders {
        let (x, y) = c.px(d.pos);
        let _ = write!(
            svg,
            r#"<g class="player defender" data-id="{}"><rect x="{:.1}" y="{:.1}" width="10" height="10"/></g>"#,
            d.id,
            x - 5.0,
            y - 5.0
        );
    }
    for a in &state.attackers {
        let (x, y) = c.px(a.pos);
        if a.id == state.passer_id {
            let _ = write!(
                svg,
                r#"<g class="player attacker passer" data-id="{}"><circle cx="{x:.1}" cy="{y:.1}" r="8"/><text class="prob" x="{:.1}" y="{:.1}">passer</text></g>"#,
                a.id,
                x + 10.0,
                y - 8.0
            );
        } else {
            let p = prob.get(&a.id).copied().unwrap_or(0.0);
            let _ = write!(
                svg,
                r#"<g class="player attacker" data-id="{}" data-p="{p:.3}"><circle cx="{x:.1}" cy="{y:.1}" r="7"/><text class="prob" x="{:.1}" y="{:.1}">{p:.3}</text></g>"#,
                a.id,
                x + 9.0,
                y - 8.0
            );
        }
    }
    let (bx, by) = c.px(state.ball);
    let _ = write!(
        svg,
        r#"<circle class="ball" cx="{bx:.1}" cy="{by:.1}" r="3"/>"#
    );
    svg.push_str("</g>");

    let tx = 2.0 * MARGIN + pitch.length * SCALE;
    let _ = write!(
        svg,
        r#"<g class="topk" id="topk"><text x="{tx:.1}" y="{:.1}">Top-{top_k}</text>"#,
        MARGIN + 12.0
    );
    for (row, &i) in record.ranking().iter().take(top_k).enumerate() {
        let id = record.candidates[i];
        let role = state.attacker(id).map_or(Role::Unknown, |a| a.role);
        let mark = if i == record.chosen { " *" } else { "" };
        let _ = write!(
            svg,
            r#"<text class="topk-row" x="{tx:.1}" y="{:.1}" data-id="{id}">{}. #{id} {} {:.3}{mark}</text>"#,
            MARGIN + 32.0 + 18.0 * row as f64,
            row + 1,
            role.as_str(),
            record.probabilities[i]
        );
    }
    svg.push_str("</g></svg>\n");
    svg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPass {
    pub pass_id: u64,
    pub frame_id: u64,
    pub timestamp: f64,
    pub passer_id: PlayerId,
    pub chosen_id: PlayerId,
    pub top1_id: PlayerId,
    pub p_chosen: f64,
    pub p_top1: f64,
    pub gap: f64,
}

/// Unsuccessful passes whose model Top-1 beat the chosen target by at least
/// `threshold`, largest gap first (ties by pass id).
pub fn flag_passes(records: &[PredictionRecord], threshold: f64) -> Vec<(usize, f64)> {
    let mut flags: Vec<(usize, f64)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.pass_successful)
        .filter_map(|(k, r)| {
            let gap = r.probabilities[r.top1()] - r.probabilities[r.chosen];
            (gap >= threshold).then_some((k, gap))
        })
        .collect();
    flags.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(records[a.0].pass_id.cmp(&records[b.0].pass_id))
    });
    flags
}

#[derive(Debug, Clone)]
pub struct PostGameReport {
    pub threshold: f64,
    pub flags: Vec<FlaggedPass>,
    /// One SVG per flag, same order.
    pub reviews: Vec<String>,
    pub html: String,
}

/// `states` must contain a snapshot for every flagged record (matched by frame id).
pub fn post_game_report(
    records: &[PredictionRecord],
    states: &[GameState],
    pitch: &PitchSpec,
    threshold: f64,
    top_k: usize,
) -> PostGameReport {
    let by_frame: HashMap<u64, &GameState> = states.iter().map(|s| (s.frame_id, s)).collect();
    let picked = flag_passes(records, threshold);
    let rendered: Vec<(FlaggedPass, String)> = picked
        .par_iter()
        .filter_map(|&(k, gap)| {
            let r = &records[k];
            let state = by_frame.get(&r.pass_id)?;
            let top1 = r.top1();
            let flag = FlaggedPass {
                pass_id: r.pass_id,
                frame_id: state.frame_id,
                timestamp: state.timestamp,
                passer_id: r.passer_id,
                chosen_id: r.candidates[r.chosen],
                top1_id: r.candidates[top1],
                p_chosen: r.probabilities[r.chosen],
                p_top1: r.probabilities[top1],
                gap,
            };
            Some((flag, render_pass_review(state, r, pitch, top_k)))
        })
        .collect();
    let (flags, reviews): (Vec<_>, Vec<_>) = rendered.into_iter().unzip();
    let failed = records.iter().filter(|r| !r.pass_successful).count();

    let mut html = page_head("Post-game pass review");
    let _ = write!(
        html,
        "<h1>Post-game pass review</h1><p>{} passes, {failed} unsuccessful, threshold {threshold:.2}.</p>",
        records.len()
    );
    if flags.is_empty() {
        html.push_str(r#"<p class="banner no-flags">No flags: no unsuccessful pass had a clearly better alternative.</p>"#);
    } else {
        html.push_str("<table><tr><th>#</th><th>pass</th><th>frame</th><th>t (s)</th><th>passer</th><th>chosen</th><th>p</th><th>model top-1</th><th>p</th><th>gap</th></tr>");
        for (i, f) in flags.iter().enumerate() {
            let _ = write!(
                html,
                "<tr><td>{}</td><td><a href=\"#pass-{}\">{}</a></td><td>{}</td><td>{:.2}</td><td>{}</td><td>{}</td><td>{:.3}</td><td>{}</td><td>{:.3}</td><td>{:.3}</td></tr>",
                i + 1,
                f.pass_id,
                f.pass_id,
                f.frame_id,
                f.timestamp,
                f.passer_id,
                f.chosen_id,
                f.p_chosen,
                f.top1_id,
                f.p_top1,
                f.gap
            );
        }
        html.push_str("</table>");
        for (f, svg) in flags.iter().zip(&reviews) {
            let _ = write!(
                html,
                "<section class=\"flag\" id=\"pass-{}\" data-pass-id=\"{}\"><h2>Pass {} (gap {:.3})</h2>{svg}</section>",
                f.pass_id, f.pass_id, f.pass_id, f.gap
            );
        }
    }
    html.push_str("</body></html>\n");
    PostGameReport {
        threshold,
        flags,
        reviews,
        html,
    }
}

fn page_head(title: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{}</title><style>\
body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse;margin:1em 0}}\
td,th{{border:1px solid #bbb;padding:3px 8px;text-align:right}}\
.outlier{{background:#ffe08a}}.z-hot{{font-weight:bold;color:#b00}}\
.banner{{padding:1em;background:#e8f4e8;border:1px solid #8c8}}</style></head><body>",
        esc(title)
    )
}

/// Writes `report.html` plus `reviews/pass_<id>.svg` into `dir`.
pub fn write_post_game(report: &PostGameReport, dir: &Path) -> std::io::Result<()> {
    let reviews = dir.join("reviews");
    std::fs::create_dir_all(&reviews)?;
    std::fs::write(dir.join("report.html"), &report.html)?;
    for (f, svg) in report.flags.iter().zip(&report.reviews) {
        std::fs::write(reviews.join(format!("pass_{}.svg", f.pass_id)), svg)?;
    }
    let mut tsv =
        String::from("pass_id\tframe_id\tpasser_id\tchosen_id\ttop1_id\tp_chosen\tp_top1\tgap\n");
    for f in &report.flags {
        let _ = writeln!(
            tsv,
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            f.pass_id, f.frame_id, f.passer_id, f.chosen_id, f.top1_id, f.p_chosen, f.p_top1, f.gap
        );
    }
    std::fs::write(dir.join("flags.tsv"), tsv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoutRow {
    pub profile: KpiProfile,
    /// Within-role z-scores; `None` when the role spread is zero.
    pub z_creativity: Option<f64>,
    pub z_best_pass: Option<f64>,
    pub outlier: bool,
}

#[derive(Debug, Clone)]
pub struct ScoutingReport {
    pub rows: Vec<ScoutRow>,
    pub html: String,
}

/// z-scores of `values` against their own mean and population deviation.
fn z_scores(values: &[f64]) -> Vec<Option<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    values
        .iter()
        .map(|v| (sd > 1e-12).then(|| (v - mean) / sd))
        .collect()
}

/// Per-player table over qualified profiles, grouped by role, with |z| ≥
/// `z_threshold` on creativity or best-pass score highlighted.
pub fn scouting_report(
    profiles: &[KpiProfile],
    roles: &[RoleSummary],
    z_threshold: f64,
) -> ScoutingReport {
    let mut groups: BTreeMap<Role, Vec<&KpiProfile>> = BTreeMap::new();
    for p in profiles.iter().filter(|p| p.qualified) {
        groups.entry(p.role).or_default().push(p);
    }
    let mut rows = Vec::new();
    for ps in groups.values() {
        let zc = z_scores(&ps.iter().map(|p| p.creativity_ratio).collect::<Vec<_>>());
        let zb = z_scores(&ps.iter().map(|p| p.best_pass_score).collect::<Vec<_>>());
        for (k, p) in ps.iter().enumerate() {
            let hot = |z: Option<f64>| z.is_some_and(|z| z.abs() >= z_threshold);
            rows.push(ScoutRow {
                profile: (*p).clone(),
                z_creativity: zc[k],
                z_best_pass: zb[k],
                outlier: hot(zc[k]) || hot(zb[k]),
            });
        }
    }

    let mut html = page_head("Scouting report");
    let outliers = rows.iter().filter(|r| r.outlier).count();
    let _ = write!(
        html,
        "<h1>Scouting report</h1><p>{} qualified players, {outliers} flagged at |z| ≥ {z_threshold:.1} within role.</p>",
        rows.len()
    );
    html.push_str("<table id=\"players\"><tr><th>player</th><th>role</th><th>passes</th><th>best pass</th><th>z</th><th>good pass</th><th>creativity</th><th>z</th><th>completion</th></tr>");
    let zcell = |z: Option<f64>| match z {
        Some(z) if z.abs() >= z_threshold => format!("<td class=\"z-hot\">{z:+.2}</td>"),
        Some(z) => format!("<td>{z:+.2}</td>"),
        None => "<td>n/a</td>".to_string(),
    };
    for r in &rows {
        let p = &r.profile;
        let _ = write!(
            html,
            "<tr class=\"{}\" data-id=\"{}\"><td>{}</td><td>{}</td><td>{}</td><td>{:.3}</td>{}<td>{:.3}</td><td>{:.3}</td>{}<td>{:.3}</td></tr>",
            if r.outlier { "player outlier" } else { "player" },
            p.player_id,
            p.player_id,
            p.role.as_str(),
            p.pass_count,
            p.best_pass_score,
            zcell(r.z_best_pass),
            p.good_pass_score,
            p.creativity_ratio,
            zcell(r.z_creativity),
            p.completion_rate
        );
    }
    html.push_str("</table><h2>Role distributions</h2><table id=\"roles\"><tr><th>role</th><th>players</th><th>kpi</th><th>mean</th><th>q1</th><th>median</th><th>q3</th></tr>");
    for s in roles {
        for (name, d) in [
            ("best pass", s.best_pass_score),
            ("good pass", s.good_pass_score),
            ("creativity", s.creativity_ratio),
            ("completion", s.completion_rate),
        ] {
            let _ = write!(
                html,
                "<tr><td>{}</td><td>{}</td><td>{name}</td><td>{:.3}</td><td>{:.3}</td><td>{:.3}</td><td>{:.3}</td></tr>",
                s.role.as_str(),
                s.players,
                d.mean,
                d.q1,
                d.median,
                d.q3
            );
        }
    }
    html.push_str("</table></body></html>\n");
    ScoutingReport { rows, html }
}
