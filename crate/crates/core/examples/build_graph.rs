//! Builds the passer-centric star graph of one synthetic pass and prints its features.

use passgraph::synth::{generate_labeled, GeneratorConfig};
use passgraph::{build_graph, FeatureScaler, GeometryConfig, PitchSpec};

fn main() -> passgraph::Result<()> {
    let index = std::env::args()
        .nth(1)
        .map_or(0, |a| a.parse().expect("pass index"));
    let (geometry, pitch) = (GeometryConfig::default(), PitchSpec::default());
    let state = generate_labeled(&GeneratorConfig::default(), &geometry, &pitch, index);
    let raw = build_graph(&state, &geometry, &pitch)?;
    let scaled = FeatureScaler::for_pitch(&pitch).apply(&raw);

    println!(
        "pass {}: passer {} -> receiver {:?}, {} nodes, {} edges",
        state.frame_id,
        state.passer_id,
        state.receiver_id.map(|r| r.0),
        raw.num_nodes(),
        raw.num_edges()
    );
    println!("\nnode features (scaled): x y vx vy ax ay pressure");
    for (i, row) in scaled.node_features.rows().into_iter().enumerate() {
        let tag = if i == raw.passer_index {
            " passer"
        } else if Some(i) == raw.label_index {
            " receiver"
        } else {
            ""
        };
        let cells: Vec<String> = row.iter().map(|v| format!("{v:7.3}")).collect();
        println!("  {:>5} {}{tag}", raw.node_ids[i].0, cells.join(" "));
    }
    println!("\noutgoing edges (raw): distance m, angle rad, lane traffic");
    for k in 0..raw.num_candidates() {
        let (_, dst) = raw.edges[k];
        let e = raw.edge_features.row(k);
        println!(
            "  -> {:>5} {:7.2} {:7.3} {:3}",
            raw.node_ids[dst].0, e[0], e[1], e[2]
        );
    }
    Ok(())
}
