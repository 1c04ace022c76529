use std::time::Instant;
use chargecap::channel::ternary_spec;
use chargecap::graphs::build_graphs;
use chargecap::sweep::{sweep, default_rho_grid, EngineKind};
use chargecap::engines::SolveOptions;

fn main() {
    let graphs = build_graphs(&ternary_spec());
    let opts = SolveOptions::default();
    let grid = default_rho_grid();
    for (name, kind) in [("generic", EngineKind::Generic), ("adjacent", EngineKind::Adjacent), ("cognitive", EngineKind::Cognitive)] {
        let t0 = Instant::now();
        let curve = sweep(&graphs, kind, &grid, &opts).unwrap();
        println!("{name}: {:?} ({} vertices, {} gaps)", t0.elapsed(), curve.points.len(), curve.gaps.len());
        for (rho, e) in &curve.gaps { println!("   gap rho={rho}: {e}"); }
    }
}
