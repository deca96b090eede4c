//! Inspect the worst domination survey rows at a given density.

use sphmax::experiments::{domination_survey, DominationSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(3);
    let mult: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1);
    let seed: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0xD0);
    let spec = DominationSpec {
        node_count: 1000,
        seed,
        density_multiplier: mult,
    };
    let report = domination_survey(m, 2, &spec).expect("survey");
    let mut rows = report.rows.clone();
    rows.sort_by(|a, b| b.ratio.partial_cmp(&a.ratio).unwrap());
    println!(
        "max {:.4} (unfiltered {:.4}, {} resolved rows)",
        report.max_ratio, report.max_ratio_unfiltered, report.resolved_rows
    );
    for r in rows.iter().take(8) {
        println!(
            "battery {} x ({:+.2},{:+.2}) k {} ratio {:.4} rel_se {:.3} resolved {}",
            r.battery_index,
            r.x[0],
            r.x[1],
            r.k,
            r.ratio,
            r.numerator_std_error / r.numerator.abs().max(1e-300),
            r.resolved
        );
    }
}
