//! Calibration run for the frozen domination constants: triple-density
//! survey over the standard battery and lattice. Rerun after changing the
//! battery, the lattice, or the operator defaults, and update the constants
//! in `operators.rs`.

use sphmax::experiments::{domination_survey, DominationSpec};

fn main() {
    for (m, n) in [(2usize, 2usize), (3, 2)] {
        let mut spec = DominationSpec::standard_for(m, 20260810);
        spec.density_multiplier = 3;
        let report = domination_survey(m, n, &spec).expect("survey");
        println!(
            "(m, n) = ({m}, {n}): max ratio {:.6}, per-k {:?}, suggested frozen constant {:.4}",
            report.max_ratio,
            report.per_k_max,
            1.2 * report.max_ratio
        );
    }
}
