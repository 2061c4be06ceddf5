// Sweep the free-boundary family over neck radii and locate the largest cap radius R̄.

use caplab::rotational_solver::{r0_grid, sweep_family, R0_MAX, R0_MIN};
use std::error::Error;

#[derive(Debug)]
pub struct SweepSummary {
    pub solved: usize,
    pub failed: usize,
    /// `(R̄, r0)` at the sweep maximum.
    pub r_bar: Option<(f64, f64)>,
}

pub fn run_example() -> Result<SweepSummary, Box<dyn Error>> {
    let table = sweep_family(&r0_grid(R0_MIN + 1e-3, R0_MAX - 1e-4, 50), 1e-12);
    let solved = table.successes().count();
    Ok(SweepSummary { solved, failed: table.rows.len() - solved, r_bar: table.r_bar })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let s = run_example()?;
    println!("solved {} / {} neck radii", s.solved, s.solved + s.failed);
    if let Some((r, r0)) = s.r_bar {
        println!("largest cap radius {r:.10} at r0 = {r0:.6} (pi/2 = {:.10})", std::f64::consts::FRAC_PI_2);
    }
    Ok(())
}
