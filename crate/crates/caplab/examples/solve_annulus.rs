// Solve single free-boundary annuli: by neck radius, and by target cap radius on either
// branch of the family.

use caplab::rotational_solver::{solve_r0, solve_target_radius, Branch};
use std::error::Error;
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug)]
pub struct SolveSummary {
    /// `(r0, R, γ, t₊)` per solved annulus.
    pub rows: Vec<(f64, f64, f64, f64)>,
}

pub fn run_example() -> Result<SolveSummary, Box<dyn Error>> {
    let mut rows = Vec::new();
    let (p, c) = solve_r0(FRAC_1_SQRT_2, 1e-12)?;
    rows.push((p.r0, c.params.r, c.params.gamma, c.t_plus));
    for (target, branch) in [(0.98, Branch::Rising), (1.95, Branch::Rising), (1.84, Branch::Falling)] {
        let (p, c) = solve_target_radius(target, branch, 1e-12)?;
        rows.push((p.r0, c.params.r, c.params.gamma, c.t_plus));
    }
    Ok(SolveSummary { rows })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    println!("{:>10} {:>12} {:>12} {:>12}", "r0", "R", "gamma", "t_plus");
    for (r0, r, g, t) in run_example()?.rows {
        println!("{r0:>10.6} {r:>12.8} {g:>12.8} {t:>12.8}");
    }
    Ok(())
}
