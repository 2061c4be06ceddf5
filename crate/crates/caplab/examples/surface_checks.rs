// Pointwise geometry checks on one annulus per branch: boundary relations, constancy of
// the Hopf modulus, radial graph vs. constrained, and two-piece slices.

use caplab::rotational_solver::solve_r0;
use caplab::surface_analysis::{
    boundary_relations_check, build_annulus, constrained_check, hopf_constancy, radial_graph_check, two_piece_slices,
    DerivativeMode,
};
use std::error::Error;

#[derive(Debug)]
pub struct CheckRow {
    pub r0: f64,
    pub r: f64,
    pub boundary: f64,
    pub hopf_spread: f64,
    pub radial_graph: bool,
    pub constrained: bool,
    pub slices: (usize, usize),
}

pub fn run_example() -> Result<Vec<CheckRow>, Box<dyn Error>> {
    let mut rows = Vec::new();
    for r0 in [0.3, 0.6, 0.9] {
        let (p, c) = solve_r0(r0, 1e-12)?;
        let a = build_annulus(&p, &c, 256, 32)?;
        let s = 0.6f64;
        rows.push(CheckRow {
            r0,
            r: c.params.r,
            boundary: boundary_relations_check(&a, DerivativeMode::Analytic).max(),
            hopf_spread: hopf_constancy(&a.surface).spread,
            radial_graph: radial_graph_check(&a)?.radial_graph,
            constrained: constrained_check(&a).constrained,
            slices: two_piece_slices(&a, &[0.0, s.cos(), s.sin(), 0.0])?,
        });
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    for r in run_example()? {
        println!(
            "r0 {:.2} R {:.6}: boundary {:.1e} hopf {:.1e} radial {} constrained {} slices {:?}",
            r.r0, r.r, r.boundary, r.hopf_spread, r.radial_graph, r.constrained, r.slices
        );
    }
    Ok(())
}
