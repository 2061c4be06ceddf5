// Index and nullity of the modified Dirichlet form QS and the index form QA on the
// half-Clifford annulus and the critical catenoid.

use caplab::rotational_solver::{critical_catenoid, solve_r0};
use caplab::spectral::{index_nullity, Form, SpectralProblem};
use caplab::surface_analysis::build_annulus;
use std::error::Error;

#[derive(Debug)]
pub struct IndexRow {
    pub surface: &'static str,
    pub form: Form,
    pub ind: usize,
    pub nul: usize,
    pub lowest: f64,
}

pub fn run_example() -> Result<Vec<IndexRow>, Box<dyn Error>> {
    let (p, c) = solve_r0(std::f64::consts::FRAC_1_SQRT_2, 1e-12)?;
    let clifford = build_annulus(&p, &c, 64, 16)?;
    let catenoid = critical_catenoid();
    let mut rows = Vec::new();
    for (name, surface) in [("half-Clifford", &clifford), ("critical catenoid", &catenoid)] {
        for form in [Form::QS, Form::QA] {
            let rep = index_nullity(&SpectralProblem::new(surface, form, 8, 256)?)?;
            rows.push(IndexRow {
                surface: name,
                form,
                ind: rep.ind,
                nul: rep.nul,
                lowest: rep.modes[0].eigenvalues[0],
            });
        }
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    for r in run_example()? {
        println!(
            "{:<18} {:?}: ind {} nul {} ind0 {} (lowest {:.6})",
            r.surface,
            r.form,
            r.ind,
            r.nul,
            r.ind + r.nul,
            r.lowest
        );
    }
    Ok(())
}
