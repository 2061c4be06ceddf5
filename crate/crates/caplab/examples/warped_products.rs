// Conformal and warped-product tools: the curvature condition on space forms and the
// Gaussian profile, the sign of the foliation derivative, and the weighted identity on a
// free-boundary annulus.

use caplab::conformal_lab::{condition_a_eval, foliation_samples, Verdict, WarpedProfile};
use caplab::rotational_solver::{solve_target_radius, Branch};
use caplab::spectral::weighted_operator_check;
use caplab::surface_analysis::build_annulus;
use std::error::Error;

#[derive(Debug)]
pub struct WarpedSummary {
    pub verdicts: Vec<(String, Verdict)>,
    /// Largest foliation derivative over the random samples, per space form.
    pub foliation_max: Vec<f64>,
    pub weighted_residual: f64,
}

pub fn run_example() -> Result<WarpedSummary, Box<dyn Error>> {
    let profiles = [
        ("sphere", WarpedProfile::space_form(1.0, 2.0)?),
        ("flat", WarpedProfile::space_form(0.0, 1.0)?),
        ("hyperbolic", WarpedProfile::space_form(-1.0, 0.9)?),
        ("gaussian n=2", WarpedProfile::gaussian(2, 3.0)?),
        ("r^4/4", WarpedProfile::even_polynomial(vec![0.0, 0.25], 1.5)?),
    ];
    let verdicts = profiles.iter().map(|(n, p)| (n.to_string(), condition_a_eval(p).verdict)).collect();
    let foliation_max = profiles[..3]
        .iter()
        .map(|(_, p)| Ok(foliation_samples(p, 200, 1)?.iter().map(|s| s.derivative).fold(f64::MIN, f64::max)))
        .collect::<Result<_, Box<dyn Error>>>()?;
    let (p, c) = solve_target_radius(0.98, Branch::Rising, 1e-12)?;
    let w = weighted_operator_check(&build_annulus(&p, &c, 256, 32)?, c.params.r, 5, 0)?;
    Ok(WarpedSummary { verdicts, foliation_max, weighted_residual: w.max_residual })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let s = run_example()?;
    for (n, v) in &s.verdicts {
        println!("{n:<14} {v:?}");
    }
    println!("max foliation derivative per space form: {:?}", s.foliation_max);
    println!("weighted identity residual at R = 0.98: {:.2e}", s.weighted_residual);
    Ok(())
}
