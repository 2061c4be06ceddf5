//! Verification suites behind `caplab verify`. Each check runs at two resolutions where a
//! refinement makes sense and reports both residuals with the observed order.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde_json::json;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use super::{CliError, Suite};
use crate::conformal_lab::{
    condition_a_eval, conformal_hypersurface_check_with, foliation_samples, killing_orthogonality, ricci_radial_gap,
    ua_identity_check_annulus, Verdict, VerificationReport, WarpedProfile,
};
use crate::lattice::order_estimate;
use crate::polar_dual::{double_dual_check, dual_params, dual_surface};
use crate::rotational_solver::{solve_r0, solve_target_radius, Branch, ContactData, ProfileSolution};
use crate::spectral::{weighted_operator_check, Rotation};
use crate::surface_analysis::{
    boundary_relations_check, build_annulus, hopf_constancy, normal_graph, DerivativeMode, NeumannModes,
    RotationalAnnulus,
};

const TOL: f64 = 1e-12;

/// Necks covering both branches of the family, away from the thin-neck end.
pub const FIXTURE_NECKS: [f64; 6] = [0.35, 0.5, 0.6, FRAC_1_SQRT_2, 0.8, 0.95];

fn fixtures() -> Result<Vec<(ProfileSolution, ContactData)>, CliError> {
    FIXTURE_NECKS.par_iter().map(|&r0| Ok(solve_r0(r0, TOL)?)).collect()
}

fn refine(check: &str, inputs: serde_json::Value, coarse: f64, fine: f64, pass: bool) -> VerificationReport {
    VerificationReport::new(check, &inputs, coarse, fine, pass)
}

fn single(check: &str, inputs: serde_json::Value, value: f64, pass: bool) -> VerificationReport {
    let mut r = VerificationReport::new(check, &inputs, value, value, pass);
    r.order_estimate = None;
    r
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<VerificationReport>, CliError> {
    match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in
                [Suite::Boundary, Suite::Hopf, Suite::Dual, Suite::Conformal, Suite::Foliation, Suite::Orthogonality]
            {
                out.extend(run_suite(s, seed)?);
            }
            Ok(out)
        }
        Suite::Boundary => boundary(),
        Suite::Hopf => hopf(),
        Suite::Dual => dual(),
        Suite::Conformal => conformal(),
        Suite::Foliation => foliation(seed),
        Suite::Orthogonality => orthogonality(seed),
    }
}

fn boundary() -> Result<Vec<VerificationReport>, CliError> {
    let mut out = Vec::new();
    let (p, c) = solve_r0(FRAC_1_SQRT_2, TOL)?;
    let a = boundary_relations_check(&build_annulus(&p, &c, 256, 32)?, DerivativeMode::Analytic).max();
    out.push(single("boundary_relations_analytic_clifford", json!({"r0": FRAC_1_SQRT_2, "n_t": 256}), a, a < 1e-8));
    for (p, c) in fixtures()? {
        let coarse = boundary_relations_check(&build_annulus(&p, &c, 128, 32)?, DerivativeMode::Stencil).max();
        let fine = boundary_relations_check(&build_annulus(&p, &c, 256, 32)?, DerivativeMode::Stencil).max();
        let pass = fine < 1e-10 || order_estimate(coarse, fine) >= 1.9;
        out.push(refine("boundary_relations_stencil", json!({"r0": p.r0, "n_t": [128, 256]}), coarse, fine, pass));
    }
    Ok(out)
}

fn hopf() -> Result<Vec<VerificationReport>, CliError> {
    let mut out = Vec::new();
    for (p, c) in fixtures()? {
        let coarse = hopf_constancy(&build_annulus(&p, &c, 256, 32)?.surface).spread;
        let fine = hopf_constancy(&build_annulus(&p, &c, 512, 32)?.surface).spread;
        out.push(refine("hopf_spread", json!({"r0": p.r0, "n_t": [256, 512]}), coarse, fine, fine < 1e-6));
    }
    let (p, c) = solve_r0(FRAC_1_SQRT_2, TOL)?;
    let base = build_annulus(&p, &c, 256, 32)?;
    let h = hopf_constancy(&base.surface);
    let dev = (h.max - 1.0).abs().max((h.min - 1.0).abs());
    out.push(single("hopf_clifford_value", json!({"r0": FRAC_1_SQRT_2}), dev, dev < 1e-10));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let u = NeumannModes::random(c.t_plus, 3, 3, 0.05, &base.surface.grid, &mut rng);
    let spread = hopf_constancy(&normal_graph(&base, &u)?.surface).spread;
    out.push(single("hopf_negative_control", json!({"sup_u": 0.05}), spread, spread > 1e-3));
    Ok(out)
}

fn dual() -> Result<Vec<VerificationReport>, CliError> {
    let mut out = Vec::new();
    let (p, c) = solve_r0(FRAC_1_SQRT_2, TOL)?;
    let back = dual_params(&dual_params(&c.params)?)?;
    let rt = (back.r - c.params.r).abs().max((back.gamma - c.params.gamma).abs());
    out.push(single(
        "dual_params_round_trip",
        json!({"params": c.params}),
        rt,
        rt < 1e-12 && back.epsilon == c.params.epsilon,
    ));
    let d = dual_surface(&build_annulus(&p, &c, 256, 32)?)?;
    let dd = double_dual_check(&d);
    out.push(single("double_dual_clifford", json!({"r0": FRAC_1_SQRT_2}), dd, dd < 1e-8));
    for (p, c) in fixtures()? {
        let d = dual_surface(&build_annulus(&p, &c, 256, 32)?)?;
        let radius = (d.measured.r - d.params.r).abs();
        let (sr, sg) = (c.params.r.sin(), c.params.gamma.sin());
        let sine = (d.params.r.sin() * d.params.gamma.sin() - sr * sg).abs();
        let psi = d.psi_product_residual();
        let v = radius.max(sine / 1e-4).max(psi / 1e-2);
        let pass = radius < 1e-6 && sine < 1e-10 && psi < 1e-8;
        out.push(single(
            "dual_contact_and_psi",
            json!({"r0": p.r0, "radius": radius, "sine_law": sine, "psi_product": psi}),
            v,
            pass,
        ));
    }
    Ok(out)
}

fn conformal() -> Result<Vec<VerificationReport>, CliError> {
    let mut out = Vec::new();
    for (k, rb) in [(1.0, 2.0), (0.0, 1.0), (-1.0, 0.9)] {
        let p = WarpedProfile::space_form(k, rb)?;
        let c = condition_a_eval(&p);
        let m = c.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let gap = ricci_radial_gap(&p);
        let pass = c.verdict == Verdict::IdenticallyZero && gap.sign_agreement;
        out.push(single("condition_a_space_form", json!({"kappa": k, "rbar": rb}), m, pass));
    }
    let g = WarpedProfile::gaussian(2, 3.0)?;
    let c = condition_a_eval(&g);
    let dev = c.nodes.iter().zip(&c.values).map(|(r, v)| (v + r / 16.0).abs()).fold(0.0, f64::max);
    let pass = dev < 1e-12 && c.verdict == Verdict::StrictlyNegative && ricci_radial_gap(&g).sign_agreement;
    out.push(single("condition_a_gaussian", json!({"n": 2, "rbar": 3.0}), dev, pass));

    for (label, target) in [("clifford", FRAC_PI_2), ("R=0.22", 0.22)] {
        let (p, c) = solve_target_radius(target, Branch::Rising, TOL)?;
        let res: Vec<f64> = [256, 512]
            .iter()
            .map(|&n| -> Result<f64, CliError> {
                let r = ua_identity_check_annulus(&build_annulus(&p, &c, n, 32)?, &[1.0, 0.0, 0.0])?;
                Ok(r.interior.max(r.boundary))
            })
            .collect::<Result<_, _>>()?;
        let pass = res[1] < 1e-5 && (res[1] < 1e-11 || order_estimate(res[0], res[1]) >= 1.9);
        out.push(refine("ua_identity", json!({"surface": label, "n_t": [256, 512]}), res[0], res[1], pass));
    }

    let p = WarpedProfile::even_polynomial(vec![0.3, -0.2, 0.05], 1.5)?;
    let a = conformal_hypersurface_check_with(0.8, &p, 1e-3)?;
    let b = conformal_hypersurface_check_with(0.8, &p, 5e-4)?;
    let pass = b.residual < 1e-6 && order_estimate(a.residual, b.residual) >= 1.9;
    out.push(refine("conformal_hypersurface", json!({"r": 0.8, "delta": [1e-3, 5e-4]}), a.residual, b.residual, pass));

    for target in [0.98, FRAC_PI_2] {
        let (p, c) = solve_target_radius(target, Branch::Rising, TOL)?;
        let r = c.params.r;
        let coarse = weighted_operator_check(&build_annulus(&p, &c, 256, 32)?, r, 20, 0)?.max_residual;
        let fine = weighted_operator_check(&build_annulus(&p, &c, 512, 32)?, r, 20, 0)?.max_residual;
        let pass = if target == FRAC_PI_2 { fine < 1e-12 } else { fine < 1e-5 };
        out.push(refine("weighted_operator", json!({"R": r, "n_t": [256, 512], "trials": 20}), coarse, fine, pass));
    }
    Ok(out)
}

fn foliation(seed: u64) -> Result<Vec<VerificationReport>, CliError> {
    let mut out = Vec::new();
    for (k, rb) in [(1.0, (0.5f64 * 1.9).tan()), (0.0, 1.0), (-1.0, 0.9)] {
        let p = WarpedProfile::space_form(k, rb)?;
        let samples = foliation_samples(&p, 1000, seed)?;
        let worst = samples.iter().map(|s| s.derivative).fold(f64::MIN, f64::max);
        let agree = samples.iter().all(|s| s.mean_curvature_fd < 0.0);
        out.push(single(
            "foliation_negativity",
            json!({"kappa": k, "rbar": rb, "samples": 1000, "seed": seed}),
            worst,
            worst < 0.0 && agree,
        ));
    }
    Ok(out)
}

fn orthogonality(seed: u64) -> Result<Vec<VerificationReport>, CliError> {
    let (p, c) = solve_r0(FRAC_1_SQRT_2, TOL)?;
    let bases: Vec<RotationalAnnulus> =
        [256, 512].iter().map(|&n| build_annulus(&p, &c, n, 32)).collect::<Result<_, _>>()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(NeumannModes, Rotation, f64)> = (0..10)
        .map(|i| {
            let u = NeumannModes::random(c.t_plus, 3, 3, 0.05, &bases[0].surface.grid, &mut rng);
            let rot = if i % 2 == 0 { Rotation::E1E2 } else { Rotation::E1E3 };
            (u, rot, rng.gen_range(0.3..FRAC_PI_2))
        })
        .collect();
    cases
        .par_iter()
        .map(|(u, rot, r)| {
            let v: Vec<f64> = bases
                .iter()
                .map(|b| Ok(killing_orthogonality(&normal_graph(b, u)?, *rot, *r)?))
                .collect::<Result<_, CliError>>()?;
            let pass = v[1] < 1e-4 && (v[1] < 1e-12 || order_estimate(v[0], v[1]) >= 1.9);
            Ok(refine(
                "killing_orthogonality",
                json!({"u": u, "rotation": rot, "R": r, "n_t": [256, 512]}),
                v[0],
                v[1],
                pass,
            ))
        })
        .collect()
}
