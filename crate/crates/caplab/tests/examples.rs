//! Runs every example's `run_example` and checks its headline numbers.

mod solve_annulus {
    include!("../examples/solve_annulus.rs");
}
mod sweep_family {
    include!("../examples/sweep_family.rs");
}
mod polar_dual {
    include!("../examples/polar_dual.rs");
}
mod spectral_index {
    include!("../examples/spectral_index.rs");
}
mod surface_checks {
    include!("../examples/surface_checks.rs");
}
mod warped_products {
    include!("../examples/warped_products.rs");
}
mod figure1 {
    include!("../examples/figure1.rs");
}

use caplab::conformal_lab::Verdict;
use caplab::spectral::Form;
use std::f64::consts::FRAC_PI_2;

#[test]
fn solve_annulus_hits_targets() {
    let rows = solve_annulus::run_example().unwrap().rows;
    assert!((rows[0].1 - FRAC_PI_2).abs() < 1e-10);
    for (row, target) in rows[1..].iter().zip([0.98, 1.95, 1.84]) {
        assert!((row.1 - target).abs() < 1e-8, "{row:?}");
        assert!((row.2 - FRAC_PI_2).abs() < 1e-10);
    }
}

#[test]
fn sweep_family_finds_r_bar_above_half_pi() {
    let s = sweep_family::run_example().unwrap();
    assert_eq!((s.solved, s.failed), (50, 0));
    assert!(s.r_bar.unwrap().0 > FRAC_PI_2);
}

#[test]
fn polar_dual_rows_are_free_boundary_in_the_hemisphere() {
    for r in polar_dual::run_example().unwrap() {
        assert!((r.dual_r - FRAC_PI_2).abs() < 1e-12);
        assert!((r.measured_dual_r - r.dual_r).abs() < 1e-6);
        assert!((r.dual_gamma - r.r.min(std::f64::consts::PI - r.r)).abs() < 1e-12);
        assert!(r.double_dual < 1e-8);
    }
}

#[test]
fn spectral_index_rows() {
    for r in spectral_index::run_example().unwrap() {
        let expected = if r.form == Form::QS { (1, 3) } else { (4, 2) };
        assert_eq!((r.ind, r.nul), expected, "{} {:?}", r.surface, r.form);
    }
}

#[test]
fn surface_checks_rows() {
    for r in surface_checks::run_example().unwrap() {
        assert!(r.boundary < 1e-8 && r.hopf_spread < 1e-10, "{r:?}");
        assert!(r.constrained && r.slices == (1, 1));
    }
}

#[test]
fn warped_products_summary() {
    let s = warped_products::run_example().unwrap();
    let verdicts: Vec<Verdict> = s.verdicts.iter().map(|v| v.1).collect();
    assert_eq!(
        verdicts,
        [
            Verdict::IdenticallyZero,
            Verdict::IdenticallyZero,
            Verdict::IdenticallyZero,
            Verdict::StrictlyNegative,
            Verdict::Mixed
        ]
    );
    assert!(s.foliation_max.iter().all(|&v| v < 0.0));
    assert!(s.weighted_residual < 1e-4);
}

#[test]
fn figure1_writes_panels() {
    let (dir, radii) = figure1::run_example().unwrap();
    for (r, (t, _)) in radii.iter().zip(caplab::reports::FIGURE1_TARGETS) {
        assert!((r - t).abs() < 0.01);
    }
    for i in 1..=5 {
        assert!(dir.join(format!("panel{i}_top.svg")).exists() && dir.join(format!("panel{i}_bottom.svg")).exists());
    }
    std::fs::remove_dir_all(dir).unwrap();
}
