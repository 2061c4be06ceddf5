// Regenerate the five profile panels and their duals as SVG files.

use caplab::reports::{cmd_figure1, Figure1Args};
use std::error::Error;
use std::path::PathBuf;

/// Directory the panels were written to and the cap radii found.
pub fn run_example() -> Result<(PathBuf, Vec<f64>), Box<dyn Error>> {
    let out = std::env::temp_dir().join(format!("caplab-figure1-{}", std::process::id()));
    let summary = cmd_figure1(&Figure1Args { out: out.clone(), n_t: 256 }, &["figure1".into()])?;
    let v: serde_json::Value = serde_json::from_str(&summary)?;
    let radii = v["panels"].as_array().map(|a| a.iter().filter_map(|p| p["R"].as_f64()).collect()).unwrap_or_default();
    Ok((out, radii))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let (dir, radii) = run_example()?;
    println!("panels in {}", dir.display());
    println!("cap radii {radii:?}");
    Ok(())
}
