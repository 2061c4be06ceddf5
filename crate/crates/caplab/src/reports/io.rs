//! File formats and the write path: 17-digit CSV, JSON headers, content hashes, manifests.
//!
//! Outputs are staged in memory as an [`OutputSet`] and only touch the disk in
//! [`OutputSet::commit`], one temp-file-and-rename per file, so a failing command leaves
//! nothing behind.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

use crate::lattice::{Grid, SampledSurface};
use crate::rotational_solver::{ContactData, SweepRow, SweepTable};
use crate::surface_analysis::AssemblyMeta;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Fs { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed file {path}: {msg}")]
    Format { path: String, msg: String },
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs { path: path.to_path_buf(), source }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes `bytes` to a sibling temp file, syncs it, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(fs_err(&tmp))?;
    f.write_all(bytes).map_err(fs_err(&tmp))?;
    f.sync_all().map_err(fs_err(&tmp))?;
    fs::rename(&tmp, path).map_err(fs_err(path))
}

pub const LATTICE_HEADER: [&str; 10] = ["s", "t", "x0", "x1", "x2", "x3", "nu0", "nu1", "nu2", "nu3"];

/// Lattice CSV, rows ordered by `t` then `s`.
pub fn lattice_csv(surface: &SampledSurface) -> Result<Vec<u8>, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LATTICE_HEADER)?;
    let g = &surface.grid;
    for i in 0..g.rows() {
        for j in 0..g.n_s {
            let k = g.idx(i, j);
            let mut rec = vec![fmt17(g.s(j)), fmt17(g.t(i))];
            rec.extend(surface.points[k].iter().chain(&surface.normals[k]).map(|v| fmt17(*v)));
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| IoError::Format { path: "lattice".into(), msg: e.to_string() })
}

/// `(s, t, x, ν)` per row.
pub type LatticeRow = (f64, f64, [f64; 4], [f64; 4]);

pub fn parse_lattice_csv(bytes: &[u8]) -> Result<Vec<LatticeRow>, IoError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != LATTICE_HEADER {
        return Err(IoError::Format { path: "lattice".into(), msg: format!("header {header:?}") });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| IoError::Format { path: "lattice".into(), msg: e.to_string() }))
            .collect::<Result<_, _>>()?;
        rows.push((v[0], v[1], [v[2], v[3], v[4], v[5]], [v[6], v[7], v[8], v[9]]));
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 4] = ["r0", "R", "t_plus", "status"];

pub fn sweep_csv(table: &SweepTable) -> Result<Vec<u8>, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
    for row in &table.rows {
        w.write_record([fmt17(row.r0), opt(row.r), opt(row.t_plus), row.status.clone()])?;
    }
    w.into_inner().map_err(|e| IoError::Format { path: "sweep".into(), msg: e.to_string() })
}

pub fn parse_sweep_csv(bytes: &[u8]) -> Result<Vec<SweepRow>, IoError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(IoError::Format { path: "sweep".into(), msg: format!("header {header:?}") });
    }
    let num = |s: &str| -> Result<Option<f64>, IoError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|e: std::num::ParseFloatError| IoError::Format { path: "sweep".into(), msg: e.to_string() })
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(SweepRow {
            r0: num(&rec[0])?.unwrap_or(f64::NAN),
            r: num(&rec[1])?,
            t_plus: num(&rec[2])?,
            epsilon: None,
            status: rec[3].to_string(),
        });
    }
    Ok(rows)
}

/// `t, r, r′` at the integrator's accepted nodes (both halves).
pub fn profile_csv(t: &[f64], r: &[f64], rp: &[f64]) -> Result<Vec<u8>, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "r", "rp"])?;
    for i in 0..t.len() {
        w.write_record([fmt17(t[i]), fmt17(r[i]), fmt17(rp[i])])?;
    }
    w.into_inner().map_err(|e| IoError::Format { path: "profile".into(), msg: e.to_string() })
}

/// How to regenerate a surface exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Profile { r0: f64, tol: f64 },
    Catenoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_t: usize,
    pub n_s: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        Self { n_t: g.n_t, n_s: g.n_s, t_min: g.t_min, t_max: g.t_max }
    }
}

/// JSON header written next to a lattice CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceHeader {
    pub generator: GeneratorSpec,
    pub contact: ContactData,
    pub grid: GridSpec,
    pub meta: AssemblyMeta,
    pub lattice_file: String,
    pub lattice_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub schema: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<OutputFile>,
    pub residuals: BTreeMap<String, f64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Manifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        Self {
            command: command.into(),
            args: args.to_vec(),
            seed: None,
            tolerances: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
            residuals: BTreeMap::new(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

/// Files staged for a single atomic-per-file commit.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>, schema: &str) {
        self.files.push((name.into(), bytes, schema.into()));
    }

    pub fn add_json(&mut self, name: &str, value: &impl Serialize, schema: &str) -> Result<(), IoError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes, schema);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_slice())
    }

    /// Writes every file, then `manifest.json` listing them with their hashes.
    pub fn commit(self, dir: &Path, mut manifest: Manifest) -> Result<Manifest, IoError> {
        fs::create_dir_all(dir).map_err(fs_err(dir))?;
        for (name, bytes, schema) in &self.files {
            atomic_write(&dir.join(name), bytes)?;
            manifest.outputs.push(OutputFile { path: name.clone(), sha256: sha256_hex(bytes), schema: schema.clone() });
        }
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        atomic_write(&dir.join("manifest.json"), &bytes)?;
        Ok(manifest)
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(fs_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn fmt17_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn sweep_csv_round_trips() {
        let table = SweepTable {
            rows: vec![
                SweepRow { r0: 0.5, r: Some(1.9), t_plus: Some(0.7), epsilon: Some(1), status: "ok".into() },
                SweepRow { r0: 0.1, r: None, t_plus: None, epsilon: None, status: "failed: x, y".into() },
            ],
            r_bar: None,
        };
        let rows = parse_sweep_csv(&sweep_csv(&table).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].r0, rows[0].r, rows[0].t_plus), (0.5, Some(1.9), Some(0.7)));
        assert_eq!((rows[1].r, rows[1].status.as_str()), (None, "failed: x, y"));
    }

    #[test]
    fn commit_writes_manifest_with_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = OutputSet::default();
        set.add("a.txt", b"hello".to_vec(), "text");
        let m = set.commit(dir.path(), Manifest::new("test", &[])).unwrap();
        assert_eq!(m.outputs[0].sha256, sha256_hex(b"hello"));
        let back: Manifest = serde_json::from_slice(&read(&dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().contains(".tmp")));
    }
}
