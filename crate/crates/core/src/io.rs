//! CSV and JSON artifacts. Numbers are written with 17 significant digits so
//! files round-trip exactly; only `metadata.json` carries a timestamp.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyze::TheoryRef;
use crate::error::{AnalysisError, Result};
use crate::hetero::{HeteroclinicSolution, HugoniotLocus, Terrace};
use crate::model::{Grid1D, Model, RunConfig, TubesField};
use crate::pde::{SeriesRow, Snapshot, StepStats, Trajectory};

pub const SERIES_FILE: &str = "series.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const SNAPSHOT_HEADER: [&str; 6] = ["y", "c1", "c2", "u1", "q", "f"];
pub const SERIES_HEADER: [&str; 6] = ["t", "h_width", "front_left", "front_right", "plateau_c1", "plateau_c2"];
pub const LOCUS_HEADER: [&str; 4] = ["v", "c1_star", "c2_star", "residual"];

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_num(s: &str) -> std::result::Result<f64, AnalysisError> {
    s.trim().parse().map_err(|_| AnalysisError::Malformed(format!("not a number: '{s}'")))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

fn write_rows<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.map(fmt_num))?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric table with an exact header match.
fn read_rows<const N: usize>(path: &Path, header: [&str; N]) -> Result<Vec<[f64; N]>> {
    let mut r = csv::Reader::from_path(path)?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(AnalysisError::Malformed(format!("{}: header {got:?}, expected {header:?}", path.display())).into());
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != N {
            return Err(AnalysisError::Malformed(format!("{}: row of length {}", path.display(), rec.len())).into());
        }
        let mut row = [0.0; N];
        for (k, field) in rec.iter().enumerate() {
            row[k] = parse_num(field)?;
        }
        out.push(row);
    }
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn snapshot_name(t: f64) -> String {
    format!("snap_t{t:.6}.csv")
}

/// Time encoded in a snapshot file name.
pub fn snapshot_time(name: &str) -> Option<f64> {
    name.strip_prefix("snap_t")?.strip_suffix(".csv")?.parse().ok()
}

pub fn write_snapshot(dir: &Path, snap: &Snapshot) -> Result<PathBuf> {
    let path = dir.join(snapshot_name(snap.t));
    let g = snap.field.grid;
    write_rows(
        &path,
        SNAPSHOT_HEADER,
        (0..g.n_cells).map(|j| [g.center(j), snap.field.c1[j], snap.field.c2[j], snap.flow.u1[j], snap.flow.q[j], snap.f[j]]),
    )?;
    Ok(path)
}

/// Concentrations of a snapshot file; the grid is rebuilt from the cell
/// centers, which must be uniformly spaced.
pub fn read_snapshot(path: &Path) -> Result<TubesField> {
    let rows = read_rows(path, SNAPSHOT_HEADER)?;
    if rows.len() < Grid1D::MIN_CELLS {
        return Err(AnalysisError::Malformed(format!("{}: only {} cells", path.display(), rows.len())).into());
    }
    let n = rows.len();
    let h = (rows[n - 1][0] - rows[0][0]) / (n - 1) as f64;
    let uneven = rows.windows(2).any(|w| ((w[1][0] - w[0][0]) - h).abs() > 1e-9 * h.abs().max(1.0));
    if !(h > 0.0) || uneven {
        return Err(AnalysisError::Malformed(format!("{}: cell centers not uniformly increasing", path.display())).into());
    }
    let grid = Grid1D::new(rows[0][0] - h / 2.0, rows[n - 1][0] + h / 2.0, n)?;
    Ok(TubesField::new(grid, rows.iter().map(|r| r[1]).collect(), rows.iter().map(|r| r[2]).collect()))
}

pub fn write_series(path: &Path, series: &[SeriesRow]) -> Result<()> {
    write_rows(
        path,
        SERIES_HEADER,
        series.iter().map(|r| [r.t, r.h_width, r.front_left, r.front_right, r.plateau_c1, r.plateau_c2]),
    )
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    Ok(read_rows(path, SERIES_HEADER)?
        .into_iter()
        .map(|[t, h_width, front_left, front_right, plateau_c1, plateau_c2]| SeriesRow {
            t,
            h_width,
            front_left,
            front_right,
            plateau_c1,
            plateau_c2,
        })
        .collect())
}

/// Provenance record written next to every set of artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub program: String,
    pub version: String,
    /// Command line that produced the directory.
    pub command: Vec<String>,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    /// Fully resolved configuration of a simulation, if any.
    pub config: Option<RunConfig>,
    pub scheme: Option<SchemeInfo>,
    pub stats: Option<StepStats>,
    pub files: Vec<String>,
    /// Parameters of non-simulation commands.
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub advection: String,
    pub diffusion: String,
    pub time_stepping: String,
    pub boundary: String,
}

impl SchemeInfo {
    pub fn current() -> Self {
        SchemeInfo {
            advection: "first-order upwind on cell faces".into(),
            diffusion: "second-order central".into(),
            time_stepping: "SSP-RK2, dt = cfl * min(h / max|u|, h^2 / 2)".into(),
            boundary: "Dirichlet ghost cells c = -1 below, +1 above; q = 0 at both ends".into(),
        }
    }
}

impl Metadata {
    pub fn new(command: Vec<String>) -> Self {
        let created_unix =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Metadata {
            program: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            created_unix,
            config: None,
            scheme: None,
            stats: None,
            files: Vec::new(),
            parameters: serde_json::Value::Null,
        }
    }
}

/// Snapshots, series and metadata of a finished run.
pub fn write_run(dir: &Path, traj: &Trajectory, mut meta: Metadata) -> Result<()> {
    fs::create_dir_all(dir)?;
    for s in &traj.snapshots {
        let p = write_snapshot(dir, s)?;
        meta.files.push(p.file_name().unwrap().to_string_lossy().into_owned());
    }
    write_series(&dir.join(SERIES_FILE), &traj.series)?;
    meta.files.push(SERIES_FILE.into());
    meta.config = Some(traj.config.clone());
    meta.scheme = Some(SchemeInfo::current());
    meta.stats = Some(traj.stats);
    write_json(&dir.join(METADATA_FILE), &meta)
}

/// A run directory read back for analysis.
#[derive(Debug, Clone)]
pub struct RunData {
    pub snapshots: Vec<(f64, TubesField)>,
    pub series: Vec<SeriesRow>,
    pub config: Option<RunConfig>,
}

pub fn read_run(dir: &Path) -> Result<RunData> {
    let mut snaps = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(t) = snapshot_time(&name) {
            snaps.push((t, entry.path()));
        }
    }
    if snaps.is_empty() {
        return Err(AnalysisError::Malformed(format!("no snapshots in {}", dir.display())).into());
    }
    snaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let snapshots = snaps.into_iter().map(|(t, p)| Ok((t, read_snapshot(&p)?))).collect::<Result<Vec<_>>>()?;
    let series = read_series(&dir.join(SERIES_FILE))?;
    let meta_path = dir.join(METADATA_FILE);
    let config = if meta_path.exists() {
        let meta: Metadata = serde_json::from_str(&fs::read_to_string(meta_path)?)?;
        meta.config
    } else {
        None
    };
    Ok(RunData { snapshots, series, config })
}

/// Profile CSV; IPM profiles carry `u1` and `q1`.
pub fn write_profile(path: &Path, sol: &HeteroclinicSolution) -> Result<()> {
    let mut w = writer(path)?;
    let ipm = sol.model == Model::Ipm;
    let mut header = vec!["xi", "a", "b", "r", "s"];
    if ipm {
        header.extend(["u1", "q1"]);
    }
    w.write_record(&header)?;
    for p in &sol.profile {
        let mut row = vec![p.xi, p.a, p.b, p.r, p.s];
        if ipm {
            row.extend([p.u1, p.q1]);
        }
        w.write_record(row.into_iter().map(fmt_num))?;
    }
    w.flush()?;
    Ok(())
}

/// Endpoint record written next to a profile.
#[derive(Debug, Clone, Serialize)]
pub struct WaveRecord<'a> {
    pub model: Model,
    pub v: f64,
    pub l: f64,
    pub branch: &'static str,
    pub left: [f64; 2],
    pub right: [f64; 2],
    pub intermediate: [f64; 2],
    pub rh_defect: f64,
    pub residuals: &'a crate::hetero::Residuals,
    pub diagnostics: Option<&'a crate::hetero::Diagnostics>,
    pub newton_iterations: usize,
}

impl<'a> WaveRecord<'a> {
    pub fn new(sol: &'a HeteroclinicSolution) -> Self {
        WaveRecord {
            model: sol.model,
            v: sol.v,
            l: sol.l,
            branch: sol.branch.tag(),
            left: sol.endpoints.left,
            right: sol.endpoints.right,
            intermediate: sol.intermediate(),
            rh_defect: sol.rh_defect(),
            residuals: &sol.residuals,
            diagnostics: sol.diagnostics.as_ref(),
            newton_iterations: sol.newton_iterations,
        }
    }
}

pub fn write_locus(path: &Path, locus: &HugoniotLocus) -> Result<()> {
    write_rows(path, LOCUS_HEADER, locus.samples.iter().map(|s| [s.v, s.c1, s.c2, s.residual]))
}

pub fn read_locus(path: &Path) -> Result<Vec<[f64; 4]>> {
    read_rows(path, LOCUS_HEADER)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerraceTheory {
    pub v1: f64,
    pub v2: f64,
    pub sigma1: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerraceDeltas {
    pub v1: f64,
    pub v2: f64,
    pub sigma1: f64,
    /// `|v1 + v2|`, zero for a symmetric terrace.
    pub symmetry: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverStats {
    pub newton_iterations: usize,
    pub mismatch: f64,
    pub wave_residuals: [f64; 2],
    pub rh_defects: [f64; 2],
}

/// Terrace JSON, compared against the exact TFE terrace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerraceRecord {
    pub model: Model,
    pub l: f64,
    pub v1: f64,
    pub v2: f64,
    pub sigma1: [f64; 2],
    pub theory: TerraceTheory,
    pub deltas: TerraceDeltas,
    pub solver_stats: SolverStats,
}

impl TerraceRecord {
    pub fn new(t: &Terrace) -> Self {
        // The exact intermediate state on the same side as the computed one.
        let sign = if t.sigma1[0] >= 0.0 { 1.0 } else { -1.0 };
        let theory = TerraceTheory { v1: -0.25, v2: 0.25, sigma1: [0.5 * sign, -0.5 * sign] };
        TerraceRecord {
            model: t.model,
            l: t.l,
            v1: t.v1,
            v2: t.v2,
            sigma1: t.sigma1,
            deltas: TerraceDeltas {
                v1: t.v1 - theory.v1,
                v2: t.v2 - theory.v2,
                sigma1: (t.sigma1[0] - theory.sigma1[0]).abs().max((t.sigma1[1] - theory.sigma1[1]).abs()),
                symmetry: (t.v1 + t.v2).abs(),
            },
            theory,
            solver_stats: SolverStats {
                newton_iterations: t.newton_iterations,
                mismatch: t.mismatch,
                wave_residuals: [t.waves[0].residuals.equations, t.waves[1].residuals.equations],
                rh_defects: [t.waves[0].rh_defect(), t.waves[1].rh_defect()],
            },
        }
    }
}

/// Reference for analyzing an IPM run at spacing `l`: the computed terrace,
/// with looser plateau tolerance.
pub fn theory_from_terrace(t: &Terrace) -> TheoryRef {
    TheoryRef {
        v1: t.v1,
        v2: t.v2,
        sigma1: vec![t.sigma1, [t.sigma1[1], t.sigma1[0]]],
        h_slope: t.v2 - t.v1,
        speed_rel_tol: 0.02,
        plateau_tol: 0.05,
        h_slope_rel_tol: 0.05,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::model::ModelParams;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::new(-3.0, 5.0, 16).unwrap();
        let c1: Vec<f64> = (0..16).map(|j| (j as f64 * 0.37).sin() / 3.0).collect();
        let c2: Vec<f64> = (0..16).map(|j| (j as f64 * 0.11).cos() / 7.0).collect();
        let field = TubesField::new(g, c1, c2);
        let snap = Snapshot::new(1.25, field.clone(), &ModelParams::ipm(0.3), Exec::Sequential);
        let p = write_snapshot(dir.path(), &snap).unwrap();
        assert_eq!(snapshot_time(p.file_name().unwrap().to_str().unwrap()), Some(1.25));
        let back = read_snapshot(&p).unwrap();
        assert_eq!(back.c1, field.c1);
        assert_eq!(back.c2, field.c2);
        assert!((back.grid.y_min + 3.0).abs() < 1e-12 && (back.grid.y_max - 5.0).abs() < 1e-12);
    }

    #[test]
    fn series_keeps_nan() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(SERIES_FILE);
        let rows = vec![SeriesRow { t: 0.5, h_width: f64::NAN, front_left: 1.0, front_right: 2.0, plateau_c1: 0.1, plateau_c2: -0.1 }];
        write_series(&p, &rows).unwrap();
        let back = read_series(&p).unwrap();
        assert!(back[0].h_width.is_nan());
        assert_eq!(back[0].front_right, 2.0);
    }

    #[test]
    fn header_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(SERIES_FILE);
        fs::write(&p, "t,width\n1,2\n").unwrap();
        assert!(read_series(&p).is_err());
    }
}
