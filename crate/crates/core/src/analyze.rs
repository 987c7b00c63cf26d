//! Terrace structure in PDE output: fronts, plateaus, fitted speeds and the
//! mixing-zone width, compared against reference values.

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::exec::Exec;
use crate::model::TubesField;
use crate::pde::SeriesRow;

/// Deviation from the far-field values that marks the mixing zone.
pub const FRONT_EPS: f64 = 0.05;
/// Fraction of the run discarded before fitting.
pub const DEFAULT_TRANSIENT: f64 = 0.2;
pub const MIN_FIT_SAMPLES: usize = 10;

/// Positions where the mean concentration `(c1+c2)/2` first leaves `-1+eps`
/// scanning upward and `1-eps` scanning downward, interpolated linearly
/// between cell centers.
pub fn front_positions(field: &TubesField, eps: f64) -> Result<(f64, f64), AnalysisError> {
    let g = field.grid;
    let n = field.len();
    let mean = |j: usize| 0.5 * (field.c1[j] + field.c2[j]);
    let lo_level = -1.0 + eps;
    let hi_level = 1.0 - eps;
    let crossing = |j0: usize, j1: usize, level: f64| {
        let (m0, m1) = (mean(j0), mean(j1));
        let frac = if m1 != m0 { (level - m0) / (m1 - m0) } else { 0.0 };
        g.center(j0) + frac * (g.center(j1) - g.center(j0))
    };
    let left = match (0..n).find(|&j| mean(j) > lo_level) {
        None => return Err(AnalysisError::NoFront { level: lo_level }),
        Some(0) => g.center(0),
        Some(j) => crossing(j - 1, j, lo_level),
    };
    let right = match (0..n).rev().find(|&j| mean(j) < hi_level) {
        None => return Err(AnalysisError::NoFront { level: hi_level }),
        Some(j) if j == n - 1 => g.center(n - 1),
        Some(j) => crossing(j + 1, j, hi_level),
    };
    Ok((left, right))
}

/// A maximal flat stretch of both concentrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub c1: f64,
    pub c2: f64,
    pub y_start: f64,
    pub y_end: f64,
}

impl Plateau {
    pub fn extent(&self) -> f64 {
        self.y_end - self.y_start
    }

    /// Max-norm distance to a reference state.
    pub fn distance(&self, c1: f64, c2: f64) -> f64 {
        (self.c1 - c1).abs().max((self.c2 - c2).abs())
    }
}

/// Intervals where both `|dc_i/dy| < slope_tol`, at least `min_extent` long.
/// Interval ends are the outer faces of the first and last flat cell.
pub fn detect_plateaus(field: &TubesField, slope_tol: f64, min_extent: f64) -> Vec<Plateau> {
    let g = field.grid;
    let n = field.len();
    let h = g.h();
    let slope = |c: &[f64], j: usize| {
        if j == 0 {
            (c[1] - c[0]) / h
        } else if j == n - 1 {
            (c[n - 1] - c[n - 2]) / h
        } else {
            (c[j + 1] - c[j - 1]) / (2.0 * h)
        }
    };
    let flat: Vec<bool> =
        (0..n).map(|j| slope(&field.c1, j).abs() < slope_tol && slope(&field.c2, j).abs() < slope_tol).collect();
    let mut out = Vec::new();
    let mut j = 0;
    while j < n {
        if !flat[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < n && flat[j] {
            j += 1;
        }
        let (y0, y1) = (g.face(start), g.face(j));
        if y1 - y0 >= min_extent {
            let m = (j - start) as f64;
            out.push(Plateau {
                c1: field.c1[start..j].iter().sum::<f64>() / m,
                c2: field.c2[start..j].iter().sum::<f64>() / m,
                y_start: y0,
                y_end: y1,
            });
        }
    }
    out
}

/// Least-squares line with the standard error of the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub samples: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit, AnalysisError> {
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::InsufficientSamples { got: n, need: 3 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::Malformed("all samples at the same time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(LineFit { slope, intercept, stderr, samples: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub left: LineFit,
    pub right: LineFit,
    pub width: LineFit,
}

/// Fit front positions and width against time, dropping the first
/// `transient` fraction of the series.
pub fn estimate_speeds(series: &[SeriesRow], transient: f64) -> Result<SpeedFit, AnalysisError> {
    let valid: Vec<&SeriesRow> = series
        .iter()
        .filter(|r| r.t.is_finite() && r.front_left.is_finite() && r.front_right.is_finite())
        .collect();
    let (Some(first), Some(last)) = (valid.first(), valid.last()) else {
        return Err(AnalysisError::InsufficientSamples { got: 0, need: MIN_FIT_SAMPLES });
    };
    let t0 = first.t + transient * (last.t - first.t);
    let window: Vec<&SeriesRow> = valid.into_iter().filter(|r| r.t >= t0).collect();
    if window.len() < MIN_FIT_SAMPLES {
        return Err(AnalysisError::InsufficientSamples { got: window.len(), need: MIN_FIT_SAMPLES });
    }
    let t: Vec<f64> = window.iter().map(|r| r.t).collect();
    let col = |f: fn(&SeriesRow) -> f64| window.iter().map(|r| f(r)).collect::<Vec<f64>>();
    Ok(SpeedFit {
        left: fit_line(&t, &col(|r| r.front_left))?,
        right: fit_line(&t, &col(|r| r.front_right))?,
        width: fit_line(&t, &col(|r| r.h_width))?,
    })
}

/// Reference values and tolerances a report is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRef {
    pub v1: f64,
    pub v2: f64,
    /// Admissible intermediate states; the closest one is used.
    pub sigma1: Vec<[f64; 2]>,
    pub h_slope: f64,
    pub speed_rel_tol: f64,
    pub plateau_tol: f64,
    pub h_slope_rel_tol: f64,
}

impl TheoryRef {
    /// The exact TFE terrace.
    pub fn tfe() -> Self {
        TheoryRef {
            v1: -0.25,
            v2: 0.25,
            sigma1: vec![[0.5, -0.5], [-0.5, 0.5]],
            h_slope: 0.5,
            speed_rel_tol: 0.02,
            plateau_tol: 0.03,
            h_slope_rel_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub slope_tol: f64,
    pub min_extent: f64,
    pub transient: f64,
    /// Plateaus closer than this to either far field are not intermediate.
    pub far_field_margin: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { slope_tol: 2e-3, min_extent: 10.0, transient: DEFAULT_TRANSIENT, far_field_margin: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePlateaus {
    pub t: f64,
    pub plateaus: Vec<Plateau>,
    pub intermediate: Option<Plateau>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, measured: f64, expected: f64, delta: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, expected, delta, tolerance, pass: delta.is_finite() && delta <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerraceReport {
    pub per_time: Vec<TimePlateaus>,
    pub final_fronts: Option<(f64, f64)>,
    pub speeds: SpeedFit,
    pub terrace_detected: bool,
    pub intermediate: Option<[f64; 2]>,
    pub theory: TheoryRef,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// The longest plateau away from both far fields.
pub fn intermediate_plateau(plateaus: &[Plateau], margin: f64) -> Option<Plateau> {
    plateaus
        .iter()
        .filter(|p| p.distance(-1.0, -1.0) > margin && p.distance(1.0, 1.0) > margin)
        .max_by(|a, b| a.extent().partial_cmp(&b.extent()).unwrap())
        .copied()
}

/// Assemble plateaus per snapshot, fitted speeds and width growth, and check
/// them against `theory`. Snapshots are analyzed independently.
pub fn terrace_report(
    snapshots: &[(f64, TubesField)],
    series: &[SeriesRow],
    theory: &TheoryRef,
    opts: &AnalysisOptions,
    exec: Exec,
) -> Result<TerraceReport, AnalysisError> {
    let per_time: Vec<TimePlateaus> = exec.map(snapshots, |(t, field)| {
        let plateaus = detect_plateaus(field, opts.slope_tol, opts.min_extent);
        let intermediate = intermediate_plateau(&plateaus, opts.far_field_margin);
        TimePlateaus { t: *t, plateaus, intermediate }
    });
    let speeds = estimate_speeds(series, opts.transient)?;
    let last = per_time.last();
    let final_fronts = snapshots.last().and_then(|(_, f)| front_positions(f, FRONT_EPS).ok());
    let intermediate = last.and_then(|p| p.intermediate).map(|p| [p.c1, p.c2]);

    let mut checks = vec![
        Check::new(
            "v_left",
            speeds.left.slope,
            theory.v1,
            ((speeds.left.slope - theory.v1) / theory.v1).abs(),
            theory.speed_rel_tol,
        ),
        Check::new(
            "v_right",
            speeds.right.slope,
            theory.v2,
            ((speeds.right.slope - theory.v2) / theory.v2).abs(),
            theory.speed_rel_tol,
        ),
        Check::new(
            "h_slope",
            speeds.width.slope,
            theory.h_slope,
            ((speeds.width.slope - theory.h_slope) / theory.h_slope).abs(),
            theory.h_slope_rel_tol,
        ),
    ];
    let plateau_delta = intermediate
        .map(|[c1, c2]| {
            theory
                .sigma1
                .iter()
                .map(|s| (c1 - s[0]).abs().max((c2 - s[1]).abs()))
                .fold(f64::INFINITY, f64::min)
        })
        .unwrap_or(f64::INFINITY);
    checks.push(Check::new("plateau", intermediate.map_or(f64::NAN, |p| p[0]), f64::NAN, plateau_delta, theory.plateau_tol));
    let pass = checks.iter().all(|c| c.pass);
    Ok(TerraceReport {
        per_time,
        final_fronts,
        speeds,
        terrace_detected: intermediate.is_some(),
        intermediate,
        theory: theory.clone(),
        checks,
        pass,
    })
}

impl TerraceReport {
    pub fn summary_line(&self) -> String {
        let state = match self.intermediate {
            Some([a, b]) => format!("plateau=({a:.4},{b:.4})"),
            None => "no terrace".to_string(),
        };
        format!(
            "v_left={:.5} v_right={:.5} h_slope={:.5} {} {}",
            self.speeds.left.slope,
            self.speeds.right.slope,
            self.speeds.width.slope,
            state,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid1D;

    fn field_from(g: Grid1D, f: impl Fn(f64) -> (f64, f64)) -> TubesField {
        let (c1, c2) = g.centers().iter().map(|&y| f(y)).unzip();
        TubesField::new(g, c1, c2)
    }

    #[test]
    fn step_fronts_at_origin() {
        let g = Grid1D::new(-10.0, 10.0, 201).unwrap();
        let f = field_from(g, |y| (y.signum(), y.signum()));
        let (lo, hi) = front_positions(&f, FRONT_EPS).unwrap();
        assert!(lo.abs() <= g.h() && hi.abs() <= g.h(), "{lo} {hi}");
    }

    #[test]
    fn flat_field_has_no_front() {
        let g = Grid1D::new(-10.0, 10.0, 50).unwrap();
        let f = TubesField::uniform(g, -1.0, -1.0);
        assert!(matches!(front_positions(&f, FRONT_EPS), Err(AnalysisError::NoFront { .. })));
    }

    #[test]
    fn uniform_field_is_one_plateau() {
        let g = Grid1D::new(-10.0, 10.0, 50).unwrap();
        let p = detect_plateaus(&TubesField::uniform(g, 0.2, -0.3), 1e-6, 1.0);
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].y_start, p[0].y_end), (-10.0, 10.0));
        assert!((p[0].c1 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| -t / 4.0 + 3.0).collect();
        let fit = fit_line(&t, &y).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-14 && (fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        let flat = fit_line(&t, &vec![1.0; 50]).unwrap();
        assert_eq!(flat.slope, 0.0);
    }

    #[test]
    fn too_few_samples() {
        let rows: Vec<SeriesRow> = (0..5)
            .map(|i| SeriesRow {
                t: i as f64,
                h_width: 1.0,
                front_left: 0.0,
                front_right: 1.0,
                plateau_c1: 0.0,
                plateau_c2: 0.0,
            })
            .collect();
        assert!(matches!(estimate_speeds(&rows, 0.2), Err(AnalysisError::InsufficientSamples { .. })));
    }
}
