//! Time loop: snapshots at fixed output times plus a per-step series of
//! mixing-zone diagnostics.

use serde::{Deserialize, Serialize};

use crate::analyze::{front_positions, FRONT_EPS};
use crate::error::SolverError;
use crate::exec::Exec;
use crate::model::{make_initial_data, ModelParams, RunConfig, TubesField};

use super::flow::{flow, interflow, FlowField};
use super::scheme::{stable_dt, step};

/// Steps smaller than this abort the run.
pub const DT_MIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: TubesField,
    pub flow: FlowField,
    pub f: Vec<f64>,
}

impl Snapshot {
    pub fn new(t: f64, field: TubesField, params: &ModelParams, exec: Exec) -> Self {
        let fl = flow(&field, params, exec);
        let f = interflow(&field, &fl);
        Snapshot { t, field, flow: fl, f }
    }
}

/// One row of the per-step series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub h_width: f64,
    pub front_left: f64,
    pub front_right: f64,
    pub plateau_c1: f64,
    pub plateau_c2: f64,
}

impl SeriesRow {
    /// Fronts of the mean concentration and the state halfway between them.
    /// Rows are NaN when a front is missing.
    pub fn measure(t: f64, field: &TubesField) -> Self {
        match front_positions(field, FRONT_EPS) {
            Ok((lo, hi)) => {
                let g = field.grid;
                let mid = 0.5 * (lo + hi);
                let j = (((mid - g.y_min) / g.h()).floor().max(0.0) as usize).min(g.n_cells - 1);
                SeriesRow {
                    t,
                    h_width: hi - lo,
                    front_left: lo,
                    front_right: hi,
                    plateau_c1: field.c1[j],
                    plateau_c2: field.c2[j],
                }
            }
            Err(_) => SeriesRow {
                t,
                h_width: f64::NAN,
                front_left: f64::NAN,
                front_right: f64::NAN,
                plateau_c1: f64::NAN,
                plateau_c2: f64::NAN,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: u64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Extremes of both concentrations over the whole run.
    pub c_min: f64,
    pub c_max: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: RunConfig,
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<SeriesRow>,
    pub stats: StepStats,
}

/// A run that stopped early. `partial` ends with the offending state.
#[derive(Debug, Clone)]
pub struct Aborted {
    pub error: SolverError,
    pub partial: Trajectory,
}

/// Integrate from the configured initial data to `t_max`. The partial
/// trajectory of a failed run is dropped; use [`simulate_from`] to keep it.
pub fn simulate(config: &RunConfig, exec: Exec) -> crate::error::Result<Trajectory> {
    let field = make_initial_data(&config.grid, &config.initial)?;
    simulate_from(config, field, exec).map_err(|a| a.error.into())
}

/// Integrate from an explicit initial field.
pub fn simulate_from(config: &RunConfig, init: TubesField, exec: Exec) -> Result<Trajectory, Box<Aborted>> {
    let params = config.params;
    let ctl = &config.control;
    let h = config.grid.h();
    let (c_min, c_max) = init.min_max();
    let mut traj = Trajectory {
        config: config.clone(),
        snapshots: vec![Snapshot::new(0.0, init.clone(), &params, exec)],
        series: vec![SeriesRow::measure(0.0, &init)],
        stats: StepStats { steps: 0, dt_min: f64::INFINITY, dt_max: 0.0, c_min, c_max },
    };
    let mut field = init;
    let mut t = 0.0;
    let mut k_out = 1u64;
    let tol = 1e-12 * ctl.t_max.max(1.0);
    while t < ctl.t_max - tol {
        let next_out = (k_out as f64 * ctl.output_every).min(ctl.t_max);
        let fl = flow(&field, &params, exec);
        let mut dt = stable_dt(&fl, h, ctl.cfl);
        let mut hits_output = false;
        if t + dt >= next_out - tol {
            dt = next_out - t;
            hits_output = true;
        }
        if !(dt >= DT_MIN) && !hits_output {
            let error = SolverError::DtUnderflow { t, dt };
            return Err(Box::new(Aborted { error, partial: traj }));
        }
        field = step(&field, &params, dt, exec);
        t = if hits_output { next_out } else { t + dt };
        traj.stats.steps += 1;
        traj.stats.dt_min = traj.stats.dt_min.min(dt);
        traj.stats.dt_max = traj.stats.dt_max.max(dt);
        if let Some(cell) = field.first_non_finite() {
            let error = SolverError::NonFinite { t, cell };
            traj.snapshots.push(Snapshot::new(t, field, &params, exec));
            return Err(Box::new(Aborted { error, partial: traj }));
        }
        let (lo, hi) = field.min_max();
        traj.stats.c_min = traj.stats.c_min.min(lo);
        traj.stats.c_max = traj.stats.c_max.max(hi);
        traj.series.push(SeriesRow::measure(t, &field));
        if hits_output {
            traj.snapshots.push(Snapshot::new(t, field.clone(), &params, exec));
            k_out += 1;
        }
    }
    if traj.stats.steps == 0 {
        traj.stats.dt_min = 0.0;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid1D, InitialDataSpec, RunControl};

    fn config(t_max: f64, every: f64) -> RunConfig {
        RunConfig {
            params: ModelParams::tfe(),
            grid: Grid1D::new(-20.0, 20.0, 200).unwrap(),
            initial: InitialDataSpec::tanh_step(0.0, 1.0).with_perturbation(0.2, 2.0, 1),
            control: RunControl { t_max, cfl: 0.8, output_every: every, output_dir: "unused".into() },
        }
    }

    #[test]
    fn zero_horizon_keeps_initial_snapshot() {
        let tr = simulate(&config(0.0, 1.0), Exec::Sequential).unwrap();
        assert_eq!(tr.snapshots.len(), 1);
        assert_eq!(tr.snapshots[0].t, 0.0);
        assert_eq!(tr.stats.steps, 0);
    }

    #[test]
    fn snapshots_land_on_output_times() {
        let tr = simulate(&config(2.0, 0.5), Exec::Sequential).unwrap();
        let times: Vec<f64> = tr.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(tr.series.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(tr.series.len() as u64, tr.stats.steps + 1);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let a = simulate(&config(0.5, 0.5), Exec::Sequential).unwrap();
        let b = simulate(&config(0.5, 0.5), Exec::Parallel).unwrap();
        assert_eq!(a.snapshots.last().unwrap().field, b.snapshots.last().unwrap().field);
    }
}
