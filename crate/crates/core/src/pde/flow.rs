//! Velocity closures and interflow.
//!
//! Face velocities are staggered: `u1_face[k]` lives on face `k` between
//! cells `k-1` and `k`, with ghost cells beyond both ends where the tubes
//! carry their far-field values (so `c1 - c2 = 0` there).

use crate::exec::Exec;
use crate::linalg::solve_tridiagonal;
use crate::model::{Model, ModelParams, TubesField};

/// Velocities, interflow rate and pressure drop on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// Interflow rate `u_T / l` per cell, positive from tube 1 into tube 2.
    pub ut_over_l: Vec<f64>,
    /// Pressure drop `p2 - p1`; zero under the TFE closure.
    pub q: Vec<f64>,
    /// Tube-1 velocity on the `n + 1` cell faces. Tube 2 carries the negative.
    pub u1_face: Vec<f64>,
}

impl FlowField {
    pub fn max_speed(&self) -> f64 {
        self.u1_face.iter().chain(&self.u1).fold(0.0, |m, u| m.max(u.abs()))
    }
}

#[inline]
fn a_at(field: &TubesField, j: isize) -> f64 {
    if j < 0 || j as usize >= field.len() {
        0.0
    } else {
        let j = j as usize;
        field.c1[j] - field.c2[j]
    }
}

/// Flow under the active closure.
pub fn flow(field: &TubesField, params: &ModelParams, exec: Exec) -> FlowField {
    match params.model {
        Model::Tfe => tfe_closure_with(field, exec),
        Model::Ipm => ipm_flow_solve_with(field, params.l, exec),
    }
}

pub fn tfe_closure(field: &TubesField) -> FlowField {
    tfe_closure_with(field, Exec::Sequential)
}

pub fn tfe_closure_with(field: &TubesField, exec: Exec) -> FlowField {
    let n = field.len();
    let h = field.grid.h();
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    exec.fill2(&mut u1, &mut u2, |j| {
        let u = (field.c2[j] - field.c1[j]) / 2.0;
        (u, -u)
    });
    let mut ut = vec![0.0; n];
    exec.fill(&mut ut, |j| {
        let j = j as isize;
        (a_at(field, j + 1) - a_at(field, j - 1)) / (4.0 * h)
    });
    let mut face = vec![0.0; n + 1];
    exec.fill(&mut face, |k| {
        let k = k as isize;
        -(a_at(field, k - 1) + a_at(field, k)) / 4.0
    });
    FlowField { u1, u2, ut_over_l: ut, q: vec![0.0; n], u1_face: face }
}

/// Right-hand side of the pressure problem, `d/dy (c1 - c2)` by centered
/// differences.
fn pressure_forcing(field: &TubesField) -> Vec<f64> {
    let h = field.grid.h();
    (0..field.len() as isize)
        .map(|j| (a_at(field, j + 1) - a_at(field, j - 1)) / (2.0 * h))
        .collect()
}

/// Solve `q'' - (2/l^2) q = d/dy (c1 - c2)` with `q = 0` beyond both ends.
pub fn solve_pressure(field: &TubesField, l: f64) -> Vec<f64> {
    assert!(l > 0.0, "tube spacing must be positive");
    let n = field.len();
    let h = field.grid.h();
    let off = 1.0 / (h * h);
    let diag = -2.0 / (h * h) - 2.0 / (l * l);
    let q = solve_tridiagonal(&vec![off; n], &vec![diag; n], &vec![off; n], &pressure_forcing(field));
    debug_assert!(q.iter().all(|x| x.is_finite()));
    q
}

/// Max-norm residual of the discrete pressure equation.
pub fn pressure_residual(field: &TubesField, l: f64, q: &[f64]) -> f64 {
    let n = field.len();
    let h = field.grid.h();
    let rhs = pressure_forcing(field);
    let at = |j: isize| if j < 0 || j as usize >= n { 0.0 } else { q[j as usize] };
    (0..n as isize)
        .map(|j| {
            let lhs = (at(j + 1) - 2.0 * at(j) + at(j - 1)) / (h * h) - 2.0 / (l * l) * at(j);
            (lhs - rhs[j as usize]).abs()
        })
        .fold(0.0, f64::max)
}

pub fn ipm_flow_solve(field: &TubesField, l: f64) -> FlowField {
    ipm_flow_solve_with(field, l, Exec::Sequential)
}

pub fn ipm_flow_solve_with(field: &TubesField, l: f64, exec: Exec) -> FlowField {
    let n = field.len();
    let h = field.grid.h();
    let q = solve_pressure(field, l);
    let qa = |j: isize| if j < 0 || j as usize >= n { 0.0 } else { q[j as usize] };
    let mut face = vec![0.0; n + 1];
    exec.fill(&mut face, |k| {
        let k = k as isize;
        ((qa(k) - qa(k - 1)) / h - (a_at(field, k - 1) + a_at(field, k)) / 2.0) / 2.0
    });
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    exec.fill2(&mut u1, &mut u2, |j| {
        let ji = j as isize;
        let u = ((qa(ji + 1) - qa(ji - 1)) / (2.0 * h) - a_at(field, ji)) / 2.0;
        (u, -u)
    });
    let inv_l2 = 1.0 / (l * l);
    let ut = q.iter().map(|x| -x * inv_l2).collect();
    FlowField { u1, u2, ut_over_l: ut, q, u1_face: face }
}

/// Upwind interflow from tube 1 into tube 2.
pub fn interflow(field: &TubesField, flow: &FlowField) -> Vec<f64> {
    let mut f = vec![0.0; field.len()];
    interflow_into(field, flow, &mut f, Exec::Sequential);
    f
}

pub fn interflow_into(field: &TubesField, flow: &FlowField, out: &mut [f64], exec: Exec) {
    exec.fill(out, |j| {
        let w = flow.ut_over_l[j];
        if w >= 0.0 {
            w * field.c1[j]
        } else {
            w * field.c2[j]
        }
    });
}

/// Worst violation of the discrete incompressibility identity
/// `(U_{j+1/2} - U_{j-1/2}) / h + u_T/l = 0`.
pub fn incompressibility_defect(flow: &FlowField, h: f64) -> f64 {
    flow.ut_over_l
        .iter()
        .enumerate()
        .map(|(j, w)| ((flow.u1_face[j + 1] - flow.u1_face[j]) / h + w).abs())
        .fold(0.0, f64::max)
}
