//! Semi-discrete right-hand side and the SSP-RK2 step.

use crate::exec::Exec;
use crate::model::{ModelParams, TubesField};

use super::flow::{flow, interflow_into, FlowField};

/// Far-field ghost values below and above the domain.
pub const GHOST_LOW: f64 = -1.0;
pub const GHOST_HIGH: f64 = 1.0;

#[inline]
fn upwind(u: f64, below: f64, above: f64) -> f64 {
    if u >= 0.0 {
        u * below
    } else {
        u * above
    }
}

/// Time derivatives for a given flow and interflow: upwind advection,
/// three-point diffusion, exchange `-f` / `+f`.
pub fn rhs_with_flow(field: &TubesField, flow: &FlowField, f: &[f64], exec: Exec) -> (Vec<f64>, Vec<f64>) {
    let n = field.len();
    let h = field.grid.h();
    let inv_h = 1.0 / h;
    let inv_h2 = inv_h * inv_h;
    let c = |v: &[f64], j: isize| {
        if j < 0 {
            GHOST_LOW
        } else if j as usize >= n {
            GHOST_HIGH
        } else {
            v[j as usize]
        }
    };
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    exec.fill2(&mut d1, &mut d2, |j| {
        let ji = j as isize;
        let (ulo, uhi) = (flow.u1_face[j], flow.u1_face[j + 1]);
        let (c1m, c1, c1p) = (c(&field.c1, ji - 1), field.c1[j], c(&field.c1, ji + 1));
        let (c2m, c2, c2p) = (c(&field.c2, ji - 1), field.c2[j], c(&field.c2, ji + 1));
        let adv1 = (upwind(uhi, c1, c1p) - upwind(ulo, c1m, c1)) * inv_h;
        let adv2 = (upwind(-uhi, c2, c2p) - upwind(-ulo, c2m, c2)) * inv_h;
        let dif1 = (c1p - 2.0 * c1 + c1m) * inv_h2;
        let dif2 = (c2p - 2.0 * c2 + c2m) * inv_h2;
        (-adv1 - f[j] + dif1, -adv2 + f[j] + dif2)
    });
    (d1, d2)
}

/// Time derivatives with the flow recomputed from `field`.
pub fn rhs(field: &TubesField, params: &ModelParams, exec: Exec) -> (Vec<f64>, Vec<f64>) {
    let fl = flow(field, params, exec);
    let mut f = vec![0.0; field.len()];
    interflow_into(field, &fl, &mut f, exec);
    rhs_with_flow(field, &fl, &f, exec)
}

/// Stable step for the current state.
pub fn stable_dt(flow: &FlowField, h: f64, cfl: f64) -> f64 {
    let umax = flow.max_speed();
    let adv = if umax > 0.0 { h / umax } else { f64::INFINITY };
    cfl * adv.min(h * h / 2.0)
}

/// One SSP-RK2 (Heun) step. Flow is recomputed at each stage.
pub fn step(field: &TubesField, params: &ModelParams, dt: f64, exec: Exec) -> TubesField {
    let (k1, k2) = rhs(field, params, exec);
    let n = field.len();
    let mut stage = field.clone();
    exec.fill2(&mut stage.c1, &mut stage.c2, |j| (field.c1[j] + dt * k1[j], field.c2[j] + dt * k2[j]));
    let (l1, l2) = rhs(&stage, params, exec);
    let mut out = field.clone();
    exec.fill2(&mut out.c1, &mut out.c2, |j| {
        (
            0.5 * field.c1[j] + 0.5 * (stage.c1[j] + dt * l1[j]),
            0.5 * field.c2[j] + 0.5 * (stage.c2[j] + dt * l2[j]),
        )
    });
    debug_assert_eq!(out.len(), n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid1D, InitialDataSpec, make_initial_data};
    use crate::pde::flow::tfe_closure;

    #[test]
    fn uniform_state_is_stationary() {
        let g = Grid1D::new(-5.0, 5.0, 20).unwrap();
        // Far-field ghosts are -1 below and +1 above, so only a state that
        // matches them at the ends is stationary; take a field far from the
        // boundaries instead.
        let field = make_initial_data(&g, &InitialDataSpec::sharp_step(0.0)).unwrap();
        let (d1, d2) = rhs(&field, &ModelParams::tfe(), Exec::Sequential);
        for j in [0, 1, 2, 17, 18, 19] {
            assert_eq!(d1[j], 0.0);
            assert_eq!(d2[j], 0.0);
        }
    }

    #[test]
    fn frozen_velocity_parabola() {
        let g = Grid1D::new(-1.0, 1.0, 200).unwrap();
        let c1: Vec<f64> = g.centers().iter().map(|y| y * y).collect();
        let field = TubesField::new(g, c1, vec![0.0; 200]);
        let mut fl = tfe_closure(&field);
        fl.u1_face = vec![1.0; 201];
        let f = vec![0.0; 200];
        let (d1, _) = rhs_with_flow(&field, &fl, &f, Exec::Sequential);
        for j in 1..199 {
            let y = g.center(j);
            assert!((d1[j] - (-2.0 * y + 2.0)).abs() <= 1.01 * g.h(), "j={j}");
        }
    }

    #[test]
    fn step_commutes_with_swap() {
        let g = Grid1D::new(-20.0, 20.0, 200).unwrap();
        let spec = InitialDataSpec::tanh_step(0.0, 1.0).with_perturbation(0.2, 2.0, 1);
        let field = make_initial_data(&g, &spec).unwrap();
        for params in [ModelParams::tfe(), ModelParams::ipm(0.2)] {
            let a = step(&field, &params, 1e-3, Exec::Sequential).swapped();
            let b = step(&field.swapped(), &params, 1e-3, Exec::Sequential);
            assert_eq!(a, b);
        }
    }
}
