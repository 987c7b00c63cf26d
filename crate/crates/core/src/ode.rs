//! Adaptive Dormand-Prince 8(5,3) integration of small autonomous systems.

use nalgebra::SVector;
use ode_solvers::dop853::Dop853;
use ode_solvers::{OutputType, System};

use crate::error::WaveError;

/// Sampled solution.
#[derive(Debug, Clone)]
pub struct OdePath<const N: usize> {
    pub x: Vec<f64>,
    pub y: Vec<[f64; N]>,
    /// Integration ended early because the stop predicate fired.
    pub stopped: bool,
}

impl<const N: usize> OdePath<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.x.last().unwrap(), *self.y.last().unwrap())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerances {
    pub const TIGHT: Tolerances = Tolerances { rtol: 1e-13, atol: 1e-15 };
    pub const DEFAULT: Tolerances = Tolerances { rtol: 1e-10, atol: 1e-12 };
}

struct Sys<'a, F, S> {
    f: &'a F,
    stop: &'a mut S,
}

impl<const N: usize, F, S> System<f64, SVector<f64, N>> for Sys<'_, F, S>
where
    F: Fn(&[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    fn system(&self, _x: f64, y: &SVector<f64, N>, dy: &mut SVector<f64, N>) {
        let d = (self.f)(&y.clone().into());
        dy.copy_from_slice(&d);
    }

    fn solout(&mut self, x: f64, y: &SVector<f64, N>, _dy: &SVector<f64, N>) -> bool {
        (self.stop)(x, &y.clone().into())
    }
}

/// One adaptive run from `x0` to `x1`, every accepted step recorded.
fn run<const N: usize, F, S>(f: &F, stop: &mut S, y0: [f64; N], x0: f64, x1: f64, tol: Tolerances) -> Result<OdePath<N>, WaveError>
where
    F: Fn(&[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    let sys = Sys { f, stop };
    let mut solver = Dop853::new(sys, x0, x1, 0.0, SVector::from(y0), tol.rtol, tol.atol);
    solver.set_output(OutputType::Sparse);
    solver.integrate().map_err(|e| WaveError::Shooting(e.to_string()))?;
    let x = solver.x_out().clone();
    let y = solver.y_out().iter().map(|v| (*v).into()).collect();
    let reached = x.last().map(|&xe| (xe - x1).abs() <= 1e-9 * (1.0 + x1.abs())).unwrap_or(false);
    Ok(OdePath { x, y, stopped: !reached })
}

/// Integrate `y' = f(y)` from `x0` to `x1` (either direction). With
/// `dx > 0` the solution is sampled on the uniform grid of spacing `dx`
/// (each interval integrated separately, so samples carry the full order of
/// the method); otherwise every accepted step is returned. Integration stops
/// early when `stop(x, y)` returns true after an accepted step.
pub fn integrate<const N: usize, F, S>(
    f: F,
    y0: [f64; N],
    x0: f64,
    x1: f64,
    dx: f64,
    tol: Tolerances,
    mut stop: S,
) -> Result<OdePath<N>, WaveError>
where
    F: Fn(&[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    if x0 == x1 {
        return Ok(OdePath { x: vec![x0], y: vec![y0], stopped: false });
    }
    if dx <= 0.0 {
        return run(&f, &mut stop, y0, x0, x1, tol);
    }
    let n = ((x1 - x0).abs() / dx).ceil().max(1.0) as usize;
    let step = (x1 - x0) / n as f64;
    let mut out = OdePath { x: vec![x0], y: vec![y0], stopped: false };
    let mut y = y0;
    for k in 0..n {
        let xa = x0 + k as f64 * step;
        let xb = if k + 1 == n { x1 } else { x0 + (k + 1) as f64 * step };
        let seg = run(&f, &mut stop, y, xa, xb, tol)?;
        let (xe, ye) = seg.last();
        out.x.push(xe);
        out.y.push(ye);
        if seg.stopped {
            out.stopped = true;
            break;
        }
        y = ye;
    }
    Ok(out)
}

/// Integrate without a stop predicate.
pub fn integrate_to<const N: usize, F>(f: F, y0: [f64; N], x0: f64, x1: f64, dx: f64, tol: Tolerances) -> Result<OdePath<N>, WaveError>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    integrate(f, y0, x0, x1, dx, tol, |_, _| false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let p = integrate_to(|y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], 0.0, 10.0, 0.5, Tolerances::TIGHT).unwrap();
        let (x, y) = p.last();
        assert!((x - 10.0).abs() < 1e-12);
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert_eq!(p.x.len(), 21);
    }

    #[test]
    fn backward_and_stop() {
        let p = integrate_to(|y: &[f64; 1]| [y[0]], [1.0], 0.0, -2.0, 0.0, Tolerances::TIGHT).unwrap();
        assert!((p.last().1[0] - (-2f64).exp()).abs() < 1e-12);
        let q = integrate(|y: &[f64; 1]| [y[0]], [1.0], 0.0, 10.0, 0.0, Tolerances::DEFAULT, |_, y| y[0] > 5.0).unwrap();
        assert!(q.stopped && q.last().1[0] > 5.0 && q.last().0 < 10.0);
    }
}
