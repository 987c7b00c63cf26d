//! IPM heteroclinic connections by collocation with continuation in `l`.

use serde::{Deserialize, Serialize};

use crate::error::WaveError;
use crate::model::Model;
use crate::tw::{tfe_explicit_profile, tfe_intermediate, Branch, Side, WaveEndpoints};
use crate::tw::systems::{from_rescaled, to_concentrations};

use super::bvp::{interpolate, BvpProblem, BvpSolution, NewtonSettings, NC};
use super::{CoreProfile, Diagnostics, HeteroclinicSolution, ProfileSample, Residuals};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpmOptions {
    /// Mesh spacing in `xi`.
    pub h: f64,
    /// Half width of the truncated interval; `25/|v|` when absent.
    pub half_width: Option<f64>,
    /// First spacing reached directly from a TFE seed.
    pub l_start: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Re-solve on a twice coarser mesh to estimate the endpoint error.
    pub error_estimate: bool,
    /// Allowed sign defect of `q1` and `r1` in the branch frame.
    pub sign_tol: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            h: 0.05,
            half_width: None,
            l_start: 0.05,
            newton_tol: 1e-10,
            max_iter: 50,
            error_estimate: true,
            sign_tol: 1e-8,
        }
    }
}

fn problem(v: f64, l: f64, branch: Branch, opts: &IpmOptions) -> BvpProblem {
    let half = opts.half_width.unwrap_or(25.0 / v.abs());
    // A multiple of 4 keeps the halved mesh valid for the error estimate.
    let n = (2.0 * half / opts.h / 4.0).ceil() as usize * 4;
    BvpProblem { v, l, branch, half_width: half, n_intervals: n.max(4) }
}

/// Initial guess from the closed-form TFE wave, lifted onto the slow
/// manifold `u1 = -a/2`, `q1 = -l r / 2`.
fn tfe_guess(p: &BvpProblem) -> Result<Vec<[f64; NC]>, WaveError> {
    let (a0, _) = tfe_intermediate(p.v, p.branch)?;
    p.mesh()
        .iter()
        .map(|&xi| {
            let [a, _b, r, s] = tfe_explicit_profile(p.v, p.branch, xi)?;
            Ok([a, r, s, -a / 2.0, -p.l * r / 2.0, a0])
        })
        .collect()
}

/// Guess from an IPM solution at speed `from.v`, rescaled to speed `p.v`
/// with the exact TFE scaling (amplitude ~ v, width ~ 1/v).
fn warm_guess(p: &BvpProblem, from: &HeteroclinicSolution) -> Option<Vec<[f64; NC]>> {
    let core = from.core.as_ref()?;
    if from.branch != p.branch || from.v.signum() != p.v.signum() {
        return None;
    }
    let k = p.v / from.v;
    let xi: Vec<f64> = core.xi.iter().map(|x| x / k).collect();
    let y: Vec<[f64; NC]> = core
        .y
        .iter()
        .map(|y| [y[0] * k, y[1] * k * k, y[2] * k * k, y[3] * k, y[4] * k * k, y[5] * k])
        .collect();
    Some(interpolate(&xi, &y, &p.mesh()))
}

fn settings(opts: &IpmOptions) -> NewtonSettings {
    NewtonSettings { tol: opts.newton_tol, max_iter: opts.max_iter }
}

/// Solve at `l_target`, walking `l` up from `l_from` with step halving on
/// failure.
fn continue_in_l(
    v: f64,
    branch: Branch,
    mut guess: Vec<[f64; NC]>,
    l_from: f64,
    l_target: f64,
    opts: &IpmOptions,
) -> Result<(BvpProblem, BvpSolution, usize), WaveError> {
    let mut cur = l_from;
    let mut total_iter = 0;
    let mut last_err = WaveError::NewtonFailed { iterations: 0, residual: f64::INFINITY };
    let mut dl = if cur == 0.0 { l_target.min(opts.l_start) } else { l_target - cur };
    let mut result: Option<(BvpProblem, BvpSolution)> = None;
    while result.as_ref().map_or(true, |(p, _)| p.l != l_target) {
        if dl.abs() < 1e-4 * l_target {
            return Err(last_err);
        }
        let t = if (l_target - cur - dl).abs() < 1e-12 || (dl > 0.0 && cur + dl > l_target) || (dl < 0.0 && cur + dl < l_target) {
            l_target
        } else {
            cur + dl
        };
        let p = problem(v, t, branch, opts);
        let mut g = guess.clone();
        if cur == 0.0 {
            // The TFE lift depends on l through q1.
            g = tfe_guess(&p)?;
        }
        match p.solve(&g, settings(opts)) {
            Ok(sol) => {
                total_iter += sol.iterations;
                guess = sol.y.clone();
                cur = t;
                dl *= 1.5;
                result = Some((p, sol));
            }
            Err(e) => {
                last_err = e;
                dl *= 0.5;
            }
        }
    }
    let (p, sol) = result.unwrap();
    Ok((p, sol, total_iter))
}

fn endpoint_state(p: &BvpProblem, sol: &BvpSolution, b: &[f64]) -> [f64; 2] {
    let n = sol.y.len() - 1;
    let (a0, b0) = match p.side() {
        Side::FromMinus => (sol.y[n][5], b[n]),
        Side::ToPlus => (sol.y[0][5], b[0]),
    };
    let (c1, c2) = to_concentrations(a0, b0);
    [c1, c2]
}

/// Heteroclinic of the IPM traveling-wave system at speed `v`, spacing `l`,
/// on `branch`. `seed` may be an earlier solution (any `l`, nearby `v`) or
/// `None` for the TFE wave.
pub fn find_ipm_heteroclinic(
    v: f64,
    l: f64,
    branch: Branch,
    seed: Option<&HeteroclinicSolution>,
    opts: &IpmOptions,
) -> Result<HeteroclinicSolution, WaveError> {
    if v == 0.0 {
        return Err(WaveError::NoHeteroclinic);
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(WaveError::Invalid(format!("l must be positive, got {l}")));
    }
    let side = Side::of_speed(v)?;
    let p0 = problem(v, l, branch, opts);
    let (guess, l_from) = match seed.filter(|s| s.model == Model::Ipm).and_then(|s| warm_guess(&p0, s).map(|g| (g, s.l))) {
        Some(g) => g,
        None => (tfe_guess(&p0)?, 0.0),
    };
    let (p, sol, iterations) = continue_in_l(v, branch, guess.clone(), l_from, l, opts)
        .or_else(|e| if l_from > 0.0 { continue_in_l(v, branch, tfe_guess(&p0)?, 0.0, l, opts) } else { Err(e) })?;

    let b = sol.recover_b(&p);
    let inter = endpoint_state(&p, &sol, &b);
    let sg = branch.sigma();
    let mut diag = Diagnostics {
        min_q1: f64::INFINITY,
        max_q1: f64::NEG_INFINITY,
        min_r1: f64::INFINITY,
        max_r1: f64::NEG_INFINITY,
        slow_manifold_distance: 0.0,
        sign_defect: 0.0,
    };
    let mut profile = Vec::with_capacity(sol.y.len());
    for ((&xi, y), &bb) in sol.xi.iter().zip(&sol.y).zip(&b) {
        let [a, r1, s1, u1, q1, _] = *y;
        diag.min_q1 = diag.min_q1.min(q1);
        diag.max_q1 = diag.max_q1.max(q1);
        diag.min_r1 = diag.min_r1.min(r1);
        diag.max_r1 = diag.max_r1.max(r1);
        diag.slow_manifold_distance = diag.slow_manifold_distance.max((u1 + a / 2.0).abs());
        diag.sign_defect = diag.sign_defect.max(-sg * q1).max(sg * r1);
        let raw = from_rescaled(l, branch, &[a, bb, r1, s1, u1, q1]);
        profile.push(ProfileSample { xi, a, b: bb, r: raw[2], s: raw[3], u1, q1 });
    }
    if diag.sign_defect > opts.sign_tol {
        // Report in the branch frame: sigma q1 >= 0, sigma r1 <= 0.
        let (min_q1, max_r1) = if sg > 0.0 { (diag.min_q1, diag.max_r1) } else { (-diag.max_q1, -diag.min_r1) };
        return Err(WaveError::SignViolation { min_q1, max_r1 });
    }

    let n = sol.y.len() - 1;
    let (left_fp, right_fp) = match side {
        Side::FromMinus => ([0.0; 5], fixed(sol.y[n][5])),
        Side::ToPlus => (fixed(sol.y[0][5]), [0.0; 5]),
    };
    let dist = |y: &[f64; NC], p: &[f64; 5]| (0..5).map(|c| (y[c] - p[c]).abs()).fold(0.0, f64::max);
    let boundary = dist(&sol.y[0], &left_fp).max(dist(&sol.y[n], &right_fp));

    let error_estimate = if opts.error_estimate {
        let coarse = BvpProblem { n_intervals: p.n_intervals / 2, ..p };
        if coarse.n_intervals.is_multiple_of(2) && coarse.n_intervals >= 4 {
            let g: Vec<[f64; NC]> = sol.y.iter().step_by(2).copied().collect();
            match coarse.solve(&g, settings(opts)) {
                Ok(cs) => {
                    let cb = cs.recover_b(&coarse);
                    let ci = endpoint_state(&coarse, &cs, &cb);
                    (ci[0] - inter[0]).abs().max((ci[1] - inter[1]).abs())
                }
                Err(_) => f64::NAN,
            }
        } else {
            f64::NAN
        }
    } else {
        f64::NAN
    };

    let endpoints = match side {
        Side::FromMinus => WaveEndpoints { left: [-1.0, -1.0], right: inter, v, branch },
        Side::ToPlus => WaveEndpoints { left: inter, right: [1.0, 1.0], v, branch },
    };
    Ok(HeteroclinicSolution {
        model: Model::Ipm,
        v,
        l,
        branch,
        endpoints,
        profile,
        residuals: Residuals { boundary, equations: sol.residual, error_estimate, shooting: None },
        diagnostics: Some(diag),
        newton_iterations: iterations,
        core: Some(CoreProfile { xi: sol.xi, y: sol.y }),
    })
}

fn fixed(a0: f64) -> [f64; 5] {
    [a0, 0.0, 0.0, -a0 / 2.0, 0.0]
}
