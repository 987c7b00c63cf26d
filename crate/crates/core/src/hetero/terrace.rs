//! Terraces: a slow wave leaving `(-1,-1)` followed by a fast wave arriving
//! at `(1,1)`, joined at a common intermediate state.

use serde::{Deserialize, Serialize};

use crate::error::WaveError;
use crate::model::Model;
use crate::tw::Branch;

use super::ipm::{find_ipm_heteroclinic, IpmOptions};
use super::tfe::{find_tfe_heteroclinic, TfeOptions};
use super::HeteroclinicSolution;

/// Branch of the first (negative speed) wave.
pub const FIRST: Branch = Branch::PositiveR;
/// Branch of the second (positive speed) wave.
pub const SECOND: Branch = Branch::NegativeR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerraceOptions {
    /// Starting guess for `(v1, v2)`.
    pub guess: (f64, f64),
    /// Tolerance on the mismatch of the two intermediate states.
    pub tol: f64,
    pub max_iter: usize,
    /// Finite-difference step in `v`.
    pub fd_step: f64,
    pub ipm: IpmOptions,
}

impl Default for TerraceOptions {
    fn default() -> Self {
        TerraceOptions {
            guess: (-0.25, 0.25),
            tol: 1e-8,
            max_iter: 30,
            fd_step: 1e-5,
            ipm: IpmOptions { error_estimate: false, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terrace {
    pub model: Model,
    pub l: f64,
    pub sigma0: [f64; 2],
    pub sigma1: [f64; 2],
    pub sigma2: [f64; 2],
    pub v1: f64,
    pub v2: f64,
    /// Mismatch of the intermediate states reached by the two waves.
    pub mismatch: f64,
    pub newton_iterations: usize,
    pub waves: [HeteroclinicSolution; 2],
}

fn check_order(v1: f64, v2: f64) -> Result<(), WaveError> {
    if v1 < v2 {
        Ok(())
    } else {
        Err(WaveError::SpeedOrdering { v1, v2 })
    }
}

fn tfe_terrace() -> Result<Terrace, WaveError> {
    let (v1, v2) = (-0.25, 0.25);
    let opts = TfeOptions::default();
    let w1 = find_tfe_heteroclinic(v1, FIRST, &opts)?;
    let w2 = find_tfe_heteroclinic(v2, SECOND, &opts)?;
    let (i1, i2) = (w1.intermediate(), w2.intermediate());
    let mismatch = (i1[0] - i2[0]).abs().max((i1[1] - i2[1]).abs());
    check_order(v1, v2)?;
    Ok(Terrace {
        model: Model::Tfe,
        l: 0.0,
        sigma0: [-1.0, -1.0],
        sigma1: i1,
        sigma2: [1.0, 1.0],
        v1,
        v2,
        mismatch,
        newton_iterations: 0,
        waves: [w1, w2],
    })
}

/// Terrace for `model` at spacing `l`. For IPM, the speeds solve
/// `E1(v1) = E2(v2)`, where `E1`, `E2` are the intermediate states of the
/// two waves; `l = 0` gives the TFE terrace.
pub fn find_terrace(model: Model, l: f64, opts: &TerraceOptions) -> Result<Terrace, WaveError> {
    if model == Model::Tfe || l == 0.0 {
        return tfe_terrace();
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(WaveError::Invalid(format!("l must be positive, got {l}")));
    }
    let (mut v1, mut v2) = opts.guess;
    if !(v1 < 0.0 && v2 > 0.0) {
        return Err(WaveError::Invalid(format!("guess must have v1 < 0 < v2, got ({v1}, {v2})")));
    }
    let mut w1 = find_ipm_heteroclinic(v1, l, FIRST, None, &opts.ipm)?;
    let mut w2 = find_ipm_heteroclinic(v2, l, SECOND, None, &opts.ipm)?;
    let mismatch_of = |a: &HeteroclinicSolution, b: &HeteroclinicSolution| {
        let (p, q) = (a.intermediate(), b.intermediate());
        [p[0] - q[0], p[1] - q[1]]
    };
    let norm = |f: [f64; 2]| f[0].abs().max(f[1].abs());
    let mut f = mismatch_of(&w1, &w2);
    let mut it = 0;
    while norm(f) > opts.tol {
        if it == opts.max_iter {
            return Err(WaveError::NewtonFailed { iterations: it, residual: norm(f) });
        }
        it += 1;
        // The two sides decouple: column 1 depends on v1 only, column 2 on v2.
        let d = opts.fd_step;
        let w1d = find_ipm_heteroclinic(v1 + d, l, FIRST, Some(&w1), &opts.ipm)?;
        let w2d = find_ipm_heteroclinic(v2 + d, l, SECOND, Some(&w2), &opts.ipm)?;
        let (e1, e1d, e2, e2d) = (w1.intermediate(), w1d.intermediate(), w2.intermediate(), w2d.intermediate());
        let j = [
            [(e1d[0] - e1[0]) / d, -(e2d[0] - e2[0]) / d],
            [(e1d[1] - e1[1]) / d, -(e2d[1] - e2[1]) / d],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            return Err(WaveError::NewtonFailed { iterations: it, residual: norm(f) });
        }
        let dv1 = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dv2 = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        let mut lam = 1.0;
        loop {
            let (n1, n2) = (v1 + lam * dv1, v2 + lam * dv2);
            let trial = if n1 < 0.0 && n2 > 0.0 {
                find_ipm_heteroclinic(n1, l, FIRST, Some(&w1), &opts.ipm)
                    .and_then(|a| find_ipm_heteroclinic(n2, l, SECOND, Some(&w2), &opts.ipm).map(|b| (a, b)))
                    .ok()
            } else {
                None
            };
            if let Some((a, b)) = trial {
                let fnew = mismatch_of(&a, &b);
                if norm(fnew) < norm(f) || lam < 1.0 / 64.0 {
                    v1 = n1;
                    v2 = n2;
                    w1 = a;
                    w2 = b;
                    f = fnew;
                    break;
                }
            }
            lam *= 0.5;
            if lam < 1.0 / 256.0 {
                return Err(WaveError::NewtonFailed { iterations: it, residual: norm(f) });
            }
        }
    }
    check_order(v1, v2)?;
    let (i1, i2) = (w1.intermediate(), w2.intermediate());
    Ok(Terrace {
        model: Model::Ipm,
        l,
        sigma0: [-1.0, -1.0],
        sigma1: [(i1[0] + i2[0]) / 2.0, (i1[1] + i2[1]) / 2.0],
        sigma2: [1.0, 1.0],
        v1,
        v2,
        mismatch: norm(f),
        newton_iterations: it,
        waves: [w1, w2],
    })
}
