//! Closed-form TFE waves, wave endpoints, conserved quantities and the
//! Rankine-Hugoniot speed of the summed equation.

use serde::{Deserialize, Serialize};

use crate::error::WaveError;

use super::systems::{to_concentrations, Branch, Tw4};

/// Which far-field state a wave touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Waves leaving `(-1,-1)` (negative speed).
    FromMinus,
    /// Waves arriving at `(1,1)` (positive speed).
    ToPlus,
}

impl Side {
    pub fn of_speed(v: f64) -> Result<Side, WaveError> {
        if v < 0.0 {
            Ok(Side::FromMinus)
        } else if v > 0.0 {
            Ok(Side::ToPlus)
        } else {
            Err(WaveError::NoHeteroclinic)
        }
    }

    /// Far-field value of `b = c1 + c2` touched by this side.
    pub fn far_b(self) -> f64 {
        match self {
            Side::FromMinus => -2.0,
            Side::ToPlus => 2.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Side::FromMinus => "from_minus",
            Side::ToPlus => "to_plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveEndpoints {
    pub left: [f64; 2],
    pub right: [f64; 2],
    pub v: f64,
    pub branch: Branch,
}

impl WaveEndpoints {
    /// Endpoints with one side at the far field and the other at `(a0, b0)`.
    pub fn from_intermediate(v: f64, branch: Branch, a0: f64, b0: f64) -> Result<Self, WaveError> {
        let (c1, c2) = to_concentrations(a0, b0);
        Ok(match Side::of_speed(v)? {
            Side::FromMinus => WaveEndpoints { left: [-1.0, -1.0], right: [c1, c2], v, branch },
            Side::ToPlus => WaveEndpoints { left: [c1, c2], right: [1.0, 1.0], v, branch },
        })
    }

    /// The non-far-field state.
    pub fn intermediate(&self) -> [f64; 2] {
        if self.v < 0.0 {
            self.right
        } else {
            self.left
        }
    }
}

/// Intermediate fixed point `(a0, b0)` of the TFE wave with speed `v`.
pub fn tfe_intermediate(v: f64, branch: Branch) -> Result<(f64, f64), WaveError> {
    let side = Side::of_speed(v)?;
    let a0 = 4.0 * v * branch.sigma();
    Ok((a0, -8.0 * v + side.far_b()))
}

pub fn tfe_endpoints(v: f64, branch: Branch) -> Result<WaveEndpoints, WaveError> {
    let (a0, b0) = tfe_intermediate(v, branch)?;
    WaveEndpoints::from_intermediate(v, branch, a0, b0)
}

/// Exact profile point at `xi`, phase chosen so that `a(0)` is the midpoint
/// of its two limits.
pub fn tfe_explicit_profile(v: f64, branch: Branch, xi: f64) -> Result<Tw4, WaveError> {
    let side = Side::of_speed(v)?;
    let far = side.far_b();
    let th = (v * xi / 2.0).tanh();
    let sech2 = 1.0 - th * th;
    Ok(match branch {
        Branch::PositiveR => {
            let a = -2.0 * v + 2.0 * v * th;
            let r = v * v * sech2;
            [a, 2.0 * a + far, r, 2.0 * r]
        }
        Branch::NegativeR => {
            let a = 2.0 * v - 2.0 * v * th;
            let r = -v * v * sech2;
            [a, -2.0 * a + far, r, -2.0 * r]
        }
    })
}

/// Invariant manifolds carrying a conserved quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    /// `s = 2r`, `r >= 0`.
    I1,
    /// `s = -r`, `r >= 0`.
    I2,
    /// `s = r`, `r <= 0`.
    I3,
    /// `s = -2r`, `r <= 0`.
    I4,
    /// The whole phase space at zero speed.
    V0,
}

impl Manifold {
    pub fn name(self) -> &'static str {
        match self {
            Manifold::I1 => "I1",
            Manifold::I2 => "I2",
            Manifold::I3 => "I3",
            Manifold::I4 => "I4",
            Manifold::V0 => "V0",
        }
    }

    /// Defect of `(r, s)` from the manifold; zero on it.
    pub fn defect(self, r: f64, s: f64) -> f64 {
        let sign_defect = |ok: bool| if ok { 0.0 } else { r.abs() };
        match self {
            Manifold::I1 => (s - 2.0 * r).abs().max(sign_defect(r >= 0.0)),
            Manifold::I2 => (s + r).abs().max(sign_defect(r >= 0.0)),
            Manifold::I3 => (s - r).abs().max(sign_defect(r <= 0.0)),
            Manifold::I4 => (s + 2.0 * r).abs().max(sign_defect(r <= 0.0)),
            Manifold::V0 => 0.0,
        }
    }
}

/// Value of the first integral on `manifold`. Points farther than `tol` from
/// the manifold (or `v != 0` for `V0`) are rejected.
pub fn conserved_quantity(manifold: Manifold, v: f64, a: f64, r: f64, s: f64, tol: f64) -> Result<f64, WaveError> {
    let defect = if manifold == Manifold::V0 { v.abs() } else { manifold.defect(r, s) };
    if defect > tol {
        return Err(WaveError::OffManifold { manifold: manifold.name().into(), defect });
    }
    Ok(conserved_value(manifold, v, a, r, s))
}

/// The first-integral expression without the membership check.
pub fn conserved_value(manifold: Manifold, v: f64, a: f64, r: f64, s: f64) -> f64 {
    match manifold {
        Manifold::I1 => r + (v + a / 2.0).powi(2),
        Manifold::I2 => r - (a - v).powi(2) / 2.0,
        Manifold::I3 => r + (a + v).powi(2) / 2.0,
        Manifold::I4 => r - (a / 2.0 - v).powi(2),
        Manifold::V0 => s + a * a / 2.0,
    }
}

/// Flux of `c1 + c2` at a constant state: `u1 c1 + u2 c2 = -(c1-c2)^2 / 2`.
pub fn summed_flux(c: [f64; 2]) -> f64 {
    -(c[0] - c[1]).powi(2) / 2.0
}

/// Shock speed of the summed conservation law; `None` when both states
/// carry the same `c1 + c2`.
pub fn rankine_hugoniot_speed(left: [f64; 2], right: [f64; 2]) -> Option<f64> {
    let db = (right[0] + right[1]) - (left[0] + left[1]);
    let scale = left.iter().chain(&right).fold(1.0f64, |m, x| m.max(x.abs()));
    if db.abs() <= 1e-14 * scale {
        return None;
    }
    Some((summed_flux(right) - summed_flux(left)) / db)
}
