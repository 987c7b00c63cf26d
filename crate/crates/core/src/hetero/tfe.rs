//! TFE heteroclinic connections: closed form, cross-checked by shooting.

use serde::{Deserialize, Serialize};

use crate::error::WaveError;
use crate::model::Model;
use crate::ode::{integrate, Tolerances};
use crate::tw::{
    fixed_point_eigensystem, tfe_endpoints, tfe_explicit_profile, tfe_intermediate, tfe_rhs_branch, Branch, Side,
    WaveEndpoints,
};

use super::{HeteroclinicSolution, ProfileSample, Residuals};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfeOptions {
    /// Half width of the sampled profile; `25/|v|` when absent.
    pub half_width: Option<f64>,
    pub dxi: f64,
    pub shoot: bool,
    /// Initial offset from the fixed point along the eigenvector.
    pub eps: f64,
}

impl Default for TfeOptions {
    fn default() -> Self {
        TfeOptions { half_width: None, dxi: 0.1, shoot: true, eps: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootReport {
    /// Intermediate fixed point reached by shooting, independent of the
    /// closed form.
    pub a0: f64,
    pub b0: f64,
    /// Distance from the far-field fixed point reached when shooting forward
    /// from the source of the wave along its unstable eigenvector.
    pub forward_miss: f64,
}

fn horizon(v: f64) -> f64 {
    80.0 / v.abs()
}

/// Unit-length direction in the branch's invariant plane at the far-field
/// fixed point: unstable for `v < 0`, stable for `v > 0`.
fn far_field_direction(v: f64, branch: Branch) -> [f64; 4] {
    let sg = branch.sigma();
    // Spans s = 2r (r > 0) or s = -2r (r < 0), with b - far = 2 sg' a.
    let raw = if v < 0.0 { [-sg, 2.0, sg * v, -2.0 * v] } else { [sg, -2.0, -sg * v, 2.0 * v] };
    let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.map(|x| x / n)
}

/// The flow restricted to the branch's invariant plane
/// `b = far - 2 sigma a`, `s = -2 sigma r`, in coordinates `(a, r)`.
///
/// Transverse to the plane the intermediate state is a saddle whose
/// unstable rate exceeds the in-plane approach rate, so the full
/// four-dimensional flow loses the orbit to round-off before it lands.
struct Plane {
    v: f64,
    branch: Branch,
    far_b: f64,
}

impl Plane {
    fn lift(&self, y: &[f64; 2]) -> [f64; 4] {
        let sg = self.branch.sigma();
        [y[0], self.far_b - 2.0 * sg * y[0], y[1], -2.0 * sg * y[1]]
    }

    fn rhs(&self, y: &[f64; 2]) -> [f64; 2] {
        let d = tfe_rhs_branch(self.v, self.branch, &self.lift(y));
        [d[0], d[2]]
    }

    /// Integrate until `dist` has passed its minimum (after first exceeding
    /// `leave`) or dropped below round-off; returns the closest state.
    fn closest(&self, y0: [f64; 2], x1: f64, leave: f64, dist: impl Fn(&[f64; 2]) -> f64) -> Result<[f64; 2], WaveError> {
        let mut best = (f64::INFINITY, y0);
        let mut away = false;
        let watch = |_: f64, y: &[f64; 2]| {
            let d = dist(y);
            away |= d > leave;
            if away && d < best.0 {
                best = (d, *y);
            }
            d < 1e-15 || (away && best.0 < 1e-6 && d > 1e3 * best.0)
        };
        integrate(|y| self.rhs(y), y0, 0.0, x1, 0.0, Tolerances::TIGHT, watch)?;
        Ok(best.1)
    }
}

/// Shoot along the one-dimensional unstable direction of the source and the
/// invariant-plane direction at the far field.
pub fn shoot_tfe(v: f64, branch: Branch, eps: f64) -> Result<ShootReport, WaveError> {
    let side = Side::of_speed(v)?;
    let plane = Plane { v, branch, far_b: side.far_b() };
    let e = far_field_direction(v, branch);
    let t = horizon(v);
    // Far field -> intermediate state: forward for v < 0, backward for v > 0.
    let near = plane.closest([eps * e[0], eps * e[2]], if v < 0.0 { t } else { -t }, 1e-3 * v * v, |y| y[1].abs())?;
    if near[1].abs() > 1e-5 {
        return Err(WaveError::Shooting(format!("did not settle: r = {:e}", near[1])));
    }
    // Finish the exponential approach analytically: with r ~ exp(lam xi),
    // the remaining change of a is -r/lam.
    let lam = plane.rhs(&near)[1] / near[1];
    let a_land = near[0] - near[1] / lam;
    let land = plane.lift(&[a_land, 0.0]);
    let (a0, b0) = tfe_intermediate(v, branch)?;
    let forward_miss = if v < 0.0 {
        (land[0] - a0).abs().max((land[1] - b0).abs())
    } else {
        // Source is the intermediate state; leave it along its unstable
        // eigenvector, oriented into the branch.
        let es = fixed_point_eigensystem(Model::Tfe, v, 0.0, branch, &[a0, b0, 0.0, 0.0])?;
        let mut eu = es.subspace(|lam| lam > 0.0).into_iter().next().ok_or_else(|| {
            WaveError::Shooting("no unstable direction at the intermediate state".into())
        })?;
        if eu[2] * -branch.sigma() < 0.0 {
            eu.iter_mut().for_each(|x| *x = -*x);
        }
        let end = plane.closest([a0 + eps * eu[0], eps * eu[2]], t, 1e-3 * v * v, |y| y[0].abs().max(y[1].abs()))?;
        end[0].abs().max(end[1].abs())
    };
    Ok(ShootReport { a0: land[0], b0: land[1], forward_miss })
}

/// Closed-form TFE wave with speed `v` on `branch`.
pub fn find_tfe_heteroclinic(v: f64, branch: Branch, opts: &TfeOptions) -> Result<HeteroclinicSolution, WaveError> {
    if v == 0.0 {
        return Err(WaveError::NoHeteroclinic);
    }
    let endpoints: WaveEndpoints = tfe_endpoints(v, branch)?;
    let half = opts.half_width.unwrap_or(25.0 / v.abs());
    let n = (2.0 * half / opts.dxi).round().max(2.0) as usize;
    let profile = (0..=n)
        .map(|k| {
            let xi = -half + 2.0 * half * k as f64 / n as f64;
            let [a, b, r, s] = tfe_explicit_profile(v, branch, xi)?;
            Ok(ProfileSample { xi, a, b, r, s, u1: -a / 2.0, q1: 0.0 })
        })
        .collect::<Result<Vec<_>, WaveError>>()?;
    let boundary = {
        let (first, last) = (profile[0], profile[n]);
        let lim_lo = tfe_explicit_profile(v, branch, -1e6)?;
        let lim_hi = tfe_explicit_profile(v, branch, 1e6)?;
        (first.a - lim_lo[0]).abs().max((first.b - lim_lo[1]).abs()).max((last.a - lim_hi[0]).abs()).max((last.b - lim_hi[1]).abs())
    };
    let shooting = if opts.shoot {
        let rep = shoot_tfe(v, branch, opts.eps)?;
        let (a0, b0) = tfe_intermediate(v, branch)?;
        Some((rep.a0 - a0).abs().max((rep.b0 - b0).abs()).max(rep.forward_miss))
    } else {
        None
    };
    Ok(HeteroclinicSolution {
        model: Model::Tfe,
        v,
        l: 0.0,
        branch,
        endpoints,
        profile,
        residuals: Residuals { boundary, equations: 0.0, error_estimate: 0.0, shooting },
        diagnostics: None,
        newton_iterations: 0,
        core: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_endpoints() {
        let s = find_tfe_heteroclinic(0.25, Branch::PositiveR, &TfeOptions::default()).unwrap();
        assert_eq!(s.endpoints.left, [-0.5, 0.5]);
        assert_eq!(s.endpoints.right, [1.0, 1.0]);
        assert!(s.residuals.shooting.unwrap() < 1e-4);
        let s = find_tfe_heteroclinic(-0.25, Branch::NegativeR, &TfeOptions::default()).unwrap();
        assert_eq!(s.endpoints.right, [-0.5, 0.5]);
        assert!(matches!(find_tfe_heteroclinic(0.0, Branch::NegativeR, &TfeOptions::default()), Err(WaveError::NoHeteroclinic)));
    }

    #[test]
    fn shooting_lands_on_formula() {
        for &v in &[-0.4, -0.1, 0.1, 0.4] {
            for br in Branch::ALL {
                let rep = shoot_tfe(v, br, 1e-6).unwrap();
                let (a0, b0) = tfe_intermediate(v, br).unwrap();
                assert!((rep.a0 - a0).abs() < 1e-8 && (rep.b0 - b0).abs() < 1e-8, "v={v} {br:?} {rep:?}");
                assert!(rep.forward_miss < 1e-4);
            }
        }
    }
}
