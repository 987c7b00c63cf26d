//! Heteroclinic connections, Hugoniot loci and terraces.

pub mod bvp;
pub mod ipm;
pub mod locus;
pub mod terrace;
pub mod tfe;

use serde::{Deserialize, Serialize};

use crate::model::Model;
use crate::tw::{Branch, WaveEndpoints};

pub use ipm::{find_ipm_heteroclinic, IpmOptions};
pub use locus::{hugoniot_loci, hugoniot_locus, speed_samples, HugoniotLocus, LocusSample};
pub use terrace::{find_terrace, Terrace, TerraceOptions};
pub use tfe::{find_tfe_heteroclinic, shoot_tfe, ShootReport, TfeOptions};

/// One point of a wave profile. `r`, `s` are the derivatives of `a`, `b`;
/// `u1`, `q1` are only meaningful for IPM waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub xi: f64,
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub s: f64,
    pub u1: f64,
    pub q1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Max-norm distance of the truncated ends from their fixed points.
    pub boundary: f64,
    /// Final max-norm of the discrete equations (0 for closed forms).
    pub equations: f64,
    /// Endpoint change against a solve on a twice coarser mesh.
    pub error_estimate: f64,
    /// Endpoint mismatch of the shooting cross-check, when run.
    pub shooting: Option<f64>,
}

/// Sign and slow-manifold diagnostics of an IPM wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub min_q1: f64,
    pub max_q1: f64,
    pub min_r1: f64,
    pub max_r1: f64,
    /// `max |u1 + a/2|` along the profile.
    pub slow_manifold_distance: f64,
    /// Worst sign defect in the branch frame, where the branch requires
    /// `sigma q1 >= 0` and `sigma r1 <= 0`.
    pub sign_defect: f64,
}

/// Nodal core unknowns `(a, r1, s1, u1, q1, a0)` of an IPM solve, kept for
/// warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreProfile {
    pub xi: Vec<f64>,
    pub y: Vec<[f64; 6]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroclinicSolution {
    pub model: Model,
    pub v: f64,
    /// Tube spacing, 0 for TFE.
    pub l: f64,
    pub branch: Branch,
    pub endpoints: WaveEndpoints,
    pub profile: Vec<ProfileSample>,
    pub residuals: Residuals,
    pub diagnostics: Option<Diagnostics>,
    pub newton_iterations: usize,
    pub core: Option<CoreProfile>,
}

impl HeteroclinicSolution {
    /// The intermediate (non-far-field) state.
    pub fn intermediate(&self) -> [f64; 2] {
        self.endpoints.intermediate()
    }

    /// Rankine-Hugoniot speed of the endpoints minus the wave speed.
    pub fn rh_defect(&self) -> f64 {
        crate::tw::rankine_hugoniot_speed(self.endpoints.left, self.endpoints.right)
            .map_or(f64::INFINITY, |s| (s - self.v).abs())
    }
}
