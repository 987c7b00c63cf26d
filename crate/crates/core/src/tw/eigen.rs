//! Linearization at fixed points of the traveling-wave systems.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::WaveError;
use crate::linalg::eigen;
use crate::model::Model;

use super::systems::{ipm_rescaled_jacobian, ipm_rhs_rescaled, tfe_jacobian, tfe_rhs_branch, Branch};

/// Fixed-point residual above which a point is rejected.
pub const FIXED_POINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub point: Vec<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    /// Unit eigenvectors (first nonzero component positive) for real
    /// eigenvalues; `None` for complex ones.
    pub eigenvectors: Vec<Option<Vec<f64>>>,
    pub n_stable: usize,
    pub n_unstable: usize,
    pub n_center: usize,
    pub jacobian: DMatrix<f64>,
}

impl EigenSystem {
    /// Largest `|J v - lambda v|` over the real pairs.
    pub fn pair_residual(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .filter_map(|(l, v)| v.as_ref().map(|v| (l.re, DVector::from_column_slice(v))))
            .map(|(l, v)| (&self.jacobian * &v - v * l).amax())
            .fold(0.0, f64::max)
    }

    /// Basis of the eigenspace for real eigenvalues satisfying `pred`.
    pub fn subspace(&self, pred: impl Fn(f64) -> bool) -> Vec<Vec<f64>> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .filter(|(l, _)| pred(l.re))
            .filter_map(|(_, v)| v.clone())
            .collect()
    }
}

/// Spectrum at a fixed point. TFE points are `(a,b,r,s)`; IPM points are
/// rescaled `(a,b,r1,s1,u1,q1)`. The Jacobian is taken on `branch`.
pub fn fixed_point_eigensystem(model: Model, v: f64, l: f64, branch: Branch, point: &[f64]) -> Result<EigenSystem, WaveError> {
    let (residual, jac) = match model {
        Model::Tfe => {
            let x: [f64; 4] = point
                .try_into()
                .map_err(|_| WaveError::Invalid(format!("TFE point needs 4 components, got {}", point.len())))?;
            let r = tfe_rhs_branch(v, branch, &x).iter().fold(0.0f64, |m, d| m.max(d.abs()));
            (r, tfe_jacobian(v, branch, &x))
        }
        Model::Ipm => {
            if !(l > 0.0) {
                return Err(WaveError::Invalid(format!("l must be positive, got {l}")));
            }
            let x: [f64; 6] = point
                .try_into()
                .map_err(|_| WaveError::Invalid(format!("IPM point needs 6 components, got {}", point.len())))?;
            let r = ipm_rhs_rescaled(v, l, branch, &x).iter().fold(0.0f64, |m, d| m.max(d.abs()));
            (r, ipm_rescaled_jacobian(v, l, branch, &x))
        }
    };
    if residual > FIXED_POINT_TOL {
        return Err(WaveError::NotFixedPoint { residual });
    }
    let (vals, vecs) = eigen(&jac);
    let tol = 1e-9 * jac.amax().max(1.0);
    let n_stable = vals.iter().filter(|z| z.re < -tol).count();
    let n_unstable = vals.iter().filter(|z| z.re > tol).count();
    Ok(EigenSystem {
        point: point.to_vec(),
        n_center: vals.len() - n_stable - n_unstable,
        eigenvalues: vals,
        eigenvectors: vecs.into_iter().map(|v| v.map(|v| v.as_slice().to_vec())).collect(),
        n_stable,
        n_unstable,
        jacobian: jac,
    })
}
