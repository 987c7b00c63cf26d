//! Hugoniot loci: intermediate states reachable from a far-field state as a
//! function of wave speed.

use serde::{Deserialize, Serialize};

use crate::error::WaveError;
use crate::exec::Exec;
use crate::model::Model;
use crate::tw::{tfe_endpoints, Branch, Side};

use super::ipm::{find_ipm_heteroclinic, IpmOptions};
use super::HeteroclinicSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusSample {
    pub v: f64,
    /// Intermediate state; NaN where no wave was found.
    pub c1: f64,
    pub c2: f64,
    /// Rankine-Hugoniot defect of the sample (NaN for gaps).
    pub residual: f64,
    pub ok: bool,
}

impl LocusSample {
    fn gap(v: f64) -> Self {
        LocusSample { v, c1: f64::NAN, c2: f64::NAN, residual: f64::NAN, ok: false }
    }

    fn from_solution(s: &HeteroclinicSolution) -> Self {
        let [c1, c2] = s.intermediate();
        LocusSample { v: s.v, c1, c2, residual: s.rh_defect(), ok: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HugoniotLocus {
    pub model: Model,
    pub l: f64,
    pub side: Side,
    pub branch: Branch,
    pub samples: Vec<LocusSample>,
}

impl HugoniotLocus {
    pub fn n_gaps(&self) -> usize {
        self.samples.iter().filter(|s| !s.ok).count()
    }
}

/// Locus on one side and branch. Speeds of the wrong sign for `side` are
/// rejected. IPM samples are solved in the given order, each warm-started
/// from the last success; failed samples become gaps.
pub fn hugoniot_locus(
    model: Model,
    l: f64,
    side: Side,
    branch: Branch,
    v_samples: &[f64],
) -> Result<HugoniotLocus, WaveError> {
    if let Some(&bad) = v_samples.iter().find(|&&v| Side::of_speed(v).ok() != Some(side)) {
        return Err(WaveError::BranchMismatch(format!("speed {bad} does not belong to side {}", side.tag())));
    }
    let samples = match model {
        Model::Tfe => v_samples
            .iter()
            .map(|&v| {
                let e = tfe_endpoints(v, branch)?;
                let [c1, c2] = e.intermediate();
                Ok(LocusSample { v, c1, c2, residual: 0.0, ok: true })
            })
            .collect::<Result<Vec<_>, WaveError>>()?,
        Model::Ipm => {
            let opts = IpmOptions { error_estimate: false, ..Default::default() };
            let mut last: Option<HeteroclinicSolution> = None;
            v_samples
                .iter()
                .map(|&v| match find_ipm_heteroclinic(v, l, branch, last.as_ref(), &opts) {
                    Ok(s) => {
                        let out = LocusSample::from_solution(&s);
                        last = Some(s);
                        out
                    }
                    Err(_) => LocusSample::gap(v),
                })
                .collect()
        }
    };
    Ok(HugoniotLocus { model, l, side, branch, samples })
}

/// Both branches of one side, computed independently.
pub fn hugoniot_loci(model: Model, l: f64, side: Side, v_samples: &[f64], exec: Exec) -> Result<Vec<HugoniotLocus>, WaveError> {
    exec.map(&Branch::ALL, |&b| hugoniot_locus(model, l, side, b, v_samples)).into_iter().collect()
}

/// Evenly spaced speeds on one side, ordered outward from `v = 0`.
pub fn speed_samples(side: Side, v_max: f64, n: usize) -> Vec<f64> {
    let sign = match side {
        Side::FromMinus => -1.0,
        Side::ToPlus => 1.0,
    };
    (1..=n).map(|k| sign * v_max * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tfe_locus_is_a_line() {
        let vs = speed_samples(Side::FromMinus, 0.5, 5);
        let loc = hugoniot_locus(Model::Tfe, 0.0, Side::FromMinus, Branch::PositiveR, &vs).unwrap();
        for s in &loc.samples {
            // a0 = -4v, b0 = -8v - 2
            assert!((s.c1 - s.c2 + 4.0 * s.v).abs() < 1e-14);
            assert!((s.c1 + s.c2 + 8.0 * s.v + 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn wrong_side_rejected() {
        assert!(hugoniot_locus(Model::Tfe, 0.0, Side::ToPlus, Branch::PositiveR, &[-0.1]).is_err());
    }
}
