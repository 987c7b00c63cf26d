//! Traveling-wave right-hand sides in the moving frame `xi = y - v t`.
//!
//! TFE state `(a, b, r, s)` with `a = c1 - c2`, `b = c1 + c2`, `r = a'`,
//! `s = b'`. IPM raw state `(a, b, r, s, u1, q)`; the rescaled state
//! `(a, b, r1, s1, u1, q1)` shifts `r, s` by the slow-manifold terms and
//! uses `q1 = q / l`, which turns the IPM system into standard slow-fast form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Sign branch of a wave. The IPM pressure drop has the opposite sign of `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `r <= 0`, `q >= 0`.
    NegativeR,
    /// `r >= 0`, `q <= 0`.
    PositiveR,
}

impl Branch {
    /// `+1` on the `q >= 0` branch, `-1` on the other; `|q| = sigma q` and
    /// `|r| = -sigma r`.
    pub fn sigma(self) -> f64 {
        match self {
            Branch::NegativeR => 1.0,
            Branch::PositiveR => -1.0,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            Branch::NegativeR => Branch::PositiveR,
            Branch::PositiveR => Branch::NegativeR,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Branch::NegativeR => "r<0",
            Branch::PositiveR => "r>0",
        }
    }

    /// File-name safe tag.
    pub fn slug(self) -> &'static str {
        match self {
            Branch::NegativeR => "neg",
            Branch::PositiveR => "pos",
        }
    }

    pub const ALL: [Branch; 2] = [Branch::NegativeR, Branch::PositiveR];
}

impl std::str::FromStr for Branch {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "r<0" | "neg" | "negative" | "negative_r" | "q>=0" => Ok(Branch::NegativeR),
            "r>0" | "pos" | "positive" | "positive_r" | "q<=0" => Ok(Branch::PositiveR),
            other => Err(format!("unknown branch '{other}' (expected neg or pos)")),
        }
    }
}

pub type Tw4 = [f64; 4];
pub type Tw6 = [f64; 6];

/// `(c1, c2)` from `(a, b)`.
#[inline]
pub fn to_concentrations(a: f64, b: f64) -> (f64, f64) {
    ((a + b) / 2.0, (b - a) / 2.0)
}

/// `(a, b)` from `(c1, c2)`.
#[inline]
pub fn from_concentrations(c1: f64, c2: f64) -> (f64, f64) {
    (c1 - c2, c1 + c2)
}

pub fn tfe_rhs(v: f64, x: &Tw4) -> Tw4 {
    let [a, _b, r, s] = *x;
    [r, s, -v * r - s * a / 2.0 + a * r.abs() / 2.0, -v * s - r * a]
}

/// TFE right-hand side with `|r|` replaced by `-sigma r`.
pub fn tfe_rhs_branch(v: f64, branch: Branch, x: &Tw4) -> Tw4 {
    let [a, _b, r, s] = *x;
    let sg = branch.sigma();
    [r, s, -v * r - s * a / 2.0 - sg * a * r / 2.0, -v * s - r * a]
}

pub fn tfe_jacobian(v: f64, branch: Branch, x: &Tw4) -> DMatrix<f64> {
    let [a, _b, r, s] = *x;
    let sg = branch.sigma();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            -s / 2.0 - sg * r / 2.0, 0.0, -v - sg * a / 2.0, -a / 2.0, //
            -r, 0.0, -a, -v,
        ],
    )
}

/// Raw IPM system in `(a, b, r, s, u1, q)`.
pub fn ipm_rhs(v: f64, l: f64, x: &Tw6) -> Tw6 {
    let [a, _b, r, s, u1, q] = *x;
    let il2 = 1.0 / (l * l);
    [
        r,
        s,
        -v * r + u1 * s + a * q.abs() * il2,
        -v * s + u1 * r + a * q * il2,
        q * il2,
        2.0 * u1 + a,
    ]
}

#[inline]
fn wz(sg: f64, a: f64, r1: f64, s1: f64, u1: f64) -> (f64, f64) {
    let m = u1 * a + a * a / 2.0;
    (r1 + sg * m, s1 + m)
}

/// Raw `(a,b,r,s,u1,q)` to rescaled `(a,b,r1,s1,u1,q1)` on a branch.
pub fn to_rescaled(l: f64, branch: Branch, x: &Tw6) -> Tw6 {
    let [a, b, r, s, u1, q] = *x;
    let m = u1 * a + a * a / 2.0;
    [a, b, r - branch.sigma() * m, s - m, u1, q / l]
}

pub fn from_rescaled(l: f64, branch: Branch, x: &Tw6) -> Tw6 {
    let [a, b, r1, s1, u1, q1] = *x;
    let (w, z) = wz(branch.sigma(), a, r1, s1, u1);
    [a, b, w, z, u1, q1 * l]
}

/// Derivatives of `(a, r1, s1, u1, q1)`; `b` decouples and is omitted.
pub fn ipm_core_rhs(v: f64, l: f64, branch: Branch, y: &[f64; 5]) -> [f64; 5] {
    let [a, r1, s1, u1, q1] = *y;
    let sg = branch.sigma();
    let (w, z) = wz(sg, a, r1, s1, u1);
    [
        w,
        -v * w + u1 * (s1 - sg * r1) - sg * a * w,
        -v * z - a * w,
        q1 / l,
        (2.0 * u1 + a) / l,
    ]
}

/// `b' = s` expressed in core variables.
pub fn ipm_core_b_rate(y: &[f64; 5]) -> f64 {
    let [a, _r1, s1, u1, _q1] = *y;
    s1 + u1 * a + a * a / 2.0
}

/// Rescaled IPM system on a sign branch.
pub fn ipm_rhs_rescaled(v: f64, l: f64, branch: Branch, x: &Tw6) -> Tw6 {
    let [a, _b, r1, s1, u1, q1] = *x;
    let core = [a, r1, s1, u1, q1];
    let d = ipm_core_rhs(v, l, branch, &core);
    [d[0], ipm_core_b_rate(&core), d[1], d[2], d[3], d[4]]
}

/// Jacobian of [`ipm_core_rhs`], 5x5 row-major in `(a, r1, s1, u1, q1)`.
pub fn ipm_core_jacobian(v: f64, l: f64, branch: Branch, y: &[f64; 5]) -> [[f64; 5]; 5] {
    let [a, r1, s1, u1, _q1] = *y;
    let sg = branch.sigma();
    let (w, _) = wz(sg, a, r1, s1, u1);
    let (w_a, w_u) = (sg * (u1 + a), sg * a);
    let (z_a, z_u) = (u1 + a, a);
    let il = 1.0 / l;
    [
        [w_a, 1.0, 0.0, w_u, 0.0],
        [
            -v * w_a - sg * w - sg * a * w_a,
            -v - sg * u1 - sg * a,
            u1,
            -v * w_u + (s1 - sg * r1) - sg * a * w_u,
            0.0,
        ],
        [-v * z_a - w - a * w_a, -a, -v, -v * z_u - a * w_u, 0.0],
        [0.0, 0.0, 0.0, 0.0, il],
        [il, 0.0, 0.0, 2.0 * il, 0.0],
    ]
}

/// Full 6x6 Jacobian of [`ipm_rhs_rescaled`] (the `b` column vanishes).
pub fn ipm_rescaled_jacobian(v: f64, l: f64, branch: Branch, x: &Tw6) -> DMatrix<f64> {
    let [a, _b, r1, s1, u1, q1] = *x;
    let core = [a, r1, s1, u1, q1];
    let jc = ipm_core_jacobian(v, l, branch, &core);
    // Core index -> full index.
    const MAP: [usize; 5] = [0, 2, 3, 4, 5];
    let mut j = DMatrix::zeros(6, 6);
    for (ci, &fi) in MAP.iter().enumerate() {
        for (cj, &fj) in MAP.iter().enumerate() {
            j[(fi, fj)] = jc[ci][cj];
        }
    }
    // b' = s1 + u1 a + a^2/2
    j[(1, 0)] = u1 + a;
    j[(1, 3)] = 1.0;
    j[(1, 4)] = a;
    j
}

/// Tube exchange `(a,b,r,s) -> (-a,b,-r,s)`.
pub fn swap4(x: &Tw4) -> Tw4 {
    [-x[0], x[1], -x[2], x[3]]
}

/// Tube exchange on raw IPM states.
pub fn swap6(x: &Tw6) -> Tw6 {
    [-x[0], x[1], -x[2], x[3], -x[4], -x[5]]
}

/// Reflection partner `(a,b,r,s) -> (a,-b,-r,s)`, valid together with
/// `v -> -v`, `xi -> -xi`.
pub fn reflect4(x: &Tw4) -> Tw4 {
    [x[0], -x[1], -x[2], x[3]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fd_jacobian;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn tfe_hand_values() {
        assert_eq!(tfe_rhs(0.0, &[1.0, 0.0, 1.0, 1.0]), [1.0, 1.0, 0.0, -1.0]);
        assert_eq!(tfe_rhs(1.0, &[2.0, 0.0, -1.0, 0.0]), [-1.0, 0.0, 2.0, 2.0]);
        assert_eq!(tfe_rhs(0.3, &[0.7, -1.2, 0.0, 0.0]), [0.0; 4]);
    }

    #[test]
    fn ipm_hand_values() {
        assert_eq!(ipm_rhs(0.0, 1.0, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]), [0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let fp = [0.4, -0.3, 0.0, 0.0, -0.2, 0.0];
        assert!(ipm_rhs(0.25, 0.1, &fp).iter().all(|d| *d == 0.0));
        for br in Branch::ALL {
            let x = to_rescaled(0.1, br, &fp);
            assert_eq!(x, [0.4, -0.3, 0.0, 0.0, -0.2, 0.0]);
            assert!(ipm_rhs_rescaled(0.25, 0.1, br, &x).iter().all(|d| d.abs() < 1e-16));
        }
    }

    #[test]
    fn slow_slice_reduces_to_tfe() {
        for br in Branch::ALL {
            let sg = br.sigma();
            let (a, b, r, s) = (0.6, 0.1, -0.3 * sg, 0.2);
            // On the slow manifold u1 = -a/2 and q = -l^2 r / 2.
            let l = 0.1;
            let raw = [a, b, r, s, -a / 2.0, -l * l * r / 2.0];
            let d = ipm_rhs(0.25, l, &raw);
            let t = tfe_rhs(0.25, &[a, b, r, s]);
            assert!(close(&d[..4], &t, 1e-15));
            let x = to_rescaled(l, br, &raw);
            assert!(close(&x[..5], &[a, b, r, s, -a / 2.0], 1e-15));
            let dr = ipm_rhs_rescaled(0.25, l, br, &[a, b, r, s, -a / 2.0, 0.0]);
            assert!(close(&dr[..4], &t, 1e-15));
        }
    }

    #[test]
    fn rescaling_is_a_conjugacy() {
        let l = 0.1;
        let v = -0.25;
        for br in Branch::ALL {
            let sg = br.sigma();
            let raw = [0.37, -0.6, -0.11 * sg, 0.05, -0.21, 0.013 * sg];
            let x = to_rescaled(l, br, &raw);
            assert!(close(&from_rescaled(l, br, &x), &raw, 1e-15));
            let d = ipm_rhs(v, l, &raw);
            let [a, _, _, _, u1, _] = raw;
            let (da, du) = (d[0], d[4]);
            let chain = [
                d[0],
                d[1],
                d[2] - sg * (du * a + u1 * da + a * da),
                d[3] - (du * a + u1 * da + a * da),
                d[4],
                d[5] / l,
            ];
            assert!(close(&ipm_rhs_rescaled(v, l, br, &x), &chain, 1e-12));
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let v = 0.3;
        for br in Branch::ALL {
            let x4 = [0.5, 0.2, -0.1, 0.3];
            let fd = fd_jacobian(|y| tfe_rhs_branch(v, br, &[y[0], y[1], y[2], y[3]]).to_vec(), &x4, 1e-6);
            assert!((tfe_jacobian(v, br, &x4) - fd).amax() < 1e-8);
            let x6 = [0.5, 0.2, -0.1, 0.3, -0.4, 0.07];
            let fd = fd_jacobian(
                |y| ipm_rhs_rescaled(v, 0.2, br, &[y[0], y[1], y[2], y[3], y[4], y[5]]).to_vec(),
                &x6,
                1e-6,
            );
            assert!((ipm_rescaled_jacobian(v, 0.2, br, &x6) - fd).amax() < 1e-7);
        }
    }

    #[test]
    fn swap_conjugates_tfe() {
        let v = -0.2;
        let x = [0.3, 1.1, -0.4, 0.25];
        assert!(close(&tfe_rhs(v, &swap4(&x)), &swap4(&tfe_rhs(v, &x)), 1e-15));
        let y = [0.3, 1.1, -0.4, 0.25, 0.1, -0.03];
        assert!(close(&ipm_rhs(v, 0.2, &swap6(&y)), &swap6(&ipm_rhs(v, 0.2, &y)), 1e-14));
    }
}
