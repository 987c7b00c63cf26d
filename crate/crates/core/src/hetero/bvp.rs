//! Collocation boundary-value solver for IPM connecting orbits.
//!
//! Unknowns per mesh node are `(a, r1, s1, u1, q1, a0)`: the five core
//! variables of the rescaled system plus the unknown intermediate state
//! `a0`, carried as a constant component (`a0' = 0`) so that the Jacobian
//! stays banded. Intervals use compressed Hermite-Simpson (Lobatto IIIA,
//! fourth order). Each end is pinned to the unstable or stable subspace of
//! its fixed point by projection conditions, and `a(0) = a0/2` fixes the
//! translation.

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::error::WaveError;
use crate::linalg::{projector_above, projector_below, projector_rank, row_space, BandMatrix};
use crate::tw::systems::{ipm_core_b_rate, ipm_core_jacobian, ipm_core_rhs};
use crate::tw::{Branch, Side};

pub const NC: usize = 6;
type V6 = SVector<f64, NC>;
type M6 = SMatrix<f64, NC, NC>;

const BAND: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct BvpProblem {
    pub v: f64,
    pub l: f64,
    pub branch: Branch,
    pub half_width: f64,
    pub n_intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub xi: Vec<f64>,
    pub y: Vec<[f64; NC]>,
    pub iterations: usize,
    pub residual: f64,
}

/// Core fixed point `(a0, 0, 0, -a0/2, 0)` and its derivative in `a0`.
fn fixed_point(a0: f64) -> [f64; 5] {
    [a0, 0.0, 0.0, -a0 / 2.0, 0.0]
}
const DFIXED: [f64; 5] = [1.0, 0.0, 0.0, -0.5, 0.0];

struct EndCondition {
    rows: DMatrix<f64>,
    p: [f64; 5],
    /// Whether `p` moves with `a0`.
    moving: bool,
}

impl BvpProblem {
    pub fn side(&self) -> Side {
        if self.v < 0.0 {
            Side::FromMinus
        } else {
            Side::ToPlus
        }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n_intervals as f64
    }

    pub fn mesh(&self) -> Vec<f64> {
        let n = self.n_intervals;
        (0..=n).map(|k| -self.half_width + 2.0 * self.half_width * k as f64 / n as f64).collect()
    }

    fn f(&self, y: &V6) -> V6 {
        let d = ipm_core_rhs(self.v, self.l, self.branch, &[y[0], y[1], y[2], y[3], y[4]]);
        V6::new(d[0], d[1], d[2], d[3], d[4], 0.0)
    }

    fn jac(&self, y: &V6) -> M6 {
        let jc = ipm_core_jacobian(self.v, self.l, self.branch, &[y[0], y[1], y[2], y[3], y[4]]);
        let mut m = M6::zeros();
        for i in 0..5 {
            for j in 0..5 {
                m[(i, j)] = jc[i][j];
            }
        }
        m
    }

    fn core_jacobian_at(&self, p: &[f64; 5]) -> DMatrix<f64> {
        let jc = ipm_core_jacobian(self.v, self.l, self.branch, p);
        DMatrix::from_fn(5, 5, |i, j| jc[i][j])
    }

    /// Projection rows for both ends at the current `a0`.
    fn end_conditions(&self, a0: f64) -> Result<(EndCondition, EndCondition), WaveError> {
        let shift = 0.2 * self.v.abs();
        let (pl, pr, left_moving) = match self.side() {
            Side::FromMinus => (fixed_point(0.0), fixed_point(a0), false),
            Side::ToPlus => (fixed_point(a0), fixed_point(0.0), true),
        };
        let fail = |what: &str| WaveError::SubspaceDimension(format!("{what} projector failed (eigenvalue near the shift)"));
        let pu = projector_above(&self.core_jacobian_at(&pl), shift).ok_or_else(|| fail("unstable"))?;
        let ps = projector_below(&self.core_jacobian_at(&pr), shift).ok_or_else(|| fail("stable"))?;
        let (du, ds) = (projector_rank(&pu), projector_rank(&ps));
        if du + ds != 5 {
            return Err(WaveError::SubspaceDimension(format!("dim E^u(left) = {du}, dim E^s(right) = {ds}, need sum 5")));
        }
        let id = DMatrix::<f64>::identity(5, 5);
        let vl = row_space(&(&id - &pu), 1e-8);
        let vr = row_space(&(&id - &ps), 1e-8);
        if vl.nrows() != 5 - du || vr.nrows() != 5 - ds {
            return Err(WaveError::SubspaceDimension(format!(
                "projector ranks {du}/{ds} disagree with complement ranks {}/{}",
                5 - vl.nrows(),
                5 - vr.nrows()
            )));
        }
        Ok((
            EndCondition { rows: vl, p: pl, moving: left_moving },
            EndCondition { rows: vr, p: pr, moving: !left_moving },
        ))
    }

    fn unknowns(&self) -> usize {
        NC * (self.n_intervals + 1)
    }

    /// Residual and (optionally) banded Jacobian.
    fn assemble(&self, x: &[f64], want_jac: bool) -> Result<(Vec<f64>, Option<BandMatrix>), WaveError> {
        let n = self.n_intervals;
        let h = self.h();
        let node = |i: usize| V6::from_column_slice(&x[NC * i..NC * i + NC]);
        let a0 = x[NC * n + 5];
        let a0_left = x[5];
        let (left, right) = self.end_conditions(if self.side() == Side::FromMinus { a0 } else { a0_left })?;
        let nl = left.rows.nrows();
        let mid = n / 2;
        let total = self.unknowns();
        let mut res = vec![0.0; total];
        let mut jac = want_jac.then(|| BandMatrix::zeros(total, BAND, BAND));

        let end_rows = |cond: &EndCondition, node_idx: usize, row0: usize, res: &mut Vec<f64>, jac: &mut Option<BandMatrix>| {
            let y = node(node_idx);
            let a0_here = y[5];
            let p = if cond.moving { fixed_point(a0_here) } else { cond.p };
            for k in 0..cond.rows.nrows() {
                let mut s = 0.0;
                let mut dalpha = 0.0;
                for c in 0..5 {
                    s += cond.rows[(k, c)] * (y[c] - p[c]);
                    dalpha -= cond.rows[(k, c)] * DFIXED[c];
                }
                res[row0 + k] = s;
                if let Some(j) = jac.as_mut() {
                    for c in 0..5 {
                        j.add(row0 + k, NC * node_idx + c, cond.rows[(k, c)]);
                    }
                    if cond.moving {
                        j.add(row0 + k, NC * node_idx + 5, dalpha);
                    }
                }
            }
        };
        end_rows(&left, 0, 0, &mut res, &mut jac);
        let right_row0 = nl + NC * n + 1;
        end_rows(&right, n, right_row0, &mut res, &mut jac);

        let id = M6::identity();
        let mut yi = node(0);
        let mut fi = self.f(&yi);
        let mut ji = if want_jac { self.jac(&yi) } else { M6::zeros() };
        for i in 0..n {
            let yn = node(i + 1);
            let fnx = self.f(&yn);
            let jn = if want_jac { self.jac(&yn) } else { M6::zeros() };
            let ym = (yi + yn) * 0.5 + (fi - fnx) * (h / 8.0);
            let fm = self.f(&ym);
            let r = yn - yi - (fi + fm * 4.0 + fnx) * (h / 6.0);
            let row0 = nl + NC * i + usize::from(i >= mid);
            for k in 0..NC {
                res[row0 + k] = r[k];
            }
            if let Some(j) = jac.as_mut() {
                let jm = self.jac(&ym);
                let a = jm * (id * 0.5 + ji * (h / 8.0));
                let b = jm * (id * 0.5 - jn * (h / 8.0));
                let d0 = -id - (ji + a * 4.0) * (h / 6.0);
                let d1 = id - (jn + b * 4.0) * (h / 6.0);
                for rr in 0..NC {
                    for cc in 0..NC {
                        let (u, w) = (d0[(rr, cc)], d1[(rr, cc)]);
                        if u != 0.0 {
                            j.add(row0 + rr, NC * i + cc, u);
                        }
                        if w != 0.0 {
                            j.add(row0 + rr, NC * (i + 1) + cc, w);
                        }
                    }
                }
            }
            yi = yn;
            fi = fnx;
            ji = jn;
        }

        let prow = nl + NC * mid;
        let ym = node(mid);
        res[prow] = ym[0] - ym[5] / 2.0;
        if let Some(j) = jac.as_mut() {
            j.add(prow, NC * mid, 1.0);
            j.add(prow, NC * mid + 5, -0.5);
        }
        Ok((res, jac))
    }

    /// Damped Newton from `guess` (nodal values on [`Self::mesh`]).
    pub fn solve(&self, guess: &[[f64; NC]], settings: NewtonSettings) -> Result<BvpSolution, WaveError> {
        assert!(self.n_intervals % 2 == 0, "mesh needs a node at xi = 0");
        assert_eq!(guess.len(), self.n_intervals + 1);
        let mut x: Vec<f64> = guess.iter().flat_map(|g| g.iter().copied()).collect();
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (mut res, _) = self.assemble(&x, false)?;
        let mut rnorm = norm(&res);
        let mut best = rnorm;
        for it in 1..=settings.max_iter {
            let (_, jac) = self.assemble(&x, true)?;
            let lu = jac.unwrap().factor().ok_or(WaveError::NewtonFailed { iterations: it, residual: rnorm })?;
            let neg: Vec<f64> = res.iter().map(|r| -r).collect();
            let dx = lu.solve(&neg);
            if dx.iter().any(|d| !d.is_finite()) {
                return Err(WaveError::NewtonFailed { iterations: it, residual: best });
            }
            let step_norm = norm(&dx);
            let mut lambda = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + lambda * di).collect();
                if let Ok((r, _)) = self.assemble(&trial, false) {
                    let rn = norm(&r);
                    if rn.is_finite() && (rn <= (1.0 - 1e-4 * lambda) * rnorm || rn <= settings.tol) {
                        break Some((trial, r, rn));
                    }
                }
                lambda *= 0.5;
                if lambda < 1.0 / 256.0 {
                    break None;
                }
            };
            let Some((trial, r, rn)) = accepted else {
                return Err(WaveError::NewtonFailed { iterations: it, residual: best });
            };
            x = trial;
            res = r;
            rnorm = rn;
            best = best.min(rn);
            if rnorm <= settings.tol || (lambda == 1.0 && step_norm <= settings.tol * 1e-2) {
                let y = x.chunks(NC).map(|c| c.try_into().unwrap()).collect();
                return Ok(BvpSolution { xi: self.mesh(), y, iterations: it, residual: rnorm });
            }
        }
        Err(WaveError::NewtonFailed { iterations: settings.max_iter, residual: best })
    }
}

impl BvpSolution {
    /// `b` along the mesh by the quadrature matching the collocation rule,
    /// anchored at the far-field end.
    pub fn recover_b(&self, p: &BvpProblem) -> Vec<f64> {
        let n = self.y.len() - 1;
        let h = p.h();
        let core = |y: &[f64; NC]| [y[0], y[1], y[2], y[3], y[4]];
        let inc: Vec<f64> = (0..n)
            .map(|i| {
                let (y0, y1) = (V6::from_column_slice(&self.y[i]), V6::from_column_slice(&self.y[i + 1]));
                let ym = (y0 + y1) * 0.5 + (p.f(&y0) - p.f(&y1)) * (h / 8.0);
                let ym: [f64; NC] = ym.into();
                h / 6.0 * (ipm_core_b_rate(&core(&self.y[i])) + 4.0 * ipm_core_b_rate(&core(&ym)) + ipm_core_b_rate(&core(&self.y[i + 1])))
            })
            .collect();
        let mut b = vec![0.0; n + 1];
        match p.side() {
            Side::FromMinus => {
                b[0] = -2.0;
                for i in 0..n {
                    b[i + 1] = b[i] + inc[i];
                }
            }
            Side::ToPlus => {
                b[n] = 2.0;
                for i in (0..n).rev() {
                    b[i] = b[i + 1] - inc[i];
                }
            }
        }
        b
    }
}

/// Linear interpolation of nodal values onto a new mesh; values outside the
/// source range are held constant.
pub fn interpolate(src_xi: &[f64], src: &[[f64; NC]], dst_xi: &[f64]) -> Vec<[f64; NC]> {
    let n = src_xi.len();
    dst_xi
        .iter()
        .map(|&x| {
            if x <= src_xi[0] {
                return src[0];
            }
            if x >= src_xi[n - 1] {
                return src[n - 1];
            }
            let k = src_xi.partition_point(|&s| s <= x).clamp(1, n - 1);
            let t = (x - src_xi[k - 1]) / (src_xi[k] - src_xi[k - 1]);
            let mut out = [0.0; NC];
            for c in 0..NC {
                out[c] = (1.0 - t) * src[k - 1][c] + t * src[k][c];
            }
            out
        })
        .collect()
}
