//! Small dense and banded linear algebra: tridiagonal and banded LU solves,
//! spectral projectors via the matrix sign function, and eigen-decomposition
//! of small real matrices.

use nalgebra::{Complex, DMatrix, DVector};

/// Solve a tridiagonal system. `sub[i]` multiplies `x[i-1]` in row `i`
/// (`sub[0]` unused), `sup[i]` multiplies `x[i+1]` (`sup[n-1]` unused).
///
/// No pivoting; callers guarantee diagonal dominance.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    assert!(beta != 0.0, "singular tridiagonal system");
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        assert!(beta != 0.0, "singular tridiagonal system");
        c[i] = sup[i] / beta;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Square banded matrix with `kl` sub- and `ku` superdiagonals, stored with
/// room for the fill-in created by partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, w, data: vec![0.0; n * w] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl, "({i},{j}) outside band");
        i * self.w + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Add `v` to entry `(i, j)`. Panics if the entry lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization with partial pivoting. Returns `None` for an exactly
    /// singular pivot column.
    pub fn factor(mut self) -> Option<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            piv[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set(k, j, b);
                    self.set(p, j, a);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let m = self.get(i, k) / pivot;
                if m == 0.0 {
                    continue;
                }
                self.set(i, k, m);
                for j in k + 1..=jmax {
                    let u = self.get(k, j);
                    if u != 0.0 {
                        let t = self.get(i, j) - m * u;
                        self.set(i, j, t);
                    }
                }
            }
        }
        Some(BandLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.m;
        let n = a.n;
        let mut b = rhs.to_vec();
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in k + 1..=(k + a.kl).min(n - 1) {
                b[i] -= a.get(i, k) * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + a.ku + a.kl).min(n - 1) {
                s -= a.get(i, j) * b[j];
            }
            b[i] = s / a.get(i, i);
        }
        b
    }
}

/// Matrix sign function by scaled Newton iteration. `None` when an iterate
/// is singular (an eigenvalue on the imaginary axis).
pub fn matrix_sign(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut s = m.clone();
    for _ in 0..100 {
        let inv = s.clone().try_inverse()?;
        let det = s.determinant().abs();
        let mu = if det > 0.0 && det.is_finite() { det.powf(-1.0 / n as f64) } else { 1.0 };
        let next = (&s * mu + inv / mu) * 0.5;
        let diff = (&next - &s).norm();
        let scale = next.norm();
        s = next;
        if diff <= 1e-14 * scale {
            break;
        }
    }
    if s.iter().all(|x| x.is_finite()) {
        Some(s)
    } else {
        None
    }
}

/// Spectral projector onto the invariant subspace of eigenvalues with real
/// part above `shift`.
pub fn projector_above(m: &DMatrix<f64>, shift: f64) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let s = matrix_sign(&(m - &id * shift))?;
    Some((id + s) * 0.5)
}

/// Spectral projector onto the invariant subspace of eigenvalues with real
/// part below `-shift`.
pub fn projector_below(m: &DMatrix<f64>, shift: f64) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let s = matrix_sign(&(m + &id * shift))?;
    Some((id - s) * 0.5)
}

/// Rank of a projector (its trace, rounded).
pub fn projector_rank(p: &DMatrix<f64>) -> usize {
    p.trace().round().max(0.0) as usize
}

/// Orthonormal rows spanning the row space of `m`, using singular values
/// above `tol` relative to the largest.
pub fn row_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol * smax.max(1e-300)).collect();
    let mut out = DMatrix::zeros(keep.len(), m.ncols());
    for (r, &i) in keep.iter().enumerate() {
        out.set_row(r, &vt.row(i));
    }
    out
}

/// Orthonormal basis of the numerical null space of `m`: right singular
/// vectors whose singular values are at most `tol` times the largest.
/// At least `min_dim` vectors are returned.
pub fn null_space(m: &DMatrix<f64>, tol: f64, min_dim: usize) -> Vec<DVector<f64>> {
    let n = m.ncols();
    // Pad to square so that SVD returns a full V.
    let mut sq = DMatrix::zeros(n.max(m.nrows()), n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.max().max(1.0);
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap());
    idx.iter()
        .enumerate()
        .filter(|&(rank, &i)| rank < min_dim || sv[i] <= tol * smax)
        .map(|(_, &i)| vt.row(i).transpose())
        .collect()
}

/// Unit length, first nonzero component positive.
pub fn normalize_sign(v: &mut DVector<f64>) {
    let norm = v.norm();
    if norm > 0.0 {
        *v /= norm;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            *v *= -1.0;
        }
    }
}

/// Eigenvalues of a small real matrix, with unit eigenvectors for the real
/// ones. Repeated real eigenvalues get a basis of their eigenspace.
pub fn eigen(m: &DMatrix<f64>) -> (Vec<Complex<f64>>, Vec<Option<DVector<f64>>>) {
    let n = m.nrows();
    let mut vals: Vec<Complex<f64>> = m.clone().complex_eigenvalues().iter().copied().collect();
    vals.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    let scale = m.norm().max(1.0);
    let cluster_tol = 1e-7 * scale;
    let mut vecs: Vec<Option<DVector<f64>>> = vec![None; n];
    let mut i = 0;
    while i < n {
        if vals[i].im.abs() > cluster_tol {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < n && vals[j].im.abs() <= cluster_tol && (vals[j].re - vals[i].re).abs() <= cluster_tol {
            j += 1;
        }
        let mult = j - i;
        let lambda = vals[i..j].iter().map(|c| c.re).sum::<f64>() / mult as f64;
        for v in &mut vals[i..j] {
            *v = Complex::new(lambda, 0.0);
        }
        let shifted = m - DMatrix::<f64>::identity(n, n) * lambda;
        let basis = null_space(&shifted, 1e-9, 1);
        for (k, slot) in (i..j).enumerate() {
            if let Some(b) = basis.get(k) {
                let mut b = b.clone();
                normalize_sign(&mut b);
                vecs[slot] = Some(b);
            }
        }
        i = j;
    }
    (vals, vecs)
}

/// Central finite-difference Jacobian, used by tests and as a fallback.
pub fn fd_jacobian<F>(f: F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let step = h * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let fp = f(&xp);
        xp[j] = x[j] - step;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 7;
        let sub: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.2 + 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += sub[i] * x[i - 1];
            }
            if i + 1 < n {
                r += sup[i] * x[i + 1];
            }
            assert!((r - rhs[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_lu_needs_pivoting() {
        // Zero on the diagonal forces row exchanges.
        let n = 9;
        let (kl, ku) = (2, 1);
        let mut b = BandMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v = if i == j { 0.0 } else { 1.0 + ((3 * i + 7 * j) % 5) as f64 };
                b.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let x = b.clone().factor().unwrap().solve(&rhs);
        let expect = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - expect[i]).abs() < 1e-10, "{i}: {} vs {}", x[i], expect[i]);
        }
        let back = b.mul_vec(&x);
        for i in 0..n {
            assert!((back[i] - rhs[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn projectors_split_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, -3.0, 1.0, 0.0, 0.0, 0.0]);
        let pu = projector_above(&m, 0.1).unwrap();
        let ps = projector_below(&m, 0.1).unwrap();
        assert_eq!(projector_rank(&pu), 1);
        assert_eq!(projector_rank(&ps), 1);
        assert!((&pu * &pu - &pu).norm() < 1e-12);
        // The unstable direction is e1.
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!((&pu * &e1 - &e1).norm() < 1e-12);
        assert!((&pu * &ps).norm() < 1e-12);
    }

    #[test]
    fn eigen_repeated_real() {
        let m = DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let (vals, vecs) = eigen(&m);
        assert!((vals[0].re + 1.0).abs() < 1e-12 && (vals[1].re + 1.0).abs() < 1e-12);
        assert!((vals[2].re - 3.0).abs() < 1e-12);
        for (l, v) in vals.iter().zip(&vecs) {
            let v = v.as_ref().unwrap();
            assert!((&m * v - v * l.re).norm() < 1e-10);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        let span = DMatrix::from_columns(&[vecs[0].clone().unwrap(), vecs[1].clone().unwrap()]);
        assert_eq!(span.rank(1e-8), 2);
    }
}
