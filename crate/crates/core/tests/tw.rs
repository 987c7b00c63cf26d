use twotubes::model::Model;
use twotubes::ode::{integrate, integrate_to, Tolerances};
use twotubes::tw::systems::{ipm_rhs, tfe_rhs};
use twotubes::tw::{
    conserved_quantity, conserved_value, fixed_point_eigensystem, reflect4, swap4, swap6, tfe_explicit_profile, Branch,
    Manifold,
};

fn max_drift(manifold: Manifold, v: f64, y0: [f64; 4], span: f64) -> f64 {
    let p = integrate_to(|y: &[f64; 4]| tfe_rhs(v, y), y0, 0.0, span, 0.0, Tolerances::TIGHT).unwrap();
    let c0 = conserved_value(manifold, v, y0[0], y0[2], y0[3]);
    p.y.iter().map(|y| (conserved_value(manifold, v, y[0], y[2], y[3]) - c0).abs()).fold(0.0, f64::max)
}

#[test]
fn first_integrals_are_conserved() {
    // Integrate toward the far-field state (forward for v > 0), where the
    // invariant planes are transversally attracting.
    for &v in &[0.1, 0.25, 0.4, -0.1, -0.25, -0.4] {
        let span = if v > 0.0 { 100.0 } else { -100.0 };
        for &scale in &[0.5, 1.0, 1.5] {
            let r0 = scale * v * v;
            // I1: s = 2r, r > 0, started where r is largest.
            let d = max_drift(Manifold::I1, v, [-2.0 * v, 0.3, r0, 2.0 * r0], span);
            assert!(d < 1e-8, "I1 v={v} r0={r0}: {d:e}");
            // I4: s = -2r, r < 0.
            let d = max_drift(Manifold::I4, v, [2.0 * v, -0.3, -r0, 2.0 * r0], span);
            assert!(d < 1e-8, "I4 v={v} r0={r0}: {d:e}");
        }
    }
}

#[test]
fn zero_speed_invariant() {
    for &a in &[-0.8, -0.1, 0.3, 1.1] {
        let y0 = [a, 0.5, 0.2 * a, -a * a / 2.0];
        let mut worst = 0.0f64;
        integrate(|y: &[f64; 4]| tfe_rhs(0.0, y), y0, 0.0, 20.0, 0.0, Tolerances::TIGHT, |_, y: &[f64; 4]| {
            let c = conserved_quantity(Manifold::V0, 0.0, y[0], y[2], y[3], 1e-12).unwrap();
            worst = worst.max(c.abs());
            y.iter().any(|x| x.abs() > 1e2)
        })
        .unwrap();
        assert!(worst < 1e-8, "a={a}: {worst:e}");
    }
    assert!(conserved_quantity(Manifold::V0, 0.1, 0.0, 0.0, 0.0, 1e-12).is_err());
}

#[test]
fn closed_form_lies_on_its_manifold() {
    for &v in &[0.25, -0.25] {
        for (branch, m, value) in [(Branch::PositiveR, Manifold::I1, v * v), (Branch::NegativeR, Manifold::I4, -v * v)] {
            for k in -40..=40 {
                let [a, _, r, s] = tfe_explicit_profile(v, branch, k as f64).unwrap();
                if r.abs() < 1e-300 {
                    continue;
                }
                let c = conserved_quantity(m, v, a, r, s, 1e-12).unwrap();
                assert!((c - value).abs() < 1e-12, "{m:?} v={v} xi={k}: {c}");
            }
        }
    }
}

/// Membership of `(r, s)` in the closed regions bounded by the invariant
/// lines, up to `tol`.
fn region(k: usize, r: f64, s: f64, tol: f64) -> bool {
    match k {
        1 => s >= -2.0 * r - tol && s >= 2.0 * r - tol,
        2 => s <= 2.0 * r + tol && s >= -r - tol,
        3 => s <= -r + tol && s <= r + tol,
        4 => s >= r - tol && s <= -2.0 * r + tol,
        _ => unreachable!(),
    }
}

#[test]
fn regions_are_invariant() {
    let starts = [(1, 0.1, 0.5), (1, -0.1, 0.4), (2, 0.2, 0.1), (2, 0.3, -0.2), (3, 0.1, -0.3), (3, -0.2, -0.5), (4, -0.3, 0.1), (4, -0.2, 0.3)];
    for &v in &[0.25, -0.25, 0.0] {
        for &(k, r, s) in &starts {
            assert!(region(k, r, s, 0.0));
            for &a in &[-0.5, 0.2] {
                let mut ok = true;
                let _ = integrate(
                    |y: &[f64; 4]| tfe_rhs(v, y),
                    [a, 0.0, r, s],
                    0.0,
                    10.0,
                    0.0,
                    Tolerances::TIGHT,
                    |_, y: &[f64; 4]| {
                        let scale = 1.0 + y[2].abs() + y[3].abs();
                        ok &= region(k, y[2], y[3], 1e-9 * scale);
                        !ok || scale > 1e3
                    },
                );
                assert!(ok, "region {k} left from (a={a}, r={r}, s={s}) at v={v}");
            }
        }
    }
}

#[test]
fn reflection_conjugates_trajectories() {
    let v = 0.3;
    let y0 = [0.2, 0.4, -0.1, 0.05];
    let fwd = integrate_to(|y: &[f64; 4]| tfe_rhs(v, y), y0, 0.0, 3.0, 0.5, Tolerances::TIGHT).unwrap();
    let back = integrate_to(|y: &[f64; 4]| tfe_rhs(-v, y), reflect4(&y0), 0.0, -3.0, 0.5, Tolerances::TIGHT).unwrap();
    for (p, q) in fwd.y.iter().zip(&back.y) {
        let rq = reflect4(q);
        assert!((0..4).all(|k| (p[k] - rq[k]).abs() < 1e-10), "{p:?} {rq:?}");
    }
}

#[test]
fn swap_conjugates_both_systems() {
    let pts = [[0.3, -0.2, 0.1, -0.4], [-1.1, 0.7, -0.3, 0.2], [0.5, 1.5, 0.0, 0.9]];
    for x in &pts {
        for &v in &[-0.3, 0.2] {
            let lhs = tfe_rhs(v, &swap4(x));
            let rhs = swap4(&tfe_rhs(v, x));
            assert!((0..4).all(|k| (lhs[k] - rhs[k]).abs() < 1e-12));
            let x6 = [x[0], x[1], x[2], x[3], -0.4 * x[0], 0.01 * x[2]];
            let lhs = ipm_rhs(v, 0.3, &swap6(&x6));
            let rhs = swap6(&ipm_rhs(v, 0.3, &x6));
            assert!((0..6).all(|k| (lhs[k] - rhs[k]).abs() < 1e-12));
        }
    }
}

#[test]
fn zero_speed_orbits_do_not_return() {
    // Divergence test: leave a small neighbourhood of (0, b0, 0, 0) and
    // never come back within the horizon.
    let d = 1e-3;
    let mut n_left = 0;
    for k in 0..12 {
        let th = k as f64 * std::f64::consts::PI / 6.0;
        for &ph in &[0.3f64, 0.8, 1.2] {
            let p0 = [d * th.cos() * ph.sin(), 0.0, d * th.sin() * ph.sin(), d * ph.cos()];
            let mut left = false;
            let mut returned = false;
            integrate(|y: &[f64; 4]| tfe_rhs(0.0, y), p0, 0.0, 400.0, 0.0, Tolerances::DEFAULT, |_, y: &[f64; 4]| {
                let dist = (y[0] * y[0] + y[2] * y[2] + y[3] * y[3]).sqrt();
                left |= dist > 10.0 * d;
                returned |= left && dist < d;
                dist > 10.0
            })
            .unwrap();
            assert!(!returned, "returned from th={th} ph={ph}");
            n_left += left as usize;
        }
    }
    assert!(n_left >= 18, "only {n_left} orbits left the neighbourhood");
}

#[test]
fn eigenstructure_at_both_fixed_points() {
    for &v in &[0.1, 0.25, 0.4] {
        let a = fixed_point_eigensystem(Model::Tfe, v, 0.0, Branch::PositiveR, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        let mut re: Vec<f64> = a.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let want = [-v, -v, 0.0, 0.0];
        assert!(re.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-8), "{re:?}");
        assert_eq!((a.n_stable, a.n_center), (2, 2));

        let b = fixed_point_eigensystem(Model::Tfe, v, 0.0, Branch::NegativeR, &[4.0 * v, -8.0 * v + 2.0, 0.0, 0.0]).unwrap();
        let mut re: Vec<f64> = b.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let want = [-5.0 * v, 0.0, 0.0, v];
        assert!(re.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-8), "{re:?}");
        assert!(b.pair_residual() < 1e-10);
    }
}
