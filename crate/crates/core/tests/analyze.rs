use twotubes::analyze::{
    detect_plateaus, estimate_speeds, fit_line, front_positions, intermediate_plateau, terrace_report, AnalysisOptions,
    TheoryRef, FRONT_EPS,
};
use twotubes::model::{make_initial_data, Grid1D, InitialDataSpec, ModelParams, RunConfig, RunControl, TubesField};
use twotubes::pde::{simulate, SeriesRow};
use twotubes::Exec;

const RAMP: f64 = 4.0;

/// Linear ramp from `lo` to `hi` centered at `y0`.
fn ramp(y: f64, y0: f64, lo: f64, hi: f64) -> f64 {
    let s = ((y - y0) / RAMP + 0.5).clamp(0.0, 1.0);
    lo + s * (hi - lo)
}

/// Far field, one intermediate state, far field; fronts at `v1 t`, `v2 t`.
fn glued(g: Grid1D, t: f64, mid: [f64; 2]) -> TubesField {
    let (v1, v2) = (-0.25, 0.25);
    let (c1, c2) = g
        .centers()
        .iter()
        .map(|&y| {
            if y < 0.0 {
                (ramp(y, v1 * t, -1.0, mid[0]), ramp(y, v1 * t, -1.0, mid[1]))
            } else {
                (ramp(y, v2 * t, mid[0], 1.0), ramp(y, v2 * t, mid[1], 1.0))
            }
        })
        .unzip();
    TubesField::new(g, c1, c2)
}

fn grid() -> Grid1D {
    Grid1D::new(-150.0, 150.0, 3000).unwrap()
}

fn synthetic_run(mid: [f64; 2]) -> (Vec<(f64, TubesField)>, Vec<SeriesRow>) {
    let g = grid();
    let times: Vec<f64> = (0..=80).map(|k| 80.0 + 5.0 * k as f64).collect();
    let series = times.iter().map(|&t| SeriesRow::measure(t, &glued(g, t, mid))).collect();
    let snaps = times.iter().step_by(20).map(|&t| (t, glued(g, t, mid))).collect();
    (snaps, series)
}

#[test]
fn glued_terrace_is_recovered() {
    let (snaps, series) = synthetic_run([0.5, -0.5]);
    let rep = terrace_report(&snaps, &series, &TheoryRef::tfe(), &AnalysisOptions::default(), Exec::Sequential).unwrap();
    let [c1, c2] = rep.intermediate.unwrap();
    assert!((c1 - 0.5).abs() < 1e-9 && (c2 + 0.5).abs() < 1e-9, "{c1} {c2}");
    assert!((rep.speeds.left.slope + 0.25).abs() < 1e-6);
    assert!((rep.speeds.right.slope - 0.25).abs() < 1e-6);
    assert!((rep.speeds.width.slope - 0.5).abs() < 1e-6);
    assert!(rep.pass && rep.terrace_detected);
    for s in &series {
        assert!((s.plateau_c1 - 0.5).abs() < 1e-9 && (s.plateau_c2 + 0.5).abs() < 1e-9);
    }
}

#[test]
fn shifting_by_whole_cells_shifts_everything() {
    let g = grid();
    let h = g.h();
    let f = glued(g, 200.0, [0.5, -0.5]);
    let p0 = detect_plateaus(&f, 2e-3, 10.0);
    let (l0, r0) = front_positions(&f, FRONT_EPS).unwrap();
    for k in [1usize, 7, 40] {
        let shift = |c: &[f64], pad: f64| {
            let mut out = vec![pad; k];
            out.extend_from_slice(&c[..c.len() - k]);
            out
        };
        let s = TubesField::new(g, shift(&f.c1, -1.0), shift(&f.c2, -1.0));
        let p = detect_plateaus(&s, 2e-3, 10.0);
        assert_eq!(p.len(), p0.len());
        let dy = k as f64 * h;
        for (a, b) in p.iter().zip(&p0) {
            assert!((a.c1 - b.c1).abs() < 1e-12 && (a.c2 - b.c2).abs() < 1e-12);
            // The left far-field plateau is clipped by the boundary.
            if b.y_start > g.y_min {
                assert!((a.y_start - b.y_start - dy).abs() < 1e-9);
            }
            if b.y_end < g.y_max {
                assert!((a.y_end - b.y_end - dy).abs() < 1e-9);
            }
        }
        let (l, r) = front_positions(&s, FRONT_EPS).unwrap();
        assert!((l - l0 - dy).abs() < 1e-9 && (r - r0 - dy).abs() < 1e-9);
    }
}

#[test]
fn swapping_tubes_swaps_the_plateau() {
    let (snaps, series) = synthetic_run([0.5, -0.5]);
    let sw: Vec<(f64, TubesField)> = snaps.iter().map(|(t, f)| (*t, f.swapped())).collect();
    let sw_series: Vec<SeriesRow> = sw.iter().map(|(t, f)| SeriesRow::measure(*t, f)).collect();
    let a = terrace_report(&snaps, &series, &TheoryRef::tfe(), &AnalysisOptions::default(), Exec::Sequential).unwrap();
    let b = terrace_report(&sw, &series, &TheoryRef::tfe(), &AnalysisOptions::default(), Exec::Sequential).unwrap();
    let [p, q] = [a.intermediate.unwrap(), b.intermediate.unwrap()];
    assert_eq!([p[1], p[0]], q);
    assert!(b.pass);
    for (s, w) in snaps.iter().zip(&sw_series) {
        let m = SeriesRow::measure(s.0, &s.1);
        assert_eq!((m.front_left, m.front_right), (w.front_left, w.front_right));
        assert_eq!((m.plateau_c1, m.plateau_c2), (w.plateau_c2, w.plateau_c1));
    }
}

#[test]
fn symmetric_data_has_no_terrace() {
    let g = grid();
    let times: Vec<f64> = (0..=40).map(|k| 10.0 * k as f64 + 10.0).collect();
    // Equal tubes spreading diffusively: no intermediate flat state.
    let field = |t: f64| {
        let c: Vec<f64> = g.centers().iter().map(|&y| (y / (2.0 * t.sqrt())).tanh()).collect();
        TubesField::new(g, c.clone(), c)
    };
    let snaps: Vec<(f64, TubesField)> = times.iter().map(|&t| (t, field(t))).collect();
    let series: Vec<SeriesRow> = snaps.iter().map(|(t, f)| SeriesRow::measure(*t, f)).collect();
    let rep = terrace_report(&snaps, &series, &TheoryRef::tfe(), &AnalysisOptions::default(), Exec::Sequential).unwrap();
    assert!(!rep.terrace_detected && !rep.pass);
    assert!(rep.per_time.iter().all(|p| p.intermediate.is_none()));
}

#[test]
fn early_step_shows_only_far_fields() {
    let g = Grid1D::new(-100.0, 100.0, 1000).unwrap();
    let initial = InitialDataSpec::tanh_step(0.0, 1.0).with_perturbation(0.1, 3.0, 1);
    let cfg = RunConfig {
        params: ModelParams::tfe(),
        grid: g,
        initial,
        control: RunControl { t_max: 5.0, cfl: 0.5, output_every: 5.0, output_dir: "unused".into() },
    };
    assert!(make_initial_data(&g, &initial).is_ok());
    let tr = simulate(&cfg, Exec::Sequential).unwrap();
    for s in &tr.snapshots {
        let p = detect_plateaus(&s.field, 2e-3, 10.0);
        assert!(!p.is_empty());
        assert!(p.iter().all(|p| p.distance(-1.0, -1.0) < 1e-3 || p.distance(1.0, 1.0) < 1e-3), "{p:?}");
        assert!(intermediate_plateau(&p, 0.1).is_none());
    }
}

#[test]
fn noisy_front_speed_regression() {
    let rows: Vec<SeriesRow> = (0..=400)
        .map(|k| {
            let t = k as f64;
            let noise = 1e-3 * (7.3 * t).sin() + 5e-4 * (1.9 * t + 0.4).cos();
            let (lo, hi) = (-0.25 * t + 3.0 + noise, 0.25 * t - 3.0 - noise);
            SeriesRow { t, h_width: hi - lo, front_left: lo, front_right: hi, plateau_c1: 0.5, plateau_c2: -0.5 }
        })
        .collect();
    let fit = estimate_speeds(&rows, 0.2).unwrap();
    assert!((fit.left.slope + 0.25).abs() < 1e-5, "{:?}", fit.left);
    assert!((fit.right.slope - 0.25).abs() < 1e-5);
    assert!(fit.left.stderr < 1e-5);
    let exact = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
    assert!((exact.slope - 2.0).abs() < 1e-14 && (exact.intercept - 1.0).abs() < 1e-14);
}
