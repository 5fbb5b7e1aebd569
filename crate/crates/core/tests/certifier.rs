use std::f64::consts::PI;

use proptest::prelude::*;
use tubewave::certifier::{
    a_priori_bound, a_priori_bound_direct, refined_bound, constants_estimated, constants_exact,
    growth_factor, measure_error, CertificateReport, Certifier, ConstantSet, DeviationHistory,
    LhsNorms, Provenance, TrajectoryEnd,
};
use tubewave::pipeline::{CoupledModel, CouplingOptions};
use tubewave::signals::{InletDrive, Signal};
use tubewave::wave3d::{WaveDiscretization, WaveGrid};
use tubewave::webster1d::WebsterDiscretization;
use tubewave::{SolverError, TubeGeometry, TubeSpec};

fn geometry(spec: TubeSpec) -> TubeGeometry {
    TubeGeometry::build(spec, 64).unwrap()
}

#[test]
fn omega_constant_of_a_straight_air_column() {
    let area = PI * 0.01;
    let geom = geometry(TubeSpec::straight_cylinder(0.1).with_medium(343.0, 1.2, 0.0));
    let c = constants_exact(&geom);
    let expected = 2.0 * 343.0f64.powi(2) / area + 1.0;
    assert!((c.c_omega.powi(2) - expected).abs() < 1e-10 * expected);
    let c1 = 2.0 / (1.2 * area / 343.0f64.powi(2));
    assert!((c.c_1 - c1).abs() < 1e-10 * c1);
    assert!((c.c_2 - c.c_1 - 1.0).abs() < 1e-9);
}

#[test]
fn metric_constant_on_straight_tube_has_closed_form() {
    let r: f64 = 0.13;
    let geom = geometry(TubeSpec::straight_cylinder(r));
    let c = constants_exact(&geom);
    let integral = 2.0 * PI * (r.powi(4) / 4.0 + 2.0 * r.powi(3) / 3.0 + r * r / 2.0);
    let expected = integral.sqrt() / (PI * r * r);
    assert!((c.c_h1 - expected).abs() < 1e-12 * expected, "{} vs {expected}", c.c_h1);
    assert_eq!(c.curvature_sup, 0.0);
    assert_eq!(c.c_3, 0.0);
}

#[test]
fn curved_constants_exceed_their_straight_limits() {
    let bent = constants_exact(&geometry(TubeSpec::curved_bump(0.12, 4.0)));
    let straight = constants_exact(&geometry(TubeSpec::straight_cylinder(0.12)));
    assert!(bent.c_h1 > straight.c_h1);
    assert!(bent.average_norm_bound > straight.average_norm_bound);
    // η_max = 0.48 and A = π·0.0144; W < 1 so the wall factor is inactive.
    let c3 = 0.48 / (PI * 0.0144);
    assert!((bent.c_3 - c3).abs() < 1e-9 * c3, "{}", bent.c_3);
    let e_sup = 2.0 * 0.12 + 0.75 * 4.0 * 0.0144;
    assert!((bent.error_ratio_sup - e_sup).abs() < 1e-9);
    assert!((bent.curvature_pair_sup - 4.0 * PI).abs() < 1e-6);
}

#[test]
fn growth_factor_formula() {
    let k = growth_factor(1.2, 5.0);
    assert!((k - 5.0 * 2.2f64.sqrt() * 6.0).abs() < 1e-14);
}

#[test]
fn a_priori_bound_arithmetic() {
    assert_eq!(a_priori_bound(3.0, 1.2, 2.0, 0.0), 0.0);
    let b = a_priori_bound(1.0, 1.0, 0.0, 1.0);
    assert!((b - 4.0 * 2f64.powf(0.75)).abs() < 1e-14);
    let d = a_priori_bound_direct(2.0, 1.0, 3.0, 0.5);
    assert!((d - 30f64.sqrt() * 2f64.powf(0.25) * 2.0 * 0.5).abs() < 1e-13);
}

proptest! {
    #[test]
    fn a_priori_bound_grows_with_horizon(
        c in 1.0f64..1e3,
        rho in 0.1f64..10.0,
        t in 0.0f64..10.0,
        dt in 0.0f64..5.0,
        load in 0.0f64..10.0,
        extra in 0.0f64..1.0,
    ) {
        // The accumulated load norm can only grow with the horizon.
        let later = (load * load + extra * extra).sqrt();
        prop_assert!(a_priori_bound(c, rho, t + dt, later) >= a_priori_bound(c, rho, t, load));
    }
}

#[test]
fn measured_error_of_identical_and_shifted_trajectories() {
    let geom = geometry(TubeSpec::straight_cylinder(0.1));
    let web = WebsterDiscretization::assemble(&geom, 256).unwrap();
    let n = web.n_nodes();
    let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let a: Vec<f64> = s.iter().map(|x| x * x - 1.0).collect();
    let y = vec![0.3; 40];
    let same = TrajectoryEnd { value: &a, rate: &a, output: &y };
    let lhs = measure_error(&web, same, same, 0.01).unwrap();
    assert_eq!(lhs.total(), 0.0);

    let eps = 1e-3;
    let b: Vec<f64> = a.iter().zip(&s).map(|(v, x)| v + eps * (PI * x).sin()).collect();
    let shifted = TrajectoryEnd { value: &b, rate: &a, output: &y };
    let lhs = measure_error(&web, shifted, same, 0.01).unwrap();
    let exact = eps * ((1.0 + PI * PI) / 2.0).sqrt();
    assert!((lhs.displacement_h1 - exact).abs() < 1e-4 * exact);
    assert_eq!(lhs.rate_l2, 0.0);
    assert_eq!(lhs.output_gap, 0.0);

    let short = TrajectoryEnd { value: &a[1..], rate: &a, output: &y };
    assert!(matches!(
        measure_error(&web, short, same, 0.01),
        Err(SolverError::GridMismatch(_))
    ));
}

#[test]
fn estimated_constants_are_grid_stable_on_straight_tube() {
    let geom = geometry(TubeSpec::straight_cylinder(0.1).with_medium(1.0, 1.0, 0.1));
    let exact = constants_exact(&geom);
    let est: Vec<_> = [(32, 4, 8), (64, 8, 16)]
        .into_iter()
        .map(|(a, b, c)| {
            let d = WaveDiscretization::assemble(&geom, WaveGrid::new(a, b, c).unwrap()).unwrap();
            constants_estimated(&geom, &d, &exact).unwrap()
        })
        .collect();
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    assert!(rel(est[0].c_g, est[1].c_g) < 0.05, "{est:?}");
    assert!(rel(est[0].c_4, est[1].c_4) < 0.05);
    assert!(rel(est[0].c_5, est[1].c_5) < 0.05);
    for e in &est {
        assert_eq!(e.c_f, 0.0);
        // The spectral half-norm dominates the L² norm.
        assert!(e.c_4 > 0.0 && e.c_4 <= 1.0);
        // Sectional Poincaré-type limit (2πW/A)/√(8π) for the gap map.
        let limit = 2.0 * PI * 0.1 / (PI * 0.01) / (8.0 * PI).sqrt();
        assert!(rel(e.c_g, limit) < 0.02, "{} vs {limit}", e.c_g);
    }
}

fn certify(
    spec: TubeSpec,
    grid: WaveGrid,
    drive: &InletDrive,
    t_end: f64,
) -> (CertificateReport, DeviationHistory) {
    let geom = geometry(spec);
    let model = CoupledModel::new(&geom, grid).unwrap();
    let cert = Certifier::new(&geom, &model.wave).unwrap();
    let mut hist = DeviationHistory::default();
    let opts = CouplingOptions {
        t_end,
        dt: 0.5 / grid.n_s as f64,
        inject_forcing: false,
    };
    let run = model
        .run(drive, opts, |lv| hist.push(cert.snapshot(lv).unwrap()))
        .unwrap();
    let (a, b, c) = run.tracking_pieces();
    let lhs = LhsNorms {
        displacement_h1: a,
        rate_l2: b,
        output_gap: c,
    };
    let report = CertificateReport::new(
        "test",
        grid,
        t_end,
        &cert.constants,
        lhs,
        run.forcing.load_norm(),
        Some(&hist),
    )
    .unwrap();
    (report, hist)
}

#[test]
fn straight_planar_run_certifies_zero() {
    let drive = InletDrive::planar(Signal::gaussian(1.0, 0.3, 0.1));
    let (rep, hist) = certify(
        TubeSpec::straight_cylinder(0.1),
        WaveGrid::new(16, 4, 8).unwrap(),
        &drive,
        1.5,
    );
    assert!(rep.lhs_total < 1e-10, "{}", rep.lhs_total);
    assert!(rep.bounds.thm2 < 1e-10);
    let thm3 = rep.bounds.thm3.as_ref().unwrap();
    assert!(thm3.value < 1e-10, "{thm3:?}");
    for s in &hist.snapshots {
        assert!(s.deviation_gradient < 1e-10);
    }
}

#[test]
fn curved_run_is_certified_term_by_term() {
    let drive = InletDrive {
        signal: Signal::gaussian(1.0, 0.3, 0.1),
        tilt: 0.3,
        radial: 0.2,
    };
    let (rep, hist) = certify(
        TubeSpec::curved_bump(0.12, 4.0).with_medium(1.0, 1.0, 0.1),
        WaveGrid::new(16, 4, 8).unwrap(),
        &drive,
        1.5,
    );
    assert!(rep.lhs_total > 1e-4);
    assert!(rep.lhs_total <= rep.bounds.thm2, "{rep:?}");
    let (name, ratio, t) = hist.worst_ratio(1e-14).unwrap();
    assert!(ratio <= 1.0, "{name} at t = {t}: {ratio}");

    // Formula audit from the stored constants and norms.
    let c_omega = rep.constants.iter().find(|c| c.name == "C_Omega").unwrap();
    assert_eq!(c_omega.provenance, Provenance::ExactFormula);
    let again = a_priori_bound(c_omega.value, 1.0, rep.t_end, rep.load_norm);
    assert!((again - rep.bounds.thm2).abs() <= 1e-12 * rep.bounds.thm2);
    let thm3 = rep.bounds.thm3.as_ref().unwrap();
    let sum: f64 = thm3.terms.iter().map(|t| t.1).sum();
    assert!((thm3.prefactor * sum - thm3.value).abs() <= 1e-12 * thm3.value);
}

#[test]
fn refined_bound_needs_history_and_estimates() {
    let geom = geometry(TubeSpec::curved_bump(0.12, 4.0));
    let set = ConstantSet::exact_only(&geom);
    assert!(refined_bound(&set, &DeviationHistory::default(), 1.0).is_err());
    assert!(set.list().iter().all(|c| c.provenance == Provenance::ExactFormula));
}
