use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubewave::geometry::{Profile, TubeGeometry, TubeSpec};
use tubewave::linalg;
use tubewave::signals::Signal;
use tubewave::webster1d::{WebsterDiscretization, WebsterState};

fn straight(n: usize) -> (TubeGeometry, WebsterDiscretization) {
    let geom = TubeGeometry::build(TubeSpec::straight_cylinder(0.1), n).unwrap();
    let disc = WebsterDiscretization::assemble(&geom, n).unwrap();
    (geom, disc)
}

fn dense(m: &sprs::CsMat<f64>) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m.cols()]; m.rows()];
    for (v, (i, j)) in m.iter() {
        out[i][j] += v;
    }
    out
}

fn random_state(n: usize, seed: u64) -> WebsterState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WebsterState {
        psi: (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
        pi: (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
        t: 0.0,
    }
}

#[test]
fn two_element_stiffness_is_standard_p1() {
    let (geom, disc) = straight(2);
    let a0 = geom.at(0.0).area;
    let rho = geom.density();
    let h = 0.5;
    let k = dense(&disc.stiffness);
    // Free nodes 0 and 1; node 2 is the Dirichlet end.
    let expected = [[1.0, -1.0], [-1.0, 2.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((k[i][j] - rho * a0 / h * expected[i][j]).abs() < 1e-14);
        }
    }
}

#[test]
fn zero_dissipation_gives_zero_damping() {
    let (_, disc) = straight(16);
    assert!(disc.damping.iter().all(|(v, _)| *v == 0.0));
}

#[test]
fn cone_stiffness_matches_closed_form_integrals() {
    // A(s) = A0 (1 + s)^2, i.e. R(s) = R0 (1 + s).
    let r0 = 0.1;
    let spec = TubeSpec {
        curvature: Profile::constant(0.0),
        radius: Profile::polynomial(vec![r0, r0]),
        sound_speed: 1.0,
        density: 1.3,
        wall_dissipation: 0.0,
    };
    let n = 8;
    let geom = TubeGeometry::unchecked(spec, n).unwrap();
    let disc = WebsterDiscretization::assemble(&geom, n).unwrap();
    let k = dense(&disc.stiffness);
    let a0 = PI * r0 * r0;
    let h = 1.0 / n as f64;
    // ∫_{s_e}^{s_e+h} A0 (1+s)^2 ds / h^2 on each element.
    let elem = |e: usize| {
        let (a, b) = (1.0 + e as f64 * h, 1.0 + (e + 1) as f64 * h);
        a0 * (b.powi(3) - a.powi(3)) / 3.0 / (h * h)
    };
    for i in 0..n {
        let mut diag = elem(i);
        if i > 0 {
            diag += elem(i - 1);
        }
        assert!((k[i][i] - 1.3 * diag).abs() < 1e-12 * diag, "diag {i}");
        if i + 1 < n {
            assert!((k[i][i + 1] + 1.3 * elem(i)).abs() < 1e-12 * diag);
        }
    }
}

#[test]
fn matrices_are_symmetric_and_definite() {
    let spec = TubeSpec::curved_bump(0.1, 3.0).with_medium(1.0, 1.2, 0.3);
    let geom = TubeGeometry::build(spec, 32).unwrap();
    let disc = WebsterDiscretization::assemble(&geom, 32).unwrap();
    for m in [&disc.mass, &disc.stiffness, &disc.damping] {
        let d = dense(m);
        for i in 0..d.len() {
            for j in 0..d.len() {
                assert!((d[i][j] - d[j][i]).abs() <= 1e-15 * (1.0 + d[i][i].abs()));
            }
        }
    }
    for seed in 0..10 {
        let x = random_state(disc.n_free(), seed).psi;
        assert!(linalg::quad_form(&disc.mass, &x) > 0.0);
        assert!(linalg::quad_form(&disc.stiffness, &x) > 0.0);
        assert!(linalg::quad_form(&disc.damping, &x) >= 0.0);
    }
}

#[test]
fn energy_of_linear_profile() {
    let n = 20;
    let (geom, disc) = straight(n);
    let a0 = geom.at(0.0).area;
    let state = WebsterState {
        psi: disc.nodes[..n].iter().map(|s| 1.0 - s).collect(),
        pi: vec![0.0; n],
        t: 0.0,
    };
    assert!((disc.energy(&state) - a0 / 2.0).abs() < 1e-14);
    assert_eq!(disc.energy(&WebsterState::zeros(n)), 0.0);
    let scaled = state.scaled(3.0);
    assert!((disc.energy(&scaled) - 9.0 * disc.energy(&state)).abs() < 1e-13);
}

#[test]
fn zero_in_zero_out() {
    let (_, disc) = straight(16);
    let (next, y) = disc
        .step(&WebsterState::zeros(16), 0.0, None, disc.default_dt())
        .unwrap();
    assert_eq!(y, 0.0);
    assert!(next.psi.iter().chain(&next.pi).all(|v| *v == 0.0));
    let run = disc
        .solve(&WebsterState::zeros(16), 1.0, disc.default_dt(), &|_| 0.0, None, 0)
        .unwrap();
    assert!(run.output.iter().all(|v| *v == 0.0));
    assert!(run.final_state.psi.iter().all(|v| *v == 0.0));
}

#[test]
fn outgoing_wave_is_not_reflected_at_the_port() {
    // Constant input switched on at t = 0: before the wave returns from
    // s = 1 the port stays matched and the output is at the level of a
    // fine-step reference run.
    let n = 256;
    let (_, disc) = straight(n);
    let u0 = 0.7;
    let coarse = disc
        .solve(&WebsterState::zeros(n), 1.0, disc.default_dt(), &|_| u0, None, 0)
        .unwrap();
    let fine = disc
        .solve(&WebsterState::zeros(n), 1.0, disc.default_dt() / 8.0, &|_| u0, None, 0)
        .unwrap();
    let tail = |r: &tubewave::webster1d::WebsterRun| {
        r.output[r.output.len() / 2..]
            .iter()
            .map(|y| y.abs())
            .fold(0.0, f64::max)
    };
    assert!(tail(&coarse) < 1e-2 * u0);
    assert!(tail(&fine) < 1e-2 * u0);
}

#[test]
fn dalembert_return_is_delayed_input() {
    // ỹ(t) = ũ(t − 2/c); the pressure at the port carries the sign flip.
    let n = 512;
    let (geom, disc) = straight(n);
    let sig = Signal::gaussian(1.0, 0.5, 0.12);
    let dt = disc.h / geom.sound_speed();
    let run = disc
        .solve(&WebsterState::zeros(n), 3.0, dt, &|t| sig.eval(t), None, 1)
        .unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..run.output.len() {
        let tm = 0.5 * (run.times[k] + run.times[k + 1]);
        let reference = sig.eval(tm - 2.0);
        num += (run.output[k] - reference).powi(2);
        den += reference * reference;
    }
    assert!((num / den).sqrt() < 1e-3);
    // Port pressure π(0) = ρ g (ũ(t) − ũ(t − 2/c)) with g = √(c/(ρA)).
    let g = 1.0 / disc.port_gain();
    let k = (2.5 / dt).round() as usize;
    let snap = &run.snapshots[k];
    let expected = geom.density() * g * (sig.eval(snap.t) - sig.eval(snap.t - 2.0));
    assert!(expected < -0.5 * geom.density() * g);
    assert!((snap.pi[0] - expected).abs() < 1e-2 * expected.abs());
}

#[test]
fn conservative_step_preserves_energy() {
    let (_, disc) = straight(64);
    let stepper = disc.stepper(disc.default_dt()).unwrap();
    let mut state = random_state(64, 7);
    let e0 = disc.energy(&state);
    for _ in 0..200 {
        let before = disc.energy(&state);
        let rep = stepper.step(&mut state, 0.0, None).unwrap();
        // Matched port absorbs energy: ΔE/dt = −ỹ², nothing else.
        let rel = (rep.energy_after - before + stepper.dt() * rep.output * rep.output).abs() / e0;
        assert!(rel < 1e-12, "{rel}");
    }
}

#[test]
fn compatibility_gap_is_reported() {
    let (_, disc) = straight(32);
    let x0 = random_state(32, 3);
    let run = disc
        .solve(&x0, 0.1, disc.default_dt(), &|_| 0.0, None, 0)
        .unwrap();
    assert!(run.compatibility_gap > 0.0);
    let run0 = disc
        .solve(&WebsterState::zeros(32), 0.1, disc.default_dt(), &|_| 0.0, None, 0)
        .unwrap();
    assert_eq!(run0.compatibility_gap, 0.0);
}

#[test]
fn load_of_wrong_length_is_rejected() {
    let (_, disc) = straight(8);
    let stepper = disc.stepper(0.01).unwrap();
    let mut s = WebsterState::zeros(8);
    assert!(stepper.step(&mut s, 0.0, Some(&[0.0; 3])).is_err());
    assert!(disc.stepper(0.0).is_err());
}

#[test]
fn csv_export_has_expected_columns() {
    let (_, disc) = straight(8);
    let run = disc
        .solve(&WebsterState::zeros(8), 0.2, 0.05, &|t| t * t, None, 1)
        .unwrap();
    let dir = std::env::temp_dir().join(format!("tubewave-webster-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("signals.csv");
    run.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,u,y,energy,balance_residual");
    assert_eq!(lines.count(), run.output.len());
    run.write_snapshots_csv(&dir.join("snap.csv")).unwrap();
    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solve_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..1000) {
        let n = 24;
        let geom = TubeGeometry::build(TubeSpec::cosine_horn(0.1, 0.15).with_medium(1.0, 1.2, 0.2), n).unwrap();
        let disc = WebsterDiscretization::assemble(&geom, n).unwrap();
        let x1 = random_state(n, seed);
        let x2 = random_state(n, seed + 1);
        let u1 = |t: f64| (3.0 * t).sin();
        let u2 = |t: f64| t * t;
        let mut f1 = |t: f64, f: &mut [f64]| f.iter_mut().enumerate().for_each(|(i, v)| *v = (t + i as f64).cos());
        let mut f2 = |t: f64, f: &mut [f64]| f.iter_mut().enumerate().for_each(|(i, v)| *v = t * i as f64);
        let r1 = disc.solve(&x1, 0.3, 0.01, &u1, Some(&mut f1), 0).unwrap();
        let r2 = disc.solve(&x2, 0.3, 0.01, &u2, Some(&mut f2), 0).unwrap();
        let x12 = WebsterState {
            psi: x1.psi.iter().zip(&x2.psi).map(|(p, q)| a * p + b * q).collect(),
            pi: x1.pi.iter().zip(&x2.pi).map(|(p, q)| a * p + b * q).collect(),
            t: 0.0,
        };
        let u12 = |t: f64| a * u1(t) + b * u2(t);
        let mut f12 = |t: f64, f: &mut [f64]| {
            let mut g1 = vec![0.0; f.len()];
            let mut g2 = vec![0.0; f.len()];
            f1(t, &mut g1);
            f2(t, &mut g2);
            f.iter_mut().enumerate().for_each(|(i, v)| *v = a * g1[i] + b * g2[i]);
        };
        let r12 = disc.solve(&x12, 0.3, 0.01, &u12, Some(&mut f12), 0).unwrap();
        for k in 0..r12.output.len() {
            let lin = a * r1.output[k] + b * r2.output[k];
            prop_assert!((r12.output[k] - lin).abs() < 1e-9 * (1.0 + lin.abs()));
        }
        for i in 0..n {
            let lin = a * r1.final_state.psi[i] + b * r2.final_state.psi[i];
            prop_assert!((r12.final_state.psi[i] - lin).abs() < 1e-9 * (1.0 + lin.abs()));
        }
    }

    #[test]
    fn energy_balance_holds_per_step(alpha in 0.0f64..1.0, amp in 0.0f64..3.0, seed in 0u64..1000) {
        let n = 32;
        let geom = TubeGeometry::build(TubeSpec::curved_bump(0.1, 4.0).with_medium(1.0, 1.2, alpha), n).unwrap();
        let disc = WebsterDiscretization::assemble(&geom, n).unwrap();
        let x0 = random_state(n, seed);
        let mut load = |t: f64, f: &mut [f64]| f.iter_mut().enumerate().for_each(|(i, v)| *v = amp * (t * 5.0 + i as f64 * 0.3).sin());
        let run = disc.solve(&x0, 0.5, disc.default_dt(), &|t| amp * (7.0 * t).cos(), Some(&mut load), 0).unwrap();
        let scale = run.energy[0] / run.dt + 1.0;
        for k in 0..run.balance_residual.len() {
            prop_assert!(run.balance_residual[k].abs() <= 1e-9 * scale);
            prop_assert!(run.dissipation[k] >= 0.0);
        }
    }
}
