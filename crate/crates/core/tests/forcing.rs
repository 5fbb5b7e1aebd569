use std::f64::consts::PI;

use proptest::prelude::*;
use tubewave::forcing::ForcingEvaluator;
use tubewave::geometry::{DiskQuadrature, Profile};
use tubewave::wave3d::{WaveDiscretization, WaveField, WaveGrid};
use tubewave::{TubeGeometry, TubeSpec};

fn assemble(spec: TubeSpec, grid: WaveGrid) -> (TubeGeometry, WaveDiscretization) {
    let geom = TubeGeometry::build(spec, 64).unwrap();
    let d = WaveDiscretization::assemble(&geom, grid).unwrap();
    (geom, d)
}

/// Fills every node from `(s, r, θ)`.
fn nodal(d: &WaveDiscretization, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let g = d.grid;
    let mut out = Vec::with_capacity(g.n_nodes());
    for level in 0..g.n_levels() {
        let r = d.levels[level].radius;
        for local in 0..g.per_level() {
            let (ring, k) = g.ring_angle(local);
            out.push(f(g.s(level), r * g.x(ring), g.theta(k)));
        }
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn cone() -> TubeSpec {
    TubeSpec {
        radius: Profile::polynomial(vec![0.1, 0.0, 0.05]),
        ..TubeSpec::straight_cylinder(0.1)
    }
}

fn random_field(d: &WaveDiscretization, c: &[f64]) -> WaveField {
    let g = d.grid;
    let mut f = WaveField::from_fn(
        &g,
        |s, x, th| c[0] * (PI * s).cos() + c[1] * x * th.cos() + c[2] * x * x * (2.0 * th).sin(),
        |s, x, th| c[3] * x * x + c[4] * s * x * th.sin(),
    );
    f.t = 0.25;
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn straight_tube_has_no_forcing(
        c in prop::collection::vec(-1.0f64..1.0, 5),
        alpha in 0.0f64..0.5,
    ) {
        let (_, d) = assemble(
            TubeSpec::straight_cylinder(0.1).with_medium(1.0, 1.0, alpha),
            WaveGrid::new(8, 4, 8).unwrap(),
        );
        let eval = ForcingEvaluator::new(&d);
        let field = random_field(&d, &c);
        let terms = eval.evaluate(&field, &vec![0.0; d.grid.per_level()]).unwrap();
        prop_assert_eq!(max_abs(&terms.f), 0.0);
        prop_assert_eq!(max_abs(&terms.h), 0.0);
        if alpha == 0.0 {
            prop_assert_eq!(max_abs(&terms.g), 0.0);
        }
        // Planar rates leave no gap for G.
        let planar = WaveField::from_fn(&d.grid, |s, _, _| s, |s, _, _| s * s);
        let terms = eval.evaluate(&planar, &vec![0.0; d.grid.per_level()]).unwrap();
        prop_assert!(max_abs(&terms.g) < 1e-13);
    }

    #[test]
    fn dilated_fields_have_no_gap_forcing(
        p in prop::collection::vec(-1.0f64..1.0, 9),
        q in prop::collection::vec(-1.0f64..1.0, 9),
        alpha in 0.0f64..0.5,
    ) {
        let (_, d) = assemble(
            TubeSpec::cosine_horn(0.1, 0.15).with_medium(1.0, 1.0, alpha),
            WaveGrid::new(8, 4, 8).unwrap(),
        );
        let eval = ForcingEvaluator::new(&d);
        let avg = eval.averager();
        let (phi, phi_t) = (avg.dilate(&p), avg.dilate(&q));
        prop_assert!(max_abs(&eval.compute_f(&phi)) < 1e-12);
        prop_assert!(max_abs(&eval.compute_g(&phi_t)) < 1e-12);
    }
}

#[test]
fn cone_gap_forcing_converges_at_second_order() {
    // φ = r² gives a gap of −(1 − m)R² with m the section mean of x², so
    // F = 2(1 − m)(3R'² + RR'').
    let mut errs = Vec::new();
    for n_s in [16, 32, 64] {
        let (geom, d) = assemble(cone(), WaveGrid::new(n_s, 6, 8).unwrap());
        let eval = ForcingEvaluator::new(&d);
        let phi = nodal(&d, |_, r, _| r * r);
        let r0 = d.levels[0].radius;
        let m = eval.averager().avg_section(&phi)[0] / (r0 * r0);
        let f = eval.compute_f(&phi);
        let err = (0..d.grid.n_levels())
            .map(|i| {
                let c = geom.at(d.grid.s(i));
                let exact = 2.0 * (1.0 - m) * (3.0 * c.radius_d1.powi(2) + c.radius * c.radius_d2);
                (f[i] - exact).abs()
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
    }
}

#[test]
fn gap_forcing_closed_forms_on_straight_tube() {
    let alpha = 0.3;
    let (_, d) = assemble(
        TubeSpec::straight_cylinder(0.1).with_medium(1.0, 1.0, alpha),
        WaveGrid::new(8, 6, 12).unwrap(),
    );
    let eval = ForcingEvaluator::new(&d);
    let avg = eval.averager();
    let g = eval.compute_g(&nodal(&d, |_, r, th| r * th.cos()));
    assert!(max_abs(&g) < 1e-15);
    let rate = nodal(&d, |_, r, _| r * r);
    let gap = avg.gap(&rate);
    let g = eval.compute_g(&rate);
    for (i, l) in d.levels.iter().enumerate() {
        let exact = -2.0 * PI * alpha * l.stretching / l.area * gap[i];
        assert!((g[i] - exact).abs() < 1e-14);
        // Against the continuum gap −R²/2 within quadrature error.
        let continuum = PI * alpha * l.stretching * l.radius.powi(2) / l.area;
        assert!((g[i] - continuum).abs() < 2e-2 * continuum);
    }
}

/// `∫ Ξ r cos θ dA` on a disk of radius `radius` with curvature `kappa`.
fn tilted_moment(kappa: f64, radius: f64) -> f64 {
    DiskQuadrature::new(40, 64).integrate(radius, |r, th| r * th.cos() / (1.0 - kappa * r * th.cos()))
}

#[test]
fn metric_term_on_dilated_fields_leaves_only_the_stretch_residual() {
    let (_, d) = assemble(TubeSpec::curved_bump(0.12, 4.0), WaveGrid::new(16, 6, 16).unwrap());
    let eval = ForcingEvaluator::new(&d);
    let avg = eval.averager();
    // φ̄ = 1 − s has an exact centred difference.
    let profile: Vec<f64> = (0..d.grid.n_levels()).map(|i| 1.0 - d.grid.s(i)).collect();
    let phi = avg.dilate(&profile);
    let h1 = eval.compute_h_gradient(&phi);
    for (i, l) in d.levels.iter().enumerate() {
        let exact = l.curvature_d1 * tilted_moment(l.curvature, l.radius) / l.area;
        let scale = l.curvature_d1.abs() * l.radius + 1e-12;
        assert!((h1[i] - exact).abs() < 2e-2 * scale, "level {i}: {} vs {exact}", h1[i]);
    }
    // The error-function and wall parts vanish on dilated data.
    let lap = avg.dilate(&profile.iter().map(|p| p * p - 3.0).collect::<Vec<_>>());
    assert!(max_abs(&eval.compute_h_error(&lap)) < 1e-12);
    assert!(max_abs(&eval.compute_h_wall(&phi)) < 1e-14);
}

/// `(1/A)∫ Ξ⁻¹ ∇Ξ⁻¹·∇φ dA` for `φ = g(s) r cos θ` by fine quadrature.
fn metric_term_oracle(geom: &TubeGeometry, s: f64, g: f64, g_s: f64) -> f64 {
    let c = geom.at(s);
    let (k, k1) = (c.curvature, c.curvature_d1);
    DiskQuadrature::new(24, 64).integrate(c.radius, |r, th| {
        let xi = 1.0 / (1.0 - k * r * th.cos());
        -xi * r * r * k1 * g_s * th.cos().powi(2) - k * g / xi
    }) / c.area
}

#[test]
fn metric_term_matches_quadrature_oracle() {
    let geom = TubeGeometry::build(TubeSpec::curved_bump(0.12, 4.0), 64).unwrap();
    let mut errs = Vec::new();
    for (n_s, n_r, n_t) in [(16, 4, 8), (32, 8, 16), (64, 16, 32)] {
        let d = WaveDiscretization::assemble(&geom, WaveGrid::new(n_s, n_r, n_t).unwrap()).unwrap();
        let eval = ForcingEvaluator::new(&d);
        let phi = nodal(&d, |s, r, th| (PI * s).cos() * r * th.cos());
        let h1 = eval.compute_h_gradient(&phi);
        let err = (1..n_s)
            .map(|i| {
                let s = d.grid.s(i);
                let exact = metric_term_oracle(&geom, s, (PI * s).cos(), -PI * (PI * s).sin());
                (h1[i] - exact).abs()
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
    }
}

#[test]
fn wall_term_closed_form() {
    let alpha = 0.2;
    let (_, d) = assemble(
        TubeSpec::curved_bump(0.1, 3.0).with_medium(1.0, 1.0, alpha),
        WaveGrid::new(8, 4, 12).unwrap(),
    );
    let eval = ForcingEvaluator::new(&d);
    // φ_t = x cos θ has wall trace cos θ and ∫cos² θ dθ = π.
    let rate = nodal(&d, |_, r, th| r / 0.1 * th.cos());
    let h3 = eval.compute_h_wall(&rate);
    for (i, l) in d.levels.iter().enumerate() {
        let exact = -alpha * l.stretching * l.curvature_ratio / l.area * PI;
        assert!((h3[i] - exact).abs() < 1e-13 * (1.0 + exact.abs()));
    }
}

#[test]
fn load_scales_with_local_sound_speed() {
    let (_, d) = assemble(
        TubeSpec::curved_bump(0.12, 4.0).with_medium(2.0, 1.0, 0.1),
        WaveGrid::new(8, 4, 8).unwrap(),
    );
    let eval = ForcingEvaluator::new(&d);
    let field = random_field(&d, &[0.3, -0.7, 0.2, 0.5, -0.4]);
    let terms = eval.evaluate(&field, &vec![0.0; d.grid.per_level()]).unwrap();
    let total = terms.total();
    for (i, l) in d.levels.iter().enumerate() {
        let h = terms.h_gradient[i] + terms.h_error[i] + terms.h_wall[i];
        assert!((terms.h[i] - h).abs() < 1e-15 * (1.0 + h.abs()));
        let c2 = l.local_speed * l.local_speed;
        assert!((terms.load[i] + c2 * total[i]).abs() < 1e-13 * (1.0 + total[i].abs()));
    }
}
