//! A posteriori bounds on the tracking error `e = ψ − 𝒜φ` between the
//! Webster model and the averaged 3D wave field.
//!
//! Geometry-only constants are evaluated by extremization over a refined
//! `s`-grid. The operator and trace constants have no closed form and are
//! estimated on the discrete spaces of a [`WaveDiscretization`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use sprs::CsMat;

use crate::averaging::SectionAverager;
use crate::error::{CertifierError, SolverError};
use crate::forcing::ForcingEvaluator;
use crate::geometry::{DiskQuadrature, TubeGeometry};
use crate::linalg::{self, Assembler, Factorization};
use crate::pipeline::TimeLevel;
use crate::quadrature::gauss_legendre_unit;
use crate::wave3d::{WaveDiscretization, WaveGrid};
use crate::webster1d::WebsterDiscretization;

const REFINE: usize = 16;
const POWER_MAX_ITER: usize = 2000;
const POWER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactFormula,
    NumericallyEstimated,
    Mixed,
}

/// One named constant as it appears in a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constant {
    pub name: &'static str,
    pub value: f64,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<WaveGrid>,
}

/// `K(T) = 5 (ρ + 1)^{1/2} (T + 1)`.
pub fn growth_factor(density: f64, t_end: f64) -> f64 {
    5.0 * (density + 1.0).sqrt() * (t_end + 1.0)
}

/// Constants computable from the geometry alone, plus the coefficient
/// weights that multiply them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryConstants {
    pub density: f64,
    pub wall_dissipation: f64,
    /// `min_s min(A, A/c(s)²)`.
    pub min_area_ratio: f64,
    pub c_omega: f64,
    /// `2 / (ρ · min_area_ratio)`.
    pub c_1: f64,
    pub c_2: f64,
    /// `sup_s A⁻¹ (∫(Ξr + 1)² Ξ⁻¹ dA)^{1/2}`.
    pub c_h1: f64,
    /// `sup_s |η|/A`, enlarged by `sup W^{1/2}` when the wall factor exceeds one.
    pub c_3: f64,
    /// `sup |E/κ|` over the tube.
    pub error_ratio_sup: f64,
    /// Majorant of the disk-average operator norm on `L²`.
    pub average_norm_bound: f64,
    pub c_h3: f64,
    pub area_d1_sup: f64,
    pub area_d2_sup: f64,
    pub curvature_sup: f64,
    /// `sup max(|κ|, |κ'|)`.
    pub curvature_pair_sup: f64,
    /// `sup c(s)²`; converts bounds on `F + G + H` into bounds on the load.
    pub speed_sq_sup: f64,
}

/// Evaluates the geometry-only constants.
pub fn constants_exact(geom: &TubeGeometry) -> GeometryConstants {
    let sup = |f: &dyn Fn(f64) -> f64| geom.extremum(REFINE, true, f).1;
    let inf = |f: &dyn Fn(f64) -> f64| geom.extremum(REFINE, false, f).1;
    let density = geom.density();
    let min_area_ratio = inf(&|s| {
        let c = geom.at(s);
        c.area.min(c.area / (c.local_speed * c.local_speed))
    });
    let c_1 = 2.0 / (density * min_area_ratio);
    let quad = DiskQuadrature::new(16, 48);
    let c_h1 = sup(&|s| {
        let c = geom.at(s);
        let k = c.curvature;
        quad.integrate(c.radius, |r, th| {
            let xi_inv = 1.0 - k * r * th.cos();
            (r / xi_inv + 1.0).powi(2) * xi_inv
        })
        .sqrt()
            / c.area
    });
    let wall_factor = sup(&|s| geom.at(s).stretching).sqrt().max(1.0);
    let c_3 = sup(&|s| {
        let c = geom.at(s);
        c.curvature_ratio.abs() / c.area
    }) * wall_factor;
    let error_ratio_sup = sup(&|s| geom.sup_error_over_curvature(s));
    let average_norm_bound = SectionAverager::norm_bound(geom);
    GeometryConstants {
        density,
        wall_dissipation: geom.wall_dissipation(),
        min_area_ratio,
        c_omega: (2.0 / min_area_ratio + 1.0).sqrt(),
        c_1,
        c_2: c_1 + 1.0,
        c_h1,
        c_3,
        error_ratio_sup,
        average_norm_bound,
        c_h3: average_norm_bound * error_ratio_sup,
        area_d1_sup: sup(&|s| geom.at(s).area_d1.abs()),
        area_d2_sup: sup(&|s| geom.at(s).area_d2.abs()),
        curvature_sup: sup(&|s| geom.at(s).curvature.abs()),
        curvature_pair_sup: sup(&|s| {
            let c = geom.at(s);
            c.curvature.abs().max(c.curvature_d1.abs())
        }),
        speed_sq_sup: sup(&|s| geom.at(s).local_speed.powi(2)),
    }
}

/// `4 C_Ω ρ^{-1/2} (ρ + 1)^{3/4} (T + 1)^{1/2} ‖f‖`.
pub fn a_priori_bound(c_omega: f64, density: f64, t_end: f64, load_norm: f64) -> f64 {
    4.0 * c_omega * density.powf(-0.5) * (density + 1.0).powf(0.75) * (t_end + 1.0).sqrt()
        * load_norm
}

/// The same bound with the prefactor `(15 C₂)^{1/2} (ρ + 1)^{1/4}` that the
/// energy argument produces directly.
pub fn a_priori_bound_direct(c_2: f64, density: f64, t_end: f64, load_norm: f64) -> f64 {
    (15.0 * c_2).sqrt() * (density + 1.0).powf(0.25) * (t_end + 1.0).sqrt() * load_norm
}

/// Constants estimated on one discretization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatedConstants {
    pub grid: WaveGrid,
    /// Norm of `f ↦ F(f)` from the `E(Ω)` norm to `L²(0,1)`, divided by
    /// `‖A'‖_∞ + ‖A''‖_∞` (zero when both vanish).
    pub c_f: f64,
    /// Norm of `g ↦ −(2πW/A)(𝒜g − ℬg)` from `H¹(Ω)` to `L²(0,1)`.
    pub c_g: f64,
    /// Embedding `H^{1/2}(Γ) → L²(Γ)`.
    pub c_4: f64,
    /// Trace `H¹(Ω) → H^{1/2}(Γ)`.
    pub c_5: f64,
    pub c_h2: f64,
    /// `C_{ℋ,3}` enlarged to cover the nodal error function.
    pub c_h3: f64,
    pub power_iterations: usize,
}

/// Both groups of constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantSet {
    pub exact: GeometryConstants,
    pub estimated: Option<EstimatedConstants>,
}

impl ConstantSet {
    pub fn exact_only(geom: &TubeGeometry) -> Self {
        Self {
            exact: constants_exact(geom),
            estimated: None,
        }
    }

    /// Flat list for reports.
    pub fn list(&self) -> Vec<Constant> {
        let x = &self.exact;
        let exact = |name, value| Constant {
            name,
            value,
            provenance: Provenance::ExactFormula,
            grid: None,
        };
        let mut out = vec![
            exact("C_Omega", x.c_omega),
            exact("C_1", x.c_1),
            exact("C_2", x.c_2),
            exact("C_H1", x.c_h1),
            exact("C_3", x.c_3),
            exact("C_H3", x.c_h3),
        ];
        if let Some(e) = &self.estimated {
            let est = |name, value, provenance| Constant {
                name,
                value,
                provenance,
                grid: Some(e.grid),
            };
            out.push(est("C_F", e.c_f, Provenance::NumericallyEstimated));
            out.push(est("C_G", e.c_g, Provenance::NumericallyEstimated));
            out.push(est("C_4", e.c_4, Provenance::NumericallyEstimated));
            out.push(est("C_5", e.c_5, Provenance::NumericallyEstimated));
            out.push(est("C_H2", e.c_h2, Provenance::Mixed));
            out.push(est("C_H3_discrete", e.c_h3, Provenance::Mixed));
        }
        out
    }
}

/// Norms on the wall `Γ` in the cut-open `(s, θ)` chart with weight `W(s)`.
#[derive(Clone, Debug)]
struct WallNorms {
    /// 3D free-node index of each wall unknown (level-major).
    nodes: Vec<usize>,
    /// Lumped `W dθ ds` weights.
    mass: Vec<f64>,
    /// `∫ (f_s² + f_θ²/R²) W dθ ds`.
    stiffness: CsMat<f64>,
}

impl WallNorms {
    fn new(geom: &TubeGeometry, disc: &WaveDiscretization) -> Self {
        let g = disc.grid;
        let (n_s, n_t) = (g.n_s, g.n_theta);
        let (h, dth) = (g.h(), g.dtheta());
        let wall_ring = g.n_r;
        let nodes = (0..n_s)
            .flat_map(|i| (0..n_t).map(move |k| g.node(i, wall_ring, k)))
            .collect();
        let mass = (0..n_s)
            .flat_map(|i| {
                let hs = if i == 0 { 0.5 * h } else { h };
                let w = disc.levels[i].stretching;
                std::iter::repeat_n(hs * w * dth, n_t)
            })
            .collect();
        let gl = gauss_legendre_unit(3);
        let mut asm = Assembler::new(n_s * n_t);
        let index = |i: usize, k: usize| (i < n_s).then(|| i * n_t + k % n_t);
        for i in 0..n_s {
            for k in 0..n_t {
                let corners = [(i, k), (i, k + 1), (i + 1, k), (i + 1, k + 1)];
                let mut local = [[0.0; 4]; 4];
                for &(xs, ws) in &gl {
                    let c = geom.at((i as f64 + xs) * h);
                    let w = c.stretching;
                    for &(xt, wt) in &gl {
                        let grads: [(f64, f64); 4] = std::array::from_fn(|n| {
                            let (a, b) = (n >> 1, n & 1);
                            let (ls, ds) = if a == 0 { (1.0 - xs, -1.0) } else { (xs, 1.0) };
                            let (lt, dt) = if b == 0 { (1.0 - xt, -1.0) } else { (xt, 1.0) };
                            (ds / h * lt, ls * dt / dth)
                        });
                        let weight = w * ws * wt * h * dth;
                        for a in 0..4 {
                            for b in 0..4 {
                                local[a][b] += weight
                                    * (grads[a].0 * grads[b].0
                                        + grads[a].1 * grads[b].1 / (c.radius * c.radius));
                            }
                        }
                    }
                }
                for a in 0..4 {
                    for b in 0..4 {
                        if let (Some(p), Some(q)) = (
                            index(corners[a].0, corners[a].1),
                            index(corners[b].0, corners[b].1),
                        ) {
                            asm.add(p, q, local[a][b]);
                        }
                    }
                }
            }
        }
        Self {
            nodes,
            mass,
            stiffness: asm.finish(),
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn restrict(&self, values: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&n| values[n]).collect()
    }

    /// `‖f‖²_{H¹(Γ)}` of a nodal field.
    fn h1_sq(&self, values: &[f64]) -> f64 {
        let w = self.restrict(values);
        let l2: f64 = w.iter().zip(&self.mass).map(|(v, m)| m * v * v).sum();
        l2 + linalg::quad_form(&self.stiffness, &w)
    }

    /// Mass plus stiffness in 3D free-node indexing.
    fn h1_matrix(&self, n_free: usize) -> CsMat<f64> {
        let mut asm = Assembler::new(n_free);
        for (p, &n) in self.nodes.iter().enumerate() {
            asm.add(n, n, self.mass[p]);
        }
        for (p, row) in self.stiffness.outer_iterator().enumerate() {
            for (q, &v) in row.iter() {
                asm.add(self.nodes[p], self.nodes[q], v);
            }
        }
        asm.finish()
    }
}

/// Spectral `H^{1/2}(Γ)` norm built from the chart `H¹` form.
struct HalfNorm {
    /// `M^{1/2} U diag((1 + μ)^{1/2}) Uᵀ M^{1/2}`.
    gram: DMatrix<f64>,
    /// `(1 + μ_min)^{-1/2}`.
    embedding: f64,
}

impl HalfNorm {
    fn new(wall: &WallNorms) -> Self {
        let n = wall.len();
        let mut k = DMatrix::<f64>::zeros(n, n);
        let sq: Vec<f64> = wall.mass.iter().map(|m| m.sqrt()).collect();
        for (p, row) in wall.stiffness.outer_iterator().enumerate() {
            for (q, &v) in row.iter() {
                k[(p, q)] += v / (sq[p] * sq[q]);
            }
        }
        let k = (&k + k.transpose()) * 0.5;
        let eig = SymmetricEigen::new(k);
        let mu_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        let scale = DVector::from_iterator(n, eig.eigenvalues.iter().map(|m| (1.0 + m.max(0.0)).sqrt()));
        let u = eig.eigenvectors;
        let mut gram = &u * DMatrix::from_diagonal(&scale) * u.transpose();
        for p in 0..n {
            for q in 0..n {
                gram[(p, q)] *= sq[p] * sq[q];
            }
        }
        Self {
            gram,
            embedding: 1.0 / (1.0 + mu_min).sqrt(),
        }
    }
}

/// Rows of the gap map `f ↦ 𝒜f − ℬf` on the free nodes, one per level
/// (the Dirichlet level has none).
fn gap_rows(disc: &WaveDiscretization, avg: &SectionAverager) -> Vec<Vec<f64>> {
    let g = disc.grid;
    let m = g.per_level();
    (0..g.n_levels())
        .map(|i| {
            let mut row = vec![0.0; g.n_free()];
            if i < g.n_s {
                let a = disc.levels[i].area;
                for (l, w) in avg.weights(i).into_iter().enumerate() {
                    row[i * m + l] += w / a;
                }
                for l in g.wall_locals() {
                    row[i * m + l] -= 1.0 / g.n_theta as f64;
                }
            }
            row
        })
        .collect()
}

/// `sup_f ‖D S f‖²_{L²(0,1)} / fᵀ N f` via the reduced eigenproblem
/// `λ_max(W^{1/2} D S N⁻¹ Sᵀ Dᵀ W^{1/2})`.
fn level_operator_norm_sq(
    rows: &[Vec<f64>],
    level_map: &DMatrix<f64>,
    gram: &CsMat<f64>,
    line_weights: &[f64],
) -> Result<f64, SolverError> {
    let n = rows.len();
    let factor = Factorization::new(gram)?;
    let mut g = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        if rows[i].iter().all(|v| *v == 0.0) {
            continue;
        }
        let z = factor.solve(&rows[i])?;
        for j in 0..n {
            g[(i, j)] = linalg::dot(&rows[j], &z);
        }
    }
    let g = (&g + g.transpose()) * 0.5;
    let sw = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        line_weights.iter().map(|w| w.sqrt()),
    ));
    let b = &sw * level_map * g * level_map.transpose() * &sw;
    let b = (&b + b.transpose()) * 0.5;
    Ok(SymmetricEigen::new(b)
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max))
}

fn line_weights(n_levels: usize, h: f64) -> Vec<f64> {
    (0..n_levels)
        .map(|i| if i == 0 || i + 1 == n_levels { 0.5 * h } else { h })
        .collect()
}

/// Matrix of `q ↦ −(1/A) ∂_s(A' q)` with the stencils of the forcing module.
fn gap_derivative_map(disc: &WaveDiscretization) -> DMatrix<f64> {
    let n = disc.grid.n_s;
    let h = disc.grid.h();
    let lv = &disc.levels;
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        let stencil: Vec<(usize, f64)> = if i == 0 {
            vec![(0, -3.0), (1, 4.0), (2, -1.0)]
        } else if i == n {
            vec![(n, 3.0), (n - 1, -4.0), (n - 2, 1.0)]
        } else {
            vec![(i + 1, 1.0), (i - 1, -1.0)]
        };
        for (j, c) in stencil {
            d[(i, j)] -= c / (2.0 * h) * lv[j].area_d1 / lv[i].area;
        }
    }
    d
}

/// Estimates the operator and trace constants on `disc`.
pub fn constants_estimated(
    geom: &TubeGeometry,
    disc: &WaveDiscretization,
    exact: &GeometryConstants,
) -> Result<EstimatedConstants, CertifierError> {
    let g = disc.grid;
    let avg = SectionAverager::new(disc);
    let wall = WallNorms::new(geom, disc);
    let h1 = linalg::linear_combination(&[(1.0, &disc.mass), (1.0, &disc.stiffness)]);
    let rows = gap_rows(disc, &avg);
    let lw = line_weights(g.n_levels(), g.h());

    let weight_f = exact.area_d1_sup + exact.area_d2_sup;
    let c_f = if weight_f > 0.0 {
        let e_gram = linalg::linear_combination(&[(1.0, &h1), (1.0, &wall.h1_matrix(g.n_free()))]);
        let map = gap_derivative_map(disc);
        level_operator_norm_sq(&rows, &map, &e_gram, &lw)?.sqrt() / weight_f
    } else {
        0.0
    };
    let g_map = DMatrix::from_diagonal(&DVector::from_iterator(
        g.n_levels(),
        disc.levels
            .iter()
            .map(|l| -2.0 * std::f64::consts::PI * l.stretching / l.area),
    ));
    let c_g = level_operator_norm_sq(&rows, &g_map, &h1, &lw)?.sqrt();

    let half = HalfNorm::new(&wall);
    let (c_5, power_iterations) = trace_norm(&wall, &half, &h1)?;

    let error_ratio_nodal = nodal_error_ratio_sup(disc);
    let c_h3 = exact.average_norm_bound * exact.error_ratio_sup.max(error_ratio_nodal);
    Ok(EstimatedConstants {
        grid: g,
        c_f,
        c_g,
        c_4: half.embedding,
        c_5,
        c_h2: std::f64::consts::PI.sqrt() * exact.c_3 * half.embedding * c_5,
        c_h3,
        power_iterations,
    })
}

/// `sup |E/κ|` over the nodes with the discrete section mean.
fn nodal_error_ratio_sup(disc: &WaveDiscretization) -> f64 {
    let g = disc.grid;
    let avg = SectionAverager::new(disc);
    let mut sup: f64 = 0.0;
    for i in 0..g.n_levels() {
        let (r, k) = (disc.levels[i].radius, disc.levels[i].curvature);
        let w = avg.weights(i);
        let z: Vec<f64> = (0..g.per_level())
            .map(|l| {
                let (ring, kk) = g.ring_angle(l);
                r * g.x(ring) * g.theta(kk).cos()
            })
            .collect();
        let mean = w.iter().zip(&z).map(|(a, b)| a * b * b).sum::<f64>() / disc.levels[i].area;
        for zz in z {
            sup = sup.max((-2.0 * zz + k * (zz * zz - mean)).abs());
        }
    }
    sup
}

/// Power iteration for `sup ‖tr f‖_{H^{1/2}(Γ)} / ‖f‖_{H¹(Ω)}`.
fn trace_norm(
    wall: &WallNorms,
    half: &HalfNorm,
    h1: &CsMat<f64>,
) -> Result<(f64, usize), CertifierError> {
    let n = h1.rows();
    let factor = Factorization::new(h1)?;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (0.7 * i as f64).sin()).collect();
    let mut last = 0.0;
    for it in 1..=POWER_MAX_ITER {
        let w = DVector::from_vec(wall.restrict(&x));
        let qw = &half.gram * &w;
        let num = w.dot(&qw);
        let den = linalg::quad_form(h1, &x);
        let ratio = num / den;
        if it > 5 && (ratio - last).abs() <= POWER_TOL * ratio {
            return Ok((ratio.sqrt(), it));
        }
        last = ratio;
        let mut rhs = vec![0.0; n];
        for (p, &node) in wall.nodes.iter().enumerate() {
            rhs[node] = qw[p];
        }
        x = factor.solve(&rhs)?;
        let norm = linalg::quad_form(h1, &x).sqrt();
        if !(norm > 0.0) {
            return Err(SolverError::NonFinite("trace power iteration").into());
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    Err(CertifierError::NoConvergence {
        name: "C_5",
        iterations: POWER_MAX_ITER,
    })
}

/// Measured left-hand side of the tracking-error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LhsNorms {
    /// `‖(ψ − 𝒜φ)(T)‖_{H¹(0,1)}`.
    pub displacement_h1: f64,
    /// `‖(ψ_t − 𝒜φ_t)(T)‖_{L²(0,1)}`.
    pub rate_l2: f64,
    /// `‖ỹ − ȳ‖_{L²(0,T)}`.
    pub output_gap: f64,
}

impl LhsNorms {
    pub fn total(&self) -> f64 {
        self.displacement_h1 + self.rate_l2 + self.output_gap
    }
}

/// Final-time profiles and midpoint output series of one trajectory.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryEnd<'a> {
    pub value: &'a [f64],
    pub rate: &'a [f64],
    pub output: &'a [f64],
}

/// Measures the three error pieces with the Webster energy quadratures;
/// outputs are midpoint samples with spacing `dt`.
pub fn measure_error(
    web: &WebsterDiscretization,
    webster: TrajectoryEnd<'_>,
    averaged: TrajectoryEnd<'_>,
    dt: f64,
) -> Result<LhsNorms, SolverError> {
    let n = web.n_nodes();
    for (what, a, b) in [
        ("value", webster.value.len(), averaged.value.len()),
        ("rate", webster.rate.len(), averaged.rate.len()),
        ("output", webster.output.len(), averaged.output.len()),
    ] {
        if a != b || (what != "output" && a != n) {
            return Err(SolverError::GridMismatch(format!(
                "{what}: {a} vs {b} samples (expected {n} nodes)"
            )));
        }
    }
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    Ok(LhsNorms {
        displacement_h1: web.h1_norm_sq(&diff(webster.value, averaged.value)).sqrt(),
        rate_l2: web.l2_norm_sq(&diff(webster.rate, averaged.rate)).sqrt(),
        output_gap: diff(webster.output, averaged.output)
            .iter()
            .map(|d| d * d * dt)
            .sum::<f64>()
            .sqrt(),
    })
}

/// Deviation norms and forcing-term checks at one time level.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    /// `‖φ − φ̄̄‖_{E(Ω)}`.
    pub deviation_e: f64,
    /// `‖∇(φ − φ̄̄)‖_{L²(Ω)}`.
    pub deviation_gradient: f64,
    /// `‖(φ − φ̄̄)_t‖_{H¹(Ω)}`.
    pub deviation_rate_h1: f64,
    /// `‖Δφ − (𝒜Δφ)‾‾‖_{L²(Ω)}`.
    pub laplacian_deviation: f64,
    /// `‖H_grad(φ̄̄)‖_{L²(0,1)}`, the part of the metric term carried by the
    /// dilated field.
    pub dilation_residual: f64,
    pub norm_f: f64,
    pub norm_g: f64,
    pub norm_h_gradient: f64,
    pub norm_h_error: f64,
    pub norm_h_wall: f64,
    pub bound_f: f64,
    pub bound_g: f64,
    pub bound_h_gradient: f64,
    pub bound_h_error: f64,
    pub bound_h_wall: f64,
}

impl Snapshot {
    /// `(name, norm, bound)` for each forcing term.
    pub fn checks(&self) -> [(&'static str, f64, f64); 5] {
        [
            ("F", self.norm_f, self.bound_f),
            ("G", self.norm_g, self.bound_g),
            ("H_gradient", self.norm_h_gradient, self.bound_h_gradient),
            ("H_error", self.norm_h_error, self.bound_h_error),
            ("H_wall", self.norm_h_wall, self.bound_h_wall),
        ]
    }
}

/// Evaluates deviation norms on one discretization.
pub struct Certifier<'a> {
    disc: &'a WaveDiscretization,
    eval: ForcingEvaluator<'a>,
    wall: WallNorms,
    h1: CsMat<f64>,
    volume_weights: Vec<f64>,
    pub constants: ConstantSet,
}

impl<'a> Certifier<'a> {
    /// Estimates every constant on `disc`.
    pub fn new(geom: &TubeGeometry, disc: &'a WaveDiscretization) -> Result<Self, CertifierError> {
        let exact = constants_exact(geom);
        let estimated = constants_estimated(geom, disc, &exact)?;
        Ok(Self::with_constants(
            geom,
            disc,
            ConstantSet {
                exact,
                estimated: Some(estimated),
            },
        ))
    }

    pub fn with_constants(
        geom: &TubeGeometry,
        disc: &'a WaveDiscretization,
        constants: ConstantSet,
    ) -> Self {
        let eval = ForcingEvaluator::new(disc);
        let volume_weights = eval.averager().volume_weights();
        Self {
            disc,
            wall: WallNorms::new(geom, disc),
            h1: linalg::linear_combination(&[(1.0, &disc.mass), (1.0, &disc.stiffness)]),
            volume_weights,
            eval,
            constants,
        }
    }

    fn vol_norm(&self, v: &[f64]) -> f64 {
        self.volume_weights
            .iter()
            .zip(v)
            .map(|(w, x)| w * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Nodal `Δφ̄̄` of a level profile.
    fn dilated_laplacian(&self, profile: &[f64]) -> Vec<f64> {
        let g = self.disc.grid;
        let (n, h) = (g.n_s, g.h());
        let p = profile;
        let d1: Vec<f64> = (0..=n)
            .map(|i| match i {
                0 => (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * h),
                i if i == n => (3.0 * p[n] - 4.0 * p[n - 1] + p[n - 2]) / (2.0 * h),
                i => (p[i + 1] - p[i - 1]) / (2.0 * h),
            })
            .collect();
        let d2: Vec<f64> = (0..=n)
            .map(|i| {
                let j = i.clamp(1, n - 1);
                (p[j + 1] - 2.0 * p[j] + p[j - 1]) / (h * h)
            })
            .collect();
        let mut out = Vec::with_capacity(g.n_nodes());
        for i in 0..=n {
            let l = &self.disc.levels[i];
            for local in 0..g.per_level() {
                let (ring, k) = g.ring_angle(local);
                let z = l.radius * g.x(ring) * g.theta(k).cos();
                let xi = 1.0 / (1.0 - l.curvature * z);
                out.push(xi * xi * d2[i] + xi * xi * xi * z * l.curvature_d1 * d1[i]);
            }
        }
        out
    }

    /// Deviation norms and forcing checks at one time level.
    pub fn snapshot(&self, level: &TimeLevel<'_>) -> Result<Snapshot, CertifierError> {
        let consts = &self.constants;
        let est = consts.estimated.as_ref().ok_or_else(|| {
            CertifierError::MissingHistory("estimated constants are required".into())
        })?;
        let x = &consts.exact;
        let disc = self.disc;
        let g = disc.grid;
        let nf = g.n_free();
        let avg = self.eval.averager();
        let field = level.field;

        let phi_bar = avg.avg_section(&field.phi);
        let dil = avg.dilate(&phi_bar);
        let e: Vec<f64> = field.phi.iter().zip(&dil).map(|(a, b)| a - b).collect();
        let rate_bar = avg.avg_section(&field.phi_t);
        let e_t: Vec<f64> = field
            .phi_t
            .iter()
            .zip(avg.dilate(&rate_bar))
            .map(|(a, b)| a - b)
            .collect();
        let lap_e: Vec<f64> = level
            .laplacian
            .iter()
            .zip(self.dilated_laplacian(&phi_bar))
            .map(|(a, b)| a - b)
            .collect();
        let deviation_e = (linalg::quad_form(&self.h1, &e[..nf])
            + self.vol_norm(&lap_e).powi(2)
            + self.wall.h1_sq(&e))
        .sqrt();

        let e_s = disc.s_derivative(&e);
        let lw = line_weights(g.n_levels(), g.h());
        let mut grad_sq = 0.0;
        for i in 0..g.n_levels() {
            let l = &disc.levels[i];
            let section = disc.section_integral(i, &e, &e_s, |xx, th, _, gr| {
                (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2])
                    * (1.0 - l.radius * xx * l.curvature * th.cos())
            });
            grad_sq += lw[i] * section;
        }
        let deviation_rate_h1 = linalg::quad_form(&self.h1, &e_t[..nf]).sqrt();
        let lap_bar = avg.avg_section(level.laplacian);
        let lap_dev: Vec<f64> = level
            .laplacian
            .iter()
            .zip(avg.dilate(&lap_bar))
            .map(|(a, b)| a - b)
            .collect();
        let laplacian_deviation = self.vol_norm(&lap_dev);
        let dilation_residual = avg.line_norm(&self.eval.compute_h_gradient(&dil));

        let forcing = level.forcing;
        let alpha = x.wall_dissipation;
        let deviation_gradient = grad_sq.sqrt();
        Ok(Snapshot {
            t: level.t,
            deviation_e,
            deviation_gradient,
            deviation_rate_h1,
            laplacian_deviation,
            dilation_residual,
            norm_f: avg.line_norm(&forcing.f),
            norm_g: avg.line_norm(&forcing.g),
            norm_h_gradient: avg.line_norm(&forcing.h_gradient),
            norm_h_error: avg.line_norm(&forcing.h_error),
            norm_h_wall: avg.line_norm(&forcing.h_wall),
            bound_f: (x.area_d1_sup + x.area_d2_sup) * est.c_f * deviation_e,
            bound_g: alpha * est.c_g * deviation_rate_h1,
            bound_h_gradient: x.curvature_pair_sup * x.c_h1 * deviation_gradient
                + dilation_residual,
            bound_h_error: x.curvature_sup * est.c_h3 * laplacian_deviation,
            bound_h_wall: alpha * est.c_h2 * deviation_rate_h1,
        })
    }
}

/// Time history of [`Snapshot`]s.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DeviationHistory {
    pub snapshots: Vec<Snapshot>,
}

impl DeviationHistory {
    pub fn push(&mut self, s: Snapshot) {
        self.snapshots.push(s);
    }

    /// `L²(0,T)` norm of one scalar series (trapezoid).
    pub fn time_norm(&self, pick: impl Fn(&Snapshot) -> f64) -> f64 {
        self.snapshots
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (pick(&w[0]).powi(2) + pick(&w[1]).powi(2)))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `norm / bound` over all snapshots and terms, with the term
    /// name and time. Terms whose norm and bound are both below `floor`
    /// are skipped.
    pub fn worst_ratio(&self, floor: f64) -> Option<(&'static str, f64, f64)> {
        let mut worst: Option<(&'static str, f64, f64)> = None;
        for s in &self.snapshots {
            for (name, norm, bound) in s.checks() {
                if norm <= floor && bound <= floor {
                    continue;
                }
                let r = if bound > 0.0 { norm / bound } else { f64::INFINITY };
                if worst.is_none_or(|w| r > w.1) {
                    worst = Some((name, r, s.t));
                }
            }
        }
        worst
    }
}

/// Value of the refined bound and its terms (before the common prefactor).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinedBound {
    pub value: f64,
    pub prefactor: f64,
    pub terms: Vec<(String, f64)>,
}

/// Bound on the tracking error in terms of deviation norms of the 3D field.
pub fn refined_bound(
    constants: &ConstantSet,
    history: &DeviationHistory,
    t_end: f64,
) -> Result<RefinedBound, CertifierError> {
    let x = &constants.exact;
    let est = constants
        .estimated
        .as_ref()
        .ok_or_else(|| CertifierError::MissingHistory("estimated constants".into()))?;
    if history.snapshots.len() < 2 {
        return Err(CertifierError::MissingHistory(format!(
            "{} snapshots",
            history.snapshots.len()
        )));
    }
    let rho = x.density;
    let prefactor = 7.0 * x.c_omega * rho.powf(-0.5) * (rho + 1.0).powf(0.75) * (t_end + 1.0).sqrt()
        * x.speed_sq_sup;
    let terms = vec![
        (
            "area".to_string(),
            (x.area_d1_sup + x.area_d2_sup) * est.c_f * history.time_norm(|s| s.deviation_e),
        ),
        (
            "curvature_gradient".to_string(),
            x.curvature_pair_sup * x.c_h1 * history.time_norm(|s| s.deviation_gradient),
        ),
        (
            "dissipation".to_string(),
            x.wall_dissipation * (est.c_g + est.c_h2) * history.time_norm(|s| s.deviation_rate_h1),
        ),
        (
            "curvature_laplacian".to_string(),
            x.curvature_sup * est.c_h3 * history.time_norm(|s| s.laplacian_deviation),
        ),
        (
            "dilation_residual".to_string(),
            history.time_norm(|s| s.dilation_residual),
        ),
    ];
    let value = prefactor * terms.iter().map(|t| t.1).sum::<f64>();
    Ok(RefinedBound {
        value,
        prefactor,
        terms,
    })
}

/// Both bounds next to the measured error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bounds {
    pub thm2: f64,
    pub thm2_direct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thm3: Option<RefinedBound>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Effectivity {
    pub thm2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thm3: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermCheck {
    pub snapshots: usize,
    pub worst_term: Option<&'static str>,
    pub worst_ratio: f64,
    pub worst_time: f64,
}

/// Certificate for one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub scenario: String,
    pub grids: WaveGrid,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub constants: Vec<Constant>,
    pub load_norm: f64,
    pub lhs: LhsNorms,
    pub lhs_total: f64,
    pub bounds: Bounds,
    pub effectivity: Effectivity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term_check: Option<TermCheck>,
}

impl CertificateReport {
    pub fn new(
        scenario: impl Into<String>,
        grids: WaveGrid,
        t_end: f64,
        constants: &ConstantSet,
        lhs: LhsNorms,
        load_norm: f64,
        history: Option<&DeviationHistory>,
    ) -> Result<Self, CertifierError> {
        let x = &constants.exact;
        let thm2 = a_priori_bound(x.c_omega, x.density, t_end, load_norm);
        let thm3 = match history {
            Some(h) if constants.estimated.is_some() => Some(refined_bound(constants, h, t_end)?),
            _ => None,
        };
        let total = lhs.total();
        let ratio = |b: f64| if total > 0.0 { b / total } else { f64::INFINITY };
        let term_check = history.map(|h| {
            let worst = h.worst_ratio(1e-14);
            TermCheck {
                snapshots: h.snapshots.len(),
                worst_term: worst.map(|w| w.0),
                worst_ratio: worst.map_or(0.0, |w| w.1),
                worst_time: worst.map_or(0.0, |w| w.2),
            }
        });
        Ok(Self {
            scenario: scenario.into(),
            grids,
            t_end,
            constants: constants.list(),
            load_norm,
            lhs,
            lhs_total: total,
            effectivity: Effectivity {
                thm2: ratio(thm2),
                thm3: thm3.as_ref().map(|b| ratio(b.value)),
            },
            bounds: Bounds {
                thm2,
                thm2_direct: a_priori_bound_direct(x.c_2, x.density, t_end, load_norm),
                thm3,
            },
            term_check,
        })
    }
}
