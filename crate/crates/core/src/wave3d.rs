//! Acoustic wave equation `φ_tt = c²Δφ` inside the tube, in tube-fitted
//! coordinates `(s, r, θ)` with `r = R(s)·x`, `x ∈ [0, 1]`.
//!
//! The metric is diagonal, `ds² = Ξ⁻² ds² + dr² + r² dθ²`, with volume
//! `Ξ⁻¹ r dr dθ ds`. Space is discretised with trilinear elements on the
//! mapped box; the innermost ring of cells is collapsed onto a single axis
//! node per `s`-level. The boundary conditions enter the weak form:
//!
//! * inlet `s = 0`: `c ∂φ/∂ν + φ_t = 2 √(c/(ρA₀)) u`,
//! * wall `r = R(s)`: `∂φ/∂ν + α φ_t = 0`, surface element `W(s) dθ ds`,
//! * outlet `s = 1`: `φ = 0`.
//!
//! With `M = ∫ φ_a φ_b dV`, `K = ∫ ∇φ_a·∇φ_b dV`, inlet and wall face masses
//! `B_in`, `B_w`, the semi-discrete system reads
//!
//! ```text
//! φ_t = v
//! M v_t / c² = −K φ − (α B_w + B_in / c) v + (2g/c) B_in u,   g = √(c/(ρA₀))
//! y = u − v / g   on the inlet face
//! ```
//!
//! and is advanced with the implicit midpoint rule. The energy
//! `½ρ(φᵀKφ + vᵀMv/c²)` then satisfies, per step and up to round-off,
//! `ΔE/dt = (‖u‖² − ‖y‖²)/A₀ − ρα v̂ᵀB_w v̂` with face norms from `B_in`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sprs::CsMat;

use crate::error::SolverError;
use crate::geometry::TubeGeometry;
use crate::linalg::{self, Assembler, Factorization};
use crate::quadrature::gauss_legendre_unit;
use crate::signals::InletDrive;

/// Grid sizes: `n_s` cells along the tube, `n_r` radial cells, `n_theta`
/// angular cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveGrid {
    pub n_s: usize,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for WaveGrid {
    fn default() -> Self {
        Self {
            n_s: 64,
            n_r: 12,
            n_theta: 16,
        }
    }
}

impl WaveGrid {
    pub fn new(n_s: usize, n_r: usize, n_theta: usize) -> Result<Self, SolverError> {
        let grid = Self { n_s, n_r, n_theta };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<(), SolverError> {
        if self.n_theta < 8 || self.n_r < 4 || self.n_s < 2 {
            return Err(SolverError::GridTooCoarse(format!(
                "need n_s >= 2, n_r >= 4, n_theta >= 8; got {}x{}x{}",
                self.n_s, self.n_r, self.n_theta
            )));
        }
        Ok(())
    }

    /// Nodes on one cross-section: the axis node plus `n_r` rings.
    pub fn per_level(&self) -> usize {
        1 + self.n_r * self.n_theta
    }

    pub fn n_levels(&self) -> usize {
        self.n_s + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_levels() * self.per_level()
    }

    /// Nodes off the Dirichlet face; they come first in the numbering.
    pub fn n_free(&self) -> usize {
        self.n_s * self.per_level()
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_s as f64
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_r as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn s(&self, level: usize) -> f64 {
        level as f64 * self.h()
    }

    /// Scaled radius of ring `j` (`j = 0` is the axis).
    pub fn x(&self, ring: usize) -> f64 {
        ring as f64 * self.dx()
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }

    /// Position of `(ring, k)` inside a level; the angle is ignored on the
    /// axis and wraps periodically.
    pub fn local(&self, ring: usize, k: usize) -> usize {
        if ring == 0 {
            0
        } else {
            1 + (ring - 1) * self.n_theta + k % self.n_theta
        }
    }

    pub fn node(&self, level: usize, ring: usize, k: usize) -> usize {
        level * self.per_level() + self.local(ring, k)
    }

    /// `(ring, k)` of a local index.
    pub fn ring_angle(&self, local: usize) -> (usize, usize) {
        if local == 0 {
            (0, 0)
        } else {
            (1 + (local - 1) / self.n_theta, (local - 1) % self.n_theta)
        }
    }

    /// Local indices of the wall ring in angular order.
    pub fn wall_locals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_theta).map(move |k| self.local(self.n_r, k))
    }

    /// The grid with every spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            n_s: 2 * self.n_s,
            n_r: 2 * self.n_r,
            n_theta: 2 * self.n_theta,
        }
    }
}

/// Geometry sampled on an `s`-level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelGeometry {
    pub s: f64,
    pub radius: f64,
    pub radius_d1: f64,
    pub curvature: f64,
    pub curvature_d1: f64,
    pub area: f64,
    pub area_d1: f64,
    pub area_d2: f64,
    pub stretching: f64,
    pub curvature_ratio: f64,
    pub local_speed: f64,
}

/// `φ` and `φ_t` on every node (the Dirichlet level is kept at zero).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WaveField {
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub t: f64,
}

impl WaveField {
    pub fn zeros(grid: &WaveGrid) -> Self {
        Self {
            phi: vec![0.0; grid.n_nodes()],
            phi_t: vec![0.0; grid.n_nodes()],
            t: 0.0,
        }
    }

    /// Builds a field from a function of `(s, x, θ)`; values on the
    /// Dirichlet face are forced to zero.
    pub fn from_fn(
        grid: &WaveGrid,
        phi: impl Fn(f64, f64, f64) -> f64,
        phi_t: impl Fn(f64, f64, f64) -> f64,
    ) -> Self {
        let mut f = Self::zeros(grid);
        for level in 0..grid.n_s {
            for local in 0..grid.per_level() {
                let (ring, k) = grid.ring_angle(local);
                let (s, x, th) = (grid.s(level), grid.x(ring), grid.theta(k));
                let n = level * grid.per_level() + local;
                f.phi[n] = phi(s, x, th);
                f.phi_t[n] = phi_t(s, x, th);
            }
        }
        f
    }
}

/// `φ` and `φ_t` on the wall nodes, indexed `[level][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WallTrace {
    pub phi: Vec<Vec<f64>>,
    pub phi_t: Vec<Vec<f64>>,
    /// `W(s)` per level; the surface element is `W dθ ds`.
    pub stretching: Vec<f64>,
}

/// Orthonormal components `(t, r̂, θ̂)` of a gradient.
pub type Gradient = [f64; 3];

/// Assembled operators for one geometry and grid.
pub struct WaveDiscretization {
    pub grid: WaveGrid,
    pub levels: Vec<LevelGeometry>,
    pub density: f64,
    pub sound_speed: f64,
    pub wall_dissipation: f64,
    pub inlet_area: f64,
    /// Free × free `∫ φ_a φ_b dV`.
    pub mass: CsMat<f64>,
    /// Free × free `∫ ∇φ_a · ∇φ_b dV`.
    pub stiffness: CsMat<f64>,
    /// Free × free `∫_{Γ(0)} φ_a φ_b dA`.
    pub inlet: CsMat<f64>,
    /// Free × free `∫_Γ φ_a φ_b W dθ ds`.
    pub wall: CsMat<f64>,
    /// `∫_Ω dV` by the element quadrature.
    pub volume: f64,
    damping: CsMat<f64>,
    mass_factor: Factorization,
}

impl std::fmt::Debug for WaveDiscretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaveDiscretization")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

fn hat(node: usize, xi: f64) -> (f64, f64) {
    if node == 0 {
        (1.0 - xi, -1.0)
    } else {
        (xi, 1.0)
    }
}

impl WaveDiscretization {
    pub fn assemble(geom: &TubeGeometry, grid: WaveGrid) -> Result<Self, SolverError> {
        grid.check()?;
        let (h, dx, dth) = (grid.h(), grid.dx(), grid.dtheta());
        let nf = grid.n_free();
        let gl = gauss_legendre_unit(3);

        let levels: Vec<LevelGeometry> = (0..grid.n_levels())
            .map(|i| {
                let c = geom.at(grid.s(i));
                LevelGeometry {
                    s: c.s,
                    radius: c.radius,
                    radius_d1: c.radius_d1,
                    curvature: c.curvature,
                    curvature_d1: c.curvature_d1,
                    area: c.area,
                    area_d1: c.area_d1,
                    area_d2: c.area_d2,
                    stretching: c.stretching,
                    curvature_ratio: c.curvature_ratio,
                    local_speed: c.local_speed,
                }
            })
            .collect();

        let mut mass = Assembler::new(nf);
        let mut stiff = Assembler::new(nf);
        let mut wall = Assembler::new(nf);
        let mut inlet = Assembler::new(nf);
        let mut volume = 0.0;

        for i in 0..grid.n_s {
            let coeffs: Vec<_> = gl.iter().map(|&(xi, _)| geom.at((i as f64 + xi) * h)).collect();
            for jc in 0..grid.n_r {
                for kc in 0..grid.n_theta {
                    let mut idx = [0usize; 8];
                    for (n, slot) in idx.iter_mut().enumerate() {
                        let (a, b, c) = (n >> 2, (n >> 1) & 1, n & 1);
                        *slot = grid.node(i + a, jc + b, kc + c);
                    }
                    let mut ml = [[0.0; 8]; 8];
                    let mut kl = [[0.0; 8]; 8];
                    for (q1, &(xs, ws)) in gl.iter().enumerate() {
                        let co = &coeffs[q1];
                        let (r, dr, kappa) = (co.radius, co.radius_d1, co.curvature);
                        for &(xx, wx) in &gl {
                            let x = (jc as f64 + xx) * dx;
                            for &(xt, wt) in &gl {
                                let th = (kc as f64 + xt) * dth;
                                let xi_inv = 1.0 - r * x * kappa * th.cos();
                                let xi = 1.0 / xi_inv;
                                let dv = xi_inv * r * r * x * h * dx * dth * ws * wx * wt;
                                volume += dv;
                                let mut val = [0.0; 8];
                                let mut grad = [[0.0; 3]; 8];
                                for n in 0..8 {
                                    let (a, b, c) = (n >> 2, (n >> 1) & 1, n & 1);
                                    let (la, da) = hat(a, xs);
                                    let (lb, db) = hat(b, xx);
                                    let (lc, dc) = hat(c, xt);
                                    val[n] = la * lb * lc;
                                    let ds = da * lb * lc / h;
                                    let dxn = la * db * lc / dx;
                                    let dtn = la * lb * dc / dth;
                                    grad[n] = [
                                        xi * (ds - x * dr / r * dxn),
                                        dxn / r,
                                        dtn / (r * x),
                                    ];
                                }
                                for p in 0..8 {
                                    for q in 0..8 {
                                        ml[p][q] += val[p] * val[q] * dv;
                                        kl[p][q] += (grad[p][0] * grad[q][0]
                                            + grad[p][1] * grad[q][1]
                                            + grad[p][2] * grad[q][2])
                                            * dv;
                                    }
                                }
                            }
                        }
                    }
                    for p in 0..8 {
                        if idx[p] >= nf {
                            continue;
                        }
                        for q in 0..8 {
                            if idx[q] < nf {
                                mass.add(idx[p], idx[q], ml[p][q]);
                                stiff.add(idx[p], idx[q], kl[p][q]);
                            }
                        }
                    }
                }
            }
            // Wall face x = 1 between levels i and i + 1.
            for kc in 0..grid.n_theta {
                let idx: [usize; 4] =
                    std::array::from_fn(|n| grid.node(i + (n >> 1), grid.n_r, kc + (n & 1)));
                for (q1, &(xs, ws)) in gl.iter().enumerate() {
                    let w_s = coeffs[q1].stretching;
                    for &(xt, wt) in &gl {
                        let val: [f64; 4] =
                            std::array::from_fn(|n| hat(n >> 1, xs).0 * hat(n & 1, xt).0);
                        let da = w_s * h * dth * ws * wt;
                        for p in 0..4 {
                            for q in 0..4 {
                                if idx[p] < nf && idx[q] < nf {
                                    wall.add(idx[p], idx[q], val[p] * val[q] * da);
                                }
                            }
                        }
                    }
                }
            }
        }

        // Inlet disk at s = 0 (flat and orthogonal to the centreline).
        let r0 = levels[0].radius;
        for jc in 0..grid.n_r {
            for kc in 0..grid.n_theta {
                let idx: [usize; 4] =
                    std::array::from_fn(|n| grid.node(0, jc + (n >> 1), kc + (n & 1)));
                for &(xx, wx) in &gl {
                    let x = (jc as f64 + xx) * dx;
                    for &(xt, wt) in &gl {
                        let val: [f64; 4] =
                            std::array::from_fn(|n| hat(n >> 1, xx).0 * hat(n & 1, xt).0);
                        let da = r0 * r0 * x * dx * dth * wx * wt;
                        for p in 0..4 {
                            for q in 0..4 {
                                inlet.add(idx[p], idx[q], val[p] * val[q] * da);
                            }
                        }
                    }
                }
            }
        }

        let mass = linalg::symmetric_part(&mass.finish());
        let mass_factor = Factorization::new(&mass)?;
        let inlet = linalg::symmetric_part(&inlet.finish());
        let wall = linalg::symmetric_part(&wall.finish());
        let damping = linalg::linear_combination(&[
            (geom.wall_dissipation(), &wall),
            (1.0 / geom.sound_speed(), &inlet),
        ]);
        Ok(Self {
            grid,
            inlet_area: levels[0].area,
            levels,
            density: geom.density(),
            sound_speed: geom.sound_speed(),
            wall_dissipation: geom.wall_dissipation(),
            mass,
            stiffness: linalg::symmetric_part(&stiff.finish()),
            inlet,
            wall,
            volume,
            damping,
            mass_factor,
        })
    }

    /// `g = √(c/(ρA₀))`.
    pub fn port_gain(&self) -> f64 {
        (self.sound_speed / (self.density * self.inlet_area)).sqrt()
    }

    /// `α B_w + B_in / c`.
    pub fn damping(&self) -> &CsMat<f64> {
        &self.damping
    }

    /// Nodal input on the inlet level at time `t`.
    pub fn inlet_values(&self, drive: &InletDrive, t: f64) -> Vec<f64> {
        let g = &self.grid;
        (0..g.per_level())
            .map(|local| {
                let (ring, k) = g.ring_angle(local);
                drive.eval(t, g.x(ring), g.theta(k))
            })
            .collect()
    }

    /// `(2g/c) B_in u` over the free nodes.
    fn input_load(&self, inlet_values: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.grid.n_free()];
        u[..inlet_values.len()].copy_from_slice(inlet_values);
        let scale = 2.0 * self.port_gain() / self.sound_speed;
        linalg::matvec(&self.inlet, &u).into_iter().map(|v| v * scale).collect()
    }

    pub fn energy(&self, field: &WaveField) -> f64 {
        let nf = self.grid.n_free();
        let c2 = self.sound_speed * self.sound_speed;
        0.5 * self.density
            * (linalg::quad_form(&self.stiffness, &field.phi[..nf])
                + linalg::quad_form(&self.mass, &field.phi_t[..nf]) / c2)
    }

    /// Smallest step that keeps the temporal error comparable with the
    /// spatial one along the tube.
    pub fn default_dt(&self) -> f64 {
        0.5 * self.grid.h() / self.sound_speed
    }

    pub fn stepper(&self, dt: f64) -> Result<WaveStepper<'_>, SolverError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolverError::InvalidTimeStep(dt));
        }
        let c2 = self.sound_speed * self.sound_speed;
        let system = linalg::linear_combination(&[
            (2.0 / c2, &self.mass),
            (0.5 * dt * dt, &self.stiffness),
            (dt, &self.damping),
        ]);
        Ok(WaveStepper {
            disc: self,
            dt,
            factor: Factorization::new(&system)?,
        })
    }

    /// Discrete `Δφ` on every node: `M⁻¹(−Kφ − (αB_w + B_in/c)φ_t + (2g/c)B_in u)`,
    /// i.e. `c⁻² φ_tt` of the semi-discrete system. Zero on the Dirichlet face,
    /// where `φ_tt = 0`.
    pub fn laplacian_of(
        &self,
        field: &WaveField,
        inlet_values: &[f64],
    ) -> Result<Vec<f64>, SolverError> {
        let nf = self.grid.n_free();
        let mut rhs = self.input_load(inlet_values);
        for (r, k) in rhs.iter_mut().zip(linalg::matvec(&self.stiffness, &field.phi[..nf])) {
            *r -= k;
        }
        for (r, d) in rhs.iter_mut().zip(linalg::matvec(&self.damping, &field.phi_t[..nf])) {
            *r -= d;
        }
        let mut lap = self.mass_factor.solve(&rhs)?;
        lap.resize(self.grid.n_nodes(), 0.0);
        Ok(lap)
    }

    /// Solves `M z = b` on the free nodes.
    pub fn solve_mass(&self, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.mass_factor.solve(rhs)
    }

    pub fn wall_trace(&self, field: &WaveField) -> WallTrace {
        let g = &self.grid;
        let pick = |v: &[f64]| -> Vec<Vec<f64>> {
            (0..g.n_levels())
                .map(|i| {
                    g.wall_locals()
                        .map(|l| v[i * g.per_level() + l])
                        .collect()
                })
                .collect()
        };
        WallTrace {
            phi: pick(&field.phi),
            phi_t: pick(&field.phi_t),
            stretching: self.levels.iter().map(|l| l.stretching).collect(),
        }
    }

    /// Nodal `∂φ/∂s` at fixed `x`: centred differences inside, second-order
    /// one-sided differences on the end levels.
    pub fn s_derivative(&self, values: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (m, n, h) = (g.per_level(), g.n_s, g.h());
        let mut out = vec![0.0; values.len()];
        for l in 0..m {
            let v = |i: usize| values[i * m + l];
            out[l] = (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
            for i in 1..n {
                out[i * m + l] = (v(i + 1) - v(i - 1)) / (2.0 * h);
            }
            out[n * m + l] = (3.0 * v(n) - 4.0 * v(n - 1) + v(n - 2)) / (2.0 * h);
        }
        out
    }

    /// Integrates `kernel(x, θ, φ, ∇φ)` over the cross-section at `level`
    /// with measure `dA = r dr dθ`. `phi` and `phi_s` are nodal values (for
    /// `φ_s` typically from [`Self::s_derivative`]); the cross-section field
    /// is the bilinear interpolant, so the transverse derivatives are exact
    /// for it.
    pub fn section_integral(
        &self,
        level: usize,
        phi: &[f64],
        phi_s: &[f64],
        mut kernel: impl FnMut(f64, f64, f64, Gradient) -> f64,
    ) -> f64 {
        let g = &self.grid;
        let lg = &self.levels[level];
        let (r, dr) = (lg.radius, lg.radius_d1);
        let kappa = lg.curvature;
        let (dx, dth) = (g.dx(), g.dtheta());
        let base = level * g.per_level();
        let gl = gauss_legendre_unit(3);
        let mut total = 0.0;
        for jc in 0..g.n_r {
            for kc in 0..g.n_theta {
                let idx: [usize; 4] =
                    std::array::from_fn(|n| base + g.local(jc + (n >> 1), kc + (n & 1)));
                for &(xx, wx) in &gl {
                    let x = (jc as f64 + xx) * dx;
                    for &(xt, wt) in &gl {
                        let th = (kc as f64 + xt) * dth;
                        let (mut f, mut fs, mut fx, mut ft) = (0.0, 0.0, 0.0, 0.0);
                        for (n, &id) in idx.iter().enumerate() {
                            let (lb, db) = hat(n >> 1, xx);
                            let (lc, dc) = hat(n & 1, xt);
                            f += lb * lc * phi[id];
                            fs += lb * lc * phi_s[id];
                            fx += db * lc / dx * phi[id];
                            ft += lb * dc / dth * phi[id];
                        }
                        let xi = 1.0 / (1.0 - r * x * kappa * th.cos());
                        let grad = [xi * (fs - x * dr / r * fx), fx / r, ft / (r * x)];
                        total += kernel(x, th, f, grad) * r * r * x * dx * dth * wx * wt;
                    }
                }
            }
        }
        total
    }
}

/// Outcome of one midpoint step.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveStepReport {
    /// Midpoint output `y` on the inlet level nodes.
    pub output: Vec<f64>,
    /// Midpoint `φ_t` on the inlet level nodes.
    pub inlet_velocity: Vec<f64>,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `(‖u‖² − ‖y‖²)/A₀` at the midpoint.
    pub port_power: f64,
    /// `ρα v̂ᵀ B_w v̂ ≥ 0`.
    pub dissipation: f64,
    /// `ΔE/dt − port_power + dissipation`.
    pub balance_residual: f64,
}

/// A midpoint stepper with a factorised system matrix.
pub struct WaveStepper<'a> {
    disc: &'a WaveDiscretization,
    dt: f64,
    factor: Factorization,
}

impl WaveStepper<'_> {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `field` by one step with the inlet values sampled at the
    /// midpoint time.
    pub fn step(
        &self,
        field: &mut WaveField,
        inlet_mid: &[f64],
    ) -> Result<WaveStepReport, SolverError> {
        let d = self.disc;
        let g = &d.grid;
        let (nf, m) = (g.n_free(), g.per_level());
        if inlet_mid.len() != m {
            return Err(SolverError::GridMismatch(format!(
                "inlet data has {} values, level has {m}",
                inlet_mid.len()
            )));
        }
        let dt = self.dt;
        let c2 = d.sound_speed * d.sound_speed;
        let energy_before = d.energy(field);

        let mut rhs = d.input_load(inlet_mid);
        let kphi = linalg::matvec(&d.stiffness, &field.phi[..nf]);
        let mv = linalg::matvec(&d.mass, &field.phi_t[..nf]);
        for i in 0..nf {
            rhs[i] = 2.0 / c2 * mv[i] + dt * (rhs[i] - kphi[i]);
        }
        let v_mid = self.factor.solve(&rhs)?;
        for i in 0..nf {
            field.phi[i] += dt * v_mid[i];
            field.phi_t[i] = 2.0 * v_mid[i] - field.phi_t[i];
        }
        field.t += dt;
        let energy_after = d.energy(field);

        let gain = d.port_gain();
        let output: Vec<f64> = (0..m).map(|l| inlet_mid[l] - v_mid[l] / gain).collect();
        let face = |a: &[f64], b: &[f64]| {
            let mut av = vec![0.0; nf];
            av[..m].copy_from_slice(a);
            let mut bv = vec![0.0; nf];
            bv[..m].copy_from_slice(b);
            linalg::bilinear(&d.inlet, &av, &bv)
        };
        let port_power = (face(inlet_mid, inlet_mid) - face(&output, &output)) / d.inlet_area;
        let dissipation =
            d.density * d.wall_dissipation * linalg::quad_form(&d.wall, &v_mid);
        let rate = (energy_after - energy_before) / dt;
        Ok(WaveStepReport {
            output,
            inlet_velocity: v_mid[..m].to_vec(),
            energy_before,
            energy_after,
            port_power,
            dissipation,
            balance_residual: rate - port_power + dissipation,
        })
    }
}
