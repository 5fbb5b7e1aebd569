//! Cross-sectional averages of grid functions on the wave grid.
//!
//! The disk average uses the exact integrals of the nodal basis functions
//! over each cross-section, so the average of the piecewise-bilinear
//! interpolant is computed without further quadrature error and the
//! weights of a level add up to `A(s)` exactly.

use crate::geometry::TubeGeometry;
use crate::quadrature::trapezoid;
use crate::wave3d::{WallTrace, WaveDiscretization, WaveGrid};

#[derive(Clone, Debug)]
pub struct SectionAverager {
    grid: WaveGrid,
    /// Nodal weights of the unit disk; multiply by `R(s)²`.
    unit_weights: Vec<f64>,
    radii: Vec<f64>,
    curvatures: Vec<f64>,
    areas: Vec<f64>,
}

impl SectionAverager {
    pub fn new(disc: &WaveDiscretization) -> Self {
        let g = disc.grid;
        let (dx, dth) = (g.dx(), g.dtheta());
        let unit_weights = (0..g.per_level())
            .map(|local| match g.ring_angle(local) {
                (0, _) => 2.0 * std::f64::consts::PI * dx * dx / 6.0,
                (j, _) if j == g.n_r => dth * dx * (0.5 - dx / 6.0),
                (j, _) => dth * g.x(j) * dx,
            })
            .collect();
        Self {
            grid: g,
            unit_weights,
            radii: disc.levels.iter().map(|l| l.radius).collect(),
            curvatures: disc.levels.iter().map(|l| l.curvature).collect(),
            areas: disc.levels.iter().map(|l| l.area).collect(),
        }
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    /// Nodal `dA` weights of a level; they sum to `A(s)`.
    pub fn weights(&self, level: usize) -> Vec<f64> {
        let r2 = self.radii[level] * self.radii[level];
        self.unit_weights.iter().map(|w| w * r2).collect()
    }

    fn level_slice<'a>(&self, values: &'a [f64], level: usize) -> &'a [f64] {
        let m = self.grid.per_level();
        &values[level * m..(level + 1) * m]
    }

    /// `∫_{Γ(s)} f dA` on every level.
    pub fn integrate_sections(&self, values: &[f64]) -> Vec<f64> {
        (0..self.grid.n_levels())
            .map(|i| {
                let r2 = self.radii[i] * self.radii[i];
                r2 * self
                    .unit_weights
                    .iter()
                    .zip(self.level_slice(values, i))
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Disk average `(1/A)∫_{Γ(s)} f dA` on every level.
    pub fn avg_section(&self, values: &[f64]) -> Vec<f64> {
        self.integrate_sections(values)
            .into_iter()
            .zip(&self.areas)
            .map(|(v, a)| v / a)
            .collect()
    }

    /// Wall-circle average `(1/2π)∫ g(s, R, θ) dθ` from nodal values.
    pub fn avg_wall(&self, values: &[f64]) -> Vec<f64> {
        (0..self.grid.n_levels())
            .map(|i| {
                let level = self.level_slice(values, i);
                self.grid.wall_locals().map(|l| level[l]).sum::<f64>()
                    / self.grid.n_theta as f64
            })
            .collect()
    }

    /// Wall-circle average of a trace (`φ` or `φ_t` rows).
    pub fn avg_wall_circle(rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect()
    }

    /// Wall averages of both components of a trace.
    pub fn avg_trace(trace: &WallTrace) -> (Vec<f64>, Vec<f64>) {
        (
            Self::avg_wall_circle(&trace.phi),
            Self::avg_wall_circle(&trace.phi_t),
        )
    }

    /// `𝒜f − ℬf` on every level.
    pub fn gap(&self, values: &[f64]) -> Vec<f64> {
        self.avg_section(values)
            .into_iter()
            .zip(self.avg_wall(values))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Extends a profile on the levels to every node of its cross-section.
    pub fn dilate(&self, profile: &[f64]) -> Vec<f64> {
        let m = self.grid.per_level();
        profile
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, m))
            .collect()
    }

    /// Averaged input `ū` from nodal values on the inlet level.
    pub fn avg_input(&self, inlet_values: &[f64]) -> f64 {
        let w = self.weights(0);
        w.iter().zip(inlet_values).map(|(w, v)| w * v).sum::<f64>() / self.areas[0]
    }

    /// Lumped volume weights `h·w·Ξ⁻¹` (trapezoid in `s`).
    pub fn volume_weights(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.n_nodes());
        for i in 0..g.n_levels() {
            let hs = if i == 0 || i == g.n_s { 0.5 * g.h() } else { g.h() };
            let r = self.radii[i];
            for (local, w) in self.weights(i).into_iter().enumerate() {
                let (ring, k) = g.ring_angle(local);
                let xi_inv = 1.0 - r * g.x(ring) * self.curvatures[i] * g.theta(k).cos();
                out.push(hs * w * xi_inv);
            }
        }
        out
    }

    /// Discrete `‖f‖_{L²(Ω)}` with [`Self::volume_weights`].
    pub fn volume_norm(&self, values: &[f64]) -> f64 {
        self.volume_weights()
            .iter()
            .zip(values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Discrete `‖g‖_{L²(0,1)}` of a level profile (trapezoid).
    pub fn line_norm(&self, profile: &[f64]) -> f64 {
        let sq: Vec<f64> = profile.iter().map(|v| v * v).collect();
        trapezoid(&sq, self.grid.h()).sqrt()
    }

    /// Nodal error function `E = −2κ r cos θ + κ²(r² cos² θ − m(s))` where
    /// `m(s)` is the discrete section mean of `r² cos² θ` (equal to `R²/4`
    /// up to quadrature), so that every level integrates to zero exactly.
    pub fn error_function(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.n_nodes());
        for i in 0..g.n_levels() {
            let (r, kappa) = (self.radii[i], self.curvatures[i]);
            let w = self.weights(i);
            let x2: Vec<f64> = (0..g.per_level())
                .map(|local| {
                    let (ring, k) = g.ring_angle(local);
                    let z = r * g.x(ring) * g.theta(k).cos();
                    z * z
                })
                .collect();
            let mean = w.iter().zip(&x2).map(|(a, b)| a * b).sum::<f64>() / self.areas[i];
            for local in 0..g.per_level() {
                let (ring, k) = g.ring_angle(local);
                let z = r * g.x(ring) * g.theta(k).cos();
                out.push(-2.0 * kappa * z + kappa * kappa * (x2[local] - mean));
            }
        }
        out
    }

    /// Majorant `(sup A⁻¹ · sup Ξ)^{1/2}` of the norm of the disk average as
    /// a map `L²(Ω) → L²(0,1)`.
    pub fn norm_bound(geom: &TubeGeometry) -> f64 {
        let report = geom.validate();
        let max_eta = report.check("non-folding").map_or(0.0, |c| c.value);
        let (_, min_area) = geom.extremum(16, false, |s| geom.at(s).area);
        (1.0 / (min_area * (1.0 - max_eta))).sqrt()
    }
}
