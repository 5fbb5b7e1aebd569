//! Forcing terms that turn the cross-sectional average of a 3D wave field
//! into an exact solution of the loaded Webster equation.
//!
//! With `gap = 𝒜φ − ℬφ`, the three terms are
//!
//! ```text
//! F = −(1/A) ∂_s (A' · gap)
//! G = −(2παW/A) · gap_t
//! H = (1/A)∫ Ξ⁻¹ ∇(Ξ⁻¹)·∇φ dA + (1/A)∫ E Δφ dA − (αWη/A) ∫ φ_t(R, θ) cos θ dθ
//! ```
//!
//! and the Webster load is `f = −c(s)² (F + G + H)`.

use serde::Serialize;

use crate::averaging::SectionAverager;
use crate::error::SolverError;
use crate::wave3d::{Gradient, WaveDiscretization, WaveField};

/// Forcing on the `s`-levels at one instant.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ForcingTerms {
    pub t: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Sum of the three parts below.
    pub h: Vec<f64>,
    /// Metric-gradient part of `H`.
    pub h_gradient: Vec<f64>,
    /// Error-function part of `H`.
    pub h_error: Vec<f64>,
    /// Wall part of `H`.
    pub h_wall: Vec<f64>,
    /// Webster load `−c(s)²(F + G + H)`.
    pub load: Vec<f64>,
}

impl ForcingTerms {
    pub fn total(&self) -> Vec<f64> {
        (0..self.f.len())
            .map(|i| self.f[i] + self.g[i] + self.h[i])
            .collect()
    }
}

/// Precomputed data for evaluating the forcing on one discretization.
#[derive(Clone, Debug)]
pub struct ForcingEvaluator<'a> {
    disc: &'a WaveDiscretization,
    avg: SectionAverager,
    err_fn: Vec<f64>,
}

impl<'a> ForcingEvaluator<'a> {
    pub fn new(disc: &'a WaveDiscretization) -> Self {
        let avg = SectionAverager::new(disc);
        let err_fn = avg.error_function();
        Self { disc, avg, err_fn }
    }

    pub fn averager(&self) -> &SectionAverager {
        &self.avg
    }

    pub fn discretization(&self) -> &WaveDiscretization {
        self.disc
    }

    /// Nodal error function `E` (zero section means).
    pub fn error_function(&self) -> &[f64] {
        &self.err_fn
    }

    /// `F = −(1/A) ∂_s(A' · gap)`, centred differences inside and
    /// second-order one-sided ones at the ends.
    pub fn compute_f(&self, phi: &[f64]) -> Vec<f64> {
        let gap = self.avg.gap(phi);
        let levels = &self.disc.levels;
        let q: Vec<f64> = gap.iter().zip(levels).map(|(g, l)| l.area_d1 * g).collect();
        let n = q.len() - 1;
        let h = self.disc.grid.h();
        (0..=n)
            .map(|i| {
                let dq = if i == 0 {
                    (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h)
                } else if i == n {
                    (3.0 * q[n] - 4.0 * q[n - 1] + q[n - 2]) / (2.0 * h)
                } else {
                    (q[i + 1] - q[i - 1]) / (2.0 * h)
                };
                -dq / levels[i].area
            })
            .collect()
    }

    /// `G = −(2παW/A)(𝒜φ_t − ℬφ_t)`.
    pub fn compute_g(&self, phi_t: &[f64]) -> Vec<f64> {
        let alpha = self.disc.wall_dissipation;
        self.avg
            .gap(phi_t)
            .into_iter()
            .zip(&self.disc.levels)
            .map(|(g, l)| -2.0 * std::f64::consts::PI * alpha * l.stretching / l.area * g)
            .collect()
    }

    /// `∇(Ξ⁻¹)` in the orthonormal frame at `(x, θ)` on a level.
    fn metric_gradient(&self, level: usize, x: f64, theta: f64) -> (f64, Gradient) {
        let l = &self.disc.levels[level];
        let r = l.radius * x;
        let (c, s) = (theta.cos(), theta.sin());
        let xi_inv = 1.0 - r * l.curvature * c;
        (
            xi_inv,
            [-r * l.curvature_d1 * c / xi_inv, -l.curvature * c, l.curvature * s],
        )
    }

    /// `(1/A)∫ Ξ⁻¹ ∇(Ξ⁻¹)·∇φ dA` on every level.
    pub fn compute_h_gradient(&self, phi: &[f64]) -> Vec<f64> {
        let phi_s = self.disc.s_derivative(phi);
        (0..self.disc.grid.n_levels())
            .map(|i| {
                let l = &self.disc.levels[i];
                if l.curvature == 0.0 && l.curvature_d1 == 0.0 {
                    return 0.0;
                }
                self.disc.section_integral(i, phi, &phi_s, |x, th, _, grad| {
                    let (xi_inv, gm) = self.metric_gradient(i, x, th);
                    xi_inv * (gm[0] * grad[0] + gm[1] * grad[1] + gm[2] * grad[2])
                }) / l.area
            })
            .collect()
    }

    /// `(1/A)∫ E Δφ dA` on every level.
    pub fn compute_h_error(&self, laplacian: &[f64]) -> Vec<f64> {
        let prod: Vec<f64> = self.err_fn.iter().zip(laplacian).map(|(e, d)| e * d).collect();
        self.avg.avg_section(&prod)
    }

    /// `−(αWη/A)∫ φ_t(R, θ) cos θ dθ` on every level.
    pub fn compute_h_wall(&self, phi_t: &[f64]) -> Vec<f64> {
        let g = &self.disc.grid;
        let alpha = self.disc.wall_dissipation;
        let m = g.per_level();
        (0..g.n_levels())
            .map(|i| {
                let l = &self.disc.levels[i];
                let ring: f64 = (0..g.n_theta)
                    .map(|k| phi_t[i * m + g.local(g.n_r, k)] * g.theta(k).cos())
                    .sum::<f64>()
                    * g.dtheta();
                -alpha * l.stretching * l.curvature_ratio / l.area * ring
            })
            .collect()
    }

    /// All terms for a field and the inlet values at the same instant.
    pub fn evaluate(
        &self,
        field: &WaveField,
        inlet_values: &[f64],
    ) -> Result<ForcingTerms, SolverError> {
        let lap = self.disc.laplacian_of(field, inlet_values)?;
        Ok(self.evaluate_with_laplacian(field, &lap))
    }

    pub fn evaluate_with_laplacian(&self, field: &WaveField, laplacian: &[f64]) -> ForcingTerms {
        let f = self.compute_f(&field.phi);
        let g = self.compute_g(&field.phi_t);
        let h_gradient = self.compute_h_gradient(&field.phi);
        let h_error = self.compute_h_error(laplacian);
        let h_wall = self.compute_h_wall(&field.phi_t);
        let h: Vec<f64> = (0..f.len())
            .map(|i| h_gradient[i] + h_error[i] + h_wall[i])
            .collect();
        let load = (0..f.len())
            .map(|i| {
                let c = self.disc.levels[i].local_speed;
                -c * c * (f[i] + g[i] + h[i])
            })
            .collect();
        ForcingTerms {
            t: field.t,
            f,
            g,
            h,
            h_gradient,
            h_error,
            h_wall,
            load,
        }
    }
}

/// Time history of the forcing with running `L²((0,T)×(0,1))` norms.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ForcingRecord {
    pub times: Vec<f64>,
    pub norm_f: Vec<f64>,
    pub norm_g: Vec<f64>,
    pub norm_h: Vec<f64>,
    /// `‖F + G + H‖_{L²(0,1)}` per sample.
    pub norm_total: Vec<f64>,
    /// `‖f‖_{L²(0,1)}` of the Webster load per sample.
    pub norm_load: Vec<f64>,
}

impl ForcingRecord {
    pub fn push(&mut self, avg: &SectionAverager, terms: &ForcingTerms) {
        self.times.push(terms.t);
        self.norm_f.push(avg.line_norm(&terms.f));
        self.norm_g.push(avg.line_norm(&terms.g));
        self.norm_h.push(avg.line_norm(&terms.h));
        self.norm_total.push(avg.line_norm(&terms.total()));
        self.norm_load.push(avg.line_norm(&terms.load));
    }

    fn time_norm(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 1..self.times.len() {
            let dt = self.times[k] - self.times[k - 1];
            acc += 0.5 * dt * (values[k - 1].powi(2) + values[k].powi(2));
        }
        acc.sqrt()
    }

    /// `‖F + G + H‖_{L²((0,T)×(0,1))}` (trapezoid in time).
    pub fn total_norm(&self) -> f64 {
        self.time_norm(&self.norm_total)
    }

    /// `‖f‖_{L²((0,T)×(0,1))}` of the Webster load.
    pub fn load_norm(&self) -> f64 {
        self.time_norm(&self.norm_load)
    }

    /// Load norm over the samples with `t ≤ t_end`.
    pub fn load_norm_until(&self, t_end: f64) -> f64 {
        let n = self.times.partition_point(|&t| t <= t_end + 1e-12);
        let head = ForcingRecord {
            times: self.times[..n].to_vec(),
            norm_load: self.norm_load[..n].to_vec(),
            ..Default::default()
        };
        head.load_norm()
    }

    pub fn max_norms(&self) -> (f64, f64, f64) {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        (max(&self.norm_f), max(&self.norm_g), max(&self.norm_h))
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "norm_F", "norm_G", "norm_H", "norm_FGH", "norm_load"])?;
        for k in 0..self.times.len() {
            w.write_record(
                [
                    self.times[k],
                    self.norm_f[k],
                    self.norm_g[k],
                    self.norm_h[k],
                    self.norm_total[k],
                    self.norm_load[k],
                ]
                .iter()
                .map(|v| format!("{v:.17e}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}
