//! Generalised Webster equation on `s ∈ [0, 1]` with a scattering input at
//! `s = 0`, a Dirichlet end at `s = 1` and wall dissipation.
//!
//! The state is `(ψ, π = ρψ_t)`. Space is discretised with P1 elements,
//! time with the implicit midpoint rule. With
//! `M = ∫ A/(ρ c(s)²) φ_i φ_j`, `K = ∫ ρ A φ_i' φ_j'` and
//! `D = ∫ 2πα W φ_i φ_j` the semi-discrete system is
//!
//! ```text
//! ψ_t = π / ρ
//! M π_t = −K ψ / ρ − (D/ρ) π − (A₀/(ρc₀)) π₀ e₀ + 2 √(A₀/(ρc₀)) ũ e₀ + ρ M f
//! ỹ = ũ − √(A₀/(ρc₀)) π₀
//! ```
//!
//! and the energy `½ψᵀKψ + ½πᵀMπ` obeys, per step and exactly up to
//! round-off, `ΔE/dt = ũ² − ỹ² − π̂ᵀDπ̂/ρ + ρ π̂ᵀ M f̂` with hats denoting
//! midpoint values.

use std::io::Write;
use std::path::Path;

use sprs::CsMat;

use crate::error::SolverError;
use crate::geometry::TubeGeometry;
use crate::linalg::{self, Assembler, Factorization};
use crate::quadrature::gauss_legendre_unit;

/// Discrete state `(ψ, π)` on the free nodes `s_0 … s_{n-1}`; `ψ(s_n) = 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WebsterState {
    pub psi: Vec<f64>,
    pub pi: Vec<f64>,
    pub t: f64,
}

impl WebsterState {
    pub fn zeros(n_free: usize) -> Self {
        Self {
            psi: vec![0.0; n_free],
            pi: vec![0.0; n_free],
            t: 0.0,
        }
    }

    /// `ψ` on every node, including the Dirichlet end.
    pub fn psi_full(&self) -> Vec<f64> {
        let mut v = self.psi.clone();
        v.push(0.0);
        v
    }

    /// `π` on every node, including the Dirichlet end.
    pub fn pi_full(&self) -> Vec<f64> {
        let mut v = self.pi.clone();
        v.push(0.0);
        v
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            psi: self.psi.iter().map(|v| v * factor).collect(),
            pi: self.pi.iter().map(|v| v * factor).collect(),
            t: self.t,
        }
    }
}

/// Assembled P1 matrices on a uniform grid.
#[derive(Clone, Debug)]
pub struct WebsterDiscretization {
    pub nodes: Vec<f64>,
    pub h: f64,
    pub density: f64,
    /// `c(0)`.
    pub inlet_speed: f64,
    /// `A(0)`.
    pub inlet_area: f64,
    /// Free × free, weight `A/(ρc(s)²)`.
    pub mass: CsMat<f64>,
    /// Free × all nodes, same weight; maps nodal loads to free rows.
    pub mass_load: CsMat<f64>,
    /// Free × free, weight `ρA`.
    pub stiffness: CsMat<f64>,
    /// Free × free, weight `2παW`.
    pub damping: CsMat<f64>,
    /// All × all, unit weight; the `L²(0,1)` Gram matrix.
    pub gram_l2: CsMat<f64>,
    /// All × all, unit weight on derivatives.
    pub gram_h1_semi: CsMat<f64>,
    max_speed: f64,
}

impl WebsterDiscretization {
    /// Assembles on the uniform grid with `n_s` elements.
    pub fn assemble(geom: &TubeGeometry, n_s: usize) -> Result<Self, SolverError> {
        if n_s < 2 {
            return Err(SolverError::GridTooCoarse(format!("n_s = {n_s} < 2")));
        }
        let n = n_s + 1;
        let h = 1.0 / n_s as f64;
        let rho = geom.density();
        let alpha = geom.wall_dissipation();
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        for (i, &s) in nodes.iter().enumerate() {
            let area = geom.at(s).area;
            if !(area > 0.0) {
                return Err(SolverError::SingularMass { area, node: i });
            }
        }
        let gauss = gauss_legendre_unit(3);
        let free = n - 1;
        let mut mass = Assembler::new(free);
        let mut mass_load = Assembler::with_shape(free, n);
        let mut stiff = Assembler::new(free);
        let mut damp = Assembler::new(free);
        let mut l2 = Assembler::new(n);
        let mut h1 = Assembler::new(n);
        let mut max_speed: f64 = 0.0;
        for e in 0..n_s {
            let mut me = [[0.0; 2]; 2];
            let mut ke = [[0.0; 2]; 2];
            let mut de = [[0.0; 2]; 2];
            for &(xi, w) in &gauss {
                let c = geom.at(nodes[e] + xi * h);
                max_speed = max_speed.max(c.local_speed);
                let phi = [1.0 - xi, xi];
                let dphi = [-1.0 / h, 1.0 / h];
                let m_w = c.area / (rho * c.local_speed * c.local_speed);
                for a in 0..2 {
                    for b in 0..2 {
                        me[a][b] += w * h * m_w * phi[a] * phi[b];
                        ke[a][b] += w * h * rho * c.area * dphi[a] * dphi[b];
                        de[a][b] += w * h * 2.0 * std::f64::consts::PI * alpha * c.stretching
                            * phi[a]
                            * phi[b];
                    }
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    let (i, j) = (e + a, e + b);
                    let mass_1 = if a == b { h / 3.0 } else { h / 6.0 };
                    let stiff_1 = if a == b { 1.0 / h } else { -1.0 / h };
                    l2.add(i, j, mass_1);
                    h1.add(i, j, stiff_1);
                    if i < free {
                        mass_load.add(i, j, me[a][b]);
                    }
                    if i < free && j < free {
                        mass.add(i, j, me[a][b]);
                        stiff.add(i, j, ke[a][b]);
                        damp.add(i, j, de[a][b]);
                    }
                }
            }
        }
        let inlet = geom.at(0.0);
        Ok(Self {
            nodes,
            h,
            density: rho,
            inlet_speed: inlet.local_speed,
            inlet_area: inlet.area,
            mass: mass.finish(),
            mass_load: mass_load.finish(),
            stiffness: stiff.finish(),
            damping: damp.finish(),
            gram_l2: l2.finish(),
            gram_h1_semi: h1.finish(),
            max_speed,
        })
    }

    pub fn n_free(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `dt = h / (2 max c(s))`.
    pub fn default_dt(&self) -> f64 {
        self.h / (2.0 * self.max_speed)
    }

    /// `√(A₀/(ρc₀))`, the gain between `π(0)` and the scattering signals.
    pub fn port_gain(&self) -> f64 {
        (self.inlet_area / (self.density * self.inlet_speed)).sqrt()
    }

    /// `‖x‖² = ½ψᵀKψ + ½πᵀMπ`.
    pub fn energy(&self, state: &WebsterState) -> f64 {
        0.5 * linalg::quad_form(&self.stiffness, &state.psi)
            + 0.5 * linalg::quad_form(&self.mass, &state.pi)
    }

    /// `ũ` implied by a state, `½ √(A₀/(ρc₀)) (−ρc₀ψ'(0) + π(0))`, with a
    /// one-sided difference for `ψ'(0)`.
    pub fn implied_input(&self, state: &WebsterState) -> f64 {
        let psi = state.psi_full();
        let slope = (psi[1] - psi[0]) / self.h;
        0.5 * self.port_gain() * (-self.density * self.inlet_speed * slope + state.pi[0])
    }

    /// `‖g‖²_{L²(0,1)}` of a nodal function on all nodes.
    pub fn l2_norm_sq(&self, g: &[f64]) -> f64 {
        linalg::quad_form(&self.gram_l2, g)
    }

    /// `‖g‖²_{H¹(0,1)}` of a nodal function on all nodes.
    pub fn h1_norm_sq(&self, g: &[f64]) -> f64 {
        linalg::quad_form(&self.gram_l2, g) + linalg::quad_form(&self.gram_h1_semi, g)
    }

    /// Builds a stepper with a fixed time step; the system matrix is
    /// factored once.
    pub fn stepper(&self, dt: f64) -> Result<WebsterStepper<'_>, SolverError> {
        WebsterStepper::new(self, dt)
    }

    /// One implicit-midpoint step. Factors the system on every call; use
    /// [`WebsterDiscretization::stepper`] for repeated steps.
    pub fn step(
        &self,
        state: &WebsterState,
        input: f64,
        load: Option<&[f64]>,
        dt: f64,
    ) -> Result<(WebsterState, f64), SolverError> {
        let stepper = self.stepper(dt)?;
        let mut next = state.clone();
        let report = stepper.step(&mut next, input, load)?;
        Ok((next, report.output))
    }

    /// Integrates to `t_end` with `dt` (rounded so the steps tile
    /// `[0, t_end]`). `input` is sampled at step midpoints; `load`, if
    /// given, fills the nodal load at the requested time.
    pub fn solve(
        &self,
        x0: &WebsterState,
        t_end: f64,
        dt: f64,
        input: &dyn Fn(f64) -> f64,
        mut load: Option<&mut dyn FnMut(f64, &mut [f64])>,
        snapshot_stride: usize,
    ) -> Result<WebsterRun, SolverError> {
        if !(dt > 0.0) || !(t_end >= 0.0) {
            return Err(SolverError::InvalidTimeStep(dt));
        }
        let n_steps = (t_end / dt).round().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
        let dt = if n_steps > 0 { t_end / n_steps as f64 } else { dt };
        let stepper = self.stepper(dt)?;
        let mut state = x0.clone();
        let mut run = WebsterRun {
            dt,
            times: vec![state.t],
            energy: vec![self.energy(&state)],
            compatibility_gap: (input(x0.t) - self.implied_input(x0)).abs(),
            snapshots: vec![state.clone()],
            ..Default::default()
        };
        let mut f_mid = vec![0.0; self.n_nodes()];
        for k in 0..n_steps {
            let t_mid = x0.t + (k as f64 + 0.5) * dt;
            let u = input(t_mid);
            let report = match load.as_deref_mut() {
                Some(fill) => {
                    f_mid.iter_mut().for_each(|v| *v = 0.0);
                    fill(t_mid, &mut f_mid);
                    stepper.step(&mut state, u, Some(&f_mid))?
                }
                None => stepper.step(&mut state, u, None)?,
            };
            run.times.push(state.t);
            run.input.push(u);
            run.output.push(report.output);
            run.energy.push(report.energy_after);
            run.balance_residual.push(report.balance_residual);
            run.load_power.push(report.load_power);
            run.dissipation.push(report.dissipation);
            run.load_norm_sq.push(if load.is_some() {
                self.l2_norm_sq(&f_mid)
            } else {
                0.0
            });
            if snapshot_stride > 0 && (k + 1) % snapshot_stride == 0 {
                run.snapshots.push(state.clone());
            }
        }
        run.final_state = state;
        Ok(run)
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// `ỹ` at the step midpoint.
    pub output: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `π̂ᵀDπ̂/ρ ≥ 0`.
    pub dissipation: f64,
    /// `ρ π̂ᵀ M f̂`, i.e. `2ρ⟨x̂, (0, f̂)⟩`.
    pub load_power: f64,
    /// `ΔE/dt − (ũ² − ỹ² − dissipation + load_power)`.
    pub balance_residual: f64,
}

/// Implicit-midpoint stepper with a fixed `dt` and a reused factorization.
#[derive(Debug)]
pub struct WebsterStepper<'a> {
    disc: &'a WebsterDiscretization,
    dt: f64,
    factor: Factorization,
}

impl<'a> WebsterStepper<'a> {
    fn new(disc: &'a WebsterDiscretization, dt: f64) -> Result<Self, SolverError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolverError::InvalidTimeStep(dt));
        }
        let rho = disc.density;
        let mut port = Assembler::new(disc.n_free());
        port.add(0, 0, disc.inlet_area / (rho * disc.inlet_speed));
        let port = port.finish();
        let damping_total = linalg::linear_combination(&[(1.0 / rho, &disc.damping), (1.0, &port)]);
        let system = linalg::linear_combination(&[
            (2.0, &disc.mass),
            (dt * dt / (2.0 * rho * rho), &disc.stiffness),
            (dt, &damping_total),
        ]);
        let factor = Factorization::new(&system)?;
        Ok(Self { disc, dt, factor })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` by one step with midpoint input `input` and
    /// midpoint nodal load `load` (all nodes).
    pub fn step(
        &self,
        state: &mut WebsterState,
        input: f64,
        load: Option<&[f64]>,
    ) -> Result<StepReport, SolverError> {
        let d = self.disc;
        let (dt, rho) = (self.dt, d.density);
        let gain = d.port_gain();
        let energy_before = d.energy(state);
        let mut forcing = vec![0.0; d.n_free()];
        forcing[0] += 2.0 * gain * input;
        if let Some(f) = load {
            if f.len() != d.n_nodes() {
                return Err(SolverError::GridMismatch(format!(
                    "load has {} entries, grid has {} nodes",
                    f.len(),
                    d.n_nodes()
                )));
            }
            let mf = linalg::matvec(&d.mass_load, f);
            forcing.iter_mut().zip(&mf).for_each(|(r, v)| *r += rho * v);
        }
        let k_psi = linalg::matvec(&d.stiffness, &state.psi);
        let m_pi = linalg::matvec(&d.mass, &state.pi);
        let rhs: Vec<f64> = (0..d.n_free())
            .map(|i| 2.0 * m_pi[i] + dt * (-k_psi[i] / rho + forcing[i]))
            .collect();
        let pi_mid = self.factor.solve(&rhs)?;
        for i in 0..d.n_free() {
            state.psi[i] += dt / rho * pi_mid[i];
            state.pi[i] = 2.0 * pi_mid[i] - state.pi[i];
        }
        state.t += dt;
        let output = input - gain * pi_mid[0];
        let energy_after = d.energy(state);
        let dissipation = linalg::quad_form(&d.damping, &pi_mid) / rho;
        let load_power = match load {
            Some(f) => rho * linalg::dot(&pi_mid, &linalg::matvec(&d.mass_load, f)),
            None => 0.0,
        };
        let balance_residual = (energy_after - energy_before) / dt
            - (input * input - output * output - dissipation + load_power);
        Ok(StepReport {
            output,
            energy_before,
            energy_after,
            dissipation,
            load_power,
            balance_residual,
        })
    }
}

/// Trajectory of a Webster run. Step-indexed vectors hold midpoint values.
#[derive(Clone, Debug, Default)]
pub struct WebsterRun {
    pub dt: f64,
    /// `t_0 … t_N`.
    pub times: Vec<f64>,
    /// `ũ` at step midpoints.
    pub input: Vec<f64>,
    /// `ỹ` at step midpoints.
    pub output: Vec<f64>,
    /// Energy at `t_0 … t_N`.
    pub energy: Vec<f64>,
    pub balance_residual: Vec<f64>,
    pub load_power: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// `‖f̂‖²_{L²(0,1)}` per step.
    pub load_norm_sq: Vec<f64>,
    /// `|ũ(0) − G_w x₀|`; nonzero means the initial state is incompatible.
    pub compatibility_gap: f64,
    pub snapshots: Vec<WebsterState>,
    pub final_state: WebsterState,
}

impl WebsterRun {
    /// `Σ dt ỹ²`.
    pub fn output_energy(&self) -> f64 {
        self.dt * self.output.iter().map(|y| y * y).sum::<f64>()
    }

    /// `Σ dt (ũ² + ‖f̂‖²)`.
    pub fn input_energy(&self) -> f64 {
        self.dt
            * self
                .input
                .iter()
                .zip(&self.load_norm_sq)
                .map(|(u, f)| u * u + f)
                .sum::<f64>()
    }

    /// Columns `t, u, y, energy, balance_residual`; one row per step with
    /// `t` the step end time.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "u", "y", "energy", "balance_residual"])?;
        for k in 0..self.output.len() {
            w.write_record(&[
                format!("{:.17e}", self.times[k + 1]),
                format!("{:.17e}", self.input[k]),
                format!("{:.17e}", self.output[k]),
                format!("{:.17e}", self.energy[k + 1]),
                format!("{:.17e}", self.balance_residual[k]),
            ])?;
        }
        w.flush()
    }

    /// Snapshot export: one row per stored state, columns `t` then
    /// `psi_0 … psi_n, pi_0 … pi_n`.
    pub fn write_snapshots_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for snap in &self.snapshots {
            write!(file, "{:.17e}", snap.t)?;
            for v in snap.psi_full().iter().chain(snap.pi_full().iter()) {
                write!(file, ",{v:.17e}")?;
            }
            writeln!(file)?;
        }
        file.flush()
    }
}
