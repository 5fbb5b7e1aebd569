//! Runs the 3D wave model and the Webster model side by side on a shared
//! time grid, driven by the same inlet signal.
//!
//! The forcing is evaluated at every time level from the 3D state; when
//! injected, the Webster load on a step is the mean of the loads at its two
//! ends.

use crate::error::SolverError;
use crate::forcing::{ForcingEvaluator, ForcingRecord, ForcingTerms};
use crate::geometry::TubeGeometry;
use crate::signals::InletDrive;
use crate::wave3d::{WaveDiscretization, WaveField, WaveGrid};
use crate::webster1d::{WebsterDiscretization, WebsterState};

/// Everything known at one time level.
pub struct TimeLevel<'a> {
    pub index: usize,
    pub t: f64,
    pub field: &'a WaveField,
    pub laplacian: &'a [f64],
    pub forcing: &'a ForcingTerms,
    pub webster: &'a WebsterState,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Feed `f = −c²(F + G + H)` into the Webster model.
    pub inject_forcing: bool,
}

/// Signals and errors of a coupled run. Step-indexed vectors hold midpoint
/// values.
#[derive(Clone, Debug, Default)]
pub struct CoupledRun {
    pub dt: f64,
    pub times: Vec<f64>,
    /// Averaged input `ū`.
    pub input: Vec<f64>,
    /// Webster output `ỹ`.
    pub webster_output: Vec<f64>,
    /// Averaged wave output `ȳ`.
    pub wave_output: Vec<f64>,
    pub wave_energy: Vec<f64>,
    pub webster_energy: Vec<f64>,
    pub wave_balance_residual: Vec<f64>,
    pub webster_balance_residual: Vec<f64>,
    pub forcing: ForcingRecord,
    /// `ψ − 𝒜φ` on every level at each time level.
    pub error_h1: Vec<f64>,
    /// `‖ψ_t − 𝒜φ_t‖_{L²(0,1)}` at each time level.
    pub error_rate_l2: Vec<f64>,
    pub final_field: WaveField,
    pub final_webster: WebsterState,
    /// `𝒜φ(T)` and `𝒜φ_t(T)` on every level.
    pub final_average: (Vec<f64>, Vec<f64>),
}

impl CoupledRun {
    /// `‖ỹ − ȳ‖_{L²(0,T)}` (midpoint rule).
    pub fn output_gap(&self) -> f64 {
        self.webster_output
            .iter()
            .zip(&self.wave_output)
            .map(|(a, b)| (a - b).powi(2) * self.dt)
            .sum::<f64>()
            .sqrt()
    }

    /// Left-hand side of the tracking-error estimate at the final time.
    pub fn tracking_error(&self) -> f64 {
        self.error_h1.last().copied().unwrap_or(0.0)
            + self.error_rate_l2.last().copied().unwrap_or(0.0)
            + self.output_gap()
    }

    /// The three pieces `(‖e(T)‖_{H¹}, ‖e_t(T)‖_{L²}, ‖ỹ − ȳ‖_{L²(0,T)})`.
    pub fn tracking_pieces(&self) -> (f64, f64, f64) {
        (
            self.error_h1.last().copied().unwrap_or(0.0),
            self.error_rate_l2.last().copied().unwrap_or(0.0),
            self.output_gap(),
        )
    }
}

/// Both discretizations on one geometry.
pub struct CoupledModel {
    pub wave: WaveDiscretization,
    pub webster: WebsterDiscretization,
}

impl CoupledModel {
    pub fn new(geom: &TubeGeometry, grid: WaveGrid) -> Result<Self, SolverError> {
        Ok(Self {
            wave: WaveDiscretization::assemble(geom, grid)?,
            webster: WebsterDiscretization::assemble(geom, grid.n_s)?,
        })
    }

    /// Runs from rest. `observe` sees every time level, including `t = 0`.
    pub fn run(
        &self,
        drive: &InletDrive,
        opts: CouplingOptions,
        mut observe: impl FnMut(&TimeLevel<'_>),
    ) -> Result<CoupledRun, SolverError> {
        if !(opts.dt > 0.0) || !(opts.t_end > 0.0) {
            return Err(SolverError::InvalidTimeStep(opts.dt));
        }
        let n_steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
        let dt = opts.t_end / n_steps as f64;
        let wave_step = self.wave.stepper(dt)?;
        let web_step = self.webster.stepper(dt)?;
        let eval = ForcingEvaluator::new(&self.wave);
        let avg = eval.averager();
        let grid = self.wave.grid;

        let mut field = WaveField::zeros(&grid);
        let mut psi = WebsterState::zeros(self.webster.n_free());
        let mut run = CoupledRun {
            dt,
            ..Default::default()
        };

        let mut level_data = |field: &WaveField,
                              psi: &WebsterState,
                              index: usize,
                              run: &mut CoupledRun|
         -> Result<ForcingTerms, SolverError> {
            let u = self.wave.inlet_values(drive, field.t);
            let lap = self.wave.laplacian_of(field, &u)?;
            let terms = eval.evaluate_with_laplacian(field, &lap);
            run.forcing.push(avg, &terms);
            run.times.push(field.t);
            run.wave_energy.push(self.wave.energy(field));
            run.webster_energy.push(self.webster.energy(psi));
            let phi_bar = avg.avg_section(&field.phi);
            let phi_bar_t = avg.avg_section(&field.phi_t);
            let e: Vec<f64> = psi.psi_full().iter().zip(&phi_bar).map(|(a, b)| a - b).collect();
            let rho = self.webster.density;
            let e_t: Vec<f64> = psi
                .pi_full()
                .iter()
                .zip(&phi_bar_t)
                .map(|(p, b)| p / rho - b)
                .collect();
            run.error_h1.push(self.webster.h1_norm_sq(&e).sqrt());
            run.error_rate_l2.push(self.webster.l2_norm_sq(&e_t).sqrt());
            observe(&TimeLevel {
                index,
                t: field.t,
                field,
                laplacian: &lap,
                forcing: &terms,
                webster: psi,
            });
            Ok(terms)
        };

        let mut current = level_data(&field, &psi, 0, &mut run)?;
        for k in 0..n_steps {
            let t_mid = (k as f64 + 0.5) * dt;
            let u_mid = self.wave.inlet_values(drive, t_mid);
            let ubar = avg.avg_input(&u_mid);
            let wave_report = wave_step.step(&mut field, &u_mid)?;
            // The load at the far end of the step needs the new 3D state only.
            let next_terms = if opts.inject_forcing {
                let u_next = self.wave.inlet_values(drive, field.t);
                let lap = self.wave.laplacian_of(&field, &u_next)?;
                Some(eval.evaluate_with_laplacian(&field, &lap))
            } else {
                None
            };
            let web_report = match &next_terms {
                Some(next) => {
                    let load: Vec<f64> = current
                        .load
                        .iter()
                        .zip(&next.load)
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect();
                    web_step.step(&mut psi, ubar, Some(&load))?
                }
                None => web_step.step(&mut psi, ubar, None)?,
            };
            run.input.push(ubar);
            run.webster_output.push(web_report.output);
            run.wave_output.push(avg.avg_input(&wave_report.output));
            run.wave_balance_residual.push(wave_report.balance_residual);
            run.webster_balance_residual.push(web_report.balance_residual);
            current = level_data(&field, &psi, k + 1, &mut run)?;
        }
        run.final_average = (avg.avg_section(&field.phi), avg.avg_section(&field.phi_t));
        run.final_field = field;
        run.final_webster = psi;
        Ok(run)
    }
}
