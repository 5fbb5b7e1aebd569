//! Scalar input signals for the scattering port. Every signal vanishes
//! together with its first two derivatives at `t = 0`, so zero initial
//! states are compatible with it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Signal {
    /// Gaussian `a·exp(−((t − t₀)/σ)²)` switched on by a C² ramp over
    /// `[0, ramp]`.
    GaussianPulse {
        amplitude: f64,
        center: f64,
        width: f64,
        #[serde(default)]
        ramp: Option<f64>,
    },
    /// `a·sin(2πf(t − t₀))` under a Gaussian envelope of width `σ`,
    /// switched on like [`Signal::GaussianPulse`].
    ToneBurst {
        amplitude: f64,
        frequency: f64,
        center: f64,
        width: f64,
        #[serde(default)]
        ramp: Option<f64>,
    },
    /// `a·sin⁴(π(t − t₀)/τ)` on `[t₀, t₀ + τ]`, zero elsewhere (C³).
    Sin4Bump {
        amplitude: f64,
        start: f64,
        duration: f64,
    },
    Zero,
}

/// Quintic smoothstep: 0 → 1 on `[0, 1]` with vanishing first and second
/// derivatives at both ends.
fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
    }
}

impl Signal {
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        Signal::GaussianPulse {
            amplitude,
            center,
            width,
            ramp: None,
        }
    }

    fn window(t: f64, center: f64, ramp: Option<f64>) -> f64 {
        let ramp = ramp.unwrap_or(center);
        if ramp > 0.0 {
            smoothstep(t / ramp)
        } else {
            1.0
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Signal::GaussianPulse {
                amplitude,
                center,
                width,
                ramp,
            } => {
                let z = (t - center) / width;
                amplitude * (-z * z).exp() * Self::window(t, center, ramp)
            }
            Signal::ToneBurst {
                amplitude,
                frequency,
                center,
                width,
                ramp,
            } => {
                let z = (t - center) / width;
                amplitude
                    * (2.0 * PI * frequency * (t - center)).sin()
                    * (-z * z).exp()
                    * Self::window(t, center, ramp)
            }
            Signal::Sin4Bump {
                amplitude,
                start,
                duration,
            } => {
                if t <= start || t >= start + duration {
                    0.0
                } else {
                    amplitude * (PI * (t - start) / duration).sin().powi(4)
                }
            }
            Signal::Zero => 0.0,
        }
    }
}

/// Input on the inlet disk: `u(t, x, θ) = g(t)·(1 + tilt·x cos θ + radial·(2x² − 1))`
/// with `x = r/R(0)`. Both shape terms have zero disk mean, so the averaged
/// input is `g(t)` up to quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InletDrive {
    pub signal: Signal,
    #[serde(default)]
    pub tilt: f64,
    #[serde(default)]
    pub radial: f64,
}

impl InletDrive {
    pub fn planar(signal: Signal) -> Self {
        Self {
            signal,
            tilt: 0.0,
            radial: 0.0,
        }
    }

    pub fn is_planar(&self) -> bool {
        self.tilt == 0.0 && self.radial == 0.0
    }

    pub fn shape(&self, x: f64, theta: f64) -> f64 {
        1.0 + self.tilt * x * theta.cos() + self.radial * (2.0 * x * x - 1.0)
    }

    pub fn eval(&self, t: f64, x: f64, theta: f64) -> f64 {
        self.signal.eval(t) * self.shape(x, theta)
    }
}
