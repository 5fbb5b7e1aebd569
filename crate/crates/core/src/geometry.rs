//! Tube geometry: centerline curvature and radius profiles, and every
//! coefficient derived from them.
//!
//! Arc length is normalised to `s ∈ [0, 1]`. Cross sections are disks of
//! radius `R(s)`; a point inside the tube is addressed by `(s, r, θ)` with
//! `θ` measured from the principal normal of the (planar) centerline.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::quadrature::gauss_legendre_unit;

/// Tolerance for the control-end conditions `A'(0) = κ(0) = 0`, applied
/// after scaling by `max A` and `max |κ|` respectively.
pub const CONTROL_END_TOL: f64 = 1e-12;

/// A scalar profile on `[0, 1]` with up to two analytic derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `Σ c_k s^k`, lowest order first.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `offset + amplitude · cos(π · frequency · s + phase)`.
    Cosine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Interpolating cubic spline. An end slope of `None` means a natural
    /// (zero second derivative) end condition.
    Spline {
        knots: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        start_slope: Option<f64>,
        #[serde(default)]
        end_slope: Option<f64>,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Profile::Polynomial { coefficients }
    }

    pub fn cosine(offset: f64, amplitude: f64, frequency: f64) -> Self {
        Profile::Cosine {
            offset,
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    fn compile(&self) -> Result<CompiledProfile, GeometryError> {
        match self {
            Profile::Spline {
                knots,
                values,
                start_slope,
                end_slope,
            } => Ok(CompiledProfile::Spline(CubicSpline::new(
                knots,
                values,
                *start_slope,
                *end_slope,
            )?)),
            Profile::Polynomial { coefficients } if coefficients.is_empty() => Err(
                GeometryError::InvalidProfile("polynomial needs at least one coefficient".into()),
            ),
            other => Ok(CompiledProfile::Closed(other.clone())),
        }
    }
}

/// Value and first two derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Clone, Debug)]
enum CompiledProfile {
    Closed(Profile),
    Spline(CubicSpline),
}

impl CompiledProfile {
    fn jet(&self, s: f64) -> Jet {
        match self {
            CompiledProfile::Spline(sp) => sp.jet(s),
            CompiledProfile::Closed(p) => match p {
                Profile::Constant { value } => Jet {
                    value: *value,
                    d1: 0.0,
                    d2: 0.0,
                },
                Profile::Polynomial { coefficients } => {
                    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                    for &c in coefficients.iter().rev() {
                        d2 = d2 * s + 2.0 * d1;
                        d1 = d1 * s + v;
                        v = v * s + c;
                    }
                    Jet { value: v, d1, d2 }
                }
                Profile::Cosine {
                    offset,
                    amplitude,
                    frequency,
                    phase,
                } => {
                    let w = PI * frequency;
                    let arg = w * s + phase;
                    Jet {
                        value: offset + amplitude * arg.cos(),
                        d1: -amplitude * w * arg.sin(),
                        d2: -amplitude * w * w * arg.cos(),
                    }
                }
                Profile::Spline { .. } => unreachable!("splines are compiled separately"),
            },
        }
    }
}

/// C² cubic spline through `(knots, values)`.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    moments: Vec<f64>,
}

impl CubicSpline {
    pub fn new(
        knots: &[f64],
        values: &[f64],
        start_slope: Option<f64>,
        end_slope: Option<f64>,
    ) -> Result<Self, GeometryError> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(GeometryError::InvalidProfile(
                "spline needs at least two knots and one value per knot".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::InvalidProfile(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        match start_slope {
            Some(slope) => {
                a[(0, 0)] = h[0] / 3.0;
                a[(0, 1)] = h[0] / 6.0;
                rhs[0] = (values[1] - values[0]) / h[0] - slope;
            }
            None => a[(0, 0)] = 1.0,
        }
        for i in 1..n - 1 {
            a[(i, i - 1)] = h[i - 1] / 6.0;
            a[(i, i)] = (h[i - 1] + h[i]) / 3.0;
            a[(i, i + 1)] = h[i] / 6.0;
            rhs[i] = (values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1];
        }
        match end_slope {
            Some(slope) => {
                let m = n - 1;
                a[(m, m - 1)] = h[m - 1] / 6.0;
                a[(m, m)] = h[m - 1] / 3.0;
                rhs[m] = slope - (values[m] - values[m - 1]) / h[m - 1];
            }
            None => a[(n - 1, n - 1)] = 1.0,
        }
        let moments = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| GeometryError::InvalidProfile("singular spline system".into()))?;
        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            moments: moments.iter().copied().collect(),
        })
    }

    pub fn jet(&self, s: f64) -> Jet {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= s) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let h = x1 - x0;
        let a = (x1 - s) / h;
        let b = (s - x0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2 = a * m0 + b * m1;
        Jet { value, d1, d2 }
    }
}

/// User-facing description of a tube and the medium inside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub curvature: Profile,
    pub radius: Profile,
    pub sound_speed: f64,
    pub density: f64,
    #[serde(default)]
    pub wall_dissipation: f64,
}

impl TubeSpec {
    /// Straight circular cylinder of radius `radius`.
    pub fn straight_cylinder(radius: f64) -> Self {
        Self {
            curvature: Profile::constant(0.0),
            radius: Profile::constant(radius),
            sound_speed: 1.0,
            density: 1.0,
            wall_dissipation: 0.0,
        }
    }

    /// Straight tube whose radius grows from `r0` to `r1` along a half cosine.
    /// The area is flat at both ends.
    pub fn cosine_horn(r0: f64, r1: f64) -> Self {
        Self {
            curvature: Profile::constant(0.0),
            radius: Profile::cosine(0.5 * (r0 + r1), -0.5 * (r1 - r0), 1.0),
            sound_speed: 1.0,
            density: 1.0,
            wall_dissipation: 0.0,
        }
    }

    /// Constant-radius tube bent by `κ(s) = κ_max (1 − cos 2πs)/2`, which
    /// vanishes with its slope at both ends.
    pub fn curved_bump(radius: f64, kappa_max: f64) -> Self {
        Self {
            curvature: Profile::cosine(0.5 * kappa_max, -0.5 * kappa_max, 2.0),
            radius: Profile::constant(radius),
            sound_speed: 1.0,
            density: 1.0,
            wall_dissipation: 0.0,
        }
    }

    pub fn with_medium(mut self, sound_speed: f64, density: f64, wall_dissipation: f64) -> Self {
        self.sound_speed = sound_speed;
        self.density = density;
        self.wall_dissipation = wall_dissipation;
        self
    }
}

/// Every geometric coefficient at a single arc-length position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub s: f64,
    pub radius: f64,
    pub radius_d1: f64,
    pub radius_d2: f64,
    pub curvature: f64,
    pub curvature_d1: f64,
    pub area: f64,
    pub area_d1: f64,
    pub area_d2: f64,
    /// `η = Rκ`.
    pub curvature_ratio: f64,
    /// `W = R √(R'² + (η − 1)²)`.
    pub stretching: f64,
    /// `Σ = (1 + η²/4)^{-1/2}`.
    pub speed_factor: f64,
    /// `c(s) = c Σ(s)`.
    pub local_speed: f64,
}

/// Coefficients tabulated on a uniform grid `s_i = i / n_s`.
#[derive(Clone, Debug, Default)]
pub struct CoefficientTable {
    pub s: Vec<f64>,
    pub radius: Vec<f64>,
    pub radius_d1: Vec<f64>,
    pub curvature: Vec<f64>,
    pub curvature_d1: Vec<f64>,
    pub area: Vec<f64>,
    pub area_d1: Vec<f64>,
    pub area_d2: Vec<f64>,
    pub curvature_ratio: Vec<f64>,
    pub stretching: Vec<f64>,
    pub speed_factor: Vec<f64>,
    pub local_speed: Vec<f64>,
}

impl CoefficientTable {
    fn push(&mut self, c: &Coefficients) {
        self.s.push(c.s);
        self.radius.push(c.radius);
        self.radius_d1.push(c.radius_d1);
        self.curvature.push(c.curvature);
        self.curvature_d1.push(c.curvature_d1);
        self.area.push(c.area);
        self.area_d1.push(c.area_d1);
        self.area_d2.push(c.area_d2);
        self.curvature_ratio.push(c.curvature_ratio);
        self.stretching.push(c.stretching);
        self.speed_factor.push(c.speed_factor);
        self.local_speed.push(c.local_speed);
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Pointwise metric data inside the tube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSample {
    /// `Ξ⁻¹ = 1 − rκ cos θ`.
    pub xi_inv: f64,
    /// `E = Ξ⁻² − Σ⁻²`.
    pub err_fn: f64,
}

/// One entry of a [`ValidationReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Extremal value of the checked quantity.
    pub value: f64,
    /// Arc-length position where it was attained.
    pub at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn into_result(self) -> Result<(), GeometryError> {
        for c in &self.checks {
            if c.passed {
                continue;
            }
            return Err(match c.name {
                "non-folding" => GeometryError::FoldedTube {
                    max_eta: c.value,
                    at: c.at,
                },
                "positive-radius" => GeometryError::NonPositiveRadius {
                    min_radius: c.value,
                    at: c.at,
                },
                "area-flat-at-inlet" => GeometryError::ControlEndViolation {
                    quantity: "A'(0)",
                    value: c.value,
                },
                "curvature-zero-at-inlet" => GeometryError::ControlEndViolation {
                    quantity: "kappa(0)",
                    value: c.value,
                },
                _ => GeometryError::InvalidParameter(format!("{} = {}", c.name, c.value)),
            });
        }
        Ok(())
    }
}

/// Immutable tube geometry with its coefficient table.
#[derive(Clone, Debug)]
pub struct TubeGeometry {
    spec: TubeSpec,
    curvature: CompiledProfile,
    radius: CompiledProfile,
    table: CoefficientTable,
}

impl TubeGeometry {
    /// Builds the geometry and rejects it if any standing assumption fails.
    pub fn build(spec: TubeSpec, n_s: usize) -> Result<Self, GeometryError> {
        let geom = Self::unchecked(spec, n_s)?;
        geom.validate().into_result()?;
        Ok(geom)
    }

    /// Builds the geometry without checking the standing assumptions.
    /// Profile syntax and the medium parameters are still checked.
    pub fn unchecked(spec: TubeSpec, n_s: usize) -> Result<Self, GeometryError> {
        if n_s == 0 {
            return Err(GeometryError::InvalidParameter("n_s must be positive".into()));
        }
        for (name, v) in [("sound_speed", spec.sound_speed), ("density", spec.density)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeometryError::InvalidParameter(format!("{name} = {v}")));
            }
        }
        if !(spec.wall_dissipation.is_finite() && spec.wall_dissipation >= 0.0) {
            return Err(GeometryError::InvalidParameter(format!(
                "wall_dissipation = {}",
                spec.wall_dissipation
            )));
        }
        let curvature = spec.curvature.compile()?;
        let radius = spec.radius.compile()?;
        let mut geom = Self {
            spec,
            curvature,
            radius,
            table: CoefficientTable::default(),
        };
        let mut table = CoefficientTable::default();
        for i in 0..=n_s {
            table.push(&geom.at(i as f64 / n_s as f64));
        }
        geom.table = table;
        Ok(geom)
    }

    pub fn spec(&self) -> &TubeSpec {
        &self.spec
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    /// Number of grid intervals of the coefficient table.
    pub fn n_intervals(&self) -> usize {
        self.table.len() - 1
    }

    pub fn sound_speed(&self) -> f64 {
        self.spec.sound_speed
    }

    pub fn density(&self) -> f64 {
        self.spec.density
    }

    pub fn wall_dissipation(&self) -> f64 {
        self.spec.wall_dissipation
    }

    pub fn radius_jet(&self, s: f64) -> Jet {
        self.radius.jet(s)
    }

    pub fn curvature_jet(&self, s: f64) -> Jet {
        self.curvature.jet(s)
    }

    /// All coefficients at an arbitrary `s`, from analytic profile derivatives.
    pub fn at(&self, s: f64) -> Coefficients {
        let r = self.radius.jet(s);
        let k = self.curvature.jet(s);
        let eta = r.value * k.value;
        let speed_factor = 1.0 / (1.0 + 0.25 * eta * eta).sqrt();
        Coefficients {
            s,
            radius: r.value,
            radius_d1: r.d1,
            radius_d2: r.d2,
            curvature: k.value,
            curvature_d1: k.d1,
            area: PI * r.value * r.value,
            area_d1: 2.0 * PI * r.value * r.d1,
            area_d2: 2.0 * PI * (r.d1 * r.d1 + r.value * r.d2),
            curvature_ratio: eta,
            stretching: r.value * (r.d1 * r.d1 + (eta - 1.0) * (eta - 1.0)).sqrt(),
            speed_factor,
            local_speed: self.spec.sound_speed * speed_factor,
        }
    }

    /// `Ξ⁻¹` and `E` at `(s, r, θ)`.
    pub fn metric_at(&self, s: f64, r: f64, theta: f64) -> Result<MetricSample, GeometryError> {
        let radius = self.radius.jet(s).value;
        if r < 0.0 || r > radius * (1.0 + 1e-14) {
            return Err(GeometryError::OutOfTube { s, r, radius });
        }
        let kappa = self.curvature.jet(s).value;
        Ok(MetricSample {
            xi_inv: 1.0 - r * kappa * theta.cos(),
            err_fn: kappa * error_over_curvature(kappa, radius, r, theta),
        })
    }

    /// Samples `s ↦ f(s)` on a grid `refine` times finer than the table and
    /// polishes the extremum with a golden-section search.
    pub fn extremum(&self, refine: usize, maximize: bool, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let sign = if maximize { 1.0 } else { -1.0 };
        let g = |s: f64| sign * f(s);
        let n = (self.n_intervals() * refine.max(1)).max(2000);
        let mut best = (0usize, g(0.0));
        for i in 1..=n {
            let v = g(i as f64 / n as f64);
            if v > best.1 {
                best = (i, v);
            }
        }
        let h = 1.0 / n as f64;
        let (mut a, mut b) = (
            (best.0 as f64 - 1.0) * h,
            (best.0 as f64 + 1.0) * h,
        );
        a = a.max(0.0);
        b = b.min(1.0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (g(x1), g(x2));
        for _ in 0..200 {
            if b - a < 1e-15 {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = g(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = g(x1);
            }
        }
        let mut cand = [(best.0 as f64 * h, best.1), (x1, f1), (x2, f2), (a, g(a)), (b, g(b))];
        cand.sort_by(|p, q| q.1.total_cmp(&p.1));
        (cand[0].0, sign * cand[0].1)
    }

    /// Checks the standing assumptions and reports the extremal values.
    pub fn validate(&self) -> ValidationReport {
        let (eta_at, max_eta) = self.extremum(10, true, |s| {
            (self.radius.jet(s).value * self.curvature.jet(s).value).abs()
        });
        let (r_at, min_r) = self.extremum(10, false, |s| self.radius.jet(s).value);
        let (_, max_area) = self.extremum(10, true, |s| PI * self.radius.jet(s).value.powi(2));
        let (_, max_kappa) = self.extremum(10, true, |s| self.curvature.jet(s).value.abs());
        let inlet = self.at(0.0);
        let area_slope = inlet.area_d1.abs() / max_area.max(f64::MIN_POSITIVE);
        let kappa0 = if max_kappa > 0.0 {
            inlet.curvature.abs() / max_kappa
        } else {
            0.0
        };
        ValidationReport {
            checks: vec![
                AssumptionCheck {
                    name: "positive-radius",
                    passed: min_r > 0.0,
                    value: min_r,
                    at: r_at,
                },
                AssumptionCheck {
                    name: "non-folding",
                    passed: max_eta < 1.0,
                    value: max_eta,
                    at: eta_at,
                },
                AssumptionCheck {
                    name: "area-flat-at-inlet",
                    passed: area_slope <= CONTROL_END_TOL,
                    value: inlet.area_d1,
                    at: 0.0,
                },
                AssumptionCheck {
                    name: "curvature-zero-at-inlet",
                    passed: kappa0 <= CONTROL_END_TOL,
                    value: inlet.curvature,
                    at: 0.0,
                },
            ],
        }
    }

    /// 4th-order finite-difference derivative of `f` at `s` with step `h`,
    /// one-sided near the ends of `[0, 1]`.
    pub fn fd4_derivative(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
        if s - 2.0 * h >= 0.0 && s + 2.0 * h <= 1.0 {
            (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h)
        } else if s + 4.0 * h <= 1.0 {
            (-25.0 * f(s) + 48.0 * f(s + h) - 36.0 * f(s + 2.0 * h) + 16.0 * f(s + 3.0 * h)
                - 3.0 * f(s + 4.0 * h))
                / (12.0 * h)
        } else {
            -(-25.0 * f(s) + 48.0 * f(s - h) - 36.0 * f(s - 2.0 * h) + 16.0 * f(s - 3.0 * h)
                - 3.0 * f(s - 4.0 * h))
                / (12.0 * h)
        }
    }

    /// `sup_{Γ(s)} |E/κ| = 2R + ¾|κ|R²`.
    pub fn sup_error_over_curvature(&self, s: f64) -> f64 {
        let c = self.at(s);
        2.0 * c.radius + 0.75 * c.curvature.abs() * c.radius * c.radius
    }
}

/// `E/κ = −2r cos θ + κ (r² cos² θ − R²/4)`; finite as `κ → 0`.
pub fn error_over_curvature(kappa: f64, radius: f64, r: f64, theta: f64) -> f64 {
    let x = r * theta.cos();
    -2.0 * x + kappa * (x * x - 0.25 * radius * radius)
}

/// Tensor quadrature on a disk: Gauss–Legendre in the scaled radius
/// `x = r/R` times the periodic trapezoid rule in `θ`.
#[derive(Clone, Debug)]
pub struct DiskQuadrature {
    radial: Vec<(f64, f64)>,
    n_theta: usize,
}

impl DiskQuadrature {
    pub fn new(n_radial: usize, n_theta: usize) -> Self {
        Self {
            radial: gauss_legendre_unit(n_radial.max(1)),
            n_theta: n_theta.max(1),
        }
    }

    /// `∫_{disk of radius R} f(r, θ) r dr dθ`.
    pub fn integrate(&self, radius: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let dtheta = 2.0 * PI / self.n_theta as f64;
        let mut total = 0.0;
        for &(x, w) in &self.radial {
            let r = radius * x;
            let mut ring = 0.0;
            for k in 0..self.n_theta {
                ring += f(r, k as f64 * dtheta);
            }
            total += w * x * ring;
        }
        total * dtheta * radius * radius
    }
}
