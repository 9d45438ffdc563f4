//! Time grids, bounded control fields, shape functions and randomized guesses.
//!
//! Fields are piecewise constant: one value per grid interval, sampled at the
//! interval midpoint.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};

/// Uniform time grid on `[t0, t1]` with `n_steps` intervals (times in ns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return Err(QslError::config(format!("time grid needs t1 > t0, got [{t0}, {t1}]")));
        }
        if n_steps == 0 {
            return Err(QslError::config("time grid needs at least one step"));
        }
        Ok(Self { t0, t1, n_steps })
    }

    /// Grid on `[0, duration]` whose step does not exceed `max_dt`.
    pub fn with_max_step(duration: f64, max_dt: f64) -> Result<Self> {
        if !(max_dt > 0.0) {
            return Err(QslError::config(format!("time step must be positive, got {max_dt}")));
        }
        let n = (duration / max_dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(0.0, duration, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn dt(&self) -> f64 {
        self.duration() / self.n_steps as f64
    }

    /// Midpoint of interval `j`.
    pub fn midpoint(&self, j: usize) -> f64 {
        self.t0 + (j as f64 + 0.5) * self.dt()
    }

    /// Left boundary of interval `j`; `boundary(n_steps) == t1`.
    pub fn boundary(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t1
        } else {
            self.t0 + j as f64 * self.dt()
        }
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_steps).map(move |j| self.midpoint(j))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    RabiAmplitude,
    LaserPhase,
    Detuning,
    QubitFrequency,
    Coupling,
    XDriveRe,
    XDriveIm,
}

impl fmt::Display for FieldRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldRole::RabiAmplitude => "rabi_amplitude",
            FieldRole::LaserPhase => "laser_phase",
            FieldRole::Detuning => "detuning",
            FieldRole::QubitFrequency => "qubit_frequency",
            FieldRole::Coupling => "coupling",
            FieldRole::XDriveRe => "x_drive_re",
            FieldRole::XDriveIm => "x_drive_im",
        };
        f.write_str(s)
    }
}

/// Closed interval `[min, max]` with `min < max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(QslError::config(format!("invalid bounds ({min}, {max})")));
        }
        Ok(Self { min, max })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.max + self.min)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.max - self.min)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }
}

/// Map a bounded field value to the unconstrained optimization variable
/// `u = artanh((2E - max - min) / (max - min))`.
pub fn field_to_unbounded(value: f64, bounds: Bounds) -> Result<f64> {
    if !(value > bounds.min && value < bounds.max) {
        return Err(QslError::Domain(format!(
            "value {value} is not strictly inside ({}, {})",
            bounds.min, bounds.max
        )));
    }
    let y = (value - bounds.center()) / bounds.half_width();
    Ok(y.atanh())
}

/// Inverse of [`field_to_unbounded`]. The result always lies strictly inside
/// the bounds, even where `tanh` saturates in floating point.
pub fn unbounded_to_field(u: f64, bounds: Bounds) -> f64 {
    let v = bounds.half_width() * u.tanh() + bounds.center();
    v.clamp(bounds.min.next_up(), bounds.max.next_down())
}

/// `dE/du` of the bounded parametrization.
pub fn unbounded_derivative(u: f64, bounds: Bounds) -> f64 {
    let t = u.tanh();
    bounds.half_width() * (1.0 - t * t)
}

/// A named control field on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    pub name: String,
    pub role: FieldRole,
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub bounds: Option<Bounds>,
    /// Excluded from optimization.
    pub frozen: bool,
    /// Steps in which the field may be nonzero and is optimized. Outside the
    /// window the value is pinned to zero. `None` means the full grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(usize, usize)>,
}

impl ControlField {
    pub fn constant(
        name: impl Into<String>,
        role: FieldRole,
        grid: TimeGrid,
        value: f64,
        bounds: Option<Bounds>,
    ) -> Result<Self> {
        let field = Self {
            name: name.into(),
            role,
            grid,
            values: vec![value; grid.n_steps()],
            bounds,
            frozen: false,
            window: None,
        };
        field.validate()?;
        Ok(field)
    }

    /// Sample `f` at the interval midpoints.
    pub fn from_fn(
        name: impl Into<String>,
        role: FieldRole,
        grid: TimeGrid,
        bounds: Option<Bounds>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let field = Self {
            name: name.into(),
            role,
            grid,
            values: grid.midpoints().map(f).collect(),
            bounds,
            frozen: false,
            window: None,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn with_window(mut self, start: usize, end: usize) -> Self {
        for (j, v) in self.values.iter_mut().enumerate() {
            if j < start || j >= end {
                *v = 0.0;
            }
        }
        self.window = Some((start, end));
        self
    }

    pub fn is_active(&self, step: usize) -> bool {
        match self.window {
            Some((a, b)) => step >= a && step < b,
            None => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.n_steps() {
            return Err(QslError::config(format!(
                "field '{}' has {} values for {} steps",
                self.name,
                self.values.len(),
                self.grid.n_steps()
            )));
        }
        if let Some(b) = self.bounds {
            if let Some((j, v)) = self
                .values
                .iter()
                .enumerate()
                .find(|(j, v)| self.is_active(*j) && !b.contains(**v))
            {
                return Err(QslError::config(format!(
                    "field '{}' value {v} at step {j} outside [{}, {}]",
                    self.name, b.min, b.max
                )));
            }
        }
        if let Some(j) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(QslError::Numeric(format!(
                "field '{}' is not finite at step {j}",
                self.name
            )));
        }
        Ok(())
    }

    /// Replace the values with a randomized guess.
    ///
    /// Bounded fields draw the guess in the unconstrained variable,
    /// `u = scale * f(t) / half_width`, so the guess always respects the
    /// bounds. Unbounded fields take `scale * f(t)` directly.
    pub fn randomize(&mut self, spec: &RandomFieldSpec) -> Result<()> {
        let f = generate_random_field(spec, &self.grid)?;
        let window = self.window;
        let active = |j: usize| window.map_or(true, |(a, b)| j >= a && j < b);
        for (j, (v, x)) in self.values.iter_mut().zip(f).enumerate() {
            if !active(j) {
                continue;
            }
            *v = match self.bounds {
                Some(b) => unbounded_to_field(spec.scale * x / b.half_width(), b),
                None => spec.scale * x,
            };
        }
        Ok(())
    }

    /// Write `t,value` rows, one per interval midpoint.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.grid.midpoints().zip(&self.values) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Update-shape function `S(t)` with values in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub ramp_fraction: f64,
}

/// Flat-top profile with `sin^2` ramps of length `ramp_fraction * (t1 - t0)`
/// at both ends.
pub fn make_shape(grid: &TimeGrid, ramp_fraction: f64) -> Result<ShapeFunction> {
    if !(0.0..0.5).contains(&ramp_fraction) {
        return Err(QslError::config(format!(
            "ramp_fraction must lie in [0, 0.5), got {ramp_fraction}"
        )));
    }
    let ramp = ramp_fraction * grid.duration();
    let values = grid
        .midpoints()
        .map(|t| {
            if ramp == 0.0 {
                return 1.0;
            }
            let edge = (t - grid.t0()).min(grid.t1() - t);
            if edge >= ramp {
                1.0
            } else {
                let s = (0.5 * PI * edge / ramp).sin();
                (s * s).max(f64::MIN_POSITIVE)
            }
        })
        .collect();
    Ok(ShapeFunction {
        grid: *grid,
        values,
        ramp_fraction,
    })
}

/// Parameters of a randomized smooth guess.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldSpec {
    /// Inclusive range of the number of Fourier components.
    pub m_min: u32,
    pub m_max: u32,
    pub seed: u64,
    pub scale: f64,
}

impl RandomFieldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_min < 1 || self.m_min > self.m_max {
            return Err(QslError::config(format!(
                "invalid m range [{}, {}]",
                self.m_min, self.m_max
            )));
        }
        Ok(())
    }
}

/// Evaluate `a0 + sqrt(2) * sum_j [a_j cos(2 pi j t / T) + b_j sin(2 pi j t / T)]`
/// at the grid midpoints.
pub fn fourier_profile(grid: &TimeGrid, a0: f64, coefficients: &[(f64, f64)]) -> Vec<f64> {
    let period = grid.duration();
    grid.midpoints()
        .map(|t| {
            let series: f64 = coefficients
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let w = 2.0 * PI * (j + 1) as f64 * t / period;
                    a * w.cos() + b * w.sin()
                })
                .sum();
            a0 + SQRT_2 * series
        })
        .collect()
}

/// Random Fourier coefficients for `m` components. Every coefficient is
/// drawn with variance `1 / (2m + 1)` through `draw(std_dev)`, so the series
/// has unit variance at every instant.
pub fn random_coefficients(m: u32, mut draw: impl FnMut(f64) -> f64) -> (f64, Vec<(f64, f64)>) {
    let std_dev = (1.0 / (2.0 * m as f64 + 1.0)).sqrt();
    let a0 = draw(std_dev);
    let coeffs = (0..m).map(|_| (draw(std_dev), draw(std_dev))).collect();
    (a0, coeffs)
}

/// Randomized smooth profile `f(t)` (before `scale` is applied); bit
/// reproducible for a fixed seed.
pub fn generate_random_field(spec: &RandomFieldSpec, grid: &TimeGrid) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = rng.gen_range(spec.m_min..=spec.m_max);
    let (a0, coeffs) = random_coefficients(m, |sd| {
        Normal::new(0.0, sd)
            .expect("standard deviation is positive")
            .sample(&mut rng)
    });
    Ok(fourier_profile(grid, a0, &coeffs))
}
