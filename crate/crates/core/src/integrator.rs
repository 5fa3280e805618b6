//! Fixed-step classical Runge-Kutta integration on a uniform grid.
//!
//! Forward and adjoint passes share one [`TimeGrid`]. Inputs frozen along a
//! previously computed trajectory (controls, or the state seen by the adjoint)
//! are linearly interpolated at the RK4 half-steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Compartment, ControlVector, StateVector};

/// Vector-space operations needed by the RK4 stepper.
pub trait OdeState: Copy {
    /// `self + h * other`
    fn add_scaled(&self, other: &Self, h: f64) -> Self;

    /// Index of the first NaN or infinite component.
    fn first_non_finite(&self) -> Option<usize>;

    fn component_label(index: usize) -> String {
        format!("[{index}]")
    }
}

/// Linear interpolation between two samples.
pub trait Lerp: Copy {
    /// `(1 - w) * self + w * other`
    fn lerp(&self, other: &Self, w: f64) -> Self;
}

impl OdeState for f64 {
    fn add_scaled(&self, other: &Self, h: f64) -> Self {
        self + h * other
    }
    fn first_non_finite(&self) -> Option<usize> {
        (!self.is_finite()).then_some(0)
    }
}

impl<const N: usize> OdeState for [f64; N] {
    fn add_scaled(&self, other: &Self, h: f64) -> Self {
        std::array::from_fn(|i| self[i] + h * other[i])
    }
    fn first_non_finite(&self) -> Option<usize> {
        self.iter().position(|v| !v.is_finite())
    }
}

impl OdeState for StateVector {
    fn add_scaled(&self, other: &Self, h: f64) -> Self {
        StateVector(self.0.add_scaled(&other.0, h))
    }
    fn first_non_finite(&self) -> Option<usize> {
        self.0.first_non_finite()
    }
    fn component_label(index: usize) -> String {
        Compartment::ALL[index].label().to_string()
    }
}

impl Lerp for f64 {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        (1.0 - w) * self + w * other
    }
}

impl<const N: usize> Lerp for [f64; N] {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        std::array::from_fn(|i| (1.0 - w) * self[i] + w * other[i])
    }
}

impl Lerp for StateVector {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        StateVector(self.0.lerp(&other.0, w))
    }
}

impl Lerp for ControlVector {
    /// Convex combination of two feasible controls stays feasible, so the
    /// result keeps the left operand's bounds.
    fn lerp(&self, other: &Self, w: f64) -> Self {
        ControlVector::clamped(self.values().lerp(&other.values(), w), self.bounds())
    }
}

impl<A: Lerp, B: Lerp> Lerp for (A, B) {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        (self.0.lerp(&other.0, w), self.1.lerp(&other.1, w))
    }
}

impl Lerp for () {
    fn lerp(&self, _: &Self, _: f64) -> Self {}
}

/// Uniform grid `t0 + k * dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite span [{t0}, {t1}]")));
        }
        if t1 <= t0 {
            return Err(Error::InvalidGrid(format!("t1 = {t1} must exceed t0 = {t0}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { t0, t1, n_steps })
    }

    /// Grid over `[t0, t1]` with step as close to `dt` as divides the span.
    pub fn with_step(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidGrid(format!("dt = {dt} must be positive")));
        }
        let n = ((t1 - t0) / dt).round().max(1.0) as usize;
        Self::new(t0, t1, n)
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
    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.time(k))
    }
}

/// Samples of a vector quantity on every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<V> {
    pub grid: TimeGrid,
    pub samples: Vec<V>,
}

impl<V: Copy> Trajectory<V> {
    pub fn new(grid: TimeGrid, samples: Vec<V>) -> Result<Self> {
        if samples.len() != grid.n_steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} steps",
                samples.len(),
                grid.n_steps()
            )));
        }
        Ok(Self { grid, samples })
    }

    /// Same value at every grid point.
    pub fn constant(grid: TimeGrid, value: V) -> Self {
        Self {
            grid,
            samples: vec![value; grid.n_steps() + 1],
        }
    }

    pub fn first(&self) -> &V {
        &self.samples[0]
    }

    pub fn last(&self) -> &V {
        self.samples.last().expect("trajectory has n_steps + 1 >= 2 samples")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &V)> + '_ {
        self.grid.times().zip(self.samples.iter())
    }

    pub fn map<W>(&self, f: impl FnMut(&V) -> W) -> Trajectory<W> {
        Trajectory {
            grid: self.grid,
            samples: self.samples.iter().map(f).collect(),
        }
    }

    fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.grid != *grid || self.samples.len() != grid.n_steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "inputs on [{}, {}] with {} steps, requested [{}, {}] with {} steps",
                self.grid.t0(),
                self.grid.t1(),
                self.grid.n_steps(),
                grid.t0(),
                grid.t1(),
                grid.n_steps()
            )));
        }
        Ok(())
    }
}

fn check_finite<V: OdeState>(value: &V, step: usize) -> Result<()> {
    match value.first_non_finite() {
        Some(i) => Err(Error::IntegrationBlowup {
            step,
            component: V::component_label(i),
        }),
        None => Ok(()),
    }
}

/// One RK4 step of signed size `h` from `(t, x)`; `w0`, `wm`, `w1` are the
/// frozen inputs at `t`, `t + h/2` and `t + h`.
#[inline]
fn rk4_step<V, W, F>(rhs: &mut F, t: f64, x: &V, h: f64, w0: &W, wm: &W, w1: &W) -> V
where
    V: OdeState,
    F: FnMut(f64, &V, &W) -> V,
{
    let k1 = rhs(t, x, w0);
    let k2 = rhs(t + 0.5 * h, &x.add_scaled(&k1, 0.5 * h), wm);
    let k3 = rhs(t + 0.5 * h, &x.add_scaled(&k2, 0.5 * h), wm);
    let k4 = rhs(t + h, &x.add_scaled(&k3, h), w1);
    x.add_scaled(&k1, h / 6.0)
        .add_scaled(&k2, h / 3.0)
        .add_scaled(&k3, h / 3.0)
        .add_scaled(&k4, h / 6.0)
}

/// Integrates `dx/dt = rhs(t, x)` forward from `x0` on `grid`.
pub fn integrate<V, F>(mut rhs: F, x0: V, grid: TimeGrid) -> Result<Trajectory<V>>
where
    V: OdeState,
    F: FnMut(f64, &V) -> V,
{
    let frozen = Trajectory::constant(grid, ());
    integrate_driven(|t, x, _: &()| rhs(t, x), x0, grid, &frozen)
}

/// Forward integration of `dx/dt = rhs(t, x, w(t))` where `w` is sampled on
/// the same grid.
pub fn integrate_driven<V, W, F>(mut rhs: F, x0: V, grid: TimeGrid, inputs: &Trajectory<W>) -> Result<Trajectory<V>>
where
    V: OdeState,
    W: Lerp,
    F: FnMut(f64, &V, &W) -> V,
{
    inputs.check_grid(&grid)?;
    check_finite(&x0, 0)?;
    let h = grid.dt();
    let mut samples = Vec::with_capacity(grid.n_steps() + 1);
    samples.push(x0);
    let mut x = x0;
    for k in 0..grid.n_steps() {
        let w0 = &inputs.samples[k];
        let w1 = &inputs.samples[k + 1];
        let wm = w0.lerp(w1, 0.5);
        x = rk4_step(&mut rhs, grid.time(k), &x, h, w0, &wm, w1);
        check_finite(&x, k + 1)?;
        samples.push(x);
    }
    Ok(Trajectory { grid, samples })
}

/// Integrates `dx/dt = rhs(t, x, w(t))` from the terminal value `x_end` at
/// `grid.t1()` down to `grid.t0()`. `rhs` is the ordinary forward-time
/// derivative. Samples are returned in forward time order, so the last sample
/// is `x_end`. The reported step index counts backward steps taken.
pub fn integrate_backward<V, W, F>(
    mut rhs: F,
    x_end: V,
    grid: TimeGrid,
    frozen_inputs: &Trajectory<W>,
) -> Result<Trajectory<V>>
where
    V: OdeState,
    W: Lerp,
    F: FnMut(f64, &V, &W) -> V,
{
    frozen_inputs.check_grid(&grid)?;
    check_finite(&x_end, 0)?;
    let n = grid.n_steps();
    let h = -grid.dt();
    let mut reversed = Vec::with_capacity(n + 1);
    reversed.push(x_end);
    let mut x = x_end;
    for step in 0..n {
        let k = n - step;
        let w0 = &frozen_inputs.samples[k];
        let w1 = &frozen_inputs.samples[k - 1];
        let wm = w0.lerp(w1, 0.5);
        x = rk4_step(&mut rhs, grid.time(k), &x, h, w0, &wm, w1);
        check_finite(&x, step + 1)?;
        reversed.push(x);
    }
    reversed.reverse();
    Ok(Trajectory {
        grid,
        samples: reversed,
    })
}
