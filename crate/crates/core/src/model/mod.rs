//! SDE models `dX = b(X) dt + sum_j sigma^j(X) dB^j` and exact-solution oracles.

mod builtin;
mod doss;
pub mod ode;

pub use builtin::{builtin_model, BuiltinModel};
pub use doss::{doss_exact, doss_flow, DEFAULT_ODE_TOL};

use crate::fbm::Grid;
use crate::rng::StreamKey;
use std::fmt;
use std::sync::Arc;

/// Coefficient functions of a model. Buffers are caller-provided so the
/// solvers can step without allocating.
pub trait Coefficients: Send + Sync {
    /// Writes the column `sigma^j(x)` (length `d`) into `out`.
    fn sigma(&self, x: &[f64], j: usize, out: &mut [f64]);

    /// Writes the Jacobian of `sigma^j` at `x` into `out`, row-major:
    /// `out[i * d + k] = d sigma^{i,j} / d x_k`.
    fn grad_sigma(&self, x: &[f64], j: usize, out: &mut [f64]);

    /// Writes `b(x)` into `out`. Defaults to zero drift.
    fn drift(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Smoothness class a model claims for its diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    /// Bounded with bounded derivatives of every order.
    CbInfinity,
    /// Bounded with bounded derivatives up to the given order.
    Cb(u32),
    /// Smooth but unbounded (outside every `C_b^k`).
    Unbounded,
}

impl Smoothness {
    pub fn satisfies_cb(&self, order: u32) -> bool {
        match *self {
            Smoothness::CbInfinity => true,
            Smoothness::Cb(k) => k >= order,
            Smoothness::Unbounded => false,
        }
    }
}

#[derive(Clone)]
pub struct VectorFieldModel {
    name: String,
    dim: usize,
    drivers: usize,
    initial: Vec<f64>,
    smoothness: Smoothness,
    driftless: bool,
    coefficients: Arc<dyn Coefficients>,
}

impl fmt::Debug for VectorFieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("drivers", &self.drivers)
            .field("initial", &self.initial)
            .field("smoothness", &self.smoothness)
            .field("driftless", &self.driftless)
            .finish()
    }
}

impl VectorFieldModel {
    /// `driftless` declares `b == 0`; the drift callback is then never used.
    pub fn new(
        name: impl Into<String>,
        drivers: usize,
        initial: Vec<f64>,
        smoothness: Smoothness,
        driftless: bool,
        coefficients: Arc<dyn Coefficients>,
    ) -> Self {
        assert!(
            !initial.is_empty() && drivers > 0,
            "model needs d >= 1 and m >= 1"
        );
        Self {
            name: name.into(),
            dim: initial.len(),
            drivers,
            initial,
            smoothness,
            driftless,
            coefficients,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drivers(&self) -> usize {
        self.drivers
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn with_initial(mut self, initial: Vec<f64>) -> Self {
        assert_eq!(initial.len(), self.dim);
        self.initial = initial;
        self
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn is_driftless(&self) -> bool {
        self.driftless
    }

    pub fn coefficients(&self) -> &dyn Coefficients {
        self.coefficients.as_ref()
    }

    /// True when the Doss oracle applies (`d = m = 1`, no drift).
    pub fn supports_doss(&self) -> bool {
        self.dim == 1 && self.drivers == 1 && self.driftless
    }

    pub fn sigma(&self, x: &[f64], j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.coefficients.sigma(x, j, &mut out);
        out
    }

    pub fn grad_sigma(&self, x: &[f64], j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        self.coefficients.grad_sigma(x, j, &mut out);
        out
    }

    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        if !self.driftless {
            self.coefficients.drift(x, &mut out);
        }
        out
    }

    /// Warning text when the model does not meet a `C_b^order` hypothesis.
    pub fn hypothesis_warning(&self, order: u32) -> Option<String> {
        (!self.smoothness.satisfies_cb(order)).then(|| {
            format!(
                "model '{}' is {:?}, outside the C_b^{order} class assumed by the rate result",
                self.name, self.smoothness
            )
        })
    }
}

/// `grad sigma^j(x) . sigma^j(x)`.
pub fn correction_field(model: &VectorFieldModel, x: &[f64], j: usize) -> Vec<f64> {
    assert!(j < model.drivers(), "driver index {j} out of range");
    let d = model.dim();
    let mut col = vec![0.0; d];
    let mut jac = vec![0.0; d * d];
    let mut out = vec![0.0; d];
    correction_field_into(model.coefficients(), x, j, &mut col, &mut jac, &mut out);
    out
}

pub(crate) fn correction_field_into(
    coefficients: &dyn Coefficients,
    x: &[f64],
    j: usize,
    col: &mut [f64],
    jac: &mut [f64],
    out: &mut [f64],
) {
    let d = x.len();
    coefficients.sigma(x, j, col);
    coefficients.grad_sigma(x, j, jac);
    for i in 0..d {
        out[i] = (0..d).map(|k| jac[i * d + k] * col[k]).sum();
    }
}

/// Origin of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub method: String,
    pub model: String,
    pub stream: Option<StreamKey>,
}

/// A `d`-dimensional path on a grid, stored row by row.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    dim: usize,
    states: Vec<f64>,
    provenance: Provenance,
}

impl Trajectory {
    pub fn new(grid: Grid, dim: usize, states: Vec<f64>, provenance: Provenance) -> Self {
        assert_eq!(states.len(), (grid.steps() + 1) * dim, "trajectory length");
        Self {
            grid,
            dim,
            states,
            provenance,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.grid.steps())
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f64] {
        &self.states
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_stream(mut self, stream: StreamKey) -> Self {
        self.provenance.stream = Some(stream);
        self
    }

    /// Every `stride`-th state, on the grid of `steps / stride` steps.
    pub fn restrict(&self, steps: usize) -> crate::Result<Trajectory> {
        let n = self.grid.steps();
        if steps == 0 || !n.is_multiple_of(steps) {
            return Err(crate::Error::DimensionMismatch(format!(
                "{steps} steps do not divide {n}"
            )));
        }
        let stride = n / steps;
        let mut states = Vec::with_capacity((steps + 1) * self.dim);
        for k in 0..=steps {
            states.extend_from_slice(self.state(k * stride));
        }
        Ok(Trajectory::new(
            crate::fbm::Grid::new(self.grid.horizon(), steps)?,
            self.dim,
            states,
            self.provenance.clone(),
        ))
    }
}
