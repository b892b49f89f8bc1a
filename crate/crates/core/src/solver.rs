//! Classical and modified Euler schemes, the fine-grid reference solution and
//! the Jacobian flow of the linearized equation.

use crate::error::{Error, Result};
use crate::fbm::{FbmBundle, Grid, HurstParam};
use crate::linalg;
use crate::model::{
    correction_field_into, doss_exact, Coefficients, Provenance, Trajectory, VectorFieldModel,
    DEFAULT_ODE_TOL,
};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// `X_{k+1} = X_k + b h + sum_j sigma^j(X_k) dB^j_k`.
    ClassicalEuler,
    /// Classical step plus `(1/2) sum_j (grad sigma^j sigma^j)(X_k) h^{2H}`.
    ModifiedEuler,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::ClassicalEuler => "classical",
            SchemeKind::ModifiedEuler => "modified",
        }
    }

    /// Theoretical log-log slope of the strong error in `n`.
    ///
    /// Modified: `-(2H - 1/2)` below `H = 3/4`, `-1` from there on (with an
    /// extra `sqrt(log n)` at exactly `3/4`). Classical: `-(2H - 1)`.
    pub fn strong_slope(&self, hurst: HurstParam) -> f64 {
        let h = hurst.value();
        match self {
            SchemeKind::ModifiedEuler if h < 0.75 => -(2.0 * h - 0.5),
            SchemeKind::ModifiedEuler => -1.0,
            SchemeKind::ClassicalEuler => -(2.0 * h - 1.0),
        }
    }

    /// Theoretical weak-error slope: `-1` for the modified scheme; the
    /// classical scheme's weak rate equals its strong rate.
    pub fn weak_slope(&self, hurst: HurstParam) -> f64 {
        match self {
            SchemeKind::ModifiedEuler => -1.0,
            SchemeKind::ClassicalEuler => -(2.0 * hurst.value() - 1.0),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(SchemeKind::ClassicalEuler),
            "modified" => Ok(SchemeKind::ModifiedEuler),
            other => Err(Error::domain(format!(
                "unknown scheme '{other}' (expected classical or modified)"
            ))),
        }
    }
}

/// One Euler step with preallocated work buffers.
pub struct Stepper<'a> {
    coefficients: &'a dyn Coefficients,
    d: usize,
    m: usize,
    driftless: bool,
    h: f64,
    // h^{2H} / 2 for the modified scheme
    correction_scale: Option<f64>,
    col: Vec<f64>,
    jac: Vec<f64>,
    corr: Vec<f64>,
    update: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        kind: SchemeKind,
        model: &'a VectorFieldModel,
        step: f64,
        hurst: HurstParam,
    ) -> Self {
        let d = model.dim();
        let correction_scale = match kind {
            SchemeKind::ClassicalEuler => None,
            SchemeKind::ModifiedEuler => Some(0.5 * step.powf(2.0 * hurst.value())),
        };
        Self {
            coefficients: model.coefficients(),
            d,
            m: model.drivers(),
            driftless: model.is_driftless(),
            h: step,
            correction_scale,
            col: vec![0.0; d],
            jac: vec![0.0; d * d],
            corr: vec![0.0; d],
            update: vec![0.0; d],
        }
    }

    /// The increment `X_{k+1} - X_k` given the state and the driver increments.
    pub fn update(&mut self, x: &[f64], db: &[f64]) -> &[f64] {
        let d = self.d;
        if self.driftless {
            self.update.fill(0.0);
        } else {
            self.coefficients.drift(x, &mut self.update);
            for u in self.update.iter_mut() {
                *u *= self.h;
            }
        }
        for j in 0..self.m {
            self.coefficients.sigma(x, j, &mut self.col);
            for i in 0..d {
                self.update[i] += self.col[i] * db[j];
            }
        }
        if let Some(scale) = self.correction_scale {
            for j in 0..self.m {
                correction_field_into(
                    self.coefficients,
                    x,
                    j,
                    &mut self.col,
                    &mut self.jac,
                    &mut self.corr,
                );
                for i in 0..d {
                    self.update[i] += scale * self.corr[i];
                }
            }
        }
        &self.update
    }

    pub fn advance(&mut self, x: &[f64], db: &[f64], out: &mut [f64]) {
        self.update(x, db);
        for i in 0..self.d {
            out[i] = x[i] + self.update[i];
        }
    }
}

fn check_noise(model: &VectorFieldModel, grid: &Grid, increments: &[Vec<f64>]) -> Result<()> {
    if increments.len() != model.drivers() {
        return Err(Error::DimensionMismatch(format!(
            "model '{}' has {} drivers, noise has {} components",
            model.name(),
            model.drivers(),
            increments.len()
        )));
    }
    if let Some(bad) = increments.iter().find(|inc| inc.len() != grid.steps()) {
        return Err(Error::DimensionMismatch(format!(
            "noise has {} increments, grid has {} steps",
            bad.len(),
            grid.steps()
        )));
    }
    Ok(())
}

/// Runs `kind` on `grid` driven by per-component increments.
pub fn solve(
    kind: SchemeKind,
    model: &VectorFieldModel,
    grid: &Grid,
    increments: &[Vec<f64>],
    hurst: HurstParam,
) -> Result<Trajectory> {
    check_noise(model, grid, increments)?;
    let d = model.dim();
    let n = grid.steps();
    let mut stepper = Stepper::new(kind, model, grid.step(), hurst);
    let mut states = vec![0.0; (n + 1) * d];
    states[..d].copy_from_slice(model.initial());
    let mut db = vec![0.0; model.drivers()];
    for k in 0..n {
        for (j, inc) in increments.iter().enumerate() {
            db[j] = inc[k];
        }
        let (done, rest) = states.split_at_mut((k + 1) * d);
        let next = &mut rest[..d];
        stepper.advance(&done[k * d..], &db, next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { index: k + 1 });
        }
    }
    Ok(Trajectory::new(
        *grid,
        d,
        states,
        Provenance {
            method: kind.name().into(),
            model: model.name().into(),
            stream: None,
        },
    ))
}

pub fn euler_classical(
    model: &VectorFieldModel,
    grid: &Grid,
    increments: &[Vec<f64>],
) -> Result<Trajectory> {
    // the classical recursion never reads H
    let unused = HurstParam::new(0.75).expect("valid constant");
    solve(SchemeKind::ClassicalEuler, model, grid, increments, unused)
}

pub fn euler_modified(
    model: &VectorFieldModel,
    grid: &Grid,
    increments: &[Vec<f64>],
    hurst: HurstParam,
) -> Result<Trajectory> {
    solve(SchemeKind::ModifiedEuler, model, grid, increments, hurst)
}

/// How the exact solution is approximated in error experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceOracle {
    /// Doss representation when the model allows it, fine-grid modified Euler otherwise.
    #[default]
    Auto,
    /// Modified Euler on the bundle's fine grid.
    FineModified,
    /// Doss representation (1d driftless models only).
    Doss,
}

/// Modified Euler on the bundle's fine grid, not restricted.
pub fn fine_reference(
    model: &VectorFieldModel,
    bundle: &FbmBundle,
    hurst: HurstParam,
) -> Result<Trajectory> {
    let grid = *bundle.fine_grid();
    let noise = bundle.noise_on(grid.steps())?;
    let mut t = euler_modified(model, &grid, &noise, hurst)?.with_stream(bundle.key());
    t = relabel(t, "reference:fine-modified");
    Ok(t)
}

/// Reference solution on the bundle's coarse grid.
pub fn reference_solution(
    model: &VectorFieldModel,
    bundle: &FbmBundle,
    hurst: HurstParam,
    oracle: ReferenceOracle,
) -> Result<Trajectory> {
    let use_doss = match oracle {
        ReferenceOracle::Auto => model.supports_doss(),
        ReferenceOracle::Doss => true,
        ReferenceOracle::FineModified => false,
    };
    if use_doss {
        let t = doss_exact(
            model,
            &bundle.coarse_values(0),
            bundle.coarse_grid(),
            DEFAULT_ODE_TOL,
        )?;
        Ok(relabel(t.with_stream(bundle.key()), "reference:doss"))
    } else {
        fine_reference(model, bundle, hurst)?.restrict(bundle.coarse_grid().steps())
    }
}

fn relabel(t: Trajectory, method: &str) -> Trajectory {
    let mut p = t.provenance().clone();
    p.method = method.into();
    Trajectory::new(*t.grid(), t.dim(), t.raw().to_vec(), p)
}

/// Solution `Lambda` of `Lambda_t = I + sum_j int grad sigma^j(X_s) Lambda_s dB^j_s`
/// on a grid, with its inverse.
#[derive(Debug, Clone)]
pub struct JacobianFlow {
    grid: Grid,
    dim: usize,
    matrices: Vec<f64>,
    inverses: Vec<f64>,
}

impl JacobianFlow {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, k: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.matrices[k * s..(k + 1) * s]
    }

    pub fn inverse(&self, k: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.inverses[k * s..(k + 1) * s]
    }

    /// Largest entry of `Lambda_k Lambda_k^{-1} - I` over the grid.
    pub fn max_inverse_residual(&self) -> f64 {
        (0..=self.grid.steps())
            .map(|k| linalg::inverse_residual(self.matrix(k), self.inverse(k), self.dim))
            .fold(0.0, f64::max)
    }
}

const FLOW_DET_MIN: f64 = 1e-12;
const POLISH_TARGET: f64 = 1e-14;
const POLISH_MAX: usize = 3;

/// Euler recursion `Lambda_{k+1} = (I + sum_j A_j dB^j_k) Lambda_k` with
/// `A_j = grad sigma^j(X_{t_k})`, and the companion recursion
/// `P_{k+1} = P_k (I - sum_j A_j dB^j_k)` for the inverse, polished by Newton
/// steps `P <- P (2I - Lambda P)`.
pub fn jacobian_flow(
    model: &VectorFieldModel,
    x: &Trajectory,
    increments: &[Vec<f64>],
) -> Result<JacobianFlow> {
    let grid = *x.grid();
    check_noise(model, &grid, increments)?;
    if x.dim() != model.dim() {
        return Err(Error::DimensionMismatch(
            "trajectory and model dimensions".into(),
        ));
    }
    let d = model.dim();
    let s = d * d;
    let n = grid.steps();
    let coefficients = model.coefficients();
    let mut matrices = vec![0.0; (n + 1) * s];
    let mut inverses = vec![0.0; (n + 1) * s];
    matrices[..s].copy_from_slice(&linalg::identity(d));
    inverses[..s].copy_from_slice(&linalg::identity(d));

    let mut jac = vec![0.0; s];
    let mut gen = vec![0.0; s];
    let mut work = vec![0.0; s];
    let mut work2 = vec![0.0; s];
    for k in 0..n {
        // gen = sum_j A_j dB^j_k
        gen.fill(0.0);
        for (j, inc) in increments.iter().enumerate() {
            coefficients.grad_sigma(x.state(k), j, &mut jac);
            for (g, a) in gen.iter_mut().zip(&jac) {
                *g += a * inc[k];
            }
        }
        let (lam_done, lam_rest) = matrices.split_at_mut((k + 1) * s);
        let (inv_done, inv_rest) = inverses.split_at_mut((k + 1) * s);
        let lam = &lam_done[k * s..];
        let inv = &inv_done[k * s..];
        let lam_next = &mut lam_rest[..s];
        let inv_next = &mut inv_rest[..s];

        linalg::matmul(&gen, lam, d, &mut work);
        for i in 0..s {
            lam_next[i] = lam[i] + work[i];
        }
        linalg::matmul(inv, &gen, d, &mut work);
        for i in 0..s {
            inv_next[i] = inv[i] - work[i];
        }

        let det = linalg::determinant(lam_next, d);
        if !(det.abs() >= FLOW_DET_MIN) {
            return Err(Error::DegenerateFlow { index: k + 1, det });
        }
        for _ in 0..POLISH_MAX {
            if linalg::inverse_residual(lam_next, inv_next, d) <= POLISH_TARGET {
                break;
            }
            // work = 2I - Lambda P ; P <- P work
            linalg::matmul(lam_next, inv_next, d, &mut work);
            for w in work.iter_mut() {
                *w = -*w;
            }
            for i in 0..d {
                work[i * d + i] += 2.0;
            }
            linalg::matmul(inv_next, &work, d, &mut work2);
            inv_next.copy_from_slice(&work2);
        }
    }
    Ok(JacobianFlow {
        grid,
        dim: d,
        matrices,
        inverses,
    })
}
