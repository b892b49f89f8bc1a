use super::{Coefficients, Smoothness, VectorFieldModel};
use crate::error::{Error, Result};
use std::str::FromStr;
use std::sync::Arc;

/// Test models shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinModel {
    /// `sigma(x) = x`, `X_0 = 1`: geometric fBm with solution `exp(B_t)`.
    Gfbm1d,
    /// `sigma(x) = 2 + sin x`, `X_0 = 1`.
    Sine1d,
    /// `sigma^1 = (tanh x_2, 1/2)`, `sigma^2 = (1/2, tanh x_1)`, `X_0 = (1, 1)`.
    Tanh2dCross,
}

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 3] = [
        BuiltinModel::Gfbm1d,
        BuiltinModel::Sine1d,
        BuiltinModel::Tanh2dCross,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinModel::Gfbm1d => "gfbm1d",
            BuiltinModel::Sine1d => "sine1d",
            BuiltinModel::Tanh2dCross => "tanh2d_cross",
        }
    }

    pub fn build(&self) -> VectorFieldModel {
        match self {
            BuiltinModel::Gfbm1d => VectorFieldModel::new(
                self.name(),
                1,
                vec![1.0],
                Smoothness::Unbounded,
                true,
                Arc::new(Linear),
            ),
            BuiltinModel::Sine1d => VectorFieldModel::new(
                self.name(),
                1,
                vec![1.0],
                Smoothness::CbInfinity,
                true,
                Arc::new(ShiftedSine),
            ),
            BuiltinModel::Tanh2dCross => VectorFieldModel::new(
                self.name(),
                2,
                vec![1.0, 1.0],
                Smoothness::CbInfinity,
                true,
                Arc::new(TanhCross),
            ),
        }
    }
}

impl FromStr for BuiltinModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

pub fn builtin_model(name: &str) -> Result<VectorFieldModel> {
    Ok(name.parse::<BuiltinModel>()?.build())
}

struct Linear;

impl Coefficients for Linear {
    fn sigma(&self, x: &[f64], _j: usize, out: &mut [f64]) {
        out[0] = x[0];
    }

    fn grad_sigma(&self, _x: &[f64], _j: usize, out: &mut [f64]) {
        out[0] = 1.0;
    }
}

struct ShiftedSine;

impl Coefficients for ShiftedSine {
    fn sigma(&self, x: &[f64], _j: usize, out: &mut [f64]) {
        out[0] = 2.0 + x[0].sin();
    }

    fn grad_sigma(&self, x: &[f64], _j: usize, out: &mut [f64]) {
        out[0] = x[0].cos();
    }
}

struct TanhCross;

impl Coefficients for TanhCross {
    fn sigma(&self, x: &[f64], j: usize, out: &mut [f64]) {
        match j {
            0 => {
                out[0] = x[1].tanh();
                out[1] = 0.5;
            }
            _ => {
                out[0] = 0.5;
                out[1] = x[0].tanh();
            }
        }
    }

    fn grad_sigma(&self, x: &[f64], j: usize, out: &mut [f64]) {
        out.fill(0.0);
        match j {
            0 => out[1] = sech2(x[1]),
            _ => out[2] = sech2(x[0]),
        }
    }
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}
