
use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};

/// Functional time encoding `phi(dt)_k = cos(omega_k * dt + phase_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeEncoder {
    pub omega: Vec<f64>,
    pub phase: Vec<f64>,
}

impl TimeEncoder {
    /// Frequencies decaying log-uniformly from 1 to 1e-4, zero phase.
    pub fn log_spaced(dim: usize) -> Self {
        Self {
            omega: initial_omega(dim),
            phase: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn encode(&self, dt: f64) -> Result<Vec<f64>> {
        if !(dt >= 0.0) {
            return Err(Error::contract(format!("time delta must be non-negative, got {dt}")));
        }
        Ok(self
            .omega
            .iter()
            .zip(&self.phase)
            .map(|(w, b)| (w * dt + b).cos())
            .collect())
    }
}

pub(crate) fn initial_omega(dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    (0..dim)
        .map(|k| 10f64.powf(-4.0 * k as f64 / (dim - 1) as f64))
        .collect()
}

/// Rows `cos(dt_r * omega + phase)` for every delta, `[deltas x d_t]`.
pub(crate) fn encode_on_tape(tape: &mut Tape, omega: Var, phase: Var, deltas: Vec<f64>) -> Result<Var> {
    let dt = tape.constant(Tensor::column(deltas));
    let angles = tape.matmul(dt, omega)?;
    let angles = tape.add_row(angles, phase)?;
    Ok(tape.cos(angles))
}
