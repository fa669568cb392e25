//! Central finite-difference check of the analytic gradients.

use super::loss::{ce_loss_and_grad, kl_loss_and_grad, pg_loss_and_grad, GradBundle, LossKind};
use super::model::PolicyParams;
use super::sampling::Trajectory;
use super::state::State;
use super::vocab::TokenId;
use crate::error::{Error, Result};

/// Largest parameter count `grad_check` accepts.
pub const GRAD_CHECK_MAX_PARAMS: usize = 5_000;

/// Both the analytic and numeric derivative below this magnitude count as a
/// match.
pub const ZERO_FLOOR: f64 = 1e-8;

/// A loss together with the data it is evaluated on.
#[derive(Debug, Clone)]
pub enum LossBatch {
    Ce(Vec<(State, TokenId)>),
    Kl(Vec<(State, Vec<f64>)>),
    Pg {
        trajectories: Vec<Trajectory>,
        advantages: Vec<f64>,
    },
}

impl LossBatch {
    pub fn kind(&self) -> LossKind {
        match self {
            LossBatch::Ce(_) => LossKind::Ce,
            LossBatch::Kl(_) => LossKind::Kl,
            LossBatch::Pg { .. } => LossKind::Pg,
        }
    }

    pub fn evaluate(&self, params: &PolicyParams) -> Result<GradBundle> {
        match self {
            LossBatch::Ce(b) => ce_loss_and_grad(params, b),
            LossBatch::Kl(b) => kl_loss_and_grad(params, b),
            LossBatch::Pg {
                trajectories,
                advantages,
            } => pg_loss_and_grad(params, trajectories, advantages),
        }
    }
}

/// Relative error between an analytic and numeric derivative, 0 when both
/// are below [`ZERO_FLOOR`].
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < ZERO_FLOOR {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Maximum relative error between the analytic gradient and central
/// differences with step `epsilon`, over every coordinate.
pub fn grad_check(params: &PolicyParams, batch: &LossBatch, epsilon: f64) -> Result<f64> {
    if params.param_count() > GRAD_CHECK_MAX_PARAMS {
        return Err(Error::InvalidArgument(format!(
            "grad_check is limited to {GRAD_CHECK_MAX_PARAMS} parameters, model has {}",
            params.param_count()
        )));
    }
    let analytic = batch.evaluate(params)?;
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for i in 0..params.param_count() {
        let orig = params.get(i);
        probe.set(i, orig + epsilon);
        let up = batch.evaluate(&probe)?.loss;
        probe.set(i, orig - epsilon);
        let down = batch.evaluate(&probe)?.loss;
        probe.set(i, orig);
        let numeric = (up - down) / (2.0 * epsilon);
        worst = worst.max(relative_error(analytic.grad.get(i), numeric));
    }
    Ok(worst)
}
