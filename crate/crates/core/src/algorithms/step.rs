//! Server extrapolation rules.

use crate::envelope::{ClientEval, EnvelopeContext};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::objectives::ClientObjective;

/// Squared denominators below this mean the averaged step has vanished.
pub const CONVERGED_THRESHOLD: f64 = 1e-24;

/// Additive denominator guard of the FedExP rule.
pub const FEDEXP_GUARD: f64 = 1e-12;

/// Outcome of an adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Step(f64),
    /// The averaged displacement vanished; the run has converged.
    Converged,
}

impl StepSize {
    pub fn value(self) -> Option<f64> {
        match self {
            StepSize::Step(a) => Some(a),
            StepSize::Converged => None,
        }
    }
}

fn mean_displacement(evals: &[ClientEval]) -> Vector {
    let d = evals[0].displacement.len();
    let mut sum = Vector::zeros(d);
    for e in evals {
        sum += &e.displacement;
    }
    sum / evals.len() as f64
}

fn non_empty(evals: &[ClientEval]) -> Result<()> {
    if evals.is_empty() {
        return Err(Error::contract("adaptive step needs at least one client"));
    }
    Ok(())
}

/// Gradient-diversity ratio `mean‖x − p_i‖² / ‖mean(x − p_i)‖²` from evaluated clients.
pub fn grads_from_evals(evals: &[ClientEval]) -> Result<StepSize> {
    non_empty(evals)?;
    let mut num = 0.0;
    for e in evals {
        num += e.displacement.norm_squared();
    }
    num /= evals.len() as f64;
    let den = mean_displacement(evals).norm_squared();
    if den < CONVERGED_THRESHOLD {
        return Ok(StepSize::Converged);
    }
    Ok(StepSize::Step(num / den))
}

/// Stochastic Polyak ratio `mean(M_i(x) − inf M_i) / (γ‖mean ∇M_i(x)‖²)` from evaluated clients.
pub fn stops_from_evals(ctx: &EnvelopeContext<'_>, evals: &[ClientEval]) -> Result<StepSize> {
    non_empty(evals)?;
    let gamma = ctx.gamma();
    let mut num = 0.0;
    for e in evals {
        num += ctx.value_from_eval(e)? - ctx.minima()[e.client];
    }
    num /= evals.len() as f64;
    let grad = mean_displacement(evals) / gamma;
    let den = gamma * grad.norm_squared();
    if den < CONVERGED_THRESHOLD {
        return Ok(StepSize::Converged);
    }
    Ok(StepSize::Step(num / den))
}

/// `(1+γL_max)/(γL_max)`, the prefactor of the improved gradient-diversity rule.
pub fn grads_prime_factor(gamma: f64, l_max: f64) -> Result<f64> {
    if !(l_max > 0.0 && l_max.is_finite()) {
        return Err(Error::contract(format!(
            "L_max must be positive, got {l_max}"
        )));
    }
    Ok((1.0 + gamma * l_max) / (gamma * l_max))
}

/// Gradient-diversity extrapolation over the clients in `set`.
pub fn alpha_grads(ctx: &EnvelopeContext<'_>, x: &Vector, set: &[usize]) -> Result<StepSize> {
    grads_from_evals(&ctx.evaluate_many(set, x)?)
}

/// Gradient diversity scaled by `(1+γL_max)/(γL_max)`.
pub fn alpha_grads_prime(
    ctx: &EnvelopeContext<'_>,
    x: &Vector,
    set: &[usize],
    l_max: f64,
) -> Result<StepSize> {
    let factor = grads_prime_factor(ctx.gamma(), l_max)?;
    Ok(match alpha_grads(ctx, x, set)? {
        StepSize::Step(a) => StepSize::Step(a * factor),
        StepSize::Converged => StepSize::Converged,
    })
}

/// Stochastic Polyak extrapolation over the clients in `set`.
pub fn alpha_stops(ctx: &EnvelopeContext<'_>, x: &Vector, set: &[usize]) -> Result<StepSize> {
    stops_from_evals(ctx, &ctx.evaluate_many(set, x)?)
}

/// FedExP extrapolation `max(1, Σ‖δ_i‖² / (‖Σδ_i‖² + ε))` from client displacements.
pub fn alpha_fedexp(deltas: &[Vector]) -> f64 {
    let Some(first) = deltas.first() else {
        return 1.0;
    };
    let mut num = 0.0;
    let mut sum = Vector::zeros(first.len());
    for d in deltas {
        num += d.norm_squared();
        sum += d;
    }
    (num / (sum.norm_squared() + FEDEXP_GUARD)).max(1.0)
}

/// Local step size `1/(6 t L_max)` used by FedExP clients.
pub fn fedexp_local_step(local_steps: usize, l_max: f64) -> f64 {
    1.0 / (6.0 * local_steps as f64 * l_max)
}

/// `t` steps of gradient descent on a quadratic client from `x`; returns `x − x_t`.
pub fn local_gd_displacement(
    client: &ClientObjective,
    x: &Vector,
    local_steps: usize,
    step: f64,
) -> Result<Vector> {
    let q = client.as_quadratic().ok_or_else(|| {
        Error::contract("FedExP local training needs differentiable (quadratic) clients")
    })?;
    let mut z = x.clone();
    for _ in 0..local_steps {
        z -= q.gradient(&z) * step;
    }
    Ok(x - z)
}
