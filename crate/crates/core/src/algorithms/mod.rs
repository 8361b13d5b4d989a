//! Server-side iteration: FedProx, FedExProx with constant or adaptive
//! extrapolation, the FedExP baseline, and τ-nice client sampling.

mod engine;
mod sampling;
mod step;

use serde::{Deserialize, Serialize};

use crate::theory::RateReport;

pub use engine::{fedexprox_round, rate_report, round_from_evals, run};
pub use sampling::{sample_tau_nice, SamplingMode, SamplingPlan};
pub use step::{
    alpha_fedexp, alpha_grads, alpha_grads_prime, alpha_stops, fedexp_local_step, grads_from_evals,
    grads_prime_factor, local_gd_displacement, stops_from_evals, StepSize, CONVERGED_THRESHOLD,
    FEDEXP_GUARD,
};

/// Default early-halt threshold on `f(x_k) − f⋆`.
pub const DEFAULT_HALT_TOLERANCE: f64 = 1e-14;

/// How the server picks `α_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaPolicy {
    /// Fixed `α`; `1` is FedProx.
    Constant { value: f64 },
    /// `α_{γ,τ} = 1/(γL_{γ,τ})`.
    #[serde(rename = "optimal")]
    OptimalConstant,
    /// Gradient diversity over the sampled clients.
    #[serde(rename = "grads")]
    GraDS,
    /// Gradient diversity scaled by `(1+γL_max)/(γL_max)`.
    #[serde(rename = "grads_prime")]
    GraDSPrime,
    /// Stochastic Polyak step on the envelopes.
    #[serde(rename = "stops")]
    StoPS,
    /// FedExP: `t` local GD steps per client and the guarded extrapolation heuristic.
    #[serde(rename = "fedexp")]
    FedExP { local_steps: usize },
}

impl AlphaPolicy {
    pub const FEDPROX: AlphaPolicy = AlphaPolicy::Constant { value: 1.0 };

    pub fn name(&self) -> String {
        match self {
            AlphaPolicy::Constant { value } => format!("constant({value})"),
            AlphaPolicy::OptimalConstant => "optimal".into(),
            AlphaPolicy::GraDS => "grads".into(),
            AlphaPolicy::GraDSPrime => "grads_prime".into(),
            AlphaPolicy::StoPS => "stops".into(),
            AlphaPolicy::FedExP { local_steps } => format!("fedexp(t={local_steps})"),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        !matches!(
            self,
            AlphaPolicy::Constant { .. } | AlphaPolicy::OptimalConstant
        )
    }
}

fn default_halt_tolerance() -> f64 {
    DEFAULT_HALT_TOLERANCE
}

fn default_true() -> bool {
    true
}

/// One algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub label: String,
    pub gamma: f64,
    pub alpha: AlphaPolicy,
    /// Clients per round; `None` is full participation.
    #[serde(default)]
    pub tau: Option<usize>,
    /// Seed of the client sampler.
    #[serde(default)]
    pub seed: u64,
    pub iterations: usize,
    #[serde(default = "default_halt_tolerance")]
    pub halt_tolerance: f64,
    /// Reject constant `α` outside `(0, 2/(γL_{γ,τ}))`.
    #[serde(default = "default_true")]
    pub theory_mode: bool,
    /// Starting point; zeros when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Keep every iterate in the trace.
    #[serde(default)]
    pub record_iterates: bool,
}

impl AlgorithmConfig {
    pub fn new(
        label: impl Into<String>,
        gamma: f64,
        alpha: AlphaPolicy,
        iterations: usize,
    ) -> Self {
        Self {
            label: label.into(),
            gamma,
            alpha,
            tau: None,
            seed: 0,
            iterations,
            halt_tolerance: DEFAULT_HALT_TOLERANCE,
            theory_mode: true,
            x0: None,
            record_iterates: false,
        }
    }

    pub fn with_tau(mut self, tau: usize, seed: u64) -> Self {
        self.tau = Some(tau);
        self.seed = seed;
        self
    }

    pub fn with_halt_tolerance(mut self, tol: f64) -> Self {
        self.halt_tolerance = tol;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn recording_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }
}

/// Metrics of one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateMetrics {
    /// `f(x) − f⋆`; `+∞` off the feasible set for indicator problems.
    pub f_subopt: f64,
    /// `M^γ(x) − inf M^γ`.
    pub env_subopt: f64,
    /// Squared distance to the solution set.
    pub dist_sq: f64,
}

/// One row of a run trace: round `k` moved `x_k` to `x_{k+1}` and the metrics describe `x_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub k: usize,
    pub alpha_used: f64,
    pub sampled: Vec<usize>,
    pub f_subopt: f64,
    pub env_subopt: f64,
    pub dist_sq_to_solution_set: f64,
    /// Seconds since the start of the run.
    pub wall_time: f64,
}

impl RoundRecord {
    pub fn metrics(&self) -> IterateMetrics {
        IterateMetrics {
            f_subopt: self.f_subopt,
            env_subopt: self.env_subopt,
            dist_sq: self.dist_sq_to_solution_set,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    /// The adaptive rule's denominator vanished.
    VanishingStep,
    /// `f(x_k) − f⋆` fell below the halt tolerance.
    Tolerance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Converged {
        after_rounds: usize,
        reason: HaltReason,
    },
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub label: String,
    pub status: RunStatus,
    /// Metrics of `x_0`.
    pub initial: IterateMetrics,
    pub rounds: Vec<RoundRecord>,
    pub final_iterate: crate::linalg::Vector,
    /// `x_0, x_1, …` when requested.
    pub iterates: Vec<crate::linalg::Vector>,
    pub rate_report: Option<RateReport>,
    /// `α` after resolving constant policies.
    pub resolved_alpha: Option<f64>,
    /// Departures from the textbook rules, echoed into metadata.
    pub notes: Vec<String>,
}

impl RunTrace {
    /// Metrics of `x_0, x_1, …, x_K`.
    pub fn metrics(&self) -> Vec<IterateMetrics> {
        std::iter::once(self.initial)
            .chain(self.rounds.iter().map(RoundRecord::metrics))
            .collect()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.alpha_used).collect()
    }
}
