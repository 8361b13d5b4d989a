//! Moreau envelopes of client objectives and of their average.
//!
//! For a client `f_i` and `γ > 0`, the envelope is evaluated through the prox:
//! `M_i(x) = f_i(p) + ‖x − p‖²/(2γ)` and `∇M_i(x) = (x − p)/γ` with
//! `p = Prox_{γ f_i}(x)`. Averages always reduce in ascending client order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, check_len, PowerIterationOptions, Vector};
use crate::objectives::{ClientObjective, ObjectiveKind};

/// Below this many flops per round the client loop stays sequential.
const PARALLEL_WORK_THRESHOLD: usize = 1 << 21;

/// Everything a round needs to know about one client at the current iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientEval {
    pub client: usize,
    pub prox: Vector,
    /// `x − Prox_{γ f_i}(x)`.
    pub displacement: Vector,
}

/// Smoothness constants of the envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSmoothness {
    /// Smoothness of the average envelope `M^γ`, i.e. `λ_max` of its Hessian.
    pub l_gamma: f64,
    /// `L_i/(1+γL_i)` for smooth clients, `1/γ` otherwise.
    pub per_client: Vec<f64>,
}

/// Envelope calculus at a fixed γ over a fixed set of clients.
#[derive(Debug, Clone)]
pub struct EnvelopeContext<'a> {
    gamma: f64,
    clients: &'a [ClientObjective],
    minima: Vec<f64>,
}

impl<'a> EnvelopeContext<'a> {
    /// Builds the context, factorizing every prox system and computing each
    /// client's envelope minimum (which equals `inf f_i`).
    pub fn new(clients: &'a [ClientObjective], gamma: f64) -> Result<Self> {
        let minima = clients
            .iter()
            .map(ClientObjective::minimum)
            .collect::<Result<Vec<_>>>()?;
        Self::with_minima(clients, gamma, minima)
    }

    /// Same as [`EnvelopeContext::new`] with precomputed `inf f_i`.
    pub fn with_minima(
        clients: &'a [ClientObjective],
        gamma: f64,
        minima: Vec<f64>,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::contract(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        if clients.is_empty() {
            return Err(Error::contract(
                "envelope context needs at least one client",
            ));
        }
        if minima.len() != clients.len() {
            return Err(Error::contract(
                "one envelope minimum per client is required",
            ));
        }
        let d = clients[0].dim();
        if clients.iter().any(|c| c.dim() != d) {
            return Err(Error::contract("clients disagree on the dimension"));
        }
        for c in clients {
            c.prepare(gamma)?;
        }
        Ok(Self {
            gamma,
            clients,
            minima,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.clients.len()
    }

    pub fn dim(&self) -> usize {
        self.clients[0].dim()
    }

    pub fn clients(&self) -> &'a [ClientObjective] {
        self.clients
    }

    /// Cached `inf M^γ_{f_i}`.
    pub fn minima(&self) -> &[f64] {
        &self.minima
    }

    fn client(&self, i: usize) -> Result<&ClientObjective> {
        self.clients.get(i).ok_or_else(|| {
            Error::contract(format!("client index {i} out of range (n = {})", self.n()))
        })
    }

    pub fn prox(&self, i: usize, x: &Vector) -> Result<Vector> {
        self.client(i)?.prox(self.gamma, x)
    }

    pub fn evaluate(&self, i: usize, x: &Vector) -> Result<ClientEval> {
        let prox = self.prox(i, x)?;
        let displacement = x - &prox;
        Ok(ClientEval {
            client: i,
            prox,
            displacement,
        })
    }

    /// Evaluates the listed clients, possibly in parallel; output order follows `clients`.
    pub fn evaluate_many(&self, clients: &[usize], x: &Vector) -> Result<Vec<ClientEval>> {
        let d = self.dim();
        if clients.len() > 1 && clients.len() * d * d >= PARALLEL_WORK_THRESHOLD {
            clients.par_iter().map(|&i| self.evaluate(i, x)).collect()
        } else {
            clients.iter().map(|&i| self.evaluate(i, x)).collect()
        }
    }

    /// Envelope value from a prox already computed at `x`.
    pub fn value_from_eval(&self, eval: &ClientEval) -> Result<f64> {
        let c = self.client(eval.client)?;
        let f_at_prox = match &c.kind {
            ObjectiveKind::Quadratic(q) => q.value(&eval.prox),
            // the prox lies on the set
            ObjectiveKind::AffineIndicator(_) => 0.0,
        };
        Ok(f_at_prox + eval.displacement.norm_squared() / (2.0 * self.gamma))
    }

    /// `M^γ_{f_i}(x)`.
    pub fn moreau_value(&self, i: usize, x: &Vector) -> Result<f64> {
        let eval = self.evaluate(i, x)?;
        self.value_from_eval(&eval)
    }

    /// `∇M^γ_{f_i}(x) = (x − Prox_{γ f_i}(x))/γ`.
    pub fn moreau_grad(&self, i: usize, x: &Vector) -> Result<Vector> {
        Ok(self.evaluate(i, x)?.displacement / self.gamma)
    }

    /// `M^γ(x) = (1/n) Σ M^γ_{f_i}(x)`.
    pub fn average_value(&self, x: &Vector) -> Result<f64> {
        check_len(x, self.dim(), "average_envelope_value")?;
        let all: Vec<usize> = (0..self.n()).collect();
        let evals = self.evaluate_many(&all, x)?;
        let mut total = 0.0;
        for e in &evals {
            total += self.value_from_eval(e)?;
        }
        Ok(total / self.n() as f64)
    }

    /// `∇M^γ(x) = (1/n) Σ ∇M^γ_{f_i}(x)`.
    pub fn average_grad(&self, x: &Vector) -> Result<Vector> {
        check_len(x, self.dim(), "average_envelope_grad")?;
        let all: Vec<usize> = (0..self.n()).collect();
        let evals = self.evaluate_many(&all, x)?;
        let mut sum = Vector::zeros(self.dim());
        for e in &evals {
            sum += &e.displacement;
        }
        Ok(sum / (self.gamma * self.n() as f64))
    }

    /// `inf M^γ` under interpolation: the mean of the client minima.
    pub fn average_minimum(&self) -> f64 {
        let mut total = 0.0;
        for m in &self.minima {
            total += m;
        }
        total / self.n() as f64
    }

    /// Hessian-vector product of `M^γ_{f_i}`.
    ///
    /// Quadratic: `(1/γ)(v − (1/γ)(AᵀA + I/γ)⁻¹ v)`. Affine indicator:
    /// `(1/γ)·Cᵀ(CCᵀ)⁻¹C v`.
    pub fn hessian_apply(&self, i: usize, v: &Vector) -> Result<Vector> {
        let c = self.client(i)?;
        let g = self.gamma;
        Ok(match &c.kind {
            ObjectiveKind::Quadratic(q) => {
                let s = q.solve_shifted(g, v, c.id)?;
                (v - s / g) / g
            }
            ObjectiveKind::AffineIndicator(set) => set.row_space_projection(v) / g,
        })
    }

    /// Hessian-vector product of the average envelope.
    pub fn average_hessian_apply(&self, v: &Vector) -> Result<Vector> {
        let mut sum = Vector::zeros(self.dim());
        for i in 0..self.n() {
            sum += self.hessian_apply(i, v)?;
        }
        Ok(sum / self.n() as f64)
    }

    /// Smoothness constants, estimating each client's `L_i` by power iteration.
    pub fn smoothness(&self) -> Result<EnvelopeSmoothness> {
        let l = self
            .clients
            .iter()
            .map(ClientObjective::smoothness)
            .collect::<Result<Vec<_>>>()?;
        self.smoothness_given(&l)
    }

    /// Smoothness constants given each client's `L_i` (`None` for non-smooth clients).
    pub fn smoothness_given(&self, client_l: &[Option<f64>]) -> Result<EnvelopeSmoothness> {
        if client_l.len() != self.n() {
            return Err(Error::contract(
                "one smoothness constant per client is required",
            ));
        }
        let g = self.gamma;
        let per_client = client_l
            .iter()
            .map(|l| match l {
                Some(l) => l / (1.0 + g * l),
                None => 1.0 / g,
            })
            .collect();
        let l_gamma = linalg::power_iteration(
            self.dim(),
            |v| self.average_hessian_apply(v),
            PowerIterationOptions::default(),
        )?;
        Ok(EnvelopeSmoothness {
            l_gamma,
            per_client,
        })
    }
}
