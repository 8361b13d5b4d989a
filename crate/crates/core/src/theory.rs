//! Rate constants and bounds for constant and adaptive extrapolation.
//!
//! Every function takes the smoothness constants explicitly, so checks here
//! are independent of how (or how accurately) those constants were obtained.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_tau(n: usize, tau: usize) -> Result<()> {
    if n == 0 || tau == 0 || tau > n {
        return Err(Error::contract(format!(
            "tau must lie in [1, n]; got tau = {tau}, n = {n}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::contract(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Weights `((n−τ)/(τ(n−1)), n(τ−1)/(τ(n−1)))` of the τ-nice interpolation; `(1, 0)` for `n = 1`.
fn sampling_weights(n: usize, tau: usize) -> (f64, f64) {
    if n == 1 {
        return (1.0, 0.0);
    }
    let (n, tau) = (n as f64, tau as f64);
    (
        (n - tau) / (tau * (n - 1.0)),
        n * (tau - 1.0) / (tau * (n - 1.0)),
    )
}

/// Effective smoothness `L_{γ,τ}` under τ-nice sampling, for smooth clients.
pub fn l_gamma_tau(l_max: f64, l_gamma: f64, gamma: f64, n: usize, tau: usize) -> Result<f64> {
    check_tau(n, tau)?;
    check_positive("gamma", gamma)?;
    check_positive("L_max", l_max)?;
    let single = l_max / (1.0 + gamma * l_max);
    let (w_single, w_full) = sampling_weights(n, tau);
    if n == 1 {
        return Ok(single);
    }
    Ok(w_single * single + w_full * l_gamma)
}

/// `L_{γ,τ}` and its optimal extrapolation for non-smooth clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonsmoothRate {
    pub l_gamma_tau: f64,
    pub alpha_opt: f64,
}

/// Non-smooth variant: every client envelope is only `1/γ`-smooth.
pub fn nonsmooth_rate_constant(
    gamma: f64,
    tau: usize,
    n: usize,
    l_gamma: f64,
) -> Result<NonsmoothRate> {
    check_tau(n, tau)?;
    check_positive("gamma", gamma)?;
    // allow a hair of estimation noise above 1/γ
    if gamma * l_gamma > 1.0 + 1e-9 {
        return Err(Error::contract(format!(
            "L_gamma = {l_gamma} exceeds 1/gamma = {}: envelopes are at most 1/gamma-smooth",
            1.0 / gamma
        )));
    }
    let (w_single, w_full) = sampling_weights(n, tau);
    let l = w_single / gamma + w_full * l_gamma;
    Ok(NonsmoothRate {
        l_gamma_tau: l,
        alpha_opt: 1.0 / (gamma * l),
    })
}

/// `α_{γ,τ} = 1/(γ L_{γ,τ})`.
pub fn optimal_alpha(gamma: f64, l_gamma_tau: f64) -> f64 {
    1.0 / (gamma * l_gamma_tau)
}

/// Largest admissible constant extrapolation, `2/(γ L_{γ,τ})` (exclusive).
pub fn alpha_upper_bound(gamma: f64, l_gamma_tau: f64) -> f64 {
    2.0 / (gamma * l_gamma_tau)
}

fn check_admissible(gamma: f64, alpha: f64, l_gamma_tau: f64) -> Result<()> {
    let s = alpha * gamma * l_gamma_tau;
    if !(alpha > 0.0 && s < 2.0) {
        return Err(Error::contract(format!(
            "alpha = {alpha} is not admissible: need 0 < alpha < 2/(gamma L_gamma_tau) = {}",
            alpha_upper_bound(gamma, l_gamma_tau)
        )));
    }
    Ok(())
}

/// `C(γ,τ,α) = (1+γL_max)/(αγ(2 − αγL_{γ,τ}))`.
pub fn rate_constant(gamma: f64, alpha: f64, l_max: f64, l_gamma_tau: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    check_admissible(gamma, alpha, l_gamma_tau)?;
    Ok((1.0 + gamma * l_max) / (alpha * gamma * (2.0 - alpha * gamma * l_gamma_tau)))
}

/// `C(γ,τ,1)/C(γ,τ,α_{γ,τ}) = 1/(γL_{γ,τ}(2 − γL_{γ,τ}))`.
pub fn fedprox_speedup(gamma: f64, l_gamma_tau: f64) -> f64 {
    let s = gamma * l_gamma_tau;
    1.0 / (s * (2.0 - s))
}

/// Lower bound on [`fedprox_speedup`] implied by `γL_{γ,τ} ≤ γL_max/(1+γL_max)`:
/// `(1+γL_max)²/(γL_max(2+γL_max))`.
pub fn fedprox_speedup_floor(gamma: f64, l_max: f64) -> f64 {
    let a = gamma * l_max;
    (1.0 + a) * (1.0 + a) / (a * (2.0 + a))
}

/// Bounds on the worst-case gain `L_max / C(γ,n,α_{γ,n})` over FedExP.
pub fn fedexp_worst_case_gain_bounds(gamma: f64, client_l: &[f64]) -> Result<(f64, f64)> {
    check_positive("gamma", gamma)?;
    if client_l.is_empty() {
        return Err(Error::contract("need at least one smoothness constant"));
    }
    let n = client_l.len() as f64;
    let l_max = client_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_env: f64 = client_l.iter().map(|l| l / (1.0 + gamma * l)).sum::<f64>() / n;
    let lo = l_max / (1.0 + gamma * l_max) / mean_env;
    Ok((lo, n * lo))
}

/// Worst-case gain `L_max / C(γ,n,α_{γ,n}) = L_max / (L_γ(1+γL_max))`.
pub fn fedexp_gain(gamma: f64, l_max: f64, l_gamma: f64) -> f64 {
    l_max / (l_gamma * (1.0 + gamma * l_max))
}

/// Per-round contraction `1 − αγ(2 − αγL_{γ,τ})·μ/(2(1+γL_max))` of `E‖x_k − x⋆‖²`.
pub fn strongly_convex_rate(
    mu: f64,
    gamma: f64,
    alpha: f64,
    l_max: f64,
    l_gamma_tau: f64,
) -> Result<f64> {
    check_positive("mu", mu)?;
    check_positive("gamma", gamma)?;
    check_admissible(gamma, alpha, l_gamma_tau)?;
    let s = alpha * gamma;
    let rho = 1.0 - s * (2.0 - s * l_gamma_tau) * mu / (2.0 * (1.0 + gamma * l_max));
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::contract(format!(
            "contraction factor {rho} outside (0, 1): constants are inconsistent"
        )));
    }
    Ok(rho)
}

/// One point of the `α ↦ C(γ,τ,α)` curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub alpha: f64,
    pub c: f64,
}

/// Theory-side constants for one `(γ, τ)` pair, serialized into run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub gamma: f64,
    pub tau: usize,
    pub n: usize,
    pub smooth: bool,
    pub l_max: Option<f64>,
    pub l_gamma: f64,
    pub l_gamma_tau: f64,
    pub alpha_opt: f64,
    pub alpha_upper: f64,
    /// `C(γ,τ,α_{γ,τ})`; smooth problems only.
    pub c_opt: Option<f64>,
    /// `C(γ,τ,α)` on an evenly spaced grid over the admissible interval.
    pub c_grid: Vec<RatePoint>,
    pub speedup_vs_fedprox: Option<f64>,
    pub speedup_floor: Option<f64>,
    /// `L_max / C(γ,n,α_{γ,n})`.
    pub fedexp_gain: Option<f64>,
    pub fedexp_worst_ratio_bounds: Option<(f64, f64)>,
    pub mu: Option<f64>,
    /// Contraction factor at `α_{γ,τ}` when `μ` is known.
    pub strongly_convex_rate: Option<f64>,
}

const REPORT_GRID_POINTS: usize = 21;

impl RateReport {
    /// Report for smooth clients with smoothness constants `client_l`.
    pub fn smooth(
        gamma: f64,
        tau: usize,
        client_l: &[f64],
        l_gamma: f64,
        mu: Option<f64>,
    ) -> Result<Self> {
        let n = client_l.len();
        let l_max = client_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let l_tau = l_gamma_tau(l_max, l_gamma, gamma, n, tau)?;
        let alpha_opt = optimal_alpha(gamma, l_tau);
        let alpha_upper = alpha_upper_bound(gamma, l_tau);
        let c_opt = rate_constant(gamma, alpha_opt, l_max, l_tau)?;
        let c_grid = (1..REPORT_GRID_POINTS)
            .map(|k| {
                let alpha = alpha_upper * k as f64 / REPORT_GRID_POINTS as f64;
                rate_constant(gamma, alpha, l_max, l_tau).map(|c| RatePoint { alpha, c })
            })
            .collect::<Result<Vec<_>>>()?;
        let strongly = match mu {
            Some(mu) => Some(strongly_convex_rate(mu, gamma, alpha_opt, l_max, l_tau)?),
            None => None,
        };
        Ok(Self {
            gamma,
            tau,
            n,
            smooth: true,
            l_max: Some(l_max),
            l_gamma,
            l_gamma_tau: l_tau,
            alpha_opt,
            alpha_upper,
            c_opt: Some(c_opt),
            c_grid,
            speedup_vs_fedprox: Some(fedprox_speedup(gamma, l_tau)),
            speedup_floor: Some(fedprox_speedup_floor(gamma, l_max)),
            fedexp_gain: Some(fedexp_gain(gamma, l_max, l_gamma)),
            fedexp_worst_ratio_bounds: Some(fedexp_worst_case_gain_bounds(gamma, client_l)?),
            mu,
            strongly_convex_rate: strongly,
        })
    }

    /// Report for non-smooth (indicator) clients.
    pub fn nonsmooth(gamma: f64, tau: usize, n: usize, l_gamma: f64) -> Result<Self> {
        let r = nonsmooth_rate_constant(gamma, tau, n, l_gamma)?;
        Ok(Self {
            gamma,
            tau,
            n,
            smooth: false,
            l_max: None,
            l_gamma,
            l_gamma_tau: r.l_gamma_tau,
            alpha_opt: r.alpha_opt,
            alpha_upper: alpha_upper_bound(gamma, r.l_gamma_tau),
            c_opt: None,
            c_grid: Vec::new(),
            speedup_vs_fedprox: None,
            speedup_floor: None,
            fedexp_gain: None,
            fedexp_worst_ratio_bounds: None,
            mu: None,
            strongly_convex_rate: None,
        })
    }
}
