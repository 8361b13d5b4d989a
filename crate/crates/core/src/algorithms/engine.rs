use std::time::Instant;

use super::step::{self, StepSize};
use super::{
    AlgorithmConfig, AlphaPolicy, HaltReason, IterateMetrics, RoundRecord, RunStatus, RunTrace,
    SamplingPlan,
};
use crate::envelope::{ClientEval, EnvelopeContext};
use crate::error::{Error, Result};
use crate::linalg::{check_len, Vector};
use crate::problems::FederatedProblem;
use crate::theory::RateReport;

/// `x + α((1/τ) Σ_{i∈S} p_i − x)` from already evaluated clients, summed in the order given.
pub fn round_from_evals(x: &Vector, evals: &[ClientEval], alpha: f64) -> Vector {
    let mut sum = Vector::zeros(x.len());
    for e in evals {
        sum += &e.prox;
    }
    let avg = sum / evals.len() as f64;
    x + (avg - x) * alpha
}

/// One FedExProx round over the client set `set` (reduced in ascending order).
pub fn fedexprox_round(
    x: &Vector,
    ctx: &EnvelopeContext<'_>,
    set: &[usize],
    alpha: f64,
) -> Result<Vector> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::contract(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if set.is_empty() {
        return Err(Error::contract("a round needs at least one client"));
    }
    check_len(x, ctx.dim(), "fedexprox_round")?;
    let mut ordered = set.to_vec();
    ordered.sort_unstable();
    let evals = ctx.evaluate_many(&ordered, x)?;
    Ok(round_from_evals(x, &evals, alpha))
}

fn metrics_at(
    problem: &FederatedProblem,
    ctx: &EnvelopeContext<'_>,
    evals: &[ClientEval],
    x: &Vector,
) -> Result<IterateMetrics> {
    let mut env = 0.0;
    for e in evals {
        env += ctx.value_from_eval(e)?;
    }
    env /= evals.len() as f64;
    Ok(IterateMetrics {
        f_subopt: problem.objective(x)? - problem.f_star(),
        env_subopt: env - ctx.average_minimum(),
        dist_sq: problem.dist_sq(x),
    })
}

fn validate(problem: &FederatedProblem, cfg: &AlgorithmConfig) -> Result<(SamplingPlan, Vector)> {
    if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
        return Err(Error::config(format!(
            "gamma must be positive and finite, got {}",
            cfg.gamma
        )));
    }
    if cfg.halt_tolerance.is_nan() {
        return Err(Error::config("halt_tolerance is NaN"));
    }
    let n = problem.n();
    let plan = match cfg.tau {
        None => SamplingPlan::full(n)?,
        Some(tau) => {
            SamplingPlan::tau_nice(n, tau, cfg.seed).map_err(|e| Error::config(e.to_string()))?
        }
    };
    match cfg.alpha {
        AlphaPolicy::Constant { value } if !(value > 0.0 && value.is_finite()) => {
            return Err(Error::config(format!(
                "constant alpha must be positive, got {value}"
            )));
        }
        AlphaPolicy::GraDSPrime if problem.l_max().is_none() => {
            return Err(Error::config(
                "grads_prime needs L_max, but the problem is not smooth",
            ));
        }
        AlphaPolicy::FedExP { local_steps } => {
            if local_steps == 0 {
                return Err(Error::config("fedexp needs at least one local step"));
            }
            if !problem.is_smooth() {
                return Err(Error::config("fedexp needs differentiable clients"));
            }
        }
        _ => {}
    }
    let x0 = match &cfg.x0 {
        Some(v) => {
            let x = Vector::from_vec(v.clone());
            check_len(&x, problem.dim(), "x0").map_err(|e| Error::config(e.to_string()))?;
            x
        }
        None => Vector::zeros(problem.dim()),
    };
    Ok((plan, x0))
}

/// Rate constants of `problem` at `(γ, τ)`, using the cached client smoothness constants.
pub fn rate_report(
    problem: &FederatedProblem,
    ctx: &EnvelopeContext<'_>,
    gamma: f64,
    tau: usize,
) -> Result<RateReport> {
    let smoothness = ctx.smoothness_given(problem.client_smoothness())?;
    if problem.is_smooth() {
        let client_l: Vec<f64> = problem
            .client_smoothness()
            .iter()
            .flatten()
            .copied()
            .collect();
        RateReport::smooth(gamma, tau, &client_l, smoothness.l_gamma, None)
    } else {
        RateReport::nonsmooth(gamma, tau, problem.n(), smoothness.l_gamma)
    }
}

/// Runs `cfg.iterations` rounds of the configured method on `problem`.
///
/// The trace is a pure function of `(problem, cfg)` apart from `wall_time`.
pub fn run(problem: &FederatedProblem, cfg: &AlgorithmConfig) -> Result<RunTrace> {
    let (plan, x0) = validate(problem, cfg)?;
    let gamma = cfg.gamma;
    let ctx =
        EnvelopeContext::with_minima(problem.clients(), gamma, problem.client_minima().to_vec())?;
    let all: Vec<usize> = (0..problem.n()).collect();

    let needs_report = matches!(cfg.alpha, AlphaPolicy::OptimalConstant)
        || (cfg.theory_mode && matches!(cfg.alpha, AlphaPolicy::Constant { .. }));
    let report = if needs_report {
        Some(rate_report(problem, &ctx, gamma, plan.tau())?)
    } else {
        None
    };

    let resolved_alpha = match cfg.alpha {
        AlphaPolicy::Constant { value } => {
            if let (true, Some(r)) = (cfg.theory_mode, &report) {
                if value * gamma * r.l_gamma_tau >= 2.0 {
                    return Err(Error::config(format!(
                        "constant alpha = {value} violates alpha < 2/(gamma L_gamma_tau) = {}",
                        r.alpha_upper
                    )));
                }
            }
            Some(value)
        }
        AlphaPolicy::OptimalConstant => report.as_ref().map(|r| r.alpha_opt),
        _ => None,
    };

    let mut notes = Vec::new();
    let fedexp_step = match cfg.alpha {
        AlphaPolicy::FedExP { local_steps } => {
            let l_max = problem.l_max().expect("validated smooth");
            notes.push(format!(
                "fedexp: extrapolation is max(1, sum|d|^2 / (|sum d|^2 + {:e})); the unguarded rule has neither the floor nor the guard",
                step::FEDEXP_GUARD
            ));
            Some((local_steps, step::fedexp_local_step(local_steps, l_max)))
        }
        _ => None,
    };
    let l_max = problem.l_max();

    let start = Instant::now();
    let mut x = x0;
    let mut evals = ctx.evaluate_many(&all, &x)?;
    let initial = metrics_at(problem, &ctx, &evals, &x)?;
    let mut rounds = Vec::with_capacity(cfg.iterations);
    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(x.clone());
    }
    let mut status = RunStatus::Completed;

    for k in 0..cfg.iterations {
        let wrap = |e: Error| Error::Round {
            round: k,
            source: Box::new(e),
        };
        let sampled = plan.sample(k as u64);
        let chosen: Vec<ClientEval> = sampled.iter().map(|&i| evals[i].clone()).collect();

        let (alpha, next) = if let Some((local_steps, lr)) = fedexp_step {
            let deltas = sampled
                .iter()
                .map(|&i| step::local_gd_displacement(&problem.clients()[i], &x, local_steps, lr))
                .collect::<Result<Vec<_>>>()
                .map_err(wrap)?;
            let alpha = step::alpha_fedexp(&deltas);
            let mut sum = Vector::zeros(x.len());
            for d in &deltas {
                sum += d;
            }
            let next = &x - (sum / deltas.len() as f64) * alpha;
            (alpha, next)
        } else {
            let rule = match cfg.alpha {
                AlphaPolicy::Constant { .. } | AlphaPolicy::OptimalConstant => {
                    StepSize::Step(resolved_alpha.expect("constant policies resolve"))
                }
                AlphaPolicy::GraDS => step::grads_from_evals(&chosen).map_err(wrap)?,
                AlphaPolicy::GraDSPrime => {
                    let factor = step::grads_prime_factor(gamma, l_max.expect("validated smooth"))
                        .map_err(wrap)?;
                    match step::grads_from_evals(&chosen).map_err(wrap)? {
                        StepSize::Step(a) => StepSize::Step(a * factor),
                        StepSize::Converged => StepSize::Converged,
                    }
                }
                AlphaPolicy::StoPS => step::stops_from_evals(&ctx, &chosen).map_err(wrap)?,
                AlphaPolicy::FedExP { .. } => unreachable!("handled above"),
            };
            let alpha = match rule {
                StepSize::Step(a) => a,
                StepSize::Converged => {
                    status = RunStatus::Converged {
                        after_rounds: k,
                        reason: HaltReason::VanishingStep,
                    };
                    break;
                }
            };
            (alpha, round_from_evals(&x, &chosen, alpha))
        };

        x = next;
        evals = ctx.evaluate_many(&all, &x).map_err(wrap)?;
        let m = metrics_at(problem, &ctx, &evals, &x).map_err(wrap)?;
        rounds.push(RoundRecord {
            k,
            alpha_used: alpha,
            sampled,
            f_subopt: m.f_subopt,
            env_subopt: m.env_subopt,
            dist_sq_to_solution_set: m.dist_sq,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if cfg.record_iterates {
            iterates.push(x.clone());
        }
        if m.f_subopt < cfg.halt_tolerance {
            status = RunStatus::Converged {
                after_rounds: k + 1,
                reason: HaltReason::Tolerance,
            };
            break;
        }
    }

    Ok(RunTrace {
        label: cfg.label.clone(),
        status,
        initial,
        rounds,
        final_iterate: x,
        iterates,
        rate_report: report,
        resolved_alpha,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_example1, gen_feasibility, gen_regression};

    #[test]
    fn zero_rounds_is_an_empty_trace() {
        let p = gen_example1(3, 1.0).unwrap();
        let cfg = AlgorithmConfig::new("fedprox", 1.0, AlphaPolicy::FEDPROX, 0);
        let t = run(&p, &cfg).unwrap();
        assert!(t.rounds.is_empty());
        assert_eq!(t.status, RunStatus::Completed);
    }

    #[test]
    fn reformulated_update_agrees() {
        let p = gen_regression(4, 3, 20, 8).unwrap();
        let ctx = EnvelopeContext::new(p.clients(), 0.3).unwrap();
        let x = Vector::from_fn(20, |i, _| (i as f64 * 0.37).sin());
        let set = [0, 2, 3];
        let alpha = 1.7;
        let prox_form = fedexprox_round(&x, &ctx, &set, alpha).unwrap();
        let mut g = Vector::zeros(20);
        for &i in &set {
            g += ctx.moreau_grad(i, &x).unwrap();
        }
        let grad_form = &x - g * (alpha * 0.3 / set.len() as f64);
        assert!((prox_form - grad_form).norm() <= 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn alpha_one_is_fedprox_average() {
        let p = gen_regression(3, 2, 9, 4).unwrap();
        let ctx = EnvelopeContext::new(p.clients(), 0.5).unwrap();
        let x = Vector::from_element(9, 0.2);
        let next = fedexprox_round(&x, &ctx, &[0, 1, 2], 1.0).unwrap();
        let mut avg = Vector::zeros(9);
        for i in 0..3 {
            avg += ctx.prox(i, &x).unwrap();
        }
        avg /= 3.0;
        assert!((next - avg).norm() < 1e-15);
    }

    #[test]
    fn solution_is_a_fixed_point() {
        let p = gen_regression(3, 2, 9, 4).unwrap();
        let ctx = EnvelopeContext::new(p.clients(), 2.0).unwrap();
        let xs = p.reference_point().clone();
        let next = fedexprox_round(&xs, &ctx, &[0, 1, 2], 3.0).unwrap();
        assert!((next - &xs).norm() < 1e-12 * (1.0 + xs.norm()));
    }

    #[test]
    fn theory_mode_rejects_large_constant() {
        let p = gen_example1(4, 1.0).unwrap();
        // 2/(γ L_γ) = 16 at θ = γ = 1, n = 4
        let cfg = AlgorithmConfig::new("big", 1.0, AlphaPolicy::Constant { value: 16.5 }, 5);
        assert!(matches!(run(&p, &cfg), Err(Error::Config(_))));
        let mut loose = cfg.clone();
        loose.theory_mode = false;
        assert!(run(&p, &loose).is_ok());
    }

    #[test]
    fn example1_optimal_alpha_solves_in_one_round() {
        let p = gen_example1(4, 1.0).unwrap();
        let cfg = AlgorithmConfig::new("opt", 1.0, AlphaPolicy::OptimalConstant, 10)
            .with_x0(vec![1.0, -2.0, 0.5, 3.0]);
        let t = run(&p, &cfg).unwrap();
        assert!((t.resolved_alpha.unwrap() - 8.0).abs() < 1e-9);
        assert_eq!(t.rounds.len(), 1);
        assert!(t.rounds[0].dist_sq_to_solution_set < 1e-20);
    }

    #[test]
    fn adaptive_rules_signal_convergence_at_the_solution() {
        let p = gen_regression(3, 2, 9, 4).unwrap();
        for policy in [
            AlphaPolicy::GraDS,
            AlphaPolicy::StoPS,
            AlphaPolicy::GraDSPrime,
        ] {
            let cfg = AlgorithmConfig::new("adaptive", 1.0, policy, 5)
                .with_x0(p.reference_point().iter().copied().collect());
            let t = run(&p, &cfg).unwrap();
            assert_eq!(
                t.status,
                RunStatus::Converged {
                    after_rounds: 0,
                    reason: HaltReason::VanishingStep
                }
            );
        }
    }

    #[test]
    fn invalid_configs() {
        let p = gen_feasibility(2, 6, 2, 1).unwrap();
        let mut cfg = AlgorithmConfig::new("x", 1.0, AlphaPolicy::GraDSPrime, 3);
        assert!(matches!(run(&p, &cfg), Err(Error::Config(_))));
        cfg.alpha = AlphaPolicy::FedExP { local_steps: 2 };
        assert!(matches!(run(&p, &cfg), Err(Error::Config(_))));
        cfg.alpha = AlphaPolicy::FEDPROX;
        cfg.tau = Some(3);
        assert!(matches!(run(&p, &cfg), Err(Error::Config(_))));
        cfg.tau = None;
        cfg.gamma = 0.0;
        assert!(matches!(run(&p, &cfg), Err(Error::Config(_))));
        cfg.gamma = 1.0;
        cfg.x0 = Some(vec![0.0; 5]);
        assert!(matches!(run(&p, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn fedexp_runs_and_decreases_suboptimality() {
        let p = gen_regression(4, 2, 12, 5).unwrap();
        let cfg = AlgorithmConfig::new("fedexp", 1.0, AlphaPolicy::FedExP { local_steps: 3 }, 50);
        let t = run(&p, &cfg).unwrap();
        assert_eq!(t.rounds.len(), 50);
        assert!(t.rounds.iter().all(|r| r.alpha_used >= 1.0));
        assert!(t.rounds.last().unwrap().f_subopt < t.initial.f_subopt);
        assert_eq!(t.notes.len(), 1);
    }

    #[test]
    fn traces_are_deterministic() {
        let p = gen_regression(5, 2, 15, 6).unwrap();
        let cfg = AlgorithmConfig::new("s", 0.5, AlphaPolicy::StoPS, 40).with_tau(2, 99);
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        assert_eq!(a.final_iterate, b.final_iterate);
        for (ra, rb) in a.rounds.iter().zip(&b.rounds) {
            assert_eq!(ra.alpha_used.to_bits(), rb.alpha_used.to_bits());
            assert_eq!(ra.sampled, rb.sampled);
            assert_eq!(ra.f_subopt.to_bits(), rb.f_subopt.to_bits());
        }
    }
}
