//! Randomized invariants of the envelope calculus and the server round.

use fedexprox::algorithms::{fedexprox_round, run, AlgorithmConfig, AlphaPolicy};
use fedexprox::envelope::EnvelopeContext;
use fedexprox::linalg::{Matrix, Vector};
use fedexprox::objectives::ClientObjective;
use fedexprox::problems::gen_regression;
use proptest::prelude::*;

fn quadratic_clients(n: usize, rows: usize, d: usize, entries: &[f64]) -> Vec<ClientObjective> {
    let mut it = entries.iter().copied().cycle();
    (0..n)
        .map(|i| {
            let a = Matrix::from_fn(rows, d, |_, _| it.next().unwrap());
            let b = Vector::from_fn(rows, |_, _| it.next().unwrap());
            ClientObjective::quadratic(i, a, b).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_and_gradient_forms_agree(
        n in 1usize..6, rows in 1usize..4, d in 1usize..12,
        entries in prop::collection::vec(-1.0f64..1.0, 32..64),
        x in prop::collection::vec(-3.0f64..3.0, 12),
        gamma in 0.01f64..10.0, alpha in 0.1f64..5.0,
    ) {
        let clients = quadratic_clients(n, rows, d, &entries);
        let ctx = EnvelopeContext::new(&clients, gamma).unwrap();
        let x = Vector::from_column_slice(&x[..d]);
        let set: Vec<usize> = (0..n).step_by(2).collect();
        let prox_form = fedexprox_round(&x, &ctx, &set, alpha).unwrap();
        let mut g = Vector::zeros(d);
        for &i in &set {
            g += ctx.moreau_grad(i, &x).unwrap();
        }
        let grad_form = &x - g * (alpha * gamma / set.len() as f64);
        prop_assert!((prox_form - grad_form).amax() <= 1e-12 * (1.0 + x.amax()));
    }

    #[test]
    fn envelope_sits_below_objective_and_above_minimum(
        rows in 1usize..5, d in 1usize..10,
        entries in prop::collection::vec(-1.0f64..1.0, 16..40),
        x in prop::collection::vec(-3.0f64..3.0, 10),
        gamma in 0.01f64..10.0,
    ) {
        let clients = quadratic_clients(1, rows, d, &entries);
        let ctx = EnvelopeContext::new(&clients, gamma).unwrap();
        let x = Vector::from_column_slice(&x[..d]);
        let m = ctx.moreau_value(0, &x).unwrap();
        let f = clients[0].value(&x).unwrap();
        let fmin = ctx.minima()[0];
        prop_assert!(m <= f + 1e-10 * (1.0 + f.abs()));
        prop_assert!(m >= fmin - 1e-10 * (1.0 + fmin.abs()));
    }

    #[test]
    fn envelope_gradient_matches_central_differences(
        rows in 1usize..5, d in 1usize..8,
        entries in prop::collection::vec(0.0f64..1.0, 16..40),
        x in prop::collection::vec(-2.0f64..2.0, 8),
        gamma in 0.05f64..5.0,
    ) {
        let clients = quadratic_clients(1, rows, d, &entries);
        let ctx = EnvelopeContext::new(&clients, gamma).unwrap();
        let x = Vector::from_column_slice(&x[..d]);
        let g = ctx.moreau_grad(0, &x).unwrap();
        let h = 1e-5;
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (ctx.moreau_value(0, &xp).unwrap() - ctx.moreau_value(0, &xm).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g.amax()));
        }
    }

    #[test]
    fn sampled_runs_keep_invariants(seed in 0u64..1000, tau in 1usize..5, gamma in 0.05f64..5.0) {
        let p = gen_regression(4, 2, 10, seed).unwrap();
        let cfg = AlgorithmConfig::new("s", gamma, AlphaPolicy::StoPS, 30).with_tau(tau, seed);
        let t = run(&p, &cfg).unwrap();
        for r in &t.rounds {
            prop_assert!(r.alpha_used > 0.0);
            prop_assert!(r.f_subopt >= -1e-12);
            prop_assert_eq!(r.sampled.len(), tau);
            prop_assert!(r.sampled.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
