//! Experiment runner: JSON configuration, presets, parallel execution of runs, and
//! CSV/JSON emission of traces and metadata.
//!
//! Each run writes `NN_<label>.csv` with header `k,f_subopt,env_subopt,dist_sq,alpha_k,sampled`.
//! Row `k = 0` carries the metrics of `x_0` with empty `alpha_k` and `sampled`; row `k ≥ 1`
//! carries the metrics of `x_k` together with the `α` and client set of the round that
//! produced it. Sampled indices are 0-based and joined with `;`. Floats use the shortest
//! decimal representation that parses back to the same `f64`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algorithms::{
    self, AlgorithmConfig, AlphaPolicy, RunStatus, RunTrace, DEFAULT_HALT_TOLERANCE,
};
use crate::envelope::EnvelopeContext;
use crate::error::{Error, Result};
use crate::problems::{gen_example1, gen_feasibility, gen_regression, FederatedProblem};
use crate::theory::RateReport;

pub const CONFIG_SCHEMA: &str = "fedexprox-config/v1";
pub const META_SCHEMA: &str = "fedexprox-meta/v1";
pub const CSV_HEADER: [&str; 6] = [
    "k",
    "f_subopt",
    "env_subopt",
    "dist_sq",
    "alpha_k",
    "sampled",
];

/// Where the problem instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Regression {
        n: usize,
        rows_per_client: usize,
        d: usize,
        seed: u64,
    },
    Example1 {
        n: usize,
        theta: f64,
    },
    Feasibility {
        n: usize,
        d: usize,
        rows_per_set: usize,
        seed: u64,
    },
    /// A problem saved with [`FederatedProblem::save`].
    File {
        path: PathBuf,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<FederatedProblem> {
        match self {
            ProblemSpec::Regression {
                n,
                rows_per_client,
                d,
                seed,
            } => gen_regression(*n, *rows_per_client, *d, *seed),
            ProblemSpec::Example1 { n, theta } => gen_example1(*n, *theta),
            ProblemSpec::Feasibility {
                n,
                d,
                rows_per_set,
                seed,
            } => gen_feasibility(*n, *d, *rows_per_set, *seed),
            ProblemSpec::File { path } => FederatedProblem::load(path),
        }
    }
}

/// One algorithm variant of an experiment. Iteration budget, halt tolerance and
/// starting point are shared across variants and live on [`ExperimentConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmVariant {
    pub label: String,
    pub gamma: f64,
    pub alpha: AlphaPolicy,
    #[serde(default)]
    pub tau: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub theory_mode: bool,
}

impl AlgorithmVariant {
    pub fn new(label: impl Into<String>, gamma: f64, alpha: AlphaPolicy) -> Self {
        Self {
            label: label.into(),
            gamma,
            alpha,
            tau: None,
            seed: 0,
            theory_mode: true,
        }
    }
}

/// Extra material copied into `meta.json` or the output directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoFlags {
    /// Copy the experiment configuration into `meta.json`.
    #[serde(default = "default_true")]
    pub config: bool,
    /// Save the problem instance as `problem.json` next to the traces.
    #[serde(default)]
    pub problem: bool,
}

impl Default for EchoFlags {
    fn default() -> Self {
        Self {
            config: true,
            problem: false,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

fn default_halt_tolerance() -> f64 {
    DEFAULT_HALT_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub name: String,
    pub problem: ProblemSpec,
    pub algorithms: Vec<AlgorithmVariant>,
    pub iterations: usize,
    #[serde(default = "default_halt_tolerance")]
    pub halt_tolerance: f64,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub echo: EchoFlags,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks everything that can be checked without building the problem.
    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::config(format!(
                "unsupported config schema {:?}, expected {CONFIG_SCHEMA:?}",
                self.schema
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("at least one algorithm variant is required"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        let mut seen = HashSet::new();
        for a in &self.algorithms {
            if a.label.is_empty() {
                return Err(Error::config("algorithm labels must be non-empty"));
            }
            if !seen.insert(a.label.as_str()) {
                return Err(Error::config(format!(
                    "duplicate algorithm label {:?}",
                    a.label
                )));
            }
        }
        Ok(())
    }

    /// Run configuration of variant `i`.
    pub fn algorithm_config(&self, i: usize) -> AlgorithmConfig {
        let a = &self.algorithms[i];
        let mut cfg = AlgorithmConfig::new(a.label.clone(), a.gamma, a.alpha, self.iterations)
            .with_halt_tolerance(self.halt_tolerance);
        cfg.tau = a.tau;
        cfg.seed = a.seed;
        cfg.theory_mode = a.theory_mode;
        cfg.x0 = self.x0.clone();
        cfg
    }
}

/// A trace row tagged with its run; `alpha_k` and `sampled` are absent for `k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run_id: usize,
    pub label: String,
    pub k: usize,
    pub f_subopt: f64,
    pub env_subopt: f64,
    pub dist_sq: f64,
    pub alpha_k: Option<f64>,
    pub sampled: Option<Vec<usize>>,
}

/// Rows of `trace` in `k` order, starting with `x_0`.
pub fn metrics_rows(run_id: usize, trace: &RunTrace) -> Vec<MetricsRow> {
    let mut rows = Vec::with_capacity(trace.rounds.len() + 1);
    rows.push(MetricsRow {
        run_id,
        label: trace.label.clone(),
        k: 0,
        f_subopt: trace.initial.f_subopt,
        env_subopt: trace.initial.env_subopt,
        dist_sq: trace.initial.dist_sq,
        alpha_k: None,
        sampled: None,
    });
    for r in &trace.rounds {
        rows.push(MetricsRow {
            run_id,
            label: trace.label.clone(),
            k: r.k + 1,
            f_subopt: r.f_subopt,
            env_subopt: r.env_subopt,
            dist_sq: r.dist_sq_to_solution_set,
            alpha_k: Some(r.alpha_used),
            sampled: Some(r.sampled.clone()),
        });
    }
    rows
}

/// Writes the trace CSV of one run.
pub fn write_trace_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let sampled = r
            .sampled
            .as_ref()
            .map(|s| s.iter().map(usize::to_string).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        w.write_record([
            r.k.to_string(),
            r.f_subopt.to_string(),
            r.env_subopt.to_string(),
            r.dist_sq.to_string(),
            r.alpha_k.map(|a| a.to_string()).unwrap_or_default(),
            sampled,
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed trace CSV: `(k, f_subopt)` pairs in file order.
pub fn read_trace_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let header = r.headers().map_err(io)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Io(format!(
            "{}: unexpected CSV header",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let bad = |what: &str| {
            Error::Io(format!(
                "{}: bad {what} field {:?}",
                path.display(),
                rec.as_slice()
            ))
        };
        let k = rec[0].parse::<usize>().map_err(|_| bad("k"))?;
        let f = rec[1].parse::<f64>().map_err(|_| bad("f_subopt"))?;
        out.push((k, f));
    }
    Ok(out)
}

/// Outcome of comparing two traces at a suboptimality threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Comparison {
    /// `k_a / k_b`, the first rounds at which each trace reaches the threshold.
    Speedup { factor: f64, k_a: usize, k_b: usize },
    /// At least one trace never reaches the threshold.
    Incomparable {
        k_a: Option<usize>,
        k_b: Option<usize>,
    },
}

impl Comparison {
    pub fn factor(&self) -> Option<f64> {
        match self {
            Comparison::Speedup { factor, .. } => Some(*factor),
            Comparison::Incomparable { .. } => None,
        }
    }
}

/// First `k` whose suboptimality is at most `threshold`.
pub fn first_reach(series: &[(usize, f64)], threshold: f64) -> Option<usize> {
    series
        .iter()
        .find(|(_, f)| *f <= threshold)
        .map(|(k, _)| *k)
}

/// Compares two in-memory series of `(k, f_subopt)`.
pub fn compare_series(a: &[(usize, f64)], b: &[(usize, f64)], threshold: f64) -> Comparison {
    let (k_a, k_b) = (first_reach(a, threshold), first_reach(b, threshold));
    match (k_a, k_b) {
        (Some(k_a), Some(k_b)) => {
            let factor = if k_a == k_b {
                1.0
            } else {
                k_a as f64 / k_b as f64
            };
            Comparison::Speedup { factor, k_a, k_b }
        }
        _ => Comparison::Incomparable { k_a, k_b },
    }
}

/// `(k, f_subopt)` series of a trace, starting with `x_0`.
pub fn trace_series(trace: &RunTrace) -> Vec<(usize, f64)> {
    trace
        .metrics()
        .iter()
        .enumerate()
        .map(|(k, m)| (k, m.f_subopt))
        .collect()
}

/// Speedup of trace `b` over trace `a` read from CSV files.
pub fn compare_traces(a: &Path, b: &Path, threshold: f64) -> Result<Comparison> {
    if threshold.is_nan() {
        return Err(Error::config("threshold is NaN"));
    }
    Ok(compare_series(
        &read_trace_csv(a)?,
        &read_trace_csv(b)?,
        threshold,
    ))
}

/// Rate report of `problem` at `(γ, τ)`, with `μ` attached when the problem is
/// strongly convex.
pub fn problem_rates(
    problem: &FederatedProblem,
    gamma: f64,
    tau: Option<usize>,
) -> Result<RateReport> {
    let tau = tau.unwrap_or(problem.n());
    let ctx =
        EnvelopeContext::with_minima(problem.clients(), gamma, problem.client_minima().to_vec())?;
    let report = algorithms::rate_report(problem, &ctx, gamma, tau)?;
    if !report.smooth {
        return Ok(report);
    }
    let l_max = problem.l_max().unwrap_or(0.0);
    match problem.strong_convexity() {
        Ok(mu) if mu > 1e-10 * l_max.max(1.0) => {
            let client_l: Vec<f64> = problem
                .client_smoothness()
                .iter()
                .flatten()
                .copied()
                .collect();
            RateReport::smooth(gamma, tau, &client_l, report.l_gamma, Some(mu))
        }
        _ => Ok(report),
    }
}

/// Rate reports for each variant of the experiment, keyed by label.
pub fn experiment_rates(cfg: &ExperimentConfig) -> Result<BTreeMap<String, RateReport>> {
    cfg.validate()?;
    let problem = cfg.problem.build()?;
    cfg.algorithms
        .iter()
        .map(|a| {
            problem_rates(&problem, a.gamma, a.tau)
                .map(|r| (a.label.clone(), r))
                .map_err(|e| Error::Run {
                    label: a.label.clone(),
                    source: Box::new(e),
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub label: String,
    pub csv: PathBuf,
    pub status: RunStatus,
    pub rounds: usize,
    pub final_f_subopt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub meta: PathBuf,
    pub runs: Vec<RunSummary>,
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Deviations from the textbook protocol that apply to every experiment.
pub const STANDING_DEVIATIONS: [&str; 2] = [
    "reference minimizers come from an exact minimum-norm least-squares solve (SVD) rather than from running gradient descent",
    "the randomized output iterate is not drawn; traces report every iterate and log alpha_k so any weighting can be applied afterwards",
];

/// Executes every variant of `cfg` (in parallel, one worker per run) and writes
/// one CSV per run plus `meta.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    let problem = cfg.problem.build()?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    if cfg.echo.problem {
        problem.save(&cfg.output_dir.join("problem.json"))?;
    }

    let results: Vec<Result<(RunTrace, RateReport, f64)>> = (0..cfg.algorithms.len())
        .into_par_iter()
        .map(|i| {
            let run_cfg = cfg.algorithm_config(i);
            let label = run_cfg.label.clone();
            let wrap = |e: Error| Error::Run {
                label: label.clone(),
                source: Box::new(e),
            };
            let t0 = Instant::now();
            let trace = algorithms::run(&problem, &run_cfg).map_err(wrap)?;
            let elapsed = t0.elapsed().as_secs_f64();
            let report = match &trace.rate_report {
                Some(r) => r.clone(),
                None => problem_rates(&problem, run_cfg.gamma, run_cfg.tau).map_err(wrap)?,
            };
            Ok((trace, report, elapsed))
        })
        .collect();

    let mut runs = Vec::new();
    let mut run_meta = Vec::new();
    let mut deviations: Vec<String> = STANDING_DEVIATIONS.iter().map(|s| s.to_string()).collect();
    for (i, res) in results.into_iter().enumerate() {
        let (trace, report, elapsed) = res?;
        let csv = cfg
            .output_dir
            .join(format!("{i:02}_{}.csv", sanitize(&trace.label)));
        write_trace_csv(&csv, &metrics_rows(i, &trace))?;
        for note in &trace.notes {
            if !deviations.contains(note) {
                deviations.push(note.clone());
            }
        }
        let final_f = trace
            .rounds
            .last()
            .map_or(trace.initial.f_subopt, |r| r.f_subopt);
        run_meta.push(json!({
            "run_id": i,
            "label": trace.label,
            "csv": csv.file_name().map(|s| s.to_string_lossy().into_owned()),
            "config": cfg.algorithm_config(i),
            "resolved_alpha": trace.resolved_alpha,
            "status": trace.status,
            "rounds": trace.rounds.len(),
            "final_f_subopt": final_f,
            "rate_report": report,
            "notes": trace.notes,
            "wall_time": elapsed,
        }));
        runs.push(RunSummary {
            run_id: i,
            label: trace.label.clone(),
            csv,
            status: trace.status,
            rounds: trace.rounds.len(),
            final_f_subopt: final_f,
        });
    }

    let origin = problem.origin();
    let meta = json!({
        "schema": META_SCHEMA,
        "library_version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.name,
        "problem": {
            "generator": origin.generator,
            "params": origin.params,
            "seed": origin.seed,
            "n": problem.n(),
            "d": problem.dim(),
            "interpolated": problem.is_interpolated(),
            "smooth": problem.is_smooth(),
            "l_max": problem.l_max(),
            "f_star": problem.f_star(),
        },
        "seeds": cfg.algorithms.iter().map(|a| json!({"label": a.label, "sampling_seed": a.seed})).collect::<Vec<_>>(),
        "runs": run_meta,
        "deviations": deviations,
        "config": if cfg.echo.config { serde_json::to_value(cfg)? } else { serde_json::Value::Null },
        "wall_time": start.elapsed().as_secs_f64(),
    });
    let meta_path = cfg.output_dir.join("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")
        .map_err(|e| Error::Io(format!("{}: {e}", meta_path.display())))?;

    Ok(ExperimentOutcome {
        output_dir: cfg.output_dir.clone(),
        meta: meta_path,
        runs,
    })
}

/// Command-line overrides accepted by presets; unset fields keep the preset's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetOverrides {
    pub n: Option<usize>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

pub const PRESETS: [&str; 4] = ["fig1", "example1", "small", "rpm"];

fn gamma_label(g: f64) -> String {
    format!("{g}")
}

fn prox_pair(gammas: &[f64]) -> Vec<AlgorithmVariant> {
    gammas
        .iter()
        .flat_map(|&g| {
            [
                AlgorithmVariant::new(
                    format!("fedprox_g{}", gamma_label(g)),
                    g,
                    AlphaPolicy::FEDPROX,
                ),
                AlgorithmVariant::new(
                    format!("fedexprox_g{}", gamma_label(g)),
                    g,
                    AlphaPolicy::OptimalConstant,
                ),
            ]
        })
        .collect()
}

/// Named experiment presets.
///
/// * `fig1`: FedProx against FedExProx with the optimal constant on regression with
///   `n = 30`, 20 rows per client, `d = 900`, for `γ ∈ {0.01, 0.1, 1}` and `K = 10000`.
/// * `example1`: the diagonal family `f_i = (θ/2)x_i²`; `--n --theta --gamma` apply.
/// * `small`: a scaled-down regression (`n = 10`, 5 rows, `d = 100`) with FedProx, the
///   optimal constant, GraDS and StoPS for each `γ`.
/// * `rpm`: three affine sets in `d = 10` with `α ∈ {1, 1.5, α⋆}`.
pub fn preset(name: &str, o: &PresetOverrides) -> Result<ExperimentConfig> {
    let out = |default: &str| {
        o.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(default))
    };
    let gammas = |default: &[f64]| o.gamma.map_or_else(|| default.to_vec(), |g| vec![g]);
    let cfg = match name {
        "fig1" => ExperimentConfig {
            schema: default_schema(),
            name: "fig1".into(),
            problem: ProblemSpec::Regression {
                n: o.n.unwrap_or(30),
                rows_per_client: 20,
                d: 900,
                seed: o.seed.unwrap_or(1),
            },
            algorithms: prox_pair(&gammas(&[0.01, 0.1, 1.0])),
            iterations: o.iterations.unwrap_or(10_000),
            halt_tolerance: DEFAULT_HALT_TOLERANCE,
            x0: None,
            output_dir: out("out/fig1"),
            echo: EchoFlags::default(),
        },
        "example1" => {
            let n = o.n.unwrap_or(4);
            ExperimentConfig {
                schema: default_schema(),
                name: "example1".into(),
                problem: ProblemSpec::Example1 {
                    n,
                    theta: o.theta.unwrap_or(1.0),
                },
                algorithms: prox_pair(&gammas(&[1.0])),
                iterations: o.iterations.unwrap_or(100),
                halt_tolerance: DEFAULT_HALT_TOLERANCE,
                x0: Some(vec![1.0; n]),
                output_dir: out("out/example1"),
                echo: EchoFlags::default(),
            }
        }
        "small" => {
            let mut algorithms = Vec::new();
            for g in gammas(&[0.01, 0.1, 1.0]) {
                algorithms.extend(prox_pair(&[g]));
                algorithms.push(AlgorithmVariant::new(
                    format!("grads_g{}", gamma_label(g)),
                    g,
                    AlphaPolicy::GraDS,
                ));
                algorithms.push(AlgorithmVariant::new(
                    format!("stops_g{}", gamma_label(g)),
                    g,
                    AlphaPolicy::StoPS,
                ));
            }
            ExperimentConfig {
                schema: default_schema(),
                name: "small".into(),
                problem: ProblemSpec::Regression {
                    n: o.n.unwrap_or(10),
                    rows_per_client: 5,
                    d: 100,
                    seed: o.seed.unwrap_or(1),
                },
                algorithms,
                iterations: o.iterations.unwrap_or(20_000),
                halt_tolerance: DEFAULT_HALT_TOLERANCE,
                x0: None,
                output_dir: out("out/small"),
                echo: EchoFlags::default(),
            }
        }
        "rpm" => {
            let g = o.gamma.unwrap_or(1.0);
            ExperimentConfig {
                schema: default_schema(),
                name: "rpm".into(),
                problem: ProblemSpec::Feasibility {
                    n: o.n.unwrap_or(3),
                    d: 10,
                    rows_per_set: 2,
                    seed: o.seed.unwrap_or(1),
                },
                algorithms: vec![
                    AlgorithmVariant::new("rpm_a1", g, AlphaPolicy::Constant { value: 1.0 }),
                    AlgorithmVariant::new("rpm_a1.5", g, AlphaPolicy::Constant { value: 1.5 }),
                    AlgorithmVariant::new("rpm_opt", g, AlphaPolicy::OptimalConstant),
                ],
                iterations: o.iterations.unwrap_or(200),
                halt_tolerance: 0.0,
                x0: Some(vec![1.0; 10]),
                output_dir: out("out/rpm"),
                echo: EchoFlags::default(),
            }
        }
        other => {
            return Err(Error::config(format!(
                "unknown preset {other:?}; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    if name != "example1" && o.theta.is_some() {
        return Err(Error::config(format!(
            "--theta applies only to the example1 preset, not {name}"
        )));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Single-line JSON description of an error for the CLI's stderr.
pub fn error_line(e: &Error) -> String {
    let mut run = None;
    let mut round = None;
    let mut cur = e;
    loop {
        match cur {
            Error::Run { label, source } => {
                run = Some(label.clone());
                cur = source;
            }
            Error::Round { round: k, source } => {
                round = Some(*k);
                cur = source;
            }
            _ => break,
        }
    }
    json!({
        "error": e.kind(),
        "exit_code": e.exit_code(),
        "run": run,
        "round": round,
        "message": cur.to_string(),
    })
    .to_string()
}
