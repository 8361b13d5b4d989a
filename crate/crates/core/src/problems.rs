//! Federated problem instances: synthetic generators, reference solutions,
//! and the versioned JSON problem file.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::objectives::{ClientObjective, ClientRecord, ObjectiveKind};
use crate::rng::CounterRng;

pub const PROBLEM_SCHEMA: &str = "fedexprox-problem/v1";

/// Consistency tolerance for the stacked system, relative to `1 + ‖b_stack‖`.
const INTERPOLATION_TOLERANCE: f64 = 1e-8;

/// Redraws allowed when a generated constraint block is rank deficient.
const MAX_REDRAWS: usize = 16;

/// Where a problem came from; echoed into run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemOrigin {
    pub generator: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
}

impl ProblemOrigin {
    pub fn custom() -> Self {
        Self {
            generator: "custom".into(),
            params: serde_json::Value::Null,
            seed: None,
        }
    }
}

/// Closed-form constants known for special families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// `f_i(x) = (θ/2) x_i²` with `n = d`.
    Example1 { n: usize, theta: f64 },
}

impl ClosedForm {
    /// Smoothness of the average envelope at `gamma`.
    pub fn l_gamma(&self, gamma: f64) -> f64 {
        match *self {
            ClosedForm::Example1 { n, theta } => theta / (n as f64 * (1.0 + gamma * theta)),
        }
    }
}

/// The affine set `{x : A_stack x = b_stack}` shared by all client minimizers.
///
/// Stored through an orthonormal basis of the row space of `A_stack` and the
/// min-norm solution, so projections and distances stay well conditioned.
#[derive(Debug, Clone)]
pub struct SolutionSet {
    a_stack: Matrix,
    b_stack: Vector,
    min_norm: Vector,
    // r × d with orthonormal rows spanning the row space of a_stack
    row_basis: Matrix,
    residual: f64,
}

impl SolutionSet {
    pub fn new(a_stack: Matrix, b_stack: Vector) -> Result<Self> {
        let (m, d) = a_stack.shape();
        if m == 0 || b_stack.len() != m {
            return Err(Error::contract("stacked system has inconsistent shape"));
        }
        let svd = a_stack.clone().svd(true, true);
        let u = svd.u.as_ref().expect("svd computed with u");
        let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
        let s_max = svd.singular_values.max();
        let cutoff = f64::EPSILON * m.max(d) as f64 * s_max;
        let kept: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > cutoff)
            .collect();
        let mut min_norm = Vector::zeros(d);
        let mut row_basis = Matrix::zeros(kept.len(), d);
        for (r, &k) in kept.iter().enumerate() {
            let coeff = u.column(k).dot(&b_stack) / svd.singular_values[k];
            min_norm += v_t.row(k).transpose() * coeff;
            row_basis.set_row(r, &v_t.row(k));
        }
        let residual = (&a_stack * &min_norm - &b_stack).norm();
        Ok(Self {
            a_stack,
            b_stack,
            min_norm,
            row_basis,
            residual,
        })
    }

    pub fn min_norm_point(&self) -> &Vector {
        &self.min_norm
    }

    pub fn a_stack(&self) -> &Matrix {
        &self.a_stack
    }

    pub fn b_stack(&self) -> &Vector {
        &self.b_stack
    }

    pub fn rank(&self) -> usize {
        self.row_basis.nrows()
    }

    /// `‖A_stack x_mn − b_stack‖`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn is_consistent(&self) -> bool {
        self.residual <= INTERPOLATION_TOLERANCE * (1.0 + self.b_stack.norm())
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let coords = &self.row_basis * (x - &self.min_norm);
        x - self.row_basis.tr_mul(&coords)
    }

    pub fn dist_sq(&self, x: &Vector) -> f64 {
        (&self.row_basis * (x - &self.min_norm)).norm_squared()
    }
}

/// A set of client objectives plus the cached global quantities runs rely on.
#[derive(Debug, Clone)]
pub struct FederatedProblem {
    clients: Vec<ClientObjective>,
    d: usize,
    solution: SolutionSet,
    interpolated: bool,
    client_smoothness: Vec<Option<f64>>,
    l_max: Option<f64>,
    minima: Vec<f64>,
    f_star: f64,
    witness: Option<Vector>,
    closed_form: Option<ClosedForm>,
    origin: ProblemOrigin,
}

impl FederatedProblem {
    /// Builds a problem, estimating every smoothness constant by power iteration.
    pub fn new(clients: Vec<ClientObjective>, origin: ProblemOrigin) -> Result<Self> {
        let smoothness = clients
            .iter()
            .map(ClientObjective::smoothness)
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(clients, smoothness, None, origin)
    }

    fn assemble(
        clients: Vec<ClientObjective>,
        client_smoothness: Vec<Option<f64>>,
        closed_form: Option<ClosedForm>,
        origin: ProblemOrigin,
    ) -> Result<Self> {
        let first = clients
            .first()
            .ok_or_else(|| Error::contract("a problem needs at least one client"))?;
        let d = first.dim();
        if clients.iter().any(|c| c.dim() != d) {
            return Err(Error::contract("clients disagree on the dimension"));
        }
        let mut ids = HashSet::new();
        if !clients.iter().all(|c| ids.insert(c.id)) {
            return Err(Error::contract("client ids must be unique"));
        }
        let rows: usize = clients
            .iter()
            .map(|c| match &c.kind {
                ObjectiveKind::Quadratic(q) => q.a().nrows(),
                ObjectiveKind::AffineIndicator(s) => s.c().nrows(),
            })
            .sum();
        let mut a_stack = Matrix::zeros(rows, d);
        let mut b_stack = Vector::zeros(rows);
        let mut at = 0;
        for c in &clients {
            let (m, rhs) = match &c.kind {
                ObjectiveKind::Quadratic(q) => (q.a(), q.b()),
                ObjectiveKind::AffineIndicator(s) => (s.c(), s.e()),
            };
            a_stack.rows_mut(at, m.nrows()).copy_from(m);
            b_stack.rows_mut(at, m.nrows()).copy_from(rhs);
            at += m.nrows();
        }
        let solution = SolutionSet::new(a_stack, b_stack)?;
        let interpolated = solution.is_consistent();
        let minima = clients
            .iter()
            .map(ClientObjective::minimum)
            .collect::<Result<Vec<_>>>()?;
        let f_star = minima.iter().sum::<f64>() / clients.len() as f64;
        let l_max = if client_smoothness.iter().all(Option::is_some) {
            client_smoothness.iter().flatten().copied().reduce(f64::max)
        } else {
            None
        };
        Ok(Self {
            clients,
            d,
            solution,
            interpolated,
            client_smoothness,
            l_max,
            minima,
            f_star,
            witness: None,
            closed_form,
            origin,
        })
    }

    pub fn clients(&self) -> &[ClientObjective] {
        &self.clients
    }

    pub fn n(&self) -> usize {
        self.clients.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn solution_set(&self) -> &SolutionSet {
        &self.solution
    }

    /// Min-norm point of the solution set.
    pub fn reference_point(&self) -> &Vector {
        self.solution.min_norm_point()
    }

    pub fn is_interpolated(&self) -> bool {
        self.interpolated
    }

    /// Whether every client is smooth (quadratic).
    pub fn is_smooth(&self) -> bool {
        self.l_max.is_some()
    }

    pub fn client_smoothness(&self) -> &[Option<f64>] {
        &self.client_smoothness
    }

    pub fn l_max(&self) -> Option<f64> {
        self.l_max
    }

    /// `inf f_i` per client.
    pub fn client_minima(&self) -> &[f64] {
        &self.minima
    }

    /// `inf f` under interpolation.
    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    /// A feasible point known by construction, when the generator provides one.
    pub fn witness(&self) -> Option<&Vector> {
        self.witness.as_ref()
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    pub fn origin(&self) -> &ProblemOrigin {
        &self.origin
    }

    /// `f(x) = (1/n) Σ f_i(x)`.
    pub fn objective(&self, x: &Vector) -> Result<f64> {
        let mut total = 0.0;
        for c in &self.clients {
            total += c.value(x)?;
        }
        Ok(total / self.n() as f64)
    }

    pub fn dist_sq(&self, x: &Vector) -> f64 {
        self.solution.dist_sq(x)
    }

    pub fn project(&self, x: &Vector) -> Vector {
        self.solution.project(x)
    }

    /// `λ_min` of the Hessian `(1/n) Σ A_iᵀA_i` of `f` (its strong convexity constant).
    pub fn strong_convexity(&self) -> Result<f64> {
        let mut h = Matrix::zeros(self.d, self.d);
        for c in &self.clients {
            let q = c
                .as_quadratic()
                .ok_or_else(|| Error::contract("strong convexity needs smooth clients"))?;
            h += q.a().tr_mul(q.a());
        }
        h /= self.n() as f64;
        crate::linalg::smallest_eigenvalue(&h, Default::default())
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            schema: PROBLEM_SCHEMA.to_string(),
            d: self.d,
            interpolated: self.interpolated,
            origin: self.origin.clone(),
            clients: self.clients.iter().map(ClientRecord::from).collect(),
        }
    }

    pub fn from_file(file: &ProblemFile) -> Result<Self> {
        if file.schema != PROBLEM_SCHEMA {
            return Err(Error::config(format!(
                "unsupported problem schema {:?}, expected {PROBLEM_SCHEMA:?}",
                file.schema
            )));
        }
        let clients = file
            .clients
            .iter()
            .map(ClientObjective::try_from)
            .collect::<Result<Vec<_>>>()?;
        let problem = Self::new(clients, file.origin.clone())?;
        if problem.d != file.d {
            return Err(Error::config(format!(
                "problem file declares d = {} but clients have dimension {}",
                file.d, problem.d
            )));
        }
        Ok(problem)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk problem format, schema `fedexprox-problem/v1`. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub d: usize,
    pub interpolated: bool,
    pub origin: ProblemOrigin,
    pub clients: Vec<ClientRecord>,
}

fn uniform_matrix(rng: &mut CounterRng, rows: usize, cols: usize) -> Matrix {
    // row-major draw order
    Matrix::from_row_iterator(rows, cols, (0..rows * cols).map(|_| rng.next_f64()))
}

fn uniform_vector(rng: &mut CounterRng, len: usize) -> Vector {
    Vector::from_iterator(len, (0..len).map(|_| rng.next_f64()))
}

/// Overparameterized least squares: client `i` holds `½‖A_i x − b_i‖²` with
/// `A_i ∈ [0,1)^{rows×d}` and `b_i ∈ [0,1)^{rows}`.
///
/// The stream under key `seed` is consumed client by client: `A_i` row-major,
/// then `b_i`.
pub fn gen_regression(
    n: usize,
    rows_per_client: usize,
    d: usize,
    seed: u64,
) -> Result<FederatedProblem> {
    if n == 0 || rows_per_client == 0 || d == 0 {
        return Err(Error::contract("n, rows_per_client and d must be positive"));
    }
    if d < n * rows_per_client {
        return Err(Error::contract(format!(
            "interpolation needs d >= n * rows_per_client ({d} < {})",
            n * rows_per_client
        )));
    }
    let mut rng = CounterRng::new(seed);
    let mut clients = Vec::with_capacity(n);
    for i in 0..n {
        let a = uniform_matrix(&mut rng, rows_per_client, d);
        let b = uniform_vector(&mut rng, rows_per_client);
        clients.push(ClientObjective::quadratic(i, a, b)?);
    }
    let origin = ProblemOrigin {
        generator: "regression".into(),
        params: json!({ "n": n, "rows_per_client": rows_per_client, "d": d }),
        seed: Some(seed),
    };
    let problem = FederatedProblem::new(clients, origin)?;
    if !problem.is_interpolated() {
        return Err(Error::Generation(format!(
            "stacked system is inconsistent (residual {:e}); try another seed",
            problem.solution.residual()
        )));
    }
    Ok(problem)
}

/// `f_i(x) = (θ/2) x_i²` on ℝⁿ, with closed-form constants attached.
pub fn gen_example1(n: usize, theta: f64) -> Result<FederatedProblem> {
    if n == 0 {
        return Err(Error::contract("n must be positive"));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::contract(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let clients = (0..n)
        .map(|i| {
            let mut a = Matrix::zeros(1, n);
            a[(0, i)] = theta.sqrt();
            ClientObjective::quadratic(i, a, Vector::zeros(1))
        })
        .collect::<Result<Vec<_>>>()?;
    let origin = ProblemOrigin {
        generator: "example1".into(),
        params: json!({ "n": n, "theta": theta }),
        seed: None,
    };
    FederatedProblem::assemble(
        clients,
        vec![Some(theta); n],
        Some(ClosedForm::Example1 { n, theta }),
        origin,
    )
}

/// Convex feasibility: `n` affine sets `{x : C_i x = e_i}` through a common point.
///
/// The stream under key `seed` first yields the common point `x₀ ∈ [0,1)^d`,
/// then each `C_i` row-major. A rank-deficient block is redrawn from the
/// continuing stream.
pub fn gen_feasibility(
    n: usize,
    d: usize,
    rows_per_set: usize,
    seed: u64,
) -> Result<FederatedProblem> {
    if n == 0 || rows_per_set == 0 || d == 0 {
        return Err(Error::contract("n, rows_per_set and d must be positive"));
    }
    if n * rows_per_set > d {
        return Err(Error::contract(format!(
            "need n * rows_per_set <= d ({} > {d})",
            n * rows_per_set
        )));
    }
    let mut rng = CounterRng::new(seed);
    let anchor = uniform_vector(&mut rng, d);
    let mut clients = Vec::with_capacity(n);
    for i in 0..n {
        let mut attempt = 0;
        let client = loop {
            let c = uniform_matrix(&mut rng, rows_per_set, d);
            let e = &c * &anchor;
            match ClientObjective::affine_indicator(i, c, e) {
                Ok(obj) => break obj,
                Err(_) if attempt + 1 < MAX_REDRAWS => attempt += 1,
                Err(err) => {
                    return Err(Error::Generation(format!(
                        "constraint block {i} stayed rank deficient: {err}"
                    )))
                }
            }
        };
        clients.push(client);
    }
    let origin = ProblemOrigin {
        generator: "feasibility".into(),
        params: json!({ "n": n, "d": d, "rows_per_set": rows_per_set }),
        seed: Some(seed),
    };
    let mut problem = FederatedProblem::assemble(clients, vec![None; n], None, origin)?;
    problem.witness = Some(anchor);
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_shape_and_interpolation() {
        let p = gen_regression(3, 4, 15, 1).unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.dim(), 15);
        assert!(p.is_interpolated());
        let x = p.reference_point().clone();
        assert!(p.objective(&x).unwrap() <= 1e-20);
        for c in p.clients() {
            let q = c.as_quadratic().unwrap();
            let g = q.gradient(&x);
            let scale = 1.0 + q.a().norm() * x.norm();
            assert!(g.norm() <= 1e-7 * scale);
        }
        let l = p
            .client_smoothness()
            .iter()
            .map(|v| v.unwrap())
            .fold(0.0, f64::max);
        assert_eq!(p.l_max(), Some(l));
    }

    #[test]
    fn rejects_too_small_dimension() {
        assert!(gen_regression(30, 20, 599, 0).is_err());
    }

    #[test]
    fn regression_is_deterministic() {
        let a = gen_regression(2, 3, 8, 99).unwrap();
        let b = gen_regression(2, 3, 8, 99).unwrap();
        for (x, y) in a.clients().iter().zip(b.clients()) {
            assert_eq!(x, y);
        }
        let c = gen_regression(2, 3, 8, 100).unwrap();
        assert_ne!(a.clients()[0], c.clients()[0]);
    }

    #[test]
    fn one_row_min_norm_point() {
        let a = Matrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let b = Vector::from_vec(vec![5.0]);
        let client = ClientObjective::quadratic(0, a.clone(), b).unwrap();
        let p = FederatedProblem::new(vec![client], ProblemOrigin::custom()).unwrap();
        let expect = a.row(0).transpose() * (5.0 / 25.0);
        assert!((p.reference_point() - expect).norm() < 1e-15);
        // distance from the origin to the line 3x + 4y = 5 is 1
        assert!((p.dist_sq(&Vector::zeros(2)) - 1.0).abs() < 1e-14);
        let proj = p.project(&Vector::from_vec(vec![10.0, 0.0]));
        assert!((3.0 * proj[0] + 4.0 * proj[1] - 5.0).abs() < 1e-13);
    }

    #[test]
    fn example1_constants() {
        let p = gen_example1(4, 1.0).unwrap();
        assert_eq!(p.l_max(), Some(1.0));
        let cf = p.closed_form().unwrap();
        assert_eq!(cf.l_gamma(1.0), 0.125);
        assert_eq!(p.objective(&Vector::zeros(4)).unwrap(), 0.0);
        assert_eq!(p.dist_sq(&Vector::from_element(4, 1.0)), 4.0);
    }

    #[test]
    fn feasibility_witness_is_feasible() {
        let p = gen_feasibility(3, 10, 2, 5).unwrap();
        let w = p.witness().unwrap();
        for c in p.clients() {
            assert_eq!(c.value(w).unwrap(), 0.0);
        }
        assert!(p.is_interpolated());
        assert!(!p.is_smooth());
        assert!(p.dist_sq(w) < 1e-20);
    }

    #[test]
    fn generator_preconditions() {
        assert!(gen_regression(2, 5, 9, 0).is_err());
        assert!(gen_feasibility(3, 5, 2, 0).is_err());
        assert!(gen_example1(3, 0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = gen_regression(2, 2, 6, 3).unwrap();
        let text = p.to_json().unwrap();
        let back = FederatedProblem::from_json(&text).unwrap();
        assert_eq!(back.clients(), p.clients());
        assert_eq!(back.origin(), p.origin());
        assert_eq!(back.l_max(), p.l_max());
        let bad = text.replace(PROBLEM_SCHEMA, "fedexprox-problem/v0");
        assert!(FederatedProblem::from_json(&bad).is_err());
    }
}
