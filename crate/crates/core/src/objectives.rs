//! Client objectives and their exact proximal oracles.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{Cholesky, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, check_len, Matrix, PowerIterationOptions, Vector};

/// Off-set tolerance for indicator objectives (absolute, `∞`-norm of `Cx - e`).
/// Relative size of the smallest singular value below which a constraint block counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

type Factor = Cholesky<f64, Dyn>;

/// `f(x) = ½‖Ax − b‖²`.
#[derive(Debug)]
pub struct QuadraticObjective {
    a: Matrix,
    b: Vector,
    atb: Vector,
    // (AᵀA + I/γ) factorizations keyed by the bit pattern of γ.
    factors: RwLock<HashMap<u64, Arc<Factor>>>,
}

impl Clone for QuadraticObjective {
    fn clone(&self) -> Self {
        let factors = self.factors.read().expect("factor cache poisoned").clone();
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            atb: self.atb.clone(),
            factors: RwLock::new(factors),
        }
    }
}

impl PartialEq for QuadraticObjective {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b
    }
}

impl QuadraticObjective {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::contract(
                "quadratic objective needs at least one row and column",
            ));
        }
        if b.len() != a.nrows() {
            return Err(Error::contract(format!(
                "b has length {} but A has {} rows",
                b.len(),
                a.nrows()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::contract(
                "quadratic objective has non-finite entries",
            ));
        }
        let atb = a.tr_mul(&b);
        Ok(Self {
            a,
            b,
            atb,
            factors: RwLock::new(HashMap::new()),
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.a.tr_mul(&(&self.a * x - &self.b))
    }

    /// Factorization of `AᵀA + I/γ`, computed once per γ and cached.
    fn factor(&self, gamma: f64, client: usize) -> Result<Arc<Factor>> {
        let key = gamma.to_bits();
        if let Some(f) = self
            .factors
            .read()
            .expect("factor cache poisoned")
            .get(&key)
        {
            return Ok(Arc::clone(f));
        }
        let f = Arc::new(self.fresh_factor(gamma, client)?);
        self.factors
            .write()
            .expect("factor cache poisoned")
            .entry(key)
            .or_insert_with(|| Arc::clone(&f));
        Ok(f)
    }

    fn fresh_factor(&self, gamma: f64, client: usize) -> Result<Factor> {
        let d = self.dim();
        let mut m = self.a.tr_mul(&self.a);
        for j in 0..d {
            m[(j, j)] += 1.0 / gamma;
        }
        Cholesky::new(m).ok_or_else(|| Error::OracleFailure {
            client,
            gamma,
            reason: "AᵀA + I/γ is not numerically positive definite".into(),
        })
    }

    /// Populates the factorization cache for `gamma`.
    pub fn prepare(&self, gamma: f64, client: usize) -> Result<()> {
        self.factor(gamma, client).map(|_| ())
    }

    pub fn is_prepared(&self, gamma: f64) -> bool {
        self.factors
            .read()
            .expect("factor cache poisoned")
            .contains_key(&gamma.to_bits())
    }

    /// `(AᵀA + I/γ)⁻¹ (Aᵀb + x/γ)`.
    fn prox(&self, gamma: f64, x: &Vector, client: usize) -> Result<Vector> {
        let f = self.factor(gamma, client)?;
        let rhs = &self.atb + x / gamma;
        Ok(f.solve(&rhs))
    }

    /// Same as the cached prox but against a freshly computed factorization.
    pub fn prox_uncached(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let f = self.fresh_factor(gamma, 0)?;
        let rhs = &self.atb + x / gamma;
        Ok(f.solve(&rhs))
    }

    /// `(AᵀA + I/γ)⁻¹ v` against the cached factor.
    pub(crate) fn solve_shifted(&self, gamma: f64, v: &Vector, client: usize) -> Result<Vector> {
        Ok(self.factor(gamma, client)?.solve(v))
    }

    /// `λ_max(AᵀA)` by power iteration.
    pub fn smoothness(&self) -> Result<f64> {
        linalg::power_iteration(
            self.dim(),
            |v| Ok(self.a.tr_mul(&(&self.a * v))),
            PowerIterationOptions::default(),
        )
    }

    /// Smallest value of `f` over ℝᵈ: `½‖b − A x_ls‖²` with `x_ls` the min-norm least-squares solution.
    pub fn minimum(&self) -> Result<f64> {
        let x = self.least_squares_min_norm()?;
        Ok(self.value(&x))
    }

    pub fn least_squares_min_norm(&self) -> Result<Vector> {
        let svd = self.a.clone().svd(true, true);
        let eps =
            f64::EPSILON * self.a.nrows().max(self.a.ncols()) as f64 * svd.singular_values.max();
        svd.solve(&self.b, eps)
            .map_err(|e| Error::Generation(format!("least-squares solve failed: {e}")))
    }
}

/// Indicator of the affine set `{x : Cx = e}`; `C` must have full row rank.
#[derive(Debug, Clone)]
pub struct AffineIndicatorObjective {
    c: Matrix,
    e: Vector,
    // Cholesky of C Cᵀ.
    gram: Factor,
}

impl PartialEq for AffineIndicatorObjective {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c && self.e == other.e
    }
}

impl AffineIndicatorObjective {
    pub fn new(c: Matrix, e: Vector) -> Result<Self> {
        if c.nrows() == 0 || c.ncols() == 0 {
            return Err(Error::contract(
                "affine set needs at least one constraint and column",
            ));
        }
        if e.len() != c.nrows() {
            return Err(Error::contract(format!(
                "e has length {} but C has {} rows",
                e.len(),
                c.nrows()
            )));
        }
        if c.iter().chain(e.iter()).any(|v| !v.is_finite()) {
            return Err(Error::contract("affine set has non-finite entries"));
        }
        if c.nrows() > c.ncols() {
            return Err(Error::contract(
                "C has more rows than columns, so it cannot have full row rank",
            ));
        }
        let sv = c.singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
        if lo <= RANK_TOLERANCE * hi {
            return Err(Error::contract(format!(
                "C does not have full row rank (singular values span [{lo:e}, {hi:e}])"
            )));
        }
        let gram = Cholesky::new(&c * c.transpose())
            .ok_or_else(|| Error::contract("C does not have full row rank"))?;
        Ok(Self { c, e, gram })
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn e(&self) -> &Vector {
        &self.e
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn residual(&self, x: &Vector) -> Vector {
        &self.c * x - &self.e
    }

    /// Euclidean projection `x − Cᵀ(CCᵀ)⁻¹(Cx − e)`.
    pub fn project(&self, x: &Vector) -> Vector {
        let w = self.gram.solve(&self.residual(x));
        x - self.c.tr_mul(&w)
    }

    /// Orthogonal projection onto the row space of `C`: `Cᵀ(CCᵀ)⁻¹C v`.
    pub(crate) fn row_space_projection(&self, v: &Vector) -> Vector {
        self.c.tr_mul(&self.gram.solve(&(&self.c * v)))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        linalg::max_abs(&self.residual(x)) <= FEASIBILITY_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    Quadratic(QuadraticObjective),
    AffineIndicator(AffineIndicatorObjective),
}

/// One client's objective `f_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientObjective {
    pub id: usize,
    pub kind: ObjectiveKind,
}

impl ClientObjective {
    pub fn quadratic(id: usize, a: Matrix, b: Vector) -> Result<Self> {
        Ok(Self {
            id,
            kind: ObjectiveKind::Quadratic(QuadraticObjective::new(a, b)?),
        })
    }

    pub fn affine_indicator(id: usize, c: Matrix, e: Vector) -> Result<Self> {
        Ok(Self {
            id,
            kind: ObjectiveKind::AffineIndicator(AffineIndicatorObjective::new(c, e)?),
        })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ObjectiveKind::Quadratic(q) => q.dim(),
            ObjectiveKind::AffineIndicator(s) => s.dim(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, ObjectiveKind::Quadratic(_))
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        match &self.kind {
            ObjectiveKind::Quadratic(q) => Some(q),
            ObjectiveKind::AffineIndicator(_) => None,
        }
    }

    pub fn as_indicator(&self) -> Option<&AffineIndicatorObjective> {
        match &self.kind {
            ObjectiveKind::AffineIndicator(s) => Some(s),
            ObjectiveKind::Quadratic(_) => None,
        }
    }

    /// `Prox_{γ f}(x)`.
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::contract(format!(
                "prox needs gamma > 0, got {gamma}"
            )));
        }
        check_len(x, self.dim(), "prox")?;
        match &self.kind {
            ObjectiveKind::Quadratic(q) => q.prox(gamma, x, self.id),
            ObjectiveKind::AffineIndicator(s) => Ok(s.project(x)),
        }
    }

    /// `f(x)`; indicators return `+∞` off the set.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_len(x, self.dim(), "objective_value")?;
        Ok(match &self.kind {
            ObjectiveKind::Quadratic(q) => q.value(x),
            ObjectiveKind::AffineIndicator(s) => {
                if s.contains(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// `L_i = λ_max(AᵀA)` for quadratics, `None` for indicators.
    pub fn smoothness(&self) -> Result<Option<f64>> {
        match &self.kind {
            ObjectiveKind::Quadratic(q) => q.smoothness().map(Some),
            ObjectiveKind::AffineIndicator(_) => Ok(None),
        }
    }

    /// `inf f`.
    pub fn minimum(&self) -> Result<f64> {
        match &self.kind {
            ObjectiveKind::Quadratic(q) => q.minimum(),
            ObjectiveKind::AffineIndicator(_) => Ok(0.0),
        }
    }

    /// Eagerly builds any factorization the prox at `gamma` needs.
    pub fn prepare(&self, gamma: f64) -> Result<()> {
        match &self.kind {
            ObjectiveKind::Quadratic(q) => q.prepare(gamma, self.id),
            ObjectiveKind::AffineIndicator(_) => Ok(()),
        }
    }
}

/// Serialized form of a client, used by the problem file schema.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientRecord {
    Quadratic {
        id: usize,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    AffineIndicator {
        id: usize,
        c: Vec<Vec<f64>>,
        e: Vec<f64>,
    },
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::config("ragged matrix rows"));
    }
    Ok(Matrix::from_row_iterator(
        r,
        c,
        rows.iter().flatten().copied(),
    ))
}

impl From<&ClientObjective> for ClientRecord {
    fn from(obj: &ClientObjective) -> Self {
        match &obj.kind {
            ObjectiveKind::Quadratic(q) => ClientRecord::Quadratic {
                id: obj.id,
                a: rows_of(q.a()),
                b: q.b().iter().copied().collect(),
            },
            ObjectiveKind::AffineIndicator(s) => ClientRecord::AffineIndicator {
                id: obj.id,
                c: rows_of(s.c()),
                e: s.e().iter().copied().collect(),
            },
        }
    }
}

impl TryFrom<&ClientRecord> for ClientObjective {
    type Error = Error;

    fn try_from(rec: &ClientRecord) -> Result<Self> {
        match rec {
            ClientRecord::Quadratic { id, a, b } => {
                ClientObjective::quadratic(*id, matrix_from_rows(a)?, Vector::from_vec(b.clone()))
            }
            ClientRecord::AffineIndicator { id, c, e } => ClientObjective::affine_indicator(
                *id,
                matrix_from_rows(c)?,
                Vector::from_vec(e.clone()),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn mat(r: usize, c: usize, vals: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, vals)
    }

    fn vecf(vals: &[f64]) -> Vector {
        Vector::from_vec(vals.to_vec())
    }

    fn random_quadratic(seed: u64, m: usize, d: usize) -> ClientObjective {
        let mut rng = CounterRng::new(seed);
        let a = Matrix::from_fn(m, d, |_, _| rng.next_f64());
        let b = Vector::from_fn(m, |_, _| rng.next_f64());
        ClientObjective::quadratic(0, a, b).unwrap()
    }

    #[test]
    fn scalar_quadratic_prox() {
        let obj = ClientObjective::quadratic(0, mat(1, 1, &[1.0]), vecf(&[0.0])).unwrap();
        let p = obj.prox(1.0, &vecf(&[2.0])).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prox_fixes_minimizer() {
        let obj = ClientObjective::quadratic(0, mat(1, 1, &[1.0]), vecf(&[3.0])).unwrap();
        for gamma in [0.01, 1.0, 100.0] {
            let p = obj.prox(gamma, &vecf(&[3.0])).unwrap();
            assert!((p[0] - 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_onto_axis() {
        let obj =
            ClientObjective::affine_indicator(0, mat(1, 2, &[1.0, 0.0]), vecf(&[0.0])).unwrap();
        for gamma in [1e-3, 1.0, 1e3] {
            let p = obj.prox(gamma, &vecf(&[2.0, 5.0])).unwrap();
            assert_eq!(p, vecf(&[0.0, 5.0]));
        }
    }

    #[test]
    fn values() {
        let q = ClientObjective::quadratic(0, mat(1, 1, &[1.0]), vecf(&[0.0])).unwrap();
        assert_eq!(q.value(&vecf(&[2.0])).unwrap(), 2.0);
        let s = ClientObjective::affine_indicator(1, mat(1, 2, &[1.0, 0.0]), vecf(&[0.0])).unwrap();
        assert_eq!(s.value(&vecf(&[0.0, 7.0])).unwrap(), 0.0);
        assert_eq!(s.value(&vecf(&[1.0, 0.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn smoothness_small_cases() {
        let q = ClientObjective::quadratic(0, mat(1, 1, &[2.0]), vecf(&[0.0])).unwrap();
        assert!((q.smoothness().unwrap().unwrap() - 4.0).abs() < 1e-12);
        let id = ClientObjective::quadratic(0, Matrix::identity(2, 2), vecf(&[0.0, 0.0])).unwrap();
        assert!((id.smoothness().unwrap().unwrap() - 1.0).abs() < 1e-12);
        let s = ClientObjective::affine_indicator(1, mat(1, 2, &[1.0, 0.0]), vecf(&[0.0])).unwrap();
        assert_eq!(s.smoothness().unwrap(), None);
    }

    #[test]
    fn smoothness_matches_dense_eigensolver() {
        for seed in 0..5 {
            let obj = random_quadratic(seed, 5, 20);
            let q = obj.as_quadratic().unwrap();
            let oracle = q.a().tr_mul(q.a()).symmetric_eigen().eigenvalues.max();
            let est = obj.smoothness().unwrap().unwrap();
            assert!(((est - oracle) / oracle).abs() < 1e-8, "{est} vs {oracle}");
        }
    }

    #[test]
    fn prox_optimality_condition() {
        for seed in 0..10 {
            let obj = random_quadratic(seed, 4, 9);
            let q = obj.as_quadratic().unwrap();
            let mut rng = CounterRng::new(1000 + seed);
            let x = Vector::from_fn(9, |_, _| 4.0 * rng.next_f64() - 2.0);
            for gamma in [1e-3, 0.1, 10.0, 1e3] {
                let z = obj.prox(gamma, &x).unwrap();
                let g = q.gradient(&z) + (&z - &x) / gamma;
                let scale = (1.0 + x.norm()) * (1.0 + 1.0 / gamma);
                assert!(g.norm() <= 1e-8 * scale, "gamma={gamma}: {}", g.norm());
            }
        }
    }

    #[test]
    fn cached_prox_is_bit_identical_to_fresh() {
        let obj = random_quadratic(11, 3, 7);
        obj.prepare(0.5).unwrap();
        assert!(obj.as_quadratic().unwrap().is_prepared(0.5));
        let x = Vector::from_element(7, 0.3);
        let cached = obj.prox(0.5, &x).unwrap();
        let fresh = obj.as_quadratic().unwrap().prox_uncached(0.5, &x).unwrap();
        assert_eq!(cached, fresh);
    }

    #[test]
    fn projection_idempotent() {
        let mut rng = CounterRng::new(9);
        let c = Matrix::from_fn(3, 6, |_, _| rng.next_f64());
        let e = Vector::from_fn(3, |_, _| rng.next_f64());
        let obj = ClientObjective::affine_indicator(0, c, e).unwrap();
        let x = Vector::from_fn(6, |_, _| rng.next_f64() * 5.0);
        let p = obj.prox(1.0, &x).unwrap();
        let pp = obj.prox(1.0, &p).unwrap();
        assert!((&p - &pp).norm() < 1e-10);
        assert_eq!(obj.value(&p).unwrap(), 0.0);
    }

    #[test]
    fn contract_errors() {
        let obj = ClientObjective::quadratic(0, mat(1, 2, &[1.0, 1.0]), vecf(&[0.0])).unwrap();
        assert!(matches!(
            obj.prox(1.0, &vecf(&[1.0])),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            obj.prox(0.0, &vecf(&[1.0, 1.0])),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            obj.value(&vecf(&[1.0, 2.0, 3.0])),
            Err(Error::Contract(_))
        ));
        assert!(ClientObjective::quadratic(0, mat(1, 1, &[f64::NAN]), vecf(&[0.0])).is_err());
        let rank_deficient = mat(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(ClientObjective::affine_indicator(0, rank_deficient, vecf(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn indefinite_system_is_oracle_failure() {
        // The 1/γ shift is lost to rounding against 1e16, leaving an exactly singular pivot.
        let obj = ClientObjective::quadratic(4, mat(1, 2, &[1e8, 1e8]), vecf(&[0.0])).unwrap();
        let err = obj.prox(1e10, &vecf(&[1.0, 1.0])).unwrap_err();
        match err {
            Error::OracleFailure { client, gamma, .. } => {
                assert_eq!(client, 4);
                assert_eq!(gamma, 1e10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn record_round_trip() {
        let obj = random_quadratic(3, 2, 3);
        let rec = ClientRecord::from(&obj);
        let back = ClientObjective::try_from(&rec).unwrap();
        assert_eq!(obj, back);
    }
}
