//! ADMM for nuclear-norm penalized matrix completion
//!
//! ```text
//! minimize (1/N) Σᵢ ℓ(M[rᵢ, cᵢ], yᵢ) + λ ‖M‖_{S₁}   subject to |M_pq| <= b
//! ```
//!
//! The problem is split as `M = L` with a scaled dual `U`:
//!
//! * `M ← argmin (1/N) Σ ℓ + (α/2) ‖M - L + U‖²_F` (entrywise, box enforced
//!   by clamping),
//! * `L ← svt(M + U, λ/α)`,
//! * `U ← U + M - L`,
//!
//! until `‖ΔM‖²_F + ‖ΔU‖²_F <= ε`.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::losses::{prox_sum, LossKind};
use crate::observations::{EntryGroup, ObservationSet};
use crate::prox::{nuclear_norm, svt_gram};
use crate::solver::SolverReport;

/// Entries may exceed the box by this much before the objective reports
/// infeasibility.
pub const BOX_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MatrixProblem {
    pub data: ObservationSet,
    pub loss: LossKind,
    pub lambda: f64,
    /// Entrywise bound `b` of the feasible set `b B_∞`.
    pub box_bound: Option<f64>,
}

impl MatrixProblem {
    pub fn new(data: ObservationSet, loss: LossKind, lambda: f64, box_bound: Option<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("matrix problem has no observations".into()));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be nonnegative, got {lambda}")));
        }
        if let Some(b) = box_bound {
            if !(b > 0.0) {
                return Err(invalid(format!("box bound must be positive, got {b}")));
            }
        }
        for s in data.iter() {
            loss.check_label(s.value)?;
        }
        Ok(Self {
            data,
            loss,
            lambda,
            box_bound,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.data.clone(), self.loss, lambda, self.box_bound)
    }

    pub fn with_data(&self, data: ObservationSet) -> Result<Self> {
        Self::new(data, self.loss, self.lambda, self.box_bound)
    }

    /// `(1/N) Σ ℓ(M[rᵢ, cᵢ], yᵢ)`.
    pub fn empirical_risk(&self, m: &DMatrix<f64>) -> f64 {
        let n = self.data.len() as f64;
        self.data
            .predictions(m)
            .map(|(t, y)| self.loss.eval(t, y))
            .sum::<f64>()
            / n
    }

    fn violates_box(&self, m: &DMatrix<f64>) -> bool {
        match self.box_bound {
            Some(b) => m.iter().any(|x| x.abs() > b + BOX_SLACK),
            None => false,
        }
    }
}

/// Penalized empirical risk; `+∞` when `m` leaves the box.
pub fn objective(problem: &MatrixProblem, m: &DMatrix<f64>) -> Result<f64> {
    check_shape(problem, m)?;
    if problem.violates_box(m) {
        return Ok(f64::INFINITY);
    }
    let penalty = if problem.lambda == 0.0 {
        0.0
    } else {
        problem.lambda * nuclear_norm(m)?
    };
    Ok(problem.empirical_risk(m) + penalty)
}

fn check_shape(problem: &MatrixProblem, m: &DMatrix<f64>) -> Result<()> {
    if m.shape() != problem.data.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", problem.data.shape()),
            found: format!("{:?}", m.shape()),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdmmInit {
    /// `M⁰` with i.i.d. standard Gaussian entries, `L⁰ = U⁰ = 0`.
    Gaussian { seed: u64 },
    /// `M⁰ = L⁰ = W`, `U⁰ = 0`; typically a solution for a larger λ.
    WarmStart(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    /// Augmented Lagrange parameter.
    pub alpha: f64,
    pub max_iter: usize,
    /// Threshold ε on `‖ΔM‖²_F + ‖ΔU‖²_F`.
    pub tol: f64,
    /// When set, convergence also requires `‖M - L‖_F` at or below this.
    pub feasibility_tol: Option<f64>,
    pub init: AdmmInit,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            max_iter: 5000,
            tol: 1e-8,
            feasibility_tol: None,
            init: AdmmInit::Gaussian { seed: 0 },
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be positive"));
        }
        if let Some(f) = self.feasibility_tol {
            if !(f > 0.0) {
                return Err(invalid(format!("feasibility tolerance must be positive, got {f}")));
            }
        }
        Ok(())
    }

    pub fn warm_started(&self, start: DMatrix<f64>) -> Self {
        Self {
            init: AdmmInit::WarmStart(start),
            ..self.clone()
        }
    }
}

/// Initial `M⁰` for a configuration.
pub fn initial_matrix(rows: usize, cols: usize, init: &AdmmInit) -> Result<DMatrix<f64>> {
    match init {
        AdmmInit::Gaussian { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng)))
        }
        AdmmInit::WarmStart(w) => {
            if w.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch {
                    expected: format!("({rows}, {cols})"),
                    found: format!("{:?}", w.shape()),
                });
            }
            Ok(w.clone())
        }
    }
}

/// The `M` update: `argmin_M (1/N) Σ ℓ(M[rᵢ, cᵢ], yᵢ) + (α/2) ‖M - L + U‖²_F`
/// over the box.
///
/// Unobserved entries take `V = L - U`; observed entries solve a scalar
/// proximal problem with weight `1/(N α)`.
pub fn admm_m_step(
    l: &DMatrix<f64>,
    u: &DMatrix<f64>,
    data: &ObservationSet,
    loss: LossKind,
    alpha: f64,
    box_bound: Option<f64>,
) -> Result<DMatrix<f64>> {
    if l.shape() != data.shape() || u.shape() != data.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", data.shape()),
            found: format!("{:?} / {:?}", l.shape(), u.shape()),
        });
    }
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    for s in data.iter() {
        loss.check_label(s.value)?;
    }
    let groups = data.group_by_entry();
    let weight = if data.is_empty() { 0.0 } else { 1.0 / (data.len() as f64 * alpha) };
    let mut m = l - u;
    m_step_in_place(&mut m, &groups, loss, weight, box_bound);
    Ok(m)
}

/// Replaces the observed entries of `v` by their proximal solutions and
/// clamps every entry to the box.
fn m_step_in_place(v: &mut DMatrix<f64>, groups: &[EntryGroup], loss: LossKind, weight: f64, box_bound: Option<f64>) {
    // the prox must see the unclamped V; clamping its output is exact
    // because each scalar objective is convex
    for g in groups {
        let entry = &mut v[(g.row, g.col)];
        *entry = prox_sum(loss, *entry, &g.labels, weight, box_bound);
    }
    if let Some(b) = box_bound {
        v.apply(|x| *x = x.clamp(-b, b));
    }
}

/// Runs ADMM and reports the thresholded iterate `L` (clamped to the box) as
/// the estimate.
///
/// `residual_trace` holds `‖ΔM‖²_F + ‖ΔU‖²_F`; `objective_trace` holds the
/// split objective `(1/N) Σ ℓ(M) + λ ‖L‖_{S₁}`, which agrees with the true
/// objective once `M = L`.
pub fn admm_solve(problem: &MatrixProblem, config: &AdmmConfig) -> Result<SolverReport<DMatrix<f64>>> {
    config.validate()?;
    let start = Instant::now();
    let (rows, cols) = problem.data.shape();
    let groups = problem.data.group_by_entry();
    let weight = 1.0 / (problem.data.len() as f64 * config.alpha);
    let threshold = problem.lambda / config.alpha;

    let mut m = initial_matrix(rows, cols, &config.init)?;
    let mut l = match &config.init {
        AdmmInit::Gaussian { .. } => DMatrix::zeros(rows, cols),
        AdmmInit::WarmStart(w) => w.clone(),
    };
    let mut u = DMatrix::<f64>::zeros(rows, cols);

    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let mut m_next = DMatrix::<f64>::zeros(rows, cols);
    while iterations < config.max_iter {
        iterations += 1;

        m_next.copy_from(&l);
        m_next -= &u;
        m_step_in_place(&mut m_next, &groups, problem.loss, weight, problem.box_bound);

        let thresholded = svt_gram(&(&m_next + &u), threshold)?;
        let l_next = thresholded.matrix;

        // U⁺ - U = M⁺ - L⁺
        let du = &m_next - &l_next;
        let dm_sq = (&m_next - &m).norm_squared();
        let du_sq = du.norm_squared();
        let residual = dm_sq + du_sq;
        u += &du;
        std::mem::swap(&mut m, &mut m_next);
        l = l_next;

        let split_objective =
            problem.empirical_risk(&m) + problem.lambda * thresholded.singular_values.iter().sum::<f64>();
        objective_trace.push(split_objective);
        residual_trace.push(residual);

        if !residual.is_finite() {
            return Err(Error::NumericalFailure(format!("ADMM diverged at iteration {iterations}")));
        }
        let feasible = config.feasibility_tol.is_none_or(|f| du_sq <= f * f);
        if residual <= config.tol && feasible {
            converged = true;
            break;
        }
    }

    let split_gap = (&m - &l).norm();
    if let Some(b) = problem.box_bound {
        l.apply(|x| *x = x.clamp(-b, b));
    }
    Ok(SolverReport {
        estimate: l,
        iterations,
        objective_trace,
        residual_trace,
        converged,
        wall_time: start.elapsed(),
        final_step: None,
        split_gap: Some(split_gap),
    })
}
