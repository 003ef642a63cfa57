//! Accelerated proximal gradient for penalized linear models
//!
//! ```text
//! minimize (1/N) Σᵢ ℓ(⟨xᵢ, t⟩, yᵢ) + pen(t)   over t with ‖t‖₂ <= R
//! ```
//!
//! with `pen = λ ‖·‖₁` (logistic LASSO) or `pen = λ ‖·‖_SLOPE` (logistic
//! SLOPE). Only smooth losses are supported.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::losses::{sigmoid, LossKind};
use crate::prox::{l1_norm, project_l2_ball, slope_norm, slope_prox, soft_threshold, SlopeWeights};
use crate::solver::SolverReport;

#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    L1 { lambda: f64 },
    Slope { lambda: f64, weights: SlopeWeights },
}

impl Penalty {
    pub fn lambda(&self) -> f64 {
        match self {
            Penalty::L1 { lambda } | Penalty::Slope { lambda, .. } => *lambda,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        match self {
            Penalty::L1 { .. } => Penalty::L1 { lambda },
            Penalty::Slope { weights, .. } => Penalty::Slope {
                lambda,
                weights: weights.clone(),
            },
        }
    }

    pub fn value(&self, t: &DVector<f64>) -> f64 {
        match self {
            Penalty::L1 { lambda } => lambda * l1_norm(t),
            Penalty::Slope { lambda, weights } => {
                lambda * slope_norm(t, weights).expect("dimensions checked at construction")
            }
        }
    }

    /// Proximal map of `step · pen`.
    pub fn prox(&self, v: &DVector<f64>, step: f64) -> DVector<f64> {
        match self {
            Penalty::L1 { lambda } => v.map(|x| soft_threshold(x, step * lambda)),
            Penalty::Slope { lambda, weights } => {
                slope_prox(v, &weights.scaled(step * lambda)).expect("dimensions checked at construction")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct VectorProblem {
    /// `N × p` design, one sample per row.
    pub design: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub loss: LossKind,
    pub penalty: Penalty,
    pub l2_radius: Option<f64>,
}

impl VectorProblem {
    pub fn new(
        design: DMatrix<f64>,
        labels: DVector<f64>,
        loss: LossKind,
        penalty: Penalty,
        l2_radius: Option<f64>,
    ) -> Result<Self> {
        let (n, p) = design.shape();
        if n == 0 || p == 0 {
            return Err(Error::EmptyInput("design matrix is empty".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} labels"),
                found: format!("{}", labels.len()),
            });
        }
        if !(penalty.lambda() >= 0.0) || !penalty.lambda().is_finite() {
            return Err(invalid(format!("lambda must be nonnegative, got {}", penalty.lambda())));
        }
        if let Penalty::Slope { weights, .. } = &penalty {
            if weights.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: format!("{p} SLOPE weights"),
                    found: format!("{}", weights.len()),
                });
            }
        }
        if let Some(r) = l2_radius {
            if !(r > 0.0) {
                return Err(invalid(format!("radius must be positive, got {r}")));
            }
        }
        if design.iter().any(|x| !x.is_finite()) {
            return Err(invalid("design matrix has non-finite entries"));
        }
        for &y in labels.iter() {
            loss.check_label(y)?;
        }
        Ok(Self {
            design,
            labels,
            loss,
            penalty,
            l2_radius,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.design.ncols()
    }

    /// Rows `indices` of the design with their labels.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let design = self.design.select_rows(indices);
        let labels = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.labels[i]));
        Self::new(design, labels, self.loss, self.penalty.clone(), self.l2_radius)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            penalty: self.penalty.with_lambda(lambda),
            ..self.clone()
        }
    }

    /// Penalized objective.
    pub fn objective(&self, t: &DVector<f64>) -> Result<f64> {
        let (risk, _) = empirical_risk_and_gradient(self, t)?;
        Ok(risk + self.penalty.value(t))
    }

    fn risk(&self, t: &DVector<f64>) -> f64 {
        let margins = &self.design * t;
        smooth_risk(self.loss, &margins, &self.labels)
    }

    fn risk_and_gradient(&self, t: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.n_samples() as f64;
        let margins = &self.design * t;
        let value = smooth_risk(self.loss, &margins, &self.labels);
        let weights = DVector::from_iterator(
            margins.len(),
            margins.iter().zip(self.labels.iter()).map(|(&z, &y)| match self.loss {
                LossKind::Logistic => -y * sigmoid(-y * z),
                _ => z - y,
            }),
        );
        let grad = self.design.tr_mul(&weights) / n;
        (value, grad)
    }

    fn project(&self, t: DVector<f64>) -> DVector<f64> {
        match self.l2_radius {
            Some(r) => project_l2_ball(&t, r).expect("radius checked at construction"),
            None => t,
        }
    }
}

fn smooth_risk(loss: LossKind, margins: &DVector<f64>, labels: &DVector<f64>) -> f64 {
    margins
        .iter()
        .zip(labels.iter())
        .map(|(&z, &y)| loss.eval(z, y))
        .sum::<f64>()
        / margins.len() as f64
}

/// Value and gradient of `t ↦ (1/N) Σ ℓ(⟨xᵢ, t⟩, yᵢ)` for a smooth loss.
pub fn empirical_risk_and_gradient(problem: &VectorProblem, t: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    if !problem.loss.is_smooth() {
        return Err(Error::NonSmoothLoss(problem.loss.name()));
    }
    if t.len() != problem.n_features() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} coefficients", problem.n_features()),
            found: format!("{}", t.len()),
        });
    }
    Ok(problem.risk_and_gradient(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaConfig {
    pub max_iter: usize,
    /// Stop once `|F_k - F_{k+1}| <= tol · max(|F_k|, 1)`.
    pub tol: f64,
    /// Step shrink factor used by backtracking.
    pub backtrack: f64,
    pub initial_step: f64,
}

impl Default for FistaConfig {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-13,
            backtrack: 0.5,
            initial_step: 1.0,
        }
    }
}

impl FistaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.tol > 0.0) || !(self.initial_step > 0.0) {
            return Err(invalid("max_iter, tol and initial_step must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(invalid(format!("backtracking factor must lie in (0, 1), got {}", self.backtrack)));
        }
        Ok(())
    }
}

/// One backtracked proximal-gradient step from `y`. Returns the new point
/// and the accepted step.
fn prox_step(problem: &VectorProblem, y: &DVector<f64>, mut step: f64, shrink: f64) -> (DVector<f64>, f64) {
    let (fy, gy) = problem.risk_and_gradient(y);
    loop {
        let z = problem.project(problem.penalty.prox(&(y - &gy * step), step));
        let d = &z - y;
        let bound = fy + gy.dot(&d) + d.norm_squared() / (2.0 * step);
        let fz = problem.risk(&z);
        if fz <= bound + 1e-14 * fy.abs().max(1.0) || step < 1e-20 {
            return (z, step);
        }
        step *= shrink;
    }
}

/// Norm of the gradient mapping `‖t - P(t - s ∇f(t))‖₂ / s`, where `P`
/// applies the penalty prox then the ball projection. Zero exactly at fixed
/// points.
pub fn gradient_mapping_norm(problem: &VectorProblem, t: &DVector<f64>, step: f64) -> Result<f64> {
    let (_, g) = empirical_risk_and_gradient(problem, t)?;
    let z = problem.project(problem.penalty.prox(&(t - g * step), step));
    Ok((t - z).norm() / step)
}

/// Accelerated proximal gradient with backtracking and a monotone safeguard:
/// when the accelerated candidate does not decrease the objective, momentum is
/// reset and a plain proximal-gradient step is taken from the current point.
///
/// `residual_trace` holds the gradient-mapping norm of each accepted step.
pub fn prox_grad_solve(problem: &VectorProblem, config: &FistaConfig) -> Result<SolverReport<DVector<f64>>> {
    prox_grad_solve_from(problem, config, None)
}

/// As [`prox_grad_solve`], starting from `start` (zero when `None`).
pub fn prox_grad_solve_from(
    problem: &VectorProblem,
    config: &FistaConfig,
    start: Option<&DVector<f64>>,
) -> Result<SolverReport<DVector<f64>>> {
    config.validate()?;
    if !problem.loss.is_smooth() {
        return Err(Error::NonSmoothLoss(problem.loss.name()));
    }
    let clock = Instant::now();
    let p = problem.n_features();
    let mut x = match start {
        Some(s) if s.len() == p => problem.project(s.clone()),
        Some(s) => {
            return Err(Error::DimensionMismatch {
                expected: format!("{p} coefficients"),
                found: format!("{}", s.len()),
            })
        }
        None => DVector::zeros(p),
    };
    let objective = |t: &DVector<f64>| problem.risk(t) + problem.penalty.value(t);

    let mut fx = objective(&x);
    let mut x_prev = x.clone();
    let mut momentum = 1.0f64;
    let mut step = config.initial_step;
    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        let y = &x + (&x - &x_prev) * beta;

        let (mut z, mut accepted) = prox_step(problem, &y, step, config.backtrack);
        let mut base = y;
        let mut fz = objective(&z);
        if fz > fx {
            // accelerated candidate went uphill: restart from x
            momentum = 1.0;
            let (z2, s2) = prox_step(problem, &x, accepted, config.backtrack);
            z = z2;
            accepted = s2;
            fz = objective(&z);
            base = x.clone();
        } else {
            momentum = next_momentum;
        }
        step = accepted;

        let change = fx - fz;
        residual_trace.push((&base - &z).norm() / accepted);
        objective_trace.push(fz.min(fx));

        x_prev = std::mem::replace(&mut x, z);
        let fx_old = fx;
        fx = fz;
        if !fx.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "proximal gradient diverged at iteration {iterations}"
            )));
        }
        if change.abs() <= config.tol * fx_old.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(SolverReport {
        estimate: x,
        iterations,
        objective_trace,
        residual_trace,
        converged,
        wall_time: clock.elapsed(),
        final_step: Some(step),
        split_gap: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn toy(loss: LossKind, penalty: Penalty) -> VectorProblem {
        let design = dmatrix![
            1.0, 0.5;
            -0.3, 1.2;
            0.8, -1.0;
            -1.1, -0.4;
            0.2, 0.9
        ];
        let labels = match loss {
            LossKind::Logistic => dvector![1.0, 1.0, -1.0, -1.0, 1.0],
            _ => dvector![1.5, 0.7, -0.2, -1.8, 1.1],
        };
        VectorProblem::new(design, labels, loss, penalty, None).unwrap()
    }

    #[test]
    fn logistic_at_zero() {
        let p = toy(LossKind::Logistic, Penalty::L1 { lambda: 0.0 });
        let (v, g) = empirical_risk_and_gradient(&p, &DVector::zeros(2)).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        let expected = -p.design.tr_mul(&p.labels) / (2.0 * 5.0);
        assert!((g - expected).norm() < 1e-15);
    }

    #[test]
    fn squared_exact_fit() {
        let design = dmatrix![1.0, 0.0; 0.0, 1.0; 1.0, 1.0];
        let t = dvector![2.0, -1.0];
        let labels = &design * &t;
        let p = VectorProblem::new(design, labels, LossKind::Squared, Penalty::L1 { lambda: 0.0 }, None).unwrap();
        let (v, g) = empirical_risk_and_gradient(&p, &t).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn rejects_nonsmooth_and_bad_shapes() {
        let p = toy(LossKind::Logistic, Penalty::L1 { lambda: 0.1 });
        let hinge = VectorProblem {
            loss: LossKind::Hinge,
            ..p.clone()
        };
        assert!(matches!(
            empirical_risk_and_gradient(&hinge, &DVector::zeros(2)),
            Err(Error::NonSmoothLoss("hinge"))
        ));
        assert!(prox_grad_solve(&hinge, &FistaConfig::default()).is_err());
        assert!(empirical_risk_and_gradient(&p, &DVector::zeros(3)).is_err());
        assert!(VectorProblem::new(
            p.design.clone(),
            dvector![1.0, 0.0, 1.0, 1.0, 1.0],
            LossKind::Logistic,
            Penalty::L1 { lambda: 0.1 },
            None
        )
        .is_err());
        let bad = FistaConfig {
            backtrack: 1.0,
            ..FistaConfig::default()
        };
        assert!(prox_grad_solve(&p, &bad).is_err());
    }

    #[test]
    fn objective_trace_is_monotone_and_fixed_point() {
        let p = toy(LossKind::Logistic, Penalty::L1 { lambda: 0.02 });
        let report = prox_grad_solve(&p, &FistaConfig::default()).unwrap();
        assert!(report.converged);
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        let s = report.final_step.unwrap();
        assert!(gradient_mapping_norm(&p, &report.estimate, s).unwrap() <= 1e-5);
    }

    #[test]
    fn radius_is_respected() {
        let mut p = toy(LossKind::Logistic, Penalty::L1 { lambda: 0.0 });
        p.l2_radius = Some(0.3);
        let report = prox_grad_solve(&p, &FistaConfig::default()).unwrap();
        assert!(report.estimate.norm() <= 0.3 + 1e-12);
    }
}
