use std::time::Duration;

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolverReport<E> {
    pub estimate: E,
    pub iterations: usize,
    /// Objective value after each iteration.
    pub objective_trace: Vec<f64>,
    /// Convergence measure after each iteration; see the individual solvers.
    pub residual_trace: Vec<f64>,
    pub converged: bool,
    pub wall_time: Duration,
    /// Last accepted step size (proximal-gradient solver only).
    pub final_step: Option<f64>,
    /// `‖M - L‖_F` between the two split variables at termination (ADMM only).
    pub split_gap: Option<f64>,
}

impl<E> SolverReport<E> {
    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residual_trace.last().copied()
    }
}
