//! Cross-validated completion fits and the simulated experiment cells built
//! on them.

use nalgebra::{DMatrix, DVector};

use crate::admm::{admm_solve, AdmmConfig, AdmmInit, MatrixProblem};
use crate::cv::{kfold_cv, log_grid, CvOptions, CvResult, MatrixCv, Metric};
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::observations::ObservationSet;
use crate::prox_grad::{Penalty, VectorProblem};
use crate::prox::singular_values;
use crate::simulation::{
    gen_classification, gen_quantile, l1_reconstruction, misclassification_rate, LabelNoise, QuantileNoise,
    QuantileScenarioSpec, ScenarioSpec, TruthKind,
};
use crate::solver::SolverReport;

/// Smallest λ at which the zero matrix solves the penalized problem:
/// the operator norm of `(1/N) Σ ℓ'(0, yᵢ) Xᵢ`. At kinks the midpoint
/// subgradient is used.
pub fn lambda_max(data: &ObservationSet, loss: LossKind) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("no observations".into()));
    }
    let mut g = DMatrix::<f64>::zeros(data.rows(), data.cols());
    for s in data.iter() {
        loss.check_label(s.value)?;
        g[(s.row, s.col)] += loss.deriv(0.0, s.value);
    }
    g /= data.len() as f64;
    Ok(singular_values(&g)?.max())
}

/// Smallest penalty level at which `t = 0` solves a vector problem.
pub fn vector_lambda_max(problem: &VectorProblem) -> Result<f64> {
    let n = problem.n_samples() as f64;
    let g = DVector::from_iterator(
        problem.n_samples(),
        problem.labels.iter().map(|&y| problem.loss.deriv(0.0, y)),
    );
    let grad = problem.design.tr_mul(&g) / n;
    Ok(match &problem.penalty {
        Penalty::L1 { .. } => grad.amax(),
        Penalty::Slope { weights, .. } => {
            let mut mags: Vec<f64> = grad.iter().map(|x| x.abs()).collect();
            mags.sort_by(|a, b| b.total_cmp(a));
            let mut best = 0.0f64;
            let (mut num, mut den) = (0.0, 0.0);
            for (g, w) in mags.iter().zip(weights.as_slice()) {
                num += g;
                den += w;
                best = best.max(num / den);
            }
            best
        }
    })
}

/// Solver and tuning settings for a cross-validated completion fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSettings {
    /// `α = alpha_scale / N`, which balances the loss term against the
    /// coupling term in the `M` update.
    pub alpha_scale: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub box_bound: Option<f64>,
    pub folds: usize,
    /// Number of grid points between `grid_ratio · λ_max` and `λ_max`.
    pub grid_size: usize,
    pub grid_ratio: f64,
    /// Explicit grid; overrides the λ_max-relative one.
    pub grid: Option<Vec<f64>>,
    pub metric: Option<Metric>,
    pub seed: u64,
    pub warm_start: bool,
}

impl PathSettings {
    /// Defaults used by the simulated experiments. Hinge fits use the box
    /// `[-1, 1]`, which contains the Bayes classifier. Regression losses get a
    /// wider grid because their selected λ ranges further below `λ_max`.
    pub fn for_loss(loss: LossKind) -> Self {
        let classification = loss.is_classification();
        Self {
            alpha_scale: 0.3,
            tol: 1e-6,
            max_iter: 1000,
            box_bound: matches!(loss, LossKind::Hinge).then_some(1.0),
            folds: 5,
            grid_size: if classification { 8 } else { 12 },
            grid_ratio: if classification { 0.1 } else { 0.02 },
            grid: None,
            metric: None,
            seed: 0,
            warm_start: true,
        }
    }

    pub fn admm_config(&self, n_samples: usize) -> AdmmConfig {
        AdmmConfig {
            alpha: self.alpha_scale / n_samples.max(1) as f64,
            max_iter: self.max_iter,
            tol: self.tol,
            feasibility_tol: None,
            init: AdmmInit::Gaussian { seed: self.seed },
        }
    }

    pub fn grid_for(&self, data: &ObservationSet, loss: LossKind) -> Result<Vec<f64>> {
        match &self.grid {
            Some(g) => Ok(g.clone()),
            None => {
                let top = lambda_max(data, loss)?;
                if !(top > 0.0) {
                    return Err(Error::NumericalFailure("lambda_max is zero".into()));
                }
                log_grid(self.grid_ratio * top, top, self.grid_size)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TunedFit {
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub cv: CvResult,
    pub fit: SolverReport<DMatrix<f64>>,
}

/// Selects λ by K-fold cross-validation, then refits on all of `train`
/// along the descending grid down to the selected value.
pub fn tuned_matrix_fit(train: &ObservationSet, loss: LossKind, settings: &PathSettings) -> Result<TunedFit> {
    let grid = settings.grid_for(train, loss)?;
    let base = MatrixProblem::new(train.clone(), loss, grid[0], settings.box_bound)?;
    let mut config = settings.admm_config(base.data.len());
    if settings.warm_start {
        // the path starts at λ_max, where the zero matrix is optimal
        config.init = AdmmInit::WarmStart(DMatrix::zeros(train.rows(), train.cols()));
    }
    let cv = kfold_cv(
        &MatrixCv {
            problem: &base,
            config: AdmmConfig {
                alpha: settings.alpha_scale / (base.data.len() as f64 * (settings.folds - 1).max(1) as f64
                    / settings.folds as f64),
                ..config.clone()
            },
        },
        &grid,
        &CvOptions {
            folds: settings.folds,
            metric: settings.metric.unwrap_or(Metric::for_loss(loss)),
            seed: settings.seed,
            warm_start: settings.warm_start,
        },
    )?;
    let fit = refit_path(&base, &grid, cv.best_lambda, &config, settings.warm_start)?;
    Ok(TunedFit {
        lambda: cv.best_lambda,
        grid,
        cv,
        fit,
    })
}

fn refit_path(
    base: &MatrixProblem,
    grid: &[f64],
    lambda: f64,
    config: &AdmmConfig,
    warm_start: bool,
) -> Result<SolverReport<DMatrix<f64>>> {
    if !warm_start {
        return admm_solve(&base.with_lambda(lambda)?, config);
    }
    let mut path: Vec<f64> = grid.iter().copied().filter(|&l| l >= lambda).collect();
    path.sort_by(|a, b| b.total_cmp(a));
    path.dedup();
    let mut current = config.clone();
    let mut last = None;
    for l in path {
        let report = admm_solve(&base.with_lambda(l)?, &current)?;
        current = config.warm_started(report.estimate.clone());
        last = Some(report);
    }
    last.ok_or_else(|| Error::NumericalFailure("empty refit path".into()))
}

/// Outcome of one simulated cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOutcome {
    pub lambda: f64,
    /// Misclassification for classification cells, `l1` reconstruction for
    /// quantile cells.
    pub error: f64,
    pub iterations: usize,
}

pub fn classification_cell(spec: &ScenarioSpec, loss: LossKind, settings: &PathSettings) -> Result<CellOutcome> {
    let scenario = gen_classification(spec)?;
    let tuned = tuned_matrix_fit(&scenario.train, loss, settings)?;
    Ok(CellOutcome {
        lambda: tuned.lambda,
        error: misclassification_rate(&tuned.fit.estimate, &scenario.truth, &scenario.test)?,
        iterations: tuned.fit.iterations,
    })
}

pub fn quantile_cell(spec: &QuantileScenarioSpec, loss: LossKind, settings: &PathSettings) -> Result<CellOutcome> {
    let scenario = gen_quantile(spec)?;
    let tuned = tuned_matrix_fit(&scenario.train, loss, settings)?;
    Ok(CellOutcome {
        lambda: tuned.lambda,
        error: l1_reconstruction(&tuned.fit.estimate, &scenario.truth)?,
        iterations: tuned.fit.iterations,
    })
}

/// Simulated experiment grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Scenarios {A, B} × noise {noiseless, logistic, switch 0.1}, hinge and
    /// logistic losses.
    Table1,
    /// Scenario A with switch noise `p ∈ {0, 0.05, …, 0.4}`.
    NoiseSweep,
    /// Outlier magnitude `o ∈ {0, 5, …, 30}` at share 0.1, median and least squares.
    OutlierMagnitude,
    /// Outlier share `p ∈ {0, 0.05, …, 0.25}` at magnitude 10.
    OutlierShare,
    /// Student noise with `1..=10` degrees of freedom.
    Student,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::NoiseSweep => "noise-sweep",
            Experiment::OutlierMagnitude => "outlier-magnitude",
            Experiment::OutlierShare => "outlier-share",
            Experiment::Student => "student",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Experiment::Table1,
            Experiment::NoiseSweep,
            Experiment::OutlierMagnitude,
            Experiment::OutlierShare,
            Experiment::Student,
        ]
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| crate::error::invalid(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub size: usize,
    pub rank: usize,
    pub sample_fraction: f64,
    pub seeds: Vec<u64>,
    /// Construction used for scenario A.
    pub scenario_a: TruthKind,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            size: 60,
            rank: 3,
            sample_fraction: 0.2,
            seeds: (0..5).collect(),
            scenario_a: TruthKind::SignBlocks,
        }
    }
}

/// One fitted cell of an experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub experiment: &'static str,
    pub cell: String,
    pub loss: String,
    pub seed: u64,
    /// Swept parameter (noise level, magnitude, share or degrees of freedom).
    pub param: f64,
    pub lambda: f64,
    pub error: f64,
}

pub const SWEEP_CSV_HEADER: &str = "experiment,cell,loss,seed,param,lambda,error";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.experiment, self.cell, self.loss, self.seed, self.param, self.lambda, self.error
        )
    }
}

fn grid_steps(step: f64, last: f64) -> Vec<f64> {
    let n = (last / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Runs every cell of `experiment`, calling `on_row` as each one finishes.
pub fn run_experiment(experiment: Experiment, opts: &SweepOptions, mut on_row: impl FnMut(&SweepRow)) -> Result<Vec<SweepRow>> {
    let classification_losses = [LossKind::Hinge, LossKind::Logistic];
    let median = LossKind::quantile(0.5)?;
    let regression_losses = [median, LossKind::Squared];
    let mut rows = Vec::new();
    let mut push = |row: SweepRow, rows: &mut Vec<SweepRow>| {
        on_row(&row);
        rows.push(row);
    };

    let class_spec = |kind, noise, seed| ScenarioSpec {
        m: opts.size,
        t: opts.size,
        rank: opts.rank,
        kind,
        sample_fraction: opts.sample_fraction,
        noise,
        seed,
    };
    let quant_spec = |noise, o, p, seed| QuantileScenarioSpec {
        m: opts.size,
        t: opts.size,
        rank: opts.rank,
        sample_fraction: opts.sample_fraction,
        seed,
        noise,
        outlier_magnitude: o,
        outlier_share: p,
    };
    let gaussian = QuantileNoise::Gaussian { sigma: 0.5 };

    match experiment {
        Experiment::Table1 | Experiment::NoiseSweep => {
            let cells: Vec<(String, TruthKind, LabelNoise, f64)> = if experiment == Experiment::Table1 {
                let mut v = Vec::new();
                for (letter, kind) in [("A", opts.scenario_a), ("B", TruthKind::GaussianFactors)] {
                    v.push((format!("{letter}-noiseless"), kind, LabelNoise::Noiseless, 0.0));
                    v.push((format!("{letter}-switch"), kind, LabelNoise::Switch { p: 0.1 }, 0.1));
                    v.push((format!("{letter}-logistic"), kind, LabelNoise::Logistic, 0.0));
                }
                v
            } else {
                grid_steps(0.05, 0.4)
                    .into_iter()
                    .map(|p| (format!("A-switch-{p}"), opts.scenario_a, LabelNoise::Switch { p }, p))
                    .collect()
            };
            for (cell, kind, noise, param) in cells {
                for &seed in &opts.seeds {
                    for loss in classification_losses {
                        let settings = PathSettings {
                            seed,
                            ..PathSettings::for_loss(loss)
                        };
                        let out = classification_cell(&class_spec(kind, noise, seed), loss, &settings)?;
                        push(
                            SweepRow {
                                experiment: experiment.name(),
                                cell: cell.clone(),
                                loss: loss.to_string(),
                                seed,
                                param,
                                lambda: out.lambda,
                                error: out.error,
                            },
                            &mut rows,
                        );
                    }
                }
            }
        }
        Experiment::OutlierMagnitude | Experiment::OutlierShare | Experiment::Student => {
            let cells: Vec<(QuantileNoise, f64, f64, f64)> = match experiment {
                Experiment::OutlierMagnitude => grid_steps(5.0, 30.0).into_iter().map(|o| (gaussian, o, 0.1, o)).collect(),
                Experiment::OutlierShare => grid_steps(0.05, 0.25).into_iter().map(|p| (gaussian, 10.0, p, p)).collect(),
                _ => (1..=10)
                    .map(|df| (QuantileNoise::StudentT { df: df as f64 }, 0.0, 0.0, df as f64))
                    .collect(),
            };
            for (noise, o, p, param) in cells {
                for &seed in &opts.seeds {
                    for loss in regression_losses {
                        let settings = PathSettings {
                            seed,
                            ..PathSettings::for_loss(loss)
                        };
                        let out = quantile_cell(&quant_spec(noise, o, p, seed), loss, &settings)?;
                        push(
                            SweepRow {
                                experiment: experiment.name(),
                                cell: format!("{}-{param}", experiment.name()),
                                loss: loss.to_string(),
                                seed,
                                param,
                                lambda: out.lambda,
                                error: out.error,
                            },
                            &mut rows,
                        );
                    }
                }
            }
        }
    }
    Ok(rows)
}
