//! K-fold cross-validation over a λ grid.
//!
//! Each fold runs the whole grid in descending λ order, optionally warm
//! starting every fit from the previous one. Folds are independent and run on
//! a rayon pool whose size can be capped through `LIPFIT_THREADS`.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::admm::{admm_solve, AdmmConfig, MatrixProblem};
use crate::error::{invalid, Error, Result};
use crate::losses::{pinball, LossKind};
use crate::prox_grad::{prox_grad_solve_from, FistaConfig, VectorProblem};
use crate::simulation::sign;

pub const THREADS_ENV: &str = "LIPFIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Misclassification,
    Mae,
    Mse,
    Pinball { tau: f64 },
}

impl Metric {
    /// Score of a single prediction `t` for label `y`.
    pub fn score(&self, t: f64, y: f64) -> f64 {
        match self {
            Metric::Misclassification => (sign(t) != y) as u8 as f64,
            Metric::Mae => (t - y).abs(),
            Metric::Mse => (t - y) * (t - y),
            Metric::Pinball { tau } => pinball(y - t, *tau),
        }
    }

    /// Natural held-out metric for a training loss.
    pub fn for_loss(loss: LossKind) -> Self {
        match loss {
            LossKind::Hinge | LossKind::Logistic => Metric::Misclassification,
            LossKind::Quantile { tau } if tau == 0.5 => Metric::Mae,
            LossKind::Quantile { tau } => Metric::Pinball { tau },
            LossKind::Squared => Metric::Mse,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Misclassification => write!(f, "misclassification"),
            Metric::Mae => write!(f, "mae"),
            Metric::Mse => write!(f, "mse"),
            Metric::Pinball { tau } => write!(f, "pinball:{tau}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "misclassification" => Ok(Metric::Misclassification),
            "mae" => Ok(Metric::Mae),
            "mse" => Ok(Metric::Mse),
            "pinball" => Ok(Metric::Pinball { tau: 0.5 }),
            other => match other.strip_prefix("pinball:").map(str::parse::<f64>) {
                Some(Ok(tau)) if tau > 0.0 && tau < 1.0 => Ok(Metric::Pinball { tau }),
                _ => Err(invalid(format!("unknown metric {s:?}"))),
            },
        }
    }
}

/// A problem that can be fitted on a subset of its samples and scored on
/// another.
pub trait CvModel: Sync {
    type Fit: Send;

    fn n_samples(&self) -> usize;

    fn fit(&self, train: &[usize], lambda: f64, warm: Option<&Self::Fit>) -> Result<Self::Fit>;

    /// Per-sample held-out predictions paired with labels.
    fn predict(&self, fit: &Self::Fit, test: &[usize]) -> Vec<(f64, f64)>;
}

/// Matrix completion by ADMM.
pub struct MatrixCv<'a> {
    pub problem: &'a MatrixProblem,
    pub config: AdmmConfig,
}

impl CvModel for MatrixCv<'_> {
    type Fit = DMatrix<f64>;

    fn n_samples(&self) -> usize {
        self.problem.data.len()
    }

    fn fit(&self, train: &[usize], lambda: f64, warm: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
        let sub = MatrixProblem {
            data: self.problem.data.subset(train),
            lambda,
            ..self.problem.clone()
        };
        let config = match warm {
            Some(w) => self.config.warm_started(w.clone()),
            None => self.config.clone(),
        };
        Ok(admm_solve(&sub, &config)?.estimate)
    }

    fn predict(&self, fit: &DMatrix<f64>, test: &[usize]) -> Vec<(f64, f64)> {
        let samples = self.problem.data.samples();
        test.iter()
            .map(|&i| {
                let s = &samples[i];
                (fit[(s.row, s.col)], s.value)
            })
            .collect()
    }
}

/// Penalized linear model by accelerated proximal gradient.
pub struct VectorCv<'a> {
    pub problem: &'a VectorProblem,
    pub config: FistaConfig,
}

impl CvModel for VectorCv<'_> {
    type Fit = DVector<f64>;

    fn n_samples(&self) -> usize {
        self.problem.n_samples()
    }

    fn fit(&self, train: &[usize], lambda: f64, warm: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        let sub = self.problem.subset(train)?.with_lambda(lambda);
        Ok(prox_grad_solve_from(&sub, &self.config, warm)?.estimate)
    }

    fn predict(&self, fit: &DVector<f64>, test: &[usize]) -> Vec<(f64, f64)> {
        test.iter()
            .map(|&i| (self.problem.design.row(i).transpose().dot(fit), self.problem.labels[i]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub metric: Metric,
    pub seed: u64,
    pub warm_start: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            metric: Metric::Mse,
            seed: 0,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreCell {
    pub lambda: f64,
    pub fold: usize,
    /// Mean held-out score; `NaN` when the fit failed or diverged.
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub best_lambda: f64,
    /// One cell per grid entry (in input order) and fold.
    pub table: Vec<ScoreCell>,
    /// Mean over finite cells, per grid entry in input order.
    pub mean_scores: Vec<f64>,
    /// Number of cells excluded as non-finite.
    pub nonfinite: usize,
}

impl CvResult {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(out, "lambda,fold,score")?;
        for c in &self.table {
            writeln!(out, "{},{},{}", c.lambda, c.fold, c.score)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `n` values spaced evenly in log scale from `center / 100` to `center * 100`.
pub fn default_lambda_grid(center: f64, n: usize) -> Result<Vec<f64>> {
    if !(center > 0.0) || !center.is_finite() {
        return Err(invalid(format!("grid center must be positive, got {center}")));
    }
    log_grid(center / 100.0, center * 100.0, n)
}

/// `n` log-spaced values between `lo` and `hi` inclusive, descending.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
        return Err(invalid(format!("bad grid bounds [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![(lo * hi).sqrt()]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| (b - (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Random partition of `0..n` into `k` folds; fold `j` gets every k-th
/// element of a seeded shuffle, in increasing order.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    if let Some(empty) = folds.iter().position(Vec::is_empty) {
        return Err(Error::EmptyFold(empty));
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::NumericalFailure(format!("cannot start worker pool: {e}")))
}

/// Runs the descending λ path on one fold and returns one score per distinct λ.
fn fold_scores<M: CvModel>(model: &M, train: &[usize], test: &[usize], path: &[f64], opts: &CvOptions) -> Vec<f64> {
    let mut previous: Option<M::Fit> = None;
    path.iter()
        .map(|&lambda| {
            let warm = if opts.warm_start { previous.as_ref() } else { None };
            match model.fit(train, lambda, warm) {
                Ok(fit) => {
                    let preds = model.predict(&fit, test);
                    let score = preds.iter().map(|&(t, y)| opts.metric.score(t, y)).sum::<f64>() / preds.len() as f64;
                    previous = Some(fit);
                    score
                }
                Err(e) => {
                    log::debug!("fit at lambda {lambda} failed: {e}");
                    f64::NAN
                }
            }
        })
        .collect()
}

pub fn kfold_cv<M: CvModel>(model: &M, grid: &[f64], opts: &CvOptions) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(invalid("lambda grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(invalid(format!("grid values must be positive, got {bad}")));
    }
    let n = model.n_samples();
    let folds = fold_assignment(n, opts.folds, opts.seed)?;

    // distinct values, largest first
    let mut path = grid.to_vec();
    path.sort_by(|a, b| b.total_cmp(a));
    path.dedup();

    let pool = thread_pool()?;
    let per_fold: Vec<Vec<f64>> = pool.install(|| {
        folds
            .par_iter()
            .map(|test| {
                let mut in_test = vec![false; n];
                for &i in test {
                    in_test[i] = true;
                }
                let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
                fold_scores(model, &train, test, &path, opts)
            })
            .collect()
    });

    let slot = |lambda: f64| path.iter().position(|&l| l == lambda).expect("grid value on path");
    let mut table = Vec::with_capacity(grid.len() * folds.len());
    for &lambda in grid {
        for (fold, scores) in per_fold.iter().enumerate() {
            table.push(ScoreCell {
                lambda,
                fold,
                score: scores[slot(lambda)],
            });
        }
    }

    let mut nonfinite = 0;
    let path_means: Vec<f64> = (0..path.len())
        .map(|j| {
            let finite: Vec<f64> = per_fold.iter().map(|s| s[j]).filter(|s| s.is_finite()).collect();
            nonfinite += per_fold.len() - finite.len();
            if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            }
        })
        .collect();
    if nonfinite > 0 {
        log::warn!("{nonfinite} cross-validation cells were not finite and were excluded");
    }

    // path is descending, so replacing only on strict improvement keeps the
    // larger λ on ties
    let mut best: Option<(f64, f64)> = None;
    for (&lambda, &score) in path.iter().zip(&path_means) {
        if score.is_finite() && best.is_none_or(|(_, s)| score < s) {
            best = Some((lambda, score));
        }
    }
    let (best_lambda, _) = best.ok_or_else(|| Error::NumericalFailure("no finite cross-validation score".into()))?;

    Ok(CvResult {
        best_lambda,
        table,
        mean_scores: grid.iter().map(|&l| path_means[slot(l)]).collect(),
        nonfinite,
    })
}
