//! Command-line front end.
//!
//! Exit codes: `0` success, `1` runtime failure, `2` usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use crate::admm::{admm_solve, AdmmConfig, AdmmInit, MatrixProblem};
use crate::cv::{default_lambda_grid, kfold_cv, log_grid, CvOptions, Metric, VectorCv};
use crate::data_io::{
    binarize_with, read_triplets, train_test_split, write_report, write_traces, write_triplets, RunReport, Separator,
    TripletFile,
};
use crate::error::{invalid, Error, Result};
use crate::experiments::{run_experiment, tuned_matrix_fit, vector_lambda_max, Experiment, PathSettings, SweepOptions, SWEEP_CSV_HEADER};
use crate::losses::LossKind;
use crate::observations::ObservationSet;
use crate::prox::{nuclear_norm, numerical_rank, SlopeWeights};
use crate::prox_grad::{prox_grad_solve, FistaConfig, Penalty, VectorProblem};
use crate::simulation::{l1_reconstruction, mae, misclassification_rate, mse, ScenarioConfig, TruthKind};
use crate::theory::{lambda_lasso, lambda_matrix, lambda_slope, rate_bound, rho_star_matrix, RateInputs, RateKind};

#[derive(Debug, Parser)]
#[command(name = "lipfit", version, about = "Penalized empirical risk minimization with Lipschitz losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nuclear-norm penalized matrix completion on a triplet file or a generated scenario.
    Complete(CompleteArgs),
    /// Logistic LASSO or SLOPE on a design-matrix CSV.
    Glm(GlmArgs),
    /// Generate scenario datasets or run the simulated experiment grids.
    Simulate(SimulateArgs),
    /// Evaluate regularization and rate formulas over a range of sample sizes.
    Rates(RatesArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GridMode {
    /// Log-spaced below the smallest λ with a zero solution.
    LambdaMax,
    /// 15 values around the theoretical λ with unit constant.
    Theory,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    /// hinge, logistic, squared, median or quantile:TAU.
    #[arg(long, default_value = "hinge")]
    pub loss: LossKind,
    #[arg(long, conflicts_with = "cv")]
    pub lambda: Option<f64>,
    /// Select λ by K-fold cross-validation.
    #[arg(long)]
    pub cv: bool,
    /// Augmented Lagrange parameter; defaults to 0.3 / N.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Entrywise bound on the estimate.
    #[arg(long = "box")]
    pub box_bound: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rating triplets (row, col, value[, timestamp]).
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub input: Option<PathBuf>,
    /// Scenario config file (key = value).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV of per-iteration objective and residual.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// CSV of the estimated matrix.
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, default_value = "lambda-max")]
    pub grid_mode: GridMode,
    /// Explicit comma-separated λ grid.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 12)]
    pub grid_size: usize,
    /// misclassification, mae, mse or pinball:TAU; defaults to the loss's own.
    #[arg(long)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub no_warm_start: bool,
    /// CSV of the cross-validation score table.
    #[arg(long)]
    pub cv_table: Option<PathBuf>,
    /// Smallest id in the input file.
    #[arg(long, default_value_t = 1)]
    pub index_base: i64,
    /// Map ratings to ±1 before fitting (classification losses do this automatically).
    #[arg(long)]
    pub binarize: bool,
    /// Ratings mapped to +1 when binarizing.
    #[arg(long, value_delimiter = ',', default_value = "4,5")]
    pub positive: Vec<f64>,
    /// Share of input samples held out for testing.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyKind {
    L1,
    Slope,
}

#[derive(Debug, Args)]
pub struct GlmArgs {
    /// CSV with rows `y,x1,...,xp`; a header line is skipped.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "l1")]
    pub penalty: PenaltyKind,
    #[arg(long, default_value = "logistic")]
    pub loss: LossKind,
    #[arg(long, conflicts_with = "cv")]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub cv: bool,
    /// Radius of the ℓ2 ball constraint.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 12)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioA {
    /// Rows copy one of `rank` random ±1 prototypes.
    Blocks,
    /// sign(L Rᵀ) of Gaussian factors.
    Sign,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// table1, noise-sweep, outlier-magnitude, outlier-share or student.
    #[arg(long, required_unless_present = "scenario")]
    pub experiment: Option<Experiment>,
    /// Generate this scenario and export it instead of running an experiment.
    #[arg(long, conflicts_with = "experiment")]
    pub scenario: Option<PathBuf>,
    /// Triplet file for the generated training samples.
    #[arg(long, requires = "scenario")]
    pub export: Option<PathBuf>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    pub size: usize,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, value_enum, default_value = "blocks")]
    pub scenario_a: ScenarioA,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Formula {
    LambdaMatrix,
    LambdaLasso,
    LambdaSlope,
    RhoStar,
    MatrixS2,
    MatrixExcess,
    LassoL2,
    SlopeL2,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub t: usize,
    /// Rank or sparsity.
    #[arg(long, default_value_t = 3)]
    pub s: usize,
    /// Dimension of vector problems.
    #[arg(long, default_value_t = 1000)]
    pub p: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    #[arg(long, default_value_t = 100)]
    pub n_min: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n_max: usize,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = Cli::command()
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m).map(|cli| (cli, m)));
    let (cli, matches) = match parsed {
        Ok(v) => v,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let echo = matches.subcommand().map(|(_, sub)| flag_echo(sub)).unwrap_or_default();
    let outcome = match &cli.command {
        Command::Complete(a) => cmd_complete(a, echo),
        Command::Glm(a) => cmd_glm(a, echo),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Rates(a) => cmd_rates(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e @ Error::InvalidParameter(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Every flag of a subcommand with its value, defaults included.
fn flag_echo(matches: &ArgMatches) -> BTreeMap<String, String> {
    matches
        .ids()
        // argument groups are named after the args struct
        .filter(|id| !id.as_str().starts_with(char::is_uppercase))
        .filter_map(|id| {
            let values = matches.get_raw(id.as_str())?;
            let joined: Vec<String> = values.map(|v| v.to_string_lossy().into_owned()).collect();
            Some((id.as_str().replace('_', "-"), joined.join(",")))
        })
        .collect()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

struct CompletionData {
    train: ObservationSet,
    test: ObservationSet,
    truth: Option<DMatrix<f64>>,
    test_entries: Vec<(usize, usize)>,
}

fn load_completion_data(a: &CompleteArgs) -> Result<CompletionData> {
    if let Some(path) = &a.scenario {
        let config: ScenarioConfig = fs::read_to_string(path)?.parse()?;
        let s = config.generate()?;
        let test = ObservationSet::new(
            s.truth.nrows(),
            s.truth.ncols(),
            s.test
                .iter()
                .map(|&(r, c)| crate::observations::Sample::new(r, c, s.truth[(r, c)]))
                .collect(),
        )?;
        return Ok(CompletionData {
            train: s.train,
            test,
            test_entries: s.test,
            truth: Some(s.truth),
        });
    }
    let path = a.input.as_ref().ok_or_else(|| invalid("one of --input or --scenario is required"))?;
    let (obs, _) = read_triplets(&TripletFile::new(path).with_base(a.index_base))?;
    let obs = if a.binarize || a.loss.is_classification() {
        binarize_with(&obs, &a.positive)
    } else {
        obs
    };
    let (train, test) = train_test_split(&obs, a.test_fraction, a.seed)?;
    Ok(CompletionData {
        train,
        test,
        truth: None,
        test_entries: Vec::new(),
    })
}

fn cmd_complete(a: &CompleteArgs, echo: BTreeMap<String, String>) -> Result<()> {
    if a.lambda.is_none() && !a.cv {
        return Err(invalid("one of --lambda or --cv is required"));
    }
    let data = load_completion_data(a)?;
    let n = data.train.len();
    let alpha = a.alpha.unwrap_or(0.3 / n.max(1) as f64);
    let config = AdmmConfig {
        alpha,
        max_iter: a.max_iter,
        tol: a.tol,
        feasibility_tol: None,
        init: AdmmInit::Gaussian { seed: a.seed },
    };
    config.validate()?;

    let (lambda, fit) = if let Some(lambda) = a.lambda {
        let problem = MatrixProblem::new(data.train.clone(), a.loss, lambda, a.box_bound)?;
        (lambda, admm_solve(&problem, &config)?)
    } else {
        let (m, t) = data.train.shape();
        let grid = match (&a.grid, a.grid_mode) {
            (Some(g), _) => Some(g.clone()),
            (None, GridMode::Theory) => Some(default_lambda_grid(lambda_matrix(m, t, n, 1.0)?, 15)?),
            (None, GridMode::LambdaMax) => None,
        };
        let settings = PathSettings {
            alpha_scale: alpha * n as f64,
            tol: a.tol,
            max_iter: a.max_iter,
            box_bound: a.box_bound,
            folds: a.folds,
            grid_size: a.grid_size,
            grid,
            metric: a.metric,
            seed: a.seed,
            warm_start: !a.no_warm_start,
            ..PathSettings::for_loss(a.loss)
        };
        let tuned = tuned_matrix_fit(&data.train, a.loss, &settings)?;
        if let Some(p) = &a.cv_table {
            tuned.cv.write_csv(p)?;
        }
        (tuned.lambda, tuned.fit)
    };

    let est = &fit.estimate;
    let mut metrics = BTreeMap::new();
    metrics.insert("rank".into(), numerical_rank(est, 1e-6)? as f64);
    metrics.insert("nuclear_norm".into(), nuclear_norm(est)?);
    if !data.test.is_empty() {
        metrics.insert("test_mae".into(), mae(est, &data.test)?);
        metrics.insert("test_mse".into(), mse(est, &data.test)?);
        if a.loss.is_classification() {
            let scores: Vec<f64> = data
                .test
                .predictions(est)
                .map(|(t, y)| Metric::Misclassification.score(t, y))
                .collect();
            metrics.insert("test_misclassification".into(), scores.iter().sum::<f64>() / scores.len() as f64);
        }
    }
    if let Some(truth) = &data.truth {
        if a.loss.is_classification() && !data.test_entries.is_empty() {
            metrics.insert("misclassification".into(), misclassification_rate(est, truth, &data.test_entries)?);
        }
        metrics.insert("l1_reconstruction".into(), l1_reconstruction(est, truth)?);
    }

    let mut report = RunReport::from_solver("complete", echo, a.seed, lambda, &fit);
    report.metrics = metrics;
    if let Some(p) = &a.traces {
        write_traces(&fit, p)?;
        report.traces_path = Some(p.clone());
    }
    if let Some(p) = &a.estimate {
        write_matrix_csv(est, p)?;
    }
    if let Some(p) = &a.report {
        write_report(&report, p)?;
    }
    println!(
        "lambda={lambda} iterations={} converged={} objective={}",
        fit.iterations,
        fit.converged,
        fit.final_objective().unwrap_or(f64::NAN)
    );
    for (k, v) in &report.metrics {
        println!("{k}={v}");
    }
    Ok(())
}

fn write_matrix_csv(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `y,x1,...,xp` rows; a first line that does not parse is a header.
pub fn read_design_csv(path: &Path) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if v.len() < 2 {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: "need a label and at least one feature".into(),
                    });
                }
                if let Some(first) = rows.first() {
                    if first.len() != v.len() {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            line: i + 1,
                            message: format!("expected {} fields, found {}", first.len(), v.len()),
                        });
                    }
                }
                rows.push(v);
            }
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no rows", path.display())));
    }
    let p = rows[0].len() - 1;
    let labels = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[0]));
    let design = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j + 1]);
    Ok((design, labels))
}

fn cmd_glm(a: &GlmArgs, echo: BTreeMap<String, String>) -> Result<()> {
    if a.lambda.is_none() && !a.cv {
        return Err(invalid("one of --lambda or --cv is required"));
    }
    let (design, labels) = read_design_csv(&a.input)?;
    let p = design.ncols();
    let penalty = match a.penalty {
        PenaltyKind::L1 => Penalty::L1 { lambda: 0.0 },
        PenaltyKind::Slope => Penalty::Slope {
            lambda: 0.0,
            weights: SlopeWeights::canonical(p)?,
        },
    };
    let base = VectorProblem::new(design, labels, a.loss, penalty, a.radius)?;
    let config = FistaConfig {
        max_iter: a.max_iter,
        tol: a.tol,
        ..FistaConfig::default()
    };
    config.validate()?;
    let lambda = match a.lambda {
        Some(l) => l,
        None => {
            let top = vector_lambda_max(&base)?;
            let grid = if top > 0.0 {
                log_grid(top * 1e-3, top, a.grid_size)?
            } else {
                let n = base.n_samples();
                let center = match a.penalty {
                    PenaltyKind::L1 => lambda_lasso(p as f64, n, 1.0)?,
                    PenaltyKind::Slope => lambda_slope(n, 1.0)?,
                };
                default_lambda_grid(center, a.grid_size)?
            };
            let metric = if a.loss.is_classification() {
                Metric::Misclassification
            } else {
                Metric::for_loss(a.loss)
            };
            let result = kfold_cv(
                &VectorCv {
                    problem: &base,
                    config: config.clone(),
                },
                &grid,
                &CvOptions {
                    folds: a.folds,
                    metric,
                    seed: a.seed,
                    warm_start: true,
                },
            )?;
            result.best_lambda
        }
    };
    let problem = base.with_lambda(lambda);
    let fit = prox_grad_solve(&problem, &config)?;
    let mut report = RunReport::from_solver("glm", echo, a.seed, lambda, &fit);
    let nonzero = fit.estimate.iter().filter(|x| **x != 0.0).count();
    report.metrics.insert("nonzero".into(), nonzero as f64);
    if let Some(path) = &a.traces {
        write_traces(&fit, path)?;
        report.traces_path = Some(path.clone());
    }
    if let Some(path) = &a.report {
        write_report(&report, path)?;
    }
    println!(
        "lambda={lambda} iterations={} converged={} objective={} nonzero={nonzero}",
        fit.iterations,
        fit.converged,
        fit.final_objective().unwrap_or(f64::NAN)
    );
    let coefs: Vec<String> = fit.estimate.iter().map(|x| x.to_string()).collect();
    println!("coefficients={}", coefs.join(","));
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    if let Some(path) = &a.scenario {
        let config: ScenarioConfig = fs::read_to_string(path)?.parse()?;
        let s = config.generate()?;
        if let Some(out) = &a.export {
            write_triplets(&s.train, out, Separator::Tab, 1)?;
        }
        let mut out = output(a.out.as_deref())?;
        writeln!(out, "row,col,truth,observed")?;
        let observed: BTreeMap<(usize, usize), f64> = s.train.iter().map(|x| ((x.row, x.col), x.value)).collect();
        for ((r, c), v) in &observed {
            writeln!(out, "{},{},{},{}", r, c, s.truth[(*r, *c)], v)?;
        }
        out.flush()?;
        eprintln!(
            "samples={} factor_rank={} realized_rank={}",
            s.train.len(),
            s.factor_rank,
            s.realized_rank
        );
        return Ok(());
    }
    let experiment = a.experiment.ok_or_else(|| invalid("one of --experiment or --scenario is required"))?;
    if a.seeds == 0 {
        return Err(invalid("--seeds must be positive"));
    }
    let opts = SweepOptions {
        size: a.size,
        rank: a.rank,
        sample_fraction: a.fraction,
        seeds: (a.first_seed..a.first_seed + a.seeds).collect(),
        scenario_a: match a.scenario_a {
            ScenarioA::Blocks => TruthKind::SignBlocks,
            ScenarioA::Sign => TruthKind::SignMatrix,
        },
    };
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    let mut io_error = None;
    run_experiment(experiment, &opts, |row| {
        if io_error.is_none() {
            io_error = writeln!(out, "{}", row.csv()).and_then(|_| out.flush()).err();
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    Ok(())
}

fn cmd_rates(a: &RatesArgs) -> Result<()> {
    if a.points == 0 || a.n_min == 0 || a.n_max < a.n_min {
        return Err(invalid("need 1 <= n-min <= n-max and points >= 1"));
    }
    let ns: Vec<usize> = log_grid(a.n_min as f64, a.n_max as f64, a.points)?
        .into_iter()
        .rev()
        .map(|x| x.round() as usize)
        .collect();
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "n,value")?;
    for n in ns {
        let inputs = RateInputs {
            m: a.m,
            t: a.t,
            n,
            s: a.s,
            p: a.p,
            kappa: a.kappa,
            constant: a.constant,
        };
        let value = match a.formula {
            Formula::LambdaMatrix => lambda_matrix(a.m, a.t, n, a.constant)?,
            Formula::LambdaLasso => lambda_lasso(a.p as f64, n, a.constant)?,
            Formula::LambdaSlope => lambda_slope(n, a.constant)?,
            Formula::RhoStar => rho_star_matrix(a.s, a.m, a.t, n, a.kappa, a.constant)?,
            Formula::MatrixS2 => rate_bound(RateKind::MatrixS2, &inputs)?,
            Formula::MatrixExcess => rate_bound(RateKind::MatrixExcess, &inputs)?,
            Formula::LassoL2 => rate_bound(RateKind::LassoLq { q: 2.0 }, &inputs)?,
            Formula::SlopeL2 => rate_bound(RateKind::SlopeL2, &inputs)?,
        };
        writeln!(out, "{n},{value}")?;
    }
    out.flush()?;
    Ok(())
}
