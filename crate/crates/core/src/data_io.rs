//! Rating triplet files, label transforms, splits and run reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observations::{ObservationSet, Sample};
use crate::solver::SolverReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separator {
    Tab,
    Comma,
}

impl Separator {
    fn as_char(self) -> char {
        match self {
            Separator::Tab => '\t',
            Separator::Comma => ',',
        }
    }

    fn detect(line: &str) -> Self {
        if line.contains('\t') {
            Separator::Tab
        } else {
            Separator::Comma
        }
    }
}

/// Description of a `row, col, value[, timestamp]` file.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletFile {
    pub path: PathBuf,
    /// `None` detects the separator from the first data line.
    pub separator: Option<Separator>,
    /// Smallest id in the file (1 for MovieLens).
    pub index_base: i64,
    /// Known grid shape. When set, ids are used as positions directly;
    /// otherwise ids are re-indexed densely in sorted order.
    pub shape: Option<(usize, usize)>,
}

impl TripletFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            separator: None,
            index_base: 1,
            shape: None,
        }
    }

    pub fn with_base(mut self, base: i64) -> Self {
        self.index_base = base;
        self
    }

    pub fn with_separator(mut self, sep: Separator) -> Self {
        self.separator = Some(sep);
        self
    }

    pub fn with_shape(mut self, rows: usize, cols: usize) -> Self {
        self.shape = Some((rows, cols));
        self
    }
}

/// Original ids of the dense rows and columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMapping {
    pub rows: Vec<i64>,
    pub cols: Vec<i64>,
}

impl IdMapping {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

struct RawTriplet {
    row: i64,
    col: i64,
    value: f64,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn looks_like_header(fields: &[&str]) -> bool {
    fields.iter().take(3).all(|f| f.trim().parse::<f64>().is_err())
}

/// Parses a triplet file. Duplicate `(row, col)` pairs are kept as separate
/// samples and file order is preserved.
pub fn read_triplets(file: &TripletFile) -> Result<(ObservationSet, IdMapping)> {
    let text = fs::read_to_string(&file.path)?;
    let path = file.path.as_path();
    let mut sep = file.separator;
    let mut raw = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let s = *sep.get_or_insert_with(|| Separator::detect(trimmed));
        let fields: Vec<&str> = trimmed.split(s.as_char()).map(str::trim).collect();
        if raw.is_empty() && lineno == 1 && looks_like_header(&fields) {
            continue;
        }
        if !(3..=4).contains(&fields.len()) {
            return Err(parse_error(
                path,
                lineno,
                format!("expected 3 or 4 fields, found {}", fields.len()),
            ));
        }
        let id = |k: usize, what: &str| -> Result<i64> {
            let v: i64 = fields[k]
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("{what} id {:?} is not an integer", fields[k])))?;
            if v < file.index_base {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("{what} id {v} is below the index base {}", file.index_base),
                ));
            }
            Ok(v)
        };
        let row = id(0, "row")?;
        let col = id(1, "column")?;
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| parse_error(path, lineno, format!("value {:?} is not a number", fields[2])))?;
        if !value.is_finite() {
            return Err(parse_error(path, lineno, "value is not finite"));
        }
        raw.push(RawTriplet { row, col, value });
    }

    if raw.is_empty() {
        return Err(Error::EmptyInput(format!("{} contains no samples", path.display())));
    }

    match file.shape {
        Some((m, t)) => {
            let samples = raw
                .iter()
                .map(|r| Sample::new((r.row - file.index_base) as usize, (r.col - file.index_base) as usize, r.value))
                .collect();
            let mapping = IdMapping {
                rows: (0..m as i64).map(|k| k + file.index_base).collect(),
                cols: (0..t as i64).map(|k| k + file.index_base).collect(),
            };
            Ok((ObservationSet::new(m, t, samples)?, mapping))
        }
        None => {
            let rows: Vec<i64> = raw.iter().map(|r| r.row).collect::<BTreeSet<_>>().into_iter().collect();
            let cols: Vec<i64> = raw.iter().map(|r| r.col).collect::<BTreeSet<_>>().into_iter().collect();
            let row_of: BTreeMap<i64, usize> = rows.iter().enumerate().map(|(k, &id)| (id, k)).collect();
            let col_of: BTreeMap<i64, usize> = cols.iter().enumerate().map(|(k, &id)| (id, k)).collect();
            let samples = raw
                .iter()
                .map(|r| Sample::new(row_of[&r.row], col_of[&r.col], r.value))
                .collect();
            let obs = ObservationSet::new(rows.len(), cols.len(), samples)?;
            Ok((obs, IdMapping { rows, cols }))
        }
    }
}

/// Writes `row<sep>col<sep>value` lines with ids offset by `index_base`.
pub fn write_triplets(obs: &ObservationSet, path: &Path, sep: Separator, index_base: i64) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let s = sep.as_char();
    for x in obs.iter() {
        writeln!(
            out,
            "{}{s}{}{s}{}",
            x.row as i64 + index_base,
            x.col as i64 + index_base,
            x.value
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Ratings of 4 or 5 become `+1`, everything else `-1`.
pub fn binarize_ratings(obs: &ObservationSet) -> ObservationSet {
    binarize_with(obs, &[4.0, 5.0])
}

pub fn binarize_with(obs: &ObservationSet, positive: &[f64]) -> ObservationSet {
    obs.map_values(|v| if positive.contains(&v) { 1.0 } else { -1.0 })
}

/// Moves `⌊test_fraction · N⌋` uniformly chosen samples to the test set.
/// Both parts keep the original sample order.
pub fn train_test_split(obs: &ObservationSet, test_fraction: f64, seed: u64) -> Result<(ObservationSet, ObservationSet)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(invalid(format!("test fraction must lie in [0, 1], got {test_fraction}")));
    }
    let n = obs.len();
    let k = (test_fraction * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test: Vec<usize> = order[..k].to_vec();
    let mut train: Vec<usize> = order[k..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((obs.subset(&train), obs.subset(&test)))
}

/// Rewrites `⌊share · #{value = from}⌋` uniformly chosen samples equal to
/// `from` into `to`.
pub fn inject_rating_outliers(obs: &ObservationSet, from: f64, to: f64, share: f64, seed: u64) -> Result<ObservationSet> {
    if !(0.0..=1.0).contains(&share) {
        return Err(invalid(format!("outlier share must lie in [0, 1], got {share}")));
    }
    let candidates: Vec<usize> = obs
        .iter()
        .enumerate()
        .filter(|(_, s)| s.value == from)
        .map(|(i, _)| i)
        .collect();
    let k = (share * candidates.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = obs.samples().to_vec();
    for j in index::sample(&mut rng, candidates.len(), k) {
        samples[candidates[j]].value = to;
    }
    Ok(ObservationSet::new(obs.rows(), obs.cols(), samples)?)
}

/// Summary of a single fit, stored as pretty-printed JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// Every flag of the invocation, including defaults.
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_final: Option<f64>,
    pub wall_time_secs: f64,
    pub metrics: BTreeMap<String, f64>,
    pub traces_path: Option<PathBuf>,
}

impl RunReport {
    pub fn from_solver<E>(command: &str, config: BTreeMap<String, String>, seed: u64, lambda: f64, fit: &SolverReport<E>) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            lambda,
            iterations: fit.iterations,
            converged: fit.converged,
            objective_final: fit.final_objective(),
            wall_time_secs: fit.wall_time.as_secs_f64(),
            metrics: BTreeMap::new(),
            traces_path: None,
        }
    }
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// CSV with header `iter,objective,residual`.
pub fn write_traces<E>(fit: &SolverReport<E>, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "iter,objective,residual")?;
    let n = fit.objective_trace.len().max(fit.residual_trace.len());
    for k in 0..n {
        let cell = |v: Option<&f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{}",
            k + 1,
            cell(fit.objective_trace.get(k)),
            cell(fit.residual_trace.get(k))
        )?;
    }
    out.flush()?;
    Ok(())
}
