//! Synthetic matrix-completion scenarios and their error metrics.
//!
//! Classification scenarios observe `sign(M★)` (possibly corrupted) on a
//! uniformly sampled subset of entries:
//!
//! * `SignMatrix`: `M★ = sign(L Rᵀ)` with Gaussian factors, entries in `{-1, +1}`;
//! * `SignBlocks`: every row of `M★` copies one of `r` random `±1` prototype
//!   rows (balanced groups), so entries are `±1` and the rank is exactly `r`
//!   with high probability;
//! * `GaussianFactors`: `M★ = L Rᵀ`.
//!
//! Quantile scenarios observe `Y = M★ + z + o ζ` with `M★ = L Rᵀ`, noise `z`
//! and outlier indicator `ζ ∈ {-1, 0, 1}` drawn with probabilities
//! `(p/2, 1-p, p/2)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, StudentT};

use crate::error::{invalid, Error, Result};
use crate::observations::{ObservationSet, Sample};
use crate::prox::numerical_rank;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthKind {
    SignMatrix,
    SignBlocks,
    GaussianFactors,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelNoise {
    Noiseless,
    /// `y = sign(M★ + Z)` with `Z` standard logistic.
    Logistic,
    /// `y = ε sign(M★)` with `P(ε = -1) = p`.
    Switch { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub m: usize,
    pub t: usize,
    pub rank: usize,
    pub kind: TruthKind,
    pub sample_fraction: f64,
    pub noise: LabelNoise,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantileNoise {
    Gaussian { sigma: f64 },
    StudentT { df: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileScenarioSpec {
    pub m: usize,
    pub t: usize,
    pub rank: usize,
    pub sample_fraction: f64,
    pub seed: u64,
    pub noise: QuantileNoise,
    pub outlier_magnitude: f64,
    pub outlier_share: f64,
}

fn check_common(m: usize, t: usize, rank: usize, fraction: f64) -> Result<()> {
    if m == 0 || t == 0 {
        return Err(invalid(format!("matrix dimensions must be positive, got {m}x{t}")));
    }
    if rank == 0 || rank > m.min(t) {
        return Err(invalid(format!("rank must lie in 1..={}, got {rank}", m.min(t))));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!("sample fraction must lie in (0, 1], got {fraction}")));
    }
    if ((fraction * (m * t) as f64).floor() as usize) == 0 {
        return Err(invalid("sample fraction yields no observations"));
    }
    Ok(())
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.m, self.t, self.rank, self.sample_fraction)?;
        if let LabelNoise::Switch { p } = self.noise {
            if !(0.0..1.0).contains(&p) {
                return Err(invalid(format!("switch probability must lie in [0, 1), got {p}")));
            }
        }
        Ok(())
    }
}

impl QuantileScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        check_common(self.m, self.t, self.rank, self.sample_fraction)?;
        if !(self.outlier_magnitude >= 0.0) {
            return Err(invalid("outlier magnitude must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.outlier_share) {
            return Err(invalid(format!(
                "outlier share must lie in [0, 1), got {}",
                self.outlier_share
            )));
        }
        match self.noise {
            QuantileNoise::Gaussian { sigma } if !(sigma >= 0.0) => Err(invalid("sigma must be nonnegative")),
            QuantileNoise::StudentT { df } if !(df > 0.0) => Err(invalid("degrees of freedom must be positive")),
            _ => Ok(()),
        }
    }
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub truth: DMatrix<f64>,
    pub train: ObservationSet,
    /// Every entry not in the training sample.
    pub test: Vec<(usize, usize)>,
    /// Number of columns of the factors.
    pub factor_rank: usize,
    /// Numerical rank of `truth`.
    pub realized_rank: usize,
    /// Per-sample noise draws: logistic `Z` or quantile `z` (empty otherwise).
    pub noise: Vec<f64>,
    /// Per-sample outlier indicators `ζ` (quantile scenarios) or `ε = -1`
    /// flips encoded as `-1.0` / `1.0` (switch noise).
    pub corruption: Vec<f64>,
}

/// `sign` with the convention `sign(0) = +1`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn gaussian_factors(rng: &mut ChaCha8Rng, m: usize, t: usize, rank: usize) -> DMatrix<f64> {
    let l = DMatrix::<f64>::from_fn(m, rank, |_, _| StandardNormal.sample(rng));
    let r = DMatrix::<f64>::from_fn(t, rank, |_, _| StandardNormal.sample(rng));
    l * r.transpose()
}

/// `⌊fraction · mT⌋` distinct entries, uniformly without replacement.
fn sample_entries(rng: &mut ChaCha8Rng, m: usize, t: usize, fraction: f64) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let total = m * t;
    let n = (fraction * total as f64).floor() as usize;
    let picked = index::sample(rng, total, n).into_vec();
    let mut observed = vec![false; total];
    for &k in &picked {
        observed[k] = true;
    }
    let to_rc = |k: usize| (k / t, k % t);
    let train = picked.into_iter().map(to_rc).collect();
    let test = (0..total).filter(|&k| !observed[k]).map(to_rc).collect();
    (train, test)
}

fn sign_blocks(rng: &mut ChaCha8Rng, m: usize, t: usize, rank: usize) -> DMatrix<f64> {
    let prototypes = DMatrix::<f64>::from_fn(rank, t, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    let mut rows: Vec<usize> = (0..m).collect();
    rows.shuffle(rng);
    let mut group = vec![0; m];
    for (k, &i) in rows.iter().enumerate() {
        group[i] = k % rank;
    }
    DMatrix::from_fn(m, t, |i, j| prototypes[(group[i], j)])
}

/// Standard logistic draw by inverse CDF.
fn logistic_draw(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return (u / (1.0 - u)).ln();
        }
    }
}

pub fn gen_classification(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = match spec.kind {
        TruthKind::SignMatrix => gaussian_factors(&mut rng, spec.m, spec.t, spec.rank).map(sign),
        TruthKind::SignBlocks => sign_blocks(&mut rng, spec.m, spec.t, spec.rank),
        TruthKind::GaussianFactors => gaussian_factors(&mut rng, spec.m, spec.t, spec.rank),
    };
    let (positions, test) = sample_entries(&mut rng, spec.m, spec.t, spec.sample_fraction);

    let mut noise = Vec::new();
    let mut corruption = Vec::new();
    let samples = positions
        .iter()
        .map(|&(r, c)| {
            let clean = truth[(r, c)];
            let y = match spec.noise {
                LabelNoise::Noiseless => sign(clean),
                LabelNoise::Logistic => {
                    let z = logistic_draw(&mut rng);
                    noise.push(z);
                    sign(clean + z)
                }
                LabelNoise::Switch { p } => {
                    let flip = rng.random::<f64>() < p;
                    corruption.push(if flip { -1.0 } else { 1.0 });
                    if flip {
                        -sign(clean)
                    } else {
                        sign(clean)
                    }
                }
            };
            Sample::new(r, c, y)
        })
        .collect();

    Ok(Scenario {
        realized_rank: numerical_rank(&truth, 1e-10)?,
        truth,
        train: ObservationSet::new(spec.m, spec.t, samples)?,
        test,
        factor_rank: spec.rank,
        noise,
        corruption,
    })
}

pub fn gen_quantile(spec: &QuantileScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = gaussian_factors(&mut rng, spec.m, spec.t, spec.rank);
    let (positions, test) = sample_entries(&mut rng, spec.m, spec.t, spec.sample_fraction);

    let mut draw_noise: Box<dyn FnMut(&mut ChaCha8Rng) -> f64> = match spec.noise {
        QuantileNoise::Gaussian { sigma } => {
            let d = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
            Box::new(move |rng| d.sample(rng))
        }
        QuantileNoise::StudentT { df } => {
            let d = StudentT::new(df).map_err(|e| invalid(e.to_string()))?;
            Box::new(move |rng| d.sample(rng))
        }
    };

    let p = spec.outlier_share;
    let mut noise = Vec::with_capacity(positions.len());
    let mut corruption = Vec::with_capacity(positions.len());
    let samples = positions
        .iter()
        .map(|&(r, c)| {
            let z = draw_noise(&mut rng);
            let u: f64 = rng.random();
            let zeta = if u < p / 2.0 {
                -1.0
            } else if u < p {
                1.0
            } else {
                0.0
            };
            noise.push(z);
            corruption.push(zeta);
            Sample::new(r, c, truth[(r, c)] + z + spec.outlier_magnitude * zeta)
        })
        .collect();

    Ok(Scenario {
        realized_rank: numerical_rank(&truth, 1e-10)?,
        truth,
        train: ObservationSet::new(spec.m, spec.t, samples)?,
        test,
        factor_rank: spec.rank,
        noise,
        corruption,
    })
}

/// Fraction of `eval_set` entries whose signs differ (`sign(0) = +1`).
pub fn misclassification_rate(estimate: &DMatrix<f64>, truth: &DMatrix<f64>, eval_set: &[(usize, usize)]) -> Result<f64> {
    check_same_shape(estimate, truth)?;
    if eval_set.is_empty() {
        return Err(Error::EmptyInput("evaluation set is empty".into()));
    }
    let wrong = eval_set
        .iter()
        .filter(|&&(r, c)| sign(estimate[(r, c)]) != sign(truth[(r, c)]))
        .count();
    Ok(wrong as f64 / eval_set.len() as f64)
}

/// `(1/mT) Σ |M★ - M|` over all entries.
pub fn l1_reconstruction(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_same_shape(estimate, truth)?;
    Ok((estimate - truth).abs().sum() / estimate.len() as f64)
}

pub fn mse(estimate: &DMatrix<f64>, obs: &ObservationSet) -> Result<f64> {
    mean_over(estimate, obs, |d| d * d)
}

pub fn mae(estimate: &DMatrix<f64>, obs: &ObservationSet) -> Result<f64> {
    mean_over(estimate, obs, f64::abs)
}

fn mean_over(estimate: &DMatrix<f64>, obs: &ObservationSet, f: impl Fn(f64) -> f64) -> Result<f64> {
    if estimate.shape() != obs.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", obs.shape()),
            found: format!("{:?}", estimate.shape()),
        });
    }
    if obs.is_empty() {
        return Err(Error::EmptyInput("held-out set is empty".into()));
    }
    Ok(obs.predictions(estimate).map(|(t, y)| f(t - y)).sum::<f64>() / obs.len() as f64)
}

fn check_same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", b.shape()),
            found: format!("{:?}", a.shape()),
        });
    }
    Ok(())
}

/// A scenario description as stored in a `key = value` config file.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioConfig {
    Classification(ScenarioSpec),
    Quantile(QuantileScenarioSpec),
}

impl ScenarioConfig {
    pub fn generate(&self) -> Result<Scenario> {
        match self {
            ScenarioConfig::Classification(s) => gen_classification(s),
            ScenarioConfig::Quantile(s) => gen_quantile(s),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ScenarioConfig::Classification(s) => s.seed,
            ScenarioConfig::Quantile(s) => s.seed,
        }
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioConfig::Classification(s) => {
                writeln!(f, "task = classification")?;
                writeln!(f, "m = {}", s.m)?;
                writeln!(f, "t = {}", s.t)?;
                writeln!(f, "rank = {}", s.rank)?;
                let truth = match s.kind {
                    TruthKind::SignMatrix => "sign",
                    TruthKind::SignBlocks => "sign-blocks",
                    TruthKind::GaussianFactors => "gaussian",
                };
                writeln!(f, "truth = {truth}")?;
                writeln!(f, "fraction = {}", s.sample_fraction)?;
                match s.noise {
                    LabelNoise::Noiseless => writeln!(f, "noise = noiseless")?,
                    LabelNoise::Logistic => writeln!(f, "noise = logistic")?,
                    LabelNoise::Switch { p } => writeln!(f, "noise = switch:{p}")?,
                }
                writeln!(f, "seed = {}", s.seed)
            }
            ScenarioConfig::Quantile(s) => {
                writeln!(f, "task = quantile")?;
                writeln!(f, "m = {}", s.m)?;
                writeln!(f, "t = {}", s.t)?;
                writeln!(f, "rank = {}", s.rank)?;
                writeln!(f, "fraction = {}", s.sample_fraction)?;
                match s.noise {
                    QuantileNoise::Gaussian { sigma } => writeln!(f, "noise = gaussian:{sigma}")?,
                    QuantileNoise::StudentT { df } => writeln!(f, "noise = student:{df}")?,
                }
                writeln!(f, "outlier_magnitude = {}", s.outlier_magnitude)?;
                writeln!(f, "outlier_share = {}", s.outlier_share)?;
                writeln!(f, "seed = {}", s.seed)
            }
        }
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut pairs = std::collections::BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", lineno + 1)))?;
            pairs.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let req = |k: &str| get(k).ok_or_else(|| invalid(format!("scenario is missing `{k}`")));
        fn num<T: FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| invalid(format!("bad value for `{k}`: {v:?}")))
        }
        let with_param = |k: &str, v: &str, prefix: &str| -> Result<Option<f64>> {
            match v.strip_prefix(prefix) {
                Some(rest) => num::<f64>(k, rest).map(Some),
                None => Ok(None),
            }
        };

        let m = num("m", req("m")?)?;
        let t = num("t", req("t")?)?;
        let rank = num("rank", req("rank")?)?;
        let sample_fraction = get("fraction").map_or(Ok(0.2), |v| num("fraction", v))?;
        let seed = get("seed").map_or(Ok(0), |v| num("seed", v))?;

        let config = match get("task").unwrap_or("classification") {
            "classification" => {
                let kind = match get("truth").unwrap_or("sign") {
                    "sign" => TruthKind::SignMatrix,
                    "sign-blocks" => TruthKind::SignBlocks,
                    "gaussian" => TruthKind::GaussianFactors,
                    other => return Err(invalid(format!("unknown truth kind {other:?}"))),
                };
                let noise_text = get("noise").unwrap_or("noiseless");
                let noise = match noise_text {
                    "noiseless" => LabelNoise::Noiseless,
                    "logistic" => LabelNoise::Logistic,
                    v => match with_param("noise", v, "switch:")? {
                        Some(p) => LabelNoise::Switch { p },
                        None => return Err(invalid(format!("unknown label noise {v:?}"))),
                    },
                };
                ScenarioConfig::Classification(ScenarioSpec {
                    m,
                    t,
                    rank,
                    kind,
                    sample_fraction,
                    noise,
                    seed,
                })
            }
            "quantile" => {
                let v = get("noise").unwrap_or("gaussian:0.5");
                let noise = if let Some(sigma) = with_param("noise", v, "gaussian:")? {
                    QuantileNoise::Gaussian { sigma }
                } else if let Some(df) = with_param("noise", v, "student:")? {
                    QuantileNoise::StudentT { df }
                } else {
                    return Err(invalid(format!("unknown quantile noise {v:?}")));
                };
                ScenarioConfig::Quantile(QuantileScenarioSpec {
                    m,
                    t,
                    rank,
                    sample_fraction,
                    seed,
                    noise,
                    outlier_magnitude: get("outlier_magnitude").map_or(Ok(0.0), |v| num("outlier_magnitude", v))?,
                    outlier_share: get("outlier_share").map_or(Ok(0.0), |v| num("outlier_share", v))?,
                })
            }
            other => return Err(invalid(format!("unknown task {other:?}"))),
        };
        match &config {
            ScenarioConfig::Classification(s) => s.validate()?,
            ScenarioConfig::Quantile(s) => s.validate()?,
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn spec(noise: LabelNoise) -> ScenarioSpec {
        ScenarioSpec {
            m: 20,
            t: 15,
            rank: 3,
            kind: TruthKind::GaussianFactors,
            sample_fraction: 0.2,
            noise,
            seed: 7,
        }
    }

    #[test]
    fn switch_zero_is_noiseless() {
        let a = gen_classification(&spec(LabelNoise::Noiseless)).unwrap();
        let b = gen_classification(&spec(LabelNoise::Switch { p: 0.0 })).unwrap();
        assert_eq!(a.truth, b.truth);
        for (x, y) in a.train.iter().zip(b.train.iter()) {
            assert_eq!((x.row, x.col, x.value), (y.row, y.col, y.value));
        }
    }

    #[test]
    fn gaussian_truth_has_factor_rank() {
        let s = gen_classification(&spec(LabelNoise::Noiseless)).unwrap();
        assert_eq!(s.realized_rank, 3);
        let a = gen_classification(&ScenarioSpec {
            kind: TruthKind::SignMatrix,
            ..spec(LabelNoise::Noiseless)
        })
        .unwrap();
        assert!(a.truth.iter().all(|&x| x == 1.0 || x == -1.0));
        assert!(a.realized_rank >= 3);
        let b = gen_classification(&ScenarioSpec {
            kind: TruthKind::SignBlocks,
            ..spec(LabelNoise::Noiseless)
        })
        .unwrap();
        assert!(b.truth.iter().all(|&x| x == 1.0 || x == -1.0));
        assert_eq!(b.realized_rank, 3);
    }

    #[test]
    fn sampling_without_replacement() {
        let s = gen_classification(&spec(LabelNoise::Logistic)).unwrap();
        assert_eq!(s.train.len(), 60);
        assert_eq!(s.test.len(), 300 - 60);
        let mut seen = std::collections::HashSet::new();
        for x in s.train.iter() {
            assert!(seen.insert((x.row, x.col)));
        }
        for e in &s.test {
            assert!(!seen.contains(e));
        }
    }

    #[test]
    fn deterministic() {
        let q = QuantileScenarioSpec {
            m: 10,
            t: 12,
            rank: 2,
            sample_fraction: 0.5,
            seed: 3,
            noise: QuantileNoise::StudentT { df: 2.0 },
            outlier_magnitude: 5.0,
            outlier_share: 0.2,
        };
        let a = gen_quantile(&q).unwrap();
        let b = gen_quantile(&q).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.train, b.train);
        assert_eq!(a.noise, b.noise);
    }

    #[test]
    fn no_outliers_two_ways() {
        let base = QuantileScenarioSpec {
            m: 10,
            t: 10,
            rank: 2,
            sample_fraction: 0.5,
            seed: 1,
            noise: QuantileNoise::Gaussian { sigma: 0.5 },
            outlier_magnitude: 0.0,
            outlier_share: 0.5,
        };
        let a = gen_quantile(&base).unwrap();
        for (s, z) in a.train.iter().zip(&a.noise) {
            assert_eq!(s.value, a.truth[(s.row, s.col)] + z);
        }
        let b = gen_quantile(&QuantileScenarioSpec {
            outlier_magnitude: 7.0,
            outlier_share: 0.0,
            ..base
        })
        .unwrap();
        assert!(b.corruption.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn gaussian_noise_variance() {
        let s = gen_quantile(&QuantileScenarioSpec {
            m: 100,
            t: 100,
            rank: 2,
            sample_fraction: 1.0,
            seed: 11,
            noise: QuantileNoise::Gaussian { sigma: 0.5 },
            outlier_magnitude: 0.0,
            outlier_share: 0.0,
        })
        .unwrap();
        let n = s.noise.len() as f64;
        let mean = s.noise.iter().sum::<f64>() / n;
        let var = s.noise.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.23..=0.27).contains(&var), "variance {var}");
    }

    #[test]
    fn metrics() {
        let truth = dmatrix![1.0, -2.0; 3.0, 0.5];
        let all = [(0, 0), (0, 1), (1, 0), (1, 1)];
        assert_eq!(misclassification_rate(&truth, &truth, &all).unwrap(), 0.0);
        assert_eq!(misclassification_rate(&(-&truth), &truth, &all).unwrap(), 1.0);
        let flipped = dmatrix![1.0, 2.0; 3.0, 0.5];
        assert_eq!(misclassification_rate(&flipped, &truth, &all).unwrap(), 0.25);
        // sign(0) = +1
        let zero = dmatrix![0.0, -1.0; 1.0, 1.0];
        assert_eq!(misclassification_rate(&zero, &truth, &all).unwrap(), 0.0);
        assert!(misclassification_rate(&truth, &truth, &[]).is_err());

        assert_eq!(l1_reconstruction(&truth, &truth).unwrap(), 0.0);
        let shifted = truth.add_scalar(0.3);
        assert!((l1_reconstruction(&shifted, &truth).unwrap() - 0.3).abs() < 1e-15);
        let other = dmatrix![0.0, 0.0; 1.0, 1.0];
        // |1| + |-2| + |2| + |-0.5| = 5.5 over 4 entries
        assert!((l1_reconstruction(&other, &truth).unwrap() - 1.375).abs() < 1e-15);

        let obs = ObservationSet::new(2, 2, vec![Sample::new(0, 0, 2.0), Sample::new(1, 1, 0.0)]).unwrap();
        assert!((mse(&truth, &obs).unwrap() - 0.625).abs() < 1e-15);
        assert!((mae(&truth, &obs).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn config_round_trip() {
        let c = ScenarioConfig::Classification(spec(LabelNoise::Switch { p: 0.1 }));
        assert_eq!(c.to_string().parse::<ScenarioConfig>().unwrap(), c);
        let q = ScenarioConfig::Quantile(QuantileScenarioSpec {
            m: 60,
            t: 60,
            rank: 3,
            sample_fraction: 0.2,
            seed: 4,
            noise: QuantileNoise::StudentT { df: 1.0 },
            outlier_magnitude: 10.0,
            outlier_share: 0.1,
        });
        assert_eq!(q.to_string().parse::<ScenarioConfig>().unwrap(), q);
        assert!("m = 3\nt = 3".parse::<ScenarioConfig>().is_err());
        assert!("task = quantile\nm = 3\nt = 3\nrank = 1\nnoise = cauchy".parse::<ScenarioConfig>().is_err());
        assert!("m = 3\nt = 3\nrank = 4".parse::<ScenarioConfig>().is_err());
    }
}
