//! Scalar losses `ℓ(prediction, label)` together with their subgradients,
//! proximal maps and Bernstein constants.
//!
//! Hinge and logistic losses are margin losses for labels in `{-1, +1}`. The
//! quantile (pinball) loss is `ρ_τ(label - prediction)` with
//! `ρ_τ(u) = u (τ - 1{u <= 0})`, used without rescaling, so its Lipschitz
//! constant is `max(τ, 1 - τ)`. The squared loss `½ (prediction - label)²`
//! is only provided as a least-squares baseline; it is not Lipschitz.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Gradient tolerance of the logistic proximal solver.
const LOGISTIC_PROX_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;
const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Hinge,
    Logistic,
    Quantile { tau: f64 },
    Squared,
}

impl LossKind {
    /// Quantile loss of level `tau`, which must lie strictly inside `(0, 1)`.
    pub fn quantile(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid(format!("quantile level must lie in (0, 1), got {tau}")));
        }
        Ok(LossKind::Quantile { tau })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
            LossKind::Quantile { .. } => "quantile",
            LossKind::Squared => "squared",
        }
    }

    /// Hinge and logistic losses only accept `±1` labels.
    pub fn is_classification(&self) -> bool {
        matches!(self, LossKind::Hinge | LossKind::Logistic)
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, LossKind::Logistic | LossKind::Squared)
    }

    /// Lipschitz constant in the prediction. For the squared loss this is the
    /// constant on the box `|prediction - label| <= 1`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            LossKind::Quantile { tau } => tau.max(1.0 - tau),
            _ => 1.0,
        }
    }

    pub fn check_label(&self, label: f64) -> Result<()> {
        if self.is_classification() {
            if label != 1.0 && label != -1.0 {
                return Err(Error::InvalidLabel {
                    loss: self.name(),
                    label,
                });
            }
        } else if !label.is_finite() {
            return Err(invalid(format!("label must be finite, got {label}")));
        }
        Ok(())
    }

    /// Loss value without label validation.
    #[inline]
    pub(crate) fn eval(&self, t: f64, y: f64) -> f64 {
        match *self {
            LossKind::Hinge => (1.0 - y * t).max(0.0),
            LossKind::Logistic => softplus(-y * t),
            LossKind::Quantile { tau } => pinball(y - t, tau),
            LossKind::Squared => 0.5 * (t - y) * (t - y),
        }
    }

    /// Subgradient in `t` without label validation; kinks get the midpoint of
    /// the subdifferential.
    #[inline]
    pub(crate) fn deriv(&self, t: f64, y: f64) -> f64 {
        match *self {
            LossKind::Hinge => {
                let margin = y * t;
                if margin < 1.0 {
                    -y
                } else if margin > 1.0 {
                    0.0
                } else {
                    -0.5 * y
                }
            }
            LossKind::Logistic => -y * sigmoid(-y * t),
            LossKind::Quantile { tau } => {
                if t < y {
                    -tau
                } else if t > y {
                    1.0 - tau
                } else {
                    0.5 - tau
                }
            }
            LossKind::Squared => t - y,
        }
    }

    /// Location of the kink of a piecewise-linear loss for the given label.
    fn kink(&self, y: f64) -> Option<f64> {
        match self {
            // (1 - y t)_+ bends at y t = 1, i.e. t = y for y = ±1.
            LossKind::Hinge => Some(y),
            LossKind::Quantile { .. } => Some(y),
            _ => None,
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Quantile { tau } => write!(f, "quantile:{tau}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    /// Parses `hinge`, `logistic`, `squared` or `quantile:TAU`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            "quantile" | "median" => LossKind::quantile(0.5),
            _ => match s.strip_prefix("quantile:") {
                Some(tau) => {
                    let tau: f64 = tau
                        .parse()
                        .map_err(|_| invalid(format!("bad quantile level in {s:?}")))?;
                    LossKind::quantile(tau)
                }
                None => Err(invalid(format!(
                    "unknown loss {s:?} (expected hinge, logistic, quantile:TAU or squared)"
                ))),
            },
        }
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ρ_τ(u) = u (τ - 1{u <= 0})`.
#[inline]
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u > 0.0 {
        tau * u
    } else {
        (tau - 1.0) * u
    }
}

pub fn loss_value(kind: LossKind, prediction: f64, label: f64) -> Result<f64> {
    kind.check_label(label)?;
    Ok(kind.eval(prediction, label))
}

/// An element of the subdifferential of `t ↦ ℓ(t, label)` at `prediction`.
/// At kinks the midpoint of the subdifferential interval is returned.
pub fn loss_subgradient(kind: LossKind, prediction: f64, label: f64) -> Result<f64> {
    kind.check_label(label)?;
    Ok(kind.deriv(prediction, label))
}

/// `argmin_t c ℓ(t, label) + ½ (t - v)²`, optionally restricted to
/// `[-bound, bound]`.
///
/// Hinge, quantile and squared losses have closed forms; the logistic loss is
/// solved by safeguarded Newton iterations. `c = 0` returns `v` (clamped).
pub fn scalar_prox(kind: LossKind, v: f64, label: f64, c: f64, bound: Option<f64>) -> Result<f64> {
    kind.check_label(label)?;
    check_prox_args(c, bound)?;
    Ok(clamp(prox_unchecked(kind, v, label, c), bound))
}

fn check_prox_args(c: f64, bound: Option<f64>) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(invalid(format!("prox weight must be nonnegative, got {c}")));
    }
    if let Some(b) = bound {
        if !(b > 0.0) {
            return Err(invalid(format!("box bound must be positive, got {b}")));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn clamp(t: f64, bound: Option<f64>) -> f64 {
    match bound {
        Some(b) => t.clamp(-b, b),
        None => t,
    }
}

pub(crate) fn prox_unchecked(kind: LossKind, v: f64, y: f64, c: f64) -> f64 {
    if c == 0.0 {
        return v;
    }
    match kind {
        LossKind::Hinge => {
            let margin = y * v;
            if margin >= 1.0 {
                v
            } else if margin >= 1.0 - c {
                y
            } else {
                v + c * y
            }
        }
        LossKind::Quantile { tau } => {
            if v < y - c * tau {
                v + c * tau
            } else if v > y + c * (1.0 - tau) {
                v - c * (1.0 - tau)
            } else {
                y
            }
        }
        LossKind::Squared => (v + c * y) / (1.0 + c),
        LossKind::Logistic => prox_sum_smooth(kind, v, std::slice::from_ref(&y), c),
    }
}

/// `argmin_t c Σ_j ℓ(t, y_j) + ½ (t - v)²`, clamped to `[-bound, bound]`.
///
/// Used for matrix entries observed several times. Labels are assumed valid.
pub(crate) fn prox_sum(kind: LossKind, v: f64, labels: &[f64], c: f64, bound: Option<f64>) -> f64 {
    let t = match labels {
        [] => v,
        [y] => prox_unchecked(kind, v, *y, c),
        _ if c == 0.0 => v,
        _ => match kind {
            LossKind::Squared => {
                let sum: f64 = labels.iter().sum();
                (v + c * sum) / (1.0 + c * labels.len() as f64)
            }
            LossKind::Logistic => prox_sum_smooth(kind, v, labels, c),
            LossKind::Hinge | LossKind::Quantile { .. } => prox_sum_piecewise(kind, v, labels, c),
        },
    };
    clamp(t, bound)
}

/// Exact minimizer for piecewise-linear losses: the objective is a convex
/// piecewise quadratic whose pieces are delimited by the kinks, so the
/// minimizer is either a stationary point inside a piece or a kink where the
/// one-sided derivatives change sign.
fn prox_sum_piecewise(kind: LossKind, v: f64, labels: &[f64], c: f64) -> f64 {
    let mut kinks: Vec<f64> = labels.iter().filter_map(|&y| kind.kink(y)).collect();
    kinks.sort_by(|a, b| a.total_cmp(b));
    kinks.dedup();

    // slope of the loss sum on piece j: (-inf, k0), (k0, k1), ..., (k_last, inf)
    let slope_at = |t: f64| labels.iter().map(|&y| kind.deriv(t, y)).sum::<f64>();
    let n = kinks.len();
    let slopes: Vec<f64> = (0..=n)
        .map(|j| {
            let probe = match j {
                0 => kinks[0] - 1.0,
                j if j == n => kinks[n - 1] + 1.0,
                j => 0.5 * (kinks[j - 1] + kinks[j]),
            };
            slope_at(probe)
        })
        .collect();

    for j in 0..=n {
        let t = v - c * slopes[j];
        let above = j == 0 || t > kinks[j - 1];
        let below = j == n || t < kinks[j];
        if above && below {
            return t;
        }
        if j < n {
            let k = kinks[j];
            if k - v + c * slopes[j] <= 0.0 && k - v + c * slopes[j + 1] >= 0.0 {
                return k;
            }
        }
    }
    // Unreachable for a strictly convex objective; fall back to the best kink.
    let objective = |t: f64| c * labels.iter().map(|&y| kind.eval(t, y)).sum::<f64>() + 0.5 * (t - v).powi(2);
    kinks
        .into_iter()
        .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
        .unwrap_or(v)
}

/// Safeguarded Newton on `g(t) = c Σ ℓ'(t, y_j) + t - v`, which is strictly
/// increasing. Falls back to bisection inside the bracket.
fn prox_sum_smooth(kind: LossKind, v: f64, labels: &[f64], c: f64) -> f64 {
    let k = labels.len() as f64;
    let g = |t: f64| c * labels.iter().map(|&y| kind.deriv(t, y)).sum::<f64>() + t - v;
    let dg = |t: f64| {
        1.0 + c * labels
            .iter()
            .map(|&y| match kind {
                LossKind::Logistic => {
                    let s = sigmoid(y * t);
                    s * (1.0 - s)
                }
                _ => 1.0,
            })
            .sum::<f64>()
    };

    // |ℓ'| <= 1 for the logistic loss, so the root lies within c·k of v.
    let mut lo = v - c * k;
    let mut hi = v + c * k;
    let mut t = v;
    for _ in 0..NEWTON_MAX_ITER {
        let gt = g(t);
        if gt.abs() <= LOGISTIC_PROX_TOL {
            return t;
        }
        if gt > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let next = t - gt / dg(t);
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= LOGISTIC_PROX_TOL || hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            return mid;
        }
        if gm > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bernstein parameters `(κ, A)`: `‖f - f*‖²ᵏ_{L2} <= A · excess risk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinConstants {
    pub kappa: f64,
    pub a_const: f64,
}

impl BernsteinConstants {
    pub fn new(kappa: f64, a_const: f64) -> Result<Self> {
        if !(kappa >= 1.0) || !(a_const > 0.0) || !a_const.is_finite() {
            return Err(invalid(format!(
                "Bernstein constants need kappa >= 1 and A > 0, got ({kappa}, {a_const})"
            )));
        }
        Ok(Self { kappa, a_const })
    }
}

/// Bernstein constants for each loss with `κ = 1`.
///
/// `param` is loss specific:
/// * logistic: sup-norm bound `b >= 0` on the class, giving `A = 4 e^{2b}`;
/// * hinge: margin `τ ∈ (0, 1]` with `|η - ½| >= τ`, giving `A = 1/(2τ)`;
/// * quantile: constant `C > 0` where the conditional density is at least
///   `1/C` near the oracle, giving `A = 2C`;
/// * squared: ignored; returns `(1, 1)` as a convention (outside the
///   Lipschitz theory).
pub fn bernstein_constants(kind: LossKind, param: f64) -> Result<BernsteinConstants> {
    let a_const = match kind {
        LossKind::Logistic => {
            if !(param >= 0.0) {
                return Err(invalid(format!("logistic sup-norm bound must be >= 0, got {param}")));
            }
            4.0 * (2.0 * param).exp()
        }
        LossKind::Hinge => {
            if !(param > 0.0 && param <= 1.0) {
                return Err(invalid(format!("hinge margin must lie in (0, 1], got {param}")));
            }
            1.0 / (2.0 * param)
        }
        LossKind::Quantile { .. } => {
            if !(param > 0.0) {
                return Err(invalid(format!("density constant must be positive, got {param}")));
            }
            2.0 * param
        }
        LossKind::Squared => 1.0,
    };
    BernsteinConstants::new(1.0, a_const)
}
