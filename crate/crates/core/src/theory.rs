//! Closed-form regularization parameters, complexity functions and rate
//! bounds.
//!
//! The absolute constants in these bounds are only known to exist; every
//! formula takes them as explicit parameters (callers typically pass 1).

use crate::error::{invalid, Result};

/// Absolute constant of the complexity function in the bounded setting.
pub const BOUNDED_COMPLEXITY_CONST: f64 = 1920.0 / 7.0;

/// Multiplier of the matrix-completion regularization parameter.
pub const MATRIX_LAMBDA_CONST: f64 = 720.0 / 7.0;

fn check_dims(m: usize, t: usize, n: usize) -> Result<()> {
    if m == 0 || t == 0 || n == 0 {
        return Err(invalid(format!("m, T and N must be positive, got ({m}, {t}, {n})")));
    }
    Ok(())
}

/// `log(m+T) / (N min(m,T))`, the recurring matrix-completion ratio.
fn matrix_ratio(m: usize, t: usize, n: usize) -> f64 {
    ((m + t) as f64).ln() / (n as f64 * m.min(t) as f64)
}

/// `λ = c₀ (720/7) √(log(m+T) / (N min(m,T)))`.
pub fn lambda_matrix(m: usize, t: usize, n: usize, c0: f64) -> Result<f64> {
    check_dims(m, t, n)?;
    Ok(c0 * MATRIX_LAMBDA_CONST * matrix_ratio(m, t, n).sqrt())
}

/// `const · √(log p / N)`.
pub fn lambda_lasso(p: f64, n: usize, constant: f64) -> Result<f64> {
    if !(p >= 1.0) || n == 0 {
        return Err(invalid(format!("need p >= 1 and N >= 1, got ({p}, {n})")));
    }
    Ok(constant * (p.ln() / n as f64).sqrt())
}

/// `const / √N`.
pub fn lambda_slope(n: usize, constant: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    Ok(constant / (n as f64).sqrt())
}

/// Which complexity measure of the regularization unit ball is supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComplexitySetting {
    /// Subgaussian design, `r(ρ) = (A C L w(B) ρ / √N)^{1/(2κ)}`.
    Subgaussian { subgaussian_l: f64, gaussian_width: f64, constant: f64 },
    /// Bounded design, `r(ρ) = (C A Rad(B) ρ / √N)^{1/(2κ)}` with `C = 1920/7`.
    Bounded { rademacher: f64 },
}

/// The complexity function `r(ρ)`.
pub fn complexity_r(setting: ComplexitySetting, rho: f64, kappa: f64, a_const: f64, n: usize) -> Result<f64> {
    if !(rho >= 0.0) || !(kappa >= 1.0) || !(a_const > 0.0) || n == 0 {
        return Err(invalid(format!(
            "need rho >= 0, kappa >= 1, A > 0, N >= 1; got ({rho}, {kappa}, {a_const}, {n})"
        )));
    }
    let scale = match setting {
        ComplexitySetting::Subgaussian {
            subgaussian_l,
            gaussian_width,
            constant,
        } => a_const * constant * subgaussian_l * gaussian_width,
        ComplexitySetting::Bounded { rademacher } => BOUNDED_COMPLEXITY_CONST * a_const * rademacher,
    };
    if !(scale >= 0.0) {
        return Err(invalid("complexity constants must be nonnegative"));
    }
    Ok((scale * rho / (n as f64).sqrt()).powf(1.0 / (2.0 * kappa)))
}

/// Bound `c₀ √(log(m+T) / min(m,T))` on the Rademacher complexity of the unit
/// trace-norm ball.
pub fn rademacher_bound_s1(m: usize, t: usize, c0: f64) -> Result<f64> {
    check_dims(m, t, 1)?;
    Ok(c0 * matrix_ratio(m, t, 1).sqrt())
}

/// Sparsity-dependent radius
/// `const (s m T)^{κ/(2κ-1)} (log(m+T) / (N min(m,T)))^{1/(2(2κ-1))}`.
pub fn rho_star_matrix(s: usize, m: usize, t: usize, n: usize, kappa: f64, constant: f64) -> Result<f64> {
    check_dims(m, t, n)?;
    check_rank(s, m, t)?;
    if !(kappa >= 1.0) {
        return Err(invalid(format!("kappa must be >= 1, got {kappa}")));
    }
    let denom = 2.0 * kappa - 1.0;
    let smt = (s * m * t) as f64;
    Ok(constant * smt.powf(kappa / denom) * matrix_ratio(m, t, n).powf(1.0 / (2.0 * denom)))
}

fn check_rank(s: usize, m: usize, t: usize) -> Result<()> {
    if s == 0 || s > m.min(t) {
        return Err(invalid(format!("rank s must lie in 1..=min(m, T) = {}, got {s}", m.min(t))));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateKind {
    /// `(1/√(mT)) ‖M̂ - M*‖_{S₂} <= c √(s max(m,T) log(m+T) / N)`.
    MatrixS2,
    /// `(mT)^{-1/p} ‖M̂ - M*‖_{S_p} <= c s^{1/p} √(log(m+T)/N) max(m,T)^{1-1/p} / min(m,T)^{1/p-1/2}`.
    MatrixSp { p: f64 },
    /// Excess risk `c (s (m+T) log(m+T) / N)^{κ/(2κ-1)}`.
    MatrixExcess,
    /// `‖t̂ - t*‖_q <= c s^{1/q} √(log p / N)`.
    LassoLq { q: f64 },
    /// `‖t̂ - t*‖₂ <= c √((s/N) log(e p / s))`.
    SlopeL2,
    /// Excess 0/1 risk `<= c · excess hinge risk`.
    Zhang01 { excess_hinge: f64 },
}

/// Parameters shared by the rate formulas. Fields that a formula does not
/// use are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub m: usize,
    pub t: usize,
    pub n: usize,
    /// Rank (matrix rates) or sparsity (vector rates).
    pub s: usize,
    /// Ambient dimension of vector problems.
    pub p: usize,
    pub kappa: f64,
    /// Stand-in for the unspecified absolute constant.
    pub constant: f64,
}

impl Default for RateInputs {
    fn default() -> Self {
        Self {
            m: 1,
            t: 1,
            n: 1,
            s: 1,
            p: 1,
            kappa: 1.0,
            constant: 1.0,
        }
    }
}

pub fn rate_bound(kind: RateKind, inputs: &RateInputs) -> Result<f64> {
    let RateInputs {
        m,
        t,
        n,
        s,
        p,
        kappa,
        constant,
    } = *inputs;
    let c = constant;
    match kind {
        RateKind::MatrixS2 | RateKind::MatrixSp { .. } | RateKind::MatrixExcess => {
            check_dims(m, t, n)?;
            check_rank(s, m, t)?;
        }
        RateKind::LassoLq { .. } | RateKind::SlopeL2 => {
            if n == 0 || p == 0 || s == 0 || s > p {
                return Err(invalid(format!("need N >= 1 and 1 <= s <= p, got N={n}, s={s}, p={p}")));
            }
        }
        RateKind::Zhang01 { .. } => {}
    }
    let (sf, nf, lo, hi) = (s as f64, n as f64, m.min(t) as f64, m.max(t) as f64);
    let log_mt = ((m + t) as f64).ln();
    Ok(match kind {
        RateKind::MatrixS2 => c * (sf * hi * log_mt / nf).sqrt(),
        RateKind::MatrixSp { p: sp } => {
            if !(1.0..=2.0).contains(&sp) {
                return Err(invalid(format!("Schatten index must lie in [1, 2], got {sp}")));
            }
            c * sf.powf(1.0 / sp) * (log_mt / nf).sqrt() * hi.powf(1.0 - 1.0 / sp) / lo.powf(1.0 / sp - 0.5)
        }
        RateKind::MatrixExcess => {
            if !(kappa >= 1.0) {
                return Err(invalid(format!("kappa must be >= 1, got {kappa}")));
            }
            c * (sf * (m + t) as f64 * log_mt / nf).powf(kappa / (2.0 * kappa - 1.0))
        }
        RateKind::LassoLq { q } => {
            if !(1.0..=2.0).contains(&q) {
                return Err(invalid(format!("q must lie in [1, 2], got {q}")));
            }
            c * sf.powf(1.0 / q) * ((p as f64).ln() / nf).sqrt()
        }
        RateKind::SlopeL2 => c * ((sf / nf) * (1.0 + (p as f64 / sf).ln())).sqrt(),
        RateKind::Zhang01 { excess_hinge } => {
            if !(excess_hinge >= 0.0) {
                return Err(invalid("excess hinge risk must be nonnegative"));
            }
            c * excess_hinge
        }
    })
}
