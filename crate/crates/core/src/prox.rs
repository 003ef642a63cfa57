//! Proximal operators and norms on vectors and matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// `sign(v) · max(|v| - a, 0)`.
#[inline]
pub fn soft_threshold(v: f64, a: f64) -> f64 {
    let m = (v.abs() - a).max(0.0);
    if m == 0.0 {
        0.0
    } else {
        m.copysign(v)
    }
}

/// Singular values of `m` (unordered).
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    check_finite(m)?;
    m.clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .map(|svd| svd.singular_values)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))
}

/// Result of a singular value thresholding step.
#[derive(Debug, Clone)]
pub struct Thresholded {
    pub matrix: DMatrix<f64>,
    /// The nonzero thresholded singular values `σᵢ - a`.
    pub singular_values: Vec<f64>,
}

impl Thresholded {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }
}

/// Singular value thresholding `U diag(max(σᵢ - a, 0)) Vᵀ`, the proximal map
/// of `a ‖·‖_{S₁}`.
pub fn svt(m: &DMatrix<f64>, a: f64) -> Result<DMatrix<f64>> {
    svt_parts(m, a).map(|t| t.matrix)
}

pub fn svt_parts(m: &DMatrix<f64>, a: f64) -> Result<Thresholded> {
    if !(a >= 0.0) {
        return Err(invalid(format!("threshold must be nonnegative, got {a}")));
    }
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return Ok(Thresholded {
            matrix: m.clone(),
            singular_values: Vec::new(),
        });
    }
    check_finite(m)?;
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");

    let kept: Vec<(usize, f64)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| {
            let s = s - a;
            (s > 0.0).then_some((i, s))
        })
        .collect();

    let mut matrix = DMatrix::zeros(rows, cols);
    for &(i, s) in &kept {
        matrix.ger(s, &u.column(i), &v_t.row(i).transpose(), 1.0);
    }
    Ok(Thresholded {
        matrix,
        singular_values: kept.into_iter().map(|(_, s)| s).collect(),
    })
}

/// Same map as [`svt_parts`], computed from an eigendecomposition of the
/// smaller Gram matrix. Roughly twice as fast as a full SVD. Singular values
/// are recovered as square roots of eigenvalues, so accuracy degrades for
/// singular values far below the largest one; thresholds that small relative
/// to `‖m‖_F` fall back to the SVD.
pub fn svt_gram(m: &DMatrix<f64>, a: f64) -> Result<Thresholded> {
    if !(a >= 0.0) {
        return Err(invalid(format!("threshold must be nonnegative, got {a}")));
    }
    if m.is_empty() {
        return svt_parts(m, a);
    }
    check_finite(m)?;
    let scale = m.norm();
    if a <= 1e-6 * scale {
        return svt_parts(m, a);
    }
    let tall = m.nrows() >= m.ncols();
    let gram = if tall { m.tr_mul(m) } else { m * m.transpose() };
    let eig = gram.symmetric_eigen();

    let mut basis = Vec::new();
    let mut singular_values = Vec::new();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        let sigma = ev.max(0.0).sqrt();
        if sigma > a {
            // scale the eigenvector so that basis·basisᵀ carries 1 - a/σ
            basis.push(eig.eigenvectors.column(i) * (1.0 - a / sigma).sqrt());
            singular_values.push(sigma - a);
        }
    }
    if basis.is_empty() {
        return Ok(Thresholded {
            matrix: DMatrix::zeros(m.nrows(), m.ncols()),
            singular_values,
        });
    }
    let b = DMatrix::from_columns(&basis);
    let matrix = if tall {
        (m * &b) * b.transpose()
    } else {
        &b * (b.transpose() * m)
    };
    Ok(Thresholded { matrix, singular_values })
}

/// Trace norm: the sum of the singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m)?.sum())
}

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let max = s.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > tol * max).count())
}

pub fn l1_norm(t: &DVector<f64>) -> f64 {
    t.iter().map(|x| x.abs()).sum()
}

/// Euclidean projection onto the ball of radius `radius`.
pub fn project_l2_ball(t: &DVector<f64>, radius: f64) -> Result<DVector<f64>> {
    if !(radius > 0.0) {
        return Err(invalid(format!("ball radius must be positive, got {radius}")));
    }
    let norm = t.norm();
    Ok(if norm <= radius { t.clone() } else { t * (radius / norm) })
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure("matrix has non-finite entries".into()))
    }
}

/// Non-increasing positive weights of a sorted-ℓ1 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeWeights(Vec<f64>);

impl SlopeWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("SLOPE weights must be nonempty"));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(invalid("SLOPE weights must be positive and finite"));
        }
        check_non_increasing(&weights)?;
        Ok(Self(weights))
    }

    /// The canonical weights `w_j = √(log(e p / j))`, `j = 1..p`.
    pub fn canonical(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(invalid("SLOPE dimension must be at least 1"));
        }
        let pf = p as f64;
        Ok(Self(
            (1..=p)
                .map(|j| (1.0 + (pf / j as f64).ln()).sqrt())
                .collect(),
        ))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Weights multiplied by `factor >= 0`, suitable for [`slope_prox`].
    pub fn scaled(&self, factor: f64) -> Vec<f64> {
        self.0.iter().map(|w| w * factor).collect()
    }
}

/// `w_j = √(log(e p / j))` for `j = 1..p`.
pub fn slope_weights(p: usize) -> Result<SlopeWeights> {
    SlopeWeights::canonical(p)
}

fn check_non_increasing(w: &[f64]) -> Result<()> {
    if w.windows(2).any(|pair| pair[1] > pair[0]) {
        return Err(invalid("SLOPE weights must be non-increasing"));
    }
    Ok(())
}

/// Sorted-ℓ1 norm `Σ_j w_j |t|_(j)` where `|t|_(1) >= |t|_(2) >= ...`.
pub fn slope_norm(t: &DVector<f64>, w: &SlopeWeights) -> Result<f64> {
    if t.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} coordinates", w.len()),
            found: format!("{}", t.len()),
        });
    }
    let mut abs: Vec<f64> = t.iter().map(|x| x.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    Ok(abs.iter().zip(w.as_slice()).map(|(a, w)| a * w).sum())
}

/// Proximal map of the sorted-ℓ1 norm with non-increasing, nonnegative
/// weights: `argmin_t Σ_j w_j |t|_(j) + ½ ‖t - v‖²`.
///
/// Sorts `|v|` in decreasing order, fits a non-increasing sequence to
/// `|v|_(j) - w_j` by pool-adjacent-violators, clamps at zero, then restores
/// the original order and signs.
pub fn slope_prox(v: &DVector<f64>, w: &[f64]) -> Result<DVector<f64>> {
    let p = v.len();
    if w.len() != p {
        return Err(Error::DimensionMismatch {
            expected: format!("{p} weights"),
            found: format!("{}", w.len()),
        });
    }
    if w.iter().any(|&x| !(x >= 0.0)) {
        return Err(invalid("SLOPE weights must be nonnegative"));
    }
    check_non_increasing(w)?;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));

    // Blocks of pooled coordinates: (sum, count). A block is merged into its
    // predecessor whenever the non-increasing constraint is violated.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(p);
    for (j, &i) in order.iter().enumerate() {
        let mut block = (v[i].abs() - w[j], 1usize);
        while let Some(&(sum, count)) = blocks.last() {
            if sum / (count as f64) < block.0 / (block.1 as f64) {
                blocks.pop();
                block = (sum + block.0, count + block.1);
            } else {
                break;
            }
        }
        blocks.push(block);
    }

    let mut out = DVector::zeros(p);
    let mut j = 0;
    for (sum, count) in blocks {
        let level = if count == 1 { sum } else { sum / count as f64 }.max(0.0);
        for &i in &order[j..j + count] {
            out[i] = if level == 0.0 { 0.0 } else { level.copysign(v[i]) };
        }
        j += count;
    }
    Ok(out)
}
