//! Least squares with Newey-West (HAC) covariance.
//!
//! Coefficients come from an SVD of the column-normalized design, so scaling
//! a regressor never changes the rank decision. The same decomposition gives
//! `(X'X)^{-1}` for the sandwich
//!
//! ```text
//! V = (X'X)^{-1} S (X'X)^{-1},
//! S = Σ_t u_t² x_t x_t' + Σ_{j=1}^{L} w_j Σ_{t>j} u_t u_{t-j} (x_t x_{t-j}' + x_{t-j} x_t'),
//! w_j = 1 - j / (L + 1).
//! ```
//!
//! No small-sample degrees-of-freedom factor is applied.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one mark a rank-deficient design.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Bandwidth `floor(4 (n/100)^(2/9))`.
pub fn default_nw_lags(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// How the Newey-West bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NwLags {
    #[default]
    Auto,
    Fixed(usize),
}

impl NwLags {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            NwLags::Auto => default_nw_lags(n),
            NwLags::Fixed(l) => l,
        }
    }
}

/// Regressors as columns of an `n × k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    labels: Vec<String>,
}

impl DesignMatrix {
    pub fn from_columns<S: AsRef<str>>(columns: &[(S, &[f64])]) -> Result<Self> {
        let n = columns.first().map_or(0, |(_, c)| c.len());
        if columns.iter().any(|(_, c)| c.len() != n) {
            return Err(Error::Alignment("design columns differ in length".into()));
        }
        if columns.is_empty() || n == 0 {
            return Err(Error::insufficient("design matrix", 1, 0));
        }
        let matrix = DMatrix::from_fn(n, columns.len(), |i, j| columns[j].1[i]);
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("design contains non-finite values".into()));
        }
        Ok(Self {
            matrix,
            labels: columns.iter().map(|(l, _)| l.as_ref().to_string()).collect(),
        })
    }

    /// `[1, x]`.
    pub fn with_intercept(label: &str, x: &[f64]) -> Result<Self> {
        let ones = vec![1.0; x.len()];
        Self::from_columns(&[("const", ones.as_slice()), (label, x)])
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j).iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// Rows where `mask` is true.
    pub fn select_rows(&self, mask: &[bool]) -> DesignMatrix {
        let rows: Vec<usize> = (0..self.nrows()).filter(|&i| mask[i]).collect();
        DesignMatrix {
            matrix: self.matrix.select_rows(&rows),
            labels: self.labels.clone(),
        }
    }

    /// Drops all-zero and repeated-constant columns; returns the kept column indices.
    ///
    /// Only exact degeneracy is removed (a zero column, or a second constant
    /// column); near-collinearity is still reported by [`ols_fit`].
    pub fn drop_degenerate_columns(&self) -> (DesignMatrix, Vec<usize>) {
        let mut keep = Vec::new();
        let mut have_constant = false;
        for j in 0..self.ncols() {
            let col = self.matrix.column(j);
            if col.iter().all(|&v| v == 0.0) {
                continue;
            }
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                if have_constant {
                    continue;
                }
                have_constant = true;
            }
            keep.push(j);
        }
        let matrix = self.matrix.select_columns(&keep);
        let labels = keep.iter().map(|&j| self.labels[j].clone()).collect();
        (DesignMatrix { matrix, labels }, keep)
    }
}

/// Column norms and SVD of the column-normalized design.
struct Decomposition {
    norms: DVector<f64>,
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Decomposition {
    fn new(x: &DesignMatrix) -> Result<Self> {
        let k = x.ncols();
        let norms = DVector::from_iterator(k, (0..k).map(|j| x.matrix.column(j).norm()));
        let zero: Vec<String> = (0..k)
            .filter(|&j| !(norms[j] > 0.0))
            .map(|j| x.labels[j].clone())
            .collect();
        if !zero.is_empty() {
            return Err(Error::SingularDesign { columns: zero });
        }
        let mut normalized = x.matrix.clone();
        for (j, mut col) in normalized.column_iter_mut().enumerate() {
            col /= norms[j];
        }
        let svd = nalgebra::SVD::try_new(normalized, true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let sv = &svd.singular_values;
        let largest = sv.max();
        let v_t = svd.v_t.as_ref().expect("requested V");
        let mut collinear = Vec::new();
        for (i, &s) in sv.iter().enumerate() {
            if s <= RANK_TOLERANCE * largest {
                for j in 0..k {
                    if v_t[(i, j)].abs() > 1e-6 && !collinear.contains(&j) {
                        collinear.push(j);
                    }
                }
            }
        }
        if !collinear.is_empty() {
            collinear.sort_unstable();
            return Err(Error::SingularDesign {
                columns: collinear.into_iter().map(|j| x.labels[j].clone()).collect(),
            });
        }
        Ok(Self { norms, svd })
    }

    fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let scaled = self.svd.solve(y, 0.0).expect("U and V computed");
        scaled.component_div(&self.norms)
    }

    /// `(X'X)^{-1} = D^{-1} V Σ^{-2} V' D^{-1}`.
    fn xtx_inverse(&self) -> DMatrix<f64> {
        let v_t = self.svd.v_t.as_ref().expect("requested V");
        let k = v_t.ncols();
        let mut scaled_v = v_t.transpose();
        for (i, mut col) in scaled_v.column_iter_mut().enumerate() {
            col /= self.svd.singular_values[i];
        }
        let inner = &scaled_v * scaled_v.transpose();
        DMatrix::from_fn(k, k, |a, b| inner[(a, b)] / (self.norms[a] * self.norms[b]))
    }
}

fn hac_sandwich(
    x: &DMatrix<f64>,
    residuals: &[f64],
    lags: usize,
    xtx_inv: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let mut scores = x.clone();
    for (i, mut row) in scores.row_iter_mut().enumerate() {
        row *= residuals[i];
    }
    let mut meat = scores.transpose() * &scores;
    for j in 1..=lags {
        let w = 1.0 - j as f64 / (lags as f64 + 1.0);
        let lead = scores.rows(j, n - j);
        let lagged = scores.rows(0, n - j);
        let gamma = lead.transpose() * lagged;
        meat += (&gamma + gamma.transpose()) * w;
    }
    let cov = xtx_inv * meat * xtx_inv;
    // exact symmetry
    DMatrix::from_fn(k, k, |a, b| 0.5 * (cov[(a, b)] + cov[(b, a)]))
}

/// Newey-West covariance of the OLS coefficients for residuals `residuals`.
pub fn newey_west_cov(x: &DesignMatrix, residuals: &[f64], lags: usize) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if residuals.len() != n {
        return Err(Error::Alignment(format!(
            "{} residuals for {n} design rows",
            residuals.len()
        )));
    }
    if lags >= n {
        return Err(Error::Parameter(format!(
            "Newey-West lags {lags} must be below the sample size {n}"
        )));
    }
    let dec = Decomposition::new(x)?;
    Ok(hac_sandwich(&x.matrix, residuals, lags, &dec.xtx_inverse()))
}

/// Ordinary least squares estimates with HAC inference.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub hac_cov: DMatrix<f64>,
    pub t_stats: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r2: f64,
    pub r2_adj: f64,
    pub nw_lags: usize,
}

impl RegressionFit {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.k()).map(|j| self.hac_cov[(j, j)].sqrt()).collect()
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|j| self.coefficients[j])
    }

    pub fn t_stat(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|j| self.t_stats[j])
    }

    pub fn ssr(&self) -> f64 {
        self.residuals.iter().map(|u| u * u).sum()
    }
}

/// Total sum of squares about the mean; tiny values relative to `Σy²` count as zero.
fn centered_ss(y: impl Iterator<Item = f64> + Clone) -> f64 {
    let (count, sum) = y.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / count as f64;
    let raw: f64 = y.clone().map(|v| v * v).sum();
    let tss: f64 = y.map(|v| (v - mean).powi(2)).sum();
    if tss <= 1e-24 * (1.0 + raw) {
        0.0
    } else {
        tss
    }
}

/// `1 - (SSR/(n-k)) / (TSS/(n-1))`. A constant response has `R² = 0` by convention.
fn adjusted_r2(ssr: f64, tss: f64, n: usize, k: usize) -> (f64, f64) {
    let r2 = if tss == 0.0 { 0.0 } else { 1.0 - ssr / tss };
    let r2_adj = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - k as f64);
    (r2, r2_adj)
}

pub fn ols_fit(y: &[f64], x: &DesignMatrix, nw_lags: usize) -> Result<RegressionFit> {
    let (n, k) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::Alignment(format!(
            "response has {} rows, design has {n}",
            y.len()
        )));
    }
    if n <= k + nw_lags {
        return Err(Error::insufficient(
            format!("regression with {k} regressors and {nw_lags} Newey-West lags"),
            k + nw_lags + 1,
            n,
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("response contains non-finite values".into()));
    }
    let dec = Decomposition::new(x)?;
    let yv = DVector::from_column_slice(y);
    let beta = dec.solve(&yv);
    let fitted = &x.matrix * &beta;
    let residuals: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let hac_cov = hac_sandwich(&x.matrix, &residuals, nw_lags, &dec.xtx_inverse());
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let t_stats = coefficients
        .iter()
        .enumerate()
        .map(|(j, b)| b / hac_cov[(j, j)].sqrt())
        .collect();
    let ssr: f64 = residuals.iter().map(|u| u * u).sum();
    let (r2, r2_adj) = adjusted_r2(ssr, centered_ss(y.iter().copied()), n, k);
    Ok(RegressionFit {
        labels: x.labels.clone(),
        coefficients,
        hac_cov,
        t_stats,
        residuals,
        r2,
        r2_adj,
        nw_lags,
    })
}

fn masked_count(mask: &[bool], k: usize, n: usize) -> Result<usize> {
    if mask.len() != n {
        return Err(Error::Alignment(format!(
            "mask has {} entries for {n} observations",
            mask.len()
        )));
    }
    let m = mask.iter().filter(|&&b| b).count();
    if m < k + 2 {
        return Err(Error::insufficient("subset adjusted R²", k + 2, m));
    }
    Ok(m)
}

/// Adjusted R² over the masked observations using the full-sample residuals.
pub fn subset_adjusted_r2(fit: &RegressionFit, y: &[f64], mask: &[bool]) -> Result<f64> {
    let n = fit.n();
    if y.len() != n {
        return Err(Error::Alignment("response length differs from fit".into()));
    }
    let k = fit.k();
    let m = masked_count(mask, k, n)?;
    let ssr: f64 = fit
        .residuals
        .iter()
        .zip(mask)
        .filter(|(_, &b)| b)
        .map(|(u, _)| u * u)
        .sum();
    let masked_y = y.iter().zip(mask).filter(|(_, &b)| b).map(|(v, _)| *v);
    let tss = centered_ss(masked_y);
    Ok(adjusted_r2(ssr, tss, m, k).1)
}

/// Adjusted R² of a regression re-estimated on the masked observations only.
///
/// Columns that become exactly degenerate inside the subset (for example the
/// state dummy when the mask selects one state) are dropped before fitting.
pub fn subset_adjusted_r2_refit(y: &[f64], x: &DesignMatrix, mask: &[bool]) -> Result<f64> {
    masked_count(mask, 0, x.nrows())?;
    let sub = x.select_rows(mask);
    let (sub, _) = sub.drop_degenerate_columns();
    masked_count(mask, sub.ncols(), x.nrows())?;
    let y_sub: Vec<f64> = y.iter().zip(mask).filter(|(_, &b)| b).map(|(v, _)| *v).collect();
    Ok(ols_fit(&y_sub, &sub, 0)?.r2_adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn design(x: &[f64]) -> DesignMatrix {
        DesignMatrix::with_intercept("x", x).unwrap()
    }

    #[test]
    fn exact_linear_fit() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols_fit(&y, &design(&x), 2).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|u| u.abs() < 1e-12));
        assert!((fit.r2_adj - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response_has_zero_slope() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let y = vec![0.7; 20];
        let fit = ols_fit(&y, &design(&x), 0).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-12);
        assert!(fit.r2_adj <= 0.0);
    }

    #[test]
    fn duplicate_column_is_singular() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).cos()).collect();
        let ones = vec![1.0; 30];
        let d = DesignMatrix::from_columns(&[("const", &ones[..]), ("x", &x[..]), ("x_copy", &x[..])])
            .unwrap();
        match ols_fit(&x, &d, 0) {
            Err(Error::SingularDesign { columns }) => {
                assert_eq!(columns, vec!["x".to_string(), "x_copy".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_singular() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let zero = vec![0.0; 30];
        let ones = vec![1.0; 30];
        let d = DesignMatrix::from_columns(&[("const", &ones[..]), ("S", &zero[..]), ("x", &x[..])])
            .unwrap();
        match ols_fit(&x, &d, 0) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["S".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_observations() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            ols_fit(&x, &design(&x), 1),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn zero_lags_is_white_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
        let u: Vec<f64> = x.iter().map(|v| v * rng.sample::<f64, _>(StandardNormal)).collect();
        let d = design(&x);
        let nw = newey_west_cov(&d, &u, 0).unwrap();
        // White: (X'X)^-1 (Σ u² x x') (X'X)^-1, written out for k = 2.
        let (mut sxx, mut meat) = ([[0.0; 2]; 2], [[0.0; 2]; 2]);
        for i in 0..40 {
            let r = [1.0, x[i]];
            for a in 0..2 {
                for b in 0..2 {
                    sxx[a][b] += r[a] * r[b];
                    meat[a][b] += u[i] * u[i] * r[a] * r[b];
                }
            }
        }
        let det = sxx[0][0] * sxx[1][1] - sxx[0][1] * sxx[1][0];
        let inv = [
            [sxx[1][1] / det, -sxx[0][1] / det],
            [-sxx[1][0] / det, sxx[0][0] / det],
        ];
        for a in 0..2 {
            for b in 0..2 {
                let mut v = 0.0;
                for c in 0..2 {
                    for e in 0..2 {
                        v += inv[a][c] * meat[c][e] * inv[e][b];
                    }
                }
                assert!((nw[(a, b)] - v).abs() < 1e-12 * v.abs().max(1.0), "{a}{b}");
            }
        }
    }

    #[test]
    fn lags_must_be_below_n() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let d = DesignMatrix::from_columns(&[("x", &x[..])]).unwrap();
        assert!(matches!(
            newey_west_cov(&d, &[0.1, -0.2, 0.3, 0.0], 4),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn hac_is_sign_invariant_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..80).map(|_| rng.sample(StandardNormal)).collect();
        let u: Vec<f64> = (0..80).map(|_| rng.sample(StandardNormal)).collect();
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        let d = design(&x);
        let a = newey_west_cov(&d, &u, 5).unwrap();
        let b = newey_west_cov(&d, &neg, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, a.transpose());
        let eig = a.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-15));
    }

    #[test]
    fn default_bandwidth() {
        assert_eq!(default_nw_lags(100), 4);
        assert_eq!(default_nw_lags(695), 6);
        assert_eq!(default_nw_lags(456), 5);
        assert_eq!(NwLags::Fixed(3).resolve(1000), 3);
    }

    #[test]
    fn subset_r2_all_true_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..60).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 0.3 * v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = ols_fit(&y, &design(&x), 3).unwrap();
        let r = subset_adjusted_r2(&fit, &y, &[true; 60]).unwrap();
        assert!((r - fit.r2_adj).abs() < 1e-14);
    }

    #[test]
    fn subset_r2_perfect_fit_is_one() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sqrt()).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 3.0 * v).collect();
        let fit = ols_fit(&y, &design(&x), 0).unwrap();
        let mask: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        assert!((subset_adjusted_r2(&fit, &y, &mask).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subset_r2_needs_k_plus_two() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let fit = ols_fit(&y, &design(&x), 0).unwrap();
        let mut mask = vec![false; 30];
        mask[..3].iter_mut().for_each(|b| *b = true);
        assert!(matches!(
            subset_adjusted_r2(&fit, &y, &mask),
            Err(Error::InsufficientData { .. })
        ));
        mask[3] = true;
        assert!(subset_adjusted_r2(&fit, &y, &mask).is_ok());
    }

    #[test]
    fn refit_within_one_state_drops_dummy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 120;
        let s: Vec<f64> = (0..n).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 0.5 * x[i] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let sx: Vec<f64> = (0..n).map(|i| s[i] * x[i]).collect();
        let ux: Vec<f64> = (0..n).map(|i| (1.0 - s[i]) * x[i]).collect();
        let ones = vec![1.0; n];
        let d = DesignMatrix::from_columns(&[
            ("const", &ones[..]),
            ("S", &s[..]),
            ("S*x", &sx[..]),
            ("(1-S)*x", &ux[..]),
        ])
        .unwrap();
        let up: Vec<bool> = s.iter().map(|&v| v == 0.0).collect();
        let refit = subset_adjusted_r2_refit(&y, &d, &up).unwrap();
        // Inside the up state the design reduces to [1, x].
        let y_up: Vec<f64> = (0..n).filter(|&i| up[i]).map(|i| y[i]).collect();
        let x_up: Vec<f64> = (0..n).filter(|&i| up[i]).map(|i| x[i]).collect();
        let direct = ols_fit(&y_up, &design(&x_up), 0).unwrap().r2_adj;
        assert!((refit - direct).abs() < 1e-12);
    }
}
