//! Dense symmetric eigensolves, the predicted density of states (semicircle
//! bulk plus discrete outliers) and predicted-vs-empirical comparison.

use crate::model::{DispersionTable, ModelParams};
use crate::{Error, Real, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use std::fmt::Write as _;

#[derive(Clone, Debug)]
pub struct SpectrumResult<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: Option<DMatrix<T>>,
    /// Largest residual `|M v - lambda v|` when vectors are present, otherwise
    /// the a priori backward-error bound `L * eps * |M|_F`.
    pub residual_bound: T,
}

impl<T: Real> SpectrumResult<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vectors(&self) -> Result<&DMatrix<T>> {
        self.eigenvectors.as_ref().ok_or(Error::MissingEigenvectors)
    }

    /// Builds a result from known eigenpairs (e.g. analytic plane waves).
    pub fn from_parts(eigenvalues: Vec<T>, eigenvectors: Option<DMatrix<T>>) -> Self {
        Self {
            eigenvalues,
            eigenvectors,
            residual_bound: T::zero(),
        }
    }
}

/// Contracted residual tolerance relative to the Frobenius norm. `1e-8` for
/// `f64`; single precision cannot reach that, so the bound never drops below
/// `64 L eps`.
fn residual_tolerance<T: Real>(l: usize) -> T {
    T::lit(1e-8).max(T::lit(64.0) * T::from_usize_(l) * T::EPSILON)
}

pub fn eigensolve<T: Real>(matrix: &DMatrix<T>, want_vectors: bool) -> Result<SpectrumResult<T>> {
    eigensolve_tagged(matrix, want_vectors, None)
}

/// As [`eigensolve`], attaching `(seed, realization_index)` to convergence errors.
pub fn eigensolve_tagged<T: Real>(
    matrix: &DMatrix<T>,
    want_vectors: bool,
    tag: Option<(u64, u64)>,
) -> Result<SpectrumResult<T>> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Shape(format!("{}x{} is not square", n, matrix.ncols())));
    }
    let sym_tol = T::lit(1e-12).max(T::lit(16.0) * T::EPSILON);
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (matrix[(i, j)] - matrix[(j, i)]).abs();
            if gap > sym_tol {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    gap: gap.as_f64(),
                });
            }
        }
    }
    let fro = matrix.norm();
    if !want_vectors {
        let mut ev: Vec<T> = matrix.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        return Ok(SpectrumResult {
            eigenvalues: ev,
            eigenvectors: None,
            residual_bound: T::from_usize_(n) * T::EPSILON * fro,
        });
    }
    let eig = SymmetricEigen::try_new(matrix.clone(), T::EPSILON, 64 * n.max(16)).ok_or(Error::NoConvergence {
        seed: tag.map(|t| t.0),
        realization: tag.map(|t| t.1),
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<T> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    let av = matrix * &vectors;
    let mut residual = T::zero();
    for k in 0..n {
        let r = (av.column(k) - vectors.column(k) * eigenvalues[k]).norm();
        residual = residual.max(r);
    }
    let bound = residual_tolerance::<T>(n) * fro.max(T::one());
    if residual > bound {
        return Err(Error::Residual {
            residual: residual.as_f64(),
            bound: bound.as_f64(),
        });
    }
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors: Some(vectors),
        residual_bound: residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictedDOS<T> {
    /// Semicircle parameter of the bulk (radius `2 j`).
    pub j: T,
    /// Spectral centre; the diagonal `mu` shifts the whole spectrum.
    pub center: T,
    /// `(mode n, lambda_n)` sorted by `lambda_n`.
    pub outliers: Vec<(i64, T)>,
    /// `J / M_alpha`.
    pub epsilon_star: T,
}

/// Semicircle of parameter `sigma * J` plus one outlier
/// `lambda_n = M eps_n + J^2 / (M eps_n)` per mode with `|M eps_n| > J`.
pub fn predicted_dos<T: Real>(params: &ModelParams<T>, table: &DispersionTable<T>) -> Result<PredictedDOS<T>> {
    params.require_strong_long_range()?;
    let j = params.bulk_j();
    if !(j > T::zero()) {
        return Err(Error::InvalidParams("predicted DOS needs sigma * J > 0".into()));
    }
    let m = params.m_alpha;
    let mut outliers: Vec<(i64, T)> = table
        .entries
        .iter()
        .filter_map(|&(n, e)| {
            let x = m * e;
            (x.abs() > j).then(|| (n, x + j * j / x))
        })
        .collect();
    outliers.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(PredictedDOS {
        j,
        center: params.mu,
        outliers,
        epsilon_star: if m != T::zero() { j / m } else { T::zero() },
    })
}

pub fn semicircle_density<T: Real>(lambda: T, j: T) -> T {
    let r2 = T::lit(4.0) * j * j - lambda * lambda;
    if r2 <= T::zero() {
        return T::zero();
    }
    r2.sqrt() / (T::two_pi() * j * j)
}

pub fn semicircle_cdf<T: Real>(lambda: T, j: T) -> T {
    let two_j = T::lit(2.0) * j;
    if lambda <= -two_j {
        return T::zero();
    }
    if lambda >= two_j {
        return T::one();
    }
    let r = (T::lit(4.0) * j * j - lambda * lambda).max(T::zero()).sqrt();
    let v = T::lit(0.5) + lambda * r / (T::lit(4.0) * T::pi() * j * j) + (lambda / two_j).asin() / T::pi();
    v.max(T::zero()).min(T::one())
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutlierMatch {
    pub mode: i64,
    pub predicted: f64,
    pub matched: Option<f64>,
    pub rel_error: Option<f64>,
    /// Prediction lies inside the bulk band `|lambda| <= 2J + margin` and
    /// cannot be resolved from the edge.
    pub in_band: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub j: f64,
    pub margin: f64,
    pub n_eigenvalues: usize,
    pub n_bulk: usize,
    /// `None` when the bulk is empty.
    pub ks_bulk: Option<f64>,
    pub empirical_outliers: Vec<f64>,
    pub matches: Vec<OutlierMatch>,
    pub unmatched_predicted: usize,
    pub unmatched_empirical: usize,
    pub max_rel_error: Option<f64>,
    /// Bulk empty or any prediction unmatched or counts disagree.
    pub mismatch: bool,
}

impl ComparisonReport {
    pub fn all_matched_within(&self, rel: f64) -> bool {
        self.matches.iter().all(|m| m.rel_error.is_some_and(|e| e <= rel))
    }

    /// Flat `key = value` block.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.16e}"));
        let _ = writeln!(s, "j = {:.16e}", self.j);
        let _ = writeln!(s, "margin = {:.16e}", self.margin);
        let _ = writeln!(s, "n_eigenvalues = {}", self.n_eigenvalues);
        let _ = writeln!(s, "n_bulk = {}", self.n_bulk);
        let _ = writeln!(s, "ks_bulk = {}", opt(self.ks_bulk));
        let _ = writeln!(s, "n_predicted_outliers = {}", self.matches.len());
        let _ = writeln!(
            s,
            "n_in_band_predictions = {}",
            self.matches.iter().filter(|m| m.in_band).count()
        );
        let _ = writeln!(s, "n_empirical_outliers = {}", self.empirical_outliers.len());
        let _ = writeln!(s, "unmatched_predicted = {}", self.unmatched_predicted);
        let _ = writeln!(s, "unmatched_empirical = {}", self.unmatched_empirical);
        let _ = writeln!(s, "max_rel_error = {}", opt(self.max_rel_error));
        let _ = writeln!(s, "mismatch = {}", self.mismatch);
        s
    }

    /// CSV of `(mode, predicted, matched, rel_error, in_band)`.
    pub fn outliers_csv(&self) -> String {
        let mut s = String::from("mode,predicted,matched,rel_error,in_band\n");
        for m in &self.matches {
            let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
            let _ = writeln!(
                s,
                "{},{:.16e},{},{},{}",
                m.mode,
                m.predicted,
                opt(m.matched),
                opt(m.rel_error),
                m.in_band
            );
        }
        s
    }
}

/// Splits eigenvalues at `|lambda - center| = 2J + margin`, measures the
/// bulk KS distance and matches predicted outliers greedily (globally
/// smallest distance first, each empirical outlier used once, ties toward
/// the smaller eigenvalue).
pub fn compare_spectrum<T: Real>(
    result: &SpectrumResult<T>,
    predicted: &PredictedDOS<T>,
    margin: T,
) -> ComparisonReport {
    let j = predicted.j.as_f64();
    let c = predicted.center.as_f64();
    let edge = 2.0 * j + margin.as_f64();
    let mut bulk = Vec::new();
    let mut emp = Vec::new();
    for &e in &result.eigenvalues {
        let x = e.as_f64() - c;
        if x.abs() <= edge {
            bulk.push(x);
        } else {
            emp.push(x);
        }
    }
    let n_bulk = bulk.len();
    let ks_bulk = (!bulk.is_empty()).then(|| crate::stats::ks_distance(&mut bulk, |x| semicircle_cdf(x, j)));

    let preds: Vec<(i64, f64)> = predicted.outliers.iter().map(|&(n, l)| (n, l.as_f64() - c)).collect();
    let mut cand: Vec<(f64, f64, usize, usize)> = Vec::new();
    for (pi, &(_, p)) in preds.iter().enumerate() {
        if p.abs() <= edge {
            continue;
        }
        for (ei, &e) in emp.iter().enumerate() {
            cand.push(((p - e).abs(), e, pi, ei));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; preds.len()];
    let mut used_e = vec![false; emp.len()];
    let mut hit: Vec<Option<f64>> = vec![None; preds.len()];
    for (_, e, pi, ei) in cand {
        if used_p[pi] || used_e[ei] {
            continue;
        }
        used_p[pi] = true;
        used_e[ei] = true;
        hit[pi] = Some(e);
    }
    let matches: Vec<OutlierMatch> = preds
        .iter()
        .zip(&hit)
        .map(|(&(n, p), h)| OutlierMatch {
            mode: n,
            predicted: p + c,
            matched: h.map(|e| e + c),
            rel_error: h.map(|e| (e - p).abs() / p.abs()),
            in_band: p.abs() <= edge,
        })
        .collect();
    let unmatched_predicted = matches.iter().filter(|m| m.matched.is_none()).count();
    let unmatched_empirical = used_e.iter().filter(|u| !**u).count();
    let max_rel_error = matches
        .iter()
        .filter_map(|m| m.rel_error)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
    ComparisonReport {
        j,
        margin: margin.as_f64(),
        n_eigenvalues: result.eigenvalues.len(),
        n_bulk,
        ks_bulk,
        empirical_outliers: emp.iter().map(|e| e + c).collect(),
        mismatch: n_bulk == 0 || unmatched_predicted > 0 || unmatched_empirical > 0,
        matches,
        unmatched_predicted,
        unmatched_empirical,
        max_rel_error,
    }
}

/// Freedman–Diaconis bin width `2 IQR n^(-1/3)`; used only for plotting.
pub fn freedman_diaconis_width(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n < 2 {
        return 1.0;
    }
    let q = |p: f64| {
        let x = p * (n - 1) as f64;
        let (i, f) = (x.floor() as usize, x.fract());
        v[i] + f * (v[(i + 1).min(n - 1)] - v[i])
    };
    let w = 2.0 * (q(0.75) - q(0.25)) / (n as f64).cbrt();
    if w > 0.0 {
        w
    } else {
        (v[n - 1] - v[0]).max(1.0) / 10.0
    }
}

/// Normalised histogram `(left edge, density)` with bin width `width` on [lo, hi].
pub fn histogram(values: &[f64], lo: f64, hi: f64, width: f64) -> Vec<(f64, f64)> {
    let nb = (((hi - lo) / width).ceil() as usize).max(1);
    let mut counts = vec![0usize; nb];
    for &x in values {
        if x >= lo && x <= hi {
            counts[(((x - lo) / width) as usize).min(nb - 1)] += 1;
        }
    }
    let total = values.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (lo + k as f64 * width, c as f64 / (total * width)))
        .collect()
}
