//! Second-order fidelity between evolution under a purely disordered
//! Hamiltonian and one whose spectrum also carries the long-range outliers,
//! with the eigenvectors shared between the two.
//!
//! With shared orbitals the free Fermi sea is an eigenstate of both, and to
//! order `U^2`
//!
//! ```text
//! 1 - F(t) = U^2 sum_{n != FS} |<n|D|FS>|^2 |phi(D_n) - phi(D'_n)|^2
//!          = 4U^2 sum_n |V_n|^2 B(D_n, D'_n, t),
//! B = s^2 + s'^2 - 2 cos((D - D') t / 2) s s',   s = sin(D t / 2) / D,
//! ```
//!
//! where `D_n` and `D'_n` are the excitation energies of `n` under the two
//! spectra. Single pairs (two spins) give the structure with one modified
//! pair and a spectator density; two pairs give the double sum. Only states
//! touching a modified level contribute.

use crate::disorder::{self, DisorderModel, DisorderSpec};
use crate::model::{dispersion, ModelParams};
use crate::quench::averaged::moments;
use crate::quench::check_times;
use crate::rng::{sub_seed, CounterRng};
use crate::spectral::{eigensolve_tagged, predicted_dos};
use crate::stats::{pairwise_sum, GL8};
use crate::{Error, Real, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};
use std::fmt::Write as _;

#[derive(Clone, Debug)]
pub struct SpectrumPair<T: Real> {
    /// Sorted spectrum of the `M_alpha = 0` matrix.
    pub eps: Vec<T>,
    pub eps_prime: Vec<T>,
    /// Shared orbitals (columns); absent when only eigenvalues were computed.
    pub vectors: Option<DMatrix<T>>,
    pub modified_indices: Vec<usize>,
    /// Whether `eps_prime` is still ascending after the replacement.
    pub sorted: bool,
}

impl<T: Real> SpectrumPair<T> {
    /// Pair with `eps_prime` equal to `eps` except at `modified`.
    pub fn new(eps: Vec<T>, eps_prime: Vec<T>, vectors: Option<DMatrix<T>>) -> Result<Self> {
        if eps.len() != eps_prime.len() {
            return Err(Error::Shape(format!("{} vs {} levels", eps.len(), eps_prime.len())));
        }
        if let Some(v) = &vectors {
            if v.nrows() != eps.len() || v.ncols() != eps.len() {
                return Err(Error::Shape(format!(
                    "{}x{} orbitals for L = {}",
                    v.nrows(),
                    v.ncols(),
                    eps.len()
                )));
            }
        }
        let modified_indices = (0..eps.len()).filter(|&k| eps[k] != eps_prime[k]).collect();
        let sorted = eps_prime.windows(2).all(|w| w[0] <= w[1]);
        Ok(Self {
            eps,
            eps_prime,
            vectors,
            modified_indices,
            sorted,
        })
    }

    pub fn l(&self) -> usize {
        self.eps.len()
    }

    pub fn swapped(&self) -> Self {
        Self {
            eps: self.eps_prime.clone(),
            eps_prime: self.eps.clone(),
            vectors: self.vectors.clone(),
            modified_indices: self.modified_indices.clone(),
            sorted: self.eps.windows(2).all(|w| w[0] <= w[1]),
        }
    }
}

/// Diagonalizes the `M_alpha = 0` sample of realization `spec` and moves one
/// level per predicted outlier: outliers below the bulk replace the lowest
/// levels in ascending order, those above replace the highest.
pub fn paired_spectra<T: Real>(
    params: &ModelParams<T>,
    spec: &DisorderSpec<T>,
    want_vectors: bool,
) -> Result<SpectrumPair<T>> {
    if spec.model != DisorderModel::Independent {
        return Err(Error::InvalidParams("paired spectra need model = independent".into()));
    }
    let base = ModelParams {
        m_alpha: T::zero(),
        ..params.clone()
    };
    let m = disorder::sample(&base, spec)?;
    let sr = eigensolve_tagged(&m, want_vectors, Some((spec.seed, spec.realization_index)))?;
    let eps = sr.eigenvalues;
    let mut eps_prime = eps.clone();
    if params.m_alpha != T::zero() {
        let dos = predicted_dos(params, &dispersion(params)?)?;
        let below: Vec<T> = dos.outliers.iter().map(|o| o.1).filter(|&x| x < T::zero()).collect();
        let above: Vec<T> = dos.outliers.iter().map(|o| o.1).filter(|&x| x > T::zero()).collect();
        let l = eps.len();
        if below.len() + above.len() > l {
            return Err(Error::InvalidParams("more outliers than levels".into()));
        }
        for (k, &x) in below.iter().enumerate() {
            eps_prime[k] = x + dos.center;
        }
        for (k, &x) in above.iter().rev().enumerate() {
            eps_prime[l - 1 - k] = x + dos.center;
        }
    }
    SpectrumPair::new(eps, eps_prime, sr.eigenvectors)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityResult<T> {
    pub times: Vec<T>,
    /// `F(t)` clamped to [0, 1].
    pub values: Vec<T>,
    /// Unclamped perturbative `1 - F(t)`.
    pub infidelity: Vec<T>,
    /// Set when no level moved, so `F = 1` identically.
    pub trivial: bool,
    pub params: Option<ModelParams<T>>,
    pub seeds: Vec<u64>,
}

impl<T: Real> FidelityResult<T> {
    fn from_infidelity(times: &[T], infidelity: Vec<T>, trivial: bool) -> Self {
        let values = infidelity
            .iter()
            .map(|&x| (T::one() - x).max(T::zero()).min(T::one()))
            .collect();
        Self {
            times: times.to_vec(),
            values,
            infidelity,
            trivial,
            params: None,
            seeds: Vec::new(),
        }
    }

    /// Columns `t, F`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,F\n");
        for (t, f) in self.times.iter().zip(&self.values) {
            let _ = writeln!(s, "{:.16e},{:.16e}", t.as_f64(), f.as_f64());
        }
        s
    }

    pub fn max_infidelity(&self) -> T {
        self.infidelity.iter().fold(T::zero(), |m, &x| m.max(x))
    }
}

/// `sin(d t / 2) / d`, limit `t / 2`.
fn half_sinc<T: Real>(d: T, t: T) -> T {
    if d == T::zero() {
        t / T::lit(2.0)
    } else {
        (d * t / T::lit(2.0)).sin() / d
    }
}

/// `|phi(d) - phi(d')|^2 / 4`; symmetric, non-negative, zero when `d = d'`.
pub fn bracket<T: Real>(d: T, dp: T, t: T) -> T {
    if d == dp {
        return T::zero();
    }
    let (s, sp) = (half_sinc(d, t), half_sinc(dp, t));
    s * s + sp * sp - T::lit(2.0) * ((d - dp) * t / T::lit(2.0)).cos() * s * sp
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficients {
    /// Eigenvector amplitudes of the shared basis.
    Explicit,
    /// Ensemble moments of Haar-random orbitals.
    Averaged,
}

pub fn fidelity_series<T: Real>(
    pair: &SpectrumPair<T>,
    coeffs: Coefficients,
    filling: usize,
    u: T,
    times: &[T],
) -> Result<FidelityResult<T>> {
    check_times(times)?;
    if filling > pair.l() {
        return Err(Error::InvalidParams(format!(
            "filling {filling} exceeds L = {}",
            pair.l()
        )));
    }
    if pair.modified_indices.is_empty() || u == T::zero() {
        return Ok(FidelityResult::from_infidelity(
            times,
            vec![T::zero(); times.len()],
            pair.modified_indices.is_empty(),
        ));
    }
    let inf = match coeffs {
        Coefficients::Explicit => explicit_infidelity(pair, filling, times)?,
        Coefficients::Averaged => averaged_infidelity(pair, filling, times)?,
    };
    let u2 = u * u;
    let inf = inf
        .into_iter()
        .zip(times)
        .map(|(x, &t)| if t == T::zero() { T::zero() } else { u2 * x })
        .collect();
    Ok(FidelityResult::from_infidelity(times, inf, false))
}

/// `(|V|^2, D, D')` for every state touching a modified level.
fn explicit_states<T: Real>(pair: &SpectrumPair<T>, filling: usize) -> Result<Vec<(T, T, T)>> {
    let a = pair.vectors.as_ref().ok_or(Error::MissingEigenvectors)?;
    let l = pair.l();
    let (e, ep) = (&pair.eps, &pair.eps_prime);
    let touched_level: Vec<bool> = (0..l).map(|k| e[k] != ep[k]).collect();
    let pairs: Vec<(usize, usize)> = (filling..l).flat_map(|p| (0..filling).map(move |h| (p, h))).collect();
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let profile = DMatrix::from_fn(l, pairs.len(), |i, k| a[(i, pairs[k].0)] * a[(i, pairs[k].1)]);
    let rho = DVector::from_fn(l, |i, _| (0..filling).fold(T::zero(), |s, h| s + a[(i, h)] * a[(i, h)]));
    let single = profile.tr_mul(&rho);
    let d: Vec<T> = pairs.iter().map(|&(p, h)| e[p] - e[h]).collect();
    let dp: Vec<T> = pairs.iter().map(|&(p, h)| ep[p] - ep[h]).collect();
    let touched: Vec<bool> = pairs
        .iter()
        .map(|&(p, h)| touched_level[p] || touched_level[h])
        .collect();
    let mut out = Vec::new();
    for k in 0..pairs.len() {
        if touched[k] {
            out.push((T::lit(2.0) * single[k] * single[k], d[k], dp[k]));
        }
    }
    for k in (0..pairs.len()).filter(|&k| touched[k]) {
        let row = profile.column(k).transpose() * &profile;
        for b in 0..pairs.len() {
            let v2 = row[b] * row[b];
            out.push((v2, d[k] + d[b], dp[k] + dp[b]));
            if !touched[b] {
                out.push((v2, d[b] + d[k], dp[b] + dp[k]));
            }
        }
    }
    Ok(out)
}

fn explicit_infidelity<T: Real>(pair: &SpectrumPair<T>, filling: usize, times: &[T]) -> Result<Vec<T>> {
    let states = explicit_states(pair, filling)?;
    Ok(times
        .par_iter()
        .map(|&t| {
            let chunks: Vec<T> = states
                .chunks(4096)
                .map(|c| c.iter().fold(T::zero(), |s, &(v2, d, dp)| s + v2 * bracket(d, dp, t)))
                .collect();
            T::lit(4.0) * pairwise_sum(&chunks)
        })
        .collect())
}

type Cx<T> = Complex<T>;

fn cis<T: Real>(x: T) -> Cx<T> {
    let (s, c) = x.sin_cos();
    Cx::new(c, s)
}

/// One assignment of the index slots: `Some(level)` for a modified level,
/// `None` for a slot summed freely over unmodified levels.
#[derive(Clone, Copy, Debug)]
enum Pattern {
    Single {
        p: Option<usize>,
        h: Option<usize>,
    },
    Double {
        p1: Option<usize>,
        h1: Option<usize>,
        p3: Option<usize>,
        h3: Option<usize>,
    },
}

/// Free-index sums over unmodified levels at one quadrature node.
struct FreeSums<T> {
    p: Cx<T>,
    p2: Cx<T>,
    h: Cx<T>,
    h2: Cx<T>,
}

/// Averaged tier. For a pattern with fixed excitation energies `d`, `d'` and
/// free frequencies `W`, `|phi(d+W) - phi(d'+W)|^2` is a double time
/// integral; summing `e^{iW tau}` over free indices gives `Z(tau)` and
///
/// ```text
/// sum_free <V^2> |phi - phi'|^2 = 2 Re int_0^t Z(tau) Q(tau) dtau,
/// Q = len (e^{i d tau} + e^{i d' tau}) - e^{i d' tau} I(k) - e^{i d tau} I(-k),
/// ```
///
/// with `k = d - d'`, `len = t - tau` and `I(k) = int_tau^t e^{iks} ds`.
fn averaged_infidelity<T: Real>(pair: &SpectrumPair<T>, filling: usize, times: &[T]) -> Result<Vec<T>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("averaged tier needs ascending times".into()));
    }
    let l = pair.l();
    let (e, ep) = (&pair.eps, &pair.eps_prime);
    let m = moments::<T>(l, filling);
    let modified = |k: usize| e[k] != ep[k];
    let mp: Vec<usize> = (filling..l).filter(|&k| modified(k)).collect();
    let mh: Vec<usize> = (0..filling).filter(|&k| modified(k)).collect();
    let up: Vec<T> = (filling..l).filter(|&k| !modified(k)).map(|k| e[k]).collect();
    let uh: Vec<T> = (0..filling).filter(|&k| !modified(k)).map(|k| e[k]).collect();

    let p_opts: Vec<Option<usize>> = std::iter::once(None).chain(mp.iter().map(|&k| Some(k))).collect();
    let h_opts: Vec<Option<usize>> = std::iter::once(None).chain(mh.iter().map(|&k| Some(k))).collect();
    let mut patterns = Vec::new();
    for &p in &p_opts {
        for &h in &h_opts {
            if p.is_some() || h.is_some() {
                patterns.push(Pattern::Single { p, h });
            }
        }
    }
    for &p1 in &p_opts {
        for &h1 in &h_opts {
            for &p3 in &p_opts {
                for &h3 in &h_opts {
                    if p1.is_some() || h1.is_some() || p3.is_some() || h3.is_some() {
                        patterns.push(Pattern::Double { p1, h1, p3, h3 });
                    }
                }
            }
        }
    }
    let fixed = |slots: &[(Option<usize>, bool)]| -> (T, T) {
        slots.iter().fold((T::zero(), T::zero()), |(a, b), &(s, is_p)| match s {
            Some(k) if is_p => (a + e[k], b + ep[k]),
            Some(k) => (a - e[k], b - ep[k]),
            None => (a, b),
        })
    };
    let deltas: Vec<(T, T)> = patterns
        .iter()
        .map(|pt| match *pt {
            Pattern::Single { p, h } => fixed(&[(p, true), (h, false)]),
            Pattern::Double { p1, h1, p3, h3 } => fixed(&[(p1, true), (h1, false), (p3, true), (h3, false)]),
        })
        .collect();

    let weight = |cp: bool, ch: bool| match (cp, ch) {
        (false, false) => m.generic,
        (true, true) => m.both_coincide,
        _ => m.one_coincidence,
    };
    let z_of = |pt: &Pattern, f: &FreeSums<T>| -> Cx<T> {
        let one = Cx::new(T::one(), T::zero());
        match *pt {
            Pattern::Single { p, h } => {
                let pf = if p.is_none() { f.p } else { one };
                let hf = if h.is_none() { f.h } else { one };
                (pf * hf).scale(T::lit(2.0) * m.single_pair)
            }
            Pattern::Double { p1, h1, p3, h3 } => {
                let part = |a: Option<usize>, b: Option<usize>, s: Cx<T>, s2: Cx<T>| -> Vec<(bool, Cx<T>)> {
                    match (a, b) {
                        (None, None) => vec![(false, s * s - s2), (true, s2)],
                        (None, Some(_)) | (Some(_), None) => vec![(false, s)],
                        (Some(x), Some(y)) => vec![(x == y, one)],
                    }
                };
                let mut z = Cx::new(T::zero(), T::zero());
                for (cp, pf) in part(p1, p3, f.p, f.p2) {
                    for (ch, hf) in part(h1, h3, f.h, f.h2) {
                        z += (pf * hf).scale(weight(cp, ch));
                    }
                }
                z
            }
        }
    };

    // Quadrature nodes between successive output times.
    let span = {
        let mx = e.iter().chain(ep.iter()).fold(T::zero(), |a, &b| a.max(b.abs()));
        T::lit(8.0) * mx
    };
    let h_max = T::lit(0.05).min(T::lit(1.5) / span.max(T::one()));
    let mut nodes: Vec<(T, T)> = Vec::new();
    let mut ends = Vec::with_capacity(times.len());
    let mut prev = T::zero();
    for &t in times {
        if t > prev {
            let n = ((t - prev) / h_max).ceil().as_f64().max(1.0) as usize;
            let w = (t - prev) / T::from_usize_(n);
            for k in 0..n {
                let c = prev + (T::from_usize_(k) + T::lit(0.5)) * w;
                for &(x, wt) in GL8.iter() {
                    nodes.push((c + T::lit(0.5 * x) * w, T::lit(0.5 * wt) * w));
                }
            }
            prev = t;
        }
        ends.push(nodes.len());
    }
    // Per node and pattern: Z e^{i d tau} and Z e^{i d' tau}.
    let table: Vec<Vec<(Cx<T>, Cx<T>)>> = nodes
        .par_iter()
        .map(|&(tau, _)| {
            let two = T::lit(2.0);
            let mut f = FreeSums {
                p: Cx::new(T::zero(), T::zero()),
                p2: Cx::new(T::zero(), T::zero()),
                h: Cx::new(T::zero(), T::zero()),
                h2: Cx::new(T::zero(), T::zero()),
            };
            for &x in &up {
                f.p += cis(x * tau);
                f.p2 += cis(two * x * tau);
            }
            for &x in &uh {
                f.h += cis(-x * tau);
                f.h2 += cis(-two * x * tau);
            }
            patterns
                .iter()
                .zip(&deltas)
                .map(|(pt, &(d, dp))| {
                    let z = z_of(pt, &f);
                    (z * cis(d * tau), z * cis(dp * tau))
                })
                .collect()
        })
        .collect();
    let out = times
        .par_iter()
        .zip(ends.par_iter())
        .map(|(&t, &end)| {
            let mut acc: Vec<T> = Vec::with_capacity(end);
            for j in 0..end {
                let (tau, w) = nodes[j];
                let len = t - tau;
                let mut s = T::zero();
                for (&(zd, zdp), &(d, dp)) in table[j].iter().zip(&deltas) {
                    let k = d - dp;
                    if k == T::zero() {
                        continue;
                    }
                    let half = k * len / T::lit(2.0);
                    let sinc = if half.abs() < T::lit(1e-8) {
                        T::one()
                    } else {
                        half.sin() / half
                    };
                    let mid = k * (tau + t) / T::lit(2.0);
                    let ik = cis(mid).scale(len * sinc);
                    let q = (zd + zdp).scale(len) - zdp * ik - zd * ik.conj();
                    s += q.re;
                }
                acc.push(w * s);
            }
            T::lit(2.0) * pairwise_sum(&acc)
        })
        .collect();
    Ok(out)
}

/// Fidelity for realizations `0..n` of `params`, averaged tier, half filling.
pub fn ensemble_fidelity<T: Real>(
    params: &ModelParams<T>,
    spec_of: impl Fn(u64) -> DisorderSpec<T> + Sync,
    n_realizations: u64,
    coeffs: Coefficients,
    times: &[T],
) -> Result<Vec<FidelityResult<T>>> {
    let runs: Vec<Result<FidelityResult<T>>> = (0..n_realizations)
        .into_par_iter()
        .map(|k| {
            let wrap = |e: Error| Error::Realization {
                realization: k,
                sub_seed: sub_seed(params.seed, k),
                source: Box::new(e),
            };
            let pair = paired_spectra(params, &spec_of(k), coeffs == Coefficients::Explicit).map_err(wrap)?;
            let mut r = fidelity_series(&pair, coeffs, params.l / 2, params.u, times).map_err(wrap)?;
            r.params = Some(params.clone());
            r.seeds = vec![sub_seed(params.seed, k)];
            Ok(r)
        })
        .collect();
    crate::error::collect_all(runs)
}

/// `e^{-z/2} / sqrt(2 pi z)`, the limit law of `z = L |a|^2`.
pub fn porter_thomas_pdf(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidParams(format!(
            "Porter–Thomas density needs z > 0, got {z}"
        )));
    }
    Ok((-z / 2.0).exp() / (2.0 * std::f64::consts::PI * z).sqrt())
}

pub fn porter_thomas_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        statrs::function::gamma::gamma_lr(0.5, z / 2.0)
    }
}

/// Exact law at finite `L`: `|a|^2 ~ Beta(1/2, (L-1)/2)`, i.e. the density
/// `Gamma(L/2) / (sqrt(pi) Gamma((L-1)/2)) (1-y)^{(L-3)/2} / sqrt(y)`.
pub fn finite_l_cdf(z: f64, l: usize) -> Result<f64> {
    if l < 2 {
        return Err(Error::InvalidParams(format!("finite-L law needs L >= 2, got {l}")));
    }
    let b = Beta::new(0.5, (l as f64 - 1.0) / 2.0).map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(b.cdf((z / l as f64).clamp(0.0, 1.0)))
}

/// `z = L a_1^2` for `n` random unit vectors in dimension `L`, each drawn
/// from its own counter stream.
pub fn sample_unit_vector_component(l: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    if l < 3 {
        return Err(Error::InvalidParams(format!("need L >= 3, got {l}")));
    }
    Ok((0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = CounterRng::for_realization(seed, k);
            let first = rng.normal();
            let mut norm2 = first * first;
            for _ in 1..l {
                let x = rng.normal();
                norm2 += x * x;
            }
            l as f64 * first * first / norm2
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::VarianceConvention;
    use crate::ed_oracle::{self, ManyBodyBasis};
    use crate::quench::time_grid;
    use crate::stats::{ks_distance, simpson};

    fn shielding_params(l: usize, seed: u64) -> ModelParams<f64> {
        ModelParams {
            sigma: 1.0,
            m_alpha: -2.0 * std::f64::consts::PI,
            u: 1.0,
            seed,
            ..ModelParams::new(l)
        }
    }

    fn spec(p: &ModelParams<f64>, k: u64) -> DisorderSpec<f64> {
        DisorderSpec::from_params(p, DisorderModel::Independent, VarianceConvention::PerEntryRadius, k)
    }

    fn random_pair(l: usize, moved: &[(usize, f64)], vectors: bool) -> SpectrumPair<f64> {
        let mut rng = CounterRng::for_realization(3, l as u64);
        let mut e: Vec<f64> = (0..l).map(|_| rng.normal()).collect();
        e.sort_by(f64::total_cmp);
        let mut ep = e.clone();
        for &(k, x) in moved {
            ep[k] = x;
        }
        let v = vectors.then(|| {
            let m = DMatrix::from_fn(l, l, |_, _| rng.normal());
            let s = &m + m.transpose();
            nalgebra::SymmetricEigen::new(s).eigenvectors
        });
        SpectrumPair::new(e, ep, v).unwrap()
    }

    #[test]
    fn bracket_properties() {
        assert_eq!(bracket(1.0, 1.0, 3.0), 0.0);
        assert!((bracket(0.7f64, 2.1, 1.3) - bracket(2.1, 0.7, 1.3)).abs() < 1e-15);
        assert!(bracket(0.0, 2.0, 1.0) > 0.0);
        // d = 0 limit.
        let near: f64 = bracket(1e-9, 2.0, 1.0);
        assert!((near - bracket(0.0, 2.0, 1.0)).abs() < 1e-8);
        for k in 0..200 {
            let x = k as f64 * 0.37;
            assert!(bracket(x.sin() * 3.0, x.cos() * 2.0, x) >= -1e-15);
        }
    }

    #[test]
    fn trivial_cases() {
        let same = random_pair(8, &[], true);
        let r = fidelity_series(&same, Coefficients::Explicit, 4, 1.0, &[0.0, 1.0, 5.0]).unwrap();
        assert!(r.trivial && r.values.iter().all(|&f| f == 1.0));
        let moved = random_pair(8, &[(7, 5.0)], true);
        for c in [Coefficients::Explicit, Coefficients::Averaged] {
            let r = fidelity_series(&moved, c, 4, 1.0, &[0.0, 1.0]).unwrap();
            assert_eq!(r.values[0], 1.0);
            assert!(r.values[1] < 1.0);
            let r0 = fidelity_series(&moved, c, 4, 0.0, &[0.0, 1.0]).unwrap();
            assert!(r0.values.iter().all(|&f| f == 1.0));
        }
        let bad = SpectrumPair::new(vec![0.0; 3], vec![0.0; 4], None);
        assert!(bad.is_err());
    }

    #[test]
    fn swapping_spectra_keeps_fidelity() {
        let pair = random_pair(10, &[(9, 4.0), (8, 3.5), (0, -3.0)], true);
        let t = time_grid(5.0, 11);
        for c in [Coefficients::Explicit, Coefficients::Averaged] {
            let a = fidelity_series(&pair, c, 5, 0.5, &t).unwrap();
            let b = fidelity_series(&pair.swapped(), c, 5, 0.5, &t).unwrap();
            for (x, y) in a.infidelity.iter().zip(&b.infidelity) {
                assert!((x - y).abs() < 1e-10 * x.abs().max(1e-12));
            }
        }
    }

    /// Brute force over every intermediate state with averaged weights.
    #[test]
    fn averaged_tier_matches_enumeration() {
        let (l, f) = (10, 5);
        let pair = random_pair(l, &[(9, 4.0), (8, 3.5), (0, -3.0)], false);
        let m = moments::<f64>(l, f);
        let (e, ep) = (&pair.eps, &pair.eps_prime);
        let t = [0.0, 0.7, 2.0, 4.5];
        let got = fidelity_series(&pair, Coefficients::Averaged, f, 1.0, &t).unwrap();
        for (k, &tk) in t.iter().enumerate() {
            let mut want = 0.0;
            for p1 in f..l {
                for h1 in 0..f {
                    want += 2.0 * m.single_pair * bracket(e[p1] - e[h1], ep[p1] - ep[h1], tk);
                    for p3 in f..l {
                        for h3 in 0..f {
                            let v2 = match (p1 == p3, h1 == h3) {
                                (true, true) => m.both_coincide,
                                (false, false) => m.generic,
                                _ => m.one_coincidence,
                            };
                            let d = e[p1] - e[h1] + e[p3] - e[h3];
                            let dp = ep[p1] - ep[h1] + ep[p3] - ep[h3];
                            want += v2 * bracket(d, dp, tk);
                        }
                    }
                }
            }
            want *= 4.0;
            assert!(
                (got.infidelity[k] - want).abs() < 1e-9 * want.max(1e-9),
                "t = {tk}: {} vs {want}",
                got.infidelity[k]
            );
        }
    }

    #[test]
    fn explicit_tier_matches_exact_diagonalization() {
        let l = 4;
        let pair = random_pair(l, &[(3, 3.0)], true);
        let q = pair.vectors.clone().unwrap();
        let a0 = &q * DMatrix::from_diagonal(&DVector::from_vec(pair.eps.clone())) * q.transpose();
        let a1 = &q * DMatrix::from_diagonal(&DVector::from_vec(pair.eps_prime.clone())) * q.transpose();
        let basis = ManyBodyBasis::half_filled(l).unwrap();
        let psi = ed_oracle::slater_state(&basis, &q, &[0, 1], &[0, 1]).unwrap();
        let t = time_grid(10.0, 101);
        let err = |u: f64| {
            let h0 = ed_oracle::build_many_body_hamiltonian(&a0, u, &basis).unwrap();
            let h1 = ed_oracle::build_many_body_hamiltonian(&a1, u, &basis).unwrap();
            let ed = ed_oracle::exact_fidelity(&psi, &h0, &h1, &t).unwrap();
            let pt = fidelity_series(&pair, Coefficients::Explicit, 2, u, &t).unwrap();
            ed.iter()
                .zip(&pt.infidelity)
                .map(|(f, x)| ((1.0 - f) - x).abs())
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(0.1), err(0.05));
        assert!(a / b >= 6.0, "{a} {b}");
    }

    #[test]
    fn paired_spectra_examples() {
        let p = ModelParams {
            m_alpha: 0.0,
            ..shielding_params(64, 1)
        };
        assert!(paired_spectra(&p, &spec(&p, 0), false)
            .unwrap()
            .modified_indices
            .is_empty());
        let p = shielding_params(64, 1);
        let pair = paired_spectra(&p, &spec(&p, 0), false).unwrap();
        let n_out = predicted_dos(&p, &dispersion(&p).unwrap()).unwrap().outliers.len();
        assert!(n_out > 0);
        assert_eq!(pair.modified_indices.len(), n_out);
        assert!(pair.sorted);
        let circ = DisorderSpec {
            model: DisorderModel::Circulant,
            ..spec(&p, 0)
        };
        assert!(paired_spectra(&p, &circ, false).is_err());
    }

    #[test]
    fn porter_thomas_moments() {
        assert!(porter_thomas_pdf(0.0).is_err());
        // Substitute z = x^2 to remove the endpoint singularity.
        assert!(
            (2.0 * 0.8 * porter_thomas_pdf(0.64).unwrap()
                - 2.0 * (-0.32f64).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .abs()
                < 1e-15
        );
        let moment = |k: i32| {
            simpson(
                |x| 2.0 * x.powi(2 * k) * (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt(),
                0.0,
                12.0,
                20000,
            )
        };
        assert!((moment(0) - 1.0).abs() < 1e-6);
        assert!((moment(1) - 1.0).abs() < 1e-6);
        assert!((moment(2) - 3.0).abs() < 1e-5);
        let c = porter_thomas_cdf(1.0);
        assert!((c - 0.682_689_492_137_085_9).abs() < 1e-12, "{c}");
    }

    #[test]
    fn unit_vector_sampling() {
        let mut z = sample_unit_vector_component(1024, 20_000, 7).unwrap();
        assert!((crate::stats::mean(&z) - 1.0).abs() < 0.03);
        assert!(ks_distance(&mut z, porter_thomas_cdf) < 0.02);
        let mut z3 = sample_unit_vector_component(3, 20_000, 8).unwrap();
        assert!(ks_distance(&mut z3, |x| finite_l_cdf(x, 3).unwrap()) < 0.02);
        assert!(sample_unit_vector_component(2, 5, 0).is_err());
    }
}
