//! Post-quench double occupancy `d(t) = sum_i <n_i↑ n_i↓>` after switching on
//! the Hubbard interaction `U` in a free Fermi sea.
//!
//! Intermediate states reached by one application of `D = sum_i n_i↑ n_i↓`
//! are single particle-hole pairs (either spin) and one pair per spin. The
//! excitation spectrum stores, for each such state `m`, the frequency
//! `omega_m` and the weight `omega_m |<m|D|FS>|^2`. Applying the unitary
//! perturbation formula to the kinetic energy and using energy conservation,
//!
//! ```text
//! d(t) = d0 - 4U sum_m w_m K(omega_m, t),   K(w, t) = sin^2(w t / 2) / w^2,
//! ```
//!
//! which is the exact first-order result. [`second_order`] adds the `U^2`
//! term for very small chains and [`averaged`] replaces eigenvector products
//! by ensemble moments for large disordered chains.

pub mod averaged;
pub mod second_order;

use crate::disorder::{self, DisorderModel, DisorderSpec, VarianceConvention};
use crate::model::{DispersionTable, ModelParams};
use crate::rng::sub_seed;
use crate::spectral::{eigensolve_tagged, SpectrumResult};
use crate::stats::pairwise_sum;
use crate::{Error, Real, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Exact enumeration refuses larger chains unless explicitly overridden;
/// the two-pair count grows as `(L/2)^4`.
pub const EXACT_GUARD: usize = 128;

/// Frequencies closer than this are merged into one peak.
pub const OMEGA_TOL: f64 = 1e-12;

/// Peaks lighter than this fraction of the heaviest are dropped.
pub const PRUNE_REL: f64 = 1e-14;

/// Fermi sea with identical up and down occupations.
#[derive(Clone, Debug)]
pub struct FermiSeaState<T: Real> {
    /// Single-particle energies in ascending order.
    pub energies: Vec<T>,
    /// Orbitals as columns, sites as rows.
    pub vectors: DMatrix<T>,
    pub filling: usize,
    /// Per mode; applies to both spins.
    pub occupied: Vec<bool>,
}

impl<T: Real> FermiSeaState<T> {
    pub fn new(energies: Vec<T>, vectors: DMatrix<T>, filling: usize) -> Result<Self> {
        let l = energies.len();
        if vectors.nrows() != l || vectors.ncols() != l {
            return Err(Error::Shape(format!(
                "{} energies, {}x{} vectors",
                l,
                vectors.nrows(),
                vectors.ncols()
            )));
        }
        if filling > l {
            return Err(Error::InvalidParams(format!("filling {filling} exceeds L = {l}")));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParams("energies must be sorted ascending".into()));
        }
        // Sorted energies: ties at the Fermi level go to the lower index.
        let occupied = (0..l).map(|k| k < filling).collect();
        Ok(Self {
            energies,
            vectors,
            filling,
            occupied,
        })
    }

    pub fn l(&self) -> usize {
        self.energies.len()
    }

    pub fn holes(&self) -> Vec<usize> {
        (0..self.l()).filter(|&k| self.occupied[k]).collect()
    }

    pub fn particles(&self) -> Vec<usize> {
        (0..self.l()).filter(|&k| !self.occupied[k]).collect()
    }

    /// Per-spin local density `rho_i = sum_{l occ} a_il^2`.
    pub fn density(&self) -> Vec<T> {
        let holes = self.holes();
        (0..self.l())
            .map(|i| {
                holes
                    .iter()
                    .fold(T::zero(), |s, &h| s + self.vectors[(i, h)] * self.vectors[(i, h)])
            })
            .collect()
    }

    /// `<H0>` with both spins.
    pub fn energy(&self) -> T {
        T::lit(2.0) * pairwise_sum(&self.energies[..self.filling])
    }

    /// True when the highest occupied and lowest empty levels coincide.
    pub fn degenerate(&self) -> bool {
        self.filling > 0 && self.filling < self.l() && self.energies[self.filling - 1] == self.energies[self.filling]
    }
}

pub fn build_fermi_sea<T: Real>(spectrum: &SpectrumResult<T>, filling: usize) -> Result<FermiSeaState<T>> {
    FermiSeaState::new(spectrum.eigenvalues.clone(), spectrum.vectors()?.clone(), filling)
}

/// `<FS| D |FS> = sum_i rho_i^2` by Wick factorisation.
pub fn double_occupancy_fs<T: Real>(state: &FermiSeaState<T>) -> T {
    let rho = state.density();
    pairwise_sum(&rho.iter().map(|r| *r * *r).collect::<Vec<_>>())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationSpectrum<T> {
    /// `(omega_m, w_m)` sorted by frequency.
    pub peaks: Vec<(T, T)>,
    /// `d0 = <FS|D|FS>`.
    pub reference_value: T,
    /// `<FS|H0|FS>`.
    pub reference_energy: T,
}

impl<T: Real> ExcitationSpectrum<T> {
    pub fn total_weight(&self) -> T {
        self.peaks.iter().fold(T::zero(), |s, p| s + p.1.abs())
    }
}

/// Sorts by frequency, merges peaks within [`OMEGA_TOL`] of the first member
/// of their run, and prunes negligible ones.
pub fn merge_peaks<T: Real>(mut peaks: Vec<(T, T)>) -> Vec<(T, T)> {
    peaks.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite frequencies"));
    let tol = T::lit(OMEGA_TOL);
    let mut out: Vec<(T, T)> = Vec::with_capacity(peaks.len());
    let mut anchor = T::zero();
    for (w, x) in peaks {
        match out.last_mut() {
            Some(last) if w - anchor <= tol => last.1 += x,
            _ => {
                anchor = w;
                out.push((w, x));
            }
        }
    }
    prune(out)
}

fn prune<T: Real>(peaks: Vec<(T, T)>) -> Vec<(T, T)> {
    let max = peaks.iter().fold(T::zero(), |m, p| m.max(p.1.abs()));
    let cut = T::lit(PRUNE_REL) * max;
    peaks
        .into_iter()
        .filter(|p| p.1.abs() >= cut && p.1 != T::zero())
        .collect()
}

/// Single-pair and two-pair contributions for real orbitals. Each pair
/// state `(p, h)` has the one-body profile `P[i] = a_ip a_ih`, so
/// `<pair|D|FS> = sum_i P[i] rho_i` and `<pair↑ pair↓|D|FS> = (P^T P)_{ab}`.
pub fn jomega_double_occupancy<T: Real>(
    state: &FermiSeaState<T>,
    override_guard: bool,
) -> Result<ExcitationSpectrum<T>> {
    let l = state.l();
    if l > EXACT_GUARD && !override_guard {
        return Err(Error::CostGuard {
            what: "exact excitation enumeration",
            l,
            limit: EXACT_GUARD,
        });
    }
    let holes = state.holes();
    let parts = state.particles();
    let reference_value = double_occupancy_fs(state);
    let reference_energy = state.energy();
    if holes.is_empty() || parts.is_empty() {
        return Ok(ExcitationSpectrum {
            peaks: Vec::new(),
            reference_value,
            reference_energy,
        });
    }
    let pairs: Vec<(usize, usize)> = parts.iter().flat_map(|&p| holes.iter().map(move |&h| (p, h))).collect();
    let a = &state.vectors;
    let e = &state.energies;
    let profile = DMatrix::from_fn(l, pairs.len(), |i, k| a[(i, pairs[k].0)] * a[(i, pairs[k].1)]);
    let omega: Vec<T> = pairs.iter().map(|&(p, h)| e[p] - e[h]).collect();
    let rho = nalgebra::DVector::from_vec(state.density());
    let single = profile.tr_mul(&rho);
    let gram = profile.tr_mul(&profile);
    let two = T::lit(2.0);
    let np = pairs.len();
    let mut peaks: Vec<(T, T)> = (0..np)
        .into_par_iter()
        .flat_map_iter(|a| {
            let row: Vec<(T, T)> = (0..np)
                .map(|b| {
                    let w = omega[a] + omega[b];
                    let v = gram[(a, b)];
                    (w, w * v * v)
                })
                .collect();
            row
        })
        .collect();
    // Single pairs, one per spin.
    peaks.extend((0..np).map(|k| (omega[k], two * omega[k] * single[k] * single[k])));
    Ok(ExcitationSpectrum {
        peaks: merge_peaks(peaks),
        reference_value,
        reference_energy,
    })
}

/// Clean-chain spectrum from plane waves `e^{2 pi i n j / L} / sqrt(L)`:
/// single pairs vanish (uniform density) and a two-pair state contributes
/// `|V|^2 = 1/L^2` iff `p1 + p3 = h1 + h3 (mod L)`.
///
/// Modes are ordered by energy, ties broken by dispersion-table order; the
/// lowest `filling` are occupied.
pub fn jomega_momentum_clean<T: Real>(
    params: &ModelParams<T>,
    table: &DispersionTable<T>,
    filling: usize,
) -> Result<ExcitationSpectrum<T>> {
    if params.sigma != T::zero() {
        return Err(Error::InvalidParams("momentum path needs sigma = 0".into()));
    }
    let l = table.l;
    if filling > l || table.entries.len() != l {
        return Err(Error::InvalidParams(format!("filling {filling} with L = {l}")));
    }
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&x, &y| {
        table.entries[x]
            .1
            .partial_cmp(&table.entries[y].1)
            .expect("finite dispersion")
    });
    let res = |n: i64| n.rem_euclid(l as i64) as usize;
    let mut eps = vec![T::zero(); l];
    let mut occ = vec![false; l];
    for (rank, &k) in order.iter().enumerate() {
        let (n, e) = table.entries[k];
        // Levels measured from mu so frequencies match the matrix path.
        eps[res(n)] = params.m_alpha * e;
        occ[res(n)] = rank < filling;
    }
    let lf = T::from_usize_(l);
    let f = T::from_usize_(filling) / lf;
    let reference_value = lf * f * f;
    let reference_energy = T::lit(2.0)
        * pairwise_sum(
            &(0..l)
                .filter(|&k| occ[k])
                .map(|k| eps[k] + params.mu)
                .collect::<Vec<_>>(),
        );
    let holes: Vec<usize> = (0..l).filter(|&k| occ[k]).collect();
    let parts: Vec<usize> = (0..l).filter(|&k| !occ[k]).collect();
    let v2 = T::one() / (lf * lf);
    let key_scale = 1.0 / OMEGA_TOL;
    let mut bins: HashMap<i64, (T, T)> = HashMap::new();
    for &p1 in &parts {
        for &h1 in &holes {
            for &h3 in &holes {
                let p3 = (h1 + h3 + l - p1) % l;
                if occ[p3] {
                    continue;
                }
                let w = eps[p1] - eps[h1] + eps[p3] - eps[h3];
                let key = (w.as_f64() * key_scale).round() as i64;
                let slot = bins.entry(key).or_insert((w, T::zero()));
                slot.1 += w * v2;
            }
        }
    }
    let mut peaks: Vec<(T, T)> = bins.into_values().collect();
    peaks.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite frequencies"));
    Ok(ExcitationSpectrum {
        peaks: prune(peaks),
        reference_value,
        reference_energy,
    })
}

/// `sin^2(w t / 2) / w^2`, with the limit `t^2 / 4` at `w = 0`.
pub fn kernel<T: Real>(w: T, t: T) -> T {
    if w == T::zero() {
        return t * t / T::lit(4.0);
    }
    let s = (w * t / T::lit(2.0)).sin();
    s * s / (w * w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchResult<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    /// Standard error across realizations; zeros for a single run.
    pub stderr: Vec<T>,
    /// `<H0>_t`, from energy conservation `<H0>_t + U d(t) = <H0>_0 + U d0`.
    pub kinetic: Vec<T>,
    /// Long-time average; `None` when the spectrum has significant weight at
    /// zero frequency.
    pub plateau: Option<T>,
    pub secular: bool,
    pub reference_value: T,
    pub u: T,
    pub params: Option<ModelParams<T>>,
    /// Sub-seeds of the realizations that went into this result.
    pub seeds: Vec<u64>,
}

impl<T: Real> QuenchResult<T> {
    /// Columns `t, d, stderr`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,d,stderr\n");
        for k in 0..self.times.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e}",
                self.times[k].as_f64(),
                self.values[k].as_f64(),
                self.stderr[k].as_f64()
            );
        }
        s
    }

    fn single(times: &[T], values: Vec<T>, d0: T, e0: T, u: T, plateau: Option<T>, secular: bool) -> Self {
        let kinetic = values.iter().map(|&d| e0 + u * (d0 - d)).collect();
        Self {
            times: times.to_vec(),
            stderr: vec![T::zero(); values.len()],
            values,
            kinetic,
            plateau,
            secular,
            reference_value: d0,
            u,
            params: None,
            seeds: Vec::new(),
        }
    }
}

pub(crate) fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if times.iter().any(|&t| !(t >= T::zero())) {
        return Err(Error::InvalidParams("times must be finite and non-negative".into()));
    }
    Ok(())
}

/// Uniform grid of `n` points on `[0, t_max]`.
pub fn time_grid<T: Real>(t_max: T, n: usize) -> Vec<T> {
    if n < 2 {
        return vec![T::zero(); n];
    }
    (0..n)
        .map(|k| t_max * T::from_usize_(k) / T::from_usize_(n - 1))
        .collect()
}

/// Sums in fixed chunks, then pairwise over chunk sums: the result does not
/// depend on how the caller schedules threads.
fn chunked_sum<T: Real, F: Fn(&(T, T)) -> T>(peaks: &[(T, T)], f: F) -> T {
    let chunks: Vec<T> = peaks
        .chunks(4096)
        .map(|c| c.iter().fold(T::zero(), |s, p| s + f(p)))
        .collect();
    pairwise_sum(&chunks)
}

/// `d(t) = d0 - 4U sum_m w_m K(omega_m, t)`, plateau `d0 - 2U sum w_m / omega_m^2`.
pub fn evolve_observable<T: Real>(spec: &ExcitationSpectrum<T>, u: T, times: &[T]) -> Result<QuenchResult<T>> {
    check_times(times)?;
    let d0 = spec.reference_value;
    let four_u = T::lit(4.0) * u;
    let values: Vec<T> = times
        .par_iter()
        .map(|&t| {
            if t == T::zero() || u == T::zero() {
                d0
            } else {
                d0 - four_u * chunked_sum(&spec.peaks, |&(w, x)| x * kernel(w, t))
            }
        })
        .collect();
    let tol = T::lit(OMEGA_TOL);
    let zero_weight = spec
        .peaks
        .iter()
        .filter(|p| p.0.abs() <= tol)
        .fold(T::zero(), |s, p| s + p.1.abs());
    let secular = zero_weight > T::lit(1e-12) * spec.total_weight();
    let plateau = (!secular).then(|| {
        d0 - T::lit(2.0)
            * u
            * chunked_sum(
                &spec.peaks,
                |&(w, x)| if w.abs() <= tol { T::zero() } else { x / (w * w) },
            )
    });
    Ok(QuenchResult::single(
        times,
        values,
        d0,
        spec.reference_energy,
        u,
        plateau,
        secular,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuenchTier {
    /// First order from exact eigenvectors; `L <= 128`.
    Exact,
    /// First order from per-realization eigenvalues and ensemble-averaged
    /// eigenvector moments.
    Averaged,
    /// Exact eigenvectors through order `U^2`; `L <= 8`.
    SecondOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub model: DisorderModel,
    pub convention: VarianceConvention,
    pub n_realizations: u64,
    pub tier: QuenchTier,
}

/// One realization at half filling.
pub fn single_quench<T: Real>(
    params: &ModelParams<T>,
    spec: &EnsembleSpec,
    realization: u64,
    times: &[T],
) -> Result<QuenchResult<T>> {
    let dspec = DisorderSpec::from_params(params, spec.model, spec.convention, realization);
    let m = disorder::sample(params, &dspec)?;
    let want = spec.tier != QuenchTier::Averaged;
    let sr = eigensolve_tagged(&m, want, Some((params.seed, realization)))?;
    let filling = params.l / 2;
    let mut r = match spec.tier {
        QuenchTier::Exact => {
            let fs = build_fermi_sea(&sr, filling)?;
            evolve_observable(&jomega_double_occupancy(&fs, false)?, params.u, times)?
        }
        QuenchTier::Averaged => averaged::averaged_quench(&sr.eigenvalues, filling, params.u, times)?,
        QuenchTier::SecondOrder => {
            second_order::second_order_double_occupancy(&build_fermi_sea(&sr, filling)?, params.u, times)?
        }
    };
    r.params = Some(params.clone());
    r.seeds = vec![sub_seed(params.seed, realization)];
    Ok(r)
}

/// Mean and standard error of `d(t)` over realizations `0..n`, each with its
/// own sub-seed. Realizations run in parallel; results are combined in index
/// order, so the output does not depend on the worker count.
pub fn ensemble_quench<T: Real>(params: &ModelParams<T>, spec: &EnsembleSpec, times: &[T]) -> Result<QuenchResult<T>> {
    params.validate()?;
    if spec.n_realizations == 0 {
        return Err(Error::InvalidParams("n_realizations must be at least 1".into()));
    }
    let runs: Vec<Result<QuenchResult<T>>> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|k| {
            single_quench(params, spec, k, times).map_err(|e| Error::Realization {
                realization: k,
                sub_seed: sub_seed(params.seed, k),
                source: Box::new(e),
            })
        })
        .collect();
    let runs: Vec<QuenchResult<T>> = crate::error::collect_all(runs)?;
    let n = runs.len();
    let nt = T::from_usize_(n);
    let mut values = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    let mut kinetic = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let xs: Vec<T> = runs.iter().map(|r| r.values[k]).collect();
        let mean = pairwise_sum(&xs) / nt;
        let se = if n > 1 && xs.iter().any(|x| *x != xs[0]) {
            let ss: Vec<T> = xs.iter().map(|x| (*x - mean) * (*x - mean)).collect();
            (pairwise_sum(&ss) / T::from_usize_(n - 1) / nt).sqrt()
        } else {
            T::zero()
        };
        values.push(mean);
        stderr.push(se);
        kinetic.push(pairwise_sum(&runs.iter().map(|r| r.kinetic[k]).collect::<Vec<_>>()) / nt);
    }
    let plateau = runs
        .iter()
        .map(|r| r.plateau)
        .collect::<Option<Vec<T>>>()
        .map(|p| pairwise_sum(&p) / nt);
    Ok(QuenchResult {
        times: times.to_vec(),
        values,
        stderr,
        kinetic,
        plateau,
        secular: runs.iter().any(|r| r.secular),
        reference_value: pairwise_sum(&runs.iter().map(|r| r.reference_value).collect::<Vec<_>>()) / nt,
        u: params.u,
        params: Some(params.clone()),
        seeds: runs.iter().flat_map(|r| r.seeds.iter().copied()).collect(),
    })
}
