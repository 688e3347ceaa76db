//! Time-dependent perturbation theory for `d(t)` through order `U^2`, with
//! exact eigenvectors. Used to check the first-order law against exact
//! diagonalization on chains of at most eight sites.
//!
//! In the interaction picture the amplitudes on free eigenstates `|n>` are
//!
//! ```text
//! c1_n = -i V_n0 phi(omega_n, t),      phi = t e[0, i omega_n t]
//! c2_n = -sum_k V_nk V_k0 chi_nk,      chi = t^2 e[0, i(omega_n - omega_k)t, i omega_n t]
//! ```
//!
//! where `e[..]` are divided differences of `exp`. Only states reachable by
//! one application of `D` enter `<D>_t` at this order, so everything lives on
//! the set `{FS, single pairs, two pairs}`.

use super::{check_times, double_occupancy_fs, FermiSeaState, QuenchResult};
use crate::ed_oracle::{self, ManyBodyBasis, MAX_SITES};
use crate::spectral::eigensolve;
use crate::{Error, Real, Result};
use nalgebra::DMatrix;
use num_complex::Complex;

type Cx<T> = Complex<T>;

/// `e[ia, ib]`, exact for coincident points.
fn dd1<T: Real>(a: T, b: T) -> Cx<T> {
    let half = (b - a) / T::lit(2.0);
    let sinc = if half.abs() < T::lit(1e-4) {
        T::one() - half * half / T::lit(6.0)
    } else {
        half.sin() / half
    };
    let (s, c) = ((a + b) / T::lit(2.0)).sin_cos();
    Cx::new(c * sinc, s * sinc)
}

/// `e[ia, ib, ic]`. Well-separated points use the recursion with the widest
/// pair as denominator; clustered ones a Taylor series about their mean.
fn dd2<T: Real>(a: T, b: T, c: T) -> Cx<T> {
    let mut x = [a, b, c];
    x.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
    let spread = x[2] - x[0];
    if spread >= T::lit(0.1) {
        let num = dd1(x[1], x[2]) - dd1(x[0], x[1]);
        // Division by i * spread.
        return Cx::new(num.im / spread, -num.re / spread);
    }
    let mid = (x[0] + x[1] + x[2]) / T::lit(3.0);
    let y: Vec<Cx<T>> = x.iter().map(|&v| Cx::new(T::zero(), v - mid)).collect();
    // e[y0,y1,y2] = sum_k h_k(y) / (k+2)! with h_k the complete homogeneous
    // symmetric polynomials.
    const K: usize = 14;
    let mut h = [Cx::new(T::zero(), T::zero()); K];
    h[0] = Cx::new(T::one(), T::zero());
    for yj in &y {
        for k in 1..K {
            let prev = h[k - 1];
            h[k] += *yj * prev;
        }
    }
    let mut fact = T::lit(2.0);
    let mut sum = Cx::new(T::zero(), T::zero());
    for (k, hk) in h.iter().enumerate() {
        sum += hk.unscale(fact);
        fact *= T::from_usize_(k + 3);
    }
    let (s, co) = mid.sin_cos();
    sum * Cx::new(co, s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SpinState {
    Sea,
    Pair(usize, usize),
}

/// `<x| n_i |y>` for one spin, as a profile over sites.
fn one_body<T: Real>(fs: &FermiSeaState<T>, rho: &[T], x: SpinState, y: SpinState) -> Vec<T> {
    let a = &fs.vectors;
    let l = fs.l();
    use SpinState::*;
    (0..l)
        .map(|i| match (x, y) {
            (Sea, Sea) => rho[i],
            (Sea, Pair(p, h)) | (Pair(p, h), Sea) => a[(i, h)] * a[(i, p)],
            (Pair(p, h), Pair(q, g)) if p == q && h == g => rho[i] - a[(i, h)] * a[(i, h)] + a[(i, p)] * a[(i, p)],
            (Pair(p, h), Pair(q, g)) if h == g => a[(i, p)] * a[(i, q)],
            (Pair(p, h), Pair(q, g)) if p == q => -a[(i, h)] * a[(i, g)],
            _ => T::zero(),
        })
        .collect()
}

pub fn second_order_double_occupancy<T: Real>(fs: &FermiSeaState<T>, u: T, times: &[T]) -> Result<QuenchResult<T>> {
    check_times(times)?;
    let l = fs.l();
    if l > MAX_SITES {
        return Err(Error::CostGuard {
            what: "second-order quench",
            l,
            limit: MAX_SITES,
        });
    }
    let e = &fs.energies;
    let rho = fs.density();
    let mut spin = vec![SpinState::Sea];
    for p in fs.particles() {
        for h in fs.holes() {
            spin.push(SpinState::Pair(p, h));
        }
    }
    let energy = |s: SpinState| match s {
        SpinState::Sea => T::zero(),
        SpinState::Pair(p, h) => e[p] - e[h],
    };
    let ns = spin.len();
    let table: Vec<Vec<T>> = (0..ns * ns)
        .map(|k| one_body(fs, &rho, spin[k / ns], spin[k % ns]))
        .collect();
    // Reachable set: (up, down) with at most one pair per spin.
    let states: Vec<(usize, usize)> = (0..ns).flat_map(|a| (0..ns).map(move |b| (a, b))).collect();
    let n = states.len();
    let omega: Vec<T> = states.iter().map(|&(a, b)| energy(spin[a]) + energy(spin[b])).collect();
    let mut v = vec![T::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            let (ra, rb) = states[r];
            let (ca, cb) = states[c];
            let up = &table[ra * ns + ca];
            let dn = &table[rb * ns + cb];
            v[r * n + c] = up.iter().zip(dn).fold(T::zero(), |s, (x, y)| s + *x * *y);
        }
    }
    let d0 = double_occupancy_fs(fs);
    let e0 = fs.energy();
    let zero = Cx::new(T::zero(), T::zero());
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let mut psi1 = vec![zero; n];
        for k in 0..n {
            let phi = dd1(T::zero(), omega[k] * t).scale(t);
            // c1 = -i V phi, then rotated by e^{-i omega t}.
            let c1 = Cx::new(phi.im, -phi.re).scale(v[k * n]);
            let (s, c) = (omega[k] * t).sin_cos();
            psi1[k] = c1 * Cx::new(c, -s);
        }
        let first = (0..n).fold(T::zero(), |acc, k| acc + T::lit(2.0) * (psi1[k] * v[k]).re);
        let mut t1 = zero;
        for r in 0..n {
            let mut row = zero;
            for c in 0..n {
                row += psi1[c].scale(v[r * n + c]);
            }
            t1 += psi1[r].conj() * row;
        }
        let mut t2 = zero;
        for k in 0..n {
            if v[k] == T::zero() {
                continue;
            }
            let mut c2 = zero;
            for j in 0..n {
                let vv = v[k * n + j] * v[j * n];
                if vv != T::zero() {
                    c2 -= dd2(T::zero(), (omega[k] - omega[j]) * t, omega[k] * t).scale(vv * t * t);
                }
            }
            let (s, c) = (omega[k] * t).sin_cos();
            t2 += Cx::new(c, -s) * c2.scale(v[k]);
        }
        values.push(d0 + u * first + u * u * (t1.re + T::lit(2.0) * t2.re));
    }
    let kinetic = values.iter().map(|&d| e0 + u * (d0 - d)).collect();
    Ok(QuenchResult {
        times: times.to_vec(),
        stderr: vec![T::zero(); values.len()],
        values,
        kinetic,
        plateau: None,
        secular: false,
        reference_value: d0,
        u,
        params: None,
        seeds: Vec::new(),
    })
}

/// `max_t |d_UPT(t) - d_ED(t)|` for the half-filled Fermi sea of the
/// single-particle matrix `a` quenched to `u`.
pub fn oracle_max_deviation<T: Real>(a: &DMatrix<T>, u: T, times: &[T]) -> Result<T> {
    let l = a.nrows();
    if l > MAX_SITES || !l.is_multiple_of(2) {
        return Err(Error::CostGuard {
            what: "oracle comparison",
            l,
            limit: MAX_SITES,
        });
    }
    let fs = super::build_fermi_sea(&eigensolve(a, true)?, l / 2)?;
    let basis = ManyBodyBasis::half_filled(l)?;
    let occ: Vec<usize> = (0..l / 2).collect();
    let psi = ed_oracle::slater_state(&basis, &fs.vectors, &occ, &occ)?;
    let h = ed_oracle::build_many_body_hamiltonian(a, u, &basis)?;
    let so = second_order_double_occupancy(&fs, u, times)?;
    let mut worst = T::zero();
    for (state, d) in ed_oracle::exact_evolve(&psi, &h, times)?.iter().zip(&so.values) {
        worst = worst.max((ed_oracle::exact_double_occupancy(state, &basis)? - *d).abs());
    }
    Ok(worst)
}
