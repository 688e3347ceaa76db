//! Disorder-averaged first-order tier for chains too large to enumerate.
//!
//! Eigenvalues come from the realization; eigenvector products are replaced
//! by their averages over Haar-random orthogonal matrices. To leading order
//! in `1/L`,
//!
//! | matrix element                  | `<V^2>`                  |
//! |---------------------------------|--------------------------|
//! | single pair `sum_i a_ip a_ih rho_i` | `Var(rho) / L`       |
//! | two pairs, all indices distinct | `1/L^3`                  |
//! | two pairs, `p1 = p3` or `h1 = h3` | `2/L^3`                |
//! | two pairs, both coincide        | `1/L^2 + 8/L^3`          |
//!
//! with `Var(rho) = f(1-f)/(L/2+1)` the variance of the Beta-distributed
//! local density at filling `f`. The single-pair moment is not `1/(4L)`:
//! orthogonality `sum_i a_ip a_ih = 0` removes the mean density.
//!
//! The `(L/2)^4` sums factorise into products of one-index sums
//! `P(s) = sum_p e^{i eps_p s}` and `H(s) = sum_h e^{-i eps_h s}`, so time
//! traces and the plateau cost `O(L)` per quadrature node.

use super::{check_times, QuenchResult};
use crate::stats::GL8;
use crate::{Error, Real, Result};
use num_complex::Complex;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments<T> {
    pub generic: T,
    pub one_coincidence: T,
    pub both_coincide: T,
    pub single_pair: T,
    pub var_rho: T,
}

pub fn moments<T: Real>(l: usize, filling: usize) -> Moments<T> {
    let lf = T::from_usize_(l);
    let f = T::from_usize_(filling) / lf;
    let var_rho = f * (T::one() - f) / (lf / T::lit(2.0) + T::one());
    let l3 = lf * lf * lf;
    Moments {
        generic: T::one() / l3,
        one_coincidence: T::lit(2.0) / l3,
        both_coincide: T::one() / (lf * lf) + T::lit(8.0) / l3,
        single_pair: var_rho / lf,
        var_rho,
    }
}

/// Averaged `<FS|D|FS> = L (f^2 + Var(rho))`.
pub fn averaged_reference<T: Real>(l: usize, filling: usize) -> T {
    let lf = T::from_usize_(l);
    let f = T::from_usize_(filling) / lf;
    lf * (f * f + moments::<T>(l, filling).var_rho)
}

/// Particle energies `eps_p - mu > 0` and hole energies `mu - eps_h > 0`.
fn split<T: Real>(energies: &[T], filling: usize) -> Result<(Vec<T>, Vec<T>)> {
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("energies must be sorted ascending".into()));
    }
    if filling == 0 || filling >= energies.len() {
        return Ok((Vec::new(), Vec::new()));
    }
    let (lo, hi) = (energies[filling - 1], energies[filling]);
    if !(hi > lo) {
        return Err(Error::InvalidParams(
            "averaged tier needs a non-degenerate Fermi level".into(),
        ));
    }
    let mu = (lo + hi) / T::lit(2.0);
    Ok((
        energies[filling..].iter().map(|&e| e - mu).collect(),
        energies[..filling].iter().map(|&e| mu - e).collect(),
    ))
}

type Cx<T> = Complex<T>;

fn cis<T: Real>(x: T) -> Cx<T> {
    let (s, c) = x.sin_cos();
    Cx::new(c, s)
}

/// `C(s) = sum_m w_m cos(omega_m s)` with `w_m = omega_m <V_m^2>`.
fn correlation<T: Real>(m: &Moments<T>, parts: &[T], holes: &[T], s: T) -> T {
    let zero = Cx::new(T::zero(), T::zero());
    let two = T::lit(2.0);
    let (mut p, mut p1, mut p2, mut p21) = (zero, zero, zero, zero);
    for &a in parts {
        let z = cis(a * s);
        let z2 = cis(two * a * s);
        p += z;
        p1 += z.scale(a);
        p2 += z2;
        p21 += z2.scale(two * a);
    }
    // Hole energies enter as -b relative to mu, so e^{-i eps_h s} = e^{i b s}
    // and the eps-weighted sums pick up a sign.
    let (mut h, mut h1, mut h2, mut h21) = (zero, zero, zero, zero);
    for &b in holes {
        let z = cis(b * s);
        let z2 = cis(two * b * s);
        h += z;
        h1 -= z.scale(b);
        h2 += z2;
        h21 -= z2.scale(two * b);
    }
    let z1 = p * h;
    let y1 = p1 * h - p * h1;
    let sp = p21 * h * h - (p2 * h * h1).scale(two);
    let sh = (p1 * p * h2).scale(two) - p * p * h21;
    let sph = p21 * h2 - p2 * h21;
    let w = (y1 * z1).scale(two * m.generic)
        + (sp + sh).scale(m.one_coincidence - m.generic)
        + sph.scale(m.both_coincide - two * m.one_coincidence + m.generic);
    (y1.scale(two * m.single_pair) + w).re
}

/// `sum_m <V_m^2> / omega_m` via `1/omega = int_0^inf e^{-omega s} ds`.
pub fn inverse_frequency_sum<T: Real>(energies: &[T], filling: usize) -> Result<T> {
    let (parts, holes) = split(energies, filling)?;
    if parts.is_empty() {
        return Ok(T::zero());
    }
    let m = moments::<T>(energies.len(), filling);
    let two = T::lit(2.0);
    let f = |s: T| -> T {
        let (mut p, mut p2, mut h, mut h2) = (T::zero(), T::zero(), T::zero(), T::zero());
        for &a in &parts {
            let e = (-a * s).exp();
            p += e;
            p2 += e * e;
        }
        for &b in &holes {
            let e = (-b * s).exp();
            h += e;
            h2 += e * e;
        }
        let z = p * h;
        two * m.single_pair * z
            + m.generic * z * z
            + (m.one_coincidence - m.generic) * (p2 * h * h + p * p * h2)
            + (m.both_coincide - two * m.one_coincidence + m.generic) * p2 * h2
    };
    let fold = |v: &[T], g: fn(T, T) -> T| v.iter().fold(v[0], |x, &y| g(x, y));
    let gap = fold(&parts, T::min) + fold(&holes, T::min);
    let span = two * (fold(&parts, T::max) + fold(&holes, T::max));
    // Substitute s = e^x; below s_lo the integrand is flat at f(0).
    let s_lo = T::lit(1e-4) / span;
    let (x_lo, x_hi) = (s_lo.ln(), (T::lit(60.0) / gap).ln());
    let mut total = f(T::zero()) * s_lo;
    let panels = ((x_hi - x_lo) / T::lit(0.05)).ceil().as_f64().max(1.0) as usize;
    let w = (x_hi - x_lo) / T::from_usize_(panels);
    for k in 0..panels {
        let c = x_lo + (T::from_usize_(k) + T::lit(0.5)) * w;
        for &(xn, wn) in GL8.iter() {
            let s = (c + T::lit(0.5 * xn) * w).exp();
            total += T::lit(0.5 * wn) * w * f(s) * s;
        }
    }
    Ok(total)
}

/// First-order `d(t)` of one realization from its sorted eigenvalues.
///
/// `sum_m w_m K(omega_m, t) = (t I0 - I1) / 2` with `I0 = int_0^t C`,
/// `I1 = int_0^t s C`; both are accumulated with 8-point Gauss–Legendre
/// panels between successive output times, so `times` must be ascending.
pub fn averaged_quench<T: Real>(energies: &[T], filling: usize, u: T, times: &[T]) -> Result<QuenchResult<T>> {
    check_times(times)?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("averaged tier needs ascending times".into()));
    }
    let l = energies.len();
    let (parts, holes) = split(energies, filling)?;
    let d0 = averaged_reference::<T>(l, filling);
    let e0 = T::lit(2.0) * energies[..filling].iter().fold(T::zero(), |s, &e| s + e);
    let m = moments::<T>(l, filling);
    let mut values = Vec::with_capacity(times.len());
    let (mut i0, mut i1, mut prev) = (T::zero(), T::zero(), T::zero());
    let max_freq = if parts.is_empty() {
        T::one()
    } else {
        let mx = |v: &[T]| v.iter().fold(T::zero(), |a, &b| a.max(b));
        T::lit(2.0) * (mx(&parts) + mx(&holes))
    };
    let h = T::lit(0.02).min(T::lit(2.0) / max_freq);
    for &t in times {
        if !parts.is_empty() && t > prev {
            let n = ((t - prev) / h).ceil().as_f64().max(1.0) as usize;
            let w = (t - prev) / T::from_usize_(n);
            for k in 0..n {
                let c = prev + (T::from_usize_(k) + T::lit(0.5)) * w;
                for &(xn, wn) in GL8.iter() {
                    let s = c + T::lit(0.5 * xn) * w;
                    let cw = T::lit(0.5 * wn) * w * correlation(&m, &parts, &holes, s);
                    i0 += cw;
                    i1 += cw * s;
                }
            }
        }
        prev = t;
        let sum = (t * i0 - i1) / T::lit(2.0);
        values.push(d0 - T::lit(4.0) * u * sum);
    }
    let plateau = d0 - T::lit(2.0) * u * inverse_frequency_sum(energies, filling)?;
    let kinetic = values.iter().map(|&d| e0 + u * (d0 - d)).collect();
    Ok(QuenchResult {
        times: times.to_vec(),
        stderr: vec![T::zero(); values.len()],
        values,
        kinetic,
        plateau: Some(plateau),
        secular: false,
        reference_value: d0,
        u,
        params: None,
        seeds: Vec::new(),
    })
}
