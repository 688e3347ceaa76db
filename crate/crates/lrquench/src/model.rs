//! Physical parameters, the clean long-range dispersion and the clean
//! hopping matrix.
//!
//! The system size is `l` everywhere (the literature alternates between N and
//! L for the same quantity).

use crate::{Error, Real, Result};
use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub l: usize,
    pub alpha: T,
    pub m_alpha: T,
    /// Semicircle parameter; the disordered bulk has radius `2 * sigma * j`.
    pub j: T,
    /// Disorder amplitude in units of `j`; zero gives the clean chain.
    pub sigma: T,
    pub u: T,
    pub mu: T,
    pub kac: bool,
    pub seed: u64,
}

impl<T: Real> ModelParams<T> {
    /// Clean chain with `alpha = 0.5`, `J = 1` and Kac scaling on.
    pub fn new(l: usize) -> Self {
        Self {
            l,
            alpha: T::lit(0.5),
            m_alpha: T::zero(),
            j: T::one(),
            sigma: T::zero(),
            u: T::zero(),
            mu: T::zero(),
            kac: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.l < 4 || !self.l.is_multiple_of(2) {
            bad.push(format!("L = {} must be even and >= 4", self.l));
        }
        if !(self.alpha >= T::zero()) {
            bad.push(format!("alpha = {} must be >= 0", self.alpha));
        }
        if !(self.sigma >= T::zero()) {
            bad.push(format!("sigma = {} must be >= 0", self.sigma));
        }
        if self.sigma > T::zero() && !(self.j > T::zero()) {
            bad.push(format!("J = {} must be > 0 with disorder", self.j));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }

    /// Semicircle parameter of the disordered bulk under the normative
    /// variance convention.
    pub fn bulk_j(&self) -> T {
        self.sigma * self.j
    }

    pub fn require_strong_long_range(&self) -> Result<()> {
        if self.alpha >= T::one() {
            return Err(Error::InvalidParams(format!(
                "alpha = {} outside the strong long-range regime alpha < 1",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// `c_alpha = (1 - alpha) 2^(1 - alpha) L^(alpha - 1)` with Kac scaling, 1 without.
pub fn kac_factor<T: Real>(alpha: T, l: usize, kac: bool) -> Result<T> {
    if !kac {
        return Ok(T::one());
    }
    if !(alpha >= T::zero() && alpha < T::one()) {
        return Err(Error::InvalidParams(format!(
            "Kac factor needs 0 <= alpha < 1, got {alpha}"
        )));
    }
    let one = T::one();
    let two = T::lit(2.0);
    Ok((one - alpha) * two.powf(one - alpha) * T::from_usize_(l).powf(alpha - one))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionTable<T> {
    /// `(n, eps_n)` for `n = -L/2 + 1, ..., L/2` in increasing `n`.
    pub entries: Vec<(i64, T)>,
    pub kac_applied: bool,
    pub alpha: T,
    pub l: usize,
}

impl<T: Real> DispersionTable<T> {
    pub fn get(&self, n: i64) -> Option<T> {
        let half = (self.l / 2) as i64;
        let m = n.rem_euclid(self.l as i64);
        let m = if m > half { m - self.l as i64 } else { m };
        self.entries.get((m + half - 1) as usize).map(|e| e.1)
    }

    pub fn energies(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.1).collect()
    }
}

/// Clean long-range dispersion
/// `eps_n = -c_alpha * sum_{r=1}^{L/2} cos(2 pi n r / L) / r^alpha`.
pub fn dispersion<T: Real>(params: &ModelParams<T>) -> Result<DispersionTable<T>> {
    params.validate()?;
    let l = params.l;
    let c = kac_factor(params.alpha, l, params.kac)?;
    let half = (l / 2) as i64;
    let inv_pow: Vec<T> = (1..=l / 2).map(|r| T::from_usize_(r).powf(-params.alpha)).collect();
    let entries = ((-half + 1)..=half)
        .map(|n| {
            // Cosines evaluated on the integer phase (n r mod L) so that
            // eps_n and eps_-n use bit-identical summands.
            let na = n.unsigned_abs() as usize;
            let mut s = T::zero();
            for (k, &w) in inv_pow.iter().enumerate() {
                let phase = (na * (k + 1)) % l;
                s += cos_turn::<T>(phase, l) * w;
            }
            (n, -c * s)
        })
        .collect();
    Ok(DispersionTable {
        entries,
        kac_applied: params.kac,
        alpha: params.alpha,
        l,
    })
}

/// `cos(2 pi k / l)` with the symmetric reductions applied exactly, so that
/// quarter and half turns return exact zeros and signs.
pub(crate) fn cos_turn<T: Real>(k: usize, l: usize) -> T {
    let k = k % l;
    let k = k.min(l - k);
    if l.is_multiple_of(2) {
        if 4 * k == l {
            return T::zero();
        }
        if 4 * k > l {
            // cos(pi - x) = -cos(x)
            return -cos_turn::<T>(l / 2 - k, l);
        }
    }
    (T::two_pi() * T::from_usize_(k) / T::from_usize_(l)).cos()
}

/// Weight of distance `r` in one row of the circulant. Distances below L/2
/// occur twice per row and carry half the dispersion coefficient, the
/// antipodal distance occurs once; the row then sums to exactly `eps_n`.
pub fn bond_weight<T: Real>(r: usize, l: usize) -> T {
    if 2 * r == l {
        T::one()
    } else {
        T::lit(0.5)
    }
}

/// Mean hopping-matrix entry at periodic distance `r >= 1`.
pub fn clean_entry<T: Real>(params: &ModelParams<T>, c_alpha: T, r: usize) -> T {
    -c_alpha * params.m_alpha * bond_weight::<T>(r, params.l) * T::from_usize_(r).powf(-params.alpha)
}

/// Symmetric circulant whose spectrum is exactly `mu + M_alpha * eps_n`.
pub fn build_clean_hopping_matrix<T: Real>(params: &ModelParams<T>) -> Result<DMatrix<T>> {
    params.validate()?;
    let l = params.l;
    let c = kac_factor(params.alpha, l, params.kac)?;
    let row: Vec<T> = (0..=l / 2)
        .map(|r| if r == 0 { params.mu } else { clean_entry(params, c, r) })
        .collect();
    Ok(DMatrix::from_fn(l, l, |i, j| {
        row[crate::disorder::periodic_distance(i, j, l)]
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermiLevel<T> {
    pub mu: T,
    pub degenerate: bool,
}

/// Midpoint between the two central levels of a sorted spectrum of even length.
pub fn half_filling_mu<T: Real>(spectrum: &[T]) -> Result<FermiLevel<T>> {
    let l = spectrum.len();
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "half filling needs an even spectrum length, got {l}"
        )));
    }
    if spectrum.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("spectrum not sorted ascending".into()));
    }
    let (a, b) = (spectrum[l / 2 - 1], spectrum[l / 2]);
    if a == b {
        Ok(FermiLevel {
            mu: a,
            degenerate: true,
        })
    } else {
        Ok(FermiLevel {
            mu: (a + b) / T::lit(2.0),
            degenerate: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigensolve;

    fn params(l: usize, alpha: f64, kac: bool) -> ModelParams<f64> {
        ModelParams {
            alpha,
            kac,
            m_alpha: 1.0,
            ..ModelParams::new(l)
        }
    }

    #[test]
    fn kac_factor_values() {
        assert!((kac_factor(0.0f64, 64, true).unwrap() - 2.0 / 64.0).abs() < 1e-15);
        let v: f64 = kac_factor(0.5, 16, true).unwrap();
        assert!((v - 0.176_776_695_296_636_9).abs() < 1e-15);
        assert_eq!(kac_factor(0.7, 64, false).unwrap(), 1.0);
        assert!(kac_factor(1.0, 64, true).is_err());
        assert!(kac_factor(1.3f64, 64, true).is_err());
    }

    #[test]
    fn dispersion_oracles() {
        let t = dispersion(&params(8, 0.0, false)).unwrap();
        assert_eq!(t.get(0).unwrap(), -4.0);
        assert!(t.get(2).unwrap().abs() < 1e-15);
        let t = dispersion(&params(8, 0.5, false)).unwrap();
        let expect = -(1.0 + 1.0 / 2f64.sqrt() + 1.0 / 3f64.sqrt() + 0.5);
        assert!((t.get(0).unwrap() - expect).abs() < 1e-14);
        assert!((t.get(0).unwrap() + 2.784_457_050_376_173).abs() < 1e-12);
    }

    #[test]
    fn dispersion_is_even_and_indexed() {
        let t = dispersion(&params(32, 0.3, true)).unwrap();
        assert_eq!(t.entries.len(), 32);
        assert_eq!(t.entries.first().unwrap().0, -15);
        assert_eq!(t.entries.last().unwrap().0, 16);
        for n in 1..16 {
            assert_eq!(t.get(n), t.get(-n));
        }
        assert_eq!(t.get(17), t.get(-15));
    }

    #[test]
    fn zero_mode_is_lowest_for_positive_mean() {
        let t = dispersion(&params(64, 0.5, true)).unwrap();
        let e0 = t.get(0).unwrap();
        assert!(t.entries.iter().all(|&(_, e)| e >= e0));
    }

    #[test]
    fn alpha_zero_kac_levels() {
        // c = 2/L: zero mode -1, even modes 0, odd modes 2/L.
        let l = 16;
        let t = dispersion(&params(l, 0.0, true)).unwrap();
        for &(n, e) in &t.entries {
            let want = if n == 0 {
                -1.0
            } else if n % 2 == 0 {
                0.0
            } else {
                2.0 / l as f64
            };
            assert!((e - want).abs() < 1e-15, "n = {n}: {e} vs {want}");
        }
    }

    #[test]
    fn clean_matrix_l4_alpha0() {
        let m = build_clean_hopping_matrix(&params(4, 0.0, false)).unwrap();
        for i in 0..4 {
            assert_eq!(m[(i, i)], 0.0);
            assert_eq!(m[(i, (i + 1) % 4)], -0.5);
            assert_eq!(m[(i, (i + 2) % 4)], -1.0);
        }
        let t = dispersion(&params(4, 0.0, false)).unwrap();
        let mut want = t.energies();
        want.sort_by(f64::total_cmp);
        let got = eigensolve(&m, false).unwrap().eigenvalues;
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn clean_matrix_spectrum_matches_dispersion() {
        let mut p = params(8, 0.5, true);
        p.mu = 0.3;
        p.m_alpha = -1.7;
        let m = build_clean_hopping_matrix(&p).unwrap();
        assert_eq!(m, m.transpose());
        let mut want: Vec<f64> = dispersion(&p)
            .unwrap()
            .energies()
            .iter()
            .map(|e| p.mu + p.m_alpha * e)
            .collect();
        want.sort_by(f64::total_cmp);
        let got = eigensolve(&m, false).unwrap().eigenvalues;
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn half_filling_examples() {
        let f = half_filling_mu(&[-1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            f,
            FermiLevel {
                mu: 0.0,
                degenerate: true
            }
        );
        let f = half_filling_mu(&[-2.0, -1.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            f,
            FermiLevel {
                mu: 0.0,
                degenerate: false
            }
        );
        assert!(half_filling_mu(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut p = ModelParams::<f64>::new(5);
        p.alpha = -1.0;
        p.sigma = -0.5;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("L = 5") && msg.contains("alpha") && msg.contains("sigma"));
    }
}
