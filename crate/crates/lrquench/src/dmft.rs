//! Matsubara Green functions, Hilbert transforms of the flat long-range,
//! semicircular and mixed densities of states, and the Weiss-field relations
//! whose long-range corrections vanish as 1/N.
//!
//! Only the form of the self-consistency relation is checked here; there is
//! no impurity solver.

use crate::{Error, Real, Result};
use num_complex::Complex;
use std::fmt::Write as _;

pub type C<T> = Complex<T>;

#[derive(Clone, Debug, PartialEq)]
pub struct MatsubaraGrid<T> {
    pub beta: T,
    pub n_max: usize,
    pub frequencies: Vec<T>,
}

impl<T: Real> MatsubaraGrid<T> {
    pub fn new(beta: T, n_max: usize) -> Result<Self> {
        if !(beta > T::zero()) || n_max == 0 {
            return Err(Error::InvalidParams(format!(
                "beta = {beta} and n_max = {n_max} must be positive"
            )));
        }
        let frequencies = (0..n_max).map(|n| T::from_usize_(2 * n + 1) * T::pi() / beta).collect();
        Ok(Self {
            beta,
            n_max,
            frequencies,
        })
    }

    /// `beta = 64 / J`, 512 frequencies.
    pub fn default_for(j: T) -> Result<Self> {
        Self::new(T::lit(64.0) / j, 512)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreenFunction<T> {
    pub grid: MatsubaraGrid<T>,
    pub values: Vec<C<T>>,
}

impl<T: Real> GreenFunction<T> {
    pub fn from_fn<F: FnMut(T) -> Result<C<T>>>(grid: &MatsubaraGrid<T>, mut f: F) -> Result<Self> {
        let values = grid.frequencies.iter().map(|&w| f(w)).collect::<Result<_>>()?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Local Green function of a model density of states at chemical potential `mu`.
    pub fn local(grid: &MatsubaraGrid<T>, model: &DOSModel<T>, mu: T) -> Result<Self> {
        Self::from_fn(grid, |w| hilbert_transform(model, C::new(mu, w)))
    }

    pub fn is_causal(&self) -> bool {
        self.grid
            .frequencies
            .iter()
            .zip(&self.values)
            .all(|(&w, g)| w <= T::zero() || g.im < T::zero())
    }

    /// CSV with columns `n, omega_n, re, im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,omega_n,re,im\n");
        for (n, (w, g)) in self.grid.frequencies.iter().zip(&self.values).enumerate() {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e}",
                n,
                w.as_f64(),
                g.re.as_f64(),
                g.im.as_f64()
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DOSModel<T> {
    /// Weight `1/N` at `eps0`, the remaining `(N-1)/N` at zero.
    FlatLr {
        eps0: T,
        n: usize,
    },
    Semicircle {
        j: T,
    },
    /// Semicircle of weight `1 - n_out/N` plus `1/N` at each outlier.
    Mixed {
        j: T,
        outliers: Vec<T>,
        n: usize,
    },
}

impl<T: Real> DOSModel<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            DOSModel::FlatLr { n, .. } if *n < 2 => {
                Err(Error::InvalidParams(format!("flat model needs N >= 2, got {n}")))
            }
            DOSModel::Semicircle { j } if !(*j > T::zero()) => {
                Err(Error::InvalidParams(format!("semicircle needs J > 0, got {j}")))
            }
            DOSModel::Mixed { j, outliers, n } => {
                if *n < 2 || outliers.len() >= *n {
                    Err(Error::InvalidParams(format!(
                        "mixed model needs 2 <= N and fewer than N outliers, got N = {n}"
                    )))
                } else if !(*j > T::zero()) {
                    Err(Error::InvalidParams(format!("mixed model needs J > 0, got {j}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Principal square root in Cartesian form, so that real inputs give
/// exactly real or exactly imaginary results.
fn csqrt<T: Real>(z: C<T>) -> C<T> {
    let r = cabs(z);
    let half = T::lit(0.5);
    let re = ((r + z.re) * half).sqrt();
    let im = ((r - z.re) * half).sqrt();
    C::new(re, if z.im < T::zero() { -im } else { im })
}

fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

fn on_real_axis<T: Real>(xi: C<T>) -> bool {
    xi.im == T::zero()
}

/// `sqrt(xi^2 - 4J^2)` on the sheet that behaves as `xi` at infinity, with
/// the cut on [-2J, 2J].
fn semicircle_root<T: Real>(xi: C<T>, j: T) -> C<T> {
    let two_j = C::new(T::lit(2.0) * j, T::zero());
    csqrt(xi - two_j) * csqrt(xi + two_j)
}

fn semicircle_g<T: Real>(xi: C<T>, j: T) -> C<T> {
    // (xi - s) / (2J^2) rationalised to avoid cancellation at large |xi|.
    C::new(T::lit(2.0), T::zero()) / (xi + semicircle_root(xi, j))
}

fn semicircle_dg<T: Real>(xi: C<T>, j: T) -> C<T> {
    let s = semicircle_root(xi, j);
    let d = xi + s;
    -(C::new(T::lit(2.0), T::zero()) * (C::new(T::one(), T::zero()) + xi / s)) / (d * d)
}

pub fn hilbert_transform<T: Real>(model: &DOSModel<T>, xi: C<T>) -> Result<C<T>> {
    model.validate()?;
    let real = on_real_axis(xi);
    match model {
        DOSModel::FlatLr { eps0, n } => {
            if real && (xi.re == T::zero() || xi.re == *eps0) {
                return Err(Error::OnSupport(format!("{xi}")));
            }
            let nn = T::from_usize_(*n);
            let one = C::new(T::one(), T::zero());
            Ok(one.unscale(nn) / (xi - C::new(*eps0, T::zero())) + one.scale((nn - T::one()) / nn) / xi)
        }
        DOSModel::Semicircle { j } => {
            if real && xi.re.abs() < T::lit(2.0) * *j {
                return Err(Error::OnSupport(format!("{xi}")));
            }
            Ok(semicircle_g(xi, *j))
        }
        DOSModel::Mixed { j, outliers, n } => {
            if real && (xi.re.abs() < T::lit(2.0) * *j || outliers.contains(&xi.re)) {
                return Err(Error::OnSupport(format!("{xi}")));
            }
            Ok(mixed_g(xi, *j, outliers, *n))
        }
    }
}

fn mixed_g<T: Real>(xi: C<T>, j: T, outliers: &[T], n: usize) -> C<T> {
    let nn = T::from_usize_(n);
    let bulk = T::one() - T::from_usize_(outliers.len()) / nn;
    let mut g = semicircle_g(xi, j).scale(bulk);
    for &l in outliers {
        g += C::new(T::one() / nn, T::zero()) / (xi - C::new(l, T::zero()));
    }
    g
}

fn mixed_dg<T: Real>(xi: C<T>, j: T, outliers: &[T], n: usize) -> C<T> {
    let nn = T::from_usize_(n);
    let bulk = T::one() - T::from_usize_(outliers.len()) / nn;
    let mut d = semicircle_dg(xi, j).scale(bulk);
    for &l in outliers {
        let x = xi - C::new(l, T::zero());
        d -= C::new(T::one() / nn, T::zero()) / (x * x);
    }
    d
}

/// `R[G] = J^2 G + 1/G`; the identity `R[rho(xi)] = xi` holds only on the
/// image of the semicircle Hilbert transform.
pub fn reciprocal_semicircle<T: Real>(g: C<T>, j: T) -> Result<C<T>> {
    if g == C::new(T::zero(), T::zero()) {
        return Err(Error::InvalidParams("reciprocal of G = 0".into()));
    }
    Ok(g.scale(j * j) + g.inv())
}

/// Both roots of `N G xi^2 - (N + e + e N G) xi + N e = 0`, the quadratic
/// behind the explicit flat-model Weiss field, with `e` the effective
/// outlier energy.
fn flat_roots<T: Real>(g: C<T>, e: T, n: usize) -> [C<T>; 2] {
    let nn = T::from_usize_(n);
    let ec = C::new(e, T::zero());
    let ng = g.scale(nn);
    let b = C::new(nn + e, T::zero()) + ng * ec;
    let disc = {
        let x = C::new(e - nn, T::zero()) + ec * ng;
        x * x + C::new(T::lit(4.0) * e * nn, T::zero())
    };
    let s = csqrt(disc);
    let den = ng.scale(T::lit(2.0));
    [(b - s) / den, (b + s) / den]
}

/// Reciprocal function of the flat model: the root that tends to `1/G` as
/// N grows (all weight collapsing onto zero energy).
fn flat_reciprocal<T: Real>(g: C<T>, e: T, n: usize) -> C<T> {
    let target = g.inv();
    let [a, b] = flat_roots(g, e, n);
    if cabs(a - target) <= cabs(b - target) {
        a
    } else {
        b
    }
}

fn effective_eps<T: Real>(eps0: T, n: usize, kac: bool) -> T {
    if kac {
        eps0
    } else {
        eps0 * T::from_usize_(n)
    }
}

/// Large-N asymptote of the closed form itself:
/// `1/G - R ~ e / (G (N (e G - 1) + e))`.
pub fn flat_correction_asymptote<T: Real>(g: C<T>, eps0: T, n: usize, kac: bool) -> C<T> {
    let e = effective_eps(eps0, n, kac);
    let ec = C::new(e, T::zero());
    let nn = T::from_usize_(n);
    ec / (g * ((ec * g - C::new(T::one(), T::zero())).scale(nn) + ec))
}

/// The large-N forms as printed alongside the closed form:
/// `-(1/N) e0 / (e0 G - 1)` (Kac on) and `-(e0 + 1)^2 / (4 N e0 G^2)` (Kac off).
/// They do not agree with the closed form's own asymptote; reported only.
pub fn flat_correction_printed<T: Real>(g: C<T>, eps0: T, n: usize, kac: bool) -> C<T> {
    let nn = T::from_usize_(n);
    let e = C::new(eps0, T::zero());
    let one = C::new(T::one(), T::zero());
    if kac {
        -(e / (e * g - one)).unscale(nn)
    } else {
        -((e + one) * (e + one)) / (e * g * g).scale(T::lit(4.0) * nn)
    }
}

/// Correction `1/G - R_flat[G]` beyond the atomic form `i omega + mu`.
pub fn flat_correction<T: Real>(g: C<T>, eps0: T, n: usize, kac: bool) -> C<T> {
    if eps0 == T::zero() {
        return C::new(T::zero(), T::zero());
    }
    g.inv() - flat_reciprocal(g, effective_eps(eps0, n, kac), n)
}

/// Explicit flat-model Weiss field
/// `G0^-1 = i omega + mu + 1/G - [(N + e + e N G) - sqrt((e - N + e N G)^2 + 4 e N)] / (2 N G)`
/// with `e = eps0` (Kac on) or `N eps0` (Kac off). The square-root sheet is
/// the one continuous with `R -> 1/G`; it is re-checked against the large-N
/// asymptote at N = 2^12 and rejected if the two disagree.
pub fn weiss_field_flat<T: Real>(g: C<T>, eps0: T, n: usize, mu: T, omega: T, kac: bool) -> Result<C<T>> {
    if g == C::new(T::zero(), T::zero()) || n < 2 {
        return Err(Error::InvalidParams(format!(
            "flat Weiss field needs G != 0 and N >= 2 (N = {n})"
        )));
    }
    if kac && eps0 != T::zero() {
        // Kac off has no independent sheet to confuse at this N; its
        // asymptote is checked in tests.
        let big = 1usize << 12;
        let got = flat_correction(g, eps0, big, kac);
        let want = flat_correction_asymptote(g, eps0, big, kac);
        if cabs(got - want) > T::lit(0.05) * cabs(want) {
            return Err(Error::Branch(format!(
                "N = {big}: closed form {got} vs asymptote {want}"
            )));
        }
    }
    Ok(C::new(mu, omega) + flat_correction(g, eps0, n, kac))
}

pub fn weiss_field_semicircle<T: Real>(g: C<T>, j: T, mu: T, omega: T) -> C<T> {
    C::new(mu, omega) - g.scale(j * j)
}

/// Solves `rho_mixed(xi) = G` by Newton iteration from `J^2 G + 1/G`.
pub fn invert_mixed<T: Real>(model: &DOSModel<T>, g: C<T>) -> Result<C<T>> {
    let DOSModel::Mixed { j, outliers, n } = model else {
        return Err(Error::InvalidParams("invert_mixed needs a mixed model".into()));
    };
    model.validate()?;
    let tol = T::lit(1e-10).max(T::lit(100.0) * T::EPSILON * cabs(g));
    let mut xi = reciprocal_semicircle(g, *j)?;
    let mut res = mixed_g(xi, *j, outliers, *n) - g;
    for _ in 0..100 {
        if cabs(res) <= tol {
            return Ok(xi);
        }
        let step = res / mixed_dg(xi, *j, outliers, *n);
        let mut lam = T::one();
        loop {
            let trial = xi - step.scale(lam);
            let r = mixed_g(trial, *j, outliers, *n) - g;
            if cabs(r) < cabs(res) || lam < T::lit(1e-6) {
                xi = trial;
                res = r;
                break;
            }
            lam *= T::lit(0.5);
        }
    }
    if cabs(res) <= tol {
        return Ok(xi);
    }
    Err(Error::Newton {
        g: format!("{g}"),
        xi: format!("{xi}"),
        residual: cabs(res).as_f64(),
    })
}

/// `G0^-1 = i omega + mu + 1/G - R_mixed[G]`.
pub fn weiss_field_mixed<T: Real>(g: C<T>, model: &DOSModel<T>, mu: T, omega: T) -> Result<C<T>> {
    let xi = invert_mixed(model, g)?;
    Ok(C::new(mu, omega) + g.inv() - xi)
}

/// `Sigma = G0^-1 - G^-1` pointwise.
pub fn self_energy<T: Real>(g0: &GreenFunction<T>, g: &GreenFunction<T>) -> Result<GreenFunction<T>> {
    if g0.grid != g.grid {
        return Err(Error::Shape("Green functions live on different Matsubara grids".into()));
    }
    let zero = C::new(T::zero(), T::zero());
    let values = g0
        .values
        .iter()
        .zip(&g.values)
        .enumerate()
        .map(|(k, (a, b))| {
            if *a == zero || *b == zero {
                Err(Error::InvalidParams(format!("zero Green function value at n = {k}")))
            } else {
                Ok(a.inv() - b.inv())
            }
        })
        .collect::<Result<_>>()?;
    Ok(GreenFunction {
        grid: g.grid.clone(),
        values,
    })
}

/// Magnitude of one long-range Weiss-field correction across a range of N.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub label: &'static str,
    pub ns: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub exponent: f64,
}

/// Fits `|correction| ~ N^p` for the flat model (Kac on and off, `eps0 = -1`)
/// and the mixed model (three outliers on a unit semicircle), all evaluated
/// at the semicircle `G` of `xi`.
pub fn correction_scaling(xi: C<f64>, ns: &[usize]) -> Result<Vec<ScalingFit>> {
    if ns.len() < 2 {
        return Err(Error::InvalidParams("need at least two N values".into()));
    }
    let g = hilbert_transform(&DOSModel::Semicircle { j: 1.0 }, xi)?;
    let fit = |label, f: &dyn Fn(usize) -> Result<f64>| -> Result<ScalingFit> {
        let magnitudes = ns.iter().map(|&n| f(n)).collect::<Result<Vec<_>>>()?;
        let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let exponent = crate::stats::power_law_exponent(&x, &magnitudes);
        Ok(ScalingFit {
            label,
            ns: ns.to_vec(),
            magnitudes,
            exponent,
        })
    };
    let semi = weiss_field_semicircle(g, 1.0, xi.re, xi.im);
    Ok(vec![
        fit("flat_kac_on", &|n| Ok(cabs(flat_correction(g, -1.0, n, true))))?,
        fit("flat_kac_off", &|n| Ok(cabs(flat_correction(g, -1.0, n, false))))?,
        fit("mixed", &|n| {
            let m = DOSModel::Mixed {
                j: 1.0,
                outliers: vec![3.0, -2.6, 4.1],
                n,
            };
            Ok(cabs(weiss_field_mixed(g, &m, xi.re, xi.im)? - semi))
        })?,
    ])
}

/// Largest `|R[rho(xi)] - xi|` over `n_points` Matsubara-like points
/// `mu + i omega_k`, for the semicircle and a mixed model at `N = 64`.
pub fn reciprocal_round_trip(n_points: usize, mu: f64) -> Result<f64> {
    let semi = DOSModel::Semicircle { j: 1.0 };
    let mixed = DOSModel::Mixed {
        j: 1.0,
        outliers: vec![3.0, -2.6],
        n: 64,
    };
    let grid = MatsubaraGrid::new(10.0, n_points)?;
    let mut worst = 0.0f64;
    for &w in &grid.frequencies {
        let xi = C::new(mu, w);
        let back = reciprocal_semicircle(hilbert_transform(&semi, xi)?, 1.0)?;
        worst = worst.max(cabs(back - xi));
        let back = invert_mixed(&mixed, hilbert_transform(&mixed, xi)?)?;
        worst = worst.max(cabs(back - xi));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    type Cf = C<f64>;

    fn c(re: f64, im: f64) -> Cf {
        Cf::new(re, im)
    }

    #[test]
    fn grid_is_positive_increasing() {
        let g = MatsubaraGrid::default_for(1.0).unwrap();
        assert_eq!(g.frequencies.len(), 512);
        assert!((g.frequencies[0] - std::f64::consts::PI / 64.0).abs() < 1e-15);
        assert!(g.frequencies.windows(2).all(|w| w[1] > w[0]));
        assert!(MatsubaraGrid::new(0.0, 4).is_err());
    }

    #[test]
    fn semicircle_edge_and_support() {
        let m = DOSModel::Semicircle { j: 1.5 };
        let g = hilbert_transform(&m, c(3.0, 0.0)).unwrap();
        assert!((g - c(1.0 / 1.5, 0.0)).norm() < 1e-15);
        assert!(hilbert_transform(&m, c(1.0, 0.0)).is_err());
        let g = hilbert_transform(&m, c(-5.0, 0.0)).unwrap();
        assert!(g.re < 0.0 && g.im == 0.0, "{g}");
    }

    #[test]
    fn sum_rule_asymptotics() {
        let models = [
            DOSModel::FlatLr { eps0: -1.0, n: 16 },
            DOSModel::Semicircle { j: 1.0 },
            DOSModel::Mixed {
                j: 1.0,
                outliers: vec![3.0, -4.0],
                n: 64,
            },
        ];
        for m in &models {
            let mut prev = f64::INFINITY;
            for mag in [1e4, 1e6] {
                let xi = c(0.3, 1.0) * mag;
                let err = (xi * hilbert_transform(m, xi).unwrap() - c(1.0, 0.0)).norm();
                assert!(err < 1e-5, "{m:?}: {err}");
                assert!(err < prev);
                prev = err;
            }
        }
    }

    #[test]
    fn flat_with_zero_eps_is_free() {
        let m = DOSModel::FlatLr { eps0: 0.0, n: 7 };
        for xi in [c(0.2, 1.0), c(-3.0, 0.5)] {
            assert!((hilbert_transform(&m, xi).unwrap() - xi.inv()).norm() < 1e-15);
        }
    }

    #[test]
    fn reciprocal_examples() {
        let j = 2.0;
        assert!((reciprocal_semicircle(c(1.0 / j, 0.0), j).unwrap() - c(2.0 * j, 0.0)).norm() < 1e-15);
        assert!(reciprocal_semicircle(c(0.0, 0.0), j).is_err());
        // Off the image of the transform the identity fails: i/J maps to 0.
        assert!(reciprocal_semicircle(c(0.0, 1.0 / j), j).unwrap().norm() < 1e-15);
        let m = DOSModel::Semicircle { j };
        for k in 0..50 {
            let w = 0.1 * (1000f64).powf(k as f64 / 49.0);
            let xi = c(0.3, w);
            let back = reciprocal_semicircle(hilbert_transform(&m, xi).unwrap(), j).unwrap();
            assert!((back - xi).norm() <= 1e-10 * xi.norm());
        }
    }

    #[test]
    fn flat_atomic_limit_is_exact() {
        let w = weiss_field_flat(c(0.1, -0.4), 0.0, 10, 0.3, 1.7, true).unwrap();
        assert_eq!(w, c(0.3, 1.7));
    }

    #[test]
    fn flat_correction_halves_when_n_doubles() {
        let g = c(0.2, -0.6);
        for kac in [true, false] {
            let a = flat_correction(g, -1.0, 64, kac).norm();
            let b = flat_correction(g, -1.0, 128, kac).norm();
            assert!((a / b - 2.0).abs() < 0.2, "kac = {kac}: ratio {}", a / b);
        }
    }

    #[test]
    fn flat_closed_form_matches_its_asymptote() {
        let g = c(0.2, -0.6);
        for kac in [true, false] {
            for eps0 in [-1.0, 0.7] {
                let n = 1 << 12;
                let got = flat_correction(g, eps0, n, kac);
                let want = flat_correction_asymptote(g, eps0, n, kac);
                assert!((got - want).norm() < 1e-3 * want.norm(), "kac {kac} eps0 {eps0}");
            }
        }
    }

    #[test]
    fn flat_closed_form_inverts_its_own_density() {
        // The closed form is the reciprocal of rho = 1/xi + (e/N)/(xi - e).
        let (g, e, n) = (c(0.2, -0.6), -0.8, 9usize);
        let xi = flat_reciprocal(g, e, n);
        let rho = xi.inv() + c(e / n as f64, 0.0) / (xi - c(e, 0.0));
        assert!((rho - g).norm() < 1e-12);
    }

    #[test]
    fn printed_expansion_differs_from_closed_form() {
        let g = c(0.2, -0.6);
        let n = 1 << 12;
        let closed = flat_correction(g, -1.0, n, true);
        let printed = flat_correction_printed(g, -1.0, n, true);
        assert!((closed - printed).norm() > 0.5 * closed.norm());
    }

    #[test]
    fn semicircle_weiss_is_affine() {
        assert_eq!(weiss_field_semicircle(c(0.0, 0.0), 1.0, 0.5, 10.0), c(0.5, 10.0));
        let w = weiss_field_semicircle(c(0.0, -1.0), 1.0, 0.0, 10.0);
        assert_eq!(w, c(0.0, 11.0));
        let (g1, g2) = (c(0.1, -0.2), c(-0.3, -0.05));
        let lhs = weiss_field_semicircle(g1 + g2, 1.3, 0.0, 0.0);
        let rhs = weiss_field_semicircle(g1, 1.3, 0.0, 0.0) + weiss_field_semicircle(g2, 1.3, 0.0, 0.0);
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn mixed_without_outliers_is_semicircle() {
        let m = DOSModel::Mixed {
            j: 1.0,
            outliers: vec![],
            n: 100,
        };
        let xi = c(0.2, 0.9);
        let g = hilbert_transform(&m, xi).unwrap();
        let a = weiss_field_mixed(g, &m, 0.2, 0.9).unwrap();
        let b = weiss_field_semicircle(g, 1.0, 0.2, 0.9);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn mixed_round_trip_single_outlier() {
        let m = DOSModel::Mixed {
            j: 1.0,
            outliers: vec![3.0],
            n: 64,
        };
        let mu = 0.25;
        let xi = c(mu, 1.0);
        let g = hilbert_transform(&m, xi).unwrap();
        assert!((invert_mixed(&m, g).unwrap() - xi).norm() < 1e-8);
    }

    #[test]
    fn mixed_correction_halves() {
        let g = hilbert_transform(&DOSModel::Semicircle { j: 1.0 }, c(0.1, 0.8)).unwrap();
        let dev = |n: usize| {
            let m = DOSModel::Mixed {
                j: 1.0,
                outliers: vec![3.0, -2.6, 4.1],
                n,
            };
            (weiss_field_mixed(g, &m, 0.1, 0.8).unwrap() - weiss_field_semicircle(g, 1.0, 0.1, 0.8)).norm()
        };
        let r = dev(256) / dev(512);
        assert!((r - 2.0).abs() < 0.4, "ratio {r}");
    }

    #[test]
    fn self_energy_examples() {
        let grid = MatsubaraGrid::new(10.0, 8).unwrap();
        let g = GreenFunction::local(&grid, &DOSModel::Semicircle { j: 1.0 }, 0.0).unwrap();
        assert!(g.is_causal());
        let s = self_energy(&g, &g).unwrap();
        assert!(s.values.iter().all(|v| v.norm() == 0.0));
        let k = c(0.3, -0.1);
        let g2 = GreenFunction {
            grid: grid.clone(),
            values: g.values.iter().map(|v| (v.inv() - k).inv()).collect(),
        };
        let s = self_energy(&g, &g2).unwrap();
        assert!(s.values.iter().all(|v| (v - k).norm() < 1e-12));
        let other = GreenFunction::local(
            &MatsubaraGrid::new(5.0, 8).unwrap(),
            &DOSModel::Semicircle { j: 1.0 },
            0.0,
        )
        .unwrap();
        assert!(self_energy(&g, &other).is_err());
        assert!(g.to_csv().starts_with("n,omega_n,re,im\n0,"));
    }

    #[test]
    fn sweep_exponents_and_round_trip() {
        let ns: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
        for f in correction_scaling(c(0.1, 0.8), &ns).unwrap() {
            assert!((f.exponent + 1.0).abs() < 0.1, "{}: {}", f.label, f.exponent);
        }
        assert!(reciprocal_round_trip(50, 0.1).unwrap() <= 1e-8);
        assert!(correction_scaling(c(0.1, 0.8), &[8]).is_err());
    }
}
