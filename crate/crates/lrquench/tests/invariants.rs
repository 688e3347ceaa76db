use lrquench::disorder::{self, DisorderModel, DisorderSpec, VarianceConvention};
use lrquench::dmft::{self, DOSModel, GreenFunction, MatsubaraGrid};
use lrquench::ed_oracle::{self, ManyBodyBasis};
use lrquench::fidelity::{self, Coefficients, SpectrumPair};
use lrquench::model::{self, ModelParams};
use lrquench::quench::{self, averaged, EnsembleSpec, QuenchTier};
use lrquench::rng::CounterRng;
use lrquench::spectral;
use num_complex::Complex;
use proptest::prelude::*;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn spec(p: &ModelParams<f64>, model: DisorderModel, k: u64) -> DisorderSpec<f64> {
    DisorderSpec::from_params(p, model, VarianceConvention::PerEntryRadius, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rng_words_are_random_access(seed in any::<u64>(), k in 0u64..4, n in 1usize..64) {
        let mut a = CounterRng::for_realization(seed, k);
        let b = CounterRng::for_realization(seed, k);
        for i in 0..n as u64 {
            prop_assert_eq!(a.next_u64(), b.word(i));
        }
        let u = CounterRng::for_realization(seed, k).uniform();
        prop_assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn clean_spectrum_is_shifted_dispersion(
        half in 2usize..24,
        alpha in 0.0f64..0.95,
        m in -8.0f64..8.0,
        mu in -1.0f64..1.0,
        kac in any::<bool>(),
    ) {
        let p = ModelParams { alpha, m_alpha: m, mu, kac, ..ModelParams::new(2 * half) };
        let a = model::build_clean_hopping_matrix(&p).unwrap();
        let got = spectral::eigensolve(&a, false).unwrap().eigenvalues;
        let want = sorted(model::dispersion(&p).unwrap().energies().iter().map(|e| mu + m * e).collect());
        let scale = 1.0 + m.abs() * 4.0;
        for (g, w) in sorted(got).iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10 * scale, "{} vs {}", g, w);
        }
    }

    #[test]
    fn disorder_is_symmetric_and_reproducible(
        half in 2usize..16,
        seed in any::<u64>(),
        k in 0u64..8,
        independent in any::<bool>(),
    ) {
        let p = ModelParams { sigma: 1.0, m_alpha: -2.0, seed, ..ModelParams::new(2 * half) };
        let model = if independent { DisorderModel::Independent } else { DisorderModel::Circulant };
        let a = disorder::sample(&p, &spec(&p, model, k)).unwrap();
        let b = disorder::sample(&p, &spec(&p, model, k)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &a.transpose());
        let c = disorder::sample(&p, &spec(&p, model, k + 1)).unwrap();
        prop_assert_ne!(&a, &c);
    }

    #[test]
    fn cache_round_trips(half in 2usize..10, seed in any::<u64>(), k in 0u64..100) {
        let p = ModelParams { sigma: 1.0, seed, ..ModelParams::new(2 * half) };
        let a = disorder::sample(&p, &spec(&p, DisorderModel::Independent, k)).unwrap();
        let h = disorder::CacheHeader { l: p.l as u32, model: DisorderModel::Independent, seed, realization_index: k };
        let mut buf = Vec::new();
        disorder::write_matrix_cache(&mut buf, &h, &a).unwrap();
        prop_assert_eq!(buf.len(), 32 + 8 * p.l * p.l);
        let (h2, b) = disorder::read_matrix_cache(buf.as_slice()).unwrap();
        prop_assert_eq!(h2, h);
        prop_assert_eq!(b, a);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(
        eps in prop::collection::vec(-2.0f64..2.0, 8..20),
        shift in prop::collection::vec(-3.0f64..3.0, 1..3),
        u in 0.05f64..1.5,
    ) {
        let l = eps.len() / 2 * 2;
        let eps = sorted(eps[..l].to_vec());
        let mut moved = eps.clone();
        for (i, s) in shift.iter().enumerate() {
            moved[l - 1 - i] += s.abs() + 0.1;
        }
        let pair = SpectrumPair::new(eps, moved, None).unwrap();
        let t = quench::time_grid(10.0, 41);
        let a = fidelity::fidelity_series(&pair, Coefficients::Averaged, l / 2, u, &t).unwrap();
        let b = fidelity::fidelity_series(&pair.swapped(), Coefficients::Averaged, l / 2, u, &t).unwrap();
        prop_assert_eq!(a.values[0], 1.0);
        for (x, y) in a.infidelity.iter().zip(&b.infidelity) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            prop_assert!(*x >= -1e-10);
        }
        prop_assert!(a.values.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn porter_thomas_cdf_is_monotone(a in 0.0f64..30.0, b in 0.0f64..30.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (fl, fh) = (fidelity::porter_thomas_cdf(lo), fidelity::porter_thomas_cdf(hi));
        prop_assert!(fl <= fh && (0.0..=1.0).contains(&fl) && fh <= 1.0);
    }

    #[test]
    fn semicircle_green_is_causal(j in 0.2f64..3.0, mu in -2.0f64..2.0) {
        let grid = MatsubaraGrid::new(20.0, 64).unwrap();
        let g = GreenFunction::local(&grid, &DOSModel::Semicircle { j }, mu).unwrap();
        prop_assert!(g.is_causal());
        for (w, v) in grid.frequencies.iter().zip(&g.values) {
            let back = dmft::reciprocal_semicircle(*v, j).unwrap();
            prop_assert!((back - Complex::new(mu, *w)).norm() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn averaged_drop_is_linear_in_u(seed in any::<u64>(), u in 0.1f64..2.0) {
        let p = ModelParams { sigma: 1.0, seed, ..ModelParams::new(32) };
        let a = disorder::sample(&p, &spec(&p, DisorderModel::Independent, 0)).unwrap();
        let eps = spectral::eigensolve(&a, false).unwrap().eigenvalues;
        let t = quench::time_grid(10.0, 33);
        let d0 = averaged::averaged_reference::<f64>(32, 16);
        let r1 = averaged::averaged_quench(&eps, 16, u, &t).unwrap();
        let r2 = averaged::averaged_quench(&eps, 16, 2.0 * u, &t).unwrap();
        prop_assert_eq!(r1.values[0], d0);
        for (x, y) in r1.values.iter().zip(&r2.values).skip(1) {
            let (dx, dy) = (d0 - x, d0 - y);
            prop_assert!((dy - 2.0 * dx).abs() <= 1e-9 * (1.0 + dy.abs()));
        }
    }

    #[test]
    fn exact_quench_starts_at_reference(seed in any::<u64>(), u in 0.0f64..1.0) {
        let p = ModelParams { sigma: 1.0, m_alpha: -2.0, u, seed, ..ModelParams::new(16) };
        let s = EnsembleSpec { model: DisorderModel::Independent, convention: VarianceConvention::PerEntryRadius, n_realizations: 2, tier: QuenchTier::Exact };
        let t = quench::time_grid(5.0, 21);
        let r = quench::ensemble_quench(&p, &s, &t).unwrap();
        prop_assert!((r.values[0] - r.reference_value).abs() <= 1e-12 * r.reference_value);
        prop_assert!(r.values.iter().all(|v| v.is_finite()));
        prop_assert_eq!(r.seeds.len(), 2);
    }

    #[test]
    fn exact_evolution_conserves_norm_and_energy(seed in any::<u64>(), u in 0.0f64..3.0) {
        let p = ModelParams { sigma: 1.0, m_alpha: 1.0, seed, ..ModelParams::new(4) };
        let a = disorder::sample(&p, &spec(&p, DisorderModel::Independent, 0)).unwrap();
        let sr = spectral::eigensolve(&a, true).unwrap();
        let basis = ManyBodyBasis::half_filled(4).unwrap();
        let psi = ed_oracle::slater_state(&basis, sr.vectors().unwrap(), &[0, 1], &[0, 1]).unwrap();
        let h = ed_oracle::build_many_body_hamiltonian(&a, u, &basis).unwrap();
        let e0 = ed_oracle::expectation(&psi, &h).unwrap();
        for s in ed_oracle::exact_evolve(&psi, &h, &[0.3, 2.0, 7.5]).unwrap() {
            prop_assert!((s.norm() - 1.0).abs() <= 1e-10);
            prop_assert!((ed_oracle::expectation(&s, &h).unwrap() - e0).abs() <= 1e-9 * (1.0 + e0.abs()));
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let p64 = ModelParams {
        alpha: 0.3,
        m_alpha: -3.0,
        ..ModelParams::new(32)
    };
    let p32 = ModelParams::<f32> {
        alpha: 0.3,
        m_alpha: -3.0,
        ..ModelParams::new(32)
    };
    let e64 = spectral::eigensolve(&model::build_clean_hopping_matrix(&p64).unwrap(), false)
        .unwrap()
        .eigenvalues;
    let e32 = spectral::eigensolve(&model::build_clean_hopping_matrix(&p32).unwrap(), false)
        .unwrap()
        .eigenvalues;
    for (a, b) in e64.iter().zip(&e32) {
        assert!((a - *b as f64).abs() < 1e-4, "{a} vs {b}");
    }

    let d64 = ModelParams {
        sigma: 1.0,
        seed: 9,
        ..ModelParams::new(16)
    };
    let d32 = ModelParams::<f32> {
        sigma: 1.0,
        seed: 9,
        ..ModelParams::new(16)
    };
    let s32 = DisorderSpec::from_params(&d32, DisorderModel::Independent, VarianceConvention::PerEntryRadius, 0);
    let a64 = disorder::sample(&d64, &spec(&d64, DisorderModel::Independent, 0)).unwrap();
    let a32 = disorder::sample(&d32, &s32).unwrap();
    let e64 = spectral::eigensolve(&a64, false).unwrap().eigenvalues;
    let e32 = spectral::eigensolve(&a32, false).unwrap().eigenvalues;
    for (a, b) in e64.iter().zip(&e32) {
        assert!((a - *b as f64).abs() < 1e-4, "{a} vs {b}");
    }
}
