//! Acceptance criteria 1-10 at their pinned tolerances. Runs without the test
//! harness so the PASS/FAIL lines always reach the output.
//!
//! Criteria listed in `KNOWN_RED` are expected to fail for reasons recorded in
//! the decisions ledger; the run fails if any criterion's outcome differs
//! from the expectation in either direction.

use lrquench::disorder::{self, DisorderModel, DisorderSpec, VarianceConvention};
use lrquench::fidelity::{self, Coefficients, SpectrumPair};
use lrquench::model::{self, ModelParams};
use lrquench::quench::{self, averaged, second_order, EnsembleSpec, QuenchResult, QuenchTier};
use lrquench::spectral;
use lrquench::stats;
use num_complex::Complex;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

const KNOWN_RED: &[u32] = &[1, 4, 6, 7];

type Outcome = (bool, String);

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn indep(p: &ModelParams<f64>, k: u64) -> DisorderSpec<f64> {
    DisorderSpec::from_params(p, DisorderModel::Independent, VarianceConvention::PerEntryRadius, k)
}

fn spectrum_report(p: &ModelParams<f64>) -> spectral::ComparisonReport {
    let m = disorder::sample(p, &indep(p, 0)).unwrap();
    let sr = spectral::eigensolve(&m, false).unwrap();
    let pred = if p.alpha < 1.0 {
        spectral::predicted_dos(p, &model::dispersion(p).unwrap()).unwrap()
    } else {
        spectral::PredictedDOS {
            j: p.bulk_j(),
            center: p.mu,
            outliers: Vec::new(),
            epsilon_star: 0.0,
        }
    };
    spectral::compare_spectrum(&sr, &pred, 0.05)
}

fn c1() -> Outcome {
    let start = Instant::now();
    let p = ModelParams {
        sigma: 1.0,
        m_alpha: -4.0 * PI,
        seed: 1,
        ..ModelParams::new(1024)
    };
    let r = spectrum_report(&p);
    let secs = start.elapsed().as_secs_f64();
    let ks = r.ks_bulk.unwrap_or(f64::INFINITY);
    let matched = r.unmatched_predicted == 0 && r.all_matched_within(0.01);
    let detail = format!(
        "KS {ks:.4} (< 0.03), {} predicted, {} unmatched, max rel err {:.4} (<= 0.01), {secs:.1} s",
        r.matches.len(),
        r.unmatched_predicted,
        r.max_rel_error.unwrap_or(f64::NAN)
    );
    (ks < 0.03 && matched && secs < 180.0, detail)
}

fn c2() -> Outcome {
    let p = ModelParams {
        alpha: 1.5,
        kac: false,
        sigma: 1.0,
        m_alpha: -4.0 * PI,
        seed: 1,
        ..ModelParams::new(1024)
    };
    let ks = spectrum_report(&p).ks_bulk.unwrap_or(f64::INFINITY);
    (ks > 0.1, format!("KS {ks:.4} (> 0.1)"))
}

fn c3() -> Outcome {
    let start = Instant::now();
    let t = quench::time_grid(10.0, 512);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for l in [64usize, 256, 1024] {
        let p: ModelParams<f64> = ModelParams {
            alpha: 0.0,
            m_alpha: 1.0,
            u: 2.0,
            ..ModelParams::new(l)
        };
        let s = quench::jomega_momentum_clean(&p, &model::dispersion(&p).unwrap(), l / 2).unwrap();
        let r = quench::evolve_observable(&s, p.u, &t).unwrap();
        let dev = r
            .values
            .iter()
            .map(|v| (v - r.reference_value).abs())
            .fold(0.0, f64::max)
            / r.reference_value;
        xs.push(l as f64);
        ys.push(dev);
    }
    let slope = stats::power_law_exponent(&xs, &ys);
    let decreasing = ys.windows(2).all(|w| w[1] < w[0]);
    let secs = start.elapsed().as_secs_f64();
    (
        decreasing && (slope + 1.0).abs() <= 0.3 && secs < 300.0,
        format!("deviations [{}], power {slope:.3} (-1 +- 0.3), {secs:.1} s", sci(&ys)),
    )
}

fn c4() -> Outcome {
    let p = ModelParams {
        sigma: 1.0,
        m_alpha: 0.0,
        seed: 4,
        ..ModelParams::new(512)
    };
    let m = disorder::sample(&p, &indep(&p, 0)).unwrap();
    let eps = spectral::eigensolve(&m, false).unwrap().eigenvalues;
    let t = quench::time_grid(10.0, 16);
    let plateaus: Vec<f64> = [0.5, 1.0, 1.5]
        .iter()
        .map(|&u| averaged::averaged_quench(&eps, 256, u, &t).unwrap().plateau.unwrap())
        .collect();
    let d0 = averaged::averaged_reference::<f64>(512, 256);
    let drops: Vec<f64> = plateaus.iter().map(|pl| d0 - pl).collect();
    let (r1, r3) = (drops[0] / drops[1], drops[2] / drops[1]);
    let decreasing = plateaus.windows(2).all(|w| w[1] < w[0]);
    let ok = decreasing && (r1 - 0.25).abs() <= 1e-10 && (r3 - 2.25).abs() <= 1e-10;
    (
        ok,
        format!("plateaus decreasing {decreasing}, drop ratios {r1:.12} : 1 : {r3:.12} (0.25 : 1 : 2.25 +- 1e-10)"),
    )
}

fn late_std(r: &QuenchResult<f64>) -> f64 {
    let v: Vec<f64> = r
        .times
        .iter()
        .zip(&r.values)
        .filter(|(t, _)| **t >= 5.0)
        .map(|(_, v)| *v)
        .collect();
    stats::std_dev(&v)
}

fn crossover_params(l: usize, kac: bool) -> ModelParams<f64> {
    ModelParams {
        sigma: 1.0,
        m_alpha: -4.0 * PI,
        u: 1.0,
        kac,
        seed: 11,
        ..ModelParams::new(l)
    }
}

fn c5() -> Outcome {
    let t = quench::time_grid(10.0, 512);
    let stds: Vec<f64> = [8usize, 64, 512]
        .iter()
        .map(|&l| {
            let tier = if l <= 128 {
                QuenchTier::Exact
            } else {
                QuenchTier::Averaged
            };
            let spec = EnsembleSpec {
                model: DisorderModel::Independent,
                convention: VarianceConvention::PerEntryRadius,
                n_realizations: 8,
                tier,
            };
            late_std(&quench::ensemble_quench(&crossover_params(l, true), &spec, &t).unwrap())
        })
        .collect();
    (
        stds.windows(2).all(|w| w[1] < w[0]),
        format!("late-window std of d [{}], strictly decreasing required", sci(&stds)),
    )
}

fn c6() -> Outcome {
    let t = quench::time_grid(10.0, 512);
    let spec = EnsembleSpec {
        model: DisorderModel::Independent,
        convention: VarianceConvention::PerEntryRadius,
        n_realizations: 1,
        tier: QuenchTier::Exact,
    };
    let on = quench::single_quench(&crossover_params(64, true), &spec, 0, &t).unwrap();
    let off = quench::single_quench(&crossover_params(64, false), &spec, 0, &t).unwrap();
    let r = stats::pearson(
        &stats::affine_normalize(&on.values),
        &stats::affine_normalize(&off.values),
    );
    (r > 0.9, format!("Pearson {r:.4} (> 0.9)"))
}

fn c7() -> Outcome {
    let t = quench::time_grid(10.0, 201);
    let mut good = 0;
    let mut rows = Vec::new();
    for k in 0..4u64 {
        let maxima: Vec<f64> = [8usize, 64, 512]
            .iter()
            .map(|&l| {
                let p = ModelParams {
                    sigma: 1.0,
                    m_alpha: -2.0 * PI,
                    u: 1.0,
                    seed: 5,
                    ..ModelParams::new(l)
                };
                let pair = fidelity::paired_spectra(&p, &indep(&p, k), false).unwrap();
                fidelity::fidelity_series(&pair, Coefficients::Averaged, l / 2, p.u, &t)
                    .unwrap()
                    .max_infidelity()
            })
            .collect();
        if maxima.windows(2).all(|w| w[1] < w[0]) {
            good += 1;
        }
        rows.push(maxima);
    }
    let p = ModelParams {
        sigma: 1.0,
        m_alpha: -2.0 * PI,
        u: 1.0,
        seed: 5,
        ..ModelParams::new(64)
    };
    let pair = fidelity::paired_spectra(&p, &indep(&p, 0), false).unwrap();
    let f0 = fidelity::fidelity_series(&pair, Coefficients::Averaged, 32, 1.0, &t)
        .unwrap()
        .values[0]
        == 1.0;
    let same = SpectrumPair::new(pair.eps.clone(), pair.eps.clone(), None).unwrap();
    let flat = fidelity::fidelity_series(&same, Coefficients::Averaged, 32, 1.0, &t)
        .unwrap()
        .values
        .iter()
        .all(|&f| f == 1.0);
    (good >= 3 && f0 && flat, format!("{good}/4 realizations decreasing (need 3), max(1-F) {rows:.3?}, F(0) = 1: {f0}, identical spectra give F = 1: {flat}"))
}

fn c8() -> Outcome {
    let a = model::build_clean_hopping_matrix(&ModelParams {
        m_alpha: 1.0,
        ..ModelParams::new(4)
    })
    .unwrap();
    let t = quench::time_grid(10.0, 201);
    let e1 = second_order::oracle_max_deviation(&a, 0.1, &t).unwrap();
    let e2 = second_order::oracle_max_deviation(&a, 0.05, &t).unwrap();
    (
        e1 / e2 >= 6.0,
        format!("errors {e1:.3e} / {e2:.3e}, ratio {:.3} (>= 6)", e1 / e2),
    )
}

fn c9() -> Outcome {
    let ns: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
    let fits = lrquench::dmft::correction_scaling(Complex::new(0.1, 0.8), &ns).unwrap();
    let rt = lrquench::dmft::reciprocal_round_trip(50, 0.1).unwrap();
    let ok = fits.iter().all(|f| (f.exponent + 1.0).abs() <= 0.1) && rt <= 1e-8;
    let ex: Vec<String> = fits.iter().map(|f| format!("{} {:.4}", f.label, f.exponent)).collect();
    (
        ok,
        format!(
            "exponents [{}] (-1 +- 0.1), round trip {rt:.2e} (<= 1e-8)",
            ex.join(", ")
        ),
    )
}

fn c10() -> Outcome {
    let mut z = fidelity::sample_unit_vector_component(1024, 100_000, 10).unwrap();
    let ks = stats::ks_distance(&mut z, fidelity::porter_thomas_cdf);
    (ks < 0.01, format!("KS {ks:.4} (< 0.01)"))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "DOS reproduction", c1),
        (2, "DOS non-reproduction at alpha = 1.5", c2),
        (3, "clean freezing", c3),
        (4, "disordered relaxation, quadratic drops", c4),
        (5, "recurrence-to-dephasing crossover", c5),
        (6, "Kac on/off shape", c6),
        (7, "fidelity shielding", c7),
        (8, "perturbation theory vs exact diagonalization", c8),
        (9, "DMFT 1/N corrections", c9),
        (10, "Porter-Thomas law", c10),
    ];
    let mut unexpected = Vec::new();
    for (n, name, f) in criteria {
        let (pass, detail) = f();
        let expected = !KNOWN_RED.contains(&n);
        let tag = match (pass, expected) {
            (true, _) => "PASS",
            (false, false) => "FAIL (known, see ledger)",
            (false, true) => "FAIL",
        };
        println!("criterion {n:>2} {tag}: {name}: {detail}");
        if pass != expected {
            unexpected.push(n);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: outcomes match expectations");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
