//! The five subcommands. Each writes its files through a [`Run`], which
//! records outputs and invariant checks and finally writes the JSON sidecar.

use crate::config::{ConfigError, RunConfig, TierChoice};
use crate::plot::{self, Series, Style};
use lrquench::disorder::{self, CacheHeader};
use lrquench::dmft;
use lrquench::fidelity;
use lrquench::model;
use lrquench::quench::{self, EnsembleSpec, QuenchTier};
use lrquench::rng::sub_seed;
use lrquench::spectral;
use lrquench::stats;
use lrquench::{
    DOSModel, DisorderSpec, FidelityResult, GreenFunction, MatsubaraGrid, ModelParams, PredictedDOS, QuenchResult,
};
use num_complex::Complex;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Dos,
    Quench,
    Fidelity,
    DmftCheck,
    OracleCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dos => "dos",
            Command::Quench => "quench",
            Command::Fidelity => "fidelity",
            Command::DmftCheck => "dmft-check",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] lrquench::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a text config, or the `config` object of a sidecar written by an
/// earlier run of the same command.
pub fn load_config(path: &Path, command: Command) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    if !text.trim_start().starts_with('{') {
        return Ok(RunConfig::from_text(&text)?);
    }
    let bad = |m: String| CliError::Config(ConfigError(vec![m]));
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(format!("sidecar is not valid JSON: {e}")))?;
    match v.get("command").and_then(Value::as_str) {
        Some(c) if c == command.name() => {}
        other => {
            return Err(bad(format!(
                "sidecar was written by {:?}, not {}",
                other.unwrap_or("?"),
                command.name()
            )))
        }
    }
    let obj = v
        .get("config")
        .and_then(Value::as_object)
        .ok_or_else(|| bad("sidecar has no config object".into()))?;
    let mut pairs = Vec::new();
    for (k, val) in obj {
        let s = val
            .as_str()
            .ok_or_else(|| bad(format!("{k}: sidecar values must be strings")))?;
        pairs.push((k.clone(), s.to_string()));
    }
    Ok(RunConfig::from_pairs(&pairs)?)
}

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub struct Run {
    pub command: Command,
    pub cfg: RunConfig,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub seeds: Vec<u64>,
    pub summary: Vec<(String, String)>,
}

#[derive(Debug)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub sidecar: PathBuf,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl Run {
    pub fn new(command: Command, cfg: RunConfig) -> Self {
        Self {
            command,
            cfg,
            outputs: Vec::new(),
            checks: Vec::new(),
            seeds: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.cfg.out.join(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.summary.push((key.into(), value.into()));
    }

    fn times(&self) -> Vec<f64> {
        quench::time_grid(self.cfg.t_max, self.cfg.n_times)
    }

    pub fn execute(mut self) -> Result<Outcome, CliError> {
        std::fs::create_dir_all(&self.cfg.out).map_err(io_err(&self.cfg.out))?;
        match self.command {
            Command::Dos => self.dos()?,
            Command::Quench => self.quench()?,
            Command::Fidelity => self.fidelity()?,
            Command::DmftCheck => self.dmft_check()?,
            Command::OracleCompare => self.oracle_compare()?,
        }
        let summary: String = self.summary.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let name = format!("{}_summary.txt", self.command.name());
        self.write(&name, &summary)?;
        let config: serde_json::Map<String, Value> = self
            .cfg
            .to_pairs()
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect();
        let sidecar = json!({
            "command": self.command.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "seeds": self.seeds,
            "outputs": self.outputs,
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
        });
        let path = self.cfg.out.join(format!("{}.json", self.command.name()));
        let body = serde_json::to_string_pretty(&sidecar).expect("JSON value serializes") + "\n";
        std::fs::write(&path, body).map_err(io_err(&path))?;
        Ok(Outcome {
            checks: self.checks,
            sidecar: path,
        })
    }

    fn dspec(&self, params: &ModelParams, k: u64) -> DisorderSpec {
        DisorderSpec::from_params(params, self.cfg.model, self.cfg.convention, k)
    }

    fn dos(&mut self) -> Result<(), CliError> {
        let params = self.cfg.params.clone();
        let predicted = prediction(&params);
        if params.sigma == 0.0 {
            eprintln!("warning: sigma = 0 gives a degenerate bulk; no semicircle comparison");
            self.note("warning", "degenerate bulk (sigma = 0), comparison skipped");
        } else if params.alpha >= 1.0 {
            self.note("prediction", "semicircle only (alpha >= 1 has no outlier formula)");
        }
        let mut csv = String::from("realization,index,lambda\n");
        let mut pooled = Vec::new();
        for k in 0..self.cfg.n_realizations {
            let spec = self.dspec(&params, k);
            let m = disorder::sample(&params, &spec)?;
            if self.cfg.write_cache {
                let header = CacheHeader {
                    l: params.l as u32,
                    model: self.cfg.model,
                    seed: params.seed,
                    realization_index: k,
                };
                let mut buf = Vec::new();
                disorder::write_matrix_cache(&mut buf, &header, &m)?;
                let path = self.cfg.out.join(format!("matrix_r{k}.bin"));
                std::fs::write(&path, buf).map_err(io_err(&path))?;
                self.outputs.push(format!("matrix_r{k}.bin"));
            }
            let sr = spectral::eigensolve_tagged(&m, false, Some((params.seed, k)))?;
            self.seeds.push(sub_seed(params.seed, k));
            let sorted = sr.eigenvalues.windows(2).all(|w| w[0] <= w[1]);
            self.check(
                format!("r{k}.spectrum"),
                sr.len() == params.l && sorted && sr.eigenvalues.iter().all(|x| x.is_finite()),
                format!("{} finite ascending eigenvalues", sr.len()),
            );
            for (i, x) in sr.eigenvalues.iter().enumerate() {
                let _ = writeln!(csv, "{k},{i},{}", fmt(*x));
            }
            if let Some(pred) = &predicted {
                let report = spectral::compare_spectrum(&sr, pred, self.cfg.margin);
                let mut text = format!("l = {}\nalpha = {:?}\nrealization = {k}\n", params.l, params.alpha);
                text.push_str(&report.to_kv_text());
                self.write(&format!("report_r{k}.txt"), &text)?;
                self.write(&format!("outliers_r{k}.csv"), &report.outliers_csv())?;
                if let Some(ks) = report.ks_bulk {
                    self.note(format!("r{k}.ks_bulk"), fmt(ks));
                }
                self.note(format!("r{k}.mismatch"), report.mismatch.to_string());
            }
            pooled.extend(sr.eigenvalues.iter().map(|x| x - params.mu));
        }
        self.write("eigenvalues.csv", &csv)?;
        self.dos_plot(&pooled, predicted.as_ref())
    }

    fn dos_plot(&mut self, pooled: &[f64], predicted: Option<&PredictedDOS>) -> Result<(), CliError> {
        let j = self.cfg.params.bulk_j();
        let edge = if j > 0.0 {
            2.0 * j + self.cfg.margin
        } else {
            f64::INFINITY
        };
        let bulk: Vec<f64> = pooled.iter().copied().filter(|x| x.abs() <= edge).collect();
        let mut series = Vec::new();
        if bulk.len() > 1 {
            let (lo, hi) = bulk
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let width = spectral::freedman_diaconis_width(&bulk)
                .max((hi - lo) / 200.0)
                .max(1e-12);
            let frac = bulk.len() as f64 / pooled.len() as f64;
            let h = spectral::histogram(&bulk, lo, hi + width * 1e-9, width);
            series.push(Series {
                label: "bulk histogram".into(),
                points: h.iter().map(|&(x, d)| (x, d * frac)).collect(),
                style: Style::Bars,
            });
        }
        if j > 0.0 {
            let pts = (0..=200).map(|k| {
                let x = -2.0 * j + 4.0 * j * k as f64 / 200.0;
                (x, spectral::semicircle_density(x, j))
            });
            series.push(Series {
                label: "semicircle".into(),
                points: pts.collect(),
                style: Style::Line,
            });
        }
        if let Some(p) = predicted {
            if !p.outliers.is_empty() {
                series.push(Series {
                    label: "predicted outliers".into(),
                    points: p.outliers.iter().map(|o| (o.1, 0.0)).collect(),
                    style: Style::Marks,
                });
            }
        }
        let svg = plot::render(
            &format!("Density of states, L = {}", self.cfg.params.l),
            "lambda - mu",
            "density",
            &series,
        );
        self.write("dos.svg", &svg)
    }

    fn quench(&mut self) -> Result<(), CliError> {
        let times = self.times();
        let mut series = Vec::new();
        for &l in &self.cfg.l_sweep.clone() {
            let params = ModelParams {
                l,
                ..self.cfg.params.clone()
            };
            let r = self.quench_one(&params, &times)?;
            self.seeds.extend(&r.seeds);
            let finite = r.values.iter().chain(&r.stderr).all(|x| x.is_finite());
            self.check(
                format!("L{l}.d0"),
                r.values[0] == r.reference_value,
                format!("d(0) = {}", fmt(r.values[0])),
            );
            self.check(format!("L{l}.finite"), finite, "values and standard errors finite");
            if params.u == 0.0 {
                self.check(
                    format!("L{l}.flat"),
                    r.values.iter().all(|&v| v == r.reference_value),
                    "U = 0 leaves d(t) constant",
                );
            }
            self.note(format!("L{l}.reference_value"), fmt(r.reference_value));
            self.note(format!("L{l}.plateau"), r.plateau.map_or("undefined".into(), fmt));
            self.note(format!("L{l}.secular"), r.secular.to_string());
            self.note(format!("L{l}.late_std"), fmt(late_std(&r, self.cfg.t_max / 2.0)));
            self.write(&format!("quench_L{l}.csv"), &r.to_csv())?;
            series.push(Series {
                label: format!("L = {l}"),
                points: r
                    .times
                    .iter()
                    .zip(&r.values)
                    .map(|(&t, &d)| (t, d / l as f64))
                    .collect(),
                style: Style::Line,
            });
        }
        let svg = plot::render(
            &format!("Double occupancy, U = {}", self.cfg.params.u),
            "t",
            "d(t) / L",
            &series,
        );
        self.write("quench.svg", &svg)
    }

    fn quench_one(&mut self, params: &ModelParams, times: &[f64]) -> Result<QuenchResult, CliError> {
        let l = params.l;
        if params.sigma == 0.0 && matches!(self.cfg.tier, TierChoice::Auto) {
            let spec = quench::jomega_momentum_clean(params, &model::dispersion(params)?, l / 2)?;
            let mut r = quench::evolve_observable(&spec, params.u, times)?;
            r.params = Some(params.clone());
            self.note(format!("L{l}.tier"), "momentum");
            return Ok(r);
        }
        let tier = match self.cfg.tier {
            TierChoice::Auto if l <= 128 => QuenchTier::Exact,
            TierChoice::Auto => QuenchTier::Averaged,
            TierChoice::Exact => QuenchTier::Exact,
            TierChoice::Averaged => QuenchTier::Averaged,
            TierChoice::SecondOrder => QuenchTier::SecondOrder,
        };
        self.note(format!("L{l}.tier"), format!("{tier:?}").to_lowercase());
        let spec = EnsembleSpec {
            model: self.cfg.model,
            convention: self.cfg.convention,
            n_realizations: self.cfg.n_realizations,
            tier,
        };
        Ok(quench::ensemble_quench(params, &spec, times)?)
    }

    fn fidelity(&mut self) -> Result<(), CliError> {
        let times = self.times();
        let mut series = Vec::new();
        for &l in &self.cfg.l_sweep.clone() {
            let params = ModelParams {
                l,
                ..self.cfg.params.clone()
            };
            let (model, conv) = (self.cfg.model, self.cfg.convention);
            let runs: Vec<FidelityResult> = fidelity::ensemble_fidelity(
                &params,
                |k| DisorderSpec::from_params(&params, model, conv, k),
                self.cfg.n_realizations,
                self.cfg.coeffs,
                &times,
            )?;
            let mut mean = vec![0.0; times.len()];
            for (k, r) in runs.iter().enumerate() {
                self.seeds.extend(&r.seeds);
                let min_raw = r.infidelity.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                self.check(
                    format!("L{l}.r{k}.f0"),
                    r.values[0] == 1.0,
                    format!("F(0) = {}", fmt(r.values[0])),
                );
                self.check(
                    format!("L{l}.r{k}.nonneg"),
                    min_raw >= -1e-10,
                    format!("min raw 1 - F = {}", fmt(min_raw)),
                );
                self.note(format!("L{l}.r{k}.max_infidelity"), fmt(r.max_infidelity()));
                if r.trivial {
                    self.note(format!("L{l}.r{k}.trivial"), "true");
                }
                self.write(&format!("fidelity_L{l}_r{k}.csv"), &r.to_csv())?;
                for (m, v) in mean.iter_mut().zip(&r.values) {
                    *m += v;
                }
            }
            let n = runs.len() as f64;
            let mut csv = String::from("t,F\n");
            for (t, m) in times.iter().zip(&mean) {
                let _ = writeln!(csv, "{},{}", fmt(*t), fmt(m / n));
            }
            self.write(&format!("fidelity_L{l}.csv"), &csv)?;
            series.push(Series {
                label: format!("L = {l}"),
                points: times.iter().zip(&mean).map(|(&t, &m)| (t, m / n)).collect(),
                style: Style::Line,
            });
        }
        let svg = plot::render("Fidelity, realization mean", "t", "F(t)", &series);
        self.write("fidelity.svg", &svg)
    }

    fn dmft_check(&mut self) -> Result<(), CliError> {
        let xi = Complex::new(self.cfg.xi.0, self.cfg.xi.1);
        let fits = dmft::correction_scaling(xi, &self.cfg.n_list)?;
        let mut csv = String::from("model,N,magnitude\n");
        let mut series = Vec::new();
        println!("{:<14} {:>10}", "model", "exponent");
        for f in &fits {
            for (n, m) in f.ns.iter().zip(&f.magnitudes) {
                let _ = writeln!(csv, "{},{n},{}", f.label, fmt(*m));
            }
            println!("{:<14} {:>10.4}", f.label, f.exponent);
            self.note(format!("{}.exponent", f.label), fmt(f.exponent));
            self.check(
                format!("{}.exponent", f.label),
                (f.exponent + 1.0).abs() <= 0.1,
                format!("fitted power {:.4}", f.exponent),
            );
            series.push(Series {
                label: f.label.into(),
                points: f
                    .ns
                    .iter()
                    .zip(&f.magnitudes)
                    .map(|(&n, &m)| ((n as f64).log2(), m.log2()))
                    .collect(),
                style: Style::Line,
            });
        }
        self.write("dmft_scaling.csv", &csv)?;
        let rt = dmft::reciprocal_round_trip(self.cfg.n_points, self.cfg.xi.0)?;
        println!("round trip max deviation {rt:.3e}");
        self.note("round_trip_max", fmt(rt));
        self.check("round_trip", rt <= 1e-8, format!("max |R[rho(xi)] - xi| = {rt:.3e}"));
        let grid = MatsubaraGrid::new(self.cfg.beta, self.cfg.n_matsubara)?;
        let g = GreenFunction::local(
            &grid,
            &DOSModel::Semicircle { j: self.cfg.params.j },
            self.cfg.params.mu,
        )?;
        self.check("semicircle_g.causal", g.is_causal(), "Im G < 0 on the Matsubara axis");
        self.write("green_semicircle.csv", &g.to_csv())?;
        let svg = plot::render("Weiss-field corrections", "log2 N", "log2 |correction|", &series);
        self.write("dmft_scaling.svg", &svg)
    }

    fn oracle_compare(&mut self) -> Result<(), CliError> {
        let times = self.times();
        let params = ModelParams {
            l: self.cfg.oracle_l,
            ..self.cfg.params.clone()
        };
        let m = disorder::sample(&params, &self.dspec(&params, 0))?;
        if params.sigma > 0.0 {
            self.seeds.push(sub_seed(params.seed, 0));
        }
        let mut rows = Vec::new();
        for &u in &self.cfg.u_list {
            rows.push((u, quench::second_order::oracle_max_deviation(&m, u, &times)?));
        }
        let mut csv = String::from("u,max_error,ratio_to_next\n");
        println!("{:>10} {:>14} {:>10}", "U", "max error", "ratio");
        for (k, &(u, e)) in rows.iter().enumerate() {
            let ratio = rows.get(k + 1).map(|&(_, next)| e / next);
            let _ = writeln!(csv, "{},{},{}", fmt(u), fmt(e), ratio.map_or(String::new(), fmt));
            println!(
                "{u:>10.4} {e:>14.4e} {:>10}",
                ratio.map_or("-".into(), |r| format!("{r:.3}"))
            );
            if let (Some(r), Some(&(un, _))) = (ratio, rows.get(k + 1)) {
                if (u / un - 2.0).abs() < 1e-12 {
                    self.check(
                        format!("halving_{u}"),
                        r >= 6.0,
                        format!("error ratio {r:.3} when U halves"),
                    );
                }
            }
        }
        self.write("oracle_compare.csv", &csv)?;
        let series = vec![Series {
            label: "max |d_UPT - d_ED|".into(),
            points: rows.iter().map(|&(u, e)| (u.log2(), e.log2())).collect(),
            style: Style::Line,
        }];
        let svg = plot::render(
            &format!("Order check, L = {}", params.l),
            "log2 U",
            "log2 error",
            &series,
        );
        self.write("oracle_compare.svg", &svg)
    }
}

/// Predicted density for the comparison; semicircle only when the outlier
/// formula does not apply, nothing without disorder.
fn prediction(params: &ModelParams) -> Option<PredictedDOS> {
    if params.bulk_j() <= 0.0 {
        return None;
    }
    if params.alpha < 1.0 {
        if let Ok(p) = model::dispersion(params).and_then(|t| spectral::predicted_dos(params, &t)) {
            return Some(p);
        }
    }
    Some(PredictedDOS {
        j: params.bulk_j(),
        center: params.mu,
        outliers: Vec::new(),
        epsilon_star: 0.0,
    })
}

/// Standard deviation of `d(t)` over `t >= t_from`.
pub fn late_std(r: &QuenchResult, t_from: f64) -> f64 {
    let v: Vec<f64> = r
        .times
        .iter()
        .zip(&r.values)
        .filter(|(t, _)| **t >= t_from)
        .map(|(_, v)| *v)
        .collect();
    if v.len() < 2 {
        0.0
    } else {
        stats::std_dev(&v)
    }
}
