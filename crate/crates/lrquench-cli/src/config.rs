//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, lists are comma separated.
//! Floats accept a trailing `pi` factor (`-4pi`, `2*pi`, `pi`). Absent keys
//! take the defaults in [`KEYS`]; unknown or repeated keys are errors.

use lrquench::disorder::{DisorderModel, VarianceConvention};
use lrquench::fidelity::Coefficients;
use lrquench::ModelParams;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Every accepted key with its default, in echo order.
pub const KEYS: &[(&str, &str)] = &[
    ("l", "64"),
    ("alpha", "0.5"),
    ("m_alpha", "1"),
    ("j", "1"),
    ("sigma", "0"),
    ("u", "1"),
    ("mu", "0"),
    ("kac", "true"),
    ("seed", "0"),
    ("model", "independent"),
    ("convention", "per_entry_radius"),
    ("n_realizations", "1"),
    ("t_max", "10"),
    ("n_times", "512"),
    ("l_sweep", ""),
    ("tier", "auto"),
    ("coeffs", "averaged"),
    ("workers", "0"),
    ("out", "out"),
    ("margin", "0.05"),
    ("write_cache", "false"),
    ("oracle_l", "4"),
    ("u_list", "0.1, 0.05, 0.025"),
    ("n_list", "16, 32, 64, 128, 256, 512, 1024, 2048, 4096"),
    ("xi", "0.1, 0.8"),
    ("n_points", "50"),
    ("beta", "64"),
    ("n_matsubara", "512"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TierChoice {
    /// Momentum path when clean, exact enumeration up to `L = 128`, averaged beyond.
    Auto,
    Exact,
    Averaged,
    SecondOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub model: DisorderModel,
    pub convention: VarianceConvention,
    pub n_realizations: u64,
    pub t_max: f64,
    pub n_times: usize,
    pub l_sweep: Vec<usize>,
    pub tier: TierChoice,
    pub coeffs: Coefficients,
    /// Zero means every available core.
    pub workers: usize,
    pub out: PathBuf,
    pub margin: f64,
    pub write_cache: bool,
    pub oracle_l: usize,
    pub u_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub xi: (f64, f64),
    pub n_points: usize,
    pub beta: f64,
    pub n_matsubara: usize,
}

pub fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    let (head, pi) = match s.strip_suffix("pi") {
        Some(h) => (h.trim().trim_end_matches('*').trim(), true),
        None => (s, false),
    };
    let x = match head {
        "" if pi => 1.0,
        "-" if pi => -1.0,
        "+" if pi => 1.0,
        _ => head.parse::<f64>().ok()?,
    };
    let x = if pi { x * std::f64::consts::PI } else { x };
    x.is_finite().then_some(x)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "true" | "on" | "yes" | "1" => Some(true),
        "false" | "off" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

/// Parses the text grammar into raw pairs, rejecting malformed lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut errs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => out.push((k.trim().to_string(), v.trim().to_string())),
            _ => errs.push(format!("line {}: expected `key = value`, got `{}`", n + 1, raw.trim())),
        }
    }
    if errs.is_empty() {
        Ok(out)
    } else {
        Err(ConfigError(errs))
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// Builds a config from explicit pairs; every bad key is reported.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut errs = Vec::new();
        let mut given: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in pairs {
            if !KEYS.iter().any(|(name, _)| name == k) {
                errs.push(format!("{k}: unknown key"));
            } else if given.insert(k.as_str(), v.as_str()).is_some() {
                errs.push(format!("{k}: given more than once"));
            }
        }
        let get = |k: &str| -> &str {
            given
                .get(k)
                .copied()
                .unwrap_or_else(|| KEYS.iter().find(|(n, _)| *n == k).map(|(_, d)| *d).unwrap())
        };
        let mut float = |k: &str| {
            parse_float(get(k)).unwrap_or_else(|| {
                errs.push(format!("{k}: `{}` is not a number", get(k)));
                0.0
            })
        };
        let (alpha, m_alpha, j, sigma, u, mu, t_max, margin, beta) = (
            float("alpha"),
            float("m_alpha"),
            float("j"),
            float("sigma"),
            float("u"),
            float("mu"),
            float("t_max"),
            float("margin"),
            float("beta"),
        );
        let mut uint = |k: &str| {
            get(k).trim().parse::<u64>().unwrap_or_else(|_| {
                errs.push(format!("{k}: `{}` is not a non-negative integer", get(k)));
                0
            })
        };
        let (l, seed, n_realizations, n_times, workers, oracle_l, n_points, n_matsubara) = (
            uint("l") as usize,
            uint("seed"),
            uint("n_realizations"),
            uint("n_times") as usize,
            uint("workers") as usize,
            uint("oracle_l") as usize,
            uint("n_points") as usize,
            uint("n_matsubara") as usize,
        );
        let mut boolean = |k: &str| {
            parse_bool(get(k)).unwrap_or_else(|| {
                errs.push(format!("{k}: `{}` is not true/false", get(k)));
                false
            })
        };
        let (kac, write_cache) = (boolean("kac"), boolean("write_cache"));
        let model = match get("model") {
            "independent" => DisorderModel::Independent,
            "circulant" => DisorderModel::Circulant,
            v => {
                errs.push(format!("model: `{v}` is not independent or circulant"));
                DisorderModel::Independent
            }
        };
        let convention = match get("convention") {
            "per_entry_radius" => VarianceConvention::PerEntryRadius,
            "main_text" => VarianceConvention::MainText,
            v => {
                errs.push(format!("convention: `{v}` is not per_entry_radius or main_text"));
                VarianceConvention::PerEntryRadius
            }
        };
        let tier = match get("tier") {
            "auto" => TierChoice::Auto,
            "exact" => TierChoice::Exact,
            "averaged" => TierChoice::Averaged,
            "second_order" => TierChoice::SecondOrder,
            v => {
                errs.push(format!("tier: `{v}` is not auto, exact, averaged or second_order"));
                TierChoice::Auto
            }
        };
        let coeffs = match get("coeffs") {
            "averaged" => Coefficients::Averaged,
            "explicit" => Coefficients::Explicit,
            v => {
                errs.push(format!("coeffs: `{v}` is not averaged or explicit"));
                Coefficients::Averaged
            }
        };
        let mut usizes = |k: &str| -> Vec<usize> {
            split_list(get(k))
                .into_iter()
                .filter_map(|x| {
                    x.parse::<usize>()
                        .map_err(|_| errs.push(format!("{k}: `{x}` is not a non-negative integer")))
                        .ok()
                })
                .collect()
        };
        let (l_sweep, n_list) = (usizes("l_sweep"), usizes("n_list"));
        let mut floats = |k: &str| -> Vec<f64> {
            split_list(get(k))
                .into_iter()
                .filter_map(|x| {
                    parse_float(x).or_else(|| {
                        errs.push(format!("{k}: `{x}` is not a number"));
                        None
                    })
                })
                .collect()
        };
        let (u_list, xi_list) = (floats("u_list"), floats("xi"));
        let xi = match xi_list[..] {
            [re, im] => (re, im),
            _ => {
                errs.push("xi: expected two numbers `re, im`".into());
                (0.0, 1.0)
            }
        };
        let out = PathBuf::from(get("out"));

        let params = ModelParams {
            l,
            alpha,
            m_alpha,
            j,
            sigma,
            u,
            mu,
            kac,
            seed,
        };
        let mut c = Self {
            params,
            model,
            convention,
            n_realizations,
            t_max,
            n_times,
            l_sweep,
            tier,
            coeffs,
            workers,
            out,
            margin,
            write_cache,
            oracle_l,
            u_list,
            n_list,
            xi,
            n_points,
            beta,
            n_matsubara,
        };
        errs.extend(c.range_errors());
        if c.l_sweep.is_empty() {
            c.l_sweep = vec![c.params.l];
        }
        if errs.is_empty() {
            Ok(c)
        } else {
            Err(ConfigError(errs))
        }
    }

    fn range_errors(&self) -> Vec<String> {
        let mut e = Vec::new();
        if let Err(err) = self.params.validate() {
            e.push(format!("model parameters: {err}"));
        }
        for &l in &self.l_sweep {
            if l < 4 || l % 2 != 0 {
                e.push(format!("l_sweep: L = {l} must be even and >= 4"));
            }
        }
        if self.n_realizations == 0 {
            e.push("n_realizations: must be at least 1".into());
        }
        if !(self.t_max >= 0.0) {
            e.push("t_max: must be >= 0".into());
        }
        if self.n_times < 2 {
            e.push("n_times: must be at least 2".into());
        }
        if !(self.margin >= 0.0) {
            e.push("margin: must be >= 0".into());
        }
        if !(self.beta > 0.0) {
            e.push("beta: must be > 0".into());
        }
        if self.n_matsubara == 0 || self.n_points == 0 {
            e.push("n_matsubara and n_points: must be positive".into());
        }
        if !(4..=8).contains(&self.oracle_l) || !self.oracle_l.is_multiple_of(2) {
            e.push(format!("oracle_l: {} must be 4, 6 or 8", self.oracle_l));
        }
        if self.u_list.is_empty() {
            e.push("u_list: must not be empty".into());
        }
        if self.n_list.len() < 2 || self.n_list.iter().any(|&n| n < 2) {
            e.push("n_list: need at least two values, each >= 2".into());
        }
        e
    }

    /// Canonical echo of every key; parsing it back gives the same config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let join_f = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let join_u = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let vals: Vec<String> = vec![
            p.l.to_string(),
            format!("{:?}", p.alpha),
            format!("{:?}", p.m_alpha),
            format!("{:?}", p.j),
            format!("{:?}", p.sigma),
            format!("{:?}", p.u),
            format!("{:?}", p.mu),
            p.kac.to_string(),
            p.seed.to_string(),
            match self.model {
                DisorderModel::Independent => "independent",
                DisorderModel::Circulant => "circulant",
            }
            .into(),
            match self.convention {
                VarianceConvention::PerEntryRadius => "per_entry_radius",
                VarianceConvention::MainText => "main_text",
            }
            .into(),
            self.n_realizations.to_string(),
            format!("{:?}", self.t_max),
            self.n_times.to_string(),
            join_u(&self.l_sweep),
            match self.tier {
                TierChoice::Auto => "auto",
                TierChoice::Exact => "exact",
                TierChoice::Averaged => "averaged",
                TierChoice::SecondOrder => "second_order",
            }
            .into(),
            match self.coeffs {
                Coefficients::Averaged => "averaged",
                Coefficients::Explicit => "explicit",
            }
            .into(),
            self.workers.to_string(),
            self.out.display().to_string(),
            format!("{:?}", self.margin),
            self.write_cache.to_string(),
            self.oracle_l.to_string(),
            join_f(&self.u_list),
            join_u(&self.n_list),
            join_f(&[self.xi.0, self.xi.1]),
            self.n_points.to_string(),
            format!("{:?}", self.beta),
            self.n_matsubara.to_string(),
        ];
        KEYS.iter().zip(vals).map(|((k, _), v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
