//! Seeded disordered hopping matrices.
//!
//! Both samplers add zero-mean Gaussian noise to the clean circulant of
//! [`build_clean_hopping_matrix`](crate::model::build_clean_hopping_matrix), so
//! `sigma = 0` reproduces it bit for bit. `Circulant` draws one amplitude per
//! distance (translation invariant), `Independent` one per unordered pair.

use crate::model::{kac_factor, ModelParams};
use crate::rng::CounterRng;
use crate::{Error, Real, Result};
use nalgebra::DMatrix;
use std::io::{Read, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisorderModel {
    Circulant,
    Independent,
}

impl DisorderModel {
    pub fn code(self) -> u32 {
        match self {
            DisorderModel::Circulant => 0,
            DisorderModel::Independent => 1,
        }
    }

    pub fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(DisorderModel::Circulant),
            1 => Some(DisorderModel::Independent),
            _ => None,
        }
    }
}

/// How the per-entry standard deviation follows from `J` and `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VarianceConvention {
    /// `sigma * J / sqrt(L)`: semicircle of radius `2 sigma J`. Normative.
    #[default]
    PerEntryRadius,
    /// `sigma * J / L`, the main-text reading. Its bulk radius is
    /// `2 sigma J / sqrt(L)`, which contradicts the predicted density of states;
    /// kept only for comparison runs.
    MainText,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisorderSpec<T> {
    pub model: DisorderModel,
    pub entry_sigma: T,
    pub seed: u64,
    pub realization_index: u64,
}

impl<T: Real> DisorderSpec<T> {
    pub fn from_params(
        params: &ModelParams<T>,
        model: DisorderModel,
        convention: VarianceConvention,
        realization_index: u64,
    ) -> Self {
        let l = T::from_usize_(params.l);
        let scale = match convention {
            VarianceConvention::PerEntryRadius => l.sqrt(),
            VarianceConvention::MainText => l,
        };
        Self {
            model,
            entry_sigma: params.sigma * params.j / scale,
            seed: params.seed,
            realization_index,
        }
    }

    pub fn rng(&self) -> CounterRng {
        CounterRng::for_realization(self.seed, self.realization_index)
    }
}

pub fn periodic_distance(i: usize, j: usize, l: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(l - d)
}

pub fn sample_circulant<T: Real>(params: &ModelParams<T>, spec: &DisorderSpec<T>) -> Result<DMatrix<T>> {
    if spec.model != DisorderModel::Circulant {
        return Err(Error::InvalidParams("sample_circulant needs model = circulant".into()));
    }
    let mut m = crate::model::build_clean_hopping_matrix(params)?;
    if spec.entry_sigma == T::zero() {
        return Ok(m);
    }
    let l = params.l;
    let mut rng = spec.rng();
    // t_r = mean_r + noise_r and entry = -t_r, so the noise enters with a sign
    // flip that is irrelevant for a symmetric distribution but kept literal.
    let noise: Vec<T> = (0..=l / 2)
        .map(|r| {
            if r == 0 {
                T::zero()
            } else {
                -spec.entry_sigma * T::lit(rng.normal())
            }
        })
        .collect();
    for i in 0..l {
        for j in 0..l {
            if i != j {
                m[(i, j)] += noise[periodic_distance(i, j, l)];
            }
        }
    }
    Ok(m)
}

pub fn sample_independent<T: Real>(params: &ModelParams<T>, spec: &DisorderSpec<T>) -> Result<DMatrix<T>> {
    if spec.model != DisorderModel::Independent {
        return Err(Error::InvalidParams(
            "sample_independent needs model = independent".into(),
        ));
    }
    let mut m = crate::model::build_clean_hopping_matrix(params)?;
    if spec.entry_sigma == T::zero() {
        return Ok(m);
    }
    let l = params.l;
    let mut rng = spec.rng();
    // Upper triangle row by row; each draw is mirrored so symmetry is exact.
    for i in 0..l {
        for j in (i + 1)..l {
            let x = m[(i, j)] + spec.entry_sigma * T::lit(rng.normal());
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    Ok(m)
}

pub fn sample<T: Real>(params: &ModelParams<T>, spec: &DisorderSpec<T>) -> Result<DMatrix<T>> {
    match spec.model {
        DisorderModel::Circulant => sample_circulant(params, spec),
        DisorderModel::Independent => sample_independent(params, spec),
    }
}

/// Mean entry at distance `r`, i.e. the clean matrix element.
pub fn mean_entry<T: Real>(params: &ModelParams<T>, r: usize) -> Result<T> {
    let c = kac_factor(params.alpha, params.l, params.kac)?;
    Ok(crate::model::clean_entry(params, c, r))
}

/// Matrix cache layout (all integers little-endian):
///
/// | offset | size | field                                   |
/// |--------|------|-----------------------------------------|
/// | 0      | 4    | magic `b"LRQM"`                         |
/// | 4      | 4    | L as u32                                |
/// | 8      | 4    | model: 0 = circulant, 1 = independent   |
/// | 12     | 8    | seed as u64                             |
/// | 20     | 8    | realization_index as u64                |
/// | 28     | 4    | format version, currently 1             |
/// | 32     | 8L²  | entries as f64, row-major               |
pub const CACHE_MAGIC: [u8; 4] = *b"LRQM";
pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheHeader {
    pub l: u32,
    pub model: DisorderModel,
    pub seed: u64,
    pub realization_index: u64,
}

pub fn write_matrix_cache<W: Write>(mut w: W, header: &CacheHeader, m: &DMatrix<f64>) -> Result<()> {
    let l = header.l as usize;
    if m.nrows() != l || m.ncols() != l {
        return Err(Error::Shape(format!(
            "header L = {l}, matrix {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut buf = Vec::with_capacity(32 + 8 * l * l);
    buf.extend_from_slice(&CACHE_MAGIC);
    buf.extend_from_slice(&header.l.to_le_bytes());
    buf.extend_from_slice(&header.model.code().to_le_bytes());
    buf.extend_from_slice(&header.seed.to_le_bytes());
    buf.extend_from_slice(&header.realization_index.to_le_bytes());
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    for i in 0..l {
        for j in 0..l {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix_cache<R: Read>(mut r: R) -> Result<(CacheHeader, DMatrix<f64>)> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    if head[0..4] != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    if u32_at(28) != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {}", u32_at(28))));
    }
    let model =
        DisorderModel::from_code(u32_at(8)).ok_or_else(|| Error::Cache(format!("unknown model code {}", u32_at(8))))?;
    let header = CacheHeader {
        l: u32_at(4),
        model,
        seed: u64_at(12),
        realization_index: u64_at(20),
    };
    let l = header.l as usize;
    let mut body = vec![0u8; 8 * l * l];
    r.read_exact(&mut body)?;
    let m = DMatrix::from_fn(l, l, |i, j| {
        let o = 8 * (i * l + j);
        f64::from_le_bytes(body[o..o + 8].try_into().unwrap())
    });
    Ok((header, m))
}
