//! Spectra, DMFT relations and second-order quench dynamics of a Fermi-Hubbard
//! chain with power-law hopping and Gaussian disorder.
//!
//! The numerical core is generic over [`Real`] (implemented for `f32` and
//! `f64`). Most callers want the `f64` aliases re-exported at the bottom of
//! this file.

pub mod disorder;
pub mod dmft;
pub mod ed_oracle;
pub mod fidelity;
pub mod model;
pub mod quench;
pub mod rng;
pub mod spectral;
pub mod stats;

mod error;

pub use error::{Error, Result};

use nalgebra as na;
use num_traits as nt;
use std::fmt::{Debug, Display};

/// Scalar type accepted by every numerical routine.
pub trait Real:
    na::RealField + Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + Debug + Display + Send + Sync + 'static
{
    const EPSILON: Self;

    /// Converts an `f64` literal; exact for values representable in `Self`.
    fn lit(x: f64) -> Self;

    fn from_usize_(n: usize) -> Self {
        <Self as nt::FromPrimitive>::from_usize(n).expect("usize fits a float")
    }

    fn as_f64(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).expect("float converts to f64")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            const EPSILON: Self = <$t>::EPSILON;

            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

pub type ModelParams = model::ModelParams<f64>;
pub type DispersionTable = model::DispersionTable<f64>;
pub type DisorderSpec = disorder::DisorderSpec<f64>;
pub type SpectrumResult = spectral::SpectrumResult<f64>;
pub type PredictedDOS = spectral::PredictedDOS<f64>;
pub type ExcitationSpectrum = quench::ExcitationSpectrum<f64>;
pub type QuenchResult = quench::QuenchResult<f64>;
pub type FermiSeaState = quench::FermiSeaState<f64>;
pub type SpectrumPair = fidelity::SpectrumPair<f64>;
pub type FidelityResult = fidelity::FidelityResult<f64>;
pub type GreenFunction = dmft::GreenFunction<f64>;
pub type MatsubaraGrid = dmft::MatsubaraGrid<f64>;
pub type DOSModel = dmft::DOSModel<f64>;
