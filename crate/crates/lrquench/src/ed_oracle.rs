//! Exact diagonalization of the Hubbard chain for a handful of sites.
//!
//! Basis states are pairs of occupation bitmasks `(up, down)`; bit `i` is
//! site `i`. Creation operators are ordered site-ascending with the whole up
//! block to the left of the down block, so a same-spin hop `c†_i c_j` picks up
//! `(-1)^(occupied sites strictly between i and j)` and nothing else.

use crate::{Error, Real, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

/// Largest chain handled; C(8,4)^2 = 4900 states at half filling.
pub const MAX_SITES: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManyBodyBasis {
    pub l: usize,
    pub n_up: usize,
    pub n_dn: usize,
    pub up: Vec<u32>,
    pub dn: Vec<u32>,
}

fn sector(l: usize, n: usize) -> Vec<u32> {
    (0u32..1 << l).filter(|b| b.count_ones() as usize == n).collect()
}

impl ManyBodyBasis {
    pub fn new(l: usize, n_up: usize, n_dn: usize) -> Result<Self> {
        if l > MAX_SITES {
            return Err(Error::CostGuard {
                what: "many-body basis",
                l,
                limit: MAX_SITES,
            });
        }
        if l == 0 || n_up > l || n_dn > l {
            return Err(Error::InvalidParams(format!("L = {l} with ({n_up}, {n_dn}) particles")));
        }
        Ok(Self {
            l,
            n_up,
            n_dn,
            up: sector(l, n_up),
            dn: sector(l, n_dn),
        })
    }

    pub fn half_filled(l: usize) -> Result<Self> {
        Self::new(l, l / 2, l / 2)
    }

    pub fn dim(&self) -> usize {
        self.up.len() * self.dn.len()
    }

    pub fn index(&self, up: u32, dn: u32) -> Option<usize> {
        let a = self.up.binary_search(&up).ok()?;
        let b = self.dn.binary_search(&dn).ok()?;
        Some(a * self.dn.len() + b)
    }

    pub fn state(&self, k: usize) -> (u32, u32) {
        (self.up[k / self.dn.len()], self.dn[k % self.dn.len()])
    }

    pub fn doubly_occupied(&self, k: usize) -> u32 {
        let (u, d) = self.state(k);
        (u & d).count_ones()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManyBodyState<T> {
    pub amplitudes: DVector<Complex<T>>,
}

impl<T: Real> ManyBodyState<T> {
    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |a, z| a + z.re * z.re + z.im * z.im)
            .sqrt()
    }

    pub fn overlap(&self, other: &Self) -> Result<Complex<T>> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::Shape("states live in different bases".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .fold(Complex::new(T::zero(), T::zero()), |a, (x, y)| a + x.conj() * y))
    }
}

/// Applies `c†_i c_j` to a single-spin bitmask; `None` if it annihilates.
fn hop(bits: u32, i: usize, j: usize) -> Option<(u32, bool)> {
    if bits >> j & 1 == 0 {
        return None;
    }
    if i == j {
        return Some((bits, false));
    }
    if bits >> i & 1 == 1 {
        return None;
    }
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let between = (bits >> (lo + 1)) & ((1u32 << (hi - lo - 1)) - 1);
    Some((bits & !(1 << j) | 1 << i, between.count_ones() % 2 == 1))
}

fn hop_table<T: Real>(a: &DMatrix<T>, sector: &[u32]) -> Vec<Vec<(usize, T)>> {
    let l = a.nrows();
    sector
        .iter()
        .map(|&b| {
            let mut row = Vec::new();
            for i in 0..l {
                for j in 0..l {
                    let t = a[(i, j)];
                    if t == T::zero() {
                        continue;
                    }
                    if let Some((nb, neg)) = hop(b, i, j) {
                        let k = sector.binary_search(&nb).expect("hop preserves particle number");
                        row.push((k, if neg { -t } else { t }));
                    }
                }
            }
            row
        })
        .collect()
}

/// `H = sum_{ij,s} a_ij c†_is c_js + U sum_i n_i↑ n_i↓` in the given basis.
/// Row `r` holds `<r|H|c>`.
pub fn build_many_body_hamiltonian<T: Real>(a: &DMatrix<T>, u: T, basis: &ManyBodyBasis) -> Result<DMatrix<T>> {
    if a.nrows() != basis.l || a.ncols() != basis.l {
        return Err(Error::Shape(format!(
            "{}x{} matrix for L = {}",
            a.nrows(),
            a.ncols(),
            basis.l
        )));
    }
    if basis.l > MAX_SITES {
        return Err(Error::CostGuard {
            what: "many-body basis",
            l: basis.l,
            limit: MAX_SITES,
        });
    }
    let nd = basis.dn.len();
    let mut h = DMatrix::zeros(basis.dim(), basis.dim());
    let up = hop_table(a, &basis.up);
    let dn = hop_table(a, &basis.dn);
    for (iu, row_u) in up.iter().enumerate() {
        for (id, row_d) in dn.iter().enumerate() {
            let c = iu * nd + id;
            for &(ku, t) in row_u {
                h[(ku * nd + id, c)] += t;
            }
            for &(kd, t) in row_d {
                h[(iu * nd + kd, c)] += t;
            }
            h[(c, c)] += u * T::from_usize_(basis.doubly_occupied(c) as usize);
        }
    }
    Ok(h)
}

/// Product of one Slater determinant per spin built from the columns `occ`
/// of the orbital matrix `phi` (sites × orbitals).
pub fn slater_state<T: Real>(
    basis: &ManyBodyBasis,
    phi: &DMatrix<T>,
    occ_up: &[usize],
    occ_dn: &[usize],
) -> Result<ManyBodyState<T>> {
    if occ_up.len() != basis.n_up || occ_dn.len() != basis.n_dn || phi.nrows() != basis.l {
        return Err(Error::Shape("occupied orbitals do not match the basis".into()));
    }
    let det = |bits: u32, occ: &[usize]| -> T {
        let sites: Vec<usize> = (0..basis.l).filter(|&i| bits >> i & 1 == 1).collect();
        DMatrix::from_fn(occ.len(), occ.len(), |r, c| phi[(sites[r], occ[c])]).determinant()
    };
    let du: Vec<T> = basis.up.iter().map(|&b| det(b, occ_up)).collect();
    let dd: Vec<T> = basis.dn.iter().map(|&b| det(b, occ_dn)).collect();
    let amps = DVector::from_fn(basis.dim(), |k, _| {
        Complex::new(du[k / dd.len()] * dd[k % dd.len()], T::zero())
    });
    Ok(ManyBodyState { amplitudes: amps })
}

/// Spectral decomposition `H = Q diag(E) Q^T`, reused for every time.
#[derive(Clone, Debug)]
pub struct Propagator<T: Real> {
    pub energies: DVector<T>,
    pub vectors: DMatrix<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &DMatrix<T>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::Shape(format!("{}x{} Hamiltonian", n, h.ncols())));
        }
        let scale = h.amax().max(T::one());
        for i in 0..n {
            for j in 0..i {
                let gap = (h[(i, j)] - h[(j, i)]).abs();
                if gap > T::lit(1e-12) * scale {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        gap: gap.as_f64(),
                    });
                }
            }
        }
        let eig = SymmetricEigen::try_new(h.clone(), T::EPSILON, 0).ok_or(Error::NoConvergence {
            seed: None,
            realization: None,
        })?;
        Ok(Self {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn to_eigenbasis(&self, psi: &ManyBodyState<T>) -> (DVector<T>, DVector<T>) {
        let re = psi.amplitudes.map(|z| z.re);
        let im = psi.amplitudes.map(|z| z.im);
        (self.vectors.tr_mul(&re), self.vectors.tr_mul(&im))
    }

    /// `e^{-iHt} psi`.
    pub fn evolve(&self, psi: &ManyBodyState<T>, t: T) -> Result<ManyBodyState<T>> {
        if psi.amplitudes.len() != self.dim() {
            return Err(Error::Shape("state and Hamiltonian dimensions differ".into()));
        }
        let (cr, ci) = self.to_eigenbasis(psi);
        let mut pr = DVector::zeros(self.dim());
        let mut pi = DVector::zeros(self.dim());
        for k in 0..self.dim() {
            let (s, c) = (self.energies[k] * t).sin_cos();
            pr[k] = cr[k] * c + ci[k] * s;
            pi[k] = ci[k] * c - cr[k] * s;
        }
        let re = &self.vectors * pr;
        let im = &self.vectors * pi;
        Ok(ManyBodyState {
            amplitudes: DVector::from_fn(self.dim(), |k, _| Complex::new(re[k], im[k])),
        })
    }
}

pub fn exact_evolve<T: Real>(psi: &ManyBodyState<T>, h: &DMatrix<T>, times: &[T]) -> Result<Vec<ManyBodyState<T>>> {
    let p = Propagator::new(h)?;
    times.iter().map(|&t| p.evolve(psi, t)).collect()
}

pub fn exact_double_occupancy<T: Real>(psi: &ManyBodyState<T>, basis: &ManyBodyBasis) -> Result<T> {
    if psi.amplitudes.len() != basis.dim() {
        return Err(Error::Shape("state does not belong to this basis".into()));
    }
    Ok(psi.amplitudes.iter().enumerate().fold(T::zero(), |acc, (k, z)| {
        acc + (z.re * z.re + z.im * z.im) * T::from_usize_(basis.doubly_occupied(k) as usize)
    }))
}

pub fn expectation<T: Real>(psi: &ManyBodyState<T>, h: &DMatrix<T>) -> Result<T> {
    if psi.amplitudes.len() != h.nrows() {
        return Err(Error::Shape("state and operator dimensions differ".into()));
    }
    let re = psi.amplitudes.map(|z| z.re);
    let im = psi.amplitudes.map(|z| z.im);
    Ok(re.dot(&(h * &re)) + im.dot(&(h * &im)))
}

/// `F(t) = |<psi| e^{iH0 t} e^{-iHa t} |psi>|^2`.
pub fn exact_fidelity<T: Real>(
    psi: &ManyBodyState<T>,
    h0: &DMatrix<T>,
    ha: &DMatrix<T>,
    times: &[T],
) -> Result<Vec<T>> {
    if h0.shape() != ha.shape() {
        return Err(Error::Shape("Hamiltonians act on different bases".into()));
    }
    let p0 = Propagator::new(h0)?;
    let pa = Propagator::new(ha)?;
    times
        .iter()
        .map(|&t| {
            let z = p0.evolve(psi, t)?.overlap(&pa.evolve(psi, t)?)?;
            Ok(z.re * z.re + z.im * z.im)
        })
        .collect()
}
