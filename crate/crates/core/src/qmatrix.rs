//! Dense complex matrix kernel.
//!
//! Everything downstream (states, POVMs, channels, entropies) is built on the
//! handful of operations here: Hermitian eigendecomposition, spectral matrix
//! functions, Kronecker products and partial traces. Matrices are plain
//! `nalgebra::DMatrix<Complex64>` values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Max-abs tolerance on `m - m^dagger` accepted as Hermitian.
pub const HERM_TOL: f64 = 1e-10;
/// Eigenvalues in `[-EIG_CLAMP, 0)` are clamped to zero; lower is an error.
pub const EIG_CLAMP: f64 = 1e-10;
/// Eigenvalues at or below this are treated as outside the support.
pub const SUPPORT_EPS: f64 = 1e-12;
/// Largest dimension any product space may reach.
pub const MAX_DIM: usize = 1 << 16;
/// Relative size below which an eigenvalue is indistinguishable from zero.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

/// Diagonal matrix with real entries.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { cr(values[i]) } else { C64::default() })
}

/// Rank-one projector `|e_i><e_i|` in dimension `n`.
pub fn basis_projector(n: usize, i: usize) -> CMatrix {
    let mut m = zeros(n);
    m[(i, i)] = cr(1.0);
    m
}

/// `|v><v|` for a (not necessarily normalized) column vector.
pub fn outer(v: &[C64]) -> CMatrix {
    let n = v.len();
    CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(rows)
}

/// Max-abs entry of `m - m^dagger`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn ensure_hermitian(m: &CMatrix) -> Result<usize> {
    let n = ensure_square(m)?;
    let deviation = hermitian_deviation(m);
    if deviation > HERM_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(n)
}

/// `(m + m^dagger) / 2`
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Real eigenvalues, sorted descending.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermEig {
    /// `V f(diag(lambda)) V^dagger`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }
}

/// Hermitian eigendecomposition, eigenvalues descending.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    ensure_hermitian(m)?;
    Ok(herm_eig_unchecked(&hermitian_part(m)))
}

fn herm_eig_unchecked(m: &CMatrix) -> HermEig {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    HermEig { values, vectors }
}

/// Eigenvalues of a Hermitian PSD matrix, clamped at zero.
pub fn psd_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let eig = herm_eig(m)?;
    clamp_eigenvalues(eig.values)
}

fn clamp_eigenvalues(values: Vec<f64>) -> Result<Vec<f64>> {
    values
        .into_iter()
        .map(|v| {
            if v < -EIG_CLAMP {
                Err(Error::NegativeEigenvalue { value: v })
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

fn psd_eig(m: &CMatrix) -> Result<HermEig> {
    let mut eig = herm_eig(m)?;
    eig.values = clamp_eigenvalues(eig.values)?;
    Ok(eig)
}

/// Principal square root of a PSD matrix.
///
/// Eigenvalues at rounding level are zeroed first: `sqrt(1e-16)` would
/// otherwise leak `1e-8` into the result.
pub fn mat_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = psd_eig(m)?;
    let cutoff = ROUNDING_FLOOR * eig.values.first().copied().unwrap_or(0.0).max(1.0);
    Ok(eig.map(|x| if x <= cutoff { 0.0 } else { x.sqrt() }))
}

/// Base-2 logarithm restricted to the support; the kernel maps to zero.
pub fn mat_log2(m: &CMatrix) -> Result<CMatrix> {
    Ok(psd_eig(m)?.map(|x| if x > SUPPORT_EPS { x.log2() } else { 0.0 }))
}

/// Moore-Penrose inverse square root on the support of a PSD matrix.
pub fn mat_inv_sqrt_support(m: &CMatrix, eps: f64) -> Result<CMatrix> {
    Ok(psd_eig(m)?.map(|x| if x > eps { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Kronecker product `a (x) b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| tensor(&acc, f))
}

/// Block-diagonal direct sum of square blocks.
pub fn direct_sum<'a>(blocks: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    let blocks: Vec<&CMatrix> = blocks.into_iter().collect();
    let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(dim, dim);
    let mut off = 0;
    for b in blocks {
        let n = b.nrows();
        out.view_mut((off, off), (n, n)).copy_from(b);
        off += n;
    }
    out
}

/// Trace out every subsystem not listed in `keep`.
///
/// `dims` lists the subsystem dimensions in tensor order; `keep` is a set of
/// subsystem indices (order and duplicates are ignored). The result lives on
/// the kept subsystems in their original order.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let n = ensure_square(m)?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument("subsystem dimensions must be positive".into()));
    }
    let total: usize = dims.iter().product();
    if total != n {
        return Err(Error::DimensionMismatch { expected: total, found: n });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "subsystem {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|i| keep.contains(i)).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let tr_dim: usize = traced_dims.iter().product();

    // strides of each subsystem in the full row-major index
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offset = |sub: &[usize], sub_dims: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for p in (0..sub.len()).rev() {
            off += (idx % sub_dims[p]) * strides[sub[p]];
            idx /= sub_dims[p];
        }
        off
    };
    let kept_off: Vec<usize> = (0..out_dim).map(|a| offset(&kept, &kept_dims, a)).collect();
    let traced_off: Vec<usize> = (0..tr_dim).map(|t| offset(&traced, &traced_dims, t)).collect();

    let mut out = CMatrix::zeros(out_dim, out_dim);
    for a in 0..out_dim {
        for b in 0..out_dim {
            let mut acc = C64::default();
            for &t in &traced_off {
                acc += m[(kept_off[a] + t, kept_off[b] + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Conjugate by a permutation of tensor factors.
///
/// With `n` factors of dimension `d`, returns `P m P^dagger` where
/// `P (psi_0 (x) ... (x) psi_{n-1}) = psi_{perm[0]} (x) ... (x) psi_{perm[n-1]}`.
pub fn permute_factors(m: &CMatrix, d: usize, perm: &[usize]) -> CMatrix {
    let map = factor_permutation_indices(d, perm);
    let dim = map.len();
    CMatrix::from_fn(dim, dim, |i, j| m[(map[i], map[j])])
}

/// Index map `i -> src` with `(P v)[i] = v[src]` for the factor permutation above.
pub fn factor_permutation_indices(d: usize, perm: &[usize]) -> Vec<usize> {
    let n = perm.len();
    let dim = d.pow(n as u32);
    let mut map = Vec::with_capacity(dim);
    let mut digits = vec![0usize; n];
    for i in 0..dim {
        let mut rem = i;
        for l in (0..n).rev() {
            digits[l] = rem % d;
            rem /= d;
        }
        // output factor l carries input factor perm[l]
        let mut src_digits = vec![0usize; n];
        for l in 0..n {
            src_digits[perm[l]] = digits[l];
        }
        map.push(src_digits.iter().fold(0, |acc, &x| acc * d + x));
    }
    map
}
