//! Entropic quantities in bits.
//!
//! All logarithms are base 2 and `0 log 0 = 0` throughout.

use crate::cq_channel::{CqChannel, InputDistribution};
use crate::error::{Error, Result};
use crate::qmatrix::{self, SUPPORT_EPS};
use crate::states_povm::DensityOperator;

/// Eigenvalues of `sigma` at or below this are outside its support.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Quantum relative entropy, which may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelEntropy {
    Finite(f64),
    Infinite,
}

impl RelEntropy {
    pub fn is_infinite(self) -> bool {
        matches!(self, RelEntropy::Infinite)
    }

    pub fn value(self) -> f64 {
        match self {
            RelEntropy::Finite(v) => v,
            RelEntropy::Infinite => f64::INFINITY,
        }
    }
}

/// `-sum p log2 p` over the entries of a probability vector.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

/// `S(rho) = -tr(rho log2 rho)`
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let eig = qmatrix::psd_eigenvalues(rho.mat())?;
    Ok(eig
        .iter()
        .filter(|&&l| l > SUPPORT_EPS)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0))
}

/// Entropy of a matrix known to be a density operator; skips validation.
pub(crate) fn entropy_unchecked(m: &qmatrix::CMatrix) -> f64 {
    qmatrix::hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > SUPPORT_EPS)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

fn check_input(p: &InputDistribution, ch: &CqChannel) -> Result<()> {
    if p.len() != ch.alphabet_size() {
        return Err(Error::DimensionMismatch { expected: ch.alphabet_size(), found: p.len() });
    }
    Ok(())
}

/// `S(V|P) = sum_x P(x) S(V(x))`
pub fn conditional_entropy(ch: &CqChannel, p: &InputDistribution) -> Result<f64> {
    check_input(p, ch)?;
    let mut acc = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        if px > 0.0 {
            acc += px * von_neumann_entropy(ch.output(x))?;
        }
    }
    Ok(acc)
}

/// `sum_x P(x) V(x)`
pub fn average_output(p: &InputDistribution, ch: &CqChannel) -> Result<DensityOperator> {
    check_input(p, ch)?;
    DensityOperator::mixture(p.probs().iter().copied().zip(ch.outputs()))
}

/// `D(rho || sigma) = tr(rho (log2 rho - log2 sigma))`, infinite when the
/// support of `rho` leaves that of `sigma`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<RelEntropy> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), found: rho.dim() });
    }
    let sig = qmatrix::herm_eig(sigma.mat())?;
    // weight of rho outside supp(sigma) and tr(rho log2 sigma) in sigma's eigenbasis
    let mut outside = 0.0;
    let mut cross = 0.0;
    for (j, &lam) in sig.values.iter().enumerate() {
        let v = sig.vectors.column(j);
        let rv = rho.mat() * v;
        let w = v.iter().zip(rv.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        if lam > SUPPORT_TOL {
            cross += w * lam.log2();
        } else {
            outside += w;
        }
    }
    if outside > SUPPORT_TOL {
        return Ok(RelEntropy::Infinite);
    }
    let neg_s = -von_neumann_entropy(rho)?;
    Ok(RelEntropy::Finite(neg_s - cross))
}

/// `chi(P; V) = S(sum_x P(x) V(x)) - S(V|P)`
pub fn holevo(p: &InputDistribution, ch: &CqChannel) -> Result<f64> {
    let avg = average_output(p, ch)?;
    Ok((von_neumann_entropy(&avg)? - conditional_entropy(ch, p)?).max(0.0))
}

/// `I(P; V) = sum_x P(x) D(V(x) || sum_x' P(x') V(x'))`, evaluated through
/// relative entropies.
pub fn mutual_info(p: &InputDistribution, ch: &CqChannel) -> Result<f64> {
    let avg = average_output(p, ch)?;
    let mut acc = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        if px > 0.0 {
            acc += px * relative_entropy(ch.output(x), &avg)?.value();
        }
    }
    Ok(acc)
}

/// `sum_b w_b chi(P; V_b)` over weighted branches sharing the input alphabet.
pub fn conditional_holevo(p: &InputDistribution, branches: &[(f64, CqChannel)]) -> Result<f64> {
    if branches.is_empty() {
        return Err(Error::WeightNotNormalized { sum: 0.0 });
    }
    let sum: f64 = branches.iter().map(|(w, _)| w).sum();
    if branches.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightNotNormalized { sum });
    }
    let mut acc = 0.0;
    for (w, ch) in branches {
        if *w > 0.0 {
            acc += w * holevo(p, ch)?;
        }
    }
    Ok(acc)
}
