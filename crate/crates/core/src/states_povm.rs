//! Density operators, POVMs and Lüders measurement updates.
//!
//! A POVM acting as a decoder disturbs the state it measures. The average
//! disturbance of a full measurement is the induced channel
//! `rho -> sum_m sqrt(D_m) rho sqrt(D_m)`; a single outcome's disturbance is
//! the Lüders branch `sqrt(D) rho sqrt(D) / tr(D rho)`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmatrix::{self, CMatrix, C64};

/// Trace tolerance for density operators and trace preservation.
pub const TRACE_TOL: f64 = 1e-9;
/// Max-abs tolerance for `sum D_m = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Branch probabilities at or below this have no meaningful posterior.
pub const ZERO_PROB: f64 = 1e-12;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: CMatrix,
}

impl DensityOperator {
    /// Validates the matrix and stores its Hermitian part.
    pub fn new(mat: CMatrix) -> Result<Self> {
        qmatrix::ensure_hermitian(&mat)?;
        let tr = qmatrix::trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvariantViolation(format!(
                "density operator trace is {:.12} (expected 1)",
                tr.re
            )));
        }
        qmatrix::psd_eigenvalues(&mat)?;
        Ok(Self { mat: qmatrix::hermitian_part(&mat) })
    }

    /// Skips validation; only for matrices that are valid by construction
    /// (convex mixtures and channel images of valid states).
    pub(crate) fn from_mat_unchecked(mat: CMatrix) -> Self {
        Self { mat: qmatrix::hermitian_part(&mat) }
    }

    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::InvariantViolation("zero state vector".into()));
        }
        Self::new(qmatrix::outer(amplitudes).scale(1.0 / norm))
    }

    /// `|i><i|` in dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        Self { mat: qmatrix::basis_projector(dim, i) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { mat: qmatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { mat: qmatrix::tensor(&self.mat, &other.mat) }
    }

    /// Convex combination `sum_i w_i rho_i`; weights must be a distribution.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a DensityOperator)>) -> Result<Self> {
        let mut acc: Option<CMatrix> = None;
        let mut total = 0.0;
        for (w, rho) in parts {
            if w < 0.0 {
                return Err(Error::InvalidDistribution(format!("negative weight {w}")));
            }
            total += w;
            match acc.as_mut() {
                None => acc = Some(rho.mat.scale(w)),
                Some(a) => {
                    if a.nrows() != rho.dim() {
                        return Err(Error::DimensionMismatch { expected: a.nrows(), found: rho.dim() });
                    }
                    *a += rho.mat.scale(w);
                }
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { sum: total });
        }
        acc.map(Self::from_mat_unchecked)
            .ok_or_else(|| Error::InvalidDistribution("empty mixture".into()))
    }
}

/// Label of a POVM outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Message(usize),
    Abstain(AbstainTag),
}

/// Serialized as the string `"abstain"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstainTag {
    Abstain,
}

impl Outcome {
    pub const ABSTAIN: Outcome = Outcome::Abstain(AbstainTag::Abstain);

    pub fn message(self) -> Option<usize> {
        match self {
            Outcome::Message(m) => Some(m),
            Outcome::Abstain(_) => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Message(m) => write!(f, "{m}"),
            Outcome::Abstain(_) => f.write_str("abstain"),
        }
    }
}

/// Finite set of PSD operators summing to the identity, one per outcome.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<CMatrix>,
    labels: Vec<Outcome>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>, labels: Vec<Outcome>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("POVM needs at least one element".into()));
        }
        if elements.len() != labels.len() {
            return Err(Error::LengthMismatch { expected: elements.len(), found: labels.len() });
        }
        let dim = qmatrix::ensure_square(&elements[0])?;
        let mut sum = qmatrix::zeros(dim);
        for e in &elements {
            let n = qmatrix::ensure_square(e)?;
            if n != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: n });
            }
            qmatrix::psd_eigenvalues(e)?;
            sum += e;
        }
        let deviation = qmatrix::max_abs_diff(&sum, &qmatrix::identity(dim));
        if deviation > COMPLETENESS_TOL {
            return Err(Error::IncompletePovm { deviation });
        }
        let elements = elements.iter().map(qmatrix::hermitian_part).collect();
        Ok(Self { elements, labels })
    }

    /// Labels outcomes `Message(0), Message(1), ...` in element order.
    pub fn with_message_labels(elements: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(Outcome::Message).collect();
        Self::new(elements, labels)
    }

    /// The trivial one-outcome measurement `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self { elements: vec![qmatrix::identity(dim)], labels: vec![Outcome::Message(0)] }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[Outcome] {
        &self.labels
    }

    /// Max-abs deviation of `sum D_m` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = qmatrix::zeros(self.dim());
        for e in &self.elements {
            sum += e;
        }
        qmatrix::max_abs_diff(&sum, &qmatrix::identity(self.dim()))
    }

    pub fn sqrt_elements(&self) -> Result<Vec<CMatrix>> {
        self.elements.iter().map(qmatrix::mat_sqrt).collect()
    }

    /// Conjugates every element by a permutation of `n` tensor factors of dimension `d`.
    pub fn permuted(&self, d: usize, perm: &[usize]) -> Self {
        Self {
            elements: self.elements.iter().map(|e| qmatrix::permute_factors(e, d, perm)).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Trace-preserving map `rho -> sum_i K_i rho K_i^dagger`.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("channel needs at least one operator".into()))?;
        let in_dim = first.ncols();
        let mut sum = qmatrix::zeros(in_dim);
        for k in &kraus {
            if k.ncols() != in_dim || k.nrows() != first.nrows() {
                return Err(Error::DimensionMismatch { expected: in_dim, found: k.ncols() });
            }
            sum += k.adjoint() * k;
        }
        let deviation = qmatrix::max_abs_diff(&sum, &qmatrix::identity(in_dim));
        if deviation > TRACE_TOL {
            return Err(Error::InvariantViolation(format!(
                "channel is not trace preserving (max deviation {deviation:e})"
            )));
        }
        Ok(Self { kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self { kraus: vec![qmatrix::identity(dim)] }
    }

    pub fn in_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply_mat(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.out_dim(), self.out_dim());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.in_dim() {
            return Err(Error::DimensionMismatch { expected: self.in_dim(), found: rho.dim() });
        }
        Ok(DensityOperator::from_mat_unchecked(self.apply_mat(rho.mat())))
    }

    /// `then (.) self`: apply `self` first.
    pub fn then(&self, then: &QuantumChannel) -> Result<QuantumChannel> {
        if then.in_dim() != self.out_dim() {
            return Err(Error::DimensionMismatch { expected: self.out_dim(), found: then.in_dim() });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * then.kraus.len());
        for b in &then.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(Self { kraus })
    }

    /// Max-abs deviation of `sum K^dagger K` from the identity.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let mut sum = qmatrix::zeros(self.in_dim());
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        qmatrix::max_abs_diff(&sum, &qmatrix::identity(self.in_dim()))
    }
}

fn real_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    // tr(AB) without forming AB
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// `tr(D_m rho)` for every outcome, clamped at zero.
pub fn outcome_probs(povm: &Povm, rho: &DensityOperator) -> Result<Vec<f64>> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: povm.dim(), found: rho.dim() });
    }
    Ok(povm
        .elements
        .iter()
        .map(|d| real_trace_product(d, rho.mat()).max(0.0))
        .collect())
}

/// Probability and Lüders posterior of the outcome with element `d`.
pub fn lueders_branch(d: &CMatrix, rho: &DensityOperator) -> Result<(f64, DensityOperator)> {
    let sqrt_d = qmatrix::mat_sqrt(d)?;
    lueders_branch_with_sqrt(d, &sqrt_d, rho)
}

/// As [`lueders_branch`] with `sqrt(d)` precomputed.
pub fn lueders_branch_with_sqrt(
    d: &CMatrix,
    sqrt_d: &CMatrix,
    rho: &DensityOperator,
) -> Result<(f64, DensityOperator)> {
    if d.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: d.nrows(), found: rho.dim() });
    }
    let prob = real_trace_product(d, rho.mat()).max(0.0);
    if prob <= ZERO_PROB {
        return Err(Error::ZeroProbabilityBranch { prob });
    }
    let post = sqrt_d * rho.mat() * sqrt_d;
    Ok((prob, DensityOperator::from_mat_unchecked(post.scale(1.0 / prob))))
}

/// Result of one sampled measurement.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub index: usize,
    pub outcome: Outcome,
    pub prob: f64,
    pub posterior: DensityOperator,
}

/// Samples an outcome index from probabilities; entries at or below
/// [`ZERO_PROB`] are never drawn.
pub(crate) fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = probs.iter().filter(|&&p| p > ZERO_PROB).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= ZERO_PROB {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Samples an outcome and applies the Lüders update.
pub fn measure(povm: &Povm, rho: &DensityOperator, rng: &mut impl Rng) -> Result<MeasurementRecord> {
    let probs = outcome_probs(povm, rho)?;
    let index = sample_index(&probs, rng);
    let (prob, posterior) = lueders_branch(&povm.elements[index], rho)?;
    Ok(MeasurementRecord { index, outcome: povm.labels[index], prob, posterior })
}

/// Channel `rho -> sum_m sqrt(D_m) rho sqrt(D_m)` of a complete POVM.
pub fn induced_channel(povm: &Povm) -> Result<QuantumChannel> {
    let deviation = povm.completeness_deviation();
    if deviation > COMPLETENESS_TOL {
        return Err(Error::IncompletePovm { deviation });
    }
    QuantumChannel::new(povm.sqrt_elements()?)
}

/// `(1/2) ||a - b||_1` for Hermitian `a`, `b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let diff = qmatrix::hermitian_part(&(a - b));
    let eig = qmatrix::herm_eig(&diff)?;
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Outcome of a gentle-measurement check.
#[derive(Debug, Clone, Copy)]
pub struct GentleCheck {
    /// `p = tr(d rho)`
    pub prob: f64,
    /// `(1/2) || rho - sqrt(d) rho sqrt(d) / p ||_1`
    pub trace_distance: f64,
    /// `sqrt(8 (1 - p))`
    pub bound: f64,
    pub holds: bool,
}

/// Compares the disturbance of a likely outcome to the gentle-measurement bound.
pub fn gentle_measurement_check(d: &CMatrix, rho: &DensityOperator) -> Result<GentleCheck> {
    let eig = qmatrix::psd_eigenvalues(d)?;
    if eig.first().copied().unwrap_or(0.0) > 1.0 + 1e-10 {
        return Err(Error::InvalidArgument("operator exceeds the identity".into()));
    }
    let (prob, post) = lueders_branch(d, rho)?;
    let trace_distance = trace_distance(rho.mat(), post.mat())?;
    let bound = (8.0 * (1.0 - prob).max(0.0)).sqrt();
    Ok(GentleCheck { prob, trace_distance, bound, holds: trace_distance <= bound + 1e-12 })
}
