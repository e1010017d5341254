//! Classical-quantum multiple-access channels.
//!
//! A [`CqMacChannel`] maps a k-tuple of input symbols to a density operator.
//! Symbols of slot `i` are the integers `0..alphabet_sizes[i]`; the table is
//! stored densely in row-major tuple order (slot 0 most significant).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmatrix::{self, CMatrix, C64, MAX_DIM};
use crate::states_povm::{DensityOperator, Outcome, Povm, QuantumChannel};

/// Probability vector over one slot's alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

/// Tolerance on `|sum p - 1|` for input distributions.
pub const DIST_TOL: f64 = 1e-12;

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, symbol: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[symbol] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Convex combination `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, alpha: f64, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        Ok(Self {
            probs: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect(),
        })
    }
}

/// How a slot that is neither kept nor optimized is removed from a channel.
#[derive(Debug, Clone)]
pub enum Frozen {
    Symbol(usize),
    Dist(InputDistribution),
}

/// Single-sender classical-quantum channel `X -> S(A)`.
#[derive(Debug, Clone)]
pub struct CqChannel {
    outputs: Vec<DensityOperator>,
}

impl CqChannel {
    pub fn new(outputs: Vec<DensityOperator>) -> Result<Self> {
        let first = outputs
            .first()
            .ok_or_else(|| Error::InvalidArgument("channel needs at least one input symbol".into()))?;
        let dim = first.dim();
        if let Some(bad) = outputs.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        Ok(Self { outputs })
    }

    pub fn outputs(&self) -> &[DensityOperator] {
        &self.outputs
    }

    pub fn alphabet_size(&self) -> usize {
        self.outputs.len()
    }

    pub fn out_dim(&self) -> usize {
        self.outputs[0].dim()
    }

    pub fn output(&self, x: usize) -> &DensityOperator {
        &self.outputs[x]
    }

    pub fn post_compose(&self, q: &QuantumChannel) -> Result<Self> {
        let outputs = self.outputs.iter().map(|o| q.apply(o)).collect::<Result<_>>()?;
        Ok(Self { outputs })
    }
}

/// The k-sender map `X_1 x ... x X_k -> S(A)`.
#[derive(Debug, Clone)]
pub struct CqMacChannel {
    alphabet_sizes: Vec<usize>,
    out_dim: usize,
    table: Vec<DensityOperator>,
}

impl CqMacChannel {
    /// Builds a channel from a total table in row-major tuple order.
    pub fn new(alphabet_sizes: Vec<usize>, table: Vec<DensityOperator>) -> Result<Self> {
        if alphabet_sizes.is_empty() || alphabet_sizes.contains(&0) {
            return Err(Error::InvalidArgument("alphabets must be non-empty".into()));
        }
        let expected: usize = alphabet_sizes.iter().product();
        if table.len() != expected {
            return Err(Error::LengthMismatch { expected, found: table.len() });
        }
        let out_dim = table[0].dim();
        if let Some(bad) = table.iter().find(|s| s.dim() != out_dim) {
            return Err(Error::DimensionMismatch { expected: out_dim, found: bad.dim() });
        }
        Ok(Self { alphabet_sizes, out_dim, table })
    }

    /// Builds a channel by evaluating `f` on every input tuple.
    pub fn from_fn(
        alphabet_sizes: Vec<usize>,
        mut f: impl FnMut(&[usize]) -> Result<DensityOperator>,
    ) -> Result<Self> {
        let total: usize = alphabet_sizes.iter().product();
        let mut table = Vec::with_capacity(total);
        for idx in 0..total {
            table.push(f(&unflatten(&alphabet_sizes, idx))?);
        }
        Self::new(alphabet_sizes, table)
    }

    pub fn k(&self) -> usize {
        self.alphabet_sizes.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn entries(&self) -> &[DensityOperator] {
        &self.table
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.k() {
            return Err(Error::SlotOutOfRange { slot, k: self.k() });
        }
        Ok(())
    }

    fn flat_index(&self, inputs: &[usize]) -> Result<usize> {
        if inputs.len() != self.k() {
            return Err(Error::LengthMismatch { expected: self.k(), found: inputs.len() });
        }
        let mut idx = 0;
        for (slot, (&x, &size)) in inputs.iter().zip(&self.alphabet_sizes).enumerate() {
            if x >= size {
                return Err(Error::SymbolOutOfAlphabet { slot, symbol: x, size });
            }
            idx = idx * size + x;
        }
        Ok(idx)
    }

    /// Output state for one input tuple.
    pub fn apply(&self, inputs: &[usize]) -> Result<DensityOperator> {
        Ok(self.table[self.flat_index(inputs)?].clone())
    }

    pub(crate) fn entry(&self, inputs: &[usize]) -> Result<&DensityOperator> {
        Ok(&self.table[self.flat_index(inputs)?])
    }

    /// Replaces slot `slot` by the mixture `sum_x dist(x) W(..., x, ...)`.
    pub fn average_slot(&self, slot: usize, dist: &InputDistribution) -> Result<Self> {
        self.check_slot(slot)?;
        if self.k() == 1 {
            return Err(Error::InvalidArgument("cannot average the only slot".into()));
        }
        let size = self.alphabet_sizes[slot];
        if dist.len() != size {
            return Err(Error::DimensionMismatch { expected: size, found: dist.len() });
        }
        let mut sizes = self.alphabet_sizes.clone();
        sizes.remove(slot);
        Self::from_fn(sizes, |rest| {
            let mut full = Vec::with_capacity(self.k());
            full.extend_from_slice(&rest[..slot]);
            full.push(0);
            full.extend_from_slice(&rest[slot..]);
            let mut acc = qmatrix::zeros(self.out_dim);
            for (x, &p) in dist.probs().iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                full[slot] = x;
                acc += self.entry(&full)?.mat().scale(p);
            }
            Ok(DensityOperator::from_mat_unchecked(acc))
        })
    }

    /// Fixes slot `slot` to one symbol, dropping it from the tuple.
    pub fn fix_slot(&self, slot: usize, symbol: usize) -> Result<Self> {
        self.check_slot(slot)?;
        let size = self.alphabet_sizes[slot];
        if symbol >= size {
            return Err(Error::SymbolOutOfAlphabet { slot, symbol, size });
        }
        self.average_slot(slot, &InputDistribution::point(size, symbol))
    }

    /// Applies `q` to every output state.
    pub fn post_compose(&self, q: &QuantumChannel) -> Result<Self> {
        if q.in_dim() != self.out_dim {
            return Err(Error::DimensionMismatch { expected: self.out_dim, found: q.in_dim() });
        }
        let table = self.table.iter().map(|s| q.apply(s)).collect::<Result<_>>()?;
        Self::new(self.alphabet_sizes.clone(), table)
    }

    /// Keeps the slots in `keep` (in that order) and removes every other slot
    /// as directed by `frozen`. Every slot must appear exactly once in either.
    pub fn reduce(&self, keep: &[usize], frozen: &[(usize, Frozen)]) -> Result<Self> {
        let mut seen = vec![false; self.k()];
        for &s in keep.iter().chain(frozen.iter().map(|(s, _)| s)) {
            self.check_slot(s)?;
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidArgument(format!("slot {s} listed twice")));
            }
        }
        if let Some(missing) = seen.iter().position(|&b| !b) {
            return Err(Error::InvalidArgument(format!("slot {missing} is neither kept nor frozen")));
        }
        // remove frozen slots from the highest index down so indices stay valid
        let mut order: Vec<&(usize, Frozen)> = frozen.iter().collect();
        order.sort_by(|a, b| b.0.cmp(&a.0));
        let mut ch = self.clone();
        let mut remaining: Vec<usize> = (0..self.k()).collect();
        for (slot, how) in order {
            let pos = remaining.iter().position(|s| s == slot).expect("slot present");
            ch = match how {
                Frozen::Symbol(x) => ch.fix_slot(pos, *x)?,
                Frozen::Dist(d) => ch.average_slot(pos, d)?,
            };
            remaining.remove(pos);
        }
        // `remaining` is ascending; permute into the requested order
        let perm: Vec<usize> = keep
            .iter()
            .map(|s| remaining.iter().position(|r| r == s).expect("kept slot present"))
            .collect();
        ch.permute_slots(&perm)
    }

    /// New channel whose slot `i` is this channel's slot `perm[i]`.
    pub fn permute_slots(&self, perm: &[usize]) -> Result<Self> {
        let sizes: Vec<usize> = perm.iter().map(|&p| self.alphabet_sizes[p]).collect();
        Self::from_fn(sizes, |t| {
            let mut orig = vec![0; self.k()];
            for (i, &p) in perm.iter().enumerate() {
                orig[p] = t[i];
            }
            Ok(self.entry(&orig)?.clone())
        })
    }

    /// Views a one-sender channel as a [`CqChannel`].
    pub fn as_single_sender(&self) -> Result<CqChannel> {
        if self.k() != 1 {
            return Err(Error::InvalidArgument(format!("expected 1 sender, found {}", self.k())));
        }
        CqChannel::new(self.table.clone())
    }

    /// Lazy n-letter memoryless extension.
    pub fn product_extend(&self, n: usize) -> Result<ProductChannel> {
        if n == 0 {
            return Err(Error::InvalidArgument("block length must be positive".into()));
        }
        let dim = checked_pow(self.out_dim, n)
            .filter(|&d| d <= MAX_DIM)
            .ok_or(Error::DimensionCapExceeded { dim: checked_pow(self.out_dim, n).unwrap_or(usize::MAX), cap: MAX_DIM })?;
        Ok(ProductChannel { base: self.clone(), n, dim })
    }

    /// Arbitrarily varying view with `honest` as the legitimate input and
    /// `jammer` as the state; all other slots are removed per `frozen`.
    pub fn avc_view(&self, honest: usize, jammer: usize, frozen: &[(usize, Frozen)]) -> Result<AvcView> {
        self.check_slot(honest)?;
        self.check_slot(jammer)?;
        if honest == jammer {
            return Err(Error::InvalidArgument("honest and jammer slots must differ".into()));
        }
        let reduced = self.reduce(&[honest, jammer], frozen)?;
        Ok(AvcView {
            n_inputs: reduced.alphabet_sizes[0],
            n_states: reduced.alphabet_sizes[1],
            out_dim: reduced.out_dim,
            table: reduced.table,
        })
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

pub(crate) fn unflatten(sizes: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        out[i] = idx % sizes[i];
        idx /= sizes[i];
    }
    out
}

/// n-fold memoryless extension of a channel; states are built on demand.
#[derive(Debug, Clone)]
pub struct ProductChannel {
    base: CqMacChannel,
    n: usize,
    dim: usize,
}

impl ProductChannel {
    pub fn base(&self) -> &CqMacChannel {
        &self.base
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn out_dim(&self) -> usize {
        self.dim
    }

    /// `inputs[i]` is sender `i`'s length-n string.
    pub fn apply(&self, inputs: &[Vec<usize>]) -> Result<DensityOperator> {
        if inputs.len() != self.base.k() {
            return Err(Error::LengthMismatch { expected: self.base.k(), found: inputs.len() });
        }
        if let Some(bad) = inputs.iter().find(|s| s.len() != self.n) {
            return Err(Error::LengthMismatch { expected: self.n, found: bad.len() });
        }
        let mut letter = vec![0; self.base.k()];
        let mut acc: Option<CMatrix> = None;
        for l in 0..self.n {
            for (i, s) in inputs.iter().enumerate() {
                letter[i] = s[l];
            }
            let m = self.base.entry(&letter)?.mat();
            acc = Some(match acc {
                None => m.clone(),
                Some(a) => qmatrix::tensor(&a, m),
            });
        }
        Ok(DensityOperator::from_mat_unchecked(acc.expect("n >= 1")))
    }
}

/// Arbitrarily varying cq channel `{W(., t) : t in Theta}`.
#[derive(Debug, Clone)]
pub struct AvcView {
    n_inputs: usize,
    n_states: usize,
    out_dim: usize,
    table: Vec<DensityOperator>,
}

impl AvcView {
    /// `table[x * n_states + t] = W(x, t)`.
    pub fn new(n_inputs: usize, n_states: usize, table: Vec<DensityOperator>) -> Result<Self> {
        let ch = CqMacChannel::new(vec![n_inputs, n_states], table)?;
        Ok(Self { n_inputs, n_states, out_dim: ch.out_dim, table: ch.table })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn state(&self, x: usize, t: usize) -> &DensityOperator {
        &self.table[x * self.n_states + t]
    }

    /// `W(., p) = sum_t p(t) W(., t)`
    pub fn average_state(&self, p: &InputDistribution) -> Result<CqChannel> {
        if p.len() != self.n_states {
            return Err(Error::DimensionMismatch { expected: self.n_states, found: p.len() });
        }
        let outputs = (0..self.n_inputs)
            .map(|x| DensityOperator::mixture((0..self.n_states).map(|t| (p.probs()[t], self.state(x, t)))))
            .collect::<Result<_>>()?;
        CqChannel::new(outputs)
    }
}

// ---------------------------------------------------------------------------
// Built-in fixtures

const EX_A: usize = 2;
const EX_B: usize = 3;

fn ab(i: usize, j: usize) -> usize {
    i * EX_B + j
}

/// Two senders, `X_1 = {0,1}`, `X_2 = {0,1,2}`, output `|i>|j>` on `C^2 (x) C^3`.
pub fn example_channel() -> CqMacChannel {
    CqMacChannel::from_fn(vec![EX_A, EX_B], |t| Ok(DensityOperator::basis(EX_A * EX_B, ab(t[0], t[1]))))
        .expect("fixture is valid")
}

/// `(D1, D2)`: D1 measures the A register; D2 reads B, resolving `|2>_B`
/// in the `|+>/|->` basis of A.
pub fn example_povms() -> (Povm, Povm) {
    let dim = EX_A * EX_B;
    let ket_bra = |r: usize, s: usize, w: f64| {
        let mut m = qmatrix::zeros(dim);
        m[(r, s)] = C64::new(w, 0.0);
        m
    };
    let d1: Vec<CMatrix> = (0..EX_A)
        .map(|i| (0..EX_B).map(|j| ket_bra(ab(i, j), ab(i, j), 1.0)).sum())
        .collect();
    let d2_0 = ket_bra(ab(0, 0), ab(0, 0), 1.0)
        + ket_bra(ab(1, 0), ab(1, 0), 1.0)
        + ket_bra(ab(0, 2), ab(0, 2), 0.5)
        + ket_bra(ab(1, 2), ab(1, 2), 0.5)
        + ket_bra(ab(0, 2), ab(1, 2), 0.5)
        + ket_bra(ab(1, 2), ab(0, 2), 0.5);
    let d2_1 = ket_bra(ab(0, 1), ab(0, 1), 1.0)
        + ket_bra(ab(1, 1), ab(1, 1), 1.0)
        + ket_bra(ab(0, 2), ab(0, 2), 0.5)
        + ket_bra(ab(1, 2), ab(1, 2), 0.5)
        - ket_bra(ab(0, 2), ab(1, 2), 0.5)
        - ket_bra(ab(1, 2), ab(0, 2), 0.5);
    (
        Povm::with_message_labels(d1).expect("D1 is a POVM"),
        Povm::with_message_labels(vec![d2_0, d2_1]).expect("D2 is a POVM"),
    )
}

/// Every input maps to the same state.
pub fn constant_channel(alphabet_sizes: Vec<usize>, state: &DensityOperator) -> CqMacChannel {
    CqMacChannel::from_fn(alphabet_sizes, |_| Ok(state.clone())).expect("constant table is valid")
}

/// `W(x_1, ..., x_k) = |x_1><x_1| (x) ... (x) |x_k><x_k|` with one register per sender.
pub fn factorized_channel(alphabet_sizes: &[usize]) -> CqMacChannel {
    let dim: usize = alphabet_sizes.iter().product();
    CqMacChannel::from_fn(alphabet_sizes.to_vec(), |t| {
        let idx = t.iter().zip(alphabet_sizes).fold(0, |acc, (&x, &s)| acc * s + x);
        Ok(DensityOperator::basis(dim, idx))
    })
    .expect("fixture is valid")
}

/// Computational-basis measurement of register `slot` of [`factorized_channel`].
pub fn factorized_local_povm(alphabet_sizes: &[usize], slot: usize) -> Povm {
    let left: usize = alphabet_sizes[..slot].iter().product();
    let right: usize = alphabet_sizes[slot + 1..].iter().product();
    let elements = (0..alphabet_sizes[slot])
        .map(|m| {
            let proj = qmatrix::basis_projector(alphabet_sizes[slot], m);
            qmatrix::tensor(&qmatrix::tensor(&qmatrix::identity(left), &proj), &qmatrix::identity(right))
        })
        .collect();
    Povm::with_message_labels(elements).expect("local projective measurement")
}

// ---------------------------------------------------------------------------
// JSON files

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    k: usize,
    alphabets: Vec<Vec<usize>>,
    out_dim: usize,
    entries: Vec<EntryFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    input: Vec<usize>,
    matrix: JsonMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmFile {
    out_dim: usize,
    elements: Vec<PovmElementFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmElementFile {
    label: Outcome,
    matrix: JsonMatrix,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn json_err(e: serde_json::Error) -> Error {
    parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string())
}

fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(rows: &JsonMatrix, dim: usize, location: &str) -> Result<CMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(parse_err(location, format!("matrix must be {dim}x{dim}")));
    }
    let mut m = qmatrix::zeros(dim);
    for (i, row) in rows.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(parse_err(location, format!("non-finite entry at ({i}, {j})")));
            }
            m[(i, j)] = C64::new(z[0], z[1]);
        }
    }
    Ok(m)
}

pub fn channel_to_json(ch: &CqMacChannel) -> String {
    let file = ChannelFile {
        k: ch.k(),
        alphabets: ch.alphabet_sizes.iter().map(|&s| (0..s).collect()).collect(),
        out_dim: ch.out_dim,
        entries: ch
            .table
            .iter()
            .enumerate()
            .map(|(idx, s)| EntryFile { input: unflatten(&ch.alphabet_sizes, idx), matrix: matrix_to_json(s.mat()) })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("channel serializes")
}

pub fn channel_from_json(text: &str) -> Result<CqMacChannel> {
    let file: ChannelFile = serde_json::from_str(text).map_err(json_err)?;
    if file.k == 0 || file.alphabets.len() != file.k {
        return Err(parse_err("field `alphabets`", format!("expected {} alphabets", file.k)));
    }
    let mut sizes = Vec::with_capacity(file.k);
    for (slot, alpha) in file.alphabets.iter().enumerate() {
        if alpha.is_empty() || alpha.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(parse_err(
                format!("field `alphabets[{slot}]`"),
                "symbols must be listed as 0, 1, ..., n-1",
            ));
        }
        sizes.push(alpha.len());
    }
    if file.out_dim == 0 {
        return Err(parse_err("field `out_dim`", "must be positive"));
    }
    let total: usize = sizes.iter().product();
    let mut slots: Vec<Option<DensityOperator>> = vec![None; total];
    for (e_idx, entry) in file.entries.iter().enumerate() {
        let loc = format!("entries[{e_idx}]");
        if entry.input.len() != file.k {
            return Err(parse_err(&loc, format!("input must have {} symbols", file.k)));
        }
        let mut idx = 0;
        for (slot, (&x, &s)) in entry.input.iter().zip(&sizes).enumerate() {
            if x >= s {
                return Err(parse_err(&loc, format!("symbol {x} outside alphabet of slot {slot}")));
            }
            idx = idx * s + x;
        }
        let m = matrix_from_json(&entry.matrix, file.out_dim, &loc)?;
        let state = DensityOperator::new(m).map_err(|e| {
            Error::InvariantViolation(format!("entry for input {:?}: {e}", entry.input))
        })?;
        if slots[idx].replace(state).is_some() {
            return Err(parse_err(&loc, format!("duplicate input {:?}", entry.input)));
        }
    }
    let mut table = Vec::with_capacity(total);
    for (idx, s) in slots.into_iter().enumerate() {
        match s {
            Some(s) => table.push(s),
            None => {
                return Err(parse_err(
                    "field `entries`",
                    format!("table not total: missing input {:?}", unflatten(&sizes, idx)),
                ))
            }
        }
    }
    CqMacChannel::new(sizes, table)
}

pub fn save_channel(ch: &CqMacChannel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, channel_to_json(ch))?;
    Ok(())
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<CqMacChannel> {
    channel_from_json(&fs::read_to_string(path)?)
}

pub fn povm_to_json(p: &Povm) -> String {
    let file = PovmFile {
        out_dim: p.dim(),
        elements: p
            .elements()
            .iter()
            .zip(p.labels())
            .map(|(m, &label)| PovmElementFile { label, matrix: matrix_to_json(m) })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("POVM serializes")
}

pub fn povm_from_json(text: &str) -> Result<Povm> {
    let file: PovmFile = serde_json::from_str(text).map_err(json_err)?;
    let mut elements = Vec::with_capacity(file.elements.len());
    let mut labels = Vec::with_capacity(file.elements.len());
    for (i, e) in file.elements.iter().enumerate() {
        elements.push(matrix_from_json(&e.matrix, file.out_dim, &format!("elements[{i}]"))?);
        labels.push(e.label);
    }
    Povm::new(elements, labels)
}

pub fn save_povm(p: &Povm, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, povm_to_json(p))?;
    Ok(())
}

pub fn load_povm(path: impl AsRef<Path>) -> Result<Povm> {
    povm_from_json(&fs::read_to_string(path)?)
}
