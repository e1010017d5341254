//! Sequential decoding of Byzantine MAC episodes.
//!
//! Each sender holds a [`RandomCode`]: base codewords, a list of letter
//! permutations shared with the receiver as common randomness, and a
//! decoding POVM on the n-letter output space. The receiver measures the
//! senders one at a time in the decode order, using each code's POVM
//! conjugated by the realized permutation, and the Lüders update carries
//! the disturbance of every stage into the next. One sender may be
//! adversarial and transmit an arbitrary input sequence.
//!
//! Error probabilities come from Monte Carlo episodes and, when the number
//! of branch paths is small, from an exact walk of the branch tree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cq_channel::{unflatten, CqMacChannel, InputDistribution, ProductChannel};
use crate::error::{Error, Result};
use crate::qmatrix::{self, CMatrix};
use crate::states_povm::{sample_index, DensityOperator, Outcome, Povm, ZERO_PROB};

/// Largest branch tree walked exactly.
pub const EXACT_PATH_LIMIT: usize = 10_000;
/// Largest adversary sequence space searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;
/// Normal quantile for two-sided 95% intervals.
const Z95: f64 = 1.959_963_984_540_054;

/// A sender's code with permutation-based common randomness.
#[derive(Debug, Clone)]
pub struct RandomCode {
    sender: usize,
    codewords: Vec<Vec<usize>>,
    permutations: Vec<Vec<usize>>,
    base_povm: Povm,
}

impl RandomCode {
    pub fn new(sender: usize, codewords: Vec<Vec<usize>>, permutations: Vec<Vec<usize>>, base_povm: Povm) -> Result<Self> {
        let n = codewords.first().map(Vec::len).ok_or_else(|| Error::InvalidArgument("code needs a codeword".into()))?;
        if n == 0 {
            return Err(Error::InvalidArgument("codewords must be nonempty".into()));
        }
        if let Some(bad) = codewords.iter().find(|c| c.len() != n) {
            return Err(Error::LengthMismatch { expected: n, found: bad.len() });
        }
        if permutations.is_empty() {
            return Err(Error::InvalidArgument("code needs at least one permutation".into()));
        }
        for perm in &permutations {
            let mut seen = vec![false; n];
            if perm.len() != n || perm.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of {n} letters")));
            }
        }
        Ok(Self { sender, codewords, permutations, base_povm })
    }

    /// Code with the identity permutation only.
    pub fn deterministic(sender: usize, codewords: Vec<Vec<usize>>, base_povm: Povm) -> Result<Self> {
        let n = codewords.first().map_or(0, Vec::len);
        Self::new(sender, codewords, vec![(0..n).collect()], base_povm)
    }

    /// Code decoded by the pretty-good measurement on the codeword states,
    /// with every other sender averaged uniformly.
    pub fn with_pgm(
        ch: &CqMacChannel,
        sender: usize,
        codewords: Vec<Vec<usize>>,
        permutations: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let letters = slot_marginal_states(ch, sender)?;
        let mut states = Vec::with_capacity(codewords.len());
        for word in &codewords {
            let mut acc: Option<DensityOperator> = None;
            for &x in word {
                let s = letters.get(x).ok_or(Error::SymbolOutOfAlphabet { slot: sender, symbol: x, size: letters.len() })?;
                acc = Some(match acc {
                    None => s.clone(),
                    Some(a) => a.tensor(s),
                });
            }
            states.push(acc.ok_or_else(|| Error::InvalidArgument("codewords must be nonempty".into()))?);
        }
        let priors = InputDistribution::uniform(states.len());
        let povm = pgm_decoder(&states, &priors)?;
        Self::new(sender, codewords, permutations, povm)
    }

    pub fn sender(&self) -> usize {
        self.sender
    }

    pub fn block_length(&self) -> usize {
        self.codewords[0].len()
    }

    pub fn messages(&self) -> usize {
        self.codewords.len()
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn base_povm(&self) -> &Povm {
        &self.base_povm
    }

    /// Transmitted string for message `m` under permutation `gamma`:
    /// letter `l` is `x(m)[perm[l]]`.
    pub fn codeword(&self, m: usize, gamma: usize) -> Vec<usize> {
        let x = &self.codewords[m];
        self.permutations[gamma].iter().map(|&p| x[p]).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum AdversaryStrategy {
    /// Follows its code with this message distribution.
    Honest(InputDistribution),
    FixedSequence(Vec<usize>),
    /// Resolved to the worst fixed sequence before simulation.
    WorstCaseSearch { budget: usize },
}

impl AdversaryStrategy {
    pub fn label(&self) -> String {
        match self {
            AdversaryStrategy::Honest(_) => "honest".into(),
            AdversaryStrategy::FixedSequence(s) => {
                format!("fixed:{}", s.iter().map(usize::to_string).collect::<Vec<_>>().join("-"))
            }
            AdversaryStrategy::WorstCaseSearch { budget } => format!("worst:{budget}"),
        }
    }
}

/// Whether the adversary's sequence may depend on the honest senders'
/// realized permutations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum GammaKnowledge {
    #[default]
    Oblivious,
    Aware,
}

/// Decoder of one sender under one permutation.
#[derive(Debug, Clone)]
struct StageDecoder {
    elements: Vec<CMatrix>,
    sqrt: Vec<CMatrix>,
    labels: Vec<Outcome>,
}

/// Channel, codes, decode order and adversary of a simulation.
#[derive(Debug, Clone)]
pub struct SimSetup {
    channel: ProductChannel,
    codes: Vec<RandomCode>,
    order: Vec<usize>,
    adversary: Option<(usize, AdversaryStrategy)>,
    /// `decoders[slot][gamma]`
    decoders: Vec<Vec<StageDecoder>>,
}

impl SimSetup {
    /// `codes[i]` belongs to slot `i`; `order` lists slots in decode order.
    pub fn new(
        ch: &CqMacChannel,
        codes: Vec<RandomCode>,
        order: Vec<usize>,
        adversary: Option<(usize, AdversaryStrategy)>,
    ) -> Result<Self> {
        let k = ch.k();
        if codes.len() != k {
            return Err(Error::LengthMismatch { expected: k, found: codes.len() });
        }
        let n = codes[0].block_length();
        let channel = ch.product_extend(n)?;
        for (slot, code) in codes.iter().enumerate() {
            if code.sender != slot {
                return Err(Error::InvalidArgument(format!("code for slot {slot} names sender {}", code.sender)));
            }
            if code.block_length() != n {
                return Err(Error::LengthMismatch { expected: n, found: code.block_length() });
            }
            if code.base_povm.dim() != channel.out_dim() {
                return Err(Error::DimensionMismatch { expected: channel.out_dim(), found: code.base_povm.dim() });
            }
            check_symbols(ch, slot, code.codewords.iter().flatten())?;
        }
        let mut seen = vec![false; k];
        if order.len() != k {
            return Err(Error::LengthMismatch { expected: k, found: order.len() });
        }
        for &s in &order {
            if s >= k {
                return Err(Error::SlotOutOfRange { slot: s, k });
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidArgument(format!("decode order repeats slot {s}")));
            }
        }
        if let Some((slot, strategy)) = &adversary {
            if *slot >= k {
                return Err(Error::SlotOutOfRange { slot: *slot, k });
            }
            match strategy {
                AdversaryStrategy::FixedSequence(seq) => {
                    if seq.len() != n {
                        return Err(Error::LengthMismatch { expected: n, found: seq.len() });
                    }
                    check_symbols(ch, *slot, seq.iter())?;
                }
                AdversaryStrategy::Honest(d) => {
                    if d.len() != codes[*slot].messages() {
                        return Err(Error::DimensionMismatch { expected: codes[*slot].messages(), found: d.len() });
                    }
                }
                AdversaryStrategy::WorstCaseSearch { .. } => {}
            }
        }
        let d = ch.out_dim();
        let decoders = codes
            .iter()
            .map(|code| {
                let sqrt = code.base_povm.sqrt_elements()?;
                Ok(code
                    .permutations
                    .iter()
                    .map(|perm| StageDecoder {
                        elements: code.base_povm.elements().iter().map(|e| qmatrix::permute_factors(e, d, perm)).collect(),
                        sqrt: sqrt.iter().map(|e| qmatrix::permute_factors(e, d, perm)).collect(),
                        labels: code.base_povm.labels().to_vec(),
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { channel, codes, order, adversary, decoders })
    }

    pub fn k(&self) -> usize {
        self.codes.len()
    }

    pub fn block_length(&self) -> usize {
        self.channel.block_length()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn adversary(&self) -> Option<&(usize, AdversaryStrategy)> {
        self.adversary.as_ref()
    }

    pub fn codes(&self) -> &[RandomCode] {
        &self.codes
    }

    fn adversary_slot(&self) -> Option<usize> {
        self.adversary.as_ref().map(|(s, _)| *s)
    }

    pub fn honest_slots(&self) -> Vec<usize> {
        (0..self.k()).filter(|&s| Some(s) != self.adversary_slot()).collect()
    }

    /// Same setup with the adversary replaced.
    pub fn with_adversary(&self, adversary: Option<(usize, AdversaryStrategy)>) -> Result<Self> {
        Self::new(self.channel.base(), self.codes.clone(), self.order.clone(), adversary)
    }

    fn fixed_sequence(&self) -> Result<Option<&[usize]>> {
        match &self.adversary {
            Some((_, AdversaryStrategy::FixedSequence(s))) => Ok(Some(s)),
            Some((_, AdversaryStrategy::WorstCaseSearch { .. })) => {
                Err(Error::InvalidArgument("worst-case search must be resolved before simulation".into()))
            }
            _ => Ok(None),
        }
    }
}

fn check_symbols<'a>(ch: &CqMacChannel, slot: usize, symbols: impl Iterator<Item = &'a usize>) -> Result<()> {
    let size = ch.alphabet_sizes()[slot];
    for &x in symbols {
        if x >= size {
            return Err(Error::SymbolOutOfAlphabet { slot, symbol: x, size });
        }
    }
    Ok(())
}

/// States of one slot's symbols with every other slot averaged uniformly.
pub fn slot_marginal_states(ch: &CqMacChannel, slot: usize) -> Result<Vec<DensityOperator>> {
    if slot >= ch.k() {
        return Err(Error::SlotOutOfRange { slot, k: ch.k() });
    }
    let frozen: Vec<_> = (0..ch.k())
        .filter(|&s| s != slot)
        .map(|s| (s, crate::cq_channel::Frozen::Dist(InputDistribution::uniform(ch.alphabet_sizes()[s]))))
        .collect();
    Ok(ch.reduce(&[slot], &frozen)?.entries().to_vec())
}

// ---------------------------------------------------------------------------
// Episodes

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub slot: usize,
    pub outcome: Outcome,
    pub prob: f64,
    /// Hex digest of the posterior, rounded to 1e-9.
    pub posterior_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpisodeTranscript {
    pub decode_order: Vec<usize>,
    pub adversary: Option<usize>,
    /// Sent message per slot; `None` for an adversary sending a fixed sequence.
    pub messages: Vec<Option<usize>>,
    pub gammas: Vec<usize>,
    pub inputs: Vec<Vec<usize>>,
    pub stages: Vec<StageRecord>,
    /// Per slot; `None` for the adversary.
    pub correct: Vec<Option<bool>>,
}

fn posterior_hash(m: &CMatrix) -> String {
    // FNV-1a over rounded entries
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for z in m.iter() {
        for part in [z.re, z.im] {
            let r = (part * 1e9).round() as i64;
            for byte in r.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    format!("{h:016x}")
}

/// One sampled episode: messages and permutations drawn uniformly, then
/// every stage measured in decode order.
pub fn run_episode(setup: &SimSetup, rng: &mut impl Rng) -> Result<EpisodeTranscript> {
    let fixed = setup.fixed_sequence()?;
    let k = setup.k();
    let adv = setup.adversary_slot();
    let mut messages = vec![None; k];
    let mut gammas = vec![0; k];
    let mut inputs = Vec::with_capacity(k);
    for slot in 0..k {
        let code = &setup.codes[slot];
        let message = match (&setup.adversary, fixed) {
            (Some((s, _)), Some(_)) if *s == slot => None,
            (Some((s, AdversaryStrategy::Honest(d))), _) if *s == slot => Some(sample_index(d.probs(), rng)),
            _ => Some(rng.random_range(0..code.messages())),
        };
        gammas[slot] = rng.random_range(0..code.permutations.len());
        inputs.push(match message {
            Some(m) => code.codeword(m, gammas[slot]),
            None => fixed.expect("fixed sequence present").to_vec(),
        });
        messages[slot] = message;
    }
    let mut rho = setup.channel.apply(&inputs)?;
    let mut stages = Vec::with_capacity(k);
    let mut correct: Vec<Option<bool>> = (0..k).map(|s| if Some(s) == adv { None } else { Some(false) }).collect();
    for &slot in &setup.order {
        let dec = &setup.decoders[slot][gammas[slot]];
        let probs: Vec<f64> = dec.elements.iter().map(|e| trace_product(e, rho.mat()).max(0.0)).collect();
        if probs.iter().all(|&p| p <= ZERO_PROB) {
            // recorded as a failed decode; later stages have nothing to measure
            break;
        }
        let idx = sample_index(&probs, rng);
        let post = lueders(&dec.sqrt[idx], &rho, probs[idx]);
        let outcome = dec.labels[idx];
        if let (Some(m), Some(flag)) = (messages[slot], correct[slot].as_mut()) {
            *flag = outcome == Outcome::Message(m);
        }
        stages.push(StageRecord { slot, outcome, prob: probs[idx], posterior_hash: posterior_hash(post.mat()) });
        rho = post;
    }
    Ok(EpisodeTranscript {
        decode_order: setup.order.clone(),
        adversary: adv,
        messages,
        gammas,
        inputs,
        stages,
        correct,
    })
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

fn lueders(sqrt_d: &CMatrix, rho: &DensityOperator, prob: f64) -> DensityOperator {
    DensityOperator::from_mat_unchecked((sqrt_d * rho.mat() * sqrt_d).scale(1.0 / prob))
}

// ---------------------------------------------------------------------------
// Exact branch tree

struct Realization {
    weight: f64,
    messages: Vec<Option<usize>>,
    gammas: Vec<usize>,
    inputs: Vec<Vec<usize>>,
}

/// Every (message, permutation) combination with its probability.
fn realizations(setup: &SimSetup, fixed: Option<&[usize]>) -> Vec<Realization> {
    let k = setup.k();
    let mut per_slot: Vec<Vec<(f64, Option<usize>, usize, Vec<usize>)>> = Vec::with_capacity(k);
    for slot in 0..k {
        let code = &setup.codes[slot];
        let nl = code.permutations.len();
        let mut opts = Vec::new();
        for g in 0..nl {
            let wg = 1.0 / nl as f64;
            match (&setup.adversary, fixed) {
                (Some((s, _)), Some(seq)) if *s == slot => opts.push((wg, None, g, seq.to_vec())),
                (Some((s, AdversaryStrategy::Honest(d))), _) if *s == slot => {
                    for (m, &pm) in d.probs().iter().enumerate() {
                        if pm > 0.0 {
                            opts.push((wg * pm, Some(m), g, code.codeword(m, g)));
                        }
                    }
                }
                _ => {
                    let wm = 1.0 / code.messages() as f64;
                    for m in 0..code.messages() {
                        opts.push((wg * wm, Some(m), g, code.codeword(m, g)));
                    }
                }
            }
        }
        per_slot.push(opts);
    }
    let sizes: Vec<usize> = per_slot.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    (0..total)
        .map(|idx| {
            let pick = unflatten(&sizes, idx);
            let mut r = Realization { weight: 1.0, messages: vec![], gammas: vec![], inputs: vec![] };
            for (slot, &i) in pick.iter().enumerate() {
                let (w, m, g, x) = &per_slot[slot][i];
                r.weight *= w;
                r.messages.push(*m);
                r.gammas.push(*g);
                r.inputs.push(x.clone());
            }
            r
        })
        .collect()
}

fn realization_count(setup: &SimSetup) -> usize {
    let adv = setup.adversary.as_ref();
    (0..setup.k())
        .map(|slot| {
            let code = &setup.codes[slot];
            let per_gamma = match adv {
                Some((s, AdversaryStrategy::Honest(d))) if *s == slot => d.probs().iter().filter(|&&p| p > 0.0).count(),
                Some((s, _)) if *s == slot => 1,
                _ => code.messages(),
            };
            per_gamma * code.permutations.len()
        })
        .product()
}

/// Upper bound on branch-tree leaves summed over all realizations.
pub fn path_count(setup: &SimSetup) -> usize {
    let outcomes: usize = setup.order.iter().map(|&s| setup.codes[s].base_povm.len()).product();
    realization_count(setup).saturating_mul(outcomes)
}

pub fn exact_tractable(setup: &SimSetup) -> bool {
    path_count(setup) <= EXACT_PATH_LIMIT
}

/// Leaves `(outcome index per stage, probability)` of one realization.
fn branch_leaves(setup: &SimSetup, inputs: &[Vec<usize>], gammas: &[usize]) -> Result<Vec<(Vec<usize>, f64)>> {
    fn walk(
        setup: &SimSetup,
        stage: usize,
        rho: &DensityOperator,
        prob: f64,
        gammas: &[usize],
        path: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        let slot = setup.order[stage];
        let dec = &setup.decoders[slot][gammas[slot]];
        let last = stage + 1 == setup.order.len();
        for (idx, e) in dec.elements.iter().enumerate() {
            let p = trace_product(e, rho.mat()).max(0.0);
            if p <= ZERO_PROB {
                continue;
            }
            path.push(idx);
            if last {
                out.push((path.clone(), prob * p));
            } else {
                let post = lueders(&dec.sqrt[idx], rho, p);
                walk(setup, stage + 1, &post, prob * p, gammas, path, out);
            }
            path.pop();
        }
    }
    let rho = setup.channel.apply(inputs)?;
    let mut out = Vec::new();
    walk(setup, 0, &rho, 1.0, gammas, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Error of each honest slot for one realization.
fn realization_errors(setup: &SimSetup, r: &Realization) -> Result<Vec<f64>> {
    let leaves = branch_leaves(setup, &r.inputs, &r.gammas)?;
    let mut err = vec![0.0; setup.k()];
    // probability mass lost to zero branches counts as error
    let mut decoded = vec![0.0; setup.k()];
    for (path, p) in &leaves {
        for (stage, &idx) in path.iter().enumerate() {
            let slot = setup.order[stage];
            if let Some(m) = r.messages[slot] {
                if setup.decoders[slot][r.gammas[slot]].labels[idx] == Outcome::Message(m) {
                    decoded[slot] += p;
                }
            }
        }
    }
    for slot in 0..setup.k() {
        err[slot] = (1.0 - decoded[slot]).max(0.0);
    }
    Ok(err)
}

/// Exact per-slot error (`None` for the adversary), or `None` overall
/// when the tree is too large.
pub fn exact_errors(setup: &SimSetup) -> Result<Option<Vec<Option<f64>>>> {
    let fixed = setup.fixed_sequence()?;
    if !exact_tractable(setup) {
        return Ok(None);
    }
    let adv = setup.adversary_slot();
    let mut err = vec![0.0; setup.k()];
    for r in realizations(setup, fixed) {
        let e = realization_errors(setup, &r)?;
        for slot in 0..setup.k() {
            err[slot] += r.weight * e[slot];
        }
    }
    Ok(Some((0..setup.k()).map(|s| if Some(s) == adv { None } else { Some(err[s]) }).collect()))
}

/// Marginal outcome distribution of every stage for fixed messages,
/// permutations and adversary sequence; indexed by stage, then outcome.
pub fn stage_marginals(
    setup: &SimSetup,
    messages: &[Option<usize>],
    gammas: &[usize],
    adversary_sequence: Option<&[usize]>,
) -> Result<Vec<Vec<f64>>> {
    let k = setup.k();
    if messages.len() != k || gammas.len() != k {
        return Err(Error::LengthMismatch { expected: k, found: messages.len().min(gammas.len()) });
    }
    let inputs: Vec<Vec<usize>> = (0..k)
        .map(|s| match messages[s] {
            Some(m) => Ok(setup.codes[s].codeword(m, gammas[s])),
            None => adversary_sequence
                .map(<[usize]>::to_vec)
                .ok_or_else(|| Error::InvalidArgument(format!("slot {s} has neither a message nor a sequence"))),
        })
        .collect::<Result<_>>()?;
    let leaves = branch_leaves(setup, &inputs, gammas)?;
    let mut out: Vec<Vec<f64>> = setup.order.iter().map(|&s| vec![0.0; setup.codes[s].base_povm.len()]).collect();
    for (path, p) in leaves {
        for (stage, idx) in path.into_iter().enumerate() {
            out[stage][idx] += p;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Error estimates

#[derive(Debug, Clone, Serialize)]
pub struct SenderError {
    pub slot: usize,
    pub exact: Option<f64>,
    pub mc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub decode_order: Vec<usize>,
    pub adversary: Option<usize>,
    pub strategy: String,
    pub trials: usize,
    pub seed: u64,
    pub senders: Vec<SenderError>,
}

/// Wilson score interval at 95% for `failures` out of `trials`.
pub fn wilson_interval(failures: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if failures == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// RNG of trial `trial` under master seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Monte Carlo error rate per honest slot, with the exact value when
/// the branch tree is small. A worst-case adversary is resolved first.
pub fn error_probability(setup: &SimSetup, trials: usize, seed: u64) -> Result<ErrorReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let resolved;
    let setup = match setup.adversary.as_ref() {
        Some((slot, AdversaryStrategy::WorstCaseSearch { budget })) => {
            let mut rng = trial_rng(seed, u64::MAX);
            let wc = worst_case_adversary(setup, GammaKnowledge::Oblivious, *budget, &mut rng)?;
            let seq = wc.overall_sequence.clone();
            resolved = setup.with_adversary(Some((*slot, AdversaryStrategy::FixedSequence(seq))))?;
            &resolved
        }
        _ => setup,
    };
    let exact = exact_errors(setup)?;
    let k = setup.k();
    let failures = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let tr = run_episode(setup, &mut rng)?;
            Ok::<_, Error>(tr.correct.iter().map(|c| usize::from(*c == Some(false))).collect::<Vec<_>>())
        })
        .try_reduce(|| vec![0; k], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
    let senders = setup
        .honest_slots()
        .into_iter()
        .map(|slot| {
            let (ci_low, ci_high) = wilson_interval(failures[slot], trials);
            SenderError {
                slot,
                exact: exact.as_ref().and_then(|e| e[slot]),
                mc: failures[slot] as f64 / trials as f64,
                ci_low,
                ci_high,
                failures: failures[slot],
            }
        })
        .collect();
    Ok(ErrorReport {
        decode_order: setup.order.clone(),
        adversary: setup.adversary_slot(),
        strategy: setup.adversary.as_ref().map_or("none".into(), |(_, s)| s.label()),
        trials,
        seed,
        senders,
    })
}

/// `n` sampled episodes with per-trial RNG streams.
pub fn transcripts(setup: &SimSetup, trials: usize, seed: u64) -> Result<Vec<EpisodeTranscript>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_episode(setup, &mut trial_rng(seed, t)))
        .collect()
}

// ---------------------------------------------------------------------------
// Worst-case adversary

#[derive(Debug, Clone, Serialize)]
pub struct WorstSender {
    pub slot: usize,
    pub sequence: Vec<usize>,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstCase {
    pub adversary: usize,
    pub knowledge: GammaKnowledge,
    /// Sequence maximizing the summed honest error.
    pub overall_sequence: Vec<usize>,
    pub per_sender: Vec<WorstSender>,
    /// False when only part of the sequence space was searched.
    pub verified: bool,
    pub sequences_tried: usize,
}

/// Per-gamma-combination exact errors for a fixed adversary sequence:
/// `(gamma tuple, weight, error per slot)`.
fn errors_by_gamma(setup: &SimSetup, seq: &[usize]) -> Result<Vec<(Vec<usize>, f64, Vec<f64>)>> {
    let mut groups: Vec<(Vec<usize>, f64, Vec<f64>)> = Vec::new();
    for r in realizations(setup, Some(seq)) {
        let e = realization_errors(setup, &r)?;
        let pos = groups.iter().position(|(g, _, _)| *g == r.gammas);
        let entry = match pos {
            Some(i) => &mut groups[i],
            None => {
                groups.push((r.gammas.clone(), 0.0, vec![0.0; setup.k()]));
                groups.last_mut().expect("just pushed")
            }
        };
        entry.1 += r.weight;
        for (acc, v) in entry.2.iter_mut().zip(&e) {
            *acc += r.weight * v;
        }
    }
    // turn joint weights into conditional errors
    for (_, w, e) in &mut groups {
        e.iter_mut().for_each(|v| *v /= *w);
    }
    Ok(groups)
}

/// Maximizes each honest sender's error over adversary sequences. The
/// search is exhaustive when the sequence space has at most
/// [`EXHAUSTIVE_LIMIT`] members and the branch tree is exact; otherwise
/// `budget` random sequences are scored by Monte Carlo and the result is
/// flagged unverified.
pub fn worst_case_adversary(
    setup: &SimSetup,
    knowledge: GammaKnowledge,
    budget: usize,
    rng: &mut impl Rng,
) -> Result<WorstCase> {
    let adv = setup
        .adversary_slot()
        .ok_or_else(|| Error::InvalidArgument("setup has no adversary".into()))?;
    let n = setup.block_length();
    let alphabet = setup.channel.base().alphabet_sizes()[adv];
    let space = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(alphabet));
    let probe = setup.with_adversary(Some((adv, AdversaryStrategy::FixedSequence(vec![0; n]))))?;
    let exact = exact_tractable(&probe);
    let exhaustive = exact && space.is_some_and(|s| s <= EXHAUSTIVE_LIMIT);
    if knowledge == GammaKnowledge::Aware && !exhaustive {
        return Err(Error::InvalidArgument("gamma-aware search needs an exhaustive exact search".into()));
    }
    let sequences: Vec<Vec<usize>> = if exhaustive {
        (0..space.expect("checked")).map(|i| unflatten(&vec![alphabet; n], i)).collect()
    } else {
        (0..budget.max(1)).map(|_| (0..n).map(|_| rng.random_range(0..alphabet)).collect()).collect()
    };
    let honest = setup.honest_slots();
    let mc_seed: u64 = rng.random();

    let mut scored: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(sequences.len());
    let mut by_gamma: Vec<Vec<(Vec<usize>, f64, Vec<f64>)>> = Vec::new();
    for seq in sequences {
        let errs = if exact {
            let groups = errors_by_gamma(setup, &seq)?;
            let mut total = vec![0.0; setup.k()];
            for (_, w, e) in &groups {
                for (t, v) in total.iter_mut().zip(e) {
                    *t += w * v;
                }
            }
            by_gamma.push(groups);
            total
        } else {
            let s = setup.with_adversary(Some((adv, AdversaryStrategy::FixedSequence(seq.clone()))))?;
            let report = error_probability(&s, 10_000, mc_seed)?;
            let mut total = vec![0.0; setup.k()];
            for se in report.senders {
                total[se.slot] = se.mc;
            }
            total
        };
        scored.push((seq, errs));
    }

    let overall = (0..scored.len()).fold(0, |best, i| {
        let sum = |j: usize| honest.iter().map(|&s| scored[j].1[s]).sum::<f64>();
        if sum(i) > sum(best) + 1e-15 {
            i
        } else {
            best
        }
    });
    let per_sender = honest
        .iter()
        .map(|&slot| match knowledge {
            GammaKnowledge::Oblivious => {
                let best = (0..scored.len()).fold(0, |b, i| if scored[i].1[slot] > scored[b].1[slot] + 1e-15 { i } else { b });
                WorstSender { slot, sequence: scored[best].0.clone(), error: scored[best].1[slot] }
            }
            GammaKnowledge::Aware => {
                // the adversary picks its sequence after seeing the permutations
                let n_groups = by_gamma[0].len();
                let mut error = 0.0;
                let mut top = (0, f64::NEG_INFINITY);
                for g in 0..n_groups {
                    let (i, e) = (0..by_gamma.len())
                        .map(|i| (i, by_gamma[i][g].2[slot]))
                        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 + 1e-15 { b } else { a });
                    error += by_gamma[0][g].1 * e;
                    if e > top.1 {
                        top = (i, e);
                    }
                }
                WorstSender { slot, sequence: scored[top.0].0.clone(), error }
            }
        })
        .collect();
    Ok(WorstCase {
        adversary: adv,
        knowledge,
        overall_sequence: scored[overall].0.clone(),
        per_sender,
        verified: exhaustive,
        sequences_tried: scored.len(),
    })
}

// ---------------------------------------------------------------------------
// Pretty-good measurement

/// Square-root measurement `D_m = S^{-1/2} p_m rho_m S^{-1/2}` with
/// `S = sum_m p_m rho_m`, plus an abstain element `I - sum_m D_m`.
pub fn pgm_decoder(states: &[DensityOperator], priors: &InputDistribution) -> Result<Povm> {
    let first = states.first().ok_or(Error::DegenerateEnsemble)?;
    if priors.len() != states.len() {
        return Err(Error::LengthMismatch { expected: states.len(), found: priors.len() });
    }
    let dim = first.dim();
    let mut s = qmatrix::zeros(dim);
    for (st, &p) in states.iter().zip(priors.probs()) {
        if st.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: st.dim() });
        }
        s += st.mat().scale(p);
    }
    if qmatrix::max_abs(&s) <= 1e-12 {
        return Err(Error::DegenerateEnsemble);
    }
    let inv = qmatrix::mat_inv_sqrt_support(&s, 1e-10)?;
    let mut elements: Vec<CMatrix> = states
        .iter()
        .zip(priors.probs())
        .map(|(st, &p)| qmatrix::hermitian_part(&(&inv * st.mat().scale(p) * &inv)))
        .collect();
    let mut rest = qmatrix::identity(dim);
    for e in &elements {
        rest -= e;
    }
    // clear rounding noise so the remainder is PSD
    let eig = qmatrix::herm_eig(&qmatrix::hermitian_part(&rest))?;
    let rest = eig.map(|v| if v.abs() < 1e-12 { 0.0 } else { v });
    let last = elements.len();
    elements.push(rest);
    let labels = (0..last).map(Outcome::Message).chain(std::iter::once(Outcome::ABSTAIN)).collect();
    Povm::new(elements, labels)
}

/// PGM over one slot's symbols (other slots averaged), uniform priors.
pub fn pgm_stage_povm(ch: &CqMacChannel, slot: usize) -> Result<Povm> {
    let states = slot_marginal_states(ch, slot)?;
    let priors = InputDistribution::uniform(states.len());
    pgm_decoder(&states, &priors)
}

// ---------------------------------------------------------------------------
// Built-in example

#[derive(Debug, Clone, Serialize)]
pub struct DemoRow {
    pub case: String,
    pub decode_order: Vec<usize>,
    pub adversary: Option<usize>,
    /// Adversary symbol achieving the reported error.
    pub adversary_symbol: Option<usize>,
    /// Exact error per slot; `None` for the adversary.
    pub errors: Vec<Option<f64>>,
    pub expected: Vec<Option<f64>>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub rows: Vec<DemoRow>,
    /// Case 2c with sender 1 sending message 0: outcome distribution of
    /// each stage in decode order.
    pub case_2c_stage_distributions: Vec<Vec<f64>>,
    pub all_pass: bool,
}

const DEMO_TOL: f64 = 1e-12;

/// Setup of the built-in two-sender example: both senders have two
/// messages with single-letter codewords; sender 2's third symbol is
/// available to an adversary only.
pub fn example_setup(order: Vec<usize>, adversary: Option<(usize, AdversaryStrategy)>) -> Result<SimSetup> {
    let ch = crate::cq_channel::example_channel();
    let (d1, d2) = crate::cq_channel::example_povms();
    let codes = vec![
        RandomCode::deterministic(0, vec![vec![0], vec![1]], d1)?,
        RandomCode::deterministic(1, vec![vec![0], vec![1]], d2)?,
    ];
    SimSetup::new(&ch, codes, order, adversary)
}

/// Exact errors of the six trust configurations of the built-in example.
pub fn example_demo() -> Result<DemoReport> {
    let mut rows = Vec::new();
    let worst = |order: Vec<usize>, adv: usize| -> Result<(Option<usize>, Vec<Option<f64>>)> {
        let setup = example_setup(order, Some((adv, AdversaryStrategy::WorstCaseSearch { budget: 0 })))?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let wc = worst_case_adversary(&setup, GammaKnowledge::Oblivious, 0, &mut rng)?;
        let mut errors = vec![None; 2];
        let mut symbol = None;
        for ws in wc.per_sender {
            errors[ws.slot] = Some(ws.error);
            symbol = Some(ws.sequence[0]);
        }
        Ok((symbol, errors))
    };
    let honest = |order: Vec<usize>| -> Result<Vec<Option<f64>>> {
        Ok(exact_errors(&example_setup(order, None)?)?.expect("example tree is small"))
    };
    let mut push = |case: &str, order: Vec<usize>, adversary: Option<usize>, symbol: Option<usize>, errors: Vec<Option<f64>>, expected: Vec<Option<f64>>| {
        let pass = errors.iter().zip(&expected).all(|(e, x)| match (e, x) {
            (Some(e), Some(x)) => (e - x).abs() <= DEMO_TOL,
            (None, None) => true,
            _ => false,
        });
        rows.push(DemoRow { case: case.into(), decode_order: order, adversary, adversary_symbol: symbol, errors, expected, pass });
    };

    let (sym, e) = worst(vec![0, 1], 1)?;
    push("1a", vec![0, 1], Some(1), sym, e, vec![Some(0.0), None]);
    push("1b", vec![0, 1], None, None, honest(vec![0, 1])?, vec![Some(0.0), Some(0.0)]);
    let (sym, e) = worst(vec![0, 1], 0)?;
    push("1c", vec![0, 1], Some(0), sym, e, vec![None, Some(0.0)]);
    let (sym, e) = worst(vec![1, 0], 0)?;
    push("2a", vec![1, 0], Some(0), sym, e, vec![None, Some(0.0)]);
    push("2b", vec![1, 0], None, None, honest(vec![1, 0])?, vec![Some(0.0), Some(0.0)]);
    let fixed = example_setup(vec![1, 0], Some((1, AdversaryStrategy::FixedSequence(vec![2]))))?;
    let e = exact_errors(&fixed)?.expect("example tree is small");
    push("2c", vec![1, 0], Some(1), Some(2), e, vec![Some(0.5), None]);

    let stage = stage_marginals(&fixed, &[Some(0), None], &[0, 0], Some(&[2]))?;
    let stage_ok = stage.iter().all(|d| d.len() == 2 && d.iter().all(|p| (p - 0.5).abs() <= DEMO_TOL));
    let all_pass = rows.iter().all(|r| r.pass) && stage_ok;
    Ok(DemoReport { rows, case_2c_stage_distributions: stage, all_pass })
}

// ---------------------------------------------------------------------------
// Export

/// Summary rows with 1-based slot numbers.
pub fn summary_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from("order,adversary_slot,strategy,sender,err_exact,err_mc,ci_low,ci_high,trials,seed\n");
    for r in reports {
        let order = r.decode_order.iter().map(|s| (s + 1).to_string()).collect::<Vec<_>>().join("-");
        let adv = r.adversary.map_or(String::new(), |s| (s + 1).to_string());
        for s in &r.senders {
            let exact = s.exact.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{order},{adv},{},{},{exact},{},{},{},{},{}\n",
                r.strategy,
                s.slot + 1,
                s.mc,
                s.ci_low,
                s.ci_high,
                r.trials,
                r.seed
            ));
        }
    }
    out
}

/// One JSON object per line.
pub fn transcripts_jsonl(transcripts: &[EpisodeTranscript]) -> String {
    let mut out = String::new();
    for t in transcripts {
        out.push_str(&serde_json::to_string(t).expect("transcripts serialize"));
        out.push('\n');
    }
    out
}
