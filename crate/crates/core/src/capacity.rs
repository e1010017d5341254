//! Max-min rate bounds and per-sender rate regions.
//!
//! Every bound has the form `max_p min_q sum_b w_b chi(p; V_{b,q})`: the
//! target sender picks `p`, the adversarial sender picks an i.i.d. input
//! distribution `q`, senders decoded earlier are conditioned on (branches
//! `b` with weights from their input distributions) and senders decoded
//! later are averaged out. The objective is concave in `p` and convex in
//! `q`, so the max-min equals the min-max and the optimizer reports the
//! bracket between the two as its gap estimate.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::adversarial::{self, SymVerdict};
use crate::cq_channel::{unflatten, CqMacChannel, Frozen, InputDistribution};
use crate::entropic::entropy_unchecked;
use crate::error::{Error, Result};
use crate::qmatrix::{self, CMatrix};
use crate::states_povm::{induced_channel, Povm, QuantumChannel};

/// Largest sender count accepted by [`region_kuser`].
pub const MAX_K: usize = 4;
/// Upper bound on simplex grid points; the resolution is lowered to fit.
const MAX_GRID_POINTS: usize = 5000;
/// Cap on accepted moves per pattern-search step size.
const MAX_MOVES_PER_ROUND: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerConfig {
    /// Initial grid points per unit of each simplex coordinate.
    pub grid_resolution: usize,
    /// Number of step halvings in the local pattern search.
    pub refinement_rounds: usize,
    /// Accepted bracket width between max-min and min-max, in bits.
    pub tolerance: f64,
    pub max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { grid_resolution: 8, refinement_rounds: 24, tolerance: 1e-4, max_evals: 5_000_000 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution == 0 || self.refinement_rounds == 0 || self.max_evals == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("optimizer settings must all be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxMinResult {
    /// Best max-min value found (a lower bound on the saddle value).
    pub rate: f64,
    pub p: InputDistribution,
    pub q: InputDistribution,
    /// Best min-max value found (an upper bound on the saddle value).
    pub upper: f64,
    pub gap: f64,
    pub evals: usize,
}

/// `f(p, q) = sum_b w_b chi(p; V_{b,q})` with `V_{b,q}(x) = sum_t q(t) W_b(x, t)`.
#[derive(Debug)]
pub struct MaxMinObjective {
    nx: usize,
    nt: usize,
    dim: usize,
    /// `(w_b, W_b)` with `W_b[x * nt + t]`.
    branches: Vec<(f64, Vec<CMatrix>)>,
    evals: AtomicUsize,
}

impl MaxMinObjective {
    /// Objective for `honest` against `adversary`. Slots in `conditioned`
    /// become branches; every other slot must appear in `frozen`. The
    /// post-channel acts on the output before any averaging.
    pub fn build(
        ch: &CqMacChannel,
        honest: usize,
        adversary: usize,
        conditioned: &[(usize, InputDistribution)],
        frozen: &[(usize, Frozen)],
        post: Option<&QuantumChannel>,
    ) -> Result<Self> {
        for &s in [honest, adversary].iter().chain(conditioned.iter().map(|(s, _)| s)) {
            if s >= ch.k() {
                return Err(Error::SlotOutOfRange { slot: s, k: ch.k() });
            }
        }
        if honest == adversary {
            return Err(Error::InvalidArgument("honest and adversary slots must differ".into()));
        }
        for (s, d) in conditioned {
            if d.len() != ch.alphabet_sizes()[*s] {
                return Err(Error::DimensionMismatch { expected: ch.alphabet_sizes()[*s], found: d.len() });
            }
        }
        let composed;
        let base = match post {
            Some(q) => {
                composed = ch.post_compose(q)?;
                &composed
            }
            None => ch,
        };
        let mut keep = vec![honest, adversary];
        keep.extend(conditioned.iter().map(|(s, _)| *s));
        let reduced = base.reduce(&keep, frozen)?;
        let nx = reduced.alphabet_sizes()[0];
        let nt = reduced.alphabet_sizes()[1];
        let cond_sizes: Vec<usize> = reduced.alphabet_sizes()[2..].to_vec();
        let n_branches: usize = cond_sizes.iter().product();
        let mut branches = Vec::with_capacity(n_branches);
        let mut inputs = vec![0; keep.len()];
        for idx in 0..n_branches {
            let b = unflatten(&cond_sizes, idx);
            let w: f64 = b.iter().zip(conditioned).map(|(&sym, (_, d))| d.probs()[sym]).product();
            if w == 0.0 {
                continue;
            }
            inputs[2..].copy_from_slice(&b);
            let mut table = Vec::with_capacity(nx * nt);
            for x in 0..nx {
                for t in 0..nt {
                    inputs[0] = x;
                    inputs[1] = t;
                    table.push(reduced.entry(&inputs)?.mat().clone());
                }
            }
            branches.push((w, table));
        }
        Ok(Self { nx, nt, dim: reduced.out_dim(), branches, evals: AtomicUsize::new(0) })
    }

    pub fn honest_size(&self) -> usize {
        self.nx
    }

    pub fn adversary_size(&self) -> usize {
        self.nt
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn evals(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let mut acc = 0.0;
        for (w, table) in &self.branches {
            let mut avg = qmatrix::zeros(self.dim);
            let mut cond = 0.0;
            for (x, &px) in p.iter().enumerate() {
                if px <= 0.0 {
                    continue;
                }
                let mut s = qmatrix::zeros(self.dim);
                for (t, &qt) in q.iter().enumerate() {
                    if qt > 0.0 {
                        s += table[x * self.nt + t].scale(qt);
                    }
                }
                cond += px * entropy_unchecked(&s);
                avg += s.scale(px);
            }
            acc += w * (entropy_unchecked(&avg) - cond).max(0.0);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Simplex search

/// All points of the n-simplex with coordinates in multiples of `1/r`,
/// with `r` lowered until the count fits [`MAX_GRID_POINTS`].
fn simplex_grid(n: usize, mut r: usize) -> Vec<Vec<f64>> {
    fn count(n: usize, r: usize) -> f64 {
        // C(r + n - 1, n - 1)
        (1..n).fold(1.0, |acc, i| acc * (r + i) as f64 / i as f64)
    }
    while r > 1 && count(n, r) > MAX_GRID_POINTS as f64 {
        r -= 1;
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, left: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.iter().map(|&c| c as f64 / r as f64).collect());
            return;
        }
        for c in (0..=left).rev() {
            cur[i] = c;
            rec(i + 1, left - c, r, cur, out);
        }
    }
    rec(0, r, r, &mut cur, &mut out);
    out
}

/// Minimizes `f` over the simplex by moving mass between coordinate pairs,
/// halving the step when no move improves.
fn pattern_search(
    start: Vec<f64>,
    step: f64,
    rounds: usize,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    stop: &(dyn Fn() -> bool + Sync),
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut x = start;
    let mut fx = f(&x);
    let mut h = step;
    for _ in 0..rounds {
        for _ in 0..MAX_MOVES_PER_ROUND {
            let mut improved = false;
            for a in 0..n {
                for b in 0..n {
                    if a == b || x[b] <= 0.0 {
                        continue;
                    }
                    let s = h.min(x[b]);
                    let mut y = x.clone();
                    y[a] += s;
                    y[b] = if s == x[b] { 0.0 } else { y[b] - s };
                    let fy = f(&y);
                    if fy < fx - 1e-15 {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
            }
            if !improved || stop() {
                break;
            }
        }
        if stop() {
            break;
        }
        h /= 2.0;
    }
    (x, fx)
}

/// Grid scan followed by pattern search from the best grid point.
fn minimize(n: usize, cfg: &OptimizerConfig, f: &(dyn Fn(&[f64]) -> f64 + Sync), stop: &(dyn Fn() -> bool + Sync), parallel: bool) -> (Vec<f64>, f64) {
    if n == 1 {
        return (vec![1.0], f(&[1.0]));
    }
    let grid = simplex_grid(n, cfg.grid_resolution);
    let values: Vec<f64> = if parallel {
        grid.par_iter().map(|p| f(p)).collect()
    } else {
        grid.iter().map(|p| f(p)).collect()
    };
    let best = (0..grid.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    pattern_search(grid[best].clone(), 1.0 / cfg.grid_resolution as f64, cfg.refinement_rounds, f, stop)
}

fn clean(v: Vec<f64>) -> InputDistribution {
    let s: f64 = v.iter().sum();
    InputDistribution::new(v.iter().map(|x| x / s).collect()).expect("search stays on the simplex")
}

/// Max over `p`, min over `q`, with a min-max bracket as the gap estimate.
pub fn optimize(obj: &MaxMinObjective, cfg: &OptimizerConfig) -> Result<MaxMinResult> {
    cfg.validate()?;
    let (nx, nt) = (obj.nx, obj.nt);
    let stop = || obj.evals() >= cfg.max_evals;

    let inner = |p: &[f64]| minimize(nt, cfg, &|q| obj.value(p, q), &stop, false);
    let g = |p: &[f64]| -inner(p).1;
    let (p_star, neg_lower) = minimize(nx, cfg, &g, &stop, true);
    let lower = -neg_lower;
    let (q_star, _) = inner(&p_star);

    // max_p f(p, q*) bounds the saddle value from above
    let best_response = |q: &[f64]| -minimize(nx, cfg, &|p| -obj.value(p, q), &stop, false).1;
    let mut upper = best_response(&q_star);
    if upper - lower > cfg.tolerance {
        let (_, minmax) = minimize(nt, cfg, &best_response, &stop, true);
        upper = upper.min(minmax);
    }
    let result = MaxMinResult {
        rate: lower.max(0.0),
        p: clean(p_star),
        q: clean(q_star),
        upper,
        gap: (upper - lower).max(0.0),
        evals: obj.evals(),
    };
    if stop() || result.gap > cfg.tolerance {
        return Err(Error::BudgetExhausted(Box::new(result)));
    }
    Ok(result)
}

/// `max_p min_q chi(p; post o W(p, q, frozen))` for one honest slot.
pub fn maxmin_rate(
    ch: &CqMacChannel,
    honest: usize,
    adversary: usize,
    frozen: &[(usize, Frozen)],
    post: Option<&QuantumChannel>,
    cfg: &OptimizerConfig,
) -> Result<MaxMinResult> {
    maxmin_conditional(ch, honest, adversary, &[], frozen, post, cfg)
}

/// As [`maxmin_rate`], conditioned on the symbols of the `conditioned` slots.
pub fn maxmin_conditional(
    ch: &CqMacChannel,
    honest: usize,
    adversary: usize,
    conditioned: &[(usize, InputDistribution)],
    frozen: &[(usize, Frozen)],
    post: Option<&QuantumChannel>,
    cfg: &OptimizerConfig,
) -> Result<MaxMinResult> {
    let obj = MaxMinObjective::build(ch, honest, adversary, conditioned, frozen, post)?;
    optimize(&obj, cfg)
}

// ---------------------------------------------------------------------------
// Regions

/// Which post-channel guards a sender decoded after its adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum PostForm {
    /// Every stage decoded before the target, composed in decode order.
    #[default]
    Derivation,
    /// Only the stage that decoded the adversary.
    Statement,
}

#[derive(Debug, Clone, Default)]
pub struct RegionOptions {
    pub post_form: PostForm,
    /// Input distributions of the non-target honest senders, by slot.
    /// Uniform when absent.
    pub honest: Option<Vec<InputDistribution>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SenderBound {
    pub slot: usize,
    pub rate: f64,
    /// Minimizing adversary slot.
    pub adversary: usize,
    pub p: InputDistribution,
    pub q: InputDistribution,
    pub gap: f64,
    pub evals: usize,
    /// `(adversary slot, max-min value)` for every candidate.
    pub candidates: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRegion {
    pub decode_order: Vec<usize>,
    /// Indexed by slot.
    pub senders: Vec<SenderBound>,
    pub grid_resolution: usize,
    pub refinement_rounds: usize,
    pub tolerance: f64,
}

impl RateRegion {
    pub fn bounds(&self) -> Vec<f64> {
        self.senders.iter().map(|s| s.rate).collect()
    }

    pub fn max_gap(&self) -> f64 {
        self.senders.iter().map(|s| s.gap).fold(0.0, f64::max)
    }
}

fn check_order(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if order.len() != k {
        return Err(Error::LengthMismatch { expected: k, found: order.len() });
    }
    for &s in order {
        if s >= k {
            return Err(Error::SlotOutOfRange { slot: s, k });
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidArgument(format!("decode order repeats slot {s}")));
        }
    }
    Ok(())
}

fn stage_channels(stage_povms: &[Povm], needed: usize) -> Result<Vec<QuantumChannel>> {
    if stage_povms.len() < needed {
        return Err(Error::MissingStagePovm { stage: stage_povms.len() + 1 });
    }
    stage_povms[..needed].iter().map(induced_channel).collect()
}

fn honest_dists(ch: &CqMacChannel, opts: &RegionOptions) -> Result<Vec<InputDistribution>> {
    match &opts.honest {
        None => Ok(ch.alphabet_sizes().iter().map(|&n| InputDistribution::uniform(n)).collect()),
        Some(d) => {
            if d.len() != ch.k() {
                return Err(Error::LengthMismatch { expected: ch.k(), found: d.len() });
            }
            for (s, dist) in d.iter().enumerate() {
                if dist.len() != ch.alphabet_sizes()[s] {
                    return Err(Error::DimensionMismatch { expected: ch.alphabet_sizes()[s], found: dist.len() });
                }
            }
            Ok(d.clone())
        }
    }
}

fn compose(channels: &[QuantumChannel]) -> Result<QuantumChannel> {
    let mut it = channels.iter();
    let mut acc = it.next().expect("at least one stage").clone();
    for c in it {
        acc = acc.then(c)?;
    }
    Ok(acc)
}

fn pick_min(slot: usize, results: Vec<(usize, MaxMinResult)>) -> SenderBound {
    let candidates = results.iter().map(|(j, r)| (*j, r.rate)).collect();
    let evals = results.iter().map(|(_, r)| r.evals).sum();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.1.rate < a.1.rate { b } else { a })
        .expect("at least one adversary candidate");
    SenderBound {
        slot,
        rate: best.1.rate,
        adversary: best.0,
        p: best.1.p,
        q: best.1.q,
        gap: best.1.gap,
        evals,
        candidates,
    }
}

fn assemble(order: &[usize], mut senders: Vec<SenderBound>, cfg: &OptimizerConfig) -> RateRegion {
    senders.sort_by_key(|s| s.slot);
    RateRegion {
        decode_order: order.to_vec(),
        senders,
        grid_resolution: cfg.grid_resolution,
        refinement_rounds: cfg.refinement_rounds,
        tolerance: cfg.tolerance,
    }
}

/// Two senders decoded in `order`; the stage-1 POVM guards the second bound.
pub fn region_2user(ch: &CqMacChannel, order: &[usize], stage1: &Povm, cfg: &OptimizerConfig) -> Result<RateRegion> {
    if ch.k() != 2 {
        return Err(Error::InvalidArgument(format!("expected 2 senders, found {}", ch.k())));
    }
    check_order(order, 2)?;
    let (a, b) = (order[0], order[1]);
    let e1 = induced_channel(stage1)?;
    let first = maxmin_rate(ch, a, b, &[], None, cfg)?;
    let second = maxmin_rate(ch, b, a, &[], Some(&e1), cfg)?;
    Ok(assemble(order, vec![pick_min(a, vec![(b, first)]), pick_min(b, vec![(a, second)])], cfg))
}

/// Three senders decoded in `order` with POVMs for the first two stages.
pub fn region_3user(
    ch: &CqMacChannel,
    order: &[usize],
    stage_povms: &[Povm],
    opts: &RegionOptions,
    cfg: &OptimizerConfig,
) -> Result<RateRegion> {
    if ch.k() != 3 {
        return Err(Error::InvalidArgument(format!("expected 3 senders, found {}", ch.k())));
    }
    check_order(order, 3)?;
    let stages = stage_channels(stage_povms, 2)?;
    let dists = honest_dists(ch, opts)?;
    let (a, b, c) = (order[0], order[1], order[2]);
    let avg = |s: usize| (s, Frozen::Dist(dists[s].clone()));
    let cond = |s: usize| (s, dists[s].clone());

    let r_a = pick_min(
        a,
        vec![
            (b, maxmin_rate(ch, a, b, &[avg(c)], None, cfg)?),
            (c, maxmin_rate(ch, a, c, &[avg(b)], None, cfg)?),
        ],
    );
    let r_b = pick_min(
        b,
        vec![
            (a, maxmin_rate(ch, b, a, &[avg(c)], Some(&stages[0]), cfg)?),
            (c, maxmin_conditional(ch, b, c, &[cond(a)], &[], None, cfg)?),
        ],
    );
    let both = stages[0].then(&stages[1])?;
    let (post_a, post_b) = match opts.post_form {
        PostForm::Derivation => (&both, &both),
        PostForm::Statement => (&stages[0], &stages[1]),
    };
    let r_c = pick_min(
        c,
        vec![
            (a, maxmin_conditional(ch, c, a, &[cond(b)], &[], Some(post_a), cfg)?),
            (b, maxmin_conditional(ch, c, b, &[cond(a)], &[], Some(post_b), cfg)?),
        ],
    );
    Ok(assemble(order, vec![r_a, r_b, r_c], cfg))
}

/// General `k <= 4` region. The target at decode position `i` is guarded
/// against each other sender `j`: earlier honest senders are conditioned
/// on, later ones averaged, and a post-channel applies only when `j` was
/// decoded before the target.
pub fn region_kuser(
    ch: &CqMacChannel,
    order: &[usize],
    stage_povms: &[Povm],
    opts: &RegionOptions,
    cfg: &OptimizerConfig,
) -> Result<RateRegion> {
    let k = ch.k();
    if k > MAX_K {
        return Err(Error::KTooLarge { k, max: MAX_K });
    }
    if k < 2 {
        return Err(Error::InvalidArgument("a region needs at least 2 senders".into()));
    }
    check_order(order, k)?;
    let stages = stage_channels(stage_povms, k - 1)?;
    let dists = honest_dists(ch, opts)?;
    let mut senders = Vec::with_capacity(k);
    for pos in 0..k {
        let target = order[pos];
        let mut results = Vec::with_capacity(k - 1);
        for (pj, &adv) in order.iter().enumerate() {
            if pj == pos {
                continue;
            }
            let conditioned: Vec<(usize, InputDistribution)> =
                order[..pos].iter().filter(|&&s| s != adv).map(|&s| (s, dists[s].clone())).collect();
            let frozen: Vec<(usize, Frozen)> =
                order[pos + 1..].iter().filter(|&&s| s != adv).map(|&s| (s, Frozen::Dist(dists[s].clone()))).collect();
            let post = if pj < pos {
                Some(match opts.post_form {
                    PostForm::Derivation => compose(&stages[..pos])?,
                    PostForm::Statement => stages[pj].clone(),
                })
            } else {
                None
            };
            results.push((adv, maxmin_conditional(ch, target, adv, &conditioned, &frozen, post.as_ref(), cfg)?));
        }
        senders.push(pick_min(target, results));
    }
    Ok(assemble(order, senders, cfg))
}

#[derive(Debug, Clone, Serialize)]
pub enum CorollaryOutcome {
    Region(RateRegion),
    /// `slot` is the honest slot of the view whose hypothesis failed.
    HypothesisFailed { slot: usize, reason: String },
}

/// Two-sender region without any post-channel, valid when slot 0's view is
/// not symmetrizable and slot 1's view is certified not orthogonally
/// symmetrizable.
pub fn corollary_region(ch: &CqMacChannel, cfg: &OptimizerConfig) -> Result<CorollaryOutcome> {
    if ch.k() != 2 {
        return Err(Error::InvalidArgument(format!("expected 2 senders, found {}", ch.k())));
    }
    let view0 = ch.avc_view(0, 1, &[])?;
    if let SymVerdict::Symmetrizable(w) = adversarial::check_symmetrizable(&view0) {
        return Ok(CorollaryOutcome::HypothesisFailed {
            slot: 0,
            reason: format!("view with honest slot 0 is symmetrizable (slack {:e})", w.slack),
        });
    }
    let view1 = ch.avc_view(1, 0, &[])?;
    if adversarial::orthogonal_pair(&view1).is_none() {
        return Ok(CorollaryOutcome::HypothesisFailed {
            slot: 1,
            reason: "view with honest slot 1 is not certified orthogonal".into(),
        });
    }
    let r0 = maxmin_rate(ch, 0, 1, &[], None, cfg)?;
    let r1 = maxmin_rate(ch, 1, 0, &[], None, cfg)?;
    Ok(CorollaryOutcome::Region(assemble(&[0, 1], vec![pick_min(0, vec![(1, r0)]), pick_min(1, vec![(0, r1)])], cfg)))
}
