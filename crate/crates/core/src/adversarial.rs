//! Symmetrizability checks for arbitrarily varying cq channels.
//!
//! An AVC `W(x, t)` is symmetrizable when some family `tau(.|x)` makes
//! `sum_t tau(t|x) W(x', t) = sum_t tau(t|x') W(x, t)` for every pair of
//! inputs. The check is a linear program minimizing the worst entrywise
//! violation. The orthogonal variant asks for a family under which every
//! pair of cross-symmetrized outputs has positive trace overlap.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::cq_channel::{AvcView, InputDistribution};
use crate::qmatrix::{self, CMatrix};

/// Default feasibility threshold on the optimal LP slack.
pub const EPS_SYM: f64 = 1e-8;
/// A cross overlap at or below this counts as zero.
pub const OVERLAP_ZERO: f64 = 1e-12;
/// A witness needs every pair overlap above this.
pub const OVERLAP_POSITIVE: f64 = 1e-10;

/// Coefficients this small are treated as absent when building LP rows.
const COEFF_EPS: f64 = 1e-15;
/// LP entries at or below this are left out of the polishing projection.
const SUPPORT_FLOOR: f64 = 1e-12;
const POLISH_ROUNDS: usize = 4;
/// Polishing stops once the violation is down to rounding level.
const POLISH_TARGET: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct SymWitness {
    /// `tau[x]` is the distribution `tau(.|x)` over jammer symbols.
    pub tau: Vec<Vec<f64>>,
    /// Max-abs violation of the symmetrization equation under `tau`.
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub enum SymVerdict {
    Symmetrizable(SymWitness),
    NotSymmetrizable { slack: f64 },
}

impl SymVerdict {
    pub fn is_symmetrizable(&self) -> bool {
        matches!(self, SymVerdict::Symmetrizable(_))
    }

    /// Optimal LP slack for either verdict.
    pub fn slack(&self) -> f64 {
        match self {
            SymVerdict::Symmetrizable(w) => w.slack,
            SymVerdict::NotSymmetrizable { slack } => *slack,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum OrthoVerdict {
    Witness { tau: Vec<Vec<f64>>, min_overlap: f64 },
    CertifiedNot { pair: (usize, usize) },
    Unknown { best_min_overlap: f64 },
}

impl OrthoVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            OrthoVerdict::Witness { .. } => "Witness",
            OrthoVerdict::CertifiedNot { .. } => "CertifiedNot",
            OrthoVerdict::Unknown { .. } => "Unknown",
        }
    }
}

/// `check_symmetrizable_with` at [`EPS_SYM`].
pub fn check_symmetrizable(avc: &AvcView) -> SymVerdict {
    check_symmetrizable_with(avc, EPS_SYM)
}

pub fn check_symmetrizable_with(avc: &AvcView, eps_sym: f64) -> SymVerdict {
    let nx = avc.n_inputs();
    let nt = avc.n_states();
    if nx < 2 {
        return SymVerdict::Symmetrizable(SymWitness { tau: vec![vec![1.0 / nt as f64; nt]; nx], slack: 0.0 });
    }
    let rows = symmetry_rows(avc);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Variable> = (0..nx * nt).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let s = lp.add_var(1.0, (0.0, f64::INFINITY));
    for row in &rows {
        let terms = || row.iter().enumerate().filter(|(_, c)| **c != 0.0);
        lp.add_constraint(terms().map(|(i, c)| (vars[i], *c)).chain([(s, -1.0)]).collect::<Vec<_>>(), ComparisonOp::Le, 0.0);
        lp.add_constraint(terms().map(|(i, c)| (vars[i], -*c)).chain([(s, -1.0)]).collect::<Vec<_>>(), ComparisonOp::Le, 0.0);
    }
    for x in 0..nx {
        lp.add_constraint(vars[x * nt..(x + 1) * nt].iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    }
    // the program is feasible (any tau) and bounded below by 0
    let sol = lp
        .solve()
        .ok()
        .and_then(|o| o.into_solution().ok())
        .expect("symmetrization program always has an optimum");
    let flat: Vec<f64> = vars.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
    let mut tau = normalize_rows(&flat, nx, nt);
    let mut slack = symmetrization_violation(avc, &tau);
    for _ in 0..POLISH_ROUNDS {
        if slack <= POLISH_TARGET {
            break;
        }
        let Some(p) = polish(&rows, &tau, nx, nt) else { break };
        let v = symmetrization_violation(avc, &p);
        if v >= slack {
            break;
        }
        tau = p;
        slack = v;
    }
    if slack <= eps_sym {
        SymVerdict::Symmetrizable(SymWitness { tau, slack })
    } else {
        SymVerdict::NotSymmetrizable { slack: sol.objective().max(0.0) }
    }
}

/// One real row per independent entry of `sum_t tau(t|x) W(x',t) - sum_t tau(t|x') W(x,t)`,
/// over pairs `x < x'`, as coefficients on the flattened `tau`.
fn symmetry_rows(avc: &AvcView) -> Vec<Vec<f64>> {
    let (nx, nt, d) = (avc.n_inputs(), avc.n_states(), avc.out_dim());
    let mut rows = Vec::new();
    for x in 0..nx {
        for xp in x + 1..nx {
            for i in 0..d {
                for j in i..d {
                    let parts: &[fn(qmatrix::C64) -> f64] = if i == j { &[|z| z.re] } else { &[|z| z.re, |z| z.im] };
                    for part in parts {
                        let mut row = vec![0.0; nx * nt];
                        for t in 0..nt {
                            row[x * nt + t] += part(avc.state(xp, t).mat()[(i, j)]);
                            row[xp * nt + t] -= part(avc.state(x, t).mat()[(i, j)]);
                        }
                        if row.iter().any(|c| c.abs() > COEFF_EPS) {
                            rows.push(row);
                        }
                    }
                }
            }
        }
    }
    rows
}

fn normalize_rows(flat: &[f64], nx: usize, nt: usize) -> Vec<Vec<f64>> {
    (0..nx)
        .map(|x| {
            let row = &flat[x * nt..(x + 1) * nt];
            let sum: f64 = row.iter().sum();
            row.iter().map(|v| v / sum).collect()
        })
        .collect()
}

/// Least-squares projection of `tau` onto the symmetrization equations and
/// row sums, moving only entries in its support. `None` if the projection
/// leaves the simplex by more than rounding.
fn polish(rows: &[Vec<f64>], tau: &[Vec<f64>], nx: usize, nt: usize) -> Option<Vec<Vec<f64>>> {
    let flat: Vec<f64> = tau.concat();
    let support: Vec<usize> = (0..flat.len()).filter(|&i| flat[i] > SUPPORT_FLOOR).collect();
    let m = rows.len() + nx;
    let a = DMatrix::from_fn(m, support.len(), |r, c| {
        let i = support[c];
        if r < rows.len() {
            rows[r][i]
        } else {
            f64::from(u8::from(i / nt == r - rows.len()))
        }
    });
    let x = DVector::from_iterator(support.len(), support.iter().map(|&i| flat[i]));
    let mut b = DVector::zeros(m);
    b.rows_mut(rows.len(), nx).fill(1.0);
    let residual = &a * &x - b;
    let step = a.svd(true, true).solve(&residual, 1e-13).ok()?;
    let mut out = vec![0.0; flat.len()];
    for (c, &i) in support.iter().enumerate() {
        let v = x[c] - step[c];
        if v < -POLISH_TARGET {
            return None;
        }
        out[i] = v.max(0.0);
    }
    Some(normalize_rows(&out, nx, nt))
}

fn mixed(avc: &AvcView, x: usize, tau: &[f64]) -> CMatrix {
    let mut acc = qmatrix::zeros(avc.out_dim());
    for (t, &w) in tau.iter().enumerate() {
        if w != 0.0 {
            acc += avc.state(x, t).mat().scale(w);
        }
    }
    acc
}

/// Max over pairs and entries of the real/imaginary parts of
/// `sum_t tau(t|x) W(x',t) - sum_t tau(t|x') W(x,t)`.
pub fn symmetrization_violation(avc: &AvcView, tau: &[Vec<f64>]) -> f64 {
    let nx = avc.n_inputs();
    let mut worst = 0.0f64;
    for x in 0..nx {
        for xp in x + 1..nx {
            let diff = mixed(avc, xp, &tau[x]) - mixed(avc, x, &tau[xp]);
            for z in diff.iter() {
                worst = worst.max(z.re.abs()).max(z.im.abs());
            }
        }
    }
    worst
}

/// `tr((sum_t tau(t|x) W(x',t)) (sum_t tau(t|x') W(x,t)))` for every pair `x < x'`.
pub fn pair_overlaps(avc: &AvcView, tau: &[Vec<f64>]) -> Vec<((usize, usize), f64)> {
    let nx = avc.n_inputs();
    let mut out = Vec::new();
    for x in 0..nx {
        for xp in x + 1..nx {
            let a = mixed(avc, xp, &tau[x]);
            let b = mixed(avc, x, &tau[xp]);
            out.push(((x, xp), qmatrix::trace(&(a * b)).re));
        }
    }
    out
}

fn min_overlap(avc: &AvcView, tau: &[Vec<f64>]) -> f64 {
    pair_overlaps(avc, tau).into_iter().map(|(_, v)| v).fold(f64::INFINITY, f64::min)
}

/// First pair `x < x'` whose cross overlaps `tr(W(x',t) W(x,t'))` all vanish.
pub fn orthogonal_pair(avc: &AvcView) -> Option<(usize, usize)> {
    let nx = avc.n_inputs();
    let nt = avc.n_states();
    for x in 0..nx {
        for xp in x + 1..nx {
            let all_zero = (0..nt).all(|t| {
                (0..nt).all(|tp| qmatrix::trace(&(avc.state(xp, t).mat() * avc.state(x, tp).mat())).re <= OVERLAP_ZERO)
            });
            if all_zero {
                return Some((x, xp));
            }
        }
    }
    None
}

fn random_simplex_point(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    if rng.random_bool(0.25) {
        // vertices matter: the overlap is bilinear in the two families
        let mut v = vec![0.0; n];
        v[rng.random_range(0..n)] = 1.0;
        return v;
    }
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Uniform family first, then `budget` random families. Returns the first
/// family whose pair overlaps all exceed [`OVERLAP_POSITIVE`], or the best
/// minimum overlap seen.
pub fn search_orthogonal_witness(
    avc: &AvcView,
    budget: usize,
    rng: &mut impl Rng,
) -> std::result::Result<(Vec<Vec<f64>>, f64), f64> {
    let nx = avc.n_inputs();
    let nt = avc.n_states();
    let uniform = vec![vec![1.0 / nt as f64; nt]; nx];
    let mut best = min_overlap(avc, &uniform);
    if best > OVERLAP_POSITIVE {
        return Ok((uniform, best));
    }
    for _ in 0..budget {
        let tau: Vec<Vec<f64>> = (0..nx).map(|_| random_simplex_point(nt, rng)).collect();
        let m = min_overlap(avc, &tau);
        if m > OVERLAP_POSITIVE {
            return Ok((tau, m));
        }
        best = best.max(m);
    }
    Err(best)
}

pub fn check_orthogonally_symmetrizable(avc: &AvcView, search_budget: usize, rng: &mut impl Rng) -> OrthoVerdict {
    if let Some(pair) = orthogonal_pair(avc) {
        return OrthoVerdict::CertifiedNot { pair };
    }
    match search_orthogonal_witness(avc, search_budget, rng) {
        Ok((tau, min_overlap)) => OrthoVerdict::Witness { tau, min_overlap },
        Err(best_min_overlap) => OrthoVerdict::Unknown { best_min_overlap },
    }
}

/// Wraps a witness family as input distributions.
pub fn tau_distributions(tau: &[Vec<f64>]) -> crate::error::Result<Vec<InputDistribution>> {
    tau.iter().map(|row| InputDistribution::new(row.clone())).collect()
}
