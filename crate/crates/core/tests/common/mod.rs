//! Random instances shared by the integration tests.
#![allow(dead_code)]

use byzmac::qmatrix::{self, CMatrix, C64};
use byzmac::simulator::{AdversaryStrategy, RandomCode, SimSetup};
use byzmac::{AvcView, CqChannel, CqMacChannel, DensityOperator, InputDistribution, Povm, QuantumChannel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Ginibre-distributed state of rank `rank`.
pub fn random_state_rank(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = gaussian(dim, rank, rng);
    let m = &g * g.adjoint();
    let tr = qmatrix::trace(&m).re;
    DensityOperator::new(m.scale(1.0 / tr)).unwrap()
}

pub fn random_state(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let rank = rng.random_range(1..=dim);
    random_state_rank(dim, rank, rng)
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = gaussian(dim, dim, rng);
    (&g + g.adjoint()).scale(0.5)
}

pub fn random_psd(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = gaussian(dim, rng.random_range(1..=dim), rng);
    &g * g.adjoint()
}

pub fn random_distribution(n: usize, rng: &mut impl Rng) -> InputDistribution {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let head: f64 = p[..n - 1].iter().sum();
    p[n - 1] = 1.0 - head;
    InputDistribution::new(p).unwrap()
}

pub fn random_cq_channel(n_inputs: usize, dim: usize, rng: &mut impl Rng) -> CqChannel {
    CqChannel::new((0..n_inputs).map(|_| random_state(dim, rng)).collect()).unwrap()
}

/// Isometry `V` of shape `(rows, cols)` with `V^dagger V = I`.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    let g = gaussian(rows, cols, rng);
    g.qr().q()
}

/// Channel with at least `rank` Kraus operators from a random Stinespring
/// isometry; the rank is raised until the isometry fits.
pub fn random_quantum_channel(dim_in: usize, dim_out: usize, rank: usize, rng: &mut impl Rng) -> QuantumChannel {
    let rank = rank.max(dim_in.div_ceil(dim_out));
    let v = random_isometry(dim_out * rank, dim_in, rng);
    let kraus = (0..rank).map(|r| v.rows(r * dim_out, dim_out).into_owned()).collect();
    QuantumChannel::new(kraus).unwrap()
}

/// POVM `D_m = S^{-1/2} A_m S^{-1/2}` from random PSD `A_m`.
pub fn random_povm(dim: usize, outcomes: usize, rng: &mut impl Rng) -> Povm {
    let parts: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let mut s = qmatrix::zeros(dim);
    for p in &parts {
        s += p;
    }
    let inv = qmatrix::mat_inv_sqrt_support(&s, 1e-12).unwrap();
    let elements = parts.iter().map(|p| qmatrix::hermitian_part(&(&inv * p * &inv))).collect();
    Povm::with_message_labels(elements).unwrap()
}

pub fn random_mac(sizes: &[usize], dim: usize, rng: &mut impl Rng) -> CqMacChannel {
    let n: usize = sizes.iter().product();
    let states: Vec<DensityOperator> = (0..n).map(|_| random_state(dim, rng)).collect();
    let mut it = states.into_iter();
    CqMacChannel::from_fn(sizes.to_vec(), |_| Ok(it.next().unwrap())).unwrap()
}

/// AVC built around a planted family: jammer symbols are split into one
/// nonempty group per input, `tau(.|x)` is a random distribution on group
/// `x`, and `W(x', t) = G(owner(t), x')` for a symmetric state-valued `G`.
/// Then `sum_t tau(t|x) W(x', t) = G(x, x')` is symmetric in `(x, x')`.
pub fn planted_avc(nx: usize, dim: usize, rng: &mut impl Rng) -> (AvcView, Vec<Vec<f64>>) {
    let extra = rng.random_range(0..=nx);
    let nt = nx + extra;
    let mut owner: Vec<usize> = (0..nx).collect();
    owner.extend((0..extra).map(|_| rng.random_range(0..nx)));
    let mut g: Vec<Vec<Option<DensityOperator>>> = vec![vec![None; nx]; nx];
    for a in 0..nx {
        for b in a..nx {
            let s = random_state(dim, rng);
            g[a][b] = Some(s.clone());
            g[b][a] = Some(s);
        }
    }
    let mut tau = vec![vec![0.0; nt]; nx];
    for x in 0..nx {
        let members: Vec<usize> = (0..nt).filter(|&t| owner[t] == x).collect();
        let w = random_distribution(members.len(), rng);
        for (t, p) in members.iter().zip(w.probs()) {
            tau[x][*t] = *p;
        }
    }
    let table = (0..nx)
        .flat_map(|xp| (0..nt).map(move |t| (xp, t)))
        .map(|(xp, t)| g[owner[t]][xp].clone().unwrap())
        .collect();
    (AvcView::new(nx, nt, table).unwrap(), tau)
}

/// Two-letter codes with both permutations of the block, decoded by PGMs.
pub fn permuted_fixture(adversary: Option<(usize, AdversaryStrategy)>) -> SimSetup {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ch = random_mac(&[2, 2], 2, &mut rng);
    let perms = vec![vec![0, 1], vec![1, 0]];
    let codes = vec![
        RandomCode::with_pgm(&ch, 0, vec![vec![0, 1], vec![1, 0], vec![1, 1]], perms.clone()).unwrap(),
        RandomCode::with_pgm(&ch, 1, vec![vec![0, 0], vec![1, 1]], perms).unwrap(),
    ];
    SimSetup::new(&ch, codes, vec![0, 1], adversary).unwrap()
}

/// `(d, rho)` with `0 <= d <= I` in a random eigenbasis and `tr(d rho) >= 0.9`.
pub fn likely_pair(dim: usize, rng: &mut impl Rng) -> (CMatrix, DensityOperator) {
    loop {
        let rho = random_state(dim, rng);
        let u = random_isometry(dim, dim, rng);
        let w: Vec<f64> = (0..dim).map(|_| 1.0 - 0.5 * rng.random::<f64>().powi(3)).collect();
        let d = qmatrix::hermitian_part(&(&u * qmatrix::diag(&w) * u.adjoint()));
        if qmatrix::trace(&(&d * rho.mat())).re >= 0.9 {
            return (d, rho);
        }
    }
}
