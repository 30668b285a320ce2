//! Single-gate inversion by influence tests on one pivot.
//!
//! The `(inputs → q′)` channel of the current residual is reconstructed once
//! per pivot; each trial gate is then scored with small-matrix algebra.

use super::access::QueryAccess;
use crate::bits::deposit;
use crate::circuit::{Circuit, Gate, GateLabel, PivotCandidate, PivotReport, Side};
use crate::error::Result;
use crate::gates::{self, Mat, C64, ONE, ZERO};
use crate::rng::Stream;
use crate::sim::StateVector;
use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Matrix2, Matrix4};
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use std::collections::{HashSet, VecDeque};
use std::sync::OnceLock;

pub type M2 = Matrix2<C64>;
pub type M4 = Matrix4<C64>;

pub const DEFAULT_EPS_F: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tomography {
    /// Reduced states by exact partial trace.
    Exact,
    /// Each Pauli expectation of `q′` from `⌈1/ε_t²⌉` simulated shots.
    Sampled { eps_t: f64, seed: u64 },
}

impl Tomography {
    fn shots(self) -> Option<u64> {
        match self {
            Tomography::Exact => None,
            Tomography::Sampled { eps_t, .. } => Some((1.0 / (eps_t * eps_t)).ceil() as u64),
        }
    }

    /// Acceptance threshold: `1e-6` when exact, three standard errors of the
    /// Frobenius distance between two sampled one-qubit states otherwise.
    pub fn default_eps_f(self) -> f64 {
        match self {
            Tomography::Exact => DEFAULT_EPS_F,
            Tomography::Sampled { eps_t, .. } => 3.0 * 3f64.sqrt() * eps_t,
        }
    }
}

#[derive(Clone, Debug)]
pub enum TrialSet {
    /// Explicit 4×4 candidates on the gate's support order, tried in order.
    Finite(Vec<Mat>),
    /// Best `starts` two-qubit Cliffords by influence, each refined by
    /// Nelder–Mead on the 15-parameter chart `T₀·exp(i Σ θ_k P_k)`.
    Continuous { starts: usize, max_iters: u64 },
}

/// Trial sets for front and back pivots.
#[derive(Clone, Debug)]
pub struct Trials {
    pub front: TrialSet,
    pub back: TrialSet,
}

impl Trials {
    pub fn same(set: TrialSet) -> Self {
        Trials { front: set.clone(), back: set }
    }

    /// A finite family closed under the local Cliffords left over by earlier
    /// inversions: `F·(l₁⊗l₂)` for front pivots and `(l₁⊗l₂)·F` for back ones.
    pub fn family_with_locals(family: &[Mat]) -> Self {
        let ones = clifford_group(1);
        let locals: Vec<Mat> = ones.iter().flat_map(|b| ones.iter().map(move |a| gates::kron(b, a))).collect();
        let front = locals.iter().flat_map(|l| family.iter().map(move |f| f * l)).collect();
        let back = locals.iter().flat_map(|l| family.iter().map(move |f| l * f)).collect();
        Trials { front: TrialSet::Finite(front), back: TrialSet::Finite(back) }
    }

    /// All 11,520 two-qubit Cliffords on both sides.
    pub fn clifford() -> Self {
        Trials::same(TrialSet::Finite(clifford_group(2).to_vec()))
    }

    pub fn continuous() -> Self {
        Trials::same(TrialSet::Continuous { starts: 4, max_iters: 4000 })
    }
}

/// One influence test: input `varied` is flipped between `±σ` while `probe`
/// holds `(I+σ₂)/2`, and the joint state of outputs `targets` is compared.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub varied: usize,
    pub probe: usize,
    pub targets: Vec<usize>,
}

/// A pivot gate on `support` with its influence tests. Trials act on `support`
/// before the circuit (front) or after it (back).
#[derive(Clone, Debug, PartialEq)]
pub struct Pivot {
    pub side: Side,
    pub support: [usize; 2],
    pub probes: Vec<Probe>,
}

fn probe_partner(side: Side, support: [usize; 2], q: usize, qp: usize, n: usize) -> usize {
    match side {
        Side::Front => support.iter().copied().find(|&x| x != q),
        Side::Back => support.iter().copied().chain([qp]).chain(0..n).find(|&x| x != q),
    }
    .expect("at least two wires")
}

impl Pivot {
    pub fn from_report(c: &Circuit, r: &PivotReport) -> Option<Pivot> {
        let (g, (q, qp)) = (r.gate?, r.pivot_pair?);
        let sup = &c.layers[g.layer][g.index].support;
        if sup.len() != 2 {
            return None;
        }
        Some(Pivot::new(r.side, [sup[0], sup[1]], q, qp, c.n))
    }

    /// Single test between input `q` and output `qp`.
    pub fn new(side: Side, support: [usize; 2], q: usize, qp: usize, n: usize) -> Pivot {
        let probe = probe_partner(side, support, q, qp, n);
        Pivot { side, support, probes: vec![Probe { varied: q, probe, targets: vec![qp] }] }
    }

    /// Every test offered by the candidates of one gate. Front cuts are
    /// output sets measured jointly; back cuts are inputs varied one by one
    /// against every other input as the probe.
    pub fn from_candidates(side: Side, support: [usize; 2], cands: &[PivotCandidate], n: usize) -> Pivot {
        let mut probes = Vec::new();
        for c in cands {
            let cut: Vec<usize> = c.cut.iter().collect();
            match side {
                Side::Front => {
                    probes.push(Probe { varied: c.anchor, probe: c.partner, targets: cut });
                }
                Side::Back => {
                    for q in cut {
                        probes.extend((0..n).filter(|&p| p != q).map(|probe| Probe { varied: q, probe, targets: vec![c.anchor] }));
                    }
                }
            }
        }
        Pivot { side, support, probes }
    }
}

/// The secret oracle with learned inverses attached on either side.
pub struct Residual<'a, A: QueryAccess> {
    oracle: &'a A,
    before: Vec<Gate>,
    after: Vec<Gate>,
}

impl<A: QueryAccess> Clone for Residual<'_, A> {
    fn clone(&self) -> Self {
        Residual { oracle: self.oracle, before: self.before.clone(), after: self.after.clone() }
    }
}

impl<'a, A: QueryAccess> Residual<'a, A> {
    pub fn new(oracle: &'a A) -> Self {
        Residual { oracle, before: Vec::new(), after: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.oracle.n()
    }

    pub fn query(&self, input: &StateVector) -> Result<StateVector> {
        self.oracle.query(&self.before, &self.after, input)
    }

    /// Attach `t†` on the input side (front) or output side (back).
    pub fn attach_inverse(&mut self, side: Side, support: [usize; 2], t: &Mat) {
        let g = Gate::with_matrix(GateLabel::Custom, support.to_vec(), t.adjoint());
        match side {
            Side::Front => self.before.insert(0, g),
            Side::Back => self.after.push(g),
        }
    }
}

const SIGMAS: [char; 3] = ['X', 'Y', 'Z'];
const PROBES: [char; 4] = ['I', 'X', 'Y', 'Z'];

fn pauli2(p: char) -> M2 {
    let m = gates::pauli(p);
    M2::from_fn(|r, c| m[(r, c)])
}

/// `(I + s·σ)/2`, or `I/2` for `σ = I`.
fn bloch(sigma: char, plus: bool) -> M2 {
    if sigma == 'I' {
        return M2::identity() * C64::new(0.5, 0.0);
    }
    let s = if plus { 1.0 } else { -1.0 };
    (M2::identity() + pauli2(sigma) * C64::new(s, 0.0)) * C64::new(0.5, 0.0)
}

fn eigvec(sigma: char, plus: bool) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if plus { 1.0 } else { -1.0 };
    match sigma {
        'X' => [C64::new(h, 0.0), C64::new(s * h, 0.0)],
        'Y' => [C64::new(h, 0.0), C64::new(0.0, s * h)],
        _ if plus => [ONE, ZERO],
        _ => [ZERO, ONE],
    }
}

/// `a ⊗ b` with `a` on local bit 1.
fn kron2(hi: &M2, lo: &M2) -> M4 {
    M4::from_fn(|r, c| hi[(r >> 1, c >> 1)] * lo[(r & 1, c & 1)])
}

pub fn to_m4(m: &Mat) -> M4 {
    M4::from_fn(|r, c| m[(r, c)])
}

/// `Tr_{¬S}(|u⟩⟨v|)` with local bit `j` of the result on `qubits[j]`.
pub(crate) fn cross_reduced(u: &[C64], v: &[C64], qubits: &[usize]) -> Mat {
    let dim = 1usize << qubits.len();
    let offsets: Vec<usize> = (0..dim).map(|l| deposit(l, qubits)).collect();
    let mask = deposit(dim - 1, qubits);
    let mut m = Mat::zeros(dim, dim);
    for x in (0..u.len()).filter(|x| x & mask == 0) {
        for i in 0..dim {
            let ui = u[x | offsets[i]];
            if ui == ZERO {
                continue;
            }
            for j in 0..dim {
                m[(i, j)] += ui * v[x | offsets[j]].conj();
            }
        }
    }
    m
}

/// Product input with the given one-qubit amplitudes on chosen wires.
fn product_input(n: usize, wires: &[(usize, [C64; 2])]) -> Result<StateVector> {
    let mut amps = vec![ONE];
    for q in 0..n {
        let a = wires.iter().find(|w| w.0 == q).map_or([ONE, ZERO], |w| w.1);
        amps = [a[0], a[1]].iter().flat_map(|&x| amps.iter().map(move |y| x * y)).collect();
    }
    StateVector::from_amplitudes(n, amps)
}

const JOINT_MAX: usize = 4;

/// A linear map from 4×4 operators on the support to operators on the
/// targets, with the twelve setting pairs it is evaluated on.
struct Test {
    phi: Vec<Mat>,
    settings: Vec<(M4, M4)>,
}

/// Reconstructed channels for every test of one pivot.
pub struct PivotChannel {
    side: Side,
    tests: Vec<Test>,
}

fn setting_pairs(mut f: impl FnMut(char, char, bool) -> Result<M4>) -> Result<Vec<(M4, M4)>> {
    let mut out = Vec::with_capacity(12);
    for s in SIGMAS {
        for s2 in PROBES {
            out.push((f(s, s2, true)?, f(s, s2, false)?));
        }
    }
    Ok(out)
}

impl PivotChannel {
    pub fn build<A: QueryAccess>(res: &Residual<'_, A>, p: &Pivot, tomo: Tomography) -> Result<PivotChannel> {
        let n = res.n();
        let mut tests = Vec::new();
        match p.side {
            Side::Front => {
                let outs = (0..4)
                    .map(|a| {
                        let bits = [(p.support[0], a & 1), (p.support[1], a >> 1)];
                        let wires: Vec<(usize, [C64; 2])> =
                            bits.iter().map(|&(q, b)| (q, if b == 0 { [ONE, ZERO] } else { [ZERO, ONE] })).collect();
                        res.query(&product_input(n, &wires)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for pr in &p.probes {
                    let chunk = if tomo == Tomography::Exact { JOINT_MAX } else { 1 };
                    let varied_high = p.support[1] == pr.varied;
                    let settings = setting_pairs(|s, s2, plus| {
                        let (v, w) = (bloch(s, plus), bloch(s2, true));
                        Ok(if varied_high { kron2(&v, &w) } else { kron2(&w, &v) })
                    })?;
                    for targets in pr.targets.chunks(chunk) {
                        let phi = (0..16)
                            .map(|ab| cross_reduced(outs[ab / 4].amplitudes(), outs[ab % 4].amplitudes(), targets))
                            .collect();
                        tests.push(Test { phi, settings: settings.clone() });
                    }
                }
            }
            Side::Back => {
                for pr in &p.probes {
                    let tpos = usize::from(p.support[1] == pr.targets[0]);
                    let phi = (0..16)
                        .map(|ab| {
                            let (a, b) = (ab / 4, ab % 4);
                            let mut m = Mat::zeros(2, 2);
                            if (a >> (1 - tpos)) & 1 == (b >> (1 - tpos)) & 1 {
                                m[((a >> tpos) & 1, (b >> tpos) & 1)] = ONE;
                            }
                            m
                        })
                        .collect();
                    let settings = setting_pairs(|s, s2, plus| {
                        let probes: Vec<[C64; 2]> =
                            if s2 == 'I' { vec![[ONE, ZERO], [ZERO, ONE]] } else { vec![eigvec(s2, true)] };
                        let mut acc = M4::zeros();
                        for pv in &probes {
                            let input = product_input(n, &[(pr.varied, eigvec(s, plus)), (pr.probe, *pv)])?;
                            acc += to_m4(&res.query(&input)?.reduced_density(&p.support));
                        }
                        Ok(acc / C64::new(probes.len() as f64, 0.0))
                    })?;
                    tests.push(Test { phi, settings });
                }
            }
        }
        Ok(PivotChannel { side: p.side, tests })
    }

    fn image(test: &Test, rho: &M4, t: &M4) -> Mat {
        let r = t.adjoint() * rho * t;
        let dim = test.phi[0].nrows();
        let mut out = Mat::zeros(dim, dim);
        for ab in 0..16 {
            let w = r[(ab / 4, ab % 4)];
            if w != ZERO {
                out += &test.phi[ab] * w;
            }
        }
        out
    }

    /// Largest influence over all tests and settings, stopping once `stop` is reached.
    pub fn influence(&self, t: &M4, tomo: Tomography, stream: Stream, stop: f64) -> f64 {
        let mut worst = 0.0f64;
        for (i, test) in self.tests.iter().enumerate() {
            for (k, (plus, minus)) in test.settings.iter().enumerate() {
                let (a, b) = (Self::image(test, plus, t), Self::image(test, minus, t));
                let d = match tomo.shots() {
                    None => (a - b).norm(),
                    Some(shots) => {
                        let s = stream.split(i as u64).split(k as u64);
                        (sampled(&a, shots, s.split(0)) - sampled(&b, shots, s.split(1))).norm()
                    }
                };
                worst = worst.max(d);
                if worst >= stop {
                    return worst;
                }
            }
        }
        worst
    }

    /// Sum of squared exact influences, the smooth objective for refinement.
    fn objective(&self, t: &M4) -> f64 {
        self.tests
            .iter()
            .flat_map(|test| test.settings.iter().map(move |(p, m)| (test, p, m)))
            .map(|(test, plus, minus)| (Self::image(test, plus, t) - Self::image(test, minus, t)).norm_squared())
            .sum()
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

fn pauli_strings(k: usize) -> Vec<Mat> {
    (1..4usize.pow(k as u32))
        .map(|mut idx| {
            let s: String = (0..k)
                .map(|_| {
                    let c = PROBES[idx % 4];
                    idx /= 4;
                    c
                })
                .collect();
            gates::pauli_string(&s)
        })
        .collect()
}

/// State estimate from `shots` simulated measurements of every Pauli string.
pub(crate) fn sampled(rho: &Mat, shots: u64, stream: Stream) -> Mat {
    let dim = rho.nrows();
    let k = dim.trailing_zeros() as usize;
    let mut rng = stream.rng();
    let mut out = gates::identity(dim);
    for p in pauli_strings(k) {
        let r = (&p * rho).trace().re.clamp(-1.0, 1.0);
        let hits = Binomial::new(shots, (1.0 + r) / 2.0).expect("valid probability").sample(&mut rng);
        out += p * C64::new(2.0 * hits as f64 / shots as f64 - 1.0, 0.0);
    }
    out / C64::new(dim as f64, 0.0)
}

#[derive(Clone, Copy, Debug)]
pub struct InvertConfig {
    pub eps_f: f64,
    pub tomography: Tomography,
}

impl InvertConfig {
    pub fn exact() -> Self {
        InvertConfig { eps_f: DEFAULT_EPS_F, tomography: Tomography::Exact }
    }

    pub fn sampled(eps_t: f64, seed: u64) -> Self {
        let tomography = Tomography::Sampled { eps_t, seed };
        InvertConfig { eps_f: tomography.default_eps_f(), tomography }
    }

    pub(crate) fn stream(&self) -> Stream {
        match self.tomography {
            Tomography::Exact => Stream::new(0),
            Tomography::Sampled { seed, .. } => Stream::new(seed).child("tomography"),
        }
    }
}

/// First trial whose attachment removes the influence of `q` on `q′` under
/// all twelve settings, or `None` once the trials are exhausted.
pub fn single_invert<A: QueryAccess>(
    res: &Residual<'_, A>,
    pivot: &Pivot,
    trials: &TrialSet,
    cfg: &InvertConfig,
) -> Result<Option<Mat>> {
    let ch = PivotChannel::build(res, pivot, cfg.tomography)?;
    Ok(invert_with_channel(&ch, trials, cfg))
}

pub(crate) fn invert_with_channel(ch: &PivotChannel, trials: &TrialSet, cfg: &InvertConfig) -> Option<Mat> {
    let stream = cfg.stream();
    match trials {
        TrialSet::Finite(list) => list
            .par_iter()
            .enumerate()
            .position_first(|(i, t)| ch.influence(&to_m4(t), cfg.tomography, stream.split(i as u64), cfg.eps_f) < cfg.eps_f)
            .map(|i| list[i].clone()),
        TrialSet::Continuous { starts, max_iters } => refine(ch, *starts, *max_iters, cfg, stream),
    }
}

/// Accepted trials that differ by more than a local product on the outer side, at most `limit`
/// of them, in trial order.
pub(crate) fn accepted_trials(ch: &PivotChannel, trials: &TrialSet, cfg: &InvertConfig, limit: usize) -> Vec<Mat> {
    let stream = cfg.stream();
    match trials {
        TrialSet::Finite(list) => {
            let pass: Vec<usize> = list
                .par_iter()
                .enumerate()
                .filter(|(i, t)| ch.influence(&to_m4(t), cfg.tomography, stream.split(*i as u64), cfg.eps_f) < cfg.eps_f)
                .map(|(i, _)| i)
                .collect();
            let mut out: Vec<Mat> = Vec::new();
            for i in pass {
                let t = &list[i];
                let local = |u: &Mat| {
                    let d = match ch.side() {
                        Side::Front => t * u.adjoint(),
                        Side::Back => u.adjoint() * t,
                    };
                    gates::operator_schmidt_rank(&d, 1e-6) == 1
                };
                if !out.iter().any(local) {
                    out.push(t.clone());
                    if out.len() == limit {
                        break;
                    }
                }
            }
            out
        }
        TrialSet::Continuous { starts, max_iters } => refine(ch, *starts, *max_iters, cfg, stream).into_iter().collect(),
    }
}

fn refine(ch: &PivotChannel, starts: usize, max_iters: u64, cfg: &InvertConfig, stream: Stream) -> Option<Mat> {
    let group = clifford_group(2);
    let mut scored: Vec<(f64, usize)> =
        group.par_iter().enumerate().map(|(i, t)| (ch.objective(&to_m4(t)), i)).collect();
    scored.sort_by(|a, b| a.partial_cmp(b).expect("finite objective"));
    for &(_, i) in scored.iter().take(starts) {
        let t0 = to_m4(&group[i]);
        let problem = Chart { ch, t0 };
        let mut simplex = vec![vec![0.0; 15]];
        for k in 0..15 {
            let mut v = vec![0.0; 15];
            v[k] = 0.3;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex).with_sd_tolerance(1e-30).expect("positive tolerance");
        let Ok(run) = Executor::new(problem, solver).configure(|s| s.max_iters(max_iters)).run() else {
            continue;
        };
        let Some(theta) = run.state().best_param.clone() else {
            continue;
        };
        let t = t0 * su4(&theta);
        if ch.influence(&t, cfg.tomography, stream.split(i as u64), cfg.eps_f) < cfg.eps_f {
            return Some(Mat::from_fn(4, 4, |r, c| t[(r, c)]));
        }
    }
    None
}

struct Chart<'a> {
    ch: &'a PivotChannel,
    t0: M4,
}

impl CostFunction for Chart<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.ch.objective(&(self.t0 * su4(theta))))
    }
}

fn paulis2() -> &'static [M4; 15] {
    static P: OnceLock<[M4; 15]> = OnceLock::new();
    P.get_or_init(|| {
        let names: Vec<String> = PROBES
            .iter()
            .flat_map(|a| PROBES.iter().map(move |b| format!("{a}{b}")))
            .filter(|s| s != "II")
            .collect();
        std::array::from_fn(|k| to_m4(&gates::pauli_string(&names[k])))
    })
}

/// `exp(i Σ θ_k P_k)` over the fifteen non-identity two-qubit Paulis.
pub fn su4(theta: &[f64]) -> M4 {
    let h = paulis2().iter().zip(theta).fold(M4::zeros(), |acc, (p, &t)| acc + p * C64::new(t, 0.0));
    let e = h.symmetric_eigen();
    let d = M4::from_diagonal(&e.eigenvalues.map(|l| C64::new(0.0, l).exp()));
    e.eigenvectors * d * e.eigenvectors.adjoint()
}

fn canonical_key(m: &Mat) -> Vec<(i64, i64)> {
    let lead = m.iter().find(|z| z.norm() > 1e-6).copied().unwrap_or(ONE);
    let ph = lead.conj() / lead.norm();
    m.iter().map(|z| z * ph).map(|z| ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64)).collect()
}

/// The Clifford group on one or two qubits modulo global phase, identity first
/// (24 and 11,520 elements).
pub fn clifford_group(qubits: usize) -> &'static [Mat] {
    static ONE_Q: OnceLock<Vec<Mat>> = OnceLock::new();
    static TWO_Q: OnceLock<Vec<Mat>> = OnceLock::new();
    let gens = |q: usize| -> Vec<Mat> {
        let (h, s) = (gates::hadamard(), gates::phase_s());
        if q == 1 {
            return vec![h, s];
        }
        let id = gates::identity(2);
        vec![gates::kron(&id, &h), gates::kron(&h, &id), gates::kron(&id, &s), gates::kron(&s, &id), gates::cnot()]
    };
    let build = |q: usize| -> Vec<Mat> {
        let gens = gens(q);
        let start = gates::identity(1 << q);
        let mut seen = HashSet::from([canonical_key(&start)]);
        let mut out = vec![start.clone()];
        let mut queue = VecDeque::from([start]);
        while let Some(m) = queue.pop_front() {
            for g in &gens {
                let next = g * &m;
                if seen.insert(canonical_key(&next)) {
                    out.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        out
    };
    match qubits {
        1 => ONE_Q.get_or_init(|| build(1)),
        2 => TWO_Q.get_or_init(|| build(2)),
        _ => panic!("clifford groups are tabulated for one or two qubits"),
    }
}

/// One-qubit unitary `L` (up to phase) from the pure states `L|0⟩` and `L|+⟩`.
pub fn unitary_from_images(rho0: &M2, rho_plus: &M2) -> M2 {
    let top = |rho: &M2| -> [C64; 2] {
        let e = rho.symmetric_eigen();
        let k = if e.eigenvalues[0] >= e.eigenvalues[1] { 0 } else { 1 };
        [e.eigenvectors[(0, k)], e.eigenvectors[(1, k)]]
    };
    let v0 = top(rho0);
    let w = [-v0[1].conj(), v0[0].conj()];
    // ⟨v0|ρ₊|w⟩ = e^{-iφ}/2 for L|1⟩ = e^{iφ} w.
    let c = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| v0[i].conj() * rho_plus[(i, j)] * w[j])
        .sum::<C64>();
    let ph = if c.norm() > 1e-12 { c.conj() / c.norm() } else { ONE };
    let v1 = [w[0] * ph, w[1] * ph];
    M2::new(v0[0], v1[0], v0[1], v1[1])
}
