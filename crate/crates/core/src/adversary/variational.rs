//! Variational spoofing: SU(4) blocks in the blocked ensemble layout, trained
//! by plain gradient descent against an overlap oracle.

use super::access::OverlapOracle;
use crate::error::{Error, Result};
use crate::gates::{C64, ZERO};
use crate::rng::Stream;
use crate::sim::StateVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

pub const MAX_VARIATIONAL_QUBITS: usize = 12;

/// `15 (n/2) · d_inner · d_outer`.
pub fn parameter_count(n: usize, d_inner: usize, d_outer: usize) -> usize {
    15 * (n / 2) * d_inner * d_outer
}

/// `⌈2^{n+2} / (15 n)⌉`, the depth at which the ansatz is overparameterized.
pub fn depth_bound(n: usize) -> usize {
    let num = 1usize << (n + 2);
    num.div_ceil(15 * n)
}

const PAIRS: [[char; 2]; 15] = [
    ['I', 'X'], ['I', 'Y'], ['I', 'Z'],
    ['X', 'I'], ['X', 'X'], ['X', 'Y'], ['X', 'Z'],
    ['Y', 'I'], ['Y', 'X'], ['Y', 'Y'], ['Y', 'Z'],
    ['Z', 'I'], ['Z', 'X'], ['Z', 'Y'], ['Z', 'Z'],
];

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    /// `exp(−iθ/2 · P_a ⊗ P_b)` with parameter index `k`.
    Rot { a: usize, b: usize, p: [char; 2], k: usize },
    Cz(usize, usize),
}

/// Learner circuit `D(b, d_inner, d_outer)`: each outer round holds `d_inner`
/// intra-block layers of SU(4) blocks (each a product of fifteen Pauli
/// rotations) followed by a fixed transversal CZ layer between blocks.
#[derive(Clone, Debug)]
pub struct Ansatz {
    pub n: usize,
    pub b: usize,
    pub d_inner: usize,
    pub d_outer: usize,
    ops: Vec<Op>,
    params: usize,
}

impl Ansatz {
    pub fn new(n: usize, b: usize, d_inner: usize, d_outer: usize, seed: u64) -> Result<Self> {
        if n > MAX_VARIATIONAL_QUBITS {
            return Err(Error::Resource(format!("variational spoofing is capped at n={MAX_VARIATIONAL_QUBITS}")));
        }
        if b < 2 || b % 2 != 0 || n % b != 0 {
            return Err(Error::Config(format!("block size {b} must be even and divide n={n}")));
        }
        let mut rng = Stream::new(seed).child("ansatz").rng();
        let blocks = n / b;
        let mut ops = Vec::new();
        let mut k = 0;
        for _ in 0..d_outer {
            for _ in 0..d_inner {
                for blk in 0..blocks {
                    let mut qs: Vec<usize> = (blk * b..(blk + 1) * b).collect();
                    qs.shuffle(&mut rng);
                    for pair in qs.chunks_exact(2) {
                        for p in PAIRS {
                            ops.push(Op::Rot { a: pair[0], b: pair[1], p, k });
                            k += 1;
                        }
                    }
                }
            }
            if blocks >= 2 {
                let mut order: Vec<usize> = (0..blocks).collect();
                order.shuffle(&mut rng);
                for pair in order.chunks_exact(2) {
                    let mut perm: Vec<usize> = (0..b).collect();
                    perm.shuffle(&mut rng);
                    for (i, &j) in perm.iter().enumerate() {
                        ops.push(Op::Cz(pair[0] * b + i, pair[1] * b + j));
                    }
                }
            }
        }
        Ok(Ansatz { n, b, d_inner, d_outer, ops, params: k })
    }

    pub fn params(&self) -> usize {
        self.params
    }

    pub fn depth(&self) -> usize {
        self.d_inner * self.d_outer
    }

    pub fn state(&self, theta: &[f64]) -> StateVector {
        let mut s = StateVector::zero(self.n).expect("n within cap");
        for op in &self.ops {
            apply_op(s.amplitudes_mut(), op, theta, false);
        }
        s
    }

    /// Loss `1 − |⟨C|D(θ)⟩|²` and its gradient by reverse-mode sweep.
    fn adjoint(&self, target: &StateVector, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut phi = self.state(theta);
        let a: C64 = target.inner(&phi);
        let mut lam = target.clone();
        let mut grad = vec![0.0; self.params];
        for op in self.ops.iter().rev() {
            if let Op::Rot { a: qa, b: qb, p, k } = *op {
                let pphi = pauli_image(phi.amplitudes(), qa, qb, p);
                let inner: C64 = lam.amplitudes().iter().zip(&pphi).map(|(l, x)| l.conj() * x).sum();
                let da = inner * C64::new(0.0, -0.5);
                grad[k] = -2.0 * (a.conj() * da).re;
            }
            apply_op(phi.amplitudes_mut(), op, theta, true);
            apply_op(lam.amplitudes_mut(), op, theta, true);
        }
        (1.0 - a.norm_sqr(), grad)
    }
}

fn flip_and_phase(x: usize, qa: usize, qb: usize, p: [char; 2]) -> (usize, C64) {
    let mut flip = 0;
    let mut ph = C64::new(1.0, 0.0);
    for (q, c) in [(qa, p[0]), (qb, p[1])] {
        let bit = (x >> q) & 1;
        let sign = if bit == 1 { -1.0 } else { 1.0 };
        match c {
            'X' => flip |= 1 << q,
            'Y' => {
                flip |= 1 << q;
                ph *= C64::new(0.0, sign);
            }
            'Z' => ph *= sign,
            _ => {}
        }
    }
    (flip, ph)
}

fn pauli_image(v: &[C64], qa: usize, qb: usize, p: [char; 2]) -> Vec<C64> {
    let mut out = vec![ZERO; v.len()];
    for (x, amp) in v.iter().enumerate() {
        let (f, ph) = flip_and_phase(x, qa, qb, p);
        out[x ^ f] = ph * amp;
    }
    out
}

fn apply_op(v: &mut [C64], op: &Op, theta: &[f64], inverse: bool) {
    match *op {
        Op::Cz(a, b) => {
            let mask = (1 << a) | (1 << b);
            for (x, amp) in v.iter_mut().enumerate() {
                if x & mask == mask {
                    *amp = -*amp;
                }
            }
        }
        Op::Rot { a, b, p, k } => {
            let t = if inverse { -theta[k] } else { theta[k] };
            let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
            let mis = C64::new(0.0, -s);
            for x in 0..v.len() {
                let (f, ph) = flip_and_phase(x, a, b, p);
                let y = x ^ f;
                if f == 0 {
                    v[x] *= C64::new(c, 0.0) + mis * ph;
                } else if x < y {
                    let (_, phy) = flip_and_phase(y, a, b, p);
                    let (vx, vy) = (v[x], v[y]);
                    v[x] = vx * c + mis * phy * vy;
                    v[y] = vy * c + mis * ph * vx;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gradient {
    /// Reverse-mode sweep against the target; one query per step.
    Adjoint,
    /// Central differences of the exact loss; `2p + 1` queries per step.
    FiniteDifference { h: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub max_steps: usize,
    pub restarts: usize,
    pub step: f64,
    pub threshold: f64,
    pub gradient: Gradient,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { max_steps: 500, restarts: 10, step: 0.05, threshold: 0.1, gradient: Gradient::Adjoint }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainTrace {
    pub restart: usize,
    /// Loss before each update.
    pub losses: Vec<f64>,
    /// Cumulative oracle queries after each step.
    pub queries: Vec<u64>,
    pub success: bool,
}

fn loss_and_grad(oracle: &OverlapOracle, ansatz: &Ansatz, theta: &[f64], g: Gradient) -> (f64, Vec<f64>, u64) {
    match g {
        Gradient::Adjoint => {
            let (l, d) = ansatz.adjoint(oracle.gradient_query(), theta);
            (l, d, 1)
        }
        Gradient::FiniteDifference { h } => {
            let l = oracle.loss(&ansatz.state(theta));
            let mut th = theta.to_vec();
            let d = (0..theta.len())
                .map(|k| {
                    th[k] = theta[k] + h;
                    let up = oracle.loss(&ansatz.state(&th));
                    th[k] = theta[k] - h;
                    let down = oracle.loss(&ansatz.state(&th));
                    th[k] = theta[k];
                    (up - down) / (2.0 * h)
                })
                .collect();
            (l, d, 2 * theta.len() as u64 + 1)
        }
    }
}

/// Gradient descent from `cfg.restarts` uniformly random initial angles.
pub fn train(oracle: &OverlapOracle, ansatz: &Ansatz, cfg: &TrainConfig, stream: Stream) -> Result<Vec<TrainTrace>> {
    if oracle.n() != ansatz.n {
        return Err(Error::Config(format!("ansatz on {} qubits, target on {}", ansatz.n, oracle.n())));
    }
    Ok((0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.split(r as u64).rng();
            let mut theta: Vec<f64> =
                (0..ansatz.params()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            let mut trace = TrainTrace { restart: r, losses: Vec::new(), queries: Vec::new(), success: false };
            let mut used = 0;
            for _ in 0..cfg.max_steps {
                let (l, g, q) = loss_and_grad(oracle, ansatz, &theta, cfg.gradient);
                used += q;
                trace.losses.push(l);
                trace.queries.push(used);
                if l < cfg.threshold {
                    trace.success = true;
                    break;
                }
                for (t, d) in theta.iter_mut().zip(&g) {
                    *t -= cfg.step * d;
                }
            }
            trace
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub depth: usize,
    pub params: usize,
    pub successes: usize,
    pub runs: usize,
    pub mean_queries: f64,
}

impl CurvePoint {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }
}

/// Success rate versus depth (`d_inner = depth`, `d_outer = 1`, one block)
/// against `targets` Haar-random target states.
pub fn success_curve(n: usize, depths: &[usize], targets: usize, cfg: &TrainConfig, seed: u64) -> Result<Vec<CurvePoint>> {
    let root = Stream::new(seed).child("variational-curve");
    let states = (0..targets)
        .map(|t| StateVector::random(n, &mut root.child("target").split(t as u64).rng()))
        .collect::<Result<Vec<_>>>()?;
    depths
        .iter()
        .map(|&d| {
            let mut point = CurvePoint { depth: d, params: 0, successes: 0, runs: 0, mean_queries: 0.0 };
            let mut queries = 0u64;
            for (t, target) in states.iter().enumerate() {
                let ansatz = Ansatz::new(n, n, d, 1, root.child("ansatz").split(t as u64).seed())?;
                point.params = ansatz.params();
                let oracle = OverlapOracle::new(target.clone());
                let traces = train(&oracle, &ansatz, cfg, root.child("init").split(t as u64))?;
                point.runs += traces.len();
                point.successes += traces.iter().filter(|tr| tr.success).count();
                queries += traces.iter().map(|tr| *tr.queries.last().unwrap_or(&0)).sum::<u64>();
            }
            point.mean_queries = queries as f64 / point.runs.max(1) as f64;
            Ok(point)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;

    #[test]
    fn parameter_count_and_depth_bound() {
        assert_eq!(parameter_count(4, 2, 1), 60);
        assert_eq!(depth_bound(4), 2);
        assert_eq!(depth_bound(6), 3);
        assert_eq!(depth_bound(8), 9);
        let a = Ansatz::new(8, 4, 3, 2, 1).unwrap();
        assert_eq!(a.params(), parameter_count(8, 3, 2));
    }

    #[test]
    fn rotation_kernel_matches_dense_pauli_rotation() {
        let mut rng = Stream::new(5).rng();
        let s = StateVector::random(3, &mut rng).unwrap();
        for p in PAIRS {
            let op = Op::Rot { a: 2, b: 0, p, k: 0 };
            let mut v = s.amplitudes().to_vec();
            apply_op(&mut v, &op, &[0.7], false);
            let mut w = s.clone();
            let label: String = [p[1], p[0]].iter().collect();
            w.apply_gate(&gates::pauli_rotation(&label, 0.7), &[0, 2]);
            let err: f64 = v.iter().zip(w.amplitudes()).map(|(x, y)| (x - y).norm()).sum();
            assert!(err < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let ansatz = Ansatz::new(4, 2, 1, 2, 3).unwrap();
        let target = StateVector::random(4, &mut Stream::new(9).rng()).unwrap();
        let oracle = OverlapOracle::new(target.clone());
        let theta: Vec<f64> = (0..ansatz.params()).map(|k| 0.1 * k as f64).collect();
        let (l1, g1, _) = loss_and_grad(&oracle, &ansatz, &theta, Gradient::Adjoint);
        let (l2, g2, q) = loss_and_grad(&oracle, &ansatz, &theta, Gradient::FiniteDifference { h: 1e-6 });
        assert!((l1 - l2).abs() < 1e-12);
        assert_eq!(q, 2 * ansatz.params() as u64 + 1);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn shallow_training_on_a_reachable_target_succeeds() {
        let ansatz = Ansatz::new(2, 2, 1, 1, 0).unwrap();
        let theta: Vec<f64> = (0..15).map(|k| 0.3 + 0.05 * k as f64).collect();
        let oracle = OverlapOracle::new(ansatz.state(&theta));
        let cfg = TrainConfig { restarts: 4, ..TrainConfig::default() };
        let traces = train(&oracle, &ansatz, &cfg, Stream::new(2)).unwrap();
        assert!(traces.iter().any(|t| t.success));
        assert_eq!(oracle.queries(), traces.iter().map(|t| t.losses.len() as u64).sum::<u64>());
    }
}
