//! Monte-Carlo evaluation under two-qubit depolarizing noise with terminal
//! post-selection on every stabilizer and flag.

use super::{compile::PhysicalProgram, Pauli};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::sim::{simulate, StateVector};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

const PAULIS: [char; 4] = ['I', 'X', 'Y', 'Z'];
/// Memory for cached intermediate states.
const CHECKPOINT_BYTES: usize = 128 << 20;

/// Paulis applied right after gate `after_gate` of the noisy circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct Fault {
    pub after_gate: usize,
    pub paulis: Pauli,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyRun {
    pub shots: usize,
    pub accepted: usize,
    /// Fraction of shots passing every check.
    pub acceptance: f64,
    /// Mean fidelity with the ideal state over accepted shots.
    pub fidelity: f64,
    pub stderr: f64,
    pub two_qubit_gates: usize,
    pub two_qubit_depth: usize,
}

struct Engine<'a> {
    gates: Vec<&'a Gate>,
    ideal: StateVector,
    checks: &'a [Pauli],
    flags: &'a [usize],
    /// `(c, state before gate c)`, sorted by `c`.
    checkpoints: Vec<(usize, StateVector)>,
}

impl<'a> Engine<'a> {
    fn new(circuit: &'a Circuit, checks: &'a [Pauli], flags: &'a [usize], cache: bool) -> Result<Self> {
        let gates: Vec<&Gate> = circuit.gates().collect();
        let ideal = simulate(circuit)?;
        let mut checkpoints = vec![(0, StateVector::zero(circuit.n)?)];
        let locs: Vec<usize> = (0..gates.len()).filter(|&i| gates[i].arity() == 2).collect();
        if cache && !locs.is_empty() {
            let per_state = (16usize << circuit.n).max(1);
            let stride = (locs.len() * per_state).div_ceil(CHECKPOINT_BYTES).max(1);
            let mut s = StateVector::zero(circuit.n)?;
            let mut next = 0;
            for &g in locs.iter().step_by(stride) {
                for h in &gates[next..=g] {
                    s.apply_gate(&h.unitary, &h.support);
                }
                next = g + 1;
                checkpoints.push((next, s.clone()));
            }
        }
        Ok(Engine { gates, ideal, checks, flags, checkpoints })
    }

    fn project(&self, s: &mut StateVector) {
        for &f in self.flags {
            for (x, a) in s.amplitudes_mut().iter_mut().enumerate() {
                if x >> f & 1 == 1 {
                    *a = crate::gates::ZERO;
                }
            }
        }
        for p in self.checks {
            let mut t = s.clone();
            for &(q, c) in p {
                t.apply_pauli(q, c);
            }
            for (a, b) in s.amplitudes_mut().iter_mut().zip(t.amplitudes()) {
                *a = (*a + *b) * 0.5;
            }
        }
    }

    /// Acceptance probability and unnormalized overlap `|⟨ideal|Πφ⟩|²`.
    fn outcome(&self, faults: &[Fault]) -> (f64, f64) {
        let first = faults.iter().map(|f| f.after_gate).min().unwrap_or(usize::MAX);
        let (start, mut s) = match faults.is_empty() {
            true => (self.gates.len(), self.ideal.clone()),
            false => {
                let cp = self.checkpoints.iter().rev().find(|c| c.0 <= first + 1).expect("initial checkpoint");
                (cp.0, cp.1.clone())
            }
        };
        if start > 0 && !faults.is_empty() {
            for f in faults.iter().filter(|f| f.after_gate + 1 == start) {
                f.paulis.iter().for_each(|&(q, c)| s.apply_pauli(q, c));
            }
        }
        for (i, g) in self.gates.iter().enumerate().skip(start) {
            s.apply_gate(&g.unitary, &g.support);
            for f in faults.iter().filter(|f| f.after_gate == i) {
                f.paulis.iter().for_each(|&(q, c)| s.apply_pauli(q, c));
            }
        }
        self.project(&mut s);
        (s.norm_sqr(), self.ideal.inner(&s).norm_sqr())
    }
}

/// Acceptance probability and post-selected fidelity of a program run with
/// the given faults, computed exactly.
pub fn fault_outcome(prog: &PhysicalProgram, faults: &[Fault]) -> Result<(f64, f64)> {
    let c = prog.noisy_circuit();
    let e = Engine::new(&c, &prog.checks, &prog.flags, false)?;
    let (a, f) = e.outcome(faults);
    Ok((a, if a > 0.0 { (f / a).min(1.0) } else { 0.0 }))
}

fn monte_carlo(circuit: &Circuit, checks: &[Pauli], flags: &[usize], p2: f64, shots: usize, stream: Stream) -> Result<NoisyRun> {
    if !(0.0..=1.0).contains(&p2) {
        return Err(Error::Config(format!("two-qubit error rate {p2} outside [0, 1]")));
    }
    if shots == 0 {
        return Err(Error::Config("at least one shot is required".into()));
    }
    let engine = Engine::new(circuit, checks, flags, true)?;
    let locs: Vec<usize> = (0..engine.gates.len()).filter(|&i| engine.gates[i].arity() == 2).collect();
    let draws: Vec<(Vec<(u32, u8)>, f64)> = (0..shots)
        .map(|s| {
            let mut rng = stream.split(s as u64).rng();
            let pattern = locs
                .iter()
                .enumerate()
                .filter_map(|(li, _)| (rng.gen::<f64>() < p2).then(|| (li as u32, rng.gen_range(1u8..16))))
                .collect();
            (pattern, rng.gen::<f64>())
        })
        .collect();
    let mut unique: BTreeMap<&[(u32, u8)], (f64, f64)> = BTreeMap::new();
    for d in &draws {
        unique.entry(d.0.as_slice()).or_insert((1.0, 1.0));
    }
    let keys: Vec<&[(u32, u8)]> = unique.keys().copied().filter(|k| !k.is_empty()).collect();
    let results: Vec<(f64, f64)> = keys
        .par_iter()
        .map(|k| {
            let faults: Vec<Fault> = k
                .iter()
                .map(|&(li, pi)| {
                    let g = engine.gates[locs[li as usize]];
                    let pi = pi as usize;
                    Fault { after_gate: locs[li as usize], paulis: vec![(g.support[0], PAULIS[pi & 3]), (g.support[1], PAULIS[pi >> 2])] }
                })
                .collect();
            engine.outcome(&faults)
        })
        .collect();
    for (k, r) in keys.iter().zip(results) {
        unique.insert(k, r);
    }
    let mut fids = Vec::new();
    for (pattern, u) in &draws {
        let (a, f) = unique[pattern.as_slice()];
        if *u < a {
            fids.push((f / a).min(1.0));
        }
    }
    if fids.is_empty() {
        return Err(Error::InsufficientAcceptance);
    }
    let m = fids.len() as f64;
    let mean = fids.iter().sum::<f64>() / m;
    let var = if fids.len() > 1 { fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    Ok(NoisyRun {
        shots,
        accepted: fids.len(),
        acceptance: m / shots as f64,
        fidelity: mean,
        stderr: (var / m).sqrt(),
        two_qubit_gates: circuit.two_qubit_count(),
        two_qubit_depth: circuit.two_qubit_depth(),
    })
}

/// Encoded run: depolarizing faults after every two-qubit gate of the
/// encoder and body, post-selected on all checks and flags.
pub fn run_noisy(prog: &PhysicalProgram, p2: f64, shots: usize, stream: Stream) -> Result<NoisyRun> {
    monte_carlo(&prog.noisy_circuit(), &prog.checks, &prog.flags, p2, shots, stream)
}

/// The same logical circuit run directly on physical qubits, no detection.
pub fn run_unencoded(logical: &Circuit, p2: f64, shots: usize, stream: Stream) -> Result<NoisyRun> {
    monte_carlo(logical, &[], &[], p2, shots, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_experiment_ansatz;
    use crate::iceberg::{assemble, IcebergBlock};

    #[test]
    fn noiseless_runs_accept_everything() {
        let logical = build_experiment_ansatz(4, 2, 2, 1).unwrap();
        let prog = assemble(&vec![IcebergBlock::plain(2).unwrap(); 2], &logical).unwrap();
        let r = run_noisy(&prog, 0.0, 50, Stream::new(1)).unwrap();
        assert_eq!(r.accepted, 50);
        assert!((r.fidelity - 1.0).abs() < 1e-9);
        assert!(run_noisy(&prog, 1.5, 10, Stream::new(1)).is_err());
    }

    #[test]
    fn certain_detection_means_no_survivors() {
        let logical = build_experiment_ansatz(2, 1, 1, 0).unwrap();
        let prog = assemble(&[IcebergBlock::plain(2).unwrap()], &logical).unwrap();
        let (a, _) = fault_outcome(&prog, &[Fault { after_gate: prog.noisy_circuit().gate_count() - 1, paulis: vec![(1, 'X')] }]).unwrap();
        assert!(a < 1e-12);
    }

    #[test]
    fn every_single_qubit_body_fault_is_detected() {
        for k in [2, 4] {
            for seed in 0..3 {
                let logical = build_experiment_ansatz(k, 1, 3, seed).unwrap();
                let prog = assemble(&[IcebergBlock::plain(k).unwrap()], &logical).unwrap();
                let enc_len = prog.encoder.gate_count();
                let total = prog.noisy_circuit().gate_count();
                for after in enc_len - 1..total {
                    for q in 0..k + 2 {
                        for p in ['X', 'Y', 'Z'] {
                            let (a, _) = fault_outcome(&prog, &[Fault { after_gate: after, paulis: vec![(q, p)] }]).unwrap();
                            assert!(a < 1e-12, "k={k} seed={seed} fault {p}{q} after gate {after}: acceptance {a}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn acceptance_falls_as_noise_grows() {
        let logical = build_experiment_ansatz(4, 2, 2, 3).unwrap();
        let prog = assemble(&vec![IcebergBlock::plain(2).unwrap(); 2], &logical).unwrap();
        let rates: Vec<NoisyRun> = [0.0, 0.01, 0.05, 0.2].iter().map(|&p| run_noisy(&prog, p, 2000, Stream::new(5)).unwrap()).collect();
        for w in rates.windows(2) {
            let se = (w[0].acceptance * (1.0 - w[0].acceptance) / 2000.0).sqrt() + (w[1].acceptance * (1.0 - w[1].acceptance) / 2000.0).sqrt();
            assert!(w[1].acceptance <= w[0].acceptance + 3.0 * se);
        }
        assert!(rates[3].acceptance < rates[1].acceptance);
    }

    #[test]
    fn unencoded_runs_accept_every_shot() {
        let logical = build_experiment_ansatz(4, 2, 2, 3).unwrap();
        let r = run_unencoded(&logical, 0.05, 500, Stream::new(2)).unwrap();
        assert_eq!(r.accepted, 500);
        assert!(r.fidelity < 1.0);
    }
}
