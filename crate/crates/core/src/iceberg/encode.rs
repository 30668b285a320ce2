//! Encoders. All act on the local layout; FT encoders add one flag ancilla
//! at local index `k + 2` that must read `|0⟩`.

use crate::circuit::{Circuit, EnsembleTag, Gate};
use crate::error::{Error, Result};

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::Config("encoders need k ≥ 1".into()));
    }
    if k % 2 != 0 {
        return Err(Error::Config(format!("the Iceberg code needs even k, got {k}")));
    }
    Ok(())
}

/// Gates of the arbitrary-state encoder with the given top and bottom;
/// data qubits are every other qubit in `0..k+2`.
pub(crate) fn arbitrary_gates(k: usize, top: usize, bottom: usize) -> Vec<Gate> {
    let data: Vec<usize> = (0..k + 2).filter(|&q| q != top && q != bottom).collect();
    let mut g = vec![Gate::h(bottom)];
    g.extend(data.iter().map(|&i| Gate::cnot(i, top)));
    g.extend(data.iter().map(|&i| Gate::cnot(bottom, i)));
    g.push(Gate::cnot(bottom, top));
    g
}

/// `|ψ⟩ ⊗ |0⟩_t|0⟩_b` into the code space with `2k + 1` CNOTs.
pub fn encoder_arbitrary(k: usize) -> Result<Circuit> {
    check_k(k)?;
    let mut c = Circuit::new(k + 2, EnsembleTag::Custom, 0);
    for g in arbitrary_gates(k, 0, k + 1) {
        c.push_asap(g);
    }
    Ok(c)
}

/// CNOT layers building a Z-basis GHZ state on `qubits` from the middle out.
fn ghz_layers(qubits: &[usize]) -> (usize, Vec<Vec<Gate>>) {
    let n = qubits.len();
    let r = n / 2 - 1;
    let mut layers = vec![vec![Gate::cnot(qubits[r], qubits[r + 1])]];
    let (mut lo, mut hi) = (r, r + 1);
    while lo > 0 || hi + 1 < n {
        let mut layer = Vec::new();
        if lo > 0 {
            layer.push(Gate::cnot(qubits[lo], qubits[lo - 1]));
            lo -= 1;
        }
        if hi + 1 < n {
            layer.push(Gate::cnot(qubits[hi], qubits[hi + 1]));
            hi += 1;
        }
        layers.push(layer);
    }
    (qubits[r], layers)
}

/// Fault-tolerant `|+_L⟩^{⊗k}`: a GHZ state over all `k + 2` qubits, a flag
/// parity check of its two ends, then Hadamards. `k + 3` CNOTs, two-qubit
/// depth `⌈k/2⌉ + 3`.
pub fn encoder_ft_plus(k: usize) -> Result<Circuit> {
    check_k(k)?;
    let n = k + 2;
    let anc = n;
    let line: Vec<usize> = (0..n).collect();
    let (root, layers) = ghz_layers(&line);
    let mut c = Circuit::new(n + 1, EnsembleTag::Custom, 0);
    c.push_layer(vec![Gate::h(root)]);
    for l in layers {
        c.push_layer(l);
    }
    c.push_layer(vec![Gate::cnot(0, anc)]);
    c.push_layer(vec![Gate::cnot(n - 1, anc)]);
    c.push_layer((0..n).map(Gate::h).collect());
    Ok(c)
}

/// Fault-tolerant initializer for the gauge-fixed code with parent logical
/// `k − 2` fixed to `|+_L⟩` and `k − 1` to `|0_L⟩`, every other logical in
/// `|+_L⟩`. A GHZ state on the top and first `k − 1` data qubits, a Bell pair
/// on the last data qubit and the bottom, then flag checks of both.
/// `k + 4` CNOTs, two-qubit depth `⌈k/2⌉ + 4`.
pub fn encoder_ft_gauge(k: usize) -> Result<Circuit> {
    check_k(k)?;
    let n = k + 2;
    let anc = n;
    let line: Vec<usize> = (0..k).collect();
    let mut c = Circuit::new(n + 1, EnsembleTag::Custom, 0);
    let (gz, b) = (k, k + 1);
    let (root, mut layers) = ghz_layers(&line);
    c.push_layer(vec![Gate::h(root), Gate::h(gz)]);
    layers[0].push(Gate::cnot(gz, b));
    for l in layers {
        c.push_layer(l);
    }
    for q in [0, k - 1, gz, b] {
        c.push_layer(vec![Gate::cnot(q, anc)]);
    }
    c.push_layer(line.iter().map(|&q| Gate::h(q)).collect());
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iceberg::{Frame, GaugeFix, IcebergBlock, Pauli};
    use crate::sim::StateVector;

    pub(crate) fn expectation(s: &StateVector, p: &Pauli) -> f64 {
        let mut t = s.clone();
        for &(q, c) in p {
            t.apply_pauli(q, c);
        }
        s.inner(&t).re
    }

    fn ancilla_zero_prob(s: &StateVector, anc: usize) -> f64 {
        s.amplitudes().iter().enumerate().filter(|(x, _)| x >> anc & 1 == 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    #[test]
    fn caption_counts() {
        for k in [2, 4, 6, 8] {
            let a = encoder_arbitrary(k).unwrap();
            assert_eq!(a.two_qubit_count(), 2 * k + 1);
            let p = encoder_ft_plus(k).unwrap();
            assert_eq!(p.two_qubit_count(), k + 3);
            assert_eq!(p.two_qubit_depth(), k.div_ceil(2) + 3);
            let g = encoder_ft_gauge(k).unwrap();
            assert_eq!(g.two_qubit_count(), k + 4);
            assert_eq!(g.two_qubit_depth(), k.div_ceil(2) + 4);
            for c in [a, p, g] {
                c.validate().unwrap();
            }
        }
        assert_eq!(encoder_arbitrary(4).unwrap().two_qubit_count(), 9);
        assert_eq!(encoder_ft_plus(4).unwrap().two_qubit_count(), 7);
        assert_eq!(encoder_ft_plus(4).unwrap().two_qubit_depth(), 5);
        assert_eq!(encoder_ft_gauge(4).unwrap().two_qubit_count(), 8);
        assert_eq!(encoder_ft_gauge(4).unwrap().two_qubit_depth(), 6);
        assert!(encoder_arbitrary(0).is_err());
        assert!(encoder_ft_plus(0).is_err());
    }

    #[test]
    fn arbitrary_encoder_lands_in_the_code_space() {
        let mut rng = crate::rng::Stream::new(1).rng();
        for k in [2, 4, 6] {
            let b = IcebergBlock::plain(k).unwrap();
            let psi = StateVector::random(k, &mut rng).unwrap();
            // Data on local 1..=k, top and bottom in |0⟩.
            let mut amps = vec![crate::gates::ZERO; 1 << (k + 2)];
            for (x, a) in psi.amplitudes().iter().enumerate() {
                amps[x << 1] = *a;
            }
            let shifted = StateVector::from_amplitudes(k + 2, amps).unwrap();
            let out = crate::sim::apply(&encoder_arbitrary(k).unwrap(), &shifted).unwrap();
            for s in b.stabilizers(Frame::default()) {
                assert!((expectation(&out, &s) - 1.0).abs() < 1e-12);
            }
            // Logical Paulis act as the data Paulis did.
            for i in 0..k {
                let xl = vec![(0, 'X'), (1 + i, 'X')];
                assert!((expectation(&out, &xl) - expectation(&shifted, &vec![(1 + i, 'X')])).abs() < 1e-12);
                let zl = vec![(k + 1, 'Z'), (1 + i, 'Z')];
                assert!((expectation(&out, &zl) - expectation(&shifted, &vec![(1 + i, 'Z')])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ft_encoders_prepare_their_targets() {
        for k in [2, 4, 6] {
            let s = crate::sim::simulate(&encoder_ft_plus(k).unwrap()).unwrap();
            assert!((ancilla_zero_prob(&s, k + 2) - 1.0).abs() < 1e-12);
            let b = IcebergBlock::plain(k).unwrap();
            for st in b.stabilizers(Frame::default()) {
                assert!((expectation(&s, &st) - 1.0).abs() < 1e-12);
            }
            for i in 0..k {
                assert!((expectation(&s, &vec![(0, 'X'), (1 + i, 'X')]) - 1.0).abs() < 1e-12);
            }
            if k < 4 {
                continue;
            }
            let g = crate::sim::simulate(&encoder_ft_gauge(k).unwrap()).unwrap();
            let gb = IcebergBlock::new(k - 2, vec![(k - 2, GaugeFix::Xplus), (k - 1, GaugeFix::Zzero)]).unwrap();
            assert!((ancilla_zero_prob(&g, k + 2) - 1.0).abs() < 1e-12);
            for st in gb.stabilizers(Frame::default()) {
                assert!((expectation(&g, &st) - 1.0).abs() < 1e-12);
            }
            for i in 0..k - 2 {
                assert!((expectation(&g, &vec![(0, 'X'), (1 + i, 'X')]) - 1.0).abs() < 1e-12);
            }
        }
    }

    /// Every single two-qubit Pauli fault after any encoder CNOT is either
    /// flagged, caught by the final stabilizers, or harmless.
    #[test]
    fn ft_encoders_tolerate_single_faults() {
        let paulis = ['I', 'X', 'Y', 'Z'];
        let k = 4;
        {
            for (enc, block) in [
                (encoder_ft_plus(2).unwrap(), IcebergBlock::plain(2).unwrap()),
                (encoder_ft_plus(k).unwrap(), IcebergBlock::plain(k).unwrap()),
                (
                    encoder_ft_gauge(k).unwrap(),
                    IcebergBlock::new(k - 2, vec![(k - 2, GaugeFix::Xplus), (k - 1, GaugeFix::Zzero)]).unwrap(),
                ),
            ] {
                let ideal = crate::sim::simulate(&enc).unwrap();
                let gates: Vec<&Gate> = enc.gates().collect();
                for (gi, g) in gates.iter().enumerate().filter(|(_, g)| g.arity() == 2) {
                    for pi in 1..16 {
                        let mut s = StateVector::zero(enc.n).unwrap();
                        for h in &gates[..=gi] {
                            s.apply_gate(&h.unitary, &h.support);
                        }
                        s.apply_pauli(g.support[0], paulis[pi & 3]);
                        s.apply_pauli(g.support[1], paulis[pi >> 2]);
                        for h in &gates[gi + 1..] {
                            s.apply_gate(&h.unitary, &h.support);
                        }
                        let mut kept = s.clone();
                        for (x, a) in kept.amplitudes_mut().iter_mut().enumerate() {
                            if x >> block.physical_count() & 1 == 1 {
                                *a = crate::gates::ZERO;
                            }
                        }
                        for st in block.stabilizers(Frame::default()) {
                            let mut t = kept.clone();
                            for &(q, c) in &st {
                                t.apply_pauli(q, c);
                            }
                            for (a, b) in kept.amplitudes_mut().iter_mut().zip(t.amplitudes()) {
                                *a = (*a + *b) * 0.5;
                            }
                        }
                        let acc = kept.norm_sqr();
                        if acc > 1e-12 {
                            let f = ideal.inner(&kept).norm_sqr() / acc;
                            assert!((f - 1.0).abs() < 1e-9, "n={} gate {gi} pauli {pi}: accepted with fidelity {f}", enc.n);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn a_deliberate_x_error_is_flagged() {
        let enc = encoder_ft_plus(4).unwrap();
        let gates: Vec<&Gate> = enc.gates().collect();
        let mut s = StateVector::zero(enc.n).unwrap();
        // X on the root right after the first CNOT spreads down one chain only.
        let first = gates.iter().position(|g| g.arity() == 2).unwrap();
        for (i, h) in gates.iter().enumerate() {
            s.apply_gate(&h.unitary, &h.support);
            if i == first {
                s.apply_pauli(h.support[0], 'X');
            }
        }
        assert!(ancilla_zero_prob(&s, 6) < 1e-12);
    }
}
