//! Random circuit ensembles.

use super::{Circuit, EnsembleTag, Gate, GateLabel};
use crate::error::{Error, Result};
use crate::gates::{self, Mat};
use crate::rng::{Rng, Stream};
use crate::sim::clifford::random_clifford;
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Source of two-qubit (or k-qubit) gate unitaries.
#[derive(Clone, Debug)]
pub enum GateFamily {
    Haar,
    Clifford,
    Finite(Vec<(GateLabel, Mat)>),
}

impl GateFamily {
    pub fn draw(&self, arity: usize, rng: &mut Rng) -> (GateLabel, Mat) {
        match self {
            GateFamily::Haar => (GateLabel::HaarSU4, gates::haar_unitary(1 << arity, rng)),
            GateFamily::Clifford => {
                let label = if arity == 1 { GateLabel::Clifford1 } else { GateLabel::Clifford2 };
                (label, random_clifford(arity, rng).dense().expect("small clifford").clone())
            }
            GateFamily::Finite(items) => items[rng.gen_range(0..items.len())].clone(),
        }
    }
}

/// `size` two-qubit Cliffords that are pairwise distinct up to global phase.
pub fn clifford_family(size: usize, seed: u64) -> GateFamily {
    let mut rng = Stream::new(seed).child("clifford-family").rng();
    let mut items: Vec<(GateLabel, Mat)> = Vec::with_capacity(size);
    while items.len() < size {
        let m = random_clifford(2, &mut rng).dense().expect("two-qubit clifford").clone();
        if !items.iter().any(|(_, x)| gates::equal_up_to_phase(x, &m, 1e-9)) {
            items.push((GateLabel::Clifford2, m));
        }
    }
    GateFamily::Finite(items)
}

/// Rounds of Hadamards, intra-block CZ pairings, `Z^p X^{1/2}` gates and
/// inter-block CZ pairings. `depth` counts CZ layers; each CZ layer is preceded
/// by its single-qubit layer, alternating H/intra and ZpXhalf/inter.
pub fn build_experiment_ansatz(n: usize, blocks: usize, depth: usize, seed: u64) -> Result<Circuit> {
    if blocks == 0 || n == 0 || n % blocks != 0 {
        return Err(Error::Config(format!("n={n} is not divisible into {blocks} blocks")));
    }
    if depth == 0 {
        return Err(Error::Config("depth must be at least 1".into()));
    }
    let b = n / blocks;
    let mut rng = Stream::new(seed).child("experiment-ansatz").rng();
    let mut c = Circuit::new(n, EnsembleTag::ExperimentAnsatz, seed);
    for r in 0..depth {
        if r % 2 == 0 {
            c.push_layer((0..n).map(Gate::h).collect());
            c.push_layer(intra_block_pairs(blocks, b, &mut rng));
        } else {
            c.push_layer((0..n).map(|q| Gate::new(GateLabel::ZpXhalf(rng.gen_range(-4..=3)), vec![q])).collect());
            if blocks >= 2 {
                c.push_layer(inter_block_pairs(blocks, b, &mut rng));
            } else {
                c.push_layer(intra_block_pairs(blocks, b, &mut rng));
            }
        }
    }
    Ok(c)
}

fn intra_block_pairs(blocks: usize, b: usize, rng: &mut Rng) -> Vec<Gate> {
    let mut out = Vec::new();
    for blk in 0..blocks {
        let mut qs: Vec<usize> = (blk * b..(blk + 1) * b).collect();
        qs.shuffle(rng);
        for p in qs.chunks_exact(2) {
            out.push(Gate::cz(p[0].min(p[1]), p[0].max(p[1])));
        }
    }
    out
}

fn inter_block_pairs(blocks: usize, b: usize, rng: &mut Rng) -> Vec<Gate> {
    let mut order: Vec<usize> = (0..blocks).collect();
    order.shuffle(rng);
    let mut out = Vec::new();
    for pair in order.chunks_exact(2) {
        let (a, c) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        let mut perm: Vec<usize> = (0..b).collect();
        perm.shuffle(rng);
        for (i, &j) in perm.iter().enumerate() {
            out.push(Gate::cz(a * b + i, c * b + j));
        }
    }
    out
}

/// `C_d` on `n = k^d` qubits with identity placeholder gates. Layer `ℓ`
/// couples qubits whose base-`k` digits agree everywhere except digit `ℓ`.
pub fn build_hypercube_circuit(k: usize, d: usize) -> Result<Circuit> {
    if k < 2 {
        return Err(Error::Config(format!("hypercube locality k={k} must be at least 2")));
    }
    if d == 0 {
        return Err(Error::Config("hypercube depth must be at least 1".into()));
    }
    let n = k.checked_pow(d as u32).filter(|&n| n <= 1 << 20).ok_or_else(|| {
        Error::Resource(format!("k^d = {k}^{d} exceeds the graph budget"))
    })?;
    let mut c = Circuit::new(n, EnsembleTag::Hypercube, 0);
    for digit in 0..d {
        append_digit_layer(&mut c, k, digit);
    }
    Ok(c)
}

/// Append one full hypercube layer varying `digit`.
pub fn append_digit_layer(c: &mut Circuit, k: usize, digit: usize) {
    let stride = k.pow(digit as u32);
    let mut layer = Vec::new();
    for q in 0..c.n {
        if (q / stride) % k == 0 {
            let support: Vec<usize> = (0..k).map(|j| q + j * stride).collect();
            layer.push(Gate::new(GateLabel::Identity, support));
        }
    }
    c.push_layer(layer);
}

/// Replace every multi-qubit gate's unitary with a draw from `family`.
pub fn instantiate(c: &Circuit, family: &GateFamily, seed: u64) -> Circuit {
    let mut rng = Stream::new(seed).child("instantiate").rng();
    let mut out = c.clone();
    for g in out.layers.iter_mut().flatten() {
        if g.arity() >= 2 {
            let (label, m) = family.draw(g.arity(), &mut rng);
            g.label = label;
            g.unitary = m;
        }
    }
    out
}

/// Nearest-neighbour brickwork on a line.
pub fn brickwork(n: usize, depth: usize, family: &GateFamily, seed: u64) -> Circuit {
    let mut rng = Stream::new(seed).child("brickwork").rng();
    let mut c = Circuit::new(n, EnsembleTag::Brickwork, seed);
    for l in 0..depth {
        let layer = (l % 2..n.saturating_sub(1))
            .step_by(2)
            .map(|a| {
                let (label, m) = family.draw(2, &mut rng);
                Gate::with_matrix(label, vec![a, a + 1], m)
            })
            .collect();
        c.push_layer(layer);
    }
    c
}

/// Random perfect matchings with uniformly random two-qubit Cliffords.
pub fn all_to_all_clifford(n: usize, depth: usize, seed: u64) -> Circuit {
    let mut rng = Stream::new(seed).child("all-to-all").rng();
    let mut c = Circuit::new(n, EnsembleTag::AllToAllClifford, seed);
    for _ in 0..depth {
        let mut qs: Vec<usize> = (0..n).collect();
        qs.shuffle(&mut rng);
        let layer = qs
            .chunks_exact(2)
            .map(|p| {
                let m = random_clifford(2, &mut rng).dense().expect("two-qubit clifford").clone();
                Gate::with_matrix(GateLabel::Clifford2, vec![p[0], p[1]], m)
            })
            .collect();
        c.push_layer(layer);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{causal_sets, serialize};

    #[test]
    fn ansatz_shape_and_blocks() {
        let c = build_experiment_ansatz(8, 2, 2, 1).unwrap();
        assert_eq!(c.depth(), 4);
        assert_eq!(c.two_qubit_depth(), 2);
        for g in &c.layers[1] {
            assert_eq!(g.support[0] / 4, g.support[1] / 4, "intra-block");
        }
        for g in &c.layers[3] {
            assert_ne!(g.support[0] / 4, g.support[1] / 4, "inter-block");
        }
        c.validate().unwrap();
    }

    #[test]
    fn ansatz_experiment_shape() {
        let c = build_experiment_ansatz(32, 4, 5, 11).unwrap();
        assert_eq!(c.two_qubit_depth(), 5);
        assert_eq!(c.two_qubit_count(), 80);
    }

    #[test]
    fn ansatz_is_deterministic_and_validates_config() {
        let a = build_experiment_ansatz(8, 2, 3, 5).unwrap();
        let b = build_experiment_ansatz(8, 2, 3, 5).unwrap();
        assert_eq!(serialize(&a), serialize(&b));
        assert!(build_experiment_ansatz(9, 2, 3, 5).is_err());
        assert!(build_experiment_ansatz(8, 2, 0, 5).is_err());
    }

    #[test]
    fn hypercube_shapes() {
        let c = build_hypercube_circuit(2, 3).unwrap();
        assert_eq!(c.n, 8);
        assert!(c.layers.iter().all(|l| l.len() == 4 && l.iter().all(|g| g.arity() == 2)));
        let c = build_hypercube_circuit(2, 1).unwrap();
        assert_eq!(c.gate_count(), 1);
        let cs = causal_sets(&c);
        assert_eq!(cs.forward[0].last().unwrap().len(), 2);
        assert!(build_hypercube_circuit(1, 3).is_err());
    }

    #[test]
    fn family_is_distinct() {
        if let GateFamily::Finite(items) = clifford_family(24, 2) {
            assert_eq!(items.len(), 24);
        } else {
            unreachable!()
        }
    }
}
